use clap::{Args, Parser, Subcommand};
use parabolic_julia::geometry::map::CQ;
use parabolic_julia::oracle::compare_pictures;
use parabolic_julia::pixel::{compute_N, dyadic, precision_for_pixel};
use parabolic_julia::render::{
    bench_scaling, load_scene_with, read_pgm, render_grid, repelling_axis_point, write_bench_csv,
    write_image, ImageFormat, LoadOptions, LoadedScene, Pixel, Viewport,
};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pjulia", version, about = "Certified Julia set renderer")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct SceneArgs {
    /// Scene file, or the name of a shipped scene.
    #[arg(long)]
    scene: PathBuf,
    /// Ignore the coarse-picture cache.
    #[arg(long)]
    no_cache: bool,
    /// Rebuild the cache entry.
    #[arg(long)]
    rebuild_cache: bool,
}

impl SceneArgs {
    fn load(&self) -> Result<LoadedScene, String> {
        let opts = LoadOptions {
            cache_dir: None,
            no_cache: self.no_cache,
            rebuild: self.rebuild_cache,
        };
        load_scene_with(&self.scene, &opts).map_err(|e| e.to_string())
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Render an image.
    Render {
        #[command(flatten)]
        scene: SceneArgs,
        /// Pixel level: pitch 2^-n.
        #[arg(long)]
        n: u32,
        /// Center `x,y`, rounded to the pixel grid.
        #[arg(long, default_value = "0,0", value_parser = parse_pair::<f64>)]
        center: (f64, f64),
        /// `W` or `WxH`; default covers [-2,2]^2.
        #[arg(long, value_parser = parse_size)]
        size: Option<(usize, usize)>,
        #[arg(long)]
        out: PathBuf,
        /// pgm or png; default from the file extension.
        #[arg(long)]
        format: Option<ImageFormat>,
        /// Worker threads; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Report precision escalations on stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Load a scene and report its validated data.
    Validate {
        #[command(flatten)]
        scene: SceneArgs,
    },
    /// Time the pixel function along a point family; CSV on stdout.
    Bench {
        #[command(flatten)]
        scene: SceneArgs,
        /// `repelling` (1/2 + 2^-n) or `milnor` (about 2^(-n/3)).
        #[arg(long, default_value = "repelling")]
        family: String,
        #[arg(long, default_value_t = 12)]
        from: u32,
        #[arg(long, default_value_t = 28)]
        to: u32,
        /// Largest n with a naive escape count.
        #[arg(long, default_value_t = 22)]
        naive_max: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Band comparison of two PGM images at level n.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        n: u32,
    },
}

fn parse_pair<T: std::str::FromStr>(s: &str) -> Result<(T, T), String> {
    let (a, b) = s.split_once(',').ok_or("expected `x,y`")?;
    let p = |v: &str| v.trim().parse::<T>().map_err(|_| format!("bad number {v:?}"));
    Ok((p(a)?, p(b)?))
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let p = |v: &str| v.parse::<usize>().map_err(|_| format!("bad size {v:?}"));
    match s.split_once('x') {
        Some((w, h)) => Ok((p(w)?, p(h)?)),
        None => p(s).map(|w| (w, w)),
    }
}

fn format_for(path: &Path, format: Option<ImageFormat>) -> ImageFormat {
    format.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("png") => ImageFormat::Png,
        _ => ImageFormat::Pgm,
    })
}

fn milnor_point(n: u32) -> CQ {
    let num = ((n as f64) * 2.0 / 3.0).exp2().round() as i64;
    dyadic(num.max(1), 0, n)
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.cmd {
        Cmd::Render {
            scene,
            n,
            center,
            size,
            out,
            format,
            workers,
            trace,
        } => {
            let ls = scene.load()?;
            let (w, h) = size.unwrap_or((4usize << n, 4usize << n));
            let vp = Viewport::around(n, center.0, center.1, w, h);
            let mut eng = ls.engine();
            eng.trace |= trace;
            let img = render_grid(&eng, &vp, workers);
            write_image(&img, format_for(&out, format), &out).map_err(|e| e.to_string())?;
            let failed = img.count(Pixel::Failed);
            eprintln!(
                "{}x{} at n={} in {} ms: {} drawn, {} failed",
                w,
                h,
                n,
                img.millis,
                img.count(Pixel::One),
                failed
            );
            Ok(if failed > 0 { ExitCode::from(3) } else { ExitCode::SUCCESS })
        }
        Cmd::Validate { scene } => {
            let ls = scene.load()?;
            let s = &ls.scene;
            println!("scene {} ({})", s.config.name, ls.hash);
            println!("map degree {}", s.map.degree());
            for (i, p) in s.parabolic.iter().enumerate() {
                println!(
                    "parabolic[{i}] at ({}, {}): r = {}, A = 2^{}, C = 2^{}, petal apex {}",
                    p.point_f64.0,
                    p.point_f64.1,
                    p.r,
                    p.germ.a_exp(),
                    p.germ.c_exp(),
                    p.trap.petal.apex
                );
                println!("  repelling directions {:?}", p.repelling);
                println!("  E1 = {}, E2 = {}, A1 = {}, A2 = {}", p.e1, p.e2, p.alpha1, p.alpha2);
            }
            for (i, p) in s.preparabolic.iter().enumerate() {
                println!(
                    "preparabolic[{i}] at ({}, {}) -> parabolic[{}]",
                    p.point_f64.0, p.point_f64.1, p.target
                );
            }
            println!(
                "c0 = {}, K = {}, d_lo = {}, N(10) = {}, precision(10) = {} bits",
                s.c0,
                s.poincare_k,
                s.d_lo,
                compute_N(10, s.c0, s.poincare_k),
                precision_for_pixel(10, &s.precision_factor)
            );
            println!(
                "coarse picture: c_pix = {}, {} of {} cells drawn",
                ls.coarse.c_pix,
                ls.coarse.count(),
                ls.coarse.marked.len()
            );
            println!("all invariants hold");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Bench {
            scene,
            family,
            from,
            to,
            naive_max,
            out,
        } => {
            let ls = scene.load()?;
            let eng = ls.engine();
            let fam: fn(u32) -> CQ = match family.as_str() {
                "repelling" => repelling_axis_point,
                "milnor" => milnor_point,
                other => return Err(format!("unknown family {other}")),
            };
            let ns: Vec<u32> = (from..=to).collect();
            // Warm the coefficient tables.
            let _ = eng.decide(&fam(from), from);
            let rows = bench_scaling(&eng, fam, &ns, naive_max);
            match out {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| e.to_string())?;
                    write_bench_csv(&rows, f).map_err(|e| e.to_string())?;
                }
                None => write_bench_csv(&rows, std::io::stdout().lock()).map_err(|e| e.to_string())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Compare { a, b, n } => {
            let (wa, ha, pa) = read_pgm(&a).map_err(|e| e.to_string())?;
            let (wb, hb, pb) = read_pgm(&b).map_err(|e| e.to_string())?;
            let va = Viewport { n, ci: 0, cj: 0, width: wa, height: ha };
            let vb = Viewport { n, ci: 0, cj: 0, width: wb, height: hb };
            let ma: Vec<bool> = pa.iter().map(|v| *v != 255).collect();
            let mb: Vec<bool> = pb.iter().map(|v| *v != 255).collect();
            let r = compare_pictures(&ma, &va, &mb, &vb, n).map_err(|e| e.to_string())?;
            let mut out = std::io::stdout().lock();
            writeln!(out, "n = {}", r.n).ok();
            writeln!(out, "radius = {}", r.radius).ok();
            writeln!(out, "a_in_b = {} ({} outside)", r.a_in_b, r.a_outside).ok();
            writeln!(out, "b_in_a = {} ({} outside)", r.b_in_a, r.b_outside).ok();
            writeln!(out, "hausdorff = {}", r.hausdorff).ok();
            Ok(if r.holds() { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("pjulia: {e}");
            ExitCode::FAILURE
        }
    }
}
