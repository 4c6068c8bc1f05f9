use crate::geometry::map::CQ;
use crate::oracle::count::naive_escape_count;
use crate::pixel::{dyadic, PixelEngine, Value};
use crate::render::image::{Pixel, RenderedImage, Viewport};
use crate::render::scene_io::scene_hash;
use rayon::prelude::*;
use serde::Serialize;
use std::io::{self, Write};
use std::time::Instant;

/// Pixel value at one grid point, deciding at level `n`.
pub fn render_pixel(engine: &PixelEngine<'_>, vp: &Viewport, col: usize, row: usize, n: u32) -> Pixel {
    let (i, j) = vp.index(col, row);
    match engine.decide_dyadic(i, j, vp.n, n) {
        Ok(d) if d.value == Value::One => Pixel::One,
        Ok(_) => Pixel::Zero,
        Err(_) => Pixel::Failed,
    }
}

/// Render every pixel of the viewport, deciding at level `vp.n` plus the
/// scene's level shift.
pub fn render_grid(engine: &PixelEngine<'_>, vp: &Viewport, workers: usize) -> RenderedImage {
    let n = vp.n + engine.scene.level_shift;
    render_grid_at(engine, vp, n, workers)
}

/// Render with an explicit decision level.
pub fn render_grid_at(engine: &PixelEngine<'_>, vp: &Viewport, n: u32, workers: usize) -> RenderedImage {
    let start = Instant::now();
    let run = || -> Vec<Pixel> {
        (0..vp.height)
            .into_par_iter()
            .flat_map_iter(|row| (0..vp.width).map(move |col| render_pixel(engine, vp, col, row, n)))
            .collect()
    };
    let pixels = if workers == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map(|p| p.install(run))
            .unwrap_or_else(|_| run())
    };
    let mut img = RenderedImage::new(*vp, pixels);
    img.n = vp.n;
    img.scene_hash = scene_hash(engine.scene);
    img.millis = start.elapsed().as_millis();
    img
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: u32,
    pub seconds: f64,
    /// Naive iterations to escape radius 2, when measured.
    pub naive_iterations: Option<u64>,
    pub map_steps: u64,
}

/// Time the pixel function on `family(n)` for each `n`; naive counts are
/// taken for `n <= naive_max`.
pub fn bench_scaling(
    engine: &PixelEngine<'_>,
    family: impl Fn(u32) -> CQ,
    ns: &[u32],
    naive_max: u32,
) -> Vec<BenchRow> {
    ns.iter()
        .map(|&n| {
            let z = family(n);
            let t = Instant::now();
            let d = engine.decide(&z, n);
            let seconds = t.elapsed().as_secs_f64();
            let naive = (n <= naive_max)
                .then(|| naive_escape_count(engine.scene, &z, 2.0, 1u64 << (n + 4)))
                .flatten();
            BenchRow {
                n,
                seconds,
                naive_iterations: naive,
                map_steps: d.map(|d| d.certificate.counts.map_steps).unwrap_or(0),
            }
        })
        .collect()
}

/// `1/2 + 2^-n`: the repelling-axis family of `z^2 + 1/4`.
pub fn repelling_axis_point(n: u32) -> CQ {
    dyadic((1i64 << (n - 1)) + 1, 0, n)
}

pub fn write_bench_csv(rows: &[BenchRow], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "n,seconds,naive_iterations,map_steps")?;
    for r in rows {
        let naive = r.naive_iterations.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{:.6},{},{}", r.n, r.seconds, naive, r.map_steps)?;
    }
    Ok(())
}
