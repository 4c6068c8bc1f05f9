use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("i/o failure: {0}")]
    IoFailure(#[from] io::Error),
    #[error("png encoding failed: {0}")]
    Png(String),
    #[error("malformed pgm: {0}")]
    Malformed(String),
}

/// Dyadic pixel grid: pixel `(col, row)` is centered at `(i / 2^n, j / 2^n)`
/// with `i = ci - width/2 + col` and `j = cj + height/2 - 1 - row`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Viewport {
    pub n: u32,
    pub ci: i64,
    pub cj: i64,
    pub width: usize,
    pub height: usize,
}

impl Viewport {
    /// The square `[-half, half]^2` at level `n`, `half` a power of two.
    pub fn square(n: u32, half_exp: i32) -> Self {
        let side = 1usize << (n as i32 + half_exp + 1) as u32;
        Viewport {
            n,
            ci: 0,
            cj: 0,
            width: side,
            height: side,
        }
    }

    /// Viewport centered near `(x, y)` with the given pixel counts.
    pub fn around(n: u32, x: f64, y: f64, width: usize, height: usize) -> Self {
        let s = (n as f64).exp2();
        Viewport {
            n,
            ci: (x * s).round() as i64,
            cj: (y * s).round() as i64,
            width,
            height,
        }
    }

    pub fn pitch(&self) -> f64 {
        (-(self.n as f64)).exp2()
    }

    /// Integer grid coordinates of a pixel center.
    pub fn index(&self, col: usize, row: usize) -> (i64, i64) {
        (
            self.ci - (self.width / 2) as i64 + col as i64,
            self.cj + (self.height / 2) as i64 - 1 - row as i64,
        )
    }

    pub fn center_f64(&self, col: usize, row: usize) -> (f64, f64) {
        let (i, j) = self.index(col, row);
        let p = self.pitch();
        (i as f64 * p, j as f64 * p)
    }

    /// Pixel containing the world point, if any.
    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let s = (self.n as f64).exp2();
        let i = (x * s).round() as i64;
        let j = (y * s).round() as i64;
        let col = i - self.ci + (self.width / 2) as i64;
        let row = self.cj + (self.height / 2) as i64 - 1 - j;
        if col < 0 || row < 0 || col as usize >= self.width || row as usize >= self.height {
            None
        } else {
            Some((col as usize, row as usize))
        }
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-pixel value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pixel {
    One,
    Zero,
    Failed,
}

impl Pixel {
    pub fn gray(self) -> u8 {
        match self {
            Pixel::One => 0,
            Pixel::Zero => 255,
            Pixel::Failed => 128,
        }
    }

    pub fn is_drawn(self) -> bool {
        self == Pixel::One
    }
}

/// Rendered raster with its metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderedImage {
    pub viewport: Viewport,
    pub pixels: Vec<Pixel>,
    pub scene_hash: String,
    pub n: u32,
    pub millis: u128,
}

impl RenderedImage {
    pub fn new(viewport: Viewport, pixels: Vec<Pixel>) -> Self {
        assert_eq!(pixels.len(), viewport.len());
        RenderedImage {
            viewport,
            pixels,
            scene_hash: String::new(),
            n: viewport.n,
            millis: 0,
        }
    }

    pub fn get(&self, col: usize, row: usize) -> Pixel {
        self.pixels[row * self.viewport.width + col]
    }

    /// Drawn mask with failed pixels treated as drawn.
    pub fn drawn_mask(&self) -> Vec<bool> {
        self.pixels.iter().map(|p| *p != Pixel::Zero).collect()
    }

    pub fn count(&self, v: Pixel) -> usize {
        self.pixels.iter().filter(|p| **p == v).count()
    }

    pub fn pgm_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.viewport.width, self.viewport.height)
            .into_bytes();
        out.extend(self.pixels.iter().map(|p| p.gray()));
        out
    }

    /// Sidecar mask: 255 where the pixel failed.
    pub fn mask_bytes(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.viewport.width, self.viewport.height)
            .into_bytes();
        out.extend(
            self.pixels
                .iter()
                .map(|p| if *p == Pixel::Failed { 255 } else { 0 }),
        );
        out
    }

    pub fn has_failures(&self) -> bool {
        self.pixels.contains(&Pixel::Failed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl std::str::FromStr for ImageFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "pgm" => Ok(ImageFormat::Pgm),
            "png" => Ok(ImageFormat::Png),
            other => Err(format!("unknown format {other}")),
        }
    }
}

/// Path of the failure mask written next to an image.
pub fn mask_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".mask.pgm");
    s.into()
}

/// Write the raster; a failure mask is written beside it when any pixel
/// failed.
pub fn write_image(image: &RenderedImage, format: ImageFormat, path: &Path) -> Result<(), ImageError> {
    match format {
        ImageFormat::Pgm => {
            File::create(path)?.write_all(&image.pgm_bytes())?;
        }
        ImageFormat::Png => {
            let f = BufWriter::new(File::create(path)?);
            let mut enc =
                png::Encoder::new(f, image.viewport.width as u32, image.viewport.height as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| ImageError::Png(e.to_string()))?;
            let data: Vec<u8> = image.pixels.iter().map(|p| p.gray()).collect();
            w.write_image_data(&data)
                .map_err(|e| ImageError::Png(e.to_string()))?;
        }
    }
    if image.has_failures() {
        File::create(mask_path(path))?.write_all(&image.mask_bytes())?;
    }
    Ok(())
}

/// Read a binary PGM: `(width, height, bytes)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>), ImageError> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    parse_pgm(&buf)
}

pub fn parse_pgm(buf: &[u8]) -> Result<(usize, usize, Vec<u8>), ImageError> {
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < buf.len() && buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < buf.len() && buf[pos] == b'#' {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(ImageError::Malformed("truncated header".into()));
        }
        fields.push(String::from_utf8_lossy(&buf[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(ImageError::Malformed("expected P5 with maxval 255".into()));
    }
    let w: usize = fields[1]
        .parse()
        .map_err(|_| ImageError::Malformed("width".into()))?;
    let h: usize = fields[2]
        .parse()
        .map_err(|_| ImageError::Malformed("height".into()))?;
    let data = buf
        .get(pos..pos + w * h)
        .ok_or_else(|| ImageError::Malformed("short payload".into()))?;
    Ok((w, h, data.to_vec()))
}

/// Rebuild a raster from PGM bytes.
pub fn image_from_pgm(viewport: Viewport, bytes: &[u8]) -> RenderedImage {
    RenderedImage::new(
        viewport,
        bytes
            .iter()
            .map(|b| match b {
                0 => Pixel::One,
                128 => Pixel::Failed,
                _ => Pixel::Zero,
            })
            .collect(),
    )
}
