//! Grid rendering, scene loading and image output.

pub mod grid;
pub mod image;
pub mod scene_io;

pub use grid::{
    bench_scaling, render_grid, render_grid_at, render_pixel, repelling_axis_point,
    write_bench_csv, BenchRow,
};
pub use image::{
    image_from_pgm, mask_path, read_pgm, write_image, ImageError, ImageFormat, Pixel,
    RenderedImage, Viewport,
};
pub use scene_io::{
    builtin_scene, default_cache_dir, load_scene, load_scene_str, load_scene_with, scene_hash,
    LoadError, LoadOptions, LoadedScene, BUILTIN_SCENES,
};
