use crate::geometry::coarse::{build_coarse_picture, CoarseError, CoarsePicture};
use crate::geometry::scene::{Scene, SceneError};
use crate::pixel::PixelEngine;
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Scenes shipped with the crate, by name.
pub const BUILTIN_SCENES: &[(&str, &str)] = &[
    ("cauliflower", include_str!("../../scenes/cauliflower.toml")),
    ("milnor4", include_str!("../../scenes/milnor4.toml")),
];

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Coarse(#[from] CoarseError),
    #[error("corrupt cache entry {0}")]
    CacheCorrupt(PathBuf),
}

/// A validated scene with its coarse picture.
pub struct LoadedScene {
    pub scene: Scene,
    pub coarse: CoarsePicture,
    /// Hex SHA-256 of the canonical scene text.
    pub hash: String,
}

impl LoadedScene {
    pub fn engine(&self) -> PixelEngine<'_> {
        PixelEngine::new(&self.scene, &self.coarse)
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// Cache directory; `None` uses [`default_cache_dir`].
    pub cache_dir: Option<PathBuf>,
    /// Skip the cache entirely.
    pub no_cache: bool,
    /// Rebuild the coarse picture and overwrite the cache entry.
    pub rebuild: bool,
}

/// `$PJULIA_CACHE_DIR`, or `pjulia-cache` under the system temp directory.
pub fn default_cache_dir() -> PathBuf {
    match std::env::var_os("PJULIA_CACHE_DIR") {
        Some(d) => PathBuf::from(d),
        None => std::env::temp_dir().join("pjulia-cache"),
    }
}

pub fn scene_hash(scene: &Scene) -> String {
    let mut h = Sha256::new();
    h.update(scene.config.to_toml().as_bytes());
    hex::encode(h.finalize())
}

/// Text of a shipped scene.
pub fn builtin_scene(name: &str) -> Option<&'static str> {
    BUILTIN_SCENES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| *s)
}

/// Load a scene file, or a shipped scene by name when no such file exists.
pub fn load_scene(path: &Path) -> Result<LoadedScene, LoadError> {
    load_scene_with(path, &LoadOptions::default())
}

pub fn load_scene_with(path: &Path, opts: &LoadOptions) -> Result<LoadedScene, LoadError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => match path.to_str().and_then(builtin_scene) {
            Some(t) => t.to_string(),
            None => {
                return Err(LoadError::Io {
                    path: path.to_path_buf(),
                    source: e,
                })
            }
        },
    };
    load_scene_str(&text, opts)
}

pub fn load_scene_str(text: &str, opts: &LoadOptions) -> Result<LoadedScene, LoadError> {
    let scene = Scene::from_toml(text)?;
    let hash = scene_hash(&scene);
    let coarse = if opts.no_cache {
        build_coarse_picture(&scene, scene.c_pix)?
    } else {
        let dir = opts.cache_dir.clone().unwrap_or_else(default_cache_dir);
        cached_coarse(&scene, &hash, &dir, opts.rebuild)?
    };
    Ok(LoadedScene {
        scene,
        coarse,
        hash,
    })
}

fn cached_coarse(scene: &Scene, hash: &str, dir: &Path, rebuild: bool) -> Result<CoarsePicture, LoadError> {
    let file = dir.join(format!("{hash}.coarse"));
    if !rebuild {
        if let Ok(bytes) = fs::read(&file) {
            return match CoarsePicture::from_bytes(&bytes) {
                Ok(p) if p.c_pix == scene.c_pix => Ok(p),
                _ => Err(LoadError::CacheCorrupt(file)),
            };
        }
    }
    let pic = build_coarse_picture(scene, scene.c_pix)?;
    // A cache that cannot be written is not an error.
    if fs::create_dir_all(dir).is_ok() {
        let tmp = dir.join(format!("{hash}.coarse.{}", std::process::id()));
        if fs::write(&tmp, pic.to_bytes()).is_ok() {
            let _ = fs::rename(&tmp, &file);
        }
    }
    Ok(pic)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_parse() {
        for (name, text) in BUILTIN_SCENES {
            let s = Scene::from_toml(text).unwrap();
            assert_eq!(s.config.name, *name);
        }
    }

    #[test]
    fn corrupt_cache_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let text = builtin_scene("cauliflower").unwrap();
        let scene = Scene::from_toml(text).unwrap();
        let h = scene_hash(&scene);
        fs::write(dir.path().join(format!("{h}.coarse")), b"junk").unwrap();
        let opts = LoadOptions {
            cache_dir: Some(dir.path().to_path_buf()),
            ..Default::default()
        };
        assert!(matches!(
            load_scene_str(text, &opts),
            Err(LoadError::CacheCorrupt(_))
        ));
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_scene(Path::new("/nonexistent/scene.toml")),
            Err(LoadError::Io { .. })
        ));
    }
}
