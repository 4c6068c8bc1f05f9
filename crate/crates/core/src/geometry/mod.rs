//! Rational maps, regions and the coarse escape picture.

pub mod coarse;
pub mod edt;
pub mod map;
pub mod region;
pub mod scene;
pub mod trap;

pub use map::{MapEval, RationalMap, CQ};
pub use region::{LocalBall, LocalShape, Membership, Petal, Region, RegionCtx};
pub use trap::{build_trap_region, GermF64, TrapError, TrapRegion};
pub use scene::{refine_parabolic_point, ParabolicSite, PreparabolicSite, Scene, SceneConfig, SceneError};
pub use coarse::{build_coarse_picture, CoarseError, CoarsePicture};
