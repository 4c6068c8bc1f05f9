//! Certified rendering of Julia sets of rational maps with parabolic
//! cycles.
//!
//! The pixel function is computed in time polynomial in the pixel level:
//! orbits are followed with ball arithmetic, and orbit segments lingering
//! near a parabolic point are skipped with one evaluation of a truncated
//! iterate series.

pub mod arith;
pub mod geometry;
pub mod longiter;
pub mod oracle;
pub mod pixel;
pub mod render;
pub mod series;

pub use arith::{Ball, BigFloat, Mag};

/// Double-precision certified ball.
pub type Ball64 = Ball<f64>;
/// Multiprecision certified ball.
pub type BallMp = Ball<BigFloat>;
