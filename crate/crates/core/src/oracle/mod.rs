//! Independent ground truth by plain orbit iteration.

pub mod classify;
pub mod compare;
pub mod count;

pub use classify::{
    certified_picture, naive_classify, oracle_picture, Oracle, OrbitVerdict, VerdictKind,
};
pub use compare::{compare_pictures, BandReport, CompareError};
pub use count::{milnor_escape_count, milnor_law, naive_escape_count, CountError, EscapeCount};
