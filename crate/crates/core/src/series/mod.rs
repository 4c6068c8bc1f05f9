//! Truncated power series, power sums and iterate coefficient tables.

pub mod faulhaber;
pub mod poly;
pub mod table;

pub use faulhaber::PowerSums;
pub use poly::{
    compose, conjugate_scale, mul_chop, pow_doubling, rational_to_series, Coeff, SeriesError,
    TruncatedSeries,
};
pub use table::{build_table, eval_coeff, iterate_coeff_table, IterCoeffTable};
