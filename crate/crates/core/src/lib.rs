//! Numerical laboratory for the diffeomorphism group of the circle.
//!
//! The crate covers formal-series groups, concrete circle maps with their
//! cocycles, truncated block operators and determinants, conformal welding,
//! and Monte Carlo on Malliavin-Shavgulidze bridge measures.

pub mod circle_maps;
pub mod error;
pub mod formal_series;
pub mod measures;
pub mod operators;
pub mod quad;
pub mod stats;
pub mod welding;

pub use error::{Error, Result};

use num_complex::Complex;
use num_rational::Ratio;

pub type C64 = Complex<f64>;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Series with double-precision complex coefficients.
pub type FormalSeries64 = formal_series::FormalSeries<C64>;
/// Vector field with double-precision complex coefficients.
pub type FormalVectorField64 = formal_series::FormalVectorField<C64>;
/// Exact rational series, used to derive the coefficient relations.
pub type FormalSeriesQ = formal_series::FormalSeries<Ratio<i64>>;
pub type FormalVectorFieldQ = formal_series::FormalVectorField<Ratio<i64>>;
