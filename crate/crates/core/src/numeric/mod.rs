//! Numbers, polynomials, truncated series and root finding.

pub mod linalg;
pub mod poly;
pub mod precision;
pub mod real;
pub mod roots;
pub mod scalar;
pub mod series;
pub mod stats;

pub use poly::Polynomial;
pub use precision::{Mode, PrecisionContext, Tolerances};
pub use real::{BigFloat, Real};
pub use roots::{poly_roots, poly_roots_seeded, Root, RootSet};
pub use scalar::Scalar;
pub use series::{series_from_rational, series_poly_mul, PowerSeries, SeriesSource};
