//! Recurrences with limit coefficients, fundamental systems that isolate the
//! zeros of the limit polynomial, and Hermite-Padé row sequences for locating
//! the poles and singularities of a vector of power series.

pub mod error;
pub mod fundamental;
pub mod hermite_pade;
pub mod io;
pub mod numeric;
pub mod rates;
pub mod recurrence;
pub mod transforms;

pub use error::{Error, Result};
pub use fundamental::{build_fundamental_system, FundamentalSystem};
pub use hermite_pade::{classify_singularities, hp_solve, poly_independence_test, row_sequence, VectorSeries};
pub use numeric::{Polynomial, PowerSeries, PrecisionContext, Scalar};
pub use recurrence::{forward_solve, Recurrence};
