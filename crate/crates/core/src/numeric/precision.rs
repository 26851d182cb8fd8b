use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_BITS: usize = 256;
pub const MIN_BITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    ExactRational,
    BigFloat,
}

/// Tolerances that are not tied to the working precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative radius below which computed roots are merged into one cluster.
    pub clustering_radius: f64,
    /// Relative tolerance for matching a zero to a circle |z| = R.
    pub circle_tol: f64,
    /// Iteration cap for the simultaneous root finder.
    pub max_root_iterations: usize,
    /// Relative margin for telling a growth rate apart from |lambda|.
    pub modulus_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            clustering_radius: 1e-8,
            circle_tol: 1e-3,
            max_root_iterations: 200,
            modulus_margin: 1e-2,
        }
    }
}

/// Arithmetic mode, working precision and zero policy.
///
/// `float_precision_bits` is the significand size in BigFloat mode. In exact
/// mode it is still used by the numerical parts of an analysis (root finding,
/// regressions), which run on floats even when the data is rational.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionContext {
    pub mode: Mode,
    pub float_precision_bits: usize,
    /// log2 of the relative zero threshold. Minus infinity in exact mode.
    log2_zero_threshold: f64,
    pub tol: Tolerances,
}

impl PrecisionContext {
    pub fn exact() -> Self {
        Self::exact_with_bits(DEFAULT_BITS)
    }

    /// Exact arithmetic whose float side computations use `bits`.
    pub fn exact_with_bits(bits: usize) -> Self {
        PrecisionContext {
            mode: Mode::ExactRational,
            float_precision_bits: bits.max(MIN_BITS),
            log2_zero_threshold: f64::NEG_INFINITY,
            tol: Tolerances::default(),
        }
    }

    pub fn bigfloat(bits: usize) -> Result<Self> {
        if bits < MIN_BITS {
            return Err(Error::InvalidInput(format!(
                "precision must be at least {MIN_BITS} bits, got {bits}"
            )));
        }
        Ok(PrecisionContext {
            mode: Mode::BigFloat,
            float_precision_bits: bits,
            log2_zero_threshold: -(bits as f64) / 3.0,
            tol: Tolerances::default(),
        })
    }

    pub fn with_zero_threshold(mut self, threshold: f64) -> Result<Self> {
        if self.mode == Mode::ExactRational {
            if threshold != 0.0 {
                return Err(Error::InvalidInput(
                    "zero threshold must be 0 in exact mode".into(),
                ));
            }
            return Ok(self);
        }
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(Error::InvalidInput(format!(
                "zero threshold must lie in (0, 1), got {threshold}"
            )));
        }
        self.log2_zero_threshold = threshold.log2();
        Ok(self)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn is_exact(&self) -> bool {
        self.mode == Mode::ExactRational
    }

    pub fn bits(&self) -> usize {
        self.float_precision_bits
    }

    /// Zero threshold as a plain number; may underflow to 0 at very high precision.
    pub fn zero_threshold(&self) -> f64 {
        self.log2_zero_threshold.exp2()
    }

    pub fn ln_zero_threshold(&self) -> f64 {
        self.log2_zero_threshold * std::f64::consts::LN_2
    }

    /// Threshold used for float decisions even in exact mode.
    pub fn float_ln_zero_threshold(&self) -> f64 {
        if self.is_exact() {
            -(self.float_precision_bits as f64) / 3.0 * std::f64::consts::LN_2
        } else {
            self.ln_zero_threshold()
        }
    }

    /// `|x| <= threshold * scale`, evaluated on natural logarithms.
    pub fn negligible_ln(&self, ln_x: f64, ln_scale: f64) -> bool {
        if ln_x == f64::NEG_INFINITY {
            return true;
        }
        if self.is_exact() {
            return false;
        }
        ln_x <= ln_scale + self.ln_zero_threshold()
    }

    /// Same mode and tolerances at a different significand size.
    pub fn with_bits(&self, bits: usize) -> Self {
        let mut c = self.clone();
        c.float_precision_bits = bits.max(MIN_BITS);
        if c.mode == Mode::BigFloat {
            c.log2_zero_threshold = -(c.float_precision_bits as f64) / 3.0;
        }
        c
    }

    /// Float context at `bits` carrying these tolerances.
    pub fn float_at(&self, bits: usize) -> Self {
        let mut c = PrecisionContext::bigfloat(bits.max(MIN_BITS)).expect("bits clamped");
        c.tol = self.tol.clone();
        c
    }

    /// Default residual tolerance for checks that are exact in rational mode.
    pub fn residual_tol(&self) -> f64 {
        if self.is_exact() {
            0.0
        } else {
            10.0 * self.zero_threshold()
        }
    }

    /// Target accuracy for truncated tails: 10^(-bits/4).
    pub fn truncation_tol_ln(&self) -> f64 {
        -(self.float_precision_bits as f64) / 4.0 * std::f64::consts::LN_10
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        PrecisionContext::bigfloat(DEFAULT_BITS).expect("default precision is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_threshold_is_zero() {
        let c = PrecisionContext::exact();
        assert_eq!(c.zero_threshold(), 0.0);
        assert!(!c.negligible_ln(-1e6, 0.0));
        assert!(c.negligible_ln(f64::NEG_INFINITY, 0.0));
    }

    #[test]
    fn rejects_low_precision() {
        assert!(PrecisionContext::bigfloat(32).is_err());
        assert!(PrecisionContext::bigfloat(64).is_ok());
    }

    #[test]
    fn threshold_tracks_bits() {
        let c = PrecisionContext::bigfloat(300).unwrap();
        assert!((c.zero_threshold().log2() + 100.0).abs() < 1e-9);
        let d = c.with_bits(600);
        assert!((d.zero_threshold().log2() + 200.0).abs() < 1e-9);
    }
}
