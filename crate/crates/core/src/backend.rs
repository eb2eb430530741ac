//! Numeric backends.
//!
//! Two backends coexist: exact big-rational arithmetic (authoritative for
//! moderate sizes) and double precision with log-space prefactors for large
//! sizes. Operations that can run under either report which one produced
//! their result.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

/// Exact rational scalar used throughout the exact backend.
pub type Rat = BigRational;

/// Which arithmetic produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Float,
}

impl Backend {
    /// Default dispatch rule: exact arithmetic up to size 200, floating
    /// point beyond.
    pub fn auto(n: usize) -> Backend {
        if n <= 200 {
            Backend::Exact
        } else {
            Backend::Float
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Exact => write!(f, "exact"),
            Backend::Float => write!(f, "float"),
        }
    }
}

/// Rational from an integer pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

/// Rational from an integer.
pub fn rat_int(v: i64) -> Rat {
    Rat::from_integer(BigInt::from(v))
}

/// n! as a big integer.
pub fn factorial(n: usize) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}

/// Lossy conversion to f64. Accurate to within one ulp for the magnitudes
/// used here; values too small for f64 collapse to zero.
pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        if x.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Natural log of a positive rational, stable for values far outside the
/// f64 range (splits into bit-length and mantissa parts).
pub fn ln_rat(x: &Rat) -> f64 {
    assert!(x.is_positive(), "ln of non-positive rational");
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

fn ln_bigint(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 52 {
        return v.to_f64().unwrap().ln();
    }
    // v = m * 2^shift with m in f64 range
    let shift = bits - 52;
    let m = (v >> shift).to_f64().unwrap();
    m.ln() + (shift as f64) * std::f64::consts::LN_2
}

/// Iterated logarithm with the usual truncation, L(x) = ln(max(x, e)),
/// so that L(x) >= 1 always. `iterated_log(x, k)` is the k-fold composition.
pub fn iterated_log(x: f64, k: u32) -> f64 {
    let mut v = x;
    for _ in 0..k {
        v = v.max(std::f64::consts::E).ln();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn factorial_small() {
        assert_eq!(factorial(0), BigInt::one());
        assert_eq!(factorial(5), BigInt::from(120));
    }

    #[test]
    fn ln_rat_matches_f64_in_range() {
        let x = rat(355, 113);
        assert!((ln_rat(&x) - (355.0f64 / 113.0).ln()).abs() < 1e-12);
    }

    #[test]
    fn ln_rat_handles_huge_values() {
        let big = Rat::from_integer(factorial(500));
        // Stirling: ln 500! = 2611.330...
        assert!((ln_rat(&big) - 2611.3304657).abs() < 1e-4);
    }

    #[test]
    fn iterated_log_truncates() {
        assert_eq!(iterated_log(0.5, 1), 1.0);
        assert!((iterated_log(std::f64::consts::E.exp(), 2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rat_zero_cmp() {
        assert!(rat(0, 5).is_zero());
    }
}
