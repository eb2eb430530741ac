//! Additive functions on assemblies and their strong-convergence
//! diagnostics: centering/scaling statistics, polygonal processes, distance
//! to the Strassen set, upper/lower-class series and the Monte Carlo
//! experiments built on top of them.

pub mod experiments;
pub mod feller;
pub mod path;
pub mod strassen;

pub use experiments::{
    exceedance_scan, lil_experiment, replica_process, ExceedanceEstimate, LilOptions, LilSummary,
};
pub use feller::{feller_terms, gamma_ladder, Classification, FellerReport, PhiFamily};
pub use path::{build_process, build_process_with, PolygonalPath, ProcessForm, ProcessOptions};
pub use strassen::strassen_distance;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{ComponentVector, RateSequence};

/// An additive function h(sigma) = sum_j h_j(k_j(sigma)) with h_j(0) = 0.
///
/// The per-size maps are closed-form callables; a_j = h_j(1) is the derived
/// sequence that drives every centering statistic.
#[derive(Clone)]
pub struct AdditiveFunction {
    h: Arc<dyn Fn(usize, u32) -> f64 + Send + Sync>,
    completely_additive: bool,
}

impl std::fmt::Debug for AdditiveFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdditiveFunction")
            .field("completely_additive", &self.completely_additive)
            .finish()
    }
}

impl AdditiveFunction {
    /// General h_j(s). The h_j(0) = 0 requirement is probed on a window of
    /// sizes at construction and rejected if violated.
    pub fn from_fn(h: impl Fn(usize, u32) -> f64 + Send + Sync + 'static) -> Result<Self> {
        for j in 1..=64 {
            if h(j, 0) != 0.0 {
                return Err(Error::argument(format!("h_{j}(0) must vanish")));
            }
        }
        Ok(AdditiveFunction {
            h: Arc::new(h),
            completely_additive: false,
        })
    }

    /// Completely additive: h_j(s) = a_j * s.
    pub fn completely_additive(a: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        AdditiveFunction {
            h: Arc::new(move |j, s| a(j) * s as f64),
            completely_additive: true,
        }
    }

    /// a_j = 1 for every j: h counts components with multiplicity.
    pub fn component_count() -> Self {
        Self::completely_additive(|_| 1.0)
    }

    pub fn is_completely_additive(&self) -> bool {
        self.completely_additive
    }

    pub fn eval(&self, j: usize, s: u32) -> f64 {
        if s == 0 {
            0.0
        } else {
            (self.h)(j, s)
        }
    }

    /// a_j = h_j(1).
    pub fn a(&self, j: usize) -> f64 {
        (self.h)(j, 1)
    }
}

/// h(sigma, m) = sum_{j<=m} h_j(s_j).
pub fn partial_value(h: &AdditiveFunction, s: &ComponentVector, m: usize) -> Result<f64> {
    if m > s.dim() {
        return Err(Error::Bounds {
            index: m,
            limit: s.dim(),
        });
    }
    Ok((1..=m).map(|j| h.eval(j, s.count(j))).sum())
}

/// Indicator-form partial value: sum_{j<=m} a_j 1{s_j >= 1}. This is the
/// reduction the process constructions use by default.
pub fn partial_value_indicator(h: &AdditiveFunction, s: &ComponentVector, m: usize) -> Result<f64> {
    if m > s.dim() {
        return Err(Error::Bounds {
            index: m,
            limit: s.dim(),
        });
    }
    Ok((1..=m)
        .filter(|&j| s.count(j) >= 1)
        .map(|j| h.a(j))
        .sum())
}

/// The centering/scaling triple (A(m), B^2(m), beta(m)) with
/// A(m) = sum a_j (1 - e^{-lambda_j}),
/// B^2(m) = sum a_j^2 e^{-lambda_j}(1 - e^{-lambda_j}),
/// beta(m) = B(m) sqrt(2 log log B(m)).
///
/// beta is reported as absent (not an error) whenever log log B(m) <= 0.
#[derive(Debug, Clone, Copy)]
pub struct CenterScale {
    pub a: f64,
    pub b2: f64,
    pub beta: Option<f64>,
}

pub fn centering_scaling(
    h: &AdditiveFunction,
    rates: &RateSequence,
    m: usize,
) -> Result<CenterScale> {
    if m > rates.len() {
        return Err(Error::Bounds {
            index: m,
            limit: rates.len(),
        });
    }
    let mut a_sum = 0.0;
    let mut b2 = 0.0;
    for j in 1..=m {
        let aj = h.a(j);
        let q = (-rates.float(j)).exp();
        a_sum += aj * (1.0 - q);
        b2 += aj * aj * q * (1.0 - q);
    }
    Ok(CenterScale {
        a: a_sum,
        b2,
        beta: beta_from_b2(b2),
    })
}

pub(crate) fn beta_from_b2(b2: f64) -> Option<f64> {
    if b2 <= 0.0 {
        return None;
    }
    let b = b2.sqrt();
    let ln_b = b.ln();
    if ln_b <= 0.0 {
        return None;
    }
    let llb = ln_b.ln();
    if llb <= 0.0 {
        None
    } else {
        Some(b * (2.0 * llb).sqrt())
    }
}

/// Prefix tables of a_j, A(j) and B^2(j) for j = 0..=n (index 0 is empty).
/// Shared by the process builder and both experiments.
#[derive(Debug, Clone)]
pub struct CenteringTable {
    pub a: Vec<f64>,
    pub a_prefix: Vec<f64>,
    pub b2_prefix: Vec<f64>,
}

impl CenteringTable {
    pub fn new(h: &AdditiveFunction, rates: &RateSequence, n: usize) -> Result<Self> {
        if n > rates.len() {
            return Err(Error::Bounds {
                index: n,
                limit: rates.len(),
            });
        }
        let mut a = vec![0.0; n + 1];
        let mut a_prefix = vec![0.0; n + 1];
        let mut b2_prefix = vec![0.0; n + 1];
        for j in 1..=n {
            let aj = h.a(j);
            let q = (-rates.float(j)).exp();
            a[j] = aj;
            a_prefix[j] = a_prefix[j - 1] + aj * (1.0 - q);
            b2_prefix[j] = b2_prefix[j - 1] + aj * aj * q * (1.0 - q);
        }
        Ok(CenteringTable {
            a,
            a_prefix,
            b2_prefix,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AssemblySpec;

    #[test]
    fn partial_values() {
        let count = AdditiveFunction::component_count();
        let s = ComponentVector::new(vec![1, 1, 0]);
        assert_eq!(partial_value(&count, &s, 3).unwrap(), 2.0);
        // h_j(s) = j*s sums the level
        let size = AdditiveFunction::completely_additive(|j| j as f64);
        assert_eq!(partial_value(&size, &s, 3).unwrap(), 3.0);
        let zero = AdditiveFunction::completely_additive(|_| 0.0);
        assert_eq!(partial_value(&zero, &s, 3).unwrap(), 0.0);
        assert!(partial_value(&count, &s, 4).is_err());
    }

    #[test]
    fn indicator_form_ignores_multiplicity() {
        let count = AdditiveFunction::component_count();
        let s = ComponentVector::new(vec![3, 0, 1, 0]);
        assert_eq!(partial_value(&count, &s, 4).unwrap(), 4.0);
        assert_eq!(partial_value_indicator(&count, &s, 4).unwrap(), 2.0);
    }

    #[test]
    fn h0_must_vanish() {
        assert!(AdditiveFunction::from_fn(|_, s| s as f64 + 1.0).is_err());
        assert!(AdditiveFunction::from_fn(|j, s| if s >= 1 { j as f64 } else { 0.0 }).is_ok());
    }

    #[test]
    fn centering_identical_terms() {
        // a_j = 1, lambda_j = 1: A(m) = m(1-e^{-1}), B^2(m) = m e^{-1}(1-e^{-1})
        let rates = RateSequence::from_exact(vec![crate::backend::rat_int(1); 10]);
        let h = AdditiveFunction::component_count();
        let cs = centering_scaling(&h, &rates, 10).unwrap();
        let q = (-1.0f64).exp();
        assert!((cs.a - 10.0 * (1.0 - q)).abs() < 1e-12);
        assert!((cs.b2 - 10.0 * q * (1.0 - q)).abs() < 1e-12);
    }

    #[test]
    fn centering_zero_function_reports_absent_beta() {
        let spec = AssemblySpec::permutations(8);
        let rates = spec.derive_rates(8).unwrap();
        let zero = AdditiveFunction::completely_additive(|_| 0.0);
        let cs = centering_scaling(&zero, &rates, 8).unwrap();
        assert_eq!(cs.a, 0.0);
        assert_eq!(cs.b2, 0.0);
        assert!(cs.beta.is_none());
    }

    #[test]
    fn centering_permutation_anchor() {
        let spec = AssemblySpec::permutations(8);
        let rates = spec.derive_rates(2).unwrap();
        let h = AdditiveFunction::component_count();
        let cs = centering_scaling(&h, &rates, 2).unwrap();
        let expected = (1.0 - (-1.0f64).exp()) + (1.0 - (-0.5f64).exp());
        assert!((cs.a - expected).abs() < 1e-12);
        // B small: log log B(2) <= 0, so beta is absent here
        assert!(cs.beta.is_none());
    }

    #[test]
    fn table_prefixes_are_additive_and_monotone() {
        let spec = AssemblySpec::ewens(crate::backend::rat(1, 2), 64).unwrap();
        let rates = spec.derive_rates(64).unwrap();
        let h = AdditiveFunction::completely_additive(|j| 1.0 / (1.0 + (j % 3) as f64));
        let table = CenteringTable::new(&h, &rates, 64).unwrap();
        for m in 1..=64 {
            assert!(table.b2_prefix[m] >= table.b2_prefix[m - 1]);
            let cs = centering_scaling(&h, &rates, m).unwrap();
            assert!((cs.a - table.a_prefix[m]).abs() < 1e-12);
            assert!((cs.b2 - table.b2_prefix[m]).abs() < 1e-12);
        }
        // additivity over ranges: prefix differences recompute the range sums
        let (lo, hi) = (17usize, 42usize);
        let mut range_a = 0.0;
        for j in (lo + 1)..=hi {
            range_a += h.a(j) * (1.0 - (-rates.float(j)).exp());
        }
        assert!((table.a_prefix[hi] - table.a_prefix[lo] - range_a).abs() < 1e-12);
    }
}
