//! Upper/lower-class threshold series and the iterated-logarithm ladders.
//!
//! The test series sum_j a_j^2 phi_j e^{-phi_j^2/2} / (j B^2(j)) decides
//! whether B(m) phi_m is an upper-class or lower-class boundary. Its
//! closed-form phi families are the gamma ladders built from iterated
//! logarithms of B(m); classification on those families follows the
//! classical integral comparison: only the sign of the twist parameter
//! matters.

use crate::backend::iterated_log;
use crate::error::{Error, Result};
use crate::model::RateSequence;

use super::{AdditiveFunction, CenteringTable};

/// gamma_s(eps; B) with the usual truncated iterated logarithm L:
/// s = 2: gamma^2 = 2 (1+eps) L_2 B
/// s = 3: gamma^2 / 2 = L_2 B + (3/2)(1+eps) L_3 B
/// s >= 4: gamma^2 / 2 = L_2 B + (3/2) L_3 B + L_4 B + ... + (1+eps) L_s B
pub fn gamma_ladder(s: u32, eps: f64, b: f64) -> Result<f64> {
    if s < 2 {
        return Err(Error::argument("ladder depth s must be at least 2"));
    }
    let l = |k: u32| iterated_log(b, k);
    let g2 = match s {
        2 => 2.0 * (1.0 + eps) * l(2),
        3 => 2.0 * (l(2) + 1.5 * (1.0 + eps) * l(3)),
        _ => {
            let mut acc = l(2) + 1.5 * l(3);
            for k in 4..s {
                acc += l(k);
            }
            acc += (1.0 + eps) * l(s);
            2.0 * acc
        }
    };
    if g2 < 0.0 {
        return Err(Error::argument("ladder produced a negative square"));
    }
    Ok(g2.sqrt())
}

/// phi sequence specification for [`feller_terms`].
#[derive(Debug, Clone)]
pub enum PhiFamily {
    /// phi_j = gamma_s(x; B(j)): the iterated-log ladder with twist x.
    GammaLadder { s: u32, x: f64 },
    /// explicit positive values phi_1..phi_J
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Converges,
    Diverges,
    /// returned when the family carries no closed form to compare against,
    /// or when an explicit phi fails the monotonicity precondition.
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct FellerReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub classification: Classification,
    /// sup_j |a_j| phi_j^3 / B(j): finite smallness is the growth condition
    /// the theorems place on a_j.
    pub condition_sup: f64,
    /// the thresholds psi_m = B(m) phi_m these terms speak about
    pub thresholds: Vec<f64>,
}

/// First `j_max` terms of the class-test series together with a
/// classification of the closed-form families.
pub fn feller_terms(
    h: &AdditiveFunction,
    rates: &RateSequence,
    phi: &PhiFamily,
    j_max: usize,
) -> Result<FellerReport> {
    if j_max < 10 {
        return Err(Error::argument("need at least 10 terms"));
    }
    if j_max > rates.len() {
        return Err(Error::Bounds {
            index: j_max,
            limit: rates.len(),
        });
    }
    let table = CenteringTable::new(h, rates, j_max)?;
    let phi_at = |j: usize, b: f64| -> Result<f64> {
        match phi {
            PhiFamily::GammaLadder { s, x } => gamma_ladder(*s, *x, b),
            PhiFamily::Explicit(v) => {
                if j > v.len() {
                    return Err(Error::Bounds {
                        index: j,
                        limit: v.len(),
                    });
                }
                Ok(v[j - 1])
            }
        }
    };

    let mut terms = Vec::with_capacity(j_max);
    let mut partial_sums = Vec::with_capacity(j_max);
    let mut thresholds = Vec::with_capacity(j_max);
    let mut acc = 0.0f64;
    let mut cond_sup = 0.0f64;
    let mut monotone = true;
    let mut prev_phi = f64::NEG_INFINITY;
    for j in 1..=j_max {
        let b2 = table.b2_prefix[j];
        let b = b2.sqrt();
        let p = phi_at(j, b)?;
        if p <= 0.0 {
            return Err(Error::argument(format!("phi_{j} must be positive")));
        }
        if p < prev_phi - 1e-12 {
            monotone = false;
        }
        prev_phi = prev_phi.max(p);
        let aj = table.a[j];
        let term = if aj == 0.0 || b2 == 0.0 {
            0.0
        } else {
            aj * aj * p * (-p * p / 2.0).exp() / (j as f64 * b2)
        };
        acc += term;
        terms.push(term);
        partial_sums.push(acc);
        thresholds.push(b * p);
        if b > 0.0 {
            cond_sup = cond_sup.max(aj.abs() * p.powi(3) / b);
        }
    }

    let all_zero = terms.iter().all(|&t| t == 0.0);
    let classification = if all_zero {
        Classification::Converges
    } else if !monotone {
        Classification::Inconclusive
    } else {
        match phi {
            PhiFamily::GammaLadder { x, .. } => {
                if *x > 0.0 {
                    Classification::Converges
                } else {
                    Classification::Diverges
                }
            }
            PhiFamily::Explicit(_) => Classification::Inconclusive,
        }
    };
    Ok(FellerReport {
        terms,
        partial_sums,
        classification,
        condition_sup: cond_sup,
        thresholds,
    })
}

/// Materialised threshold sequence psi_m = B(m) gamma_s(eps; B(m)) for
/// m = 1..=n, ready to feed the exceedance scan.
pub fn gamma_threshold_sequence(
    h: &AdditiveFunction,
    rates: &RateSequence,
    s: u32,
    eps: f64,
    n: usize,
) -> Result<Vec<f64>> {
    if n > rates.len() {
        return Err(Error::Bounds {
            index: n,
            limit: rates.len(),
        });
    }
    let table = CenteringTable::new(h, rates, n)?;
    (1..=n)
        .map(|m| {
            let b = table.b2_prefix[m].sqrt();
            Ok(b * gamma_ladder(s, eps, b)?)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::rat_int;
    use crate::model::AssemblySpec;

    #[test]
    fn gamma_ladder_anchor() {
        // B = e^e: L_2 B = 1, so gamma_2^2(0) = 2
        let b = std::f64::consts::E.exp();
        let g = gamma_ladder(2, 0.0, b).unwrap();
        assert!((g * g - 2.0).abs() < 1e-12);
        assert!(gamma_ladder(1, 0.0, b).is_err());
    }

    #[test]
    fn gamma_ladder_depths_are_consistent_at_zero_twist() {
        // for B = e^e all iterated logs collapse to 1:
        // s=3: gamma^2/2 = 1 + 3/2; s=4: gamma^2/2 = 1 + 3/2 + 1
        let b = std::f64::consts::E.exp();
        let g3 = gamma_ladder(3, 0.0, b).unwrap();
        assert!((g3 * g3 - 5.0).abs() < 1e-12);
        let g4 = gamma_ladder(4, 0.0, b).unwrap();
        assert!((g4 * g4 - 7.0).abs() < 1e-12);
    }

    #[test]
    fn zero_function_converges_trivially() {
        let spec = AssemblySpec::permutations(64);
        let rates = spec.derive_rates(64).unwrap();
        let zero = AdditiveFunction::completely_additive(|_| 0.0);
        let rep = feller_terms(&zero, &rates, &PhiFamily::GammaLadder { s: 2, x: 0.5 }, 64).unwrap();
        assert!(rep.terms.iter().all(|&t| t == 0.0));
        assert_eq!(rep.classification, Classification::Converges);
    }

    #[test]
    fn ladder_twist_sign_classifies() {
        let spec = AssemblySpec::ewens(rat_int(1), 4096).unwrap();
        let rates = spec.derive_rates(4096).unwrap();
        let h = AdditiveFunction::component_count();
        let plus = feller_terms(&h, &rates, &PhiFamily::GammaLadder { s: 2, x: 0.5 }, 4096).unwrap();
        assert_eq!(plus.classification, Classification::Converges);
        let minus =
            feller_terms(&h, &rates, &PhiFamily::GammaLadder { s: 2, x: -0.5 }, 4096).unwrap();
        assert_eq!(minus.classification, Classification::Diverges);
        // the divergent twist produces pointwise larger terms
        let sum_plus = plus.partial_sums.last().unwrap();
        let sum_minus = minus.partial_sums.last().unwrap();
        assert!(sum_minus > sum_plus);
    }

    #[test]
    fn non_monotone_phi_refuses_classification_but_returns_terms() {
        let spec = AssemblySpec::permutations(64);
        let rates = spec.derive_rates(32).unwrap();
        let h = AdditiveFunction::component_count();
        let mut phi = vec![2.0; 32];
        phi[10] = 1.0;
        let rep = feller_terms(&h, &rates, &PhiFamily::Explicit(phi), 32).unwrap();
        assert_eq!(rep.classification, Classification::Inconclusive);
        assert_eq!(rep.terms.len(), 32);
    }

    #[test]
    fn too_few_terms_is_an_error() {
        let spec = AssemblySpec::permutations(64);
        let rates = spec.derive_rates(32).unwrap();
        let h = AdditiveFunction::component_count();
        assert!(feller_terms(&h, &rates, &PhiFamily::GammaLadder { s: 2, x: 0.5 }, 9).is_err());
    }
}
