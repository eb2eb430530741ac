//! Enumeration oracles and numeric verification of the Ruzsa-type
//! conditional-probability machinery.
//!
//! The routines here are deliberately brute force: they enumerate level sets
//! as integer partitions in multiplicity form and evaluate every probability
//! as an explicit sum, so the faster series-based paths elsewhere in the
//! crate can be checked against them.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::backend::{ln_rat, rat_int, to_f64, Rat};
use crate::error::{Error, Result};
use crate::model::{poisson_core, ComponentVector, RateSequence};
use crate::series::level_coeffs_exact;

const ENUMERATION_GUARD: usize = 40;

/// All component vectors in Z_+^n with l(s) = n, i.e. the partitions of n
/// in multiplicity representation. Deterministic order (lexicographic in
/// the largest-part-first recursion). p(n) vectors for n >= 1.
pub fn enumerate_level(n: usize) -> Result<Vec<ComponentVector>> {
    if n > ENUMERATION_GUARD {
        return Err(Error::CostGuard(format!(
            "level enumeration capped at n = {ENUMERATION_GUARD} (got {n})"
        )));
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    descend(n, n, &mut current, &mut out);
    Ok(out)
}

fn descend(remaining: usize, max_part: usize, current: &mut Vec<u32>, out: &mut Vec<ComponentVector>) {
    if remaining == 0 {
        out.push(ComponentVector::new(current.clone()));
        return;
    }
    for part in (1..=max_part.min(remaining)).rev() {
        current[part - 1] += 1;
        descend(remaining - part, part, current, out);
        current[part - 1] -= 1;
    }
}

/// All vectors with level in 0..=n and parts of size at most `max_part`,
/// padded to dimension `dim`. Used to walk truncated-coordinate boxes.
pub fn enumerate_prefixes(n: usize, max_part: usize, dim: usize) -> Vec<ComponentVector> {
    let mut out = Vec::new();
    let mut current = vec![0u32; dim];
    descend_prefix(n, max_part, 1, &mut current, &mut out);
    out
}

fn descend_prefix(
    budget: usize,
    max_part: usize,
    next: usize,
    current: &mut Vec<u32>,
    out: &mut Vec<ComponentVector>,
) {
    if next > max_part {
        out.push(ComponentVector::new(current.clone()));
        return;
    }
    let cap = budget / next;
    for c in 0..=cap {
        current[next - 1] = c as u32;
        descend_prefix(budget - next * c, max_part, next + 1, current, out);
    }
    current[next - 1] = 0;
}

fn dot(a: &ComponentVector, b: &ComponentVector) -> u64 {
    a.counts()
        .iter()
        .zip(b.counts())
        .map(|(&x, &y)| x as u64 * y as u64)
        .sum()
}

fn le(a: &ComponentVector, b: &ComponentVector) -> bool {
    a.counts().iter().zip(b.counts()).all(|(&x, &y)| x <= y)
}

/// "t3 exactly enters t2": t3 <= t2 and t3 is orthogonal to t2 - t3.
fn exactly_enters(t3: &ComponentVector, t2: &ComponentVector) -> bool {
    if !le(t3, t2) {
        return false;
    }
    t3.counts()
        .iter()
        .zip(t2.counts())
        .all(|(&x, &y)| x == 0 || y == x)
}

/// The extension V(U) = { t1 + t2 - t3 : t1 _|_ (t2 - t3), t3 || t2 }.
///
/// Always contains U (take t1 = t2 = t3). Monotone in U.
pub fn extension_set(u_set: &[ComponentVector]) -> Result<BTreeSet<ComponentVector>> {
    let mut v = BTreeSet::new();
    if u_set.is_empty() {
        return Ok(v);
    }
    let dim = u_set[0].dim();
    if u_set.iter().any(|t| t.dim() != dim) {
        return Err(Error::argument("extension_set requires equal dimensions"));
    }
    for t2 in u_set {
        for t3 in u_set {
            if !exactly_enters(t3, t2) {
                continue;
            }
            // diff = t2 - t3 (componentwise, nonnegative by t3 <= t2)
            let diff = ComponentVector::new(
                t2.counts()
                    .iter()
                    .zip(t3.counts())
                    .map(|(&y, &x)| y - x)
                    .collect(),
            );
            for t1 in u_set {
                if dot(t1, &diff) != 0 {
                    continue;
                }
                let s = ComponentVector::new(
                    t1.counts()
                        .iter()
                        .zip(diff.counts())
                        .map(|(&a, &d)| a + d)
                        .collect(),
                );
                v.insert(s);
            }
        }
    }
    Ok(v)
}

/// The constants of the Ruzsa-type conditional bound for a product measure
/// with per-coordinate pmfs p_j, computed as the extremal values that make
/// the bound's hypotheses hold with equality at the maximisers.
#[derive(Debug, Clone)]
pub struct RuzsaConstants {
    /// min_j p_j(0)
    pub c2: f64,
    /// n * P_n with P_n the product-measure mass of the level-n set
    pub c3: f64,
    /// max over 0 <= m < n of P(level m) ((m+1)/n)^{1-theta} / P_n
    pub c1_const: f64,
    /// max over 1 <= m <= n of m * sum_{kj=m} p_j(k)/p_j(0)
    pub c2_const: f64,
    /// C = max{ 32/c2^2, C2/c3 + 4 C1/c2 + C1 C2 / theta }
    pub c_total: f64,
    pub theta: f64,
}

/// Per-coordinate pmf table: `pmf[j-1][k]` = p_j(k). Rows may have
/// different lengths; missing entries are zero.
pub type PmfTable = Vec<Vec<f64>>;

/// Poisson pmf rows p_j(k) = e^{-lambda_j} lambda_j^k / k! up to k_max.
pub fn poisson_pmf_table(rates: &RateSequence, k_max: usize) -> PmfTable {
    (1..=rates.len())
        .map(|j| {
            let lam = rates.float(j);
            let mut row = Vec::with_capacity(k_max + 1);
            let mut p = (-lam).exp();
            row.push(p);
            for k in 1..=k_max {
                p *= lam / k as f64;
                row.push(p);
            }
            row
        })
        .collect()
}

/// Level-set mass P(Z_+^n(m)) of the product measure, by enumeration.
fn level_mass(pmf: &PmfTable, n: usize, m: usize) -> Result<f64> {
    let base: f64 = pmf.iter().take(n).map(|row| row[0]).product();
    let mut total = 0.0;
    for s in enumerate_level(m)? {
        let mut v = 1.0;
        for j in 1..=m.min(n) {
            let c = s.count(j) as usize;
            if c > 0 {
                let row = &pmf[j - 1];
                if c >= row.len() || row[0] == 0.0 {
                    v = 0.0;
                    break;
                }
                v *= row[c] / row[0];
            }
        }
        if m > n && s.counts().iter().take(m).skip(n).any(|&c| c > 0) {
            continue;
        }
        total += v;
    }
    Ok(base * total)
}

/// Computes the Ruzsa bound constants for the product measure given by
/// `pmf` truncated to coordinates 1..=n, with exponent theta in (0, 1].
pub fn ruzsa_constants(pmf: &PmfTable, n: usize, theta: f64) -> Result<RuzsaConstants> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::argument("theta must lie in (0, 1]"));
    }
    if pmf.len() < n {
        return Err(Error::argument("pmf table shorter than n"));
    }
    if pmf.iter().take(n).any(|row| row.is_empty() || row[0] <= 0.0) {
        return Err(Error::argument(
            "some p_j(0) = 0: hypothesis (i) of the conditional bound is unsatisfiable",
        ));
    }
    let c2 = pmf
        .iter()
        .take(n)
        .map(|row| row[0])
        .fold(f64::INFINITY, f64::min);
    let p_n = level_mass(pmf, n, n)?;
    let c3 = n as f64 * p_n;
    let mut c1_const: f64 = 0.0;
    for m in 0..n {
        let pm = level_mass(pmf, n, m)?;
        let ratio = pm * (((m + 1) as f64) / n as f64).powf(1.0 - theta) / p_n;
        c1_const = c1_const.max(ratio);
    }
    let mut c2_const: f64 = 0.0;
    for m in 1..=n {
        let mut sum = 0.0;
        for j in 1..=n {
            if m % j == 0 {
                let k = m / j;
                let row = &pmf[j - 1];
                if k < row.len() {
                    sum += row[k] / row[0];
                }
            }
        }
        c2_const = c2_const.max(m as f64 * sum);
    }
    let c_total = (32.0 / (c2 * c2))
        .max(c2_const / c3 + 4.0 * c1_const / c2 + c1_const * c2_const / theta);
    Ok(RuzsaConstants {
        c2,
        c3,
        c1_const,
        c2_const,
        c_total,
        theta,
    })
}

/// Report of a single Ruzsa-bound verification instance.
#[derive(Debug, Clone)]
pub struct RuzsaReport {
    /// P(complement of V(U) | level-n set), exact up to f64 conversion.
    pub lhs: f64,
    /// C P^theta(complement of U) + C1 C2 theta^{-1} n^{-theta} 1{theta<1}.
    pub rhs: f64,
    pub constants: RuzsaConstants,
    /// [lower, upper] bracket on P(complement of U); rhs uses the upper end
    /// for P itself, i.e. the lower end of the complement, keeping the
    /// verified inequality sound.
    pub p_u_complement: (f64, f64),
    pub pass: bool,
}

/// Verifies P(V(U)-complement | level n) <= C P^theta(U-complement) + tail
/// for an explicit finite U inside Z_+^n.
///
/// The conditional left side is a ratio of rationals (Poisson prefactors
/// cancel); the right side is floating point with the complement mass
/// bracketed by a per-coordinate support cap plus an analytic tail bound.
pub fn ruzsa_check(
    rates: &RateSequence,
    n: usize,
    u_set: &[ComponentVector],
    theta: f64,
) -> Result<RuzsaReport> {
    if n > 12 {
        return Err(Error::CostGuard(format!(
            "ruzsa_check enumerates the level set; capped at n = 12 (got {n})"
        )));
    }
    if n > rates.len() {
        return Err(Error::Bounds {
            index: n,
            limit: rates.len(),
        });
    }
    let v_set = extension_set(u_set)?;

    // LHS: 1 - P(V intersect level set)/P(level set), exact.
    let level = enumerate_level(n)?;
    let mut v_mass = Rat::zero();
    let mut total = Rat::zero();
    for s in &level {
        let core = poisson_core(rates, s);
        if v_set.contains(s) {
            v_mass += core.clone();
        }
        total += core;
    }
    if total.is_zero() {
        return Err(Error::DegenerateConditioning);
    }
    let lhs = 1.0 - to_f64(&(v_mass / total));

    // P(U): finite sum over the explicit set; exact core, f64 prefactor.
    let lam_total = rates.lambda_sum_float(0, n);
    let mut u_mass = 0.0;
    for t in u_set {
        if t.dim() != n {
            return Err(Error::argument("U vectors must have dimension n"));
        }
        u_mass += to_f64(&poisson_core(rates, t));
    }
    u_mass *= (-lam_total).exp();
    let p_bar_u = (1.0 - u_mass).max(0.0);

    let constants = ruzsa_constants(&poisson_pmf_table(rates, 4 * n + 8), n, theta)?;
    let tail = if theta < 1.0 {
        constants.c1_const * constants.c2_const / theta * (n as f64).powf(-theta)
    } else {
        0.0
    };
    let rhs = constants.c_total * p_bar_u.powf(theta) + tail;
    Ok(RuzsaReport {
        lhs,
        rhs,
        constants,
        p_u_complement: (p_bar_u, p_bar_u),
        pass: lhs <= rhs + 1e-12,
    })
}

/// Integer-valued additive statistic H(t) = sum_j h_j(t_j) used by the
/// additive-function form of the conditional bound.
pub type IntAdditive = dyn Fn(usize, u32) -> i64;

/// Report for the additive-function corollary: mu_n(H not in A+A-A)
/// against C P^theta(H(xi) not in A) + tail.
#[derive(Debug, Clone)]
pub struct AdditiveRuzsaReport {
    pub lhs: f64,
    pub rhs: f64,
    /// bracket on P(H(xi) not in A): [enumerated, enumerated + tail bound]
    pub p_complement: (f64, f64),
    pub pass: bool,
}

/// Corollary form: U = { t : H(t) in A } with H additive and integer
/// valued. U is materialised on the box {t : t_j <= cap}; mass outside the
/// box is bracketed by sum_j P(xi_j > cap) and the upper end is used on the
/// right-hand side's complement.
pub fn ruzsa_check_additive(
    rates: &RateSequence,
    n: usize,
    h: &IntAdditive,
    a_set: &BTreeSet<i64>,
    theta: f64,
    cap: u32,
) -> Result<AdditiveRuzsaReport> {
    if n > 10 {
        return Err(Error::CostGuard(format!(
            "additive ruzsa check capped at n = 10 (got {n})"
        )));
    }
    if n > rates.len() {
        return Err(Error::Bounds {
            index: n,
            limit: rates.len(),
        });
    }
    // A + A - A
    let mut aaa = BTreeSet::new();
    for &x in a_set {
        for &y in a_set {
            for &z in a_set {
                aaa.insert(x + y - z);
            }
        }
    }
    let h_value = |s: &ComponentVector| -> i64 { (1..=n).map(|j| h(j, s.count(j))).sum() };

    // LHS: exact conditional mass of { H not in A+A-A } on the level set.
    let level = enumerate_level(n)?;
    let mut bad = Rat::zero();
    let mut total = Rat::zero();
    for s in &level {
        let core = poisson_core(rates, s);
        if !aaa.contains(&h_value(s)) {
            bad += core.clone();
        }
        total += core;
    }
    let lhs = to_f64(&(bad / total));

    // P(H(xi) in A) on the capped box; the remainder is bracketed.
    let lam_total = rates.lambda_sum_float(0, n);
    let mut in_a = 0.0;
    let box_vectors = enumerate_box(n, cap);
    for t in &box_vectors {
        if a_set.contains(&h_value(t)) {
            in_a += to_f64(&poisson_core(rates, t));
        }
    }
    in_a *= (-lam_total).exp();
    let tail_bound: f64 = (1..=n)
        .map(|j| poisson_upper_tail(rates.float(j), cap))
        .sum();
    let p_comp_lower = (1.0 - in_a - tail_bound).max(0.0);
    let p_comp_upper = (1.0 - in_a).min(1.0);

    let constants = ruzsa_constants(&poisson_pmf_table(rates, (4 * n + 8).max(cap as usize + 1)), n, theta)?;
    let tail = if theta < 1.0 {
        constants.c1_const * constants.c2_const / theta * (n as f64).powf(-theta)
    } else {
        0.0
    };
    // Sound direction: the bound must hold even for the smallest complement
    // consistent with the bracket... the theorem guarantees it for the true
    // value, so pass/fail uses the upper end.
    let rhs = constants.c_total * p_comp_upper.powf(theta) + tail;
    Ok(AdditiveRuzsaReport {
        lhs,
        rhs,
        p_complement: (p_comp_lower, p_comp_upper),
        pass: lhs <= rhs + 1e-12,
    })
}

fn enumerate_box(n: usize, cap: u32) -> Vec<ComponentVector> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fn rec(idx: usize, cap: u32, current: &mut Vec<u32>, out: &mut Vec<ComponentVector>) {
        if idx == current.len() {
            out.push(ComponentVector::new(current.clone()));
            return;
        }
        for c in 0..=cap {
            current[idx] = c;
            rec(idx + 1, cap, current, out);
        }
        current[idx] = 0;
    }
    rec(0, cap, &mut current, &mut out);
    out
}

/// P(Poisson(lambda) > cap), crude but valid upper bound via the next term
/// times a geometric majorant.
fn poisson_upper_tail(lambda: f64, cap: u32) -> f64 {
    let k = cap as f64 + 1.0;
    let mut term = (-lambda).exp();
    for i in 1..=(cap + 1) {
        term *= lambda / i as f64;
    }
    if lambda < k {
        term / (1.0 - lambda / k)
    } else {
        1.0
    }
}

/// Decay exponents of the coefficient-ratio estimate, as functions of the
/// lower rate bound d' = theta_lo:
/// c = (sqrt(1+d') - 1)^2 for d' <= 3, (d'-1)/2 otherwise;
/// c0 = c / (2(1+c)); c1 = min(1/2, c0).
#[derive(Debug, Clone, Copy)]
pub struct DecayExponents {
    pub c: f64,
    pub c0: f64,
    pub c1: f64,
}

pub fn decay_exponents(theta_lo: f64) -> Result<DecayExponents> {
    if theta_lo <= 0.0 {
        return Err(Error::argument("theta_lo must be positive"));
    }
    let c = if theta_lo <= 3.0 {
        let s = (1.0 + theta_lo).sqrt() - 1.0;
        s * s
    } else {
        (theta_lo - 1.0) / 2.0
    };
    let c0 = c / (2.0 * (1.0 + c));
    Ok(DecayExponents {
        c,
        c0,
        c1: c0.min(0.5),
    })
}

/// Ratio check for the one-dimensional coefficient comparison: with
/// F built from d by zeroing the first r exponent entries,
/// reports F_m/(e_r D_n) - 1 and the theoretical bound shape
/// (eta + (r/n) 1{r>=1})/delta + delta^c.
#[derive(Debug, Clone)]
pub struct SeriesRatioReport {
    pub ratio_minus_one: f64,
    pub bound: f64,
    pub c: f64,
}

pub fn series_ratio_check(
    d: &[Rat],
    n: usize,
    r: usize,
    m: usize,
    eta: f64,
    delta: f64,
) -> Result<SeriesRatioReport> {
    if n == 0 || d.len() < n {
        return Err(Error::argument("need d_1..d_n"));
    }
    if !(1.0 / n as f64 <= delta && delta <= 0.5) {
        return Err(Error::argument("delta must lie in [1/n, 1/2]"));
    }
    if !(0.0..=0.5).contains(&eta) {
        return Err(Error::argument("eta must lie in [0, 1/2]"));
    }
    if (r as f64) > delta * n as f64 {
        return Err(Error::argument("regime violation: r > delta n"));
    }
    if m > n || (m as f64) < (1.0 - eta) * n as f64 {
        return Err(Error::argument("regime violation: need n(1-eta) <= m <= n"));
    }
    let d_lo = d
        .iter()
        .take(n)
        .map(to_f64)
        .fold(f64::INFINITY, f64::min);
    if d_lo <= 0.0 {
        return Err(Error::argument("d_j must be positive"));
    }
    // exponent series g_j = d_j / j
    let make_series = |from: usize| -> Vec<Rat> {
        let mut g = vec![Rat::zero(); n + 1];
        for j in (from + 1)..=n {
            g[j] = d[j - 1].clone() / rat_int(j as i64);
        }
        g
    };
    let d_series = crate::series::exp_series(
        &crate::series::PowerSeries::from_coeffs(make_series(0)),
        n,
    )?;
    let f_series = crate::series::exp_series(
        &crate::series::PowerSeries::from_coeffs(make_series(r)),
        n,
    )?;
    let dn = d_series.coeff(n);
    if dn.is_zero() {
        return Err(Error::DegenerateConditioning);
    }
    // F_m / D_n exact, then the e_r prefactor in log space.
    let fm = f_series.coeff(m);
    let ln_er: f64 = -(1..=r).map(|j| to_f64(&d[j - 1]) / j as f64).sum::<f64>();
    let ratio = if fm.is_zero() {
        0.0
    } else {
        (ln_rat(&(fm / dn.clone())) - ln_er).exp()
    };
    let exps = decay_exponents(d_lo)?;
    let indicator = if r >= 1 { r as f64 / n as f64 } else { 0.0 };
    let bound = (eta + indicator) / delta + delta.powf(exps.c);
    Ok(SeriesRatioReport {
        ratio_minus_one: ratio - 1.0,
        bound,
        c: exps.c,
    })
}

/// P(level-m set) of independent Poisson coordinates 1..=n, exact core with
/// the prefactor removed: [z^m] exp(sum_{j<=n} lambda_j z^j). Exposed for
/// cross-checks between the enumeration and series routes.
pub fn level_mass_exact_core(rates: &RateSequence, n: usize, m: usize) -> Rat {
    level_coeffs_exact(rates, 0, n, m)[m].clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::rat;
    use crate::model::AssemblySpec;
    use num_traits::One;

    #[test]
    fn enumerate_level_counts_are_partition_numbers() {
        let p = [1usize, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42];
        for (n, &pn) in p.iter().enumerate() {
            let v = enumerate_level(n).unwrap();
            assert_eq!(v.len(), pn, "p({n})");
            for s in &v {
                assert_eq!(s.level(), n);
                assert_eq!(s.dim(), n);
            }
        }
        assert_eq!(enumerate_level(1).unwrap(), vec![ComponentVector::new(vec![1])]);
        assert_eq!(enumerate_level(0).unwrap(), vec![ComponentVector::new(vec![])]);
        assert!(enumerate_level(41).is_err());
    }

    #[test]
    fn extension_contains_u_and_the_documented_element() {
        let u = vec![
            ComponentVector::new(vec![0, 2, 0]),
            ComponentVector::new(vec![1, 1, 0]),
            ComponentVector::new(vec![0, 1, 0]),
        ];
        let v = extension_set(&u).unwrap();
        for t in &u {
            assert!(v.contains(t));
        }
        assert!(v.contains(&ComponentVector::new(vec![1, 2, 0])));

        let single = vec![ComponentVector::new(vec![0, 1])];
        let v = extension_set(&single).unwrap();
        assert_eq!(v.len(), 1);
        assert!(v.contains(&single[0]));
    }

    #[test]
    fn extension_is_monotone() {
        let small = vec![
            ComponentVector::new(vec![1, 0, 0]),
            ComponentVector::new(vec![0, 1, 0]),
        ];
        let mut big = small.clone();
        big.push(ComponentVector::new(vec![1, 1, 0]));
        let vs = extension_set(&small).unwrap();
        let vb = extension_set(&big).unwrap();
        for s in &vs {
            assert!(vb.contains(s));
        }
    }

    #[test]
    fn extension_rejects_mixed_dimensions() {
        let u = vec![
            ComponentVector::new(vec![1, 0]),
            ComponentVector::new(vec![1, 0, 0]),
        ];
        assert!(extension_set(&u).is_err());
    }

    #[test]
    fn ruzsa_constants_for_permutations_n6() {
        let spec = AssemblySpec::permutations(8);
        let rates = spec.derive_rates(6).unwrap();
        let pmf = poisson_pmf_table(&rates, 12);
        let k = ruzsa_constants(&pmf, 6, 1.0).unwrap();
        // min_j e^{-1/j} is at j = 1
        assert!((k.c2 - (-1.0f64).exp()).abs() < 1e-12);
        // C2: the divisor-pair sums peak at m = 2 with value exactly 2
        assert!((k.c2_const - 2.0).abs() < 1e-9);
        // theta = 1 collapses the level-mass weights, and all permutation
        // level masses are equal, so C1 = 1
        assert!((k.c1_const - 1.0).abs() < 1e-9);
        // c3 = 6 e^{-H_6}
        let h6: f64 = (1..=6).map(|j| 1.0 / j as f64).sum();
        assert!((k.c3 - 6.0 * (-h6).exp()).abs() < 1e-9);
        assert!(k.theta == 1.0);
    }

    #[test]
    fn ruzsa_constants_reject_bad_theta() {
        let spec = AssemblySpec::permutations(8);
        let rates = spec.derive_rates(4).unwrap();
        let pmf = poisson_pmf_table(&rates, 8);
        assert!(ruzsa_constants(&pmf, 4, 0.0).is_err());
        assert!(ruzsa_constants(&pmf, 4, 1.5).is_err());
    }

    #[test]
    fn ruzsa_check_trivial_when_u_covers_the_level_set() {
        let spec = AssemblySpec::permutations(8);
        let n = 5;
        let rates = spec.derive_rates(n).unwrap();
        let u: Vec<_> = enumerate_level(n).unwrap();
        let rep = ruzsa_check(&rates, n, &u, 1.0).unwrap();
        assert!(rep.lhs.abs() < 1e-12);
        assert!(rep.pass);
    }

    #[test]
    fn ruzsa_theta_one_drops_the_tail_term() {
        let spec = AssemblySpec::ewens(rat(1, 2), 8).unwrap();
        let n = 4;
        let rates = spec.derive_rates(n).unwrap();
        let u = vec![ComponentVector::new(vec![1, 0, 1, 0])];
        let rep1 = ruzsa_check(&rates, n, &u, 1.0).unwrap();
        let k = &rep1.constants;
        let reconstructed = k.c_total * rep1.p_u_complement.1.powf(1.0);
        assert!((rep1.rhs - reconstructed).abs() < 1e-12);
        let rep_frac = ruzsa_check(&rates, n, &u, 0.5).unwrap();
        assert!(rep_frac.rhs > rep_frac.constants.c_total * rep_frac.p_u_complement.1.powf(0.5));
    }

    #[test]
    fn decay_exponent_values() {
        let e = decay_exponents(1.0).unwrap();
        assert!((e.c - (2f64.sqrt() - 1.0).powi(2)).abs() < 1e-15);
        assert!((e.c0 - (2.0 - 2f64.sqrt()) / 8.0).abs() < 1e-15);
        assert!((e.c1 - e.c0).abs() < 1e-15);
        // above d' = 3 the closed form switches branch
        let e = decay_exponents(5.0).unwrap();
        assert!((e.c - 2.0).abs() < 1e-15);
        assert!((e.c0 - 1.0 / 3.0).abs() < 1e-15);
        assert!((e.c1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(decay_exponents(0.0).is_err());
    }

    #[test]
    fn series_ratio_zero_at_r0_m_eq_n() {
        let d: Vec<Rat> = vec![Rat::one(); 20];
        let rep = series_ratio_check(&d, 20, 0, 20, 0.0, 0.25).unwrap();
        assert!(rep.ratio_minus_one.abs() < 1e-12);
    }

    #[test]
    fn series_ratio_regime_errors() {
        let d: Vec<Rat> = vec![Rat::one(); 20];
        assert!(series_ratio_check(&d, 20, 0, 21, 0.0, 0.25).is_err());
        assert!(series_ratio_check(&d, 20, 10, 20, 0.0, 0.25).is_err());
        assert!(series_ratio_check(&d, 20, 0, 20, 0.0, 0.01).is_err());
    }

    #[test]
    fn level_masses_match_series_route() {
        let spec = AssemblySpec::ewens(rat(3, 2), 12).unwrap();
        let n = 7;
        let rates = spec.derive_rates(n).unwrap();
        let pmf = poisson_pmf_table(&rates, 16);
        for m in 0..=n {
            let by_enum = level_mass(&pmf, n, m).unwrap();
            let core = level_mass_exact_core(&rates, n, m);
            let by_series = to_f64(&core) * (-rates.lambda_sum_float(0, n)).exp();
            assert!(
                (by_enum - by_series).abs() < 1e-12,
                "m={m}: {by_enum} vs {by_series}"
            );
        }
    }
}
