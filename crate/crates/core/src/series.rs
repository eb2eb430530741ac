//! Power-series coefficient engine.
//!
//! Probabilities of weighted sums of independent Poisson variables reduce to
//! Taylor coefficients of exp of a polynomial, so this module is the
//! workhorse behind the exact conditional laws and the total-variation
//! computations. The exponential is computed through the derivative
//! recurrence n*D_n = sum_j j*g_j*D_{n-j}, which is exact in the rational
//! backend and numerically benign in the floating one (all terms are
//! nonnegative for rate inputs).

use num_traits::{FromPrimitive, One, Zero};

use crate::backend::{ln_rat, to_f64, Rat};
use crate::error::{Error, Result};
use crate::model::RateSequence;

/// Scalar types the series engine can run over.
pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + FromPrimitive
    + std::ops::Sub<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::AddAssign
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + FromPrimitive
        + std::ops::Sub<Output = T>
        + std::ops::Div<Output = T>
        + std::ops::AddAssign
{
}

/// A finite coefficient sequence c_0..c_N.
///
/// Arithmetic keeps every coefficient up to the stated degree bound; nothing
/// silently truncates below it.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSeries<T> {
    coeffs: Vec<T>,
}

impl<T: Coeff> PowerSeries<T> {
    /// Series from explicit coefficients (degree = len - 1).
    pub fn from_coeffs(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        PowerSeries { coeffs }
    }

    /// The zero series of the given degree.
    pub fn zero(degree: usize) -> Self {
        PowerSeries {
            coeffs: vec![T::zero(); degree + 1],
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient c_k, zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Cauchy product, truncated at `degree`.
    pub fn mul_truncated(&self, other: &Self, degree: usize) -> Self {
        let mut out = vec![T::zero(); degree + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > degree || a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if i + j > degree {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                out[i + j] += a.clone() * b.clone();
            }
        }
        PowerSeries { coeffs: out }
    }

    /// Coefficient-wise sum, truncated at `degree`.
    pub fn add_truncated(&self, other: &Self, degree: usize) -> Self {
        let mut out = vec![T::zero(); degree + 1];
        for (k, slot) in out.iter_mut().enumerate() {
            let mut v = self.coeff(k);
            v += other.coeff(k);
            *slot = v;
        }
        PowerSeries { coeffs: out }
    }
}

/// exp of a series with zero constant term, up to degree N.
///
/// Returns D with D_0 = 1 and n*D_n = sum_{1<=j<=n} j*g_j*D_{n-j}.
/// exp of a nonzero constant term is reserved for the floating backend,
/// where the prefactor is carried explicitly; here it is an error.
pub fn exp_series<T: Coeff>(g: &PowerSeries<T>, degree: usize) -> Result<PowerSeries<T>> {
    if !g.coeff(0).is_zero() {
        return Err(Error::argument(
            "exp_series requires zero constant term; carry exp(c_0) as an explicit prefactor",
        ));
    }
    let mut d = vec![T::zero(); degree + 1];
    d[0] = T::one();
    // j*g_j precomputed once; the recurrence is sequential in n.
    let jg: Vec<T> = (0..=degree.min(g.degree()))
        .map(|j| T::from_usize(j).unwrap() * g.coeff(j))
        .collect();
    for n in 1..=degree {
        let mut acc = T::zero();
        for j in 1..=n.min(jg.len() - 1) {
            if jg[j].is_zero() {
                continue;
            }
            acc += jg[j].clone() * d[n - j].clone();
        }
        d[n] = acc / T::from_usize(n).unwrap();
    }
    Ok(PowerSeries { coeffs: d })
}

/// Coefficients of exp(sum_{a<j<=b} lambda_j z^j) up to `degree`, exact.
///
/// These are the unnormalised masses of the level statistic over the index
/// range (a, b]: multiplying coefficient m by exp(-sum of the range rates)
/// gives P(sum_{a<j<=b} j*xi_j = m).
pub fn level_coeffs_exact(rates: &RateSequence, a: usize, b: usize, degree: usize) -> Vec<Rat> {
    assert!(a <= b && b <= rates.len());
    let mut g = vec![Rat::zero(); degree + 1];
    for j in (a + 1)..=b.min(degree) {
        g[j] = rates.exact(j).clone();
    }
    let series = exp_series(&PowerSeries::from_coeffs(g), degree).expect("zero constant term");
    series.coeffs
}

/// Floating-point variant of [`level_coeffs_exact`].
pub fn level_coeffs_float(rates: &RateSequence, a: usize, b: usize, degree: usize) -> Vec<f64> {
    assert!(a <= b && b <= rates.len());
    let mut g = vec![0.0f64; degree + 1];
    for j in (a + 1)..=b.min(degree) {
        g[j] = rates.float(j);
    }
    let series = exp_series(&PowerSeries::from_coeffs(g), degree).expect("zero constant term");
    series.coeffs
}

/// P(l_{ab}(xi) = m) for m = 0..=m_max, where l_{ab} = sum_{a<j<=b} j*xi_j.
///
/// An empty range returns the point mass at zero. The result is a valid
/// sub-probability sequence; the missing mass sits above m_max.
pub fn level_pmf(rates: &RateSequence, a: usize, b: usize, m_max: usize) -> Result<Vec<f64>> {
    if a > b || b > rates.len() {
        return Err(Error::argument(format!(
            "bad index range ({a}, {b}] for {} rates",
            rates.len()
        )));
    }
    let lambda_total: f64 = ((a + 1)..=b).map(|j| rates.float(j)).sum();
    let prefactor = (-lambda_total).exp();
    let coeffs = level_coeffs_float(rates, a, b, m_max);
    Ok(coeffs.into_iter().map(|c| c * prefactor).collect())
}

/// One row of [`coefficient_ratio_band`].
#[derive(Debug, Clone)]
pub struct BandRow {
    pub n: usize,
    /// n * D_n / D(1)
    pub ratio: f64,
    /// (n + 1) * D_n / D(1); the level-set normalisation, which is the
    /// quantity that stabilises inside a narrow band already at small n.
    pub normalized: f64,
}

/// Two-sided coefficient bound diagnostics: for D(z) = exp(sum d_j/j z^j)
/// with d_j = j*lambda_j, reports n*D_n/D(1) (and its (n+1) variant) for
/// each requested n. Under weakly logarithmic rates both stay inside a
/// constant band; callers assert the bounds.
pub fn coefficient_ratio_band(rates: &RateSequence, n_list: &[usize]) -> Result<Vec<BandRow>> {
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 || n > rates.len() {
            return Err(Error::Bounds {
                index: n,
                limit: rates.len(),
            });
        }
        // ln D(1) = sum of the first n rates; D_n from the float recurrence.
        let ln_d1: f64 = (1..=n).map(|j| rates.float(j)).sum();
        let coeffs = level_coeffs_float(rates, 0, n, n);
        let dn = coeffs[n];
        let ratio = (n as f64) * dn * (-ln_d1).exp();
        let normalized = ratio * (n as f64 + 1.0) / (n as f64);
        rows.push(BandRow {
            n,
            ratio,
            normalized,
        });
    }
    Ok(rows)
}

/// ln of a positive exact coefficient; used when the rational collapses to
/// zero in f64 but its logarithm is still wanted.
pub fn ln_coeff(c: &Rat) -> Option<f64> {
    use num_traits::Signed;
    if c.is_positive() {
        Some(ln_rat(c))
    } else {
        None
    }
}

/// Convenience: f64 view of exact coefficients.
pub fn coeffs_to_f64(cs: &[Rat]) -> Vec<f64> {
    cs.iter().map(to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{rat, rat_int};
    use crate::model::AssemblySpec;
    use num_traits::ToPrimitive;

    fn harmonic(n: usize) -> f64 {
        (1..=n).map(|j| 1.0 / j as f64).sum()
    }

    #[test]
    fn exp_of_zero_is_one() {
        let g = PowerSeries::from_coeffs(vec![Rat::zero(); 6]);
        let d = exp_series(&g, 5).unwrap();
        assert_eq!(d.coeff(0), Rat::one());
        for k in 1..=5 {
            assert!(d.coeff(k).is_zero());
        }
    }

    #[test]
    fn exp_rejects_nonzero_constant() {
        let g = PowerSeries::from_coeffs(vec![rat_int(1), rat_int(0)]);
        assert!(exp_series(&g, 1).is_err());
    }

    #[test]
    fn exp_of_geometric_log_is_all_ones() {
        // g_j = 1/j: exp(-log(1-z)) = sum z^n; truncation does not disturb
        // the coefficients up to the requested degree.
        let deg = 64;
        let mut g = vec![Rat::zero(); deg + 1];
        for (j, slot) in g.iter_mut().enumerate().skip(1) {
            *slot = rat(1, j as i64);
        }
        let d = exp_series(&PowerSeries::from_coeffs(g), deg).unwrap();
        for k in 0..=deg {
            assert_eq!(d.coeff(k), Rat::one(), "coefficient {k}");
        }
    }

    #[test]
    fn exp_of_linear_term_is_poisson_weights() {
        // g = lambda*z: D_n = lambda^n / n!
        let lambda = rat(3, 7);
        let deg = 24;
        let mut g = vec![Rat::zero(); deg + 1];
        g[1] = lambda.clone();
        let d = exp_series(&PowerSeries::from_coeffs(g), deg).unwrap();
        let mut expect = Rat::one();
        for n in 0..=deg {
            assert_eq!(d.coeff(n), expect, "coefficient {n}");
            expect = expect * lambda.clone() / rat_int((n + 1) as i64);
        }
    }

    #[test]
    fn exp_is_multiplicative_under_cauchy_product() {
        let deg = 48;
        let mut g = vec![Rat::zero(); deg + 1];
        let mut h = vec![Rat::zero(); deg + 1];
        for j in 1..=deg {
            g[j] = rat(1, j as i64);
            h[j] = rat(1, (j * j) as i64);
        }
        let g = PowerSeries::from_coeffs(g);
        let h = PowerSeries::from_coeffs(h);
        let lhs = exp_series(&g.add_truncated(&h, deg), deg).unwrap();
        let rhs = exp_series(&g, deg)
            .unwrap()
            .mul_truncated(&exp_series(&h, deg).unwrap(), deg);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn level_pmf_anchor_values() {
        let spec = AssemblySpec::permutations(64);
        let rates = spec.derive_rates(8).unwrap();
        // (0,2], m = 2: coefficient 1 times e^{-H_2}
        let pmf = level_pmf(&rates, 0, 2, 4).unwrap();
        assert!((pmf[2] - (-1.5f64).exp()).abs() < 1e-14);
        // (1,2]: l = 2*xi_2 is even, so mass at 1 vanishes
        let pmf = level_pmf(&rates, 1, 2, 4).unwrap();
        assert_eq!(pmf[1], 0.0);
        // m = 0 is always exp(-sum of range rates)
        let pmf = level_pmf(&rates, 2, 5, 0).unwrap();
        let lam: f64 = (3..=5).map(|j| 1.0 / j as f64).sum();
        assert!((pmf[0] - (-lam).exp()).abs() < 1e-14);
    }

    #[test]
    fn level_pmf_empty_range_is_point_mass() {
        let spec = AssemblySpec::permutations(8);
        let rates = spec.derive_rates(4).unwrap();
        let pmf = level_pmf(&rates, 3, 3, 3).unwrap();
        assert_eq!(pmf, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn level_pmf_sums_to_one_when_truncation_captures_the_level() {
        let spec = AssemblySpec::set_partitions(16);
        let rates = spec.derive_rates(6).unwrap();
        // l over (0,6] conditioned nowhere: total mass up to a generous cap
        let pmf = level_pmf(&rates, 0, 6, 400).unwrap();
        let total: f64 = pmf.iter().sum();
        assert!((total - 1.0).abs() < 1e-12, "total {total}");
    }

    #[test]
    fn band_single_rate_matches_closed_form() {
        // one-term series: ratio = d_1 * e^{-d_1}
        let spec = AssemblySpec::ewens(rat(7, 10), 4).unwrap();
        let rates = spec.derive_rates(1).unwrap();
        let d1 = rates.float(1);
        let rows = coefficient_ratio_band(&rates, &[1]).unwrap();
        assert!((rows[0].ratio - d1 * (-d1).exp()).abs() < 1e-14);
    }

    #[test]
    fn band_matches_harmonic_oracle_for_permutations() {
        let spec = AssemblySpec::permutations(512);
        let rates = spec.derive_rates(512).unwrap();
        let ns = [16usize, 64, 256, 512];
        let rows = coefficient_ratio_band(&rates, &ns).unwrap();
        for row in rows {
            let oracle = row.n as f64 * (-harmonic(row.n)).exp();
            assert!(
                (row.ratio - oracle).abs() < 1e-10,
                "n={} ratio={} oracle={}",
                row.n,
                row.ratio,
                oracle
            );
        }
    }

    #[test]
    fn exact_and_float_coeffs_agree() {
        let spec = AssemblySpec::ewens(rat(1, 2), 64).unwrap();
        let rates = spec.derive_rates(24).unwrap();
        let exact = level_coeffs_exact(&rates, 0, 24, 24);
        let float = level_coeffs_float(&rates, 0, 24, 24);
        for (e, f) in exact.iter().zip(&float) {
            let ef = e.to_f64().unwrap();
            assert!((ef - f).abs() <= 1e-12 * ef.abs().max(1.0));
        }
    }
}
