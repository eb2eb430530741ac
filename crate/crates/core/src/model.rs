//! Assembly classes, their Poisson rates and exact weighted laws.
//!
//! An assembly class is described by the structure counts m_j (how many
//! internal structures a size-j component can carry), positive component
//! weights w_j and a scale u > 0. The induced measure on component vectors
//! equals the law of independent Poisson counts xi_j with
//! E xi_j = u^j m_j w_j / j!, conditioned on the total size; the scale u
//! drops out of every conditional quantity, which the tests exercise.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::backend::{factorial, rat_int, to_f64, Rat};
use crate::error::{Error, Result};
use crate::series::{exp_series, PowerSeries};

/// Structure counts per component size.
#[derive(Debug, Clone, PartialEq)]
pub enum StructureCounts {
    /// m_j = (j-1)!  (cycles: permutations, Ewens)
    FactorialCycles,
    /// m_j = 1  (blocks: set partitions)
    One,
    /// explicit table, 1-based via index j-1
    Explicit(Vec<BigInt>),
}

/// Component weights per size.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    Const(Rat),
    Explicit(Vec<Rat>),
}

/// A named assembly family: (m_j, w_j, u) up to size n_max.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblySpec {
    name: String,
    m: StructureCounts,
    w: Weights,
    u: Rat,
    n_max: usize,
}

impl AssemblySpec {
    /// Uniform random permutations: m_j = (j-1)!, w_j = 1, u = 1.
    pub fn permutations(n_max: usize) -> Self {
        AssemblySpec {
            name: "permutations".into(),
            m: StructureCounts::FactorialCycles,
            w: Weights::Const(Rat::one()),
            u: Rat::one(),
            n_max,
        }
    }

    /// Ewens measure with parameter theta > 0 on permutations.
    pub fn ewens(theta: Rat, n_max: usize) -> Result<Self> {
        if !theta.is_positive() {
            return Err(Error::argument("ewens parameter must be positive"));
        }
        Ok(AssemblySpec {
            name: format!("ewens({theta})"),
            m: StructureCounts::FactorialCycles,
            w: Weights::Const(theta),
            u: Rat::one(),
            n_max,
        })
    }

    /// Set partitions: m_j = 1, w_j = 1, u = 1.
    pub fn set_partitions(n_max: usize) -> Self {
        AssemblySpec {
            name: "set-partitions".into(),
            m: StructureCounts::One,
            w: Weights::Const(Rat::one()),
            u: Rat::one(),
            n_max,
        }
    }

    /// Fully explicit family. Tables are 1-based (index j-1 holds size j);
    /// both must cover 1..=n_max.
    pub fn explicit(
        name: impl Into<String>,
        m: Vec<BigInt>,
        w: Vec<Rat>,
        u: Rat,
        n_max: usize,
    ) -> Result<Self> {
        if m.len() < n_max || w.len() < n_max {
            return Err(Error::argument(format!(
                "explicit tables must cover sizes 1..={n_max}"
            )));
        }
        if m.iter().take(n_max).any(|v| v < &BigInt::one()) {
            return Err(Error::argument("structure counts m_j must satisfy m_j >= 1"));
        }
        if w.iter().take(n_max).any(|v| !v.is_positive()) {
            return Err(Error::argument("weights w_j must be positive"));
        }
        if !u.is_positive() {
            return Err(Error::argument("scale u must be positive"));
        }
        Ok(AssemblySpec {
            name: name.into(),
            m: StructureCounts::Explicit(m),
            w: Weights::Explicit(w),
            u,
            n_max,
        })
    }

    /// Family whose Poisson rates equal the given values at u = 1
    /// (m_j = 1, w_j = lambda_j * j!). Used to exercise arbitrary weakly
    /// logarithmic rate tables through the same machinery as the presets.
    pub fn from_rates(name: impl Into<String>, lambdas: &[Rat]) -> Result<Self> {
        let n_max = lambdas.len();
        let mut w = Vec::with_capacity(n_max);
        let mut fact = BigInt::one();
        for (idx, lam) in lambdas.iter().enumerate() {
            let j = idx + 1;
            fact *= BigInt::from(j);
            if !lam.is_positive() {
                return Err(Error::argument("rates must be positive"));
            }
            w.push(lam * Rat::from_integer(fact.clone()));
        }
        AssemblySpec::explicit(name, vec![BigInt::one(); n_max], w, Rat::one(), n_max)
    }

    /// Same family with a different Poissonization scale.
    pub fn with_scale(mut self, u: Rat) -> Result<Self> {
        if !u.is_positive() {
            return Err(Error::argument("scale u must be positive"));
        }
        self.u = u;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn scale(&self) -> &Rat {
        &self.u
    }

    /// theta when the family is Ewens-like (m_j = (j-1)!, constant weight):
    /// the conditional laws then coincide with the Ewens sampling formula,
    /// which unlocks the linear-time sampler.
    pub fn ewens_theta(&self) -> Option<Rat> {
        match (&self.m, &self.w) {
            (StructureCounts::FactorialCycles, Weights::Const(theta)) => Some(theta.clone()),
            _ => None,
        }
    }

    /// m_j / j! as an exact rational, without materialising factorials for
    /// the closed-form families.
    pub fn m_over_factorial(&self, j: usize) -> Rat {
        debug_assert!(j >= 1);
        match &self.m {
            StructureCounts::FactorialCycles => Rat::new(BigInt::one(), BigInt::from(j)),
            StructureCounts::One => Rat::new(BigInt::one(), factorial(j)),
            StructureCounts::Explicit(t) => Rat::new(t[j - 1].clone(), factorial(j)),
        }
    }

    pub fn weight_at(&self, j: usize) -> Rat {
        debug_assert!(j >= 1);
        match &self.w {
            Weights::Const(c) => c.clone(),
            Weights::Explicit(t) => t[j - 1].clone(),
        }
    }

    /// Poisson rates lambda_j = u^j m_j w_j / j! for 1 <= j <= n, exact.
    pub fn derive_rates(&self, n: usize) -> Result<RateSequence> {
        if n > self.n_max {
            return Err(Error::Bounds {
                index: n,
                limit: self.n_max,
            });
        }
        let mut exact = Vec::with_capacity(n);
        let mut u_pow = Rat::one();
        for j in 1..=n {
            u_pow = u_pow * self.u.clone();
            let lam = u_pow.clone() * self.m_over_factorial(j) * self.weight_at(j);
            exact.push(lam);
        }
        Ok(RateSequence::from_exact(exact))
    }

    /// EGF coefficients m_j w_j / j! for j = 1..=n (independent of u).
    fn egf_coeffs(&self, n: usize) -> Vec<Rat> {
        let mut g = vec![Rat::zero(); n + 1];
        for (j, slot) in g.iter_mut().enumerate().skip(1) {
            *slot = self.m_over_factorial(j) * self.weight_at(j);
        }
        g
    }

    /// Canonical text form, used for reproducibility hashes in outputs.
    pub fn canonical_string(&self) -> String {
        use std::fmt::Write;
        let mut s = format!("name={};u={};n_max={};", self.name, self.u, self.n_max);
        match &self.m {
            StructureCounts::FactorialCycles => s.push_str("m=(j-1)!;"),
            StructureCounts::One => s.push_str("m=1;"),
            StructureCounts::Explicit(t) => {
                s.push_str("m=");
                for v in t {
                    let _ = write!(s, "{v},");
                }
                s.push(';');
            }
        }
        match &self.w {
            Weights::Const(c) => {
                let _ = write!(s, "w={c}");
            }
            Weights::Explicit(t) => {
                s.push_str("w=");
                for v in t {
                    let _ = write!(s, "{v},");
                }
            }
        }
        s
    }
}

/// The Poisson parameters lambda_1..lambda_n of a family, carried in both
/// backends. The floating view is derived from the exact one; the two agree
/// to within 1e-12 relative by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct RateSequence {
    exact: Vec<Rat>,
    float: Vec<f64>,
}

impl RateSequence {
    pub fn from_exact(exact: Vec<Rat>) -> Self {
        assert!(
            exact.iter().all(|l| l.is_positive()),
            "rates must be positive"
        );
        let float = exact.iter().map(to_f64).collect();
        RateSequence { exact, float }
    }

    pub fn len(&self) -> usize {
        self.exact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exact.is_empty()
    }

    /// lambda_j, 1-based.
    pub fn exact(&self, j: usize) -> &Rat {
        &self.exact[j - 1]
    }

    /// lambda_j as f64, 1-based.
    pub fn float(&self, j: usize) -> f64 {
        self.float[j - 1]
    }

    pub fn exact_slice(&self) -> &[Rat] {
        &self.exact
    }

    /// sum of lambda_j over (a, b], exact.
    pub fn lambda_sum_exact(&self, a: usize, b: usize) -> Rat {
        self.exact[a..b].iter().cloned().sum()
    }

    /// sum of lambda_j over (a, b], floating.
    pub fn lambda_sum_float(&self, a: usize, b: usize) -> f64 {
        self.float[a..b].iter().sum()
    }

    /// New rates with lambda_j replaced by u^j * lambda_j.
    pub fn rescaled(&self, u: &Rat) -> Result<RateSequence> {
        if !u.is_positive() {
            return Err(Error::argument("scale u must be positive"));
        }
        let mut u_pow = Rat::one();
        let exact = self
            .exact
            .iter()
            .map(|l| {
                u_pow = u_pow.clone() * u.clone();
                l * u_pow.clone()
            })
            .collect();
        Ok(RateSequence::from_exact(exact))
    }

    /// Truncated copy with the first n rates.
    pub fn truncated(&self, n: usize) -> RateSequence {
        RateSequence {
            exact: self.exact[..n].to_vec(),
            float: self.float[..n].to_vec(),
        }
    }
}

/// Which side of the weakly logarithmic band failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSide {
    Lower,
    Upper,
}

/// Outcome of [`check_weakly_logarithmic`].
#[derive(Debug, Clone, PartialEq)]
pub enum WeaklyLogVerdict {
    Pass,
    /// Smallest violating index and the bound it broke.
    Fail { j: usize, side: BandSide },
}

/// Checks theta_lo / j <= lambda_j <= theta_hi / j for every j, exactly.
pub fn check_weakly_logarithmic(
    rates: &RateSequence,
    theta_lo: &Rat,
    theta_hi: &Rat,
) -> Result<WeaklyLogVerdict> {
    if !theta_lo.is_positive() || theta_lo > theta_hi {
        return Err(Error::argument(
            "need 0 < theta_lo <= theta_hi for the weakly logarithmic band",
        ));
    }
    for j in 1..=rates.len() {
        let jq = rat_int(j as i64);
        let lo = theta_lo / jq.clone();
        let hi = theta_hi / jq;
        let lam = rates.exact(j);
        if lam < &lo {
            return Ok(WeaklyLogVerdict::Fail {
                j,
                side: BandSide::Lower,
            });
        }
        if lam > &hi {
            return Ok(WeaklyLogVerdict::Fail {
                j,
                side: BandSide::Upper,
            });
        }
    }
    Ok(WeaklyLogVerdict::Pass)
}

/// A component vector s with s_j components of size j (index j-1).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ComponentVector {
    s: Vec<u32>,
}

impl ComponentVector {
    pub fn new(s: Vec<u32>) -> Self {
        ComponentVector { s }
    }

    pub fn dim(&self) -> usize {
        self.s.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.s
    }

    /// s_j, 1-based; zero beyond the stored dimension.
    pub fn count(&self, j: usize) -> u32 {
        self.s.get(j - 1).copied().unwrap_or(0)
    }

    /// The size statistic l(s) = sum_j j * s_j.
    pub fn level(&self) -> usize {
        self.s
            .iter()
            .enumerate()
            .map(|(idx, &c)| (idx + 1) * c as usize)
            .sum()
    }

    /// Level restricted to the first r coordinates.
    pub fn level_prefix(&self, r: usize) -> usize {
        self.s
            .iter()
            .take(r)
            .enumerate()
            .map(|(idx, &c)| (idx + 1) * c as usize)
            .sum()
    }
}

impl std::fmt::Display for ComponentVector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.s.iter().map(|c| c.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Exact weighted count of assemblies with the given component vector:
/// n! * prod_j (m_j w_j / j!)^{s_j} / s_j!, where n = l(s) must equal the
/// vector dimension.
pub fn structure_weight(spec: &AssemblySpec, s: &ComponentVector) -> Result<Rat> {
    let n = s.dim();
    let level = s.level();
    if level != n {
        return Err(Error::LevelMismatch { level, n });
    }
    if n > spec.n_max() {
        return Err(Error::Bounds {
            index: n,
            limit: spec.n_max(),
        });
    }
    let mut acc = Rat::from_integer(factorial(n));
    for j in 1..=n {
        let sj = s.count(j);
        if sj == 0 {
            continue;
        }
        let base = spec.m_over_factorial(j) * spec.weight_at(j);
        let mut pow = Rat::one();
        for _ in 0..sj {
            pow = pow * base.clone();
        }
        acc = acc * pow / Rat::from_integer(factorial(sj as usize));
    }
    Ok(acc)
}

/// Total weighted count W_n = n! [z^n] exp(sum m_j w_j z^j / j!), exact.
pub fn total_count(spec: &AssemblySpec, n: usize) -> Result<Rat> {
    if n > spec.n_max() {
        return Err(Error::Bounds {
            index: n,
            limit: spec.n_max(),
        });
    }
    let g = PowerSeries::from_coeffs(spec.egf_coeffs(n));
    let d = exp_series(&g, n)?;
    Ok(d.coeff(n) * Rat::from_integer(factorial(n)))
}

/// mu_n(s) = structure_weight / W_n, exact. The level-n probabilities sum
/// to one exactly in the rational backend.
pub fn exact_law(spec: &AssemblySpec, s: &ComponentVector) -> Result<Rat> {
    let w = structure_weight(spec, s)?;
    let total = total_count(spec, s.dim())?;
    Ok(w / total)
}

/// Unnormalised Poisson mass of a vector with the exponential prefactor
/// removed: prod_j lambda_j^{s_j} / s_j!.
pub fn poisson_core(rates: &RateSequence, s: &ComponentVector) -> Rat {
    let mut acc = Rat::one();
    for j in 1..=s.dim().min(rates.len()) {
        let sj = s.count(j);
        if sj == 0 {
            continue;
        }
        let lam = rates.exact(j);
        let mut pow = Rat::one();
        for _ in 0..sj {
            pow = pow * lam.clone();
        }
        acc = acc * pow / Rat::from_integer(factorial(sj as usize));
    }
    acc
}

/// P(xi = s | l(xi) = n), exact: the exponential prefactors cancel between
/// numerator and denominator, so the conditional law is a plain rational.
pub fn poisson_conditional_law(rates: &RateSequence, s: &ComponentVector) -> Result<Rat> {
    let n = s.dim();
    let level = s.level();
    if level != n {
        return Err(Error::LevelMismatch { level, n });
    }
    let denom_coeffs = crate::series::level_coeffs_exact(rates, 0, n, n);
    let denom = denom_coeffs[n].clone();
    if denom.is_zero() {
        return Err(Error::DegenerateConditioning);
    }
    Ok(poisson_core(rates, s) / denom)
}

/// Greatest common divisor helper exposed for the CLI's rational parsing.
pub fn gcd_i64(a: i64, b: i64) -> i64 {
    a.gcd(&b)
}
