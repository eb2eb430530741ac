//! Random generation of component vectors under the conditioned measure.
//!
//! Three exact routes:
//! - rejection from the independent Poisson process (general rates),
//! - a sequential dynamic-programming sampler that conditions coordinate by
//!   coordinate (general rates, O(n^2) table),
//! - the Feller-coupling sampler for Ewens-like families (linear time),
//!   which makes the large-n experiments feasible.
//!
//! Randomness: ChaCha12, keyed from a 64-bit master seed expanded by
//! splitmix64, with the ChaCha stream index carrying the replica number.
//! The generator identity is pinned so that (seed, parameters) fully
//! determine every output.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::backend::{factorial, to_f64, Rat};
use crate::error::{Error, Result};
use crate::model::{AssemblySpec, ComponentVector, RateSequence};
use crate::series::level_coeffs_exact;
use num_traits::{One, Zero};

/// Deterministic stream derivation: master seed + purpose tag select the
/// key, the replica index selects the ChaCha stream.
pub fn stream_rng(seed: u64, tag: &str, replica: u64) -> ChaCha12Rng {
    let mut state = seed ^ fnv1a(tag);
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(replica);
    rng
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut h = 0xcbf29ce484222325u64;
    for b in s.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Poisson variate by inversion with sequential search; exact given exact
/// uniforms for the rate range used here. Rates above 10 are split into
/// independent halves first.
pub fn poisson_inversion<R: Rng>(lambda: f64, rng: &mut R) -> u32 {
    assert!(lambda >= 0.0 && lambda.is_finite());
    if lambda > 10.0 {
        let half = lambda / 2.0;
        return poisson_inversion(half, rng) + poisson_inversion(half, rng);
    }
    if lambda == 0.0 {
        return 0;
    }
    let u: f64 = rng.gen();
    let mut k = 0u32;
    let mut p = (-lambda).exp();
    let mut cum = p;
    while u >= cum {
        k += 1;
        p *= lambda / k as f64;
        cum += p;
        if k > 500 {
            break; // unreachable for lambda <= 10 with f64 uniforms
        }
    }
    k
}

/// Rejection sampler: draw the independent Poisson vector, accept when the
/// level hits n. Returns the vector and the attempt count.
pub fn sample_rejection(
    rates: &RateSequence,
    n: usize,
    rng: &mut ChaCha12Rng,
    max_attempts: u64,
) -> Result<(ComponentVector, u64)> {
    if max_attempts == 0 {
        return Err(Error::argument("max_attempts must be at least 1"));
    }
    if n == 0 || n > rates.len() {
        return Err(Error::Bounds {
            index: n,
            limit: rates.len(),
        });
    }
    for attempt in 1..=max_attempts {
        let mut s = vec![0u32; n];
        let mut level = 0usize;
        let mut overshoot = false;
        for j in 1..=n {
            let c = poisson_inversion(rates.float(j), rng);
            s[j - 1] = c;
            level += j * c as usize;
            if level > n {
                overshoot = true;
                break;
            }
        }
        if !overshoot && level == n {
            return Ok((ComponentVector::new(s), attempt));
        }
    }
    Err(Error::RetryBudget { max_attempts })
}

/// Sequential conditioned sampler backed by the table T_j(m) = P(l_j = m).
///
/// The table is immutable after construction and can be shared across
/// threads; each sampling stream owns its generator state.
#[derive(Debug, Clone)]
pub struct SequentialSampler {
    n: usize,
    lambdas: Vec<f64>,
    /// t[j][m] for 0 <= j <= n, 0 <= m <= n
    table: Vec<Vec<f64>>,
}

impl SequentialSampler {
    pub fn new(rates: &RateSequence, n: usize) -> Result<Self> {
        if n == 0 || n > rates.len() {
            return Err(Error::Bounds {
                index: n,
                limit: rates.len(),
            });
        }
        let lambdas: Vec<f64> = (1..=n).map(|j| rates.float(j)).collect();
        let mut table = vec![vec![0.0f64; n + 1]; n + 1];
        table[0][0] = 1.0;
        for j in 1..=n {
            let lam = lambdas[j - 1];
            let p0 = (-lam).exp();
            for m in 0..=n {
                let mut pmf = p0;
                let mut acc = pmf * table[j - 1][m];
                let mut s = 1usize;
                while s * j <= m {
                    pmf *= lam / s as f64;
                    acc += pmf * table[j - 1][m - s * j];
                    s += 1;
                }
                table[j][m] = acc;
            }
        }
        Ok(SequentialSampler { n, lambdas, table })
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> ComponentVector {
        let n = self.n;
        let mut s = vec![0u32; n];
        let mut m = n;
        for j in (2..=n).rev() {
            let lam = self.lambdas[j - 1];
            let denom = self.table[j][m];
            let u: f64 = rng.gen();
            let target = u * denom;
            let mut pmf = (-lam).exp();
            let mut acc = pmf * self.table[j - 1][m];
            let mut chosen = 0usize;
            let mut k = 0usize;
            while acc < target && (k + 1) * j <= m {
                k += 1;
                pmf *= lam / k as f64;
                acc += pmf * self.table[j - 1][m - k * j];
                chosen = k;
            }
            // guard against float tail: fall back to the last reachable
            // count with positive continuation mass
            if acc < target {
                let mut k2 = m / j;
                while k2 > 0 && self.table[j - 1][m - k2 * j] <= 0.0 {
                    k2 -= 1;
                }
                chosen = k2;
            }
            s[j - 1] = chosen as u32;
            m -= j * chosen;
        }
        // the first coordinate absorbs the remaining level exactly
        s[0] = m as u32;
        ComponentVector::new(s)
    }
}

/// Exact law of the sequential sampler, as the product of its per-step
/// conditionals in rational arithmetic. Telescopes to the conditioned
/// Poisson law; the tests check the product against the direct route.
pub fn sampler_law(rates: &RateSequence, n: usize, s: &ComponentVector) -> Result<Rat> {
    if n == 0 || n > rates.len() {
        return Err(Error::Bounds {
            index: n,
            limit: rates.len(),
        });
    }
    if n > 64 {
        return Err(Error::CostGuard(
            "sampler_law builds n rational tables; capped at n = 64".into(),
        ));
    }
    let level = s.level();
    if level != n || s.dim() != n {
        return Err(Error::LevelMismatch { level, n });
    }
    // t_j = coefficients of exp(sum_{i<=j} lambda_i z^i) up to degree n
    let tables: Vec<Vec<Rat>> = (0..=n)
        .map(|j| level_coeffs_exact(rates, 0, j, n))
        .collect();
    let mut law = Rat::one();
    let mut m = n;
    for j in (1..=n).rev() {
        let c = s.count(j) as usize;
        let lam = rates.exact(j);
        let mut pmf_core = Rat::one(); // lambda_j^c / c!
        for _ in 0..c {
            pmf_core = pmf_core * lam.clone();
        }
        pmf_core = pmf_core / Rat::from_integer(factorial(c));
        let denom = tables[j][m].clone();
        if denom.is_zero() {
            return Err(Error::DegenerateConditioning);
        }
        let next = tables[j - 1][m - j * c].clone();
        law = law * pmf_core * next / denom;
        m -= j * c;
    }
    Ok(law)
}

/// Linear-time exact sampler for Ewens-like families via the Feller
/// coupling: independent Bernoulli(theta/(theta+i-1)) indicators, spacings
/// between ones giving the component counts.
#[derive(Debug, Clone, Copy)]
pub struct EwensSampler {
    theta: f64,
    n: usize,
}

impl EwensSampler {
    pub fn new(theta: f64, n: usize) -> Result<Self> {
        if !(theta > 0.0) || n == 0 {
            return Err(Error::argument("need theta > 0 and n >= 1"));
        }
        Ok(EwensSampler { theta, n })
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> ComponentVector {
        let n = self.n;
        let mut s = vec![0u32; n];
        let mut last_one = 1usize; // B_1 = 1 with probability theta/theta
        for i in 2..=n {
            let p = self.theta / (self.theta + (i as f64 - 1.0));
            if rng.gen::<f64>() < p {
                s[i - 1 - last_one] += 1; // spacing i - last_one
                last_one = i;
            }
        }
        s[n - last_one] += 1; // closing spacing (n + 1) - last_one
        ComponentVector::new(s)
    }
}

/// Sampler facade: Ewens-like specs get the linear-time coupling, anything
/// else the DP sampler (bounded table size).
#[derive(Debug, Clone)]
pub enum ComponentSampler {
    Ewens(EwensSampler),
    Sequential(SequentialSampler),
}

impl ComponentSampler {
    pub fn for_spec(spec: &AssemblySpec, n: usize) -> Result<Self> {
        if let Some(theta) = spec.ewens_theta() {
            return Ok(ComponentSampler::Ewens(EwensSampler::new(to_f64(&theta), n)?));
        }
        if n > 4096 {
            return Err(Error::CostGuard(format!(
                "sequential sampler table is O(n^2); n = {n} exceeds 4096 \
                 and the family is not Ewens-like"
            )));
        }
        let rates = spec.derive_rates(n)?;
        Ok(ComponentSampler::Sequential(SequentialSampler::new(
            &rates, n,
        )?))
    }

    pub fn sample(&self, rng: &mut ChaCha12Rng) -> ComponentVector {
        match self {
            ComponentSampler::Ewens(s) => s.sample(rng),
            ComponentSampler::Sequential(s) => s.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{rat, rat_int};
    use crate::model::exact_law;
    use crate::verify::enumerate_level;
    use std::collections::HashMap;

    #[test]
    fn stream_rng_is_deterministic_and_stream_separated() {
        let mut a = stream_rng(7, "test", 0);
        let mut b = stream_rng(7, "test", 0);
        let mut c = stream_rng(7, "test", 1);
        let xs: Vec<u64> = (0..4).map(|_| a.gen()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.gen()).collect();
        let zs: Vec<u64> = (0..4).map(|_| c.gen()).collect();
        assert_eq!(xs, ys);
        assert_ne!(xs, zs);
    }

    #[test]
    fn poisson_inversion_moments() {
        let mut rng = stream_rng(11, "poisson", 0);
        let lam = 3.25;
        let draws: Vec<u32> = (0..20000).map(|_| poisson_inversion(lam, &mut rng)).collect();
        let mean = draws.iter().map(|&x| x as f64).sum::<f64>() / draws.len() as f64;
        assert!((mean - lam).abs() < 0.06, "mean {mean}");
        // splitting path
        let big: Vec<u32> = (0..20000).map(|_| poisson_inversion(24.0, &mut rng)).collect();
        let mean = big.iter().map(|&x| x as f64).sum::<f64>() / big.len() as f64;
        assert!((mean - 24.0).abs() < 0.3, "mean {mean}");
    }

    #[test]
    fn rejection_sampler_levels_and_determinism() {
        let spec = AssemblySpec::permutations(16);
        let rates = spec.derive_rates(10).unwrap();
        let mut rng = stream_rng(3, "rej", 0);
        let (v, attempts) = sample_rejection(&rates, 10, &mut rng, 100_000).unwrap();
        assert_eq!(v.level(), 10);
        let mut rng2 = stream_rng(3, "rej", 0);
        let (v2, attempts2) = sample_rejection(&rates, 10, &mut rng2, 100_000).unwrap();
        assert_eq!(v, v2);
        assert_eq!(attempts, attempts2);
    }

    #[test]
    fn rejection_n1_returns_singleton() {
        let rates = RateSequence::from_exact(vec![Rat::one()]);
        let mut rng = stream_rng(5, "rej1", 0);
        let (v, _) = sample_rejection(&rates, 1, &mut rng, 10_000).unwrap();
        assert_eq!(v, ComponentVector::new(vec![1]));
    }

    #[test]
    fn rejection_budget_error() {
        let spec = AssemblySpec::permutations(64);
        let rates = spec.derive_rates(40).unwrap();
        let mut rng = stream_rng(5, "rej-budget", 0);
        assert!(matches!(
            sample_rejection(&rates, 40, &mut rng, 1),
            Err(Error::RetryBudget { max_attempts: 1 })
        ));
    }

    #[test]
    fn sequential_always_hits_the_level() {
        let spec = AssemblySpec::set_partitions(32);
        let rates = spec.derive_rates(12).unwrap();
        let sampler = SequentialSampler::new(&rates, 12).unwrap();
        let mut rng = stream_rng(9, "seq", 0);
        for _ in 0..500 {
            assert_eq!(sampler.sample(&mut rng).level(), 12);
        }
    }

    #[test]
    fn sequential_matches_exact_law_frequencies() {
        let spec = AssemblySpec::permutations(8);
        let n = 3;
        let rates = spec.derive_rates(n).unwrap();
        let sampler = SequentialSampler::new(&rates, n).unwrap();
        let mut rng = stream_rng(17, "seq-freq", 0);
        let draws = 40_000usize;
        let mut counts: HashMap<ComponentVector, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(sampler.sample(&mut rng)).or_default() += 1;
        }
        for s in enumerate_level(n).unwrap() {
            let p = to_f64(&exact_law(&spec, &s).unwrap());
            let observed = *counts.get(&s).unwrap_or(&0) as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!(
                (observed - p).abs() < 4.0 * sigma,
                "type {s}: observed {observed}, expected {p}"
            );
        }
    }

    #[test]
    fn ewens_coupling_matches_exact_law_frequencies() {
        let spec = AssemblySpec::ewens(rat_int(2), 8).unwrap();
        let n = 4;
        let sampler = EwensSampler::new(2.0, n).unwrap();
        let mut rng = stream_rng(23, "feller", 0);
        let draws = 40_000usize;
        let mut counts: HashMap<ComponentVector, usize> = HashMap::new();
        for _ in 0..draws {
            let v = sampler.sample(&mut rng);
            assert_eq!(v.level(), n);
            *counts.entry(v).or_default() += 1;
        }
        for s in enumerate_level(n).unwrap() {
            let p = to_f64(&exact_law(&spec, &s).unwrap());
            let observed = *counts.get(&s).unwrap_or(&0) as f64 / draws as f64;
            let sigma = (p * (1.0 - p) / draws as f64).sqrt();
            assert!(
                (observed - p).abs() < 4.0 * sigma,
                "type {s}: observed {observed}, expected {p}"
            );
        }
    }

    #[test]
    fn sampler_law_examples() {
        let spec = AssemblySpec::permutations(8);
        let rates = spec.derive_rates(3).unwrap();
        let p = sampler_law(&rates, 3, &ComponentVector::new(vec![1, 1, 0])).unwrap();
        assert_eq!(p, rat(1, 2));
        assert!(matches!(
            sampler_law(&rates, 3, &ComponentVector::new(vec![0, 1, 0])),
            Err(Error::LevelMismatch { level: 2, n: 3 })
        ));
    }

    #[test]
    fn sampler_law_telescopes_to_exact_law() {
        for spec in [
            AssemblySpec::permutations(8),
            AssemblySpec::set_partitions(8),
            AssemblySpec::ewens(rat(1, 2), 8).unwrap(),
        ] {
            for n in 1..=6 {
                let rates = spec.derive_rates(n).unwrap();
                let mut total = Rat::zero();
                for s in enumerate_level(n).unwrap() {
                    let a = sampler_law(&rates, n, &s).unwrap();
                    let b = exact_law(&spec, &s).unwrap();
                    assert_eq!(a, b, "{} n={n} s={s}", spec.name());
                    total += a;
                }
                assert_eq!(total, Rat::one());
            }
        }
    }

    #[test]
    fn facade_picks_the_linear_sampler_for_ewens() {
        let spec = AssemblySpec::ewens(rat_int(1), 1 << 20).unwrap();
        let sampler = ComponentSampler::for_spec(&spec, 100_000).unwrap();
        assert!(matches!(sampler, ComponentSampler::Ewens(_)));
        let mut rng = stream_rng(1, "facade", 0);
        assert_eq!(sampler.sample(&mut rng).level(), 100_000);
    }
}
