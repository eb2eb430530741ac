//! Seeded Monte Carlo experiments: cluster diagnostics of the polygonal
//! processes against the Strassen set, and empirical upper/lower-class
//! exceedance probabilities.
//!
//! Replicas run concurrently on splittable ChaCha streams; summaries are
//! merged in replica order, so a (seed, parameters) pair fully determines
//! every number in the output.

use rayon::prelude::*;

use crate::backend::iterated_log;
use crate::error::{Error, Result};
use crate::model::AssemblySpec;
use crate::sampler::{stream_rng, ComponentSampler};

use super::path::{PolygonalPath, ProcessForm};
use super::strassen::strassen_distance;
use super::{AdditiveFunction, CenteringTable};

/// Tuning knobs for [`lil_experiment`].
#[derive(Debug, Clone, Copy)]
pub struct LilOptions {
    pub form: ProcessForm,
    /// Floor applied to log log B(m) when normalising: at desk-scale sizes
    /// the plain iterated logarithm of B is not yet positive, and the floor
    /// keeps the diagnostic defined there (it blows the paths up, which is
    /// exactly what the pre-asymptotic regime looks like).
    pub ll_floor: f64,
    /// Number of log-spaced checkpoints m in [n1, n].
    pub grid_points: usize,
    /// Paths are thinned to at most this many breakpoints before the
    /// distance computation.
    pub max_path_points: usize,
    /// Bisection tolerance for each distance-to-K evaluation.
    pub strassen_tol: f64,
    /// Multiplicative slack on the cluster-set diagnostics.
    pub cluster_slack: f64,
}

impl Default for LilOptions {
    fn default() -> Self {
        LilOptions {
            form: ProcessForm::Indicator,
            ll_floor: 1e-3,
            grid_points: 12,
            max_path_points: 512,
            strassen_tol: 5e-3,
            cluster_slack: 1.1,
        }
    }
}

/// Per-replica and pooled outputs of the iterated-logarithm experiment.
#[derive(Debug, Clone)]
pub struct LilSummary {
    pub n: usize,
    pub n1: usize,
    pub replicas: usize,
    pub seed: u64,
    pub m_grid: Vec<usize>,
    /// max over the m-grid of rho(U_m, K), one entry per replica
    pub max_dist: Vec<f64>,
    pub median_max_dist: f64,
    /// U_m(1) pooled over replicas and grid points
    pub endpoints: Vec<f64>,
    /// (U_m(1/2), U_m(1)) pairs, pooled
    pub pairs: Vec<(f64, f64)>,
    /// fraction of endpoints outside [-slack, slack]
    pub endpoint_outside_frac: f64,
    /// fraction of pairs outside u^2 + (v-u)^2 <= slack^2 / 2
    pub pair_outside_frac: f64,
    /// max_j |a_j| sqrt(L_2 B(j)) / B(j): the growth condition diagnostic
    pub growth_condition_sup: f64,
}

struct ReplicaOutcome {
    max_dist: f64,
    endpoints: Vec<f64>,
    pairs: Vec<(f64, f64)>,
}

fn log_spaced_grid(n1: usize, n: usize, points: usize) -> Vec<usize> {
    let mut grid: Vec<usize> = (0..points)
        .map(|k| {
            let f = k as f64 / (points.max(2) - 1) as f64;
            ((n1 as f64) * ((n as f64) / (n1 as f64)).powf(f)).round() as usize
        })
        .collect();
    grid.push(n);
    grid.sort_unstable();
    grid.dedup();
    grid.retain(|&m| m >= n1.max(1) && m <= n);
    grid
}

fn beta_floored(b2: f64, ll_floor: f64) -> Option<f64> {
    if b2 <= 0.0 {
        return None;
    }
    let b = b2.sqrt();
    let ln_b = b.ln();
    let ll = if ln_b <= 0.0 { ll_floor } else { ln_b.ln().max(ll_floor) };
    Some(b * (2.0 * ll).sqrt())
}

/// Thinned normalised process at checkpoint m from precomputed prefix
/// values. Returns None when B^2(m) = 0 or no index contributes.
fn thinned_process(
    table: &CenteringTable,
    prefix: &[f64],
    m: usize,
    opts: &LilOptions,
) -> Option<PolygonalPath> {
    let b2_m = table.b2_prefix[m];
    let beta = beta_floored(b2_m, opts.ll_floor)?;
    let contributing: Vec<usize> = (1..=m).filter(|&j| table.a[j] != 0.0).collect();
    if contributing.is_empty() {
        return None;
    }
    let stride = contributing.len().div_ceil(opts.max_path_points);
    let mut ts = vec![0.0f64];
    let mut ys = vec![0.0f64];
    for (k, &j) in contributing.iter().enumerate() {
        if k % stride != 0 && k + 1 != contributing.len() {
            continue;
        }
        let t = table.b2_prefix[j] / b2_m;
        if t <= *ts.last().unwrap() {
            continue;
        }
        ts.push(t);
        ys.push((prefix[j] - table.a_prefix[j]) / beta);
    }
    if (ts.last().unwrap() - 1.0).abs() > 1e-12 {
        *ts.last_mut().unwrap() = 1.0;
    }
    if ts.len() < 2 {
        return None;
    }
    PolygonalPath::new(ts, ys).ok()
}

fn form_prefix(
    h: &AdditiveFunction,
    table: &CenteringTable,
    s: &crate::model::ComponentVector,
    n: usize,
    form: ProcessForm,
) -> Vec<f64> {
    let mut prefix = vec![0.0f64; n + 1];
    for j in 1..=n {
        let inc = match form {
            ProcessForm::Indicator => {
                if s.count(j) >= 1 {
                    table.a[j]
                } else {
                    0.0
                }
            }
            ProcessForm::Raw => h.eval(j, s.count(j)),
        };
        prefix[j] = prefix[j - 1] + inc;
    }
    prefix
}

/// Rebuilds the process U_m of one replica of [`lil_experiment`]
/// deterministically (same seed and stream layout). Intended for plotting.
pub fn replica_process(
    spec: &AssemblySpec,
    h: &AdditiveFunction,
    n: usize,
    m: usize,
    replica: u64,
    seed: u64,
    opts: LilOptions,
) -> Result<PolygonalPath> {
    if m == 0 || m > n {
        return Err(Error::argument("need 1 <= m <= n"));
    }
    let rates = spec.derive_rates(n)?;
    let table = CenteringTable::new(h, &rates, n)?;
    let sampler = ComponentSampler::for_spec(spec, n)?;
    let mut rng = stream_rng(seed, "lil", replica);
    let s = sampler.sample(&mut rng);
    let prefix = form_prefix(h, &table, &s, n, opts.form);
    thinned_process(&table, &prefix, m, &opts)
        .ok_or_else(|| Error::argument("process degenerate at this checkpoint"))
}

/// Functional-LIL diagnostic run: samples component vectors, builds the
/// normalised polygonal processes at log-spaced checkpoints, and collects
/// distances to K plus the endpoint cluster statistics.
pub fn lil_experiment(
    spec: &AssemblySpec,
    h: &AdditiveFunction,
    n: usize,
    n1: usize,
    replicas: usize,
    seed: u64,
    opts: LilOptions,
) -> Result<LilSummary> {
    if replicas == 0 {
        return Err(Error::argument("replicas must be at least 1"));
    }
    if n1 == 0 || n1 > n {
        return Err(Error::argument("need 1 <= n1 <= n"));
    }
    let rates = spec.derive_rates(n)?;
    let table = CenteringTable::new(h, &rates, n)?;
    let sampler = ComponentSampler::for_spec(spec, n)?;
    let m_grid = log_spaced_grid(n1, n, opts.grid_points);

    let growth_condition_sup = (1..=n)
        .map(|j| {
            let b = table.b2_prefix[j].sqrt();
            if b > 0.0 {
                table.a[j].abs() * iterated_log(b, 2).sqrt() / b
            } else {
                0.0
            }
        })
        .fold(0.0f64, f64::max);

    let outcomes: Vec<ReplicaOutcome> = (0..replicas)
        .into_par_iter()
        .map(|rep| -> Result<ReplicaOutcome> {
            let mut rng = stream_rng(seed, "lil", rep as u64);
            let s = sampler.sample(&mut rng);
            let prefix = form_prefix(h, &table, &s, n, opts.form);
            let mut max_dist = 0.0f64;
            let mut endpoints = Vec::with_capacity(m_grid.len());
            let mut pairs = Vec::with_capacity(m_grid.len());
            for &m in &m_grid {
                let b2_m = table.b2_prefix[m];
                let beta = match beta_floored(b2_m, opts.ll_floor) {
                    Some(b) => b,
                    None => continue,
                };
                let path = match thinned_process(&table, &prefix, m, &opts) {
                    Some(p) => p,
                    None => continue,
                };
                let dist = strassen_distance(&path, opts.strassen_tol)?;
                max_dist = max_dist.max(dist);

                let endpoint = (prefix[m] - table.a_prefix[m]) / beta;
                // U_m(1/2) interpolated on the full (un-thinned) arrays
                let target = 0.5 * b2_m;
                let idx = table.b2_prefix[..=m].partition_point(|&v| v <= target);
                let half = if idx == 0 {
                    0.0
                } else if idx > m {
                    endpoint
                } else {
                    let (b_lo, b_hi) = (table.b2_prefix[idx - 1], table.b2_prefix[idx]);
                    let (v_lo, v_hi) = (
                        (prefix[idx - 1] - table.a_prefix[idx - 1]) / beta,
                        (prefix[idx] - table.a_prefix[idx]) / beta,
                    );
                    if b_hi > b_lo {
                        v_lo + (v_hi - v_lo) * (target - b_lo) / (b_hi - b_lo)
                    } else {
                        v_lo
                    }
                };
                endpoints.push(endpoint);
                pairs.push((half, endpoint));
            }
            Ok(ReplicaOutcome {
                max_dist,
                endpoints,
                pairs,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut max_dist: Vec<f64> = outcomes.iter().map(|o| o.max_dist).collect();
    let endpoints: Vec<f64> = outcomes.iter().flat_map(|o| o.endpoints.clone()).collect();
    let pairs: Vec<(f64, f64)> = outcomes.iter().flat_map(|o| o.pairs.clone()).collect();

    let mut sorted = max_dist.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median_max_dist = if sorted.is_empty() {
        f64::NAN
    } else {
        let mid = sorted.len() / 2;
        if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        }
    };
    let slack = opts.cluster_slack;
    let endpoint_outside_frac = if endpoints.is_empty() {
        0.0
    } else {
        endpoints.iter().filter(|&&v| v.abs() > slack).count() as f64 / endpoints.len() as f64
    };
    let disk_bound = 0.5 * slack * slack;
    let pair_outside_frac = if pairs.is_empty() {
        0.0
    } else {
        pairs
            .iter()
            .filter(|&&(u, v)| u * u + (v - u) * (v - u) > disk_bound)
            .count() as f64
            / pairs.len() as f64
    };
    max_dist.shrink_to_fit();
    Ok(LilSummary {
        n,
        n1,
        replicas,
        seed,
        m_grid,
        max_dist,
        median_max_dist,
        endpoints,
        pairs,
        endpoint_outside_frac,
        pair_outside_frac,
        growth_condition_sup,
    })
}

/// Empirical exceedance probability of a threshold sequence.
#[derive(Debug, Clone, Copy)]
pub struct ExceedanceEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub exceed_count: usize,
    pub replicas: usize,
}

/// Estimates P(max_{n1<=m<=n} |h(sigma, m) - A(m)| / psi_m >= 1) over
/// seeded replicas. `psi` is 1-based: psi[m-1] is the threshold at m.
pub fn exceedance_scan(
    spec: &AssemblySpec,
    h: &AdditiveFunction,
    psi: &[f64],
    n: usize,
    n1: usize,
    replicas: usize,
    seed: u64,
    form: ProcessForm,
) -> Result<ExceedanceEstimate> {
    if replicas == 0 {
        return Err(Error::argument("replicas must be at least 1"));
    }
    if n1 == 0 || n1 > n {
        return Err(Error::argument("need 1 <= n1 <= n"));
    }
    if psi.len() < n {
        return Err(Error::argument("psi must cover 1..=n"));
    }
    if psi[(n1 - 1)..n].iter().any(|&p| !(p > 0.0)) {
        return Err(Error::argument("psi must be positive on [n1, n]"));
    }
    let rates = spec.derive_rates(n)?;
    let table = CenteringTable::new(h, &rates, n)?;
    let sampler = ComponentSampler::for_spec(spec, n)?;

    let exceed_count: usize = (0..replicas)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(seed, "exceed", rep as u64);
            let s = sampler.sample(&mut rng);
            let mut running = 0.0f64;
            let mut hit = 0usize;
            for m in 1..=n {
                running += match form {
                    ProcessForm::Indicator => {
                        if s.count(m) >= 1 {
                            table.a[m]
                        } else {
                            0.0
                        }
                    }
                    ProcessForm::Raw => h.eval(m, s.count(m)),
                };
                if m >= n1 && (running - table.a_prefix[m]).abs() >= psi[m - 1] {
                    hit = 1;
                    break;
                }
            }
            hit
        })
        .sum();

    let estimate = exceed_count as f64 / replicas as f64;
    let std_error = (estimate * (1.0 - estimate) / replicas as f64).sqrt();
    Ok(ExceedanceEstimate {
        estimate,
        std_error,
        exceed_count,
        replicas,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::rat_int;

    fn ewens1(n_max: usize) -> AssemblySpec {
        AssemblySpec::ewens(rat_int(1), n_max).unwrap()
    }

    #[test]
    fn lil_rejects_zero_replicas() {
        let spec = ewens1(64);
        let h = AdditiveFunction::component_count();
        assert!(lil_experiment(&spec, &h, 64, 8, 0, 1, LilOptions::default()).is_err());
    }

    #[test]
    fn lil_is_seed_deterministic() {
        let spec = ewens1(512);
        let h = AdditiveFunction::component_count();
        let opts = LilOptions {
            grid_points: 4,
            ..Default::default()
        };
        let a = lil_experiment(&spec, &h, 400, 100, 6, 42, opts).unwrap();
        let b = lil_experiment(&spec, &h, 400, 100, 6, 42, opts).unwrap();
        assert_eq!(a.max_dist, b.max_dist);
        assert_eq!(a.endpoints, b.endpoints);
        let c = lil_experiment(&spec, &h, 400, 100, 6, 43, opts).unwrap();
        assert_ne!(a.max_dist, c.max_dist);
    }

    #[test]
    fn lil_summary_shapes() {
        let spec = ewens1(512);
        let h = AdditiveFunction::component_count();
        let opts = LilOptions {
            grid_points: 5,
            ..Default::default()
        };
        let s = lil_experiment(&spec, &h, 300, 50, 4, 7, opts).unwrap();
        assert_eq!(s.max_dist.len(), 4);
        assert!(s.median_max_dist.is_finite());
        assert!(!s.m_grid.is_empty());
        assert!(s.m_grid.iter().all(|&m| (50..=300).contains(&m)));
        assert!(s.endpoints.len() >= s.pairs.len());
        assert!(s.growth_condition_sup > 0.0);
    }

    #[test]
    fn exceedance_overwhelming_threshold_is_never_hit() {
        let spec = ewens1(512);
        let h = AdditiveFunction::component_count();
        let n = 256;
        let rates = spec.derive_rates(n).unwrap();
        let table = CenteringTable::new(&h, &rates, n).unwrap();
        let psi: Vec<f64> = (1..=n)
            .map(|m| 1e6 * (1.0 + table.b2_prefix[m].sqrt()))
            .collect();
        let est = exceedance_scan(&spec, &h, &psi, n, 16, 50, 3, ProcessForm::Indicator).unwrap();
        assert_eq!(est.estimate, 0.0);
        assert_eq!(est.exceed_count, 0);
    }

    #[test]
    fn exceedance_is_monotone_in_psi_on_the_same_seed() {
        let spec = ewens1(512);
        let h = AdditiveFunction::component_count();
        let n = 256;
        let rates = spec.derive_rates(n).unwrap();
        let table = CenteringTable::new(&h, &rates, n).unwrap();
        let psi: Vec<f64> = (1..=n).map(|m| 0.8 * (1.0 + table.b2_prefix[m])).collect();
        let psi2: Vec<f64> = psi.iter().map(|p| 2.0 * p).collect();
        let a = exceedance_scan(&spec, &h, &psi, n, 16, 80, 9, ProcessForm::Indicator).unwrap();
        let b = exceedance_scan(&spec, &h, &psi2, n, 16, 80, 9, ProcessForm::Indicator).unwrap();
        assert!(b.estimate <= a.estimate);
    }

    #[test]
    fn exceedance_validates_psi() {
        let spec = ewens1(64);
        let h = AdditiveFunction::component_count();
        let psi = vec![1.0; 10];
        assert!(
            exceedance_scan(&spec, &h, &psi, 64, 8, 4, 0, ProcessForm::Indicator).is_err()
        );
        let mut bad = vec![1.0; 64];
        bad[20] = 0.0;
        assert!(exceedance_scan(&spec, &h, &bad, 64, 8, 4, 0, ProcessForm::Indicator).is_err());
    }
}
