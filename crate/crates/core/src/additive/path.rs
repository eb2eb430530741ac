//! Polygonal processes built from additive partial sums.

use crate::error::{Error, Result};
use crate::model::{ComponentVector, RateSequence};

use super::{beta_from_b2, AdditiveFunction, CenteringTable};

/// A piecewise-linear function on [0, 1] anchored at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonalPath {
    ts: Vec<f64>,
    ys: Vec<f64>,
}

impl PolygonalPath {
    /// Breakpoints must be strictly increasing with t_0 = 0, t_last = 1 and
    /// y_0 = 0.
    pub fn new(ts: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if ts.len() != ys.len() || ts.len() < 2 {
            return Err(Error::argument("path needs matching t/y arrays, length >= 2"));
        }
        if ts[0] != 0.0 || ys[0] != 0.0 {
            return Err(Error::argument("path must start at (0, 0)"));
        }
        if (*ts.last().unwrap() - 1.0).abs() > 1e-12 {
            return Err(Error::argument("path must end at t = 1"));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::argument("breakpoints must be strictly increasing"));
        }
        Ok(PolygonalPath { ts, ys })
    }

    /// The zero function.
    pub fn zero() -> Self {
        PolygonalPath {
            ts: vec![0.0, 1.0],
            ys: vec![0.0, 0.0],
        }
    }

    /// The straight line t -> slope * t.
    pub fn line(slope: f64) -> Self {
        PolygonalPath {
            ts: vec![0.0, 1.0],
            ys: vec![0.0, slope],
        }
    }

    pub fn breakpoints(&self) -> (&[f64], &[f64]) {
        (&self.ts, &self.ys)
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        if t >= 1.0 {
            return *self.ys.last().unwrap();
        }
        let idx = match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.ys[i],
            Err(i) => i,
        };
        let (t0, t1) = (self.ts[idx - 1], self.ts[idx]);
        let (y0, y1) = (self.ys[idx - 1], self.ys[idx]);
        y0 + (y1 - y0) * (t - t0) / (t1 - t0)
    }

    /// sup |f|; attained at a breakpoint for piecewise-linear f.
    pub fn sup_norm(&self) -> f64 {
        self.ys.iter().fold(0.0f64, |m, &y| m.max(y.abs()))
    }

    /// sup |f - g| over [0, 1], evaluated on the union of breakpoints.
    pub fn sup_distance(&self, other: &PolygonalPath) -> f64 {
        let mut best = 0.0f64;
        for &t in self.ts.iter().chain(other.ts.iter()) {
            best = best.max((self.eval(t) - other.eval(t)).abs());
        }
        best
    }
}

/// Which partial-sum is fed into the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProcessForm {
    /// sum a_j 1{k_j >= 1} — the default reduction.
    #[default]
    Indicator,
    /// sum h_j(k_j) as given.
    Raw,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ProcessOptions {
    pub form: ProcessForm,
    /// Freeze the path after the last contributing index <= r, keeping the
    /// time normalisation of the full process.
    pub truncate_at: Option<usize>,
    /// Optional floor on log log B used by the experiments at sizes where
    /// the plain iterated logarithm is not yet positive. None refuses such
    /// sizes instead.
    pub ll_floor: Option<f64>,
}

/// The normalised polygonal process U_m: the line through
/// (B^2(i)/B^2(m), (h(sigma, i) - A(i)) / beta(m)) over the contributing
/// indices i, anchored at the origin. Breakpoints with a_i = 0 carry no
/// increment and are collapsed.
pub fn build_process_with(
    h: &AdditiveFunction,
    rates: &RateSequence,
    s: &ComponentVector,
    m: usize,
    opts: ProcessOptions,
) -> Result<PolygonalPath> {
    if m == 0 || m > s.dim() || m > rates.len() {
        return Err(Error::Bounds {
            index: m,
            limit: s.dim().min(rates.len()),
        });
    }
    let table = CenteringTable::new(h, rates, m)?;
    build_process_from_table(h, &table, s, m, opts)
}

/// As [`build_process_with`], reusing a precomputed centering table.
pub fn build_process_from_table(
    h: &AdditiveFunction,
    table: &CenteringTable,
    s: &ComponentVector,
    m: usize,
    opts: ProcessOptions,
) -> Result<PolygonalPath> {
    let b2_m = table.b2_prefix[m];
    let beta = match opts.ll_floor {
        None => beta_from_b2(b2_m).ok_or(Error::BetaUndefined { m })?,
        Some(floor) => {
            if b2_m <= 0.0 {
                return Err(Error::BetaUndefined { m });
            }
            let b = b2_m.sqrt();
            let ll = b.ln().max(f64::MIN_POSITIVE).ln().max(floor);
            b * (2.0 * ll).sqrt()
        }
    };
    let contributing: Vec<usize> = (1..=m).filter(|&j| table.a[j] != 0.0).collect();
    let q_cut = opts.truncate_at.map(|r| {
        contributing
            .iter()
            .copied()
            .take_while(|&j| j <= r)
            .last()
            .unwrap_or(0)
    });

    let mut ts = vec![0.0f64];
    let mut ys = vec![0.0f64];
    let mut running = 0.0f64; // partial value up to the current index
    let mut next = 1usize;
    let mut frozen: Option<f64> = None;
    for &i in &contributing {
        for j in next..=i {
            running += match opts.form {
                ProcessForm::Indicator => {
                    if s.count(j) >= 1 {
                        table.a[j]
                    } else {
                        0.0
                    }
                }
                ProcessForm::Raw => h.eval(j, s.count(j)),
            };
        }
        next = i + 1;
        let mut value = (running - table.a_prefix[i]) / beta;
        if let Some(q) = q_cut {
            if i > q {
                value = frozen.unwrap_or(0.0);
            } else if i == q {
                frozen = Some(value);
            }
        }
        let t = table.b2_prefix[i] / b2_m;
        if t <= *ts.last().unwrap() {
            continue; // collapsed zero-variance breakpoint
        }
        ts.push(t);
        ys.push(value);
    }
    if (ts.last().unwrap() - 1.0).abs() > 1e-12 {
        // can only happen through rounding; pin the endpoint
        *ts.last_mut().unwrap() = 1.0;
    }
    if ts.len() < 2 {
        return Err(Error::BetaUndefined { m });
    }
    PolygonalPath::new(ts, ys)
}

/// Default construction: indicator form, no truncation, plain iterated
/// logarithm (refused while beta is undefined).
pub fn build_process(
    h: &AdditiveFunction,
    rates: &RateSequence,
    s: &ComponentVector,
    m: usize,
) -> Result<PolygonalPath> {
    build_process_with(h, rates, s, m, ProcessOptions::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::rat_int;
    use crate::model::AssemblySpec;

    fn big_rates(n: usize) -> RateSequence {
        // lambda_j = 1 keeps B^2 growing linearly, so beta is defined for
        // moderate m already.
        RateSequence::from_exact(vec![rat_int(1); n])
    }

    #[test]
    fn path_validation() {
        assert!(PolygonalPath::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.5]).is_ok());
        assert!(PolygonalPath::new(vec![0.0, 0.5, 0.5], vec![0.0, 1.0, 0.5]).is_err());
        assert!(PolygonalPath::new(vec![0.1, 1.0], vec![0.0, 1.0]).is_err());
        assert!(PolygonalPath::new(vec![0.0, 1.0], vec![0.5, 1.0]).is_err());
    }

    #[test]
    fn path_eval_interpolates() {
        let p = PolygonalPath::new(vec![0.0, 0.5, 1.0], vec![0.0, 2.0, 1.0]).unwrap();
        assert_eq!(p.eval(0.25), 1.0);
        assert_eq!(p.eval(0.75), 1.5);
        assert_eq!(p.eval(-1.0), 0.0);
        assert_eq!(p.eval(2.0), 1.0);
        assert_eq!(p.sup_norm(), 2.0);
    }

    #[test]
    fn process_anchors_and_endpoint_identity() {
        let n = 60;
        let rates = big_rates(n);
        let h = AdditiveFunction::component_count();
        // deterministic vector: every size present
        let s = ComponentVector::new(vec![1; n]);
        let path = build_process(&h, &rates, &s, n).unwrap();
        let (ts, ys) = path.breakpoints();
        assert_eq!(ts[0], 0.0);
        assert_eq!(ys[0], 0.0);
        assert!((ts.last().unwrap() - 1.0).abs() < 1e-12);
        // endpoint = (h(sigma, n) - A(n)) / beta(n), exactly
        let cs = super::super::centering_scaling(&h, &rates, n).unwrap();
        let hn = super::super::partial_value_indicator(&h, &s, n).unwrap();
        let expected = (hn - cs.a) / cs.beta.unwrap();
        assert!((ys.last().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn process_breakpoints_match_recomputation() {
        let n = 80;
        let rates = big_rates(n);
        let h = AdditiveFunction::completely_additive(|j| if j % 2 == 0 { 1.0 } else { 0.5 });
        let s = ComponentVector::new((0..n).map(|i| (i % 3 == 0) as u32).collect());
        let path = build_process(&h, &rates, &s, n).unwrap();
        let cs_m = super::super::centering_scaling(&h, &rates, n).unwrap();
        let beta = cs_m.beta.unwrap();
        let (ts, ys) = path.breakpoints();
        for (idx, &t) in ts.iter().enumerate().skip(1) {
            // invert t back to its index
            let i = (1..=n)
                .find(|&i| {
                    let cs = super::super::centering_scaling(&h, &rates, i).unwrap();
                    (cs.b2 / cs_m.b2 - t).abs() < 1e-12
                })
                .expect("breakpoint index");
            let cs = super::super::centering_scaling(&h, &rates, i).unwrap();
            let v = (super::super::partial_value_indicator(&h, &s, i).unwrap() - cs.a) / beta;
            assert!((ys[idx] - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_tail_collapses_and_truncation_freezes() {
        let n = 60;
        let q = 40;
        let rates = big_rates(n);
        // a_j = 0 beyond q: the last breakpoint is B^2(q)/B^2(n) = 1
        let h = AdditiveFunction::completely_additive(move |j| if j <= q { 1.0 } else { 0.0 });
        let s = ComponentVector::new(vec![1; n]);
        let path = build_process(&h, &rates, &s, n).unwrap();
        let (ts, _) = path.breakpoints();
        assert_eq!(ts.len(), q + 1);
        assert!((ts.last().unwrap() - 1.0).abs() < 1e-12);

        // truncated variant of a full function: constant on [B2(q)/B2(n), 1]
        let full = AdditiveFunction::component_count();
        let opts = ProcessOptions {
            truncate_at: Some(q),
            ..Default::default()
        };
        let tpath = build_process_with(&full, &rates, &s, n, opts).unwrap();
        let cs_q = super::super::centering_scaling(&full, &rates, q).unwrap();
        let cs_n = super::super::centering_scaling(&full, &rates, n).unwrap();
        let t_q = cs_q.b2 / cs_n.b2;
        let frozen = tpath.eval(t_q);
        for k in 0..=10 {
            let t = t_q + (1.0 - t_q) * k as f64 / 10.0;
            assert!((tpath.eval(t) - frozen).abs() < 1e-12);
        }
    }

    #[test]
    fn beta_refusal() {
        let spec = AssemblySpec::permutations(8);
        let rates = spec.derive_rates(4).unwrap();
        let h = AdditiveFunction::component_count();
        let s = ComponentVector::new(vec![0, 2, 0, 0]);
        assert!(matches!(
            build_process(&h, &rates, &s, 4),
            Err(Error::BetaUndefined { m: 4 })
        ));
        // the floored variant constructs
        let opts = ProcessOptions {
            ll_floor: Some(1e-3),
            ..Default::default()
        };
        assert!(build_process_with(&h, &rates, &s, 4, opts).is_ok());
    }
}
