//! Sup-norm distance to the Strassen set K (absolutely continuous g with
//! g(0) = 0 and unit energy budget, int g'^2 <= 1).
//!
//! rho(f, K) is found by bisecting over the tube half-width eps: f is
//! within eps of K iff some function of energy <= 1 threads the tube
//! [f - eps, f + eps] starting from 0. The minimal-energy thread is the
//! taut string through the tube, computed exactly on the breakpoint grid
//! (for piecewise-linear tubes the string bends only at grid corners, so
//! no discretisation error enters); the free right end is resolved by a
//! ternary search over the endpoint, against which the energy is convex.

use crate::error::{Error, Result};

use super::path::PolygonalPath;

/// Energy of the taut string through [lo, hi] at abscissae xs, pinned at
/// (xs[0], y0) and (xs[last], y_end). Caller guarantees lo <= hi pointwise
/// and that the pinned values respect the tube.
fn taut_string_energy(xs: &[f64], lo: &[f64], hi: &[f64], y0: f64, y_end: f64) -> f64 {
    let last = xs.len() - 1;
    let mut energy = 0.0f64;
    let mut anchor = 0usize;
    let mut ay = y0;
    'outer: while anchor < last {
        let mut lo_slope = f64::NEG_INFINITY;
        let mut lo_idx = anchor + 1;
        let mut hi_slope = f64::INFINITY;
        let mut hi_idx = anchor + 1;
        let mut i = anchor + 1;
        loop {
            let dx = xs[i] - xs[anchor];
            let (slo, shi) = if i == last {
                let s = (y_end - ay) / dx;
                (s, s)
            } else {
                ((lo[i] - ay) / dx, (hi[i] - ay) / dx)
            };
            if slo > hi_slope {
                // the string presses against the upper bound at hi_idx
                let seg = hi_slope;
                energy += seg * seg * (xs[hi_idx] - xs[anchor]);
                ay = hi[hi_idx];
                anchor = hi_idx;
                continue 'outer;
            }
            if shi < lo_slope {
                let seg = lo_slope;
                energy += seg * seg * (xs[lo_idx] - xs[anchor]);
                ay = lo[lo_idx];
                anchor = lo_idx;
                continue 'outer;
            }
            if slo > lo_slope {
                lo_slope = slo;
                lo_idx = i;
            }
            if shi < hi_slope {
                hi_slope = shi;
                hi_idx = i;
            }
            if i == last {
                let seg = (y_end - ay) / (xs[last] - xs[anchor]);
                energy += seg * seg * (xs[last] - xs[anchor]);
                anchor = last;
                continue 'outer;
            }
            i += 1;
        }
    }
    energy
}

/// Minimal tube energy with a free right end: convex in the endpoint, so a
/// ternary search over [lo, hi] at the last abscissa suffices. Returns
/// early once the running minimum drops to `cutoff` or below.
fn min_tube_energy(xs: &[f64], lo: &[f64], hi: &[f64], y0: f64, cutoff: f64) -> f64 {
    let last = xs.len() - 1;
    let (mut a, mut b) = (lo[last], hi[last]);
    let eval = |y: f64| taut_string_energy(xs, lo, hi, y0, y);
    let mut best = f64::INFINITY;
    for _ in 0..64 {
        if b - a < 1e-14 {
            break;
        }
        let m1 = a + (b - a) / 3.0;
        let m2 = b - (b - a) / 3.0;
        let e1 = eval(m1);
        let e2 = eval(m2);
        best = best.min(e1).min(e2);
        if best <= cutoff {
            return best;
        }
        if e1 <= e2 {
            b = m2;
        } else {
            a = m1;
        }
    }
    best.min(eval(0.5 * (a + b)))
}

/// Whether some g in K stays within eps of f everywhere.
fn within_eps(ts: &[f64], ys: &[f64], eps: f64) -> bool {
    let lo: Vec<f64> = ys.iter().map(|y| y - eps).collect();
    let hi: Vec<f64> = ys.iter().map(|y| y + eps).collect();
    min_tube_energy(ts, &lo, &hi, 0.0, 1.0) <= 1.0 + 1e-9
}

/// Distance rho(f, K) within +-tol, with `refine` extra grid points per
/// segment (the tube is piecewise linear, so refinement does not change
/// the answer; the knob exists for experimentation).
pub fn strassen_distance_with(f: &PolygonalPath, tol: f64, refine: usize) -> Result<f64> {
    if tol <= 0.0 {
        return Err(Error::argument("tol must be positive"));
    }
    let (ts0, ys0) = f.breakpoints();
    let (ts, ys) = if refine == 0 {
        (ts0.to_vec(), ys0.to_vec())
    } else {
        let mut ts = Vec::with_capacity(ts0.len() * (refine + 1));
        let mut ys = Vec::with_capacity(ts.capacity());
        for w in 0..ts0.len() - 1 {
            for k in 0..=refine {
                let frac = k as f64 / (refine + 1) as f64;
                ts.push(ts0[w] + (ts0[w + 1] - ts0[w]) * frac);
                ys.push(ys0[w] + (ys0[w + 1] - ys0[w]) * frac);
            }
        }
        ts.push(*ts0.last().unwrap());
        ys.push(*ys0.last().unwrap());
        (ts, ys)
    };
    let sup = f.sup_norm();
    if sup == 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0f64;
    let mut hi = sup; // g = 0 threads the sup-wide tube with zero energy
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if within_eps(&ts, &ys, mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Distance rho(f, K) within +-tol on the breakpoint grid.
pub fn strassen_distance(f: &PolygonalPath, tol: f64) -> Result<f64> {
    strassen_distance_with(f, tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taut_string_hand_example() {
        // forced up to [2,3] at x=1, pinned back to 0 at x=2:
        // knots (0,0) -> (1,2) -> (2,0), energy 4 + 4 = 8
        let xs = [0.0, 1.0, 2.0];
        let lo = [0.0, 2.0, 0.0];
        let hi = [0.0, 3.0, 0.0];
        let e = taut_string_energy(&xs, &lo, &hi, 0.0, 0.0);
        assert!((e - 8.0).abs() < 1e-12, "energy {e}");
    }

    #[test]
    fn taut_string_straight_when_tube_allows() {
        let xs = [0.0, 0.5, 1.0];
        let lo = [0.0, -1.0, 1.0];
        let hi = [0.0, 1.0, 1.0];
        // straight line to (1,1) has slope 1 and passes 0.5 at 0.5
        let e = taut_string_energy(&xs, &lo, &hi, 0.0, 1.0);
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn taut_string_degenerate_tube_reproduces_path_energy() {
        // lo = hi forces the string through the polygon itself
        let xs = [0.0, 0.25, 0.5, 1.0];
        let ys = [0.0, 0.5, 0.25, 0.75];
        let e = taut_string_energy(&xs, &ys, &ys, 0.0, 0.75);
        let direct: f64 = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(x, y)| {
                let s = (y[1] - y[0]) / (x[1] - x[0]);
                s * s * (x[1] - x[0])
            })
            .sum();
        assert!((e - direct).abs() < 1e-10);
    }

    #[test]
    fn distance_anchors() {
        let tol = 1e-7;
        assert_eq!(strassen_distance(&PolygonalPath::zero(), tol).unwrap(), 0.0);
        let d = strassen_distance(&PolygonalPath::line(1.0), tol).unwrap();
        assert!(d <= tol, "rho(t, K) = {d}");
        let d = strassen_distance(&PolygonalPath::line(2.0), tol).unwrap();
        assert!((d - 1.0).abs() <= 2.0 * tol, "rho(2t, K) = {d}");
    }

    #[test]
    fn distance_bounded_by_sup_norm() {
        let f = PolygonalPath::new(vec![0.0, 0.3, 0.7, 1.0], vec![0.0, 1.4, -0.9, 0.2]).unwrap();
        let d = strassen_distance(&f, 1e-6).unwrap();
        assert!(d <= f.sup_norm() + 1e-6);
    }

    #[test]
    fn refinement_does_not_change_the_answer() {
        let f = PolygonalPath::new(vec![0.0, 0.4, 0.8, 1.0], vec![0.0, 1.8, 0.4, 1.1]).unwrap();
        let d0 = strassen_distance_with(&f, 1e-7, 0).unwrap();
        let d3 = strassen_distance_with(&f, 1e-7, 3).unwrap();
        assert!((d0 - d3).abs() < 1e-6);
    }
}
