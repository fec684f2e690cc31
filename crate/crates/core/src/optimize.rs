//! Derivative-free maximizers: a bracketed Brent search for scalars and
//! Nelder–Mead for small parameter vectors. Non-finite objective values are
//! treated as `-∞` so that callers can signal infeasible points cheaply.

use serde::Serialize;

use crate::error::{Error, Result};

/// Search interval and tolerance used for every dependence-parameter fit.
pub const ALPHA_LO: f64 = 0.01;
pub const ALPHA_HI: f64 = 0.999;
pub const ALPHA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimResult {
    pub argmax: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub diagnostics: String,
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

const GRID_POINTS: usize = 11;

/// Maximize `f` on `[lo, hi]`.
///
/// An 11-point probe grid picks the starting bracket, then Brent's
/// golden-section/parabolic method refines it. The endpoints are always
/// among the candidates, so a maximum on the boundary is found and flagged.
pub fn maximize_scalar<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<OptimResult> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::Usage(format!("need lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}")));
    }
    let mut eval = |x: f64| sanitize(f(x));
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| {
            if i == GRID_POINTS - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (GRID_POINTS - 1) as f64
            }
        })
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&x| eval(x)).collect();
    let mut best = 0;
    for i in 1..GRID_POINTS {
        if vals[i] > vals[best] {
            best = i;
        }
    }
    if vals[best] == f64::NEG_INFINITY {
        return Err(Error::Optimization(format!(
            "objective is -inf or NaN at all {GRID_POINTS} probe points of [{lo}, {hi}]"
        )));
    }
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(GRID_POINTS - 1)];
    let (x, fx, iters, bracket_ok) = brent_max(&mut eval, a, b, grid[best], vals[best], tol);

    let (mut arg, mut val) = (grid[best], vals[best]);
    if fx >= val {
        arg = x;
        val = fx;
    }
    let mut notes = Vec::new();
    if (arg - lo).abs() <= tol || (hi - arg).abs() <= tol {
        notes.push("maximum on boundary".to_string());
    }
    if !bracket_ok {
        notes.push("iteration cap reached".to_string());
    }
    Ok(OptimResult {
        argmax: vec![arg],
        value: val,
        iterations: iters,
        converged: bracket_ok,
        diagnostics: notes.join("; "),
    })
}

/// Brent's method for a maximum inside `[a, b]` starting at `x0`.
fn brent_max<F: FnMut(f64) -> f64>(
    f: &mut F,
    mut a: f64,
    mut b: f64,
    x0: f64,
    f0: f64,
    tol: f64,
) -> (f64, f64, usize, bool) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    const MAX_ITER: usize = 200;
    // work with g = -f, finite values only in the parabolic step
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut gx, mut gw, mut gv) = (-f0, -f0, -f0);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for it in 0..MAX_ITER {
        let xm = 0.5 * (a + b);
        let tol1 = tol * 0.5 + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return (x, -gx, it, true);
        }
        let mut golden = true;
        if e.abs() > tol1 && gx.is_finite() && gw.is_finite() && gv.is_finite() {
            let r = (x - w) * (gx - gv);
            let mut q = (x - v) * (gx - gw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let gu = -f(u);
        if gu <= gx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            gv = gw;
            w = x;
            gw = gx;
            x = u;
            gx = gu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if gu <= gw || w == x {
                v = w;
                gv = gw;
                w = u;
                gw = gu;
            } else if gu <= gv || v == x || v == w {
                v = u;
                gv = gu;
            }
        }
    }
    (x, -gx, MAX_ITER, false)
}

/// Nelder–Mead maximization from `x0` with initial steps `scale`.
///
/// Stops when the simplex diameter falls below `tol` or after `max_iter`
/// iterations; the best vertex never gets worse than `f(x0)`.
pub fn maximize_simplex<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    scale: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<OptimResult> {
    let n = x0.len();
    if n == 0 || scale.len() != n {
        return Err(Error::Usage("x0 and scale must be non-empty and of equal length".into()));
    }
    let f0 = sanitize(f(x0));
    if !f0.is_finite() {
        return Err(Error::Optimization(format!("objective not finite at start point {x0:?}")));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.to_vec(), f0)];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += scale[i];
        let fx = sanitize(f(&x));
        simplex.push((x, fx));
    }
    let diameter = |s: &[(Vec<f64>, f64)]| {
        s[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&s[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    };
    // stable sort keeps older vertices ahead on ties
    let order = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| b.1.total_cmp(&a.1));
    order(&mut simplex);

    let mut it = 0;
    while it < max_iter {
        if diameter(&simplex) < tol {
            let (x, v) = simplex.swap_remove(0);
            return Ok(OptimResult {
                argmax: x,
                value: v,
                iterations: it,
                converged: true,
                diagnostics: String::new(),
            });
        }
        it += 1;
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let towards = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect()
        };
        let xr = towards(1.0);
        let fr = sanitize(f(&xr));
        if fr > simplex[0].1 {
            let xe = towards(2.0);
            let fe = sanitize(f(&xe));
            simplex[n] = if fe > fr { (xe, fe) } else { (xr, fr) };
        } else if fr > simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let outside = fr > worst.1;
            let xc = towards(if outside { 0.5 } else { -0.5 });
            let fc = sanitize(f(&xc));
            if (outside && fc >= fr) || (!outside && fc > worst.1) {
                simplex[n] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> =
                        best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fx = sanitize(f(&x));
                    *vertex = (x, fx);
                }
            }
        }
        order(&mut simplex);
    }
    let (x, v) = simplex.swap_remove(0);
    Ok(OptimResult {
        argmax: x,
        value: v,
        iterations: it,
        converged: false,
        diagnostics: format!("iteration cap {max_iter} reached"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_interior() {
        let r = maximize_scalar(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-8).unwrap();
        assert!((r.argmax[0] - 0.3).abs() < 1e-8);
        assert!(r.converged);
        assert!(r.diagnostics.is_empty());
    }

    #[test]
    fn scalar_boundary() {
        let r = maximize_scalar(|x| -(x - 1.0) * (x - 1.0), 0.0, 0.5, 1e-8).unwrap();
        assert_eq!(r.argmax[0], 0.5);
        assert!(r.converged);
        assert!(r.diagnostics.contains("boundary"));
    }

    #[test]
    fn scalar_all_infinite() {
        let r = maximize_scalar(|_| f64::NEG_INFINITY, 0.0, 1.0, 1e-6);
        assert!(matches!(r, Err(Error::Optimization(_))));
    }

    #[test]
    fn scalar_with_infeasible_region() {
        let f = |x: f64| if x < 0.62 { f64::NEG_INFINITY } else { -(x - 0.7f64).powi(2) };
        let r = maximize_scalar(f, 0.0, 1.0, 1e-9).unwrap();
        assert!((r.argmax[0] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn simplex_quadratic() {
        let f = |x: &[f64]| -((x[0] - 1.0).powi(2) + (x[1] - 2.0).powi(2));
        let r = maximize_simplex(f, &[0.0, 0.0], &[0.5, 0.5], 1e-9, 10_000).unwrap();
        assert!((r.argmax[0] - 1.0).abs() < 1e-5 && (r.argmax[1] - 2.0).abs() < 1e-5);
        assert!(r.converged);
    }

    #[test]
    fn simplex_constant() {
        let r = maximize_simplex(|_| 3.0, &[0.2, -0.4], &[1.0, 1.0], 1e-8, 10_000).unwrap();
        assert_eq!(r.argmax, vec![0.2, -0.4]);
        assert!(r.converged);
    }

    #[test]
    fn simplex_cap() {
        let f = |x: &[f64]| -(x[0] - 1e3).abs();
        let r = maximize_simplex(f, &[0.0], &[1e-3], 1e-12, 5).unwrap();
        assert!(!r.converged);
        assert!(r.value >= -1e3);
    }
}
