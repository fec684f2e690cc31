//! Small descriptive statistics used by the studies and the test suites.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Empirical bias, standard error and root mean squared error of a set of estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub bias: f64,
    pub se: f64,
    pub rmse: f64,
}

/// Bias `mean - truth`, standard error with `R - 1` denominator, `rmse = √(bias² + se²)`.
pub fn summarize(estimates: &[f64], truth: f64) -> Result<Summary> {
    if estimates.len() < 2 {
        return Err(Error::Usage(format!(
            "need at least 2 estimates, got {}",
            estimates.len()
        )));
    }
    let r = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / r;
    let var = estimates.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (r - 1.0);
    let bias = mean - truth;
    let se = var.sqrt();
    Ok(Summary { bias, se, rmse: (bias * bias + se * se).sqrt() })
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` denominator.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Count of inversions in `v`, sorting it in the process.
fn merge_count(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], buf) + merge_count(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Pairs tied within runs of equal values of a sorted slice.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's τ_b in `O(n log n)` (Knight's algorithm).
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Usage("kendall_tau needs two equal-length samples of size ≥ 2".into()));
    }
    let n = x.len() as u64;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = n * (n - 1) / 2;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let n1 = tied_pairs(&xs);
    let n3 = tied_pairs(&pairs);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = merge_count(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys);
    let concordant_minus_discordant = n0 as f64 - (n1 + n2) as f64 + n3 as f64 - 2.0 * swaps as f64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok(concordant_minus_discordant / denom)
}

/// Empirical quantile by linear interpolation between order statistics (type 7).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_examples() {
        let s = summarize(&[0.4, 0.6], 0.5).unwrap();
        assert!(s.bias.abs() < 1e-15);
        assert!((s.se - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((s.rmse - s.se).abs() < 1e-15);
        let s = summarize(&[0.6; 5], 0.5).unwrap();
        assert!((s.bias - 0.1).abs() < 1e-15 && s.se == 0.0 && (s.rmse - 0.1).abs() < 1e-15);
        assert!(summarize(&[0.5], 0.5).is_err());
    }

    fn tau_naive(x: &[f64], y: &[f64]) -> f64 {
        let (mut c, mut tx, mut ty) = (0.0, 0.0, 0.0);
        let n = x.len();
        for i in 0..n {
            for j in i + 1..n {
                let a = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
                let b = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
                c += a * b;
                tx += a * a;
                ty += b * b;
            }
        }
        c / (tx * ty).sqrt()
    }

    #[test]
    fn kendall_matches_naive_with_ties() {
        let x = [1.0, 2.0, 2.0, 3.0, 5.0, 4.0, 4.0, 0.5];
        let y = [2.0, 1.0, 3.0, 3.0, 6.0, 6.0, 5.0, 0.0];
        assert!((kendall_tau(&x, &y).unwrap() - tau_naive(&x, &y)).abs() < 1e-14);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((kendall_tau(&x, &z).unwrap() + 1.0).abs() < 1e-14);
    }
}
