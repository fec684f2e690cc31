//! Browser bindings for the demo page in `www/`.
//!
//! Three operations: draw a dependence scatter, profile an objective over α
//! on simulated logistic data, and tabulate root relative efficiencies.

use mevlab::experiments::threshold_kind;
use mevlab::fisher::{are_table, AreConfig};
use mevlab::likelihoods::{block_maxima, select_threshold, BlockMaximaData};
use mevlab::margins::MarginalModel;
use mevlab::simulate::{sample_logistic_maxstable, sample_opclayton};
use mevlab::{Estimator, LogisticParams, SeedSpec};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// `n` bivariate points on the uniform scale, interleaved as `u1, v1, u2, v2, ...`.
/// `model` is `logistic` or `opclayton`.
#[wasm_bindgen]
pub fn sample_scatter(model: &str, alpha: f64, n: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let seed = SeedSpec::new(seed, 0);
    let u = match model {
        "logistic" => sample_logistic_maxstable(n, 2, &LogisticParams::new(alpha).map_err(js_err)?, seed)
            .map_err(js_err)?
            .mapv(|z| (-1.0 / z).exp()),
        "opclayton" => sample_opclayton(n, 2, alpha, seed).map_err(js_err)?,
        other => return Err(JsError::new(&format!("unknown model '{other}'"))),
    };
    Ok(u.iter().copied().collect())
}

/// Objective values over an α grid for one dataset.
#[wasm_bindgen]
pub struct Profile {
    alphas: Vec<f64>,
    values: Vec<f64>,
}

#[wasm_bindgen]
impl Profile {
    #[wasm_bindgen(getter)]
    pub fn alphas(&self) -> Vec<f64> {
        self.alphas.clone()
    }

    /// Log-likelihood minus its grid maximum; `-Infinity` where undefined.
    #[wasm_bindgen(getter)]
    pub fn values(&self) -> Vec<f64> {
        self.values.clone()
    }

    /// Grid point with the largest value.
    #[wasm_bindgen(getter)]
    pub fn alpha_hat(&self) -> f64 {
        let best = self.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map_or(0, |(i, _)| i);
        self.alphas[best]
    }
}

/// Profile `estimator` on `n` exact logistic observations in dimension
/// `dim` with known unit Fréchet margins. `tuning` is the block length for
/// block-maximum estimators and the threshold probability otherwise.
#[wasm_bindgen]
pub fn loglik_profile(
    estimator: &str,
    alpha: f64,
    n: usize,
    dim: usize,
    tuning: f64,
    seed: u64,
    grid_points: usize,
) -> Result<Profile, JsError> {
    let est: Estimator = estimator.parse().map_err(js_err)?;
    if grid_points < 2 {
        return Err(JsError::new("need at least 2 grid points"));
    }
    let raw = sample_logistic_maxstable(n, dim, &LogisticParams::new(alpha).map_err(js_err)?, SeedSpec::new(seed, 0))
        .map_err(js_err)?;
    let margins = MarginalModel::known_frechet(dim);
    let alphas: Vec<f64> = (0..grid_points).map(|i| 0.02 + 0.97 * i as f64 / (grid_points - 1) as f64).collect();
    let objective: Box<dyn Fn(f64) -> f64> = if est.is_block_maximum() {
        let l = tuning as usize;
        let (m, parts, _) = block_maxima(raw.view(), l).map_err(js_err)?;
        let data = BlockMaximaData::new(m, parts, l, margins).map_err(js_err)?;
        Box::new(move |a| data.loglik(est, a).unwrap_or(f64::NEG_INFINITY))
    } else {
        let data = select_threshold(tuning, threshold_kind(est), raw, margins).map_err(js_err)?;
        Box::new(move |a| data.loglik(est, a).unwrap_or(f64::NEG_INFINITY))
    };
    let mut values: Vec<f64> = alphas.iter().map(|&a| objective(a)).collect();
    let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(JsError::new("objective is undefined on the whole grid"));
    }
    values.iter_mut().for_each(|v| *v -= top);
    Ok(Profile { alphas, values })
}

/// Root relative efficiencies (%) of `Max1`, `Max2` and `Thr5` against
/// `Thr4`, by quadrature, at `points` values of α in [0.1, 0.9]. Returned
/// as rows `alpha, max1, max2, thr5` flattened; `thr5` is NaN where the
/// threshold is too low for it.
#[wasm_bindgen]
pub fn efficiency_curve(block_length: usize, p: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let points = points.max(2);
    let mut out = Vec::with_capacity(4 * points);
    for i in 0..points {
        let a = 0.1 + 0.8 * i as f64 / (points - 1) as f64;
        let rows = are_table(&[a], block_length, &[p], &AreConfig::default()).map_err(js_err)?;
        let get = |e: Estimator| rows.iter().find(|r| r.estimator == e).map_or(f64::NAN, |r| r.root_are_percent);
        let thr5 = are_table(&[a], block_length, &[p], &AreConfig { include_thr5: true, ..AreConfig::default() })
            .ok()
            .and_then(|r| r.iter().find(|r| r.estimator == Estimator::Thr5).map(|r| r.root_are_percent))
            .unwrap_or(f64::NAN);
        out.extend([a, get(Estimator::Max1), get(Estimator::Max2), thr5]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_peaks_near_truth() {
        let p = loglik_profile("thr4", 0.5, 4000, 2, 0.95, 1, 50).unwrap_or_else(|_| panic!("profile failed"));
        assert!((p.alpha_hat() - 0.5).abs() < 0.1, "{}", p.alpha_hat());
        assert_eq!(p.values().iter().copied().fold(f64::NEG_INFINITY, f64::max), 0.0);
        let p = loglik_profile("max1", 0.5, 4000, 2, 20.0, 1, 50).unwrap_or_else(|_| panic!("profile failed"));
        assert!((p.alpha_hat() - 0.5).abs() < 0.15, "{}", p.alpha_hat());
    }

    #[test]
    fn scatter_is_on_unit_square() {
        for model in ["logistic", "opclayton"] {
            let s = sample_scatter(model, 0.4, 100, 3).unwrap_or_else(|_| panic!("{model}"));
            assert_eq!(s.len(), 200);
            assert!(s.iter().all(|u| (0.0..=1.0).contains(u)));
        }
    }

    #[test]
    fn efficiency_rows() {
        let c = efficiency_curve(100, 0.95, 3).unwrap_or_else(|_| panic!("curve failed"));
        assert_eq!(c.len(), 12);
        assert!((c[1] - 42.6).abs() < 1.5, "{}", c[1]);
    }
}
