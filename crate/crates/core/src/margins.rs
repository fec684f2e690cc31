//! Marginal models and transformations to the unit Fréchet scale.
//!
//! Two scales appear in the likelihoods. The *observation* scale maps a raw
//! observation `y` to `z` with `Pr(Z ≤ z) ≈ exp(-1/z)` per observation. The
//! *maxima* scale for blocks of length `L` is `z / L`, which is unit Fréchet
//! for block maxima. [`MarginalModel::to_unit_frechet`] works on the
//! observation scale; [`MarginalModel::maxima_to_unit_frechet`] on the maxima
//! scale.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::optimize::maximize_simplex;

/// Below this |ξ| the GEV/GPD transforms use a series in ξ.
const XI_SERIES: f64 = 1e-6;

/// Minimum sample size accepted by the marginal fits.
pub const MIN_FIT_SIZE: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevParams {
    pub loc: f64,
    pub scale: f64,
    pub shape: f64,
}

impl GevParams {
    pub fn new(loc: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0) || !loc.is_finite() || !shape.is_finite() {
            return Err(Error::Domain(format!(
                "GEV needs finite loc/shape and scale > 0, got ({loc}, {scale}, {shape})"
            )));
        }
        Ok(Self { loc, scale, shape })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub loc: f64,
    pub scale: f64,
    pub shape: f64,
}

impl GpdParams {
    pub fn new(loc: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0) || !loc.is_finite() || !shape.is_finite() {
            return Err(Error::Domain(format!(
                "GPD needs finite loc/shape and scale > 0, got ({loc}, {scale}, {shape})"
            )));
        }
        Ok(Self { loc, scale, shape })
    }

    /// Survival function `(1 + ξ(y-loc)/scale)_+^{-1/ξ}` for `y ≥ loc`.
    pub fn survival(&self, y: f64) -> f64 {
        let x = (y - self.loc) / self.scale;
        match log1p_over_xi(self.shape, x) {
            Some(l) => (-l).exp(),
            None => 0.0,
        }
    }

    /// Log-density at `y > loc`; `-∞` outside the support.
    pub fn log_density(&self, y: f64) -> f64 {
        let x = (y - self.loc) / self.scale;
        if x < 0.0 {
            return f64::NEG_INFINITY;
        }
        match log1p_over_xi(self.shape, x) {
            Some(l) => -self.scale.ln() - l - (self.shape * x).ln_1p(),
            None => f64::NEG_INFINITY,
        }
    }
}

/// `ln(1 + ξx) / ξ`, with the ξ → 0 limit `x`; `None` outside the support.
fn log1p_over_xi(xi: f64, x: f64) -> Option<f64> {
    let w = xi * x;
    if w <= -1.0 {
        return None;
    }
    if xi.abs() < XI_SERIES {
        Some(x - w * x / 2.0 + w * w * x / 3.0)
    } else {
        Some(w.ln_1p() / xi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GevTransform {
    pub t: f64,
    pub log_jacobian: f64,
}

/// `t = n·(1 + ξ(z-b)/a)_+^{1/ξ}` and `ln dt/dz`.
///
/// Below the support `t = 0`; above the upper endpoint (ξ < 0) `t = ∞`.
/// Both carry `log_jacobian = -∞`.
pub fn gev_transform(z: f64, params: &GevParams, effective_n: f64) -> GevTransform {
    let x = (z - params.loc) / params.scale;
    match log1p_over_xi(params.shape, x) {
        Some(l) => {
            let log_t = effective_n.ln() + l;
            GevTransform {
                t: log_t.exp(),
                log_jacobian: log_t - params.scale.ln() - (params.shape * x).ln_1p(),
            }
        }
        None => GevTransform {
            t: if params.shape > 0.0 { 0.0 } else { f64::INFINITY },
            log_jacobian: f64::NEG_INFINITY,
        },
    }
}

/// GEV log-likelihood of a sample.
pub fn gev_loglik(params: &GevParams, data: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &y in data {
        let x = (y - params.loc) / params.scale;
        match log1p_over_xi(params.shape, x) {
            Some(l) => acc += -params.scale.ln() - l - (params.shape * x).ln_1p() - (-l).exp(),
            None => return f64::NEG_INFINITY,
        }
    }
    acc
}

/// GPD log-likelihood of a sample of exceedances.
pub fn gpd_loglik(params: &GpdParams, data: &[f64]) -> f64 {
    data.iter().map(|&y| params.log_density(y)).sum()
}

fn mean_sd(data: &[f64]) -> (f64, f64) {
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let v = data.iter().map(|y| (y - m) * (y - m)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

/// Probability-weighted moments `b_0, b_1, b_2` of a sorted sample.
fn pwm(sorted: &[f64]) -> [f64; 3] {
    let n = sorted.len() as f64;
    let mut b = [0.0; 3];
    for (j, &x) in sorted.iter().enumerate() {
        let j = j as f64;
        b[0] += x;
        b[1] += x * j / (n - 1.0);
        b[2] += x * j * (j - 1.0) / ((n - 1.0) * (n - 2.0));
    }
    b.map(|v| v / n)
}

fn gev_pwm_start(sorted: &[f64]) -> [f64; 3] {
    let [b0, b1, b2] = pwm(sorted);
    let c = (2.0 * b1 - b0) / (3.0 * b2 - b0) - 2f64.ln() / 3f64.ln();
    // Hosking's k is -ξ
    let k = (7.859 * c + 2.9554 * c * c).clamp(-0.9, 0.9);
    let (scale, loc) = if k.abs() < 1e-6 {
        let scale = (2.0 * b1 - b0) / 2f64.ln();
        (scale, b0 - 0.577_215_664_901_532_9 * scale)
    } else {
        let g = gamma(1.0 + k);
        let scale = (2.0 * b1 - b0) * k / (g * (1.0 - 2f64.powf(-k)));
        (scale, b0 + scale * (g - 1.0) / k)
    };
    [loc, scale.max(1e-3).ln(), -k]
}

fn check_sample(data: &[f64], what: &str) -> Result<()> {
    if data.len() < MIN_FIT_SIZE {
        return Err(Error::Usage(format!(
            "{what} needs at least {MIN_FIT_SIZE} observations, got {}",
            data.len()
        )));
    }
    if data.iter().any(|y| !y.is_finite()) {
        return Err(Error::Domain(format!("{what}: non-finite observation")));
    }
    Ok(())
}

/// Best of several Nelder–Mead runs from `starts`.
fn best_of_starts<F: Fn(&[f64]) -> f64>(
    f: F,
    starts: &[Vec<f64>],
    scale: &[f64],
    what: &str,
) -> Result<Vec<f64>> {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut notes = Vec::new();
    for x0 in starts {
        if !f(x0).is_finite() {
            notes.push(format!("start {x0:?} infeasible"));
            continue;
        }
        let mut r = maximize_simplex(&f, x0, scale, 1e-10, 20_000)?;
        // one restart from the optimum guards against premature collapse
        let again = maximize_simplex(&f, &r.argmax, scale, 1e-10, 20_000)?;
        if again.value >= r.value {
            r = again;
        }
        if !r.converged {
            notes.push(r.diagnostics.clone());
            continue;
        }
        if best.as_ref().map_or(true, |b| r.value > b.1) {
            best = Some((r.argmax, r.value));
        }
    }
    best.map(|b| b.0).ok_or_else(|| {
        Error::Estimation(format!("{what} did not converge from any start: {}", notes.join("; ")))
    })
}

/// Maximum-likelihood GEV fit, started from probability-weighted moments
/// plus two jittered restarts. The sample is standardized internally.
pub fn fit_gev(maxima: &[f64]) -> Result<GevParams> {
    check_sample(maxima, "GEV fit")?;
    let (m, sd) = mean_sd(maxima);
    if !(sd > 0.0) {
        return Err(Error::Estimation("GEV fit: sample has zero spread".into()));
    }
    let mut std: Vec<f64> = maxima.iter().map(|y| (y - m) / sd).collect();
    std.sort_by(f64::total_cmp);
    let start = gev_pwm_start(&std);
    let objective = |p: &[f64]| {
        let params = GevParams { loc: p[0], scale: p[1].exp(), shape: p[2] };
        gev_loglik(&params, &std)
    };
    let starts = vec![
        start.to_vec(),
        vec![start[0], start[1], start[2] + 0.1],
        vec![start[0] - 0.1, start[1], start[2] - 0.1],
    ];
    let p = best_of_starts(objective, &starts, &[0.2, 0.2, 0.1], "GEV fit")?;
    GevParams::new(m + sd * p[0], sd * p[1].exp(), p[2])
}

/// Maximum-likelihood GPD fit above `threshold` (location pinned at the threshold).
pub fn fit_gpd(exceedances: &[f64], threshold: f64) -> Result<GpdParams> {
    check_sample(exceedances, "GPD fit")?;
    if exceedances.iter().any(|&y| y <= threshold) {
        return Err(Error::Domain("GPD fit: all values must exceed the threshold".into()));
    }
    let excess: Vec<f64> = exceedances.iter().map(|y| y - threshold).collect();
    let unit = excess.iter().sum::<f64>() / excess.len() as f64;
    let mut std: Vec<f64> = excess.iter().map(|e| e / unit).collect();
    std.sort_by(f64::total_cmp);
    let n = std.len() as f64;
    let a0 = 1.0;
    // a1 = E[X (1 - F(X))]
    let a1 = std.iter().enumerate().map(|(j, x)| x * (n - 1.0 - j as f64) / (n - 1.0)).sum::<f64>() / n;
    let xi0 = (2.0 - a0 / (a0 - 2.0 * a1)).clamp(-0.5, 0.9);
    let s0 = (2.0 * a0 * a1 / (a0 - 2.0 * a1)).max(1e-3);
    let objective = |p: &[f64]| {
        let params = GpdParams { loc: 0.0, scale: p[0].exp(), shape: p[1] };
        gpd_loglik(&params, &std)
    };
    let starts = vec![
        vec![s0.ln(), xi0],
        vec![s0.ln(), xi0 + 0.1],
        vec![s0.ln() - 0.1, xi0 - 0.1],
    ];
    let p = best_of_starts(objective, &starts, &[0.2, 0.1], "GPD fit")?;
    GpdParams::new(threshold, unit * p[0].exp(), p[1])
}

/// Empirical distribution below a threshold, GPD tail above it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiParametricMargin {
    sorted: Vec<f64>,
    threshold: f64,
    gpd: GpdParams,
    tail_prob: f64,
}

impl SemiParametricMargin {
    /// Threshold at the `⌈n·p⌉`-th order statistic, GPD fitted to the values above it.
    pub fn fit(sample: &[f64], p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Usage(format!("threshold probability must lie in (0,1), got {p}")));
        }
        let mut sorted = sample.to_vec();
        if sorted.iter().any(|y| !y.is_finite()) {
            return Err(Error::Domain("non-finite observation".into()));
        }
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let k = ((n as f64 * p).ceil() as usize).clamp(1, n);
        let threshold = sorted[k - 1];
        let exc: Vec<f64> = sorted.iter().copied().filter(|&y| y > threshold).collect();
        let gpd = fit_gpd(&exc, threshold)?;
        Self::from_parts(sorted, threshold, gpd)
    }

    /// Assemble from a sample and an already fitted tail.
    pub fn from_parts(mut sample: Vec<f64>, threshold: f64, gpd: GpdParams) -> Result<Self> {
        sample.sort_by(f64::total_cmp);
        if sample.is_empty() {
            return Err(Error::Usage("empty sample".into()));
        }
        let mut m = Self { sorted: sample, threshold, gpd, tail_prob: 0.0 };
        m.tail_prob = 1.0 - m.empirical_cdf(threshold);
        if !(m.tail_prob > 0.0) {
            return Err(Error::Estimation("threshold at or above the sample maximum".into()));
        }
        Ok(m)
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn gpd(&self) -> &GpdParams {
        &self.gpd
    }

    /// `#{x_i ≤ y} / (n + 1)`.
    pub fn empirical_cdf(&self, y: f64) -> f64 {
        let rank = self.sorted.partition_point(|&x| x <= y);
        rank as f64 / (self.sorted.len() as f64 + 1.0)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= self.threshold {
            self.empirical_cdf(y)
        } else {
            1.0 - self.tail_prob * self.gpd.survival(y)
        }
    }

    /// Observation-scale Fréchet value and, above the threshold, `ln dz/dy`.
    pub fn to_frechet(&self, y: f64) -> Result<(f64, Option<f64>)> {
        let f = self.cdf(y);
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Boundary(format!("marginal cdf is {f} at y = {y}")));
        }
        let z = -1.0 / f.ln();
        if y <= self.threshold {
            return Ok((z, None));
        }
        let log_f = self.tail_prob.ln() + self.gpd.log_density(y);
        Ok((z, Some(2.0 * z.ln() + log_f - f.ln())))
    }
}

/// Marginal model of a single component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Margin {
    /// Data already on the unit Fréchet observation scale.
    KnownFrechet,
    /// GEV fitted to maxima of blocks of `block_length` observations.
    FittedGev { params: GevParams, block_length: usize },
    SemiParametric(SemiParametricMargin),
}

/// Unit-Fréchet values of one row with its log-Jacobian. `smooth` is false when some
/// component fell in an empirical (step-function) part where no density exists; those
/// components contribute 0 to `log_jacobian`.
#[derive(Debug, Clone, PartialEq)]
pub struct Transformed {
    pub z: Vec<f64>,
    pub log_jacobian: f64,
    pub smooth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalModel {
    components: Vec<Margin>,
}

impl MarginalModel {
    pub fn new(components: Vec<Margin>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Usage("marginal model needs at least one component".into()));
        }
        Ok(Self { components })
    }

    pub fn known_frechet(dim: usize) -> Self {
        Self { components: vec![Margin::KnownFrechet; dim] }
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Margin] {
        &self.components
    }

    pub fn is_known_frechet(&self) -> bool {
        self.components.iter().all(|c| matches!(c, Margin::KnownFrechet))
    }

    /// Observation-scale transform of component `d`.
    pub fn component_to_frechet(&self, d: usize, y: f64) -> Result<(f64, Option<f64>)> {
        match &self.components[d] {
            Margin::KnownFrechet => {
                if !(y > 0.0) {
                    return Err(Error::Domain(format!("unit Fréchet value must be positive, got {y}")));
                }
                Ok((y, Some(0.0)))
            }
            Margin::FittedGev { params, block_length } => {
                let t = gev_transform(y, params, *block_length as f64);
                if !(t.t > 0.0 && t.t.is_finite()) {
                    return Err(Error::Boundary(format!(
                        "y = {y} lies outside the fitted GEV support"
                    )));
                }
                Ok((t.t, Some(t.log_jacobian)))
            }
            Margin::SemiParametric(m) => m.to_frechet(y),
        }
    }

    /// Map one row to the unit Fréchet observation scale.
    pub fn to_unit_frechet(&self, y: &[f64]) -> Result<Transformed> {
        if y.len() != self.dim() {
            return Err(Error::Usage(format!(
                "row has {} components, margins have {}",
                y.len(),
                self.dim()
            )));
        }
        let mut z = Vec::with_capacity(y.len());
        let mut log_jacobian = 0.0;
        let mut smooth = true;
        for (d, &v) in y.iter().enumerate() {
            let (zd, lj) = self.component_to_frechet(d, v)?;
            z.push(zd);
            match lj {
                Some(l) => log_jacobian += l,
                None => smooth = false,
            }
        }
        Ok(Transformed { z, log_jacobian, smooth })
    }

    /// Map block maxima of length `block_length` to the unit Fréchet maxima scale.
    pub fn maxima_to_unit_frechet(&self, m: &[f64], block_length: usize) -> Result<Transformed> {
        let mut t = self.to_unit_frechet(m)?;
        let l = block_length as f64;
        t.z.iter_mut().for_each(|z| *z /= l);
        t.log_jacobian -= m.len() as f64 * l.ln();
        Ok(t)
    }

    /// Threshold of component `d` on the observation Fréchet scale.
    pub fn threshold_to_frechet(&self, d: usize, u: f64) -> Result<f64> {
        self.component_to_frechet(d, u).map(|r| r.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gev_transform_examples() {
        let p = GevParams::new(0.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(gev_transform(0.0, &p, 1.0).t, 1.0);
        let p = GevParams::new(1.0, 1.0, 1.0).unwrap();
        let t = gev_transform(1.0, &p, 1.0).t;
        assert_relative_eq!((-1.0 / t).exp(), (-1.0f64).exp());
        let p = GevParams::new(0.0, 1.0, 0.2).unwrap();
        assert_relative_eq!(gev_transform(2.0, &p, 100.0).t, 537.824, max_relative = 1e-12);
        // below support
        let below = gev_transform(-2.0, &GevParams::new(0.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(below.t, 0.0);
        assert_eq!(below.log_jacobian, f64::NEG_INFINITY);
    }

    #[test]
    fn gev_gumbel_limit() {
        let z = 0.7;
        let t0 = gev_transform(z, &GevParams::new(0.1, 1.3, 0.0).unwrap(), 1.0);
        assert_relative_eq!(t0.t, ((z - 0.1) / 1.3f64).exp(), max_relative = 1e-14);
        for xi in [1e-8, -1e-8] {
            let t = gev_transform(z, &GevParams::new(0.1, 1.3, xi).unwrap(), 1.0);
            assert_relative_eq!(t.t, t0.t, max_relative = 1e-6);
        }
    }

    #[test]
    fn gev_jacobian_matches_difference() {
        let p = GevParams::new(0.3, 0.8, -0.2).unwrap();
        let z = 1.1;
        let h = 1e-6;
        let d = (gev_transform(z + h, &p, 7.0).t - gev_transform(z - h, &p, 7.0).t) / (2.0 * h);
        assert_relative_eq!(gev_transform(z, &p, 7.0).log_jacobian, d.ln(), max_relative = 1e-7);
    }

    #[test]
    fn frechet_plugin() {
        let sample: Vec<f64> = (1..=99).map(|i| i as f64).collect();
        let gpd = GpdParams::new(90.0, 5.0, 0.1).unwrap();
        let m = SemiParametricMargin::from_parts(sample, 90.0, gpd).unwrap();
        // rank 50 of 99 -> F = 0.5
        let (z, lj) = m.to_frechet(50.0).unwrap();
        assert_relative_eq!(z, 1.0 / 2f64.ln(), max_relative = 1e-14);
        assert!(lj.is_none());
        assert!(matches!(m.to_frechet(0.5), Err(Error::Boundary(_))));
        // continuity at the junction
        assert!((m.cdf(90.0) - m.cdf(90.0 + 1e-12)).abs() < 1e-9);
    }

    #[test]
    fn known_frechet_identity() {
        let mm = MarginalModel::known_frechet(2);
        let t = mm.to_unit_frechet(&[0.3, 7.0]).unwrap();
        assert_eq!(t.z, vec![0.3, 7.0]);
        assert_eq!(t.log_jacobian, 0.0);
        assert!(t.smooth);
    }

    #[test]
    fn semiparametric_jacobian_matches_difference() {
        let sample: Vec<f64> = (1..=200).map(|i| 1.0 / (1.0 - i as f64 / 201.0)).collect();
        let m = SemiParametricMargin::fit(&sample, 0.8).unwrap();
        let y = 30.0;
        let h = 1e-6;
        let dz = (m.to_frechet(y + h).unwrap().0 - m.to_frechet(y - h).unwrap().0) / (2.0 * h);
        assert_relative_eq!(m.to_frechet(y).unwrap().1.unwrap(), dz.ln(), max_relative = 1e-6);
    }
}
