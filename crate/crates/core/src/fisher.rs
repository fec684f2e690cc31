//! Fisher information per observation for the bivariate logistic model with
//! known unit Fréchet margins, and root asymptotic relative efficiencies with
//! respect to the censored estimator `Thr4`.
//!
//! Censored informations are computed by nested adaptive quadrature. Points
//! above the threshold are written as `y_d = (s w_d)^{-α}` with `s = v^{1/α}`,
//! `v = V(y₁, y₂)`, `w₁ = w`, `w₂ = 1 - w`, under which the logistic density
//! times the Jacobian is `α e^{-v} (v + (1-α)/α)` and all scores are explicit
//! in `(ln v, ln w, ln(1-w))`.

use std::cell::Cell;
use std::f64::consts::LN_2;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihoods::{
    censored_contrib, fit_threshold, select_threshold, BlockMaximaData, CensoredVariant, Estimator, KindTag,
};
use crate::margins::MarginalModel;
use crate::model::{alpha_derivs_bivariate, LogisticParams, SetPartition};
use crate::quad::integrate;
use crate::simulate::{sample_logistic_maxstable, SeedSpec};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfoMethod {
    Quadrature,
    MonteCarlo,
}

impl InfoMethod {
    pub fn name(&self) -> &'static str {
        match self {
            InfoMethod::Quadrature => "quadrature",
            InfoMethod::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoResult {
    pub info_per_obs: f64,
    pub method: InfoMethod,
    /// Zero for quadrature results.
    pub mc_stderr: f64,
}

/// Absolute tolerance for each term of the censored information.
pub const QUAD_TOL: f64 = 1e-8;
/// Relative accuracy requested alongside the absolute tolerance; large
/// integrands at small α cannot reach `1e-8` absolute in double precision.
const REL_FLOOR: f64 = 1e-11;
/// Finite-difference step for Monte Carlo scores.
pub const FD_STEP: f64 = 1e-5;

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("information needs alpha in (0,1), got {alpha}")));
    }
    Ok(())
}

fn frechet_level(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("threshold probability must lie in (0,1), got {p}")));
    }
    Ok(-1.0 / p.ln())
}

/// Richardson-extrapolated central difference from values at `α ± h, α ± 2h`.
fn richardson(f_m2: f64, f_m1: f64, f_p1: f64, f_p2: f64, h: f64) -> f64 {
    (8.0 * (f_p1 - f_m1) - (f_p2 - f_m2)) / (12.0 * h)
}

// ---------------------------------------------------------------------------
// Closed-form scores in log coordinates

/// First and second α-derivatives of `ln s`, `s = Σ y_d^{-1/α}`, at fixed
/// `y`, from `ln f_d = ln y_d^{-1/α}` and `ln s`.
fn log_s_derivs(alpha: f64, ln_f: [f64; 2], ln_s: f64) -> (f64, f64) {
    let (mut d1, mut m2) = (0.0, 0.0);
    for lf in ln_f {
        let p = (lf - ln_s).exp();
        let l = -alpha * lf;
        d1 += p * l / (alpha * alpha);
        m2 += p * (l * l / alpha.powi(4) - 2.0 * l / alpha.powi(3));
    }
    (d1, m2 - d1 * d1)
}

/// Point above both thresholds (or anywhere, for block maxima) in the
/// `(v, w)` coordinates.
#[derive(Debug, Clone, Copy)]
struct Polar {
    v: f64,
    ln_s: f64,
    ln_f: [f64; 2],
}

impl Polar {
    fn new(alpha: f64, v: f64, w: f64) -> Self {
        let ln_s = v.ln() / alpha;
        Self { v, ln_s, ln_f: [ln_s + w.ln(), ln_s + (-w).ln_1p()] }
    }

    /// Point with `y₂ = u`, parametrized by `v = V(y₁, u)`.
    fn on_strip(alpha: f64, v: f64, u: f64) -> Self {
        let ln_s = v.ln() / alpha;
        let ln_f2 = -u.ln() / alpha;
        let ln_f1 = ln_s + (-(-(u * v).ln() / alpha).exp_m1()).ln();
        Self { v, ln_s, ln_f: [ln_f1, ln_f2] }
    }

    fn sum_ln_f(&self) -> f64 {
        self.ln_f[0] + self.ln_f[1]
    }

    fn dv(&self, alpha: f64, d_ln_s: f64) -> f64 {
        self.v * (self.ln_s + alpha * d_ln_s)
    }
}

/// Score of `ln{(V₁V₂ - V₁₂) e^{-V}}`, the joint density.
fn score_joint_density(alpha: f64, pt: &Polar) -> f64 {
    let (d, _) = log_s_derivs(alpha, pt.ln_f, pt.ln_s);
    let q = (1.0 - alpha) / alpha;
    let dv = pt.dv(alpha, d);
    pt.ln_s + (alpha - 2.0) * d - pt.sum_ln_f() / alpha + (dv - 1.0 / (alpha * alpha)) / (pt.v + q) - dv
}

/// Score of `ln{V₁V₂ e^{-V}}`, two separate occurrence times.
fn score_separate(alpha: f64, pt: &Polar) -> f64 {
    let (d, _) = log_s_derivs(alpha, pt.ln_f, pt.ln_s);
    2.0 * pt.ln_s + (2.0 * alpha - 2.0) * d - pt.sum_ln_f() / alpha - pt.dv(alpha, d)
}

/// Score of `ln{-V₁₂ e^{-V}}`, a common occurrence time.
fn score_common(alpha: f64, pt: &Polar) -> f64 {
    let (d, _) = log_s_derivs(alpha, pt.ln_f, pt.ln_s);
    -1.0 / (1.0 - alpha) - 1.0 / alpha + pt.ln_s + (alpha - 2.0) * d - pt.sum_ln_f() / alpha - pt.dv(alpha, d)
}

/// Score of `ln{-V₁(y, u) e^{-V(y, u)}}`, one component censored.
fn score_strip_ev(alpha: f64, pt: &Polar) -> f64 {
    let (d, _) = log_s_derivs(alpha, pt.ln_f, pt.ln_s);
    pt.ln_s + (alpha - 1.0) * d - pt.ln_f[0] / alpha - pt.dv(alpha, d)
}

/// Score and its α-derivative for the tail approximation `F ≈ 1 - V`.
fn score_strip_tail(alpha: f64, pt: &Polar) -> (f64, f64) {
    let (d, d2) = log_s_derivs(alpha, pt.ln_f, pt.ln_s);
    let psi = pt.ln_s + (alpha - 1.0) * d - pt.ln_f[0] / alpha;
    let dpsi = 2.0 * d + (alpha - 1.0) * d2 + 2.0 * pt.ln_f[0] / (alpha * alpha);
    (psi, dpsi)
}

fn score_joint_tail(alpha: f64, pt: &Polar) -> (f64, f64) {
    let (d, d2) = log_s_derivs(alpha, pt.ln_f, pt.ln_s);
    let sl = pt.sum_ln_f();
    let psi = -1.0 / (1.0 - alpha) - 1.0 / alpha + pt.ln_s + (alpha - 2.0) * d - sl / alpha;
    let dpsi = -1.0 / (1.0 - alpha).powi(2) + 1.0 / (alpha * alpha) + 2.0 * d + (alpha - 2.0) * d2
        + 2.0 * sl / (alpha * alpha);
    (psi, dpsi)
}

/// Integrand of the one-censored-component term of the `Thr4` information
/// as a function of `v = V(y, u)` on `(1/u, 2^α/u)`: squared score times
/// `e^{-v}`, the density of `v` on the strip.
pub fn strip_integrand(alpha: f64, u: f64, v: f64) -> f64 {
    let pt = Polar::on_strip(alpha, v, u);
    let sc = score_strip_ev(alpha, &pt);
    sc * sc * (-v).exp()
}

// ---------------------------------------------------------------------------
// Quadrature driver

struct Quad {
    tol: f64,
    failure: Cell<Option<Error>>,
}

impl Quad {
    fn new(tol: f64) -> Self {
        Self { tol, failure: Cell::new(None) }
    }

    fn run<F: FnMut(f64) -> f64>(&self, f: F, a: f64, b: f64, tol: f64) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        match integrate(f, a, b, tol, REL_FLOOR) {
            Ok(q) => q.value,
            Err(e) => {
                let first = self.failure.take().unwrap_or(e);
                self.failure.set(Some(first));
                f64::NAN
            }
        }
    }

    fn finish(self, value: f64) -> Result<f64> {
        if let Some(e) = self.failure.take() {
            return Err(e);
        }
        if !value.is_finite() {
            return Err(Error::Estimation(format!("quadrature produced {value}")));
        }
        Ok(value)
    }

    /// `∫∫ g(pt) α e^{-v}(v + (1-α)/α) dw dv` over both components above `u`,
    /// using the symmetry `w ↔ 1-w` of every integrand used here.
    fn joint_region<G: Fn(&Polar) -> f64>(&self, alpha: f64, u: f64, g: G) -> f64 {
        let q = (1.0 - alpha) / alpha;
        let inner_tol = self.tol * 0.1;
        let outer = |v: f64, lo_w: f64| {
            let inner = self.run(|w| g(&Polar::new(alpha, v, w)), lo_w, 0.5, inner_tol);
            2.0 * alpha * (-v).exp() * (v + q) * inner
        };
        let low = self.run(|v| outer(v, 0.0), 0.0, 1.0 / u, self.tol);
        let high = self.run(
            // w ∈ (1 - c/s, c/s) with c/s = (uv)^{-1/α}
            |v| outer(v, -(-(u * v).ln() / alpha).exp_m1()),
            1.0 / u,
            2f64.powf(alpha) / u,
            self.tol,
        );
        low + high
    }

    /// `∫ g(pt) e^{-v} dv` over one strip.
    fn strip<G: Fn(&Polar) -> f64>(&self, alpha: f64, u: f64, g: G) -> f64 {
        self.run(|v| g(&Polar::on_strip(alpha, v, u)) * (-v).exp(), 1.0 / u, 2f64.powf(alpha) / u, self.tol)
    }
}

/// Expectations of the censored working likelihood at `u` under the true
/// model: `(P(region) sums, E[ψ], E[ψ²], E[∂ψ])`.
struct CensoredMoments {
    mass: f64,
    mean: f64,
    second: f64,
    slope: f64,
}

fn censored_moments(alpha: f64, u: f64, variant: CensoredVariant, tol: f64) -> Result<CensoredMoments> {
    let quad = Quad::new(tol);
    let a = 2f64.powf(alpha) / u;
    let atom_p = (-a).exp();
    let mass = atom_p + 2.0 * quad.strip(alpha, u, |_| 1.0) + quad.joint_region(alpha, u, |_| 1.0);
    let out = match variant {
        CensoredVariant::Ev => {
            let atom = a * LN_2;
            let strip = quad.strip(alpha, u, |pt| score_strip_ev(alpha, pt).powi(2));
            let joint = quad.joint_region(alpha, u, |pt| score_joint_density(alpha, pt).powi(2));
            CensoredMoments { mass, mean: 0.0, second: atom * atom * atom_p + 2.0 * strip + joint, slope: f64::NAN }
        }
        CensoredVariant::Tail => {
            let (psi0, dpsi0) = (-a * LN_2 / (1.0 - a), -a * LN_2 * LN_2 / (1.0 - a).powi(2));
            let m1 = atom_p * psi0
                + 2.0 * quad.strip(alpha, u, |pt| score_strip_tail(alpha, pt).0)
                + quad.joint_region(alpha, u, |pt| score_joint_tail(alpha, pt).0);
            let m2 = atom_p * psi0 * psi0
                + 2.0 * quad.strip(alpha, u, |pt| score_strip_tail(alpha, pt).0.powi(2))
                + quad.joint_region(alpha, u, |pt| score_joint_tail(alpha, pt).0.powi(2));
            let dm = atom_p * dpsi0
                + 2.0 * quad.strip(alpha, u, |pt| score_strip_tail(alpha, pt).1)
                + quad.joint_region(alpha, u, |pt| score_joint_tail(alpha, pt).1);
            CensoredMoments { mass, mean: m1, second: m2, slope: dm }
        }
    };
    quad.finish(out.mass + out.second + if out.slope.is_nan() { 0.0 } else { out.mean + out.slope })?;
    Ok(out)
}

/// Total probability of the atom, the two strips and the joint region at
/// threshold probability `p`; equals one up to quadrature error.
pub fn censored_region_mass(alpha: f64, p: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(censored_moments(alpha, frechet_level(p)?, CensoredVariant::Ev, QUAD_TOL)?.mass)
}

/// Information of the censored estimators at marginal threshold
/// probability `p`, with quadrature tolerance `tol` per term.
///
/// `Thr4` is the expected squared score. `Thr5` maximizes a misspecified
/// likelihood, so its value is the sandwich `E[∂ψ]² / Var(ψ)` under the
/// logistic model.
pub fn info_censored_with_tol(alpha: f64, p: f64, variant: Estimator, tol: f64) -> Result<InfoResult> {
    check_alpha(alpha)?;
    let u = frechet_level(p)?;
    let info = match variant {
        Estimator::Thr4 => censored_moments(alpha, u, CensoredVariant::Ev, tol)?.second,
        Estimator::Thr5 => {
            let v_u = 2f64.powf(alpha) / u;
            if v_u >= 1.0 {
                return Err(Error::ThresholdTooLow(format!("V(u, u) = {v_u} ≥ 1 at p = {p}")));
            }
            let m = censored_moments(alpha, u, CensoredVariant::Tail, tol)?;
            m.slope * m.slope / (m.second - m.mean * m.mean)
        }
        other => return Err(Error::Usage(format!("{other} has no censored information"))),
    };
    Ok(InfoResult { info_per_obs: info, method: InfoMethod::Quadrature, mc_stderr: 0.0 })
}

pub fn info_censored(alpha: f64, p: f64, variant: Estimator) -> Result<InfoResult> {
    info_censored_with_tol(alpha, p, variant, QUAD_TOL)
}

// ---------------------------------------------------------------------------
// Block maxima

/// Information per maximum by quadrature over the limiting logistic law.
/// `Max1` uses the joint density; `Max2` adds the occurrence partition.
pub fn info_block_max_quadrature(alpha: f64, block_length: usize, variant: Estimator) -> Result<InfoResult> {
    check_alpha(alpha)?;
    check_block(block_length)?;
    let quad = Quad::new(1e-10);
    let q = (1.0 - alpha) / alpha;
    let per_max = match variant {
        Estimator::Max1 => whole_plane(&quad, alpha, |pt| (pt.v + q) * score_joint_density(alpha, pt).powi(2)),
        Estimator::Max2 | Estimator::Max3 => whole_plane(&quad, alpha, |pt| {
            pt.v * score_separate(alpha, pt).powi(2) + q * score_common(alpha, pt).powi(2)
        }),
        other => return Err(Error::Usage(format!("{other} is not a block-maximum estimator"))),
    };
    let per_max = quad.finish(per_max)?;
    Ok(InfoResult {
        info_per_obs: per_max / block_length as f64,
        method: InfoMethod::Quadrature,
        mc_stderr: 0.0,
    })
}

/// `∫₀^∞ ∫₀¹ h(pt) α e^{-v} dw dv`, symmetric in `w`; the tail beyond
/// `v = 60` is below double precision.
fn whole_plane<H: Fn(&Polar) -> f64>(quad: &Quad, alpha: f64, h: H) -> f64 {
    let inner_tol = quad.tol * 0.1;
    let outer = |v: f64| 2.0 * alpha * (-v).exp() * quad.run(|w| h(&Polar::new(alpha, v, w)), 0.0, 0.5, inner_tol);
    quad.run(&outer, 0.0, 1.0, quad.tol) + quad.run(&outer, 1.0, 60.0, quad.tol)
}

fn check_block(block_length: usize) -> Result<()> {
    if block_length == 0 {
        return Err(Error::Usage("block length must be at least 1".into()));
    }
    Ok(())
}

/// Finite-difference scores of single-maximum log-likelihoods at `alpha`
/// for `mc` bivariate logistic maxima with occurrence partitions drawn from
/// their conditional probabilities.
pub fn block_max_scores(alpha: f64, variant: Estimator, mc: usize, seed: SeedSpec) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    if !variant.is_block_maximum() {
        return Err(Error::Usage(format!("{variant} is not a block-maximum estimator")));
    }
    if mc < 2 {
        return Err(Error::Usage("need at least 2 Monte Carlo samples".into()));
    }
    let variant = if variant == Estimator::Max3 { Estimator::Max2 } else { variant };
    let params = LogisticParams::new(alpha)?;
    let z = sample_logistic_maxstable(mc, 2, &params, seed)?;
    // partition draws use a separate stream of the same key
    let mut rng = SeedSpec::new(seed.master_seed, seed.stream_id ^ (1 << 63)).rng();
    let joint = SetPartition::new(vec![vec![0, 1]])?;
    let apart = SetPartition::new(vec![vec![0], vec![1]])?;
    let mut parts = Vec::with_capacity(mc);
    for row in z.rows() {
        let d = alpha_derivs_bivariate([row[0], row[1]], &params)?;
        let sep = d.v1 * d.v2;
        let p_sep = sep / (sep - d.v12);
        let u: f64 = rand::Rng::gen(&mut rng);
        parts.push(if u < p_sep { apart.clone() } else { joint.clone() });
    }
    let data = BlockMaximaData::new(z, parts, 1, MarginalModel::known_frechet(2))?;
    let h = FD_STEP;
    let at = |k: f64| data.contributions(variant, alpha + k * h);
    let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
    Ok((0..mc).map(|i| richardson(m2[i], m1[i], p1[i], p2[i], h)).collect())
}

/// Information and its standard error from i.i.d. scores.
fn score_variance(scores: &[f64]) -> (f64, f64) {
    let n = scores.len() as f64;
    let m = stats::mean(scores);
    let var = stats::variance(scores);
    let m4 = scores.iter().map(|s| (s - m).powi(4)).sum::<f64>() / n;
    (var, ((m4 - var * var).max(0.0) / n).sqrt())
}

/// Information per raw observation of a block-maximum estimator, `i(α)/L`,
/// from the variance of `mc` Monte Carlo scores. `Max3` shares the `Max2`
/// value.
pub fn info_block_max(
    alpha: f64,
    block_length: usize,
    variant: Estimator,
    mc: usize,
    seed: SeedSpec,
) -> Result<InfoResult> {
    check_block(block_length)?;
    let scores = block_max_scores(alpha, variant, mc, seed)?;
    let (var, se) = score_variance(&scores);
    let l = block_length as f64;
    Ok(InfoResult { info_per_obs: var / l, method: InfoMethod::MonteCarlo, mc_stderr: se / l })
}

// ---------------------------------------------------------------------------
// Monte Carlo checks of the censored information

/// Per-row censored contributions' scores at `alpha` for `mc` exact
/// logistic pairs, with marginal threshold probability `p`. Returns the
/// first derivative and, for the tail variant, the second.
pub fn censored_scores(
    alpha: f64,
    p: f64,
    variant: Estimator,
    mc: usize,
    seed: SeedSpec,
) -> Result<Vec<(f64, f64)>> {
    check_alpha(alpha)?;
    let u = frechet_level(p)?;
    let cv = match variant {
        Estimator::Thr4 => CensoredVariant::Ev,
        Estimator::Thr5 => CensoredVariant::Tail,
        other => return Err(Error::Usage(format!("{other} has no censored contribution"))),
    };
    let z = sample_logistic_maxstable(mc, 2, &LogisticParams::new(alpha)?, seed)?;
    let margins = MarginalModel::known_frechet(2);
    let uu = [u, u];
    let h = FD_STEP;
    let h2 = 1e-4;
    crate::par_map(mc, |i| {
        let y = [z[[i, 0]], z[[i, 1]]];
        let at = |a: f64| censored_contrib(&y, &uu, a, &margins, cv);
        let d1 = richardson(at(alpha - 2.0 * h)?, at(alpha - h)?, at(alpha + h)?, at(alpha + 2.0 * h)?, h);
        let d2 = (at(alpha + h2)? - 2.0 * at(alpha)? + at(alpha - h2)?) / (h2 * h2);
        Ok((d1, d2))
    })
    .into_iter()
    .collect()
}

/// Monte Carlo counterpart of [`info_censored`].
pub fn info_censored_mc(alpha: f64, p: f64, variant: Estimator, mc: usize, seed: SeedSpec) -> Result<InfoResult> {
    if mc < 2 {
        return Err(Error::Usage("need at least 2 Monte Carlo samples".into()));
    }
    let sc = censored_scores(alpha, p, variant, mc, seed)?;
    let first: Vec<f64> = sc.iter().map(|s| s.0).collect();
    let (var, se) = score_variance(&first);
    if variant == Estimator::Thr4 {
        return Ok(InfoResult { info_per_obs: var, method: InfoMethod::MonteCarlo, mc_stderr: se });
    }
    let slope = stats::mean(&sc.iter().map(|s| s.1).collect::<Vec<_>>());
    let slope_se = (stats::variance(&sc.iter().map(|s| s.1).collect::<Vec<_>>()) / mc as f64).sqrt();
    let info = slope * slope / var;
    let rel = ((2.0 * slope_se / slope.abs()).powi(2) + (se / var).powi(2)).sqrt();
    Ok(InfoResult { info_per_obs: info, method: InfoMethod::MonteCarlo, mc_stderr: info * rel })
}

// ---------------------------------------------------------------------------
// Threshold estimators by repeated fitting

/// Share of failed replicate fits above which the estimate is rejected.
pub const MAX_FAILED_SHARE: f64 = 0.01;

/// Replicate estimates of `variant` on `R` exact logistic samples of size
/// `n` with known margins; `None` marks a failed fit.
pub fn threshold_replicates(
    alpha: f64,
    p: f64,
    variant: Estimator,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    check_alpha(alpha)?;
    frechet_level(p)?;
    let kind = match variant {
        Estimator::Thr1 | Estimator::Thr3 | Estimator::Thr4 | Estimator::Thr5 | Estimator::ThrPair => KindTag::Marginal,
        Estimator::Thr2 => KindTag::Diagonal,
        other => return Err(Error::Usage(format!("{other} is not a threshold estimator"))),
    };
    let params = LogisticParams::new(alpha)?;
    let fit_one = |r: usize| -> Result<f64> {
        let data: Array2<f64> = sample_logistic_maxstable(n, 2, &params, SeedSpec::new(seed, r as u64))?;
        let td = select_threshold(p, kind, data, MarginalModel::known_frechet(2))?;
        Ok(fit_threshold(variant, &td)?.alpha_hat)
    };
    Ok(crate::par_map(replicates, |r| fit_one(r).ok()))
}

/// Information per observation `1/(n Var α̂)` of a non-censored threshold
/// estimator over `R` replicate fits, with delta-method standard error
/// `info·√(2/(R-1))`.
pub fn info_threshold_mc(
    alpha: f64,
    p: f64,
    variant: Estimator,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<InfoResult> {
    if !matches!(variant, Estimator::Thr1 | Estimator::Thr2 | Estimator::Thr3) {
        return Err(Error::Usage(format!("{variant} information is not estimated by refitting")));
    }
    if replicates < 3 || n < 2 {
        return Err(Error::Usage("need at least 3 replicates and 2 observations".into()));
    }
    let fits = threshold_replicates(alpha, p, variant, n, replicates, seed)?;
    let ok: Vec<f64> = fits.iter().flatten().copied().collect();
    let failed = replicates - ok.len();
    if failed as f64 > MAX_FAILED_SHARE * replicates as f64 {
        return Err(Error::Estimation(format!("{failed} of {replicates} {variant} fits failed")));
    }
    let info = 1.0 / (n as f64 * stats::variance(&ok));
    Ok(InfoResult {
        info_per_obs: info,
        method: InfoMethod::MonteCarlo,
        mc_stderr: info * (2.0 / (ok.len() as f64 - 1.0)).sqrt(),
    })
}

// ---------------------------------------------------------------------------
// Efficiency table

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BlockInfoMethod {
    Quadrature,
    MonteCarlo { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdMcConfig {
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreConfig {
    pub block_method: BlockInfoMethod,
    /// Thr1 and Thr2 rows are produced only when this is set.
    pub threshold_mc: Option<ThresholdMcConfig>,
    pub include_thr5: bool,
}

impl Default for AreConfig {
    fn default() -> Self {
        Self { block_method: BlockInfoMethod::Quadrature, threshold_mc: None, include_thr5: false }
    }
}

/// One cell of the efficiency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreRow {
    pub estimator: Estimator,
    pub alpha: f64,
    /// `L=<block length>;p=<reference p>` for block maxima, `p=<p>` otherwise.
    pub l_or_p: String,
    pub root_are_percent: f64,
    pub method: InfoMethod,
    pub mc_stderr: f64,
}

pub const ARE_CSV_HEADER: &str = "estimator,alpha,L_or_p,root_are_percent,method,mc_stderr";

impl AreRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.estimator,
            self.alpha,
            self.l_or_p,
            self.root_are_percent,
            self.method.name(),
            self.mc_stderr
        )
    }
}

/// `100·√(i/i_ref)` with the Monte Carlo error of `i` carried through.
fn root_are(info: &InfoResult, reference: f64) -> (f64, f64) {
    let r = 100.0 * (info.info_per_obs / reference).sqrt();
    (r, r * info.mc_stderr / (2.0 * info.info_per_obs))
}

/// Root asymptotic relative efficiencies (%) with respect to `Thr4` at each
/// `p`, for every `α` in `alpha_grid`. Cells are computed in parallel and
/// returned in grid order: `p`, then `α`, then estimator.
pub fn are_table(alpha_grid: &[f64], block_length: usize, p_grid: &[f64], config: &AreConfig) -> Result<Vec<AreRow>> {
    check_block(block_length)?;
    let cells: Vec<(f64, f64)> = p_grid.iter().flat_map(|&p| alpha_grid.iter().map(move |&a| (p, a))).collect();
    let blocks = crate::par_map(cells.len(), |i| {
        let (p, alpha) = cells[i];
        are_cell(alpha, p, block_length, config, i as u64)
    });
    let mut out = Vec::new();
    for b in blocks {
        out.extend(b?);
    }
    Ok(out)
}

fn are_cell(alpha: f64, p: f64, block_length: usize, config: &AreConfig, cell: u64) -> Result<Vec<AreRow>> {
    let reference = info_censored(alpha, p, Estimator::Thr4)?.info_per_obs;
    let row = |estimator: Estimator, l_or_p: String, info: &InfoResult| {
        let (r, se) = root_are(info, reference);
        AreRow { estimator, alpha, l_or_p, root_are_percent: r, method: info.method, mc_stderr: se }
    };
    let lp = format!("L={block_length};p={p}");
    let pp = format!("p={p}");
    let mut rows = Vec::new();
    for (k, est) in [Estimator::Max1, Estimator::Max2].into_iter().enumerate() {
        let info = match config.block_method {
            BlockInfoMethod::Quadrature => info_block_max_quadrature(alpha, block_length, est)?,
            BlockInfoMethod::MonteCarlo { samples, seed } => {
                info_block_max(alpha, block_length, est, samples, SeedSpec::new(seed, 2 * cell + k as u64))?
            }
        };
        rows.push(row(est, lp.clone(), &info));
    }
    if let Some(mc) = config.threshold_mc {
        for (k, est) in [Estimator::Thr1, Estimator::Thr2].into_iter().enumerate() {
            // distinct master seeds per cell and estimator; streams index replicates
            let seed = mc.seed.wrapping_add(1_000_003 * (2 * cell + k as u64));
            let info = info_threshold_mc(alpha, p, est, mc.n, mc.replicates, seed)?;
            rows.push(row(est, pp.clone(), &info));
        }
    }
    rows.push(AreRow {
        estimator: Estimator::Thr4,
        alpha,
        l_or_p: pp.clone(),
        root_are_percent: 100.0,
        method: InfoMethod::Quadrature,
        mc_stderr: 0.0,
    });
    if config.include_thr5 {
        let info = info_censored(alpha, p, Estimator::Thr5)?;
        rows.push(row(Estimator::Thr5, pp, &info));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::BivariateDerivs;

    fn y_of(pt: &Polar, alpha: f64) -> [f64; 2] {
        [(-alpha * pt.ln_f[0]).exp(), (-alpha * pt.ln_f[1]).exp()]
    }

    fn derivs(pt: &Polar, alpha: f64) -> BivariateDerivs {
        alpha_derivs_bivariate(y_of(pt, alpha), &LogisticParams::new(alpha).unwrap()).unwrap()
    }

    #[test]
    fn polar_scores_match_closed_form_derivatives() {
        for &(alpha, v, w) in &[(0.3, 0.7, 0.2), (0.5, 0.05, 0.6), (0.8, 2.5, 0.45)] {
            let pt = Polar::new(alpha, v, w);
            let d = derivs(&pt, alpha);
            let g = d.v1 * d.v2 - d.v12;
            let joint = (d.v1_a * d.v2 + d.v1 * d.v2_a - d.v12_a) / g - d.v_a;
            assert!((score_joint_density(alpha, &pt) - joint).abs() < 1e-9 * joint.abs().max(1.0));
            let sep = d.v1_a / d.v1 + d.v2_a / d.v2 - d.v_a;
            assert!((score_separate(alpha, &pt) - sep).abs() < 1e-9 * sep.abs().max(1.0));
            let common = d.v12_a / d.v12 - d.v_a;
            assert!((score_common(alpha, &pt) - common).abs() < 1e-9 * common.abs().max(1.0));
            assert!((d.v - v).abs() < 1e-12 * v);
        }
    }

    #[test]
    fn strip_score_matches_closed_form() {
        let (alpha, u) = (0.5, 19.5);
        for v in [0.052, 0.06, 0.07] {
            let pt = Polar::on_strip(alpha, v, u);
            let y = y_of(&pt, alpha);
            assert!((y[1] - u).abs() < 1e-9 * u);
            let d = derivs(&pt, alpha);
            let want = d.v1_a / d.v1 - d.v_a;
            assert!((score_strip_ev(alpha, &pt) - want).abs() < 1e-8 * want.abs().max(1.0));
            let (psi, _) = score_strip_tail(alpha, &pt);
            assert!((psi - d.v1_a / d.v1).abs() < 1e-8 * psi.abs().max(1.0));
        }
    }

    #[test]
    fn tail_score_slopes_by_differences() {
        let (alpha, h) = (0.4, 1e-5);
        let pt = Polar::new(alpha, 0.03, 0.3);
        let y = y_of(&pt, alpha);
        // rebuild the point at shifted α with y held fixed
        let at = |a: f64| {
            let f = [y[0].powf(-1.0 / a), y[1].powf(-1.0 / a)];
            let s = f[0] + f[1];
            Polar { v: s.powf(a), ln_s: s.ln(), ln_f: [f[0].ln(), f[1].ln()] }
        };
        let fd = (score_joint_tail(alpha + h, &at(alpha + h)).0 - score_joint_tail(alpha - h, &at(alpha - h)).0)
            / (2.0 * h);
        let (_, slope) = score_joint_tail(alpha, &pt);
        assert!((fd - slope).abs() < 1e-5 * slope.abs());
        let fd = (score_strip_tail(alpha + h, &at(alpha + h)).0 - score_strip_tail(alpha - h, &at(alpha - h)).0)
            / (2.0 * h);
        assert!((fd - score_strip_tail(alpha, &pt).1).abs() < 1e-5 * fd.abs());
    }

    #[test]
    fn regions_cover_unit_mass() {
        for (alpha, p) in [(0.1, 0.95), (0.5, 0.95), (0.9, 0.99)] {
            let m = censored_region_mass(alpha, p).unwrap();
            assert!((m - 1.0).abs() < 1e-8, "alpha={alpha} p={p} mass={m}");
        }
    }

    #[test]
    fn max_partition_probabilities() {
        // P(common occurrence) = 1 - α
        let quad = Quad::new(1e-10);
        let alpha = 0.35;
        let q = (1.0 - alpha) / alpha;
        let common = whole_plane(&quad, alpha, |_| q);
        let all = whole_plane(&quad, alpha, |pt| pt.v + q);
        assert!((common - (1.0 - alpha)).abs() < 1e-9);
        assert!((all - 1.0).abs() < 1e-9);
    }

    #[test]
    fn thr5_needs_low_exponent() {
        assert!(matches!(info_censored(0.9, 0.2, Estimator::Thr5), Err(Error::ThresholdTooLow(_))));
        assert!(info_censored(0.5, 0.95, Estimator::Max1).is_err());
    }
}
