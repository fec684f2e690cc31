//! Log-likelihoods for the logistic dependence parameter α with the margins
//! held fixed (two-step estimation).
//!
//! Block-maximum objectives work on unit Fréchet maxima `z = t(m)`:
//!
//! * `Max1`: full likelihood, partition sum over all set partitions;
//! * `Max2`: likelihood with the observed occurrence partition;
//! * `Max3`: `Max2` with the second-order finite-block correction;
//! * `MaxPair`: pairwise `Max1`.
//!
//! Threshold objectives take observation-scale Fréchet values `z`. The
//! Poisson forms (`Thr1`–`Thr3`) use points `x = z/n` so the intensity is the
//! exponent measure itself; the censored forms (`Thr4`, `Thr5`, `ThrPair`)
//! replace every non-exceeding component by its threshold.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::margins::MarginalModel;
use crate::model::{log_partition_coef, PartitionPoly, SetPartition, MAX_PARTITION_DIM};
use crate::optimize::{maximize_scalar, ALPHA_HI, ALPHA_LO, ALPHA_TOL};

/// The likelihood-based estimators of α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    Max1,
    Max2,
    Max3,
    MaxPair,
    Thr1,
    Thr2,
    Thr3,
    Thr4,
    Thr5,
    ThrPair,
}

impl Estimator {
    pub const ALL: [Estimator; 10] = [
        Self::Max1,
        Self::Max2,
        Self::Max3,
        Self::MaxPair,
        Self::Thr1,
        Self::Thr2,
        Self::Thr3,
        Self::Thr4,
        Self::Thr5,
        Self::ThrPair,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Max1 => "max1",
            Self::Max2 => "max2",
            Self::Max3 => "max3",
            Self::MaxPair => "max-pair",
            Self::Thr1 => "thr1",
            Self::Thr2 => "thr2",
            Self::Thr3 => "thr3",
            Self::Thr4 => "thr4",
            Self::Thr5 => "thr5",
            Self::ThrPair => "thr-pair",
        }
    }

    pub fn is_block_maximum(&self) -> bool {
        matches!(self, Self::Max1 | Self::Max2 | Self::Max3 | Self::MaxPair)
    }

    pub fn is_pairwise(&self) -> bool {
        matches!(self, Self::MaxPair | Self::ThrPair)
    }

    /// Estimators whose cost grows with the number of set partitions.
    pub fn is_full_likelihood(&self) -> bool {
        matches!(self, Self::Max1 | Self::Max3 | Self::Thr4)
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace(['_', ','], "-");
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name() == key || e.name().replace('-', "") == key)
            .ok_or_else(|| Error::Usage(format!("unknown estimator '{s}'")))
    }
}

fn log_sum_exp_scaled(ln_z: &[f64], inv_alpha: f64) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for &l in ln_z {
        m = m.max(-l * inv_alpha);
    }
    let mut acc = 0.0;
    for &l in ln_z {
        acc += (-l * inv_alpha - m).exp();
    }
    m + acc.ln()
}

fn ln_s_pair(l1: f64, l2: f64, inv_alpha: f64) -> f64 {
    let (a, b) = (-l1 * inv_alpha, -l2 * inv_alpha);
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Quantities that depend only on α, shared by every row.
struct AlphaCtx {
    alpha: f64,
    inv: f64,
    log_c: Vec<f64>,
    poly: Option<PartitionPoly>,
}

impl AlphaCtx {
    fn new(alpha: f64, max_k: usize, need_poly: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        let poly = if need_poly {
            Some(PartitionPoly::new(max_k.min(MAX_PARTITION_DIM).max(1), alpha)?)
        } else {
            None
        };
        Ok(Self {
            alpha,
            inv: 1.0 / alpha,
            log_c: (0..=max_k).map(|k| log_partition_coef(k, alpha)).collect(),
            poly,
        })
    }

    fn poly(&self) -> &PartitionPoly {
        self.poly.as_ref().expect("partition polynomial requested")
    }

    /// `ln(-V_E)` for a block of size `k`.
    fn log_neg_partial(&self, k: usize, ln_s: f64, sum_ln_z: f64) -> f64 {
        self.log_c[k] + (self.alpha - k as f64) * ln_s - (self.inv + 1.0) * sum_ln_z
    }

    fn v(&self, ln_s: f64) -> f64 {
        (self.alpha * ln_s).exp()
    }
}

fn check_partition_guard(k: usize, what: &str) -> Result<()> {
    if k > MAX_PARTITION_DIM {
        return Err(Error::Capability(format!(
            "{what} needs partitions of a {k}-element set; limit is {MAX_PARTITION_DIM} \
             because the Bell number grows super-exponentially"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Block maxima

#[derive(Debug, Clone)]
struct MaxRow {
    ln_z: Vec<f64>,
    log_jac: Vec<f64>,
    // (size, Σ ln z) per block of the occurrence partition
    blocks: Vec<(usize, f64)>,
}

/// Componentwise block maxima with their occurrence partitions.
#[derive(Debug, Clone)]
pub struct BlockMaximaData {
    maxima: Array2<f64>,
    partitions: Vec<SetPartition>,
    block_length: usize,
    margins: MarginalModel,
    dropped_rows: usize,
    rows: Vec<MaxRow>,
}

/// Componentwise maxima of consecutive blocks of `block_length` rows and the
/// partition of components by the row at which their maximum occurred (ties
/// within a component go to the first row). Returns the number of trailing
/// rows dropped.
pub fn block_maxima(raw: ArrayView2<f64>, block_length: usize) -> Result<(Array2<f64>, Vec<SetPartition>, usize)> {
    let (n, dim) = raw.dim();
    if block_length == 0 || block_length > n {
        return Err(Error::Usage(format!(
            "block length {block_length} must lie in [1, {n}]"
        )));
    }
    let blocks = n / block_length;
    let mut maxima = Array2::zeros((blocks, dim));
    let mut partitions = Vec::with_capacity(blocks);
    let mut at = vec![0usize; dim];
    for b in 0..blocks {
        for d in 0..dim {
            let mut best = f64::NEG_INFINITY;
            for i in 0..block_length {
                let v = raw[[b * block_length + i, d]];
                if v > best {
                    best = v;
                    at[d] = i;
                }
            }
            maxima[[b, d]] = best;
        }
        partitions.push(SetPartition::from_labels(&at));
    }
    Ok((maxima, partitions, n - blocks * block_length))
}

/// Block maxima of `raw` with margins `margins` applied to the maxima.
pub fn make_block_maxima(raw: ArrayView2<f64>, block_length: usize, margins: MarginalModel) -> Result<BlockMaximaData> {
    let (maxima, partitions, dropped) = block_maxima(raw, block_length)?;
    let mut data = BlockMaximaData::new(maxima, partitions, block_length, margins)?;
    data.dropped_rows = dropped;
    Ok(data)
}

impl BlockMaximaData {
    pub fn new(
        maxima: Array2<f64>,
        partitions: Vec<SetPartition>,
        block_length: usize,
        margins: MarginalModel,
    ) -> Result<Self> {
        let (n, dim) = maxima.dim();
        if partitions.len() != n {
            return Err(Error::Usage(format!("{n} maxima but {} partitions", partitions.len())));
        }
        if margins.dim() != dim {
            return Err(Error::Usage(format!("maxima have {dim} columns, margins {}", margins.dim())));
        }
        if block_length == 0 {
            return Err(Error::Usage("block length must be positive".into()));
        }
        let mut rows = Vec::with_capacity(n);
        for (i, part) in partitions.iter().enumerate() {
            if part.dim() != dim {
                return Err(Error::Usage(format!("partition {part} does not cover {dim} components")));
            }
            let m: Vec<f64> = maxima.row(i).to_vec();
            let l = block_length as f64;
            let mut ln_z = Vec::with_capacity(dim);
            let mut log_jac = Vec::with_capacity(dim);
            for (d, &v) in m.iter().enumerate() {
                let (z, lj) = margins.component_to_frechet(d, v)?;
                ln_z.push(z.ln() - l.ln());
                log_jac.push(lj.unwrap_or(0.0) - l.ln());
            }
            let blocks = part
                .blocks()
                .iter()
                .map(|b| (b.len(), b.iter().map(|&d| ln_z[d]).sum()))
                .collect();
            rows.push(MaxRow { ln_z, log_jac, blocks });
        }
        Ok(Self { maxima, partitions, block_length, margins, dropped_rows: 0, rows })
    }

    pub fn n_blocks(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.maxima.ncols()
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    pub fn maxima(&self) -> &Array2<f64> {
        &self.maxima
    }

    pub fn partitions(&self) -> &[SetPartition] {
        &self.partitions
    }

    pub fn margins(&self) -> &MarginalModel {
        &self.margins
    }

    /// Trailing raw rows that did not fill a whole block.
    pub fn dropped_rows(&self) -> usize {
        self.dropped_rows
    }

    /// Per-block log-likelihood contributions of a block-maximum estimator.
    pub fn contributions(&self, estimator: Estimator, alpha: f64) -> Result<Vec<f64>> {
        let dim = self.dim();
        let ctx = match estimator {
            Estimator::Max1 => {
                check_partition_guard(dim, "max1")?;
                AlphaCtx::new(alpha, dim, true)?
            }
            Estimator::MaxPair => AlphaCtx::new(alpha, 2, true)?,
            Estimator::Max2 | Estimator::Max3 => AlphaCtx::new(alpha, dim, false)?,
            other => {
                return Err(Error::Usage(format!("{other} is not a block-maximum estimator")))
            }
        };
        let l = self.block_length as f64;
        Ok(self
            .rows
            .iter()
            .map(|row| match estimator {
                Estimator::Max1 => max1_row(&ctx, row),
                Estimator::Max2 => max2_row(&ctx, row),
                Estimator::Max3 => max3_row(&ctx, row, l),
                _ => max_pair_row(&ctx, row),
            })
            .collect())
    }

    pub fn loglik(&self, estimator: Estimator, alpha: f64) -> Result<f64> {
        Ok(self.contributions(estimator, alpha)?.iter().sum())
    }
}

fn max1_row(ctx: &AlphaCtx, row: &MaxRow) -> f64 {
    let ln_s = log_sum_exp_scaled(&row.ln_z, ctx.inv);
    let sum_ln: f64 = row.ln_z.iter().sum();
    ctx.poly().log_partition_sum(row.ln_z.len(), ln_s, sum_ln) - ctx.v(ln_s)
        + row.log_jac.iter().sum::<f64>()
}

fn max2_row(ctx: &AlphaCtx, row: &MaxRow) -> f64 {
    let ln_s = log_sum_exp_scaled(&row.ln_z, ctx.inv);
    let terms: f64 = row.blocks.iter().map(|&(k, sl)| ctx.log_neg_partial(k, ln_s, sl)).sum();
    terms - ctx.v(ln_s) + row.log_jac.iter().sum::<f64>()
}

fn max3_row(ctx: &AlphaCtx, row: &MaxRow, l: f64) -> f64 {
    let ln_s = log_sum_exp_scaled(&row.ln_z, ctx.inv);
    let logs: Vec<f64> = row.blocks.iter().map(|&(k, sl)| ctx.log_neg_partial(k, ln_s, sl)).collect();
    let base: f64 = logs.iter().sum();
    let kk = row.blocks.len() as f64;
    let factor = 1.0 - kk * (kk - 1.0) / (2.0 * l);
    let mut merged = Vec::new();
    for i in 0..row.blocks.len() {
        for j in i + 1..row.blocks.len() {
            let (ki, si) = row.blocks[i];
            let (kj, sj) = row.blocks[j];
            merged.push(base - logs[i] - logs[j] + ctx.log_neg_partial(ki + kj, ln_s, si + sj));
        }
    }
    let m = merged.iter().copied().fold(base, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    let bracket = factor * (base - m).exp() + merged.iter().map(|t| (t - m).exp()).sum::<f64>() / l;
    if !(bracket > 0.0) {
        return f64::NEG_INFINITY;
    }
    m + bracket.ln() - ctx.v(ln_s) + row.log_jac.iter().sum::<f64>()
}

fn max_pair_row(ctx: &AlphaCtx, row: &MaxRow) -> f64 {
    let poly = ctx.poly();
    let d = row.ln_z.len();
    let mut acc = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            let (li, lj) = (row.ln_z[i], row.ln_z[j]);
            let ln_s = ln_s_pair(li, lj, ctx.inv);
            acc += poly.log_partition_sum(2, ln_s, li + lj) - ctx.v(ln_s) + row.log_jac[i] + row.log_jac[j];
        }
    }
    acc
}

pub fn loglik_max1(alpha: f64, data: &BlockMaximaData) -> Result<f64> {
    data.loglik(Estimator::Max1, alpha)
}

pub fn loglik_max2(alpha: f64, data: &BlockMaximaData) -> Result<f64> {
    data.loglik(Estimator::Max2, alpha)
}

/// `-∞` when the correction bracket is not positive for some block.
pub fn loglik_max3(alpha: f64, data: &BlockMaximaData) -> Result<f64> {
    data.loglik(Estimator::Max3, alpha)
}

pub fn loglik_max_pair(alpha: f64, data: &BlockMaximaData) -> Result<f64> {
    data.loglik(Estimator::MaxPair, alpha)
}

// ---------------------------------------------------------------------------
// Threshold data

/// Marginal thresholds are on the raw scale; diagonal levels `r` are on the
/// unit Fréchet observation scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThresholdKind {
    Marginal { u: Vec<f64> },
    Diagonal { r: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KindTag {
    Marginal,
    Diagonal,
}

#[derive(Debug, Clone)]
struct ThrRow {
    // ln max(z, ũ) per component; equals ln z where the component exceeds
    ln_b: Vec<f64>,
    exceed: Vec<bool>,
    k: usize,
    sum_ln_exc: f64,
    lj_exc: f64,
    lj_comp: Vec<f64>,
    ln_z: Vec<f64>,
    lj_all: f64,
    full_ok: bool,
}

#[derive(Debug, Clone)]
struct PairIndex {
    d1: usize,
    d2: usize,
    rows: Vec<usize>,
    censored: usize,
}

#[derive(Debug, Clone)]
pub struct ThresholdData {
    observations: Array2<f64>,
    kind: ThresholdKind,
    censoring: Option<Array2<bool>>,
    margins: MarginalModel,
    ln_u: Vec<f64>,
    rows: Vec<ThrRow>,
    n_censored: usize,
    pairs: Vec<PairIndex>,
}

fn frechet_row(margins: &MarginalModel, y: &[f64]) -> (Vec<f64>, Vec<Option<f64>>, bool) {
    let mut ln_z = Vec::with_capacity(y.len());
    let mut lj = Vec::with_capacity(y.len());
    let mut ok = true;
    for (d, &v) in y.iter().enumerate() {
        match margins.component_to_frechet(d, v) {
            Ok((z, j)) => {
                ln_z.push(z.ln());
                lj.push(j);
            }
            Err(_) => {
                ln_z.push(f64::NAN);
                lj.push(None);
                ok = false;
            }
        }
    }
    (ln_z, lj, ok)
}

impl ThresholdData {
    /// Censoring at raw-scale marginal thresholds `u`.
    pub fn marginal(observations: Array2<f64>, u: Vec<f64>, margins: MarginalModel) -> Result<Self> {
        let (n, dim) = observations.dim();
        if u.len() != dim || margins.dim() != dim {
            return Err(Error::Usage(format!(
                "observations have {dim} columns; thresholds {} and margins {}",
                u.len(),
                margins.dim()
            )));
        }
        let mut ln_u = Vec::with_capacity(dim);
        for (d, &ud) in u.iter().enumerate() {
            ln_u.push(margins.threshold_to_frechet(d, ud)?.ln());
        }
        let mut censoring = Array2::from_elem((n, dim), false);
        let mut rows = Vec::new();
        for i in 0..n {
            let y = observations.row(i);
            let exceed: Vec<bool> = y.iter().zip(&u).map(|(v, ud)| v > ud).collect();
            for d in 0..dim {
                censoring[[i, d]] = exceed[d];
            }
            if !exceed.iter().any(|&e| e) {
                continue;
            }
            let (ln_z, lj, full_ok) = frechet_row(&margins, &y.to_vec());
            let mut ln_b = ln_u.clone();
            let (mut k, mut sum_ln_exc, mut lj_exc) = (0, 0.0, 0.0);
            for d in 0..dim {
                if exceed[d] {
                    let j = lj[d].ok_or_else(|| {
                        Error::Boundary(format!("no density for exceedance y = {} in component {d}", y[d]))
                    })?;
                    if !ln_z[d].is_finite() {
                        return Err(Error::Boundary(format!("cannot transform y = {}", y[d])));
                    }
                    ln_b[d] = ln_z[d].max(ln_u[d]);
                    k += 1;
                    sum_ln_exc += ln_b[d];
                    lj_exc += j;
                }
            }
            let lj_comp: Vec<f64> = lj.iter().map(|j| j.unwrap_or(0.0)).collect();
            let lj_all = lj_comp.iter().sum();
            rows.push(ThrRow { ln_b, exceed, k, sum_ln_exc, lj_exc, lj_comp, ln_z, lj_all, full_ok });
        }
        let n_censored = n - rows.len();
        let mut pairs = Vec::new();
        for d1 in 0..dim {
            for d2 in d1 + 1..dim {
                let idx: Vec<usize> = rows
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| r.exceed[d1] || r.exceed[d2])
                    .map(|(i, _)| i)
                    .collect();
                let censored = n - idx.len();
                pairs.push(PairIndex { d1, d2, rows: idx, censored });
            }
        }
        Ok(Self {
            observations,
            kind: ThresholdKind::Marginal { u },
            censoring: Some(censoring),
            margins,
            ln_u,
            rows,
            n_censored,
            pairs,
        })
    }

    /// Exceedances of the diagonal set `{Σ_d z_d / r_d > 1}` on the Fréchet scale.
    pub fn diagonal(observations: Array2<f64>, r: Vec<f64>, margins: MarginalModel) -> Result<Self> {
        let (n, dim) = observations.dim();
        if r.len() != dim || margins.dim() != dim {
            return Err(Error::Usage(format!(
                "observations have {dim} columns; levels {} and margins {}",
                r.len(),
                margins.dim()
            )));
        }
        if r.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Domain("diagonal levels must be positive".into()));
        }
        let mut rows = Vec::new();
        for i in 0..n {
            let y = observations.row(i).to_vec();
            let (ln_z, lj, full_ok) = frechet_row(&margins, &y);
            if !full_ok {
                return Err(Error::Boundary(format!("row {i} cannot be mapped to the Fréchet scale")));
            }
            let radial: f64 = ln_z.iter().zip(&r).map(|(l, rd)| l.exp() / rd).sum();
            if radial > 1.0 {
                let lj_comp: Vec<f64> = lj.iter().map(|j| j.unwrap_or(0.0)).collect();
                let lj_all = lj_comp.iter().sum();
                rows.push(ThrRow {
                    ln_b: ln_z.clone(),
                    exceed: vec![true; dim],
                    k: dim,
                    sum_ln_exc: ln_z.iter().sum(),
                    lj_exc: lj_all,
                    lj_comp,
                    ln_z,
                    lj_all,
                    full_ok,
                });
            }
        }
        Ok(Self {
            observations,
            kind: ThresholdKind::Diagonal { r },
            censoring: None,
            margins,
            ln_u: Vec::new(),
            n_censored: n - rows.len(),
            rows,
            pairs: Vec::new(),
        })
    }

    pub fn kind(&self) -> &ThresholdKind {
        &self.kind
    }

    pub fn kind_tag(&self) -> KindTag {
        match self.kind {
            ThresholdKind::Marginal { .. } => KindTag::Marginal,
            ThresholdKind::Diagonal { .. } => KindTag::Diagonal,
        }
    }

    pub fn observations(&self) -> &Array2<f64> {
        &self.observations
    }

    /// Exceedance indicators δ (marginal kind only).
    pub fn censoring(&self) -> Option<&Array2<bool>> {
        self.censoring.as_ref()
    }

    pub fn margins(&self) -> &MarginalModel {
        &self.margins
    }

    pub fn n(&self) -> usize {
        self.observations.nrows()
    }

    pub fn dim(&self) -> usize {
        self.observations.ncols()
    }

    /// Rows with at least one exceedance (marginal) or in the diagonal set.
    pub fn n_exceedances(&self) -> usize {
        self.rows.len()
    }

    /// Thresholds on the unit Fréchet observation scale (marginal kind).
    pub fn frechet_thresholds(&self) -> Vec<f64> {
        self.ln_u.iter().map(|l| l.exp()).collect()
    }

    fn require(&self, tag: KindTag, est: Estimator) -> Result<()> {
        if self.kind_tag() != tag {
            return Err(Error::Usage(format!("{est} needs {tag:?} threshold data")));
        }
        Ok(())
    }

    fn require_full(&self) -> Result<()> {
        if self.rows.iter().any(|r| !r.full_ok) {
            return Err(Error::Boundary(
                "some exceedance row has a component that cannot be mapped to the Fréchet scale".into(),
            ));
        }
        Ok(())
    }

    /// `ln(-V_{1:D}(z/n))` plus the log-Jacobian of `y ↦ z/n`.
    fn poisson_term(&self, ctx: &AlphaCtx, row: &ThrRow) -> f64 {
        let d = row.ln_z.len();
        let ln_n = (self.n() as f64).ln();
        let ln_s = log_sum_exp_scaled(&row.ln_z, ctx.inv) + ln_n * ctx.inv;
        let sum_ln: f64 = row.ln_z.iter().sum::<f64>() - d as f64 * ln_n;
        ctx.log_neg_partial(d, ln_s, sum_ln) + row.lj_all - d as f64 * ln_n
    }

    /// `ln V(ũ/n)` with `ũ` the Fréchet-scale thresholds.
    fn ln_v_threshold_points(&self, ctx: &AlphaCtx) -> f64 {
        (self.n() as f64).ln() + ctx.alpha * log_sum_exp_scaled(&self.ln_u, ctx.inv)
    }

    pub fn loglik(&self, estimator: Estimator, alpha: f64) -> Result<f64> {
        let dim = self.dim();
        match estimator {
            Estimator::Thr1 | Estimator::Thr3 => {
                self.require(KindTag::Marginal, estimator)?;
                self.require_full()?;
                let ctx = AlphaCtx::new(alpha, dim, false)?;
                let sum: f64 = self.rows.iter().map(|r| self.poisson_term(&ctx, r)).sum();
                let ln_v = self.ln_v_threshold_points(&ctx);
                Ok(if estimator == Estimator::Thr1 {
                    sum - ln_v.exp()
                } else {
                    sum - self.rows.len() as f64 * ln_v
                })
            }
            Estimator::Thr2 => {
                self.require(KindTag::Diagonal, estimator)?;
                let ctx = AlphaCtx::new(alpha, dim, false)?;
                Ok(self.rows.iter().map(|r| self.poisson_term(&ctx, r)).sum())
            }
            Estimator::Thr4 => {
                self.require(KindTag::Marginal, estimator)?;
                let kmax = self.rows.iter().map(|r| r.k).max().unwrap_or(1);
                check_partition_guard(kmax, "thr4")?;
                let ctx = AlphaCtx::new(alpha, kmax.max(1), true)?;
                let ln_s_u = log_sum_exp_scaled(&self.ln_u, ctx.inv);
                let mut acc = -(self.n_censored as f64) * ctx.v(ln_s_u);
                for r in &self.rows {
                    acc += censored_ev_row(&ctx, &r.ln_b, r.k, r.sum_ln_exc) + r.lj_exc;
                }
                Ok(acc)
            }
            Estimator::Thr5 => {
                self.require(KindTag::Marginal, estimator)?;
                let ctx = AlphaCtx::new(alpha, dim, false)?;
                let v_u = ctx.v(log_sum_exp_scaled(&self.ln_u, ctx.inv));
                if v_u >= 1.0 {
                    return Err(Error::ThresholdTooLow(format!(
                        "V(u) = {v_u} ≥ 1 at alpha = {alpha}; 1 - V(u) is not a probability"
                    )));
                }
                let mut acc = self.n_censored as f64 * (-v_u).ln_1p();
                for r in &self.rows {
                    let ln_s = log_sum_exp_scaled(&r.ln_b, ctx.inv);
                    acc += ctx.log_neg_partial(r.k, ln_s, r.sum_ln_exc) + r.lj_exc;
                }
                Ok(acc)
            }
            Estimator::ThrPair => {
                self.require(KindTag::Marginal, estimator)?;
                let ctx = AlphaCtx::new(alpha, 2, true)?;
                let mut acc = 0.0;
                for p in &self.pairs {
                    let (u1, u2) = (self.ln_u[p.d1], self.ln_u[p.d2]);
                    acc -= p.censored as f64 * ctx.v(ln_s_pair(u1, u2, ctx.inv));
                    for &i in &p.rows {
                        let r = &self.rows[i];
                        let b = [r.ln_b[p.d1], r.ln_b[p.d2]];
                        let (mut k, mut sl, mut lj) = (0, 0.0, 0.0);
                        for (j, d) in [p.d1, p.d2].into_iter().enumerate() {
                            if r.exceed[d] {
                                k += 1;
                                sl += b[j];
                                lj += r.lj_comp[d];
                            }
                        }
                        acc += censored_ev_row(&ctx, &b, k, sl) + lj;
                    }
                }
                Ok(acc)
            }
            other => Err(Error::Usage(format!("{other} is not a threshold estimator"))),
        }
    }
}

/// EV-variant censored log-contribution with `k` exceeding coordinates.
fn censored_ev_row(ctx: &AlphaCtx, ln_b: &[f64], k: usize, sum_ln_exc: f64) -> f64 {
    let ln_s = if ln_b.len() == 2 {
        ln_s_pair(ln_b[0], ln_b[1], ctx.inv)
    } else {
        log_sum_exp_scaled(ln_b, ctx.inv)
    };
    let head = if k == 0 { 0.0 } else { ctx.poly().log_partition_sum(k, ln_s, sum_ln_exc) };
    head - ctx.v(ln_s)
}

pub fn loglik_thr1(alpha: f64, data: &ThresholdData) -> Result<f64> {
    data.loglik(Estimator::Thr1, alpha)
}

/// The α-free term `-ν(A^r)` is omitted. At α = 1 the intensity vanishes and
/// the value is `-∞` whenever there is an exceedance.
pub fn loglik_thr2(alpha: f64, data: &ThresholdData) -> Result<f64> {
    data.loglik(Estimator::Thr2, alpha)
}

pub fn loglik_thr3(alpha: f64, data: &ThresholdData) -> Result<f64> {
    data.loglik(Estimator::Thr3, alpha)
}

pub fn loglik_thr4(alpha: f64, data: &ThresholdData) -> Result<f64> {
    data.loglik(Estimator::Thr4, alpha)
}

/// Fails with [`Error::ThresholdTooLow`] when `V(ũ) ≥ 1` at this α.
pub fn loglik_thr5(alpha: f64, data: &ThresholdData) -> Result<f64> {
    data.loglik(Estimator::Thr5, alpha)
}

pub fn loglik_thr_pair(alpha: f64, data: &ThresholdData) -> Result<f64> {
    data.loglik(Estimator::ThrPair, alpha)
}

/// The log-likelihood of the number of exceedances, `-V(ũ/n) + N_u ln V(ũ/n)`.
pub fn loglik_exceedance_count(alpha: f64, data: &ThresholdData) -> Result<f64> {
    data.require(KindTag::Marginal, Estimator::Thr1)?;
    let ctx = AlphaCtx::new(alpha, data.dim(), false)?;
    let ln_v = data.ln_v_threshold_points(&ctx);
    Ok(-ln_v.exp() + data.n_exceedances() as f64 * ln_v)
}

/// The Poisson likelihoods need all exponent-measure mass inside the open
/// orthant; models with mass on a boundary face are rejected.
pub fn check_poisson_suitable(model: &crate::model::DependenceModel) -> Result<()> {
    if model.has_boundary_mass() {
        return Err(Error::Capability(
            "Poisson likelihoods are unsuitable when the exponent measure puts mass on boundary faces".into(),
        ));
    }
    Ok(())
}

/// Thresholds at probability `p`: marginal `p`-quantiles (exactly `-1/ln p`
/// for known Fréchet margins, else the `⌈np⌉`-th order statistic), or the
/// diagonal level `r = D/(1-p)` whose exceedance set has mass `1-p`.
pub fn select_threshold(p: f64, kind: KindTag, data: Array2<f64>, margins: MarginalModel) -> Result<ThresholdData> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Usage(format!("threshold probability must lie in (0,1), got {p}")));
    }
    let (n, dim) = data.dim();
    let out = match kind {
        KindTag::Marginal => {
            let u = if margins.is_known_frechet() {
                vec![-1.0 / p.ln(); dim]
            } else {
                let k = ((n as f64 * p).ceil() as usize).clamp(1, n);
                (0..dim)
                    .map(|d| {
                        let mut col = data.column(d).to_vec();
                        col.sort_by(f64::total_cmp);
                        col[k - 1]
                    })
                    .collect()
            };
            ThresholdData::marginal(data, u, margins)?
        }
        KindTag::Diagonal => ThresholdData::diagonal(data, vec![dim as f64 / (1.0 - p); dim], margins)?,
    };
    if out.n_exceedances() < 10 {
        return Err(Error::Estimation(format!(
            "only {} exceedances at p = {p}; at least 10 are needed",
            out.n_exceedances()
        )));
    }
    Ok(out)
}

/// Approximation of the joint distribution above the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CensoredVariant {
    /// `F ≈ exp(-V)`.
    Ev,
    /// `F ≈ 1 - V`.
    Tail,
}

/// Log-likelihood contribution of one row censored at raw-scale thresholds `u`.
pub fn censored_contrib(
    y: &[f64],
    u: &[f64],
    alpha: f64,
    margins: &MarginalModel,
    variant: CensoredVariant,
) -> Result<f64> {
    let dim = y.len();
    if u.len() != dim || margins.dim() != dim {
        return Err(Error::Usage("row, thresholds and margins must have equal length".into()));
    }
    let mut ln_b = Vec::with_capacity(dim);
    let (mut k, mut sum_ln, mut lj) = (0, 0.0, 0.0);
    for d in 0..dim {
        let lu = margins.threshold_to_frechet(d, u[d])?.ln();
        if y[d] > u[d] {
            let (z, j) = margins.component_to_frechet(d, y[d])?;
            let l = z.ln().max(lu);
            ln_b.push(l);
            k += 1;
            sum_ln += l;
            lj += j.ok_or_else(|| Error::Boundary(format!("no density at y = {}", y[d])))?;
        } else {
            ln_b.push(lu);
        }
    }
    match variant {
        CensoredVariant::Ev => {
            check_partition_guard(k, "censored contribution")?;
            let ctx = AlphaCtx::new(alpha, k.max(1), true)?;
            Ok(censored_ev_row(&ctx, &ln_b, k, sum_ln) + lj)
        }
        CensoredVariant::Tail => {
            let ctx = AlphaCtx::new(alpha, dim, false)?;
            let ln_u: Vec<f64> = (0..dim)
                .map(|d| margins.threshold_to_frechet(d, u[d]).map(f64::ln))
                .collect::<Result<_>>()?;
            let v_u = ctx.v(log_sum_exp_scaled(&ln_u, ctx.inv));
            if v_u >= 1.0 {
                return Err(Error::ThresholdTooLow(format!("V(u) = {v_u} ≥ 1")));
            }
            if k == 0 {
                return Ok((-v_u).ln_1p());
            }
            let ln_s = log_sum_exp_scaled(&ln_b, ctx.inv);
            Ok(ctx.log_neg_partial(k, ln_s, sum_ln) + lj)
        }
    }
}

/// Result of maximizing one of the objectives over α.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlphaFit {
    pub alpha_hat: f64,
    pub loglik: f64,
    pub converged: bool,
    pub diagnostics: String,
}

fn fit_scalar<F: Fn(f64) -> Result<f64>>(objective: F) -> Result<AlphaFit> {
    let r = maximize_scalar(|a| objective(a).unwrap_or(f64::NEG_INFINITY), ALPHA_LO, ALPHA_HI, ALPHA_TOL)?;
    Ok(AlphaFit {
        alpha_hat: r.argmax[0],
        loglik: r.value,
        converged: r.converged,
        diagnostics: r.diagnostics,
    })
}

/// Maximize a block-maximum objective over α ∈ [0.01, 0.999].
pub fn fit_block_maxima(estimator: Estimator, data: &BlockMaximaData) -> Result<AlphaFit> {
    // surface structural errors (guards, wrong estimator) before searching
    data.loglik(estimator, 0.5)?;
    fit_scalar(|a| data.loglik(estimator, a))
}

/// Maximize a threshold objective over α ∈ [0.01, 0.999]. For `Thr5` the
/// tail approximation must be a probability over the whole search interval.
pub fn fit_threshold(estimator: Estimator, data: &ThresholdData) -> Result<AlphaFit> {
    data.loglik(estimator, if estimator == Estimator::Thr5 { ALPHA_HI } else { 0.5 })?;
    fit_scalar(|a| data.loglik(estimator, a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ev_density_logistic, exponent_logistic, partial_deriv_logistic, LogisticParams};
    use crate::simulate::{sample_logistic_maxstable, SeedSpec};
    use approx::assert_relative_eq;
    use ndarray::array;

    fn lp(a: f64) -> LogisticParams {
        LogisticParams::new(a).unwrap()
    }

    #[test]
    fn block_maxima_partitions() {
        let mut raw = Array2::zeros((200, 3));
        for i in 0..200 {
            raw[[i, 0]] = i as f64 % 7.0;
            raw[[i, 1]] = 0.5;
            raw[[i, 2]] = 0.1;
        }
        raw[[4, 0]] = 99.0;
        raw[[4, 1]] = 99.0;
        raw[[9, 2]] = 99.0;
        let (m, parts, dropped) = block_maxima(raw.view(), 100).unwrap();
        assert_eq!(m.nrows(), 2);
        assert_eq!(dropped, 0);
        assert_eq!(parts[0], SetPartition::new(vec![vec![0, 1], vec![2]]).unwrap());
        assert!(block_maxima(raw.view(), 201).is_err());
        let (_, _, dropped) = block_maxima(raw.view(), 150).unwrap();
        assert_eq!(dropped, 50);
    }

    fn single_block(z: [f64; 2], part: Vec<Vec<usize>>) -> BlockMaximaData {
        BlockMaximaData::new(
            array![[z[0], z[1]]],
            vec![SetPartition::new(part).unwrap()],
            1,
            MarginalModel::known_frechet(2),
        )
        .unwrap()
    }

    #[test]
    fn max_examples() {
        let d = single_block([1.0, 1.0], vec![vec![0], vec![1]]);
        assert_relative_eq!(loglik_max1(1.0, &d).unwrap(), -2.0, max_relative = 1e-14);

        let z = [0.7, 2.3];
        let a = 0.45;
        let p = lp(a);
        let v = exponent_logistic(&z, &p).unwrap();
        let v1 = partial_deriv_logistic(&z, &p, &[0]).unwrap();
        let v2 = partial_deriv_logistic(&z, &p, &[1]).unwrap();
        let v12 = partial_deriv_logistic(&z, &p, &[0, 1]).unwrap();
        let sep = single_block(z, vec![vec![0], vec![1]]);
        let joint = single_block(z, vec![vec![0, 1]]);
        assert_relative_eq!(loglik_max1(a, &sep).unwrap(), (v1 * v2 - v12).ln() - v, max_relative = 1e-13);
        assert_relative_eq!(loglik_max2(a, &sep).unwrap(), (v1 * v2).ln() - v, max_relative = 1e-13);
        assert_relative_eq!(loglik_max2(a, &joint).unwrap(), (-v12).ln() - v, max_relative = 1e-13);
        // summing exp(max2) over the partitions gives exp(max1)
        let total = loglik_max2(a, &sep).unwrap().exp() + loglik_max2(a, &joint).unwrap().exp();
        assert_relative_eq!(total, loglik_max1(a, &sep).unwrap().exp(), max_relative = 1e-13);
        // Max3 bracket for two singleton blocks
        let l = 50.0;
        let d3 = BlockMaximaData::new(
            array![[z[0] * l, z[1] * l]],
            vec![SetPartition::new(vec![vec![0], vec![1]]).unwrap()],
            50,
            MarginalModel::known_frechet(2),
        )
        .unwrap();
        let bracket = v1 * v2 * (1.0 - 1.0 / l) + (-v12) / l;
        assert_relative_eq!(
            loglik_max3(a, &d3).unwrap(),
            bracket.ln() - v - 2.0 * l.ln(),
            max_relative = 1e-12
        );
        assert_relative_eq!(loglik_max_pair(a, &sep).unwrap(), loglik_max1(a, &sep).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn max1_matches_density_in_three_dimensions() {
        let z = array![[1.0, 2.0, 3.0]];
        let d = BlockMaximaData::new(
            z,
            vec![SetPartition::new(vec![vec![0, 1, 2]]).unwrap()],
            1,
            MarginalModel::known_frechet(3),
        )
        .unwrap();
        let dens = ev_density_logistic(&[1.0, 2.0, 3.0], &lp(0.6)).unwrap();
        assert_relative_eq!(loglik_max1(0.6, &d).unwrap(), dens.ln(), max_relative = 1e-13);
    }

    #[test]
    fn thr1_example() {
        let obs = array![[25.0, 30.0], [1.0, 2.0]];
        let d = ThresholdData::marginal(obs, vec![19.5, 19.5], MarginalModel::known_frechet(2)).unwrap();
        let n = 2.0f64;
        // points z/n, region measure V(u/n) = n V(u) = n·2/19.5; intensity at α = 1 is zero,
        // so use α close to one and compare with the plug-in formula on the z/n scale
        let a = 0.999;
        let p = lp(a);
        let x = [25.0 / n, 30.0 / n];
        let v_u = exponent_logistic(&[19.5 / n, 19.5 / n], &p).unwrap();
        let v12 = partial_deriv_logistic(&x, &p, &[0, 1]).unwrap();
        let expected = -v_u + (-v12).ln() - 2.0 * n.ln();
        assert_relative_eq!(loglik_thr1(a, &d).unwrap(), expected, max_relative = 1e-12);
        let no_exc = ThresholdData::marginal(array![[1.0, 2.0]], vec![19.5, 19.5], MarginalModel::known_frechet(2))
            .unwrap();
        let v_u1 = exponent_logistic(&[19.5, 19.5], &p).unwrap();
        assert_relative_eq!(loglik_thr1(a, &no_exc).unwrap(), -v_u1, max_relative = 1e-12);
        assert_eq!(loglik_thr3(a, &no_exc).unwrap(), 0.0);
    }

    #[test]
    fn thr2_example() {
        let obs = array![[2.0, 3.0], [0.1, 0.2]];
        let d = ThresholdData::diagonal(obs, vec![1.0, 1.0], MarginalModel::known_frechet(2)).unwrap();
        assert_eq!(d.n_exceedances(), 1);
        let p = lp(0.5);
        let n = 2.0f64;
        let v12 = partial_deriv_logistic(&[1.0, 1.5], &p, &[0, 1]).unwrap();
        assert_relative_eq!(loglik_thr2(0.5, &d).unwrap(), (-v12).ln() - 2.0 * n.ln(), max_relative = 1e-12);
        assert_eq!(loglik_thr2(1.0, &d).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn censored_examples() {
        let m = MarginalModel::known_frechet(2);
        let u = [19.5, 19.5];
        let p = lp(0.4);
        let v_u = exponent_logistic(&u, &p).unwrap();
        let c = censored_contrib(&[1.0, 3.0], &u, 0.4, &m, CensoredVariant::Ev).unwrap();
        assert_relative_eq!(c, -v_u, max_relative = 1e-13);
        let c = censored_contrib(&[25.0, 40.0], &u, 0.4, &m, CensoredVariant::Ev).unwrap();
        assert_relative_eq!(c, ev_density_logistic(&[25.0, 40.0], &p).unwrap().ln(), max_relative = 1e-13);
        let b = [25.0, 19.5];
        let c = censored_contrib(&[25.0, 3.0], &u, 0.4, &m, CensoredVariant::Ev).unwrap();
        let expected = (-partial_deriv_logistic(&b, &p, &[0]).unwrap()).ln() - exponent_logistic(&b, &p).unwrap();
        assert_relative_eq!(c, expected, max_relative = 1e-13);
        let c = censored_contrib(&[1.0, 3.0], &u, 0.4, &m, CensoredVariant::Tail).unwrap();
        assert_relative_eq!(c, (1.0 - v_u).ln(), max_relative = 1e-13);
        let low = [1.5, 1.5];
        assert!(matches!(
            censored_contrib(&[1.0, 1.0], &low, 0.9, &m, CensoredVariant::Tail),
            Err(Error::ThresholdTooLow(_))
        ));
    }

    #[test]
    fn thr4_all_censored_and_pair_identity() {
        let m = MarginalModel::known_frechet(2);
        let obs = array![[1.0, 2.0], [0.5, 3.0], [1.5, 1.5]];
        let d = ThresholdData::marginal(obs, vec![19.5, 19.5], m.clone()).unwrap();
        let v_u = exponent_logistic(&[19.5, 19.5], &lp(0.3)).unwrap();
        assert_relative_eq!(loglik_thr4(0.3, &d).unwrap(), -3.0 * v_u, max_relative = 1e-13);

        let sim = sample_logistic_maxstable(2000, 2, &lp(0.6), SeedSpec::new(3, 0)).unwrap();
        let d = ThresholdData::marginal(sim, vec![10.0, 10.0], m).unwrap();
        for a in [0.1, 0.5, 0.9] {
            assert_relative_eq!(loglik_thr4(a, &d).unwrap(), loglik_thr_pair(a, &d).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn estimator_names_round_trip() {
        for e in Estimator::ALL {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
        }
        assert_eq!("ThrPair".parse::<Estimator>().unwrap(), Estimator::ThrPair);
        assert!("thr9".parse::<Estimator>().is_err());
    }

    #[test]
    fn known_frechet_threshold() {
        let sim = sample_logistic_maxstable(5000, 2, &lp(0.5), SeedSpec::new(5, 0)).unwrap();
        let d = select_threshold(0.95, KindTag::Marginal, sim.clone(), MarginalModel::known_frechet(2)).unwrap();
        assert_relative_eq!(d.frechet_thresholds()[0], 19.495_725_746_223_67, max_relative = 1e-12);
        let diag = select_threshold(0.95, KindTag::Diagonal, sim, MarginalModel::known_frechet(2)).unwrap();
        match diag.kind() {
            ThresholdKind::Diagonal { r } => assert_relative_eq!(r[0], 40.0, max_relative = 1e-12),
            _ => unreachable!(),
        }
    }
}
