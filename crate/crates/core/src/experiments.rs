//! Replicated simulation studies: two-step fitting pipelines, bias/SE/RMSE
//! summaries, best-estimator and pairwise-efficiency tables, and return
//! levels of `Y₁ + Y₂`.
//!
//! Replicate `r` of a study cell always uses the random stream
//! `SeedSpec::new(cell_seed, r)`, and results are reduced in replicate order,
//! so every output is independent of the number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihoods::{
    fit_block_maxima, fit_threshold, select_threshold, AlphaFit, BlockMaximaData, Estimator, KindTag,
};
use crate::margins::{fit_gev, Margin, MarginalModel, SemiParametricMargin};
use crate::model::MAX_PARTITION_DIM;
use crate::simulate::{
    generate, opclayton_row, sample_opclayton, truncated_t_cdf, truncated_t_quantile, GeneratingModel, SeedSpec,
};
use crate::stats::{self, Summary};

/// Largest dimension for which full likelihoods are fitted in studies.
pub const MAX_STUDY_FULL_DIM: usize = 10;

/// How marginal distributions are handled before fitting α.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MarginsMode {
    /// Data are simulated on (or transformed exactly to) the unit Fréchet scale.
    KnownFrechet,
    /// GEV fitted to each column of block maxima, or empirical-plus-GPD
    /// margins at the threshold probability; then α with margins held fixed.
    TwoStep,
}

impl fmt::Display for MarginsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MarginsMode::KnownFrechet => "known-frechet",
            MarginsMode::TwoStep => "two-step",
        })
    }
}

impl FromStr for MarginsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "known-frechet" | "known" => Ok(MarginsMode::KnownFrechet),
            "two-step" | "twostep" => Ok(MarginsMode::TwoStep),
            other => Err(Error::Usage(format!("unknown margins mode '{other}'"))),
        }
    }
}

/// Block length of a block-maximum estimator or threshold probability of a
/// threshold estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Tuning {
    Block(usize),
    Prob(f64),
}

impl fmt::Display for Tuning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tuning::Block(l) => write!(f, "L={l}"),
            Tuning::Prob(p) => write!(f, "p={p}"),
        }
    }
}

impl FromStr for Tuning {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Usage(format!("tuning must look like L=100 or p=0.95, got '{s}'"));
        let (k, v) = s.trim().split_once('=').ok_or_else(bad)?;
        match k.trim() {
            "L" => v.trim().parse().map(Tuning::Block).map_err(|_| bad()),
            "p" => v.trim().parse().map(Tuning::Prob).map_err(|_| bad()),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for GeneratingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GeneratingModel::Logistic => "logistic",
            GeneratingModel::OpClayton => "opclayton",
        })
    }
}

impl FromStr for GeneratingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['_', '-'], "").as_str() {
            "logistic" => Ok(GeneratingModel::Logistic),
            "opclayton" | "clayton" => Ok(GeneratingModel::OpClayton),
            other => Err(Error::Usage(format!("unknown model '{other}'"))),
        }
    }
}

// ---------------------------------------------------------------------------
// Dataset preparation

/// One simulated dataset. Logistic data are unit Fréchet. Clayton data get
/// zero-inflated t₅ margins under [`MarginsMode::TwoStep`] and the exact
/// transform `-1/ln U` to unit Fréchet under [`MarginsMode::KnownFrechet`].
pub fn simulate_dataset(
    model: GeneratingModel,
    n: usize,
    dim: usize,
    alpha: f64,
    mode: MarginsMode,
    seed: SeedSpec,
) -> Result<Array2<f64>> {
    match (model, mode) {
        (GeneratingModel::OpClayton, MarginsMode::KnownFrechet) => {
            Ok(sample_opclayton(n, dim, alpha, seed)?.mapv(|u| -1.0 / u.ln()))
        }
        _ => generate(model, n, dim, alpha, seed),
    }
}

/// Block maxima of `raw` with known or fitted GEV margins.
pub fn block_data(raw: ArrayView2<f64>, block_length: usize, mode: MarginsMode) -> Result<BlockMaximaData> {
    let (maxima, parts, dropped) = crate::likelihoods::block_maxima(raw, block_length)?;
    let margins = match mode {
        MarginsMode::KnownFrechet => MarginalModel::known_frechet(raw.ncols()),
        MarginsMode::TwoStep => gev_margins(&maxima, block_length)?,
    };
    let data = BlockMaximaData::new(maxima, parts, block_length, margins)?;
    debug_assert!(dropped < block_length);
    Ok(data)
}

fn gev_margins(maxima: &Array2<f64>, block_length: usize) -> Result<MarginalModel> {
    let comps = (0..maxima.ncols())
        .map(|d| {
            let params = fit_gev(&maxima.column(d).to_vec())?;
            Ok(Margin::FittedGev { params, block_length })
        })
        .collect::<Result<Vec<_>>>()?;
    MarginalModel::new(comps)
}

fn semiparametric_margins(raw: ArrayView2<f64>, p: f64) -> Result<MarginalModel> {
    let comps = (0..raw.ncols())
        .map(|d| Ok(Margin::SemiParametric(SemiParametricMargin::fit(&raw.column(d).to_vec(), p)?)))
        .collect::<Result<Vec<_>>>()?;
    MarginalModel::new(comps)
}

fn margins_for_threshold(raw: ArrayView2<f64>, p: f64, mode: MarginsMode) -> Result<MarginalModel> {
    match mode {
        MarginsMode::KnownFrechet => Ok(MarginalModel::known_frechet(raw.ncols())),
        MarginsMode::TwoStep => semiparametric_margins(raw, p),
    }
}

/// Threshold family an estimator is fitted on: `Thr2` uses the diagonal one.
pub fn threshold_kind(estimator: Estimator) -> KindTag {
    if estimator == Estimator::Thr2 {
        KindTag::Diagonal
    } else {
        KindTag::Marginal
    }
}

/// Fit one estimator to one raw dataset.
pub fn fit_dataset(estimator: Estimator, raw: &Array2<f64>, tuning: Tuning, mode: MarginsMode) -> Result<AlphaFit> {
    match (estimator.is_block_maximum(), tuning) {
        (true, Tuning::Block(l)) => fit_block_maxima(estimator, &block_data(raw.view(), l, mode)?),
        (false, Tuning::Prob(p)) => {
            let margins = margins_for_threshold(raw.view(), p, mode)?;
            let td = select_threshold(p, threshold_kind(estimator), raw.clone(), margins)?;
            fit_threshold(estimator, &td)
        }
        _ => Err(Error::Usage(format!("tuning {tuning} does not apply to {estimator}"))),
    }
}

// ---------------------------------------------------------------------------
// Studies

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub model: GeneratingModel,
    pub alpha: f64,
    pub dim: usize,
    pub n: usize,
    pub replicates: usize,
    pub estimators: Vec<Estimator>,
    /// Block lengths tried for every block-maximum estimator.
    pub block_lengths: Vec<usize>,
    /// Threshold probabilities tried for every threshold estimator.
    pub probs: Vec<f64>,
    pub margins_mode: MarginsMode,
    pub master_seed: u64,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Usage(format!("alpha must lie in (0,1], got {}", self.alpha)));
        }
        if self.replicates < 2 {
            return Err(Error::Usage("a study needs at least 2 replicates".into()));
        }
        if self.dim < 2 || self.n < 2 {
            return Err(Error::Usage("a study needs dim ≥ 2 and n ≥ 2".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Usage("no estimators requested".into()));
        }
        for e in &self.estimators {
            if e.is_full_likelihood() && self.dim > MAX_STUDY_FULL_DIM {
                return Err(Error::Capability(format!(
                    "{e} is limited to D ≤ {MAX_STUDY_FULL_DIM} in studies, got D = {}",
                    self.dim
                )));
            }
            let grid_empty =
                if e.is_block_maximum() { self.block_lengths.is_empty() } else { self.probs.is_empty() };
            if grid_empty {
                return Err(Error::Usage(format!("no tuning values given for {e}")));
            }
        }
        if let Some(&l) = self.block_lengths.iter().find(|&&l| l == 0 || l > self.n) {
            return Err(Error::Usage(format!("block length {l} must lie in [1, n]")));
        }
        if let Some(p) = self.probs.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::Usage(format!("threshold probability {p} must lie in (0,1)")));
        }
        Ok(())
    }

    /// `(estimator, tuning)` pairs in output order.
    pub fn cells(&self) -> Vec<(Estimator, Tuning)> {
        let mut out = Vec::new();
        for &e in &self.estimators {
            if e.is_block_maximum() {
                out.extend(self.block_lengths.iter().map(|&l| (e, Tuning::Block(l))));
            } else {
                out.extend(self.probs.iter().map(|&p| (e, Tuning::Prob(p))));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub alpha_hat: Option<f64>,
    /// `ok`, or `failed:<error kind>`.
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub estimator: Estimator,
    pub tuning: Tuning,
    pub replicates: Vec<Replicate>,
    /// `None` when fewer than two replicates succeeded.
    pub summary: Option<Summary>,
    pub n_ok: usize,
}

impl StudyCell {
    pub fn estimates(&self) -> Vec<f64> {
        self.replicates.iter().filter_map(|r| r.alpha_hat).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub config: StudyConfig,
    pub cells: Vec<StudyCell>,
}

pub const REPLICATE_CSV_HEADER: &str = "estimator,alpha_true,D,tuning,replicate,alpha_hat,status";
pub const SUMMARY_CSV_HEADER: &str = "estimator,alpha_true,D,tuning,bias,se,rmse,n_ok";

fn opt_num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_else(|| "NaN".into())
}

impl StudyResult {
    pub fn cell(&self, estimator: Estimator, tuning: Tuning) -> Option<&StudyCell> {
        self.cells.iter().find(|c| c.estimator == estimator && c.tuning == tuning)
    }

    /// Share of failed fits over all cells and replicates.
    pub fn failure_rate(&self) -> f64 {
        let total: usize = self.cells.iter().map(|c| c.replicates.len()).sum();
        let ok: usize = self.cells.iter().map(|c| c.n_ok).sum();
        if total == 0 {
            0.0
        } else {
            (total - ok) as f64 / total as f64
        }
    }

    /// Replicate rows without the header.
    pub fn replicate_rows(&self) -> Vec<String> {
        let c = &self.config;
        let mut out = Vec::new();
        for cell in &self.cells {
            for (r, rep) in cell.replicates.iter().enumerate() {
                out.push(format!(
                    "{},{},{},{},{},{},{}",
                    cell.estimator,
                    c.alpha,
                    c.dim,
                    cell.tuning,
                    r,
                    opt_num(rep.alpha_hat),
                    rep.status
                ));
            }
        }
        out
    }

    /// Summary rows without the header.
    pub fn summary_rows(&self) -> Vec<String> {
        let c = &self.config;
        self.cells
            .iter()
            .map(|cell| {
                let s = cell.summary;
                format!(
                    "{},{},{},{},{},{},{},{}",
                    cell.estimator,
                    c.alpha,
                    c.dim,
                    cell.tuning,
                    opt_num(s.map(|s| s.bias)),
                    opt_num(s.map(|s| s.se)),
                    opt_num(s.map(|s| s.rmse)),
                    cell.n_ok
                )
            })
            .collect()
    }
}

/// Per-replicate cache of prepared data shared across estimators.
struct ReplicateData<'a> {
    raw: &'a Array2<f64>,
    mode: MarginsMode,
    blocks: BTreeMap<usize, Result<BlockMaximaData>>,
    thresholds: BTreeMap<(u64, bool), Result<crate::likelihoods::ThresholdData>>,
}

impl<'a> ReplicateData<'a> {
    fn new(raw: &'a Array2<f64>, mode: MarginsMode) -> Self {
        Self { raw, mode, blocks: BTreeMap::new(), thresholds: BTreeMap::new() }
    }

    fn fit(&mut self, estimator: Estimator, tuning: Tuning) -> Result<f64> {
        let fit = match tuning {
            Tuning::Block(l) => {
                let (raw, mode) = (self.raw, self.mode);
                let data = self.blocks.entry(l).or_insert_with(|| block_data(raw.view(), l, mode));
                fit_block_maxima(estimator, data.as_ref().map_err(Clone::clone)?)?
            }
            Tuning::Prob(p) => {
                let kind = threshold_kind(estimator);
                let key = (p.to_bits(), kind == KindTag::Diagonal);
                let (raw, mode) = (self.raw, self.mode);
                let data = self.thresholds.entry(key).or_insert_with(|| {
                    let margins = margins_for_threshold(raw.view(), p, mode)?;
                    select_threshold(p, kind, raw.clone(), margins)
                });
                fit_threshold(estimator, data.as_ref().map_err(Clone::clone)?)?
            }
        };
        Ok(fit.alpha_hat)
    }
}

fn outcome(r: Result<f64>) -> Replicate {
    match r {
        Ok(a) => Replicate { alpha_hat: Some(a), status: "ok".into() },
        Err(e) => Replicate { alpha_hat: None, status: format!("failed:{}", e.kind()) },
    }
}

/// Simulate `R` datasets and fit every `(estimator, tuning)` cell to each.
/// Failed fits are recorded, not fatal.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let cells = config.cells();
    let per_rep: Vec<Result<Vec<Replicate>>> = crate::par_map(config.replicates, |r| {
        let raw = simulate_dataset(
            config.model,
            config.n,
            config.dim,
            config.alpha,
            config.margins_mode,
            SeedSpec::new(config.master_seed, r as u64),
        )?;
        let mut data = ReplicateData::new(&raw, config.margins_mode);
        Ok(cells.iter().map(|&(e, t)| outcome(data.fit(e, t))).collect())
    });
    let per_rep = per_rep.into_iter().collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(cells.len());
    for (k, &(estimator, tuning)) in cells.iter().enumerate() {
        let replicates: Vec<Replicate> = per_rep.iter().map(|row| row[k].clone()).collect();
        let ok: Vec<f64> = replicates.iter().filter_map(|r| r.alpha_hat).collect();
        let summary = stats::summarize(&ok, config.alpha).ok();
        out.push(StudyCell { estimator, tuning, n_ok: ok.len(), replicates, summary });
    }
    Ok(StudyResult { config: config.clone(), cells: out })
}

/// Master seed of the `index`-th cell of a multi-cell study.
pub fn cell_seed(master_seed: u64, index: usize) -> u64 {
    master_seed.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

// ---------------------------------------------------------------------------
// Best estimator by RMSE

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestRow {
    pub alpha_true: f64,
    pub estimator: Estimator,
    pub tuning: Tuning,
    pub bias: f64,
    pub se: f64,
    pub rmse: f64,
}

pub const BEST_CSV_HEADER: &str = "alpha_true,estimator,tuning,bias,se,rmse";

impl BestRow {
    pub fn csv_line(&self) -> String {
        format!("{},{},{},{},{},{}", self.alpha_true, self.estimator, self.tuning, self.bias, self.se, self.rmse)
    }
}

/// Cell with the smallest RMSE; ties keep the earlier cell.
pub fn pick_best(result: &StudyResult) -> Option<BestRow> {
    let mut best: Option<BestRow> = None;
    for cell in &result.cells {
        if let Some(s) = cell.summary {
            if best.as_ref().is_none_or(|b| s.rmse < b.rmse) {
                best = Some(BestRow {
                    alpha_true: result.config.alpha,
                    estimator: cell.estimator,
                    tuning: cell.tuning,
                    bias: s.bias,
                    se: s.se,
                    rmse: s.rmse,
                });
            }
        }
    }
    best
}

/// Run `base` at every α of `alphas` (cell `i` keyed by `cell_seed(seed, i)`)
/// and pick the RMSE winner of each.
pub fn best_estimator_table(base: &StudyConfig, alphas: &[f64]) -> Result<(Vec<StudyResult>, Vec<BestRow>)> {
    let mut studies = Vec::with_capacity(alphas.len());
    let mut rows = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let cfg = StudyConfig { alpha, master_seed: cell_seed(base.master_seed, i), ..base.clone() };
        let res = run_study(&cfg)?;
        let best = pick_best(&res)
            .ok_or_else(|| Error::Estimation(format!("no estimator succeeded at alpha = {alpha}")))?;
        rows.push(best);
        studies.push(res);
    }
    Ok((studies, rows))
}

// ---------------------------------------------------------------------------
// Pairwise efficiency

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairFamily {
    /// `max-pair` against `max1`.
    Max,
    /// `thr-pair` against `thr4`.
    Thr,
}

impl PairFamily {
    pub fn estimators(&self) -> (Estimator, Estimator) {
        match self {
            PairFamily::Max => (Estimator::Max1, Estimator::MaxPair),
            PairFamily::Thr => (Estimator::Thr4, Estimator::ThrPair),
        }
    }
}

impl fmt::Display for PairFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairFamily::Max => "max",
            PairFamily::Thr => "thr",
        })
    }
}

impl FromStr for PairFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" => Ok(PairFamily::Max),
            "thr" => Ok(PairFamily::Thr),
            other => Err(Error::Usage(format!("unknown pairwise family '{other}' (max or thr)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEffConfig {
    pub model: GeneratingModel,
    pub family: PairFamily,
    pub alphas: Vec<f64>,
    pub dims: Vec<usize>,
    pub n: usize,
    pub replicates: usize,
    pub block_length: usize,
    pub prob: f64,
    pub margins_mode: MarginsMode,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairEffRow {
    pub family: PairFamily,
    pub alpha: f64,
    pub dim: usize,
    pub root_are_percent: f64,
    pub se_full: f64,
    pub se_pair: f64,
    pub n_ok: usize,
}

pub const PAIR_EFF_CSV_HEADER: &str = "family,alpha,D,root_are_percent,se_full,se_pair,n_ok";

impl PairEffRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.family, self.alpha, self.dim, self.root_are_percent, self.se_full, self.se_pair, self.n_ok
        )
    }
}

/// `100·SE(full)/SE(pair)` per `(α, D)`, with both estimators fitted to the
/// first `D` columns of the same `max(D)`-dimensional datasets. Only
/// replicates where both fits succeed enter a cell.
pub fn pairwise_efficiency_table(config: &PairEffConfig) -> Result<Vec<PairEffRow>> {
    let d_max = *config.dims.iter().max().ok_or_else(|| Error::Usage("no dimensions given".into()))?;
    if config.dims.iter().any(|&d| d < 2) {
        return Err(Error::Usage("dimensions must be at least 2".into()));
    }
    if d_max > MAX_STUDY_FULL_DIM {
        return Err(Error::Capability(format!(
            "full likelihoods are limited to D ≤ {MAX_STUDY_FULL_DIM}, got D = {d_max}"
        )));
    }
    debug_assert!(MAX_STUDY_FULL_DIM <= MAX_PARTITION_DIM);
    if config.replicates < 3 {
        return Err(Error::Usage("need at least 3 replicates".into()));
    }
    let (full, pair) = config.family.estimators();
    let tuning = match config.family {
        PairFamily::Max => Tuning::Block(config.block_length),
        PairFamily::Thr => Tuning::Prob(config.prob),
    };
    let mut rows = Vec::new();
    for (i, &alpha) in config.alphas.iter().enumerate() {
        let seed = cell_seed(config.master_seed, i);
        let fits: Vec<Result<Vec<(Option<f64>, Option<f64>)>>> = crate::par_map(config.replicates, |r| {
            let raw =
                simulate_dataset(config.model, config.n, d_max, alpha, config.margins_mode, SeedSpec::new(seed, r as u64))?;
            let marg = match tuning {
                Tuning::Block(l) => {
                    let (maxima, _, _) = crate::likelihoods::block_maxima(raw.view(), l)?;
                    match config.margins_mode {
                        MarginsMode::KnownFrechet => Ok(MarginalModel::known_frechet(d_max)),
                        MarginsMode::TwoStep => gev_margins(&maxima, l),
                    }
                }
                Tuning::Prob(p) => margins_for_threshold(raw.view(), p, config.margins_mode),
            };
            Ok(config
                .dims
                .iter()
                .map(|&d| {
                    let sub = raw.slice(s![.., ..d]).to_owned();
                    let m = match &marg {
                        Ok(m) => MarginalModel::new(m.components()[..d].to_vec()),
                        Err(e) => Err(e.clone()),
                    };
                    let fit = |est| -> Option<f64> { fit_with_margins(est, &sub, tuning, m.clone().ok()?).ok() };
                    (fit(full), fit(pair))
                })
                .collect())
        });
        let fits = fits.into_iter().collect::<Result<Vec<_>>>()?;
        for (k, &d) in config.dims.iter().enumerate() {
            let paired: Vec<(f64, f64)> =
                fits.iter().filter_map(|row| Some((row[k].0?, row[k].1?))).collect();
            if paired.len() < 2 {
                return Err(Error::Estimation(format!("fewer than 2 paired fits at alpha = {alpha}, D = {d}")));
            }
            let se_full = stats::variance(&paired.iter().map(|p| p.0).collect::<Vec<_>>()).sqrt();
            let se_pair = stats::variance(&paired.iter().map(|p| p.1).collect::<Vec<_>>()).sqrt();
            rows.push(PairEffRow {
                family: config.family,
                alpha,
                dim: d,
                root_are_percent: 100.0 * se_full / se_pair,
                se_full,
                se_pair,
                n_ok: paired.len(),
            });
        }
    }
    Ok(rows)
}

fn fit_with_margins(estimator: Estimator, raw: &Array2<f64>, tuning: Tuning, margins: MarginalModel) -> Result<f64> {
    let fit = match tuning {
        Tuning::Block(l) => {
            let (maxima, parts, _) = crate::likelihoods::block_maxima(raw.view(), l)?;
            fit_block_maxima(estimator, &BlockMaximaData::new(maxima, parts, l, margins)?)?
        }
        Tuning::Prob(p) => {
            fit_threshold(estimator, &select_threshold(p, threshold_kind(estimator), raw.clone(), margins)?)?
        }
    };
    Ok(fit.alpha_hat)
}

// ---------------------------------------------------------------------------
// Return levels

/// Observations per year for converting return periods to probabilities.
pub const OBS_PER_YEAR: f64 = 100.0;

/// True marginal distribution of each component of the risk variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RiskMargins {
    /// Atom 1/2 at zero and the positive half of a t₅ above it.
    TruncatedT5,
    UnitFrechet,
}

impl RiskMargins {
    fn quantile(&self, u: f64) -> f64 {
        match self {
            RiskMargins::TruncatedT5 => truncated_t_quantile(u).unwrap_or(f64::INFINITY),
            RiskMargins::UnitFrechet => -1.0 / u.ln(),
        }
    }

    fn cdf(&self, y: f64) -> f64 {
        match self {
            RiskMargins::TruncatedT5 => truncated_t_cdf(y),
            RiskMargins::UnitFrechet if y > 0.0 => (-1.0 / y).exp(),
            RiskMargins::UnitFrechet => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnLevel {
    /// Years.
    pub period: f64,
    /// Per-observation exceedance probability `1/(100 T)`.
    pub prob: f64,
    pub level: f64,
    pub mc_stderr: f64,
}

pub const RETURN_LEVEL_CSV_HEADER: &str = "period,prob,level,mc_stderr";

fn check_periods(periods: &[f64], mc_size: usize) -> Result<f64> {
    if periods.is_empty() {
        return Err(Error::Usage("no return periods given".into()));
    }
    if let Some(t) = periods.iter().find(|t| !(**t >= 1.0 && **t <= 500.0)) {
        return Err(Error::Usage(format!("return period {t} must lie in [1, 500] years")));
    }
    let t_max = periods.iter().copied().fold(1.0, f64::max);
    let p_min = 1.0 / (OBS_PER_YEAR * t_max);
    let need = (100.0 / p_min).ceil() as usize;
    if mc_size < need {
        return Err(Error::Usage(format!(
            "mc_size {mc_size} gives fewer than 100 expected points beyond the {t_max}-year level; need {need}"
        )));
    }
    Ok(t_max)
}

/// Sums `Y₁ + Y₂` of `m` draws, sorted, leaving out rows whose components
/// are both at most `skip_below / 2`. Returns the kept sums and the number
/// of rows left out.
fn draw_sums(alpha: f64, margins: RiskMargins, m: usize, seed: SeedSpec, skip_below: f64) -> (Vec<f64>, usize) {
    let u0 = margins.cdf(0.5 * skip_below);
    let mut rng = seed.rng();
    let mut row = [0.0; 2];
    let mut sums = Vec::new();
    let mut skipped = 0;
    for _ in 0..m {
        opclayton_row(alpha, &mut rng, &mut row);
        if row[0] <= u0 && row[1] <= u0 {
            skipped += 1;
        } else {
            sums.push(margins.quantile(row[0]) + margins.quantile(row[1]));
        }
    }
    sums.sort_unstable_by(f64::total_cmp);
    (sums, skipped)
}

/// Quantiles of `Y₁ + Y₂` at each period, where `Y` follows the
/// outer-power Clayton copula with dependence `alpha_hat` and the given
/// margins, from `mc_size` draws of stream `seed`.
///
/// The standard error uses the order-statistic spacing estimate of the
/// density at the quantile. Since `Y₂ ≥ 0`, every requested level is at
/// least the marginal quantile `b` at the shortest period, so rows with
/// both components below `b/2` are never transformed; if a needed order
/// statistic is not above `b` the draws are redone in full.
pub fn return_levels(
    alpha_hat: f64,
    margins: RiskMargins,
    periods: &[f64],
    mc_size: usize,
    seed: SeedSpec,
) -> Result<Vec<ReturnLevel>> {
    check_periods(periods, mc_size)?;
    if !(alpha_hat > 0.0 && alpha_hat <= 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1], got {alpha_hat}")));
    }
    let t_min = periods.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = margins.quantile(1.0 - 1.0 / (OBS_PER_YEAR * t_min));
    let m = mc_size as f64;
    let ranks: Vec<(usize, usize, usize)> = periods
        .iter()
        .map(|&t| {
            let prob = 1.0 / (OBS_PER_YEAR * t);
            let j = ((m * (1.0 - prob)).ceil() as usize).clamp(1, mc_size) - 1;
            let k = ((m * prob).sqrt().ceil() as usize).max(1);
            (j.saturating_sub(k), j, (j + k).min(mc_size - 1))
        })
        .collect();
    let (mut sums, mut skipped) = draw_sums(alpha_hat, margins, mc_size, seed, bound);
    let exact = |sums: &[f64], skipped: usize| {
        ranks.iter().all(|&(lo, _, _)| lo >= skipped && sums[lo - skipped] > bound)
    };
    if !exact(&sums, skipped) {
        (sums, skipped) = draw_sums(alpha_hat, margins, mc_size, seed, 0.0);
    }
    let at = |r: usize| if r < skipped { 0.0 } else { sums[r - skipped] };
    Ok(periods
        .iter()
        .zip(&ranks)
        .map(|(&period, &(lo, j, hi))| {
            let prob = 1.0 / (OBS_PER_YEAR * period);
            let q = 1.0 - prob;
            let spacing = at(hi) - at(lo);
            // density ≈ (hi - lo) / (m · spacing); SE = √(q(1-q)/m) / density
            let mc_stderr = if spacing > 0.0 { (q * prob / m).sqrt() * spacing * m / (hi - lo) as f64 } else { 0.0 };
            ReturnLevel { period, prob, level: at(j), mc_stderr }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnStudyConfig {
    pub alphas: Vec<f64>,
    pub estimators: Vec<Estimator>,
    pub n: usize,
    pub replicates: usize,
    pub block_length: usize,
    pub prob: f64,
    pub periods: Vec<f64>,
    pub mc_size: usize,
    /// Points of the α grid on which return levels are tabulated.
    pub grid_points: usize,
    pub margins_mode: MarginsMode,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnStudyRow {
    pub estimator: Estimator,
    pub alpha_true: f64,
    pub tuning: Tuning,
    pub period: f64,
    pub true_level: f64,
    pub mean: f64,
    pub bias: f64,
    pub se: f64,
    pub rmse: f64,
    pub n_ok: usize,
}

pub const RETURN_STUDY_CSV_HEADER: &str = "estimator,alpha_true,tuning,period,true_level,mean,bias,se,rmse,n_ok";

impl ReturnStudyRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.estimator,
            self.alpha_true,
            self.tuning,
            self.period,
            self.true_level,
            self.mean,
            self.bias,
            self.se,
            self.rmse,
            self.n_ok
        )
    }
}

/// Kernel half-width in α of the smoother applied to tabulated return levels.
pub const CURVE_BANDWIDTH: f64 = 0.05;

/// Local-linear regression of each column of `y` on `x` with an
/// Epanechnikov kernel of half-width `h`, evaluated at every `x`.
fn smooth_local_linear(x: &[f64], y: &[Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    x.iter()
        .map(|&x0| {
            let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
            let mut t0 = vec![0.0; y[0].len()];
            let mut t1 = vec![0.0; y[0].len()];
            for (xi, yi) in x.iter().zip(y) {
                let d = xi - x0;
                let w = (1.0 - (d / h).powi(2)).max(0.0);
                if w == 0.0 {
                    continue;
                }
                s0 += w;
                s1 += w * d;
                s2 += w * d * d;
                for k in 0..yi.len() {
                    t0[k] += w * yi[k];
                    t1[k] += w * d * yi[k];
                }
            }
            let det = s0 * s2 - s1 * s1;
            (0..t0.len())
                .map(|k| if det > 0.0 { (s2 * t0[k] - s1 * t1[k]) / det } else { t0[k] / s0 })
                .collect()
        })
        .collect()
}

/// Return levels tabulated on an α grid with common random numbers,
/// smoothed in α, and linearly interpolated between grid points. The
/// smoothing removes Monte Carlo wiggles that would otherwise dominate the
/// local slope, and with it the spread of levels implied by concentrated
/// estimates.
#[derive(Debug, Clone)]
pub struct ReturnLevelCurve {
    grid: Vec<f64>,
    // levels[i][k]: grid point i, period k
    levels: Vec<Vec<f64>>,
    periods: Vec<f64>,
}

impl ReturnLevelCurve {
    pub fn build(periods: &[f64], mc_size: usize, grid_points: usize, seed: SeedSpec) -> Result<Self> {
        if grid_points < 2 {
            return Err(Error::Usage("the α grid needs at least 2 points".into()));
        }
        let (lo, hi) = (crate::optimize::ALPHA_LO, crate::optimize::ALPHA_HI);
        let grid: Vec<f64> =
            (0..grid_points).map(|i| lo + (hi - lo) * i as f64 / (grid_points - 1) as f64).collect();
        let levels = crate::par_map(grid.len(), |i| {
            return_levels(grid[i], RiskMargins::TruncatedT5, periods, mc_size, seed)
                .map(|v| v.iter().map(|r| r.level).collect::<Vec<_>>())
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let levels = smooth_local_linear(&grid, &levels, CURVE_BANDWIDTH);
        Ok(Self { grid, levels, periods: periods.to_vec() })
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    /// Levels for every period at `alpha`, clamped to the grid range.
    pub fn at(&self, alpha: f64) -> Vec<f64> {
        let g = &self.grid;
        let a = alpha.clamp(g[0], g[g.len() - 1]);
        let i = g.partition_point(|&x| x <= a).clamp(1, g.len() - 1) - 1;
        let w = (a - g[i]) / (g[i + 1] - g[i]);
        self.levels[i].iter().zip(&self.levels[i + 1]).map(|(x, y)| x + w * (y - x)).collect()
    }
}

/// Return levels implied by each replicate estimate of a two-dimensional
/// Clayton study, summarized per estimator, true α and period.
pub fn return_level_study(config: &ReturnStudyConfig) -> Result<Vec<ReturnStudyRow>> {
    check_periods(&config.periods, config.mc_size)?;
    // stream u64::MAX is reserved for return-level draws
    let rl_seed = SeedSpec::new(config.master_seed, u64::MAX);
    let curve = ReturnLevelCurve::build(&config.periods, config.mc_size, config.grid_points, rl_seed)?;
    let mut rows = Vec::new();
    for (i, &alpha) in config.alphas.iter().enumerate() {
        // the truth comes from the same curve, so bias reflects α̂ alone
        let truth = curve.at(alpha);
        let study = run_study(&StudyConfig {
            model: GeneratingModel::OpClayton,
            alpha,
            dim: 2,
            n: config.n,
            replicates: config.replicates,
            estimators: config.estimators.clone(),
            block_lengths: vec![config.block_length],
            probs: vec![config.prob],
            margins_mode: config.margins_mode,
            master_seed: cell_seed(config.master_seed, i),
        })?;
        for cell in &study.cells {
            let per_rep: Vec<Vec<f64>> = cell.estimates().iter().map(|&a| curve.at(a)).collect();
            for (k, &period) in config.periods.iter().enumerate() {
                let vals: Vec<f64> = per_rep.iter().map(|v| v[k]).collect();
                let (mean, s) = match stats::summarize(&vals, truth[k]) {
                    Ok(s) => (truth[k] + s.bias, s),
                    Err(_) => (f64::NAN, Summary { bias: f64::NAN, se: f64::NAN, rmse: f64::NAN }),
                };
                rows.push(ReturnStudyRow {
                    estimator: cell.estimator,
                    alpha_true: alpha,
                    tuning: cell.tuning,
                    period,
                    true_level: truth[k],
                    mean,
                    bias: s.bias,
                    se: s.se,
                    rmse: s.rmse,
                    n_ok: vals.len(),
                });
            }
        }
    }
    Ok(rows)
}
