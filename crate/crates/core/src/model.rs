//! Exponent measures of the logistic and asymmetric logistic families.
//!
//! For the symmetric logistic model with `s = Σ_d z_d^{-1/α}` the exponent
//! measure is `V(z) = s^α` and every mixed partial derivative has the closed
//! form
//!
//! ```text
//! -V_E(z) = c_k(α) · s^{α-k} · Π_{d∈E} z_d^{-1/α-1},     k = |E|,
//! c_k(α)  = α^{1-k} · Π_{j=1}^{k-1} (j - α).
//! ```
//!
//! Products of `-V_E` over the blocks of a partition therefore depend only on
//! the block sizes, which is what [`PartitionPoly`] exploits: the sum over all
//! set partitions collapses to a polynomial in `V` whose coefficients are
//! indexed by integer partitions with their set-partition multiplicities.
//!
//! Coordinates are 0-based throughout; `Display` on [`SetPartition`] prints
//! them 1-based.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension for which set partitions are enumerated (Bell(12) = 4 213 597).
pub const MAX_PARTITION_DIM: usize = 12;

/// Dependence parameter of the symmetric logistic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    alpha: f64,
}

impl LogisticParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Domain(format!(
                "logistic alpha must lie in (0, 1], got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// One term of the asymmetric logistic exponent measure: the index set `E`,
/// its dependence parameter `α_E` and the weights `θ_{E,d}` for `d ∈ E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymTerm {
    pub members: Vec<usize>,
    pub alpha: f64,
    pub theta: Vec<f64>,
}

/// Asymmetric logistic parameters. Index sets absent from `terms` carry zero weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymLogisticParams {
    dim: usize,
    terms: Vec<AsymTerm>,
}

impl AsymLogisticParams {
    pub fn new(dim: usize, mut terms: Vec<AsymTerm>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::Usage(format!("dimension must be at least 2, got {dim}")));
        }
        let mut seen = BTreeMap::new();
        let mut weight = vec![0.0; dim];
        for term in &mut terms {
            if term.members.is_empty() || term.members.len() != term.theta.len() {
                return Err(Error::Usage(
                    "each term needs a non-empty index set with one theta per member".into(),
                ));
            }
            // sort members, keeping theta aligned
            let mut pairs: Vec<(usize, f64)> =
                term.members.iter().copied().zip(term.theta.iter().copied()).collect();
            pairs.sort_by_key(|p| p.0);
            term.members = pairs.iter().map(|p| p.0).collect();
            term.theta = pairs.iter().map(|p| p.1).collect();
            if term.members.windows(2).any(|w| w[0] == w[1]) || term.members[term.members.len() - 1] >= dim {
                return Err(Error::Usage(format!("invalid index set {:?}", term.members)));
            }
            if seen.insert(term.members.clone(), ()).is_some() {
                return Err(Error::Usage(format!("index set {:?} listed twice", term.members)));
            }
            if term.members.len() == 1 {
                term.alpha = 1.0;
            } else if !(term.alpha > 0.0 && term.alpha <= 1.0) {
                return Err(Error::Domain(format!(
                    "alpha for {:?} must lie in (0, 1], got {}",
                    term.members, term.alpha
                )));
            }
            for (&d, &t) in term.members.iter().zip(&term.theta) {
                if !(0.0..=1.0).contains(&t) {
                    return Err(Error::Domain(format!("theta must lie in [0, 1], got {t}")));
                }
                weight[d] += t;
            }
        }
        for (d, w) in weight.iter().enumerate() {
            if (w - 1.0).abs() > 1e-12 {
                return Err(Error::Domain(format!(
                    "theta weights for component {d} sum to {w}, expected 1"
                )));
            }
        }
        Ok(Self { dim, terms })
    }

    /// Parameters under which the asymmetric model coincides with the logistic one.
    pub fn logistic_embedding(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(
            dim,
            vec![AsymTerm { members: (0..dim).collect(), alpha, theta: vec![1.0; dim] }],
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[AsymTerm] {
        &self.terms
    }

    /// True when some term with positive weight is a proper subset of all
    /// coordinates, i.e. the exponent measure puts mass on a boundary face.
    pub fn has_boundary_mass(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.members.len() < self.dim && t.theta.iter().any(|&w| w > 0.0))
    }
}

/// Dependence structure of a multivariate extreme-value distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DependenceModel {
    Logistic(LogisticParams),
    AsymLogistic(AsymLogisticParams),
}

impl DependenceModel {
    pub fn exponent(&self, z: &[f64]) -> Result<f64> {
        match self {
            Self::Logistic(p) => exponent_logistic(z, p),
            Self::AsymLogistic(p) => exponent_asym_logistic(z, p),
        }
    }

    pub fn has_boundary_mass(&self) -> bool {
        match self {
            Self::Logistic(_) => false,
            Self::AsymLogistic(p) => p.has_boundary_mass(),
        }
    }
}

fn check_positive(z: &[f64]) -> Result<()> {
    if z.is_empty() {
        return Err(Error::Usage("empty coordinate vector".into()));
    }
    match z.iter().find(|&&v| !(v > 0.0)) {
        Some(v) => Err(Error::Domain(format!("coordinates must be positive, got {v}"))),
        None => Ok(()),
    }
}

/// Logistic exponent measure `(Σ_d z_d^{-1/α})^α`.
pub fn exponent_logistic(z: &[f64], params: &LogisticParams) -> Result<f64> {
    check_positive(z)?;
    let a = params.alpha;
    let s: f64 = z.iter().map(|&v| v.powf(-1.0 / a)).sum();
    Ok(s.powf(a))
}

/// Asymmetric logistic exponent measure; terms with `θ_{E,d} = 0` contribute nothing.
pub fn exponent_asym_logistic(z: &[f64], params: &AsymLogisticParams) -> Result<f64> {
    check_positive(z)?;
    if z.len() != params.dim {
        return Err(Error::Usage(format!(
            "expected {} coordinates, got {}",
            params.dim,
            z.len()
        )));
    }
    let mut total = 0.0;
    for term in &params.terms {
        if term.members.len() == 1 {
            total += term.theta[0] / z[term.members[0]];
            continue;
        }
        let a = term.alpha;
        let mut inner = 0.0;
        let mut any = false;
        for (&d, &t) in term.members.iter().zip(&term.theta) {
            if t > 0.0 {
                inner += (z[d] / t).powf(-1.0 / a);
                any = true;
            }
        }
        if any {
            total += inner.powf(a);
        }
    }
    Ok(total)
}

/// `ln c_k(α)`; `-∞` when α = 1 and k ≥ 2.
pub(crate) fn log_partition_coef(k: usize, alpha: f64) -> f64 {
    let mut acc = (1.0 - k as f64) * alpha.ln();
    for j in 1..k {
        acc += (j as f64 - alpha).ln();
    }
    acc
}

fn check_subset(subset: &[usize], dim: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::Usage("derivative index set must be non-empty".into()));
    }
    let mut sorted = subset.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) || sorted[sorted.len() - 1] >= dim {
        return Err(Error::Usage(format!("invalid derivative index set {subset:?}")));
    }
    Ok(())
}

/// Mixed partial `∂^{|E|} V / ∂z_E` of the logistic exponent measure.
pub fn partial_deriv_logistic(z: &[f64], params: &LogisticParams, subset: &[usize]) -> Result<f64> {
    check_positive(z)?;
    check_subset(subset, z.len())?;
    let a = params.alpha;
    let s: f64 = z.iter().map(|&v| v.powf(-1.0 / a)).sum();
    let k = subset.len();
    let log_mag = log_partition_coef(k, a) + (a - k as f64) * s.ln()
        - (1.0 / a + 1.0) * subset.iter().map(|&d| z[d].ln()).sum::<f64>();
    if log_mag == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    Ok(-log_mag.exp())
}

/// Mixed partial of the asymmetric logistic exponent measure, summed term by term.
pub fn partial_deriv_asym_logistic(
    z: &[f64],
    params: &AsymLogisticParams,
    subset: &[usize],
) -> Result<f64> {
    check_positive(z)?;
    if z.len() != params.dim {
        return Err(Error::Usage(format!(
            "expected {} coordinates, got {}",
            params.dim,
            z.len()
        )));
    }
    check_subset(subset, z.len())?;
    let mut total = 0.0;
    for term in &params.terms {
        let weight_of = |d: usize| {
            term.members.iter().position(|&m| m == d).map(|i| term.theta[i]).unwrap_or(0.0)
        };
        if subset.iter().any(|&d| weight_of(d) <= 0.0) {
            continue;
        }
        let a = term.alpha;
        let active: Vec<(usize, f64)> = term
            .members
            .iter()
            .zip(&term.theta)
            .filter(|(_, &t)| t > 0.0)
            .map(|(&d, &t)| (d, z[d] / t))
            .collect();
        let s: f64 = active.iter().map(|&(_, x)| x.powf(-1.0 / a)).sum();
        let k = subset.len();
        let mut log_mag = log_partition_coef(k, a) + (a - k as f64) * s.ln();
        for &d in subset {
            let t = weight_of(d);
            log_mag += -(1.0 / a + 1.0) * (z[d] / t).ln() - t.ln();
        }
        if log_mag > f64::NEG_INFINITY {
            total -= log_mag.exp();
        }
    }
    Ok(total)
}

/// A set partition of `{0, .., dim-1}` in canonical form: members sorted
/// within blocks, blocks sorted by their smallest member.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SetPartition {
    blocks: Vec<Vec<usize>>,
}

impl SetPartition {
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.iter().any(|b| b.is_empty()) {
            return Err(Error::Usage("partition blocks must be non-empty".into()));
        }
        for b in &mut blocks {
            b.sort_unstable();
        }
        blocks.sort_by_key(|b| b[0]);
        let mut all: Vec<usize> = blocks.iter().flatten().copied().collect();
        all.sort_unstable();
        if all.iter().enumerate().any(|(i, &v)| i != v) {
            return Err(Error::Usage(format!("blocks {blocks:?} do not partition 0..n")));
        }
        Ok(Self { blocks })
    }

    /// Partition induced by a label per element (equal labels share a block).
    pub fn from_labels<T: Eq>(labels: &[T]) -> Self {
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut reps: Vec<usize> = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            match reps.iter().position(|&r| labels[r] == *l) {
                Some(j) => blocks[j].push(i),
                None => {
                    reps.push(i);
                    blocks.push(vec![i]);
                }
            }
        }
        Self { blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Block sizes in non-increasing order.
    pub fn profile(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.blocks.iter().map(Vec::len).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

impl fmt::Display for SetPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, v) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{}", v + 1)?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// Restricted-growth-string walk over all set partitions of `{0, .., n-1}`.
#[derive(Debug, Clone)]
struct RgsWalk {
    rgs: Vec<usize>,
    // prefix maxima: bound[i] = max(rgs[..i])
    bound: Vec<usize>,
    started: bool,
}

impl RgsWalk {
    fn new(n: usize) -> Self {
        Self { rgs: vec![0; n], bound: vec![0; n], started: false }
    }

    fn advance(&mut self) -> bool {
        let n = self.rgs.len();
        if !self.started {
            self.started = true;
            return n > 0;
        }
        let mut i = n;
        while i > 1 {
            i -= 1;
            if self.rgs[i] <= self.bound[i] {
                self.rgs[i] += 1;
                for j in i + 1..n {
                    self.rgs[j] = 0;
                    self.bound[j] = self.bound[j - 1].max(self.rgs[j - 1]);
                }
                return true;
            }
        }
        false
    }
}

/// Iterator over all set partitions of `{0, .., n-1}` in restricted-growth order.
#[derive(Debug, Clone)]
pub struct Partitions {
    walk: RgsWalk,
}

impl Iterator for Partitions {
    type Item = SetPartition;

    fn next(&mut self) -> Option<SetPartition> {
        if !self.walk.advance() {
            return None;
        }
        let k = self.walk.rgs.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); k];
        for (i, &b) in self.walk.rgs.iter().enumerate() {
            blocks[b].push(i);
        }
        Some(SetPartition { blocks })
    }
}

fn check_partition_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::Usage("dimension must be at least 1".into()));
    }
    if dim > MAX_PARTITION_DIM {
        return Err(Error::Capability(format!(
            "dimension {dim} exceeds {MAX_PARTITION_DIM}: the number of set partitions \
             (Bell number) grows super-exponentially"
        )));
    }
    Ok(())
}

/// Lazy enumeration of all set partitions of `{0, .., dim-1}`.
pub fn partitions(dim: usize) -> Result<Partitions> {
    check_partition_dim(dim)?;
    Ok(Partitions { walk: RgsWalk::new(dim) })
}

/// All set partitions of `{0, .., dim-1}`, each exactly once, in canonical order.
pub fn enumerate_partitions(dim: usize) -> Result<Vec<SetPartition>> {
    Ok(partitions(dim)?.collect())
}

/// All partitions obtained by merging exactly two blocks of `partition`.
pub fn coarsen_by_one(partition: &SetPartition) -> Vec<SetPartition> {
    let b = &partition.blocks;
    let mut out = Vec::with_capacity(b.len() * b.len().saturating_sub(1) / 2);
    for i in 0..b.len() {
        for j in i + 1..b.len() {
            let mut blocks: Vec<Vec<usize>> = Vec::with_capacity(b.len() - 1);
            for (k, block) in b.iter().enumerate() {
                if k == j {
                    continue;
                }
                let mut block = block.clone();
                if k == i {
                    block.extend_from_slice(&b[j]);
                    block.sort_unstable();
                }
                blocks.push(block);
            }
            blocks.sort_by_key(|bl| bl[0]);
            out.push(SetPartition { blocks });
        }
    }
    out
}

/// Integer partitions of `dim` with the number of set partitions having
/// those block sizes. Built once per dimension from the full enumeration.
fn profile_table(dim: usize) -> &'static [(Vec<usize>, u64)] {
    static TABLES: [OnceLock<Vec<(Vec<usize>, u64)>>; MAX_PARTITION_DIM + 1] =
        [const { OnceLock::new() }; MAX_PARTITION_DIM + 1];
    TABLES[dim].get_or_init(|| {
        let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
        let mut walk = RgsWalk::new(dim);
        let mut sizes = vec![0usize; dim];
        while walk.advance() {
            sizes.iter_mut().for_each(|s| *s = 0);
            for &b in &walk.rgs {
                sizes[b] += 1;
            }
            let mut key: Vec<usize> = sizes.iter().copied().filter(|&s| s > 0).collect();
            key.sort_unstable_by(|a, b| b.cmp(a));
            *counts.entry(key).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    })
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// The partition sum `Σ_P Π_{E∈P} c_{|E|} w` over set partitions of a
/// k-element set, as a polynomial `Σ_m a_m w^m` (log-coefficients stored),
/// for every k up to `max_dim` at a fixed α.
#[derive(Debug, Clone)]
pub struct PartitionPoly {
    alpha: f64,
    log_c: Vec<f64>,
    // log_coef[k][m - 1] = ln a_m for partitions of a k-set into m blocks
    log_coef: Vec<Vec<f64>>,
}

impl PartitionPoly {
    pub fn new(max_dim: usize, alpha: f64) -> Result<Self> {
        check_partition_dim(max_dim)?;
        let log_c: Vec<f64> = (0..=max_dim).map(|k| log_partition_coef(k, alpha)).collect();
        let mut log_coef = vec![Vec::new()];
        for k in 1..=max_dim {
            let mut by_m: Vec<Vec<f64>> = vec![Vec::new(); k];
            for (sizes, mult) in profile_table(k) {
                let t = (*mult as f64).ln() + sizes.iter().map(|&s| log_c[s]).sum::<f64>();
                by_m[sizes.len() - 1].push(t);
            }
            log_coef.push(by_m.into_iter().map(|t| log_sum_exp(t.into_iter())).collect());
        }
        Ok(Self { alpha, log_c, log_coef })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `ln c_k(α)`.
    pub fn log_c(&self, k: usize) -> f64 {
        self.log_c[k]
    }

    /// `ln Σ_m a_m w^m` for a k-element set, given `ln w`.
    pub fn log_eval(&self, k: usize, log_w: f64) -> f64 {
        let coef = &self.log_coef[k];
        let mut m = f64::NEG_INFINITY;
        for (i, &c) in coef.iter().enumerate() {
            m = m.max(c + (i + 1) as f64 * log_w);
        }
        if m == f64::NEG_INFINITY {
            return m;
        }
        let mut acc = 0.0;
        for (i, &c) in coef.iter().enumerate() {
            acc += (c + (i + 1) as f64 * log_w - m).exp();
        }
        m + acc.ln()
    }

    /// `ln Σ_{P ∈ partitions of E} Π_{B∈P} (-V_B(z))` where `ln_s = ln Σ_d z_d^{-1/α}`
    /// over all coordinates and `sum_ln_z` sums `ln z_d` over `d ∈ E`.
    pub fn log_partition_sum(&self, k: usize, ln_s: f64, sum_ln_z: f64) -> f64 {
        let a = self.alpha;
        -(1.0 / a + 1.0) * sum_ln_z - k as f64 * ln_s + self.log_eval(k, a * ln_s)
    }
}

/// Log-density of the logistic extreme-value distribution on the unit Fréchet scale.
pub fn log_ev_density_logistic(z: &[f64], params: &LogisticParams) -> Result<f64> {
    check_positive(z)?;
    check_partition_dim(z.len())?;
    let a = params.alpha;
    let poly = PartitionPoly::new(z.len(), a)?;
    let ln_s = z.iter().map(|&v| v.powf(-1.0 / a)).sum::<f64>().ln();
    let sum_ln_z: f64 = z.iter().map(|v| v.ln()).sum();
    Ok(poly.log_partition_sum(z.len(), ln_s, sum_ln_z) - (a * ln_s).exp())
}

/// Density `exp(-V) Σ_P Π_{E∈P} (-V_E)` of the logistic extreme-value distribution.
pub fn ev_density_logistic(z: &[f64], params: &LogisticParams) -> Result<f64> {
    Ok(log_ev_density_logistic(z, params)?.exp())
}

/// Bivariate logistic exponent measure with its coordinate and α derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivariateDerivs {
    pub v: f64,
    pub v1: f64,
    pub v2: f64,
    pub v12: f64,
    pub v_a: f64,
    pub v_aa: f64,
    pub v1_a: f64,
    pub v2_a: f64,
    pub v12_a: f64,
}

/// Closed-form derivatives of the bivariate logistic `V` used by the
/// information calculations.
pub fn alpha_derivs_bivariate(z: [f64; 2], params: &LogisticParams) -> Result<BivariateDerivs> {
    check_positive(&z)?;
    let a = params.alpha;
    let l = [z[0].ln(), z[1].ln()];
    let f = [(-l[0] / a).exp(), (-l[1] / a).exp()];
    let s = f[0] + f[1];
    let ln_s = s.ln();
    let s1 = (f[0] * l[0] + f[1] * l[1]) / (a * a);
    let s2: f64 = (0..2)
        .map(|d| f[d] * l[d] * l[d] / a.powi(4) - 2.0 * f[d] * l[d] / a.powi(3))
        .sum();
    let r = s1 / s;

    let v = s.powf(a);
    let dlog_v = ln_s + a * r;
    let d2log_v = 2.0 * r + a * (s2 / s - r * r);
    let v_a = v * dlog_v;
    let v_aa = v * (dlog_v * dlog_v + d2log_v);

    let sa1 = s.powf(a - 1.0);
    let v1 = -f[0] / z[0] * sa1;
    let v2 = -f[1] / z[1] * sa1;
    let v1_a = v1 * (l[0] / (a * a) + ln_s + (a - 1.0) * r);
    let v2_a = v2 * (l[1] / (a * a) + ln_s + (a - 1.0) * r);

    let q = (1.0 - a) / a;
    let dq = -1.0 / (a * a);
    let base = s.powf(a - 2.0) * f[0] * f[1] / (z[0] * z[1]);
    let v12 = -q * base;
    let v12_a = -base * (dq + q * (ln_s + (a - 2.0) * r + (l[0] + l[1]) / (a * a)));

    Ok(BivariateDerivs { v, v1, v2, v12, v_a, v_aa, v1_a, v2_a, v12_a })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lp(a: f64) -> LogisticParams {
        LogisticParams::new(a).unwrap()
    }

    #[test]
    fn exponent_examples() {
        assert_relative_eq!(exponent_logistic(&[1.0, 1.0], &lp(1.0)).unwrap(), 2.0);
        assert_relative_eq!(
            exponent_logistic(&[1.0, 1.0], &lp(0.5)).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            exponent_logistic(&[2.0, 2.0], &lp(0.5)).unwrap(),
            0.707_106_781_186_547_5,
            max_relative = 1e-14
        );
        assert!(matches!(exponent_logistic(&[1.0, 0.0], &lp(0.5)), Err(Error::Domain(_))));
        assert!(LogisticParams::new(0.0).is_err());
        assert!(LogisticParams::new(1.2).is_err());
    }

    #[test]
    fn asym_examples() {
        let emb = AsymLogisticParams::logistic_embedding(2, 0.5).unwrap();
        assert_relative_eq!(
            exponent_asym_logistic(&[1.0, 1.0], &emb).unwrap(),
            2f64.sqrt(),
            max_relative = 1e-15
        );
        let indep = AsymLogisticParams::new(
            2,
            vec![
                AsymTerm { members: vec![0], alpha: 1.0, theta: vec![1.0] },
                AsymTerm { members: vec![1], alpha: 1.0, theta: vec![1.0] },
            ],
        )
        .unwrap();
        assert_relative_eq!(exponent_asym_logistic(&[1.0, 1.0], &indep).unwrap(), 2.0);
        let mixed = AsymLogisticParams::new(
            2,
            vec![
                AsymTerm { members: vec![0, 1], alpha: 0.5, theta: vec![0.5, 0.5] },
                AsymTerm { members: vec![0], alpha: 1.0, theta: vec![0.5] },
                AsymTerm { members: vec![1], alpha: 1.0, theta: vec![0.5] },
            ],
        )
        .unwrap();
        // ((2)^{-2} * 2)^{0.5} = 2^{-1/2}; singletons give 0.5 + 0.5
        assert_relative_eq!(
            exponent_asym_logistic(&[1.0, 1.0], &mixed).unwrap(),
            1.0 + 0.5 * 2f64.sqrt(),
            max_relative = 1e-14
        );
        assert!(mixed.has_boundary_mass());
        assert!(!emb.has_boundary_mass());
    }

    #[test]
    fn asym_rejects_bad_weights() {
        let bad = AsymLogisticParams::new(
            2,
            vec![AsymTerm { members: vec![0, 1], alpha: 0.5, theta: vec![0.5, 1.0] }],
        );
        assert!(matches!(bad, Err(Error::Domain(_))));
    }

    #[test]
    fn partial_examples() {
        assert_relative_eq!(
            partial_deriv_logistic(&[2.0, 4.0], &lp(1.0), &[0]).unwrap(),
            -0.25,
            max_relative = 1e-14
        );
        assert_eq!(partial_deriv_logistic(&[2.0, 4.0], &lp(1.0), &[0, 1]).unwrap(), 0.0);
        assert_relative_eq!(
            partial_deriv_logistic(&[1.0, 1.0], &lp(0.5), &[0, 1]).unwrap(),
            -0.353_553_390_593_273_8,
            max_relative = 1e-12
        );
        assert!(matches!(
            partial_deriv_logistic(&[1.0, 1.0], &lp(0.5), &[]),
            Err(Error::Usage(_))
        ));
    }

    #[test]
    fn density_examples() {
        assert_relative_eq!(
            ev_density_logistic(&[1.0, 1.0], &lp(1.0)).unwrap(),
            (-2.0f64).exp(),
            max_relative = 1e-14
        );
        let p = lp(0.37);
        let z = [0.8, 2.5];
        let v = exponent_logistic(&z, &p).unwrap();
        let v1 = partial_deriv_logistic(&z, &p, &[0]).unwrap();
        let v2 = partial_deriv_logistic(&z, &p, &[1]).unwrap();
        let v12 = partial_deriv_logistic(&z, &p, &[0, 1]).unwrap();
        assert_relative_eq!(
            ev_density_logistic(&z, &p).unwrap(),
            (v1 * v2 - v12) * (-v).exp(),
            max_relative = 1e-13
        );
        assert!(matches!(
            ev_density_logistic(&[1.0; 13], &p),
            Err(Error::Capability(msg)) if msg.contains("Bell")
        ));
    }

    #[test]
    fn bivariate_derivs_unit_point() {
        let d = alpha_derivs_bivariate([1.0, 1.0], &lp(1.0)).unwrap();
        assert_relative_eq!(d.v, 2.0);
        assert_relative_eq!(d.v1, -1.0);
        assert_relative_eq!(d.v2, -1.0);
        assert_eq!(d.v12, 0.0);
        assert_relative_eq!(d.v_a, 2f64.ln() * 2.0, max_relative = 1e-14);
        let d = alpha_derivs_bivariate([1.0, 1.0], &lp(0.6)).unwrap();
        assert_relative_eq!(d.v_a, 2f64.powf(0.6) * 2f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn partition_counts_and_order() {
        assert_eq!(enumerate_partitions(1).unwrap().len(), 1);
        assert_eq!(enumerate_partitions(3).unwrap().len(), 5);
        assert_eq!(enumerate_partitions(4).unwrap().len(), 15);
        let p3 = enumerate_partitions(3).unwrap();
        assert_eq!(p3[0].to_string(), "{{1,2,3}}");
        assert_eq!(p3[4].to_string(), "{{1},{2},{3}}");
        assert!(enumerate_partitions(0).is_err());
        assert!(matches!(enumerate_partitions(13), Err(Error::Capability(_))));
    }

    #[test]
    fn coarsening_examples() {
        let fine = SetPartition::new(vec![vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(coarsen_by_one(&fine).len(), 3);
        let one = SetPartition::new(vec![vec![0, 1]]).unwrap();
        assert!(coarsen_by_one(&one).is_empty());
        let p = SetPartition::new(vec![vec![0], vec![1, 2], vec![3]]).unwrap();
        let got: Vec<String> = coarsen_by_one(&p).iter().map(|q| q.to_string()).collect();
        assert_eq!(got, ["{{1,2,3},{4}}", "{{1,4},{2,3}}", "{{1},{2,3,4}}"]);
    }

    #[test]
    fn labels_to_partition() {
        let p = SetPartition::from_labels(&[4, 4, 9]);
        assert_eq!(p, SetPartition::new(vec![vec![0, 1], vec![2]]).unwrap());
        assert_eq!(p.profile(), vec![2, 1]);
    }

    #[test]
    fn partition_poly_matches_direct_enumeration() {
        // Sum over every set partition explicitly and compare with the
        // profile-collapsed polynomial.
        let p = lp(0.63);
        let z = [0.7, 1.9, 3.2, 0.4, 5.0];
        let direct: f64 = enumerate_partitions(5)
            .unwrap()
            .iter()
            .map(|part| {
                part.blocks()
                    .iter()
                    .map(|b| -partial_deriv_logistic(&z, &p, b).unwrap())
                    .product::<f64>()
            })
            .sum();
        let poly = PartitionPoly::new(5, 0.63).unwrap();
        let ln_s = z.iter().map(|v: &f64| v.powf(-1.0 / 0.63)).sum::<f64>().ln();
        let sum_ln: f64 = z.iter().map(|v| v.ln()).sum();
        assert_relative_eq!(poly.log_partition_sum(5, ln_s, sum_ln).exp(), direct, max_relative = 1e-12);
    }
}
