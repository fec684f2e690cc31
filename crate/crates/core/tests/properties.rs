use mevlab::likelihoods::{
    block_maxima, loglik_exceedance_count, loglik_max1, loglik_max_pair, loglik_thr1, loglik_thr3, loglik_thr4,
    loglik_thr_pair, select_threshold, BlockMaximaData, KindTag,
};
use mevlab::margins::{gev_transform, GevParams, MarginalModel, SemiParametricMargin};
use mevlab::model::{
    coarsen_by_one, enumerate_partitions, exponent_asym_logistic, exponent_logistic, AsymLogisticParams,
    SetPartition,
};
use mevlab::optimize::{maximize_scalar, maximize_simplex};
use mevlab::simulate::{sample_logistic_maxstable, t5_cdf, t5_quantile};
use mevlab::stats::summarize;
use mevlab::{LogisticParams, SeedSpec};
use proptest::prelude::*;

fn positive_vec(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((-4.0..4.0f64).prop_map(f64::exp), 2..=max_dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exponent_is_homogeneous(z in positive_vec(8), ln_s in -4.0..4.0f64, alpha in 0.02..1.0f64) {
        let p = LogisticParams::new(alpha).unwrap();
        let s = ln_s.exp();
        let zs: Vec<f64> = z.iter().map(|v| v * s).collect();
        let lhs = exponent_logistic(&zs, &p).unwrap();
        let rhs = exponent_logistic(&z, &p).unwrap() / s;
        prop_assert!(((lhs - rhs) / rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn exponent_between_bounds(z in positive_vec(8), alpha in 0.02..1.0f64) {
        let v = exponent_logistic(&z, &LogisticParams::new(alpha).unwrap()).unwrap();
        let lo = z.iter().map(|x| 1.0 / x).fold(0.0, f64::max);
        let hi: f64 = z.iter().map(|x| 1.0 / x).sum();
        prop_assert!(v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12), "{lo} ≤ {v} ≤ {hi}");
    }

    #[test]
    fn exponent_marginal_limit(zd in 0.05..20.0f64, dim in 2usize..6, d in 0usize..6, alpha in 0.05..1.0f64) {
        let d = d % dim;
        let mut z = vec![1e12; dim];
        z[d] = zd;
        let v = exponent_logistic(&z, &LogisticParams::new(alpha).unwrap()).unwrap();
        prop_assert!((v * zd - 1.0).abs() <= 1e-10, "{v} vs {}", 1.0 / zd);
    }

    #[test]
    fn asym_embedding_reduces_to_logistic(z in positive_vec(6), alpha in 0.05..1.0f64) {
        let asym = AsymLogisticParams::logistic_embedding(z.len(), alpha).unwrap();
        let a = exponent_asym_logistic(&z, &asym).unwrap();
        let b = exponent_logistic(&z, &LogisticParams::new(alpha).unwrap()).unwrap();
        prop_assert!(((a - b) / b).abs() <= 1e-14, "{a} vs {b}");
    }

    #[test]
    fn coarsening_count(labels in prop::collection::vec(0u8..5, 1..8)) {
        let p = SetPartition::from_labels(&labels);
        let k = p.len();
        let coarser = coarsen_by_one(&p);
        prop_assert_eq!(coarser.len(), k * (k - 1) / 2);
        for c in &coarser {
            prop_assert_eq!(c.len(), k - 1);
            prop_assert_eq!(c.dim(), p.dim());
        }
    }

    #[test]
    fn rmse_identity(est in prop::collection::vec(-10.0..10.0f64, 2..50), truth in -5.0..5.0f64) {
        let s = summarize(&est, truth).unwrap();
        let lhs = s.rmse * s.rmse;
        let rhs = s.bias * s.bias + s.se * s.se;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE), "{lhs} vs {rhs}");
    }

    #[test]
    fn simplex_never_worse_than_start(
        c in prop::collection::vec(-3.0..3.0f64, 1..4),
        x0 in prop::collection::vec(-3.0..3.0f64, 3),
        iters in 1usize..200,
    ) {
        let n = c.len();
        let x0 = &x0[..n.min(3)];
        let c = &c[..x0.len()];
        let f = |x: &[f64]| -x.iter().zip(c).map(|(a, b)| (a - b).powi(2) * (1.0 + a.abs())).sum::<f64>();
        let start = f(x0);
        let r = maximize_simplex(f, x0, &vec![0.5; x0.len()], 1e-8, iters).unwrap();
        prop_assert!(r.value >= start);
        prop_assert!((f(&r.argmax) - r.value).abs() <= 1e-12 * r.value.abs().max(1.0));
    }

    #[test]
    fn scalar_search_is_deterministic(c in 0.0..1.0f64, w in 0.1..5.0f64) {
        let f = |x: f64| -(x - c).abs().powf(1.5) * w + (7.0 * x).sin() * 0.01;
        let a = maximize_scalar(f, 0.0, 1.0, 1e-8).unwrap();
        let b = maximize_scalar(f, 0.0, 1.0, 1e-8).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gev_transform_monotone(
        loc in -2.0..2.0f64, scale in 0.1..3.0f64, shape in -0.8..0.8f64,
        z1 in -6.0..6.0f64, dz in 0.0..3.0f64,
    ) {
        let p = GevParams::new(loc, scale, shape).unwrap();
        let a = gev_transform(z1, &p, 10.0).t;
        let b = gev_transform(z1 + dz, &p, 10.0).t;
        prop_assert!(b >= a, "{a} > {b}");
    }

    #[test]
    fn t5_quantile_inverts_cdf(q in 1e-9..(1.0 - 1e-9)) {
        let t = t5_quantile(q).unwrap();
        let back = t5_cdf(t);
        let tail = q.min(1.0 - q);
        prop_assert!((back - q).abs() <= 1e-6 * tail, "q {q}, cdf {back}");
    }
}

#[test]
fn gev_gumbel_limit_from_both_sides() {
    for z in [-1.5, 0.0, 0.7, 3.0] {
        let g = gev_transform(z, &GevParams::new(0.2, 1.3, 0.0).unwrap(), 5.0).t;
        for xi in [1e-8, -1e-8] {
            let t = gev_transform(z, &GevParams::new(0.2, 1.3, xi).unwrap(), 5.0).t;
            assert!((t / g - 1.0).abs() < 1e-6, "z {z}, ξ {xi}: {t} vs {g}");
        }
    }
}

#[test]
fn semiparametric_margin_increasing() {
    let raw = sample_logistic_maxstable(3000, 1, &LogisticParams::new(0.5).unwrap(), SeedSpec::new(11, 0)).unwrap();
    let sample: Vec<f64> = raw.column(0).iter().map(|z| z.ln()).collect();
    let m = SemiParametricMargin::fit(&sample, 0.9).unwrap();
    let mut sorted = sample.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    // empirical part meets the fitted tail at the threshold
    assert!((m.empirical_cdf(m.threshold()) - m.cdf(m.threshold())).abs() < 1.0 / n.sqrt());
    let grid: Vec<f64> = (0..400).map(|i| sorted[0] + (sorted[sorted.len() - 1] + 3.0 - sorted[0]) * i as f64 / 399.0).collect();
    let mut last = 0.0;
    for &y in &grid {
        let (z, _) = m.to_frechet(y).unwrap();
        assert!(z >= last, "not monotone at {y}");
        if y > m.threshold() {
            assert!(z > last, "not strictly increasing at {y}");
        }
        last = z;
    }
}

#[test]
fn bell_numbers_through_eight() {
    let counts: Vec<usize> = (1..=8).map(|d| enumerate_partitions(d).unwrap().len()).collect();
    assert_eq!(counts, [1, 2, 5, 15, 52, 203, 877, 4140]);
}

fn alpha_grid() -> Vec<f64> {
    (1..=19).map(|i| 0.05 * i as f64).chain([0.999]).collect()
}

#[test]
fn thr1_minus_thr3_is_the_counting_term() {
    for (dim, seed) in [(2, 1), (3, 2), (4, 3)] {
        let raw = sample_logistic_maxstable(1500, dim, &LogisticParams::new(0.4).unwrap(), SeedSpec::new(seed, 0)).unwrap();
        let td = select_threshold(0.9, KindTag::Marginal, raw, MarginalModel::known_frechet(dim)).unwrap();
        let diff: Vec<f64> = alpha_grid()
            .iter()
            .map(|&a| loglik_thr1(a, &td).unwrap() - loglik_thr3(a, &td).unwrap() - loglik_exceedance_count(a, &td).unwrap())
            .collect();
        for d in &diff {
            assert!((d - diff[0]).abs() <= 1e-10, "D={dim}: {diff:?}");
        }
    }
}

#[test]
fn pairwise_equals_full_in_two_dimensions() {
    let raw = sample_logistic_maxstable(3000, 2, &LogisticParams::new(0.7).unwrap(), SeedSpec::new(5, 0)).unwrap();
    let (m, parts, _) = block_maxima(raw.view(), 30).unwrap();
    let bm = BlockMaximaData::new(m, parts, 30, MarginalModel::known_frechet(2)).unwrap();
    let td = select_threshold(0.9, KindTag::Marginal, raw, MarginalModel::known_frechet(2)).unwrap();
    for a in alpha_grid() {
        assert!((loglik_max_pair(a, &bm).unwrap() - loglik_max1(a, &bm).unwrap()).abs() <= 1e-10, "α={a}");
        assert!((loglik_thr_pair(a, &td).unwrap() - loglik_thr4(a, &td).unwrap()).abs() <= 1e-10, "α={a}");
    }
}

#[test]
fn t5_matches_incomplete_beta_cdf() {
    use statrs::distribution::{ContinuousCDF, StudentsT};
    let t5 = StudentsT::new(0.0, 1.0, 5.0).unwrap();
    for i in -400..=400 {
        let t = i as f64 * 0.05;
        assert!((t5_cdf(t) - t5.cdf(t)).abs() < 1e-12, "t={t}");
    }
    for q in [0.501, 0.6, 0.75, 0.9, 0.99, 0.999_9] {
        assert!((t5.cdf(t5_quantile(q).unwrap()) - q).abs() < 1e-12, "q={q}");
    }
    assert!((t5_quantile(0.75).unwrap() - t5.inverse_cdf(0.75)).abs() < 1e-9);
}
