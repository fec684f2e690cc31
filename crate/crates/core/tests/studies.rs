use mevlab::experiments::{
    return_levels, run_study, MarginsMode, ReturnLevelCurve, RiskMargins, StudyConfig,
};
use mevlab::simulate::GeneratingModel;
use mevlab::{Estimator, SeedSpec};

fn config(seed: u64) -> StudyConfig {
    StudyConfig {
        model: GeneratingModel::OpClayton,
        alpha: 0.6,
        dim: 3,
        n: 2000,
        replicates: 6,
        estimators: vec![Estimator::Max1, Estimator::Max3, Estimator::Thr2, Estimator::Thr4, Estimator::ThrPair],
        block_lengths: vec![50],
        probs: vec![0.95],
        margins_mode: MarginsMode::TwoStep,
        master_seed: seed,
    }
}

#[test]
fn study_rows_are_reproducible() {
    let a = run_study(&config(4)).unwrap();
    let b = run_study(&config(4)).unwrap();
    assert_eq!(a.summary_rows(), b.summary_rows());
    assert_eq!(a.replicate_rows(), b.replicate_rows());
    assert_ne!(a.replicate_rows(), run_study(&config(5)).unwrap().replicate_rows());
}

#[test]
fn summaries_satisfy_rmse_identity() {
    let res = run_study(&config(8)).unwrap();
    for cell in &res.cells {
        let s = cell.summary.expect("summary present");
        let (lhs, rhs) = (s.rmse * s.rmse, s.bias * s.bias + s.se * s.se);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{}: {lhs} vs {rhs}", cell.estimator);
        assert_eq!(cell.n_ok, cell.estimates().len());
    }
}

#[test]
fn return_levels_increase_with_period() {
    let periods = [1.0, 2.0, 5.0, 10.0, 20.0];
    for margins in [RiskMargins::TruncatedT5, RiskMargins::UnitFrechet] {
        for a in [0.2, 0.6, 1.0] {
            let rl = return_levels(a, margins, &periods, 200_000, SeedSpec::new(3, 0)).unwrap();
            for w in rl.windows(2) {
                assert!(w[1].level > w[0].level, "{margins:?} α={a}: {w:?}");
            }
            assert!(rl.iter().all(|r| r.mc_stderr > 0.0 && r.mc_stderr.is_finite()));
        }
    }
}

#[test]
fn stronger_dependence_raises_levels() {
    // the sum of two positively dependent components has a heavier upper tail
    let periods = [5.0];
    let level = |a| return_levels(a, RiskMargins::TruncatedT5, &periods, 400_000, SeedSpec::new(6, 0)).unwrap()[0].level;
    assert!(level(0.2) > level(0.9));
}

#[test]
fn curve_interpolates_between_grid_points() {
    let curve = ReturnLevelCurve::build(&[1.0, 2.0], 40_000, 5, SeedSpec::new(2, 0)).unwrap();
    let lo = curve.at(0.3);
    let hi = curve.at(0.4);
    let mid = curve.at(0.35);
    for k in 0..2 {
        let (a, b) = (lo[k].min(hi[k]), lo[k].max(hi[k]));
        assert!(mid[k] >= a - 1e-12 && mid[k] <= b + 1e-12);
    }
    assert!(curve.at(0.5)[1] > curve.at(0.5)[0]);
}
