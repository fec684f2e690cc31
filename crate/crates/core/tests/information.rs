use mevlab::fisher::{
    censored_region_mass, info_block_max_quadrature, info_censored, info_censored_with_tol, strip_integrand, QUAD_TOL,
};
use mevlab::model::ev_density_logistic;
use mevlab::quad::integrate;
use mevlab::{Estimator, LogisticParams};

const ALPHAS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[test]
fn informations_are_positive() {
    for a in ALPHAS {
        for p in [0.9, 0.95, 0.99] {
            let i = info_censored(a, p, Estimator::Thr4).unwrap().info_per_obs;
            assert!(i > 0.0 && i.is_finite(), "thr4 α={a} p={p}: {i}");
        }
        for est in [Estimator::Max1, Estimator::Max2] {
            let i = info_block_max_quadrature(a, 100, est).unwrap().info_per_obs;
            assert!(i > 0.0 && i.is_finite(), "{est} α={a}: {i}");
        }
    }
}

#[test]
fn halving_tolerance_is_stable() {
    for a in ALPHAS {
        let coarse = info_censored_with_tol(a, 0.95, Estimator::Thr4, QUAD_TOL).unwrap().info_per_obs;
        let fine = info_censored_with_tol(a, 0.95, Estimator::Thr4, QUAD_TOL / 2.0).unwrap().info_per_obs;
        assert!(((fine - coarse) / fine).abs() < 1e-6, "α={a}: {coarse} vs {fine}");
    }
}

#[test]
fn strip_integrand_finite_on_open_interval() {
    for a in ALPHAS {
        let u = 20.0;
        let (lo, hi) = (1.0 / u, 2f64.powf(a) / u);
        for i in 1..10_000 {
            let v = lo + (hi - lo) * i as f64 / 10_000.0;
            let f = strip_integrand(a, u, v);
            assert!(f.is_finite() && f >= 0.0, "α={a} v={v}: {f}");
        }
    }
}

#[test]
fn censored_regions_carry_unit_mass() {
    for a in ALPHAS {
        for p in [0.9, 0.98] {
            let m = censored_region_mass(a, p).unwrap();
            assert!((m - 1.0).abs() < 1e-3, "α={a} p={p}: {m}");
        }
    }
}

#[test]
fn bivariate_density_integrates_to_one() {
    for a in [0.3, 0.6, 0.9] {
        let p = LogisticParams::new(a).unwrap();
        let inner = |v1: f64| {
            let z1 = v1 / (1.0 - v1);
            integrate(
                |v2: f64| {
                    let z2 = v2 / (1.0 - v2);
                    ev_density_logistic(&[z1, z2], &p).unwrap() / ((1.0 - v1) * (1.0 - v2)).powi(2)
                },
                0.0,
                1.0,
                1e-9,
                1e-7,
            )
            .unwrap()
            .value
        };
        let total = integrate(inner, 0.0, 1.0, 1e-6, 1e-6).unwrap().value;
        assert!((total - 1.0).abs() < 1e-3, "α={a}: {total}");
    }
}
