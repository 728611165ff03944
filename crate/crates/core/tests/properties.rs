mod common;

use common::oracle::jacobi_eigenvalues;
use inls_core::experiments::subsequence_scan;
use inls_core::functionals::{kinetic, mass, tail_mass, virial, weighted_h1};
use inls_core::model::{make_grid, CoefficientFamily, GridSpec, KCoefficient, ModelSpec, StateField, WeightSpec};
use inls_core::operators::Tridiagonal;
use inls_core::solver::{nonlinear_fullstep, project_odd, strang_step};
use inls_core::suite::gaussian_sample;
use proptest::prelude::*;

fn grid() -> GridSpec {
    make_grid(20.0, 256).unwrap()
}

fn model(family: CoefficientFamily, sign: f64, sigma: f64) -> ModelSpec {
    let k = KCoefficient::pure(family, sign).unwrap();
    ModelSpec::without_potential(sigma, 0.5, k).unwrap()
}

fn families() -> impl Strategy<Value = (CoefficientFamily, f64)> {
    prop_oneof![
        Just((CoefficientFamily::K1Pure, 1.0)),
        Just((CoefficientFamily::K2Pure, 1.0)),
        Just((CoefficientFamily::K2Pure, -1.0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strang_step_preserves_mass(seed in 0u64..10_000, (fam, sign) in families(), sigma in 0.5f64..3.0, dt in 1e-4f64..5e-2) {
        let u = gaussian_sample(&grid(), seed);
        let v = strang_step(&u, &model(fam, sign, sigma), dt).unwrap();
        let (m0, m1) = (mass(&u), mass(&v));
        prop_assert!(((m1 - m0) / m0).abs() < 1e-12);
    }

    #[test]
    fn nonlinear_step_only_rotates_phase(seed in 0u64..10_000, (fam, sign) in families(), dt in 1e-4f64..1e-1) {
        let u = gaussian_sample(&grid(), seed);
        let v = nonlinear_fullstep(&u, &model(fam, sign, 1.0), dt).unwrap();
        for (a, b) in u.values.iter().zip(&v.values) {
            prop_assert!((a.norm() - b.norm()).abs() <= 1e-14 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn odd_projection_is_idempotent(seed in 0u64..10_000) {
        let g = grid();
        let p = project_odd(&gaussian_sample(&g, seed));
        let pp = project_odd(&p);
        for j in 0..g.point_count {
            prop_assert!((p.values[j] - pp.values[j]).norm() < 1e-15);
            prop_assert!((p.values[j] + p.values[g.mirror(j)]).norm() < 1e-15);
        }
    }

    #[test]
    fn virial_obeys_cauchy_schwarz(seed in 0u64..10_000, radius in 1.0f64..8.0, bounded in any::<bool>()) {
        let u = gaussian_sample(&grid(), seed);
        let w = if bounded { WeightSpec::Bounded } else { WeightSpec::Cutoff { radius } };
        let i = virial(&u, &w).unwrap();
        prop_assert!(i.abs() <= w.sup_norm() * mass(&u).sqrt() * kinetic(&u).sqrt() + 1e-10);
    }

    #[test]
    fn tail_mass_is_a_fraction(seed in 0u64..10_000, fraction in 0.01f64..=0.5) {
        let t = tail_mass(&gaussian_sample(&grid(), seed), fraction).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
    }

    #[test]
    fn envelope_is_running_minimum(values in prop::collection::vec(0.0f64..10.0, 1..60)) {
        let series: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        let (env, witnesses) = subsequence_scan(&series).unwrap();
        for i in 0..values.len() {
            let brute = values[..=i].iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assert_eq!(env[i], brute);
        }
        prop_assert!(witnesses.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn sturm_count_matches_dense_spectrum(v0 in prop::collection::vec(-5.0f64..5.0, 4..24), mu in 0.01f64..2.0, lambda in -2.0f64..10.0) {
        let t = Tridiagonal::schrodinger(&v0, mu, 0.7);
        let n = v0.len();
        let dense = (0..n)
            .map(|i| (0..n).map(|j| if i == j { t.diag[i] } else if i.abs_diff(j) == 1 { t.off } else { 0.0 }).collect())
            .collect();
        let ev = jacobi_eigenvalues(dense);
        // Skip shifts that sit on an eigenvalue to rounding.
        prop_assume!(ev.iter().all(|e| (e - lambda).abs() > 1e-9));
        prop_assert_eq!(t.sturm_count(lambda), ev.iter().filter(|&&e| e < lambda).count());
        let e0 = t.eigenvalue(0).unwrap();
        prop_assert!((e0 - ev[0]).abs() < 1e-9 * (1.0 + ev[0].abs()));
    }

    #[test]
    fn weighted_h1_is_quadratic(seed in 0u64..10_000, c in 0.01f64..100.0, psi in any::<bool>()) {
        let u = gaussian_sample(&grid(), seed);
        let w = if psi { WeightSpec::Psi } else { WeightSpec::Alpha };
        let a = weighted_h1(&u, &w).unwrap();
        let b = weighted_h1(&u.scaled(c), &w).unwrap();
        prop_assert!((b - c * c * a).abs() <= 1e-12 * c * c * a);
    }
}

#[test]
fn zero_state_stays_zero() {
    let u = StateField::zeros(grid());
    let v = strang_step(&u, &model(CoefficientFamily::K1Pure, 1.0, 1.0), 1e-2).unwrap();
    assert!(v.is_zero());
}
