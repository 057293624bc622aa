use proptest::prelude::*;

use modelset::cutproject::{generate_model_set, Scheme};
use modelset::operators::{eigensolve, represent_weighted, Boundary, Weighting};
use modelset::pattern::{build_schrodinger, kernel_adjoint, Hopping, PeFunction, SchrodingerSpec};
use modelset::pointset::{local_distance, translate, PointSet, LOCAL_DISTANCE_RESOLUTION};
use modelset::spectra::{ids, weak_star_distance, EmpiricalMeasure};
use modelset::Complex64;

fn measure() -> impl Strategy<Value = EmpiricalMeasure> {
    prop::collection::vec((-5.0f64..5.0, 0.01f64..1.0), 1..12)
        .prop_map(|atoms| EmpiricalMeasure::on_line(atoms).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weak_star_distance_is_a_symmetric_premetric(a in measure(), b in measure()) {
        let dab = weak_star_distance(&a, &b).unwrap();
        prop_assert!(dab >= 0.0);
        prop_assert!((dab - weak_star_distance(&b, &a).unwrap()).abs() < 1e-12);
        prop_assert!(weak_star_distance(&a, &a).unwrap() < 1e-12);
    }

    #[test]
    fn ids_is_monotone_and_normalized(a in measure()) {
        let f = ids(&a.normalized().unwrap()).unwrap();
        let mut prev = 0.0;
        for e in (-60..=60).map(|k| k as f64 / 10.0) {
            let v = f.eval(e);
            prop_assert!(v + 1e-15 >= prev && v <= 1.0 + 1e-12);
            prop_assert!(f.eval_left(e) <= f.midpoint(e) + 1e-15 && f.midpoint(e) <= v + 1e-15);
            prev = v;
        }
        prop_assert!((f.eval(5.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn model_set_respects_window_and_radius(shift in -0.4f64..0.4, radius in 5.0f64..40.0) {
        let scheme = Scheme::fibonacci(shift);
        let p = generate_model_set(&scheme, radius, None).unwrap();
        let w = scheme.window().unwrap();
        for (x, h) in p.points.points().iter().zip(&p.internal) {
            prop_assert!(x[0].abs() <= radius);
            prop_assert!(w.contains(h));
        }
        for g in p.points.points().windows(2) {
            let gap = g[1][0] - g[0][0];
            prop_assert!((gap - 1.0).abs() < 1e-9 || (gap - modelset::cutproject::GOLDEN).abs() < 1e-9);
        }
    }

    #[test]
    fn translation_by_a_point_matches_the_patch_locally(k in 0usize..20) {
        let p = generate_model_set(&Scheme::fibonacci(0.123), 80.0, None).unwrap().points;
        let z = PointSet::arithmetic(1.0, 0.0, 80.0).unwrap();
        let t = z.point(30 + k).to_vec();
        let moved = translate(&z, &t).unwrap();
        prop_assert!(local_distance(&z, &moved).unwrap() <= LOCAL_DISTANCE_RESOLUTION);
        prop_assert!(local_distance(&p, &z).unwrap() > 0.1);
    }

    #[test]
    fn schrodinger_spectrum_is_real_and_bounded(
        t1 in -2.0f64..2.0, phase in 0.0f64..6.3, t2 in -1.0f64..1.0, v in -1.0f64..1.0
    ) {
        let spec = SchrodingerSpec {
            dim: 1,
            hoppings: vec![
                Hopping { displacement: vec![1.0], q: PeFunction::constant(Complex64::from_polar(t1, phase)) },
                Hopping { displacement: vec![2.0], q: PeFunction::real_constant(t2) },
            ],
            potential: PeFunction::real_constant(v),
        };
        let k = build_schrodinger(&spec).unwrap();
        let patch = PointSet::arithmetic(1.0, 0.0, 20.0).unwrap();
        let per = Boundary::Periodic { periods: vec![vec![24.0]] };
        let m = represent_weighted(&k, &patch, &vec![1.0; patch.len()], &per, Weighting::Symmetrized).unwrap();
        let adj = represent_weighted(&kernel_adjoint(&k), &patch, &vec![1.0; patch.len()], &per, Weighting::Symmetrized).unwrap();
        prop_assert!(m.hermitian_defect() < 1e-14);
        for i in 0..m.dim() {
            for j in 0..m.dim() {
                prop_assert!((m.entry(i, j) - adj.entry(i, j)).norm() < 1e-14);
            }
        }
        let bound = v.abs() + 2.0 * (t1.abs() + t2.abs()) + 1e-10;
        for e in eigensolve(&m).unwrap().values {
            prop_assert!(e.abs() <= bound);
        }
    }
}
