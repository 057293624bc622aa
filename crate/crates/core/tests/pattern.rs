use modelset::cutproject::{generate_model_set, Scheme, GOLDEN};
use modelset::operators::{represent_weighted, Boundary, Weighting};
use modelset::pattern::{
    build_schrodinger, eval_pe, kernel_adjoint, kernel_convolve, kernel_generator_s, pe_from_patch_list, Coefficient,
    Hopping, Kernel, KernelTerm, PeFunction, SchrodingerSpec, Theta,
};
use modelset::pointset::{ball_inside, enumerate_patch_classes, patch_class, PatchClass, PointSet};
use modelset::{Complex64, Error};

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn fibonacci(radius: f64) -> PointSet {
    generate_model_set(&Scheme::fibonacci(0.123), radius, None).unwrap().points
}

/// Length of the gap to the right, read off a class signature.
fn right_gap(class: &PatchClass) -> f64 {
    class.signature().iter().map(|v| v[0]).filter(|&v| v > 0.5).fold(f64::INFINITY, f64::min)
}

#[test]
fn gap_function_is_pattern_equivariant() {
    let patch = fibonacci(60.0);
    let r = 1.7;
    let classes = enumerate_patch_classes(&patch, r).unwrap();
    let table: Vec<_> = classes.iter().map(|(cl, _)| (cl.clone(), c(right_gap(cl)))).collect();
    let f = pe_from_patch_list(table, r, c(0.0)).unwrap();

    let xs: Vec<f64> = patch.points().iter().map(|p| p[0]).collect();
    let mut checked = 0;
    for (i, &x) in xs.iter().enumerate() {
        if !ball_inside(&patch, &[x], r) {
            assert!(matches!(eval_pe(&f, &patch, &[x]), Err(Error::BoundaryIncomplete { .. })));
            continue;
        }
        let v = eval_pe(&f, &patch, &[x]).unwrap();
        assert!((v.re - (xs[i + 1] - x)).abs() < 1e-6, "at {x}");
        checked += 1;
    }
    assert!(checked > 60);
    // only the two gaps occur
    for (_, v) in f.table() {
        assert!((v.re - 1.0).abs() < 1e-6 || (v.re - GOLDEN).abs() < 1e-6);
    }
}

#[test]
fn indicator_expansion_reproduces_the_table() {
    let patch = fibonacci(60.0);
    let r = 2.7;
    let classes = enumerate_patch_classes(&patch, r).unwrap();
    let default = Complex64::new(0.2, -0.1);
    let table: Vec<_> = classes
        .iter()
        .enumerate()
        .map(|(j, (cl, _))| (cl.clone(), Complex64::new(j as f64 + 1.0, 0.5 * j as f64)))
        .collect();
    let f = pe_from_patch_list(table, r, default).unwrap();
    assert_eq!(f.expansion().len(), classes.len());
    for x in patch.points() {
        if !ball_inside(&patch, x, r) {
            continue;
        }
        let class = patch_class(&patch, x, r).unwrap();
        let from_expansion: Complex64 = default
            + f.expansion().iter().filter(|(sig, _)| sig.is_subpatch_of(&class)).map(|(_, p)| p).sum::<Complex64>();
        assert!((from_expansion - eval_pe(&f, &patch, x).unwrap()).norm() < 1e-12);
    }
}

#[test]
fn conflicting_values_are_rejected() {
    let cl = PatchClass::from_displacements(1.5, &[vec![0.0], vec![1.0]]).unwrap();
    let err = pe_from_patch_list(vec![(cl.clone(), c(1.0)), (cl.clone(), c(2.0))], 1.5, c(0.0));
    assert!(matches!(err, Err(Error::ConflictingClass(_))));
    assert!(pe_from_patch_list(vec![(cl.clone(), c(1.0)), (cl, c(1.0))], 1.5, c(0.0)).is_ok());
    // radius must match the classes
    let other = PatchClass::from_displacements(2.0, &[vec![0.0]]).unwrap();
    assert!(pe_from_patch_list(vec![(other, c(1.0))], 1.5, c(0.0)).is_err());
}

#[test]
fn pe_function_json_round_trip() {
    let patch = fibonacci(30.0);
    let table: Vec<_> = enumerate_patch_classes(&patch, 1.7)
        .unwrap()
        .into_iter()
        .map(|(cl, _)| {
            let g = right_gap(&cl);
            (cl, c(g))
        })
        .collect();
    let f = pe_from_patch_list(table, 1.7, c(0.0)).unwrap();
    let back: PeFunction = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
    assert_eq!(back, f);
}

fn z_patch() -> PointSet {
    PointSet::arithmetic(1.0, 0.0, 12.0).unwrap()
}

fn matrix(k: &Kernel, patch: &PointSet) -> modelset::operators::OperatorMatrix {
    represent_weighted(k, patch, &vec![1.0; patch.len()], &Boundary::Open, Weighting::Symmetrized).unwrap()
}

#[test]
fn generator_is_a_shift() {
    let p = z_patch();
    let s = kernel_generator_s(&[2.0]);
    let m = matrix(&s, &p);
    let xs = m.sites();
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            let want = if (xs[j][0] - xs[i][0] - 2.0).abs() < 1e-9 { 1.0 } else { 0.0 };
            assert_eq!(m.entry(i, j), c(want), "({i},{j})");
        }
    }
}

#[test]
fn generators_compose_and_invert() {
    let s1 = kernel_generator_s(&[1.0]);
    let s2 = kernel_convolve(&s1, &s1, None).unwrap();
    let p = z_patch();
    assert_eq!(matrix(&s2, &p).entry(0, 2), c(1.0));
    let back = kernel_convolve(&kernel_generator_s(&[-1.0]), &s1, None).unwrap();
    let id = matrix(&back, &p);
    for i in 0..id.dim() {
        for j in 0..id.dim() {
            assert_eq!(id.entry(i, j), c(f64::from(u8::from(i == j))));
        }
    }
    assert_eq!(kernel_adjoint(&s1).terms()[0].displacement, vec![-1.0]);
}

#[test]
fn convolution_needs_indicator_profiles() {
    let s = kernel_generator_s(&[1.0]);
    let tent = s.with_theta(Theta::Tent { width: 0.2 }).unwrap();
    assert!(matches!(kernel_convolve(&s, &tent, None), Err(Error::UnsupportedConvolution)));
    assert!(s.with_theta(Theta::Tent { width: 0.0 }).is_err());
}

#[test]
fn schrodinger_is_hermitian_with_complex_hopping() {
    let patch = fibonacci(40.0);
    let classes = enumerate_patch_classes(&patch, 1.7).unwrap();
    let q = pe_from_patch_list(
        classes.iter().map(|(cl, _)| (cl.clone(), Complex64::from_polar(1.0, right_gap(cl)))).collect(),
        1.7,
        c(0.0),
    )
    .unwrap();
    let k = build_schrodinger(&SchrodingerSpec {
        dim: 1,
        hoppings: vec![Hopping { displacement: vec![1.0], q }],
        potential: PeFunction::real_constant(0.3),
    })
    .unwrap();
    let m = matrix(&k, &patch);
    assert!(m.dim() > 30);
    assert!(m.hermitian_defect() < 1e-14);
    // self-adjoint as a kernel too
    let mk = matrix(&kernel_adjoint(&k), &patch);
    for i in 0..m.dim() {
        for j in 0..m.dim() {
            assert!((m.entry(i, j) - mk.entry(i, j)).norm() < 1e-14);
        }
    }
    let complex_v = PeFunction::constant(Complex64::new(0.0, 1.0));
    assert!(build_schrodinger(&SchrodingerSpec { dim: 1, hoppings: vec![], potential: complex_v }).is_err());
}

#[test]
fn terms_with_equal_displacement_merge() {
    let t = |v: f64| KernelTerm { displacement: vec![1.0], coeff: Coefficient::Const(c(v)) };
    let k = Kernel::new(1, vec![t(1.0), t(2.0)], Theta::Indicator).unwrap();
    assert_eq!(k.terms().len(), 1);
    assert_eq!(matrix(&k, &z_patch()).entry(0, 1), c(3.0));
}

#[test]
fn kernel_json_round_trip() {
    let a = kernel_convolve(&kernel_generator_s(&[1.0]), &kernel_generator_s(&[GOLDEN]), None).unwrap();
    let a = a.plus(&kernel_adjoint(&a)).unwrap();
    let back: Kernel = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
    assert_eq!(back, a);
}
