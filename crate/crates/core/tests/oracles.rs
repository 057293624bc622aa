//! Spectral results checked against independent closed forms and a Sturm
//! count that never touches the eigensolver.

use std::f64::consts::PI;

use modelset::cutproject::{generate_model_set, Scheme, GOLDEN};
use modelset::operators::{
    eigensolve, local_spectral_weights, represent_weighted, Boundary, Weighting,
};
use modelset::pattern::{build_schrodinger, Hopping, Kernel, PeFunction, SchrodingerSpec};
use modelset::pointset::PointSet;
use modelset::Complex64;

fn chain(hops: &[(f64, Complex64)], v: f64) -> Kernel {
    build_schrodinger(&SchrodingerSpec {
        dim: 1,
        hoppings: hops
            .iter()
            .map(|&(g, t)| Hopping { displacement: vec![g], q: PeFunction::constant(t) })
            .collect(),
        potential: PeFunction::real_constant(v),
    })
    .unwrap()
}

/// Number of eigenvalues of the symmetric tridiagonal (diag `a`, offdiag `b`)
/// below `e`, from the signs of the LDLᵀ pivots.
fn sturm_count(a: &[f64], b: &[f64], e: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..a.len() {
        let b2 = if i == 0 { 0.0 } else { b[i - 1] * b[i - 1] };
        d = a[i] - e - b2 / d;
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisect_eigenvalue(a: &[f64], b: &[f64], k: usize, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(a, b, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn fibonacci_chain_matches_sturm_bisection() {
    // hoppings 1 across short gaps and 0.5 across long ones; no second
    // neighbours are within reach, so the matrix is tridiagonal in order
    let k = chain(&[(1.0, Complex64::new(1.0, 0.0)), (GOLDEN, Complex64::new(0.5, 0.0))], 0.0);
    // smallest patch leaving 89 interior sites
    let m = (0..400)
        .map(|i| {
            let patch = generate_model_set(&Scheme::fibonacci(0.123), 40.0 + 0.1 * i as f64, None).unwrap();
            represent_weighted(&k, &patch.points, &patch.weights, &Boundary::Open, Weighting::Symmetrized).unwrap()
        })
        .find(|m| m.dim() == 89)
        .unwrap();

    let xs: Vec<f64> = m.sites().iter().map(|s| s[0]).collect();
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
    let diag = vec![0.0; xs.len()];
    let off: Vec<f64> = xs
        .windows(2)
        .map(|w| if (w[1] - w[0] - 1.0).abs() < 1e-9 { 1.0 } else { 0.5 })
        .collect();

    let eig = eigensolve(&m).unwrap();
    for (k, &lambda) in eig.values.iter().enumerate() {
        let oracle = bisect_eigenvalue(&diag, &off, k, -3.0, 3.0);
        assert!((lambda - oracle).abs() < 1e-10, "eigenvalue {k}: {lambda} vs {oracle}");
    }
    for e in [-1.9, -1.0, -0.3, 0.0, 0.41, 1.2, 2.5] {
        let below = eig.values.iter().filter(|&&l| l < e).count();
        assert_eq!(below, sturm_count(&diag, &off, e), "count below {e}");
    }
}

#[test]
fn ring_ldos_matches_fourier_sum() {
    // ring of 64 with a Peierls phase: eigenvalues v + 2cos(2πk/N + α), each
    // plane wave carrying weight 1/N at every site
    let n = 64usize;
    let alpha = 0.3;
    let v = 0.25;
    let k = chain(&[(1.0, Complex64::from_polar(1.0, alpha))], v);
    let patch = PointSet::arithmetic(1.0, 0.0, 40.0).unwrap();
    let per = Boundary::Periodic { periods: vec![vec![n as f64]] };
    let m = represent_weighted(&k, &patch, &vec![1.0; patch.len()], &per, Weighting::Symmetrized).unwrap();
    assert_eq!(m.dim(), n);
    let eig = eigensolve(&m).unwrap();

    let mut oracle: Vec<f64> = (0..n).map(|j| v + 2.0 * (2.0 * PI * j as f64 / n as f64 + alpha).cos()).collect();
    oracle.sort_by(f64::total_cmp);
    for (a, b) in eig.values.iter().zip(&oracle) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
    // the phase breaks every ±k degeneracy, so each local weight is exactly 1/N
    for site in local_spectral_weights(&eig) {
        for (_, w) in site {
            assert!((w - 1.0 / n as f64).abs() < 1e-12);
        }
    }
}

#[test]
fn ring_spectral_moments_count_closed_walks() {
    // ∫ E^{2k} dμ_x = number of closed walks of length 2k = C(2k, k) on ℤ
    // (for 2k < N the ring looks like ℤ)
    let n = 64usize;
    let k = chain(&[(1.0, Complex64::new(1.0, 0.0))], 0.0);
    let patch = PointSet::arithmetic(1.0, 0.0, 40.0).unwrap();
    let per = Boundary::Periodic { periods: vec![vec![n as f64]] };
    let m = represent_weighted(&k, &patch, &vec![1.0; patch.len()], &per, Weighting::Symmetrized).unwrap();
    let weights = local_spectral_weights(&eigensolve(&m).unwrap());
    let binom = [1.0, 2.0, 6.0, 20.0, 70.0, 252.0];
    for site in [0, 17, 63] {
        for (p, &c) in binom.iter().enumerate() {
            let moment: f64 = weights[site].iter().map(|(e, w)| w * e.powi(2 * p as i32)).sum();
            assert!((moment - c).abs() < 1e-9 * c.max(1.0), "site {site}, moment {}: {moment}", 2 * p);
        }
    }
}
