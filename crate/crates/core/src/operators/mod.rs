//! Matrices of finite-type kernels on weighted `ℓ²` spaces of a patch.
//!
//! Matrices are written in the orthonormal basis `e_x = δ_x / √w_x`, so the
//! kernel `a` becomes `M[x, y] = √(w_x w_y) · a(x, D, y)`.

mod eigen;

use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cutproject::{eval_window, WindowFn};
use crate::linalg::sub;
use crate::pattern::Kernel;
use crate::pointset::{ball_inside, PointSet};
use crate::{Error, Result};

/// Sites with a weight at or below this are dropped from the Hilbert space.
pub const WEIGHT_FLOOR: f64 = 1e-12;

/// Largest matrix the dense solver accepts.
pub const MAX_DIM: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Boundary {
    /// Only sites whose whole row is determined by the patch are kept.
    Open,
    /// Sites of the fundamental cell centred at the origin; displacements
    /// are wrapped modulo the lattice spanned by `periods`.
    Periodic { periods: Vec<Vec<f64>> },
}

/// How window weights enter the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// `M = √(w_x w_y) · a`: the kernel `a` acting on `ℓ²(D, w)`.
    Symmetrized,
    /// `M = (w_x w_y)^{3/2} · a`: the lifted kernel `a(x, y) w_x w_y`
    /// acting on `ℓ²(D, w)`.
    Lifted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    sites: Vec<Vec<f64>>,
    patch_index: Vec<usize>,
    weights: Vec<f64>,
    matrix: DMatrix<Complex64>,
    boundary: Boundary,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Vec<f64>] {
        &self.sites
    }

    /// Index of each site in the patch the matrix was assembled on.
    pub fn patch_index(&self) -> &[usize] {
        &self.patch_index
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |M - M*|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (row-major
    /// little-endian `f64`, complex entries as consecutive re/im pairs).
    pub fn dump(&self, stem: &Path) -> std::io::Result<()> {
        let complex = self.matrix.iter().any(|z| z.im != 0.0);
        let header = serde_json::json!({
            "dim": self.dim(),
            "complex": complex,
            "sites": self.sites,
            "weights": self.weights,
            "boundary": self.boundary,
        });
        std::fs::write(stem.with_extension("json"), serde_json::to_vec_pretty(&header)?)?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(stem.with_extension("bin"))?);
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                let z = self.matrix[(i, j)];
                out.write_all(&z.re.to_le_bytes())?;
                if complex {
                    out.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        out.flush()
    }
}

/// Lattice reduction into the half-open cell `P·[-1/2, 1/2)^d`.
struct CellReducer {
    periods: DMatrix<f64>,
    inverse: DMatrix<f64>,
}

impl CellReducer {
    fn new(periods: &[Vec<f64>], dim: usize) -> Result<Self> {
        if periods.len() != dim || periods.iter().any(|p| p.len() != dim) {
            return Err(Error::MissingPeriods);
        }
        let p = DMatrix::from_fn(dim, dim, |i, j| periods[j][i]);
        let inverse = p.clone().try_inverse().ok_or(Error::MissingPeriods)?;
        Ok(CellReducer { periods: p, inverse })
    }

    fn shift_of(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        let c = &self.inverse * nalgebra::DVector::from_column_slice(x);
        let k: Vec<f64> = c.iter().map(|v| (v + 0.5 + 1e-9).floor()).collect();
        (0..d).map(|i| (0..d).map(|j| self.periods[(i, j)] * k[j]).sum()).collect()
    }

    fn in_cell(&self, x: &[f64]) -> bool {
        self.shift_of(x).iter().all(|&s| s == 0.0)
    }

    fn reduce(&self, x: &[f64]) -> Vec<f64> {
        sub(x, &self.shift_of(x))
    }
}

/// Matrix of `a` on `patch` with site weights taken from `wf` at the given
/// internal coordinates (all weights 1 when `wf` is `None`).
pub fn represent(
    a: &Kernel,
    patch: &PointSet,
    wf: Option<&WindowFn>,
    internal: &[Vec<f64>],
    boundary: &Boundary,
) -> Result<OperatorMatrix> {
    let weights: Vec<f64> = match wf {
        None => vec![1.0; patch.len()],
        Some(wf) => {
            if internal.len() != patch.len() {
                return Err(Error::DimensionMismatch { expected: patch.len(), got: internal.len() });
            }
            internal.iter().map(|h| eval_window(wf, h)).collect()
        }
    };
    represent_weighted(a, patch, &weights, boundary, Weighting::Symmetrized)
}

/// Matrix of `a` on `patch` with explicit per-point weights.
pub fn represent_weighted(
    a: &Kernel,
    patch: &PointSet,
    weights: &[f64],
    boundary: &Boundary,
    weighting: Weighting,
) -> Result<OperatorMatrix> {
    if weights.len() != patch.len() {
        return Err(Error::DimensionMismatch { expected: patch.len(), got: weights.len() });
    }
    if a.dim() != patch.dim() {
        return Err(Error::DimensionMismatch { expected: patch.dim(), got: a.dim() });
    }
    if let Some((index, &weight)) = weights.iter().enumerate().find(|(_, w)| !(**w >= 0.0)) {
        return Err(Error::NonPositiveWeight { index, weight });
    }
    let reach = a.reach();
    let reducer = match boundary {
        Boundary::Open => None,
        Boundary::Periodic { periods } => Some(CellReducer::new(periods, patch.dim())?),
    };
    let mut site_of = vec![usize::MAX; patch.len()];
    let mut patch_index = Vec::new();
    for (i, x) in patch.points().iter().enumerate() {
        if weights[i] <= WEIGHT_FLOOR {
            continue;
        }
        let keep = match &reducer {
            None => ball_inside(patch, x, reach),
            Some(r) => r.in_cell(x),
        };
        if keep {
            site_of[i] = patch_index.len();
            patch_index.push(i);
        }
    }
    let n = patch_index.len();
    if n > MAX_DIM {
        return Err(Error::TooLarge(n));
    }
    let scale = |wx: f64, wy: f64| match weighting {
        Weighting::Symmetrized => (wx * wy).sqrt(),
        Weighting::Lifted => (wx * wy).powf(1.5),
    };
    let mut matrix = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (si, &i) in patch_index.iter().enumerate() {
        for (j, value) in a.row(patch, i)? {
            let sj = match &reducer {
                None => site_of[j],
                Some(r) => {
                    let y = r.reduce(patch.point(j));
                    let found = patch
                        .within(&y, 1e-7)
                        .map(|k| site_of[k])
                        .find(|&s| s != usize::MAX)
                        .unwrap_or(usize::MAX);
                    found
                }
            };
            if sj == usize::MAX {
                if reducer.is_some() && weights[j] > WEIGHT_FLOOR {
                    return Err(Error::BoundaryIncomplete {
                        center: patch.point(j).to_vec(),
                        radius: 0.0,
                    });
                }
                continue;
            }
            let wj = weights[patch_index[sj]];
            matrix[(si, sj)] += scale(weights[i], wj) * value;
        }
    }
    Ok(OperatorMatrix {
        sites: patch_index.iter().map(|&i| patch.point(i).to_vec()).collect(),
        weights: patch_index.iter().map(|&i| weights[i]).collect(),
        patch_index,
        matrix,
        boundary: boundary.clone(),
    })
}

/// Spectral decomposition of a Hermitian [`OperatorMatrix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    dim: usize,
    vectors: Vec<Complex64>,
}

impl Eigen {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvector `k` (unit norm).
    pub fn vector(&self, k: usize) -> &[Complex64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    pub fn has_vectors(&self) -> bool {
        !self.vectors.is_empty() || self.dim == 0
    }

    /// `|v_k(x)|²` for eigenvector `k` and site `x`.
    pub fn weight(&self, k: usize, x: usize) -> f64 {
        self.vectors[k * self.dim + x].norm_sqr()
    }
}

fn hermitian_check(m: &OperatorMatrix) -> Result<()> {
    let defect = m.hermitian_defect();
    if defect > 1e-12 * m.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

fn eigen_impl(m: &OperatorMatrix, want_vectors: bool) -> Result<Eigen> {
    let n = m.dim();
    if n > MAX_DIM {
        return Err(Error::TooLarge(n));
    }
    hermitian_check(m)?;
    let at = |i: usize, j: usize| 0.5 * (m.matrix[(i, j)] + m.matrix[(j, i)].conj());
    let real = m.matrix.iter().all(|z| z.im == 0.0);
    let (values, vectors) = if real {
        let a: Vec<f64> = (0..n * n).map(|k| at(k / n, k % n).re).collect();
        eigen::hermitian_eigen(a, n, want_vectors)?
    } else {
        let a: Vec<Complex64> = (0..n * n).map(|k| at(k / n, k % n)).collect();
        eigen::hermitian_eigen(a, n, want_vectors)?
    };
    Ok(Eigen { values, dim: n, vectors })
}

/// Ascending eigenvalues and orthonormal eigenvectors.
pub fn eigensolve(m: &OperatorMatrix) -> Result<Eigen> {
    eigen_impl(m, true)
}

/// Ascending eigenvalues only.
pub fn eigenvalues(m: &OperatorMatrix) -> Result<Vec<f64>> {
    Ok(eigen_impl(m, false)?.values)
}

/// Largest residual `‖Mv - λv‖` and largest deviation of `V*V` from the
/// identity.
pub fn eigen_residuals(m: &OperatorMatrix, eig: &Eigen) -> (f64, f64) {
    let n = m.dim();
    let mut residual: f64 = 0.0;
    for k in 0..n {
        let v = eig.vector(k);
        let mut r2 = 0.0;
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for (j, vj) in v.iter().enumerate() {
                s += m.matrix[(i, j)] * vj;
            }
            r2 += (s - eig.values[k] * v[i]).norm_sqr();
        }
        residual = residual.max(r2.sqrt());
    }
    let mut ortho: f64 = 0.0;
    for k in 0..n {
        for l in k..n {
            let ip: Complex64 = eig.vector(k).iter().zip(eig.vector(l)).map(|(a, b)| a.conj() * b).sum();
            let want = if k == l { 1.0 } else { 0.0 };
            ortho = ortho.max((ip - want).norm());
        }
    }
    (residual, ortho)
}

/// Checks the solver's accuracy contract: residuals within `1e-10·‖M‖`
/// and orthonormality within `1e-10`.
pub fn verify_eigen(m: &OperatorMatrix, eig: &Eigen) -> Result<()> {
    let (res, ortho) = eigen_residuals(m, eig);
    let norm = m.max_abs() * m.dim().max(1) as f64;
    if res > 1e-10 * norm.max(1.0) || ortho > 1e-10 {
        return Err(Error::Numerical(format!(
            "eigensolver accuracy: residual {res:e}, orthogonality {ortho:e}"
        )));
    }
    Ok(())
}

/// For every site `x`, the pairs `(λ_k, |v_k(x)|²)`.
pub fn local_spectral_weights(eig: &Eigen) -> Vec<Vec<(f64, f64)>> {
    (0..eig.dim)
        .map(|x| (0..eig.dim).map(|k| (eig.values[k], eig.weight(k, x))).collect())
        .collect()
}

/// A normalised, compactly supported sampling density `ρ` on `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "profile", rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplingWeight {
    /// `1 / vol(B_R)` on the closed ball.
    UniformBall { radius: f64 },
    /// `c · (1 - |x|²/R²)^k` on the ball.
    Bump { radius: f64, smoothness: u32 },
}

impl SamplingWeight {
    pub fn radius(&self) -> f64 {
        match *self {
            SamplingWeight::UniformBall { radius } | SamplingWeight::Bump { radius, .. } => radius,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.radius();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidPlan(format!("sampling radius {r} must be positive")));
        }
        Ok(())
    }

    /// Density at `x` (the profile is centred at the origin).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let d = x.len();
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match *self {
            SamplingWeight::UniformBall { radius } => {
                if r2 <= radius * radius {
                    1.0 / crate::linalg::ball_volume(d, radius)
                } else {
                    0.0
                }
            }
            SamplingWeight::Bump { radius, smoothness } => {
                let t = 1.0 - r2 / (radius * radius);
                if t <= 0.0 {
                    return 0.0;
                }
                t.powi(smoothness as i32) / bump_integral(d, radius, smoothness)
            }
        }
    }
}

/// `∫_{B_R} (1 - |x|²/R²)^k dx = π^{d/2} R^d Γ(k+1) / Γ(d/2 + k + 1)`.
fn bump_integral(d: usize, radius: f64, k: u32) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let half = d as f64 / 2.0;
    let log = half * std::f64::consts::PI.ln() + d as f64 * radius.ln() + ln_gamma(k as f64 + 1.0)
        - ln_gamma(half + k as f64 + 1.0);
    log.exp()
}
