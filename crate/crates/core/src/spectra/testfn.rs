use serde::{Deserialize, Serialize};

use super::measure::EmpiricalMeasure;
use crate::linalg::{add, ball_volume, dist, norm, sub};
use crate::pointset::PointSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    /// `1 - r`
    Triangle,
    /// `(1 + cos πr) / 2`
    CosineBump,
    /// `(e^{-4r²} - e^{-4}) / (1 - e^{-4})`
    GaussianTruncated,
}

/// A radial, continuous, compactly supported test function
/// `f(x) = amplitude · g(|x - center| / radius)` with `g(r) = 0` for `r ≥ 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunction {
    pub kind: TestKind,
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

const GAUSS_RATE: f64 = 4.0;

impl TestFunction {
    pub fn new(kind: TestKind, center: Vec<f64>, radius: f64) -> Result<Self> {
        let f = TestFunction { kind, center, radius, amplitude: 1.0 };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            return Err(Error::InvalidPlan(format!("test function radius {} must be positive", self.radius)));
        }
        if !(self.amplitude.abs() <= 1.0) {
            return Err(Error::InvalidPlan("test function amplitude must lie in [-1, 1]".into()));
        }
        if self.center.is_empty() || self.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidPlan("test function center must be a finite vector".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    fn profile(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        match self.kind {
            TestKind::Triangle => 1.0 - r,
            TestKind::CosineBump => 0.5 * (1.0 + (std::f64::consts::PI * r).cos()),
            TestKind::GaussianTruncated => {
                let floor = (-GAUSS_RATE).exp();
                ((-GAUSS_RATE * r * r).exp() - floor) / (1.0 - floor)
            }
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.amplitude * self.profile(dist(x, &self.center) / self.radius)
    }

    /// Lipschitz constant with respect to the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        let slope = match self.kind {
            TestKind::Triangle => 1.0,
            TestKind::CosineBump => std::f64::consts::FRAC_PI_2,
            TestKind::GaussianTruncated => {
                // max of 2a r e^{-a r²} at r = 1/√(2a)
                let a = GAUSS_RATE;
                (2.0 * a).sqrt() * (-0.5f64).exp() / (1.0 - (-a).exp())
            }
        };
        self.amplitude.abs() * slope / self.radius
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= 40 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
}

/// Integrates over `[a, b]` split at the given interior breakpoints.
fn integrate_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut nodes = vec![a];
    nodes.extend(cuts);
    nodes.push(b);
    let pieces = (nodes.len() - 1) as f64;
    nodes.windows(2).map(|w| adaptive_simpson(f, w[0], w[1], tol / pieces)).sum()
}

const PAIR_TOL: f64 = 1e-8;

/// `(f1* ∗ f2)(δ) = ∫ conj f1(h) · f2(h + δ) dh`, by nested adaptive Simpson
/// over the overlap box of the two supports.
pub fn correlation(f1: &TestFunction, f2: &TestFunction, delta: &[f64]) -> f64 {
    let c2 = sub(&f2.center, delta);
    if dist(&f1.center, &c2) >= f1.radius + f2.radius {
        return 0.0;
    }
    let d = f1.dim();
    let lo: Vec<f64> = (0..d).map(|i| (f1.center[i] - f1.radius).max(c2[i] - f2.radius)).collect();
    let hi: Vec<f64> = (0..d).map(|i| (f1.center[i] + f1.radius).min(c2[i] + f2.radius)).collect();
    let integrand = |h: &[f64]| f1.eval(h) * f2.eval(&add(h, delta));
    let breaks: Vec<[f64; 2]> = (0..d).map(|i| [f1.center[i], c2[i]]).collect();
    nested(&integrand, &lo, &hi, &breaks, &vec![0.0; d], 0, PAIR_TOL)
}

fn nested(
    f: &dyn Fn(&[f64]) -> f64,
    lo: &[f64],
    hi: &[f64],
    breaks: &[[f64; 2]],
    point: &[f64],
    axis: usize,
    tol: f64,
) -> f64 {
    let last = axis + 1 == lo.len();
    let inner_tol = tol / (hi[axis] - lo[axis]).max(1.0);
    let g = |t: f64| {
        let mut q = point.to_vec();
        q[axis] = t;
        if last {
            f(&q)
        } else {
            nested(f, lo, hi, breaks, &q, axis + 1, inner_tol)
        }
    };
    integrate_pieces(&g, lo[axis], hi[axis], &breaks[axis], tol)
}

/// `P_w f(D) = Σ_{x ∈ D} f(x) w_x`.
pub fn periodize(f: &TestFunction, patch: &PointSet, weights: &[f64]) -> Result<f64> {
    if f.dim() != patch.dim() {
        return Err(Error::DimensionMismatch { expected: patch.dim(), got: f.dim() });
    }
    if weights.len() != patch.len() {
        return Err(Error::DimensionMismatch { expected: patch.len(), got: weights.len() });
    }
    let need = norm(&f.center) + f.radius;
    if need > patch.radius() {
        return Err(Error::SupportExceedsPatch { need, have: patch.radius() });
    }
    Ok(patch.within(&f.center, f.radius).map(|i| f.eval(patch.point(i)) * weights[i]).sum())
}

/// Pair-correlation estimate
/// `(1 / vol B_{R_eff}) Σ_{|x| ≤ R_eff} Σ_{|y - x| ≤ δ_max} w_x w_y δ_{y - x}`.
pub fn autocorrelation(patch: &PointSet, weights: &[f64], r_eff: f64, delta_max: f64) -> Result<EmpiricalMeasure> {
    if weights.len() != patch.len() {
        return Err(Error::DimensionMismatch { expected: patch.len(), got: weights.len() });
    }
    if !(r_eff > 0.0) || !(delta_max >= 0.0) {
        return Err(Error::InvalidPlan("averaging radius and cutoff must be positive".into()));
    }
    let need = r_eff + delta_max;
    if need > patch.radius() + crate::COINCIDENCE_TOL {
        return Err(Error::SupportExceedsPatch { need, have: patch.radius() });
    }
    let d = patch.dim();
    let vol = ball_volume(d, r_eff);
    let origin = vec![0.0; d];
    let mut atoms = Vec::new();
    for i in patch.within(&origin, r_eff) {
        let x = patch.point(i);
        for j in patch.within(x, delta_max) {
            atoms.push((sub(patch.point(j), x), weights[i] * weights[j] / vol));
        }
    }
    EmpiricalMeasure::new(d, atoms)
}

/// `γ(f1* ∗ f2) = Σ_δ γ({δ}) · (f1* ∗ f2)(δ)`.
pub fn pair_measure_apply(gamma: &EmpiricalMeasure, f1: &TestFunction, f2: &TestFunction) -> Result<f64> {
    if f1.dim() != gamma.dim() || f2.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch { expected: gamma.dim(), got: f1.dim() });
    }
    Ok(gamma
        .atoms()
        .iter()
        .map(|a| if a.mass == 0.0 { 0.0 } else { a.mass * correlation(f1, f2, &a.location) })
        .sum())
}
