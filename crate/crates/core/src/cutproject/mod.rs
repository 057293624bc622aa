//! Euclidean cut-and-project schemes `R^d × R^m ⊃ Γ = S·ℤ^{d+m}`.

mod approximant;
pub mod intkernel;
mod window;

pub use approximant::{
    convergents, periodicity_lattice, periodicity_lattice_of_scheme, rational_approximant,
    PeriodLattice, RationalScheme,
};
pub use window::{eval_window, Side, Window, WindowFn};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{lex_cmp, norm};
use crate::pointset::PointSet;
use crate::{Error, Result};

/// Shifts with a nonsingularity margin at or below this value are treated
/// as singular.
pub const SINGULAR_MARGIN: f64 = 1e-7;

/// The golden mean `φ = (1 + √5) / 2`.
pub const GOLDEN: f64 = 1.618_033_988_749_895;

/// A cut-and-project datum: physical dimension `d`, internal dimension `m`,
/// lattice basis `S` (columns generate `Γ`), window and sampled shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeData", into = "SchemeData")]
pub struct Scheme {
    d: usize,
    m: usize,
    basis: Vec<f64>,
    window: Option<Window>,
    shift: Vec<f64>,
    /// Exact rational form `N / q` of the basis, when known.
    exact: Option<(Vec<i64>, i64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemeData {
    d: usize,
    m: usize,
    basis: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<Window>,
    shift: Vec<f64>,
}

impl TryFrom<SchemeData> for Scheme {
    type Error = Error;
    fn try_from(s: SchemeData) -> Result<Self> {
        Scheme::new(s.d, s.m, s.basis, s.window, s.shift)
    }
}

impl From<Scheme> for SchemeData {
    fn from(s: Scheme) -> Self {
        SchemeData { d: s.d, m: s.m, basis: s.basis, window: s.window, shift: s.shift }
    }
}

impl Scheme {
    pub fn new(
        d: usize,
        m: usize,
        basis: Vec<f64>,
        window: Option<Window>,
        shift: Vec<f64>,
    ) -> Result<Self> {
        let n = d + m;
        if d == 0 {
            return Err(Error::InvalidScheme("physical dimension must be positive".into()));
        }
        if basis.len() != n * n {
            return Err(Error::InvalidScheme(format!(
                "basis has {} entries, expected {}",
                basis.len(),
                n * n
            )));
        }
        if shift.len() != n {
            return Err(Error::InvalidScheme(format!("shift must have {n} entries")));
        }
        match (&window, m) {
            (Some(_), 0) => return Err(Error::InvalidScheme("m = 0 admits no window".into())),
            (None, m) if m > 0 => return Err(Error::InvalidScheme("m > 0 needs a window".into())),
            (Some(w), m) => {
                w.validate()?;
                if w.dim() != m {
                    return Err(Error::InvalidScheme("window dimension differs from m".into()));
                }
            }
            _ => {}
        }
        if basis.iter().chain(&shift).any(|v| !v.is_finite()) {
            return Err(Error::InvalidScheme("non-finite entry".into()));
        }
        let det = DMatrix::from_row_slice(n, n, &basis).determinant();
        if det.abs() <= 1e-12 {
            return Err(Error::DegenerateBasis(det.abs()));
        }
        Ok(Scheme { d, m, basis, window, shift, exact: None })
    }

    /// The Fibonacci scheme `S = [[1, φ], [1, -1/φ]]` with window
    /// `[-1/φ, 1]` and shift `(0, internal_shift)`. Its model sets have the
    /// two gap lengths `1` and `φ`.
    pub fn fibonacci(internal_shift: f64) -> Self {
        let basis = vec![1.0, GOLDEN, 1.0, -1.0 / GOLDEN];
        let window = Window::interval(-1.0 / GOLDEN, 1.0).expect("valid interval");
        Scheme::new(1, 1, basis, Some(window), vec![0.0, internal_shift]).expect("valid scheme")
    }

    /// `ℤ^d` with trivial internal space.
    pub fn integer_lattice(d: usize) -> Self {
        let mut basis = vec![0.0; d * d];
        for i in 0..d {
            basis[i * d + i] = 1.0;
        }
        Scheme::new(d, 0, basis, None, vec![0.0; d]).expect("valid scheme")
    }

    pub(crate) fn with_exact(mut self, numerators: Vec<i64>, denominator: i64) -> Self {
        self.exact = Some((numerators, denominator));
        self
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Row-major basis entries.
    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn window(&self) -> Option<&Window> {
        self.window.as_ref()
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn with_shift(&self, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != self.d + self.m {
            return Err(Error::InvalidScheme("shift has the wrong length".into()));
        }
        let mut s = self.clone();
        s.shift = shift;
        Ok(s)
    }

    pub fn with_window(&self, window: Window) -> Result<Self> {
        if self.m == 0 || window.dim() != self.m {
            return Err(Error::InvalidScheme("window dimension differs from m".into()));
        }
        window.validate()?;
        let mut s = self.clone();
        s.window = Some(window);
        Ok(s)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.d + self.m;
        DMatrix::from_row_slice(n, n, &self.basis)
    }

    /// `γ = S·n + shift`, computed from the exact rational basis when present.
    pub fn lattice_point(&self, n: &[i64]) -> Vec<f64> {
        let dim = self.d + self.m;
        (0..dim)
            .map(|k| {
                let row = k * dim;
                let v = match &self.exact {
                    Some((num, q)) => {
                        let s: i128 = (0..dim).map(|j| num[row + j] as i128 * n[j] as i128).sum();
                        s as f64 / *q as f64
                    }
                    None => (0..dim).map(|j| self.basis[row + j] * n[j] as f64).sum(),
                };
                v + self.shift[k]
            })
            .collect()
    }

    /// The sharp window function `χ_W`.
    pub fn sharp_window(&self) -> Option<WindowFn> {
        self.window.clone().map(WindowFn::sharp)
    }
}

/// A generated patch of a (weighted) model set together with the internal
/// coordinates and lattice labels of its points, all in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSetPatch {
    pub points: PointSet,
    pub weights: Vec<f64>,
    pub internal: Vec<Vec<f64>>,
    pub labels: Vec<Vec<i64>>,
}

/// Enumerates every `n ∈ ℤ^{d+m}` with `S·n + shift` in the box
/// `[-R, R]^d × (center ± half)` and passes the lattice point to `visit`.
fn enumerate_box(
    scheme: &Scheme,
    radius: f64,
    internal_center: &[f64],
    internal_half: &[f64],
    mut visit: impl FnMut(&[i64], Vec<f64>),
) -> Result<()> {
    let dim = scheme.d + scheme.m;
    let s = scheme.matrix();
    let inv = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::DegenerateBasis(0.0))?;
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    for k in 0..dim {
        let (c, h) = if k < scheme.d {
            (0.0, radius)
        } else {
            (internal_center[k - scheme.d], internal_half[k - scheme.d])
        };
        lo[k] = c - h;
        hi[k] = c + h;
    }
    // bounding box of S^{-1}(box - shift)
    let mut nlo = vec![0i64; dim];
    let mut nhi = vec![0i64; dim];
    for i in 0..dim {
        let mut center = 0.0;
        let mut spread = 0.0;
        for k in 0..dim {
            let c = 0.5 * (lo[k] + hi[k]) - scheme.shift[k];
            let h = 0.5 * (hi[k] - lo[k]);
            center += inv[(i, k)] * c;
            spread += inv[(i, k)].abs() * h;
        }
        nlo[i] = (center - spread - 1e-9).floor() as i64;
        nhi[i] = (center + spread + 1e-9).ceil() as i64;
    }
    let last = dim - 1;
    let mut n = nlo.clone();
    loop {
        // feasible interval of the last coordinate given the others
        let mut a = nlo[last] as f64;
        let mut b = nhi[last] as f64;
        let mut feasible = true;
        for k in 0..dim {
            let rest: f64 = (0..last).map(|j| s[(k, j)] * n[j] as f64).sum::<f64>() + scheme.shift[k];
            let coef = s[(k, last)];
            let (l, h) = (lo[k] - rest - 1e-9, hi[k] - rest + 1e-9);
            if coef.abs() < 1e-300 {
                if l > 0.0 || h < 0.0 {
                    feasible = false;
                    break;
                }
            } else {
                let (x, y) = if coef > 0.0 { (l / coef, h / coef) } else { (h / coef, l / coef) };
                a = a.max(x);
                b = b.min(y);
            }
        }
        if feasible && a <= b {
            for t in (a.ceil() as i64)..=(b.floor() as i64) {
                n[last] = t;
                let gamma = scheme.lattice_point(&n);
                visit(&n, gamma);
            }
        }
        // advance the outer odometer
        let mut axis = 0;
        loop {
            if axis == last {
                return Ok(());
            }
            n[axis] += 1;
            if n[axis] <= nhi[axis] {
                break;
            }
            n[axis] = nlo[axis];
            axis += 1;
        }
    }
}

/// Enumerates the (weighted) model set `π_G(Γ ∩ (G × supp w))` inside
/// `B_R(0)`.
///
/// With `window_fn = None` the scheme's sharp window is used; for `m = 0`
/// every lattice point in the ball is returned with weight 1.
pub fn generate_model_set(
    scheme: &Scheme,
    radius: f64,
    window_fn: Option<&WindowFn>,
) -> Result<ModelSetPatch> {
    if !(radius > 0.0) {
        return Err(Error::InvalidScheme(format!("radius {radius} must be positive")));
    }
    let d = scheme.d;
    let wf = match (scheme.m, window_fn) {
        (0, _) => None,
        (_, Some(wf)) => {
            if wf.window.dim() != scheme.m {
                return Err(Error::InvalidScheme("window function dimension differs from m".into()));
            }
            Some(wf.clone())
        }
        (_, None) => scheme.sharp_window(),
    };
    let (center, half) = match &wf {
        Some(wf) => (wf.window.center().to_vec(), wf.support_half_extents()),
        None => (Vec::new(), Vec::new()),
    };
    let mut rows: Vec<(Vec<f64>, Vec<f64>, f64, Vec<i64>)> = Vec::new();
    enumerate_box(scheme, radius, &center, &half, |n, gamma| {
        let phys = gamma[..d].to_vec();
        if norm(&phys) > radius {
            return;
        }
        let internal = gamma[d..].to_vec();
        let w = match &wf {
            Some(wf) => eval_window(wf, &internal),
            None => 1.0,
        };
        if w > 0.0 {
            rows.push((phys, internal, w, n.to_vec()));
        }
    })?;
    rows.sort_by(|a, b| lex_cmp(&a.0, &b.0));
    let points = PointSet::new(d, radius, rows.iter().map(|r| r.0.clone()).collect())?;
    Ok(ModelSetPatch {
        points,
        weights: rows.iter().map(|r| r.2).collect(),
        internal: rows.iter().map(|r| r.1.clone()).collect(),
        labels: rows.into_iter().map(|r| r.3).collect(),
    })
}

/// Smallest distance from an internal coordinate `π_H(γ)`, `|π_G(γ)| <= R`,
/// to the window boundary. Lattice points farther than 1 from the window
/// are not examined, so the result is capped at 1.
pub fn nonsingularity_margin(scheme: &Scheme, radius: f64) -> Result<f64> {
    let window = scheme.window.as_ref().ok_or(Error::NoWindow)?;
    let d = scheme.d;
    let half: Vec<f64> = window.half_extents().iter().map(|h| h + 1.0).collect();
    let mut margin: f64 = 1.0;
    enumerate_box(scheme, radius, window.center(), &half, |_, gamma| {
        if norm(&gamma[..d]) <= radius {
            margin = margin.min(window.signed_distance(&gamma[d..]).abs());
        }
    })?;
    Ok(margin)
}
