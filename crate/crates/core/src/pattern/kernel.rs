use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::PeFunction;
use crate::cutproject::WindowFn;
use crate::linalg::{add, neg, norm};
use crate::pointset::{ball_inside, round_to_grid, PointSet};
use crate::{Error, Result, COINCIDENCE_TOL};

/// The profile `θ_γ` used to match a displacement against `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Theta {
    /// Exact indicator of `{γ}` at the coincidence tolerance.
    Indicator,
    /// Continuous tent `max(0, 1 - |v - γ| / width)`.
    Tent { width: f64 },
}

impl Theta {
    pub fn reach(&self) -> f64 {
        match self {
            Theta::Indicator => COINCIDENCE_TOL,
            Theta::Tent { width } => *width,
        }
    }

    pub fn value(&self, offset: f64) -> f64 {
        match self {
            Theta::Indicator => f64::from(u8::from(offset <= COINCIDENCE_TOL)),
            Theta::Tent { width } => (1.0 - offset / width).max(0.0),
        }
    }
}

/// A coefficient of a finite-type kernel, evaluated at the source point of
/// a hop. Every variant depends only on the pattern around the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Const(Complex64),
    Table(PeFunction),
    Conj(Box<Coefficient>),
    /// The inner coefficient read at the point(s) inside the support of
    /// `θ(· - x - offset)`; zero if there is none. For the indicator this is
    /// `Σ_y θ(y - x - offset) · inner(y)`. Reading values without the tent
    /// weight keeps adjoints exact whenever the reach is below half the
    /// point separation.
    At { offset: Vec<f64>, inner: Box<Coefficient> },
    Product(Vec<Coefficient>),
    Sum(Vec<Coefficient>),
}

impl Coefficient {
    pub fn one() -> Self {
        Coefficient::Const(Complex64::new(1.0, 0.0))
    }

    /// Radius around the source that determines the value.
    pub fn radius(&self, theta: Theta) -> f64 {
        match self {
            Coefficient::Const(_) => 0.0,
            Coefficient::Table(f) if f.table().next().is_none() => 0.0,
            Coefficient::Table(f) => f.radius() + theta_slack(theta),
            Coefficient::Conj(c) => c.radius(theta),
            Coefficient::At { offset, inner } => norm(offset) + theta_slack(theta) + inner.radius(theta),
            Coefficient::Product(cs) | Coefficient::Sum(cs) => {
                cs.iter().map(|c| c.radius(theta)).fold(0.0, f64::max)
            }
        }
    }

    pub(crate) fn eval(&self, patch: &PointSet, theta: Theta, x: &[f64]) -> Result<Complex64> {
        Ok(match self {
            Coefficient::Const(c) => *c,
            Coefficient::Table(f) => match theta {
                Theta::Indicator => f.eval_at_point(patch, x)?,
                Theta::Tent { .. } => soft_table(f, patch, theta, x)?,
            },
            Coefficient::Conj(c) => c.eval(patch, theta, x)?.conj(),
            Coefficient::At { offset, inner } => {
                let target = add(x, offset);
                let reach = theta.reach();
                if !ball_inside(patch, &target, reach) {
                    return Err(Error::BoundaryIncomplete { center: target, radius: reach });
                }
                let mut acc = Complex64::new(0.0, 0.0);
                for j in patch.within(&target, reach) {
                    let y = patch.point(j);
                    if theta.value(crate::linalg::dist(y, &target)) > 0.0 {
                        acc += inner.eval(patch, theta, y)?;
                    }
                }
                acc
            }
            Coefficient::Product(cs) => {
                let mut acc = Complex64::new(1.0, 0.0);
                for c in cs {
                    acc *= c.eval(patch, theta, x)?;
                    if acc == Complex64::new(0.0, 0.0) {
                        break;
                    }
                }
                acc
            }
            Coefficient::Sum(cs) => {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in cs {
                    acc += c.eval(patch, theta, x)?;
                }
                acc
            }
        })
    }

    fn sup_bound(&self) -> f64 {
        match self {
            Coefficient::Const(c) => c.norm(),
            Coefficient::Table(f) => f.sup_norm(),
            Coefficient::Conj(c) | Coefficient::At { inner: c, .. } => c.sup_bound(),
            Coefficient::Product(cs) => cs.iter().map(|c| c.sup_bound()).product(),
            Coefficient::Sum(cs) => cs.iter().map(|c| c.sup_bound()).sum(),
        }
    }

    fn conj(self) -> Self {
        match self {
            Coefficient::Const(c) => Coefficient::Const(c.conj()),
            Coefficient::Conj(c) => *c,
            other => Coefficient::Conj(Box::new(other)),
        }
    }

    fn product(a: Coefficient, b: Coefficient) -> Self {
        let one = Complex64::new(1.0, 0.0);
        match (a, b) {
            (Coefficient::Const(x), Coefficient::Const(y)) => Coefficient::Const(x * y),
            (Coefficient::Const(x), other) | (other, Coefficient::Const(x)) if x == one => other,
            (Coefficient::Product(mut xs), Coefficient::Product(ys)) => {
                xs.extend(ys);
                Coefficient::Product(xs)
            }
            (Coefficient::Product(mut xs), other) => {
                xs.push(other);
                Coefficient::Product(xs)
            }
            (a, b) => Coefficient::Product(vec![a, b]),
        }
    }
}

fn theta_slack(theta: Theta) -> f64 {
    match theta {
        Theta::Indicator => 0.0,
        Theta::Tent { width } => width,
    }
}

/// Continuous evaluation of a table through its indicator expansion, with
/// `[γ ∈ D]` replaced by `max_{z ∈ D} θ(z - x - γ)`.
fn soft_table(f: &PeFunction, patch: &PointSet, theta: Theta, x: &[f64]) -> Result<Complex64> {
    if f.table().next().is_none() {
        return Ok(f.default_value());
    }
    let reach = theta.reach();
    if !ball_inside(patch, x, f.radius() + reach) {
        return Err(Error::BoundaryIncomplete { center: x.to_vec(), radius: f.radius() + reach });
    }
    let mut value = f.default_value();
    for (class, p) in f.expansion() {
        let mut weight = 1.0;
        for gamma in class.signature() {
            if gamma.iter().all(|&g| g == 0.0) {
                continue;
            }
            let target = add(x, &gamma);
            let best = patch
                .within(&target, reach)
                .map(|j| theta.value(crate::linalg::dist(patch.point(j), &target)))
                .fold(0.0, f64::max);
            weight *= best;
            if weight == 0.0 {
                break;
            }
        }
        value += weight * p;
    }
    Ok(value)
}

/// One hop of a kernel: displacement `δ` and the coefficient at the source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTerm {
    pub displacement: Vec<f64>,
    pub coeff: Coefficient,
}

/// A kernel of finite type `a(x, D, y) = Σ_δ θ(y - x - δ) · c_δ(x, D)` with
/// finitely many displacements and pattern equivariant coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelData", into = "KernelData")]
pub struct Kernel {
    dim: usize,
    terms: Vec<KernelTerm>,
    theta: Theta,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelData {
    dim: usize,
    theta: Theta,
    terms: Vec<KernelTerm>,
}

impl TryFrom<KernelData> for Kernel {
    type Error = Error;
    fn try_from(k: KernelData) -> Result<Self> {
        Kernel::new(k.dim, k.terms, k.theta)
    }
}

impl From<Kernel> for KernelData {
    fn from(k: Kernel) -> Self {
        KernelData { dim: k.dim, theta: k.theta, terms: k.terms }
    }
}

impl Kernel {
    /// Builds a kernel, merging terms with the same (grid-rounded)
    /// displacement into a sum.
    pub fn new(dim: usize, terms: Vec<KernelTerm>, theta: Theta) -> Result<Self> {
        if let Theta::Tent { width } = theta {
            if !(width > 0.0) {
                return Err(Error::InvalidOperator("tent width must be positive".into()));
            }
        }
        let mut merged: Vec<(Vec<i64>, KernelTerm)> = Vec::new();
        for t in terms {
            if t.displacement.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: t.displacement.len() });
            }
            if !t.coeff.sup_bound().is_finite() {
                return Err(Error::InvalidOperator("unbounded coefficient".into()));
            }
            let key = round_to_grid(&t.displacement);
            match merged.iter_mut().find(|(k, _)| *k == key) {
                Some((_, existing)) => {
                    let old = std::mem::replace(&mut existing.coeff, Coefficient::Sum(Vec::new()));
                    existing.coeff = match old {
                        Coefficient::Sum(mut cs) => {
                            cs.push(t.coeff);
                            Coefficient::Sum(cs)
                        }
                        other => Coefficient::Sum(vec![other, t.coeff]),
                    };
                }
                None => merged.push((key, t)),
            }
        }
        merged.sort_by(|a, b| a.0.cmp(&b.0));
        Ok(Kernel { dim, terms: merged.into_iter().map(|(_, t)| t).collect(), theta })
    }

    /// The identity kernel `s_0`.
    pub fn identity(dim: usize) -> Self {
        kernel_generator_s(&vec![0.0; dim])
    }

    /// A diagonal (multiplication) kernel by a pattern equivariant function.
    pub fn multiplication(dim: usize, f: PeFunction) -> Self {
        Kernel {
            dim,
            terms: vec![KernelTerm { displacement: vec![0.0; dim], coeff: Coefficient::Table(f) }],
            theta: Theta::Indicator,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[KernelTerm] {
        &self.terms
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    /// The same kernel with a different displacement profile `θ`.
    pub fn with_theta(&self, theta: Theta) -> Result<Self> {
        Kernel::new(self.dim, self.terms.clone(), theta)
    }

    /// Displacement set `R_K`.
    pub fn range(&self) -> Vec<Vec<f64>> {
        self.terms.iter().map(|t| t.displacement.clone()).collect()
    }

    /// Radius of the support of influence `K_a`.
    pub fn influence_radius(&self) -> f64 {
        self.terms.iter().map(|t| norm(&t.displacement)).fold(0.0, f64::max)
    }

    /// Radius of the pattern around the source that fixes all coefficients.
    pub fn pattern_radius(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.radius(self.theta)).fold(0.0, f64::max)
    }

    /// Distance from a source beyond which the patch is never consulted.
    pub fn reach(&self) -> f64 {
        self.pattern_radius().max(self.influence_radius() + self.theta.reach())
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| KernelTerm {
                displacement: t.displacement.clone(),
                coeff: Coefficient::product(Coefficient::Const(c), t.coeff.clone()),
            })
            .collect();
        Kernel { dim: self.dim, terms, theta: self.theta }
    }

    pub fn plus(&self, other: &Kernel) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        if self.theta != other.theta {
            return Err(Error::InvalidOperator("kernels use different θ profiles".into()));
        }
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Kernel::new(self.dim, terms, self.theta)
    }

    /// Nonzero entries `(j, a(x, D, y_j))` of the row of the point with
    /// index `i`. Fails if the patch does not determine the row.
    pub fn row(&self, patch: &PointSet, i: usize) -> Result<Vec<(usize, Complex64)>> {
        let x = patch.point(i);
        let reach = self.theta.reach();
        let mut row: Vec<(usize, Complex64)> = Vec::new();
        for term in &self.terms {
            let target = add(x, &term.displacement);
            if !ball_inside(patch, &target, reach) {
                return Err(Error::BoundaryIncomplete { center: target, radius: reach });
            }
            let hits: Vec<(usize, f64)> = patch
                .within(&target, reach)
                .map(|j| (j, self.theta.value(crate::linalg::dist(patch.point(j), &target))))
                .filter(|(_, w)| *w > 0.0)
                .collect();
            if hits.is_empty() {
                continue;
            }
            let c = term.coeff.eval(patch, self.theta, x)?;
            for (j, w) in hits {
                match row.iter_mut().find(|(k, _)| *k == j) {
                    Some((_, v)) => *v += w * c,
                    None => row.push((j, w * c)),
                }
            }
        }
        row.sort_by_key(|(j, _)| *j);
        Ok(row)
    }
}

/// The generator `s_γ(x, D, y) = θ_γ(y - x)` with the indicator profile.
pub fn kernel_generator_s(gamma: &[f64]) -> Kernel {
    Kernel {
        dim: gamma.len(),
        terms: vec![KernelTerm { displacement: gamma.to_vec(), coeff: Coefficient::one() }],
        theta: Theta::Indicator,
    }
}

/// The involution `a*(x, D, y) = conj(a(y, D, x))`.
pub fn kernel_adjoint(a: &Kernel) -> Kernel {
    let terms = a
        .terms
        .iter()
        .map(|t| {
            let back = neg(&t.displacement);
            let coeff = if t.displacement.iter().all(|&v| v == 0.0) {
                t.coeff.clone().conj()
            } else {
                Coefficient::At { offset: back.clone(), inner: Box::new(t.coeff.clone()) }.conj()
            };
            KernelTerm { displacement: back, coeff }
        })
        .collect();
    Kernel::new(a.dim, terms, a.theta).expect("adjoint preserves validity")
}

/// The convolution `(a ⋆ b)(x, D, y) = Σ_{z ∈ D} a(x, D, z) b(z, D, y)`.
///
/// Only the unweighted product of indicator kernels is available
/// symbolically; weighted products are formed on matrices instead.
pub fn kernel_convolve(a: &Kernel, b: &Kernel, window_fn: Option<&WindowFn>) -> Result<Kernel> {
    if window_fn.is_some() || a.theta != Theta::Indicator || b.theta != Theta::Indicator {
        return Err(Error::UnsupportedConvolution);
    }
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch { expected: a.dim, got: b.dim });
    }
    let mut terms = Vec::with_capacity(a.terms.len() * b.terms.len());
    for ta in &a.terms {
        for tb in &b.terms {
            let at_z = Coefficient::At {
                offset: ta.displacement.clone(),
                inner: Box::new(tb.coeff.clone()),
            };
            terms.push(KernelTerm {
                displacement: add(&ta.displacement, &tb.displacement),
                coeff: Coefficient::product(ta.coeff.clone(), at_z),
            });
        }
    }
    Kernel::new(a.dim, terms, Theta::Indicator)
}

/// A hopping term `γ ↦ q_γ` of a Schrödinger operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hopping {
    pub displacement: Vec<f64>,
    pub q: PeFunction,
}

/// Data of a strongly pattern equivariant Schrödinger operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchrodingerSpec {
    pub dim: usize,
    pub hoppings: Vec<Hopping>,
    pub potential: PeFunction,
}

/// Assembles
/// `A u(x) = Σ_γ q_γ(x) u(x - γ) + conj(q_γ(x + γ)) u(x + γ) + V(x) u(x)`
/// as a kernel with range `{±γ} ∪ {0}`.
pub fn build_schrodinger(spec: &SchrodingerSpec) -> Result<Kernel> {
    if !spec.potential.is_real() {
        return Err(Error::InvalidOperator("potential must be real-valued".into()));
    }
    let mut terms = vec![KernelTerm {
        displacement: vec![0.0; spec.dim],
        coeff: Coefficient::Table(spec.potential.clone()),
    }];
    for h in &spec.hoppings {
        if h.displacement.len() != spec.dim {
            return Err(Error::DimensionMismatch { expected: spec.dim, got: h.displacement.len() });
        }
        terms.push(KernelTerm {
            displacement: neg(&h.displacement),
            coeff: Coefficient::Table(h.q.clone()),
        });
        terms.push(KernelTerm {
            displacement: h.displacement.clone(),
            coeff: Coefficient::At {
                offset: h.displacement.clone(),
                inner: Box::new(Coefficient::Table(h.q.clone())),
            }
            .conj(),
        });
    }
    Kernel::new(spec.dim, terms, Theta::Indicator)
}
