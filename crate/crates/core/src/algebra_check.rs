//! Randomized checks that the kernel algebra is represented faithfully:
//! convolution ↦ matrix product, involution ↦ adjoint, the generator
//! identities, translation equivariance and self-adjointness of
//! Schrödinger operators.

use std::collections::BTreeMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cutproject::{generate_model_set, Scheme, GOLDEN};
use crate::linalg::{add, norm};
use crate::pattern::{
    build_schrodinger, kernel_adjoint, kernel_convolve, kernel_generator_s, pe_from_patch_list, Coefficient,
    Hopping, Kernel, KernelTerm, PeFunction, SchrodingerSpec, Theta,
};
use crate::pointset::{ball_inside, enumerate_patch_classes, round_to_grid, translate, PointSet};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgebraCheckConfig {
    #[serde(default = "default_kernels")]
    pub kernels: usize,
    #[serde(default = "default_translates")]
    pub translates: usize,
    #[serde(default = "default_z_radius")]
    pub z_radius: f64,
    #[serde(default = "default_fib_radius")]
    pub fibonacci_radius: f64,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    /// Extra one-dimensional kernels that must be self-adjoint on both patches.
    #[serde(default)]
    pub self_adjoint: Vec<Kernel>,
}

fn default_kernels() -> usize {
    20
}
fn default_translates() -> usize {
    10
}
fn default_z_radius() -> f64 {
    50.0
}
fn default_fib_radius() -> f64 {
    100.0
}
fn default_tol() -> f64 {
    1e-12
}

impl Default for AlgebraCheckConfig {
    fn default() -> Self {
        AlgebraCheckConfig {
            kernels: default_kernels(),
            translates: default_translates(),
            z_radius: default_z_radius(),
            fibonacci_radius: default_fib_radius(),
            tolerance: default_tol(),
            seed: 0,
            self_adjoint: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub family: String,
    pub check: String,
    /// Number of kernels (or translates) the check ran over.
    pub cases: usize,
    /// Number of matrix entries compared.
    pub entries: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraReport {
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

/// Sparse rows of a kernel on a patch, for the points whose row is fully
/// determined.
type Rows = BTreeMap<usize, BTreeMap<usize, Complex64>>;

fn rows(a: &Kernel, patch: &PointSet, sites: impl Iterator<Item = usize>) -> Result<Rows> {
    let mut out = Rows::new();
    for i in sites {
        out.insert(i, a.row(patch, i)?.into_iter().collect());
    }
    Ok(out)
}

fn determined(patch: &PointSet, r: f64) -> impl Iterator<Item = usize> + '_ {
    (0..patch.len()).filter(move |&i| ball_inside(patch, patch.point(i), r))
}

/// Largest deviation between two sparse rows (missing entries are zero).
fn row_error(a: &BTreeMap<usize, Complex64>, b: &BTreeMap<usize, Complex64>) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    a.keys()
        .chain(b.keys())
        .map(|k| (a.get(k).copied().unwrap_or(zero) - b.get(k).copied().unwrap_or(zero)).norm())
        .fold(0.0, f64::max)
}

struct Tally {
    cases: usize,
    entries: usize,
    max_error: f64,
}

impl Tally {
    fn new() -> Self {
        Tally { cases: 0, entries: 0, max_error: 0.0 }
    }

    fn add_row(&mut self, a: &BTreeMap<usize, Complex64>, b: &BTreeMap<usize, Complex64>) {
        self.entries += a.len().max(b.len());
        self.max_error = self.max_error.max(row_error(a, b));
    }

    fn finish(self, family: &str, check: &str, tolerance: f64) -> CheckResult {
        CheckResult {
            family: family.into(),
            check: check.into(),
            cases: self.cases,
            entries: self.entries,
            max_error: self.max_error,
            tolerance,
            // a check that compared nothing proves nothing
            passed: self.entries > 0 && self.max_error <= tolerance,
        }
    }
}

/// `λ(a ⋆ b) = λ(a) λ(b)` on sites whose neighbourhood is inside the patch.
pub fn homomorphism_error(a: &Kernel, b: &Kernel, patch: &PointSet) -> Result<(usize, f64)> {
    let ab = kernel_convolve(a, b, None)?;
    let inner = a.reach().max(ab.reach()) + b.reach() + a.influence_radius();
    let interior: Vec<usize> = determined(patch, inner).collect();
    let ra = rows(a, patch, interior.iter().copied())?;
    let rab = rows(&ab, patch, interior.iter().copied())?;
    let mut rb = Rows::new();
    let mut tally = Tally::new();
    for &i in &interior {
        let mut prod: BTreeMap<usize, Complex64> = BTreeMap::new();
        for (&j, &aij) in &ra[&i] {
            if !rb.contains_key(&j) {
                rb.insert(j, b.row(patch, j)?.into_iter().collect());
            }
            for (&k, &bjk) in &rb[&j] {
                *prod.entry(k).or_default() += aij * bjk;
            }
        }
        tally.add_row(&rab[&i], &prod);
    }
    Ok((tally.entries, tally.max_error))
}

/// `λ(a*) = λ(a)*` on sites whose neighbourhood is inside the patch.
pub fn adjoint_error(a: &Kernel, patch: &PointSet) -> Result<(usize, f64)> {
    let adj = kernel_adjoint(a);
    let inner = adj.reach() + a.reach() + a.influence_radius();
    let interior: Vec<usize> = determined(patch, inner).collect();
    let radj = rows(&adj, patch, interior.iter().copied())?;
    let ra = rows(a, patch, determined(patch, a.reach()))?;
    let mut tally = Tally::new();
    for &i in &interior {
        let mut col: BTreeMap<usize, Complex64> = BTreeMap::new();
        for j in patch.within(patch.point(i), a.influence_radius() + a.theta().reach()) {
            if let Some(v) = ra[&j].get(&i) {
                col.insert(j, v.conj());
            }
        }
        tally.add_row(&radj[&i], &col);
    }
    Ok((tally.entries, tally.max_error))
}

/// Operator rows on `translate(patch, t)` against the rows on `patch`
/// conjugated by the point relabelling.
pub fn equivariance_error(a: &Kernel, patch: &PointSet, t: &[f64]) -> Result<(usize, f64)> {
    let moved = translate(patch, t)?;
    let relabel = |k: usize| -> Result<usize> {
        let x = add(moved.point(k), t);
        patch.find(&x).ok_or(Error::NotInPatch(x))
    };
    let mut tally = Tally::new();
    for k in determined(&moved, a.reach()) {
        let here: BTreeMap<usize, Complex64> =
            a.row(&moved, k)?.into_iter().map(|(j, v)| Ok((relabel(j)?, v))).collect::<Result<_>>()?;
        let there: BTreeMap<usize, Complex64> = a.row(patch, relabel(k)?)?.into_iter().collect();
        tally.add_row(&here, &there);
    }
    Ok((tally.entries, tally.max_error))
}

/// Deviation of the assembled rows from Hermitian symmetry on the interior.
pub fn self_adjointness_error(a: &Kernel, patch: &PointSet) -> Result<(usize, f64)> {
    let ra = rows(a, patch, determined(patch, a.reach()))?;
    let inner = 2.0 * a.reach();
    let mut tally = Tally::new();
    for i in determined(patch, inner) {
        let transposed: BTreeMap<usize, Complex64> = ra
            .iter()
            .filter_map(|(&j, row)| row.get(&i).map(|v| (j, v.conj())))
            .collect();
        tally.add_row(&ra[&i], &transposed);
    }
    Ok((tally.entries, tally.max_error))
}

struct Family {
    name: &'static str,
    patch: PointSet,
    /// Displacements occurring in the patch, up to length 3.
    displacements: Vec<Vec<f64>>,
    pe_radius: f64,
}

impl Family {
    fn integers(radius: f64) -> Result<Self> {
        let patch = PointSet::arithmetic(1.0, 0.0, radius)?;
        let displacements = (-3..=3).map(|k| vec![k as f64]).collect();
        Ok(Family { name: "Z", patch, displacements, pe_radius: 1.5 })
    }

    fn fibonacci(radius: f64) -> Result<Self> {
        let patch = generate_model_set(&Scheme::fibonacci(0.123), radius, None)?.points;
        let mut seen: BTreeMap<Vec<i64>, Vec<f64>> = BTreeMap::new();
        for i in determined(&patch, 3.0) {
            for j in patch.within(patch.point(i), 3.0) {
                let v: Vec<f64> = patch.point(j).iter().zip(patch.point(i)).map(|(a, b)| a - b).collect();
                seen.entry(round_to_grid(&v)).or_insert(v);
            }
        }
        let displacements = seen.into_values().collect();
        Ok(Family { name: "Fibonacci", patch, displacements, pe_radius: 1.0 + GOLDEN })
    }

    fn random_pe(&self, rng: &mut ChaCha8Rng, real: bool) -> Result<PeFunction> {
        let classes = enumerate_patch_classes(&self.patch, self.pe_radius)?;
        let mut value = || {
            let re = rng.random_range(-1.0..1.0);
            let im = if real { 0.0 } else { rng.random_range(-1.0..1.0) };
            Complex64::new(re, im)
        };
        let default = value();
        let pairs = classes.into_iter().map(|(c, _)| (c, value())).collect();
        pe_from_patch_list(pairs, self.pe_radius, default)
    }

    fn random_kernel(&self, rng: &mut ChaCha8Rng) -> Result<Kernel> {
        let n = rng.random_range(1..=4usize);
        let mut terms = Vec::with_capacity(n);
        for _ in 0..n {
            let displacement = self.displacements[rng.random_range(0..self.displacements.len())].clone();
            let coeff = match rng.random_range(0..3u8) {
                0 => Coefficient::Const(Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
                1 => Coefficient::Table(self.random_pe(rng, false)?),
                _ => Coefficient::Conj(Box::new(Coefficient::Table(self.random_pe(rng, false)?))),
            };
            terms.push(KernelTerm { displacement, coeff });
        }
        Kernel::new(self.patch.dim(), terms, Theta::Indicator)
    }

    fn random_schrodinger(&self, rng: &mut ChaCha8Rng) -> Result<Kernel> {
        let positive: Vec<&Vec<f64>> = self.displacements.iter().filter(|d| d[0] > 0.0).collect();
        let hoppings = (0..2)
            .map(|_| {
                Ok(Hopping {
                    displacement: positive[rng.random_range(0..positive.len())].clone(),
                    q: self.random_pe(rng, false)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        build_schrodinger(&SchrodingerSpec { dim: 1, hoppings, potential: self.random_pe(rng, true)? })
    }
}

/// The generator identities on a patch, compared exactly:
/// `s_γ* ⋆ s_γ = [x - γ ∈ D] s_0`, `s_γ ⋆ s_γ* = [x + γ ∈ D] s_0` and
/// `s_γ ⋆ s_η = [x + γ ∈ D] s_{γ+η}`.
fn generator_identities(family: &Family) -> Result<Tally> {
    let patch = &family.patch;
    let occurs = |x: &[f64], g: &[f64]| patch.within(&add(x, g), 1e-9).next().is_some();
    let mut tally = Tally::new();
    let basic: Vec<&Vec<f64>> = family.displacements.iter().filter(|d| d[0] > 0.0 && norm(d) <= 2.0).collect();
    for g in &basic {
        for h in &basic {
            tally.cases += 1;
            let sg = kernel_generator_s(g);
            let sh = kernel_generator_s(h);
            let cases = [
                (kernel_convolve(&kernel_adjoint(&sg), &sg, None)?, vec![0.0], g.iter().map(|v| -v).collect::<Vec<_>>()),
                (kernel_convolve(&sg, &kernel_adjoint(&sg), None)?, vec![0.0], g.to_vec()),
                (kernel_convolve(&sg, &sh, None)?, add(g, h), g.to_vec()),
            ];
            for (k, shift, gate) in cases {
                let reach = k.reach() + 5.0;
                for i in determined(patch, reach) {
                    let x = patch.point(i);
                    let got: BTreeMap<usize, Complex64> = k.row(patch, i)?.into_iter().collect();
                    let mut want = BTreeMap::new();
                    if occurs(x, &gate) {
                        if let Some(j) = patch.within(&add(x, &shift), 1e-9).next() {
                            want.insert(j, Complex64::new(1.0, 0.0));
                        }
                    }
                    tally.add_row(&got, &want);
                }
            }
        }
    }
    Ok(tally)
}

/// Runs the whole suite on a ℤ patch and a Fibonacci patch.
pub fn run_algebra_check(cfg: &AlgebraCheckConfig) -> Result<AlgebraReport> {
    if cfg.kernels == 0 || !(cfg.tolerance >= 0.0) {
        return Err(Error::InvalidPlan("algebra check needs at least one kernel and a tolerance ≥ 0".into()));
    }
    let families = [Family::integers(cfg.z_radius)?, Family::fibonacci(cfg.fibonacci_radius)?];
    let mut checks = Vec::new();
    for (f_idx, family) in families.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(f_idx as u64 + 1)));
        let kernels = (0..cfg.kernels).map(|_| family.random_kernel(&mut rng)).collect::<Result<Vec<_>>>()?;

        let mut hom = Tally::new();
        let mut adj = Tally::new();
        for (k, a) in kernels.iter().enumerate() {
            let b = &kernels[(k + 1) % kernels.len()];
            let (n, e) = homomorphism_error(a, b, &family.patch)?;
            hom.cases += 1;
            hom.entries += n;
            hom.max_error = hom.max_error.max(e);
            let (n, e) = adjoint_error(a, &family.patch)?;
            adj.cases += 1;
            adj.entries += n;
            adj.max_error = adj.max_error.max(e);
        }
        checks.push(hom.finish(family.name, "homomorphism", cfg.tolerance));
        checks.push(adj.finish(family.name, "adjoint", cfg.tolerance));

        checks.push(generator_identities(family)?.finish(family.name, "generator identities", 0.0));

        let mut eq = Tally::new();
        let max_shift = family.patch.radius() / 4.0;
        for k in 0..cfg.translates {
            let t = vec![rng.random_range(-max_shift..max_shift)];
            let (n, e) = equivariance_error(&kernels[k % kernels.len()], &family.patch, &t)?;
            eq.cases += 1;
            eq.entries += n;
            eq.max_error = eq.max_error.max(e);
        }
        checks.push(eq.finish(family.name, "translation equivariance", cfg.tolerance));

        let mut sa = Tally::new();
        for _ in 0..cfg.kernels {
            let h = family.random_schrodinger(&mut rng)?;
            let (n, e) = self_adjointness_error(&h, &family.patch)?;
            sa.cases += 1;
            sa.entries += n;
            sa.max_error = sa.max_error.max(e);
        }
        checks.push(sa.finish(family.name, "schrodinger self-adjointness", cfg.tolerance));

        for (k, a) in cfg.self_adjoint.iter().enumerate() {
            if a.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: a.dim() });
            }
            let mut t = Tally::new();
            let (n, e) = self_adjointness_error(a, &family.patch)?;
            t.cases = 1;
            t.entries = n;
            t.max_error = e;
            checks.push(t.finish(family.name, &format!("configured kernel {k} self-adjointness"), cfg.tolerance));
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(AlgebraReport { seed: cfg.seed, checks, passed })
}
