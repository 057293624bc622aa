use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::measure::EmpiricalMeasure;
use crate::linalg::{norm, sub};
use crate::operators::{eigensolve, represent_weighted, verify_eigen, Boundary, Eigen, OperatorMatrix, SamplingWeight, Weighting};
use crate::pattern::Kernel;
use crate::pointset::PointSet;
use crate::{Error, Result};

/// How the average over the hull is realised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Averaging {
    /// One sampling density centred at the origin.
    Single,
    /// Mean over `count` centres drawn uniformly from `B_spread(0)`.
    Translates { count: usize, seed: u64, spread: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosOptions {
    pub averaging: Averaging,
    /// Extra distance kept between `supp ρ` and the patch boundary (open
    /// boundary only); the kernel's reach is always kept.
    #[serde(default)]
    pub margin: f64,
    #[serde(default = "symmetrized")]
    pub weighting: Weighting,
}

fn symmetrized() -> Weighting {
    Weighting::Symmetrized
}

impl Default for DosOptions {
    fn default() -> Self {
        DosOptions { averaging: Averaging::Single, margin: 0.0, weighting: Weighting::Symmetrized }
    }
}

/// Sampling centres for the given averaging rule.
pub fn sampling_centres(dim: usize, averaging: &Averaging) -> Result<Vec<Vec<f64>>> {
    match *averaging {
        Averaging::Single => Ok(vec![vec![0.0; dim]]),
        Averaging::Translates { count, seed, spread } => {
            if count == 0 || !(spread >= 0.0) {
                return Err(Error::InvalidPlan("translate averaging needs count > 0 and spread ≥ 0".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let c: Vec<f64> = (0..dim).map(|_| spread * (2.0 * rng.random::<f64>() - 1.0)).collect();
                if norm(&c) <= spread {
                    out.push(c);
                }
            }
            Ok(out)
        }
    }
}

/// `ρ(x - c)` summed over the period lattice when the boundary is periodic.
fn sampled_density(rho: &SamplingWeight, x: &[f64], c: &[f64], boundary: &Boundary) -> Result<f64> {
    let y = sub(x, c);
    let Boundary::Periodic { periods } = boundary else {
        return Ok(rho.eval(&y));
    };
    let d = x.len();
    let p = nalgebra::DMatrix::from_fn(d, d, |i, j| periods[j][i]);
    let inv = p.clone().try_inverse().ok_or(Error::MissingPeriods)?;
    let reach = rho.radius() + norm(&y);
    let bounds: Vec<i64> = (0..d)
        .map(|i| ((0..d).map(|j| inv[(i, j)].powi(2)).sum::<f64>().sqrt() * reach).ceil() as i64 + 1)
        .collect();
    let mut n: Vec<i64> = bounds.iter().map(|b| -b).collect();
    let mut total = 0.0;
    loop {
        let shifted: Vec<f64> =
            (0..d).map(|i| y[i] + (0..d).map(|j| p[(i, j)] * n[j] as f64).sum::<f64>()).collect();
        total += rho.eval(&shifted);
        let mut axis = 0;
        loop {
            if axis == d {
                return Ok(total);
            }
            n[axis] += 1;
            if n[axis] <= bounds[axis] {
                break;
            }
            n[axis] = -bounds[axis];
            axis += 1;
        }
    }
}

/// DOS atoms `λ_k` with mass `Σ_x ρ̄(x) w_x |v_k(x)|²`, `ρ̄` the mean of
/// `ρ(· - c)` over the centres.
pub fn dos_from_eigen(
    m: &OperatorMatrix,
    eig: &Eigen,
    rho: &SamplingWeight,
    centres: &[Vec<f64>],
) -> Result<EmpiricalMeasure> {
    rho.validate()?;
    if centres.is_empty() {
        return Err(Error::InvalidPlan("no sampling centres".into()));
    }
    let mut site_mass = vec![0.0; m.dim()];
    for (x, site) in m.sites().iter().enumerate() {
        let mut s = 0.0;
        for c in centres {
            s += sampled_density(rho, site, c, m.boundary())?;
        }
        site_mass[x] = s / centres.len() as f64 * m.weights()[x];
    }
    let active: Vec<usize> = (0..m.dim()).filter(|&x| site_mass[x] > 0.0).collect();
    let atoms = (0..eig.dim())
        .map(|k| {
            let mass: f64 = active.iter().map(|&x| site_mass[x] * eig.weight(k, x)).sum();
            (eig.values[k], mass)
        })
        .collect::<Vec<_>>();
    EmpiricalMeasure::on_line(atoms)
}

/// Density of states of `a` on a weighted patch: assemble, diagonalise and
/// weigh the local spectral measures with `ρ`.
///
/// With an open boundary every centre must keep `supp ρ` inside
/// `B_{R - margin}` where the margin is at least the kernel's reach.
pub fn dos_estimate(
    a: &Kernel,
    patch: &PointSet,
    weights: &[f64],
    rho: &SamplingWeight,
    boundary: &Boundary,
    opts: &DosOptions,
) -> Result<EmpiricalMeasure> {
    dos_estimate_full(a, patch, weights, rho, boundary, opts, false).map(|r| r.2)
}

/// [`dos_estimate`] returning the assembled matrix and its eigen-decomposition
/// as well; with `verify` the eigenpair residuals are checked.
pub fn dos_estimate_full(
    a: &Kernel,
    patch: &PointSet,
    weights: &[f64],
    rho: &SamplingWeight,
    boundary: &Boundary,
    opts: &DosOptions,
    verify: bool,
) -> Result<(OperatorMatrix, Eigen, EmpiricalMeasure)> {
    rho.validate()?;
    let centres = sampling_centres(patch.dim(), &opts.averaging)?;
    if matches!(boundary, Boundary::Open) {
        let margin = opts.margin.max(a.reach());
        for c in &centres {
            let need = norm(c) + rho.radius() + margin;
            if need > patch.radius() {
                return Err(Error::SupportExceedsPatch { need, have: patch.radius() });
            }
        }
    }
    let m = represent_weighted(a, patch, weights, boundary, opts.weighting)?;
    let eig = eigensolve(&m)?;
    if verify {
        verify_eigen(&m, &eig)?;
    }
    let measure = dos_from_eigen(&m, &eig, rho, &centres)?;
    Ok((m, eig, measure))
}
