//! Desk-scale experiments for the double limit: lattices `Γ_q → Γ` first,
//! mollified windows `w_ε ↘ χ_W` second.
//!
//! Every grid cell `(q, ε)` is an independent job; cells run in parallel
//! and are collected in grid order, so reports do not depend on the number
//! of worker threads.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutproject::{
    generate_model_set, nonsingularity_margin, periodicity_lattice, periodicity_lattice_of_scheme,
    rational_approximant, ModelSetPatch, Scheme, Side, WindowFn, SINGULAR_MARGIN,
};
use crate::linalg::norm;
use crate::operators::{eigensolve, represent_weighted, Boundary, SamplingWeight, Weighting};
use crate::pattern::{build_schrodinger, Kernel, SchrodingerSpec, Theta};
use crate::pointset::local_distance;
use crate::spectra::{
    autocorrelation, dos_from_eigen, pair_measure_apply, sampling_centres, weak_star_distance, Averaging,
    EmpiricalMeasure, TestFunction,
};
use crate::{Error, Result};

/// Allowed relative increase between consecutive entries of a trend that
/// should be nonincreasing.
pub const TREND_JITTER: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub scheme: Scheme,
    /// Strictly ascending `q_max` values.
    pub denominators: Vec<i64>,
    /// Strictly descending window widths; a trailing 0 means the sharp window.
    pub epsilons: Vec<f64>,
    #[serde(default = "upper")]
    pub side: Side,
    pub operator: SchrodingerSpec,
    /// Displacement profile used for the operator in every cell.
    #[serde(default = "indicator")]
    pub theta: Theta,
    pub rho: SamplingWeight,
    #[serde(default = "single")]
    pub averaging: Averaging,
    #[serde(default)]
    pub test_functions: Vec<TestFunction>,
    /// Index pairs into `test_functions`; all pairs `i ≤ j` when omitted.
    #[serde(default)]
    pub pairs: Option<Vec<[usize; 2]>>,
    pub radii: RadiusSchedule,
    #[serde(default)]
    pub seed: u64,
}

fn upper() -> Side {
    Side::Upper
}

fn indicator() -> Theta {
    Theta::Indicator
}

fn single() -> Averaging {
    Averaging::Single
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusSchedule {
    /// Patch radius of the (open-boundary) irrational reference.
    pub reference: f64,
    /// Minimal length of the periodic supercell used for approximants.
    pub supercell: f64,
    /// Averaging radius of the autocorrelation estimator.
    pub r_eff: f64,
    /// Displacement cutoff of the autocorrelation estimator.
    pub delta_max: f64,
    /// Patch radius for the hull proxy distance.
    pub hull: f64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidPlan(m.into()));
        if self.denominators.is_empty() || self.epsilons.is_empty() {
            return bad("the grid needs at least one denominator and one epsilon");
        }
        if self.denominators.windows(2).any(|w| w[0] >= w[1]) || self.denominators[0] < 1 {
            return bad("denominators must be positive and strictly ascending");
        }
        if self.epsilons.windows(2).any(|w| w[0] <= w[1]) || self.epsilons.iter().any(|e| !(*e >= 0.0)) {
            return bad("epsilons must be nonnegative and strictly descending");
        }
        if self.side == Side::Sharp {
            return bad("side must be upper or lower");
        }
        if self.operator.dim != self.scheme.d() {
            return bad("operator dimension differs from the scheme");
        }
        self.rho.validate()?;
        for f in &self.test_functions {
            f.validate()?;
            if f.dim() != self.scheme.d() {
                return bad("test function dimension differs from the scheme");
            }
        }
        for p in self.pairs() {
            if p[0] >= self.test_functions.len() || p[1] >= self.test_functions.len() {
                return bad("test-function pair out of range");
            }
        }
        let r = &self.radii;
        for v in [r.reference, r.supercell, r.r_eff, r.hull] {
            if !(v > 0.0) || !v.is_finite() {
                return bad("radii must be positive");
            }
        }
        if !(r.delta_max >= 0.0) {
            return bad("delta_max must be nonnegative");
        }
        Ok(())
    }

    pub fn pairs(&self) -> Vec<[usize; 2]> {
        match &self.pairs {
            Some(p) => p.clone(),
            None => {
                let n = self.test_functions.len();
                (0..n).flat_map(|i| (i..n).map(move |j| [i, j])).collect()
            }
        }
    }

    fn kernel(&self) -> Result<Kernel> {
        build_schrodinger(&self.operator)?.with_theta(self.theta)
    }

    fn window_fn(&self, scheme: &Scheme, eps: f64) -> Result<Option<WindowFn>> {
        let Some(w) = scheme.window() else { return Ok(None) };
        Ok(Some(if eps == 0.0 { WindowFn::sharp(w.clone()) } else { WindowFn::new(w.clone(), eps, self.side)? }))
    }
}

/// Result of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub q: i64,
    pub epsilon: f64,
    /// Denominator actually used by the approximant.
    pub denominator: i64,
    /// Period length (norm of the first period) or `null` if aperiodic.
    pub period: Option<f64>,
    pub supercell_copies: usize,
    pub sites: usize,
    pub dos_mass: Option<f64>,
    pub dos_distance: Option<f64>,
    /// Largest absolute test-function discrepancy.
    pub autocorr_distance: Option<f64>,
    /// Largest discrepancy relative to the reference value.
    pub autocorr_relative: Option<f64>,
    pub autocorr_values: Vec<f64>,
    pub hull_proxy_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReport {
    pub radius: f64,
    pub boundary: String,
    pub sites: usize,
    pub dos_mass: Option<f64>,
    /// Distance between the reference and the same estimate at twice the radius.
    pub dos_stability: Option<f64>,
    pub autocorr_values: Vec<f64>,
    pub autocorr_stability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendCheck {
    pub name: String,
    pub values: Vec<f64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub denominators: Vec<i64>,
    pub epsilons: Vec<f64>,
    pub shift: Vec<f64>,
    pub warnings: Vec<String>,
    pub reference: ReferenceReport,
    /// Cells in row-major order: rows `ε`, columns `q`.
    pub cells: Vec<CellReport>,
    /// For each `ε`, the value at the largest `q` (limit in `q` first).
    pub n_then_l: Vec<f64>,
    /// For each `q`, the value at the smallest `ε` (limit in `ε` first).
    pub l_then_n: Vec<f64>,
    pub trends: Vec<TrendCheck>,
}

impl ConvergenceReport {
    pub fn cell(&self, q: i64, eps: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.q == q && c.epsilon == eps)
    }

    pub fn all_trends_pass(&self) -> bool {
        self.trends.iter().all(|t| t.passed)
    }

    /// Matrix CSV: one row per `ε`, one column per `q`, for the chosen metric.
    pub fn grid_csv(&self, metric: impl Fn(&CellReport) -> Option<f64>) -> String {
        let mut out = String::from("epsilon");
        for q in &self.denominators {
            out.push_str(&format!(",q={q}"));
        }
        out.push('\n');
        for (i, eps) in self.epsilons.iter().enumerate() {
            out.push_str(&crate::spectra::fmt_float(*eps));
            for j in 0..self.denominators.len() {
                let v = metric(&self.cells[i * self.denominators.len() + j]);
                out.push(',');
                if let Some(v) = v {
                    out.push_str(&crate::spectra::fmt_float(v));
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Whether `values` is nonincreasing up to the relative jitter allowance.
pub fn nonincreasing_with_jitter(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + TREND_JITTER))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Parts {
    Dos,
    Autocorr,
    Both,
}

impl Parts {
    fn dos(self) -> bool {
        self != Parts::Autocorr
    }
    fn autocorr(self) -> bool {
        self != Parts::Dos
    }
}

/// Replaces a singular shift by a seeded perturbation of norm `1e-3` of its
/// internal part.
pub fn regularize_shift(scheme: &Scheme, radius: f64, seed: u64) -> Result<(Scheme, Option<String>)> {
    if scheme.m() == 0 {
        return Ok((scheme.clone(), None));
    }
    let margin = nonsingularity_margin(scheme, radius)?;
    if margin > SINGULAR_MARGIN {
        return Ok((scheme.clone(), None));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dir: Vec<f64> = (0..scheme.m()).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
    let n = norm(&dir).max(1e-300);
    dir.iter_mut().for_each(|v| *v *= 1e-3 / n);
    let mut shift = scheme.shift().to_vec();
    for (k, v) in dir.iter().enumerate() {
        shift[scheme.d() + k] += v;
    }
    let perturbed = scheme.with_shift(shift.clone())?;
    Ok((
        perturbed,
        Some(format!(
            "singular shift (margin {margin:e}); internal shift perturbed to {:?}",
            &shift[scheme.d()..]
        )),
    ))
}

struct Estimate {
    sites: usize,
    dos: Option<EmpiricalMeasure>,
    autocorr: Vec<f64>,
}

/// Estimates on the model set of `scheme` with window function `wf`.
/// Periodic schemes use a supercell of length at least `supercell`.
fn estimate(
    plan: &ExperimentPlan,
    kernel: &Kernel,
    scheme: &Scheme,
    period: Option<&[Vec<f64>]>,
    wf: Option<&WindowFn>,
    scale: f64,
    parts: Parts,
) -> Result<(Estimate, usize)> {
    let open_radius = scale * plan.radii.reference;
    let mut copies = 0;
    let dos = if parts.dos() {
        let (patch, boundary) = match period {
            Some(periods) => {
                let len = periods.iter().map(|p| norm(p)).fold(f64::INFINITY, f64::min);
                copies = (plan.radii.supercell / len).ceil().max(1.0) as usize;
                let scaled: Vec<Vec<f64>> =
                    periods.iter().map(|p| p.iter().map(|v| v * copies as f64).collect()).collect();
                let circum: f64 = 0.5 * scaled.iter().map(|p| norm(p)).sum::<f64>();
                let patch = generate_model_set(scheme, circum + kernel.reach() + 1.0, wf)?;
                (patch, Boundary::Periodic { periods: scaled })
            }
            None => {
                let need = plan.rho.radius() + kernel.reach();
                if need > open_radius {
                    return Err(Error::SupportExceedsPatch { need, have: open_radius });
                }
                (generate_model_set(scheme, open_radius, wf)?, Boundary::Open)
            }
        };
        let ModelSetPatch { points, weights, .. } = patch;
        let m = represent_weighted(kernel, &points, &weights, &boundary, Weighting::Lifted)?;
        let eig = eigensolve(&m)?;
        let centres = sampling_centres(scheme.d(), &plan.averaging)?;
        Some((dos_from_eigen(&m, &eig, &plan.rho, &centres)?, m.dim()))
    } else {
        None
    };
    let autocorr = if parts.autocorr() && !plan.test_functions.is_empty() {
        let r_eff = scale * plan.radii.r_eff;
        let patch = generate_model_set(scheme, r_eff + plan.radii.delta_max, wf)?;
        let gamma = autocorrelation(&patch.points, &patch.weights, r_eff, plan.radii.delta_max)?;
        plan.pairs()
            .iter()
            .map(|&[i, j]| pair_measure_apply(&gamma, &plan.test_functions[i], &plan.test_functions[j]))
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    let sites = dos.as_ref().map_or(0, |d| d.1);
    Ok((Estimate { sites, dos: dos.map(|d| d.0), autocorr }, copies))
}

/// Local distance between the sharp-window patches of two schemes.
pub fn hull_proxy_distance(a: &Scheme, b: &Scheme, radius: f64) -> Result<f64> {
    let pa = generate_model_set(a, radius, None)?;
    let pb = generate_model_set(b, radius, None)?;
    local_distance(&pa.points, &pb.points)
}

fn run(plan: &ExperimentPlan, parts: Parts) -> Result<ConvergenceReport> {
    plan.validate()?;
    let mut warnings = Vec::new();
    let (scheme, note) = regularize_shift(&plan.scheme, 2.0 * plan.radii.reference, plan.seed)?;
    warnings.extend(note);
    let kernel = plan.kernel()?;

    // Reference: the sharp window on the scheme itself, at R and 2R.
    let own_period = periodicity_lattice_of_scheme(&scheme).map(|p| p.periods);
    let sharp = plan.window_fn(&scheme, 0.0)?;
    let radius = plan.radii.reference;
    let refs: Vec<Estimate> = [1.0, 2.0]
        .par_iter()
        .map(|&k| {
            // a periodic reference is exact already
            if k > 1.0 && own_period.is_some() {
                return Ok(None);
            }
            estimate(plan, &kernel, &scheme, own_period.as_deref(), sharp.as_ref(), k, parts)
                .map(|e| Some(e.0))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let reference = &refs[0];
    let doubled = refs.get(1);
    let dos_stability = match (&reference.dos, doubled.and_then(|d| d.dos.as_ref())) {
        (Some(a), Some(b)) => Some(weak_star_distance(&a.normalized()?, &b.normalized()?)?),
        _ => None,
    };
    let autocorr_stability = doubled
        .filter(|d| !d.autocorr.is_empty())
        .map(|d| max_relative(&d.autocorr, &reference.autocorr));
    let reference_report = ReferenceReport {
        radius,
        boundary: if own_period.is_some() { "periodic".into() } else { "open".into() },
        sites: reference.sites,
        dos_mass: reference.dos.as_ref().map(|m| m.total_mass()),
        dos_stability,
        autocorr_values: reference.autocorr.clone(),
        autocorr_stability,
    };
    let reference_dos = reference.dos.as_ref().map(|m| m.normalized()).transpose()?;

    let jobs: Vec<(f64, i64)> =
        plan.epsilons.iter().flat_map(|&e| plan.denominators.iter().map(move |&q| (e, q))).collect();
    let cells: Vec<CellReport> = jobs
        .par_iter()
        .map(|&(eps, q)| -> Result<CellReport> {
            let rs = rational_approximant(&scheme, q)?;
            let approx = rs.scheme();
            let period = periodicity_lattice(&rs).map(|p| p.periods);
            let wf = plan.window_fn(&approx, eps)?;
            let (est, copies) =
                estimate(plan, &kernel, &approx, period.as_deref(), wf.as_ref(), 1.0, parts)?;
            let dos_distance = match (&est.dos, &reference_dos) {
                (Some(m), Some(r)) => Some(weak_star_distance(&m.normalized()?, r)?),
                _ => None,
            };
            let (autocorr_distance, autocorr_relative) = if est.autocorr.is_empty() {
                (None, None)
            } else {
                let abs = est
                    .autocorr
                    .iter()
                    .zip(&reference.autocorr)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                (Some(abs), Some(max_relative(&est.autocorr, &reference.autocorr)))
            };
            Ok(CellReport {
                q,
                epsilon: eps,
                denominator: rs.denominator(),
                period: period.as_ref().map(|p| norm(&p[0])),
                supercell_copies: copies,
                sites: est.sites,
                dos_mass: est.dos.as_ref().map(|m| m.total_mass()),
                dos_distance,
                autocorr_distance,
                autocorr_relative,
                autocorr_values: est.autocorr,
                hull_proxy_distance: hull_proxy_distance(&scheme, &approx, plan.radii.hull)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let nq = plan.denominators.len();
    let ne = plan.epsilons.len();
    let metric = |c: &CellReport| -> f64 {
        match parts {
            Parts::Autocorr => c.autocorr_relative.unwrap_or(0.0),
            _ => c.dos_distance.unwrap_or(0.0),
        }
    };
    let n_then_l: Vec<f64> = (0..ne).map(|i| metric(&cells[i * nq + nq - 1])).collect();
    let l_then_n: Vec<f64> = (0..nq).map(|j| metric(&cells[(ne - 1) * nq + j])).collect();

    let mut trends = Vec::new();
    let mut push_trends = |label: &str, value: &dyn Fn(&CellReport) -> Option<f64>| {
        for (i, eps) in plan.epsilons.iter().enumerate() {
            let values: Vec<f64> = (0..nq).filter_map(|j| value(&cells[i * nq + j])).collect();
            if values.len() == nq {
                trends.push(TrendCheck {
                    name: format!("{label} nonincreasing in q at epsilon={eps}"),
                    passed: nonincreasing_with_jitter(&values),
                    values,
                });
            }
        }
        let values: Vec<f64> = (0..ne).filter_map(|i| value(&cells[i * nq + nq - 1])).collect();
        if values.len() == ne {
            trends.push(TrendCheck {
                name: format!("{label} nonincreasing in epsilon at q={}", plan.denominators[nq - 1]),
                passed: nonincreasing_with_jitter(&values),
                values,
            });
        }
    };
    if parts.dos() {
        push_trends("dos distance", &|c| c.dos_distance);
    }
    if parts.autocorr() && !plan.test_functions.is_empty() {
        push_trends("autocorrelation discrepancy", &|c| c.autocorr_relative);
    }
    let hull: Vec<f64> = (0..nq).map(|j| cells[j].hull_proxy_distance).collect();
    trends.push(TrendCheck {
        name: "hull proxy distance nonincreasing in q".into(),
        passed: nonincreasing_with_jitter(&hull),
        values: hull,
    });

    Ok(ConvergenceReport {
        denominators: plan.denominators.clone(),
        epsilons: plan.epsilons.clone(),
        shift: scheme.shift().to_vec(),
        warnings,
        reference: reference_report,
        cells,
        n_then_l,
        l_then_n,
        trends,
    })
}

fn max_relative(values: &[f64], reference: &[f64]) -> f64 {
    values
        .iter()
        .zip(reference)
        .map(|(a, b)| if *b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() })
        .fold(0.0, f64::max)
}

/// DOS distances of every cell to the sharp irrational reference.
pub fn run_dos_convergence(plan: &ExperimentPlan) -> Result<ConvergenceReport> {
    run(plan, Parts::Dos)
}

/// Autocorrelation discrepancies of every cell against the reference.
pub fn run_autocorr_convergence(plan: &ExperimentPlan) -> Result<ConvergenceReport> {
    run(plan, Parts::Autocorr)
}

/// Both experiments on one grid.
pub fn run_convergence(plan: &ExperimentPlan) -> Result<ConvergenceReport> {
    run(plan, Parts::Both)
}
