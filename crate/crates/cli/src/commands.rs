use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use modelset::algebra_check::run_algebra_check;
use modelset::cutproject::{
    generate_model_set, periodicity_lattice, periodicity_lattice_of_scheme, rational_approximant, Scheme,
    WindowFn,
};
use modelset::harness::{regularize_shift, run_convergence};
use modelset::operators::Boundary;
use modelset::pointset::enumerate_patch_classes;
use modelset::spectra::{
    autocorrelation, dos_estimate_full, fmt_float, ids, pair_measure_apply, DosOptions,
};
use modelset::CLASS_GRID;

use crate::config::{missing, BoundaryChoice, Config, GenerateSection};
use crate::CliError;

/// Settings shared by every command after flag overrides are applied.
pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.path(name);
        File::create(&p)
            .map(BufWriter::new)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Numerical(e.to_string()))?;
        writeln!(w).and_then(|_| w.flush()).map_err(io_error)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_error)
    }
}

fn io_error(e: std::io::Error) -> CliError {
    CliError::Config(format!("write failed: {e}"))
}

fn csv_writer(w: BufWriter<File>) -> csv::Writer<BufWriter<File>> {
    csv::Writer::from_writer(w)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Config(format!("write failed: {e}"))
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn window_fn(cfg: &Config, scheme: &Scheme) -> Result<Option<WindowFn>, CliError> {
    match (&cfg.window, scheme.window()) {
        (None, w) => Ok(w.cloned().map(WindowFn::sharp)),
        (Some(_), None) => Err(CliError::Config("`window` given but the scheme has no internal space".into())),
        (Some(spec), Some(w)) => Ok(Some(WindowFn::new(w.clone(), spec.epsilon, spec.side)?)),
    }
}

/// The configured scheme, with a singular shift replaced by a seeded
/// perturbation.
fn regular_scheme(cfg: &Config, ctx: &Context, radius: f64) -> Result<(Scheme, Vec<String>), CliError> {
    let (scheme, note) = regularize_shift(cfg.scheme()?, radius, ctx.seed)?;
    let warnings: Vec<String> = note.into_iter().collect();
    warn(&warnings);
    Ok((scheme, warnings))
}

#[derive(Serialize)]
struct PatchFile<'a> {
    scheme: &'a Scheme,
    radius: f64,
    window_function: Option<&'a WindowFn>,
    warnings: &'a [String],
    points: &'a [Vec<f64>],
    weights: &'a [f64],
    internal: &'a [Vec<f64>],
    labels: &'a [Vec<i64>],
}

pub fn generate(cfg: &Config, ctx: &Context) -> Result<(), CliError> {
    let radius = cfg.radius()?;
    let section = cfg.generate.clone().unwrap_or_default();
    let (scheme, warnings) = regular_scheme(cfg, ctx, radius)?;
    let wf = window_fn(cfg, &scheme)?;
    let patch = generate_model_set(&scheme, radius, wf.as_ref())?;
    ctx.write_json(
        "patch.json",
        &PatchFile {
            scheme: &scheme,
            radius,
            window_function: wf.as_ref(),
            warnings: &warnings,
            points: patch.points.points(),
            weights: &patch.weights,
            internal: &patch.internal,
            labels: &patch.labels,
        },
    )?;

    if scheme.d() == 1 {
        let pts = patch.points.points();
        let mut gaps: BTreeMap<i64, (f64, usize)> = BTreeMap::new();
        for w in pts.windows(2) {
            let g = w[1][0] - w[0][0];
            gaps.entry((g / CLASS_GRID).round() as i64).or_insert((g, 0)).1 += 1;
        }
        let total = pts.len().saturating_sub(1).max(1) as f64;
        let mut w = csv_writer(ctx.create("gaps.csv")?);
        w.write_record(["gap", "count", "frequency"]).map_err(csv_error)?;
        for (g, n) in gaps.values() {
            w.write_record([fmt_float(*g), n.to_string(), fmt_float(*n as f64 / total)]).map_err(csv_error)?;
        }
        w.flush().map_err(io_error)?;
    }

    write_classes(ctx, &patch.points, &section)?;
    println!("generated {} points (radius {radius})", patch.points.len());
    Ok(())
}

fn write_classes(
    ctx: &Context,
    patch: &modelset::pointset::PointSet,
    section: &GenerateSection,
) -> Result<(), CliError> {
    let classes = enumerate_patch_classes(patch, section.class_radius)?;
    let total: usize = classes.iter().map(|c| c.1).sum();
    let mut w = csv_writer(ctx.create("classes.csv")?);
    w.write_record(["class", "radius", "count", "frequency", "points", "signature"]).map_err(csv_error)?;
    for (k, (class, n)) in classes.iter().enumerate() {
        let signature: Vec<String> = class
            .signature()
            .iter()
            .map(|v| v.iter().map(|x| fmt_float(*x)).collect::<Vec<_>>().join(" "))
            .collect();
        w.write_record([
            k.to_string(),
            fmt_float(section.class_radius),
            n.to_string(),
            fmt_float(*n as f64 / total as f64),
            class.len().to_string(),
            signature.join(";"),
        ])
        .map_err(csv_error)?;
    }
    w.flush().map_err(io_error)
}

#[derive(Serialize)]
struct DosSummary {
    scheme: Scheme,
    denominator: Option<i64>,
    boundary: Boundary,
    patch_radius: f64,
    sites: usize,
    total_mass: f64,
    atoms: usize,
    spectrum_min: f64,
    spectrum_max: f64,
    warnings: Vec<String>,
}

pub fn dos(cfg: &Config, ctx: &Context) -> Result<(), CliError> {
    let section = cfg.dos.as_ref().ok_or_else(|| missing("dos"))?;
    let radius = cfg.radius()?;
    let (base, warnings) = regular_scheme(cfg, ctx, radius)?;
    let (scheme, period, denominator) = match section.approximant {
        Some(q) => {
            let rs = rational_approximant(&base, q)?;
            (rs.scheme(), periodicity_lattice(&rs).map(|p| p.periods), Some(rs.denominator()))
        }
        None => {
            let p = periodicity_lattice_of_scheme(&base).map(|p| p.periods);
            (base, p, None)
        }
    };
    let kernel = cfg.kernel()?;
    let wf = window_fn(cfg, &scheme)?;
    let (boundary, patch_radius) = match &section.boundary {
        BoundaryChoice::Open => (Boundary::Open, radius),
        BoundaryChoice::Periodic { periods } => (Boundary::Periodic { periods: periods.clone() }, radius),
        BoundaryChoice::Auto { min_length } => match &period {
            None => (Boundary::Open, radius),
            Some(periods) => {
                let shortest = periods.iter().map(|p| norm(p)).fold(f64::INFINITY, f64::min);
                let copies = (min_length / shortest).ceil().max(1.0);
                let scaled: Vec<Vec<f64>> = periods.iter().map(|p| p.iter().map(|v| v * copies).collect()).collect();
                let half: f64 = 0.5 * scaled.iter().map(|p| norm(p)).sum::<f64>();
                (Boundary::Periodic { periods: scaled }, half + kernel.reach() + 1.0)
            }
        },
    };
    let patch = generate_model_set(&scheme, patch_radius, wf.as_ref())?;
    let opts = DosOptions { averaging: section.averaging.clone(), margin: section.margin, weighting: section.weighting };
    let (matrix, _, measure) =
        dos_estimate_full(&kernel, &patch.points, &patch.weights, &section.rho, &boundary, &opts, true)?;
    if section.dump_matrix {
        matrix.dump(&ctx.path("matrix")).map_err(io_error)?;
    }

    measure.write_csv(ctx.create("dos_atoms.csv")?)?;
    let f = ids(&measure)?;
    let locs = f.locations();
    let (lo, hi) = (locs.first().copied().unwrap_or(0.0), locs.last().copied().unwrap_or(0.0));
    let pad = 0.05 * (hi - lo).max(1.0);
    let n = section.ids_points.max(2);
    let grid: Vec<f64> = (0..n).map(|k| lo - pad + (hi - lo + 2.0 * pad) * k as f64 / (n - 1) as f64).collect();
    f.write_grid_csv(&grid, ctx.create("ids.csv")?)?;
    ctx.write_json(
        "dos_summary.json",
        &DosSummary {
            scheme,
            denominator,
            boundary,
            patch_radius,
            sites: matrix.dim(),
            total_mass: measure.total_mass(),
            atoms: measure.atoms().len(),
            spectrum_min: lo,
            spectrum_max: hi,
            warnings,
        },
    )?;
    println!("dos: {} sites, {} atoms, mass {}", matrix.dim(), measure.atoms().len(), fmt_float(measure.total_mass()));
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn autocorr(cfg: &Config, ctx: &Context) -> Result<(), CliError> {
    let section = cfg.autocorr.as_ref().ok_or_else(|| missing("autocorr"))?;
    let radius = section.r_eff + section.delta_max;
    let (scheme, warnings) = regular_scheme(cfg, ctx, radius)?;
    let wf = window_fn(cfg, &scheme)?;
    let patch = generate_model_set(&scheme, radius, wf.as_ref())?;
    let gamma = autocorrelation(&patch.points, &patch.weights, section.r_eff, section.delta_max)?;
    gamma.write_csv(ctx.create("autocorr_atoms.csv")?)?;

    let n = section.test_functions.len();
    let pairs: Vec<[usize; 2]> = match &section.pairs {
        Some(p) => p.clone(),
        None => (0..n).flat_map(|i| (i..n).map(move |j| [i, j])).collect(),
    };
    if let Some(p) = pairs.iter().find(|p| p[0] >= n || p[1] >= n) {
        return Err(CliError::Config(format!("test-function pair {p:?} out of range")));
    }
    let mut w = csv_writer(ctx.create("autocorr_pairs.csv")?);
    w.write_record(["i", "j", "value"]).map_err(csv_error)?;
    for [i, j] in pairs {
        let v = pair_measure_apply(&gamma, &section.test_functions[i], &section.test_functions[j])?;
        w.write_record([i.to_string(), j.to_string(), fmt_float(v)]).map_err(csv_error)?;
    }
    w.flush().map_err(io_error)?;
    if !warnings.is_empty() {
        ctx.write_json("autocorr_warnings.json", &warnings)?;
    }
    println!("autocorrelation: {} atoms from {} points", gamma.atoms().len(), patch.points.len());
    Ok(())
}

pub fn converge(cfg: &Config, ctx: &Context, seed_flag: Option<u64>, radius_flag: Option<f64>) -> Result<(), CliError> {
    let mut plan = cfg.plan.clone().ok_or_else(|| missing("plan"))?;
    if let Some(s) = seed_flag.or(cfg.seed) {
        plan.seed = s;
    }
    if let Some(r) = radius_flag {
        plan.radii.reference = r;
    }
    let report = run_convergence(&plan)?;
    warn(&report.warnings);
    ctx.write_json("convergence.json", &report)?;
    ctx.write_text("dos_grid.csv", &report.grid_csv(|c| c.dos_distance))?;
    ctx.write_text("autocorr_grid.csv", &report.grid_csv(|c| c.autocorr_distance))?;
    ctx.write_text("autocorr_relative_grid.csv", &report.grid_csv(|c| c.autocorr_relative))?;
    ctx.write_text("hull_grid.csv", &report.grid_csv(|c| Some(c.hull_proxy_distance)))?;
    for t in &report.trends {
        println!("{} {}", if t.passed { "PASS" } else { "FAIL" }, t.name);
    }
    if report.all_trends_pass() {
        Ok(())
    } else {
        Err(CliError::Assertion("trend assertions failed".into()))
    }
}

pub fn algebra_check(cfg: &Config, ctx: &Context, seed_flag: Option<u64>) -> Result<(), CliError> {
    let mut check = cfg.algebra_check.clone().unwrap_or_default();
    if let Some(s) = seed_flag.or(cfg.seed) {
        check.seed = s;
    }
    let report = run_algebra_check(&check)?;
    ctx.write_json("algebra_check.json", &report)?;
    for c in &report.checks {
        println!(
            "{} {} {}: max error {:e} over {} entries",
            if c.passed { "PASS" } else { "FAIL" },
            c.family,
            c.check,
            c.max_error,
            c.entries
        );
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Assertion("kernel-algebra identities violated".into()))
    }
}

pub fn ensure_dir(p: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(p).map_err(|e| CliError::Config(format!("cannot create {}: {e}", p.display())))
}
