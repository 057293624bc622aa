use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use modelset::algebra_check::AlgebraCheckConfig;
use modelset::cutproject::{Scheme, Side};
use modelset::harness::ExperimentPlan;
use modelset::operators::{SamplingWeight, Weighting};
use modelset::pattern::{Kernel, SchrodingerSpec, Theta};
use modelset::spectra::{Averaging, TestFunction};

use crate::CliError;

/// One JSON document; each command reads the sections it needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Patch radius for `generate`, `dos` (open boundary) and `autocorr`.
    #[serde(default)]
    pub radius: Option<f64>,
    #[serde(default)]
    pub scheme: Option<Scheme>,
    /// Mollified window `w_ε`; the sharp window when absent.
    #[serde(default)]
    pub window: Option<WindowSpec>,
    #[serde(default)]
    pub operator: Option<OperatorSpec>,
    /// Replaces the displacement profile of the operator.
    #[serde(default)]
    pub theta: Option<Theta>,
    #[serde(default)]
    pub generate: Option<GenerateSection>,
    #[serde(default)]
    pub dos: Option<DosSection>,
    #[serde(default)]
    pub autocorr: Option<AutocorrSection>,
    #[serde(default)]
    pub plan: Option<ExperimentPlan>,
    #[serde(default)]
    pub algebra_check: Option<AlgebraCheckConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSpec {
    pub epsilon: f64,
    #[serde(default = "upper")]
    pub side: Side,
}

fn upper() -> Side {
    Side::Upper
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    Schrodinger(SchrodingerSpec),
    Kernel(Kernel),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSection {
    #[serde(default = "class_radius")]
    pub class_radius: f64,
}

fn class_radius() -> f64 {
    2.0
}

impl Default for GenerateSection {
    fn default() -> Self {
        GenerateSection { class_radius: class_radius() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryChoice {
    Open,
    Periodic { periods: Vec<Vec<f64>> },
    /// Periodic with a supercell of length at least `min_length` when the
    /// (approximant) scheme is periodic, open otherwise.
    Auto { min_length: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DosSection {
    #[serde(default = "open")]
    pub boundary: BoundaryChoice,
    pub rho: SamplingWeight,
    #[serde(default = "single")]
    pub averaging: Averaging,
    #[serde(default)]
    pub margin: f64,
    #[serde(default = "symmetrized")]
    pub weighting: Weighting,
    /// Replace the scheme by its rational approximant with `q ≤ approximant`.
    #[serde(default)]
    pub approximant: Option<i64>,
    #[serde(default = "ids_points")]
    pub ids_points: usize,
    /// Also write the assembled matrix (`matrix.json` + `matrix.bin`).
    #[serde(default)]
    pub dump_matrix: bool,
}

fn open() -> BoundaryChoice {
    BoundaryChoice::Open
}
fn single() -> Averaging {
    Averaging::Single
}
fn symmetrized() -> Weighting {
    Weighting::Symmetrized
}
fn ids_points() -> usize {
    201
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrSection {
    pub r_eff: f64,
    pub delta_max: f64,
    #[serde(default)]
    pub test_functions: Vec<TestFunction>,
    #[serde(default)]
    pub pairs: Option<Vec<[usize; 2]>>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, CliError> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn scheme(&self) -> Result<&Scheme, CliError> {
        self.scheme.as_ref().ok_or_else(|| missing("scheme"))
    }

    pub fn radius(&self) -> Result<f64, CliError> {
        match self.radius {
            Some(r) if r > 0.0 && r.is_finite() => Ok(r),
            Some(r) => Err(CliError::Config(format!("radius {r} must be positive"))),
            None => Err(missing("radius")),
        }
    }

    pub fn kernel(&self) -> Result<Kernel, CliError> {
        let k = match self.operator.as_ref().ok_or_else(|| missing("operator"))? {
            OperatorSpec::Schrodinger(s) => modelset::pattern::build_schrodinger(s)?,
            OperatorSpec::Kernel(k) => k.clone(),
        };
        Ok(match self.theta {
            Some(t) => k.with_theta(t)?,
            None => k,
        })
    }
}

pub fn missing(section: &str) -> CliError {
    CliError::Config(format!("config has no `{section}` section"))
}
