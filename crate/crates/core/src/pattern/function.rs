use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::pointset::{ball_inside, class_cells, patch_class, PatchClass, PointSet};
use crate::{Error, Result};

/// A strongly pattern equivariant function: its value at a point depends
/// only on the pattern inside the closed ball of radius `radius` around it.
///
/// Stored as an explicit class → value table; classes missing from the
/// table take `default`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PeFunctionData", into = "PeFunctionData")]
pub struct PeFunction {
    radius: f64,
    table: BTreeMap<PatchClass, Complex64>,
    default: Complex64,
    /// Coefficients of the indicator expansion, see [`indicator_expansion`].
    expansion: Vec<(PatchClass, Complex64)>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableEntry {
    signature: Vec<Vec<f64>>,
    value: Complex64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeFunctionData {
    radius: f64,
    #[serde(default)]
    table: Vec<TableEntry>,
    default: Complex64,
}

impl TryFrom<PeFunctionData> for PeFunction {
    type Error = Error;
    fn try_from(data: PeFunctionData) -> Result<Self> {
        let pairs = data
            .table
            .into_iter()
            .map(|e| Ok((PatchClass::from_displacements(data.radius, &e.signature)?, e.value)))
            .collect::<Result<Vec<_>>>()?;
        pe_from_patch_list(pairs, data.radius, data.default)
    }
}

impl From<PeFunction> for PeFunctionData {
    fn from(f: PeFunction) -> Self {
        PeFunctionData {
            radius: f.radius,
            table: f
                .table
                .into_iter()
                .map(|(c, value)| TableEntry { signature: c.signature(), value })
                .collect(),
            default: f.default,
        }
    }
}

impl PeFunction {
    /// The constant function (radius 0, empty table).
    pub fn constant(value: Complex64) -> Self {
        PeFunction { radius: 0.0, table: BTreeMap::new(), default: value, expansion: Vec::new() }
    }

    pub fn real_constant(value: f64) -> Self {
        Self::constant(Complex64::new(value, 0.0))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn default_value(&self) -> Complex64 {
        self.default
    }

    pub fn table(&self) -> impl Iterator<Item = (&PatchClass, &Complex64)> {
        self.table.iter()
    }

    pub fn lookup(&self, class: &PatchClass) -> Complex64 {
        self.table.get(class).copied().unwrap_or(self.default)
    }

    /// Whether every value (including the default) is real.
    pub fn is_real(&self) -> bool {
        self.default.im == 0.0 && self.table.values().all(|v| v.im == 0.0)
    }

    /// Supremum of `|f|` over the table and the default.
    pub fn sup_norm(&self) -> f64 {
        self.table.values().map(|v| v.norm()).fold(self.default.norm(), f64::max)
    }

    pub fn expansion(&self) -> &[(PatchClass, Complex64)] {
        &self.expansion
    }

    /// Looks up the class of `patch` around the point with coordinates `x`,
    /// which must already be a point of the patch.
    pub(crate) fn eval_at_point(&self, patch: &PointSet, x: &[f64]) -> Result<Complex64> {
        if self.table.is_empty() {
            return Ok(self.default);
        }
        if !ball_inside(patch, x, self.radius) {
            return Err(Error::BoundaryIncomplete { center: x.to_vec(), radius: self.radius });
        }
        let class = PatchClass::from_cells(self.radius, class_cells(patch, x, self.radius));
        Ok(self.lookup(&class))
    }
}

/// Evaluates `f` at the point `x` of `patch`.
pub fn eval_pe(f: &PeFunction, patch: &PointSet, x: &[f64]) -> Result<Complex64> {
    let class = patch_class(patch, x, f.radius)?;
    Ok(f.lookup(&class))
}

/// Builds a pattern equivariant function from explicit class values.
///
/// Repeated classes must agree; every class must have center radius `radius`.
pub fn pe_from_patch_list(
    pairs: Vec<(PatchClass, Complex64)>,
    radius: f64,
    default: Complex64,
) -> Result<PeFunction> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::InvalidOperator(format!("invalid pattern radius {radius}")));
    }
    if !default.re.is_finite() || !default.im.is_finite() {
        return Err(Error::InvalidOperator("non-finite default value".into()));
    }
    let mut table = BTreeMap::new();
    for (class, value) in pairs {
        if class.center_radius() != radius {
            return Err(Error::InvalidOperator(format!(
                "class radius {} differs from function radius {radius}",
                class.center_radius()
            )));
        }
        if !value.re.is_finite() || !value.im.is_finite() {
            return Err(Error::InvalidOperator(format!("non-finite value for class {class}")));
        }
        if let Some(old) = table.insert(class.clone(), value) {
            if old != value {
                return Err(Error::ConflictingClass(class.to_string()));
            }
        }
    }
    let expansion = indicator_expansion(&table, default);
    Ok(PeFunction { radius, table, default, expansion })
}

/// Coefficients `p_j` with `f(D) = default + Σ_j p_j · [sig_j ⊆ D ∩ B_r]`
/// for every class in the table.
///
/// Classes are processed by the number of strict subpatches they contain
/// (then by signature); `p_j` is the table value minus the default minus the
/// coefficients of all strict subpatches.
fn indicator_expansion(
    table: &BTreeMap<PatchClass, Complex64>,
    default: Complex64,
) -> Vec<(PatchClass, Complex64)> {
    let classes: Vec<&PatchClass> = table.keys().collect();
    let sub: Vec<Vec<usize>> = classes
        .iter()
        .map(|cj| {
            (0..classes.len())
                .filter(|&k| classes[k] != *cj && classes[k].is_subpatch_of(cj))
                .collect()
        })
        .collect();
    let mut order: Vec<usize> = (0..classes.len()).collect();
    order.sort_by_key(|&j| (sub[j].len(), classes[j].len()));
    let mut coeff = vec![Complex64::new(0.0, 0.0); classes.len()];
    for &j in &order {
        let below: Complex64 = sub[j].iter().map(|&k| coeff[k]).sum();
        coeff[j] = table[classes[j]] - default - below;
    }
    classes.into_iter().cloned().zip(coeff).collect()
}
