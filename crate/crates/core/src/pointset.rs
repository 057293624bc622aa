//! Finite Delone patches.
//!
//! An infinite Delone set `D` is represented by the finite patch
//! `D ∩ B_R(0)`. Every consumer only trusts data far enough from the
//! boundary sphere, so most operations here take or check a margin.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::{dist, lex_cmp, norm, sub};
use crate::{Error, Result, CLASS_GRID, COINCIDENCE_TOL};

/// A finite point configuration `D ∩ B_R(0)` in `R^d`, stored in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PointSetData", into = "PointSetData")]
pub struct PointSet {
    dim: usize,
    radius: f64,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointSetData {
    dim: usize,
    radius: f64,
    points: Vec<Vec<f64>>,
}

impl TryFrom<PointSetData> for PointSet {
    type Error = Error;
    fn try_from(data: PointSetData) -> Result<Self> {
        PointSet::new(data.dim, data.radius, data.points)
    }
}

impl From<PointSet> for PointSetData {
    fn from(p: PointSet) -> Self {
        PointSetData {
            dim: p.dim,
            radius: p.radius,
            points: p.points,
        }
    }
}

impl PointSet {
    /// Builds a patch, sorting the points canonically.
    ///
    /// Fails if a point lies outside `B_R(0)` or two points coincide.
    pub fn new(dim: usize, radius: f64, mut points: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPointSet("dimension must be positive".into()));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidPointSet(format!("radius {radius} must be positive")));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.len() });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidPointSet(format!("non-finite point {p:?}")));
            }
            if norm(p) > radius + COINCIDENCE_TOL {
                return Err(Error::InvalidPointSet(format!(
                    "point {p:?} lies outside the ball of radius {radius}"
                )));
            }
        }
        points.sort_by(|a, b| lex_cmp(a, b));
        let set = PointSet { dim, radius, points };
        for i in 0..set.points.len() {
            let x = &set.points[i];
            for y in set.points[i + 1..].iter() {
                if y[0] - x[0] > COINCIDENCE_TOL {
                    break;
                }
                if dist(x, y) <= COINCIDENCE_TOL {
                    return Err(Error::InvalidPointSet(format!("duplicate points {x:?} and {y:?}")));
                }
            }
        }
        Ok(set)
    }

    /// The one-dimensional progression `spacing·ℤ + offset` clipped to `B_R(0)`.
    pub fn arithmetic(spacing: f64, offset: f64, radius: f64) -> Result<Self> {
        if !(spacing > 0.0) {
            return Err(Error::InvalidPointSet("spacing must be positive".into()));
        }
        let lo = ((-radius - offset) / spacing).ceil() as i64;
        let hi = ((radius - offset) / spacing).floor() as i64;
        let points = (lo..=hi)
            .map(|k| vec![k as f64 * spacing + offset])
            .filter(|p| p[0].abs() <= radius)
            .collect();
        PointSet::new(1, radius, points)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the point coinciding with `x`, if any.
    pub fn find(&self, x: &[f64]) -> Option<usize> {
        self.within(x, COINCIDENCE_TOL).next()
    }

    /// Indices of all points within closed distance `r` of `x`, in storage order.
    pub fn within<'a>(&'a self, x: &'a [f64], r: f64) -> impl Iterator<Item = usize> + 'a {
        let lo = self.points.partition_point(|p| p[0] < x[0] - r);
        let hi = self.points.partition_point(|p| p[0] <= x[0] + r);
        (lo..hi).filter(move |&i| dist(&self.points[i], x) <= r)
    }

    /// Distance from `x` to the nearest point of the patch (`∞` if empty).
    pub fn nearest_distance(&self, x: &[f64]) -> f64 {
        if self.points.is_empty() {
            return f64::INFINITY;
        }
        let limit = 2.0 * (self.radius + norm(x)) + 1.0;
        let mut r = 1.0;
        loop {
            let best = self
                .within(x, r)
                .map(|i| dist(&self.points[i], x))
                .fold(f64::INFINITY, f64::min);
            if best.is_finite() || r > limit {
                return best;
            }
            r *= 2.0;
        }
    }

    fn check_dim(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }
}

/// Packing and covering radii `(U, K) = (B°_{r_pack}, B_{r_cov})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeloneParams {
    pub r_pack: f64,
    pub r_cov: f64,
}

impl DeloneParams {
    pub fn new(r_pack: f64, r_cov: f64) -> Result<Self> {
        if !(r_pack > 0.0 && r_cov > 0.0 && r_pack <= r_cov) {
            return Err(Error::InvalidPointSet(format!(
                "Delone parameters need 0 < r_pack <= r_cov, got ({r_pack}, {r_cov})"
            )));
        }
        Ok(DeloneParams { r_pack, r_cov })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PackingViolation {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoveringViolation {
    pub probe: Vec<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeloneReport {
    pub valid: bool,
    pub packing: Vec<PackingViolation>,
    pub covering: Vec<CoveringViolation>,
}

/// Verifies the packing condition on all pairs and the covering condition on
/// probes inside `B_{R - r_cov}(0)`.
///
/// In one dimension the probes are the gap midpoints and the ends of the
/// probe interval, which makes the covering check exact. In higher dimension
/// a cubic probe grid of spacing `r_cov / 8` is used.
pub fn check_delone(patch: &PointSet, params: &DeloneParams) -> Result<DeloneReport> {
    if patch.is_empty() {
        return Err(Error::InvalidPointSet("empty patch".into()));
    }
    let two_pack = 2.0 * params.r_pack;
    let mut packing = Vec::new();
    for (i, x) in patch.points.iter().enumerate() {
        for j in patch.within(x, two_pack) {
            if j <= i {
                continue;
            }
            let d = dist(x, &patch.points[j]);
            if d < two_pack {
                packing.push(PackingViolation {
                    first: x.clone(),
                    second: patch.points[j].clone(),
                    distance: d,
                });
            }
        }
    }

    let probe_radius = patch.radius - params.r_cov;
    let mut covering = Vec::new();
    if probe_radius >= 0.0 {
        for probe in covering_probes(patch, probe_radius, params.r_cov) {
            let d = patch.nearest_distance(&probe);
            if d > params.r_cov + COINCIDENCE_TOL {
                covering.push(CoveringViolation { probe, distance: d });
            }
        }
    }
    Ok(DeloneReport {
        valid: packing.is_empty() && covering.is_empty(),
        packing,
        covering,
    })
}

fn covering_probes(patch: &PointSet, rho: f64, r_cov: f64) -> Vec<Vec<f64>> {
    if patch.dim == 1 {
        let mut probes = vec![vec![-rho], vec![rho]];
        for w in patch.points.windows(2) {
            let mid = 0.5 * (w[0][0] + w[1][0]);
            if mid.abs() <= rho {
                probes.push(vec![mid]);
            }
        }
        probes.sort_by(|a, b| lex_cmp(a, b));
        return probes;
    }
    let h = r_cov / 8.0;
    let n = (rho / h).floor() as i64;
    let d = patch.dim;
    let mut probes = Vec::new();
    let mut idx = vec![-n; d];
    loop {
        let p: Vec<f64> = idx.iter().map(|&k| k as f64 * h).collect();
        if norm(&p) <= rho {
            probes.push(p);
        }
        let mut axis = 0;
        loop {
            if axis == d {
                return probes;
            }
            idx[axis] += 1;
            if idx[axis] <= n {
                break;
            }
            idx[axis] = -n;
            axis += 1;
        }
    }
}

/// Moves the origin to `t`: every point is shifted by `-t` and the patch is
/// re-clipped to the largest ball that is still fully known.
pub fn translate(patch: &PointSet, t: &[f64]) -> Result<PointSet> {
    patch.check_dim(t)?;
    let shift = norm(t);
    if shift >= patch.radius {
        return Err(Error::PatchExhausted { shift, radius: patch.radius });
    }
    let radius = patch.radius - shift;
    let points = patch
        .points
        .iter()
        .map(|p| sub(p, t))
        .filter(|p| norm(p) <= radius)
        .collect();
    PointSet::new(patch.dim, radius, points)
}

/// Resolution of the bisection in [`local_distance`].
pub const LOCAL_DISTANCE_RESOLUTION: f64 = 1e-6;

/// Local distance between two patches, a computable stand-in for the
/// Chabauty-Fell metric.
///
/// Returns the smallest `ε ∈ (0, 1]` such that every point of either patch
/// inside `B_{1/ε}(0)` has a point of the other patch within `ε`. The ball
/// radius `1/ε` is capped at the smaller patch radius. Found by bisection to
/// [`LOCAL_DISTANCE_RESOLUTION`].
pub fn local_distance(p1: &PointSet, p2: &PointSet) -> Result<f64> {
    if p1.dim != p2.dim {
        return Err(Error::DimensionMismatch { expected: p1.dim, got: p2.dim });
    }
    let cap = p1.radius.min(p2.radius);
    let close = |eps: f64| {
        let rho = (1.0 / eps).min(cap);
        one_sided_close(p1, p2, rho, eps) && one_sided_close(p2, p1, rho, eps)
    };
    if !close(1.0) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > LOCAL_DISTANCE_RESOLUTION {
        let mid = 0.5 * (lo + hi);
        if close(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

fn one_sided_close(a: &PointSet, b: &PointSet, rho: f64, eps: f64) -> bool {
    a.points
        .iter()
        .filter(|x| norm(x) <= rho)
        .all(|x| b.within(x, eps).next().is_some())
}

/// The pattern of a patch inside `B_r(x)`, seen from `x` and rounded to the
/// classification grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchClass {
    cells: Vec<Vec<i64>>,
    center_radius: Radius,
}

/// Radius wrapper with a total order so classes can key ordered maps.
#[derive(Debug, Clone, Copy)]
struct Radius(f64);

impl PartialEq for Radius {
    fn eq(&self, other: &Self) -> bool {
        self.0.total_cmp(&other.0).is_eq()
    }
}
impl Eq for Radius {}
impl PartialOrd for Radius {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Radius {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
impl std::hash::Hash for Radius {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

pub(crate) fn round_to_grid(v: &[f64]) -> Vec<i64> {
    v.iter().map(|c| (c / CLASS_GRID).round() as i64).collect()
}

impl PatchClass {
    /// Builds a class from raw displacement vectors (rounded and sorted here).
    pub fn from_displacements(center_radius: f64, displacements: &[Vec<f64>]) -> Result<Self> {
        if !(center_radius >= 0.0) {
            return Err(Error::InvalidPointSet(format!("class radius {center_radius} is negative")));
        }
        let mut cells: Vec<Vec<i64>> = displacements.iter().map(|v| round_to_grid(v)).collect();
        cells.sort();
        cells.dedup();
        let dim = cells.first().map(Vec::len).unwrap_or(0);
        if cells.iter().any(|c| c.len() != dim) {
            return Err(Error::InvalidPointSet("mixed dimensions in signature".into()));
        }
        if !cells.iter().any(|c| c.iter().all(|&k| k == 0)) {
            return Err(Error::InvalidPointSet("signature must contain the origin".into()));
        }
        let class = PatchClass { cells, center_radius: Radius(center_radius) };
        if class
            .signature()
            .iter()
            .any(|v| norm(v) > center_radius + CLASS_GRID)
        {
            return Err(Error::InvalidPointSet("signature exceeds the class radius".into()));
        }
        Ok(class)
    }

    pub(crate) fn from_cells(center_radius: f64, mut cells: Vec<Vec<i64>>) -> Self {
        cells.sort();
        PatchClass { cells, center_radius: Radius(center_radius) }
    }

    pub fn center_radius(&self) -> f64 {
        self.center_radius.0
    }

    /// Grid cells of the signature (integer multiples of the class grid).
    pub fn cells(&self) -> &[Vec<i64>] {
        &self.cells
    }

    /// Signature displacements in physical units.
    pub fn signature(&self) -> Vec<Vec<f64>> {
        self.cells
            .iter()
            .map(|c| c.iter().map(|&k| k as f64 * CLASS_GRID).collect())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Whether every displacement of `self` also occurs in `other`.
    pub fn is_subpatch_of(&self, other: &PatchClass) -> bool {
        self.cells.iter().all(|c| other.cells.binary_search(c).is_ok())
    }
}

impl fmt::Display for PatchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r={} {{", self.center_radius.0)?;
        for (i, v) in self.signature().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:?}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchClassData {
    center_radius: f64,
    signature: Vec<Vec<f64>>,
}

impl Serialize for PatchClass {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PatchClassData {
            center_radius: self.center_radius.0,
            signature: self.signature(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PatchClass {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let data = PatchClassData::deserialize(d)?;
        PatchClass::from_displacements(data.center_radius, &data.signature)
            .map_err(serde::de::Error::custom)
    }
}

/// Grid cells of `{y - x : y ∈ patch, |y - x| <= r}` around `x`. Points at
/// distance `r` up to the coincidence tolerance count as inside, so the
/// class does not depend on round-off in the coordinates.
pub(crate) fn class_cells(patch: &PointSet, x: &[f64], r: f64) -> Vec<Vec<i64>> {
    let mut cells: Vec<Vec<i64>> = patch
        .within(x, r + COINCIDENCE_TOL)
        .map(|j| round_to_grid(&sub(&patch.points[j], x)))
        .collect();
    cells.sort();
    cells
}

/// Whether `B_r(x)` lies inside the known ball of the patch.
pub fn ball_inside(patch: &PointSet, x: &[f64], r: f64) -> bool {
    norm(x) + r <= patch.radius + COINCIDENCE_TOL
}

/// The `r`-pattern around the point `x` of the patch.
pub fn patch_class(patch: &PointSet, x: &[f64], r: f64) -> Result<PatchClass> {
    patch.check_dim(x)?;
    let i = patch.find(x).ok_or_else(|| Error::NotInPatch(x.to_vec()))?;
    let center = &patch.points[i];
    if !ball_inside(patch, center, r) {
        return Err(Error::BoundaryIncomplete { center: center.clone(), radius: r });
    }
    Ok(PatchClass::from_cells(r, class_cells(patch, center, r)))
}

/// All `r`-patterns around interior points with their frequencies, ordered
/// by signature.
pub fn enumerate_patch_classes(patch: &PointSet, r: f64) -> Result<Vec<(PatchClass, usize)>> {
    let mut counts: BTreeMap<PatchClass, usize> = BTreeMap::new();
    for x in patch.points.iter().filter(|x| ball_inside(patch, x, r)) {
        *counts
            .entry(PatchClass::from_cells(r, class_cells(patch, x, r)))
            .or_default() += 1;
    }
    if counts.is_empty() {
        return Err(Error::NoInteriorPoints(r));
    }
    Ok(counts.into_iter().collect())
}
