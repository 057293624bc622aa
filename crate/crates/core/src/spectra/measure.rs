use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::linalg::{dist, lex_cmp};
use crate::{Error, Result, COINCIDENCE_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: Vec<f64>,
    pub mass: f64,
}

/// Finitely many weighted atoms on `R^d`, sorted by location. Atoms closer
/// than the coincidence tolerance are merged (into the smallest location).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    dim: usize,
    atoms: Vec<Atom>,
    total_mass: f64,
}

impl EmpiricalMeasure {
    pub fn new(dim: usize, mut raw: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        for (loc, mass) in &raw {
            if loc.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: loc.len() });
            }
            if !(*mass >= 0.0) || !mass.is_finite() || loc.iter().any(|c| !c.is_finite()) {
                return Err(Error::Numerical(format!("invalid atom {loc:?} with mass {mass}")));
            }
        }
        raw.sort_by(|a, b| lex_cmp(&a.0, &b.0));
        let mut atoms: Vec<Atom> = Vec::with_capacity(raw.len());
        for (location, mass) in raw {
            // earlier atoms within the tolerance share (almost) the same first coordinate
            let mut target = None;
            for (k, a) in atoms.iter().enumerate().rev() {
                if location[0] - a.location[0] > COINCIDENCE_TOL {
                    break;
                }
                if dist(&a.location, &location) <= COINCIDENCE_TOL {
                    target = Some(k);
                }
            }
            match target {
                Some(k) => atoms[k].mass += mass,
                None => atoms.push(Atom { location, mass }),
            }
        }
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        Ok(EmpiricalMeasure { dim, atoms, total_mass })
    }

    /// A measure on the real line.
    pub fn on_line(raw: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        Self::new(1, raw.into_iter().map(|(x, m)| (vec![x], m)).collect())
    }

    pub fn zero(dim: usize) -> Self {
        EmpiricalMeasure { dim, atoms: Vec::new(), total_mass: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Mass of the atom at `x` (zero if there is none).
    pub fn mass_at(&self, x: &[f64]) -> f64 {
        self.atoms
            .iter()
            .filter(|a| dist(&a.location, x) <= COINCIDENCE_TOL)
            .map(|a| a.mass)
            .sum()
    }

    /// The probability measure `m / m(R^d)`.
    pub fn normalized(&self) -> Result<Self> {
        if !(self.total_mass > 0.0) {
            return Err(Error::ZeroMass);
        }
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .map(|a| Atom { location: a.location.clone(), mass: a.mass / self.total_mass })
            .collect();
        let total_mass = atoms.iter().map(|a| a.mass).sum();
        Ok(EmpiricalMeasure { dim: self.dim, atoms, total_mass })
    }

    /// `∫ f dm`.
    pub fn integrate(&self, f: impl Fn(&[f64]) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.mass * f(&a.location)).sum()
    }

    /// CSV with columns `location,mass` (`location_0, …` when `d > 1`).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = if self.dim == 1 {
            vec!["location".into(), "mass".into()]
        } else {
            (0..self.dim)
                .map(|i| format!("location_{i}"))
                .chain(std::iter::once("mass".into()))
                .collect()
        };
        w.write_record(&header).map_err(csv_error)?;
        for a in &self.atoms {
            let row: Vec<String> = a.location.iter().chain(std::iter::once(&a.mass)).map(|v| fmt_float(*v)).collect();
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Numerical(e.to_string()))
    }
}

/// Seventeen significant digits, round-trip exact.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Numerical(format!("csv output failed: {e}"))
}

/// Tolerance under which an atom counts as sitting at the query point.
pub const IDS_TIE_TOL: f64 = COINCIDENCE_TOL;

/// Integrated density of states: the distribution function of a normalised
/// measure on the line.
#[derive(Debug, Clone, PartialEq)]
pub struct Ids {
    locations: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

/// The IDS of a one-dimensional measure (normalised first).
pub fn ids(measure: &EmpiricalMeasure) -> Result<Ids> {
    if measure.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: measure.dim });
    }
    let m = measure.normalized()?;
    let locations: Vec<f64> = m.atoms.iter().map(|a| a.location[0]).collect();
    let masses: Vec<f64> = m.atoms.iter().map(|a| a.mass).collect();
    let mut acc = 0.0;
    let cumulative = masses
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    Ok(Ids { locations, masses, cumulative })
}

impl Ids {
    fn count_le(&self, e: f64) -> usize {
        self.locations.partition_point(|&x| x <= e)
    }

    fn cum(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    /// `F(E)`, right-continuous; atoms within the tie tolerance of `E` count.
    pub fn eval(&self, e: f64) -> f64 {
        self.cum(self.count_le(e + IDS_TIE_TOL))
    }

    /// `F(E⁻)`: mass strictly below `E` (beyond the tie tolerance).
    pub fn eval_left(&self, e: f64) -> f64 {
        self.cum(self.locations.partition_point(|&x| x < e - IDS_TIE_TOL))
    }

    /// Mass of the atoms sitting at `E`.
    pub fn atom_at(&self, e: f64) -> f64 {
        self.eval(e) - self.eval_left(e)
    }

    /// `F(E⁻) + ½·(atom at E)`, the symmetric convention at a jump.
    pub fn midpoint(&self, e: f64) -> f64 {
        let lo = self.locations.partition_point(|&x| x < e - IDS_TIE_TOL);
        let hi = self.count_le(e + IDS_TIE_TOL);
        let jump: f64 = self.masses[lo..hi].iter().sum();
        self.cum(lo) + 0.5 * jump
    }

    /// Jump locations.
    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    /// CSV grid `E,F(E)`.
    pub fn write_grid_csv<W: Write>(&self, grid: &[f64], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["E", "F"]).map_err(csv_error)?;
        for &e in grid {
            w.write_record([fmt_float(e), fmt_float(self.eval(e))]).map_err(csv_error)?;
        }
        w.flush().map_err(|e| Error::Numerical(e.to_string()))
    }
}

/// `|m1(R) - m2(R)| · max(span, 1) + W1(m1/m1(R), m2/m2(R))` for measures on
/// the line, `span` being the length of the joint support interval.
pub fn weak_star_distance(m1: &EmpiricalMeasure, m2: &EmpiricalMeasure) -> Result<f64> {
    if m1.dim != 1 || m2.dim != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: m1.dim.max(m2.dim) });
    }
    let locs = m1.atoms.iter().chain(&m2.atoms).map(|a| a.location[0]);
    let (lo, hi) = locs.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), x| (l.min(x), h.max(x)));
    let span = if lo.is_finite() { hi - lo } else { 0.0 };
    let gap = (m1.total_mass - m2.total_mass).abs() * span.max(1.0);
    if !(m1.total_mass > 0.0) || !(m2.total_mass > 0.0) {
        return Ok(gap);
    }
    Ok(gap + wasserstein1(&m1.normalized()?, &m2.normalized()?))
}

/// `∫ |F1 - F2|` for two probability measures on the line.
fn wasserstein1(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut last: Option<f64> = None;
    let mut w = 0.0;
    while i < a.atoms.len() || j < b.atoms.len() {
        let xa = a.atoms.get(i).map_or(f64::INFINITY, |t| t.location[0]);
        let xb = b.atoms.get(j).map_or(f64::INFINITY, |t| t.location[0]);
        let x = xa.min(xb);
        if let Some(prev) = last {
            w += (fa - fb).abs() * (x - prev);
        }
        if xa == x {
            fa += a.atoms[i].mass;
            i += 1;
        }
        if xb == x {
            fb += b.atoms[j].mass;
            j += 1;
        }
        last = Some(x);
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merging_and_mass() {
        let m = EmpiricalMeasure::on_line([(1.0, 0.5), (0.0, 1.0), (1.0 + 1e-12, 0.25)]).unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert_eq!(m.total_mass(), 1.75);
        assert_eq!(m.mass_at(&[1.0]), 0.75);
        assert!(EmpiricalMeasure::on_line([(0.0, -1.0)]).is_err());
    }

    #[test]
    fn merging_in_the_plane_is_not_fooled_by_order() {
        let m = EmpiricalMeasure::new(
            2,
            vec![(vec![0.0, 5.0], 1.0), (vec![1e-13, 0.0], 1.0), (vec![2e-13, 5.0], 1.0)],
        )
        .unwrap();
        assert_eq!(m.atoms().len(), 2);
        assert_eq!(m.mass_at(&[0.0, 5.0]), 2.0);
    }

    #[test]
    fn ids_conventions() {
        let m = EmpiricalMeasure::on_line([(-2.0, 1.0), (0.0, 2.0), (2.0, 1.0)]).unwrap();
        let f = ids(&m).unwrap();
        assert_eq!(f.eval(-3.0), 0.0);
        assert_eq!(f.eval(-2.0), 0.25);
        assert_eq!(f.eval(0.0), 0.75);
        assert_eq!(f.eval_left(0.0), 0.25);
        assert_eq!(f.midpoint(0.0), 0.5);
        assert_eq!(f.eval(5.0), 1.0);
        assert!(matches!(ids(&EmpiricalMeasure::zero(1)), Err(Error::ZeroMass)));
    }

    #[test]
    fn distances() {
        let a = EmpiricalMeasure::on_line([(0.0, 1.0)]).unwrap();
        let b = EmpiricalMeasure::on_line([(1.0, 1.0)]).unwrap();
        assert_eq!(weak_star_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(weak_star_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(weak_star_distance(&b, &a).unwrap(), 1.0);
        // mass gap only
        let c = EmpiricalMeasure::on_line([(0.0, 3.0)]).unwrap();
        assert_eq!(weak_star_distance(&a, &c).unwrap(), 2.0);
        let spread = EmpiricalMeasure::on_line([(0.0, 0.5), (4.0, 0.5)]).unwrap();
        assert_eq!(weak_star_distance(&a, &spread).unwrap(), 2.0);
    }

    #[test]
    fn csv_layout() {
        let m = EmpiricalMeasure::on_line([(0.5, 0.25)]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "location,mass\n5.0000000000000000e-1,2.5000000000000000e-1\n");
        let f = ids(&m).unwrap();
        let mut buf = Vec::new();
        f.write_grid_csv(&[0.0, 1.0], &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().ends_with("1.0000000000000000e0,1.0000000000000000e0\n"));
    }
}
