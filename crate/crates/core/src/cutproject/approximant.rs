//! Rational lattice approximants and the periods of their model sets.

use num_integer::Integer;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::intkernel::integer_kernel;
use super::{Scheme, Window};
use crate::{Error, Result};

/// Continued-fraction convergents `p/q` of `x` with `q <= max_den`, in order.
pub fn convergents(x: f64, max_den: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    if !x.is_finite() || max_den < 1 {
        return out;
    }
    let (mut h1, mut h2) = (1i64, 0i64);
    let (mut k1, mut k2) = (0i64, 1i64);
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        if a.abs() > 9.0e15 {
            break;
        }
        let a = a as i64;
        let (h, k) = match (a.checked_mul(h1).and_then(|v| v.checked_add(h2)), a.checked_mul(k1).and_then(|v| v.checked_add(k2))) {
            (Some(h), Some(k)) => (h, k),
            _ => break,
        };
        if k > max_den {
            break;
        }
        out.push((h, k));
        let frac = rest - a as f64;
        if frac < 1e-13 || (h as f64 / k as f64 - x).abs() < 1e-15 {
            break;
        }
        rest = 1.0 / frac;
        (h2, h1) = (h1, h);
        (k2, k1) = (k1, k);
    }
    out
}

/// A scheme whose basis has been replaced by the rational matrix `N / q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalSchemeData", into = "RationalSchemeData")]
pub struct RationalScheme {
    base: Scheme,
    numerators: Vec<i64>,
    denominator: i64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RationalSchemeData {
    d: usize,
    m: usize,
    basis: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<Window>,
    shift: Vec<f64>,
    numerators: Vec<i64>,
    denominator: i64,
}

impl TryFrom<RationalSchemeData> for RationalScheme {
    type Error = Error;
    fn try_from(r: RationalSchemeData) -> Result<Self> {
        let base = Scheme::new(r.d, r.m, r.basis, r.window, r.shift)?;
        RationalScheme::new(base, r.numerators, r.denominator)
    }
}

impl From<RationalScheme> for RationalSchemeData {
    fn from(r: RationalScheme) -> Self {
        let b = r.base;
        RationalSchemeData {
            d: b.d,
            m: b.m,
            basis: b.basis,
            window: b.window,
            shift: b.shift,
            numerators: r.numerators,
            denominator: r.denominator,
        }
    }
}

impl RationalScheme {
    /// Checks `max |S - N/q| <= 1/q` entrywise.
    pub fn new(base: Scheme, numerators: Vec<i64>, denominator: i64) -> Result<Self> {
        if denominator < 1 {
            return Err(Error::InvalidScheme("denominator must be positive".into()));
        }
        if numerators.len() != base.basis.len() {
            return Err(Error::InvalidScheme("numerator matrix has the wrong size".into()));
        }
        let q = denominator as f64;
        let err = base
            .basis
            .iter()
            .zip(&numerators)
            .map(|(s, n)| (s - *n as f64 / q).abs())
            .fold(0.0, f64::max);
        if err > 1.0 / q + 1e-12 {
            return Err(Error::InvalidScheme(format!(
                "rational basis deviates by {err} > 1/{denominator}"
            )));
        }
        Ok(RationalScheme { base, numerators, denominator })
    }

    pub fn base(&self) -> &Scheme {
        &self.base
    }

    pub fn numerators(&self) -> &[i64] {
        &self.numerators
    }

    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    /// Largest entrywise deviation from the original basis.
    pub fn max_error(&self) -> f64 {
        let q = self.denominator as f64;
        self.base
            .basis
            .iter()
            .zip(&self.numerators)
            .map(|(s, n)| (s - *n as f64 / q).abs())
            .fold(0.0, f64::max)
    }

    /// The approximating scheme itself (same window and shift, basis `N/q`).
    pub fn scheme(&self) -> Scheme {
        let q = self.denominator as f64;
        let basis = self.numerators.iter().map(|&n| n as f64 / q).collect();
        let mut s = self.base.clone();
        s.basis = basis;
        s.exact = None;
        s.with_exact(self.numerators.clone(), self.denominator)
    }
}

/// Rational approximation of the basis.
///
/// For `d = m = 1` every non-integer entry is replaced by its last
/// continued-fraction convergent with denominator `<= q_max` and the common
/// denominator is the lcm of those. Otherwise entries are rounded to the
/// nearest multiple of `1/q_max`.
pub fn rational_approximant(scheme: &Scheme, q_max: i64) -> Result<RationalScheme> {
    if q_max < 1 {
        return Err(Error::InvalidScheme("q_max must be at least 1".into()));
    }
    if scheme.d == 1 && scheme.m == 1 {
        let fracs: Vec<(i64, i64)> = scheme
            .basis
            .iter()
            .map(|&x| {
                if (x - x.round()).abs() < 1e-12 {
                    (x.round() as i64, 1)
                } else {
                    *convergents(x, q_max).last().expect("q_max >= 1 admits a convergent")
                }
            })
            .collect();
        let q = fracs.iter().fold(1i64, |acc, &(_, k)| acc.lcm(&k));
        let numerators = fracs.iter().map(|&(h, k)| h * (q / k)).collect();
        return RationalScheme::new(scheme.clone(), numerators, q);
    }
    let q = q_max as f64;
    let numerators = scheme.basis.iter().map(|x| (x * q).round() as i64).collect();
    RationalScheme::new(scheme.clone(), numerators, q_max)
}

/// Periods of a fully periodic projected set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodLattice {
    /// Integer labels `n` of the lattice vectors in `Γ_q ∩ (R^d × {0})`.
    pub labels: Vec<Vec<i64>>,
    /// Their physical projections.
    pub periods: Vec<Vec<f64>>,
}

/// The sublattice `Γ_q ∩ (R^d × {0})` projected to physical space, or `None`
/// if it does not span `R^d`.
pub fn periodicity_lattice(rs: &RationalScheme) -> Option<PeriodLattice> {
    let (d, m) = (rs.base.d, rs.base.m);
    let dim = d + m;
    if m == 0 {
        // Γ itself is the period lattice.
        let labels: Vec<Vec<i64>> = (0..d)
            .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
            .collect();
        return finish(rs, labels);
    }
    let internal: Vec<Vec<i64>> = (d..dim)
        .map(|k| rs.numerators[k * dim..(k + 1) * dim].to_vec())
        .collect();
    let kernel = integer_kernel(&internal, dim);
    let labels: Option<Vec<Vec<i64>>> = kernel
        .iter()
        .map(|v| v.iter().map(|x| x.to_i64()).collect())
        .collect();
    finish(rs, labels?)
}

fn finish(rs: &RationalScheme, mut labels: Vec<Vec<i64>>) -> Option<PeriodLattice> {
    let d = rs.base.d;
    let dim = d + rs.base.m;
    let q = rs.denominator as f64;
    let project = |n: &[i64]| -> Vec<f64> {
        (0..d)
            .map(|k| {
                let s: i128 = (0..dim)
                    .map(|j| rs.numerators[k * dim + j] as i128 * n[j] as i128)
                    .sum();
                s as f64 / q
            })
            .collect()
    };
    let mut periods: Vec<Vec<f64>> = labels.iter().map(|n| project(n)).collect();
    if periods.len() < d {
        return None;
    }
    let gram = nalgebra::DMatrix::from_fn(d, periods.len(), |i, j| periods[j][i]);
    if gram.rank(1e-9) < d {
        return None;
    }
    if d == 1 && periods.len() == 1 && periods[0][0] < 0.0 {
        periods[0][0] = -periods[0][0];
        labels[0].iter_mut().for_each(|v| *v = -*v);
    }
    Some(PeriodLattice { labels, periods })
}

/// Periods of a scheme whose basis entries are exactly rational with
/// denominators up to `10^6`; `None` for an irrational basis.
pub fn periodicity_lattice_of_scheme(scheme: &Scheme) -> Option<PeriodLattice> {
    let mut fracs = Vec::with_capacity(scheme.basis.len());
    for &x in &scheme.basis {
        let (h, k) = convergents(x, 1_000_000)
            .into_iter()
            .find(|&(h, k)| (h as f64 / k as f64 - x).abs() <= 1e-14 * x.abs().max(1.0))?;
        fracs.push((h, k));
    }
    let q = fracs.iter().fold(1i64, |acc, &(_, k)| acc.lcm(&k));
    let numerators = fracs.iter().map(|&(h, k)| h * (q / k)).collect();
    periodicity_lattice(&RationalScheme::new(scheme.clone(), numerators, q).ok()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cutproject::GOLDEN;

    #[test]
    fn golden_convergents() {
        assert_eq!(convergents(GOLDEN, 8).last(), Some(&(13, 8)));
        assert_eq!(convergents(GOLDEN, 2).last(), Some(&(3, 2)));
        assert_eq!(
            convergents(GOLDEN, 8),
            vec![(1, 1), (2, 1), (3, 2), (5, 3), (8, 5), (13, 8)]
        );
        assert_eq!(convergents(-1.0 / GOLDEN, 8).last(), Some(&(-5, 8)));
        assert_eq!(convergents(0.75, 100), vec![(0, 1), (1, 1), (3, 4)]);
    }

    #[test]
    fn fibonacci_approximants() {
        let s = Scheme::fibonacci(0.123);
        let r8 = rational_approximant(&s, 8).unwrap();
        assert_eq!(r8.denominator(), 8);
        assert_eq!(r8.numerators(), &[8, 13, 8, -5]);
        let mut last = f64::INFINITY;
        for q in [2, 8, 32, 128] {
            let r = rational_approximant(&s, q).unwrap();
            assert!(r.max_error() <= 1.0 / r.denominator() as f64);
            assert!(r.max_error() < last);
            last = r.max_error();
        }
    }

    #[test]
    fn rounding_in_higher_dimension() {
        let basis = vec![1.0, 0.3, 0.1, 0.2, 1.0, 0.7, 0.5, 0.25, 1.0];
        let w = Window::interval(0.0, 1.0).unwrap();
        let s = Scheme::new(2, 1, basis, Some(w), vec![0.0; 3]).unwrap();
        let r = rational_approximant(&s, 10).unwrap();
        assert_eq!(r.denominator(), 10);
        assert_eq!(r.numerators(), &[10, 3, 1, 2, 10, 7, 5, 3, 10]);
        let p = periodicity_lattice(&r).unwrap();
        assert_eq!(p.periods.len(), 2);
    }

    #[test]
    fn identity_period() {
        let w = Window::interval(-0.5, 0.4).unwrap();
        let s = Scheme::new(1, 1, vec![1.0, 0.0, 0.0, 1.0], Some(w), vec![0.0; 2]).unwrap();
        let p = periodicity_lattice(&rational_approximant(&s, 1).unwrap()).unwrap();
        assert_eq!(p.periods, vec![vec![1.0]]);
    }

    #[test]
    fn fibonacci_period() {
        let r = rational_approximant(&Scheme::fibonacci(0.123), 8).unwrap();
        let p = periodicity_lattice(&r).unwrap();
        // 8a - 5b = 0 → n = (5, 8), physical 5 + 8·13/8 = 18
        assert_eq!(p.labels, vec![vec![5, 8]]);
        assert!((p.periods[0][0] - 18.0).abs() < 1e-12);
    }

    #[test]
    fn irrational_basis_has_no_period() {
        assert!(periodicity_lattice_of_scheme(&Scheme::fibonacci(0.1)).is_none());
        let w = Window::interval(-0.5, 0.4).unwrap();
        let s = Scheme::new(1, 1, vec![1.0, 0.5, 0.0, 1.0], Some(w), vec![0.0; 2]).unwrap();
        assert!(periodicity_lattice_of_scheme(&s).is_some());
    }

    #[test]
    fn invalid_rational_schemes() {
        let s = Scheme::fibonacci(0.0);
        assert!(RationalScheme::new(s.clone(), vec![1, 1, 1, 0], 1).is_ok());
        assert!(RationalScheme::new(s.clone(), vec![8, 20, 8, -5], 8).is_err());
        assert!(RationalScheme::new(s, vec![8, 13, 8, -5], 0).is_err());
    }

    #[test]
    fn rational_scheme_json() {
        let r = rational_approximant(&Scheme::fibonacci(0.123), 8).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"numerators\":[8,13,8,-5]"));
        let back: RationalScheme = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
