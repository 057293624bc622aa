//! Dense Hermitian eigensolver: Householder reduction to tridiagonal form,
//! a diagonal phase change making the tridiagonal real, then implicit QL.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::{Error, Result};

pub(crate) trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + Send
    + Sync
{
    fn zero() -> Self;
    fn real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn abs2(self) -> f64;
    fn re(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn to_complex(self) -> Complex64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn abs2(self) -> f64 {
        self * self
    }
    fn re(self) -> f64 {
        self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    fn re(self) -> f64 {
        self.re
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn to_complex(self) -> Complex64 {
        self
    }
}

struct Reflector<T> {
    /// First index the reflector acts on.
    start: usize,
    v: Vec<T>,
    tau: f64,
}

impl<T: Scalar> Reflector<T> {
    /// `y ← (I - τ v v*) y` on the tail starting at `start`.
    fn apply(&self, y: &mut [T]) {
        let tail = &mut y[self.start..];
        let mut s = T::zero();
        for (vi, yi) in self.v.iter().zip(tail.iter()) {
            s += vi.conj() * *yi;
        }
        let s = s.scale(self.tau);
        for (vi, yi) in self.v.iter().zip(tail.iter_mut()) {
            *yi -= *vi * s;
        }
    }
}

/// Reduces the Hermitian matrix `a` (row-major, `n × n`, destroyed) to
/// `Q* A Q = T`. Returns the real diagonal, the (complex) subdiagonal
/// `e[k] = T[k+1, k]` and the reflectors composing `Q`.
fn tridiagonalize<T: Scalar>(a: &mut [T], n: usize) -> (Vec<f64>, Vec<T>, Vec<Reflector<T>>) {
    let mut sub = vec![T::zero(); n.saturating_sub(1)];
    let mut reflectors = Vec::new();
    let mut p = vec![T::zero(); n];
    for k in 0..n.saturating_sub(1) {
        let start = k + 1;
        let m = n - start;
        let mut v: Vec<T> = (start..n).map(|i| a[i * n + k]).collect();
        let tail: f64 = v[1..].iter().map(|x| x.abs2()).sum();
        if tail == 0.0 {
            sub[k] = v[0];
            continue;
        }
        let alpha = (tail + v[0].abs2()).sqrt();
        let x0 = v[0].to_complex();
        let phase = if x0.norm() == 0.0 { T::real(1.0) } else { phase_of::<T>(v[0]) };
        v[0] += phase.scale(alpha);
        sub[k] = -phase.scale(alpha);
        let vnorm2: f64 = v.iter().map(|x| x.abs2()).sum();
        let tau = 2.0 / vnorm2;

        // p = τ B v, B the trailing block.
        for (ii, i) in (start..n).enumerate() {
            let row = &a[i * n + start..i * n + n];
            let mut s = T::zero();
            for (bij, vj) in row.iter().zip(&v) {
                s += *bij * *vj;
            }
            p[ii] = s.scale(tau);
        }
        // q = p - (τ/2)(v* p) v
        let mut vp = T::zero();
        for ii in 0..m {
            vp += v[ii].conj() * p[ii];
        }
        let kfac = vp.scale(tau / 2.0);
        for ii in 0..m {
            p[ii] -= kfac * v[ii];
        }
        // B ← B - v q* - q v*
        for (ii, i) in (start..n).enumerate() {
            let vi = v[ii];
            let qi = p[ii];
            let row = &mut a[i * n + start..i * n + n];
            for (jj, bij) in row.iter_mut().enumerate() {
                *bij -= vi * p[jj].conj() + qi * v[jj].conj();
            }
        }
        reflectors.push(Reflector { start, v, tau });
    }
    let diag = (0..n).map(|i| a[i * n + i].re()).collect();
    (diag, sub, reflectors)
}

fn phase_of<T: Scalar>(x: T) -> T {
    let r = x.abs2().sqrt();
    x.scale(1.0 / r)
}

/// Implicit QL on a real symmetric tridiagonal matrix. On return `d` holds
/// the eigenvalues; if `z` is given (columns stored contiguously:
/// `z[i*n..(i+1)*n]` is column `i`), it is rotated along.
fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    for l in 0..n {
        let mut iter = 0;
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            loop {
                iter += 1;
                if iter > 60 {
                    return Err(Error::Numerical("QL iteration did not converge".into()));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let t = *b;
                            *b = s * *a + c * t;
                            *a = c * *a - s * t;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

/// Eigen-decomposition of a dense Hermitian matrix.
///
/// Returns ascending eigenvalues and, if requested, the eigenvectors as
/// contiguous blocks (`vectors[k*n..(k+1)*n]` belongs to eigenvalue `k`).
pub(crate) fn hermitian_eigen<T: Scalar>(
    mut a: Vec<T>,
    n: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Vec<Complex64>)> {
    let (mut d, sub, reflectors) = tridiagonalize(&mut a, n);
    drop(a);
    // Diagonal unitary making the subdiagonal real and nonnegative.
    let mut phases = vec![T::real(1.0); n];
    let mut e = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let mag = sub[k].abs2().sqrt();
        e[k] = mag;
        phases[k + 1] = if mag == 0.0 { phases[k] } else { phases[k] * phase_of(sub[k]) };
    }
    let mut z = if want_vectors {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        Some(z)
    } else {
        None
    };
    tql2(&mut d, &mut e, z.as_deref_mut())?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]).then(i.cmp(&j)));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let Some(z) = z else {
        return Ok((values, Vec::new()));
    };
    let mut vectors = Vec::with_capacity(n * n);
    let mut y = vec![T::zero(); n];
    for &col in &order {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = phases[i].scale(z[col * n + i]);
        }
        for r in reflectors.iter().rev() {
            r.apply(&mut y);
        }
        vectors.extend(y.iter().map(|v| v.to_complex()));
    }
    Ok((values, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(a: &[Complex64], n: usize) {
        let (vals, vecs) = hermitian_eigen(a.to_vec(), n, true).unwrap();
        for k in 0..n {
            let v = &vecs[k * n..(k + 1) * n];
            for i in 0..n {
                let mut s = Complex64::new(0.0, 0.0);
                for j in 0..n {
                    s += a[i * n + j] * v[j];
                }
                assert!((s - vals[k] * v[i]).norm() < 1e-12, "residual at {k},{i}");
            }
            for l in 0..n {
                let w = &vecs[l * n..(l + 1) * n];
                let ip: Complex64 = v.iter().zip(w).map(|(x, y)| x.conj() * y).sum();
                let want = if k == l { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-12);
            }
        }
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn small_complex_hermitian() {
        let c = |re, im| Complex64::new(re, im);
        let a = vec![
            c(2.0, 0.0), c(1.0, 1.0), c(0.0, -0.5),
            c(1.0, -1.0), c(-1.0, 0.0), c(0.3, 0.0),
            c(0.0, 0.5), c(0.3, 0.0), c(0.5, 0.0),
        ];
        check(&a, 3);
    }

    #[test]
    fn real_matches_known_spectrum() {
        // path graph on 5 vertices: 2 cos(kπ/6)
        let n = 5;
        let mut a = vec![0.0; n * n];
        for i in 0..n - 1 {
            a[i * n + i + 1] = 1.0;
            a[(i + 1) * n + i] = 1.0;
        }
        let (vals, _) = hermitian_eigen(a, n, false).unwrap();
        let mut want: Vec<f64> =
            (1..=n).map(|k| 2.0 * (k as f64 * std::f64::consts::PI / 6.0).cos()).collect();
        want.sort_by(f64::total_cmp);
        for (v, w) in vals.iter().zip(&want) {
            assert!((v - w).abs() < 1e-13);
        }
    }

    #[test]
    fn already_diagonal_and_empty() {
        let (vals, vecs) = hermitian_eigen(vec![3.0, 0.0, 0.0, -1.0], 2, true).unwrap();
        assert_eq!(vals, vec![-1.0, 3.0]);
        assert_eq!(vecs.len(), 4);
        let (vals, _) = hermitian_eigen::<f64>(Vec::new(), 0, true).unwrap();
        assert!(vals.is_empty());
    }

    #[test]
    fn dense_random_complex() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let mut a = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            a[i * n + i] = Complex64::new(rng.random_range(-1.0..1.0), 0.0);
            for j in i + 1..n {
                let z = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                a[i * n + j] = z;
                a[j * n + i] = z.conj();
            }
        }
        check(&a, n);
    }
}
