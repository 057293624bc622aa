//! Integer kernels of integer matrices by unimodular column reduction
//! (column Hermite normal form).
//!
//! The reduction runs on `i64` while every intermediate stays below `2^62`
//! in magnitude and restarts on arbitrary-precision integers otherwise.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

const I64_LIMIT: i128 = 1 << 62;

trait KernelInt: Clone + Integer + Signed {
    /// `a·b + c·d`, or `None` when the result leaves the representable range.
    fn mul_add2(a: &Self, b: &Self, c: &Self, d: &Self) -> Option<Self>;
}

impl KernelInt for i64 {
    fn mul_add2(a: &i64, b: &i64, c: &i64, d: &i64) -> Option<i64> {
        let v = (*a as i128) * (*b as i128) + (*c as i128) * (*d as i128);
        (v.abs() <= I64_LIMIT).then_some(v as i64)
    }
}

impl KernelInt for BigInt {
    fn mul_add2(a: &BigInt, b: &BigInt, c: &BigInt, d: &BigInt) -> Option<BigInt> {
        Some(a * b + c * d)
    }
}

/// Returns `(g, x, y)` with `a·x + b·y = g = gcd(a, b) >= 0`.
fn ext_gcd<T: KernelInt>(a: &T, b: &T) -> (T, T, T) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

/// Column-reduces `a` (rows × cols) and returns a basis of its integer kernel.
fn kernel_generic<T: KernelInt>(a: &[Vec<T>], cols: usize) -> Option<Vec<Vec<T>>> {
    let rows = a.len();
    let mut m: Vec<Vec<T>> = a.to_vec();
    // u is cols × cols, stored by columns.
    let mut u: Vec<Vec<T>> = (0..cols)
        .map(|j| (0..cols).map(|i| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    let mut pivot = 0;
    for r in 0..rows {
        if pivot == cols {
            break;
        }
        for j in pivot + 1..cols {
            if m[r][j].is_zero() {
                continue;
            }
            let a_ = m[r][pivot].clone();
            let b_ = m[r][j].clone();
            let (g, x, y) = ext_gcd(&a_, &b_);
            let s = -(b_ / g.clone());
            let t = a_ / g;
            // new_pivot = x·col_p + y·col_j ; new_j = s·col_p + t·col_j
            for row in m.iter_mut() {
                let p = row[pivot].clone();
                let q = row[j].clone();
                row[pivot] = T::mul_add2(&x, &p, &y, &q)?;
                row[j] = T::mul_add2(&s, &p, &t, &q)?;
            }
            let cp = u[pivot].clone();
            let cj = u[j].clone();
            for i in 0..cols {
                u[pivot][i] = T::mul_add2(&x, &cp[i], &y, &cj[i])?;
                u[j][i] = T::mul_add2(&s, &cp[i], &t, &cj[i])?;
            }
        }
        if !m[r][pivot].is_zero() {
            pivot += 1;
        }
    }
    Some(u.into_iter().skip(pivot).collect())
}

/// Basis of `{ n ∈ ℤ^cols : a·n = 0 }` as `BigInt` vectors.
pub fn integer_kernel(a: &[Vec<i64>], cols: usize) -> Vec<Vec<BigInt>> {
    if let Some(k) = kernel_generic::<i64>(a, cols) {
        return k
            .into_iter()
            .map(|v| v.into_iter().map(BigInt::from).collect())
            .collect();
    }
    let big: Vec<Vec<BigInt>> = a
        .iter()
        .map(|row| row.iter().map(|&v| BigInt::from(v)).collect())
        .collect();
    kernel_generic::<BigInt>(&big, cols).expect("big integers never overflow")
}

/// Kernel basis as machine integers, if every entry fits into `i64`.
pub fn integer_kernel_i64(a: &[Vec<i64>], cols: usize) -> Option<Vec<Vec<i64>>> {
    integer_kernel(a, cols)
        .into_iter()
        .map(|v| v.iter().map(|x| x.to_i64()).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    fn apply(a: &[Vec<i64>], n: &[BigInt]) -> Vec<BigInt> {
        a.iter()
            .map(|row| row.iter().zip(n).map(|(x, y)| BigInt::from(*x) * y).sum())
            .collect()
    }

    #[test]
    fn single_row() {
        // 8a - 5b = 0 has kernel (5, 8)
        let a = vec![vec![8, -5]];
        let k = integer_kernel_i64(&a, 2).unwrap();
        assert_eq!(k.len(), 1);
        let v = &k[0];
        assert!(v == &vec![5, 8] || v == &vec![-5, -8], "{v:?}");
    }

    #[test]
    fn rank_and_membership() {
        let a = vec![vec![2, 4, 6, 3], vec![1, -1, 0, 5]];
        let k = integer_kernel(&a, 4);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(apply(&a, v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn zero_matrix_has_full_kernel() {
        let k = integer_kernel_i64(&[vec![0, 0, 0]], 3).unwrap();
        assert_eq!(k.len(), 3);
    }

    #[test]
    fn overflow_falls_back_to_big_integers() {
        let big = (1i64 << 61) + 1;
        let a = vec![vec![big, big - 2, 3]];
        let k = integer_kernel(&a, 3);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!(apply(&a, v).iter().all(|x| x.is_zero()));
        }
    }
}
