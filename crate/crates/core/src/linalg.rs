//! Small dense linear algebra for the finite-dimensional solvers (a handful of unknowns).

use crate::scalar::{lit, Scalar};

/// Row-major square or rectangular matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], x))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs_diag(&self) -> T {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)].abs())
            .fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Mat<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Mat<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm_inf<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

/// Solves `A x = b` for symmetric positive definite `A` via Cholesky. Returns `None` when `A`
/// is not numerically positive definite.
pub fn cholesky_solve<T: Scalar>(a: &Mat<T>, b: &[T]) -> Option<Vec<T>> {
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d = d - l[(j, k)] * l[(j, k)];
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s = s - l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s = s - l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s = s - l[(k, i)] * y[k];
        }
        y[i] = s / l[(i, i)];
    }
    Some(y)
}

/// Solves an SPD system, adding a growing multiple of the identity until the factorization
/// succeeds.
pub fn regularized_spd_solve<T: Scalar>(a: &Mat<T>, b: &[T]) -> Vec<T> {
    let scale = a.max_abs_diag().max(T::min_positive_value());
    let mut shift = scale * lit(1e-13);
    let mut work = a.clone();
    for _ in 0..40 {
        for i in 0..a.rows {
            work[(i, i)] = a[(i, i)] + shift;
        }
        if let Some(x) = cholesky_solve(&work, b) {
            return x;
        }
        shift = shift * lit(10.0);
    }
    vec![T::zero(); b.len()]
}

/// Orthonormal basis of the null space `{x : A x = 0}` as columns, computed by Gauss-Jordan
/// elimination with partial pivoting followed by modified Gram-Schmidt.
pub fn null_space<T: Scalar>(a: &Mat<T>, tol: T) -> Vec<Vec<T>> {
    let (m, n) = (a.rows, a.cols);
    let mut r = a.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    let scale = r
        .data
        .iter()
        .fold(T::zero(), |s, &x| s.max(x.abs()))
        .max(T::one());
    for col in 0..n {
        if row >= m {
            break;
        }
        let (best, val) = (row..m)
            .map(|i| (i, r[(i, col)].abs()))
            .fold((row, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc });
        if val <= tol * scale {
            continue;
        }
        for j in 0..n {
            let tmp = r[(row, j)];
            r[(row, j)] = r[(best, j)];
            r[(best, j)] = tmp;
        }
        let p = r[(row, col)];
        for j in 0..n {
            r[(row, j)] = r[(row, j)] / p;
        }
        for i in 0..m {
            if i != row {
                let f = r[(i, col)];
                if f != T::zero() {
                    for j in 0..n {
                        r[(i, j)] = r[(i, j)] - f * r[(row, j)];
                    }
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(free.len());
    for &f in &free {
        let mut v = vec![T::zero(); n];
        v[f] = T::one();
        for (prow, &pc) in pivots.iter().enumerate() {
            v[pc] = -r[(prow, f)];
        }
        for b in &basis {
            let c = dot(&v, b);
            for (vi, &bi) in v.iter_mut().zip(b) {
                *vi = *vi - c * bi;
            }
        }
        let nrm = dot(&v, &v).sqrt();
        if nrm > tol {
            v.iter_mut().for_each(|x| *x = *x / nrm);
            basis.push(v);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Mat::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]);
        let x = cholesky_solve(&a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0_f64).abs() < 1e-14);
        assert!((x[0] + 3.0 * x[1] - 2.0_f64).abs() < 1e-14);
        let singular = Mat::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(cholesky_solve(&singular, &[1.0_f64, 1.0]).is_none());
    }

    #[test]
    fn null_space_of_rank_deficient_matrix() {
        let a = Mat::from_rows(&[vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0_f64]]);
        let ns = null_space(&a, 1e-12);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!(norm_inf(&a.mul_vec(v)) < 1e-12);
            assert!((dot(v, v) - 1.0).abs() < 1e-12);
        }
        assert!(dot(&ns[0], &ns[1]).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_empty_constraint_set_is_everything() {
        let a: Mat<f64> = Mat::zeros(0, 3);
        assert_eq!(null_space(&a, 1e-12).len(), 3);
    }
}
