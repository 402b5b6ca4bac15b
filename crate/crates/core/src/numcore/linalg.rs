//! Dense vectors and matrices, plus the regularized solve used by the
//! leader's implicit-gradient correction.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};

/// Condition estimates above this are treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// Flat parameter vector of one policy.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        dot(&self.0, other)
    }

    pub fn norm(&self) -> f64 {
        self.dot(&self.0).sqrt()
    }

    /// `self += scale * other`
    pub fn axpy(&mut self, scale: f64, other: &[f64]) {
        assert_eq!(self.0.len(), other.len(), "axpy dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(other) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.0 {
            *a *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl From<Vec<f64>> for ParamVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl Deref for ParamVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for ParamVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "dot dimension mismatch");
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
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

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `self += scale * u vᵀ`
    pub fn add_outer(&mut self, scale: f64, u: &[f64], v: &[f64]) {
        assert_eq!(u.len(), self.rows);
        assert_eq!(v.len(), self.cols);
        if scale == 0.0 {
            return;
        }
        for (i, &ui) in u.iter().enumerate() {
            let s = scale * ui;
            if s == 0.0 {
                continue;
            }
            for (a, &vj) in self.row_mut(i).iter_mut().zip(v) {
                *a += s * vj;
            }
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, scale: f64, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }

    /// Replaces the matrix by `(A + Aᵀ)/2`. The result is exactly symmetric.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (self[(i, j)] + self[(j, i)]);
                self[(i, j)] = avg;
                self[(j, i)] = avg;
            }
        }
    }

    pub fn max_asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Config(format!("LU needs a square matrix, got {}x{}", a.rows, a.cols)));
        }
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu[i * n + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::Numeric {
                    message: format!("zero pivot in column {k}"),
                    condition: f64::INFINITY,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = 1.0 / lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] * inv;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in (k + 1)..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "rhs dimension mismatch");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = ((i + 1)..n).map(|j| self.lu[i * n + j] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[i * n + i];
        }
        x
    }

    /// 1-norm condition number, using an explicit inverse (n is small here).
    pub fn condition_one(&self, a: &DenseMatrix) -> f64 {
        let n = self.n;
        let mut inv_norm = 0.0f64;
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = self.solve(&e);
            e[j] = 0.0;
            inv_norm = inv_norm.max(col.iter().map(|v| v.abs()).sum());
        }
        a.norm_one() * inv_norm
    }
}

/// Builds `-H + λI`.
pub fn regularized_system(h: &DenseMatrix, lambda: f64) -> DenseMatrix {
    let mut a = h.clone();
    a.scale(-1.0);
    for i in 0..a.rows {
        a[(i, i)] += lambda;
    }
    a
}

/// Solves `(-H + λI) x = v` by LU with one step of iterative refinement.
///
/// Fails with [`Error::Numeric`] when the regularized system is singular or
/// its condition estimate exceeds [`MAX_CONDITION`].
pub fn regularized_solve(h: &DenseMatrix, lambda: f64, v: &[f64]) -> Result<Vec<f64>> {
    if !h.is_square() || h.rows() != v.len() {
        return Err(Error::Config(format!(
            "regularized_solve: H is {}x{}, v has length {}",
            h.rows(),
            h.cols(),
            v.len()
        )));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config(format!("regularization must be nonnegative, got {lambda}")));
    }
    if v.is_empty() {
        return Ok(Vec::new());
    }
    let a = regularized_system(h, lambda);
    if !a.is_finite() {
        return Err(Error::Numeric { message: "non-finite Hessian estimate".into(), condition: f64::INFINITY });
    }
    let lu = Lu::factor(&a)?;
    let condition = lu.condition_one(&a);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Numeric { message: "regularized Hessian is ill-conditioned".into(), condition });
    }
    let mut x = lu.solve(v);
    let residual: Vec<f64> = a.matvec(&x).iter().zip(v).map(|(ax, b)| b - ax).collect();
    let dx = lu.solve(&residual);
    for (xi, d) in x.iter_mut().zip(dx) {
        *xi += d;
    }
    Ok(x)
}

/// Matrix-free conjugate gradient on a symmetric positive-definite operator.
/// Returns the iterate and the number of iterations used.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize)
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rs_old = dot(&r, &r);
    let target = tol * tol * rs_old.max(f64::MIN_POSITIVE);
    for it in 0..max_iter {
        if rs_old <= target {
            return (x, it);
        }
        let ap = apply(&p);
        let curvature = dot(&p, &ap);
        if curvature <= 0.0 {
            return (x, it);
        }
        let step = rs_old / curvature;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }
    (x, max_iter)
}

/// CG solve of `(-H + λI) x = v`; only valid when `-H + λI` is positive definite.
pub fn regularized_solve_cg(h: &DenseMatrix, lambda: f64, v: &[f64], tol: f64) -> Vec<f64> {
    let (x, _) = conjugate_gradient(
        |p| {
            let hp = h.matvec(p);
            hp.iter().zip(p).map(|(a, b)| lambda * b - a).collect()
        },
        v,
        tol,
        10 * v.len().max(1),
    );
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual(h: &DenseMatrix, lambda: f64, x: &[f64], v: &[f64]) -> f64 {
        let a = regularized_system(h, lambda);
        let ax = a.matvec(x);
        norm(&ax.iter().zip(v).map(|(p, q)| p - q).collect::<Vec<_>>())
    }

    #[test]
    fn zero_hessian_unit_lambda_is_identity() {
        let h = DenseMatrix::zeros(3, 3);
        let v = [1.5, -2.0, 0.25];
        let x = regularized_solve(&h, 1.0, &v).unwrap();
        assert_eq!(x, v.to_vec());
    }

    #[test]
    fn negative_identity_without_regularization() {
        let mut h = DenseMatrix::identity(4);
        h.scale(-1.0);
        let v = [1.0, 2.0, 3.0, -4.0];
        let x = regularized_solve(&h, 0.0, &v).unwrap();
        for (a, b) in x.iter().zip(v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_hand_inverse() {
        let h = DenseMatrix::from_rows(&[vec![-2.0, 0.0], vec![0.0, -4.0]]);
        let x = regularized_solve(&h, 0.0, &[1.0, 1.0]).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-15);
        assert!((x[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn singular_system_reports_condition() {
        let h = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        match regularized_solve(&h, 0.0, &[1.0, 0.0]) {
            Err(Error::Numeric { condition, .. }) => assert!(condition > MAX_CONDITION),
            other => panic!("expected numeric error, got {other:?}"),
        }
        // Regularization restores invertibility.
        assert!(regularized_solve(&h, 1.0, &[1.0, 0.0]).is_ok());
    }

    #[test]
    fn negative_lambda_rejected() {
        let h = DenseMatrix::zeros(2, 2);
        assert!(matches!(regularized_solve(&h, -1.0, &[1.0, 1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn empty_system() {
        let h = DenseMatrix::zeros(0, 0);
        assert!(regularized_solve(&h, 1.0, &[]).unwrap().is_empty());
    }

    #[test]
    fn general_system_residual_bound() {
        let h = DenseMatrix::from_rows(&[
            vec![-3.0, 1.0, 0.5],
            vec![1.0, -2.0, 0.25],
            vec![0.5, 0.25, -1.0],
        ]);
        let v = [1.0, -1.0, 2.0];
        let x = regularized_solve(&h, 0.1, &v).unwrap();
        assert!(residual(&h, 0.1, &x, &v) <= 1e-8 * (1.0 + norm(&v)));
    }

    #[test]
    fn cg_matches_direct_on_spd() {
        let h = DenseMatrix::from_rows(&[
            vec![-4.0, 1.0, 0.0],
            vec![1.0, -3.0, 1.0],
            vec![0.0, 1.0, -2.0],
        ]);
        let v = [1.0, 2.0, 3.0];
        let direct = regularized_solve(&h, 0.5, &v).unwrap();
        let cg = regularized_solve_cg(&h, 0.5, &v, 1e-12);
        for (a, b) in direct.iter().zip(&cg) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn symmetrize_is_exact() {
        let mut m = DenseMatrix::from_rows(&[vec![1.0, 0.1 + 0.2], vec![0.3, 2.0]]);
        m.symmetrize();
        assert_eq!(m.max_asymmetry(), 0.0);
    }
}
