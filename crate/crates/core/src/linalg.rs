//! Dense square complex matrices: the unfolded representation of square tensors.

use std::ops::{Index, IndexMut};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cone, czero, Cplx, Real};

/// Row-major `dim × dim` complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T: Real> {
    dim: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![czero(); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = cone();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Cplx<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    pub fn from_diag_real(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = Cplx::new(v, T::zero());
        }
        m
    }

    /// Wraps a row-major buffer; fails unless `data.len()` is a perfect square.
    pub fn from_row_major(data: Vec<Cplx<T>>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim * dim != data.len() {
            return Err(Error::Shape(format!("{} entries do not form a square matrix", data.len())));
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Cplx<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Cplx<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Cplx<T>> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<Cplx<T>> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::Shape(format!("{}x{} vs {}x{}", self.dim, self.dim, other.dim, other.dim)));
        }
        Ok(())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a.is_zero() {
                    continue;
                }
                let row = &other.data[k * d..(k + 1) * d];
                let dst = &mut out.data[i * d..(i + 1) * d];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a + b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.zip_with(other, |a, b| a - b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Cplx<T>, Cplx<T>) -> Cplx<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn scale_real(&self, s: T) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| a * s).collect() }
    }

    pub fn map(&self, f: impl Fn(Cplx<T>) -> Cplx<T>) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&a| f(a)).collect() }
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..self.dim).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn frobenius_norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }

    /// `‖M − Mᴴ‖_F ≤ tol · max(1, ‖M‖_F)`.
    pub fn is_hermitian(&self, tol: T) -> bool {
        let d = self.dim;
        let mut dev = T::zero();
        for i in 0..d {
            for j in 0..d {
                dev += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        dev.sqrt() <= tol * self.frobenius_norm().max(T::one())
    }

    /// `(M + Mᴴ)/2`, with an exactly real diagonal.
    pub fn hermitian_part(&self) -> Self {
        let half = T::lit(0.5);
        let mut out = Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * half);
        for i in 0..self.dim {
            out[(i, i)].im = T::zero();
        }
        out
    }

    pub fn powi(&self, p: usize) -> Self {
        let mut acc = Self::identity(self.dim);
        for _ in 0..p {
            acc = acc.matmul(self).expect("same dimension");
        }
        acc
    }

    /// Determinant by LU with partial pivoting.
    pub fn determinant(&self) -> Cplx<T> {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut det = cone::<T>();
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&r, &s| a[r * d + col].norm().partial_cmp(&a[s * d + col].norm()).unwrap())
                .unwrap();
            let p = a[pivot * d + col];
            if p.is_zero() {
                return czero();
            }
            if pivot != col {
                for j in 0..d {
                    a.swap(pivot * d + j, col * d + j);
                }
                det = -det;
            }
            det *= p;
            for r in col + 1..d {
                let factor = a[r * d + col] / p;
                if factor.is_zero() {
                    continue;
                }
                for j in col..d {
                    let v = a[col * d + j];
                    a[r * d + j] -= factor * v;
                }
            }
        }
        det
    }

    /// Gauss–Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        let d = self.dim;
        let mut a = self.data.clone();
        let mut inv = Self::identity(d).data;
        let scale = self.frobenius_norm().max(T::min_positive_value());
        for col in 0..d {
            let pivot = (col..d)
                .max_by(|&r, &s| a[r * d + col].norm().partial_cmp(&a[s * d + col].norm()).unwrap())
                .unwrap();
            let p = a[pivot * d + col];
            if p.norm() <= T::epsilon() * scale * T::lit(d as f64) {
                return Err(Error::Domain("matrix is singular to working precision".into()));
            }
            if pivot != col {
                for j in 0..d {
                    a.swap(pivot * d + j, col * d + j);
                    inv.swap(pivot * d + j, col * d + j);
                }
            }
            let pinv = Cplx::<T>::one() / p;
            for j in 0..d {
                a[col * d + j] *= pinv;
                inv[col * d + j] *= pinv;
            }
            for r in 0..d {
                if r == col {
                    continue;
                }
                let factor = a[r * d + col];
                if factor.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let (av, iv) = (a[col * d + j], inv[col * d + j]);
                    a[r * d + j] -= factor * av;
                    inv[r * d + j] -= factor * iv;
                }
            }
        }
        Ok(Self { dim: d, data: inv })
    }

    /// Determinant of the submatrix selected by `rows × cols`.
    pub fn minor(&self, rows: &[usize], cols: &[usize]) -> Cplx<T> {
        let sub = Self::from_fn(rows.len(), |i, j| self[(rows[i], cols[j])]);
        sub.determinant()
    }

    /// Unitary factor of a QR factorization (modified Gram–Schmidt), with
    /// column phases fixed so that `R` has a positive real diagonal.
    pub fn qr_unitary(&self) -> Result<Self> {
        let d = self.dim;
        let mut cols: Vec<Vec<Cplx<T>>> = (0..d).map(|j| self.column(j)).collect();
        for j in 0..d {
            for k in 0..j {
                let (done, rest) = cols.split_at_mut(j);
                let q = &done[k];
                let v = &mut rest[0];
                let proj: Cplx<T> = q.iter().zip(v.iter()).fold(czero(), |acc, (&qi, &vi)| acc + qi.conj() * vi);
                for (vi, &qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
            let norm = cols[j].iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            if norm <= T::epsilon() {
                return Err(Error::Domain("rank-deficient input to QR".into()));
            }
            for vi in cols[j].iter_mut() {
                *vi = *vi / norm;
            }
        }
        Ok(Self::from_fn(d, |i, j| cols[j][i]))
    }
}

impl<T: Real> Index<(usize, usize)> for Matrix<T> {
    type Output = Cplx<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Cplx<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[i * self.dim + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn determinant_and_inverse_agree() {
        let m = Matrix::<f64>::from_fn(3, |i, j| Cplx::new((i * 3 + j) as f64 + 1.0, (i as f64) - (j as f64)));
        let m = m.add(&Matrix::identity(3).scale_real(5.0)).unwrap();
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv).unwrap();
        assert!(prod.max_abs_diff(&Matrix::identity(3)) < 1e-12);
        let det_prod = m.determinant() * inv.determinant();
        assert!((det_prod - cone::<f64>()).norm() < 1e-12);
    }

    #[test]
    fn singular_inverse_is_rejected() {
        let m = Matrix::<f64>::from_fn(2, |_, _| cone());
        assert!(m.inverse().is_err());
        assert!(m.determinant().norm() < 1e-15);
    }

    #[test]
    fn qr_unitary_is_unitary() {
        let m = Matrix::<f64>::from_fn(4, |i, j| Cplx::new(((i * 7 + j * 3) % 5) as f64 - 2.0, (i + 2 * j) as f64 * 0.1));
        let m = m.add(&Matrix::identity(4)).unwrap();
        let q = m.qr_unitary().unwrap();
        let qhq = q.adjoint().matmul(&q).unwrap();
        assert!(qhq.max_abs_diff(&Matrix::identity(4)) < 1e-12);
    }
}
