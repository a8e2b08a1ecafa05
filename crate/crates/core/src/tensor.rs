//! Square complex tensors of order 2N and the Einstein product.
//!
//! A tensor with mode dimensions `(I₁,…,I_N)` has entries indexed by
//! `(i₁,…,i_N, j₁,…,j_N)`. The unfolding maps the row group `(i₁,…,i_N)` to
//! a row index in row-major mixed-radix order (last mode fastest), and the
//! column group the same way, producing a `d × d` matrix with `d = ∏ I_n`.
//! Under this map the Einstein product `★_N` is the matrix product, so every
//! operation here is carried out on the unfolded matrix.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{Cplx, Real};

/// Largest unfolded dimension accepted by [`Shape::new`].
pub const MAX_UNFOLDED_DIM: usize = 512;

/// Relative tolerance for accepting a tensor as Hermitian.
pub const TOL_HERMITIAN: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape {
    mode_dims: Vec<usize>,
    unfolded_dim: usize,
}

impl Shape {
    pub fn new(mode_dims: Vec<usize>) -> Result<Self> {
        Self::with_cap(mode_dims, MAX_UNFOLDED_DIM)
    }

    pub fn with_cap(mode_dims: Vec<usize>, cap: usize) -> Result<Self> {
        if mode_dims.is_empty() {
            return Err(Error::Shape("a tensor needs at least one mode".into()));
        }
        if mode_dims.contains(&0) {
            return Err(Error::Shape(format!("mode dimensions must be positive: {mode_dims:?}")));
        }
        let unfolded_dim = mode_dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .filter(|&d| d <= cap)
            .ok_or_else(|| Error::Range(format!("unfolded dimension of {mode_dims:?} exceeds cap {cap}")))?;
        Ok(Self { mode_dims, unfolded_dim })
    }

    pub fn mode_dims(&self) -> &[usize] {
        &self.mode_dims
    }

    pub fn order(&self) -> usize {
        self.mode_dims.len()
    }

    pub fn unfolded_dim(&self) -> usize {
        self.unfolded_dim
    }

    /// Mixed-radix position of a multi-index, last mode fastest.
    pub fn linear_index(&self, multi: &[usize]) -> Result<usize> {
        if multi.len() != self.order() {
            return Err(Error::Shape(format!("index of order {} for a tensor of order {}", multi.len(), self.order())));
        }
        let mut pos = 0;
        for (&i, &n) in multi.iter().zip(&self.mode_dims) {
            if i >= n {
                return Err(Error::Range(format!("index {i} out of bounds for mode of size {n}")));
            }
            pos = pos * n + i;
        }
        Ok(pos)
    }

    /// Inverse of [`Shape::linear_index`].
    pub fn multi_index(&self, mut pos: usize) -> Vec<usize> {
        let mut out = vec![0; self.order()];
        for (slot, &n) in out.iter_mut().zip(&self.mode_dims).rev() {
            *slot = pos % n;
            pos /= n;
        }
        out
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;
    fn try_from(v: Vec<usize>) -> Result<Self> {
        Shape::new(v)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.mode_dims
    }
}

/// Dense square tensor, stored as its unfolded matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SquareTensor<T: Real> {
    shape: Shape,
    matrix: Matrix<T>,
}

impl<T: Real> SquareTensor<T> {
    pub fn zeros(shape: &Shape) -> Self {
        Self { shape: shape.clone(), matrix: Matrix::zeros(shape.unfolded_dim()) }
    }

    pub fn identity(shape: &Shape) -> Self {
        Self { shape: shape.clone(), matrix: Matrix::identity(shape.unfolded_dim()) }
    }

    /// Builds the tensor entrywise from `(row multi-index, column multi-index)`.
    pub fn from_entries(shape: &Shape, mut f: impl FnMut(&[usize], &[usize]) -> Cplx<T>) -> Self {
        let matrix = Matrix::from_fn(shape.unfolded_dim(), |r, c| f(&shape.multi_index(r), &shape.multi_index(c)));
        Self { shape: shape.clone(), matrix }
    }

    /// Inverse of [`SquareTensor::unfold`].
    pub fn fold(shape: &Shape, matrix: Matrix<T>) -> Result<Self> {
        if matrix.dim() != shape.unfolded_dim() {
            return Err(Error::Shape(format!(
                "matrix of dimension {} cannot fold into modes {:?}",
                matrix.dim(),
                shape.mode_dims()
            )));
        }
        Ok(Self { shape: shape.clone(), matrix })
    }

    pub fn unfold(&self) -> Matrix<T> {
        self.matrix.clone()
    }

    pub fn as_matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix<T> {
        self.matrix
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.unfolded_dim()
    }

    pub fn entry(&self, rows: &[usize], cols: &[usize]) -> Result<Cplx<T>> {
        Ok(self.matrix[(self.shape.linear_index(rows)?, self.shape.linear_index(cols)?)])
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::Shape(format!("{:?} vs {:?}", self.shape.mode_dims(), other.shape.mode_dims())));
        }
        Ok(())
    }

    fn with_matrix(&self, matrix: Matrix<T>) -> Self {
        Self { shape: self.shape.clone(), matrix }
    }

    pub fn einstein_product(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.with_matrix(self.matrix.matmul(&other.matrix)?))
    }

    pub fn conjugate_transpose(&self) -> Self {
        self.with_matrix(self.matrix.adjoint())
    }

    /// Entrywise complex conjugate (no transposition).
    pub fn conjugate(&self) -> Self {
        self.with_matrix(self.matrix.map(|z| z.conj()))
    }

    pub fn trace(&self) -> Cplx<T> {
        self.matrix.trace()
    }

    /// `⟨x, y⟩ = Tr(xᴴ ★ y)`, evaluated as `Σ conj(x)·y` without forming the product.
    pub fn inner_product(&self, other: &Self) -> Result<Cplx<T>> {
        self.same_shape(other)?;
        Ok(self
            .matrix
            .as_slice()
            .iter()
            .zip(other.matrix.as_slice())
            .fold(Cplx::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a.conj() * b))
    }

    pub fn frobenius_norm(&self) -> T {
        self.matrix.frobenius_norm()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.with_matrix(self.matrix.add(&other.matrix)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(self.with_matrix(self.matrix.sub(&other.matrix)?))
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        self.with_matrix(self.matrix.scale(s))
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.with_matrix(self.matrix.scale_real(s))
    }

    /// Two-sided inverse under the Einstein product.
    pub fn inverse(&self) -> Result<Self> {
        Ok(self.with_matrix(self.matrix.inverse()?))
    }

    /// `self ★ self ★ … ★ self` (`p` factors, identity for `p = 0`).
    pub fn power(&self, p: usize) -> Self {
        self.with_matrix(self.matrix.powi(p))
    }

    pub fn is_hermitian(&self, rel_tol: T) -> bool {
        self.matrix.is_hermitian(rel_tol)
    }

    /// Sum of a non-empty sequence of equally shaped tensors.
    pub fn sum<'a>(items: impl IntoIterator<Item = &'a Self>) -> Result<Self> {
        let mut it = items.into_iter();
        let first = it.next().ok_or_else(|| Error::Range("empty tensor sum".into()))?.clone();
        it.try_fold(first, |acc, t| acc.add(t))
    }

    /// Right-to-left-free product `t₁ ★ t₂ ★ … ★ t_n` in index order.
    pub fn product<'a>(items: impl IntoIterator<Item = &'a Self>) -> Result<Self> {
        let mut it = items.into_iter();
        let first = it.next().ok_or_else(|| Error::Range("empty tensor product".into()))?.clone();
        it.try_fold(first, |acc, t| acc.einstein_product(t))
    }

    pub fn cast<U: Real>(&self) -> SquareTensor<U> {
        let m = Matrix::from_fn(self.dim(), |i, j| {
            let z = self.matrix[(i, j)];
            Cplx::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))
        });
        SquareTensor { shape: self.shape.clone(), matrix: m }
    }

    /// Entries with independent standard complex normal law (`E|z|² = 1`).
    pub fn random_gaussian<R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = Matrix::from_fn(shape.unfolded_dim(), |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Cplx::new(T::lit(re * s), T::lit(im * s))
        });
        Self { shape: shape.clone(), matrix: m }
    }

    /// Haar-distributed unitary tensor (QR of a Ginibre draw).
    pub fn random_unitary<R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Self {
        loop {
            let g = Self::random_gaussian(shape, rng);
            if let Ok(q) = g.matrix.qr_unitary() {
                return Self { shape: shape.clone(), matrix: q };
            }
        }
    }
}

/// A square tensor whose unfolding is exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianTensor<T: Real> {
    base: SquareTensor<T>,
}

impl<T: Real> HermitianTensor<T> {
    /// Accepts `t` if its unfolding is Hermitian within [`TOL_HERMITIAN`]
    /// (relative), then stores the exact symmetrization `(M + Mᴴ)/2`.
    pub fn new(t: SquareTensor<T>) -> Result<Self> {
        Self::with_tolerance(t, T::lit(TOL_HERMITIAN))
    }

    pub fn with_tolerance(t: SquareTensor<T>, rel_tol: T) -> Result<Self> {
        if !t.is_hermitian(rel_tol) {
            return Err(Error::Domain("tensor is not Hermitian within tolerance".into()));
        }
        Ok(Self::symmetrized(&t))
    }

    /// Hermitian part `(t + tᴴ)/2` of an arbitrary square tensor.
    pub fn symmetrized(t: &SquareTensor<T>) -> Self {
        Self { base: t.with_matrix(t.matrix.hermitian_part()) }
    }

    pub fn identity(shape: &Shape) -> Self {
        Self { base: SquareTensor::identity(shape) }
    }

    pub fn zeros(shape: &Shape) -> Self {
        Self { base: SquareTensor::zeros(shape) }
    }

    /// Real diagonal unfolding.
    pub fn from_diagonal(shape: &Shape, diag: &[T]) -> Result<Self> {
        if diag.len() != shape.unfolded_dim() {
            return Err(Error::Shape(format!("{} diagonal entries for dimension {}", diag.len(), shape.unfolded_dim())));
        }
        Ok(Self { base: SquareTensor::fold(shape, Matrix::from_diag_real(diag))? })
    }

    pub fn as_tensor(&self) -> &SquareTensor<T> {
        &self.base
    }

    pub fn into_tensor(self) -> SquareTensor<T> {
        self.base
    }

    pub fn shape(&self) -> &Shape {
        self.base.shape()
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self::symmetrized(&self.base.add(&other.base)?))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self::symmetrized(&self.base.sub(&other.base)?))
    }

    pub fn scale(&self, s: T) -> Self {
        Self { base: self.base.scale_real(s) }
    }

    /// Random Hermitian tensor: Hermitian part of a Ginibre draw.
    pub fn random<R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Self {
        Self::symmetrized(&SquareTensor::random_gaussian(shape, rng))
    }

    /// `U diag(λ) Uᴴ` for a Haar unitary `U`.
    pub fn with_spectrum_in_random_basis<R: Rng + ?Sized>(shape: &Shape, spectrum: &[T], rng: &mut R) -> Result<Self> {
        let u = SquareTensor::random_unitary(shape, rng);
        Self::with_spectrum_in_basis(&u, spectrum)
    }

    /// `U diag(λ) Uᴴ` for a given unitary `U`.
    pub fn with_spectrum_in_basis(u: &SquareTensor<T>, spectrum: &[T]) -> Result<Self> {
        let d = Self::from_diagonal(u.shape(), spectrum)?;
        let m = u.einstein_product(&d.base)?.einstein_product(&u.conjugate_transpose())?;
        Ok(Self::symmetrized(&m))
    }

    /// Random positive definite tensor with eigenvalues uniform in `[lo, hi]`.
    pub fn random_positive_definite<R: Rng + ?Sized>(shape: &Shape, lo: f64, hi: f64, rng: &mut R) -> Self {
        let spectrum: Vec<T> = (0..shape.unfolded_dim()).map(|_| T::lit(rng.random_range(lo..=hi))).collect();
        Self::with_spectrum_in_random_basis(shape, &spectrum, rng).expect("spectrum length matches shape")
    }
}

/// JSON literal: `{"mode_dims":[...], "entries_re":[...], "entries_im":[...]}`
/// with entries listed in unfolding order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorLiteral {
    pub mode_dims: Vec<usize>,
    pub entries_re: Vec<f64>,
    pub entries_im: Vec<f64>,
}

impl TensorLiteral {
    pub fn to_tensor<T: Real>(&self) -> Result<SquareTensor<T>> {
        let shape = Shape::new(self.mode_dims.clone())?;
        let n = shape.unfolded_dim() * shape.unfolded_dim();
        if self.entries_re.len() != n || self.entries_im.len() != n {
            return Err(Error::Shape(format!(
                "expected {n} entries, got {} real and {} imaginary",
                self.entries_re.len(),
                self.entries_im.len()
            )));
        }
        let data = self
            .entries_re
            .iter()
            .zip(&self.entries_im)
            .map(|(&re, &im)| Cplx::new(T::lit(re), T::lit(im)))
            .collect();
        SquareTensor::fold(&shape, Matrix::from_row_major(data)?)
    }

    pub fn from_tensor<T: Real>(t: &SquareTensor<T>) -> Self {
        let (re, im) = t.matrix.as_slice().iter().map(|z| (z.re.as_f64(), z.im.as_f64())).unzip();
        Self { mode_dims: t.shape.mode_dims().to_vec(), entries_re: re, entries_im: im }
    }
}
