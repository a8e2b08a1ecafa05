//! Hermitian eigendecomposition and the spectral functional calculus.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::{czero, Cplx, Real};
use crate::tensor::{HermitianTensor, Shape, SquareTensor};

pub const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
/// Negative Gram eigenvalues above `-CLAMP_TOL · max(1, λ₁)` are rounded to zero.
pub const CLAMP_TOL: f64 = 1e-10;
pub const RANK_TOL: f64 = 1e-10;

/// Eigenvalues (descending) and orthonormal eigenvectors of a Hermitian matrix.
///
/// Column `i` of `vectors` is the unfolded eigen-tensor for `eigenvalues[i]`.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition<T: Real> {
    shape: Shape,
    eigenvalues: Vec<T>,
    vectors: Matrix<T>,
}

/// Singular values, descending and nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularSpectrum<T: Real> {
    pub singular_values: Vec<T>,
}

impl<T: Real> SingularSpectrum<T> {
    pub fn values(&self) -> &[T] {
        &self.singular_values
    }

    pub fn largest(&self) -> T {
        self.singular_values.first().copied().unwrap_or_else(T::zero)
    }
}

/// Allowed eigenvalue domain for [`tensor_function`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    All,
    NonNegative,
    Positive,
}

impl Domain {
    fn admits<T: Real>(self, x: T) -> bool {
        match self {
            Domain::All => x.is_finite(),
            Domain::NonNegative => x >= T::zero(),
            Domain::Positive => x > T::zero(),
        }
    }
}

/// Cyclic complex Jacobi on a Hermitian matrix. Returns unsorted diagonal and
/// accumulated rotations.
fn jacobi<T: Real>(m: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let d = m.dim();
    let mut a = m.hermitian_part();
    let mut v = Matrix::<T>::identity(d);
    let tol_factor = T::lit(OFF_DIAGONAL_TOL).max(T::epsilon() * T::lit(10.0));
    let tol = tol_factor * a.frobenius_norm();

    let off_norm = |a: &Matrix<T>| {
        let mut s = T::zero();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    s += a[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= tol || d < 2 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::Convergence { sweeps, off_norm: off.as_f64() });
        }
        sweeps += 1;
        for p in 0..d - 1 {
            for q in p + 1..d {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == T::zero() {
                    continue;
                }
                let phase = Cplx::from_polar(T::one(), -apq.arg());
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (T::lit(2.0) * g);
                let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                let t = sign / (theta.abs() + (theta * theta + T::one()).sqrt());
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                // G = diag(1, e^{-iφ}) · [[c, s], [-s, c]] on the (p, q) plane.
                let gpp = Cplx::new(c, T::zero());
                let gpq = Cplx::new(s, T::zero());
                let gqp = phase * (-s);
                let gqq = phase * c;

                for k in 0..d {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * gpp + akq * gqp;
                    a[(k, q)] = akp * gpq + akq * gqq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
                    a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
                }
                a[(p, q)] = czero();
                a[(q, p)] = czero();
                a[(p, p)].im = T::zero();
                a[(q, q)].im = T::zero();
                for k in 0..d {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * gpp + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * gqq;
                }
            }
        }
    }
    Ok(((0..d).map(|i| a[(i, i)].re).collect(), v))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending
/// (stable with respect to the Jacobi diagonal order on ties).
pub fn eig_hermitian_matrix<T: Real>(m: &Matrix<T>) -> Result<(Vec<T>, Matrix<T>)> {
    let (diag, v) = jacobi(m)?;
    let mut order: Vec<usize> = (0..diag.len()).collect();
    order.sort_by(|&i, &j| diag[j].partial_cmp(&diag[i]).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| diag[i]).collect();
    let vectors = Matrix::from_fn(m.dim(), |r, c| v[(r, order[c])]);
    Ok((values, vectors))
}

pub fn eig_hermitian<T: Real>(h: &HermitianTensor<T>) -> Result<SpectralDecomposition<T>> {
    let (eigenvalues, vectors) = eig_hermitian_matrix(h.as_tensor().as_matrix())?;
    Ok(SpectralDecomposition { shape: h.shape().clone(), eigenvalues, vectors })
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// Unitary whose columns are the unfolded eigen-tensors.
    pub fn eigenvector_matrix(&self) -> &Matrix<T> {
        &self.vectors
    }

    pub fn eigen_tensor(&self, i: usize) -> Vec<Cplx<T>> {
        self.vectors.column(i)
    }

    /// Number of eigenvalues with `|λ| > 1e-10 · max(1, |λ₁|)`.
    pub fn hermitian_rank(&self) -> usize {
        let top = self.eigenvalues.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tol = T::lit(RANK_TOL) * top.max(T::one());
        self.eigenvalues.iter().filter(|x| x.abs() > tol).count()
    }

    /// Eigenpairs with nonzero eigenvalue only.
    pub fn rank_truncated(&self) -> (Vec<T>, Vec<Vec<Cplx<T>>>) {
        let top = self.eigenvalues.iter().fold(T::zero(), |m, x| m.max(x.abs()));
        let tol = T::lit(RANK_TOL) * top.max(T::one());
        self.eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > tol)
            .map(|(i, &x)| (x, self.eigen_tensor(i)))
            .unzip()
    }

    pub fn min_eigenvalue(&self) -> T {
        self.eigenvalues.last().copied().unwrap_or_else(T::zero)
    }

    pub fn max_eigenvalue(&self) -> T {
        self.eigenvalues.first().copied().unwrap_or_else(T::zero)
    }

    /// `V diag(w) Vᴴ` for complex weights.
    pub fn synthesize_complex(&self, w: &[Cplx<T>]) -> SquareTensor<T> {
        let v = &self.vectors;
        let d = v.dim();
        let m = Matrix::from_fn(d, |i, j| {
            (0..d).fold(czero(), |acc, k| acc + v[(i, k)] * w[k] * v[(j, k)].conj())
        });
        SquareTensor::fold(&self.shape, m).expect("dimension matches shape")
    }

    /// `V diag(w) Vᴴ` for real weights; Hermitian by construction.
    pub fn synthesize(&self, w: &[T]) -> HermitianTensor<T> {
        let wc: Vec<Cplx<T>> = w.iter().map(|&x| Cplx::new(x, T::zero())).collect();
        HermitianTensor::symmetrized(&self.synthesize_complex(&wc))
    }

    pub fn reconstruct(&self) -> HermitianTensor<T> {
        self.synthesize(&self.eigenvalues)
    }

    /// `Σ f(λ_i) 𝒰_i 𝒰_iᴴ` after checking every eigenvalue lies in `domain`.
    pub fn apply(&self, f: impl Fn(T) -> T, domain: Domain) -> Result<HermitianTensor<T>> {
        if let Some(bad) = self.eigenvalues.iter().find(|&&x| !domain.admits(x)) {
            return Err(Error::Domain(format!("eigenvalue {bad} outside the {domain:?} domain")));
        }
        let w: Vec<T> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        Ok(self.synthesize(&w))
    }

    /// `Σ λ_i^z 𝒰_i 𝒰_iᴴ` with `λ^z = exp(z ln λ)`; requires a positive spectrum.
    pub fn complex_power(&self, z: Cplx<T>) -> Result<SquareTensor<T>> {
        if self.min_eigenvalue() <= T::zero() {
            return Err(Error::Domain(format!(
                "complex power needs a positive definite tensor, smallest eigenvalue {}",
                self.min_eigenvalue()
            )));
        }
        let w: Vec<Cplx<T>> = self.eigenvalues.iter().map(|&l| (z * l.ln()).exp()).collect();
        Ok(self.synthesize_complex(&w))
    }
}

pub fn tensor_function<T: Real>(h: &HermitianTensor<T>, f: impl Fn(T) -> T, domain: Domain) -> Result<HermitianTensor<T>> {
    eig_hermitian(h)?.apply(f, domain)
}

pub fn tensor_exp<T: Real>(h: &HermitianTensor<T>) -> Result<HermitianTensor<T>> {
    tensor_function(h, T::exp, Domain::All)
}

pub fn tensor_log<T: Real>(h: &HermitianTensor<T>) -> Result<HermitianTensor<T>> {
    tensor_function(h, T::ln, Domain::Positive)
}

pub fn complex_power<T: Real>(h: &HermitianTensor<T>, z: Cplx<T>) -> Result<SquareTensor<T>> {
    eig_hermitian(h)?.complex_power(z)
}

fn clamp_gram<T: Real>(values: &mut [T]) -> Result<()> {
    let top = values.first().copied().unwrap_or_else(T::zero);
    let tol = T::lit(CLAMP_TOL) * top.max(T::one());
    for x in values.iter_mut() {
        if *x < T::zero() {
            if *x < -tol {
                return Err(Error::Consistency(format!("Gram matrix has eigenvalue {x}")));
            }
            *x = T::zero();
        }
    }
    Ok(())
}

/// Eigenvalues of `tᴴ★t`, clamped at zero.
fn gram_eigen<T: Real>(t: &SquareTensor<T>) -> Result<SpectralDecomposition<T>> {
    let gram = t.conjugate_transpose().einstein_product(t)?;
    let mut dec = eig_hermitian(&HermitianTensor::symmetrized(&gram))?;
    clamp_gram(&mut dec.eigenvalues)?;
    Ok(dec)
}

/// Singular values of a plain matrix of any size (no tensor shape cap).
pub fn singular_values_matrix<T: Real>(m: &Matrix<T>) -> Result<SingularSpectrum<T>> {
    let gram = m.adjoint().matmul(m)?;
    let (mut values, _) = eig_hermitian_matrix(&gram)?;
    clamp_gram(&mut values)?;
    Ok(SingularSpectrum { singular_values: values.iter().map(|x| x.sqrt()).collect() })
}

/// `|t| = √(tᴴ★t)`.
pub fn absolute_value<T: Real>(t: &SquareTensor<T>) -> Result<HermitianTensor<T>> {
    gram_eigen(t)?.apply(T::sqrt, Domain::NonNegative)
}

/// `σ_i(t) = λ_i(|t|)`, descending.
pub fn singular_spectrum<T: Real>(t: &SquareTensor<T>) -> Result<SingularSpectrum<T>> {
    let dec = gram_eigen(t)?;
    Ok(SingularSpectrum { singular_values: dec.eigenvalues.iter().map(|x| x.sqrt()).collect() })
}

/// Product of all eigenvalues.
pub fn hermitian_determinant<T: Real>(h: &HermitianTensor<T>) -> Result<T> {
    Ok(eig_hermitian(h)?.eigenvalues.iter().fold(T::one(), |acc, &x| acc * x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn rel_err(a: &SquareTensor<f64>, b: &SquareTensor<f64>) -> f64 {
        a.sub(b).unwrap().frobenius_norm() / b.frobenius_norm().max(1e-300)
    }

    /// Roots of det(λI − H) for a 3×3 Hermitian H, found by bisection on the
    /// real cubic with coefficients from traces.
    fn char_poly_roots(h: &Matrix<f64>) -> Vec<f64> {
        let tr = h.trace().re;
        let h2 = h.matmul(h).unwrap();
        let c2 = 0.5 * (tr * tr - h2.trace().re);
        let det = h.determinant().re;
        let p = |x: f64| x * x * x - tr * x * x + c2 * x - det;
        let bound = 1.0 + h.frobenius_norm();
        // Sample densely to isolate sign changes, then bisect each.
        let n = 20000;
        let xs: Vec<f64> = (0..=n).map(|i| -bound + 2.0 * bound * i as f64 / n as f64).collect();
        let mut roots = Vec::new();
        for w in xs.windows(2) {
            let (mut lo, mut hi) = (w[0], w[1]);
            if p(lo) == 0.0 {
                roots.push(lo);
                continue;
            }
            if p(lo).signum() == p(hi).signum() {
                continue;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if p(lo).signum() == p(mid).signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
        roots
    }

    #[test]
    fn identity_and_diagonal() {
        let s = shape(&[2, 2]);
        let dec = eig_hermitian(&HermitianTensor::<f64>::identity(&s)).unwrap();
        assert_eq!(dec.eigenvalues(), &[1.0; 4]);
        let h = HermitianTensor::<f64>::from_diagonal(&shape(&[3]), &[5.0, -2.0, 0.0]).unwrap();
        let dec = eig_hermitian(&h).unwrap();
        assert_eq!(dec.eigenvalues(), &[5.0, 0.0, -2.0]);
        assert_eq!(dec.hermitian_rank(), 2);
        assert_eq!(dec.rank_truncated().0, vec![5.0, -2.0]);
    }

    #[test]
    fn matches_characteristic_polynomial_at_d3() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let h = HermitianTensor::<f64>::random(&shape(&[3]), &mut rng);
            let dec = eig_hermitian(&h).unwrap();
            let roots = char_poly_roots(h.as_tensor().as_matrix());
            assert_eq!(roots.len(), 3);
            for (a, b) in dec.eigenvalues().iter().zip(&roots) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn reconstruction_and_orthonormality() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for dims in [[2usize, 2], [2, 3], [3, 3], [4, 4]] {
            let h = HermitianTensor::<f64>::random(&shape(&dims), &mut rng);
            let dec = eig_hermitian(&h).unwrap();
            assert!(rel_err(dec.reconstruct().as_tensor(), h.as_tensor()) < 1e-9);
            let v = dec.eigenvector_matrix();
            let gram = v.adjoint().matmul(v).unwrap();
            assert!(gram.max_abs_diff(&Matrix::identity(v.dim())) < 1e-10);
            assert!(dec.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn functional_calculus() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = shape(&[2, 2]);
        let e = tensor_exp(&HermitianTensor::<f64>::zeros(&s)).unwrap();
        assert!(e.as_tensor().unfold().max_abs_diff(&Matrix::identity(4)) < 1e-15);

        let pd = HermitianTensor::<f64>::random_positive_definite(&s, 0.2, 3.0, &mut rng);
        let back = tensor_exp(&tensor_log(&pd).unwrap()).unwrap();
        assert!(rel_err(back.as_tensor(), pd.as_tensor()) < 1e-8);

        let h = HermitianTensor::<f64>::random(&s, &mut rng);
        let sq = tensor_function(&h, |x| x * x, Domain::All).unwrap();
        let oracle = h.as_tensor().einstein_product(h.as_tensor()).unwrap();
        assert!(rel_err(sq.as_tensor(), &oracle) < 1e-10);

        let neg = HermitianTensor::<f64>::from_diagonal(&shape(&[2]), &[1.0, -0.5]).unwrap();
        let err = tensor_log(&neg).unwrap_err().to_string();
        assert!(err.contains("-0.5"), "{err}");
    }

    #[test]
    fn exp_is_a_one_parameter_group() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let h = HermitianTensor::<f64>::random(&shape(&[3]), &mut rng);
        let (a, b) = (0.3, -0.7);
        let ea = tensor_exp(&h.scale(a)).unwrap();
        let eb = tensor_exp(&h.scale(b)).unwrap();
        let eab = tensor_exp(&h.scale(a + b)).unwrap();
        let prod = ea.as_tensor().einstein_product(eb.as_tensor()).unwrap();
        assert!(rel_err(&prod, eab.as_tensor()) < 1e-9);
    }

    #[test]
    fn complex_powers() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = shape(&[2, 2]);
        let pd = HermitianTensor::<f64>::random_positive_definite(&s, 0.5, 2.0, &mut rng);
        let p0 = complex_power(&pd, Cplx::new(0.0, 0.0)).unwrap();
        assert!(p0.unfold().max_abs_diff(&Matrix::identity(4)) < 1e-12);
        let p1 = complex_power(&pd, Cplx::new(1.0, 0.0)).unwrap();
        assert!(rel_err(&p1, pd.as_tensor()) < 1e-12);

        let e = std::f64::consts::E;
        let diag = HermitianTensor::<f64>::from_diagonal(&shape(&[2]), &[e, e]).unwrap();
        let z = complex_power(&diag, Cplx::new(1.0, 1.0)).unwrap();
        let want = Cplx::new(e * 1f64.cos(), e * 1f64.sin());
        assert!((z.as_matrix()[(0, 0)] - want).norm() < 1e-12);
        assert!(z.as_matrix()[(0, 1)].norm() < 1e-12);

        // |C^{1+it}| = C: the unitary factor C^{it} drops out.
        let ct = complex_power(&pd, Cplx::new(1.0, 0.8)).unwrap();
        let abs = absolute_value(&ct).unwrap();
        assert!(rel_err(abs.as_tensor(), pd.as_tensor()) < 1e-9);
        assert!(complex_power(&HermitianTensor::<f64>::identity(&s).scale(-1.0), Cplx::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn absolute_value_and_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let s = shape(&[2, 3]);
        let neg_id = HermitianTensor::<f64>::identity(&s).scale(-1.0);
        let abs = absolute_value(neg_id.as_tensor()).unwrap();
        assert!(abs.as_tensor().unfold().max_abs_diff(&Matrix::identity(6)) < 1e-12);

        let u = SquareTensor::<f64>::random_unitary(&s, &mut rng);
        let abs = absolute_value(&u).unwrap();
        assert!(abs.as_tensor().unfold().max_abs_diff(&Matrix::identity(6)) < 1e-10);

        // Both Gram matrices share the nonzero spectrum.
        let t = SquareTensor::<f64>::random_gaussian(&s, &mut rng);
        let sv = singular_spectrum(&t).unwrap();
        let other = HermitianTensor::symmetrized(&t.einstein_product(&t.conjugate_transpose()).unwrap());
        let (ev, _) = eig_hermitian_matrix(other.as_tensor().as_matrix()).unwrap();
        for (a, b) in sv.values().iter().zip(&ev) {
            assert!((a - b.max(0.0).sqrt()).abs() < 1e-9);
        }
        let abs = absolute_value(&t).unwrap();
        let (ev, _) = eig_hermitian_matrix(abs.as_tensor().as_matrix()).unwrap();
        for (a, b) in sv.values().iter().zip(&ev) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!((hermitian_determinant(&HermitianTensor::<f64>::identity(&shape(&[2, 2]))).unwrap() - 1.0).abs() < 1e-14);
        let d = HermitianTensor::<f64>::from_diagonal(&shape(&[2]), &[2.0, 3.0]).unwrap();
        assert!((hermitian_determinant(&d).unwrap() - 6.0).abs() < 1e-14);
        let pd = HermitianTensor::<f64>::random_positive_definite(&shape(&[3, 2]), 0.5, 2.0, &mut rng);
        let dec = eig_hermitian(&pd).unwrap();
        let oracle = dec.eigenvalues().iter().map(|x| x.ln()).sum::<f64>().exp();
        let det = hermitian_determinant(&pd).unwrap();
        assert!((det - oracle).abs() / oracle < 1e-10);
        let lu = pd.as_tensor().as_matrix().determinant().re;
        assert!((det - lu).abs() / oracle < 1e-10);
    }

    #[test]
    fn single_precision_eigensolver() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = HermitianTensor::<f32>::random(&shape(&[2, 2]), &mut rng);
        let dec = eig_hermitian(&h).unwrap();
        let rec = dec.reconstruct();
        let err = rec.as_tensor().sub(h.as_tensor()).unwrap().frobenius_norm() / h.as_tensor().frobenius_norm();
        assert!(err < 1e-5);
    }
}
