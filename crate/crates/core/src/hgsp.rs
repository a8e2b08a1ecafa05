//! Hypergraph shift operators, polynomial filters and output covariances,
//! with the covariance Ky Fan tail bound for two-tap filters.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ensembles::{certify, CertificationReport, CertifyConfig, CertifyKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::spectral::eig_hermitian;
use crate::tail::PolynomialSpec;
use crate::tensor::Shape;
use crate::{Hermitian, Matrix, Tensor, C64};

pub const DEFAULT_EDGE_PROBABILITY: f64 = 0.3;
/// Smallest `|λ|` accepted by the inverse-based covariance constructors.
pub const INVERTIBILITY_TOL: f64 = 1e-10;

/// A hypergraph shift operator with its edge set over unfolded index pairs.
#[derive(Clone, Debug)]
pub struct HypergraphShift {
    s: Hermitian,
    edges: Vec<(usize, usize)>,
}

impl HypergraphShift {
    /// Edge set taken from the nonzero entries of `s`.
    pub fn new(s: Hermitian) -> Self {
        let d = s.dim();
        let m = s.as_tensor().as_matrix();
        let edges = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|&(i, j)| m[(i, j)].norm() != 0.0).collect();
        Self { s, edges }
    }

    /// Erdős–Rényi hypergraph: each unordered pair of distinct multi-indices
    /// is an edge with probability `p`, weight 1, mirrored.
    pub fn erdos_renyi<R: Rng + ?Sized>(shape: &Shape, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Range(format!("edge probability {p} outside [0, 1]")));
        }
        let d = shape.unfolded_dim();
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in i + 1..d {
                if rng.random::<f64>() < p {
                    m[(i, j)] = C64::new(1.0, 0.0);
                    m[(j, i)] = C64::new(1.0, 0.0);
                }
            }
        }
        Ok(Self::new(Hermitian::new(Tensor::fold(shape, m)?)?))
    }

    /// Dense real symmetric operator with standard normal entries.
    pub fn random_symmetric<R: Rng + ?Sized>(shape: &Shape, rng: &mut R) -> Result<Self> {
        let d = shape.unfolded_dim();
        let mut m = Matrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let v: f64 = StandardNormal.sample(rng);
                m[(i, j)] = C64::new(v, 0.0);
                m[(j, i)] = C64::new(v, 0.0);
            }
        }
        Ok(Self::new(Hermitian::new(Tensor::fold(shape, m)?)?))
    }

    pub fn operator(&self) -> &Hermitian {
        &self.s
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `s_{i…,j…} = s_{j…,i…}`; for a Hermitian operator this means real entries.
    pub fn is_symmetric(&self) -> bool {
        self.s.as_tensor().as_matrix().as_slice().iter().all(|z| z.im == 0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterCoefficients {
    pub h: Vec<f64>,
}

impl FilterCoefficients {
    pub fn new(h: Vec<f64>) -> Result<Self> {
        if h.is_empty() || h.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("filter needs at least one finite tap".into()));
        }
        Ok(Self { h })
    }

    /// `γ_k = Σ_{k'+k''=k} h_{k'} h_{k''}`.
    pub fn gamma(&self) -> Vec<f64> {
        let n = self.h.len();
        let mut g = vec![0.0; 2 * n - 1];
        for (i, a) in self.h.iter().enumerate() {
            for (j, b) in self.h.iter().enumerate() {
                g[i + j] += a * b;
            }
        }
        g
    }
}

fn horner(s: &Tensor, coeffs: &[f64]) -> Result<Tensor> {
    let id = Tensor::identity(s.shape());
    let mut acc = id.scale_real(*coeffs.last().expect("nonempty"));
    for &c in coeffs.iter().rev().skip(1) {
        acc = acc.einstein_product(s)?.add(&id.scale_real(c))?;
    }
    Ok(acc)
}

/// `H = Σ h_k S^k` by Horner evaluation.
pub fn filter(s: &HypergraphShift, h: &FilterCoefficients) -> Result<Tensor> {
    horner(s.s.as_tensor(), &h.h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariancePath {
    /// `Hᴴ★H`.
    Gram,
    /// `Σ γ_k S^k`; requires a symmetric operator.
    Expansion,
}

/// Output covariance `C_x(h)`.
pub fn covariance_tensor(s: &HypergraphShift, h: &FilterCoefficients, path: CovariancePath) -> Result<Hermitian> {
    let c = match path {
        CovariancePath::Gram => {
            let hf = filter(s, h)?;
            hf.conjugate_transpose().einstein_product(&hf)?
        }
        CovariancePath::Expansion => {
            if !s.is_symmetric() {
                return Err(Error::Config("γ-expansion needs a symmetric shift operator".into()));
            }
            horner(s.s.as_tensor(), &h.gamma())?
        }
    };
    Ok(Hermitian::symmetrized(&c))
}

/// Relative Frobenius gap between the two covariance paths.
pub fn covariance_dual_path_gap(s: &HypergraphShift, h: &FilterCoefficients) -> Result<f64> {
    let a = covariance_tensor(s, h, CovariancePath::Gram)?;
    let b = covariance_tensor(s, h, CovariancePath::Expansion)?;
    let diff = a.sub(&b)?.as_tensor().frobenius_norm();
    Ok(diff / a.as_tensor().frobenius_norm().max(f64::MIN_POSITIVE))
}

fn guarded_inverse(t: &Hermitian) -> Result<Hermitian> {
    let dec = eig_hermitian(t)?;
    if let Some(l) = dec.eigenvalues().iter().find(|l| l.abs() < INVERTIBILITY_TOL) {
        return Err(Error::Domain(format!("operator is singular (eigenvalue {l:e})")));
    }
    let inv: Vec<f64> = dec.eigenvalues().iter().map(|l| 1.0 / l).collect();
    Ok(dec.synthesize(&inv))
}

/// Markov random field covariance `S⁻¹`.
pub fn markov_random_field(s: &HypergraphShift) -> Result<Hermitian> {
    guarded_inverse(&s.s)
}

/// Structural equation covariance `(I − S)⁻²`.
pub fn structural_equation(s: &HypergraphShift) -> Result<Hermitian> {
    let inv = guarded_inverse(&Hermitian::identity(s.s.shape()).sub(&s.s)?)?;
    Ok(Hermitian::symmetrized(&inv.as_tensor().einstein_product(inv.as_tensor())?))
}

/// `g(x) = h₀² + 2h₀h₁x + h₁²x²`, `s = 1`.
pub fn covariance_polynomial(h0: f64, h1: f64) -> Result<PolynomialSpec> {
    PolynomialSpec::new(vec![h0 * h0, 2.0 * h0 * h1, h1 * h1], 1.0)
        .map_err(|_| Error::Config(format!("h₀h₁ = {} must be nonnegative for a bound", h0 * h1)))
}

/// Certifies `Pr(‖C_x([h₀, h₁])‖₍ₖ₎ ≥ θ)` with `S = Σ X′_j`, `X′ = X/m` drawn from
/// `spec`, against the Chernoff curve for [`covariance_polynomial`].
pub fn covariance_tail_bound(
    spec: &EnsembleSpec,
    h0: f64,
    h1: f64,
    theta_grid: &[f64],
    cfg: &CertifyConfig,
) -> Result<CertificationReport> {
    if cfg.kind != CertifyKind::Chernoff {
        return Err(Error::Config("the covariance bound uses the Chernoff curve".into()));
    }
    certify(&sample_average_spec(spec), &covariance_polynomial(h0, h1)?, theta_grid, cfg)
}

/// `spec` rescaled so `Σ X′_j` is the sample average of the original draws.
pub fn sample_average_spec(spec: &EnsembleSpec) -> EnsembleSpec {
    let gamma = spec.normalization.unwrap_or(1.0) / spec.m as f64;
    EnsembleSpec { normalization: Some(gamma), ..spec.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn shape() -> Shape {
        Shape::new(vec![2, 3]).unwrap()
    }

    #[test]
    fn filter_trivial_taps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = HypergraphShift::random_symmetric(&shape(), &mut rng).unwrap();
        let id = filter(&s, &FilterCoefficients::new(vec![1.0]).unwrap()).unwrap();
        assert!(id.sub(&Tensor::identity(&shape())).unwrap().frobenius_norm() == 0.0);
        let one = filter(&s, &FilterCoefficients::new(vec![0.0, 1.0]).unwrap()).unwrap();
        assert!(one.sub(s.operator().as_tensor()).unwrap().frobenius_norm() == 0.0);
    }

    #[test]
    fn filter_matches_power_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = HypergraphShift::random_symmetric(&shape(), &mut rng).unwrap();
        let h = FilterCoefficients::new(vec![0.3, -1.2, 0.7]).unwrap();
        let st = s.operator().as_tensor();
        let oracle = Tensor::identity(&shape())
            .scale_real(0.3)
            .add(&st.scale_real(-1.2))
            .unwrap()
            .add(&st.power(2).scale_real(0.7))
            .unwrap();
        let got = filter(&s, &h).unwrap();
        assert!(got.sub(&oracle).unwrap().frobenius_norm() < 1e-11 * oracle.frobenius_norm());
    }

    #[test]
    fn two_tap_covariance_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = HypergraphShift::random_symmetric(&shape(), &mut rng).unwrap();
        let h = FilterCoefficients::new(vec![0.4, 0.9]).unwrap();
        assert_eq!(h.gamma(), vec![0.4 * 0.4, 2.0 * 0.4 * 0.9, 0.9 * 0.9]);
        assert!(covariance_dual_path_gap(&s, &h).unwrap() < 1e-10);
        let c = covariance_tensor(&s, &FilterCoefficients::new(vec![1.0]).unwrap(), CovariancePath::Expansion).unwrap();
        assert!(c.sub(&Hermitian::identity(&shape())).unwrap().as_tensor().frobenius_norm() == 0.0);
        let cx = covariance_tensor(&s, &h, CovariancePath::Gram).unwrap();
        assert!(eig_hermitian(&cx).unwrap().min_eigenvalue() >= -1e-10);
    }

    #[test]
    fn expansion_rejects_complex_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = HypergraphShift::new(Hermitian::random(&shape(), &mut rng));
        let h = FilterCoefficients::new(vec![1.0, 1.0]).unwrap();
        assert!(matches!(covariance_tensor(&s, &h, CovariancePath::Expansion), Err(Error::Config(_))));
        assert!(covariance_tensor(&s, &h, CovariancePath::Gram).is_ok());
    }

    #[test]
    fn filter_respects_hop_reachability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sh = Shape::new(vec![3, 3]).unwrap();
        let s = HypergraphShift::erdos_renyi(&sh, 0.15, &mut rng).unwrap();
        let d = sh.unfolded_dim();
        let h = FilterCoefficients::new(vec![0.5, 1.0, -0.3]).unwrap();
        let out = filter(&s, &h).unwrap();
        // Reachability within ≤ 2 hops (including 0 hops).
        let mut reach = vec![vec![false; d]; d];
        for (i, row) in reach.iter_mut().enumerate() {
            row[i] = true;
        }
        for _ in 0..2 {
            let prev = reach.clone();
            for &(a, b) in s.edges() {
                for i in 0..d {
                    if prev[i][a] {
                        reach[i][b] = true;
                    }
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                if !reach[i][j] {
                    assert_eq!(out.as_matrix()[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn inverse_constructors() {
        let sh = Shape::new(vec![2]).unwrap();
        let s = HypergraphShift::new(Hermitian::from_diagonal(&sh, &[2.0, 0.5]).unwrap());
        let mrf = markov_random_field(&s).unwrap();
        assert!((mrf.as_tensor().as_matrix()[(0, 0)].re - 0.5).abs() < 1e-14);
        let sem = structural_equation(&s).unwrap();
        assert!((sem.as_tensor().as_matrix()[(1, 1)].re - 4.0).abs() < 1e-12);
        let singular = HypergraphShift::new(Hermitian::from_diagonal(&sh, &[1.0, 0.0]).unwrap());
        assert!(markov_random_field(&singular).is_err());
        assert!(structural_equation(&singular).is_err());
    }

    #[test]
    fn covariance_norm_equals_polynomial_of_spectrum() {
        // h = (0, 1): ‖C_x‖₍₁₎ = σ₁(S)².
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let s = HypergraphShift::random_symmetric(&shape(), &mut rng).unwrap();
        let c = covariance_tensor(&s, &FilterCoefficients::new(vec![0.0, 1.0]).unwrap(), CovariancePath::Gram).unwrap();
        let top = eig_hermitian(&c).unwrap().max_eigenvalue();
        let sv = crate::spectral::singular_spectrum(s.operator().as_tensor()).unwrap().largest();
        assert!((top - sv * sv).abs() < 1e-10 * top);
        let g = covariance_polynomial(0.0, 1.0).unwrap();
        assert_eq!(g.coefficients, vec![0.0, 0.0, 1.0]);
        assert!(covariance_polynomial(0.5, -0.5).is_err());
    }
}
