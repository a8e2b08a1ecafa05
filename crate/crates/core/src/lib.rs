//! Ky Fan tail bounds for functions of sums of random Hermitian tensors.
//!
//! The dense layers ([`tensor`], [`spectral`], [`norms`], [`majorization`])
//! are generic over the real field `T: Real` (`f32` or `f64`). The inequality
//! verifiers, bound optimizers and Monte Carlo engine work in `f64`, and the
//! aliases below name the `f64` instantiations they use.

pub mod acceptance;
pub mod ensembles;
pub mod error;
pub mod functions;
pub mod hgsp;
pub mod linalg;
pub mod majorization;
pub mod multivariate;
pub mod norms;
pub mod report;
pub mod scalar;
pub mod spectral;
pub mod tail;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{Cplx, Real};

pub type Matrix = linalg::Matrix<f64>;
pub type Tensor = tensor::SquareTensor<f64>;
pub type Hermitian = tensor::HermitianTensor<f64>;
pub type Spectral = spectral::SpectralDecomposition<f64>;
pub type C64 = Cplx<f64>;
