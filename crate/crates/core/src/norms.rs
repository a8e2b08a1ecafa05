//! Unitarily invariant norms through symmetric gauge functions of the singular spectrum.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{eig_hermitian, singular_spectrum};
use crate::tensor::{HermitianTensor, SquareTensor};

/// Absolute slack for inequality checks.
pub const ABS_TOL: f64 = 1e-10;
/// Relative slack for inequality checks.
pub const REL_TOL: f64 = 1e-8;

/// Above this length the elementary symmetric polynomial switches from subset
/// enumeration to Newton's identities.
pub const DIRECT_KTRACE_MAX: usize = 12;

/// `lhs ≤ rhs` up to the absolute + relative slack.
pub fn leq_tol(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + ABS_TOL + REL_TOL * rhs.abs()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GaugeSpec {
    KyFan { k: usize },
    Schatten { p: f64 },
    KTrace { k: usize },
    Operator,
}

impl GaugeSpec {
    pub fn validate(&self, d: usize) -> Result<()> {
        match *self {
            GaugeSpec::KyFan { k } | GaugeSpec::KTrace { k } if k == 0 || k > d => {
                Err(Error::Range(format!("k = {k} outside 1..={d}")))
            }
            GaugeSpec::Schatten { p } if !(p >= 1.0) => Err(Error::Range(format!("Schatten exponent {p} < 1"))),
            _ => Ok(()),
        }
    }

    /// Gauge value of a nonnegative vector (order irrelevant).
    pub fn apply<T: Real>(&self, v: &[T]) -> Result<T> {
        self.validate(v.len())?;
        if let Some(x) = v.iter().find(|x| !(**x >= T::zero())) {
            return Err(Error::Domain(format!("gauge argument has negative entry {x}")));
        }
        Ok(match *self {
            GaugeSpec::KyFan { k } => sorted_desc(v).into_iter().take(k).sum(),
            GaugeSpec::Schatten { p } => {
                if p == 1.0 {
                    v.iter().copied().sum()
                } else {
                    let p = T::lit(p);
                    // Scale by the max entry to avoid overflow for large p.
                    let top = v.iter().fold(T::zero(), |m, &x| m.max(x));
                    if top == T::zero() {
                        return Ok(T::zero());
                    }
                    top * v.iter().map(|&x| (x / top).powf(p)).sum::<T>().powf(p.recip())
                }
            }
            GaugeSpec::KTrace { k } => elementary_symmetric(v, k),
            GaugeSpec::Operator => v.iter().fold(T::zero(), |m, &x| m.max(x)),
        })
    }

    /// `‖t‖_ρ = ρ(σ(t))`.
    pub fn norm<T: Real>(&self, t: &SquareTensor<T>) -> Result<T> {
        self.validate(t.dim())?;
        self.apply(singular_spectrum(t)?.values())
    }
}

impl fmt::Display for GaugeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GaugeSpec::KyFan { k } => write!(f, "kyfan:{k}"),
            GaugeSpec::Schatten { p } => write!(f, "schatten:{p}"),
            GaugeSpec::KTrace { k } => write!(f, "ktrace:{k}"),
            GaugeSpec::Operator => write!(f, "operator"),
        }
    }
}

/// Parses `kyfan:2`, `schatten:1.5`, `ktrace:3` or `operator`.
impl FromStr for GaugeSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.split_once(':').map_or((s, None), |(a, b)| (a, Some(b)));
        let bad = || Error::Config(format!("cannot parse gauge {s:?}"));
        let int = |a: Option<&str>| a.ok_or_else(bad)?.trim().parse::<usize>().map_err(|_| bad());
        let g = match kind.trim().to_ascii_lowercase().as_str() {
            "kyfan" => GaugeSpec::KyFan { k: int(arg)? },
            "ktrace" => GaugeSpec::KTrace { k: int(arg)? },
            "schatten" => GaugeSpec::Schatten { p: arg.ok_or_else(bad)?.trim().parse().map_err(|_| bad())? },
            "operator" if arg.is_none() => GaugeSpec::Operator,
            _ => return Err(bad()),
        };
        match g {
            GaugeSpec::KyFan { k: 0 } | GaugeSpec::KTrace { k: 0 } => Err(Error::Range("k must be at least 1".into())),
            GaugeSpec::Schatten { p } if !(p >= 1.0) => Err(Error::Range(format!("Schatten exponent {p} < 1"))),
            g => Ok(g),
        }
    }
}

fn sorted_desc<T: Real>(v: &[T]) -> Vec<T> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// `e_k(v) = Σ_{i₁<…<i_k} v_{i₁}⋯v_{i_k}`.
pub fn elementary_symmetric<T: Real>(v: &[T], k: usize) -> T {
    if k == 0 {
        return T::one();
    }
    if k > v.len() {
        return T::zero();
    }
    if v.len() <= DIRECT_KTRACE_MAX {
        subset_sum(v, k)
    } else {
        newton_identities(v, k)
    }
}

fn subset_sum<T: Real>(v: &[T], k: usize) -> T {
    fn rec<T: Real>(v: &[T], k: usize, start: usize, acc: T, out: &mut T) {
        if k == 0 {
            *out += acc;
            return;
        }
        for i in start..=v.len() - k {
            rec(v, k - 1, i + 1, acc * v[i], out);
        }
    }
    let mut out = T::zero();
    rec(v, k, 0, T::one(), &mut out);
    out
}

/// `k e_k = Σ_{i=1}^{k} (−1)^{i−1} e_{k−i} p_i` with power sums `p_i`.
fn newton_identities<T: Real>(v: &[T], k: usize) -> T {
    let p: Vec<T> = (0..=k).map(|i| v.iter().map(|&x| x.powi(i as i32)).sum()).collect();
    let mut e = vec![T::one()];
    for j in 1..=k {
        let mut acc = T::zero();
        for i in 1..=j {
            let term = e[j - i] * p[i];
            if i % 2 == 1 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        e.push(acc / T::lit(j as f64));
    }
    e[k]
}

pub fn ky_fan_norm<T: Real>(t: &SquareTensor<T>, k: usize) -> Result<T> {
    GaugeSpec::KyFan { k }.norm(t)
}

pub fn schatten_norm<T: Real>(t: &SquareTensor<T>, p: f64) -> Result<T> {
    GaugeSpec::Schatten { p }.norm(t)
}

pub fn operator_norm<T: Real>(t: &SquareTensor<T>) -> Result<T> {
    GaugeSpec::Operator.norm(t)
}

/// `‖h‖_ρ` for Hermitian `h`, from `|λ(h)|` without forming the Gram tensor.
pub fn hermitian_norm<T: Real>(h: &HermitianTensor<T>, gauge: GaugeSpec) -> Result<T> {
    let abs: Vec<T> = eig_hermitian(h)?.eigenvalues().iter().map(|x| x.abs()).collect();
    gauge.apply(&abs)
}

/// `Tr_k[h] = e_k(λ(h))` on eigenvalues (not singular values).
pub fn k_trace<T: Real>(h: &HermitianTensor<T>, k: usize) -> Result<T> {
    if k == 0 || k > h.dim() {
        return Err(Error::Range(format!("k = {k} outside 1..={}", h.dim())));
    }
    Ok(elementary_symmetric(eig_hermitian(h)?.eigenvalues(), k))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `ρ(∏ b_i^{α_i}) ≤ ∏ ρ(b_i)^{α_i}` for nonnegative vectors `b_i`.
pub fn gauge_holder_check(vectors: &[Vec<f64>], weights: &[f64], gauge: GaugeSpec) -> Result<HolderCheck> {
    if vectors.is_empty() || vectors.len() != weights.len() {
        return Err(Error::Shape(format!("{} vectors with {} weights", vectors.len(), weights.len())));
    }
    let r = vectors[0].len();
    if vectors.iter().any(|b| b.len() != r) {
        return Err(Error::Shape("vectors differ in length".into()));
    }
    if weights.iter().any(|&a| !(a > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("weights {weights:?} must be positive and sum to 1")));
    }
    if let Some(x) = vectors.iter().flatten().find(|&&x| !(x >= 0.0)) {
        return Err(Error::Domain(format!("negative entry {x}")));
    }
    let mixed: Vec<f64> = (0..r)
        .map(|i| vectors.iter().zip(weights).map(|(b, &a)| b[i].powf(a)).product())
        .collect();
    let lhs = gauge.apply(&mixed)?;
    let mut rhs = 1.0;
    for (b, &a) in vectors.iter().zip(weights) {
        rhs *= gauge.apply(b)?.powf(a);
    }
    Ok(HolderCheck { lhs, rhs, holds: lhs <= rhs + 1e-10 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;

    fn diag(v: &[f64]) -> SquareTensor<f64> {
        HermitianTensor::from_diagonal(&Shape::new(vec![v.len()]).unwrap(), v).unwrap().into_tensor()
    }

    #[test]
    fn ky_fan_examples() {
        let id = SquareTensor::<f64>::identity(&Shape::new(vec![2, 3]).unwrap());
        assert!((ky_fan_norm(&id, 4).unwrap() - 4.0).abs() < 1e-12);
        assert!((ky_fan_norm(&diag(&[3.0, 1.0, 2.0]), 2).unwrap() - 5.0).abs() < 1e-12);
        assert!(matches!(ky_fan_norm(&id, 7), Err(Error::Range(_))));
        assert!(matches!(ky_fan_norm(&id, 0), Err(Error::Range(_))));
    }

    #[test]
    fn schatten_examples() {
        let id = SquareTensor::<f64>::identity(&Shape::new(vec![2, 2]).unwrap());
        assert!((schatten_norm(&id, 1.0).unwrap() - 4.0).abs() < 1e-12);
        assert!((schatten_norm(&id, 2.0).unwrap() - id.frobenius_norm()).abs() < 1e-10);
        assert!(matches!(schatten_norm(&id, 0.5), Err(Error::Range(_))));
    }

    #[test]
    fn k_trace_examples() {
        let h = HermitianTensor::from_diagonal(&Shape::new(vec![3]).unwrap(), &[1.0f64, 2.0, 3.0]).unwrap();
        assert!((k_trace(&h, 3).unwrap() - 6.0).abs() < 1e-12);
        assert!((k_trace(&h, 2).unwrap() - 11.0).abs() < 1e-12);
        assert!((k_trace(&h, 1).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn newton_agrees_with_subsets() {
        let v: Vec<f64> = (0..10).map(|i| 0.3 + 0.17 * i as f64).collect();
        for k in 1..=10 {
            let a = subset_sum(&v, k);
            let b = newton_identities(&v, k);
            assert!((a - b).abs() <= 1e-10 * a.abs(), "k={k}: {a} vs {b}");
        }
    }

    #[test]
    fn holder_examples() {
        let b = vec![vec![1.0, 2.0, 0.5]; 3];
        let c = gauge_holder_check(&b, &[0.2, 0.3, 0.5], GaugeSpec::Schatten { p: 2.0 }).unwrap();
        assert!((c.lhs - c.rhs).abs() < 1e-12 && c.holds);
        let c = gauge_holder_check(&[vec![4.0, 0.0], vec![0.0, 4.0]], &[0.5, 0.5], GaugeSpec::KyFan { k: 1 }).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!((c.rhs - 4.0).abs() < 1e-12 && c.holds);
        assert!(gauge_holder_check(&[vec![-1.0]], &[1.0], GaugeSpec::Operator).is_err());
    }

    #[test]
    fn gauge_parsing() {
        assert_eq!("kyfan:2".parse::<GaugeSpec>().unwrap(), GaugeSpec::KyFan { k: 2 });
        assert_eq!("operator".parse::<GaugeSpec>().unwrap(), GaugeSpec::Operator);
        assert!("schatten:0.5".parse::<GaugeSpec>().is_err());
        assert!("bogus".parse::<GaugeSpec>().is_err());
        let json = serde_json::to_string(&GaugeSpec::KyFan { k: 2 }).unwrap();
        assert_eq!(json, r#"{"kind":"kyfan","k":2}"#);
        let back: GaugeSpec = serde_json::from_str(r#"{"kind":"schatten","p":3.0}"#).unwrap();
        assert_eq!(back, GaugeSpec::Schatten { p: 3.0 });
    }
}
