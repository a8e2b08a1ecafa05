//! Catalog of scalar functions applied spectrally, with the shape properties the
//! inequality verifiers need. Properties are stated, not derived symbolically.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::Domain;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ScalarFn {
    /// `x`
    Identity,
    /// `x^p` on `x ≥ 0`
    Power { p: f64 },
    /// `eˣ`
    Exp,
    /// `max(x − c, 0)`
    PositivePart { c: f64 },
    /// `max(x, 0)^p`
    PositivePower { p: f64 },
    /// `max(c − x, 0)`
    NegativePart { c: f64 },
    /// `x²` on all of ℝ
    Square,
    /// `log(δ + x)` on `x > −δ`
    LogShift { delta: f64 },
}

impl ScalarFn {
    pub fn eval<T: Real>(&self, x: T) -> T {
        let z = T::zero();
        match *self {
            ScalarFn::Identity => x,
            ScalarFn::Power { p } => x.powf(T::lit(p)),
            ScalarFn::Exp => x.exp(),
            ScalarFn::PositivePart { c } => (x - T::lit(c)).max(z),
            ScalarFn::PositivePower { p } => x.max(z).powf(T::lit(p)),
            ScalarFn::NegativePart { c } => (T::lit(c) - x).max(z),
            ScalarFn::Square => x * x,
            ScalarFn::LogShift { delta } => (T::lit(delta) + x).ln(),
        }
    }

    /// Eigenvalue domain on which the function is defined.
    pub fn domain(&self) -> Domain {
        match self {
            ScalarFn::Power { .. } => Domain::NonNegative,
            _ => Domain::All,
        }
    }

    /// Nonnegative on all of ℝ (where defined).
    pub fn nonnegative_on_reals(&self) -> bool {
        !matches!(self, ScalarFn::Identity | ScalarFn::LogShift { .. })
    }

    /// Nonnegative on `(0, ∞)`.
    pub fn nonnegative_on_positive(&self) -> bool {
        match *self {
            ScalarFn::LogShift { delta } => delta >= 1.0,
            _ => true,
        }
    }

    pub fn nondecreasing(&self) -> bool {
        !matches!(self, ScalarFn::NegativePart { .. } | ScalarFn::Square)
    }

    pub fn convex(&self) -> bool {
        match *self {
            ScalarFn::Power { p } | ScalarFn::PositivePower { p } => p >= 1.0,
            ScalarFn::LogShift { .. } => false,
            _ => true,
        }
    }

    /// `x ↦ log f(eˣ)` convex on ℝ.
    pub fn log_exp_convex(&self) -> bool {
        match *self {
            ScalarFn::Identity | ScalarFn::Exp | ScalarFn::Square => true,
            ScalarFn::Power { p } | ScalarFn::PositivePower { p } => p > 0.0,
            _ => false,
        }
    }

    /// `x ↦ g(eˣ)` convex on ℝ.
    pub fn exp_convex(&self) -> bool {
        match *self {
            ScalarFn::NegativePart { .. } => false,
            ScalarFn::Power { p } | ScalarFn::PositivePower { p } => p > 0.0,
            _ => true,
        }
    }

    /// Admissible for the weak integral-average majorization theorem:
    /// nonnegative, nondecreasing and convex on ℝ.
    pub fn fits_weak_average(&self) -> bool {
        self.nonnegative_on_reals() && self.nondecreasing() && self.convex() && self.domain() == Domain::All
    }

    /// Admissible for the full integral-average majorization theorem:
    /// nonnegative and convex on ℝ.
    pub fn fits_full_average(&self) -> bool {
        self.nonnegative_on_reals() && self.convex() && self.domain() == Domain::All
    }

    /// Admissible as `f` in the log-majorization theorems (`log f(eˣ)` convex).
    /// Monotonicity is also required so the weak variant is sound.
    pub fn fits_log_f(&self) -> bool {
        self.nonnegative_on_positive() && self.log_exp_convex() && self.nondecreasing()
    }

    /// Admissible as `g` in the log-majorization theorems (`g(eˣ)` convex).
    pub fn fits_log_g(&self) -> bool {
        self.nonnegative_on_positive() && self.exp_convex() && self.nondecreasing()
    }

    pub fn weak_average_catalog() -> Vec<ScalarFn> {
        vec![
            ScalarFn::Exp,
            ScalarFn::PositivePart { c: 0.5 },
            ScalarFn::PositivePower { p: 1.5 },
            ScalarFn::PositivePower { p: 2.0 },
        ]
    }

    pub fn full_average_catalog() -> Vec<ScalarFn> {
        let mut v = Self::weak_average_catalog();
        v.extend([ScalarFn::NegativePart { c: 1.0 }, ScalarFn::Square]);
        v
    }

    pub fn log_f_catalog() -> Vec<ScalarFn> {
        vec![
            ScalarFn::Power { p: 0.5 },
            ScalarFn::Power { p: 1.0 },
            ScalarFn::Power { p: 2.0 },
            ScalarFn::Power { p: 3.0 },
            ScalarFn::Exp,
        ]
    }

    pub fn log_g_catalog() -> Vec<ScalarFn> {
        let mut v = Self::log_f_catalog();
        v.extend([ScalarFn::PositivePart { c: 0.5 }, ScalarFn::LogShift { delta: 1.0 }]);
        v
    }
}

impl fmt::Display for ScalarFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarFn::Identity => write!(f, "x"),
            ScalarFn::Power { p } => write!(f, "pow:{p}"),
            ScalarFn::Exp => write!(f, "exp"),
            ScalarFn::PositivePart { c } => write!(f, "pos:{c}"),
            ScalarFn::PositivePower { p } => write!(f, "ppow:{p}"),
            ScalarFn::NegativePart { c } => write!(f, "neg:{c}"),
            ScalarFn::Square => write!(f, "sq"),
            ScalarFn::LogShift { delta } => write!(f, "logshift:{delta}"),
        }
    }
}

/// Parses the [`Display`](fmt::Display) form: `x`, `pow:2`, `exp`, `pos:0.5`,
/// `ppow:2`, `neg:1`, `sq`, `logshift:1`.
impl FromStr for ScalarFn {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("unknown function {s:?}"));
        let (name, arg) = s.split_once(':').map_or((s.trim(), None), |(a, b)| (a.trim(), Some(b.trim())));
        let num = || -> Result<f64> { arg.ok_or_else(bad)?.parse().map_err(|_| bad()) };
        Ok(match name {
            "x" | "identity" if arg.is_none() => ScalarFn::Identity,
            "exp" if arg.is_none() => ScalarFn::Exp,
            "sq" | "square" if arg.is_none() => ScalarFn::Square,
            "pow" => ScalarFn::Power { p: num()? },
            "pos" => ScalarFn::PositivePart { c: num()? },
            "ppow" => ScalarFn::PositivePower { p: num()? },
            "neg" => ScalarFn::NegativePart { c: num()? },
            "logshift" => ScalarFn::LogShift { delta: num()? },
            _ => return Err(bad()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_display_round_trip() {
        for f in ScalarFn::full_average_catalog().into_iter().chain(ScalarFn::log_g_catalog()).chain([ScalarFn::Identity]) {
            assert_eq!(f.to_string().parse::<ScalarFn>().unwrap(), f);
        }
        assert!("pow".parse::<ScalarFn>().is_err());
        assert!("cosh".parse::<ScalarFn>().is_err());
    }

    #[test]
    fn catalogs_satisfy_their_hypotheses() {
        assert!(ScalarFn::weak_average_catalog().iter().all(ScalarFn::fits_weak_average));
        assert!(ScalarFn::full_average_catalog().iter().all(ScalarFn::fits_full_average));
        assert!(ScalarFn::log_f_catalog().iter().all(ScalarFn::fits_log_f));
        assert!(ScalarFn::log_g_catalog().iter().all(ScalarFn::fits_log_g));
        assert!(!ScalarFn::NegativePart { c: 1.0 }.fits_weak_average());
        assert!(!ScalarFn::LogShift { delta: 0.5 }.fits_log_g());
    }

    /// Midpoint convexity sampled on a grid, as an independent check on the flags.
    #[test]
    fn convexity_flags_match_samples() {
        let xs: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        let midpoint_convex = |h: &dyn Fn(f64) -> f64| {
            xs.windows(3).all(|w| h(w[1]) <= 0.5 * (h(w[0]) + h(w[2])) + 1e-12)
        };
        for f in ScalarFn::log_g_catalog() {
            assert!(midpoint_convex(&|x| f.eval(x.exp())), "{f}");
        }
        for f in ScalarFn::log_f_catalog() {
            assert!(midpoint_convex(&|x| f.eval(x.exp()).ln()), "{f}");
        }
        for f in ScalarFn::full_average_catalog() {
            assert!(midpoint_convex(&|x| f.eval(x)), "{f}");
        }
    }
}
