//! β-density quadrature, the multivariate norm inequalities for positive
//! definite factors, and the Lie–Trotter product formula.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::ScalarFn;
use crate::norms::{operator_norm, GaugeSpec};
use crate::scalar::pairwise_sum;
use crate::spectral::{eig_hermitian, singular_spectrum, tensor_exp, Domain};
use crate::tensor::Shape;
use crate::{Hermitian, Spectral, Tensor, C64};

pub const DEFAULT_HALF_WIDTH: f64 = 12.0;
pub const DEFAULT_NODES_PER_UNIT: usize = 32;
pub const TAIL_TOL: f64 = 1e-12;

/// Interpolation density `β_θ(t) = sin(πθ) / (2θ (cosh(πt) + cos(πθ)))`,
/// with the `θ → 0` limit `β₀(t) = π / (2 (cosh(πt) + 1))`.
pub fn beta_density(theta: f64, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::Range(format!("theta = {theta} outside [0, 1]")));
    }
    let ch = (PI * t).cosh();
    if theta == 0.0 {
        return Ok(PI / (2.0 * (ch + 1.0)));
    }
    let denom = 2.0 * theta * (ch + (PI * theta).cos());
    if denom == 0.0 {
        return Err(Error::Domain(format!("beta density singular at theta = {theta}, t = {t}")));
    }
    Ok((PI * theta).sin() / denom)
}

/// `∫_{|t|>T} β₀ = 1 − tanh(πT/2)`.
pub fn beta0_tail_mass(half_width: f64) -> f64 {
    1.0 - (PI * half_width / 2.0).tanh()
}

/// Gauss–Legendre rule with `n` nodes on `[-1, 1]` (Newton on `P_n`).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            // P_n(x) = p1, P_{n-1}(x) = p0.
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre nodes and `β_θ`-weighted weights on `[-T, T]`,
/// one panel per unit interval.
#[derive(Clone, Debug, Serialize)]
pub struct BetaQuadrature {
    pub theta: f64,
    pub half_width: f64,
    pub nodes_per_unit: usize,
    pub nodes: Vec<f64>,
    /// Quadrature weight times `β_θ(node)`.
    pub weights: Vec<f64>,
}

impl BetaQuadrature {
    pub fn new(theta: f64, half_width: f64, nodes_per_unit: usize) -> Result<Self> {
        if !(half_width > 0.0) || nodes_per_unit == 0 {
            return Err(Error::Range(format!("quadrature needs T > 0 and nodes > 0, got {half_width}, {nodes_per_unit}")));
        }
        beta_density(theta, 0.0)?;
        let (x, w) = gauss_legendre(nodes_per_unit);
        let breaks = panel_breaks(theta, half_width);
        let mut nodes = Vec::with_capacity(breaks.len() * nodes_per_unit);
        let mut weights = Vec::with_capacity(breaks.len() * nodes_per_unit);
        for pair in breaks.windows(2) {
            let (a, h) = (pair[0], pair[1] - pair[0]);
            for (xi, wi) in x.iter().zip(&w) {
                let t = a + 0.5 * h * (xi + 1.0);
                nodes.push(t);
                weights.push(0.5 * h * wi * beta_density(theta, t)?);
            }
        }
        Ok(Self { theta, half_width, nodes_per_unit, nodes, weights })
    }

    /// The β₀ rule with the default `T = 12`, 32 nodes per unit.
    pub fn beta0() -> Self {
        Self::new(0.0, DEFAULT_HALF_WIDTH, DEFAULT_NODES_PER_UNIT).expect("default quadrature is valid")
    }

    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ w_j h(t_j)` with pairwise summation.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self.weights.iter().zip(values).map(|(w, v)| w * v).collect();
        pairwise_sum(&terms)
    }

    /// Same rule restricted to `t > 0`, doubled (valid for even integrands).
    pub fn integrate_half(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(values)
            .filter(|((t, _), _)| **t > 0.0)
            .map(|((_, w), v)| 2.0 * w * v)
            .collect();
        pairwise_sum(&terms)
    }

    /// Tail estimate for an integrand bounded by `sup |h|`, relative to `max(1, |∫h|)`.
    fn check_tail(&self, values: &[f64], integral: f64) -> Result<()> {
        if self.theta != 0.0 {
            return Ok(());
        }
        let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let est = beta0_tail_mass(self.half_width) * sup / integral.abs().max(1.0);
        if est > TAIL_TOL {
            return Err(Error::Precision(format!("tail estimate {est:e} exceeds {TAIL_TOL:e}; increase T")));
        }
        Ok(())
    }
}

/// Below this `1 − θ` the peak of β_θ at `t = 0` needs graded panels.
const GRADING_WIDTH: f64 = 0.25;

/// Panel breakpoints on `[−T, T]`, symmetric about 0: unit-width panels, with
/// the two panels touching 0 split geometrically down to width `(1 − θ)/4`
/// when `1 − θ < GRADING_WIDTH` (β_θ has a peak of width about `1 − θ` there).
fn panel_breaks(theta: f64, half_width: f64) -> Vec<f64> {
    let per_side = half_width.ceil() as usize;
    let h = half_width / per_side as f64;
    let mut pos: Vec<f64> = (1..=per_side).map(|i| i as f64 * h).collect();
    pos[per_side - 1] = half_width;
    let width = 1.0 - theta;
    if width < GRADING_WIDTH {
        let mut b = h / 2.0;
        let mut inner = Vec::new();
        while b > width / 4.0 {
            inner.push(b);
            b /= 2.0;
        }
        inner.push(b);
        inner.reverse();
        inner.extend(pos);
        pos = inner;
    }
    let mut breaks: Vec<f64> = pos.iter().rev().map(|b| -b).collect();
    breaks.push(0.0);
    breaks.extend(pos);
    breaks
}

/// Positive definite factors `C_1, …, C_n` with cached eigendecompositions.
#[derive(Clone, Debug)]
pub struct MultivariateInstance {
    factors: Vec<Hermitian>,
    decomps: Vec<Spectral>,
}

impl MultivariateInstance {
    pub fn new(factors: Vec<Hermitian>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Range("need at least one factor".into()));
        }
        if factors.iter().any(|c| c.shape() != factors[0].shape()) {
            return Err(Error::Shape("factors differ in shape".into()));
        }
        let decomps = factors.iter().map(eig_hermitian).collect::<Result<Vec<_>>>()?;
        if let Some(lo) = decomps.iter().map(|d| d.min_eigenvalue()).find(|&l| l <= 0.0) {
            return Err(Error::Domain(format!("factor is not positive definite, smallest eigenvalue {lo}")));
        }
        Ok(Self { factors, decomps })
    }

    /// Factors with eigenvalues uniform in `[lo, hi]` in independent Haar bases.
    pub fn random<R: Rng + ?Sized>(shape: &Shape, n: usize, lo: f64, hi: f64, rng: &mut R) -> Result<Self> {
        Self::new((0..n).map(|_| Hermitian::random_positive_definite(shape, lo, hi, rng)).collect())
    }

    pub fn factors(&self) -> &[Hermitian] {
        &self.factors
    }

    /// `exp(Σ log C_i)`.
    pub fn log_sum_exp(&self) -> Result<Hermitian> {
        let mut acc = Hermitian::zeros(self.factors[0].shape());
        for d in &self.decomps {
            acc = acc.add(&d.apply(f64::ln, Domain::Positive)?)?;
        }
        tensor_exp(&acc)
    }

    /// `‖f(exp(Σ log C_i))‖_ρ`.
    pub fn lhs(&self, f: ScalarFn, gauge: GaugeSpec) -> Result<f64> {
        let dec = eig_hermitian(&self.log_sum_exp()?)?;
        let values: Vec<f64> = dec.eigenvalues().iter().map(|&x| f.eval(x).abs()).collect();
        gauge.apply(&values)
    }

    /// `∏ C_i^{1+ιt}`, index-ascending left to right.
    pub fn product_at(&self, t: f64) -> Result<Tensor> {
        let z = C64::new(1.0, t);
        let mut it = self.decomps.iter();
        let mut acc = it.next().expect("nonempty").complex_power(z)?;
        for d in it {
            acc = acc.einstein_product(&d.complex_power(z)?)?;
        }
        Ok(acc)
    }

    /// Whether `σ(∏ C_i^{1+ιt})` is provably even in `t`: two factors
    /// (the spectrum is then `t`-free) or all factors real.
    pub fn integrand_is_even(&self) -> bool {
        self.factors.len() <= 2
            || self.factors.iter().all(|c| c.as_tensor().as_matrix().as_slice().iter().all(|z| z.im == 0.0))
    }

    /// Singular spectra of the product at every quadrature node, evaluating
    /// only `t > 0` and mirroring when the integrand is even.
    pub fn spectra_on(&self, quad: &BetaQuadrature) -> Result<NodeSpectra> {
        if !self.integrand_is_even() {
            return self.spectra_on_full(quad);
        }
        let n = quad.nodes.len();
        let half: Vec<usize> = (0..n).filter(|&j| quad.nodes[j] > 0.0).collect();
        let vals = half
            .par_iter()
            .map(|&j| Ok(singular_spectrum(&self.product_at(quad.nodes[j])?)?.singular_values))
            .collect::<Result<Vec<_>>>()?;
        let mut spectra = vec![Vec::new(); n];
        for (&j, v) in half.iter().zip(vals) {
            // The composite grid is symmetric: node j mirrors node n-1-j.
            spectra[n - 1 - j] = v.clone();
            spectra[j] = v;
        }
        if spectra.iter().any(|s| s.is_empty()) {
            return self.spectra_on_full(quad);
        }
        Ok(NodeSpectra { quad: quad.clone(), spectra })
    }

    /// Singular spectra evaluated independently at every node.
    pub fn spectra_on_full(&self, quad: &BetaQuadrature) -> Result<NodeSpectra> {
        let spectra = quad
            .nodes
            .par_iter()
            .map(|&t| Ok(singular_spectrum(&self.product_at(t)?)?.singular_values))
            .collect::<Result<Vec<_>>>()?;
        Ok(NodeSpectra { quad: quad.clone(), spectra })
    }
}

/// Singular values of `∏ C_i^{1+ιt}` cached per node, reused across `f` and gauges.
#[derive(Clone, Debug)]
pub struct NodeSpectra {
    quad: BetaQuadrature,
    spectra: Vec<Vec<f64>>,
}

impl NodeSpectra {
    /// `‖f(|P(t_j)|)‖_ρ = ρ(f(σ(t_j)))` at every node.
    pub fn integrand(&self, f: ScalarFn, gauge: GaugeSpec) -> Result<Vec<f64>> {
        self.spectra
            .iter()
            .map(|s| {
                let v: Vec<f64> = s.iter().map(|&x| f.eval(x).abs()).collect();
                gauge.apply(&v)
            })
            .collect()
    }

    /// `exp ∫ log ‖f(|∏ C_i^{1+ιt}|)‖_ρ β₀(t) dt`.
    pub fn rhs_geometric(&self, f: ScalarFn, gauge: GaugeSpec) -> Result<f64> {
        let logs: Vec<f64> = self.integrand(f, gauge)?.iter().map(|v| v.ln()).collect();
        let integral = self.quad.integrate_values(&logs);
        self.quad.check_tail(&logs, integral)?;
        Ok(integral.exp())
    }

    /// `∫ ‖g(|∏ C_i^{1+ιt}|)‖_ρ β₀(t) dt`.
    pub fn rhs_arithmetic(&self, g: ScalarFn, gauge: GaugeSpec) -> Result<f64> {
        let vals = self.integrand(g, gauge)?;
        let integral = self.quad.integrate_values(&vals);
        self.quad.check_tail(&vals, integral)?;
        Ok(integral)
    }

    /// Relative gap between the full-grid and mirrored half-grid integrals of
    /// the arithmetic integrand; zero when the integrand is even in `t`.
    pub fn symmetry_gap(&self, f: ScalarFn, gauge: GaugeSpec) -> Result<f64> {
        let vals = self.integrand(f, gauge)?;
        let full = self.quad.integrate_values(&vals);
        let half = self.quad.integrate_half(&vals);
        Ok((full - half).abs() / full.abs().max(1e-300))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MultivariateCheck {
    pub function: String,
    pub gauge: GaugeSpec,
    pub lhs: f64,
    pub rhs_geometric: f64,
    pub rhs_arithmetic: f64,
    pub geometric_margin: f64,
    pub arithmetic_margin: f64,
    pub geometric_holds: bool,
    pub arithmetic_holds: bool,
    /// `rhs_geometric ≤ rhs_arithmetic`.
    pub jensen_holds: bool,
}

/// Absolute slack for the multivariate inequalities.
pub const MULTIVARIATE_TOL: f64 = 1e-7;
/// Absolute slack for the geometric-vs-arithmetic ordering.
pub const JENSEN_TOL: f64 = 1e-9;

/// Evaluates both inequalities for every `(f, gauge)` pair, using each `f` as
/// both the geometric-side `f` and the arithmetic-side `g`.
pub fn verify_multivariate(
    inst: &MultivariateInstance,
    functions: &[ScalarFn],
    gauges: &[GaugeSpec],
    quad: &BetaQuadrature,
) -> Result<Vec<MultivariateCheck>> {
    if let Some(f) = functions.iter().find(|f| !(f.log_exp_convex() && f.exp_convex())) {
        return Err(Error::Config(format!("{f} lacks the convexity the multivariate inequality needs")));
    }
    let cache = inst.spectra_on(quad)?;
    let mut out = Vec::new();
    for &f in functions {
        for &g in gauges {
            let lhs = inst.lhs(f, g)?;
            let rg = cache.rhs_geometric(f, g)?;
            let ra = cache.rhs_arithmetic(f, g)?;
            out.push(MultivariateCheck {
                function: f.to_string(),
                gauge: g,
                lhs,
                rhs_geometric: rg,
                rhs_arithmetic: ra,
                geometric_margin: rg - lhs,
                arithmetic_margin: ra - lhs,
                geometric_holds: lhs <= rg + MULTIVARIATE_TOL,
                arithmetic_holds: lhs <= ra + MULTIVARIATE_TOL,
                jensen_holds: rg <= ra + JENSEN_TOL,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct LieTrotter {
    pub n_steps: usize,
    pub error: f64,
    pub bound: f64,
}

/// `‖(∏ exp(L_k/n))ⁿ − exp(Σ L_k)‖` in operator norm, with the bound
/// `2 exp(2 Σ‖L_k‖) / n`.
pub fn lie_trotter_error(factors: &[Hermitian], n_steps: usize) -> Result<LieTrotter> {
    if n_steps == 0 {
        return Err(Error::Range("n_steps must be at least 1".into()));
    }
    if factors.is_empty() {
        return Err(Error::Range("need at least one factor".into()));
    }
    let shape = factors[0].shape();
    let inv_n = 1.0 / n_steps as f64;
    let mut step = Tensor::identity(shape);
    let mut total = Hermitian::zeros(shape);
    let mut norm_sum = 0.0;
    for l in factors {
        step = step.einstein_product(tensor_exp(&l.scale(inv_n))?.as_tensor())?;
        total = total.add(l)?;
        norm_sum += operator_norm(l.as_tensor())?;
    }
    let approx = power_by_squaring(&step, n_steps)?;
    let exact = tensor_exp(&total)?;
    let error = operator_norm(&approx.sub(exact.as_tensor())?)?;
    Ok(LieTrotter { n_steps, error, bound: 2.0 * (2.0 * norm_sum).exp() * inv_n })
}

fn power_by_squaring(t: &Tensor, mut p: usize) -> Result<Tensor> {
    let mut base = t.clone();
    let mut acc = Tensor::identity(t.shape());
    while p > 0 {
        if p & 1 == 1 {
            acc = acc.einstein_product(&base)?;
        }
        p >>= 1;
        if p > 0 {
            base = base.einstein_product(&base)?;
        }
    }
    Ok(acc)
}

/// Minimum Frobenius norm of `[A, B]` accepted by [`random_noncommuting_pair`].
pub const MIN_COMMUTATOR: f64 = 1e-3;

/// Two random Hermitian tensors scaled by `scale`, redrawn until they do not commute.
pub fn random_noncommuting_pair<R: Rng + ?Sized>(shape: &Shape, scale: f64, rng: &mut R) -> Result<[Hermitian; 2]> {
    if shape.unfolded_dim() < 2 {
        return Err(Error::Range("commuting is unavoidable in dimension 1".into()));
    }
    loop {
        let a = Hermitian::random(shape, rng).scale(scale);
        let b = Hermitian::random(shape, rng).scale(scale);
        let (x, y) = (a.as_tensor(), b.as_tensor());
        let comm = x.einstein_product(y)?.sub(&y.einstein_product(x)?)?.frobenius_norm();
        if comm > MIN_COMMUTATOR * scale * scale {
            return Ok([a, b]);
        }
    }
}

/// Least-squares slope of `log error` against `log n`.
pub fn loglog_slope(points: &[LieTrotter]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.n_steps as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.error.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
