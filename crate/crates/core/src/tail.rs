//! Ky Fan product/sum lemmas, the Ξ/Υ moment statistics, and the generic,
//! Chernoff and Bernstein tail-bound curves with their optimizers.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::norms::leq_tol;
use crate::spectral::{eig_hermitian, singular_spectrum, singular_values_matrix, tensor_exp};
use crate::{Hermitian, Tensor, C64};

/// Tolerance on `Σ 1/p_i = 1`.
pub const WEIGHT_TOL: f64 = 1e-12;
/// Slack for the PSD-order condition.
pub const ORDER_TOL: f64 = 1e-9;
pub const BISECTION_ITERS: usize = 80;
/// Largest exponent `m·n·s·R·t` on the default Chernoff grid.
pub const CHERNOFF_EXPONENT_CAP: f64 = 40.0;
pub const CHERNOFF_T_MIN: f64 = 1e-4;
/// Fraction of the Bernstein pole `1/(m·n·s)` covered by the default grid.
pub const BERNSTEIN_POLE_FRACTION: f64 = 0.999;
pub const DEFAULT_GRID_POINTS: usize = 400;

/// `g(x) = (a_0 + a_1 x + … + a_n x^n)^s`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialSpec {
    pub coefficients: Vec<f64>,
    pub s: f64,
}

impl PolynomialSpec {
    pub fn new(coefficients: Vec<f64>, s: f64) -> Result<Self> {
        let g = Self { coefficients, s };
        g.validate()?;
        Ok(g)
    }

    /// `g(x) = x`.
    pub fn identity() -> Self {
        Self { coefficients: vec![0.0, 1.0], s: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.coefficients.is_empty() {
            return Err(Error::Config("polynomial needs at least a_0".into()));
        }
        if let Some(a) = self.coefficients.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::Config(format!("coefficient {a} is not a nonnegative real")));
        }
        if !(self.s >= 1.0 && self.s.is_finite()) {
            return Err(Error::Config(format!("power s = {} must be ≥ 1", self.s)));
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    /// `(n+1)^{s−1}`.
    pub fn prefactor(&self) -> f64 {
        ((self.degree() + 1) as f64).powf(self.s - 1.0)
    }

    /// `a_l^{l·s}` for `l ≥ 1` and `a_0^s` for `l = 0`, the coefficient
    /// weights in the bound curves.
    pub fn weight(&self, l: usize) -> f64 {
        self.coefficients[l].powf(l.max(1) as f64 * self.s)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let base = self.coefficients.iter().rev().fold(0.0, |acc, a| acc * x + a);
        if base < 0.0 && self.s.fract() != 0.0 {
            return Err(Error::Domain(format!("g base {base} < 0 with non-integer s = {}", self.s)));
        }
        Ok(base.powf(self.s))
    }
}

fn check_weights(p: &[f64]) -> Result<()> {
    if p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain("weights p_i must be positive".into()));
    }
    let total: f64 = p.iter().map(|x| 1.0 / x).sum();
    if (total - 1.0).abs() > WEIGHT_TOL {
        return Err(Error::Domain(format!("Σ 1/p_i = {total}, expected 1")));
    }
    Ok(())
}

fn ky_fan_of_powers(sv: &[f64], k: usize, q: f64) -> f64 {
    sv.iter().take(k).map(|x| x.powf(q)).sum()
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::Range(format!("Ky Fan index {k} outside 1..={d}")));
    }
    Ok(())
}

/// Absolute slack used by the lemma checks, `1e-8` relative.
fn lemma_tol(x: f64) -> f64 {
    1e-10 + 1e-8 * x.abs()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProductCheck {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖|∏C_i|^s‖₍ₖ₎ ≤ ∏‖|C_i|^{s p_i}‖₍ₖ₎^{1/p_i} ≤ Σ‖|C_i|^{s p_i}‖₍ₖ₎ / p_i`.
pub fn ky_fan_product_inequality_check(c: &[Tensor], s: f64, p: &[f64], k: usize) -> Result<ProductCheck> {
    if c.is_empty() || c.len() != p.len() {
        return Err(Error::Domain(format!("{} tensors but {} weights", c.len(), p.len())));
    }
    check_weights(p)?;
    check_k(k, c[0].dim())?;
    let prod = Tensor::product(c)?;
    let lhs = ky_fan_of_powers(singular_spectrum(&prod)?.values(), k, s);
    let mut mid = 1.0;
    let mut rhs = 0.0;
    for (ci, &pi) in c.iter().zip(p) {
        let n = ky_fan_of_powers(singular_spectrum(ci)?.values(), k, s * pi);
        mid *= n.powf(1.0 / pi);
        rhs += n / pi;
    }
    let tol = lemma_tol(rhs);
    Ok(ProductCheck { lhs, mid, rhs, holds: lhs <= mid + tol && mid + tol <= rhs + 2.0 * tol })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SumCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `‖|ΣC_i|^s‖₍ₖ₎ ≤ m^{s−1} Σ‖|C_i|^s‖₍ₖ₎`.
pub fn ky_fan_sum_inequality_check(c: &[Tensor], s: f64, k: usize) -> Result<SumCheck> {
    if c.is_empty() {
        return Err(Error::Range("need at least one tensor".into()));
    }
    if !(s >= 1.0) {
        return Err(Error::Domain(format!("s = {s} must be ≥ 1")));
    }
    check_k(k, c[0].dim())?;
    let sum = Tensor::sum(c)?;
    let lhs = ky_fan_of_powers(singular_spectrum(&sum)?.values(), k, s);
    let mut rhs = 0.0;
    for ci in c {
        rhs += ky_fan_of_powers(singular_spectrum(ci)?.values(), k, s);
    }
    rhs *= (c.len() as f64).powf(s - 1.0);
    Ok(SumCheck { lhs, rhs, holds: lhs <= rhs + lemma_tol(rhs) })
}

/// Per-entry real/imaginary parts of the unfolded samples, optionally centred.
/// `(X + X̄)/2` has entries `Re X` and `(X − X̄)/2` has entries `ι Im X`.
fn six_term(samples: &[Tensor], center: bool) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: samples.len() });
    }
    let d = samples[0].dim();
    if samples.iter().any(|x| x.shape() != samples[0].shape()) {
        return Err(Error::Shape("samples differ in shape".into()));
    }
    let n = samples.len() as f64;
    let mut mean = vec![C64::new(0.0, 0.0); d * d];
    for x in samples {
        for (m, z) in mean.iter_mut().zip(x.as_matrix().as_slice()) {
            *m += z / n;
        }
    }
    let mut re2 = vec![0.0; d * d];
    let mut re4 = vec![0.0; d * d];
    let mut im2 = vec![0.0; d * d];
    let mut im4 = vec![0.0; d * d];
    for x in samples {
        for (idx, z) in x.as_matrix().as_slice().iter().enumerate() {
            let c = if center { z - mean[idx] } else { *z };
            let (a, b) = (c.re * c.re, c.im * c.im);
            re2[idx] += a / n;
            re4[idx] += a * a / n;
            im2[idx] += b / n;
            im4[idx] += b * b / n;
        }
    }
    let part = |e2: &[f64], e4: &[f64]| {
        let row = (0..d).map(|i| e2[i * d..(i + 1) * d].iter().sum::<f64>().sqrt()).fold(0.0, f64::max);
        let col = (0..d).map(|j| (0..d).map(|i| e2[i * d + j]).sum::<f64>().sqrt()).fold(0.0, f64::max);
        row + col + e4.iter().sum::<f64>().powf(0.25)
    };
    let total = part(&re2, &re4) + part(&im2, &im4);
    // Second moments about zero, used for the mean-drift warning.
    let var: Vec<f64> = re2.iter().zip(&im2).map(|(a, b)| a + b).collect();
    let mean_abs2: Vec<f64> = mean.iter().map(|z| z.norm_sqr()).collect();
    Ok((total, var, mean_abs2))
}

/// Ξ(X) from samples: the six-term moment statistic of the centred parts.
pub fn xi_statistic(samples: &[Tensor]) -> Result<f64> {
    Ok(six_term(samples, true)?.0)
}

/// Υ(X) for zero-mean X: the same statistic without centring. Logs a warning
/// when some entry's sample mean sits beyond 5 standard errors of zero.
pub fn upsilon_statistic(samples: &[Tensor]) -> Result<f64> {
    let (total, second, mean_abs2) = six_term(samples, false)?;
    let n = samples.len() as f64;
    let drift = second.iter().zip(&mean_abs2).any(|(m2, mu2)| {
        let var = (m2 - mu2).max(0.0);
        mu2.sqrt() > 5.0 * (var / n).sqrt() + 1e-300 && *mu2 > 0.0
    });
    if drift {
        warn!("upsilon: sample mean departs from zero by more than 5 standard errors");
    }
    Ok(total)
}

/// `σ̄₁(X) = σ₁(E Re X) + σ₁(E Im X)` from samples.
pub fn sigma1_bar(samples: &[Tensor]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let d = samples[0].dim();
    let n = samples.len() as f64;
    let mut re = Matrix::<f64>::zeros(d);
    let mut im = Matrix::<f64>::zeros(d);
    for x in samples {
        let m = x.as_matrix();
        re = re.add(&m.map(|z| C64::new(z.re / n, 0.0)))?;
        im = im.add(&m.map(|z| C64::new(z.im / n, 0.0)))?;
    }
    Ok(singular_values_matrix(&re)?.largest() + singular_values_matrix(&im)?.largest())
}

/// `E‖exp(τX)‖₍ₖ₎` for Hermitian samples, from cached eigenvalues.
#[derive(Clone, Debug)]
pub struct EmpiricalMgf {
    eigenvalues: Vec<Vec<f64>>,
    k: usize,
}

impl EmpiricalMgf {
    pub fn new(samples: &[Hermitian], k: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        check_k(k, samples[0].dim())?;
        let eigenvalues = samples.iter().map(|x| Ok(eig_hermitian(x)?.eigenvalues().to_vec())).collect::<Result<_>>()?;
        Ok(Self { eigenvalues, k })
    }

    pub fn eval(&self, tau: f64) -> f64 {
        let vals: Vec<f64> = self
            .eigenvalues
            .iter()
            .map(|ev| {
                let mut e: Vec<f64> = ev.iter().map(|l| (tau * l).exp()).collect();
                e.sort_by(|a, b| b.total_cmp(a));
                e[..self.k].iter().sum()
            })
            .collect();
        crate::scalar::pairwise_sum(&vals) / vals.len() as f64
    }
}

/// `k[1 + (e^{τR} − 1)σ̄₁ + C(e^{τR} − 1)Ξ]`, the PSD moment bound.
pub fn chernoff_mgf_bound(k: usize, tau: f64, r: f64, sigma1_bar: f64, xi: f64, c_latala: f64) -> f64 {
    let e = (tau * r).exp_m1();
    k as f64 * (1.0 + e * sigma1_bar + c_latala * e * xi)
}

/// `k{1 + τ²σ₁(A²)/(2(1−τ)) + τCΥ}` for `τ ∈ (0, 1)`.
pub fn bernstein_mgf_bound(k: usize, tau: f64, sigma1_a_sq: f64, upsilon: f64, c_latala: f64) -> f64 {
    k as f64 * (1.0 + tau * tau * sigma1_a_sq / (2.0 * (1.0 - tau)) + tau * c_latala * upsilon)
}

/// `λ_min(I + tX + t²A²/(2(1−t)) − exp(tX))`.
pub fn bernstein_operator_gap(x: &Hermitian, a_sq: &Hermitian, t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Range(format!("t = {t} outside [0, 1)")));
    }
    let lhs = Hermitian::identity(x.shape())
        .add(&x.scale(t))?
        .add(&a_sq.scale(t * t / (2.0 * (1.0 - t))))?
        .sub(&tensor_exp(&x.scale(t))?)?;
    Ok(eig_hermitian(&lhs)?.min_eigenvalue())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OrderCheck {
    pub min_eig_gap: f64,
    pub holds: bool,
}

/// `λ_min(g(exp(tS)) − exp(t·g(S)))`; both sides are functions of `S`, so
/// the gap is evaluated on its eigenvalues.
pub fn psd_order_condition_check(sum: &Hermitian, g: &PolynomialSpec, t: f64) -> Result<OrderCheck> {
    if !(t > 0.0) {
        return Err(Error::Range(format!("t = {t} must be positive")));
    }
    let dec = eig_hermitian(sum)?;
    psd_order_condition_from_eigenvalues(dec.eigenvalues(), g, t)
}

pub fn psd_order_condition_from_eigenvalues(eigenvalues: &[f64], g: &PolynomialSpec, t: f64) -> Result<OrderCheck> {
    let mut gap = f64::INFINITY;
    for &l in eigenvalues {
        gap = gap.min(g.eval((t * l).exp())? - (t * g.eval(l)?).exp());
    }
    Ok(OrderCheck { min_eig_gap: gap, holds: gap >= -ORDER_TOL })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Generic,
    Chernoff,
    Bernstein,
}

#[derive(Clone, Debug, Serialize)]
pub struct SideCondition {
    pub l: usize,
    pub j: usize,
    pub value: f64,
    pub limit: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub theta: f64,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub grid_argmin: f64,
    pub grid_min: f64,
    pub t_opt: Option<f64>,
    pub bound_at_opt: f64,
    /// `|F′ − θF| / (θF)` at `t_opt`.
    pub first_order_residual: Option<f64>,
    /// Exact second-derivative condition, true at every grid point.
    pub convexity_flag: bool,
    /// The same condition evaluated with the closed-form coefficient terms.
    pub printed_convexity_flag: bool,
    pub side_conditions: Vec<SideCondition>,
}

impl BoundReport {
    /// The bound as a probability, capped at 1.
    pub fn probability_bound(&self) -> f64 {
        self.bound_at_opt.min(1.0)
    }
}

/// `F`, `F′`, `F″` of the bracketed part of a curve `K e^{−θt} F(t)`.
trait Curve {
    fn f(&self, t: f64) -> f64;
    fn df(&self, t: f64) -> f64;
    fn d2f(&self, t: f64) -> f64;
}

fn finish<C: Curve>(
    kind: BoundKind,
    curve: &C,
    prefactor: f64,
    theta: f64,
    t_grid: &[f64],
    printed_convexity_flag: bool,
    side_conditions: Vec<SideCondition>,
) -> Result<BoundReport> {
    if t_grid.is_empty() {
        return Err(Error::Range("empty t grid".into()));
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Range("t grid must be positive and strictly increasing".into()));
    }
    let value = |t: f64| prefactor * (-theta * t).exp() * curve.f(t);
    let values: Vec<f64> = t_grid.iter().map(|&t| value(t)).collect();
    let (imin, &grid_min) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    let h = |t: f64| curve.df(t) - theta * curve.f(t);
    let convexity_flag = t_grid
        .iter()
        .all(|&t| theta * theta * curve.f(t) - 2.0 * theta * curve.df(t) + curve.d2f(t) > 0.0);

    // Minima are − → + sign changes of h; take the one closest to the grid argmin.
    let hs: Vec<f64> = t_grid.iter().map(|&t| h(t)).collect();
    let cell = (0..t_grid.len().saturating_sub(1))
        .filter(|&i| hs[i] < 0.0 && hs[i + 1] >= 0.0)
        .min_by_key(|&i| i.abs_diff(imin));
    let (t_opt, first_order_residual, bound_at_opt) = match cell {
        Some(i) => {
            let (mut lo, mut hi) = (t_grid[i], t_grid[i + 1]);
            for _ in 0..BISECTION_ITERS {
                let mid = 0.5 * (lo + hi);
                if h(mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = 0.5 * (lo + hi);
            let res = h(t).abs() / (theta * curve.f(t)).abs().max(f64::MIN_POSITIVE);
            (Some(t), Some(res), value(t).min(grid_min))
        }
        None => (None, None, grid_min),
    };
    Ok(BoundReport {
        kind,
        theta,
        t_grid: t_grid.to_vec(),
        values,
        grid_argmin: t_grid[imin],
        grid_min,
        t_opt,
        bound_at_opt,
        first_order_residual,
        convexity_flag,
        printed_convexity_flag,
        side_conditions,
    })
}

/// Log-spaced grid on `[1e-4, 40/(m·n·s·R)]`.
pub fn chernoff_grid(m: usize, g: &PolynomialSpec, r: f64, points: usize) -> Result<Vec<f64>> {
    let scale = m as f64 * g.degree().max(1) as f64 * g.s * r;
    let t_max = CHERNOFF_EXPONENT_CAP / scale;
    log_grid(CHERNOFF_T_MIN, t_max, points)
}

pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(lo > 0.0 && hi > lo) {
        return Err(Error::Range(format!("log grid needs 0 < lo < hi and ≥ 2 points, got [{lo}, {hi}], {points}")));
    }
    let (a, b) = (lo.ln(), hi.ln());
    let mut grid: Vec<f64> = (0..points).map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp()).collect();
    grid[0] = lo;
    grid[points - 1] = hi;
    Ok(grid)
}

/// Linear grid on `(0, 0.999/(m·n·s)]`.
pub fn bernstein_grid(m: usize, g: &PolynomialSpec, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::Range("grid needs at least one point".into()));
    }
    let t_max = BERNSTEIN_POLE_FRACTION / (m as f64 * g.degree().max(1) as f64 * g.s);
    Ok((1..=points).map(|i| t_max * i as f64 / points as f64).collect())
}

/// Estimates of `E‖exp(τX_j)‖₍ₖ₎`, indexed by summand `j`.
pub type MgfFn<'a> = dyn Fn(usize, f64) -> f64 + Sync + 'a;

struct GenericCurve<'a> {
    g: &'a PolynomialSpec,
    p: &'a [f64],
    k: usize,
    mgf: &'a MgfFn<'a>,
}

impl Curve for GenericCurve<'_> {
    fn f(&self, t: f64) -> f64 {
        let mut acc = self.k as f64 * self.g.weight(0);
        for l in 1..=self.g.degree() {
            for (j, &pj) in self.p.iter().enumerate() {
                acc += self.g.weight(l) * (self.mgf)(j, pj * l as f64 * self.g.s * t) / pj;
            }
        }
        acc
    }
    // Central differences; the generic curve only needs a grid minimum.
    fn df(&self, t: f64) -> f64 {
        let h = 1e-6 * t.max(1e-6);
        (self.f(t + h) - self.f(t - h)) / (2.0 * h)
    }
    fn d2f(&self, t: f64) -> f64 {
        let h = 1e-4 * t.max(1e-4);
        (self.f(t + h) - 2.0 * self.f(t) + self.f(t - h)) / (h * h)
    }
}

/// `(n+1)^{s−1} inf_t e^{−θt}(k a₀^s + Σ_l Σ_j a_l^{ls} E‖exp(p_j l s t X_j)‖₍ₖ₎ / p_j)`.
pub fn generic_kyfan_tail_bound(
    g: &PolynomialSpec,
    mgf: &MgfFn<'_>,
    p: &[f64],
    k: usize,
    theta: f64,
    t_grid: &[f64],
) -> Result<BoundReport> {
    g.validate()?;
    check_weights(p)?;
    if !(theta > 0.0) {
        return Err(Error::Range(format!("theta = {theta} must be positive")));
    }
    let curve = GenericCurve { g, p, k, mgf };
    let mut r = finish(BoundKind::Generic, &curve, g.prefactor(), theta, t_grid, true, Vec::new())?;
    r.printed_convexity_flag = r.convexity_flag;
    Ok(r)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChernoffParams {
    pub r: f64,
    pub k: usize,
    pub theta: f64,
    pub c_latala: f64,
    /// `σ̄₁(X_j)`, one per summand.
    pub sigma1_bar: Vec<f64>,
    /// `Ξ(X_j)`, one per summand.
    pub xi: Vec<f64>,
}

impl ChernoffParams {
    pub fn m(&self) -> usize {
        self.sigma1_bar.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0) || !(self.c_latala > 0.0) || !(self.theta > 0.0) || self.k == 0 {
            return Err(Error::Config("Chernoff needs R, C, θ > 0 and k ≥ 1".into()));
        }
        if self.sigma1_bar.is_empty() || self.sigma1_bar.len() != self.xi.len() {
            return Err(Error::Config("σ̄₁ and Ξ must have one entry per summand".into()));
        }
        if self.sigma1_bar.iter().chain(&self.xi).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("statistics must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

struct ChernoffCurve<'a> {
    p: &'a ChernoffParams,
    g: &'a PolynomialSpec,
}

impl ChernoffCurve<'_> {
    /// `Σ_l Σ_j (k a_l^{ls}/m) λ_l^q e^{λ_l t} (σ̄₁_j + CΞ_j)` with `λ_l = m l s R`, and
    /// the `(σ̄₁ + CΞ)`-free constant part when `q` is `None`.
    fn sum(&self, t: f64, q: i32) -> f64 {
        let m = self.p.m() as f64;
        let k = self.p.k as f64;
        let mut acc = 0.0;
        for l in 1..=self.g.degree() {
            let lam = m * l as f64 * self.g.s * self.p.r;
            let w = k * self.g.weight(l) / m;
            for (s1, xi) in self.p.sigma1_bar.iter().zip(&self.p.xi) {
                let stat = s1 + self.p.c_latala * xi;
                acc += if q == 0 {
                    w * (1.0 + (lam * t).exp_m1() * stat)
                } else {
                    w * lam.powi(q) * (lam * t).exp() * stat
                };
            }
        }
        acc
    }

    /// Closed-form `A₂` term of the diagnostic, which carries a second factor `k`.
    fn printed_a2(&self, t: f64) -> f64 {
        self.p.k as f64 * self.df(t)
    }
}

impl Curve for ChernoffCurve<'_> {
    fn f(&self, t: f64) -> f64 {
        self.p.k as f64 * self.g.weight(0) + self.sum(t, 0)
    }
    fn df(&self, t: f64) -> f64 {
        self.sum(t, 1)
    }
    fn d2f(&self, t: f64) -> f64 {
        self.sum(t, 2)
    }
}

/// Chernoff curve `(n+1)^{s−1} e^{−θt}{k a₀^s + Σ_l Σ_j (k a_l^{ls}/m)[1 + (e^{mlsRt} − 1)(σ̄₁_j + CΞ_j)]}`.
pub fn chernoff_bound(params: &ChernoffParams, g: &PolynomialSpec, t_grid: &[f64]) -> Result<BoundReport> {
    params.validate()?;
    g.validate()?;
    let curve = ChernoffCurve { p: params, g };
    let th = params.theta;
    let printed = t_grid
        .iter()
        .all(|&t| th * th * curve.f(t) - 2.0 * th * curve.printed_a2(t) + curve.d2f(t) > 0.0);
    finish(BoundKind::Chernoff, &curve, g.prefactor(), th, t_grid, printed, Vec::new())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BernsteinParams {
    pub k: usize,
    pub theta: f64,
    pub c_latala: f64,
    /// `σ₁(A_j²)`, one per summand.
    pub sigma1_a_sq: Vec<f64>,
    /// `Υ(X_j)`, one per summand.
    pub upsilon: Vec<f64>,
}

impl BernsteinParams {
    pub fn m(&self) -> usize {
        self.sigma1_a_sq.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_latala > 0.0) || !(self.theta > 0.0) || self.k == 0 {
            return Err(Error::Config("Bernstein needs C, θ > 0 and k ≥ 1".into()));
        }
        if self.sigma1_a_sq.is_empty() || self.sigma1_a_sq.len() != self.upsilon.len() {
            return Err(Error::Config("σ₁(A²) and Υ must have one entry per summand".into()));
        }
        if self.sigma1_a_sq.iter().chain(&self.upsilon).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Config("statistics must be finite and nonnegative".into()));
        }
        Ok(())
    }
}

struct BernsteinCurve<'a> {
    p: &'a BernsteinParams,
    g: &'a PolynomialSpec,
}

impl BernsteinCurve<'_> {
    fn terms(&self, t: f64, which: usize) -> f64 {
        let m = self.p.m() as f64;
        let k = self.p.k as f64;
        let mut acc = 0.0;
        for l in 1..=self.g.degree() {
            let u = l as f64 * self.g.s;
            let pole = 1.0 - m * u * t;
            let w = k * self.g.weight(l);
            for (sa, ups) in self.p.sigma1_a_sq.iter().zip(&self.p.upsilon) {
                let cu = self.p.c_latala * ups;
                acc += w * match which {
                    0 => 1.0 / m + m * (u * t).powi(2) * sa / (2.0 * pole) + u * t * cu,
                    1 => m * u * u * t * (2.0 - m * u * t) * sa / (2.0 * pole * pole) + u * cu,
                    2 => m * u * u * sa / pole.powi(3),
                    // Closed-form B₂ and B₃ used by the diagnostic flag.
                    3 => (4.0 * m * u * u * t - 3.0 * u.powi(3) * m * m * t * t) * sa / (2.0 * pole * pole) + u * cu,
                    _ => m * u * (2.0 * u - m * u * u * t) * sa / pole.powi(3),
                };
            }
        }
        acc
    }
}

impl Curve for BernsteinCurve<'_> {
    fn f(&self, t: f64) -> f64 {
        self.p.k as f64 * self.g.weight(0) + self.terms(t, 0)
    }
    fn df(&self, t: f64) -> f64 {
        self.terms(t, 1)
    }
    fn d2f(&self, t: f64) -> f64 {
        self.terms(t, 2)
    }
}

/// Which term the closed-form convexity diagnostic uses in its last slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrintedConvexity {
    /// `θ²B₁ − 2θB₂ + B₃` with the closed-form `B₂`, `B₃`.
    #[default]
    LastSlotB3,
    /// `θ²B₁ − 2θB₂ + B₂`, with `B₂` repeated in the last slot.
    Literal,
}

/// Bernstein curve `(n+1)^{s−1} e^{−θt} k{a₀^s + Σ_l Σ_j a_l^{ls}[1/m + m(lst)²σ₁(A_j²)/(2(1−mlst)) + lstCΥ_j]}`.
pub fn bernstein_bound(
    params: &BernsteinParams,
    g: &PolynomialSpec,
    t_grid: &[f64],
    printed: PrintedConvexity,
) -> Result<BoundReport> {
    params.validate()?;
    g.validate()?;
    let m = params.m() as f64;
    let n = g.degree();
    if let Some(t) = t_grid.iter().find(|&&t| m * n as f64 * g.s * t >= 1.0) {
        return Err(Error::Range(format!("grid point t = {t} reaches the pole 1/(m·n·s)")));
    }
    let curve = BernsteinCurve { p: params, g };
    let th = params.theta;
    let printed_flag = t_grid.iter().all(|&t| {
        let last = match printed {
            PrintedConvexity::LastSlotB3 => curve.terms(t, 4),
            PrintedConvexity::Literal => curve.terms(t, 3),
        };
        th * th * curve.f(t) - 2.0 * th * curve.terms(t, 3) + last > 0.0
    });
    let mut side = Vec::new();
    for l in 1..=n {
        for (j, ups) in params.upsilon.iter().enumerate() {
            let value = params.c_latala * l as f64 * g.s * ups;
            let limit = th / m;
            side.push(SideCondition { l, j, value, limit, holds: value < limit });
        }
    }
    finish(BoundKind::Bernstein, &curve, g.prefactor(), th, t_grid, printed_flag, side)
}

/// Random Hölder exponents `p_i > 1` with `Σ 1/p_i = 1`.
pub fn random_holder_exponents<R: rand::Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| total / x).collect()
}

/// Whether `lhs ≤ rhs` within the norm tolerance; re-exported for callers
/// comparing bounds against estimates.
pub fn dominated(lhs: f64, rhs: f64) -> bool {
    leq_tol(lhs, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(x: C64) -> Tensor {
        Tensor::from_entries(&Shape::new(vec![1]).unwrap(), |_, _| x)
    }

    #[test]
    fn polynomial_eval_and_weights() {
        let g = PolynomialSpec::new(vec![0.25, 0.5, 0.25], 1.0).unwrap();
        assert_eq!(g.degree(), 2);
        assert!((g.eval(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((g.weight(2) - 0.0625).abs() < 1e-15);
        assert!(PolynomialSpec::new(vec![-1.0], 1.0).is_err());
        assert!(PolynomialSpec::new(vec![1.0], 0.5).is_err());
        let h = PolynomialSpec::new(vec![-0.0, 1.0], 1.5).unwrap();
        assert!(h.eval(-1.0).is_err());
    }

    #[test]
    fn product_check_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Shape::new(vec![2, 2]).unwrap();
        let c = Tensor::random_gaussian(&s, &mut rng);
        let r = ky_fan_product_inequality_check(std::slice::from_ref(&c), 2.0, &[1.0], 2).unwrap();
        assert!((r.lhs - r.mid).abs() < 1e-10 * r.rhs && (r.mid - r.rhs).abs() < 1e-10 * r.rhs && r.holds);
        let p = Hermitian::random_positive_definite(&s, 0.1, 1.0, &mut rng).into_tensor();
        let r = ky_fan_product_inequality_check(&[p.clone(), p.clone(), p], 1.0, &[3.0; 3], 4).unwrap();
        assert!((r.mid - r.rhs).abs() < 1e-10 * r.rhs && r.holds);
        assert!(matches!(ky_fan_product_inequality_check(&[c.clone(), c], 1.0, &[2.0, 3.0], 1), Err(Error::Domain(_))));
    }

    #[test]
    fn sum_check_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = Shape::new(vec![3]).unwrap();
        let c = Tensor::random_gaussian(&s, &mut rng);
        let r = ky_fan_sum_inequality_check(&[c], 2.0, 2).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-12 * r.rhs);
        let ps: Vec<Tensor> = (0..3).map(|_| Hermitian::random_positive_definite(&s, 0.1, 1.0, &mut rng).into_tensor()).collect();
        let r = ky_fan_sum_inequality_check(&ps, 1.0, 3).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-12 * r.rhs && r.holds);
    }

    #[test]
    fn xi_of_constant_samples_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Tensor::random_gaussian(&Shape::new(vec![2]).unwrap(), &mut rng);
        assert!(xi_statistic(&vec![x; 5]).unwrap().abs() < 1e-15);
        assert!(matches!(xi_statistic(&[scalar(C64::new(1.0, 0.0))]), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn xi_scalar_hand_evaluation() {
        // Samples 0, 1, 2, 5: mean 2, centred -2, -1, 0, 3.
        let xs: Vec<Tensor> = [0.0, 1.0, 2.0, 5.0].iter().map(|&v| scalar(C64::new(v, 0.0))).collect();
        let v: f64 = (4.0 + 1.0 + 0.0 + 9.0) / 4.0;
        let v4: f64 = (16.0 + 1.0 + 0.0 + 81.0) / 4.0;
        let expect = 2.0 * v.sqrt() + v4.powf(0.25);
        assert!((xi_statistic(&xs).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn upsilon_of_symmetric_sign_is_three() {
        let xs: Vec<Tensor> = (0..10).map(|i| scalar(C64::new(if i % 2 == 0 { 1.0 } else { -1.0 }, 0.0))).collect();
        assert!((upsilon_statistic(&xs).unwrap() - 3.0).abs() < 1e-15);
        let zeros = vec![scalar(C64::new(0.0, 0.0)); 3];
        assert_eq!(upsilon_statistic(&zeros).unwrap(), 0.0);
    }

    #[test]
    fn chernoff_scalar_reduction() {
        let p = ChernoffParams { r: 1.0, k: 1, theta: 3.0, c_latala: 1.0, sigma1_bar: vec![1.0], xi: vec![0.0] };
        let g = PolynomialSpec::identity();
        let grid = log_grid(0.1, 2.0, 50).unwrap();
        let rep = chernoff_bound(&p, &g, &grid).unwrap();
        for (t, v) in grid.iter().zip(&rep.values) {
            let exact = ((1.0 - 3.0) * t).exp();
            assert!((v - exact).abs() < 1e-13 * exact);
        }
        assert_eq!(rep.grid_argmin, 2.0);
        assert!(rep.t_opt.is_none());
    }

    #[test]
    fn chernoff_zero_statistics_is_decreasing() {
        let p = ChernoffParams { r: 1.0, k: 2, theta: 1.0, c_latala: 1.0, sigma1_bar: vec![0.0; 3], xi: vec![0.0; 3] };
        let g = PolynomialSpec::new(vec![0.5, 1.0, 0.5], 1.0).unwrap();
        let rep = chernoff_bound(&p, &g, &chernoff_grid(3, &g, 1.0, 100).unwrap()).unwrap();
        assert!(rep.values.windows(2).all(|w| w[1] < w[0]));
        let c = 2.0 * 0.5 + 2.0 * 1.0 + 2.0 * 0.5f64.powi(2);
        assert!((rep.values[0] - (-rep.t_grid[0]).exp() * c).abs() < 1e-12);
    }

    #[test]
    fn chernoff_t_opt_matches_dense_grid() {
        let p = ChernoffParams { r: 1.0, k: 1, theta: 2.0, c_latala: 1.0, sigma1_bar: vec![0.2; 3], xi: vec![0.1; 3] };
        let g = PolynomialSpec::identity();
        let rep = chernoff_bound(&p, &g, &chernoff_grid(3, &g, 1.0, 200).unwrap()).unwrap();
        let t = rep.t_opt.expect("interior minimum");
        assert!(rep.first_order_residual.unwrap() < 1e-8);
        let dense = chernoff_bound(&p, &g, &log_grid(1e-4, 40.0 / 3.0, 20000).unwrap()).unwrap();
        let i = rep.t_grid.iter().position(|&x| x >= t).unwrap();
        assert!((dense.grid_argmin - t).abs() <= rep.t_grid[i] - rep.t_grid[i - 1]);
        assert!(rep.bound_at_opt <= rep.grid_min + 1e-12);
        assert!(rep.convexity_flag);
    }

    #[test]
    fn bernstein_scalar_case() {
        let p = BernsteinParams { k: 1, theta: 2.0, c_latala: 1.0, sigma1_a_sq: vec![1.0], upsilon: vec![0.0] };
        let g = PolynomialSpec::identity();
        let grid = bernstein_grid(1, &g, 500).unwrap();
        let rep = bernstein_bound(&p, &g, &grid, PrintedConvexity::default()).unwrap();
        for (t, v) in grid.iter().zip(&rep.values) {
            let exact = (-2.0 * t).exp() * (t * t / (2.0 * (1.0 - t)) + 1.0);
            assert!((v - exact).abs() < 1e-13 * exact);
        }
        let t = rep.t_opt.unwrap();
        // Derivative oracle by central differences of the closed form.
        let b = |t: f64| (-2.0 * t).exp() * (t * t / (2.0 * (1.0 - t)) + 1.0);
        let h = 1e-6;
        assert!(((b(t + h) - b(t - h)) / (2.0 * h)).abs() < 1e-8);
        assert!(rep.first_order_residual.unwrap() < 1e-8);
        let dense = bernstein_bound(&p, &g, &bernstein_grid(1, &g, 50000).unwrap(), PrintedConvexity::default()).unwrap();
        assert!((dense.grid_argmin - t).abs() < grid[0]);
    }

    #[test]
    fn bernstein_rejects_pole() {
        let p = BernsteinParams { k: 1, theta: 2.0, c_latala: 1.0, sigma1_a_sq: vec![1.0; 2], upsilon: vec![0.0; 2] };
        let g = PolynomialSpec::identity();
        assert!(matches!(bernstein_bound(&p, &g, &[0.1, 0.5], PrintedConvexity::default()), Err(Error::Range(_))));
    }

    #[test]
    fn bernstein_zero_statistics_is_decreasing() {
        let p = BernsteinParams { k: 1, theta: 1.0, c_latala: 1.0, sigma1_a_sq: vec![0.0; 2], upsilon: vec![0.0; 2] };
        let g = PolynomialSpec::identity();
        let rep = bernstein_bound(&p, &g, &bernstein_grid(2, &g, 50).unwrap(), PrintedConvexity::Literal).unwrap();
        assert!(rep.values.windows(2).all(|w| w[1] < w[0]));
        assert!(rep.side_conditions.iter().all(|c| c.holds));
    }

    #[test]
    fn exact_derivatives_match_finite_differences() {
        let p = BernsteinParams { k: 2, theta: 1.0, c_latala: 0.7, sigma1_a_sq: vec![0.3, 0.5], upsilon: vec![0.1, 0.2] };
        let g = PolynomialSpec::new(vec![0.2, 0.6, 0.3], 1.5).unwrap();
        let c = BernsteinCurve { p: &p, g: &g };
        let q = ChernoffParams { r: 1.3, k: 2, theta: 1.0, c_latala: 0.7, sigma1_bar: vec![0.3, 0.5], xi: vec![0.1, 0.2] };
        let d = ChernoffCurve { p: &q, g: &g };
        let h = 1e-5;
        for t in [0.01, 0.05, 0.1] {
            let fd = |c: &dyn Curve| ((c.f(t + h) - c.f(t - h)) / (2.0 * h), (c.df(t + h) - c.df(t - h)) / (2.0 * h));
            for cur in [&c as &dyn Curve, &d as &dyn Curve] {
                let (d1, d2) = fd(cur);
                assert!((d1 - cur.df(t)).abs() < 1e-6 * cur.df(t).abs().max(1.0));
                assert!((d2 - cur.d2f(t)).abs() < 1e-6 * cur.d2f(t).abs().max(1.0));
            }
        }
    }

    #[test]
    fn generic_degenerate_cases() {
        let g0 = PolynomialSpec::new(vec![2.0], 1.0).unwrap();
        let grid = log_grid(0.1, 5.0, 20).unwrap();
        let mgf = |_: usize, _: f64| 0.0;
        let r = generic_kyfan_tail_bound(&g0, &mgf, &[1.0], 3, 1.0, &grid).unwrap();
        assert_eq!(r.grid_argmin, 5.0);
        assert!((r.grid_min - 6.0 * (-5.0f64).exp()).abs() < 1e-14);
        let one = |_: usize, _: f64| 3.0;
        let r = generic_kyfan_tail_bound(&PolynomialSpec::identity(), &one, &[1.0], 3, 1.0, &grid).unwrap();
        assert!((r.grid_min - 3.0 * (-5.0f64).exp()).abs() < 1e-14);
        assert!(generic_kyfan_tail_bound(&g0, &mgf, &[1.0], 3, 1.0, &[]).is_err());
    }

    #[test]
    fn order_condition_identity_has_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = Hermitian::random(&Shape::new(vec![3]).unwrap(), &mut rng);
        let r = psd_order_condition_check(&h, &PolynomialSpec::identity(), 0.7).unwrap();
        assert!(r.min_eig_gap.abs() < 1e-12 && r.holds);
    }

    #[test]
    fn bernstein_operator_gap_on_bounded_samples() {
        // X = ±a·I with A = a·I satisfies Xᵖ ⪯ p!A²/2 for a ≤ 1.
        let s = Shape::new(vec![2]).unwrap();
        for a in [0.3, 0.9] {
            let a_sq = Hermitian::identity(&s).scale(a * a);
            for sign in [1.0, -1.0] {
                let x = Hermitian::identity(&s).scale(sign * a);
                for t in [0.1, 0.5, 0.9] {
                    assert!(bernstein_operator_gap(&x, &a_sq, t).unwrap() >= -1e-8);
                }
            }
        }
    }
}
