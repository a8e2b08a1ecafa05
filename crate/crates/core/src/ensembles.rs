//! Random Hermitian tensor ensembles and the Monte Carlo tail estimator used
//! to certify the analytic bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, Continuous, ContinuousCDF};

use crate::error::{Error, Result};
use crate::norms::operator_norm;
use crate::spectral::eig_hermitian;
use crate::tail::{
    bernstein_bound, bernstein_grid, chernoff_bound, chernoff_grid, generic_kyfan_tail_bound, log_grid,
    psd_order_condition_from_eigenvalues, sigma1_bar, upsilon_statistic, xi_statistic, BernsteinParams, BoundReport,
    ChernoffParams, EmpiricalMgf, PolynomialSpec, PrintedConvexity, DEFAULT_GRID_POINTS,
};
use crate::tensor::{Shape, TensorLiteral};
use crate::{Hermitian, Tensor, C64};

/// Moment-check slack for `Xᵖ ⪯ p!A²/2`.
pub const MOMENT_TOL: f64 = 1e-9;
/// Halvings of `Z` tried before a subexponential draw is rejected.
const MAX_CLIPS: usize = 60;
pub const DEFAULT_STAT_SAMPLES: usize = 4000;
pub const CONFIDENCE: f64 = 0.95;
/// Stream offset separating statistic draws from trial draws.
const STAT_STREAM_BASE: u64 = 1 << 62;

/// `A` for the subexponential ensemble: a multiple of the identity or a literal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AFactor {
    Scalar(f64),
    Tensor(TensorLiteral),
}

impl AFactor {
    fn to_hermitian(&self, shape: &Shape) -> Result<Hermitian> {
        match self {
            AFactor::Scalar(a) => Ok(Hermitian::identity(shape).scale(*a)),
            AFactor::Tensor(lit) => {
                let t: Tensor = lit.to_tensor()?;
                if t.shape() != shape {
                    return Err(Error::Shape(format!("A has shape {:?}, ensemble {:?}", t.shape(), shape)));
                }
                Hermitian::new(t)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleKind {
    /// Haar eigenbasis, eigenvalues i.i.d. uniform on `[0, R]`.
    BoundedPsd { r: f64 },
    /// `X = A★Z★A`, `Z` a Hermitian contraction with uniform `[−1, 1]` spectrum,
    /// emitted as `±X` on alternating trials.
    ZeroMeanSubexp { a: AFactor },
    /// Diagonal with i.i.d. `±scale` entries.
    DiagonalRademacher { scale: f64 },
    /// `(scale/dof) Σ g gᴴ` over `dof` complex Gaussian vectors.
    WishartLike { dof: usize, scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    #[serde(flatten)]
    pub kind: EnsembleKind,
    pub shape: Shape,
    pub m: usize,
    /// Global scale γ applied to every draw; `None` picks `min(1, 0.1/‖E S‖)`.
    #[serde(default)]
    pub normalization: Option<f64>,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if let Some(g) = self.normalization {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::Config(format!("normalization γ = {g} must be positive")));
            }
        }
        match &self.kind {
            EnsembleKind::BoundedPsd { r } if !(*r > 0.0) => Err(Error::Config(format!("R = {r} must be positive"))),
            EnsembleKind::ZeroMeanSubexp { a } => {
                let a = a.to_hermitian(&self.shape)?;
                if eig_hermitian(&a)?.min_eigenvalue() < -1e-12 {
                    return Err(Error::Config("A must be positive semidefinite".into()));
                }
                Ok(())
            }
            EnsembleKind::DiagonalRademacher { scale } if !(*scale >= 0.0) => {
                Err(Error::Config(format!("scale = {scale} must be nonnegative")))
            }
            EnsembleKind::WishartLike { dof, scale } if *dof == 0 || !(*scale > 0.0) => {
                Err(Error::Config("Wishart needs dof ≥ 1 and scale > 0".into()))
            }
            _ => Ok(()),
        }
    }

    fn is_psd(&self) -> bool {
        matches!(self.kind, EnsembleKind::BoundedPsd { .. } | EnsembleKind::WishartLike { .. })
    }

    fn is_centered(&self) -> bool {
        matches!(self.kind, EnsembleKind::ZeroMeanSubexp { .. } | EnsembleKind::DiagonalRademacher { .. })
    }
}

/// Per-trial generator: ChaCha stream `trial` of `seed`. Pair-sampled kinds
/// share the stream of `trial / 2`.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Prepared sampler: `A` and the moment targets `p!A²/2` are built once.
#[derive(Clone, Debug)]
pub struct Sampler {
    spec: EnsembleSpec,
    gamma: f64,
    a: Option<Hermitian>,
    moment_targets: Vec<(i32, Hermitian)>,
}

impl Sampler {
    pub fn new(spec: &EnsembleSpec, gamma: f64) -> Result<Self> {
        spec.validate()?;
        let (a, moment_targets) = match &spec.kind {
            EnsembleKind::ZeroMeanSubexp { a } => {
                let a = a.to_hermitian(&spec.shape)?;
                let a2 = Hermitian::symmetrized(&a.as_tensor().einstein_product(a.as_tensor())?);
                let targets = [(2, 1.0), (3, 3.0), (4, 12.0)].iter().map(|&(p, c)| (p, a2.scale(c))).collect();
                (Some(a), targets)
            }
            _ => (None, Vec::new()),
        };
        Ok(Self { spec: spec.clone(), gamma, a, moment_targets })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The `m` summands of one trial.
    pub fn trial(&self, seed: u64, trial: u64) -> Result<Vec<Hermitian>> {
        let paired = matches!(self.spec.kind, EnsembleKind::ZeroMeanSubexp { .. });
        let (stream, sign) = if paired { (trial >> 1, if trial & 1 == 1 { -1.0 } else { 1.0 }) } else { (trial, 1.0) };
        let mut rng = trial_rng(seed, stream);
        (0..self.spec.m).map(|_| Ok(self.draw(&mut rng)?.scale(sign * self.gamma))).collect()
    }

    /// One unscaled draw.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Hermitian> {
        let shape = &self.spec.shape;
        match &self.spec.kind {
            EnsembleKind::BoundedPsd { r } => {
                let spec: Vec<f64> = (0..shape.unfolded_dim()).map(|_| rng.random::<f64>() * r).collect();
                Hermitian::with_spectrum_in_random_basis(shape, &spec, rng)
            }
            EnsembleKind::ZeroMeanSubexp { .. } => self.draw_subexp(rng),
            EnsembleKind::DiagonalRademacher { scale } => {
                let diag: Vec<f64> = (0..shape.unfolded_dim()).map(|_| if rng.random::<bool>() { *scale } else { -scale }).collect();
                Hermitian::from_diagonal(shape, &diag)
            }
            EnsembleKind::WishartLike { dof, scale } => {
                let d = shape.unfolded_dim();
                let s = (0.5f64).sqrt();
                let g: Vec<Vec<C64>> = (0..*dof)
                    .map(|_| {
                        (0..d)
                            .map(|_| {
                                let re: f64 = StandardNormal.sample(rng);
                                let im: f64 = StandardNormal.sample(rng);
                                C64::new(re * s, im * s)
                            })
                            .collect()
                    })
                    .collect();
                let w = scale / *dof as f64;
                let t = Tensor::fold(
                    shape,
                    crate::Matrix::from_fn(d, |i, j| g.iter().map(|v| v[i] * v[j].conj()).sum::<C64>() * w),
                )?;
                Ok(Hermitian::symmetrized(&t))
            }
        }
    }

    fn draw_subexp<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Hermitian> {
        let shape = &self.spec.shape;
        let a = self.a.as_ref().expect("subexp sampler has A");
        let spec: Vec<f64> = (0..shape.unfolded_dim()).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let mut z = Hermitian::with_spectrum_in_random_basis(shape, &spec, rng)?;
        for _ in 0..MAX_CLIPS {
            let x = Hermitian::symmetrized(&a.as_tensor().einstein_product(z.as_tensor())?.einstein_product(a.as_tensor())?);
            if self.moments_hold(&x)? {
                return Ok(x);
            }
            z = z.scale(0.5);
        }
        Err(Error::Consistency("subexponential draw failed the moment check after clipping".into()))
    }

    /// `λ_min(p!A²/2 − Xᵖ) ≥ −1e-9` for `p = 2, 3, 4`.
    pub fn moments_hold(&self, x: &Hermitian) -> Result<bool> {
        for (p, target) in &self.moment_targets {
            let xp = Hermitian::symmetrized(&x.as_tensor().power(*p as usize));
            if eig_hermitian(&target.sub(&xp)?)?.min_eigenvalue() < -MOMENT_TOL {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// `draws` unscaled samples from streams disjoint from the trial streams.
/// Pair-sampled kinds emit `X, −X` pairs.
pub fn statistic_samples(sampler: &Sampler, seed: u64, draws: usize) -> Result<Vec<Hermitian>> {
    let paired = matches!(sampler.spec.kind, EnsembleKind::ZeroMeanSubexp { .. });
    (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let stream = if paired { i >> 1 } else { i };
            let mut rng = trial_rng(seed, STAT_STREAM_BASE + stream);
            let x = sampler.draw(&mut rng)?;
            Ok(if paired && i & 1 == 1 { x.scale(-1.0) } else { x })
        })
        .collect()
}

/// `min(1, 0.1/‖E S‖)` with `E S = m · mean(X)`, or 1 when the mean vanishes.
pub fn auto_gamma(samples: &[Hermitian], m: usize) -> Result<f64> {
    let mean = mean_tensor(samples)?;
    let norm = m as f64 * operator_norm(&mean)?;
    Ok(if norm < 1e-12 { 1.0 } else { (0.1 / norm).min(1.0) })
}

fn mean_tensor(samples: &[Hermitian]) -> Result<Tensor> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, got: 0 });
    }
    let n = samples.len() as f64;
    let sum = Tensor::sum(samples.iter().map(|x| x.as_tensor()))?;
    Ok(sum.scale_real(1.0 / n))
}

/// One-sided Clopper–Pearson upper limit at `level`.
pub fn clopper_pearson_upper(hits: usize, trials: usize, level: f64) -> Result<f64> {
    if trials == 0 || hits > trials {
        return Err(Error::Range(format!("{hits} hits in {trials} trials")));
    }
    if hits == trials {
        return Ok(1.0);
    }
    let beta = Beta::new(hits as f64 + 1.0, (trials - hits) as f64).map_err(|e| Error::Domain(e.to_string()))?;
    // statrs' quantile is accurate to ~1e-8; polish with Newton on its cdf.
    let mut x = beta.inverse_cdf(level);
    for _ in 0..4 {
        let pdf = beta.pdf(x);
        if !(pdf > 0.0) {
            break;
        }
        let next = x - (beta.cdf(x) - level) / pdf;
        if !(next > 0.0 && next < 1.0) {
            break;
        }
        x = next;
    }
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub trials: usize,
    pub hits: usize,
    pub point_estimate: f64,
    pub ci_upper_95: f64,
    pub condition_holds_rate: f64,
}

/// Eigenvalues of `S = Σ X_j` for every trial, in trial order.
#[derive(Clone, Debug)]
pub struct TrialSpectra {
    pub eigenvalues: Vec<Vec<f64>>,
}

/// Runs `trials` trials on a pool of `workers` threads; the result does not
/// depend on `workers`.
pub fn sample_sums(sampler: &Sampler, seed: u64, trials: usize, workers: usize) -> Result<TrialSpectra> {
    if trials == 0 {
        return Err(Error::Range("trials must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    let eigenvalues = pool.install(|| {
        (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let xs = sampler.trial(seed, t)?;
                let s = Hermitian::symmetrized(&Tensor::sum(xs.iter().map(|x| x.as_tensor()))?);
                Ok(eig_hermitian(&s)?.eigenvalues().to_vec())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(TrialSpectra { eigenvalues })
}

impl TrialSpectra {
    /// `‖g(S)‖₍ₖ₎` per trial.
    pub fn norms(&self, g: &PolynomialSpec, k: usize) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|ev| {
                if k == 0 || k > ev.len() {
                    return Err(Error::Range(format!("Ky Fan index {k} outside 1..={}", ev.len())));
                }
                let mut v = ev.iter().map(|&l| Ok(g.eval(l)?.abs())).collect::<Result<Vec<f64>>>()?;
                v.sort_by(|a, b| b.total_cmp(a));
                Ok(v[..k].iter().sum())
            })
            .collect()
    }

    /// Tail estimate at `theta`; the order condition is checked at `t` when given.
    pub fn tail(&self, norms: &[f64], g: &PolynomialSpec, theta: f64, t: Option<f64>) -> Result<TailEstimate> {
        let trials = norms.len();
        let hits = norms.iter().filter(|&&v| v >= theta).count();
        let condition_holds_rate = match t {
            Some(t) => {
                let mut ok = 0usize;
                for ev in &self.eigenvalues {
                    if psd_order_condition_from_eigenvalues(ev, g, t)?.holds {
                        ok += 1;
                    }
                }
                ok as f64 / trials as f64
            }
            None => f64::NAN,
        };
        Ok(TailEstimate {
            trials,
            hits,
            point_estimate: hits as f64 / trials as f64,
            ci_upper_95: clopper_pearson_upper(hits, trials, CONFIDENCE)?,
            condition_holds_rate,
        })
    }
}

/// `Pr(‖g(Σ X_j)‖₍ₖ₎ ≥ θ)` by Monte Carlo, with the scale γ taken from the spec
/// (1 when unset).
#[allow(clippy::too_many_arguments)]
pub fn estimate_tail(
    spec: &EnsembleSpec,
    g: &PolynomialSpec,
    k: usize,
    theta: f64,
    trials: usize,
    seed: u64,
    workers: usize,
    condition_t: Option<f64>,
) -> Result<TailEstimate> {
    let sampler = Sampler::new(spec, spec.normalization.unwrap_or(1.0))?;
    let spectra = sample_sums(&sampler, seed, trials, workers)?;
    let norms = spectra.norms(g, k)?;
    spectra.tail(&norms, g, theta, condition_t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertifyKind {
    Chernoff,
    Bernstein,
    Generic,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifyConfig {
    pub kind: CertifyKind,
    pub k: usize,
    pub c_latala: f64,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub stat_samples: usize,
    pub grid_points: usize,
    pub printed_convexity: PrintedConvexity,
}

impl CertifyConfig {
    pub fn new(kind: CertifyKind, k: usize, trials: usize, seed: u64) -> Self {
        Self {
            kind,
            k,
            c_latala: 1.0,
            trials,
            seed,
            workers: 1,
            stat_samples: DEFAULT_STAT_SAMPLES,
            grid_points: DEFAULT_GRID_POINTS,
            printed_convexity: PrintedConvexity::default(),
        }
    }
}

/// Statistics of the scaled summand distribution (identical for every `j`).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct EnsembleStatistics {
    pub gamma: f64,
    pub samples: usize,
    pub sigma1_bar: Option<f64>,
    pub xi: Option<f64>,
    pub upsilon: Option<f64>,
    pub sigma1_a_sq: Option<f64>,
    /// Eigenvalue cap passed to the Chernoff curve.
    pub r_cap: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationPoint {
    pub theta: f64,
    pub analytic_bound: f64,
    pub t_opt: Option<f64>,
    pub t_used: f64,
    pub first_order_residual: Option<f64>,
    pub convexity_flag: bool,
    pub printed_convexity_flag: bool,
    pub side_conditions_hold: bool,
    pub estimate: TailEstimate,
    /// `analytic_bound − ci_upper_95`.
    pub margin: f64,
    /// The comparison applies only where the analytic bound is at most 1.
    pub applicable: bool,
    pub violation: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificationReport {
    pub kind: CertifyKind,
    pub spec: EnsembleSpec,
    pub g: PolynomialSpec,
    pub k: usize,
    pub c_latala: f64,
    pub trials: usize,
    pub seed: u64,
    pub statistics: EnsembleStatistics,
    pub points: Vec<CertificationPoint>,
    pub violations: usize,
}

/// Curve builder for one θ, shared between certification and θ-grid selection.
pub struct BoundModel {
    kind: CertifyKind,
    g: PolynomialSpec,
    k: usize,
    m: usize,
    c_latala: f64,
    stats: EnsembleStatistics,
    grid: Vec<f64>,
    mgf: Option<EmpiricalMgf>,
    printed: PrintedConvexity,
}

impl BoundModel {
    /// Estimates statistics for `spec` (choosing γ if unset) and fixes the t grid.
    pub fn prepare(spec: &EnsembleSpec, g: &PolynomialSpec, cfg: &CertifyConfig) -> Result<(Self, Sampler)> {
        spec.validate()?;
        g.validate()?;
        match cfg.kind {
            CertifyKind::Chernoff if !spec.is_psd() => {
                return Err(Error::Config("Chernoff needs a positive semidefinite ensemble".into()))
            }
            CertifyKind::Chernoff if matches!(spec.kind, EnsembleKind::WishartLike { .. }) => {
                return Err(Error::Config("Chernoff needs an almost-sure eigenvalue cap; WishartLike has none".into()))
            }
            CertifyKind::Bernstein if !spec.is_centered() => {
                return Err(Error::Config("Bernstein needs a zero-mean ensemble".into()))
            }
            _ => {}
        }
        if cfg.stat_samples < 2 {
            return Err(Error::InsufficientSamples { needed: 2, got: cfg.stat_samples });
        }
        let raw = Sampler::new(spec, 1.0)?;
        let raw_samples = statistic_samples(&raw, cfg.seed, cfg.stat_samples)?;
        let gamma = match spec.normalization {
            Some(gm) => gm,
            None => auto_gamma(&raw_samples, spec.m)?,
        };
        let samples: Vec<Hermitian> = raw_samples.iter().map(|x| x.scale(gamma)).collect();
        let tensors: Vec<Tensor> = samples.iter().map(|x| x.as_tensor().clone()).collect();
        let mut stats = EnsembleStatistics { gamma, samples: samples.len(), ..Default::default() };
        let mut mgf = None;
        let grid = match cfg.kind {
            CertifyKind::Chernoff => {
                let r = match spec.kind {
                    EnsembleKind::BoundedPsd { r } => r,
                    _ => unreachable!("checked above"),
                };
                // Any cap ≥ γR is valid; the chord bound without 1/R needs a cap ≥ 1.
                let r_cap = (gamma * r).max(1.0);
                stats.r_cap = Some(r_cap);
                stats.sigma1_bar = Some(sigma1_bar(&tensors)?);
                stats.xi = Some(xi_statistic(&tensors)?);
                chernoff_grid(spec.m, g, r_cap, cfg.grid_points)?
            }
            CertifyKind::Bernstein => {
                let a_sq = match &spec.kind {
                    EnsembleKind::ZeroMeanSubexp { a } => {
                        let a = a.to_hermitian(&spec.shape)?;
                        operator_norm(&a.as_tensor().einstein_product(a.as_tensor())?)?
                    }
                    EnsembleKind::DiagonalRademacher { scale } => scale * scale,
                    _ => unreachable!("checked above"),
                };
                stats.sigma1_a_sq = Some(gamma * gamma * a_sq);
                stats.upsilon = Some(upsilon_statistic(&tensors)?);
                bernstein_grid(spec.m, g, cfg.grid_points)?
            }
            CertifyKind::Generic => {
                let r_emp = samples
                    .iter()
                    .map(|x| operator_norm(x.as_tensor()))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(1e-12f64, f64::max);
                mgf = Some(EmpiricalMgf::new(&samples, cfg.k)?);
                let scale = spec.m as f64 * g.degree().max(1) as f64 * g.s * r_emp;
                log_grid(crate::tail::CHERNOFF_T_MIN, crate::tail::CHERNOFF_EXPONENT_CAP / scale, cfg.grid_points)?
            }
        };
        let model = Self {
            kind: cfg.kind,
            g: g.clone(),
            k: cfg.k,
            m: spec.m,
            c_latala: cfg.c_latala,
            stats,
            grid,
            mgf,
            printed: cfg.printed_convexity,
        };
        Ok((model, Sampler::new(spec, gamma)?))
    }

    pub fn statistics(&self) -> &EnsembleStatistics {
        &self.stats
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn bound(&self, theta: f64) -> Result<BoundReport> {
        self.bound_on(theta, &self.grid)
    }

    pub fn bound_on(&self, theta: f64, grid: &[f64]) -> Result<BoundReport> {
        let m = self.m;
        match self.kind {
            CertifyKind::Chernoff => {
                let p = ChernoffParams {
                    r: self.stats.r_cap.expect("chernoff stats"),
                    k: self.k,
                    theta,
                    c_latala: self.c_latala,
                    sigma1_bar: vec![self.stats.sigma1_bar.expect("chernoff stats"); m],
                    xi: vec![self.stats.xi.expect("chernoff stats"); m],
                };
                chernoff_bound(&p, &self.g, grid)
            }
            CertifyKind::Bernstein => {
                let p = BernsteinParams {
                    k: self.k,
                    theta,
                    c_latala: self.c_latala,
                    sigma1_a_sq: vec![self.stats.sigma1_a_sq.expect("bernstein stats"); m],
                    upsilon: vec![self.stats.upsilon.expect("bernstein stats"); m],
                };
                bernstein_bound(&p, &self.g, grid, self.printed)
            }
            CertifyKind::Generic => {
                let mgf = self.mgf.as_ref().expect("generic mgf");
                let f = |_: usize, tau: f64| mgf.eval(tau);
                generic_kyfan_tail_bound(&self.g, &f, &vec![m as f64; m], self.k, theta, grid)
            }
        }
    }
}

/// From `candidates`, the θ values whose bound is at most 1 and has an interior
/// optimizer, thinned to `count` evenly spaced picks.
pub fn select_theta_grid(model: &BoundModel, candidates: &[f64], count: usize) -> Result<Vec<f64>> {
    let mut ok = Vec::new();
    for &th in candidates {
        let r = model.bound(th)?;
        if r.t_opt.is_some() && r.bound_at_opt <= 1.0 {
            ok.push(th);
        }
    }
    if ok.len() < count {
        return Err(Error::Range(format!("only {} admissible θ values, need {count}", ok.len())));
    }
    if count == 1 {
        return Ok(vec![ok[ok.len() / 2]]);
    }
    Ok((0..count).map(|i| ok[i * (ok.len() - 1) / (count - 1)]).collect())
}

/// Certifies the analytic bound against Monte Carlo at each θ.
pub fn certify(spec: &EnsembleSpec, g: &PolynomialSpec, theta_grid: &[f64], cfg: &CertifyConfig) -> Result<CertificationReport> {
    let (model, sampler) = BoundModel::prepare(spec, g, cfg)?;
    certify_with(&model, &sampler, spec, theta_grid, cfg)
}

pub fn certify_with(
    model: &BoundModel,
    sampler: &Sampler,
    spec: &EnsembleSpec,
    theta_grid: &[f64],
    cfg: &CertifyConfig,
) -> Result<CertificationReport> {
    if theta_grid.is_empty() {
        return Err(Error::Range("empty θ grid".into()));
    }
    let spectra = sample_sums(sampler, cfg.seed, cfg.trials, cfg.workers)?;
    let norms = spectra.norms(&model.g, cfg.k)?;
    let mut points = Vec::with_capacity(theta_grid.len());
    for &theta in theta_grid {
        let rep = model.bound(theta)?;
        let t_used = rep.t_opt.unwrap_or(rep.grid_argmin);
        let estimate = spectra.tail(&norms, &model.g, theta, Some(t_used))?;
        let applicable = rep.bound_at_opt <= 1.0;
        let violation = applicable && estimate.ci_upper_95 > rep.bound_at_opt;
        points.push(CertificationPoint {
            theta,
            analytic_bound: rep.bound_at_opt,
            t_opt: rep.t_opt,
            t_used,
            first_order_residual: rep.first_order_residual,
            convexity_flag: rep.convexity_flag,
            printed_convexity_flag: rep.printed_convexity_flag,
            side_conditions_hold: rep.side_conditions.iter().all(|c| c.holds),
            margin: rep.bound_at_opt - estimate.ci_upper_95,
            estimate,
            applicable,
            violation,
        });
    }
    let violations = points.iter().filter(|p| p.violation).count();
    Ok(CertificationReport {
        kind: cfg.kind,
        spec: EnsembleSpec { normalization: Some(sampler.gamma()), ..spec.clone() },
        g: model.g.clone(),
        k: cfg.k,
        c_latala: cfg.c_latala,
        trials: cfg.trials,
        seed: cfg.seed,
        statistics: model.stats.clone(),
        points,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> Shape {
        Shape::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn bounded_psd_spectrum_in_range() {
        let spec = EnsembleSpec { kind: EnsembleKind::BoundedPsd { r: 1.0 }, shape: shape(), m: 1, normalization: None };
        let s = Sampler::new(&spec, 1.0).unwrap();
        let mut rng = trial_rng(1, 0);
        for _ in 0..200 {
            let ev = eig_hermitian(&s.draw(&mut rng).unwrap()).unwrap();
            assert!(ev.min_eigenvalue() >= -1e-12 && ev.max_eigenvalue() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn subexp_moments_with_identity_a() {
        let spec = EnsembleSpec {
            kind: EnsembleKind::ZeroMeanSubexp { a: AFactor::Scalar(1.0) },
            shape: shape(),
            m: 1,
            normalization: None,
        };
        let s = Sampler::new(&spec, 1.0).unwrap();
        let mut rng = trial_rng(2, 0);
        for _ in 0..100 {
            let x = s.draw(&mut rng).unwrap();
            for (p, cap) in [(2usize, 1.0), (3, 3.0), (4, 12.0)] {
                let xp = Hermitian::symmetrized(&x.as_tensor().power(p));
                assert!(eig_hermitian(&xp).unwrap().max_eigenvalue() <= cap + 1e-9);
            }
        }
    }

    #[test]
    fn pair_sampling_cancels_exactly() {
        let spec = EnsembleSpec {
            kind: EnsembleKind::ZeroMeanSubexp { a: AFactor::Scalar(0.5) },
            shape: shape(),
            m: 2,
            normalization: None,
        };
        let s = Sampler::new(&spec, 1.0).unwrap();
        let a = s.trial(7, 4).unwrap();
        let b = s.trial(7, 5).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.add(y).unwrap().as_tensor().frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn rademacher_mean_vanishes() {
        let spec = EnsembleSpec {
            kind: EnsembleKind::DiagonalRademacher { scale: 1.0 },
            shape: shape(),
            m: 1,
            normalization: None,
        };
        let s = Sampler::new(&spec, 1.0).unwrap();
        let xs = statistic_samples(&s, 3, 4000).unwrap();
        let mean = mean_tensor(&xs).unwrap();
        let bound = 4.0 / (4000f64).sqrt();
        assert!(mean.as_matrix().as_slice().iter().all(|z| z.norm() < bound));
    }

    #[test]
    fn clopper_pearson_zero_hits_closed_form() {
        for n in [10usize, 1000, 10000] {
            let u = clopper_pearson_upper(0, n, 0.95).unwrap();
            let exact = 1.0 - 0.05f64.powf(1.0 / n as f64);
            assert!((u - exact).abs() < 1e-10 * exact, "{u} vs {exact}");
        }
        assert_eq!(clopper_pearson_upper(5, 5, 0.95).unwrap(), 1.0);
        let u = clopper_pearson_upper(30, 100, 0.95).unwrap();
        assert!(u > 0.3 && u < 0.4);
    }

    #[test]
    fn tail_edge_cases() {
        let spec = EnsembleSpec { kind: EnsembleKind::BoundedPsd { r: 1.0 }, shape: shape(), m: 3, normalization: None };
        let g = PolynomialSpec::identity();
        let e = estimate_tail(&spec, &g, 1, 0.0, 50, 1, 2, None).unwrap();
        assert_eq!(e.point_estimate, 1.0);
        let e = estimate_tail(&spec, &g, 1, 3.0 + 1e-9, 50, 1, 2, None).unwrap();
        assert_eq!(e.hits, 0);
    }

    #[test]
    fn estimate_is_worker_independent() {
        let spec = EnsembleSpec { kind: EnsembleKind::BoundedPsd { r: 1.0 }, shape: shape(), m: 3, normalization: None };
        let g = PolynomialSpec::identity();
        let a = estimate_tail(&spec, &g, 2, 2.5, 300, 9, 1, Some(0.3)).unwrap();
        let b = estimate_tail(&spec, &g, 2, 2.5, 300, 9, 4, Some(0.3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn hypothesis_mismatch_is_config_error() {
        let g = PolynomialSpec::identity();
        let psd = EnsembleSpec { kind: EnsembleKind::BoundedPsd { r: 1.0 }, shape: shape(), m: 2, normalization: None };
        let cfg = CertifyConfig::new(CertifyKind::Bernstein, 1, 10, 0);
        assert!(matches!(certify(&psd, &g, &[1.0], &cfg), Err(Error::Config(_))));
        let w = EnsembleSpec { kind: EnsembleKind::WishartLike { dof: 3, scale: 1.0 }, shape: shape(), m: 2, normalization: None };
        let cfg = CertifyConfig::new(CertifyKind::Chernoff, 1, 10, 0);
        assert!(matches!(certify(&w, &g, &[1.0], &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = EnsembleSpec {
            kind: EnsembleKind::ZeroMeanSubexp { a: AFactor::Scalar(0.2) },
            shape: shape(),
            m: 4,
            normalization: Some(0.5),
        };
        let js = serde_json::to_string(&spec).unwrap();
        assert!(js.contains("\"kind\":\"zero_mean_subexp\""));
        let back: EnsembleSpec = serde_json::from_str(&js).unwrap();
        assert_eq!(back, spec);
    }
}
