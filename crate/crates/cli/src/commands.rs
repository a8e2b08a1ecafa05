use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use ttb_core::acceptance::{self, theta_candidates, THETA_POINTS};
use ttb_core::ensembles::{
    certify_with, sample_sums, select_theta_grid, BoundModel, CertificationReport, CertifyConfig, CertifyKind,
    EnsembleKind, EnsembleSpec, Sampler, TailEstimate,
};
use ttb_core::hgsp::{covariance_dual_path_gap, covariance_polynomial, sample_average_spec, FilterCoefficients, HypergraphShift};
use ttb_core::majorization::{
    sample_average_instance, sample_log_instance, verify_average_log_majorization, verify_average_majorization,
    MajorizationReport, Variant,
};
use ttb_core::multivariate::{
    lie_trotter_error, loglog_slope, random_noncommuting_pair, verify_multivariate, BetaQuadrature, LieTrotter,
    MultivariateCheck, MultivariateInstance,
};
use ttb_core::functions::ScalarFn;
use ttb_core::report::{curve_csv, to_json};
use ttb_core::tail::{
    bernstein_bound, bernstein_grid, chernoff_bound, chernoff_grid, ky_fan_product_inequality_check,
    ky_fan_sum_inequality_check, random_holder_exponents, BernsteinParams, BoundReport, ChernoffParams,
    PolynomialSpec, ProductCheck, SumCheck,
};
use ttb_core::tensor::TensorLiteral;
use ttb_core::Hermitian;

use crate::{
    AcceptanceArgs, BernsteinArgs, CertifyArgs, ChernoffArgs, CliError, CliResult, CurveOutput, Finished,
    GenericArgs, GoldenThompsonArgs, HgspArgs, LemmaArgs, LieTrotterArgs, MajorizationArgs, MonteCarloArgs,
    PolyArgs,
};

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.display().to_string(), source })
}

fn load_ensemble(path: &Path) -> CliResult<EnsembleSpec> {
    let spec: EnsembleSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

fn finish<C: Serialize, R: Serialize>(command: &str, config: &C, report: &R, violations: usize) -> CliResult<Finished> {
    Ok(Finished { json: to_json(command, config, report)?, text: None, violations })
}

fn poly(g: &PolyArgs) -> CliResult<PolynomialSpec> {
    Ok(PolynomialSpec::new(g.coefficients.clone(), g.s)?)
}

/// One value for every summand, or exactly `m` values.
fn per_summand(name: &str, v: &[f64], m: usize) -> CliResult<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; m]),
        n if n == m => Ok(v.to_vec()),
        n => Err(CliError::Config(format!("--{name} needs 1 or {m} values, got {n}"))),
    }
}

fn write_curve(curve: &CurveOutput, report: &BoundReport) -> CliResult<()> {
    if let Some(p) = &curve.csv {
        std::fs::write(p, curve_csv(report)).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MultivariateInstanceReport {
    factors: usize,
    checks: Vec<MultivariateCheck>,
    violations: usize,
}

#[derive(Serialize)]
struct MultivariateReport {
    instances: Vec<MultivariateInstanceReport>,
    violations: usize,
}

pub fn golden_thompson(a: &GoldenThompsonArgs) -> CliResult<Finished> {
    let instances: Vec<MultivariateInstance> = match &a.input {
        Some(p) => {
            let sets: Vec<Vec<TensorLiteral>> = read_json(p)?;
            sets.iter()
                .map(|set| {
                    let factors = set.iter().map(|l| Hermitian::new(l.to_tensor()?)).collect::<ttb_core::Result<Vec<_>>>()?;
                    MultivariateInstance::new(factors)
                })
                .collect::<ttb_core::Result<_>>()?
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            (0..a.instances)
                .map(|_| MultivariateInstance::random(&a.shape, a.factors, a.lo, a.hi, &mut rng))
                .collect::<ttb_core::Result<_>>()?
        }
    };
    let quad = BetaQuadrature::beta0();
    let mut out = Vec::new();
    for inst in &instances {
        let mut checks = verify_multivariate(inst, &a.functions, &a.gauges, &quad)?;
        for c in &mut checks {
            c.geometric_holds = c.lhs <= c.rhs_geometric + a.tol;
            c.arithmetic_holds = c.lhs <= c.rhs_arithmetic + a.tol;
        }
        let violations = checks.iter().filter(|c| !(c.geometric_holds && c.arithmetic_holds && c.jensen_holds)).count();
        out.push(MultivariateInstanceReport { factors: inst.factors().len(), checks, violations });
    }
    let violations = out.iter().map(|r| r.violations).sum();
    finish("verify golden-thompson", a, &MultivariateReport { instances: out, violations }, violations)
}

#[derive(Serialize)]
struct LiePair {
    points: Vec<LieTrotter>,
    slope: f64,
    bound_holds: bool,
}

pub fn lie_trotter(a: &LieTrotterArgs) -> CliResult<Finished> {
    if a.steps.len() < 2 {
        return Err(CliError::Config("--steps needs at least two values for a slope".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut pairs = Vec::new();
    for _ in 0..a.pairs {
        let pair = random_noncommuting_pair(&a.shape, a.scale, &mut rng)?;
        let points = a.steps.iter().map(|&n| lie_trotter_error(&pair, n)).collect::<ttb_core::Result<Vec<_>>>()?;
        let bound_holds = points.iter().all(|p| p.error <= p.bound);
        pairs.push(LiePair { slope: loglog_slope(&points), points, bound_holds });
    }
    let violations = pairs.iter().filter(|p| !p.bound_holds).count();
    finish("verify lie-trotter", a, &pairs, violations)
}

#[derive(Serialize)]
struct MajorizationSummary {
    reports: Vec<MajorizationReport>,
    attempts: usize,
    violations: usize,
    reverse_violations: usize,
}

pub fn majorization(a: &MajorizationArgs) -> CliResult<Finished> {
    if a.reverse && a.log {
        return Err(CliError::Config("--reverse applies to plain averages only".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let (mut reports, mut attempts) = (Vec::new(), 0);
    for _ in 0..a.instances {
        let rep = if a.log {
            let inst = sample_log_instance(&a.shape, a.members, a.variant, &mut rng)?;
            attempts += inst.attempts;
            verify_average_log_majorization(
                &inst.c,
                &inst.family,
                a.variant,
                &ScalarFn::log_f_catalog(),
                &ScalarFn::log_g_catalog(),
                &a.gauges,
            )?
        } else {
            let inst = sample_average_instance(&a.shape, a.members, a.variant, &mut rng)?;
            attempts += inst.attempts;
            let catalog = match a.variant {
                Variant::Weak => ScalarFn::weak_average_catalog(),
                Variant::Full => ScalarFn::full_average_catalog(),
            };
            verify_average_majorization(&inst.c, &inst.family, a.variant, &catalog, &a.gauges, a.reverse)?
        };
        reports.push(rep);
    }
    let violations = reports.iter().map(|r| r.violations).sum();
    let reverse_violations = reports.iter().filter(|r| r.reverse_violation == Some(true)).count();
    let summary = MajorizationSummary { reports, attempts, violations, reverse_violations };
    finish("verify majorization", a, &summary, violations + reverse_violations)
}

#[derive(Serialize)]
struct LemmaInstance {
    m: usize,
    s: f64,
    k: usize,
    p: Vec<f64>,
    product: ProductCheck,
    sum: SumCheck,
}

#[derive(Serialize)]
struct LemmaReport {
    instances: Vec<LemmaInstance>,
    product_violations: usize,
    sum_violations: usize,
}

pub fn lemmas(a: &LemmaArgs) -> CliResult<Finished> {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let d = a.shape.unfolded_dim();
    let mut instances = Vec::new();
    for _ in 0..a.instances {
        let m = rng.random_range(2..=3usize);
        let s = [1.0, 2.0][rng.random_range(0..2usize)];
        let k = [1, 2.min(d), d][rng.random_range(0..3usize)];
        let c: Vec<_> = (0..m).map(|_| ttb_core::Tensor::random_gaussian(&a.shape, &mut rng)).collect();
        let p = random_holder_exponents(m, &mut rng);
        let product = ky_fan_product_inequality_check(&c, s, &p, k)?;
        let h: Vec<_> = (0..m).map(|_| Hermitian::random(&a.shape, &mut rng).into_tensor()).collect();
        let sum = ky_fan_sum_inequality_check(&h, s, k)?;
        instances.push(LemmaInstance { m, s, k, p, product, sum });
    }
    let product_violations = instances.iter().filter(|i| !i.product.holds).count();
    let sum_violations = instances.iter().filter(|i| !i.sum.holds).count();
    let report = LemmaReport { instances, product_violations, sum_violations };
    finish("verify lemmas", a, &report, product_violations + sum_violations)
}

pub fn bound_chernoff(a: &ChernoffArgs) -> CliResult<Finished> {
    let g = poly(&a.g)?;
    let params = ChernoffParams {
        r: a.r,
        k: a.k,
        theta: a.theta,
        c_latala: a.c_latala,
        sigma1_bar: per_summand("sigma1-bar", &a.sigma1_bar, a.m)?,
        xi: per_summand("xi", &a.xi, a.m)?,
    };
    let report = chernoff_bound(&params, &g, &chernoff_grid(a.m, &g, a.r, a.curve.grid_points)?)?;
    write_curve(&a.curve, &report)?;
    finish("bound chernoff", a, &report, 0)
}

pub fn bound_bernstein(a: &BernsteinArgs) -> CliResult<Finished> {
    let g = poly(&a.g)?;
    let params = BernsteinParams {
        k: a.k,
        theta: a.theta,
        c_latala: a.c_latala,
        sigma1_a_sq: per_summand("sigma1-a-sq", &a.sigma1_a_sq, a.m)?,
        upsilon: per_summand("upsilon", &a.upsilon, a.m)?,
    };
    let report = bernstein_bound(&params, &g, &bernstein_grid(a.m, &g, a.curve.grid_points)?, a.printed_convexity)?;
    write_curve(&a.curve, &report)?;
    finish("bound bernstein", a, &report, 0)
}

#[derive(Serialize)]
struct GenericReport<'a> {
    spec: &'a EnsembleSpec,
    bound: BoundReport,
}

pub fn bound_generic(a: &GenericArgs) -> CliResult<Finished> {
    let spec = load_ensemble(&a.ensemble)?;
    let g = poly(&a.g)?;
    let mut cfg = CertifyConfig::new(CertifyKind::Generic, a.k, 1, a.seed);
    cfg.stat_samples = a.stat_samples;
    cfg.grid_points = a.curve.grid_points;
    let (model, sampler) = BoundModel::prepare(&spec, &g, &cfg)?;
    let bound = model.bound(a.theta)?;
    write_curve(&a.curve, &bound)?;
    let spec = EnsembleSpec { normalization: Some(sampler.gamma()), ..spec };
    finish("bound generic", a, &GenericReport { spec: &spec, bound }, 0)
}

#[derive(Serialize)]
struct ThetaEstimate {
    theta: f64,
    estimate: TailEstimate,
}

#[derive(Serialize)]
struct MonteCarloReport<'a> {
    spec: &'a EnsembleSpec,
    estimates: Vec<ThetaEstimate>,
}

pub fn montecarlo(a: &MonteCarloArgs, workers: usize) -> CliResult<Finished> {
    let spec = load_ensemble(&a.ensemble)?;
    let g = poly(&a.g)?;
    let sampler = Sampler::new(&spec, spec.normalization.unwrap_or(1.0))?;
    let spectra = sample_sums(&sampler, a.seed, a.trials, workers)?;
    let norms = spectra.norms(&g, a.k)?;
    let estimates = a
        .theta
        .iter()
        .map(|&theta| Ok(ThetaEstimate { theta, estimate: spectra.tail(&norms, &g, theta, a.condition_t)? }))
        .collect::<CliResult<Vec<_>>>()?;
    finish("montecarlo", a, &MonteCarloReport { spec: &spec, estimates }, 0)
}

/// Certification on `thetas`, or on an automatically chosen admissible grid.
fn run_certification(
    spec: &EnsembleSpec,
    g: &PolynomialSpec,
    thetas: &[f64],
    cfg: &CertifyConfig,
) -> CliResult<CertificationReport> {
    let (model, sampler) = BoundModel::prepare(spec, g, cfg)?;
    let thetas = if thetas.is_empty() { select_theta_grid(&model, &theta_candidates(), THETA_POINTS)? } else { thetas.to_vec() };
    Ok(certify_with(&model, &sampler, spec, &thetas, cfg)?)
}

pub fn certify(a: &CertifyArgs, workers: usize) -> CliResult<Finished> {
    let spec = load_ensemble(&a.ensemble)?;
    let g = poly(&a.g)?;
    let cfg = CertifyConfig {
        c_latala: a.c_latala,
        workers,
        stat_samples: a.stat_samples,
        grid_points: a.grid_points,
        printed_convexity: a.printed_convexity,
        ..CertifyConfig::new(a.kind, a.k, a.trials, a.seed)
    };
    let report = run_certification(&spec, &g, &a.theta, &cfg)?;
    let v = report.violations;
    finish("certify", a, &report, v)
}

#[derive(Serialize)]
struct DualPath {
    shifts: usize,
    worst_gap: f64,
    tolerance: f64,
}

#[derive(Serialize)]
struct HgspReport {
    dual_path: DualPath,
    certification: CertificationReport,
}

pub fn hgsp_cov(a: &HgspArgs, workers: usize) -> CliResult<Finished> {
    let spec = load_ensemble(&a.ensemble)?;
    if !matches!(spec.kind, EnsembleKind::BoundedPsd { .. }) {
        return Err(CliError::Config("the covariance bound needs a bounded_psd ensemble".into()));
    }
    let taps = FilterCoefficients::new(vec![a.h0, a.h1])?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut worst_gap = 0.0f64;
    for _ in 0..a.shifts {
        let s = HypergraphShift::random_symmetric(&spec.shape, &mut rng)?;
        worst_gap = worst_gap.max(covariance_dual_path_gap(&s, &taps)?);
    }
    let tolerance = acceptance::DUAL_PATH_TOL;
    let cfg = CertifyConfig { workers, ..CertifyConfig::new(CertifyKind::Chernoff, a.k, a.trials, a.seed) };
    let g = covariance_polynomial(a.h0, a.h1)?;
    let certification = run_certification(&sample_average_spec(&spec), &g, &a.theta, &cfg)?;
    let violations = certification.violations + usize::from(!(worst_gap < tolerance));
    let report = HgspReport { dual_path: DualPath { shifts: a.shifts, worst_gap, tolerance }, certification };
    finish("hgsp-cov", a, &report, violations)
}

pub fn acceptance(a: &AcceptanceArgs) -> CliResult<Finished> {
    let outcomes = acceptance::run(a.seed);
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&o.line());
        text.push('\n');
        for n in &o.notes {
            text.push_str("      ");
            text.push_str(n);
            text.push('\n');
        }
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    Ok(Finished { json: to_json("acceptance", a, &outcomes)?, text: Some(text), violations: failed })
}
