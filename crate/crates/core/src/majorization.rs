//! Vector (log-)majorization, compound matrices of minors, and finite-measure
//! verifiers for the integral-average majorization theorems.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::ScalarFn;
use crate::linalg::Matrix;
use crate::norms::{hermitian_norm, leq_tol, GaugeSpec};
use crate::scalar::Real;
use crate::spectral::{eig_hermitian, tensor_function};
use crate::tensor::{HermitianTensor, Shape};

/// Slack for prefix-sum comparisons.
pub const MAJORIZATION_TOL: f64 = 1e-10;
/// Largest unfolded dimension accepted by [`compound`].
pub const COMPOUND_CAP: usize = 12;

fn slack<T: Real>(scale: T) -> T {
    T::lit(MAJORIZATION_TOL) * scale.abs().max(T::one())
}

fn check_pair<T: Real>(x: &[T], y: &[T]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("vectors of length {} and {}", x.len(), y.len())));
    }
    for v in [x, y] {
        if let Some(w) = v.windows(2).find(|w| w[0] < w[1] - slack(w[1])) {
            return Err(Error::Domain(format!("vector not sorted descending: {} < {}", w[0], w[1])));
        }
    }
    Ok(())
}

fn prefix_dominates<T: Real>(big: &[T], small: &[T], full: bool) -> bool {
    let (mut a, mut b) = (T::zero(), T::zero());
    for (&u, &v) in big.iter().zip(small) {
        a += u;
        b += v;
        if b > a + slack(a) {
            return false;
        }
    }
    !full || (a - b).abs() <= slack(a)
}

fn logs<T: Real>(v: &[T]) -> Result<Vec<T>> {
    v.iter()
        .map(|&x| {
            if x < T::zero() {
                Err(Error::Domain(format!("log-majorization needs nonnegative entries, got {x}")))
            } else {
                Ok(x.ln())
            }
        })
        .collect()
}

fn log_prefix_dominates<T: Real>(big: &[T], small: &[T], full: bool) -> Result<bool> {
    let (lb, ls) = (logs(big)?, logs(small)?);
    let (mut a, mut b) = (T::zero(), T::zero());
    for (&u, &v) in lb.iter().zip(&ls) {
        a += u;
        b += v;
        // log 0 = −∞: a vanishing small-side prefix is dominated by anything.
        if b == T::neg_infinity() {
            continue;
        }
        if b > a + slack(a) {
            return Ok(false);
        }
    }
    if !full {
        return Ok(true);
    }
    Ok(if a.is_infinite() || b.is_infinite() { a == b } else { (a - b).abs() <= slack(a) })
}

/// `y ≺_w x`: every prefix sum of `y` is at most that of `x`.
pub fn majorizes_weak<T: Real>(x: &[T], y: &[T]) -> Result<bool> {
    check_pair(x, y)?;
    Ok(prefix_dominates(x, y, false))
}

/// `y ≺ x`: weak majorization with equal totals.
pub fn majorizes<T: Real>(x: &[T], y: &[T]) -> Result<bool> {
    check_pair(x, y)?;
    Ok(prefix_dominates(x, y, true))
}

/// `y ≺_{w log} x`: prefix products of `y` are at most those of `x`.
pub fn log_majorizes_weak<T: Real>(x: &[T], y: &[T]) -> Result<bool> {
    check_pair(x, y)?;
    log_prefix_dominates(x, y, false)
}

/// `y ≺_log x`: weak log-majorization with equal full products.
pub fn log_majorizes<T: Real>(x: &[T], y: &[T]) -> Result<bool> {
    check_pair(x, y)?;
    log_prefix_dominates(x, y, true)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k <= n {
        rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    }
    out
}

/// `k`-th compound: the matrix of all `k × k` minors of `m`, rows and columns
/// indexed by lexicographically ordered `k`-subsets.
pub fn compound_matrix<T: Real>(m: &Matrix<T>, k: usize) -> Result<Matrix<T>> {
    let d = m.dim();
    if d > COMPOUND_CAP {
        return Err(Error::Range(format!("dimension {d} exceeds compound cap {COMPOUND_CAP}")));
    }
    if k == 0 || k > d {
        return Err(Error::Range(format!("k = {k} outside 1..={d}")));
    }
    let subsets = k_subsets(d, k);
    Ok(Matrix::from_fn(subsets.len(), |i, j| m.minor(&subsets[i], &subsets[j])))
}

pub fn compound<T: Real>(t: &crate::tensor::SquareTensor<T>, k: usize) -> Result<Matrix<T>> {
    compound_matrix(t.as_matrix(), k)
}

/// Finitely supported probability measure over Hermitian tensors.
#[derive(Clone, Debug)]
pub struct DiscreteMeasureFamily {
    tensors: Vec<HermitianTensor<f64>>,
    weights: Vec<f64>,
}

impl DiscreteMeasureFamily {
    pub fn new(tensors: Vec<HermitianTensor<f64>>, weights: Vec<f64>) -> Result<Self> {
        if tensors.is_empty() || tensors.len() != weights.len() {
            return Err(Error::Shape(format!("{} tensors with {} weights", tensors.len(), weights.len())));
        }
        if tensors.iter().any(|t| t.shape() != tensors[0].shape()) {
            return Err(Error::Shape("family members differ in shape".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("weights {weights:?} must be positive and sum to 1")));
        }
        Ok(Self { tensors, weights })
    }

    pub fn tensors(&self) -> &[HermitianTensor<f64>] {
        &self.tensors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn spectra(&self) -> Result<Vec<Vec<f64>>> {
        self.tensors.iter().map(|t| Ok(eig_hermitian(t)?.eigenvalues().to_vec())).collect()
    }

    /// `Σ_τ w_τ λ⃗(D_τ)` (each spectrum sorted descending).
    pub fn averaged_spectrum(&self) -> Result<Vec<f64>> {
        let spectra = self.spectra()?;
        let d = spectra[0].len();
        Ok((0..d).map(|i| spectra.iter().zip(&self.weights).map(|(s, w)| w * s[i]).sum()).collect())
    }

    /// `exp Σ_τ w_τ log λ⃗(D_τ)`.
    pub fn geometric_spectrum(&self) -> Result<Vec<f64>> {
        let spectra = self.spectra()?;
        let d = spectra[0].len();
        Ok((0..d)
            .map(|i| spectra.iter().zip(&self.weights).map(|(s, w)| w * s[i].max(0.0).ln()).sum::<f64>().exp())
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Weak,
    Full,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormComparison {
    pub function: String,
    pub gauge: GaugeSpec,
    /// `geometric` or `arithmetic` mean on the right-hand side.
    pub mean: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MajorizationReport {
    pub variant: Variant,
    pub log: bool,
    pub majorization_holds: bool,
    pub comparisons: Vec<NormComparison>,
    /// Comparisons that fail although the majorization side holds.
    pub violations: usize,
    pub worst_margin: f64,
    /// Set only when reverse checking is on: the norm side held for every
    /// catalog function while the majorization side failed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reverse_violation: Option<bool>,
}

impl MajorizationReport {
    fn new(variant: Variant, log: bool, majorization_holds: bool, comparisons: Vec<NormComparison>) -> Self {
        let violations = if majorization_holds { comparisons.iter().filter(|c| !c.holds).count() } else { 0 };
        let worst_margin = comparisons.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
        Self { variant, log, majorization_holds, comparisons, violations, worst_margin, reverse_violation: None }
    }
}

fn fn_norm(h: &HermitianTensor<f64>, f: ScalarFn, gauge: GaugeSpec) -> Result<f64> {
    hermitian_norm(&tensor_function(h, |x| f.eval(x), f.domain())?, gauge)
}

fn comparison(f: ScalarFn, gauge: GaugeSpec, mean: &'static str, lhs: f64, rhs: f64) -> NormComparison {
    NormComparison { function: f.to_string(), gauge, mean, lhs, rhs, margin: rhs - lhs, holds: leq_tol(lhs, rhs) }
}

/// Checks `λ⃗(C) ≺_(w) Σ w_τ λ⃗(D_τ)` and, for each `f` and gauge,
/// `‖f(C)‖_ρ ≤ Σ w_τ ‖f(D_τ)‖_ρ`.
pub fn verify_average_majorization(
    c: &HermitianTensor<f64>,
    fam: &DiscreteMeasureFamily,
    variant: Variant,
    functions: &[ScalarFn],
    gauges: &[GaugeSpec],
    check_reverse: bool,
) -> Result<MajorizationReport> {
    for f in functions {
        let ok = match variant {
            Variant::Weak => f.fits_weak_average(),
            Variant::Full => f.fits_full_average(),
        };
        if !ok {
            return Err(Error::Config(format!("{f} does not meet the {variant:?} average hypotheses")));
        }
    }
    let lam_c = eig_hermitian(c)?.eigenvalues().to_vec();
    let avg = fam.averaged_spectrum()?;
    let holds = match variant {
        Variant::Weak => majorizes_weak(&avg, &lam_c)?,
        Variant::Full => majorizes(&avg, &lam_c)?,
    };
    let mut comps = Vec::new();
    for &f in functions {
        for &g in gauges {
            let lhs = fn_norm(c, f, g)?;
            let mut rhs = 0.0;
            for (t, w) in fam.tensors.iter().zip(&fam.weights) {
                rhs += w * fn_norm(t, f, g)?;
            }
            comps.push(comparison(f, g, "arithmetic", lhs, rhs));
        }
    }
    let mut report = MajorizationReport::new(variant, false, holds, comps);
    if check_reverse {
        report.reverse_violation = Some(!holds && report.comparisons.iter().all(|c| c.holds));
    }
    Ok(report)
}

/// Checks `λ⃗(C) ≺_(w)log exp Σ w_τ log λ⃗(D_τ)` and the two norm consequences:
/// `‖f(C)‖_ρ ≤ exp Σ w_τ log ‖f(D_τ)‖_ρ` and `‖g(C)‖_ρ ≤ Σ w_τ ‖g(D_τ)‖_ρ`.
pub fn verify_average_log_majorization(
    c: &HermitianTensor<f64>,
    fam: &DiscreteMeasureFamily,
    variant: Variant,
    f_family: &[ScalarFn],
    g_family: &[ScalarFn],
    gauges: &[GaugeSpec],
) -> Result<MajorizationReport> {
    if let Some(f) = f_family.iter().find(|f| !f.fits_log_f()) {
        return Err(Error::Config(format!("{f} is not admissible as f (log f(e^x) convex, nondecreasing)")));
    }
    if let Some(g) = g_family.iter().find(|g| !g.fits_log_g()) {
        return Err(Error::Config(format!("{g} is not admissible as g (g(e^x) convex, nondecreasing)")));
    }
    let lam_c = eig_hermitian(c)?.eigenvalues().to_vec();
    if let Some(bad) = lam_c.iter().find(|&&x| x < 0.0) {
        return Err(Error::Domain(format!("log-majorization needs a nonnegative tensor, eigenvalue {bad}")));
    }
    for t in &fam.tensors {
        let lo = eig_hermitian(t)?.min_eigenvalue();
        if lo <= 0.0 {
            return Err(Error::Domain(format!("family member is not positive definite, eigenvalue {lo}")));
        }
    }
    let geo = fam.geometric_spectrum()?;
    let holds = match variant {
        Variant::Weak => log_majorizes_weak(&geo, &lam_c)?,
        Variant::Full => log_majorizes(&geo, &lam_c)?,
    };
    let mut comps = Vec::new();
    for &g in gauges {
        for &f in f_family {
            let lhs = fn_norm(c, f, g)?;
            let mut log_rhs = 0.0;
            for (t, w) in fam.tensors.iter().zip(&fam.weights) {
                log_rhs += w * fn_norm(t, f, g)?.ln();
            }
            comps.push(comparison(f, g, "geometric", lhs, log_rhs.exp()));
        }
        for &f in g_family {
            let lhs = fn_norm(c, f, g)?;
            let mut rhs = 0.0;
            for (t, w) in fam.tensors.iter().zip(&fam.weights) {
                rhs += w * fn_norm(t, f, g)?;
            }
            comps.push(comparison(f, g, "arithmetic", lhs, rhs));
        }
    }
    Ok(MajorizationReport::new(variant, true, holds, comps))
}

/// Random doubly stochastic matrix: a convex combination of `terms` random
/// permutation matrices (Birkhoff–von Neumann).
pub fn random_doubly_stochastic<R: Rng + ?Sized>(n: usize, terms: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut s = vec![vec![0.0; n]; n];
    for w in weights {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        for (i, &j) in perm.iter().enumerate() {
            s[i][j] += w;
        }
    }
    s
}

fn apply(s: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    s.iter().map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum()).collect()
}

fn sort_desc(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn random_weights<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // Absorb rounding into the last weight so the sum is 1 to machine precision.
    let head: f64 = w[..n - 1].iter().sum();
    w[n - 1] = 1.0 - head;
    w
}

/// Perturbation added to the mixed spectrum before rejection: zero-sum noise
/// for the full variants, a nonpositive shift for the weak ones.
fn perturb<R: Rng + ?Sized>(v: &mut [f64], variant: Variant, scale: f64, rng: &mut R) {
    let noise: Vec<f64> = (0..v.len()).map(|_| { let z: f64 = StandardNormal.sample(rng); scale * z }).collect();
    match variant {
        Variant::Full => {
            let mean = noise.iter().sum::<f64>() / noise.len() as f64;
            v.iter_mut().zip(&noise).for_each(|(x, n)| *x += n - mean);
        }
        Variant::Weak => v.iter_mut().zip(&noise).for_each(|(x, n)| *x -= n.abs()),
    }
}

#[derive(Clone, Debug)]
pub struct SampledInstance {
    pub c: HermitianTensor<f64>,
    pub family: DiscreteMeasureFamily,
    /// Candidates drawn until the majorization side held.
    pub attempts: usize,
}

const MAX_ATTEMPTS: usize = 10_000;

/// Rejection-samples `(C, {D_τ, w_τ})` with `λ⃗(C) ≺_(w) Σ w_τ λ⃗(D_τ)`.
/// `C` takes a doubly stochastic mix of the averaged spectrum, perturbed, in a
/// random eigenbasis; candidates failing the predicate are discarded.
pub fn sample_average_instance<R: Rng + ?Sized>(
    shape: &Shape,
    members: usize,
    variant: Variant,
    rng: &mut R,
) -> Result<SampledInstance> {
    let d = shape.unfolded_dim();
    for attempts in 1..=MAX_ATTEMPTS {
        let tensors: Vec<_> = (0..members).map(|_| HermitianTensor::random(shape, rng)).collect();
        let family = DiscreteMeasureFamily::new(tensors, random_weights(members, rng))?;
        let y = family.averaged_spectrum()?;
        let mut x = apply(&random_doubly_stochastic(d, 3, rng), &y);
        perturb(&mut x, variant, 0.05, rng);
        let x = sort_desc(x);
        let ok = match variant {
            Variant::Weak => majorizes_weak(&y, &x)?,
            Variant::Full => majorizes(&y, &x)?,
        };
        if ok {
            let c = HermitianTensor::with_spectrum_in_random_basis(shape, &x, rng)?;
            return Ok(SampledInstance { c, family, attempts });
        }
    }
    Err(Error::Config(format!("no admissible instance after {MAX_ATTEMPTS} attempts")))
}

/// Rejection-samples positive definite `(C, {D_τ, w_τ})` with
/// `λ⃗(C) ≺_(w)log exp Σ w_τ log λ⃗(D_τ)`, mixing in the log domain.
pub fn sample_log_instance<R: Rng + ?Sized>(
    shape: &Shape,
    members: usize,
    variant: Variant,
    rng: &mut R,
) -> Result<SampledInstance> {
    let d = shape.unfolded_dim();
    for attempts in 1..=MAX_ATTEMPTS {
        let tensors: Vec<_> =
            (0..members).map(|_| HermitianTensor::random_positive_definite(shape, 0.2, 3.0, rng)).collect();
        let family = DiscreteMeasureFamily::new(tensors, random_weights(members, rng))?;
        let ly: Vec<f64> = family.geometric_spectrum()?.iter().map(|x| x.ln()).collect();
        let mut lx = apply(&random_doubly_stochastic(d, 3, rng), &ly);
        perturb(&mut lx, variant, 0.05, rng);
        let x = sort_desc(lx.iter().map(|v| v.exp()).collect());
        let y: Vec<f64> = ly.iter().map(|v| v.exp()).collect();
        let ok = match variant {
            Variant::Weak => log_majorizes_weak(&y, &x)?,
            Variant::Full => log_majorizes(&y, &x)?,
        };
        if ok {
            let c = HermitianTensor::with_spectrum_in_random_basis(shape, &x, rng)?;
            return Ok(SampledInstance { c, family, attempts });
        }
    }
    Err(Error::Config(format!("no admissible instance after {MAX_ATTEMPTS} attempts")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Cplx;
    use crate::spectral::singular_values_matrix;
    use crate::tensor::SquareTensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn predicate_examples() {
        let x = [2.0, 1.0];
        assert!(majorizes_weak(&x, &x).unwrap());
        assert!(majorizes(&x, &x).unwrap());
        assert!(log_majorizes_weak(&x, &x).unwrap());
        assert!(log_majorizes(&x, &x).unwrap());
        let (a, b) = ([2.0, 2.0], [3.0, 1.0]);
        assert!(majorizes(&b, &a).unwrap());
        assert!(!majorizes(&a, &b).unwrap());
        assert!(matches!(majorizes(&[1.0, 2.0], &[2.0, 1.0]), Err(Error::Domain(_))));
        // log 0 = −∞ on the dominated side.
        assert!(log_majorizes_weak(&[1.0, 1.0], &[5.0, 0.0]).is_ok_and(|h| !h));
        assert!(log_majorizes_weak(&[1.0, 1.0], &[1.0, 0.0]).unwrap());
    }

    #[test]
    fn birkhoff_mix_is_majorized() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let y = sort_desc((0..6).map(|_| rng.random_range(-2.0..3.0)).collect());
            let s = random_doubly_stochastic(6, 4, &mut rng);
            for row in &s {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            let x = sort_desc(apply(&s, &y));
            assert!(majorizes(&y, &x).unwrap());
        }
    }

    #[test]
    fn compound_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = Shape::new(vec![2, 2]).unwrap();
        let a = SquareTensor::<f64>::random_gaussian(&s, &mut rng);
        let top = compound(&a, 4).unwrap();
        assert_eq!(top.dim(), 1);
        assert!((top[(0, 0)] - a.as_matrix().determinant()).norm() < 1e-12);
        assert_eq!(compound(&a, 1).unwrap(), a.unfold());
        assert!(compound(&SquareTensor::<f64>::zeros(&Shape::new(vec![13]).unwrap()), 1).is_err());
    }

    /// Cauchy–Binet expanded by hand: each minor of the product is the sum over
    /// intermediate subsets of products of minors.
    #[test]
    fn compound_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = Shape::new(vec![5]).unwrap();
        let a = SquareTensor::<f64>::random_gaussian(&s, &mut rng);
        let b = SquareTensor::<f64>::random_gaussian(&s, &mut rng);
        let ab = a.einstein_product(&b).unwrap();
        for k in 1..=5 {
            let lhs = compound(&ab, k).unwrap();
            let subsets = k_subsets(5, k);
            let oracle = Matrix::from_fn(subsets.len(), |i, j| {
                subsets.iter().fold(Cplx::new(0.0, 0.0), |acc, m| {
                    acc + a.as_matrix().minor(&subsets[i], m) * b.as_matrix().minor(m, &subsets[j])
                })
            });
            let scale = oracle.frobenius_norm().max(1.0);
            assert!(lhs.max_abs_diff(&oracle) / scale < 1e-9);
            let adj = compound(&a.conjugate_transpose(), k).unwrap();
            assert!(adj.max_abs_diff(&compound(&a, k).unwrap().adjoint()) / scale < 1e-9);
        }
    }

    #[test]
    fn compound_top_singular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let s = Shape::new(vec![2, 3]).unwrap();
        let a = SquareTensor::<f64>::random_gaussian(&s, &mut rng);
        let sv = singular_values_matrix(a.as_matrix()).unwrap();
        for k in 1..=6 {
            let c = compound(&a, k).unwrap();
            let top = singular_values_matrix(&c).unwrap().largest();
            let prod: f64 = sv.values()[..k].iter().product();
            assert!((top - prod).abs() / prod < 1e-8);
        }
    }

    #[test]
    fn single_member_family_is_an_equality() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = Shape::new(vec![2, 2]).unwrap();
        let c = HermitianTensor::random_positive_definite(&s, 0.3, 2.0, &mut rng);
        let fam = DiscreteMeasureFamily::new(vec![c.clone()], vec![1.0]).unwrap();
        let gauges = [GaugeSpec::KyFan { k: 2 }, GaugeSpec::Schatten { p: 2.0 }];
        let r = verify_average_majorization(&c, &fam, Variant::Full, &ScalarFn::full_average_catalog(), &gauges, true)
            .unwrap();
        assert!(r.majorization_holds && r.violations == 0);
        assert_eq!(r.reverse_violation, Some(false));
        for cmp in &r.comparisons {
            assert!((cmp.lhs - cmp.rhs).abs() <= 1e-12 * cmp.rhs.max(1.0));
        }
        let r = verify_average_log_majorization(
            &c,
            &fam,
            Variant::Full,
            &ScalarFn::log_f_catalog(),
            &ScalarFn::log_g_catalog(),
            &gauges,
        )
        .unwrap();
        assert!(r.majorization_holds && r.violations == 0);
        for cmp in &r.comparisons {
            assert!((cmp.lhs - cmp.rhs).abs() <= 1e-10 * cmp.rhs.max(1.0));
        }
    }

    #[test]
    fn scalar_log_case_is_am_gm() {
        let s = Shape::new(vec![1]).unwrap();
        let d1 = HermitianTensor::from_diagonal(&s, &[1.0]).unwrap();
        let d2 = HermitianTensor::from_diagonal(&s, &[4.0]).unwrap();
        let fam = DiscreteMeasureFamily::new(vec![d1, d2], vec![0.5, 0.5]).unwrap();
        let c = HermitianTensor::from_diagonal(&s, &[2.0]).unwrap();
        let r = verify_average_log_majorization(
            &c,
            &fam,
            Variant::Full,
            &[ScalarFn::Power { p: 1.0 }],
            &[ScalarFn::Power { p: 1.0 }],
            &[GaugeSpec::Operator],
        )
        .unwrap();
        assert!(r.majorization_holds);
        // geometric mean 2 = λ(C); arithmetic mean 2.5 ≥ 2.
        assert!((r.comparisons[0].rhs - 2.0).abs() < 1e-12);
        assert!((r.comparisons[1].rhs - 2.5).abs() < 1e-12);
    }

    #[test]
    fn commuting_log_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let s = Shape::new(vec![4]).unwrap();
        let u = SquareTensor::random_unitary(&s, &mut rng);
        let spectra: Vec<Vec<f64>> =
            (0..3).map(|_| sort_desc((0..4).map(|_| rng.random_range(0.2..3.0)).collect())).collect();
        let tensors = spectra.iter().map(|sp| HermitianTensor::with_spectrum_in_basis(&u, sp).unwrap()).collect();
        let w = vec![0.2, 0.3, 0.5];
        let geo: Vec<f64> = (0..4).map(|i| (0..3).map(|j| w[j] * spectra[j][i].ln()).sum::<f64>().exp()).collect();
        let fam = DiscreteMeasureFamily::new(tensors, w).unwrap();
        let c = HermitianTensor::with_spectrum_in_basis(&u, &geo).unwrap();
        let powers: Vec<_> = [0.5, 1.0, 2.0, 3.0].iter().map(|&p| ScalarFn::Power { p }).collect();
        let r = verify_average_log_majorization(
            &c,
            &fam,
            Variant::Full,
            &powers,
            &powers,
            &[GaugeSpec::KyFan { k: 1 }, GaugeSpec::KyFan { k: 2 }, GaugeSpec::Schatten { p: 1.0 }],
        )
        .unwrap();
        assert!(r.majorization_holds);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn rejects_inadmissible_functions() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = Shape::new(vec![2]).unwrap();
        let inst = sample_average_instance(&s, 2, Variant::Weak, &mut rng).unwrap();
        let r = verify_average_majorization(
            &inst.c,
            &inst.family,
            Variant::Weak,
            &[ScalarFn::NegativePart { c: 1.0 }],
            &[GaugeSpec::Operator],
            false,
        );
        assert!(matches!(r, Err(Error::Config(_))));
    }
}
