//! POVM estimators, moments, local unbiasedness, the SLD Cramér-Rao gap, the
//! randomized locally unbiased construction, efficient filtrations, and
//! scalar-function efficient estimation.
//!
//! An estimator is a finite POVM together with an `R^n`-valued outcome map;
//! measuring `pi` on `rho` and reporting `f(omega)` estimates the coordinates.
//! The filtration construction produces state-independent POVMs whose weighted
//! variance converges to the Cramér-Rao bound as `eps -> 0`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::autoparallel::parallel_field_dimension;
use crate::exec;
use crate::manifold::{ParametricModel, SldFrame};
use crate::operator::{expectation, sld_inner, DensityOperator, HermitianOperator, OperatorJson};
use crate::rng::CounterRng;
use crate::{Error, Result};

/// POVM completeness tolerance (`||sum pi - I||_HS` scaled by `sqrt(d)`).
pub const POVM_COMPLETENESS_TOL: f64 = 1e-10;
/// Eigenvalue floor accepted for POVM elements.
pub const POVM_PSD_TOL: f64 = -1e-12;
/// Internal tolerance for the local-unbiasedness precondition of [`cr_gap`].
pub const LOCAL_UNBIASED_TOL: f64 = 1e-7;
/// Relative eigenvalue-cluster width when spectral measures are formed.
pub const SPECTRAL_CLUSTER_TOL: f64 = 1e-9;
/// Default epsilon schedule for filtration sweeps.
pub const DEFAULT_EPS_SCHEDULE: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];

const MC_SHARD: u64 = 1 << 14;

/// A finite POVM `pi = (pi_omega)` with outcome values `f(omega) in R^n`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "EstimatorJson", into = "EstimatorJson")]
pub struct DiscreteEstimator {
    elements: Vec<HermitianOperator>,
    values: Vec<DVector<f64>>,
}

/// Wire format: POVM elements with re/im parts plus value vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorJson {
    pub elements: Vec<OperatorJson>,
    pub values: Vec<Vec<f64>>,
}

impl From<DiscreteEstimator> for EstimatorJson {
    fn from(e: DiscreteEstimator) -> Self {
        EstimatorJson {
            elements: e.elements.into_iter().map(Into::into).collect(),
            values: e.values.iter().map(|v| v.iter().copied().collect()).collect(),
        }
    }
}

impl TryFrom<EstimatorJson> for DiscreteEstimator {
    type Error = Error;

    fn try_from(w: EstimatorJson) -> Result<Self> {
        let elements = w
            .elements
            .into_iter()
            .map(HermitianOperator::try_from)
            .collect::<Result<Vec<_>>>()?;
        let values = w.values.into_iter().map(DVector::from_vec).collect();
        DiscreteEstimator::new(elements, values)
    }
}

impl DiscreteEstimator {
    /// Validates positivity of each element and completeness `sum pi = I`.
    pub fn new(elements: Vec<HermitianOperator>, values: Vec<DVector<f64>>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidEstimator("no POVM elements".into()));
        }
        if elements.len() != values.len() {
            return Err(Error::InvalidEstimator(format!(
                "{} elements vs {} values",
                elements.len(),
                values.len()
            )));
        }
        let d = elements[0].dim();
        let n = values[0].len();
        let mut sum = HermitianOperator::zeros(d);
        for (el, val) in elements.iter().zip(&values) {
            if el.dim() != d {
                return Err(Error::DimensionMismatch(el.dim(), d));
            }
            if val.len() != n {
                return Err(Error::InvalidEstimator(
                    "outcome values have mixed dimensions".into(),
                ));
            }
            let (eigs, _) = el.eigen_sorted();
            let min = eigs.last().copied().unwrap_or(0.0);
            if min < POVM_PSD_TOL {
                return Err(Error::InvalidEstimator(format!(
                    "element has eigenvalue {min:.3e} below {POVM_PSD_TOL:.0e}"
                )));
            }
            sum = sum.add(el)?;
        }
        let defect = sum.sub(&HermitianOperator::identity(d))?.hs_norm();
        if defect > POVM_COMPLETENESS_TOL * (d as f64).sqrt() {
            return Err(Error::InvalidEstimator(format!(
                "POVM completeness defect {defect:.3e}"
            )));
        }
        Ok(DiscreteEstimator { elements, values })
    }

    /// The deterministic estimator: a single element `I` with a fixed value.
    pub fn deterministic(dim: usize, value: DVector<f64>) -> Self {
        DiscreteEstimator {
            elements: vec![HermitianOperator::identity(dim)],
            values: vec![value],
        }
    }

    /// Spectral measure of an observable (scalar outcome values), with
    /// degenerate eigenvalues merged per cluster.
    pub fn spectral_measure(obs: &HermitianOperator) -> Result<Self> {
        let pieces = spectral_povm(obs);
        let (elements, values): (Vec<_>, Vec<_>) = pieces
            .into_iter()
            .map(|(x, p)| (p, DVector::from_vec(vec![x])))
            .unzip();
        DiscreteEstimator::new(elements, values)
    }

    pub fn outcomes(&self) -> usize {
        self.elements.len()
    }

    pub fn value_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    pub fn elements(&self) -> &[HermitianOperator] {
        &self.elements
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    /// Outcome probabilities `Tr(rho pi_omega)`, clamped at zero; probabilities
    /// below the PSD floor are an error.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        self.elements
            .iter()
            .map(|el| {
                let p = expectation(rho, el)?;
                if p < POVM_PSD_TOL {
                    return Err(Error::InvalidEstimator(format!(
                        "negative outcome probability {p:.3e}"
                    )));
                }
                Ok(p.max(0.0))
            })
            .collect()
    }

    /// The moment operators `A^i = sum_omega f^i(omega) pi_omega`.
    pub fn moment_operators(&self) -> Result<Vec<HermitianOperator>> {
        let n = self.value_dim();
        let d = self.dim();
        let mut ops = vec![HermitianOperator::zeros(d); n];
        for (el, val) in self.elements.iter().zip(&self.values) {
            for i in 0..n {
                ops[i] = ops[i].add(&el.scale(val[i]))?;
            }
        }
        Ok(ops)
    }
}

/// Eigenvalue clusters of an observable as (value, projector) pairs, merging
/// eigenvalues closer than [`SPECTRAL_CLUSTER_TOL`] times the HS norm.
pub fn spectral_povm(obs: &HermitianOperator) -> Vec<(f64, HermitianOperator)> {
    let (vals, vecs) = obs.eigen_sorted();
    let d = obs.dim();
    let width = SPECTRAL_CLUSTER_TOL * obs.hs_norm().max(1.0);
    let mut out: Vec<(f64, HermitianOperator)> = Vec::new();
    let mut start = 0;
    while start < d {
        let mut stop = start + 1;
        while stop < d && (vals[stop - 1] - vals[stop]).abs() <= width {
            stop += 1;
        }
        let mut proj = DMatrix::zeros(d, d);
        for col in start..stop {
            let v = vecs.column(col);
            proj += v * v.adjoint();
        }
        let value = vals[start..stop].iter().sum::<f64>() / (stop - start) as f64;
        out.push((value, HermitianOperator::new(proj).expect("square")));
        start = stop;
    }
    out
}

/// Expectation and mean-squared-error matrix of the estimator at `rho`,
/// centered on `xi_true`: `E = sum f p`, `V = sum (f - xi)(f - xi)^T p`.
pub fn estimator_moments(
    rho: &DensityOperator,
    pi: &DiscreteEstimator,
    xi_true: &[f64],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = pi.value_dim();
    if xi_true.len() != n {
        return Err(Error::DimensionMismatch(xi_true.len(), n));
    }
    let probs = pi.probabilities(rho)?;
    let xi = DVector::from_column_slice(xi_true);
    let mut e = DVector::zeros(n);
    let mut v = DMatrix::zeros(n, n);
    for (p, f) in probs.iter().zip(pi.values()) {
        e += f * *p;
        let c = f - &xi;
        v += &c * c.transpose() * *p;
    }
    Ok((e, v))
}

/// Local unbiasedness at `xi`: `<A^i> = xi^i` and `<A^i, L_j> = delta^i_j`
/// within `tol`, for the moment operators `A^i` of the estimator.
pub fn check_locally_unbiased(
    model: &ParametricModel,
    xi: &[f64],
    pi: &DiscreteEstimator,
    tol: f64,
) -> Result<bool> {
    Ok(unbiasedness_defect(model, xi, pi)? <= tol)
}

fn unbiasedness_defect(
    model: &ParametricModel,
    xi: &[f64],
    pi: &DiscreteEstimator,
) -> Result<f64> {
    let n = model.param_dim();
    if pi.value_dim() != n {
        return Err(Error::DimensionMismatch(pi.value_dim(), n));
    }
    let frame = model.frame(xi)?;
    let moments = pi.moment_operators()?;
    let mut worst = 0.0_f64;
    for i in 0..n {
        worst = worst.max((expectation(&frame.state, &moments[i])? - xi[i]).abs());
        for j in 0..n {
            let pairing = sld_inner(&frame.state, &moments[i], frame.tangents[j].sld())?;
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((pairing - target).abs());
        }
    }
    Ok(worst)
}

/// The Cramér-Rao gap `V - G^{-1}` of a locally unbiased estimator; errors
/// when the estimator is not locally unbiased within [`LOCAL_UNBIASED_TOL`].
pub fn cr_gap(
    model: &ParametricModel,
    xi: &[f64],
    pi: &DiscreteEstimator,
) -> Result<DMatrix<f64>> {
    let defect = unbiasedness_defect(model, xi, pi)?;
    if defect > LOCAL_UNBIASED_TOL {
        return Err(Error::NotLocallyUnbiased(defect));
    }
    let frame = model.frame(xi)?;
    let (_, v) = estimator_moments(&frame.state, pi, xi)?;
    Ok(v - frame.fisher.inverse())
}

fn inverse_with_guard(u: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let svd = u.clone().svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let smin = svd.singular_values.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    if smin.is_nan() || smin <= 0.0 || smax / smin > 1e8 {
        return Err(Error::InvalidArgument(format!(
            "{what} is singular or ill-conditioned (cond {:.3e})",
            smax / smin
        )));
    }
    u.clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument(format!("{what} is not invertible")))
}

/// The randomized locally unbiased estimator: pick `k` with probability
/// `p_k`, measure `X^k = sum_i u^k_i L^i_rho`, and report
/// `f^i(k, x) = gamma_k^i + (w^i_k / p_k) x` with `[w^i_k] = [u^k_i]^{-1}`.
///
/// `u_basis` holds the rows `u^k`; `gamma[(k, i)]` must satisfy
/// `sum_k p_k gamma_k^i = xi^i` within 1e-10.
pub fn build_local_random_estimator(
    model: &ParametricModel,
    xi: &[f64],
    u_basis: &DMatrix<f64>,
    probs: &[f64],
    gamma: &DMatrix<f64>,
) -> Result<DiscreteEstimator> {
    let n = model.param_dim();
    if u_basis.nrows() != n || u_basis.ncols() != n {
        return Err(Error::DimensionMismatch(u_basis.nrows(), n));
    }
    if probs.len() != n || gamma.nrows() != n || gamma.ncols() != n {
        return Err(Error::DimensionMismatch(probs.len(), n));
    }
    if probs.iter().any(|&p| p <= 0.0) {
        return Err(Error::InvalidArgument("probabilities must be positive".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "probabilities sum to {total}, expected 1"
        )));
    }
    for i in 0..n {
        let mixed: f64 = (0..n).map(|k| probs[k] * gamma[(k, i)]).sum();
        if (mixed - xi[i]).abs() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "gamma constraint violated on component {i}: {mixed} vs {}",
                xi[i]
            )));
        }
    }
    let w = inverse_with_guard(u_basis, "u basis")?;
    let frame = model.frame(xi)?;
    let dim = frame.state.dim();

    let mut elements = Vec::new();
    let mut values = Vec::new();
    for k in 0..n {
        let mut xk = HermitianOperator::zeros(dim);
        for i in 0..n {
            xk = xk.add(&frame.dual_slds[i].scale(u_basis[(k, i)]))?;
        }
        for (x, proj) in spectral_povm(&xk) {
            elements.push(proj.scale(probs[k]));
            let value = DVector::from_iterator(
                n,
                (0..n).map(|i| gamma[(k, i)] + w[(i, k)] / probs[k] * x),
            );
            values.push(value);
        }
    }
    DiscreteEstimator::new(elements, values)
}

/// The data defining an efficient filtration: the direction basis `u^k`
/// (rows), the certificate observables `F^i`, and a strictly decreasing
/// epsilon schedule in `(0, 1)`.
#[derive(Debug, Clone)]
pub struct FiltrationSpec {
    u_basis: DMatrix<f64>,
    f_ops: Vec<HermitianOperator>,
    eps_schedule: Vec<f64>,
}

impl FiltrationSpec {
    pub fn new(
        u_basis: DMatrix<f64>,
        f_ops: Vec<HermitianOperator>,
        eps_schedule: Vec<f64>,
    ) -> Result<Self> {
        let n = f_ops.len();
        if n == 0 {
            return Err(Error::InvalidArgument("no certificate observables".into()));
        }
        if u_basis.nrows() != n || u_basis.ncols() != n {
            return Err(Error::DimensionMismatch(u_basis.nrows(), n));
        }
        inverse_with_guard(&u_basis, "u basis")?;
        if eps_schedule.is_empty() {
            return Err(Error::InvalidArgument("empty epsilon schedule".into()));
        }
        for pair in eps_schedule.windows(2) {
            if pair[1] >= pair[0] {
                return Err(Error::InvalidArgument(
                    "epsilon schedule must be strictly decreasing".into(),
                ));
            }
        }
        if eps_schedule.iter().any(|&e| !(0.0 < e && e < 1.0)) {
            return Err(Error::InvalidArgument("epsilons must lie in (0, 1)".into()));
        }
        Ok(FiltrationSpec {
            u_basis,
            f_ops,
            eps_schedule,
        })
    }

    pub fn with_default_schedule(
        u_basis: DMatrix<f64>,
        f_ops: Vec<HermitianOperator>,
    ) -> Result<Self> {
        Self::new(u_basis, f_ops, DEFAULT_EPS_SCHEDULE.to_vec())
    }

    pub fn eps_schedule(&self) -> &[f64] {
        &self.eps_schedule
    }

    pub fn u_basis(&self) -> &DMatrix<f64> {
        &self.u_basis
    }

    pub fn observables(&self) -> &[HermitianOperator] {
        &self.f_ops
    }
}

/// One estimator per epsilon: pick `k` with probability `p_1 = 1 - eps`
/// (the rest of the mass split uniformly), measure `Y^k = sum_i u^k_i F^i`,
/// and report `g^i(k, y) = (w^i_k / p_k) y`.
///
/// The POVMs are built from the certificate observables alone, so one
/// estimator serves every state of the model.
pub fn build_filtration(spec: &FiltrationSpec) -> Result<Vec<DiscreteEstimator>> {
    let n = spec.f_ops.len();
    let w = inverse_with_guard(&spec.u_basis, "u basis")?;
    let dim = spec.f_ops[0].dim();

    let mut observables = Vec::with_capacity(n);
    for k in 0..n {
        let mut yk = HermitianOperator::zeros(dim);
        for i in 0..n {
            yk = yk.add(&spec.f_ops[i].scale(spec.u_basis[(k, i)]))?;
        }
        observables.push(spectral_povm(&yk));
    }

    spec.eps_schedule
        .iter()
        .map(|&eps| {
            let probs: Vec<f64> = if n == 1 {
                vec![1.0]
            } else {
                let mut p = vec![eps / (n - 1) as f64; n];
                p[0] = 1.0 - eps;
                p
            };
            let mut elements = Vec::new();
            let mut values = Vec::new();
            for (k, pieces) in observables.iter().enumerate() {
                for (y, proj) in pieces {
                    elements.push(proj.scale(probs[k]));
                    let value = DVector::from_iterator(
                        n,
                        (0..n).map(|i| w[(i, k)] / probs[k] * y),
                    );
                    values.push(value);
                }
            }
            DiscreteEstimator::new(elements, values)
        })
        .collect()
}

/// The efficient observable for estimating a scalar function with value
/// `f_value` and gradient `grad_f` at `xi`:
/// `F = f(rho) I + sum_i d_i f L^i_rho`. Its spectral measure attains the
/// scalar bound `sum g^{ij} d_i f d_j f`.
pub fn scalar_efficient_estimator(
    model: &ParametricModel,
    xi: &[f64],
    f_value: f64,
    grad_f: &[f64],
) -> Result<HermitianOperator> {
    let n = model.param_dim();
    if grad_f.len() != n {
        return Err(Error::DimensionMismatch(grad_f.len(), n));
    }
    let frame = model.frame(xi)?;
    let mut op = HermitianOperator::identity(frame.state.dim()).scale(f_value);
    for (dual, &w) in frame.dual_slds.iter().zip(grad_f) {
        op = op.add(&dual.scale(w))?;
    }
    Ok(op)
}

/// Variance `<(F - <F>)^2>_rho` of an observable.
pub fn observable_variance(rho: &DensityOperator, f: &HermitianOperator) -> Result<f64> {
    let mean = expectation(rho, f)?;
    let centered = f.add_scalar(-mean);
    sld_inner(rho, &centered, &centered)
}

/// `dim E(M)`: the dimension of the space of functions on the model that
/// admit efficient estimators, equal to [`parallel_field_dimension`] plus one
/// (the constants).
pub fn efficient_function_space_dim(
    model: &ParametricModel,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<usize> {
    Ok(parallel_field_dimension(model, samples, tol)? + 1)
}

/// Monte-Carlo estimate of the estimator moments at `rho`, with outcomes drawn
/// by a counter-based generator: shot `t` uses only `(seed, t)`, shards are
/// merged associatively, and results are bit-identical for a fixed seed.
#[derive(Debug, Clone, Serialize)]
pub struct McMoments {
    pub shots: u64,
    pub seed: u64,
    /// Outcome counts, summing to `shots`.
    pub counts: Vec<u64>,
    /// Sample mean of the outcome values.
    pub mean: Vec<f64>,
    /// Sample mean-squared-error matrix about `xi_true` (row-major `n x n`).
    pub mse: Vec<Vec<f64>>,
    /// Standard error of each mean component.
    pub stderr: Vec<f64>,
}

pub fn monte_carlo_moments(
    rho: &DensityOperator,
    pi: &DiscreteEstimator,
    xi_true: &[f64],
    shots: u64,
    seed: u64,
) -> Result<McMoments> {
    if shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let n = pi.value_dim();
    if xi_true.len() != n {
        return Err(Error::DimensionMismatch(xi_true.len(), n));
    }
    let probs = pi.probabilities(rho)?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidEstimator(format!(
            "probabilities sum to {total}"
        )));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in &probs {
        acc += p;
        cdf.push(acc / total);
    }
    let rng = CounterRng::new(seed);
    let shards = shots.div_ceil(MC_SHARD) as usize;
    let counts = exec::map_indexed(shards, |shard| {
        let lo = shard as u64 * MC_SHARD;
        let hi = (lo + MC_SHARD).min(shots);
        let mut local = vec![0u64; cdf.len()];
        for t in lo..hi {
            let u = rng.uniform_at(t);
            let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
            local[idx] += 1;
        }
        local
    })
    .into_iter()
    .fold(vec![0u64; probs.len()], |mut acc, local| {
        for (a, l) in acc.iter_mut().zip(local) {
            *a += l;
        }
        acc
    });

    let shots_f = shots as f64;
    let mut mean = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut mse = vec![vec![0.0; n]; n];
    for (c, f) in counts.iter().zip(pi.values()) {
        let w = *c as f64 / shots_f;
        for i in 0..n {
            mean[i] += w * f[i];
            second[i] += w * f[i] * f[i];
            for j in 0..n {
                mse[i][j] += w * (f[i] - xi_true[i]) * (f[j] - xi_true[j]);
            }
        }
    }
    let stderr = (0..n)
        .map(|i| ((second[i] - mean[i] * mean[i]).max(0.0) / shots_f).sqrt())
        .collect();
    Ok(McMoments {
        shots,
        seed,
        counts,
        mean,
        mse,
        stderr,
    })
}

/// Sample value and standard error of the quadratic form `u^T V u` from
/// Monte-Carlo counts, where `V` is the MSE about `xi_true`.
pub fn mc_quadratic_form(
    pi: &DiscreteEstimator,
    counts: &[u64],
    xi_true: &[f64],
    u: &[f64],
) -> Result<(f64, f64)> {
    if counts.len() != pi.outcomes() {
        return Err(Error::DimensionMismatch(counts.len(), pi.outcomes()));
    }
    let n = pi.value_dim();
    if xi_true.len() != n || u.len() != n {
        return Err(Error::DimensionMismatch(xi_true.len().max(u.len()), n));
    }
    let shots: u64 = counts.iter().sum();
    if shots == 0 {
        return Err(Error::InvalidArgument("empty counts".into()));
    }
    let shots_f = shots as f64;
    let mut mean = 0.0;
    let mut second = 0.0;
    for (c, f) in counts.iter().zip(pi.values()) {
        let w = *c as f64 / shots_f;
        let z: f64 = (0..n).map(|i| u[i] * (f[i] - xi_true[i])).sum::<f64>().powi(2);
        mean += w * z;
        second += w * z * z;
    }
    let stderr = ((second - mean * mean).max(0.0) / shots_f).sqrt();
    Ok((mean, stderr))
}

/// Analytic `u^T V_rho(Pi) u` of an estimator at a model point.
pub fn quadratic_form(
    model: &ParametricModel,
    xi: &[f64],
    pi: &DiscreteEstimator,
    u: &[f64],
) -> Result<f64> {
    let rho = model.state(xi)?;
    let (_, v) = estimator_moments(&rho, pi, xi)?;
    let uv = DVector::from_column_slice(u);
    Ok((uv.transpose() * v * uv)[(0, 0)])
}

/// Frame-level helper for the filtration identity
/// `u^T V u = u^T G^{-1} u / (1 - eps) + eps / (1 - eps) (sum u_i xi^i)^2`.
pub fn filtration_predicted_uvu(frame: &SldFrame, u: &[f64], eps: f64) -> f64 {
    let uv = DVector::from_column_slice(u);
    let bound = frame.fisher.cr_bound(&uv);
    let drift: f64 = u.iter().zip(&frame.xi).map(|(&a, &b)| a * b).sum();
    bound / (1.0 - eps) + eps / (1.0 - eps) * drift * drift
}

/// Extrapolated `eps -> 0` limit of `u^T V u` from sweep samples
/// `(eps, u^T V u)`. The exact law is affine in `t = 1 / (1 - eps)`,
/// so a least-squares line in `t` evaluated at `t = 1` isolates the limit;
/// two points already suffice.
pub fn filtration_limit_fit(samples: &[(f64, f64)]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples(samples.len(), 2));
    }
    let mut st = 0.0;
    let mut sv = 0.0;
    let mut stt = 0.0;
    let mut stv = 0.0;
    let m = samples.len() as f64;
    for &(eps, v) in samples {
        if !(0.0 < eps && eps < 1.0) {
            return Err(Error::InvalidArgument(format!("eps {eps} outside (0, 1)")));
        }
        let t = 1.0 / (1.0 - eps);
        st += t;
        sv += v;
        stt += t * t;
        stv += t * v;
    }
    let denom = m * stt - st * st;
    if denom.abs() < 1e-14 {
        return Err(Error::InvalidArgument("degenerate eps samples".into()));
    }
    let slope = (m * stv - st * sv) / denom;
    let intercept = (sv - slope * st) / m;
    Ok(slope + intercept)
}

/// Weighted mean squared error `tr(W V)` for a constant weight matrix.
pub fn weighted_mse(weight: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<f64> {
    if weight.nrows() != v.nrows() || weight.ncols() != v.ncols() {
        return Err(Error::DimensionMismatch(weight.nrows(), v.nrows()));
    }
    Ok((weight.transpose() * v).trace())
}
