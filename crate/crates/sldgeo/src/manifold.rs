//! Parametric models, tangent vectors in m- and e-representations, the SLD
//! Fisher metric, e/m parallel transports, the e-covariant derivative, torsion,
//! and exact e-geodesics.
//!
//! A tangent vector at `rho` is stored canonically through its m-representation
//! (a traceless Hermitian operator `iota_*(X) = d rho`); the e-representation
//! (the SLD `L_X` with `rho o L_X = iota_*(X)`) is computed lazily and cached.

use std::sync::{Arc, OnceLock};

use nalgebra::{Complex, DMatrix, DVector};

use crate::exec;
use crate::operator::{
    expectation, solve_sld, sym_product, DensityOperator, HermitianOperator, C64,
};
use crate::{Error, Result, EXP_ARG_GUARD, TENSOR_DIM_GUARD};

/// Tracelessness tolerance for m-representations.
pub const M_REP_TRACE_TOL: f64 = 1e-10;
/// Zero-expectation tolerance for SLD representations.
pub const SLD_EXPECT_TOL: f64 = 1e-9;
/// Default central finite-difference scale for model partials.
pub const FD_STEP_SCALE: f64 = 1e-5;
/// Default step for the covariant-derivative finite difference.
pub const COV_DERIV_STEP: f64 = 1e-4;
/// Zero-expectation tolerance for finite-difference covariant derivatives.
pub const COV_DERIV_SLD_TOL: f64 = 5e-6;

/// A tangent vector of `S(H)` at a base state, carrying the traceless
/// m-representation and a lazily solved SLD.
#[derive(Debug, Clone)]
pub struct TangentVector {
    base: DensityOperator,
    m_rep: HermitianOperator,
    sld: OnceLock<HermitianOperator>,
}

impl TangentVector {
    /// Builds from the m-representation; `Tr(m_rep)` must vanish within
    /// [`M_REP_TRACE_TOL`] and the exact residue is projected out.
    pub fn from_m_rep(base: DensityOperator, m_rep: HermitianOperator) -> Result<Self> {
        if m_rep.dim() != base.dim() {
            return Err(Error::DimensionMismatch(m_rep.dim(), base.dim()));
        }
        let tr = m_rep.trace();
        if tr.abs() > M_REP_TRACE_TOL {
            return Err(Error::InvalidArgument(format!(
                "m-representation has trace {tr:.3e}, expected 0 within {M_REP_TRACE_TOL:.0e}"
            )));
        }
        Ok(TangentVector {
            base,
            m_rep: m_rep.traceless_part(),
            sld: OnceLock::new(),
        })
    }

    /// Builds from the e-representation; `<sld>_base` must vanish within
    /// [`SLD_EXPECT_TOL`].
    pub fn from_sld(base: DensityOperator, sld: HermitianOperator) -> Result<Self> {
        Self::from_sld_tol(base, sld, SLD_EXPECT_TOL)
    }

    /// As [`from_sld`](Self::from_sld) with an explicit tolerance. Finite
    /// difference pipelines produce SLDs whose expectation vanishes only to
    /// the truncation error, so they pass a looser bound.
    pub fn from_sld_tol(base: DensityOperator, sld: HermitianOperator, tol: f64) -> Result<Self> {
        if sld.dim() != base.dim() {
            return Err(Error::DimensionMismatch(sld.dim(), base.dim()));
        }
        let mean = expectation(&base, &sld)?;
        if mean.abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "SLD has expectation {mean:.3e}, expected 0 within {tol:.0e}"
            )));
        }
        let m_rep = sym_product(base.as_operator(), &sld)?;
        let cell = OnceLock::new();
        let _ = cell.set(sld);
        Ok(TangentVector {
            base,
            m_rep,
            sld: cell,
        })
    }

    pub fn base(&self) -> &DensityOperator {
        &self.base
    }

    pub fn m_rep(&self) -> &HermitianOperator {
        &self.m_rep
    }

    /// The SLD `L_X`, solved from `base o L_X = m_rep` on first access.
    pub fn sld(&self) -> &HermitianOperator {
        self.sld.get_or_init(|| {
            solve_sld(&self.base, &self.m_rep)
                .expect("strictly positive base state makes the SLD solvable")
        })
    }
}

/// The SLD Fisher information matrix `g_ij = <L_i, L_j>_rho`, with its inverse
/// cached at construction.
#[derive(Debug, Clone)]
pub struct FisherMatrix {
    g: DMatrix<f64>,
    inv: DMatrix<f64>,
}

impl FisherMatrix {
    pub fn new(g: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        if g.ncols() != n {
            return Err(Error::NotSquare(n, g.ncols()));
        }
        let scale = g.iter().fold(0.0_f64, |m, &x| m.max(x.abs())).max(1.0);
        let asym = (&g - g.transpose()).iter().fold(0.0_f64, |m, &x| m.max(x.abs()));
        if asym > 1e-10 * scale {
            return Err(Error::InvalidArgument(format!(
                "Fisher matrix asymmetry {asym:.3e}"
            )));
        }
        let sym = (&g + g.transpose()).map(|x| 0.5 * x);
        let eig = sym.clone().symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if min <= 1e-12 {
            return Err(Error::SingularModel(format!(
                "Fisher matrix not positive definite (min eigenvalue {min:.3e})"
            )));
        }
        let inv_vals = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| 1.0 / l));
        let inv = &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
        Ok(FisherMatrix { g: sym, inv })
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.inv
    }

    /// `u^T G^{-1} u`, the Cramér-Rao bound in direction `u`.
    pub fn cr_bound(&self, u: &DVector<f64>) -> f64 {
        (u.transpose() * &self.inv * u)[(0, 0)]
    }
}

type StateFn = dyn Fn(&[f64]) -> Result<DensityOperator> + Send + Sync;
type PartialFn = dyn Fn(&[f64], usize) -> Result<HermitianOperator> + Send + Sync;

#[derive(Clone)]
enum Partials {
    Analytic(Arc<PartialFn>),
    FiniteDifference { step_scale: f64 },
}

/// A smooth map `xi -> rho_xi` over an open box in `R^n`, with either analytic
/// partial derivatives or central finite differences.
#[derive(Clone)]
pub struct ParametricModel {
    n: usize,
    domain: Vec<(f64, f64)>,
    state_fn: Arc<StateFn>,
    partials: Partials,
}

impl std::fmt::Debug for ParametricModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let partials = match &self.partials {
            Partials::Analytic(_) => "analytic".to_string(),
            Partials::FiniteDifference { step_scale } => format!("fd(step_scale={step_scale})"),
        };
        f.debug_struct("ParametricModel")
            .field("n", &self.n)
            .field("domain", &self.domain)
            .field("partials", &partials)
            .finish()
    }
}

impl ParametricModel {
    pub fn new<F>(domain: Vec<(f64, f64)>, state_fn: F) -> Self
    where
        F: Fn(&[f64]) -> Result<DensityOperator> + Send + Sync + 'static,
    {
        ParametricModel {
            n: domain.len(),
            domain,
            state_fn: Arc::new(state_fn),
            partials: Partials::FiniteDifference {
                step_scale: FD_STEP_SCALE,
            },
        }
    }

    pub fn with_analytic_partials<F>(mut self, partial_fn: F) -> Self
    where
        F: Fn(&[f64], usize) -> Result<HermitianOperator> + Send + Sync + 'static,
    {
        self.partials = Partials::Analytic(Arc::new(partial_fn));
        self
    }

    /// Overrides the finite-difference step scale (`h = scale * max(1, |xi_i|)`).
    pub fn with_fd_step(mut self, step_scale: f64) -> Self {
        self.partials = Partials::FiniteDifference { step_scale };
        self
    }

    pub fn param_dim(&self) -> usize {
        self.n
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn domain_center(&self) -> Vec<f64> {
        self.domain.iter().map(|&(lo, hi)| 0.5 * (lo + hi)).collect()
    }

    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.n
            && xi
                .iter()
                .zip(&self.domain)
                .all(|(&x, &(lo, hi))| x > lo && x < hi)
    }

    fn check_domain(&self, xi: &[f64]) -> Result<()> {
        if self.contains(xi) {
            Ok(())
        } else {
            Err(Error::OutsideDomain(xi.to_vec()))
        }
    }

    pub fn state(&self, xi: &[f64]) -> Result<DensityOperator> {
        self.check_domain(xi)?;
        (self.state_fn)(xi)
    }

    /// `d rho / d xi^i`, analytic or by central difference with the step
    /// shrunk to stay inside the domain.
    pub fn partial(&self, xi: &[f64], i: usize) -> Result<HermitianOperator> {
        self.check_domain(xi)?;
        if i >= self.n {
            return Err(Error::InvalidArgument(format!(
                "partial index {i} out of range for n = {}",
                self.n
            )));
        }
        match &self.partials {
            Partials::Analytic(f) => f(xi, i),
            Partials::FiniteDifference { step_scale } => {
                let h = self.fd_step(xi, i, *step_scale)?;
                let mut plus = xi.to_vec();
                let mut minus = xi.to_vec();
                plus[i] += h;
                minus[i] -= h;
                let rp = (self.state_fn)(&plus)?;
                let rm = (self.state_fn)(&minus)?;
                let diff = (rp.matrix() - rm.matrix()).map(|z| z / C64::new(2.0 * h, 0.0));
                HermitianOperator::new(diff)
            }
        }
    }

    fn fd_step(&self, xi: &[f64], i: usize, scale: f64) -> Result<f64> {
        let (lo, hi) = self.domain[i];
        let room = (xi[i] - lo).min(hi - xi[i]);
        let h = (scale * xi[i].abs().max(1.0)).min(0.5 * room);
        if h < 1e-12 {
            return Err(Error::StepUnderflow(i));
        }
        Ok(h)
    }

    /// Coordinate tangent vectors at `xi`, with `m_rep = d_i rho` and the SLDs
    /// `L_i` attached. Errors when the partials are linearly dependent.
    pub fn tangent_basis(&self, xi: &[f64]) -> Result<Vec<TangentVector>> {
        let rho = self.state(xi)?;
        let mut m_reps = Vec::with_capacity(self.n);
        for i in 0..self.n {
            m_reps.push(self.partial(xi, i)?);
        }
        let big = rho.dim() * rho.dim();
        let mut stacked = DMatrix::zeros(big, self.n);
        for (c, m) in m_reps.iter().enumerate() {
            stacked.set_column(c, &m.to_real_vector());
        }
        let svd = stacked.svd(false, false);
        let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
        let smin = svd.singular_values.iter().fold(f64::INFINITY, |m, &s| m.min(s));
        if smin.is_nan() || smin <= 1e-10 * smax {
            return Err(Error::SingularModel(format!(
                "partial derivatives are linearly dependent (sigma_min/sigma_max = {:.3e})",
                smin / smax
            )));
        }
        m_reps
            .into_iter()
            .map(|m| TangentVector::from_m_rep(rho.clone(), m))
            .collect()
    }

    /// The SLD Fisher matrix `g_ij = Tr(d_i rho . L_j)` at `xi`.
    pub fn fisher_matrix(&self, xi: &[f64]) -> Result<FisherMatrix> {
        Ok(self.frame(xi)?.fisher)
    }

    /// State, coordinate SLDs, Fisher matrix, and dual SLDs
    /// `L^i = sum_j g^{ij} L_j` at one point.
    pub fn frame(&self, xi: &[f64]) -> Result<SldFrame> {
        let tangents = self.tangent_basis(xi)?;
        let n = self.n;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                g[(i, j)] = tangents[i].m_rep().hs_inner(tangents[j].sld())?;
            }
        }
        let fisher = FisherMatrix::new(g)?;
        let state = tangents[0].base().clone();
        let slds: Vec<HermitianOperator> =
            tangents.iter().map(|t| t.sld().clone()).collect();
        let ginv = fisher.inverse();
        let dim = state.dim();
        let mut dual = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = HermitianOperator::zeros(dim);
            for (j, sld) in slds.iter().enumerate() {
                acc = acc.add(&sld.scale(ginv[(i, j)]))?;
            }
            dual.push(acc);
        }
        Ok(SldFrame {
            xi: xi.to_vec(),
            state,
            tangents,
            fisher,
            dual_slds: dual,
        })
    }

    /// The i.i.d. extension: states `rho_xi^{x N}` over the same coordinates,
    /// with analytic partials lifted from the inner model.
    pub fn iid_extension(&self, n_copies: usize) -> Result<ParametricModel> {
        if n_copies == 0 {
            return Err(Error::InvalidArgument("need N >= 1 copies".into()));
        }
        if n_copies == 1 {
            return Ok(self.clone());
        }
        let center = self.domain_center();
        let d = self.state(&center)?.dim();
        let total = d.checked_pow(n_copies as u32).unwrap_or(usize::MAX);
        if total > TENSOR_DIM_GUARD {
            return Err(Error::DimensionGuard(total, TENSOR_DIM_GUARD));
        }
        let inner_state = self.clone();
        let inner_partial = self.clone();
        let state_fn = move |xi: &[f64]| inner_state.state(xi)?.tensor_power(n_copies);
        let partial_fn = move |xi: &[f64], i: usize| {
            let rho = inner_partial.state(xi)?;
            let drho = inner_partial.partial(xi, i)?;
            let mut acc = HermitianOperator::zeros(total);
            for t in 0..n_copies {
                let mut term = if t == 0 { drho.clone() } else { rho.as_operator().clone() };
                for s in 1..n_copies {
                    term = term.kron(if s == t { &drho } else { rho.as_operator() });
                }
                acc = acc.add(&term)?;
            }
            Ok(acc)
        };
        Ok(ParametricModel::new(self.domain.clone(), state_fn)
            .with_analytic_partials(partial_fn))
    }
}

/// Everything the estimation layer needs at one model point.
#[derive(Debug, Clone)]
pub struct SldFrame {
    pub xi: Vec<f64>,
    pub state: DensityOperator,
    pub tangents: Vec<TangentVector>,
    pub fisher: FisherMatrix,
    /// `L^i = sum_j g^{ij} L_j`.
    pub dual_slds: Vec<HermitianOperator>,
}

/// Fisher matrices over a grid of points (data-parallel).
pub fn fisher_grid(model: &ParametricModel, points: &[Vec<f64>]) -> Result<Vec<FisherMatrix>> {
    exec::try_map_indexed(points.len(), |k| model.fisher_matrix(&points[k]))
}

/// e-parallel transport to `sigma`: `L_{X_sigma} = L_{X_rho} - <L_{X_rho}>_sigma I`.
pub fn e_transport(x: &TangentVector, sigma: &DensityOperator) -> Result<TangentVector> {
    if x.base().dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(x.base().dim(), sigma.dim()));
    }
    let l = x.sld();
    let mean = expectation(sigma, l)?;
    TangentVector::from_sld(sigma.clone(), l.add_scalar(-mean))
}

/// m-parallel transport to `sigma`: the m-representation is held constant.
pub fn m_transport(x: &TangentVector, sigma: &DensityOperator) -> Result<TangentVector> {
    if x.base().dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(x.base().dim(), sigma.dim()));
    }
    TangentVector::from_m_rep(sigma.clone(), x.m_rep().clone())
}

/// Torsion of the e-connection: `iota_*(T(X, Y)) = [[L_X, L_Y], rho] / 4`,
/// antisymmetric in `(X, Y)`.
pub fn torsion(x: &TangentVector, y: &TangentVector) -> Result<TangentVector> {
    let rho = x.base();
    if rho.dim() != y.base().dim() {
        return Err(Error::DimensionMismatch(rho.dim(), y.base().dim()));
    }
    let base_gap = (rho.matrix() - y.base().matrix())
        .iter()
        .map(|z| z.norm_sqr())
        .sum::<f64>()
        .sqrt();
    if base_gap > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "tangent vectors based at different states (gap {base_gap:.3e})"
        )));
    }
    let lx = x.sld().matrix();
    let ly = y.sld().matrix();
    let comm = lx * ly - ly * lx;
    let m = (&comm * rho.matrix() - rho.matrix() * &comm).map(|z| z * 0.25);
    TangentVector::from_m_rep(rho.clone(), HermitianOperator::new(m)?)
}

/// Hermitian `exp(t A)` via eigendecomposition, with the spectrum shifted so
/// the largest exponent is zero (the caller reabsorbs the scale).
pub(crate) fn exp_shifted(a: &HermitianOperator, t: f64) -> HermitianOperator {
    let (vals, vecs) = a.eigen_sorted();
    let shift = if t >= 0.0 { vals[0] } else { *vals.last().unwrap() };
    let d = a.dim();
    let diag = DVector::from_iterator(
        d,
        vals.iter().map(|&l| Complex::new((t * (l - shift)).exp(), 0.0)),
    );
    HermitianOperator::new(&vecs * DMatrix::from_diagonal(&diag) * vecs.adjoint())
        .expect("square by construction")
}

/// Point of the e-geodesic through `rho0` generated by `F`:
/// `rho_theta = exp(theta F / 2) rho0 exp(theta F / 2) / Tr(rho0 exp(theta F))`.
///
/// When `F` is a multiple of the identity the curve is constant at `rho0`.
pub fn e_geodesic(
    rho0: &DensityOperator,
    f: &HermitianOperator,
    theta: f64,
) -> Result<DensityOperator> {
    if f.dim() != rho0.dim() {
        return Err(Error::DimensionMismatch(f.dim(), rho0.dim()));
    }
    let arg = theta.abs() * f.spectral_norm();
    if arg > EXP_ARG_GUARD {
        return Err(Error::InvalidArgument(format!(
            "exponential overflow guard: |theta| * ||F|| = {arg:.3e} > {EXP_ARG_GUARD}"
        )));
    }
    let half = exp_shifted(f, 0.5 * theta);
    let num = half.matrix() * rho0.matrix() * half.matrix();
    let z: f64 = (0..rho0.dim()).map(|j| num[(j, j)].re).sum();
    DensityOperator::from_matrix(num.map(|v| v / Complex::new(z, 0.0)))
}

/// The ambient covariant derivative `nabla^e_{d_i} d_j` at `xi`, with
/// `L_W = d_i L_j + g_ij I` where `d_i L_j` is a Richardson-extrapolated
/// central difference of the SLD field (default step [`COV_DERIV_STEP`]).
pub fn e_covariant_derivative(
    model: &ParametricModel,
    xi: &[f64],
    i: usize,
    j: usize,
) -> Result<TangentVector> {
    e_covariant_derivative_with_step(model, xi, i, j, COV_DERIV_STEP)
}

pub fn e_covariant_derivative_with_step(
    model: &ParametricModel,
    xi: &[f64],
    i: usize,
    j: usize,
    step: f64,
) -> Result<TangentVector> {
    let n = model.param_dim();
    if i >= n || j >= n {
        return Err(Error::InvalidArgument(format!(
            "coordinate indices ({i}, {j}) out of range for n = {n}"
        )));
    }
    let rho = model.state(xi)?;
    let (lo, hi) = model.domain()[i];
    let room = (xi[i] - lo).min(hi - xi[i]);
    let h = (step * xi[i].abs().max(1.0)).min(0.45 * room);
    if h < 1e-9 {
        return Err(Error::StepUnderflow(i));
    }
    let sld_at = |offset: f64| -> Result<HermitianOperator> {
        let mut eta = xi.to_vec();
        eta[i] += offset;
        let state = model.state(&eta)?;
        let dform = model.partial(&eta, j)?;
        solve_sld(&state, &dform)
    };
    let diff = |hh: f64| -> Result<HermitianOperator> {
        let plus = sld_at(hh)?;
        let minus = sld_at(-hh)?;
        Ok(plus.sub(&minus)?.scale(1.0 / (2.0 * hh)))
    };
    // Richardson: (4 D(h/2) - D(h)) / 3 removes the O(h^2) term.
    let d_full = diff(h)?;
    let d_half = diff(0.5 * h)?;
    let d_sld = d_half.scale(4.0 / 3.0).sub(&d_full.scale(1.0 / 3.0))?;
    let g_ij = {
        let ti = model.partial(xi, i)?;
        let lj = solve_sld(&rho, &model.partial(xi, j)?)?;
        ti.hs_inner(&lj)?
    };
    let sld_w = d_sld.add_scalar(g_ij);
    TangentVector::from_sld_tol(rho, sld_w, COV_DERIV_SLD_TOL)
}
