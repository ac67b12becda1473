//! Deciders and constructors for e-autoparallelity.
//!
//! The central test certifies the pair (model, coordinates) as e-autoparallel
//! with m-affine coordinates by checking that the candidate observables
//! `F^i(xi) = L^i_xi + xi^i I` are independent of the grid point, where
//! `L^i = sum_j g^{ij} L_j`. Certification on a finite grid with an explicit
//! tolerance is evidence, not proof: the underlying conditions quantify over
//! all states, and numerics can only sample.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::exec;
use crate::manifold::ParametricModel;
use crate::operator::{
    solve_sld, sym_product, DensityOperator, HermitianOperator, OperatorSubspace, C64,
};
use crate::{Error, Result, EXP_ARG_GUARD};

/// Pairwise commutator bound accepted by the quasi-exponential constructor.
pub const COMMUTING_TOL: f64 = 1e-10;

/// Grid certificate for the autoparallel-plus-m-affine property.
#[derive(Debug, Clone, Serialize)]
pub struct AutoparallelReport {
    pub verdict: bool,
    pub tol: f64,
    /// Largest HS distance between a grid observable and the grid average;
    /// every grid point satisfies the certificate relation within this bound.
    pub max_residual: f64,
    /// Largest pairwise HS distance between grid observables (the verdict
    /// quantity).
    pub max_pairwise: f64,
    /// Grid-averaged candidate observables `F^i`.
    pub observables: Vec<HermitianOperator>,
    pub grid: Vec<Vec<f64>>,
    /// Maximally violating pair when the verdict is false.
    pub witness: Option<AutoparallelWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AutoparallelWitness {
    pub grid_a: usize,
    pub grid_b: usize,
    pub observable: usize,
    pub hs_distance: f64,
}

/// Tests whether the model is e-autoparallel with m-affine coordinates by the
/// observable-certificate criterion on the given grid.
///
/// At each grid point the candidate `F^i(xi) = sum_j g^{ij} L_j + xi^i I` is
/// formed; the verdict is true iff the candidates are grid-independent up to
/// `tol` in pairwise HS distance. The averaged candidates are returned as the
/// certificate (their residual against the grid re-measured as
/// `max_residual`), or the maximally violating pair as the witness.
pub fn check_e_autoparallel_m_affine(
    model: &ParametricModel,
    grid: &[Vec<f64>],
    tol: f64,
) -> Result<AutoparallelReport> {
    if grid.len() < 2 {
        return Err(Error::TooFewSamples(grid.len(), 2));
    }
    let n = model.param_dim();
    // realified candidates per grid point, for cheap distance arithmetic
    let candidates: Vec<Vec<DVector<f64>>> = exec::try_map_indexed(grid.len(), |s| {
        let xi = &grid[s];
        let frame = model.frame(xi)?;
        Ok((0..n)
            .map(|i| frame.dual_slds[i].add_scalar(xi[i]).to_real_vector())
            .collect())
    })?;

    let dim = model.state(&grid[0])?.dim();
    let big = dim * dim;
    let mut averages: Vec<DVector<f64>> = vec![DVector::zeros(big); n];
    for point in &candidates {
        for (i, v) in point.iter().enumerate() {
            averages[i] += v;
        }
    }
    for avg in &mut averages {
        *avg /= grid.len() as f64;
    }

    let mut max_residual = 0.0_f64;
    for point in &candidates {
        for (i, v) in point.iter().enumerate() {
            max_residual = max_residual.max((v - &averages[i]).norm());
        }
    }

    let mut max_pairwise = 0.0_f64;
    let mut witness = None;
    for a in 0..grid.len() {
        for b in (a + 1)..grid.len() {
            for (i, (ca, cb)) in candidates[a].iter().zip(&candidates[b]).enumerate() {
                let dist = (ca - cb).norm();
                if dist > max_pairwise {
                    max_pairwise = dist;
                    witness = Some(AutoparallelWitness {
                        grid_a: a,
                        grid_b: b,
                        observable: i,
                        hs_distance: dist,
                    });
                }
            }
        }
    }

    let verdict = max_pairwise <= tol;
    let observables = averages
        .iter()
        .map(|v| HermitianOperator::from_real_vector(dim, v))
        .collect::<Result<Vec<_>>>()?;
    Ok(AutoparallelReport {
        verdict,
        tol,
        max_residual,
        max_pairwise,
        observables,
        grid: grid.to_vec(),
        witness: if verdict { None } else { witness },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvolutivityReport {
    pub involutive: bool,
    pub tol: f64,
    /// Largest membership residual of a solved `C` against `A + R`.
    pub worst_residual: f64,
    pub witness: Option<InvolutivityWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvolutivityWitness {
    pub state_index: usize,
    pub basis_a: usize,
    pub basis_b: usize,
    pub residual: f64,
}

/// Involutivity of the e-parallel distribution generated by the subspace `A`:
/// for every sampled state and every basis pair, the unique `C` with
/// `rho o C = [[A_a, A_b], rho]` must lie in `A + R I`.
pub fn involutivity_check(
    subspace: &OperatorSubspace,
    states: &[DensityOperator],
    tol: f64,
) -> Result<InvolutivityReport> {
    if states.is_empty() {
        return Err(Error::TooFewSamples(0, 1));
    }
    let extended = subspace.with_identity()?;
    let basis = subspace.basis();
    let mut pairs = Vec::new();
    for a in 0..basis.len() {
        for b in (a + 1)..basis.len() {
            pairs.push((a, b));
        }
    }

    struct Case {
        state_index: usize,
        basis_a: usize,
        basis_b: usize,
        residual: f64,
        member: bool,
    }
    let cases: Vec<Case> = exec::try_map_indexed(states.len(), |s| {
        let rho = &states[s];
        if rho.dim() != subspace.ambient_dim() {
            return Err(Error::DimensionMismatch(rho.dim(), subspace.ambient_dim()));
        }
        let mut out = Vec::with_capacity(pairs.len());
        for &(a, b) in &pairs {
            let am = basis[a].matrix();
            let bm = basis[b].matrix();
            let comm = am * bm - bm * am;
            let target =
                HermitianOperator::new(&comm * rho.matrix() - rho.matrix() * &comm)?;
            let c = solve_sld(rho, &target)?;
            let (member, residual) = extended.membership(&c, tol)?;
            out.push(Case {
                state_index: s,
                basis_a: a,
                basis_b: b,
                residual,
                member,
            });
        }
        Ok(out)
    })?
    .into_iter()
    .flatten()
    .collect();

    let mut report = InvolutivityReport {
        involutive: true,
        tol,
        worst_residual: 0.0,
        witness: None,
    };
    for case in &cases {
        if case.residual > report.worst_residual {
            report.worst_residual = case.residual;
            report.witness = Some(InvolutivityWitness {
                state_index: case.state_index,
                basis_a: case.basis_a,
                basis_b: case.basis_b,
                residual: case.residual,
            });
        }
        report.involutive &= case.member;
    }
    if report.involutive {
        report.witness = None;
    }
    Ok(report)
}

/// The quasi-classical exponential family state
/// `exp(H/2) P exp(H/2) / Tr(P exp(H))` with `H = sum_i theta_i F^i` over
/// mutually commuting observables. For a single observable this is the
/// e-geodesic through `P` generated by `F`.
pub fn quasi_exponential_state(
    p: &DensityOperator,
    f_ops: &[HermitianOperator],
    theta: &[f64],
) -> Result<DensityOperator> {
    if f_ops.len() != theta.len() {
        return Err(Error::DimensionMismatch(f_ops.len(), theta.len()));
    }
    if f_ops.is_empty() {
        return Err(Error::InvalidArgument("empty observable list".into()));
    }
    let d = p.dim();
    let mut worst_comm = 0.0_f64;
    for (i, fi) in f_ops.iter().enumerate() {
        if fi.dim() != d {
            return Err(Error::DimensionMismatch(fi.dim(), d));
        }
        for fj in &f_ops[i + 1..] {
            let comm = fi.matrix() * fj.matrix() - fj.matrix() * fi.matrix();
            worst_comm = worst_comm.max(comm.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
    }
    if worst_comm > COMMUTING_TOL {
        return Err(Error::NotCommuting(worst_comm));
    }
    let arg: f64 = f_ops
        .iter()
        .zip(theta)
        .map(|(f, &t)| t.abs() * f.spectral_norm())
        .sum();
    if arg > EXP_ARG_GUARD {
        return Err(Error::InvalidArgument(format!(
            "exponential overflow guard: sum |theta_i| ||F^i|| = {arg:.3e} > {EXP_ARG_GUARD}"
        )));
    }
    let mut h = HermitianOperator::zeros(d);
    for (f, &t) in f_ops.iter().zip(theta) {
        h = h.add(&f.scale(t))?;
    }
    let half = crate::manifold::exp_shifted(&h, 0.5);
    let num = half.matrix() * p.matrix() * half.matrix();
    let z: f64 = (0..d).map(|j| num[(j, j)].re).sum();
    DensityOperator::from_matrix(num.map(|v| v / C64::new(z, 0.0)))
}

/// The real-operator subspace `L_h^B`: the real-linear span of
/// `|i><j| + |j><i|` (i <= j) in the unitary basis `B`, of dimension
/// `d(d+1)/2` and containing the identity. The manifold of states real in
/// this basis is e-autoparallel.
pub fn real_subspace(basis: &DMatrix<C64>) -> Result<OperatorSubspace> {
    let d = basis.nrows();
    if basis.ncols() != d {
        return Err(Error::NotSquare(d, basis.ncols()));
    }
    let defect = (basis.adjoint() * basis - DMatrix::<C64>::identity(d, d)).norm();
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    let mut ops = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            let bi = basis.column(i);
            let bj = basis.column(j);
            let sym = bi * bj.adjoint() + bj * bi.adjoint();
            ops.push(HermitianOperator::new(sym)?);
        }
    }
    OperatorSubspace::span(&ops)
}

/// Least-squares residual of the dimension >= 3 involutivity counterexample:
/// with block operators built from `A1 = diag(1,1,0)`, the all-ones-offdiag
/// `B1`, and the epsilon-perturbed state `P1`, no real-symmetric `C` solves
/// `rho o C = [[A, B], rho]` once `eps != 0`. Returns
/// `min_C || rho o C - [[A, B], rho] ||_HS` over real-symmetric `C`.
pub fn counterexample_dim_ge3(eps: f64, dim: usize) -> Result<f64> {
    if dim < 3 {
        return Err(Error::InvalidArgument("need dimension >= 3".into()));
    }
    let mut a = DMatrix::<C64>::zeros(dim, dim);
    a[(0, 0)] = C64::new(1.0, 0.0);
    a[(1, 1)] = C64::new(1.0, 0.0);
    let mut b = DMatrix::<C64>::zeros(dim, dim);
    for j in 0..3 {
        for k in 0..3 {
            if j != k {
                b[(j, k)] = C64::new(1.0, 0.0);
            }
        }
    }
    let mut rho = DMatrix::<C64>::identity(dim, dim);
    for j in 0..3 {
        for k in 0..3 {
            if j < k {
                rho[(j, k)] = C64::new(0.0, eps);
                rho[(k, j)] = C64::new(0.0, -eps);
            }
        }
    }
    rho /= C64::new(dim as f64, 0.0);
    let rho = DensityOperator::from_matrix(rho)?;

    let comm = &a * &b - &b * &a;
    let target = HermitianOperator::new(&comm * rho.matrix() - rho.matrix() * &comm)?;

    // real-symmetric basis: E_ii and (E_ij + E_ji)/sqrt(2)
    let mut columns = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            let mut m = DMatrix::<C64>::zeros(dim, dim);
            if i == j {
                m[(i, i)] = C64::new(1.0, 0.0);
            } else {
                let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                m[(i, j)] = s;
                m[(j, i)] = s;
            }
            let basis_op = HermitianOperator::new(m)?;
            columns.push(sym_product(rho.as_operator(), &basis_op)?.to_real_vector());
        }
    }
    let big = dim * dim;
    let mut system = DMatrix::zeros(big, columns.len());
    for (c, col) in columns.iter().enumerate() {
        system.set_column(c, col);
    }
    let rhs = target.to_real_vector();
    let svd = system.clone().svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-12)
        .map_err(|e| Error::InvalidArgument(format!("least squares failed: {e}")))?;
    Ok((system * coeffs - rhs).norm())
}

/// Dimension of the space of e-parallel vector fields along the model,
/// i.e. of `{F in L_h : F - <F>_rho I in T^e_rho(M) for all samples} / R I`,
/// computed as the null space of stacked orthogonal-complement projectors
/// (SVD rank cutoff `tol`, nominally 1e-8).
///
/// With too few samples the result is only an upper bound, so fewer than
/// three samples are rejected.
pub fn parallel_field_dimension(
    model: &ParametricModel,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<usize> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples(samples.len(), 3));
    }
    let frames = exec::try_map_indexed(samples.len(), |s| model.frame(&samples[s]))?;
    let dim = frames[0].state.dim();
    let big = dim * dim;
    let mut stacked = DMatrix::zeros(big * frames.len(), big);
    for (s, frame) in frames.iter().enumerate() {
        let mut ops: Vec<HermitianOperator> =
            frame.tangents.iter().map(|t| t.sld().clone()).collect();
        ops.push(HermitianOperator::identity(dim));
        let sub = OperatorSubspace::span(&ops)?;
        let m = sub.dim();
        let mut q = DMatrix::zeros(big, m);
        for (c, op) in sub.basis().iter().enumerate() {
            q.set_column(c, &op.to_real_vector());
        }
        let proj = DMatrix::identity(big, big) - &q * q.transpose();
        stacked.view_mut((s * big, 0), (big, big)).copy_from(&proj);
    }
    let svd = stacked.svd(false, false);
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol * smax.max(1.0))
        .count();
    let nullity = big - rank;
    Ok(nullity.saturating_sub(1))
}
