//! Hermitian operator algebra, the symmetrized inner product, and the SLD solver.
//!
//! Operators live in the real vector space `L_h(H)` of Hermitian operators on a
//! `d`-dimensional Hilbert space. Hermiticity is enforced by explicit
//! symmetrization `(A + A^dag)/2` at construction, so floating-point drift
//! cannot accumulate an anti-Hermitian part. For subspace work `L_h` is
//! treated as a real `d^2`-dimensional space with the Hilbert-Schmidt inner
//! product.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{
    Error, Result, HERM_TOL, POS_TOL, SLD_SINGULAR_TOL, SUBSPACE_RANK_CUTOFF, TENSOR_DIM_GUARD,
    TRACE_TOL,
};

pub type C64 = Complex<f64>;

/// A `d x d` complex Hermitian operator, symmetrized at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct HermitianOperator {
    mat: DMatrix<C64>,
}

impl HermitianOperator {
    /// Wraps a square matrix, replacing it by its Hermitian part `(A + A^dag)/2`.
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::NotSquare(mat.nrows(), mat.ncols()));
        }
        let herm = (&mat + mat.adjoint()).map(|z| z * 0.5);
        Ok(HermitianOperator { mat: herm })
    }

    pub fn from_real(mat: DMatrix<f64>) -> Result<Self> {
        Self::new(mat.map(|x| C64::new(x, 0.0)))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianOperator {
            mat: DMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        HermitianOperator {
            mat: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|j| self.mat[(j, j)].re).sum()
    }

    /// `A - (Tr A / d) I`.
    pub fn traceless_part(&self) -> HermitianOperator {
        let d = self.dim();
        let shift = self.trace() / d as f64;
        let mut mat = self.mat.clone();
        for j in 0..d {
            mat[(j, j)] -= C64::new(shift, 0.0);
        }
        HermitianOperator { mat }
    }

    /// Hilbert-Schmidt inner product `Tr(A B)`, real for Hermitian arguments.
    pub fn hs_inner(&self, other: &HermitianOperator) -> Result<f64> {
        check_dims(self, other)?;
        let mut acc = 0.0;
        for j in 0..self.dim() {
            for k in 0..self.dim() {
                // Tr(AB) = sum_{jk} A_{jk} B_{kj}; B_{kj} = conj(B_{jk})
                let a = self.mat[(j, k)];
                let b = other.mat[(j, k)].conj();
                acc += a.re * b.re - a.im * b.im;
            }
        }
        Ok(acc)
    }

    pub fn hs_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute eigenvalue (spectral norm for Hermitian operators).
    pub fn spectral_norm(&self) -> f64 {
        let eig = self.mat.clone().symmetric_eigen();
        eig.eigenvalues.iter().fold(0.0_f64, |m, &l| m.max(l.abs()))
    }

    pub fn scale(&self, factor: f64) -> HermitianOperator {
        HermitianOperator {
            mat: self.mat.map(|z| z * factor),
        }
    }

    pub fn add(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        check_dims(self, other)?;
        Ok(HermitianOperator {
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &HermitianOperator) -> Result<HermitianOperator> {
        check_dims(self, other)?;
        Ok(HermitianOperator {
            mat: &self.mat - &other.mat,
        })
    }

    /// `A + c I`.
    pub fn add_scalar(&self, c: f64) -> HermitianOperator {
        let mut mat = self.mat.clone();
        for j in 0..self.dim() {
            mat[(j, j)] += C64::new(c, 0.0);
        }
        HermitianOperator { mat }
    }

    pub fn kron(&self, other: &HermitianOperator) -> HermitianOperator {
        HermitianOperator {
            mat: self.mat.kronecker(&other.mat),
        }
    }

    /// Eigenvalue/eigenvector pairs sorted descending by eigenvalue.
    pub fn eigen_sorted(&self) -> (Vec<f64>, DMatrix<C64>) {
        eigen_sorted_desc(&self.mat)
    }

    /// Coordinates in the realified `L_h`: HS-orthonormal real vector of length `d^2`.
    pub fn to_real_vector(&self) -> DVector<f64> {
        herm_to_real(&self.mat)
    }

    pub fn from_real_vector(dim: usize, v: &DVector<f64>) -> Result<Self> {
        if v.len() != dim * dim {
            return Err(Error::DimensionMismatch(v.len(), dim * dim));
        }
        Ok(HermitianOperator {
            mat: real_to_herm(dim, v),
        })
    }

    /// Max-norm defect from exact Hermiticity of an arbitrary matrix; used by
    /// deserialization to report how much symmetrization repaired.
    pub fn hermiticity_defect(mat: &DMatrix<C64>) -> f64 {
        let diff = mat - mat.adjoint();
        diff.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
    }
}

fn check_dims(a: &HermitianOperator, b: &HermitianOperator) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(a.dim(), b.dim()));
    }
    Ok(())
}

fn eigen_sorted_desc(mat: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = mat.clone().symmetric_eigen();
    let d = mat.nrows();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vecs = DMatrix::zeros(d, d);
    for (col, &j) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(j));
    }
    (vals, vecs)
}

/// Realification of `L_h`: diagonal entries, then `sqrt(2) Re` and `sqrt(2) Im`
/// of the strictly upper triangle. Preserves the HS inner product.
pub(crate) fn herm_to_real(mat: &DMatrix<C64>) -> DVector<f64> {
    let d = mat.nrows();
    let mut v = DVector::zeros(d * d);
    let mut idx = 0;
    for j in 0..d {
        v[idx] = mat[(j, j)].re;
        idx += 1;
    }
    let s = std::f64::consts::SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            v[idx] = s * mat[(j, k)].re;
            v[idx + 1] = s * mat[(j, k)].im;
            idx += 2;
        }
    }
    v
}

pub(crate) fn real_to_herm(d: usize, v: &DVector<f64>) -> DMatrix<C64> {
    let mut mat = DMatrix::zeros(d, d);
    let mut idx = 0;
    for j in 0..d {
        mat[(j, j)] = C64::new(v[idx], 0.0);
        idx += 1;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let z = C64::new(v[idx] * s, v[idx + 1] * s);
            mat[(j, k)] = z;
            mat[(k, j)] = z.conj();
            idx += 2;
        }
    }
    mat
}

/// Wire format for operators: `{"dim": d, "re": [[..]], "im": [[..]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<HermitianOperator> for OperatorJson {
    fn from(op: HermitianOperator) -> Self {
        let d = op.dim();
        let re = (0..d)
            .map(|j| (0..d).map(|k| op.mat[(j, k)].re).collect())
            .collect();
        let im = (0..d)
            .map(|j| (0..d).map(|k| op.mat[(j, k)].im).collect())
            .collect();
        OperatorJson { dim: d, re, im }
    }
}

impl TryFrom<OperatorJson> for HermitianOperator {
    type Error = Error;

    fn try_from(w: OperatorJson) -> Result<Self> {
        let d = w.dim;
        if w.re.len() != d || w.im.len() != d || w.re.iter().any(|r| r.len() != d)
            || w.im.iter().any(|r| r.len() != d)
        {
            return Err(Error::InvalidArgument(format!(
                "operator json: expected {d}x{d} re/im arrays"
            )));
        }
        let mut mat = DMatrix::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                mat[(j, k)] = C64::new(w.re[j][k], w.im[j][k]);
            }
        }
        HermitianOperator::new(mat)
    }
}

/// A strictly positive, unit-trace Hermitian operator with its
/// eigendecomposition cached at construction (values immutable afterwards).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "OperatorJson", into = "OperatorJson")]
pub struct DensityOperator {
    op: HermitianOperator,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(op: HermitianOperator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let (eigvals, eigvecs) = op.eigen_sorted();
        let min = *eigvals.last().unwrap();
        if min <= POS_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(DensityOperator {
            op,
            eigvals,
            eigvecs,
        })
    }

    pub fn from_matrix(mat: DMatrix<C64>) -> Result<Self> {
        Self::new(HermitianOperator::new(mat)?)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let op = HermitianOperator::identity(dim).scale(1.0 / dim as f64);
        Self::new(op).expect("maximally mixed state is valid")
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn as_operator(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.op.matrix()
    }

    /// Eigenvalues in descending order, all strictly positive.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigvals
    }

    /// Orthonormal eigenvectors as columns, matching `eigenvalues` order.
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigvecs
    }

    /// N-fold tensor power `rho^{x N}`, guarded by [`TENSOR_DIM_GUARD`].
    pub fn tensor_power(&self, n: usize) -> Result<DensityOperator> {
        let total = self.dim().checked_pow(n as u32).unwrap_or(usize::MAX);
        if total > TENSOR_DIM_GUARD {
            return Err(Error::DimensionGuard(total, TENSOR_DIM_GUARD));
        }
        if n == 0 {
            return Err(Error::InvalidArgument("tensor power needs N >= 1".into()));
        }
        let mut acc = self.op.clone();
        for _ in 1..n {
            acc = acc.kron(&self.op);
        }
        DensityOperator::new(acc)
    }
}

impl From<DensityOperator> for OperatorJson {
    fn from(rho: DensityOperator) -> Self {
        rho.op.into()
    }
}

impl TryFrom<OperatorJson> for DensityOperator {
    type Error = Error;

    fn try_from(w: OperatorJson) -> Result<Self> {
        DensityOperator::new(HermitianOperator::try_from(w)?)
    }
}

/// Symmetrized product `(AB + BA)/2`.
pub fn sym_product(a: &HermitianOperator, b: &HermitianOperator) -> Result<HermitianOperator> {
    check_dims(a, b)?;
    let ab = a.matrix() * b.matrix();
    let herm = (&ab + ab.adjoint()).map(|z| z * 0.5);
    Ok(HermitianOperator { mat: herm })
}

/// Symmetrized inner product `<A, B>_rho = Re Tr(rho A B) = Tr(rho (A o B))`.
pub fn sld_inner(rho: &DensityOperator, a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    check_dims(rho.as_operator(), a)?;
    check_dims(a, b)?;
    let prod = rho.matrix() * a.matrix() * b.matrix();
    Ok((0..rho.dim()).map(|j| prod[(j, j)].re).sum())
}

/// Expectation `<A>_rho = Tr(rho A)`.
pub fn expectation(rho: &DensityOperator, a: &HermitianOperator) -> Result<f64> {
    check_dims(rho.as_operator(), a)?;
    rho.as_operator().hs_inner(a)
}

/// Solves `rho o L = M` for the unique Hermitian `L` in the eigenbasis of
/// `rho`: `L~_{jk} = 2 M~_{jk} / (lambda_j + lambda_k)`.
///
/// `Tr M` is the caller's concern; the solver does not require tracelessness.
pub fn solve_sld(rho: &DensityOperator, m: &HermitianOperator) -> Result<HermitianOperator> {
    check_dims(rho.as_operator(), m)?;
    let d = rho.dim();
    let v = rho.eigenvectors();
    let lam = rho.eigenvalues();
    let min_pair = 2.0 * lam[d - 1];
    if min_pair < SLD_SINGULAR_TOL {
        return Err(Error::NearSingularState(min_pair));
    }
    let mt = v.adjoint() * m.matrix() * v;
    let mut lt = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in 0..d {
            lt[(j, k)] = mt[(j, k)] * (2.0 / (lam[j] + lam[k]));
        }
    }
    HermitianOperator::new(v * lt * v.adjoint())
}

/// The N-fold symmetrized lift `A^{(N)} = sum_t I x .. x A x .. x I`.
pub fn tensor_power_operator(a: &HermitianOperator, n: usize) -> Result<HermitianOperator> {
    if n == 0 {
        return Err(Error::InvalidArgument("tensor power needs N >= 1".into()));
    }
    let d = a.dim();
    let total = d.checked_pow(n as u32).unwrap_or(usize::MAX);
    if total > TENSOR_DIM_GUARD {
        return Err(Error::DimensionGuard(total, TENSOR_DIM_GUARD));
    }
    let mut acc = HermitianOperator::zeros(total);
    for t in 0..n {
        let mut term = if t == 0 {
            a.clone()
        } else {
            HermitianOperator::identity(d.pow(t as u32))
        };
        if t > 0 {
            term = term.kron(a);
        }
        let rest = n - t - 1;
        if rest > 0 {
            term = term.kron(&HermitianOperator::identity(d.pow(rest as u32)));
        }
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// An HS-orthonormalized real-linear subspace of `L_h`.
#[derive(Debug, Clone)]
pub struct OperatorSubspace {
    dim_ambient: usize,
    basis: Vec<HermitianOperator>,
    /// Realified orthonormal basis as columns, `d^2 x m`.
    basis_real: DMatrix<f64>,
    includes_identity: bool,
}

impl OperatorSubspace {
    /// Orthonormalizes the real-linear span of `ops` via SVD of the realified
    /// generator matrix, dropping directions below
    /// [`SUBSPACE_RANK_CUTOFF`] relative to the largest singular value.
    pub fn span(ops: &[HermitianOperator]) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidArgument("empty generating set".into()));
        }
        let d = ops[0].dim();
        for op in ops {
            if op.dim() != d {
                return Err(Error::DimensionMismatch(op.dim(), d));
            }
        }
        let big = d * d;
        let mut gen = DMatrix::zeros(big, ops.len());
        for (c, op) in ops.iter().enumerate() {
            gen.set_column(c, &op.to_real_vector());
        }
        let svd = gen.svd(true, false);
        let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
        let rank = svd
            .singular_values
            .iter()
            .filter(|&&s| s > SUBSPACE_RANK_CUTOFF * smax)
            .count();
        if rank == 0 {
            return Err(Error::InvalidArgument("generating set spans only zero".into()));
        }
        let u = svd.u.as_ref().expect("svd computed with u");
        let basis_real = u.columns(0, rank).into_owned();
        let basis: Vec<HermitianOperator> = (0..rank)
            .map(|c| {
                let col = basis_real.column(c).into_owned();
                HermitianOperator::from_real_vector(d, &col).expect("length d^2")
            })
            .collect();
        let mut sub = OperatorSubspace {
            dim_ambient: d,
            basis,
            basis_real,
            includes_identity: false,
        };
        let ident = HermitianOperator::identity(d);
        let (has_i, _) = sub.membership(&ident, SUBSPACE_RANK_CUTOFF)?;
        sub.includes_identity = has_i;
        Ok(sub)
    }

    /// Span of this subspace together with the identity (`A + R`).
    pub fn with_identity(&self) -> Result<OperatorSubspace> {
        if self.includes_identity {
            return Ok(self.clone());
        }
        let mut ops = self.basis.clone();
        ops.push(HermitianOperator::identity(self.dim_ambient));
        OperatorSubspace::span(&ops)
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim_ambient
    }

    /// Dimension of the subspace (number of orthonormal basis operators).
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[HermitianOperator] {
        &self.basis
    }

    pub fn includes_identity(&self) -> bool {
        self.includes_identity
    }

    /// Membership test: the residual is the HS norm of `A` minus its
    /// HS-orthogonal projection onto the span; membership holds when
    /// `residual <= tol * max(1, ||A||_HS)`.
    pub fn membership(&self, a: &HermitianOperator, tol: f64) -> Result<(bool, f64)> {
        if a.dim() != self.dim_ambient {
            return Err(Error::DimensionMismatch(a.dim(), self.dim_ambient));
        }
        let v = a.to_real_vector();
        let coeffs = self.basis_real.transpose() * &v;
        let residual = (&v - &self.basis_real * coeffs).norm();
        let is_member = residual <= tol * a.hs_norm().max(1.0);
        Ok((is_member, residual))
    }

    /// HS-orthogonal projection onto the subspace.
    pub fn project(&self, a: &HermitianOperator) -> Result<HermitianOperator> {
        if a.dim() != self.dim_ambient {
            return Err(Error::DimensionMismatch(a.dim(), self.dim_ambient));
        }
        let v = a.to_real_vector();
        let coeffs = self.basis_real.transpose() * &v;
        let proj = &self.basis_real * coeffs;
        HermitianOperator::from_real_vector(self.dim_ambient, &proj)
    }
}

/// Pauli matrices and qubit helpers used across the crate.
pub mod pauli {
    use super::{C64, HermitianOperator};
    use nalgebra::DMatrix;

    pub fn sigma_x() -> HermitianOperator {
        HermitianOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
            ],
        ))
        .unwrap()
    }

    pub fn sigma_y() -> HermitianOperator {
        HermitianOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(0.0, 0.0),
                C64::new(0.0, -1.0),
                C64::new(0.0, 1.0),
                C64::new(0.0, 0.0),
            ],
        ))
        .unwrap()
    }

    pub fn sigma_z() -> HermitianOperator {
        HermitianOperator::new(DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-1.0, 0.0),
            ],
        ))
        .unwrap()
    }

    /// `a . sigma` for a real 3-vector.
    pub fn dot_sigma(a: [f64; 3]) -> HermitianOperator {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(a[2], 0.0),
                C64::new(a[0], -a[1]),
                C64::new(a[0], a[1]),
                C64::new(-a[2], 0.0),
            ],
        );
        HermitianOperator::new(m).unwrap()
    }
}

/// Validates entry-wise Hermiticity of a raw matrix within [`HERM_TOL`];
/// used by tests and the CLI when ingesting external operator data.
pub fn hermiticity_ok(mat: &DMatrix<C64>) -> bool {
    HermitianOperator::hermiticity_defect(mat) <= HERM_TOL
}
