//! Closed-form qubit (d = 2) formulas: Bloch parametrization, analytic SLDs,
//! semi-ellipse e-geodesics, semi-ellipsoid e-autoparallel surfaces, and the
//! qubit torsion identity. These are exact and serve as the oracle layer for
//! the general-dimension machinery.

use nalgebra::{Complex, DMatrix};

use crate::operator::{pauli, sym_product, DensityOperator, HermitianOperator};
use crate::{Error, Result};

/// Margin keeping Bloch vectors strictly inside the open unit ball.
pub const BALL_MARGIN: f64 = 1e-10;

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: [f64; 3], y: [f64; 3]) -> [f64; 3] {
    [alpha * x[0] + y[0], alpha * x[1] + y[1], alpha * x[2] + y[2]]
}

/// A point of the open Bloch ball, `||r|| <= 1 - 1e-10`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    r: [f64; 3],
}

impl BlochVector {
    pub fn new(r: [f64; 3]) -> Result<Self> {
        let n = norm(r);
        if n > 1.0 - BALL_MARGIN {
            return Err(Error::InvalidArgument(format!(
                "Bloch vector norm {n} is not inside the open unit ball"
            )));
        }
        Ok(BlochVector { r })
    }

    pub fn coords(&self) -> [f64; 3] {
        self.r
    }

    pub fn norm(&self) -> f64 {
        norm(self.r)
    }
}

/// `rho_r = (I + r . sigma) / 2`.
pub fn bloch_to_density(r: &BlochVector) -> DensityOperator {
    let op = pauli::dot_sigma(r.r).scale(0.5).add_scalar(0.5);
    DensityOperator::new(op).expect("open-ball Bloch vectors give strictly positive states")
}

pub fn density_to_bloch(rho: &DensityOperator) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch(rho.dim(), 2));
    }
    let m = rho.matrix();
    let r = [
        2.0 * m[(0, 1)].re,
        -2.0 * m[(0, 1)].im,
        m[(0, 0)].re - m[(1, 1)].re,
    ];
    BlochVector::new(r)
}

/// Analytic qubit SLD of the tangent vector with m-representation
/// `(x . sigma)/2` at `rho_r`: returns `(ell, lambda)` with
/// `L = ell . sigma - lambda I`, `lambda = x.r / (1 - ||r||^2)`,
/// `ell = x + lambda r`.
pub fn qubit_sld(r: &BlochVector, x: [f64; 3]) -> ([f64; 3], f64) {
    let lambda = dot(x, r.r) / (1.0 - dot(r.r, r.r));
    let ell = axpy(lambda, r.r, x);
    (ell, lambda)
}

/// The SLD of [`qubit_sld`] as an operator.
pub fn qubit_sld_operator(r: &BlochVector, x: [f64; 3]) -> HermitianOperator {
    let (ell, lambda) = qubit_sld(r, x);
    pauli::dot_sigma(ell).add_scalar(-lambda)
}

/// Parameters of the semi-ellipse `r(xi) = xi u + c sqrt(1 - xi^2) v`
/// representing an e-geodesic, with the anchor data `a = r0.u`, `b = r0.v`,
/// `c = b / sqrt(1 - a^2)`.
#[derive(Debug, Clone, Copy)]
pub struct GeodesicParams {
    u: [f64; 3],
    v: [f64; 3],
    a: f64,
    b: f64,
    c: f64,
}

impl GeodesicParams {
    /// From the anchor state `rho_{r0}` and the generator direction `u`
    /// (normalized here). `v` is the unit vector completing `span{u, v}`
    /// containing `r0`; when `r0` is parallel to `u` any orthogonal `v`
    /// works and `b = c = 0`.
    pub fn from_anchor(r0: &BlochVector, u: [f64; 3]) -> Result<Self> {
        let un = norm(u);
        if un < 1e-12 {
            return Err(Error::InvalidArgument("zero generator direction".into()));
        }
        let u = [u[0] / un, u[1] / un, u[2] / un];
        let a = dot(r0.r, u);
        let perp = axpy(-a, u, r0.r);
        let pn = norm(perp);
        let v = if pn > 1e-12 {
            [perp[0] / pn, perp[1] / pn, perp[2] / pn]
        } else {
            // any unit vector orthogonal to u
            let seed = if u[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let w = axpy(-dot(seed, u), u, seed);
            let wn = norm(w);
            [w[0] / wn, w[1] / wn, w[2] / wn]
        };
        let b = dot(r0.r, v);
        let c = b / (1.0 - a * a).sqrt();
        Ok(GeodesicParams { u, v, a, b, c })
    }

    /// From explicit orthonormal axes, the anchor coordinate `a` and the
    /// flattening `c`; `b` is derived as `c sqrt(1 - a^2)`.
    pub fn from_axes(u: [f64; 3], v: [f64; 3], a: f64, c: f64) -> Result<Self> {
        if (norm(u) - 1.0).abs() > 1e-12 || (norm(v) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("axes must be unit vectors".into()));
        }
        if dot(u, v).abs() > 1e-12 {
            return Err(Error::InvalidArgument("axes must be orthogonal".into()));
        }
        if c.abs() >= 1.0 || a.abs() >= 1.0 {
            return Err(Error::InvalidArgument("|a| and |c| must be < 1".into()));
        }
        let b = c * (1.0 - a * a).sqrt();
        Ok(GeodesicParams { u, v, a, b, c })
    }

    pub fn u(&self) -> [f64; 3] {
        self.u
    }

    pub fn v(&self) -> [f64; 3] {
        self.v
    }

    pub fn anchor_coordinate(&self) -> f64 {
        self.a
    }

    pub fn flattening(&self) -> f64 {
        self.c
    }

    /// The anchor Bloch vector `r0 = a u + b v`.
    pub fn anchor(&self) -> BlochVector {
        BlochVector::new(axpy(self.a, self.u, [
            self.b * self.v[0],
            self.b * self.v[1],
            self.b * self.v[2],
        ]))
        .expect("a^2 + b^2 < 1 keeps the anchor in the ball")
    }

    /// e-affine parameter of the point with m-affine coordinate `xi`:
    /// `theta = log((1-a)(1+xi) / ((1+a)(1-xi))) / 2`.
    pub fn theta_of_xi(&self, xi: f64) -> f64 {
        0.5 * (((1.0 - self.a) * (1.0 + xi)) / ((1.0 + self.a) * (1.0 - xi))).ln()
    }

    /// Inverse of [`theta_of_xi`](Self::theta_of_xi).
    pub fn xi_of_theta(&self, theta: f64) -> f64 {
        let w = (1.0 + self.a) * (2.0 * theta).exp();
        (w - (1.0 - self.a)) / (w + (1.0 - self.a))
    }
}

/// Point of the semi-ellipse: `r(xi) = xi u + c sqrt(1 - xi^2) v`.
pub fn qubit_geodesic_point(params: &GeodesicParams, xi: f64) -> Result<BlochVector> {
    if xi.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("|xi| = {} >= 1", xi.abs())));
    }
    let w = params.c * (1.0 - xi * xi).sqrt();
    let r = axpy(xi, params.u, [
        w * params.v[0],
        w * params.v[1],
        w * params.v[2],
    ]);
    BlochVector::new(r)
}

/// Point of the semi-ellipsoid surface
/// `r(xi) = xi^1 u1 + xi^2 u2 + c sqrt(1 - ||xi||^2) v` over an orthonormal
/// triple `{u1, u2, v}`.
pub fn qubit_autoparallel_surface_point(
    u1: [f64; 3],
    u2: [f64; 3],
    v: [f64; 3],
    c: f64,
    xi: [f64; 2],
) -> Result<BlochVector> {
    for w in [u1, u2, v] {
        if (norm(w) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("axes must be unit vectors".into()));
        }
    }
    if dot(u1, u2).abs() > 1e-12 || dot(u1, v).abs() > 1e-12 || dot(u2, v).abs() > 1e-12 {
        return Err(Error::InvalidArgument("axes must be orthogonal".into()));
    }
    if c.abs() >= 1.0 {
        return Err(Error::InvalidArgument("|c| must be < 1".into()));
    }
    let n2 = xi[0] * xi[0] + xi[1] * xi[1];
    if n2 >= 1.0 {
        return Err(Error::InvalidArgument(format!("||xi||^2 = {n2} >= 1")));
    }
    let w = c * (1.0 - n2).sqrt();
    let mut r = [0.0; 3];
    for k in 0..3 {
        r[k] = xi[0] * u1[k] + xi[1] * u2[k] + w * v[k];
    }
    BlochVector::new(r)
}

/// Residual of the qubit torsion identity, which vanishes identically in
/// dimension two:
/// `[[A, B], rho] / 2 = (Tr A - 2<A>)(rho o B) - (Tr B - 2<B>)(rho o A) + ((Tr B)<A> - (Tr A)<B>) rho`.
pub fn qubit_torsion_identity_residual(
    rho: &DensityOperator,
    a: &HermitianOperator,
    b: &HermitianOperator,
) -> Result<f64> {
    if rho.dim() != 2 || a.dim() != 2 || b.dim() != 2 {
        return Err(Error::DimensionMismatch(rho.dim().max(a.dim()).max(b.dim()), 2));
    }
    let comm = a.matrix() * b.matrix() - b.matrix() * a.matrix();
    let lhs: DMatrix<Complex<f64>> =
        (&comm * rho.matrix() - rho.matrix() * &comm).map(|z| z * 0.5);

    let mean_a = rho.as_operator().hs_inner(a)?;
    let mean_b = rho.as_operator().hs_inner(b)?;
    let rob = sym_product(rho.as_operator(), b)?;
    let roa = sym_product(rho.as_operator(), a)?;
    let rhs = rob.scale(a.trace() - 2.0 * mean_a)
        .sub(&roa.scale(b.trace() - 2.0 * mean_b))?
        .add(&rho.as_operator().scale(b.trace() * mean_a - a.trace() * mean_b))?;

    let diff = &lhs - rhs.matrix();
    Ok(diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
}
