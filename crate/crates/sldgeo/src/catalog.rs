//! Built-in model catalog.
//!
//! Each entry is a named, reproducible fixture with documented coordinates:
//!
//! - `bloch-full` — the whole qubit manifold in Bloch coordinates (n = 3);
//! - `bloch-ellipsoid(c)` — the semi-ellipsoid surface with m-affine
//!   expectation coordinates (n = 2, e-autoparallel);
//! - `bloch-geodesic(a,c)` — a semi-ellipse geodesic in its m-affine
//!   coordinate `xi` (n = 1, e-autoparallel);
//! - `bloch-geodesic-theta(a,c)` — the same curve in the e-affine parameter
//!   `theta`, which is *not* m-affine (negative control for the coordinate
//!   condition);
//! - `quasi-exp-diag(d)` — the diagonal quasi-classical exponential family in
//!   expectation coordinates (n = d - 1, e-autoparallel);
//! - `latitude-band(r)` — a patch of the fixed-radius Bloch sphere in
//!   spherical angles (n = 2, not e-autoparallel).
//!
//! Model identifiers are parsed by [`by_name`], e.g. `"bloch-ellipsoid(c=0.3)"`.

use nalgebra::{Complex, DMatrix};

use crate::manifold::ParametricModel;
use crate::operator::{pauli, DensityOperator, HermitianOperator, C64};
use crate::qubit::{self, BlochVector, GeodesicParams};
use crate::{Error, Result};

/// Half-width of the `bloch-full` coordinate box; the box corner has norm
/// `sqrt(3) * 0.577 < 1`, so every box point is a valid state.
pub const BLOCH_BOX_HALF_WIDTH: f64 = 0.577;

fn bloch_state(r: [f64; 3]) -> Result<DensityOperator> {
    Ok(qubit::bloch_to_density(&BlochVector::new(r)?))
}

/// The full qubit manifold in Bloch coordinates, `d rho / d r_i = sigma_i / 2`.
pub fn bloch_full() -> ParametricModel {
    let w = BLOCH_BOX_HALF_WIDTH;
    ParametricModel::new(vec![(-w, w); 3], |xi| bloch_state([xi[0], xi[1], xi[2]]))
        .with_analytic_partials(|_xi, i| {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            Ok(pauli::dot_sigma(e).scale(0.5))
        })
}

/// Semi-ellipsoid surface `r(xi) = xi^1 u1 + xi^2 u2 + c sqrt(1-||xi||^2) v`
/// over the default axes `u1 = e_x`, `u2 = e_y`, `v = e_z`, in its m-affine
/// expectation coordinates `xi^i = <u_i . sigma>`.
pub fn bloch_ellipsoid(c: f64) -> Result<ParametricModel> {
    bloch_ellipsoid_axes([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], c)
}

pub fn bloch_ellipsoid_axes(
    u1: [f64; 3],
    u2: [f64; 3],
    v: [f64; 3],
    c: f64,
) -> Result<ParametricModel> {
    if c.abs() >= 1.0 {
        return Err(Error::InvalidArgument("|c| must be < 1".into()));
    }
    // probe the axes once so bad input fails at construction
    qubit::qubit_autoparallel_surface_point(u1, u2, v, c, [0.0, 0.0])?;
    let w = 0.7;
    let state = move |xi: &[f64]| {
        let r = qubit::qubit_autoparallel_surface_point(u1, u2, v, c, [xi[0], xi[1]])?;
        Ok(qubit::bloch_to_density(&r))
    };
    let partial = move |xi: &[f64], i: usize| {
        let alpha = (1.0 - xi[0] * xi[0] - xi[1] * xi[1]).sqrt();
        let ui = if i == 0 { u1 } else { u2 };
        let mut dr = [0.0; 3];
        for k in 0..3 {
            dr[k] = ui[k] - c * xi[i] / alpha * v[k];
        }
        Ok(pauli::dot_sigma(dr).scale(0.5))
    };
    Ok(ParametricModel::new(vec![(-w, w); 2], state).with_analytic_partials(partial))
}

/// Semi-ellipse geodesic through the anchor with coordinate `a`, in the
/// m-affine coordinate `xi` (axes `u = e_z`, `v = e_x`).
pub fn bloch_geodesic(a: f64, c: f64) -> Result<ParametricModel> {
    let params = GeodesicParams::from_axes([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], a, c)?;
    let state = move |xi: &[f64]| {
        let r = qubit::qubit_geodesic_point(&params, xi[0])?;
        Ok(qubit::bloch_to_density(&r))
    };
    let partial = move |xi: &[f64], _i: usize| {
        let x = xi[0];
        let u = params.u();
        let v = params.v();
        let dc = -params.flattening() * x / (1.0 - x * x).sqrt();
        let mut dr = [0.0; 3];
        for k in 0..3 {
            dr[k] = u[k] + dc * v[k];
        }
        Ok(pauli::dot_sigma(dr).scale(0.5))
    };
    Ok(ParametricModel::new(vec![(-0.95, 0.95)], state).with_analytic_partials(partial))
}

/// The same geodesic parametrized by the e-affine parameter `theta`; this
/// coordinate is not m-affine, so the pair (curve, theta) fails the
/// autoparallel-plus-m-affine test even though the curve is e-autoparallel.
pub fn bloch_geodesic_theta(a: f64, c: f64) -> Result<ParametricModel> {
    let params = GeodesicParams::from_axes([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], a, c)?;
    let state = move |th: &[f64]| {
        let xi = params.xi_of_theta(th[0]);
        let r = qubit::qubit_geodesic_point(&params, xi)?;
        Ok(qubit::bloch_to_density(&r))
    };
    let partial = move |th: &[f64], _i: usize| {
        let xi = params.xi_of_theta(th[0]);
        // d xi / d theta = 4 A B / (A + B)^2 with A = (1+a) e^{2 theta}, B = 1-a
        let aa = (1.0 + params.anchor_coordinate()) * (2.0 * th[0]).exp();
        let bb = 1.0 - params.anchor_coordinate();
        let dxi = 4.0 * aa * bb / ((aa + bb) * (aa + bb));
        let u = params.u();
        let v = params.v();
        let dc = -params.flattening() * xi / (1.0 - xi * xi).sqrt();
        let mut dr = [0.0; 3];
        for k in 0..3 {
            dr[k] = dxi * (u[k] + dc * v[k]);
        }
        Ok(pauli::dot_sigma(dr).scale(0.5))
    };
    Ok(ParametricModel::new(vec![(-1.5, 1.5)], state).with_analytic_partials(partial))
}

/// Diagonal quasi-classical exponential family in expectation coordinates:
/// states `diag(xi^1, .., xi^{d-1}, 1 - sum xi)` with `xi^i = <F^i>` for
/// `F^i = |i><i|`. The classical exponential family on the simplex interior.
pub fn quasi_exp_diag(d: usize) -> Result<ParametricModel> {
    if d < 2 {
        return Err(Error::InvalidArgument("need dimension >= 2".into()));
    }
    let n = d - 1;
    let lo = 1.0 / (2.0 * d as f64);
    let hi = 1.0 / d as f64;
    let state = move |xi: &[f64]| {
        let mut diag = DMatrix::<C64>::zeros(d, d);
        let mut rest = 1.0;
        for (i, &x) in xi.iter().enumerate() {
            diag[(i, i)] = C64::new(x, 0.0);
            rest -= x;
        }
        diag[(d - 1, d - 1)] = C64::new(rest, 0.0);
        DensityOperator::from_matrix(diag)
    };
    let partial = move |_xi: &[f64], i: usize| {
        let mut m = DMatrix::<C64>::zeros(d, d);
        m[(i, i)] = C64::new(1.0, 0.0);
        m[(d - 1, d - 1)] = C64::new(-1.0, 0.0);
        HermitianOperator::new(m)
    };
    Ok(ParametricModel::new(vec![(lo, hi); n], state).with_analytic_partials(partial))
}

/// Expectation observables `F^i = |i><i|` of [`quasi_exp_diag`].
pub fn quasi_exp_diag_observables(d: usize) -> Vec<HermitianOperator> {
    (0..d - 1)
        .map(|i| {
            let mut m = DMatrix::<C64>::zeros(d, d);
            m[(i, i)] = Complex::new(1.0, 0.0);
            HermitianOperator::new(m).unwrap()
        })
        .collect()
}

/// The full state space `S(H)` for dimension `d`, parametrized affinely as
/// `rho(xi) = I/d + sum_a xi^a B_a` over an HS-orthonormal traceless
/// Hermitian basis `{B_a}` (n = d^2 - 1 coordinates). The domain box is small
/// enough that every box point is strictly positive.
pub fn full_state_space(d: usize) -> Result<ParametricModel> {
    if d < 2 {
        return Err(Error::InvalidArgument("need dimension >= 2".into()));
    }
    let basis = traceless_hermitian_basis(d);
    let n = basis.len();
    // ||sum xi B||_spec <= ||xi||_2 <= sqrt(n) w must stay below 1/d
    let w = 1.0 / (2.0 * d as f64 * (n as f64).sqrt());
    let state_basis = basis.clone();
    let state = move |xi: &[f64]| {
        let mut op = HermitianOperator::identity(d).scale(1.0 / d as f64);
        for (x, b) in xi.iter().zip(&state_basis) {
            op = op.add(&b.scale(*x))?;
        }
        DensityOperator::new(op)
    };
    let partial = move |_xi: &[f64], i: usize| Ok(basis[i].clone());
    Ok(ParametricModel::new(vec![(-w, w); n], state).with_analytic_partials(partial))
}

/// HS-orthonormal basis of the traceless Hermitian operators (generalized
/// Gell-Mann construction): off-diagonal symmetric and antisymmetric pairs,
/// then diagonal ladder operators.
pub fn traceless_hermitian_basis(d: usize) -> Vec<HermitianOperator> {
    let mut basis = Vec::with_capacity(d * d - 1);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..d {
        for k in (j + 1)..d {
            let mut sym = DMatrix::<C64>::zeros(d, d);
            sym[(j, k)] = C64::new(s, 0.0);
            sym[(k, j)] = C64::new(s, 0.0);
            basis.push(HermitianOperator::new(sym).unwrap());
            let mut asym = DMatrix::<C64>::zeros(d, d);
            asym[(j, k)] = C64::new(0.0, -s);
            asym[(k, j)] = C64::new(0.0, s);
            basis.push(HermitianOperator::new(asym).unwrap());
        }
    }
    for l in 1..d {
        let mut diag = DMatrix::<C64>::zeros(d, d);
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        for j in 0..l {
            diag[(j, j)] = C64::new(norm, 0.0);
        }
        diag[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        basis.push(HermitianOperator::new(diag).unwrap());
    }
    basis
}

/// A patch of the fixed-radius Bloch sphere in spherical angles
/// `(polar, azimuth)`; curved within the sphere, hence not e-autoparallel.
/// Negative control for the autoparallelity and dimension checks.
pub fn latitude_band(radius: f64) -> Result<ParametricModel> {
    if !(0.0 < radius && radius < 1.0) {
        return Err(Error::InvalidArgument("radius must be in (0, 1)".into()));
    }
    let domain = vec![(0.6, 1.4), (-0.7, 0.7)];
    let state = move |xi: &[f64]| {
        let (th, ph) = (xi[0], xi[1]);
        bloch_state([
            radius * th.sin() * ph.cos(),
            radius * th.sin() * ph.sin(),
            radius * th.cos(),
        ])
    };
    let partial = move |xi: &[f64], i: usize| {
        let (th, ph) = (xi[0], xi[1]);
        let dr = if i == 0 {
            [
                radius * th.cos() * ph.cos(),
                radius * th.cos() * ph.sin(),
                -radius * th.sin(),
            ]
        } else {
            [
                -radius * th.sin() * ph.sin(),
                radius * th.sin() * ph.cos(),
                0.0,
            ]
        };
        Ok(pauli::dot_sigma(dr).scale(0.5))
    };
    Ok(ParametricModel::new(domain, state).with_analytic_partials(partial))
}

/// Parses a catalog identifier like `bloch-ellipsoid(c=0.3)` or
/// `quasi-exp-diag(d=3)`. Parameters are `key=value` pairs; omitted keys take
/// the documented defaults.
pub fn by_name(spec: &str) -> Result<ParametricModel> {
    let (name, params) = parse_spec(spec)?;
    let get = |key: &str, default: f64| -> f64 {
        params
            .iter()
            .find(|(k, _)| k == key)
            .map(|&(_, v)| v)
            .unwrap_or(default)
    };
    match name.as_str() {
        "bloch-full" => Ok(bloch_full()),
        "bloch-ellipsoid" => bloch_ellipsoid(get("c", 0.3)),
        "bloch-geodesic" => bloch_geodesic(get("a", 0.0), get("c", 0.3)),
        "bloch-geodesic-theta" => bloch_geodesic_theta(get("a", 0.0), get("c", 0.3)),
        "quasi-exp-diag" => quasi_exp_diag(get("d", 3.0) as usize),
        "latitude-band" => latitude_band(get("r", 0.7)),
        other => Err(Error::InvalidArgument(format!("unknown model id: {other}"))),
    }
}

fn parse_spec(spec: &str) -> Result<(String, Vec<(String, f64)>)> {
    let spec = spec.trim();
    let Some(open) = spec.find('(') else {
        return Ok((spec.to_string(), Vec::new()));
    };
    if !spec.ends_with(')') {
        return Err(Error::InvalidArgument(format!(
            "malformed model id: {spec}"
        )));
    }
    let name = spec[..open].to_string();
    let body = &spec[open + 1..spec.len() - 1];
    let mut params = Vec::new();
    for item in body.split(',').filter(|s| !s.trim().is_empty()) {
        let mut kv = item.splitn(2, '=');
        let key = kv.next().unwrap_or("").trim().to_string();
        let val = kv
            .next()
            .ok_or_else(|| Error::InvalidArgument(format!("expected key=value in {item:?}")))?
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::InvalidArgument(format!("bad number in {item:?}: {e}")))?;
        params.push((key, val));
    }
    Ok((name, params))
}

/// Uniform grid over the interior of the model's domain box, shrunk by the
/// given margin fraction on each axis; `points_per_axis^n` points total.
pub fn domain_grid(model: &ParametricModel, points_per_axis: usize, margin: f64) -> Vec<Vec<f64>> {
    let n = model.param_dim();
    let spans: Vec<(f64, f64)> = model
        .domain()
        .iter()
        .map(|&(lo, hi)| {
            let pad = margin * (hi - lo);
            (lo + pad, hi - pad)
        })
        .collect();
    let mut grid = Vec::with_capacity(points_per_axis.pow(n as u32));
    let mut index = vec![0usize; n];
    loop {
        let point: Vec<f64> = (0..n)
            .map(|axis| {
                let (lo, hi) = spans[axis];
                if points_per_axis == 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * index[axis] as f64 / (points_per_axis - 1) as f64
                }
            })
            .collect();
        grid.push(point);
        let mut axis = 0;
        loop {
            if axis == n {
                return grid;
            }
            index[axis] += 1;
            if index[axis] < points_per_axis {
                break;
            }
            index[axis] = 0;
            axis += 1;
        }
    }
}
