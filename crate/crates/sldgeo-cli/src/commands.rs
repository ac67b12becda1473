//! Subcommand implementations. Each returns the process exit code:
//! 0 for success / verdict-true, 1 for verdict-false; input errors are
//! reported as `Err` and mapped to exit code 2 by `main`.

use serde::Serialize;
use sldgeo::nalgebra::{DMatrix, DVector};

use sldgeo::catalog;
use sldgeo::estimation::{
    build_filtration, check_locally_unbiased, filtration_predicted_uvu, mc_quadratic_form,
    monte_carlo_moments, quadratic_form, FiltrationSpec,
};
use sldgeo::manifold::ParametricModel;
use sldgeo::operator::OperatorJson;
use sldgeo::qubit::{self, BlochVector, GeodesicParams};
use sldgeo::rng::{random_density, StreamRng};
use sldgeo::{
    check_e_autoparallel_m_affine, counterexample_dim_ge3, involutivity_check, real_subspace,
    scalar_efficient_estimator, AutoparallelReport, HermitianOperator, InvolutivityReport,
    OperatorSubspace,
};

use crate::config::{require_vec3, RunConfig};
use crate::report::{fmt_f64, ReportSink};

pub type CmdResult = Result<i32, String>;

fn fail<T>(msg: impl Into<String>) -> Result<T, String> {
    Err(msg.into())
}

fn positive_tol(cfg: &RunConfig, default: f64) -> Result<f64, String> {
    let tol = cfg.tol.unwrap_or(default);
    if tol <= 0.0 {
        return fail(format!("tolerance must be positive, got {tol}"));
    }
    Ok(tol)
}

fn require_seed(cfg: &RunConfig) -> Result<u64, String> {
    cfg.seed
        .ok_or_else(|| "this command is stochastic: a --seed is required".to_string())
}

fn load_model(cfg: &RunConfig) -> Result<ParametricModel, String> {
    let id = cfg
        .model
        .as_deref()
        .ok_or_else(|| "missing --model".to_string())?;
    let mut model = catalog::by_name(id).map_err(|e| e.to_string())?;
    if let Some(h) = cfg.fd_step {
        if h <= 0.0 {
            return fail(format!("--fd-step must be positive, got {h}"));
        }
        model = model.with_fd_step(h);
    }
    Ok(model)
}

fn format_of(cfg: &RunConfig, allowed: &[&str]) -> Result<String, String> {
    let fmt = cfg.format.clone().unwrap_or_else(|| allowed[0].to_string());
    if !allowed.contains(&fmt.as_str()) {
        return fail(format!(
            "unsupported format {fmt:?} for this command (allowed: {allowed:?})"
        ));
    }
    Ok(fmt)
}

#[derive(Serialize)]
struct CurvePoint {
    xi: f64,
    r: [f64; 3],
}

pub fn geodesic(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let r0 = require_vec3(cfg.r0.as_deref().unwrap_or(&[0.0, 0.0, 0.0]), "--r0")?;
    let u = require_vec3(cfg.u.as_deref().unwrap_or(&[0.0, 0.0, 1.0]), "--u")?;
    let samples = cfg.samples.unwrap_or(101).max(2);
    let fmt = format_of(cfg, &["csv", "json"])?;
    let r0 = BlochVector::new(r0).map_err(|e| e.to_string())?;
    let params = GeodesicParams::from_anchor(&r0, u).map_err(|e| e.to_string())?;
    let mut points = Vec::with_capacity(samples);
    for k in 0..samples {
        let xi = -0.99 + 1.98 * k as f64 / (samples - 1) as f64;
        let r = qubit::qubit_geodesic_point(&params, xi).map_err(|e| e.to_string())?;
        points.push(CurvePoint { xi, r: r.coords() });
    }
    let body = match fmt.as_str() {
        "csv" => {
            let mut s = String::from("xi,r1,r2,r3\n");
            for p in &points {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt_f64(p.xi),
                    fmt_f64(p.r[0]),
                    fmt_f64(p.r[1]),
                    fmt_f64(p.r[2])
                ));
            }
            s
        }
        _ => serde_json::to_string_pretty(&points).unwrap(),
    };
    sink.emit(&body, cfg).map_err(|e| e.to_string())?;
    Ok(0)
}

#[derive(Serialize)]
struct SurfacePoint {
    xi: [f64; 2],
    r: [f64; 3],
}

pub fn surface(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let u1 = require_vec3(cfg.u1.as_deref().unwrap_or(&[1.0, 0.0, 0.0]), "--u1")?;
    let u2 = require_vec3(cfg.u2.as_deref().unwrap_or(&[0.0, 1.0, 0.0]), "--u2")?;
    let v = require_vec3(cfg.v.as_deref().unwrap_or(&[0.0, 0.0, 1.0]), "--v")?;
    let c = cfg.c.unwrap_or(0.3);
    let grid = cfg.grid.unwrap_or(21).max(2);
    let fmt = format_of(cfg, &["csv", "json"])?;
    let half = 0.69;
    let mut points = Vec::new();
    for a in 0..grid {
        for b in 0..grid {
            let xi = [
                -half + 2.0 * half * a as f64 / (grid - 1) as f64,
                -half + 2.0 * half * b as f64 / (grid - 1) as f64,
            ];
            if xi[0] * xi[0] + xi[1] * xi[1] >= 1.0 {
                continue;
            }
            let r = qubit::qubit_autoparallel_surface_point(u1, u2, v, c, xi)
                .map_err(|e| e.to_string())?;
            points.push(SurfacePoint { xi, r: r.coords() });
        }
    }
    let body = match fmt.as_str() {
        "csv" => {
            let mut s = String::from("xi1,xi2,r1,r2,r3\n");
            for p in &points {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(p.xi[0]),
                    fmt_f64(p.xi[1]),
                    fmt_f64(p.r[0]),
                    fmt_f64(p.r[1]),
                    fmt_f64(p.r[2])
                ));
            }
            s
        }
        _ => serde_json::to_string_pretty(&points).unwrap(),
    };
    sink.emit(&body, cfg).map_err(|e| e.to_string())?;
    Ok(0)
}

#[derive(Serialize)]
struct VerdictReport {
    verdict: bool,
    max_residual: f64,
    max_pairwise: f64,
    tol: f64,
    grid_points: usize,
    certificate: Vec<OperatorJson>,
    witness: Option<sldgeo::AutoparallelWitness>,
}

impl From<AutoparallelReport> for VerdictReport {
    fn from(r: AutoparallelReport) -> Self {
        VerdictReport {
            verdict: r.verdict,
            max_residual: r.max_residual,
            max_pairwise: r.max_pairwise,
            tol: r.tol,
            grid_points: r.grid.len(),
            certificate: r.observables.into_iter().map(Into::into).collect(),
            witness: r.witness,
        }
    }
}

pub fn check_autoparallel(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let model = load_model(cfg)?;
    let tol = positive_tol(cfg, 1e-8)?;
    let per_axis = cfg.grid.unwrap_or(10).max(2);
    format_of(cfg, &["json"])?;
    let grid = catalog::domain_grid(&model, per_axis, 0.05);
    let report = check_e_autoparallel_m_affine(&model, &grid, tol).map_err(|e| e.to_string())?;
    let verdict = report.verdict;
    let body = serde_json::to_string_pretty(&VerdictReport::from(report)).unwrap();
    sink.emit(&body, cfg).map_err(|e| e.to_string())?;
    Ok(if verdict { 0 } else { 1 })
}

#[derive(Serialize)]
struct InvolutivityBody {
    involutive: bool,
    worst_residual: f64,
    tol: f64,
    subspace_dim: usize,
    states: usize,
    seed: u64,
    report: InvolutivityReport,
}

pub fn involutivity(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let tol = positive_tol(cfg, 1e-9)?;
    let seed = require_seed(cfg)?;
    let n_states = cfg.states.unwrap_or(20);
    format_of(cfg, &["json"])?;
    let subspace = match &cfg.ops {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let ops: Vec<OperatorJson> = serde_json::from_str(&raw)
                .map_err(|e| format!("malformed operator JSON in {}: {e}", path.display()))?;
            let ops = ops
                .into_iter()
                .map(HermitianOperator::try_from)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| e.to_string())?;
            OperatorSubspace::span(&ops).map_err(|e| e.to_string())?
        }
        None => {
            let d = cfg.dim.unwrap_or(2);
            real_subspace(&DMatrix::identity(d, d)).map_err(|e| e.to_string())?
        }
    };
    let mut rng = StreamRng::new(seed);
    let states: Vec<_> = (0..n_states)
        .map(|_| random_density(subspace.ambient_dim(), &mut rng))
        .collect();
    let report = involutivity_check(&subspace, &states, tol).map_err(|e| e.to_string())?;
    let involutive = report.involutive;
    let body = InvolutivityBody {
        involutive,
        worst_residual: report.worst_residual,
        tol,
        subspace_dim: subspace.dim(),
        states: n_states,
        seed,
        report,
    };
    sink.emit(&serde_json::to_string_pretty(&body).unwrap(), cfg)
        .map_err(|e| e.to_string())?;
    Ok(if involutive { 0 } else { 1 })
}

pub fn filtration_sweep(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let model = load_model(cfg)?;
    let n = model.param_dim();
    let tol = positive_tol(cfg, 1e-8)?;
    let seed = require_seed(cfg)?;
    let shots = cfg.shots.unwrap_or(100_000);
    let per_axis = cfg.grid.unwrap_or(5).max(2);
    let eps_list = cfg
        .eps_list
        .clone()
        .unwrap_or_else(|| sldgeo::estimation::DEFAULT_EPS_SCHEDULE.to_vec());
    let fmt = format_of(cfg, &["csv", "json"])?;

    let grid = catalog::domain_grid(&model, per_axis, 0.1);
    let cert = check_e_autoparallel_m_affine(&model, &grid, tol).map_err(|e| e.to_string())?;
    if !cert.verdict {
        eprintln!(
            "model is not certified e-autoparallel with m-affine coordinates \
             (max pairwise {:.3e} > tol {:.3e}); no filtration exists",
            cert.max_pairwise, cert.tol
        );
        return Ok(1);
    }

    // complete the requested direction to a basis via standard axes
    let u = match &cfg.u {
        Some(u) if u.len() == n => u.clone(),
        Some(u) => return fail(format!("--u needs {n} components, got {}", u.len())),
        None => {
            let mut u = vec![0.0; n];
            u[0] = 1.0;
            u
        }
    };
    let pivot = (0..n)
        .max_by(|&a, &b| u[a].abs().partial_cmp(&u[b].abs()).unwrap())
        .unwrap();
    if u[pivot] == 0.0 {
        return fail("--u must be nonzero");
    }
    let mut u_basis = DMatrix::zeros(n, n);
    for i in 0..n {
        u_basis[(0, i)] = u[i];
    }
    let mut row = 1;
    for j in 0..n {
        if j != pivot {
            u_basis[(row, j)] = 1.0;
            row += 1;
        }
    }

    let spec = FiltrationSpec::new(u_basis.clone(), cert.observables, eps_list.clone())
        .map_err(|e| e.to_string())?;
    let estimators = build_filtration(&spec).map_err(|e| e.to_string())?;

    #[derive(Serialize)]
    struct SweepRow {
        eps: f64,
        state_index: usize,
        u_index: usize,
        #[serde(rename = "uTVu_analytic")]
        utvu_analytic: f64,
        #[serde(rename = "uTVu_mc")]
        utvu_mc: f64,
        stderr: f64,
        cr_bound: f64,
        unbiased_tol: f64,
    }

    let mut rows = Vec::new();
    let mut mc_seed = seed;
    for (eps, pi) in spec.eps_schedule().iter().zip(&estimators) {
        for (s, xi) in grid.iter().enumerate() {
            let unbiased = check_locally_unbiased(&model, xi, pi, tol)
                .map_err(|e| e.to_string())?;
            if !unbiased {
                return fail(format!("filtration estimator not unbiased at {xi:?}"));
            }
            let frame = model.frame(xi).map_err(|e| e.to_string())?;
            let mc = monte_carlo_moments(&frame.state, pi, xi, shots, mc_seed)
                .map_err(|e| e.to_string())?;
            mc_seed += 1;
            for k in 0..n {
                let uk: Vec<f64> = (0..n).map(|i| u_basis[(k, i)]).collect();
                let analytic =
                    quadratic_form(&model, xi, pi, &uk).map_err(|e| e.to_string())?;
                let (sampled, stderr) =
                    mc_quadratic_form(pi, &mc.counts, xi, &uk).map_err(|e| e.to_string())?;
                let bound = frame.fisher.cr_bound(&DVector::from_column_slice(&uk));
                if k == 0 {
                    let predicted = filtration_predicted_uvu(&frame, &uk, *eps);
                    if (predicted - analytic).abs() > tol {
                        return fail(format!(
                            "filtration variance identity violated at eps {eps}, state {s}"
                        ));
                    }
                }
                rows.push(SweepRow {
                    eps: *eps,
                    state_index: s,
                    u_index: k,
                    utvu_analytic: analytic,
                    utvu_mc: sampled,
                    stderr,
                    cr_bound: bound,
                    unbiased_tol: tol,
                });
            }
        }
    }

    let body = match fmt.as_str() {
        "csv" => {
            let mut s = String::from(
                "eps,state_index,u_index,uTVu_analytic,uTVu_mc,stderr,cr_bound,unbiased_tol\n",
            );
            for r in &rows {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{}\n",
                    fmt_f64(r.eps),
                    r.state_index,
                    r.u_index,
                    fmt_f64(r.utvu_analytic),
                    fmt_f64(r.utvu_mc),
                    fmt_f64(r.stderr),
                    fmt_f64(r.cr_bound),
                    fmt_f64(r.unbiased_tol)
                ));
            }
            s
        }
        _ => serde_json::to_string_pretty(&rows).unwrap(),
    };
    sink.emit(&body, cfg).map_err(|e| e.to_string())?;
    Ok(0)
}

pub fn counterexample(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let eps = cfg.eps.unwrap_or(0.05);
    let dim = cfg.dim.unwrap_or(3);
    let tol = positive_tol(cfg, 1e-6)?;
    format_of(cfg, &["json"])?;
    let residual = counterexample_dim_ge3(eps, dim).map_err(|e| e.to_string())?;
    let involutive = residual <= tol;
    #[derive(Serialize)]
    struct Body {
        eps: f64,
        dim: usize,
        residual: f64,
        tol: f64,
        involutive_at_this_state: bool,
    }
    let body = Body {
        eps,
        dim,
        residual,
        tol,
        involutive_at_this_state: involutive,
    };
    sink.emit(&serde_json::to_string_pretty(&body).unwrap(), cfg)
        .map_err(|e| e.to_string())?;
    eprintln!("least-squares residual: {residual:.6e} (tol {tol:.1e})");
    Ok(if involutive { 0 } else { 1 })
}

pub fn scalar_estimate(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let model = load_model(cfg)?;
    let n = model.param_dim();
    let xi = cfg
        .xi
        .clone()
        .ok_or_else(|| "missing --xi (model coordinates)".to_string())?;
    if xi.len() != n {
        return fail(format!("--xi needs {n} components, got {}", xi.len()));
    }
    let coeffs = cfg.coeffs.clone().unwrap_or_else(|| {
        let mut c = vec![0.0; n];
        c[0] = 1.0;
        c
    });
    if coeffs.len() != n {
        return fail(format!("--coeffs needs {n} components, got {}", coeffs.len()));
    }
    let offset = cfg.offset.unwrap_or(0.0);
    format_of(cfg, &["json"])?;
    // f = offset + sum coeffs_i xi^i, so grad f = coeffs
    let f_value = offset + coeffs.iter().zip(&xi).map(|(&a, &b)| a * b).sum::<f64>();
    let observable =
        scalar_efficient_estimator(&model, &xi, f_value, &coeffs).map_err(|e| e.to_string())?;
    let frame = model.frame(&xi).map_err(|e| e.to_string())?;
    let variance = sldgeo::estimation::observable_variance(&frame.state, &observable)
        .map_err(|e| e.to_string())?;
    let bound = frame.fisher.cr_bound(&DVector::from_column_slice(&coeffs));
    #[derive(Serialize)]
    struct Body {
        xi: Vec<f64>,
        coeffs: Vec<f64>,
        offset: f64,
        f_value: f64,
        variance: f64,
        scalar_cr_bound: f64,
        observable: OperatorJson,
    }
    let body = Body {
        xi,
        coeffs,
        offset,
        f_value,
        variance,
        scalar_cr_bound: bound,
        observable: observable.into(),
    };
    sink.emit(&serde_json::to_string_pretty(&body).unwrap(), cfg)
        .map_err(|e| e.to_string())?;
    Ok(0)
}

pub fn iid_extend(cfg: &RunConfig, sink: &ReportSink) -> CmdResult {
    let model = load_model(cfg)?;
    let copies = cfg.copies.unwrap_or(2);
    let per_axis = cfg.grid.unwrap_or(3).max(1);
    format_of(cfg, &["jsonl"])?;
    let ext = model.iid_extension(copies).map_err(|e| e.to_string())?;
    let grid = catalog::domain_grid(&model, per_axis, 0.1);

    #[derive(Serialize)]
    struct Record {
        xi: Vec<f64>,
        state: OperatorJson,
        slds: Vec<OperatorJson>,
        fisher: Vec<Vec<f64>>,
        fisher_scaling_gap: f64,
    }

    let mut body = String::new();
    for xi in &grid {
        let base = model.frame(xi).map_err(|e| e.to_string())?;
        let frame = ext.frame(xi).map_err(|e| e.to_string())?;
        let scaled = base.fisher.matrix() * copies as f64;
        let gap = (frame.fisher.matrix() - scaled).norm();
        let n = frame.fisher.dim();
        let fisher: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| frame.fisher.matrix()[(i, j)]).collect())
            .collect();
        let record = Record {
            xi: xi.clone(),
            state: frame.state.as_operator().clone().into(),
            slds: frame
                .tangents
                .iter()
                .map(|t| t.sld().clone().into())
                .collect(),
            fisher,
            fisher_scaling_gap: gap,
        };
        body.push_str(&serde_json::to_string(&record).unwrap());
        body.push('\n');
    }
    sink.emit(&body, cfg).map_err(|e| e.to_string())?;
    Ok(0)
}
