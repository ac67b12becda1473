//! Command-line front door for the SLD information-geometry library:
//! geodesic and surface tracing, autoparallelity and involutivity verdicts,
//! filtration sweeps, the dimension >= 3 counterexample, scalar estimation,
//! and i.i.d. model extension dumps.
//!
//! Exit codes: 0 success / verdict-true, 1 verdict-false, 2 input error.
//! Reports are deterministic for a fixed config and seed; wall-clock metadata
//! goes to a `<out>.meta.json` sidecar.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_f64_list, unwrap_list, FloatList, RunConfig};
use report::ReportSink;

#[derive(Parser)]
#[command(name = "sldgeo", version, about = "SLD quantum information geometry toolkit")]
struct Cli {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct CommonArgs {
    /// Catalog model id, e.g. "bloch-ellipsoid(c=0.3)".
    #[arg(long)]
    model: Option<String>,
    /// Certification / check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Seed for stochastic commands.
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (csv, json or jsonl depending on the command).
    #[arg(long)]
    format: Option<String>,
    /// Override the model's finite-difference step (forces FD partials).
    #[arg(long)]
    fd_step: Option<f64>,
}

impl CommonArgs {
    fn into_config(self) -> RunConfig {
        RunConfig {
            model: self.model,
            tol: self.tol,
            grid: self.grid,
            seed: self.seed,
            out: self.out,
            format: self.format,
            fd_step: self.fd_step,
            ..RunConfig::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Trace an e-geodesic as a Bloch-space curve (CSV: xi, r1, r2, r3).
    Geodesic {
        #[command(flatten)]
        common: CommonArgs,
        /// Anchor Bloch vector "x,y,z".
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        r0: Option<FloatList>,
        /// Generator direction "x,y,z".
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        u: Option<FloatList>,
        /// Number of xi samples.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Trace a semi-ellipsoid e-autoparallel surface (CSV: xi1, xi2, r...).
    Surface {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        u1: Option<FloatList>,
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        u2: Option<FloatList>,
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        v: Option<FloatList>,
        /// Flattening constant, |c| < 1.
        #[arg(long, allow_hyphen_values = true)]
        c: Option<f64>,
    },
    /// Certify a model as e-autoparallel with m-affine coordinates.
    CheckAutoparallel {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Involutivity of the e-parallel distribution of an operator subspace.
    Involutivity {
        #[command(flatten)]
        common: CommonArgs,
        /// Hilbert-space dimension of the built-in real subspace L_h^B.
        #[arg(long)]
        dim: Option<usize>,
        /// Number of random sample states.
        #[arg(long)]
        states: Option<usize>,
        /// JSON file with a list of operators spanning the subspace.
        #[arg(long)]
        ops: Option<PathBuf>,
    },
    /// Efficient-filtration variance sweep over an epsilon schedule.
    FiltrationSweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Weighting direction (first basis row), comma separated.
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        u: Option<FloatList>,
        /// Epsilon schedule, comma separated, strictly decreasing.
        #[arg(long, value_parser = parse_f64_list)]
        eps_list: Option<FloatList>,
        /// Monte-Carlo shots per (eps, state).
        #[arg(long)]
        shots: Option<u64>,
    },
    /// Least-squares residual of the dim >= 3 involutivity counterexample.
    Counterexample {
        #[command(flatten)]
        common: CommonArgs,
        /// Perturbation strength.
        #[arg(long, allow_hyphen_values = true)]
        eps: Option<f64>,
        /// Hilbert-space dimension (>= 3).
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Efficient estimator for a linear scalar function of the coordinates.
    ScalarEstimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Evaluation point, comma separated.
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        xi: Option<FloatList>,
        /// Gradient coefficients of f = offset + sum coeffs_i xi^i.
        #[arg(long, value_parser = parse_f64_list, allow_hyphen_values = true)]
        coeffs: Option<FloatList>,
        #[arg(long, allow_hyphen_values = true)]
        offset: Option<f64>,
    },
    /// Dump the i.i.d. extension of a model over a grid (JSON lines).
    IidExtend {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of tensor copies.
        #[arg(long)]
        copies: Option<usize>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Geodesic { .. } => "geodesic",
            Command::Surface { .. } => "surface",
            Command::CheckAutoparallel { .. } => "check-autoparallel",
            Command::Involutivity { .. } => "involutivity",
            Command::FiltrationSweep { .. } => "filtration-sweep",
            Command::Counterexample { .. } => "counterexample",
            Command::ScalarEstimate { .. } => "scalar-estimate",
            Command::IidExtend { .. } => "iid-extend",
        }
    }

    fn into_config(self) -> RunConfig {
        let name = self.name().to_string();
        let mut cfg = match self {
            Command::Geodesic {
                common,
                r0,
                u,
                samples,
            } => RunConfig {
                r0: unwrap_list(r0),
                u: unwrap_list(u),
                samples,
                ..common.into_config()
            },
            Command::Surface { common, u1, u2, v, c } => RunConfig {
                u1: unwrap_list(u1),
                u2: unwrap_list(u2),
                v: unwrap_list(v),
                c,
                ..common.into_config()
            },
            Command::CheckAutoparallel { common } => common.into_config(),
            Command::Involutivity {
                common,
                dim,
                states,
                ops,
            } => RunConfig {
                dim,
                states,
                ops,
                ..common.into_config()
            },
            Command::FiltrationSweep {
                common,
                u,
                eps_list,
                shots,
            } => RunConfig {
                u: unwrap_list(u),
                eps_list: unwrap_list(eps_list),
                shots,
                ..common.into_config()
            },
            Command::Counterexample { common, eps, dim } => RunConfig {
                eps,
                dim,
                ..common.into_config()
            },
            Command::ScalarEstimate {
                common,
                xi,
                coeffs,
                offset,
            } => RunConfig {
                xi: unwrap_list(xi),
                coeffs: unwrap_list(coeffs),
                offset,
                ..common.into_config()
            },
            Command::IidExtend { common, copies } => RunConfig {
                copies,
                ..common.into_config()
            },
        };
        cfg.command = Some(name);
        cfg
    }
}

fn run() -> Result<i32, String> {
    let cli = Cli::parse();
    let file_config = match &cli.config {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str::<RunConfig>(&raw)
                .map_err(|e| format!("malformed config {}: {e}", path.display()))?
        }
        None => RunConfig::default(),
    };
    let cfg = cli.command.into_config().merged_over(file_config);
    let sink = ReportSink::new(cfg.out.clone());
    match cfg.command.as_deref() {
        Some("geodesic") => commands::geodesic(&cfg, &sink),
        Some("surface") => commands::surface(&cfg, &sink),
        Some("check-autoparallel") => commands::check_autoparallel(&cfg, &sink),
        Some("involutivity") => commands::involutivity(&cfg, &sink),
        Some("filtration-sweep") => commands::filtration_sweep(&cfg, &sink),
        Some("counterexample") => commands::counterexample(&cfg, &sink),
        Some("scalar-estimate") => commands::scalar_estimate(&cfg, &sink),
        Some("iid-extend") => commands::iid_extend(&cfg, &sink),
        other => Err(format!("unknown command {other:?}")),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
