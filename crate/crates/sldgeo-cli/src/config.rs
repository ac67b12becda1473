//! Flat run configuration: every knob of every subcommand, all optional.
//! A JSON config file carries the same keys as the flags; flags win.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    pub model: Option<String>,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub eps_list: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
    pub shots: Option<u64>,
    pub fd_step: Option<f64>,
    pub samples: Option<usize>,
    pub states: Option<usize>,
    pub dim: Option<usize>,
    pub eps: Option<f64>,
    pub copies: Option<usize>,
    pub r0: Option<Vec<f64>>,
    pub u: Option<Vec<f64>>,
    pub u1: Option<Vec<f64>>,
    pub u2: Option<Vec<f64>>,
    pub v: Option<Vec<f64>>,
    pub c: Option<f64>,
    pub xi: Option<Vec<f64>>,
    pub coeffs: Option<Vec<f64>>,
    pub offset: Option<f64>,
    pub ops: Option<PathBuf>,
}

impl RunConfig {
    /// Field-wise merge: values set on `self` (the flags) win over `base`.
    pub fn merged_over(mut self, base: RunConfig) -> RunConfig {
        macro_rules! take {
            ($($field:ident),+ $(,)?) => {
                $(if self.$field.is_none() { self.$field = base.$field; })+
            };
        }
        take!(
            command, model, tol, grid, eps_list, seed, out, format, shots, fd_step, samples,
            states, dim, eps, copies, r0, u, u1, u2, v, c, xi, coeffs, offset, ops
        );
        self
    }
}

/// Comma-separated float list as a single flag value (`--u 0,0,0.5`); a
/// newtype so clap does not treat the inner `Vec` as a multi-occurrence flag.
#[derive(Debug, Clone)]
pub struct FloatList(pub Vec<f64>);

/// Parses a comma-separated list of floats (`"0,0,0.5"`).
pub fn parse_f64_list(s: &str) -> Result<FloatList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<Vec<f64>, String>>()
        .map(FloatList)
}

pub fn unwrap_list(list: Option<FloatList>) -> Option<Vec<f64>> {
    list.map(|l| l.0)
}

pub fn require_vec3(v: &[f64], what: &str) -> Result<[f64; 3], String> {
    if v.len() != 3 {
        return Err(format!("{what} needs exactly 3 components, got {}", v.len()));
    }
    Ok([v[0], v[1], v[2]])
}
