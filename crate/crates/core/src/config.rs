//! Run configuration: one flat, strict JSON object per run.
//!
//! ```json
//! { "a": 1, "h": 1, "L": 40, "N": 4096, "f": {"name": "gaussian"}, "tol_orth": 1e-8 }
//! ```
//!
//! Unknown keys are rejected. Which keys are required depends on the command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{FunctionSpec, NonlinearitySpec};
use crate::error::{Error, Result};
use crate::linear::DEFAULT_ORTH_TOL;
use crate::nonlinear::{DEFAULT_MAX_ITER, DEFAULT_SUPPORT_THRESHOLD, DEFAULT_TOL_H2};
use crate::operator::ShiftParams;
use crate::sequence::{SequenceKind, DEFAULT_TERMS};
use crate::spectral::Grid;

pub const DEFAULT_P_MAX: f64 = 10.0;
pub const DEFAULT_SAMPLES: usize = 2001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    SolveLinear,
    SolveNonlinear,
    Constants,
    Sequence,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::SolveLinear => "solve-linear",
            Command::SolveNonlinear => "solve-nonlinear",
            Command::Constants => "constants",
            Command::Sequence => "sequence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Optional; must agree with the subcommand when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub a: f64,
    pub h: f64,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    /// Right-hand side, or limit of a right-hand-side sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<FunctionSpec>,
    /// Perturbation for the `add` sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<FunctionSpec>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<FunctionSpec>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearitySpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<FunctionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_orth: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_h2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_support: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Spectrum range `[-p_max, p_max]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Builtin sequence name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SequenceKind>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub terms: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn field(name: &str, message: impl Into<String>) -> Error {
    Error::ConfigField {
        field: name.into(),
        message: message.into(),
    }
}

fn positive_tol(name: &str, v: Option<f64>, default: f64) -> Result<f64> {
    match v {
        None => Ok(default),
        Some(t) if t.is_finite() && t > 0.0 => Ok(t),
        Some(t) => Err(field(name, format!("tolerance must be positive, got {t}"))),
    }
}

fn require<'a, T>(v: &'a Option<T>, name: &str, command: Command) -> Result<&'a T> {
    v.as_ref()
        .ok_or_else(|| field(name, format!("required by `{}`", command.as_str())))
}

/// Parse a config from JSON text.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::ConfigParse {
        message: strip_position(&e.to_string()),
        line: e.line(),
        column: e.column(),
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

/// Settings for one command, with defaults filled in and inputs validated.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub command: Command,
    pub params: ShiftParams,
    pub grid: Option<Grid>,
    pub tol_orth: f64,
    pub tol_h2: f64,
    pub tol_support: f64,
    pub max_iter: usize,
    pub p_max: f64,
    pub samples: usize,
    pub terms: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl RunConfig {
    /// Check the fields needed by `command` and fill defaults.
    pub fn resolve(&self, command: Command) -> Result<Resolved> {
        if let Some(c) = self.command {
            if c != command {
                return Err(field(
                    "command",
                    format!(
                        "config is for `{}` but `{}` was requested",
                        c.as_str(),
                        command.as_str()
                    ),
                ));
            }
        }
        if self.h == 0.0 {
            return Err(field("h", "the shift must be nonzero"));
        }
        let params = ShiftParams::new(self.a, self.h).map_err(|e| field("a/h", e.to_string()))?;

        let grid = match (self.half_length, self.points) {
            (Some(l), Some(n)) => Some(Grid::new(l, n).map_err(|e| field("L/N", e.to_string()))?),
            (None, None) => None,
            (Some(_), None) => return Err(field("N", "`L` given without `N`")),
            (None, Some(_)) => return Err(field("L", "`N` given without `L`")),
        };
        if command != Command::Spectrum && grid.is_none() {
            return Err(field("L/N", format!("required by `{}`", command.as_str())));
        }

        match command {
            Command::Spectrum => {}
            Command::SolveLinear => {
                require(&self.f, "f", command)?;
            }
            Command::SolveNonlinear => {
                require(&self.kernel, "G", command)?;
                require(&self.nonlinearity, "F", command)?;
            }
            Command::Constants => {
                require(&self.kernel, "G", command)?;
            }
            Command::Sequence => {
                require(&self.sequence, "sequence", command)?;
                match self.kind.unwrap_or(SequenceKind::Rhs) {
                    SequenceKind::Rhs => {
                        require(&self.f, "f", command)?;
                    }
                    SequenceKind::Kernel => {
                        require(&self.kernel, "G", command)?;
                        require(&self.nonlinearity, "F", command)?;
                        let e = *require(&self.epsilon, "epsilon", command)?;
                        if !(e > 0.0 && e < 1.0) {
                            return Err(field("epsilon", format!("must lie in (0, 1), got {e}")));
                        }
                    }
                }
                if self.sequence.as_deref() == Some("add") {
                    require(&self.g, "g", command)?;
                }
            }
        }

        let p_max = self.p_max.unwrap_or(DEFAULT_P_MAX);
        if !(p_max.is_finite() && p_max > 0.0) {
            return Err(field("p_max", format!("must be positive, got {p_max}")));
        }
        let samples = self.samples.unwrap_or(DEFAULT_SAMPLES);
        if samples < 2 {
            return Err(field("samples", "need at least 2 samples"));
        }
        let terms = self.terms.unwrap_or(DEFAULT_TERMS);
        if terms == 0 {
            return Err(field("M", "need at least one term"));
        }
        let max_iter = self.max_iter.unwrap_or(DEFAULT_MAX_ITER);
        if max_iter == 0 {
            return Err(field("max_iter", "must be at least 1"));
        }
        Ok(Resolved {
            command,
            params,
            grid,
            tol_orth: positive_tol("tol_orth", self.tol_orth, DEFAULT_ORTH_TOL)?,
            tol_h2: positive_tol("tol_h2", self.tol_h2, DEFAULT_TOL_H2)?,
            tol_support: positive_tol("tol_support", self.tol_support, DEFAULT_SUPPORT_THRESHOLD)?,
            max_iter,
            p_max,
            samples,
            terms,
            seed: self.seed.unwrap_or(0),
            output_dir: self.output_dir.clone().unwrap_or_else(|| PathBuf::from(".")),
        })
    }
}
