use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,

    #[error("invalid shift parameters: {0}")]
    InvalidParams(String),

    #[error("classification tolerance {tol} out of range (must lie in (0, {max}))")]
    ToleranceOutOfRange { tol: f64, max: f64 },

    #[error("parameters are resonant (n = {n}); no positive gap constant exists")]
    ResonantParams { n: i64 },

    #[error("sampled symbol minimum {min} is numerically zero; parameters look resonant")]
    DegenerateGap { min: f64 },

    /// Orthogonality to `e^{±i√a x}` fails in the resonant regime.
    #[error(
        "resonant problem not solvable: |f^(+sqrt a)| = {:.3e}, |f^(-sqrt a)| = {:.3e} exceed tol {tol:.1e}",
        fhat_plus.norm(),
        fhat_minus.norm()
    )]
    ResonantNotSolvable {
        fhat_plus: Complex64,
        fhat_minus: Complex64,
        tol: f64,
    },

    #[error("symbol nearly vanishes on the grid (min |lambda|^2 = {min_mod_sq:.3e}, alpha = {alpha:.3e})")]
    NearSingularGrid { min_mod_sq: f64, alpha: f64 },

    #[error(
        "stability constant is infinite: |G^(+sqrt a)| = {:.3e}, |G^(-sqrt a)| = {:.3e}",
        ghat_plus.norm(),
        ghat_minus.norm()
    )]
    NotFinite {
        ghat_plus: Complex64,
        ghat_minus: Complex64,
        tol: f64,
    },

    #[error("contraction hypothesis fails: 2 sqrt(pi) N l = {q:.6} >= 1")]
    ContractionHypothesisFailed { q: f64 },

    #[error("fixed-point iteration did not converge in {iterations} steps (last step {last_step:.3e})")]
    MaxIterExceeded { iterations: usize, last_step: f64 },

    #[error("sequence member m = {m} violates a hypothesis: {reason}")]
    SequenceHypothesis { m: usize, reason: String },

    #[error("unknown builtin `{0}`")]
    UnknownBuiltin(String),

    /// Declared growth or Lipschitz constant of `F` contradicted by sampling.
    #[error("nonlinearity hypothesis fails: {0}")]
    NonlinearityHypothesis(String),

    #[error("asserted bounds failed: {0}")]
    VerificationFailed(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    ConfigParse {
        message: String,
        line: usize,
        column: usize,
    },

    #[error("config field `{field}`: {message}")]
    ConfigField { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of a mathematical hypothesis of the problem
    /// (as opposed to bad input or internal faults).
    pub fn is_hypothesis_violation(&self) -> bool {
        matches!(
            self,
            Error::ResonantNotSolvable { .. }
                | Error::NotFinite { .. }
                | Error::ContractionHypothesisFailed { .. }
                | Error::SequenceHypothesis { .. }
                | Error::ResonantParams { .. }
                | Error::NonlinearityHypothesis(_)
        )
    }

    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::InvalidInput(_) => "InvalidInput",
            Error::GridMismatch => "GridMismatch",
            Error::InvalidParams(_) => "InvalidParams",
            Error::ToleranceOutOfRange { .. } => "ToleranceOutOfRange",
            Error::ResonantParams { .. } => "ResonantParams",
            Error::DegenerateGap { .. } => "DegenerateGap",
            Error::ResonantNotSolvable { .. } => "ResonantNotSolvable",
            Error::NearSingularGrid { .. } => "NearSingularGrid",
            Error::NotFinite { .. } => "NotFinite",
            Error::ContractionHypothesisFailed { .. } => "ContractionHypothesisFailed",
            Error::MaxIterExceeded { .. } => "MaxIterExceeded",
            Error::SequenceHypothesis { .. } => "SequenceHypothesis",
            Error::UnknownBuiltin(_) => "UnknownBuiltin",
            Error::NonlinearityHypothesis(_) => "NonlinearityHypothesis",
            Error::VerificationFailed(_) => "VerificationFailed",
            Error::Config(_) => "Config",
            Error::ConfigParse { .. } => "ConfigParse",
            Error::ConfigField { .. } => "ConfigField",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }

    /// JSON error object written by the command line front end.
    pub fn to_json(&self) -> serde_json::Value {
        let mut obj = serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "hypothesis_violation": self.is_hypothesis_violation(),
        });
        let extra = match self {
            Error::ResonantNotSolvable {
                fhat_plus,
                fhat_minus,
                tol,
            } => Some(serde_json::json!({
                "violated": "orthogonality of f to exp(+-i sqrt(a) x)",
                "fhat_plus": [fhat_plus.re, fhat_plus.im],
                "fhat_minus": [fhat_minus.re, fhat_minus.im],
                "tol": tol,
            })),
            Error::NotFinite {
                ghat_plus,
                ghat_minus,
                tol,
            } => Some(serde_json::json!({
                "violated": "orthogonality of G to exp(+-i sqrt(a) x)",
                "ghat_plus": [ghat_plus.re, ghat_plus.im],
                "ghat_minus": [ghat_minus.re, ghat_minus.im],
                "tol": tol,
            })),
            Error::ContractionHypothesisFailed { q } => Some(serde_json::json!({
                "violated": "2 sqrt(pi) N l < 1",
                "q": q,
            })),
            Error::SequenceHypothesis { m, reason } => Some(serde_json::json!({
                "m": m,
                "violated": reason,
            })),
            Error::ResonantParams { n } => Some(serde_json::json!({ "n": n })),
            Error::NonlinearityHypothesis(reason) => Some(serde_json::json!({
                "violated": reason,
            })),
            Error::ConfigParse { line, column, .. } => Some(serde_json::json!({
                "line": line,
                "column": column,
            })),
            Error::ConfigField { field, .. } => Some(serde_json::json!({ "field": field })),
            _ => None,
        };
        if let (Some(extra), Some(map)) = (extra, obj.as_object_mut()) {
            map.insert("details".into(), extra);
        }
        obj
    }
}
