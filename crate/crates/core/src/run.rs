//! Command runner behind the `shiftsolve` binary.
//!
//! Each command writes its artifacts into the output directory and returns a
//! one-line summary. Exit codes: 0 success, 2 hypothesis violation, 1 anything
//! else; failures are written as JSON error objects.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::catalog::{FunctionSpec, NonlinearitySpec};
use crate::config::{parse_config, Command, Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::kernel::{assess_kernel, contraction_factor, contraction_margin, KernelReport};
use crate::linear::{check_solvability, solve_linear, LinearOptions};
use crate::nonlinear::{fixed_point_solve, support_overlap, FixedPointOptions, FixedPointResult, Nonlinearity};
use crate::operator::{gap_minimizer, symbol, FredholmClass, ShiftParams};
use crate::sequence::{builtin_sequence, run_kernel_sequence, run_linear_sequence, ConvergenceTable, SequenceKind};
use crate::spectral::{format_full, Grid, GridFunction};

/// Samples per sampled growth/Lipschitz check of `F`.
const HYPOTHESIS_SAMPLES: usize = 2000;

/// Command line overrides of config values.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
struct Header {
    command: &'static str,
    seed: u64,
    a: f64,
    h: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<Grid>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    res: Resolved,
    base: PathBuf,
    out: PathBuf,
    files: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn header(&self) -> Header {
        Header {
            command: self.res.command.as_str(),
            seed: self.res.seed,
            a: self.res.params.a(),
            h: self.res.params.h(),
            grid: self.res.grid,
        }
    }

    fn grid(&self) -> Grid {
        self.res.grid.expect("grid checked by resolve")
    }

    fn params(&self) -> &ShiftParams {
        &self.res.params
    }

    fn function(&self, spec: &Option<FunctionSpec>) -> Result<GridFunction> {
        spec.as_ref()
            .expect("presence checked by resolve")
            .build(self.grid(), &self.base)
    }

    fn nonlinearity(&self) -> Result<Nonlinearity> {
        let spec: &NonlinearitySpec = self.cfg.nonlinearity.as_ref().expect("presence checked by resolve");
        let f = spec.build(self.grid())?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.res.seed);
        f.verify_growth(&mut rng, HYPOTHESIS_SAMPLES)?;
        f.verify_lipschitz(&mut rng, HYPOTHESIS_SAMPLES)?;
        Ok(f)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.files.push(p.clone());
        p
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        fs::write(p, text)?;
        Ok(())
    }

    fn write_function(&mut self, name: &str, f: &GridFunction) -> Result<()> {
        let p = self.path(name);
        f.write_csv(BufWriter::new(File::create(p)?))
    }
}

/// Where a config's outputs go: `--out`, else `output_dir`, else `.`.
pub fn output_dir(cfg: Option<&RunConfig>, overrides: &Overrides) -> PathBuf {
    overrides
        .out
        .clone()
        .or_else(|| cfg.and_then(|c| c.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Run `command` on a parsed config. CSV inputs resolve against `base`.
pub fn run(command: Command, cfg: &RunConfig, base: &Path, overrides: &Overrides) -> Result<Outcome> {
    let mut res = cfg.resolve(command)?;
    if let Some(seed) = overrides.seed {
        res.seed = seed;
    }
    let out = output_dir(Some(cfg), overrides);
    fs::create_dir_all(&out)?;
    let mut ctx = Ctx {
        cfg,
        res,
        base: base.to_path_buf(),
        out,
        files: Vec::new(),
    };
    let summary = match command {
        Command::Spectrum => spectrum(&mut ctx)?,
        Command::SolveLinear => solve_linear_cmd(&mut ctx)?,
        Command::SolveNonlinear => solve_nonlinear_cmd(&mut ctx)?,
        Command::Constants => constants(&mut ctx)?,
        Command::Sequence => sequence(&mut ctx)?,
    };
    Ok(Outcome {
        summary,
        files: ctx.files,
    })
}

/// The gap constant is a sampled minimum, not a proven bound.
const ALPHA_SOURCE: &str = "sampled_estimate";

#[derive(Serialize)]
struct SpectrumReport {
    #[serde(flatten)]
    header: Header,
    class: FredholmClass,
    alpha: Option<f64>,
    alpha_source: &'static str,
    gap_minimizer: Option<f64>,
    critical_frequency: f64,
    p_max: f64,
    samples: usize,
    min_mod_sq_sampled: f64,
}

fn spectrum(ctx: &mut Ctx) -> Result<String> {
    let params = *ctx.params();
    let (p_max, n) = (ctx.res.p_max, ctx.res.samples);
    let class = params.classify()?;
    let minimizer = match class {
        FredholmClass::NonResonant { .. } => Some(gap_minimizer(&params)?.0),
        FredholmClass::Resonant { .. } => None,
    };
    let path = ctx.path("spectrum.csv");
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["p", "re_lambda", "im_lambda", "mod_sq"])?;
    let mut min_mod_sq = f64::INFINITY;
    for k in 0..n {
        // integer numerator keeps round values exact, e.g. p = 1 for p_max = 10, n = 2001
        let num = (2 * k) as i64 - (n - 1) as i64;
        let p = p_max * num as f64 / (n - 1) as f64;
        let lam = symbol(p, &params);
        let m = lam.norm_sqr();
        min_mod_sq = min_mod_sq.min(m);
        w.write_record([format_full(p), format_full(lam.re), format_full(lam.im), format_full(m)])?;
    }
    w.flush()?;
    let report = SpectrumReport {
        header: ctx.header(),
        class,
        alpha: class.alpha(),
        alpha_source: ALPHA_SOURCE,
        gap_minimizer: minimizer,
        critical_frequency: params.critical_frequency(),
        p_max,
        samples: n,
        min_mod_sq_sampled: min_mod_sq,
    };
    ctx.write_json("spectrum.json", &report)?;
    Ok(match class {
        FredholmClass::NonResonant { alpha } => format!("spectrum: non-resonant, alpha = {alpha:.10}"),
        FredholmClass::Resonant { n } => format!(
            "spectrum: resonant, n = {n}, symbol vanishes at p = +-{}",
            params.critical_frequency()
        ),
    })
}

#[derive(Serialize)]
struct SolveReport {
    #[serde(flatten)]
    header: Header,
    class: FredholmClass,
    solvable: bool,
    fhat_plus: [f64; 2],
    fhat_minus: [f64; 2],
    tol_orth: f64,
    weighted_l1_f: f64,
    residual_l2: Option<f64>,
    h2_norm: Option<f64>,
    l2_norm: Option<f64>,
    singular_bins: usize,
}

fn solve_linear_cmd(ctx: &mut Ctx) -> Result<String> {
    let params = *ctx.params();
    let f = ctx.function(&ctx.cfg.f)?;
    ctx.write_function("f.csv", &f)?;
    let tol = ctx.res.tol_orth;
    let check = check_solvability(&f, &params, tol)?;
    let mut report = SolveReport {
        header: ctx.header(),
        class: check.class,
        solvable: check.solvable,
        fhat_plus: [check.fhat_plus.re, check.fhat_plus.im],
        fhat_minus: [check.fhat_minus.re, check.fhat_minus.im],
        tol_orth: tol,
        weighted_l1_f: check.weighted_l1,
        residual_l2: None,
        h2_norm: None,
        l2_norm: None,
        singular_bins: 0,
    };
    if !check.solvable {
        ctx.write_json("solve_report.json", &report)?;
        return Err(Error::ResonantNotSolvable {
            fhat_plus: check.fhat_plus,
            fhat_minus: check.fhat_minus,
            tol,
        });
    }
    let opts = LinearOptions {
        orth_tol: tol,
        ..LinearOptions::default()
    };
    let sol = solve_linear(&f, &params, &opts)?;
    ctx.write_function("solution.csv", &sol.u)?;
    report.residual_l2 = Some(sol.residual_l2);
    report.h2_norm = Some(sol.h2_norm_u);
    report.l2_norm = Some(sol.u.l2_norm());
    report.singular_bins = sol.singular_bins;
    ctx.write_json("solve_report.json", &report)?;
    Ok(format!(
        "solve-linear: residual {:.3e}, |u|_H2 = {:.10}",
        sol.residual_l2, sol.h2_norm_u
    ))
}

#[derive(Serialize)]
struct NonlinearityInfo {
    name: String,
    k: f64,
    l: f64,
}

impl From<&Nonlinearity> for NonlinearityInfo {
    fn from(f: &Nonlinearity) -> Self {
        Self {
            name: f.name().to_string(),
            k: f.growth(),
            l: f.lipschitz(),
        }
    }
}

#[derive(Serialize)]
struct FixedPointReport {
    #[serde(flatten)]
    header: Header,
    nonlinearity: NonlinearityInfo,
    tol_h2: f64,
    max_iter: usize,
    support_overlap: f64,
    #[serde(flatten)]
    result: FixedPointResult,
}

fn solve_nonlinear_cmd(ctx: &mut Ctx) -> Result<String> {
    let params = *ctx.params();
    let g = ctx.function(&ctx.cfg.kernel)?;
    let f = ctx.nonlinearity()?;
    let v0 = match &ctx.cfg.v0 {
        Some(spec) => Some(spec.build(ctx.grid(), &ctx.base)?),
        None => None,
    };
    let opts = FixedPointOptions {
        v0,
        tol_h2: ctx.res.tol_h2,
        max_iter: ctx.res.max_iter,
        linear: LinearOptions {
            orth_tol: ctx.res.tol_orth,
            ..LinearOptions::default()
        },
    };
    let overlap = support_overlap(&g, &f.at_zero(ctx.grid())?, ctx.res.tol_support)?;
    let result = fixed_point_solve(&g, &f, &params, &opts)?;
    ctx.write_function("solution.csv", &result.u)?;
    let summary = format!(
        "solve-nonlinear: {} iterations, q = {:.6}, residual {:.3e}, |u|_H2 = {:.10}",
        result.iterations, result.q_bound, result.residual_l2, result.h2_norm_u
    );
    let report = FixedPointReport {
        header: ctx.header(),
        nonlinearity: (&f).into(),
        tol_h2: opts.tol_h2,
        max_iter: opts.max_iter,
        support_overlap: overlap,
        result,
    };
    ctx.write_json("fixed_point.json", &report)?;
    Ok(summary)
}

#[derive(Serialize)]
struct ConstantsReport {
    #[serde(flatten)]
    header: Header,
    alpha: Option<f64>,
    alpha_source: &'static str,
    tol_orth: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nonlinearity: Option<NonlinearityInfo>,
    /// `2√π N l`
    #[serde(skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contraction_margin: Option<f64>,
    #[serde(flatten)]
    kernel: KernelReport,
}

fn constants(ctx: &mut Ctx) -> Result<String> {
    let params = *ctx.params();
    let g = ctx.function(&ctx.cfg.kernel)?;
    let tol = ctx.res.tol_orth;
    let kernel = assess_kernel(&g, &params, tol)?;
    let f = match ctx.cfg.nonlinearity {
        Some(_) => Some(ctx.nonlinearity()?),
        None => None,
    };
    let n = kernel.n;
    let (q, margin) = match (&f, n) {
        (Some(f), Some(n)) => (
            Some(contraction_factor(n, f.lipschitz())),
            Some(contraction_margin(n, f.lipschitz())),
        ),
        _ => (None, None),
    };
    let report = ConstantsReport {
        header: ctx.header(),
        alpha: kernel.class.alpha(),
        alpha_source: ALPHA_SOURCE,
        tol_orth: tol,
        nonlinearity: f.as_ref().map(Into::into),
        q,
        contraction_margin: margin,
        kernel,
    };
    ctx.write_json("kernel_report.json", &report)?;
    let kernel = &report.kernel;
    match n {
        None => Err(Error::NotFinite {
            ghat_plus: kernel.ghat_plus,
            ghat_minus: kernel.ghat_minus,
            tol,
        }),
        Some(n) => Ok(match q {
            Some(q) => format!("constants: N = {n:.12}, q = 2 sqrt(pi) N l = {q:.6}"),
            None => format!("constants: N = {n:.12}"),
        }),
    }
}

#[derive(Serialize)]
struct SequenceReport {
    #[serde(flatten)]
    header: Header,
    #[serde(flatten)]
    table: ConvergenceTable,
}

fn sequence(ctx: &mut Ctx) -> Result<String> {
    let params = *ctx.params();
    let cfg = ctx.cfg;
    let name = cfg.sequence.as_deref().expect("checked by resolve");
    let kind = cfg.kind.unwrap_or(SequenceKind::Rhs);
    let perturbation = match &cfg.g {
        Some(spec) => Some(spec.build(ctx.grid(), &ctx.base)?),
        None => None,
    };
    let linear = LinearOptions {
        orth_tol: ctx.res.tol_orth,
        ..LinearOptions::default()
    };
    let table = match kind {
        SequenceKind::Rhs => {
            let f = ctx.function(&cfg.f)?;
            let spec = builtin_sequence(
                name,
                kind,
                &f,
                perturbation.as_ref(),
                &params,
                ctx.res.terms,
                cfg.epsilon,
            )?;
            run_linear_sequence(&spec, &params, &linear)?
        }
        SequenceKind::Kernel => {
            let g = ctx.function(&cfg.kernel)?;
            let f = ctx.nonlinearity()?;
            let spec = builtin_sequence(
                name,
                kind,
                &g,
                perturbation.as_ref(),
                &params,
                ctx.res.terms,
                cfg.epsilon,
            )?;
            let opts = FixedPointOptions {
                v0: None,
                tol_h2: ctx.res.tol_h2,
                max_iter: ctx.res.max_iter,
                linear,
            };
            run_kernel_sequence(&spec, &f, &params, &opts)?
        }
    };
    let path = ctx.path("sequence.csv");
    table.write_csv(BufWriter::new(File::create(path)?))?;
    let failed: Vec<String> = table
        .checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    let passed = table.checks.len() - failed.len();
    let total = table.checks.len();
    ctx.write_json(
        "sequence.json",
        &SequenceReport {
            header: ctx.header(),
            table,
        },
    )?;
    if !failed.is_empty() {
        return Err(Error::VerificationFailed(failed.join(", ")));
    }
    Ok(format!("sequence: {passed}/{total} bound checks passed"))
}

/// Exit status for a run result.
pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(_) => 0,
        Err(e) if e.is_hypothesis_violation() => 2,
        Err(_) => 1,
    }
}

/// Error object written for a failed run; carries the seed when known.
pub fn error_json(err: &Error, command: Command, seed: Option<u64>) -> serde_json::Value {
    let mut v = err.to_json();
    if let Some(map) = v.as_object_mut() {
        map.insert("command".into(), command.as_str().into());
        if let Some(seed) = seed {
            map.insert("seed".into(), seed.into());
        }
    }
    v
}

/// Parse, run and report; returns the process exit code.
///
/// The summary line goes to stdout. On failure the error object goes to
/// stderr and, when the output directory is known, to `error.json`.
pub fn execute(command: Command, config: &Path, overrides: &Overrides) -> i32 {
    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let (cfg, result) = match parse_config(config) {
        Ok(cfg) => {
            let result = run(command, &cfg, &base, overrides);
            (Some(cfg), result)
        }
        Err(e) => (None, Err(e)),
    };
    let code = exit_code(&result);
    match result {
        Ok(outcome) => println!("{}", outcome.summary),
        Err(err) => {
            let cfg = cfg.as_ref();
            let seed = overrides.seed.or_else(|| cfg.map(|c| c.seed.unwrap_or(0)));
            let obj = error_json(&err, command, seed);
            eprintln!("{obj}");
            let dir = output_dir(cfg, overrides);
            if fs::create_dir_all(&dir).is_ok() {
                let text = serde_json::to_string_pretty(&obj).unwrap_or_default() + "\n";
                if let Err(e) = fs::write(dir.join("error.json"), text) {
                    log::warn!("could not write error.json: {e}");
                }
            }
        }
    }
    code
}
