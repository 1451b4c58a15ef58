//! Convergence of solutions along sequences of right-hand sides or kernels.
//!
//! For `f_m → f` in L² (and `x f_m → x f` in L¹ at a resonant shift) the
//! solutions of `-u_m'' - a u_m(x - h) = f_m` converge to `u` in H². For
//! kernels `G_m → G` in L¹ with a uniform contraction margin
//! `2√π N_m l ≤ 1 - ε`, the fixed points converge in H² and the multipliers
//! `G_m^/λ_h`, `p² G_m^/λ_h` converge uniformly.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{assess_kernel, contraction_factor, kernel_orthogonality, stability_constant};
use crate::linear::{check_solvability, project_solvable, solve_linear, LinearOptions};
use crate::nonlinear::{fixed_point_solve, FixedPointOptions, Nonlinearity};
use crate::operator::{FredholmClass, ShiftParams};
use crate::spectral::{format_full, GridFunction, INV_SQRT_2PI};

pub const DEFAULT_TERMS: usize = 12;

/// Relative slack of the stability-type bounds.
const BOUND_SLACK: f64 = 0.1;
/// Absolute slack of the inequalities that hold exactly up to round-off.
const ABS_SLACK: f64 = 1e-9;
/// Rate-consistency factor: last/first solution gap against last/first input gap.
const RATE_FACTOR: f64 = 10.0;

pub type Generator = Arc<dyn Fn(usize) -> Result<GridFunction> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Rhs,
    Kernel,
}

#[derive(Clone)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub name: String,
    pub generator: Generator,
    pub limit: GridFunction,
    /// Number of terms, `m = 1..=terms`.
    pub terms: usize,
    /// Uniform contraction slack; required for kernel sequences.
    pub epsilon: Option<f64>,
}

impl std::fmt::Debug for SequenceSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SequenceSpec")
            .field("kind", &self.kind)
            .field("name", &self.name)
            .field("terms", &self.terms)
            .field("epsilon", &self.epsilon)
            .finish_non_exhaustive()
    }
}

impl SequenceSpec {
    pub fn new(
        kind: SequenceKind,
        name: impl Into<String>,
        generator: Generator,
        limit: GridFunction,
        terms: usize,
        epsilon: Option<f64>,
    ) -> Result<Self> {
        if terms == 0 {
            return Err(Error::InvalidInput("sequence needs at least one term".into()));
        }
        if let Some(e) = epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(Error::InvalidInput(format!("epsilon must lie in (0, 1), got {e}")));
            }
        }
        if kind == SequenceKind::Kernel && epsilon.is_none() {
            return Err(Error::InvalidInput("kernel sequences require epsilon".into()));
        }
        Ok(Self {
            kind,
            name: name.into(),
            generator,
            limit,
            terms,
            epsilon,
        })
    }

    pub fn member(&self, m: usize) -> Result<GridFunction> {
        let f = (self.generator)(m)?;
        if f.grid() != self.limit.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub m: usize,
    /// `‖f_m - f‖_{L²}` or `‖G_m - G‖_{L¹}`
    pub input_gap: f64,
    /// `‖x (f_m - f)‖_{L¹}` or `‖x (G_m - G)‖_{L¹}`
    pub weighted_gap: f64,
    pub solution_gap_h2: f64,
    pub solution_gap_l2: f64,
    /// `‖u_m'' - u''‖_{L²}`
    pub second_derivative_gap: f64,
    /// `sup |(G_m^ - G^)/λ_h|`
    pub multiplier_gap: f64,
    /// `sup |p² (G_m^ - G^)/λ_h|`
    pub multiplier_gap_p2: f64,
    /// `sup |G_m^ - G^|`
    pub ghat_gap: f64,
    /// `N_{a,h,m}`
    pub n_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    pub passed: bool,
    /// Largest `lhs / rhs` (or `lhs - rhs` for absolute checks) over the rows.
    pub worst: f64,
    pub detail: String,
}

impl BoundCheck {
    fn new(name: &str, passed: bool, worst: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            worst,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub kind: SequenceKind,
    pub name: String,
    #[serde(rename = "M")]
    pub terms: usize,
    pub epsilon: Option<f64>,
    pub class: FredholmClass,
    /// `N_{a,h}` of the limit kernel (kernel runs).
    #[serde(rename = "N")]
    pub limit_n: Option<f64>,
    pub limit_h2_norm: f64,
    /// Which CSV columns carry data; the others are written as zero.
    pub columns: Vec<String>,
    pub rows: Vec<ConvergenceRow>,
    pub checks: Vec<BoundCheck>,
    pub passed: bool,
}

impl ConvergenceTable {
    fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self
    }

    pub const CSV_HEADER: [&'static str; 6] = [
        "m",
        "input_gap",
        "weighted_gap",
        "solution_gap_h2",
        "multiplier_gap",
        "N_m",
    ];

    /// `m,input_gap,weighted_gap,solution_gap_h2,multiplier_gap,N_m`
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(Self::CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.m.to_string(),
                format_full(r.input_gap),
                format_full(r.weighted_gap),
                format_full(r.solution_gap_h2),
                format_full(r.multiplier_gap.max(r.multiplier_gap_p2)),
                format_full(r.n_m),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Smooth cutoff: 1 on `|x| ≤ m`, 0 on `|x| ≥ m + 1`, smootherstep in between.
pub fn mollified_cutoff(x: f64, m: f64) -> f64 {
    let t = (x.abs() - m).clamp(0.0, 1.0);
    1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Names accepted by [`builtin_sequence`].
pub const BUILTIN_SEQUENCES: [&str; 5] = ["constant", "scale", "add", "truncate", "alternating"];

/// Reproducible sequences converging to `limit`.
///
/// - `constant`: `f_m = f`.
/// - `scale`: `f_m = f (1 - 1/m)`; every gap equals the norm of `f` over `m`.
/// - `add`: `f_m = f + g/m`; gaps are the norms of `g` over `m`.
/// - `truncate`: `f_m = f χ_m`, `χ_m` a smooth cutoff at `|x| ∈ [m, m+1]`;
///   gaps are bounded by the tail of `f` beyond `m`.
/// - `alternating`: `f_m = f (1 + (-1)^m / (2m))`; gaps `‖f‖/(2m)`.
///
/// At a resonant shift the limit and every member are passed through
/// [`project_solvable`], which is linear, so the gaps keep their rates.
pub fn builtin_sequence(
    name: &str,
    kind: SequenceKind,
    limit: &GridFunction,
    perturbation: Option<&GridFunction>,
    params: &ShiftParams,
    terms: usize,
    epsilon: Option<f64>,
) -> Result<SequenceSpec> {
    let raw: Arc<dyn Fn(usize) -> Result<GridFunction> + Send + Sync> = {
        let f = limit.clone();
        match name {
            "constant" => Arc::new(move |_| Ok(f.clone())),
            "scale" => Arc::new(move |m| Ok(f.scale(1.0 - 1.0 / m as f64))),
            "add" => {
                let g = perturbation
                    .ok_or_else(|| Error::InvalidInput("sequence `add` needs a perturbation".into()))?
                    .clone();
                if g.grid() != f.grid() {
                    return Err(Error::GridMismatch);
                }
                Arc::new(move |m| f.add(&g.scale(1.0 / m as f64)))
            }
            "truncate" => Arc::new(move |m| Ok(f.multiply_by(|x| mollified_cutoff(x, m as f64)))),
            "alternating" => Arc::new(move |m| {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                Ok(f.scale(1.0 + sign / (2.0 * m as f64)))
            }),
            other => return Err(Error::UnknownBuiltin(format!("sequence {other}"))),
        }
    };
    let (limit, generator): (GridFunction, Generator) = if params.is_resonant() {
        let p = *params;
        (
            project_solvable(limit, params)?,
            Arc::new(move |m| project_solvable(&raw(m)?, &p)),
        )
    } else {
        (limit.clone(), raw)
    };
    SequenceSpec::new(kind, name, generator, limit, terms, epsilon)
}

fn fits(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + BOUND_SLACK) + ABS_SLACK * 1e-5
}

fn ratio(lhs: f64, rhs: f64) -> f64 {
    if rhs > 0.0 {
        lhs / rhs
    } else if lhs > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Net decrease and rate consistency of a gap column against the input gaps.
fn decay_checks(rows: &[ConvergenceRow], column: fn(&ConvergenceRow) -> f64, label: &str) -> Vec<BoundCheck> {
    let (first, last) = (&rows[0], &rows[rows.len() - 1]);
    let (g0, g1) = (column(first), column(last));
    let net = g1 <= g0 + ABS_SLACK * 1e-5;
    let sol_rate = ratio(g1, g0);
    let in_rate = ratio(last.input_gap, first.input_gap);
    let consistent = g0 == 0.0 || sol_rate <= RATE_FACTOR * in_rate + 1e-12;
    vec![
        BoundCheck::new(
            &format!("{label}_net_decrease"),
            net,
            g1 - g0,
            format!("last {g1:.3e} vs first {g0:.3e}"),
        ),
        BoundCheck::new(
            &format!("{label}_rate_consistency"),
            consistent,
            sol_rate,
            format!("last/first {sol_rate:.3e} vs input last/first {in_rate:.3e} x {RATE_FACTOR}"),
        ),
    ]
}

/// Solve every member and the limit of a right-hand-side sequence.
pub fn run_linear_sequence(
    spec: &SequenceSpec,
    params: &ShiftParams,
    opts: &LinearOptions,
) -> Result<ConvergenceTable> {
    if spec.kind != SequenceKind::Rhs {
        return Err(Error::InvalidInput(
            "run_linear_sequence needs a right-hand-side sequence".into(),
        ));
    }
    let class = params.classify()?;
    let resonant = class.is_resonant();
    let limit = solve_linear(&spec.limit, params, opts)?;

    let rows = (1..=spec.terms)
        .into_par_iter()
        .map(|m| {
            let f_m = spec.member(m)?;
            if resonant {
                let rep = check_solvability(&f_m, params, opts.orth_tol)?;
                if !rep.solvable {
                    return Err(Error::SequenceHypothesis {
                        m,
                        reason: format!(
                            "|f_m^(+sqrt a)| = {:.3e}, |f_m^(-sqrt a)| = {:.3e} exceed {:.1e}",
                            rep.fhat_plus.norm(),
                            rep.fhat_minus.norm(),
                            opts.orth_tol
                        ),
                    });
                }
            }
            let u_m = solve_linear(&f_m, params, opts)?.u;
            let df = f_m.sub(&spec.limit)?;
            let du = u_m.sub(&limit.u)?;
            Ok(ConvergenceRow {
                m,
                input_gap: df.l2_norm(),
                weighted_gap: if resonant { df.weighted_l1_norm() } else { 0.0 },
                solution_gap_h2: du.h2_norm(),
                solution_gap_l2: du.l2_norm(),
                second_derivative_gap: du.second_derivative().l2_norm(),
                multiplier_gap: 0.0,
                multiplier_gap_p2: 0.0,
                ghat_gap: 0.0,
                n_m: 0.0,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let a = params.a();
    let mut checks = Vec::new();
    if let FredholmClass::NonResonant { alpha } = class {
        let scale = 1.0 / alpha.sqrt();
        let worst = rows
            .iter()
            .map(|r| ratio(r.solution_gap_l2, r.input_gap * scale))
            .fold(0.0, f64::max);
        checks.push(BoundCheck::new(
            "l2_stability",
            rows.iter().all(|r| fits(r.solution_gap_l2, r.input_gap * scale)),
            worst,
            format!("|u_m - u|_L2 <= |f_m - f|_L2 / sqrt(alpha) (1 + {BOUND_SLACK}), alpha = {alpha:.6}"),
        ));
    }
    let excess = rows
        .iter()
        .map(|r| r.second_derivative_gap - (a * r.solution_gap_l2 + r.input_gap))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(BoundCheck::new(
        "second_derivative",
        excess <= ABS_SLACK,
        excess,
        format!("|u_m'' - u''| <= a |u_m - u| + |f_m - f| + {ABS_SLACK:.0e}"),
    ));
    let monotone = rows
        .windows(2)
        .all(|w| w[1].solution_gap_h2 <= w[0].solution_gap_h2 + ABS_SLACK * 1e-3);
    checks.push(BoundCheck::new(
        "solution_gap_monotone",
        monotone,
        rows.windows(2)
            .map(|w| w[1].solution_gap_h2 - w[0].solution_gap_h2)
            .fold(f64::NEG_INFINITY, f64::max),
        "solution H2 gaps are non-increasing in m",
    ));
    checks.extend(decay_checks(&rows, |r| r.solution_gap_h2, "solution_gap"));
    if resonant {
        checks.extend(decay_checks(&rows, |r| r.weighted_gap, "weighted_gap"));
    }

    let mut columns = vec!["m", "input_gap", "solution_gap_h2"];
    if resonant {
        columns.push("weighted_gap");
    }
    Ok(ConvergenceTable {
        kind: spec.kind,
        name: spec.name.clone(),
        terms: spec.terms,
        epsilon: spec.epsilon,
        class,
        limit_n: None,
        limit_h2_norm: limit.u.h2_norm(),
        columns: columns.into_iter().map(String::from).collect(),
        rows,
        checks,
        passed: false,
    }
    .finish())
}

/// Fixed points for every kernel `G_m` and the limit `G`, with multiplier gaps.
pub fn run_kernel_sequence(
    spec: &SequenceSpec,
    f: &Nonlinearity,
    params: &ShiftParams,
    opts: &FixedPointOptions,
) -> Result<ConvergenceTable> {
    if spec.kind != SequenceKind::Kernel {
        return Err(Error::InvalidInput(
            "run_kernel_sequence needs a kernel sequence".into(),
        ));
    }
    let epsilon = spec
        .epsilon
        .ok_or_else(|| Error::InvalidInput("kernel sequences require epsilon".into()))?;
    let class = params.classify()?;
    let resonant = class.is_resonant();
    let tol = opts.linear.orth_tol;
    let l = f.lipschitz();

    let limit_report = stability_constant(&spec.limit, params, tol)?;
    let limit_n = limit_report.n.unwrap_or(f64::INFINITY);
    let limit = fixed_point_solve(&spec.limit, f, params, opts)?;

    let rows = (1..=spec.terms)
        .into_par_iter()
        .map(|m| {
            let g_m = spec.member(m)?;
            if resonant {
                let (plus, minus, ok) = kernel_orthogonality(&g_m, params.a(), tol);
                if !ok {
                    return Err(Error::SequenceHypothesis {
                        m,
                        reason: format!(
                            "|G_m^(+sqrt a)| = {:.3e}, |G_m^(-sqrt a)| = {:.3e} exceed {tol:.1e}",
                            plus.norm(),
                            minus.norm()
                        ),
                    });
                }
            }
            let n_m = stability_constant(&g_m, params, tol)?.n.unwrap_or(f64::INFINITY);
            let q_m = contraction_factor(n_m, l);
            if q_m > 1.0 - epsilon {
                return Err(Error::SequenceHypothesis {
                    m,
                    reason: format!("2 sqrt(pi) N_m l = {q_m:.6} exceeds 1 - epsilon = {}", 1.0 - epsilon),
                });
            }
            let u_m = fixed_point_solve(&g_m, f, params, opts)?.u;
            let dg = g_m.sub(&spec.limit)?;
            let diff = assess_kernel(&dg, params, 2.0 * tol)?;
            let du = u_m.sub(&limit.u)?;
            Ok(ConvergenceRow {
                m,
                input_gap: dg.l1_norm(),
                weighted_gap: if resonant { dg.weighted_l1_norm() } else { 0.0 },
                solution_gap_h2: du.h2_norm(),
                solution_gap_l2: du.l2_norm(),
                second_derivative_gap: du.second_derivative().l2_norm(),
                multiplier_gap: diff.sup1,
                multiplier_gap_p2: diff.sup2,
                ghat_gap: diff.ghat_sup,
                n_m,
            })
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let a = params.a();
    let mut checks = Vec::new();
    let worst_q = rows.iter().map(|r| contraction_factor(r.n_m, l)).fold(0.0, f64::max);
    checks.push(BoundCheck::new(
        "uniform_margin",
        worst_q <= 1.0 - epsilon,
        worst_q,
        format!("2 sqrt(pi) N_m l <= 1 - epsilon = {}", 1.0 - epsilon),
    ));
    let q_limit = contraction_factor(limit_n, l);
    checks.push(BoundCheck::new(
        "limit_margin",
        q_limit <= 1.0 - epsilon,
        q_limit,
        format!("2 sqrt(pi) N l = {q_limit:.6} <= 1 - epsilon"),
    ));
    if let FredholmClass::NonResonant { alpha } = class {
        let scale = INV_SQRT_2PI / alpha.sqrt();
        let worst_n = rows
            .iter()
            .map(|r| ratio((r.n_m - limit_n).abs(), r.input_gap * scale))
            .fold(0.0, f64::max);
        checks.push(BoundCheck::new(
            "n_m_convergence",
            rows.iter().all(|r| fits((r.n_m - limit_n).abs(), r.input_gap * scale)),
            worst_n,
            format!("|N_m - N| <= |G_m - G|_L1 / sqrt(2 pi alpha) (1 + {BOUND_SLACK})"),
        ));
        let worst_mult = rows
            .iter()
            .map(|r| ratio(r.multiplier_gap, r.input_gap * scale))
            .fold(0.0, f64::max);
        checks.push(BoundCheck::new(
            "multiplier_bound",
            rows.iter().all(|r| fits(r.multiplier_gap, r.input_gap * scale)),
            worst_mult,
            format!("sup |(G_m^ - G^)/lambda| <= |G_m - G|_L1 / sqrt(2 pi alpha) (1 + {BOUND_SLACK})"),
        ));
    }
    let tri = rows
        .iter()
        .map(|r| r.multiplier_gap_p2 - (a * r.multiplier_gap + r.ghat_gap))
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(BoundCheck::new(
        "triangle_consistency",
        tri <= ABS_SLACK,
        tri,
        format!("p2-quotient gap <= a * plain gap + sup |G_m^ - G^| + {ABS_SLACK:.0e}"),
    ));
    if resonant {
        let (plus, minus, _) = kernel_orthogonality(&spec.limit, a, tol);
        let at_limit = plus.norm().max(minus.norm());
        let worst = rows
            .iter()
            .map(|r| at_limit - (r.input_gap * INV_SQRT_2PI + tol))
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(BoundCheck::new(
            "limit_orthogonality",
            worst <= 0.0,
            worst,
            format!("|G^(+-sqrt a)| = {at_limit:.3e} <= |G_m - G|_L1 / sqrt(2 pi) + tol"),
        ));
        checks.extend(decay_checks(&rows, |r| r.weighted_gap, "weighted_gap"));
    }
    checks.extend(decay_checks(&rows, |r| r.solution_gap_h2, "solution_gap"));
    checks.extend(decay_checks(
        &rows,
        |r| r.multiplier_gap.max(r.multiplier_gap_p2),
        "multiplier_gap",
    ));

    let mut columns = vec!["m", "input_gap", "solution_gap_h2", "multiplier_gap", "N_m"];
    if resonant {
        columns.push("weighted_gap");
    }
    Ok(ConvergenceTable {
        kind: spec.kind,
        name: spec.name.clone(),
        terms: spec.terms,
        epsilon: Some(epsilon),
        class,
        limit_n: Some(limit_n),
        limit_h2_norm: limit.u.h2_norm(),
        columns: columns.into_iter().map(String::from).collect(),
        rows,
        checks,
        passed: false,
    }
    .finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(40.0, 2048).unwrap()
    }

    fn gauss(g: Grid, c: f64, s: f64) -> GridFunction {
        GridFunction::from_real_fn(g, |x| c * (-x * x / (2.0 * s * s)).exp()).unwrap()
    }

    fn tanh_forcing(g: Grid) -> Nonlinearity {
        Nonlinearity::new(
            "tanh_forcing",
            Arc::new(|u: f64, x: f64| 0.1 * u.tanh() + (-x * x).exp()),
            0.1,
            GridFunction::from_real_fn(g, |x| (-x * x).exp()).unwrap(),
            0.1,
        )
        .unwrap()
    }

    fn show(t: &ConvergenceTable) -> String {
        serde_json::to_string_pretty(&t.checks).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(mollified_cutoff(2.0, 3.0), 1.0);
        assert_eq!(mollified_cutoff(-4.5, 3.0), 0.0);
        assert!((mollified_cutoff(3.5, 3.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn scale_sequence_gaps_are_homogeneous() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        let spec = builtin_sequence("scale", SequenceKind::Rhs, &f, None, &p, 12, None).unwrap();
        let t = run_linear_sequence(&spec, &p, &LinearOptions::default()).unwrap();
        assert!(t.passed, "{}", show(&t));
        for r in &t.rows {
            assert!((r.input_gap - f.l2_norm() / r.m as f64).abs() < 1e-14);
        }
        let c = t.rows[0].solution_gap_h2 / t.rows[0].input_gap;
        for r in &t.rows {
            assert!((r.solution_gap_h2 / r.input_gap - c).abs() < 1e-9 * c);
        }
        assert_eq!(t.rows[0].weighted_gap, 0.0);
    }

    #[test]
    fn constant_sequence_has_zero_gaps() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let f = gauss(g, 1.0, 1.0);
        let spec = builtin_sequence("constant", SequenceKind::Rhs, &f, None, &p, 4, None).unwrap();
        let t = run_linear_sequence(&spec, &p, &LinearOptions::default()).unwrap();
        assert!(t.passed, "{}", show(&t));
        assert!(t.rows.iter().all(|r| r.input_gap == 0.0 && r.solution_gap_h2 == 0.0));

        let ks = builtin_sequence(
            "constant",
            SequenceKind::Kernel,
            &gauss(g, 0.2, 1.0),
            None,
            &p,
            3,
            Some(0.5),
        )
        .unwrap();
        let kt = run_kernel_sequence(&ks, &tanh_forcing(g), &p, &FixedPointOptions::default()).unwrap();
        assert!(kt.passed, "{}", show(&kt));
        for r in &kt.rows {
            assert_eq!(r.input_gap, 0.0);
            assert_eq!(r.solution_gap_h2, 0.0);
            assert_eq!(r.n_m, kt.limit_n.unwrap());
        }
    }

    #[test]
    fn truncation_gap_below_tail_integral() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let f = GridFunction::from_real_fn(g, |x| (-x * x).exp()).unwrap();
        let spec = builtin_sequence("truncate", SequenceKind::Rhs, &f, None, &p, 5, None).unwrap();
        for m in 1..=5 {
            let gap = spec.member(m).unwrap().sub(&f).unwrap().l2_norm();
            // 2 ∫_m^∞ e^{-x²} dx by the midpoint rule
            let n = 200_000;
            let dx = 12.0 / n as f64;
            let tail: f64 = (0..n)
                .map(|i| (-(m as f64 + (i as f64 + 0.5) * dx).powi(2)).exp() * dx)
                .sum();
            assert!(gap <= 2.0 * tail, "m = {m}: {gap} > {}", 2.0 * tail);
        }
    }

    #[test]
    fn resonant_projected_sequence_converges() {
        let g = Grid::new(13.0 * PI, 2048).unwrap();
        let p = ShiftParams::new(1.0, 2.0 * PI).unwrap();
        let f = gauss(g, 1.0, 1.0);
        let pert = GridFunction::from_real_fn(g, |x| x * (-(x - 0.5).powi(2)).exp()).unwrap();
        let spec = builtin_sequence("add", SequenceKind::Rhs, &f, Some(&pert), &p, 12, None).unwrap();
        let t = run_linear_sequence(&spec, &p, &LinearOptions::default()).unwrap();
        assert!(t.passed, "{}", show(&t));
        assert!(t.rows[11].weighted_gap < t.rows[0].weighted_gap / 6.0);
        assert!(t.check("weighted_gap_net_decrease").unwrap().passed);
    }

    #[test]
    fn resonant_member_violation_is_reported() {
        let g = grid();
        let p = ShiftParams::new(1.0, 2.0 * PI).unwrap();
        let f = gauss(g, 1.0, 1.0);
        let raw: Generator = {
            let f = f.clone();
            Arc::new(move |m| Ok(f.scale(1.0 / m as f64)))
        };
        let limit = project_solvable(&f, &p).unwrap().scale(0.0);
        let spec = SequenceSpec::new(SequenceKind::Rhs, "raw", raw, limit, 3, None).unwrap();
        let err = run_linear_sequence(&spec, &p, &LinearOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SequenceHypothesis { m: 1, .. }), "{err}");
        assert!(err.is_hypothesis_violation());
    }

    #[test]
    fn alternating_kernel_sequence() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let kernel = gauss(g, 0.2, 1.0);
        let spec = builtin_sequence("alternating", SequenceKind::Kernel, &kernel, None, &p, 12, Some(0.5)).unwrap();
        let t = run_kernel_sequence(&spec, &tanh_forcing(g), &p, &FixedPointOptions::default()).unwrap();
        assert!(t.passed, "{}", show(&t));
        let n = t.limit_n.unwrap();
        for r in &t.rows {
            let rel = (r.n_m - n).abs() / (n / (2.0 * r.m as f64));
            assert!((rel - 1.0).abs() < 1e-9, "m = {}: {rel}", r.m);
        }
    }

    #[test]
    fn kernel_margin_violation_is_reported() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let spec = builtin_sequence(
            "alternating",
            SequenceKind::Kernel,
            &gauss(g, 0.3, 1.0),
            None,
            &p,
            3,
            Some(0.9),
        )
        .unwrap();
        // q_1 = 0.061 fits 1 - ε = 0.1, q_2 = 0.152 does not
        let err = run_kernel_sequence(&spec, &tanh_forcing(g), &p, &FixedPointOptions::default()).unwrap_err();
        assert!(matches!(err, Error::SequenceHypothesis { m: 2, .. }), "{err}");
    }

    #[test]
    fn spec_validation() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let f = gauss(g, 1.0, 1.0);
        assert!(builtin_sequence("nope", SequenceKind::Rhs, &f, None, &p, 3, None).is_err());
        assert!(builtin_sequence("add", SequenceKind::Rhs, &f, None, &p, 3, None).is_err());
        assert!(builtin_sequence("scale", SequenceKind::Kernel, &f, None, &p, 3, None).is_err());
        assert!(builtin_sequence("scale", SequenceKind::Rhs, &f, None, &p, 0, None).is_err());
        assert!(builtin_sequence("scale", SequenceKind::Kernel, &f, None, &p, 3, Some(1.0)).is_err());
    }

    #[test]
    fn csv_layout() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let f = gauss(g, 1.0, 1.0);
        let spec = builtin_sequence("scale", SequenceKind::Rhs, &f, None, &p, 2, None).unwrap();
        let t = run_linear_sequence(&spec, &p, &LinearOptions::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "m,input_gap,weighted_gap,solution_gap_h2,multiplier_gap,N_m");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with("1,"));
    }
}
