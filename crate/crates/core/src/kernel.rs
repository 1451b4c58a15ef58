//! Stability constant
//!
//! ```text
//! N_{a,h} = max( sup_p |G^(p) / (p² - a e^{-iph})|,  sup_p |p² G^(p) / (p² - a e^{-iph})| )
//! ```
//!
//! of a convolution kernel `G`, its finiteness criterion and the contraction
//! margin `1 - 2√π N l` of the nonlinear fixed-point map.
//!
//! Suprema are taken over the grid frequencies (the resolvable band) plus
//! local refinement around the largest grid values. In the resonant case the
//! zeros of the symbol at `±√a` are removable when `G^(±√a) = 0`; bins on a
//! zero carry the limit `G^'(p) / λ_h'(p)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear::{ser_complex, SINGULAR_GUARD};
use crate::operator::{symbol, symbol_derivative, FredholmClass, ShiftParams};
use crate::spectral::{GridFunction, INV_SQRT_2PI};

/// Golden-section steps per refined peak.
const REFINE_STEPS: usize = 60;

/// Number of largest grid maxima refined for each quotient.
const REFINE_PEAKS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelReport {
    /// `N_{a,h}`; `None` when the constant is infinite.
    #[serde(rename = "N")]
    pub n: Option<f64>,
    /// `sup |G^ / λ_h|`
    pub sup1: f64,
    /// `sup |p² G^ / λ_h|`
    pub sup2: f64,
    pub finite: bool,
    #[serde(serialize_with = "ser_complex")]
    pub ghat_plus: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub ghat_minus: Complex64,
    pub l1_norm_g: f64,
    pub weighted_l1_g: f64,
    /// `sup |G^|` over the same sample set as `sup1`, `sup2`.
    pub ghat_sup: f64,
    /// Largest relative violation of `p² G^/λ = G^ + a e^{-iph} G^/λ` over the samples.
    pub identity_residual: f64,
    /// `sup2 ≤ ghat_sup + a sup1`.
    pub identity_bound_holds: bool,
    /// Resonant case: `‖xG‖_{L¹} / √(2πa)`, an upper bound for the quotient near `±√a`.
    pub singular_cap: Option<f64>,
    /// Resonant case: largest quotient value in bins sitting on a zero of the symbol.
    pub singular_peak: Option<f64>,
    /// Largest `|G^|` over the outer 10% of the band, relative to `ghat_sup`.
    pub tail_ghat: f64,
    pub class: FredholmClass,
}

/// `G^(±√a)` and whether both are within `tol` of zero.
pub fn kernel_orthogonality(g: &GridFunction, a: f64, tol: f64) -> (Complex64, Complex64, bool) {
    let k = a.sqrt();
    let plus = g.transform_at(k);
    let minus = g.transform_at(-k);
    (plus, minus, plus.norm() <= tol && minus.norm() <= tol)
}

struct Quotients {
    ghat: Complex64,
    plain: Complex64,
    weighted: Complex64,
    residual: f64,
    singular: bool,
}

fn quotients(g: &GridFunction, ghat: Complex64, p: f64, params: &ShiftParams, resonant: bool) -> Quotients {
    let lam = symbol(p, params);
    let twist = params.a() * Complex64::from_polar(1.0, -p * params.h());
    if resonant && lam.norm() < SINGULAR_GUARD * params.a() {
        let plain = g.transform_derivative_at(p) / symbol_derivative(p, params);
        return Quotients {
            ghat,
            plain,
            weighted: plain * p * p,
            residual: (plain * p * p - ghat - twist * plain).norm(),
            singular: true,
        };
    }
    let plain = ghat / lam;
    let weighted = ghat * (p * p) / lam;
    Quotients {
        ghat,
        plain,
        weighted,
        residual: (weighted - ghat - twist * plain).norm(),
        singular: false,
    }
}

/// Full report, including the non-finite case (`finite = false`, `n = None`).
pub fn assess_kernel(g: &GridFunction, params: &ShiftParams, tol: f64) -> Result<KernelReport> {
    let class = params.classify()?;
    let resonant = class.is_resonant();
    let (ghat_plus, ghat_minus, orthogonal) = kernel_orthogonality(g, params.a(), tol);
    let l1_norm_g = g.l1_norm();
    let weighted_l1_g = g.weighted_l1_norm();
    let singular_cap = resonant.then(|| weighted_l1_g * INV_SQRT_2PI / params.a().sqrt());

    let grid = *g.grid();
    let spectrum = g.forward_transform();
    let band = grid.band_limit();
    let mut tail = 0.0f64;
    for (j, v) in spectrum.values().iter().enumerate() {
        if grid.frequency(j).abs() > 0.9 * band {
            tail = tail.max(v.norm());
        }
    }

    if resonant && !orthogonal {
        return Ok(KernelReport {
            n: None,
            sup1: f64::NAN,
            sup2: f64::NAN,
            finite: false,
            ghat_plus,
            ghat_minus,
            l1_norm_g,
            weighted_l1_g,
            ghat_sup: spectrum.sup_norm(),
            identity_residual: f64::NAN,
            identity_bound_holds: false,
            singular_cap,
            singular_peak: None,
            tail_ghat: relative(tail, spectrum.sup_norm()),
            class,
        });
    }

    let on_grid: Vec<Quotients> = spectrum
        .values()
        .iter()
        .enumerate()
        .map(|(j, &gh)| quotients(g, gh, grid.frequency(j), params, resonant))
        .collect();

    let mut samples: Vec<Quotients> = Vec::new();
    let step = grid.frequency_step();
    for select in [|q: &Quotients| q.plain.norm(), |q: &Quotients| q.weighted.norm()] {
        for j in top_peaks(&on_grid, select) {
            let eval = |p: f64| quotients(g, g.transform_at(p), p, params, resonant);
            let (lo, hi) = (grid.frequency(j) - step, grid.frequency(j) + step);
            samples.extend(golden_max(eval, select, lo, hi));
        }
    }
    samples.extend(on_grid);

    let mut sup1 = 0.0f64;
    let mut sup2 = 0.0f64;
    let mut ghat_sup = 0.0f64;
    let mut worst = 0.0f64;
    let mut singular_peak: Option<f64> = None;
    for q in &samples {
        sup1 = sup1.max(q.plain.norm());
        sup2 = sup2.max(q.weighted.norm());
        ghat_sup = ghat_sup.max(q.ghat.norm());
        worst = worst.max(q.residual);
        if q.singular {
            singular_peak = Some(singular_peak.unwrap_or(0.0).max(q.plain.norm()));
        }
    }
    let scale = sup2.max(ghat_sup);
    let identity_residual = relative(worst, scale);
    let identity_bound_holds = sup2 <= ghat_sup + params.a() * sup1 + 1e-12 * scale;
    let tail_ghat = relative(tail, ghat_sup);
    if tail_ghat > 1e-12 {
        log::warn!("kernel transform has not decayed at the band edge (relative {tail_ghat:.2e}); N is band-limited");
    }

    Ok(KernelReport {
        n: Some(sup1.max(sup2)),
        sup1,
        sup2,
        finite: true,
        ghat_plus,
        ghat_minus,
        l1_norm_g,
        weighted_l1_g,
        ghat_sup,
        identity_residual,
        identity_bound_holds,
        singular_cap,
        singular_peak,
        tail_ghat,
        class,
    })
}

/// `N_{a,h}` with its diagnostics; `NotFinite` when the constant is infinite
/// (resonant shift and `G` not orthogonal to `e^{±i√a x}`).
pub fn stability_constant(g: &GridFunction, params: &ShiftParams, tol: f64) -> Result<KernelReport> {
    let report = assess_kernel(g, params, tol)?;
    if !report.finite {
        return Err(Error::NotFinite {
            ghat_plus: report.ghat_plus,
            ghat_minus: report.ghat_minus,
            tol,
        });
    }
    Ok(report)
}

/// `1 - 2√π N l`; positive means the fixed-point map contracts.
pub fn contraction_margin(n: f64, l: f64) -> f64 {
    1.0 - contraction_factor(n, l)
}

/// `q = 2√π N l`
pub fn contraction_factor(n: f64, l: f64) -> f64 {
    2.0 * PI.sqrt() * n * l
}

/// `max_± |G^(±√a + d) / λ_h(±√a + d)|` for each offset `d`.
///
/// At a resonant shift with `G^(±√a) ≠ 0` this grows like `1/d`.
pub fn singular_profile(g: &GridFunction, params: &ShiftParams, offsets: &[f64]) -> Vec<f64> {
    let k = params.critical_frequency();
    offsets
        .iter()
        .map(|&d| {
            [k + d, -k - d]
                .into_iter()
                .map(|p| (g.transform_at(p) / symbol(p, params)).norm())
                .fold(0.0, f64::max)
        })
        .collect()
}

fn top_peaks(qs: &[Quotients], select: fn(&Quotients) -> f64) -> Vec<usize> {
    let vals: Vec<f64> = qs.iter().map(select).collect();
    let mut peaks: Vec<usize> = (0..vals.len())
        .filter(|&j| {
            let left = if j > 0 { vals[j - 1] } else { f64::NEG_INFINITY };
            let right = vals.get(j + 1).copied().unwrap_or(f64::NEG_INFINITY);
            vals[j] > 0.0 && vals[j] >= left && vals[j] >= right
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]).then(a.cmp(&b)));
    peaks.truncate(REFINE_PEAKS);
    peaks
}

/// Golden-section search for a maximum of `select ∘ eval` on `[lo, hi]`;
/// returns every evaluated sample.
fn golden_max(
    eval: impl Fn(f64) -> Quotients,
    select: fn(&Quotients) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Vec<Quotients> {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut q1 = eval(x1);
    let mut q2 = eval(x2);
    let (mut f1, mut f2) = (select(&q1), select(&q2));
    let mut seen = Vec::with_capacity(REFINE_STEPS + 2);
    for _ in 0..REFINE_STEPS {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            seen.push(std::mem::replace(&mut q2, q1));
            x1 = hi - ratio * (hi - lo);
            q1 = eval(x1);
            f1 = select(&q1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            seen.push(std::mem::replace(&mut q1, q2));
            x2 = lo + ratio * (hi - lo);
            q2 = eval(x2);
            f2 = select(&q2);
        }
        if hi - lo < 1e-12 * (1.0 + hi.abs()) {
            break;
        }
    }
    seen.push(q1);
    seen.push(q2);
    seen
}

fn relative(v: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        v / scale
    } else {
        0.0
    }
}
