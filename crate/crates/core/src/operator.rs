//! Symbol of `L_h u = -u'' - a u(x - h)` and its Fredholm classification.
//!
//! Under the transform convention of [`crate::spectral`], `L_h` acts as the
//! multiplier `λ_h(p) = p² - a e^{-iph} = p² - a cos(ph) + i a sin(ph)`.
//! It vanishes somewhere on the real line exactly when `h √a ∈ 2πℤ \ {0}`
//! (the resonant case), and then only at `p = ±√a`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default resonance tolerance, relative to `|h|`.
pub const DEFAULT_RESONANCE_TOL_REL: f64 = 1e-9;

/// Coefficient `a > 0` of the shifted term and the shift `h ≠ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ShiftParams {
    a: f64,
    h: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    a: f64,
    h: f64,
}

impl TryFrom<RawParams> for ShiftParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        ShiftParams::new(raw.a, raw.h)
    }
}

impl ShiftParams {
    pub fn new(a: f64, h: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidParams(format!("a must be positive, got {a}")));
        }
        if !h.is_finite() || h == 0.0 {
            return Err(Error::InvalidParams(format!("h must be finite and nonzero, got {h}")));
        }
        Ok(Self { a, h })
    }

    /// Parameters sitting exactly on the `n`-th resonance, `h = 2πn/√a`.
    pub fn resonant(a: f64, n: i64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParams("resonance index must be nonzero".into()));
        }
        Self::new(a, 2.0 * PI * n as f64 / a.sqrt())
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// `√a`, where the symbol vanishes in the resonant case.
    pub fn critical_frequency(&self) -> f64 {
        self.a.sqrt()
    }

    pub fn default_tolerance(&self) -> f64 {
        DEFAULT_RESONANCE_TOL_REL * self.h.abs()
    }

    /// Classification with the default tolerance.
    pub fn classify(&self) -> Result<FredholmClass> {
        classify(self, self.default_tolerance())
    }

    pub fn is_resonant(&self) -> bool {
        matches!(self.classify(), Ok(FredholmClass::Resonant { .. }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum FredholmClass {
    /// `|λ_h(p)|² ≥ alpha > 0` on the whole line (sampled estimate).
    NonResonant { alpha: f64 },
    /// `h = 2πn/√a`.
    Resonant { n: i64 },
}

impl FredholmClass {
    pub fn is_resonant(&self) -> bool {
        matches!(self, FredholmClass::Resonant { .. })
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            FredholmClass::NonResonant { alpha } => Some(*alpha),
            FredholmClass::Resonant { .. } => None,
        }
    }
}

/// `λ_h(p) = p² - a cos(ph) + i a sin(ph)`
pub fn symbol(p: f64, params: &ShiftParams) -> Complex64 {
    let (s, c) = (p * params.h).sin_cos();
    Complex64::new(p * p - params.a * c, params.a * s)
}

/// `dλ_h/dp = 2p + i a h e^{-iph}`
pub fn symbol_derivative(p: f64, params: &ShiftParams) -> Complex64 {
    2.0 * p + Complex64::new(0.0, params.a * params.h) * Complex64::from_polar(1.0, -p * params.h)
}

/// `|λ_h(p)|² = (p² - a)² + 2ap²(1 - cos(ph))`, with `1 - cos θ` evaluated as
/// `2 sin²(θ/2)` to avoid cancellation.
pub fn symbol_modulus_sq(p: f64, params: &ShiftParams) -> f64 {
    let a = params.a;
    let d = p * p - a;
    let s = (0.5 * p * params.h).sin();
    d * d + 4.0 * a * p * p * s * s
}

/// Resonance index `n` when `|h - 2πn/√a| ≤ tol` for some nonzero integer `n`.
pub fn resonance_index(params: &ShiftParams, tol: f64) -> Result<Option<i64>> {
    let spacing = PI / params.a.sqrt();
    if !(tol > 0.0 && tol < spacing) {
        return Err(Error::ToleranceOutOfRange { tol, max: spacing });
    }
    let root_a = params.a.sqrt();
    let n = (params.h * root_a / (2.0 * PI)).round();
    if n == 0.0 {
        return Ok(None);
    }
    let dist = (params.h - 2.0 * PI * n / root_a).abs();
    Ok((dist <= tol).then_some(n as i64))
}

pub fn classify(params: &ShiftParams, tol: f64) -> Result<FredholmClass> {
    match resonance_index(params, tol)? {
        Some(n) => Ok(FredholmClass::Resonant { n }),
        None => Ok(FredholmClass::NonResonant {
            alpha: sampled_gap(params)?.0,
        }),
    }
}

/// Sampled lower bound `α` of `|λ_h(p)|²` over the real line.
///
/// This is a numerical estimate (dense sampling plus local refinement), not a
/// proven bound. Resonant parameters are rejected.
pub fn estimate_alpha(params: &ShiftParams) -> Result<f64> {
    if let Some(n) = resonance_index(params, params.default_tolerance())? {
        return Err(Error::ResonantParams { n });
    }
    Ok(sampled_gap(params)?.0)
}

/// Location `p ≥ 0` of the sampled minimum of `|λ_h|²` together with the minimum.
pub fn gap_minimizer(params: &ShiftParams) -> Result<(f64, f64)> {
    let (alpha, p) = sampled_gap(params)?;
    Ok((p, alpha))
}

/// Half-width `P = 2(1 + √a)` of the search window for the gap.
pub fn gap_window(params: &ShiftParams) -> f64 {
    2.0 * (1.0 + params.a.sqrt())
}

fn sampled_gap(params: &ShiftParams) -> Result<(f64, f64)> {
    // |λ|² is even in p, so [0, P] suffices.
    let window = gap_window(params);
    let period = 2.0 * PI / params.h.abs();
    let step = (window / 20_000.0).min(period / 64.0);
    let count = (window / step).ceil() as usize;
    let samples: Vec<f64> = (0..=count)
        .map(|i| symbol_modulus_sq(i as f64 * step, params))
        .collect();
    let (argmin, sampled_min) =
        samples
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });

    let mut best = (sampled_min, argmin as f64 * step);
    for i in 0..=count {
        let v = samples[i];
        let left = if i > 0 { samples[i - 1] } else { f64::INFINITY };
        let right = if i < count { samples[i + 1] } else { f64::INFINITY };
        if v <= left && v <= right && v <= 2.0 * sampled_min + f64::MIN_POSITIVE {
            let lo = ((i as f64 - 1.0) * step).max(0.0);
            let hi = ((i as f64 + 1.0) * step).min(window);
            let (p, m) = golden_min(|p| symbol_modulus_sq(p, params), lo, hi);
            if m < best.0 {
                best = (m, p);
            }
        }
    }
    let (alpha, at) = best;
    let floor = 1e-14 * params.a.max(1.0).powi(2);
    if alpha < floor {
        return Err(Error::DegenerateGap { min: alpha });
    }
    // Outside the window (p² - a)² alone dominates the minimum.
    let tail = (window * window - params.a).powi(2);
    assert!(
        tail > alpha,
        "gap window too small: tail bound {tail} <= minimum {alpha}"
    );
    Ok((alpha, at))
}

fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..100 {
        if hi - lo < 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 < f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}
