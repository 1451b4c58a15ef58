//! Spectral solution of `-u''(x) - a u(x - h) = f(x)`.
//!
//! Away from resonance `u^ = f^ / λ_h` on every grid frequency. At a resonant
//! shift the symbol has simple zeros at `±√a`; the problem is solvable in H²
//! iff `f^(±√a) = 0`, and then `f^/λ_h` extends continuously through the
//! zeros with value `f^'(±√a) / λ_h'(±√a)`. Grid bins sitting on a zero of
//! the symbol are filled with that limit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::operator::{symbol, symbol_derivative, symbol_modulus_sq, FredholmClass, ShiftParams};
use crate::spectral::GridFunction;

/// Default tolerance on `|f^(±√a)|` in the resonant case.
pub const DEFAULT_ORTH_TOL: f64 = 1e-8;

/// Bins with `|λ_h(p_j)| < SINGULAR_GUARD · a` are treated as zeros of the symbol.
pub const SINGULAR_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolvabilityReport {
    pub class: FredholmClass,
    #[serde(serialize_with = "ser_complex")]
    pub fhat_plus: Complex64,
    #[serde(serialize_with = "ser_complex")]
    pub fhat_minus: Complex64,
    pub weighted_l1: f64,
    pub solvable: bool,
    pub tolerance_used: f64,
}

pub(crate) fn ser_complex<S: serde::Serializer>(z: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    [z.re, z.im].serialize(s)
}

#[derive(Debug, Clone, Copy)]
pub struct LinearOptions {
    pub orth_tol: f64,
    pub singular_guard: f64,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            orth_tol: DEFAULT_ORTH_TOL,
            singular_guard: SINGULAR_GUARD,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSolveResult {
    pub u: GridFunction,
    /// `‖-u'' - a u(· - h) - f‖_{L²}`, recomputed through [`apply_operator`].
    pub residual_l2: f64,
    pub solvability: SolvabilityReport,
    pub h2_norm_u: f64,
    /// Number of grid bins filled with the removable-singularity limit.
    pub singular_bins: usize,
}

/// Evaluate `f^(±√a)` and decide solvability.
pub fn check_solvability(f: &GridFunction, params: &ShiftParams, tol: f64) -> Result<SolvabilityReport> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let class = params.classify()?;
    let k = params.critical_frequency();
    let fhat_plus = f.transform_at(k);
    let fhat_minus = f.transform_at(-k);
    let solvable = !class.is_resonant() || (fhat_plus.norm() <= tol && fhat_minus.norm() <= tol);
    Ok(SolvabilityReport {
        class,
        fhat_plus,
        fhat_minus,
        weighted_l1: f.weighted_l1_norm(),
        solvable,
        tolerance_used: tol,
    })
}

/// `-u'' - a u(x - h)`, both terms computed spectrally.
pub fn apply_operator(u: &GridFunction, params: &ShiftParams) -> GridFunction {
    let u2 = u.second_derivative();
    let shifted = u.shift(params.h());
    let a = params.a();
    u2.zip_with(&shifted, |d2, s| -d2 - a * s)
        .expect("derived functions share the grid")
}

pub fn solve_linear(f: &GridFunction, params: &ShiftParams, opts: &LinearOptions) -> Result<LinearSolveResult> {
    let solvability = check_solvability(f, params, opts.orth_tol)?;
    if !solvability.solvable {
        return Err(Error::ResonantNotSolvable {
            fhat_plus: solvability.fhat_plus,
            fhat_minus: solvability.fhat_minus,
            tol: opts.orth_tol,
        });
    }
    let grid = *f.grid();
    let mut spec = f.forward_transform();
    let mut singular_bins = 0;
    match solvability.class {
        FredholmClass::NonResonant { alpha } => {
            for (j, v) in spec.values_mut().iter_mut().enumerate() {
                let p = grid.frequency(j);
                let m = symbol_modulus_sq(p, params);
                if m < 0.5 * alpha {
                    return Err(Error::NearSingularGrid { min_mod_sq: m, alpha });
                }
                *v /= symbol(p, params);
            }
        }
        FredholmClass::Resonant { .. } => {
            let guard = opts.singular_guard * params.a();
            for (j, v) in spec.values_mut().iter_mut().enumerate() {
                let p = grid.frequency(j);
                let lam = symbol(p, params);
                if lam.norm() < guard {
                    *v = f.transform_derivative_at(p) / symbol_derivative(p, params);
                    singular_bins += 1;
                } else {
                    *v /= lam;
                }
            }
        }
    }
    let u = spec.inverse_transform();
    let residual_l2 = apply_operator(&u, params).sub(f)?.l2_norm();
    let h2_norm_u = u.h2_norm();
    Ok(LinearSolveResult {
        u,
        residual_l2,
        solvability,
        h2_norm_u,
        singular_bins,
    })
}

/// Width of the Gaussian window used by [`project_solvable`].
const PROJECTION_WINDOW: f64 = 1.0;

/// Remove the components of `f` that violate `f^(±√a) = 0`.
///
/// Subtracts a combination of the windowed waves `e^{-x²/2} e^{±i√a x}`
/// chosen so that the transform of the result vanishes at `±√a`. Functions
/// that already satisfy the conditions come back unchanged up to round-off.
/// Only `a` matters, so this is meaningful for any parameters, but it is
/// intended for the resonant case.
pub fn project_solvable(f: &GridFunction, params: &ShiftParams) -> Result<GridFunction> {
    let grid = *f.grid();
    let k = params.critical_frequency();
    let window = |x: f64| (-x * x / (2.0 * PROJECTION_WINDOW * PROJECTION_WINDOW)).exp();
    let wave = |sign: f64| GridFunction::from_complex_fn(grid, |x| Complex64::from_polar(window(x), sign * k * x));
    let plus = wave(1.0)?;
    let minus = wave(-1.0)?;

    // [φ₊^(k)  φ₋^(k) ] [c₊]   [f^(k) ]
    // [φ₊^(-k) φ₋^(-k)] [c₋] = [f^(-k)]
    let m11 = plus.transform_at(k);
    let m12 = minus.transform_at(k);
    let m21 = plus.transform_at(-k);
    let m22 = minus.transform_at(-k);
    let r1 = f.transform_at(k);
    let r2 = f.transform_at(-k);
    let det = m11 * m22 - m12 * m21;
    if det.norm() < 1e-14 {
        return Err(Error::InvalidInput(format!(
            "projection system is singular for a = {}",
            params.a()
        )));
    }
    let c_plus = (r1 * m22 - m12 * r2) / det;
    let c_minus = (m11 * r2 - m21 * r1) / det;
    f.sub(&plus.map(|v| v * c_plus))?.sub(&minus.map(|v| v * c_minus))
}

/// `L = K π / √a`: grids over `[-L, L)` then carry `±√a` as the `±K`-th frequency.
pub fn aligned_half_length(a: f64, cycles: usize) -> f64 {
    cycles as f64 * PI / a.sqrt()
}

/// `L = (K + offset) π / √a` with `offset ∈ (0, 1)`: `±√a` falls strictly
/// between grid frequencies, a fraction `offset` of a step from the nearest
/// one below.
pub fn detuned_half_length(a: f64, cycles: usize, offset: f64) -> f64 {
    (cycles as f64 + offset) * PI / a.sqrt()
}

/// Half lengths of successive refinements used to witness resonant blow-up.
///
/// Each step doubles `L` (halving `Δp`) and halves the detuning fraction, so
/// the grid frequency nearest to `√a` approaches it four times faster than the
/// step, while `√a` itself never lands on the grid.
pub fn detuned_refinements(a: f64, cycles: usize, offset: f64, levels: usize) -> Vec<f64> {
    (0..levels)
        .map(|k| detuned_half_length(a, cycles << k, offset / (1u64 << k) as f64))
        .collect()
}

/// Discrete `L²` mass of `f^/λ_h` over grid frequencies within `delta` of `±√a`:
/// `Σ |f^(p_j)/λ_h(p_j)|² Δp`. Unbounded under refinement when `f^(±√a) ≠ 0`
/// at a resonant shift.
pub fn resonant_quotient_mass(f: &GridFunction, params: &ShiftParams, delta: f64) -> f64 {
    let grid = *f.grid();
    let k = params.critical_frequency();
    let spec = f.forward_transform();
    spec.values()
        .iter()
        .enumerate()
        .filter(|(j, _)| {
            let p = grid.frequency(*j);
            (p - k).abs() < delta || (p + k).abs() < delta
        })
        .map(|(j, v)| v.norm_sqr() / symbol_modulus_sq(grid.frequency(j), params))
        .sum::<f64>()
        * grid.frequency_step()
}
