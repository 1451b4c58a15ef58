//! Contraction fixed-point solver for
//!
//! ```text
//! u''(x) + a u(x - h) + ∫ G(x - y) F(u(y), y) dy = 0.
//! ```
//!
//! The map `T v = u` solves the linear auxiliary problem
//! `-u'' - a u(x - h) = ∫ G(x - y) F(v(y), y) dy`; in Fourier space
//! `u^ = √(2π) G^ w^ / (p² - a e^{-iph})` with `w = F(v(·), ·)`. `T` is a
//! contraction on H² with factor `q = 2√π N_{a,h} l`, `l` the Lipschitz
//! constant of `F` in `u`.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::{contraction_factor, kernel_orthogonality, stability_constant};
use crate::linear::{apply_operator, solve_linear, LinearOptions};
use crate::operator::ShiftParams;
use crate::spectral::{Grid, GridFunction, SpectralFunction};

pub const DEFAULT_TOL_H2: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 500;
/// Support threshold of [`nontriviality_check`], relative to each transform's maximum.
pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 1e-12;

/// Slack allowed by the sampled growth and Lipschitz checks.
const CHECK_SLACK: f64 = 1e-9;

pub type NonlinearFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// `F(u, x)` with `|F(u, x)| ≤ k|u| + envelope(x)` and
/// `|F(u₁, x) - F(u₂, x)| ≤ l |u₁ - u₂|`.
#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    eval: NonlinearFn,
    growth: f64,
    envelope: GridFunction,
    lipschitz: f64,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("k", &self.growth)
            .field("l", &self.lipschitz)
            .finish_non_exhaustive()
    }
}

impl Nonlinearity {
    pub fn new(
        name: impl Into<String>,
        eval: NonlinearFn,
        growth: f64,
        envelope: GridFunction,
        lipschitz: f64,
    ) -> Result<Self> {
        for (label, v) in [("k", growth), ("l", lipschitz)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{label} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            eval,
            growth,
            envelope,
            lipschitz,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn growth(&self) -> f64 {
        self.growth
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn envelope(&self) -> &GridFunction {
        &self.envelope
    }

    pub fn eval(&self, u: f64, x: f64) -> f64 {
        (self.eval)(u, x)
    }

    /// `x ↦ F(v(x), x)` on the grid of `v` (real part of `v`).
    pub fn apply(&self, v: &GridFunction) -> Result<GridFunction> {
        let grid = *v.grid();
        let vals = v
            .values()
            .iter()
            .enumerate()
            .map(|(k, z)| num_complex::Complex64::new(self.eval(z.re, grid.point(k)), 0.0))
            .collect();
        GridFunction::new(grid, vals)
    }

    /// `x ↦ F(0, x)`
    pub fn at_zero(&self, grid: Grid) -> Result<GridFunction> {
        GridFunction::from_real_fn(grid, |x| self.eval(0.0, x))
    }

    /// Spot-check `|F(u, x)| ≤ k|u| + envelope(x)` at random `(u, x_j)`.
    pub fn verify_growth<R: Rng>(&self, rng: &mut R, samples: usize) -> Result<()> {
        let grid = *self.envelope.grid();
        for _ in 0..samples {
            let j = rng.gen_range(0..grid.len());
            let x = grid.point(j);
            let u: f64 = rng.gen_range(-10.0..10.0);
            let bound = self.growth * u.abs() + self.envelope.values()[j].re;
            let val = self.eval(u, x);
            if val.abs() > bound + CHECK_SLACK {
                return Err(Error::NonlinearityHypothesis(format!(
                    "growth bound fails for `{}` at u = {u}, x = {x}: |F| = {} > {bound}",
                    self.name,
                    val.abs()
                )));
            }
        }
        Ok(())
    }

    /// Spot-check the declared Lipschitz constant on random pairs.
    pub fn verify_lipschitz<R: Rng>(&self, rng: &mut R, samples: usize) -> Result<()> {
        let grid = *self.envelope.grid();
        for _ in 0..samples {
            let x = grid.point(rng.gen_range(0..grid.len()));
            let u1: f64 = rng.gen_range(-10.0..10.0);
            let u2 = u1 + rng.gen_range(-2.0..2.0);
            let diff = (self.eval(u1, x) - self.eval(u2, x)).abs();
            if diff > self.lipschitz * (u1 - u2).abs() + CHECK_SLACK {
                return Err(Error::NonlinearityHypothesis(format!(
                    "Lipschitz bound l = {} fails for `{}` at x = {x}, u = ({u1}, {u2})",
                    self.lipschitz, self.name
                )));
            }
        }
        Ok(())
    }
}

/// `(G * w)(x) = ∫ G(x - y) w(y) dy` via `√(2π) G^ w^`.
pub fn convolve(g: &GridFunction, w: &GridFunction) -> Result<GridFunction> {
    if g.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let gh = g.forward_transform();
    let wh = w.forward_transform();
    let s = (2.0 * std::f64::consts::PI).sqrt();
    let prod = gh.values().iter().zip(wh.values()).map(|(a, b)| a * b * s).collect();
    Ok(SpectralFunction::new(*g.grid(), prod)?.inverse_transform())
}

/// Direct `O(N²)` periodic sum `Σ_k G(x_j - y_k) w(y_k) dx`.
pub fn convolve_direct(g: &GridFunction, w: &GridFunction) -> Result<GridFunction> {
    if g.grid() != w.grid() {
        return Err(Error::GridMismatch);
    }
    let grid = *g.grid();
    let n = grid.len();
    let half = n / 2;
    let dx = grid.spacing();
    let gv = g.values();
    let wv = w.values();
    let vals = (0..n)
        .map(|j| {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            for (k, wk) in wv.iter().enumerate() {
                // x_j - y_k = (j - k) dx = x_i with i = j - k + N/2 (mod N)
                acc += gv[(j + n + half - k) % n] * wk;
            }
            acc * dx
        })
        .collect();
    GridFunction::new(grid, vals)
}

/// One application of the fixed-point map.
pub fn apply_t(
    v: &GridFunction,
    g: &GridFunction,
    f: &Nonlinearity,
    params: &ShiftParams,
    opts: &LinearOptions,
) -> Result<GridFunction> {
    if params.is_resonant() {
        let (ghat_plus, ghat_minus, ok) = kernel_orthogonality(g, params.a(), opts.orth_tol);
        if !ok {
            return Err(Error::NotFinite {
                ghat_plus,
                ghat_minus,
                tol: opts.orth_tol,
            });
        }
    }
    let w = f.apply(v)?;
    let rhs = convolve(g, &w)?;
    Ok(solve_linear(&rhs, params, opts)?.u)
}

#[derive(Debug, Clone)]
pub struct FixedPointOptions {
    /// Initial iterate; zero when `None`.
    pub v0: Option<GridFunction>,
    pub tol_h2: f64,
    pub max_iter: usize,
    pub linear: LinearOptions,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            v0: None,
            tol_h2: DEFAULT_TOL_H2,
            max_iter: DEFAULT_MAX_ITER,
            linear: LinearOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedPointResult {
    #[serde(skip)]
    pub u: GridFunction,
    pub iterations: usize,
    /// `‖v_{k+1} - v_k‖_{H²}`
    pub step_norms: Vec<f64>,
    /// Largest `step_{k+1} / step_k` from the second step on.
    pub observed_ratio: f64,
    /// `q = 2√π N l`
    pub q_bound: f64,
    #[serde(rename = "N")]
    pub n_const: f64,
    /// Iteration count guaranteed by the contraction estimate.
    pub a_priori_iterations: usize,
    /// `‖u'' + a u(· - h) + G * F(u)‖_{L²}` with a direct-sum convolution.
    pub residual_l2: f64,
    pub h2_norm_u: f64,
    pub nontrivial: bool,
}

/// Iterate `v_{k+1} = T v_k` to the unique fixed point.
///
/// Stops once the a-posteriori distance bound `q/(1-q) · ‖v_{k+1} - v_k‖`
/// or the step itself drops to `tol_h2` (both in H²). Refuses to start
/// unless `2√π N l < 1`.
pub fn fixed_point_solve(
    g: &GridFunction,
    f: &Nonlinearity,
    params: &ShiftParams,
    opts: &FixedPointOptions,
) -> Result<FixedPointResult> {
    let report = stability_constant(g, params, opts.linear.orth_tol)?;
    let n_const = report.n.unwrap_or(f64::INFINITY);
    let q = contraction_factor(n_const, f.lipschitz());
    if q.is_nan() || q >= 1.0 {
        return Err(Error::ContractionHypothesisFailed { q });
    }
    let mut v = match &opts.v0 {
        Some(v0) if v0.grid() != g.grid() => return Err(Error::GridMismatch),
        Some(v0) => v0.clone(),
        None => GridFunction::zeros(*g.grid()),
    };
    let bound_factor = if q > 0.0 { (q / (1.0 - q)).min(1.0) } else { 0.0 };

    let mut steps = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let next = apply_t(&v, g, f, params, &opts.linear)?;
        let step = next.sub(&v)?.h2_norm();
        steps.push(step);
        v = next;
        if step * bound_factor <= opts.tol_h2 || step <= opts.tol_h2 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::MaxIterExceeded {
            iterations: steps.len(),
            last_step: steps.last().copied().unwrap_or(f64::NAN),
        });
    }

    let observed_ratio = steps
        .windows(2)
        .skip(1)
        .filter(|w| w[0] > 0.0)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    let a_priori_iterations = a_priori_count(q, steps[0], opts.tol_h2);

    let conv = convolve_direct(g, &f.apply(&v)?)?;
    let residual_l2 = conv.sub(&apply_operator(&v, params))?.l2_norm();
    let h2_norm_u = v.h2_norm();
    Ok(FixedPointResult {
        iterations: steps.len(),
        step_norms: steps,
        observed_ratio,
        q_bound: q,
        n_const,
        a_priori_iterations,
        residual_l2,
        h2_norm_u,
        nontrivial: h2_norm_u > opts.tol_h2,
        u: v,
    })
}

/// `k* = ceil(log(tol (1 - q) / ‖v₁ - v₀‖) / log q)`, at least 1.
pub fn a_priori_count(q: f64, first_step: f64, tol: f64) -> usize {
    if first_step <= tol || q <= 0.0 {
        return 1;
    }
    let k = ((tol * (1.0 - q) / first_step).ln() / q.ln()).ceil();
    k.max(1.0) as usize
}

/// Measure of `{p : |G^(p)| > t·max|G^| and |F(0,·)^(p)| > t·max|F(0,·)^|}` on the grid.
pub fn support_overlap(g: &GridFunction, forcing: &GridFunction, threshold: f64) -> Result<f64> {
    if g.grid() != forcing.grid() {
        return Err(Error::GridMismatch);
    }
    let gh = g.forward_transform();
    let fh = forcing.forward_transform();
    let (gmax, fmax) = (gh.sup_norm(), fh.sup_norm());
    if gmax == 0.0 || fmax == 0.0 {
        return Ok(0.0);
    }
    let bins = gh
        .values()
        .iter()
        .zip(fh.values())
        .filter(|(a, b)| a.norm() > threshold * gmax && b.norm() > threshold * fmax)
        .count();
    Ok(bins as f64 * g.grid().frequency_step())
}

/// Whether the transforms of `G` and `F(0, ·)` overlap on a set of positive
/// (thresholded) measure, which rules out the zero solution.
pub fn nontriviality_check(g: &GridFunction, f: &Nonlinearity, threshold: f64) -> Result<bool> {
    let forcing = f.at_zero(*g.grid())?;
    Ok(support_overlap(g, &forcing, threshold)? > 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(40.0, 4096).unwrap()
    }

    fn gauss(g: Grid, c: f64, s: f64) -> GridFunction {
        GridFunction::from_real_fn(g, |x| c * (-x * x / (2.0 * s * s)).exp()).unwrap()
    }

    fn tanh_forcing(g: Grid, scale: f64) -> Nonlinearity {
        Nonlinearity::new(
            "tanh",
            Arc::new(move |u: f64, x: f64| scale * u.tanh() + (-x * x).exp()),
            scale,
            GridFunction::from_real_fn(g, |x| (-x * x).exp()).unwrap(),
            scale,
        )
        .unwrap()
    }

    fn zero_map(g: Grid) -> Nonlinearity {
        Nonlinearity::new("zero", Arc::new(|_, _| 0.0), 0.0, GridFunction::zeros(g), 0.0).unwrap()
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let shift: f64 = rng.gen_range(-2.0..2.0);
        let a = GridFunction::from_real_fn(g, |x| (-(x - shift).powi(2)).exp() * (1.0 + x.sin())).unwrap();
        let b = GridFunction::from_real_fn(g, |x| (-0.3 * x * x).exp() * x.cos()).unwrap();
        let s = convolve(&a, &b).unwrap();
        let d = convolve_direct(&a, &b).unwrap();
        assert!(s.sub(&d).unwrap().l2_norm() <= 1e-10 * d.l2_norm());
        assert_eq!(convolve(&a, &GridFunction::zeros(g)).unwrap().max_abs(), 0.0);
        let other = GridFunction::zeros(Grid::new(40.0, 2048).unwrap());
        assert!(matches!(convolve(&a, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn gaussian_convolution_closed_form() {
        // N(0,s1²) * N(0,s2²) = N(0, s1² + s2²) for unit-mass Gaussians.
        let g = grid();
        let unit = |s: f64| {
            GridFunction::from_real_fn(g, move |x| {
                (-x * x / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
            })
            .unwrap()
        };
        let c = convolve(&unit(0.7), &unit(1.3)).unwrap();
        let want = unit((0.49f64 + 1.69).sqrt());
        assert!(c.sub(&want).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn zero_nonlinearity_maps_to_zero() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let v = gauss(g, 2.0, 1.0);
        let t = apply_t(&v, &gauss(g, 0.3, 1.0), &zero_map(g), &p, &LinearOptions::default()).unwrap();
        assert_eq!(t.max_abs(), 0.0);
        let opts = FixedPointOptions {
            v0: Some(v),
            ..Default::default()
        };
        let r = fixed_point_solve(&gauss(g, 0.3, 1.0), &zero_map(g), &p, &opts).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.u.max_abs(), 0.0);
        assert!(!r.nontrivial);
    }

    #[test]
    fn constant_map_converges_to_linear_solution() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let kernel = gauss(g, 0.3, 1.0);
        let r_fn = gauss(g, 1.0, 0.8);
        let forcing = {
            let r_fn = r_fn.clone();
            Nonlinearity::new(
                "forcing",
                Arc::new(move |_, x: f64| (-x * x / 1.28).exp()),
                0.0,
                r_fn,
                0.0,
            )
            .unwrap()
        };
        let once = apply_t(
            &GridFunction::zeros(g),
            &kernel,
            &forcing,
            &p,
            &LinearOptions::default(),
        )
        .unwrap();
        let direct = solve_linear(&convolve(&kernel, &r_fn).unwrap(), &p, &LinearOptions::default())
            .unwrap()
            .u;
        assert!(once.sub(&direct).unwrap().max_abs() < 1e-14);
        let r = fixed_point_solve(&kernel, &forcing, &p, &FixedPointOptions::default()).unwrap();
        assert!(r.iterations <= 2);
        assert!(r.u.sub(&direct).unwrap().h2_norm() < 1e-10);
    }

    #[test]
    fn builtin_problem_contracts_and_converges() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let kernel = gauss(g, 0.3, 1.0);
        let f = tanh_forcing(g, 0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        f.verify_growth(&mut rng, 2000).unwrap();
        f.verify_lipschitz(&mut rng, 2000).unwrap();

        let r = fixed_point_solve(&kernel, &f, &p, &FixedPointOptions::default()).unwrap();
        assert!(r.observed_ratio <= r.q_bound * 1.1);
        assert!(r.residual_l2 <= 1e-8, "{}", r.residual_l2);
        assert!(r.iterations <= r.a_priori_iterations + 2);
        assert!(r.nontrivial);

        let v0 = GridFunction::from_real_fn(g, |x| 3.0 * (-(x - 1.0).powi(2) / 4.0).exp()).unwrap();
        let opts = FixedPointOptions {
            v0: Some(v0),
            ..Default::default()
        };
        let r2 = fixed_point_solve(&kernel, &f, &p, &opts).unwrap();
        assert!(r2.u.sub(&r.u).unwrap().h2_norm() <= 2.0 * DEFAULT_TOL_H2);
    }

    #[test]
    fn refuses_without_contraction() {
        let g = grid();
        let p = ShiftParams::new(1.0, 1.0).unwrap();
        let f = tanh_forcing(g, 5.0);
        let err = fixed_point_solve(&gauss(g, 0.3, 1.0), &f, &p, &FixedPointOptions::default());
        assert!(matches!(err, Err(Error::ContractionHypothesisFailed { .. })));
    }

    #[test]
    fn resonant_kernel_must_be_orthogonal() {
        let g = grid();
        let p = ShiftParams::new(1.0, 2.0 * std::f64::consts::PI).unwrap();
        let err = apply_t(
            &GridFunction::zeros(g),
            &gauss(g, 0.3, 1.0),
            &tanh_forcing(g, 0.1),
            &p,
            &LinearOptions::default(),
        );
        assert!(matches!(err, Err(Error::NotFinite { .. })));
    }

    #[test]
    fn growth_check_catches_bad_declaration() {
        let g = grid();
        let bad = Nonlinearity::new("bad", Arc::new(|u: f64, _| 2.0 * u), 1.0, GridFunction::zeros(g), 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(bad.verify_growth(&mut rng, 100).is_err());
        assert!(bad.verify_lipschitz(&mut rng, 100).is_err());
    }

    #[test]
    fn overlap_examples() {
        let g = grid();
        let kernel = gauss(g, 1.0, 1.0);
        assert!(nontriviality_check(&kernel, &tanh_forcing(g, 0.1), DEFAULT_SUPPORT_THRESHOLD).unwrap());
        assert!(!nontriviality_check(&kernel, &zero_map(g), DEFAULT_SUPPORT_THRESHOLD).unwrap());

        let bump = |c: f64| {
            SpectralFunction::from_fn(g, move |p| {
                let t = (p.abs() - c) / 0.5;
                if t.abs() < 1.0 {
                    Complex64::new((-1.0 / (1.0 - t * t)).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .unwrap()
            .inverse_transform()
        };
        let (low, high) = (bump(1.0), bump(3.0));
        assert_eq!(support_overlap(&low, &high, DEFAULT_SUPPORT_THRESHOLD).unwrap(), 0.0);
        assert!(support_overlap(&low, &low, DEFAULT_SUPPORT_THRESHOLD).unwrap() > 0.0);
    }

    #[test]
    fn a_priori_count_examples() {
        assert_eq!(a_priori_count(0.0, 1.0, 1e-10), 1);
        assert_eq!(a_priori_count(0.5, 0.0, 1e-10), 1);
        // 0.5^k / 0.5 ≤ 1e-10  ⇒  k = 35
        assert_eq!(a_priori_count(0.5, 1.0, 1e-10), 35);
    }
}
