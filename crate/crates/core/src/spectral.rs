//! Functions sampled on a uniform periodic grid over `[-L, L)` and their
//! continuous-convention Fourier transforms
//!
//! ```text
//! u^(p) = (2π)^{-1/2} ∫ u(x) e^{-ipx} dx,     u(x) = (2π)^{-1/2} ∫ u^(p) e^{ipx} dp
//! ```
//!
//! discretised by the rectangle rule on the grid (which is the trapezoidal rule
//! for periodic data). Spectral samples are stored in increasing frequency
//! order `p_j = π j / L`, `j = -N/2, …, N/2 - 1`.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `1/√(2π)`
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Smallest admissible number of grid points.
pub const MIN_POINTS: usize = 8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Uniform grid on the periodic box `[-L, L)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct Grid {
    #[serde(rename = "L")]
    half_length: f64,
    #[serde(rename = "N")]
    points: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    #[serde(rename = "L")]
    half_length: f64,
    #[serde(rename = "N")]
    points: usize,
}

impl TryFrom<RawGrid> for Grid {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        Grid::new(raw.half_length, raw.points)
    }
}

impl Grid {
    pub fn new(half_length: f64, points: usize) -> Result<Self> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive and finite, got {half_length}"
            )));
        }
        if !points.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("point count must be even, got {points}")));
        }
        if points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "point count must be at least {MIN_POINTS}, got {points}"
            )));
        }
        Ok(Self { half_length, points })
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn len(&self) -> usize {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    /// `dx = 2L / N`
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.points as f64
    }

    /// `Δp = π / L`
    pub fn frequency_step(&self) -> f64 {
        PI / self.half_length
    }

    /// Largest resolvable frequency `π / dx`.
    pub fn band_limit(&self) -> f64 {
        PI / self.spacing()
    }

    pub fn point(&self, k: usize) -> f64 {
        -self.half_length + k as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.points).map(|k| self.point(k)).collect()
    }

    /// Signed frequency index `j - N/2` of storage slot `j`.
    pub fn frequency_index(&self, j: usize) -> i64 {
        j as i64 - (self.points / 2) as i64
    }

    pub fn frequency(&self, j: usize) -> f64 {
        self.frequency_index(j) as f64 * self.frequency_step()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.frequency(j)).collect()
    }

    /// Storage slot of the grid frequency closest to `p`, if `p` lies in band.
    pub fn nearest_frequency_slot(&self, p: f64) -> Option<usize> {
        let idx = (p / self.frequency_step()).round() as i64 + (self.points / 2) as i64;
        (0..self.points as i64).contains(&idx).then_some(idx as usize)
    }

    fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({ "L": self.half_length, "N": self.points })
    }
}

/// Samples `u(x_k)` of a (generally complex) function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {k}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Sample a real function. Non-finite samples are an error.
    pub fn from_real_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.points().into_iter().map(|x| Complex64::new(f(x), 0.0)).collect();
        Self::new(grid, values)
    }

    pub fn from_complex_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Real parts of the samples.
    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Pointwise combination of two functions on the same grid.
    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Multiply pointwise by a real function of `x`.
    pub fn multiply_by(&self, f: impl Fn(f64) -> f64) -> Self {
        let grid = self.grid;
        Self {
            grid,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, &v)| v * f(grid.point(k)))
                .collect(),
        }
    }

    pub fn forward_transform(&self) -> SpectralFunction {
        let n = self.grid.len();
        let mut buf = self.values.clone();
        plan(n, false).process(&mut buf);
        // x_0 = -L turns the DFT phase into (-1)^j.
        let c = self.grid.spacing() * INV_SQRT_2PI;
        let half = n / 2;
        let values = (0..n)
            .map(|j| {
                let idx = self.grid.frequency_index(j);
                let sign = if idx.rem_euclid(2) == 0 { c } else { -c };
                buf[(j + half) % n] * sign
            })
            .collect();
        SpectralFunction {
            grid: self.grid,
            values,
        }
    }

    /// Rectangle-rule value of `u^(p)` at an arbitrary frequency.
    pub fn transform_at(&self, p: f64) -> Complex64 {
        self.warn_out_of_band(p);
        let dx = self.grid.spacing();
        let sum: Complex64 = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &u)| u * Complex64::from_polar(1.0, -p * self.grid.point(k)))
            .sum();
        sum * (dx * INV_SQRT_2PI)
    }

    /// Derivative `d u^/dp` at an arbitrary frequency, i.e. the transform of `-i x u(x)`.
    pub fn transform_derivative_at(&self, p: f64) -> Complex64 {
        self.warn_out_of_band(p);
        let dx = self.grid.spacing();
        let sum: Complex64 = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &u)| {
                let x = self.grid.point(k);
                u * Complex64::new(0.0, -x) * Complex64::from_polar(1.0, -p * x)
            })
            .sum();
        sum * (dx * INV_SQRT_2PI)
    }

    fn warn_out_of_band(&self, p: f64) {
        if p.abs() > self.grid.band_limit() {
            log::warn!(
                "frequency {p} lies outside the resolvable band [-{b}, {b}]",
                b = self.grid.band_limit()
            );
        }
    }

    /// Periodic shift `x ↦ u(x - h)`, computed spectrally.
    pub fn shift(&self, h: f64) -> Self {
        let mut spec = self.forward_transform();
        let freqs = self.grid.frequencies();
        for (v, p) in spec.values.iter_mut().zip(freqs) {
            *v *= Complex64::from_polar(1.0, -p * h);
        }
        spec.inverse_transform()
    }

    /// Spectral second derivative: inverse transform of `-p² u^`.
    pub fn second_derivative(&self) -> Self {
        let mut spec = self.forward_transform();
        let freqs = self.grid.frequencies();
        for (v, p) in spec.values.iter_mut().zip(freqs) {
            *v *= -p * p;
        }
        spec.inverse_transform()
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.grid.spacing()
    }

    /// `‖x u(x)‖_{L¹}`. Second-order accurate: `|x|` is not smooth at the origin.
    pub fn weighted_l1_norm(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| self.grid.point(k).abs() * v.norm())
            .sum::<f64>()
            * self.grid.spacing()
    }

    /// `‖u‖²_{H²} = ‖u‖²_{L²} + ‖u''‖²_{L²}` with `u''` taken spectrally.
    pub fn h2_norm(&self) -> f64 {
        let u2 = self.second_derivative().l2_norm();
        self.l2_norm().hypot(u2)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "re", "im"])?;
        for (k, v) in self.values.iter().enumerate() {
            w.write_record([format_full(self.grid.point(k)), format_full(v.re), format_full(v.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read samples written by [`GridFunction::write_csv`]. The `x` column must
    /// match `grid` to within a small multiple of the spacing.
    pub fn read_csv<R: Read>(grid: Grid, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let cols: Vec<&str> = headers.iter().map(str::trim).collect();
        if cols.len() < 2 || cols[0] != "x" || cols[1] != "re" {
            return Err(Error::InvalidInput(format!(
                "expected CSV header `x,re,im`, got `{}`",
                cols.join(",")
            )));
        }
        let has_im = cols.get(2) == Some(&"im");
        let mut values = Vec::with_capacity(grid.len());
        for (k, record) in r.records().enumerate() {
            let record = record?;
            let field = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("row {k}: missing column {i}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("row {k}: {e}")))
            };
            let x = field(0)?;
            if k < grid.len() && (x - grid.point(k)).abs() > 1e-9 * grid.half_length().max(1.0) {
                return Err(Error::InvalidInput(format!(
                    "row {k}: x = {x} does not match grid point {}",
                    grid.point(k)
                )));
            }
            let im = if has_im { field(2)? } else { 0.0 };
            values.push(Complex64::new(field(1)?, im));
        }
        Self::new(grid, values)
    }
}

/// Samples `u^(p_j)` on the dual frequency grid, increasing in `p`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    grid: Grid,
    values: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} spectral samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput("non-finite spectral sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.frequencies().into_iter().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn inverse_transform(&self) -> GridFunction {
        let n = self.grid.len();
        let half = n / 2;
        let c = self.grid.frequency_step() * INV_SQRT_2PI;
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (j, v) in self.values.iter().enumerate() {
            let idx = self.grid.frequency_index(j);
            let sign = if idx.rem_euclid(2) == 0 { c } else { -c };
            buf[(j + half) % n] = v * sign;
        }
        plan(n, true).process(&mut buf);
        GridFunction {
            grid: self.grid,
            values: buf,
        }
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.frequency_step()).sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// 17 significant digits.
pub fn format_full(v: f64) -> String {
    format!("{v:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn big() -> Grid {
        Grid::new(40.0, 4096).unwrap()
    }

    #[test]
    fn grid_examples() {
        let g = Grid::new(PI, 8).unwrap();
        assert!((g.spacing() - PI / 4.0).abs() < 1e-15);
        assert!((g.frequency_step() - 1.0).abs() < 1e-15);
        assert_eq!(big().spacing(), 0.019_531_25);
        assert!(matches!(Grid::new(1.0, 7), Err(Error::InvalidGrid(_))));
        assert!(Grid::new(1.0, 6).is_err());
        assert!(Grid::new(0.0, 8).is_err());
        assert!(Grid::new(-1.0, 8).is_err());
    }

    #[test]
    fn frequencies_increase_and_pair_up() {
        let g = Grid::new(3.0, 16).unwrap();
        let p = g.frequencies();
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert!((p[0] + 8.0 * PI / 3.0).abs() < 1e-14);
        for j in 1..16 {
            assert!((p[j] + p[16 - j]).abs() < 1e-14);
        }
        let dxn = g.spacing() * g.len() as f64;
        assert!((dxn - 6.0).abs() <= f64::EPSILON * 6.0);
    }

    #[test]
    fn gaussian_is_its_own_transform() {
        let u = GridFunction::from_real_fn(big(), |x| (-x * x / 2.0).exp()).unwrap();
        let uh = u.forward_transform();
        let err = uh
            .values()
            .iter()
            .zip(big().frequencies())
            .map(|(v, p)| (v - Complex64::new((-p * p / 2.0).exp(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err = {err}");
    }

    #[test]
    fn second_moment_gaussian_transform() {
        let u = GridFunction::from_real_fn(big(), |x| x * x * (-x * x / 2.0).exp()).unwrap();
        let uh = u.forward_transform();
        for (v, p) in uh.values().iter().zip(big().frequencies()) {
            let want = (1.0 - p * p) * (-p * p / 2.0).exp();
            assert!((v - want).norm() < 1e-10);
        }
        assert!(u.transform_at(1.0).norm() < 1e-10);
    }

    #[test]
    fn zero_in_zero_out() {
        let z = GridFunction::zeros(big());
        assert!(z.forward_transform().sup_norm() == 0.0);
        assert!(z.transform_at(3.3).norm() == 0.0);
        assert_eq!(z.h2_norm(), 0.0);
        let zs = SpectralFunction::new(big(), vec![Complex64::new(0.0, 0.0); 4096]).unwrap();
        assert!(zs.inverse_transform().max_abs() == 0.0);
    }

    #[test]
    fn inverse_of_gaussian_spectrum() {
        let s = SpectralFunction::from_fn(big(), |p| Complex64::new((-p * p / 2.0).exp(), 0.0)).unwrap();
        let u = s.inverse_transform();
        for (k, v) in u.values().iter().enumerate() {
            let x = big().point(k);
            assert!((v - (-x * x / 2.0).exp()).norm() < 1e-10);
        }
    }

    #[test]
    fn off_grid_gaussian_value() {
        let u = GridFunction::from_real_fn(big(), |x| (-x * x / 2.0).exp()).unwrap();
        let v = u.transform_at(1.0);
        assert!((v.re - (-0.5f64).exp()).abs() < 1e-12);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn transform_derivative_matches_closed_form() {
        // d/dp e^{-p²/2} = -p e^{-p²/2}
        let u = GridFunction::from_real_fn(big(), |x| (-x * x / 2.0).exp()).unwrap();
        for p in [-1.3, 0.0, 0.7, 2.0] {
            let d = u.transform_derivative_at(p);
            assert!((d.re + p * (-p * p / 2.0f64).exp()).abs() < 1e-11);
            assert!(d.im.abs() < 1e-11);
        }
    }

    #[test]
    fn shift_sine_is_exact() {
        let g = Grid::new(PI, 32).unwrap();
        let u = GridFunction::from_real_fn(g, f64::sin).unwrap();
        for h in [0.3, -1.1, 2.5] {
            let s = u.shift(h);
            for (k, v) in s.values().iter().enumerate() {
                assert!((v - (g.point(k) - h).sin()).norm() < 1e-12);
            }
        }
        let s0 = u.shift(0.0);
        assert!(s0.sub(&u).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn shift_preserves_l2() {
        let u = GridFunction::from_real_fn(big(), |x| (-x * x).exp()).unwrap();
        let s = u.shift(1.7);
        assert!((s.l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
    }

    #[test]
    fn norms_of_gaussian() {
        let u = GridFunction::from_real_fn(big(), |x| (-x * x / 2.0).exp()).unwrap();
        let h2sq = u.h2_norm().powi(2);
        assert!((h2sq - 1.75 * PI.sqrt()).abs() < 1e-10, "{h2sq}");
        // |x| has a kink at the origin, so the rule is only second order here.
        let dx = big().spacing();
        assert!((u.weighted_l1_norm() - 2.0).abs() < dx * dx / 5.0);
        assert!((u.l1_norm() - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert!((u.l2_norm() - PI.sqrt().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_trip_and_parseval_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [8, 64, 1000, 4096] {
            let g = Grid::new(rng.gen_range(0.5..50.0), n).unwrap();
            let vals = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let u = GridFunction::new(g, vals).unwrap();
            let uh = u.forward_transform();
            let back = uh.inverse_transform();
            assert!(back.sub(&u).unwrap().l2_norm() <= 1e-12 * u.l2_norm());
            assert!((uh.l2_norm() - u.l2_norm()).abs() <= 1e-12 * u.l2_norm());
        }
    }

    #[test]
    fn rejects_bad_samples() {
        let g = Grid::new(1.0, 8).unwrap();
        assert!(GridFunction::new(g, vec![Complex64::new(0.0, 0.0); 7]).is_err());
        let mut v = vec![Complex64::new(0.0, 0.0); 8];
        v[3].re = f64::NAN;
        assert!(GridFunction::new(g, v).is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = Grid::new(2.5, 16).unwrap();
        let u = GridFunction::from_complex_fn(g, |x| Complex64::new(x.sin() / 3.0, x.cos() * 1e-7)).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x,re,im\n"));
        let back = GridFunction::read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back, u);
        let wrong = Grid::new(3.0, 16).unwrap();
        assert!(GridFunction::read_csv(wrong, buf.as_slice()).is_err());
    }

    #[test]
    fn grid_json_shape() {
        let g = Grid::new(40.0, 4096).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        assert_eq!(s, r#"{"L":40.0,"N":4096}"#);
        let back: Grid = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
