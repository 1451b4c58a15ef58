//! Builtin right-hand sides, kernels and nonlinearities.
//!
//! Functions are selected by name with optional parameters, or loaded from a
//! CSV file in the `x,re,im` layout.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinear::Nonlinearity;
use crate::spectral::{Grid, GridFunction, SpectralFunction};

pub const BUILTIN_FUNCTIONS: [&str; 5] = ["zero", "gaussian", "hermite_gaussian", "wave_packet", "spectral_bump"];
pub const BUILTIN_NONLINEARITIES: [&str; 4] = ["zero", "forcing", "tanh", "tanh_forcing"];

/// A builtin function with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum Builtin {
    Zero,
    /// `A e^{-(x-c)²/(2σ²)}`; transform `A σ e^{-ipc} e^{-σ²p²/2}`.
    Gaussian {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `A (x² + z² - 1) e^{-x²/2}`; transform `A (z² - p²) e^{-p²/2}`, zero at `p = ±z`.
    HermiteGaussian {
        #[serde(default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        zero_at: f64,
    },
    /// `A e^{-(x-c)²/(2σ²)} sin(k x)`; for `c = 0` the transform is
    /// `(Aσ/2i)(e^{-σ²(p-k)²/2} - e^{-σ²(p+k)²/2})`.
    WavePacket {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        center: f64,
        #[serde(default = "one")]
        wavenumber: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// Band-limited function whose transform is the smooth bump
    /// `A exp(-1/(1-t²))`, `t = (|p| - c)/w`, supported on `||p| - c| < w`.
    /// Built by inverse transform, so the bump is exact at grid frequencies
    /// only; the function itself decays slowly in `x`.
    SpectralBump {
        #[serde(default = "one")]
        center: f64,
        #[serde(default = "half")]
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{name} must be positive and finite, got {v}"
        )))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} must be finite, got {v}")))
    }
}

impl Builtin {
    /// Builtin with default parameters.
    pub fn named(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::json!({ "name": name }))
            .map_err(|_| Error::UnknownBuiltin(format!("function {name}")))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Builtin::Zero => Ok(()),
            Builtin::Gaussian {
                sigma,
                center,
                amplitude,
            } => {
                positive("sigma", sigma)?;
                finite("center", center)?;
                finite("amplitude", amplitude)
            }
            Builtin::HermiteGaussian { amplitude, zero_at } => {
                finite("amplitude", amplitude)?;
                positive("zero_at", zero_at)
            }
            Builtin::WavePacket {
                sigma,
                center,
                wavenumber,
                amplitude,
            } => {
                positive("sigma", sigma)?;
                finite("center", center)?;
                finite("wavenumber", wavenumber)?;
                finite("amplitude", amplitude)
            }
            Builtin::SpectralBump {
                center,
                width,
                amplitude,
            } => {
                positive("center", center)?;
                positive("width", width)?;
                finite("amplitude", amplitude)
            }
        }
    }

    pub fn sample(&self, grid: Grid) -> Result<GridFunction> {
        self.validate()?;
        match *self {
            Builtin::Zero => Ok(GridFunction::zeros(grid)),
            Builtin::Gaussian {
                sigma,
                center,
                amplitude,
            } => GridFunction::from_real_fn(grid, |x| {
                amplitude * (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp()
            }),
            Builtin::HermiteGaussian { amplitude, zero_at } => GridFunction::from_real_fn(grid, |x| {
                amplitude * (x * x + zero_at * zero_at - 1.0) * (-x * x / 2.0).exp()
            }),
            Builtin::WavePacket {
                sigma,
                center,
                wavenumber,
                amplitude,
            } => GridFunction::from_real_fn(grid, |x| {
                amplitude * (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp() * (wavenumber * x).sin()
            }),
            Builtin::SpectralBump {
                center,
                width,
                amplitude,
            } => {
                let spec = SpectralFunction::from_fn(grid, |p| {
                    Complex64::new(amplitude * bump((p.abs() - center) / width), 0.0)
                })?;
                Ok(spec.inverse_transform())
            }
        }
    }

    /// Closed-form transform, when there is one.
    pub fn transform(&self, p: f64) -> Option<Complex64> {
        match *self {
            Builtin::Zero => Some(Complex64::new(0.0, 0.0)),
            Builtin::Gaussian {
                sigma,
                center,
                amplitude,
            } => Some(Complex64::from_polar(
                amplitude * sigma * (-sigma * sigma * p * p / 2.0).exp(),
                -p * center,
            )),
            Builtin::HermiteGaussian { amplitude, zero_at } => Some(Complex64::new(
                amplitude * (zero_at * zero_at - p * p) * (-p * p / 2.0).exp(),
                0.0,
            )),
            Builtin::WavePacket {
                sigma,
                center: 0.0,
                wavenumber,
                amplitude,
            } => {
                let g = |q: f64| (-sigma * sigma * q * q / 2.0).exp();
                let re = amplitude * sigma / 2.0 * (g(p - wavenumber) - g(p + wavenumber));
                Some(Complex64::new(0.0, -re))
            }
            Builtin::WavePacket { .. } => None,
            Builtin::SpectralBump {
                center,
                width,
                amplitude,
            } => Some(Complex64::new(amplitude * bump((p.abs() - center) / width), 0.0)),
        }
    }
}

fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// A function given by builtin name (defaults), builtin object, or CSV path.
///
/// Accepted JSON forms: `"gaussian"`, `{"name": "gaussian", "sigma": 2}`,
/// `"data/f.csv"`, `{"csv": "data/f.csv"}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum FunctionSpec {
    Builtin(Builtin),
    Csv { csv: PathBuf },
}

impl<'de> Deserialize<'de> for FunctionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match &v {
            serde_json::Value::String(s) if s.ends_with(".csv") => Ok(FunctionSpec::Csv { csv: s.into() }),
            serde_json::Value::String(s) => Builtin::named(s).map(FunctionSpec::Builtin).map_err(|_| {
                de::Error::custom(format!(
                    "unknown builtin function `{s}`; expected one of {BUILTIN_FUNCTIONS:?} or a .csv path"
                ))
            }),
            serde_json::Value::Object(map) if map.contains_key("csv") => {
                if map.len() != 1 {
                    return Err(de::Error::custom("a CSV function spec takes only the key `csv`"));
                }
                match &map["csv"] {
                    serde_json::Value::String(s) => Ok(FunctionSpec::Csv { csv: s.into() }),
                    _ => Err(de::Error::custom("`csv` must be a path string")),
                }
            }
            serde_json::Value::Object(_) => serde_json::from_value(v)
                .map(FunctionSpec::Builtin)
                .map_err(de::Error::custom),
            _ => Err(de::Error::custom(
                "function spec must be a builtin name, a builtin object or a CSV path",
            )),
        }
    }
}

impl FunctionSpec {
    /// Sample on `grid`; relative CSV paths resolve against `base`.
    pub fn build(&self, grid: Grid, base: &Path) -> Result<GridFunction> {
        match self {
            FunctionSpec::Builtin(b) => b.sample(grid),
            FunctionSpec::Csv { csv } => {
                let path = base.join(csv);
                let file =
                    File::open(&path).map_err(|e| Error::Config(format!("cannot open {}: {e}", path.display())))?;
                GridFunction::read_csv(grid, file)
            }
        }
    }

    pub fn csv_path(&self) -> Option<&Path> {
        match self {
            FunctionSpec::Csv { csv } => Some(csv),
            FunctionSpec::Builtin(_) => None,
        }
    }
}

/// Parameters of the forcing part `F(0, x)` of the builtin nonlinearities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingParams {
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Width of `A e^{-x²/(2σ²)}`; the default gives `e^{-x²}`.
    #[serde(default = "default_forcing_sigma")]
    pub sigma: f64,
}

fn default_forcing_sigma() -> f64 {
    FRAC_1_SQRT_2
}

impl Default for ForcingParams {
    fn default() -> Self {
        Self {
            amplitude: 1.0,
            sigma: FRAC_1_SQRT_2,
        }
    }
}

/// `{"name": .., "l": .., "k": .., "params": {..}}`
///
/// - `zero`: `F ≡ 0`.
/// - `forcing`: `F(u, x) = A e^{-x²/(2σ²)}`, independent of `u`.
/// - `tanh`: `F(u, x) = l tanh(u)`.
/// - `tanh_forcing`: `F(u, x) = l tanh(u) + A e^{-x²/(2σ²)}`.
///
/// `l` is both the coefficient of `tanh` and the Lipschitz constant; `k`
/// (growth constant) defaults to `l`. The envelope is `|A| e^{-x²/(2σ²)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub name: String,
    #[serde(default)]
    pub l: f64,
    #[serde(default)]
    pub k: Option<f64>,
    #[serde(default)]
    pub params: ForcingParams,
}

impl NonlinearitySpec {
    pub fn named(name: &str, l: f64) -> Self {
        Self {
            name: name.into(),
            l,
            k: None,
            params: ForcingParams::default(),
        }
    }

    pub fn build(&self, grid: Grid) -> Result<Nonlinearity> {
        let ForcingParams { amplitude, sigma } = self.params;
        positive("params.sigma", sigma)?;
        finite("params.amplitude", amplitude)?;
        finite("l", self.l)?;
        let l = self.l;
        let k = self.k.unwrap_or(l.abs());
        let forcing = move |x: f64| amplitude * (-x * x / (2.0 * sigma * sigma)).exp();
        let (eval, envelope): (Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>, GridFunction) = match self.name.as_str() {
            "zero" => (Arc::new(|_, _| 0.0), GridFunction::zeros(grid)),
            "forcing" => (
                Arc::new(move |_, x| forcing(x)),
                GridFunction::from_real_fn(grid, |x| forcing(x).abs())?,
            ),
            "tanh" => (Arc::new(move |u: f64, _| l * u.tanh()), GridFunction::zeros(grid)),
            "tanh_forcing" => (
                Arc::new(move |u: f64, x| l * u.tanh() + forcing(x)),
                GridFunction::from_real_fn(grid, |x| forcing(x).abs())?,
            ),
            other => return Err(Error::UnknownBuiltin(format!("nonlinearity {other}"))),
        };
        let lipschitz = match self.name.as_str() {
            "zero" | "forcing" => 0.0,
            _ => l.abs(),
        };
        Nonlinearity::new(self.name.clone(), eval, k, envelope, lipschitz)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> Grid {
        Grid::new(40.0, 2048).unwrap()
    }

    #[test]
    fn gaussian_matches_formula() {
        let g = grid();
        let f = Builtin::named("gaussian").unwrap().sample(g).unwrap();
        for (k, v) in f.values().iter().enumerate() {
            let x = g.point(k);
            assert_eq!(v.re, (-x * x / 2.0).exp());
        }
    }

    #[test]
    fn closed_form_transforms() {
        let g = grid();
        let cases = [
            Builtin::Gaussian {
                sigma: 1.3,
                center: 0.7,
                amplitude: 2.0,
            },
            Builtin::HermiteGaussian {
                amplitude: 1.0,
                zero_at: 1.0,
            },
            Builtin::HermiteGaussian {
                amplitude: 0.5,
                zero_at: 2.0,
            },
            Builtin::WavePacket {
                sigma: 1.5,
                center: 0.0,
                wavenumber: 2.0,
                amplitude: 1.0,
            },
        ];
        for b in cases {
            let f = b.sample(g).unwrap();
            for p in [-2.2, -1.0, 0.0, 0.4, 1.9] {
                let want = b.transform(p).unwrap();
                let got = f.transform_at(p);
                assert!((got - want).norm() < 1e-10, "{b:?} at {p}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn spectral_bump_is_exact_on_grid_frequencies() {
        let g = grid();
        let b = Builtin::SpectralBump {
            center: 2.0,
            width: 0.5,
            amplitude: 1.0,
        };
        let spec = b.sample(g).unwrap().forward_transform();
        for (j, v) in spec.values().iter().enumerate() {
            assert!((v - b.transform(g.frequency(j)).unwrap()).norm() < 1e-14);
        }
    }

    #[test]
    fn hermite_gaussian_vanishes_at_unit_frequency() {
        let f = Builtin::named("hermite_gaussian").unwrap().sample(grid()).unwrap();
        assert!(f.transform_at(1.0).norm() <= 1e-10);
        assert!(f.transform_at(-1.0).norm() <= 1e-10);
    }

    #[test]
    fn spec_forms() {
        let parse = |s: &str| serde_json::from_str::<FunctionSpec>(s);
        assert_eq!(parse("\"zero\"").unwrap(), FunctionSpec::Builtin(Builtin::Zero));
        assert_eq!(
            parse(r#"{"name":"gaussian","sigma":2}"#).unwrap(),
            FunctionSpec::Builtin(Builtin::Gaussian {
                sigma: 2.0,
                center: 0.0,
                amplitude: 1.0
            })
        );
        assert_eq!(parse("\"f.csv\"").unwrap().csv_path(), Some(Path::new("f.csv")));
        assert!(parse(r#"{"csv":"f.csv"}"#).is_ok());
        assert!(parse(r#"{"csv":"f.csv","sigma":1}"#).is_err());
        assert!(parse(r#"{"name":"gaussian","sigmaa":2}"#).is_err());
        assert!(parse("\"lorentzian\"").is_err());
        assert!(parse("3").is_err());
    }

    #[test]
    fn out_of_range_parameters() {
        let bad = Builtin::Gaussian {
            sigma: -1.0,
            center: 0.0,
            amplitude: 1.0,
        };
        assert!(matches!(bad.sample(grid()), Err(Error::InvalidInput(_))));
        let spec = NonlinearitySpec {
            name: "tanh".into(),
            l: f64::NAN,
            k: None,
            params: ForcingParams::default(),
        };
        assert!(spec.build(grid()).is_err());
        assert!(matches!(
            NonlinearitySpec::named("cubic", 0.1).build(grid()),
            Err(Error::UnknownBuiltin(_))
        ));
    }

    #[test]
    fn tanh_declared_constants_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for name in BUILTIN_NONLINEARITIES {
            let f = NonlinearitySpec::named(name, 0.1).build(grid()).unwrap();
            f.verify_growth(&mut rng, 1000).unwrap();
            f.verify_lipschitz(&mut rng, 1000).unwrap();
        }
        let f = NonlinearitySpec::named("tanh_forcing", 0.1).build(grid()).unwrap();
        assert_eq!(f.lipschitz(), 0.1);
        assert_eq!(f.eval(0.0, 0.0), 1.0);
        assert!((f.eval(0.0, 1.0) - (-1.0f64).exp()).abs() < 1e-15);
    }
}
