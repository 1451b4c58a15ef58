pub mod catalog;
pub mod config;
pub mod error;
pub mod kernel;
pub mod linear;
pub mod nonlinear;
pub mod operator;
pub mod run;
pub mod sequence;
pub mod spectral;

pub use error::{Error, Result};
pub use operator::{FredholmClass, ShiftParams};
pub use spectral::{Grid, GridFunction, SpectralFunction};
