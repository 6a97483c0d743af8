//! Forward and inverse computations for a quadratic Sturm-Liouville pencil
//! with nonlocal boundary forms.

pub mod asymptotics;
pub mod charfns;
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod forms;
pub mod inverse;
pub mod model;
pub mod ode;
pub mod spectra;

pub use error::{Error, Result};
