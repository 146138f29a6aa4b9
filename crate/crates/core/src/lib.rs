pub mod asymptotics;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod modes;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
