pub mod error;
pub mod asymptotics;
pub mod bubbles;
pub mod checks;
pub mod cli;
pub mod config;
pub mod greens;
pub mod params;
pub mod pde;
pub mod quadrature;
pub mod sphere;

pub use error::{Error, Result};
