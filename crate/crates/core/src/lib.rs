pub mod banded;
pub mod corner_spectra;
pub mod error;
pub mod stencil;
pub mod strip_solver;
pub mod theta_operators;
pub mod transforms;
pub mod verification;
pub mod weighted_analysis;

pub use error::{Error, Result};
