pub mod error;
pub mod functionals;
pub mod io;
pub mod littlewood;
pub mod models;
pub mod operators;
pub mod spectral;
pub mod timestepper;
pub mod verification;

pub use error::{Error, Result};
pub use spectral::{Field, Grid, Spectrum};
