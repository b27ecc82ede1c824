pub mod basis;
pub mod checks;
pub mod cli;
pub mod eigensolver;
pub mod error;
pub mod hamiltonian;
pub mod oscillator1d;
pub mod pointgroup;
pub mod spectra;

pub use error::{Error, Result};
