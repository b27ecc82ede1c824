use thiserror::Error;

use crate::eigensolver::EigenError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("requested {count} quartic eigenvalues but only {trusted} are trusted at n_max = {n_max}")]
    UntrustedWindow {
        count: usize,
        trusted: usize,
        n_max: usize,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid sweep grid: {0}")]
    InvalidGrid(String),

    #[error("group construction failed: {0}")]
    GroupConstruction(String),

    #[error("irrep {irrep} does not belong to group {group}")]
    ForeignIrrep { irrep: String, group: String },

    #[error("unknown label `{0}`")]
    UnknownLabel(String),

    #[error("block assembly is not symmetric: max asymmetry {0:e}")]
    Asymmetric(f64),

    #[error(transparent)]
    Eigen(#[from] EigenError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
