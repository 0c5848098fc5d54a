use alloc::string::String;

use crate::dataset::DatasetError;
use crate::gp::GpError;
use crate::integrator::IntegratorError;
use crate::systems::SystemError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Integrator(#[from] IntegratorError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{phase} solver diverged at iteration {iteration}, interval {interval}")]
    Diverged {
        phase: &'static str,
        iteration: usize,
        interval: usize,
    },
}
