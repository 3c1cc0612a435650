pub mod cli;
pub mod error;
pub mod feasible;
pub mod io;
pub mod kernel;
pub mod linalg;
pub mod lp;
pub mod monopoly;
pub mod random;
pub mod rational;
pub mod revelation;
pub mod self_confirming;

pub use error::{Error, Result};
pub use kernel::{Prior, StochasticKernel};
pub use rational::Q;
