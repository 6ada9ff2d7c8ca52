//! Linear solvers, convergence studies, file formats and the command-line
//! driver for [`cutnitsche_core`].

pub mod error;
pub mod io;
pub mod solver;
pub mod study;

pub use error::{Error, Result};
