//! Unfitted finite elements for the two-phase Poisson interface problem
//!
//! ```text
//!   -div(mu_i grad u_i) = f      in Omega_i,  i = 1, 2
//!   [[u]] = g_D,  [[mu grad u . n]] = g_N     on Gamma
//!   u = u_b                                   on the outer boundary
//! ```
//!
//! discretised with the non-symmetric Nitsche coupling on a background
//! triangulation that does not resolve the interface. Two variants are
//! provided: the penalised method with harmonic weights and the
//! penalty-free method stabilised by a ghost penalty.
//!
//! The crate is `no_std` and only needs `alloc`. Linear solvers, file
//! formats and the command-line driver live in the `cutnitsche` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod float;

pub mod basis;
pub mod cases;
pub mod convergence;
pub mod cut;
pub mod error;
pub mod forms;
pub mod levelset;
pub mod mesh;
pub mod norms;
pub mod point;
pub mod quadrature;
pub mod space;
pub mod sparse;

pub use error::{Error, Result};
pub use point::Point2;

/// One of the two subdomains separated by the interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    /// `Omega_1`, where the level set is negative.
    One,
    /// `Omega_2`, where the level set is positive.
    Two,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::One, Side::Two];

    #[inline]
    pub fn index(self) -> usize {
        match self {
            Side::One => 0,
            Side::Two => 1,
        }
    }

    #[inline]
    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }
}
