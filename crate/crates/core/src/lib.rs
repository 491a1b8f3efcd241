//! Transfer-matrix scattering for potentials in two and three dimensions.
//!
//! The scattering problem is cast as a linear evolution along one axis of a
//! two-component state living on a momentum grid for the remaining
//! (transverse) coordinates.  Only the restriction of the resulting transfer
//! matrix to propagating transverse momenta enters the scattering amplitude,
//! and that restriction is what [`transfer::fundamental_tm`] computes.
//!
//! Module map:
//! - [`grid`]: dispersion, sectors and quadrature grids
//! - [`potential`]: potential descriptions and partial Fourier transforms
//! - [`hamiltonian`]: effective Hamiltonians and the discretized problem
//! - [`transfer`]: evolution, slicing, composition, Dyson series
//! - [`scatter`]: solving for the amplitude; cross-sections; singularity scans
//! - [`closed_form`]: exactly solvable delta-function potentials
//! - [`invisibility`]: Born approximation and support-condition certificates
//! - [`threed`]: the three-dimensional counterparts
//! - [`oracles`]: independent references (one-dimensional transfer matrices,
//!   Bessel functions, real-space Born series)

// `!(a < b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_form;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod invisibility;
pub mod oracles;
pub mod output;
pub mod par;
pub mod potential;
pub mod quad;
pub mod scatter;
pub mod threed;
pub mod transfer;

pub use error::{Error, Result};
pub use grid::{build_grid, MomentumGrid, Sectors, C};
pub use hamiltonian::{BlockOperator, Problem};
pub use potential::PotentialSpec;
pub use scatter::Side;
pub use transfer::{EvolveSettings, Scheme};
