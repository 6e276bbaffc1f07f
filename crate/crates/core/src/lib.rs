//! Simulation of a one-dimensional tight-binding chain driven by a DC field
//! and coupled site-by-site to a half-filled fermionic reservoir.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: integer-order Bessel functions, `Re ψ(1/2 - iy)`, Fermi factor.
//! - [`model`]: parameters, Peierls phase and the time-dependent master-equation
//!   coefficients `a_k(t)`, `A_k(t)` (Bessel series and direct quadrature).
//! - [`master`]: the per-momentum 2×2 master equation, the scalar occupation
//!   equation and its long-time closed form.
//! - [`observables`]: momentum profiles, DC current and the relative L1 norm.
//! - [`oracle`]: exact evolution of one momentum mode coupled to a finite,
//!   discretised bath.
//! - [`channel`]: Liouvillian, dynamical map, Choi matrix and Kraus operators.
//! - [`circuit`]: three-qubit dilation circuits, tomography and readout mitigation.
//! - [`io`]: CSV writers shared by the command-line front end.

pub mod channel;
pub mod circuit;
pub mod error;
pub mod io;
pub mod master;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod ops;
pub mod specfun;

pub use error::{Error, Result};
pub use num_complex::Complex64;
