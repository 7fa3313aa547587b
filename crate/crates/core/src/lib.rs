#![no_std]
//! Exact and numerical steady-state fitness laws of the five-species Bak-Sneppen model.
//!
//! * [`coeffs`]: exact rational coefficient tables of the k-step densities.
//! * [`hypergeom`]: the hypergeometric functions `F_{n,m}`, `G`, `G2` and script-G.
//! * [`ode5`]: the fifth-order linear ODE for the steady-state generating function.
//! * [`steady`]: steady-state joint density, marginal density and CDF.
//! * [`sim`]: Monte Carlo simulation of the chain.

extern crate alloc;

pub mod coeffs;
pub mod error;
pub mod hypergeom;
pub mod ode5;
pub mod quadrature;
pub mod sim;
pub mod steady;

pub use error::{Error, Result};
