//! Numerical core for gluing analysis on noded Riemann surfaces.
//!
//! The crate is `no_std` (with `alloc`) and covers:
//!
//! * [`surface`]: combinatorics of noded surfaces, stability and the forgetful
//!   (weeding) algorithm;
//! * [`profile`]: gluing profiles, gluing parameters, sc-scales;
//! * [`cylinder`] and [`neck`]: grid-sampled maps on half-cylinders and glued
//!   necks together with their weighted Sobolev norms;
//! * [`splice`]: cut-off functions, gluing and anti-gluing, the total gluing
//!   isomorphism and the splicing projections;
//! * [`cr`]: discretized Cauchy-Riemann operators, the filled section, mode
//!   solvers and related diagnostics.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
pub mod math;

pub mod cr;
pub mod cylinder;
pub mod estimates;
pub mod neck;
pub mod profile;
pub mod sample;
pub mod splice;
pub mod surface;
pub mod trig;

pub use error::{Error, Result};
