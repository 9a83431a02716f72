//! Certified flag-algebra upper bounds for Turán densities of vertex- and
//! edge-coloured hypercubes, including partially defined (grey-edged) cubes
//! and the linear constraints they admit.
//!
//! The pipeline: enumerate the `F`-free cubes of a fixed dimension up to
//! isomorphism, build flag bases and their exact pair-density coefficients,
//! hand a semidefinite program to an external solver, round its answer to an
//! exact rational certificate, and verify that certificate with exact
//! arithmetic only.

pub mod canon;
pub mod certify;
pub mod cli;
pub mod colour;
pub mod constraints;
pub mod constructions;
pub mod cube;
pub mod error;
pub mod flags;
pub mod problem;
pub mod rational;
pub mod sdp;
pub mod testing;

pub use colour::{Colour, CubeColouring, ForbiddenFamily, Mode};
pub use error::{Error, Result};
