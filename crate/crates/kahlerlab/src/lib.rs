//! Numerical laboratory for the normalized Kähler-Ricci flow on
//! U(n)-invariant metrics of CP^n in the anticanonical class.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod constants;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod config;
pub mod geometry;
pub mod io;
pub mod momentum;
pub mod monitors;
pub mod quadrature;
pub mod runner;
pub mod segment;
pub mod stencil;

pub use error::{LabError, Result};
pub use geometry::{CurvatureFrame, ProfileGeometry, RadialProfile};
