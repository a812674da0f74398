//! Exact cross-sections N_s Z s^-1 of conjugacy classes in adjoint Chevalley groups.

pub mod chevalley;
pub mod cli;
pub mod crosssection;
pub mod error;
pub mod qmath;
pub mod quotient;
pub mod rootsys;
pub mod slicegeom;
pub mod spectral;
pub mod subregular;

pub use error::{Error, Result};
