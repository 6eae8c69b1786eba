//! Pseudo-spectral incompressible Navier-Stokes on the periodic box, with
//! executable versions of the energy, decay and stability estimates for
//! two-dimensional flows and their three-dimensional perturbations.

pub mod error;
pub mod estimates;
pub mod experiment;
pub mod fft;
pub mod field;
pub mod forcing;
pub mod grid;
pub mod io;
pub mod norms;
pub mod quadrature;
pub mod solver;

pub use error::FieldError;
pub use field::{Field, MeanVector, Representation};
pub use grid::TorusGrid;
