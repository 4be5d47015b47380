//! Modal laboratory for time-harmonic waveguide problems: transverse
//! eigenbases, 1D modal boundary value problems with Dirichlet-to-Neumann
//! outflow conditions, acoustic and Maxwell modal solvers, and ultraweak
//! inf-sup diagnostics.

pub mod acoustic_waveguide;
pub mod dpg_core;
pub mod error;
pub mod experiment;
pub mod helmholtz_1d;
pub mod linalg;
pub mod maxwell_waveguide;
pub mod mode_map;
pub mod rng;
pub mod transverse_spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
