//! Numerical laboratory for a two-phase Euler-Bernoulli beam with boundary
//! force/moment feedback.
//!
//! * [`mesh`]: two-phase 1D mesh and 2D sampling grids.
//! * [`generator`]: mixed-form discrete generator, energy, `G = -alpha Laplacian`.
//! * [`evolution`]: Crank-Nicolson trajectories, dissipation ledger, decay fits.
//! * [`spectral`]: spectrum, resolvent norms and scans, factorized resolvent solve.
//! * [`carleman`]: polynomial weights, conjugated symbols, sub-ellipticity,
//!   weight-pair flow, weighted inequality checks.

pub mod carleman;
pub mod error;
pub mod evolution;
pub mod generator;
pub mod linalg;
pub mod mesh;
pub mod spectral;

pub use error::{Error, Result};
pub use generator::{assemble_generator, assemble_hinged, EndCondition, GeneratorMatrix, PlateState};
pub use mesh::{build_mesh, Grid2D, Mesh1D};

pub type C64 = num_complex::Complex64;
