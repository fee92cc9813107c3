//! Edge-based smoothed and classical linear finite elements for
//! electrostatics on axisymmetric triangles and Cartesian tetrahedra.
//!
//! The usual pipeline is mesh → [`bvp::BvpSpec`] → [`assembly::build_system`]
//! → [`solver::solve`], with [`analysis`] for reference solutions and the cube
//! benchmark study.

pub mod analysis;
pub mod assembly;
pub mod bvp;
pub mod error;
pub mod geom;
pub mod mesh;
pub mod shapefn;
pub mod smoothing;
pub mod solver;
pub mod sparse;
pub mod verification;

pub use assembly::{assemble, build_system, Method, SparseSystem};
pub use bvp::{Affine, BoundaryCondition, BvpSpec, CheckedBvp, Field};
pub use error::{Error, Result};
pub use geom::Point;
pub use mesh::{Extents, Mesh, Mode};
pub use smoothing::{build_smoothing_domains, SmoothingDomainSet};
pub use solver::{solve, SolveMethod, SolveOptions, SolveReport};
