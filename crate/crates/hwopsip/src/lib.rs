//! Hybrid weakly over-penalised symmetric interior penalty (HWOPSIP) method
//! for the Poisson problem on anisotropic triangular meshes.
//!
//! The discrete unknowns are element-local face-mean coefficients
//! (nonconforming linears) together with one single-valued multiplier per
//! mesh face. Instead of penalising the jump between neighbouring elements
//! directly, each element's face mean is coupled to the shared multiplier
//! with weight h^(-2*beta)/ell_{T,F}, where ell_{T,F} is the altitude of the
//! element over the face. The altitude scaling keeps the penalty meaningful
//! on arbitrarily thin elements, and the h^(-2*beta) over-penalisation makes
//! the scheme stable for any positive penalty parameter.
//!
//! The crate provides the four structured mesh families used for the
//! convergence studies (uniform, Shishkin, cosine-graded, quadratic-graded),
//! element-level operators (face-mean and face-flux interpolation, mean
//! projections, the Piola transform), system assembly, an unpreconditioned
//! conjugate-gradient solver, discrete error norms, and the `hwopsip` CLI
//! driving the mesh -> assemble -> solve -> error pipeline against vendored
//! reference tables.

pub mod assembly;
pub mod elements;
pub mod errors;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod study;

pub use assembly::{assemble_system, CsrMatrix, DofMap, PenaltyParams};
pub use errors::{DiscreteSolution, ExactSolution};
pub use geometry::{characterize, ElementGeometry, Point};
pub use mesh::{FamilyKind, Mesh, MeshFamily};
pub use solver::{cg_solve, CgOptions, SolveReport};
pub use study::{run_study, StudyConfig, StudyRow};
