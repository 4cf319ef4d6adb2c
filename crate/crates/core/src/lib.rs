//! Local error bounds for affine variational inequalities over polyhedral
//! convex sets.
//!
//! The crate computes Euclidean projections onto polyhedra, the natural
//! residual `R(x) = x − P_C(x − Mx − q)`, the active-set decomposition of
//! `R⁻¹(y)` and of the solution set, and empirical constants for the
//! upper-Lipschitz property of `R⁻¹` and the local error bound
//! `d(x, C*) ≤ c‖R(x)‖`. Generalized polyhedral multifunctions get their own
//! module: domains, the value function `g` in primal and dual form, and
//! Hausdorff–Lipschitz modulus estimation.

pub mod avi;
pub mod bounds;
pub mod error;
pub mod gpm;
pub mod instgen;
pub mod linalg;
pub mod optkernel;
pub mod polyhedra;
pub mod report;
pub mod rng;
pub mod settings;
pub mod solvers;

pub use avi::{AviInstance, KktPiece, ResidualPiece, ResidualValue};
pub use bounds::{BoundReport, ErrorBoundConfig, LipschitzCheckConfig};
pub use error::{Error, Result};

pub use gpm::{GpMultifunction, GpRow};
pub use instgen::{CannedEntry, InstanceManifest, SuiteInstance, TruncationFamily};
pub use optkernel::{LinearProgram, LpStatus, QpProjectionProblem, Sense, SolveStatus};
pub use polyhedra::{Constraint, HausdorffDistance, PolyhedralSet, VertexSet};
pub use settings::{Caps, Settings, Tolerances};
pub use solvers::{SolveTrace, SolverConfig, SolverMethod};
