//! Projection-based prediction-correction method (PPCM) for distributed
//! consensus optimization.
//!
//! The crate is `no_std` (with `alloc`) and holds the numerical core:
//!
//! - [`graph`]: agent networks, uniform `1/(2p)` weights, Laplacians;
//! - [`sets`]: closed-form Euclidean projections;
//! - [`problem`]: per-agent objectives and the stacked consensus problem;
//! - [`vi`]: the centralized solver, with unit or adaptive correction steps;
//! - [`runtime`]: a deterministic synchronous simulator running PPCM agent by
//!   agent over an in-process message bus, plus the weighted-averaging
//!   gradient baseline.
//!
//! File formats, reports and the command-line harness live in the
//! `ppcm-bench` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod graph;
mod kernels;
pub mod linalg;
pub mod problem;
pub mod runtime;
pub mod sets;
pub mod vi;

pub use error::{Error, Result};
pub use graph::{
    adjacency_uniform, algebraic_connectivity, apply_a, build_topology, laplacian, LaplacianMatrix, Topology,
    TopologyKind, WeightedGraph,
};
pub use linalg::{BlockVector, DenseMatrix};
pub use problem::{
    consensus_objective, generate_lsq, generate_lsq_instance, oracle_solve, toy_instance, AgentProblem,
    ConsensusProblem, LsqInstance, Objective, QuadraticObjective,
};
pub use runtime::{consensus_gap, simulate, Method, SimulationConfig, Transcript, WagmStep};
pub use sets::ConvexSet;
pub use vi::{
    extragradient_solve, solve, vi_residual, PrimalDualPoint, RunReport, ScalingState, SolveOutcome, SolverConfig,
    StepMode, Termination,
};
