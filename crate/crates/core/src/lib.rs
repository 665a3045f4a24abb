//! Distributed primal-dual subgradient methods for convex problems shared
//! by a network of agents.
//!
//! `N` agents cooperatively solve
//!
//! ```text
//! min  sum_i f^i(x)   s.t.  g(x) <= 0,  h(x) = A x - b = 0,  x in ∩_i X^i
//! ```
//!
//! where agent `i` privately knows `f^i` and `X^i`, and talks only to its
//! current neighbours in a time-varying balanced digraph.
//!
//! * [`dlpds`] handles inequality constraints with per-agent sets, using
//!   Lagrangian saddle points and dual sets built by [`bounds`].
//! * [`dppds`] handles equality (and inequality) constraints with identical
//!   local sets, using a penalty function with growing multipliers.
//!
//! ```
//! use pdnet::{build_quadratic_problem, run_dppds, DppdsConfig, GraphSequence};
//!
//! let problem = build_quadratic_problem();
//! let graph = GraphSequence::rotating_ring(5, 0.1, 0).unwrap();
//! let config = DppdsConfig { rounds: 200, ..Default::default() };
//! let trace = run_dppds(&problem, &graph, &config).unwrap();
//! assert_eq!(trace.records.len(), 200);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod bounds;
pub mod consensus;
pub mod convex;
pub mod dlpds;
pub mod dppds;
pub mod error;
pub mod harness;
mod linalg;
pub mod network;
mod probes;
pub mod problems;
pub mod schedule;
pub mod trace;

pub use baselines::{
    centralized_subgradient, reference_solve, CentralizedConfig, ReferenceMethod, ReferenceOptions, ReferenceSolution,
};
pub use bounds::{
    build_dual_boxes, estimate_local_dual_value, local_bound_init, prepare_dual_boxes, DualBoundConfig, DualBoxes,
    SamplingBudget, SlaterMargin,
};
pub use consensus::{dynamic_average_step, max_min_consensus_step, run_max_min_consensus, MaxMinEstimates};
pub use convex::{abs_map, plus_projection, AffineMap, ConvexFn, LagrangianPieces, PenaltyPieces, ProjectableSet};
pub use dlpds::{dlpds_round, mix, run_dlpds, run_primal_only, DlpdsAgentState, DlpdsConfig, Initialization};
pub use dppds::{dppds_round, run_dppds, DppdsAgentState, DppdsConfig};
pub use error::{Error, Result};
pub use harness::{parse_config, run_experiment, validate, ExperimentConfig};
pub use network::{
    metropolis_sequence, validate_all, validate_balanced, validate_nondegeneracy, validate_periodic_connectivity,
    GraphSequence, Topology, ValidationReport, WeightMatrix,
};
pub use problems::{
    build_custom, build_num_problem, build_quadratic_problem, ProblemDescription, ProblemSpec, Reference,
};
pub use schedule::{per_agent_schedule, validate_assumption6, Assumption6Report, StepSizeSchedule};
pub use trace::{emit_csv, Algorithm, RunTrace};

// The guide's code blocks run as doctests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod book_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/problems.md")]
mod book_problems {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/networks.md")]
mod book_networks {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/consensus.md")]
mod book_consensus {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/step-sizes.md")]
mod book_step_sizes {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dual-bounds.md")]
mod book_dual_bounds {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dlpds.md")]
mod book_dlpds {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/dppds.md")]
mod book_dppds {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/baselines.md")]
mod book_baselines {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod book_cli {}
#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
