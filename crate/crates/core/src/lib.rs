//! Multi-objective drone delivery scheduling.
//!
//! The crate builds a stochastic mixed-integer model of drone delivery with
//! package transfers, outsourcing and customer time windows, solves it with
//! a built-in branch-and-bound solver, sweeps epsilon-constraint grids into
//! Pareto frontiers and checks results against an exhaustive oracle and a
//! Monte Carlo simulator.

pub mod eval;
pub mod formulation;
pub mod instance;
pub mod io;
pub mod milp;
pub mod pareto;
pub mod synthetic;

pub use eval::{evaluate_schedule, ObjectiveVector, Schedule};
pub use formulation::{
    branching_priorities, build_milp, decode_schedule, outsourced_start, FormulationConfig,
    ObjectiveKind, ObjectiveSelection,
};
pub use instance::{validate_instance, Instance};
pub use pareto::{filter_nondominated, payoff_table, scan, EpsRange, EpsilonGrid, ParetoPoint, PayoffTable};
pub use milp::{solve_mip, MilpModel, SolveResult, SolveStatus, SolverParams};
