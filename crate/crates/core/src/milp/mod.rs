//! Mixed-integer linear programming: model, LP relaxation engine,
//! branch-and-bound and LP-format interchange.

mod bnb;
mod factor;
pub mod lp_format;
mod model;
mod simplex;

use std::fmt;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bnb::solve_mip;
pub use lp_format::{export_lp_text, import_lp_text, LpParseError};
pub use model::{
    Constraint, LinExpr, MilpModel, Objective, Relation, Sense, VarId, VarKind, Variable,
};

use simplex::{LpEngine, LpOutcome, StdForm};

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("invalid solver parameters: {0}")]
    Params(String),
    #[error("numerical trouble: {0}")]
    Numerical(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "OPTIMAL",
            SolveStatus::Infeasible => "INFEASIBLE",
            SolveStatus::Unbounded => "UNBOUNDED",
            SolveStatus::NodeLimit => "NODE_LIMIT",
            SolveStatus::TimeLimit => "TIME_LIMIT",
        })
    }
}

impl std::str::FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "OPTIMAL" => Ok(SolveStatus::Optimal),
            "INFEASIBLE" => Ok(SolveStatus::Infeasible),
            "UNBOUNDED" => Ok(SolveStatus::Unbounded),
            "NODE_LIMIT" => Ok(SolveStatus::NodeLimit),
            "TIME_LIMIT" => Ok(SolveStatus::TimeLimit),
            other => Err(format!("unknown status {other}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchingRule {
    MostFractional,
    PseudoCost,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolverParams {
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    /// Relative optimality gap at which branch-and-bound stops.
    pub mip_gap: f64,
    pub node_limit: Option<u64>,
    pub time_limit_s: Option<f64>,
    pub branching: BranchingRule,
    /// Per-variable branching priority; fractional variables of the highest
    /// priority present are branched on first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub priorities: Option<Vec<i32>>,
    /// Partial MIP start: listed values are fixed and the remaining
    /// variables are completed by a short search. A feasible completion
    /// becomes the first incumbent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<Option<f64>>>,
    /// Carried for reproducible run records; every algorithm in this module
    /// is deterministic, so no stream is drawn from it.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            feasibility_tol: 1e-7,
            integrality_tol: 1e-6,
            mip_gap: 1e-6,
            node_limit: None,
            time_limit_s: None,
            branching: BranchingRule::MostFractional,
            priorities: None,
            start: None,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), MilpError> {
        if !(self.feasibility_tol > 0.0 && self.integrality_tol > 0.0 && self.mip_gap > 0.0) {
            return Err(MilpError::Params("tolerances must be positive".into()));
        }
        if let Some(t) = self.time_limit_s {
            if !(t > 0.0) {
                return Err(MilpError::Params("time limit must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: Option<f64>,
    /// Values indexed like `MilpModel::variables`.
    pub values: Option<Vec<f64>>,
    /// Best proven bound on the optimum (model sense).
    pub best_bound: Option<f64>,
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
    /// Row duals of an optimal LP, indexed like `MilpModel::constraints`.
    pub duals: Option<Vec<f64>>,
    /// Lagrangian bound computed from the final basis (LP solves only).
    pub dual_bound: Option<f64>,
}

impl SolveResult {
    fn empty(status: SolveStatus, started: Instant) -> SolveResult {
        SolveResult {
            status,
            objective: None,
            values: None,
            best_bound: None,
            nodes: 0,
            lp_iterations: 0,
            wall_time: started.elapsed(),
            duals: None,
            dual_bound: None,
        }
    }

    pub fn has_solution(&self) -> bool {
        self.values.is_some()
    }

    pub fn value(&self, model: &MilpModel, name: &str) -> Option<f64> {
        let v = model.var_by_name(name)?;
        self.values.as_ref().map(|vals| vals[v.0])
    }
}

/// Solves the continuous relaxation of `model` (integrality is ignored).
pub fn solve_lp(model: &MilpModel, params: &SolverParams) -> Result<SolveResult, MilpError> {
    model.validate()?;
    params.validate()?;
    let started = Instant::now();
    let sf = StdForm::from_model(model, params.feasibility_tol);
    let mut engine = LpEngine::new(&sf, params.feasibility_tol);
    let outcome = engine.solve(None);
    let mut res = SolveResult::empty(SolveStatus::Infeasible, started);
    res.lp_iterations = engine.iterations;
    match outcome {
        LpOutcome::Optimal => {
            let values = engine.values().to_vec();
            let y = engine.duals();
            let bound = engine.dual_bound(&y);
            let mut duals = vec![0.0; model.num_constraints()];
            for (r, &i) in sf.row_of.iter().enumerate() {
                duals[i] = sf.obj_sign * y[r];
            }
            let obj = model.objective_value(&values);
            res.status = SolveStatus::Optimal;
            res.objective = Some(obj);
            res.best_bound = Some(obj);
            res.dual_bound = Some(sf.obj_sign * bound + sf.obj_constant);
            res.duals = Some(duals);
            res.values = Some(values);
        }
        LpOutcome::Infeasible | LpOutcome::Cutoff => res.status = SolveStatus::Infeasible,
        LpOutcome::Unbounded => res.status = SolveStatus::Unbounded,
        LpOutcome::IterationLimit => {
            return Err(MilpError::Numerical(
                "simplex iteration limit reached".into(),
            ))
        }
    }
    res.wall_time = started.elapsed();
    Ok(res)
}
