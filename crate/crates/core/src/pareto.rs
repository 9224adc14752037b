//! Epsilon-constraint scans and Pareto filtering.
//!
//! A scan optimizes one primary objective over a Cartesian grid of bounds
//! on the other two. Cell results are re-evaluated from the decoded
//! schedule, so reported vectors never depend on solver round-off.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate_schedule, ObjectiveVector, Schedule};
use crate::formulation::{
    branching_priorities, build_milp, decode_schedule, outsourced_start, FormulationConfig,
    FormulationError, ObjectiveKind, ObjectiveSelection,
};
use crate::instance::Instance;
use crate::milp::{solve_mip, MilpError, SolveStatus, SolverParams};

pub const DEFAULT_STEPS: usize = 20;

#[derive(Debug, Error)]
pub enum ParetoError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solver(#[from] MilpError),
    #[error("{0} optimum could not be established (status {1})")]
    NoOptimum(ObjectiveKind, SolveStatus),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("decoded schedule is inconsistent: {0}")]
    Decode(String),
}

/// Bound values for one constrained objective.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsRange {
    pub kind: ObjectiveKind,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl EpsRange {
    /// Grid values in ascending order. A single step sits at the loosest
    /// end of the range.
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => vec![],
            1 if self.kind == ObjectiveKind::Reward => vec![self.min],
            1 => vec![self.max],
            n => {
                let h = (self.max - self.min) / (n - 1) as f64;
                (0..n)
                    .map(|k| if k == n - 1 { self.max } else { self.min + h * k as f64 })
                    .collect()
            }
        }
    }
}

/// Cells are visited with the first range outermost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonGrid {
    pub primary: ObjectiveKind,
    pub ranges: Vec<EpsRange>,
}

impl EpsilonGrid {
    pub fn validate(&self) -> Result<(), ParetoError> {
        for (k, r) in self.ranges.iter().enumerate() {
            if r.kind == self.primary {
                return Err(ParetoError::Grid(format!("{} is the primary objective", r.kind)));
            }
            if self.ranges[..k].iter().any(|o| o.kind == r.kind) {
                return Err(ParetoError::Grid(format!("{} appears twice", r.kind)));
            }
            if !(r.min.is_finite() && r.max.is_finite()) {
                return Err(ParetoError::Grid(format!("{} range is not finite", r.kind)));
            }
            if r.min > r.max {
                return Err(ParetoError::Grid(format!("{} range has min {} > max {}", r.kind, r.min, r.max)));
            }
            if r.steps == 0 {
                return Err(ParetoError::Grid(format!("{} needs at least one step", r.kind)));
            }
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<ObjectiveSelection> {
        let mut cells = vec![ObjectiveSelection::unconstrained(self.primary)];
        for r in &self.ranges {
            let values = r.values();
            cells = cells
                .iter()
                .flat_map(|c| values.iter().map(move |&v| set_bound(*c, r.kind, v)))
                .collect();
        }
        cells
    }

    /// Grid over the payoff-table ranges of the two non-primary objectives.
    pub fn from_payoff(table: &PayoffTable, primary: ObjectiveKind, steps: [usize; 3]) -> Self {
        let ranges = ObjectiveKind::ALL
            .iter()
            .zip(steps)
            .filter(|(k, _)| **k != primary)
            .map(|(&kind, steps)| {
                let (min, max) = table.range(kind);
                EpsRange { kind, min, max, steps }
            })
            .collect();
        EpsilonGrid { primary, ranges }
    }
}

fn set_bound(mut sel: ObjectiveSelection, kind: ObjectiveKind, v: f64) -> ObjectiveSelection {
    match kind {
        ObjectiveKind::Cost => sel.eps_c = Some(v),
        ObjectiveKind::Unsuccessful => sel.eps_u = Some(v),
        ObjectiveKind::Reward => sel.eps_r = Some(v),
    }
    sel
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub selection: ObjectiveSelection,
    pub status: SolveStatus,
    /// Present iff the solve produced a schedule.
    pub objectives: Option<ObjectiveVector>,
    pub schedule: Option<Schedule>,
    /// Objective value reported by the solver.
    pub model_objective: Option<f64>,
    pub nodes: u64,
    pub wall_time_s: f64,
}

/// Fills in the branching priorities and the outsourced start when the
/// caller did not set them.
pub fn driver_params(instance: &Instance, params: &SolverParams) -> SolverParams {
    let mut p = params.clone();
    if p.priorities.is_none() {
        p.priorities = Some(branching_priorities(instance));
    }
    if p.start.is_none() {
        p.start = Some(outsourced_start(instance));
    }
    p
}

/// Builds, solves and decodes one cell.
pub fn solve_selection(
    instance: &Instance,
    selection: &ObjectiveSelection,
    params: &SolverParams,
    config: &FormulationConfig,
) -> Result<ParetoPoint, ParetoError> {
    let model = build_milp(instance, selection, config)?;
    let res = solve_mip(&model, &driver_params(instance, params))?;
    let (objectives, schedule) = match &res.values {
        Some(x) => {
            let s = decode_schedule(instance, x).map_err(|e| ParetoError::Decode(e.to_string()))?;
            let v = evaluate_schedule(instance, &s).map_err(|e| ParetoError::Decode(e.to_string()))?;
            (Some(v), Some(s))
        }
        None => (None, None),
    };
    log::info!("{selection:?}: {} in {:.2?} ({} nodes)", res.status, res.wall_time, res.nodes);
    Ok(ParetoPoint {
        selection: *selection,
        status: res.status,
        objectives,
        schedule,
        model_objective: res.objective,
        nodes: res.nodes,
        wall_time_s: res.wall_time.as_secs_f64(),
    })
}

/// One solve per grid cell, in grid order.
pub fn scan(
    instance: &Instance,
    grid: &EpsilonGrid,
    params: &SolverParams,
    config: &FormulationConfig,
) -> Result<Vec<ParetoPoint>, ParetoError> {
    grid.validate()?;
    instance.validate().map_err(FormulationError::from)?;
    let params = driver_params(instance, params);
    grid.cells().par_iter().map(|sel| solve_selection(instance, sel, &params, config)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffRow {
    pub primary: ObjectiveKind,
    pub status: SolveStatus,
    pub objectives: ObjectiveVector,
}

/// Objective vectors at the three single-objective optima.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    pub rows: Vec<PayoffRow>,
}

impl PayoffTable {
    pub fn row(&self, primary: ObjectiveKind) -> &PayoffRow {
        self.rows.iter().find(|r| r.primary == primary).expect("one row per objective")
    }

    pub fn best(&self, kind: ObjectiveKind) -> f64 {
        self.row(kind).objectives.get(kind)
    }

    /// Least favourable value of `kind` over the rows.
    pub fn worst(&self, kind: ObjectiveKind) -> f64 {
        let vals = self.rows.iter().map(|r| r.objectives.get(kind));
        match kind {
            ObjectiveKind::Reward => vals.fold(f64::INFINITY, f64::min),
            _ => vals.fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// `(min, max)` spanned by best and worst.
    pub fn range(&self, kind: ObjectiveKind) -> (f64, f64) {
        let (a, b) = (self.best(kind), self.worst(kind));
        (a.min(b), a.max(b))
    }
}

pub fn payoff_table(
    instance: &Instance,
    params: &SolverParams,
    config: &FormulationConfig,
) -> Result<PayoffTable, ParetoError> {
    let rows = ObjectiveKind::ALL
        .par_iter()
        .map(|&kind| {
            let p = solve_selection(instance, &ObjectiveSelection::unconstrained(kind), params, config)?;
            match p.objectives {
                Some(objectives) => Ok(PayoffRow { primary: kind, status: p.status, objectives }),
                None => Err(ParetoError::NoOptimum(kind, p.status)),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PayoffTable { rows })
}

const TIE_TOL: f64 = 1e-9;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * (1.0 + a.abs().max(b.abs()))
}

fn no_worse(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    (a.total_cost <= b.total_cost || close(a.total_cost, b.total_cost))
        && (a.unsuccessful_pct <= b.unsuccessful_pct || close(a.unsuccessful_pct, b.unsuccessful_pct))
        && (a.reward >= b.reward || close(a.reward, b.reward))
}

fn same(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    close(a.total_cost, b.total_cost) && close(a.unsuccessful_pct, b.unsuccessful_pct) && close(a.reward, b.reward)
}

/// Dominance with ties up to a relative tolerance of 1e-9.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    no_worse(a, b) && !same(a, b)
}

/// Positions of the non-dominated vectors; of several equal vectors only
/// the first is kept.
pub fn nondominated_indices(vectors: &[ObjectiveVector]) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    for (i, v) in vectors.iter().enumerate() {
        if vectors.iter().any(|o| dominates(o, v)) || kept.iter().any(|&k| same(&vectors[k], v)) {
            continue;
        }
        kept.push(i);
    }
    kept
}

/// Positions in `points` of the frontier; points without objective vectors
/// never qualify.
pub fn frontier_indices(points: &[ParetoPoint]) -> Vec<usize> {
    let with: Vec<usize> = (0..points.len()).filter(|&k| points[k].objectives.is_some()).collect();
    let vectors: Vec<ObjectiveVector> = with.iter().filter_map(|&k| points[k].objectives).collect();
    nondominated_indices(&vectors).into_iter().map(|k| with[k]).collect()
}

/// Frontier of the points that carry objective vectors, in input order.
pub fn filter_nondominated(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    frontier_indices(points).into_iter().map(|k| points[k].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: f64, u: f64, r: f64) -> ObjectiveVector {
        ObjectiveVector { total_cost: c, unsuccessful_pct: u, reward: r }
    }

    #[test]
    fn trade_off_pair_survives() {
        let pts = [v(415.16, 13.325, 0.0), v(640.0, 0.0, 0.0)];
        assert_eq!(nondominated_indices(&pts), vec![0, 1]);
    }

    #[test]
    fn strict_dominance_and_duplicates() {
        assert_eq!(nondominated_indices(&[v(500.0, 5.0, 0.0), v(450.0, 5.0, 0.0)]), vec![1]);
        assert_eq!(nondominated_indices(&[v(1.0, 2.0, 3.0), v(1.0, 2.0, 3.0)]), vec![0]);
        assert_eq!(nondominated_indices(&[v(1.0, 2.0, 3.0)]), vec![0]);
        assert_eq!(nondominated_indices(&[v(1.0, 2.0, 3.0), v(1.0, 2.0, 4.0)]), vec![1]);
    }

    #[test]
    fn grid_values_ascend_and_single_step_is_loosest() {
        let r = EpsRange { kind: ObjectiveKind::Unsuccessful, min: 0.0, max: 10.0, steps: 5 };
        assert_eq!(r.values(), vec![0.0, 2.5, 5.0, 7.5, 10.0]);
        assert_eq!(EpsRange { steps: 1, ..r }.values(), vec![10.0]);
        let r = EpsRange { kind: ObjectiveKind::Reward, min: 3.0, max: 9.0, steps: 1 };
        assert_eq!(r.values(), vec![3.0]);
    }

    #[test]
    fn cells_follow_range_order() {
        let grid = EpsilonGrid {
            primary: ObjectiveKind::Cost,
            ranges: vec![
                EpsRange { kind: ObjectiveKind::Unsuccessful, min: 0.0, max: 1.0, steps: 2 },
                EpsRange { kind: ObjectiveKind::Reward, min: 0.0, max: 4.0, steps: 3 },
            ],
        };
        let cells = grid.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[0].eps_u, cells[0].eps_r), (Some(0.0), Some(0.0)));
        assert_eq!((cells[1].eps_u, cells[1].eps_r), (Some(0.0), Some(2.0)));
        assert_eq!((cells[5].eps_u, cells[5].eps_r), (Some(1.0), Some(4.0)));
        assert!(cells.iter().all(|c| c.eps_c.is_none()));
    }

    #[test]
    fn bad_grids_are_rejected() {
        let bad = |ranges| EpsilonGrid { primary: ObjectiveKind::Cost, ranges }.validate().is_err();
        let r = EpsRange { kind: ObjectiveKind::Reward, min: 0.0, max: 1.0, steps: 2 };
        assert!(bad(vec![EpsRange { kind: ObjectiveKind::Cost, ..r }]));
        assert!(bad(vec![r, r]));
        assert!(bad(vec![EpsRange { min: 2.0, ..r }]));
        assert!(bad(vec![EpsRange { steps: 0, ..r }]));
        assert!(!bad(vec![r]));
    }
}
