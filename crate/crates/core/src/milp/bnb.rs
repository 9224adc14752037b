//! LP-based branch-and-bound.
//!
//! Node selection plunges depth-first until the first incumbent is found or
//! `PLUNGE_NODES` nodes have been processed, and then switches to best-bound
//! order (ties go to the deeper node, then the older one). Each node re-optimizes from its parent's final basis, which
//! stays dual feasible under the tightened bounds.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::simplex::{LpEngine, LpOutcome, StdForm, VarState};
use super::{BranchingRule, MilpError, MilpModel, SolveResult, SolveStatus, SolverParams};

const PLUNGE_NODES: u64 = 100;

struct Node {
    id: u64,
    parent: u64,
    depth: u32,
    /// Parent LP objective (minimization form).
    bound: f64,
    changes: Vec<(usize, f64, f64)>,
    basis: Option<Rc<Vec<VarState>>>,
    branch: Option<BranchInfo>,
}

#[derive(Clone, Copy)]
struct BranchInfo {
    var: usize,
    up: bool,
    distance: f64,
}

struct Ranked(Node);

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    // BinaryHeap is a max-heap: "greater" means "explore first".
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .bound
            .total_cmp(&self.0.bound)
            .then(self.0.depth.cmp(&other.0.depth))
            .then(other.0.id.cmp(&self.0.id))
    }
}

#[derive(Default)]
struct Frontier {
    stack: Vec<Node>,
    heap: BinaryHeap<Ranked>,
    best_first: bool,
}

impl Frontier {
    fn push(&mut self, node: Node) {
        if self.best_first {
            self.heap.push(Ranked(node));
        } else {
            self.stack.push(node);
        }
    }

    fn pop(&mut self) -> Option<Node> {
        if self.best_first {
            self.heap.pop().map(|r| r.0)
        } else {
            self.stack.pop()
        }
    }

    fn switch_to_best_first(&mut self) {
        if !self.best_first {
            self.best_first = true;
            for n in self.stack.drain(..) {
                self.heap.push(Ranked(n));
            }
        }
    }

    fn min_bound(&self) -> Option<f64> {
        let s = self.stack.iter().map(|n| n.bound);
        let h = self.heap.peek().map(|r| r.0.bound);
        s.chain(h).min_by(|a, b| a.total_cmp(b))
    }
}

#[derive(Clone, Default)]
struct PseudoCosts {
    up_sum: Vec<f64>,
    up_count: Vec<u32>,
    down_sum: Vec<f64>,
    down_count: Vec<u32>,
}

impl PseudoCosts {
    fn new(n: usize) -> Self {
        PseudoCosts {
            up_sum: vec![0.0; n],
            up_count: vec![0; n],
            down_sum: vec![0.0; n],
            down_count: vec![0; n],
        }
    }

    fn record(&mut self, info: BranchInfo, gain: f64) {
        let per_unit = gain.max(0.0) / info.distance.max(1e-9);
        if info.up {
            self.up_sum[info.var] += per_unit;
            self.up_count[info.var] += 1;
        } else {
            self.down_sum[info.var] += per_unit;
            self.down_count[info.var] += 1;
        }
    }

    fn averages(&self) -> (f64, f64) {
        let avg = |sum: &[f64], count: &[u32]| {
            let (s, c) = sum
                .iter()
                .zip(count)
                .filter(|(_, &c)| c > 0)
                .fold((0.0, 0u32), |a, (s, c)| (a.0 + s, a.1 + c));
            if c == 0 {
                1.0
            } else {
                s / c as f64
            }
        };
        (
            avg(&self.up_sum, &self.up_count),
            avg(&self.down_sum, &self.down_count),
        )
    }

    fn score(&self, var: usize, frac: f64, defaults: (f64, f64)) -> f64 {
        let up = if self.up_count[var] > 0 {
            self.up_sum[var] / self.up_count[var] as f64
        } else {
            defaults.0
        };
        let down = if self.down_count[var] > 0 {
            self.down_sum[var] / self.down_count[var] as f64
        } else {
            defaults.1
        };
        (down * frac).max(1e-6) * (up * (1.0 - frac)).max(1e-6)
    }
}

struct Search<'m> {
    model: &'m MilpModel,
    params: &'m SolverParams,
    discrete: Vec<usize>,
    incumbent: Option<(f64, Vec<f64>)>,
    pseudo: PseudoCosts,
    started: Instant,
}

impl Search<'_> {
    fn gap_abs(&self, inc: f64) -> f64 {
        (self.params.mip_gap * inc.abs()).max(1e-9)
    }

    fn cutoff(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|(v, _)| v - self.gap_abs(*v))
    }

    fn fractional(&self, x: &[f64]) -> Vec<(usize, f64)> {
        let tol = self.params.integrality_tol;
        self.discrete
            .iter()
            .filter_map(|&j| {
                let f = x[j] - x[j].floor();
                (f > tol && f < 1.0 - tol).then_some((j, f))
            })
            .collect()
    }

    fn choose_branch(&self, fractional: &[(usize, f64)]) -> (usize, f64) {
        let tiered: Vec<(usize, f64)>;
        let fractional = match &self.params.priorities {
            Some(pr) => {
                let top = fractional
                    .iter()
                    .map(|&(j, _)| pr[j])
                    .max()
                    .expect("nonempty");
                tiered = fractional
                    .iter()
                    .copied()
                    .filter(|&(j, _)| pr[j] == top)
                    .collect();
                &tiered[..]
            }
            None => fractional,
        };
        match self.params.branching {
            BranchingRule::MostFractional => {
                let mut best = fractional[0];
                let mut best_score = -1.0;
                for &(j, f) in fractional {
                    let s = f.min(1.0 - f);
                    if s > best_score + 1e-12 {
                        best_score = s;
                        best = (j, f);
                    }
                }
                best
            }
            BranchingRule::PseudoCost => {
                let defaults = self.pseudo.averages();
                let mut best = fractional[0];
                let mut best_score = -1.0;
                for &(j, f) in fractional {
                    let s = self.pseudo.score(j, f, defaults);
                    if s > best_score * (1.0 + 1e-12) {
                        best_score = s;
                        best = (j, f);
                    }
                }
                best
            }
        }
    }

    /// Fixes every discrete variable at its rounded value and re-solves the
    /// continuous part. Returns the polished point if it is feasible.
    fn polish(&self, engine: &mut LpEngine, sf: &StdForm, x: &[f64]) -> Option<(f64, Vec<f64>)> {
        for &j in &self.discrete {
            let r = x[j].round();
            engine.set_bounds(j, r, r);
        }
        if engine.solve(None) != LpOutcome::Optimal {
            return None;
        }
        let mut values = engine.values().to_vec();
        for &j in &self.discrete {
            values[j] = values[j].round();
        }
        let viol = self.model.max_violation(&values);
        if viol > 1e-5 {
            log::warn!("rejecting rounded incumbent with violation {viol:e}");
            return None;
        }
        let obj = sf.obj_sign * (self.model.objective_value(&values) - sf.obj_constant);
        Some((obj, values))
    }
}

/// Solves `model` to optimality (within `params.mip_gap`) by branch-and-bound.
pub fn solve_mip(model: &MilpModel, params: &SolverParams) -> Result<SolveResult, MilpError> {
    model.validate()?;
    params.validate()?;
    if params
        .priorities
        .as_ref()
        .is_some_and(|p| p.len() != model.num_vars())
    {
        return Err(MilpError::Params(
            "one branching priority per variable is required".into(),
        ));
    }
    if params
        .start
        .as_ref()
        .is_some_and(|s| s.len() != model.num_vars())
    {
        return Err(MilpError::Params(
            "a MIP start needs one entry per variable".into(),
        ));
    }
    let started = Instant::now();
    let sf = StdForm::from_model(model, params.feasibility_tol);
    let mut engine = LpEngine::new(&sf, params.feasibility_tol);
    engine.deadline = params
        .time_limit_s
        .map(|t| started + std::time::Duration::from_secs_f64(t));
    let discrete: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind.is_discrete())
        .map(|(j, _)| j)
        .collect();

    // Integer variables with fractional bounds are rounded inward.
    let mut root_changes = Vec::new();
    for &j in &discrete {
        let v = &model.variables[j];
        let lo = (v.lower - params.integrality_tol).ceil();
        let hi = (v.upper + params.integrality_tol).floor();
        if lo != v.lower || hi != v.upper {
            root_changes.push((j, lo, hi));
        }
    }

    let mut search = Search {
        model,
        params,
        discrete,
        incumbent: None,
        pseudo: PseudoCosts::new(model.num_vars()),
        started,
    };

    let mut frontier = Frontier::default();
    if let Some(start) = &params.start {
        if let Some((val, values)) = complete_start(model, params, start, &sf)? {
            log::debug!(
                "MIP start accepted with objective {}",
                model.objective_value(&values)
            );
            search.incumbent = Some((val, values));
            frontier.switch_to_best_first();
        }
    }
    frontier.push(Node {
        id: 0,
        parent: u64::MAX,
        depth: 0,
        bound: f64::NEG_INFINITY,
        changes: root_changes,
        basis: None,
        branch: None,
    });
    let mut next_id = 1u64;
    let mut nodes = 0u64;
    let mut limit_status = None;
    let mut engine_owner: Option<u64> = None;
    let mut unbounded = false;

    while let Some(node) = frontier.pop() {
        if let Some(c) = search.cutoff() {
            if node.bound >= c {
                continue;
            }
        }
        if let Some(limit) = params.node_limit {
            if nodes >= limit {
                frontier.push(node);
                limit_status = Some(SolveStatus::NodeLimit);
                break;
            }
        }
        if let Some(t) = params.time_limit_s {
            if search.started.elapsed().as_secs_f64() >= t {
                frontier.push(node);
                limit_status = Some(SolveStatus::TimeLimit);
                break;
            }
        }
        nodes += 1;
        if nodes == PLUNGE_NODES && search.incumbent.is_none() {
            frontier.switch_to_best_first();
        }

        engine.reset_bounds();
        for &(j, lo, hi) in &node.changes {
            engine.set_bounds(j, lo, hi);
        }
        if engine_owner != Some(node.parent) {
            match &node.basis {
                Some(b) => engine.restore(b),
                None => engine.reset_to_slack_basis(),
            }
        }
        engine_owner = Some(node.id);

        let mut outcome = engine.solve(search.cutoff());
        if engine.timed_out {
            frontier.push(node);
            limit_status = Some(SolveStatus::TimeLimit);
            break;
        }
        if outcome == LpOutcome::IterationLimit {
            engine.reset_to_slack_basis();
            engine.iteration_limit += engine.iterations;
            outcome = engine.solve(search.cutoff());
        }
        let obj = engine.objective();
        match outcome {
            LpOutcome::Infeasible | LpOutcome::Cutoff => continue,
            LpOutcome::Unbounded => {
                if node.id == 0 {
                    unbounded = true;
                    break;
                }
                continue;
            }
            LpOutcome::IterationLimit => {
                return Err(MilpError::Numerical(format!(
                    "simplex iteration limit reached twice at node {}",
                    node.id
                )));
            }
            LpOutcome::Optimal => {}
        }
        if let Some(info) = node.branch {
            search.pseudo.record(info, obj - node.bound);
        }
        if let Some(c) = search.cutoff() {
            if obj >= c {
                continue;
            }
        }

        let x = engine.values().to_vec();
        let fractional = search.fractional(&x);
        if fractional.is_empty() {
            engine_owner = None;
            if let Some((val, values)) = search.polish(&mut engine, &sf, &x) {
                let better = search.incumbent.as_ref().is_none_or(|(v, _)| val < *v);
                if better {
                    log::debug!(
                        "incumbent {} at node {} ({} open)",
                        sf.obj_sign * val + sf.obj_constant,
                        node.id,
                        frontier.stack.len() + frontier.heap.len()
                    );
                    search.incumbent = Some((val, values));
                    frontier.switch_to_best_first();
                }
            }
            continue;
        }

        let (var, frac) = search.choose_branch(&fractional);
        let basis = Rc::new(engine.snapshot());
        let xv = x[var];
        let down_hi = xv.floor();
        let up_lo = xv.ceil();
        let make = |id: u64, up: bool| {
            let mut changes = node.changes.clone();
            if up {
                changes.push((var, up_lo, engine.upper[var]));
            } else {
                changes.push((var, engine.lower[var], down_hi));
            }
            Node {
                id,
                parent: node.id,
                depth: node.depth + 1,
                bound: obj,
                changes,
                basis: Some(Rc::clone(&basis)),
                branch: Some(BranchInfo {
                    var,
                    up,
                    distance: if up { 1.0 - frac } else { frac },
                }),
            }
        };
        let up_first = frac >= 0.5;
        // The child pushed last is explored first when plunging.
        let (first, second) = if up_first {
            (false, true)
        } else {
            (true, false)
        };
        let a = make(next_id, first);
        let b = make(next_id + 1, second);
        next_id += 2;
        frontier.push(a);
        frontier.push(b);
    }

    let mut res = SolveResult::empty(SolveStatus::Infeasible, started);
    res.nodes = nodes;
    res.lp_iterations = engine.iterations;
    if unbounded {
        res.status = SolveStatus::Unbounded;
        res.wall_time = started.elapsed();
        return Ok(res);
    }
    let open_bound = frontier.min_bound();
    match search.incumbent {
        Some((val, values)) => {
            res.status = limit_status.unwrap_or(SolveStatus::Optimal);
            res.objective = Some(model.objective_value(&values));
            let bound = match (limit_status, open_bound) {
                (Some(_), Some(b)) => b.min(val),
                _ => val,
            };
            res.best_bound = Some(sf.obj_sign * bound + sf.obj_constant);
            res.values = Some(values);
        }
        None => {
            res.status = limit_status.unwrap_or(SolveStatus::Infeasible);
            if limit_status.is_some() {
                res.best_bound = open_bound.map(|b| sf.obj_sign * b + sf.obj_constant);
            }
        }
    }
    res.wall_time = started.elapsed();
    Ok(res)
}

const START_NODES: u64 = 2000;

/// Fixes the given entries of `start` and searches briefly for a feasible
/// completion. Returns the completion in minimization form.
fn complete_start(
    model: &MilpModel,
    params: &SolverParams,
    start: &[Option<f64>],
    sf: &StdForm,
) -> Result<Option<(f64, Vec<f64>)>, MilpError> {
    let mut fixed = model.clone();
    for (v, s) in fixed.variables.iter_mut().zip(start) {
        if let Some(x) = *s {
            if x < v.lower - params.feasibility_tol || x > v.upper + params.feasibility_tol {
                return Ok(None);
            }
            v.lower = x;
            v.upper = x;
        }
    }
    let sub = SolverParams {
        start: None,
        node_limit: Some(START_NODES),
        ..params.clone()
    };
    let res = solve_mip(&fixed, &sub)?;
    Ok(res
        .values
        .filter(|x| model.max_violation(x) <= 1e-5)
        .map(|x| {
            (
                sf.obj_sign * (model.objective_value(&x) - sf.obj_constant),
                x,
            )
        }))
}
