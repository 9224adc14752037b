//! Bounded-variable revised simplex.
//!
//! Rows are turned into equalities `a_i x - r_i = 0` with one logical
//! variable `r_i` per row carrying the row's bounds, so every variable of
//! the working problem is simply boxed. Nonbasic variables sit at a bound
//! (or at zero when free). The primal method runs a composite phase one;
//! the dual method is used when the starting basis is dual feasible, which
//! is the normal case when branch-and-bound tightens bounds.

use super::factor::{BasisFactor, Csc};
use super::model::{MilpModel, Relation, Sense};

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_INTERVAL: usize = 64;
const DEGENERATE_RUN_FOR_BLAND: usize = 40;
const PERTURBATION: f64 = 1e-7;

/// The working problem: `min cost^T v` over `v = (x, r)` with
/// `A x - r = 0` and `lower <= v <= upper`.
#[derive(Clone, Debug)]
pub(crate) struct StdForm {
    pub n: usize,
    pub m: usize,
    pub a: Csc,
    pub a_rows: Csc,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// `+1` for minimization, `-1` for maximization.
    pub obj_sign: f64,
    pub obj_constant: f64,
    /// Model row index of each working row (empty rows are dropped).
    pub row_of: Vec<usize>,
    /// An empty row whose right-hand side cannot be met.
    pub trivially_infeasible: bool,
}

impl StdForm {
    pub fn from_model(model: &MilpModel, feas_tol: f64) -> StdForm {
        let n = model.num_vars();
        let mut trivially_infeasible = false;
        let mut row_of = Vec::new();
        for (i, c) in model.constraints.iter().enumerate() {
            if c.terms.is_empty() {
                let ok = match c.relation {
                    Relation::Le => 0.0 <= c.rhs + feas_tol,
                    Relation::Ge => 0.0 >= c.rhs - feas_tol,
                    Relation::Eq => c.rhs.abs() <= feas_tol,
                };
                trivially_infeasible |= !ok;
            } else {
                row_of.push(i);
            }
        }
        let m = row_of.len();

        let mut counts = vec![0usize; n + 1];
        for &i in &row_of {
            for &(v, _) in &model.constraints[i].terms {
                counts[v.0 + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let nnz = counts[n];
        let mut next = counts.clone();
        let mut index = vec![0; nnz];
        let mut value = vec![0.0; nnz];
        for (r, &i) in row_of.iter().enumerate() {
            for &(v, coef) in &model.constraints[i].terms {
                let slot = next[v.0];
                index[slot] = r;
                value[slot] = coef;
                next[v.0] += 1;
            }
        }
        let a = Csc {
            rows: m,
            cols: n,
            start: counts,
            index,
            value,
        };
        let a_rows = a.transpose();

        let obj_sign = match model.objective.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut cost = vec![0.0; n + m];
        for &(v, c) in model.objective.expr.terms() {
            cost[v.0] = obj_sign * c;
        }
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for v in &model.variables {
            lower.push(v.lower);
            upper.push(v.upper);
        }
        for &i in &row_of {
            let c = &model.constraints[i];
            let (lo, hi) = match c.relation {
                Relation::Le => (f64::NEG_INFINITY, c.rhs),
                Relation::Ge => (c.rhs, f64::INFINITY),
                Relation::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }
        StdForm {
            n,
            m,
            a,
            a_rows,
            cost,
            lower,
            upper,
            obj_sign,
            obj_constant: model.objective.expr.constant,
            row_of,
            trivially_infeasible,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub(crate) enum VarState {
    Basic,
    Lower,
    Upper,
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    /// The dual objective passed the supplied cutoff.
    Cutoff,
}

enum PrimalEnd {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    IterationLimit,
}

pub(crate) struct LpEngine<'a> {
    sf: &'a StdForm,
    /// Costs the iterations work with: the model costs, or a slightly
    /// perturbed copy while fighting degeneracy.
    cost: Vec<f64>,
    /// Bound on `|(cost - sf.cost)^T x|` over the box.
    perturbation_slack: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    state: Vec<VarState>,
    head: Vec<usize>,
    x: Vec<f64>,
    factor: Option<BasisFactor>,
    feas_tol: f64,
    dual_tol: f64,
    pub iterations: u64,
    pub iteration_limit: u64,
    /// Wall-clock limit; passing it ends the solve with `IterationLimit`
    /// and sets `timed_out`.
    pub deadline: Option<std::time::Instant>,
    pub timed_out: bool,
    bland: bool,
    degenerate_run: usize,
    xb_stale: bool,
}

impl<'a> LpEngine<'a> {
    pub fn new(sf: &'a StdForm, feas_tol: f64) -> LpEngine<'a> {
        let total = sf.n + sf.m;
        let mut e = LpEngine {
            sf,
            cost: sf.cost.clone(),
            perturbation_slack: 0.0,
            lower: sf.lower.clone(),
            upper: sf.upper.clone(),
            state: vec![VarState::Lower; total],
            head: Vec::new(),
            x: vec![0.0; total],
            factor: None,
            feas_tol,
            dual_tol: 1e-9,
            iterations: 0,
            iteration_limit: 200 * (total as u64) + 10_000,
            deadline: None,
            timed_out: false,
            bland: false,
            degenerate_run: 0,
            xb_stale: true,
        };
        e.reset_to_slack_basis();
        e
    }

    pub fn reset_to_slack_basis(&mut self) {
        let n = self.sf.n;
        for j in 0..n + self.sf.m {
            self.state[j] = if j >= n {
                VarState::Basic
            } else {
                VarState::Lower
            };
            if j < n {
                self.place_nonbasic(j);
            }
        }
        self.factor = None;
    }

    pub fn snapshot(&self) -> Vec<VarState> {
        self.state.clone()
    }

    pub fn restore(&mut self, basis: &[VarState]) {
        self.state.copy_from_slice(basis);
        for j in 0..self.state.len() {
            if self.state[j] != VarState::Basic {
                self.place_nonbasic(j);
            }
        }
        self.factor = None;
    }

    /// Sets the working bounds of variable `j` (structural or logical).
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
        if self.state[j] != VarState::Basic {
            self.place_nonbasic(j);
        }
        self.xb_stale = true;
    }

    pub fn reset_bounds(&mut self) {
        self.lower.copy_from_slice(&self.sf.lower);
        self.upper.copy_from_slice(&self.sf.upper);
        for j in 0..self.state.len() {
            if self.state[j] != VarState::Basic {
                self.place_nonbasic(j);
            }
        }
        self.xb_stale = true;
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.sf.n]
    }

    /// Objective of the current point in minimization form.
    pub fn objective(&self) -> f64 {
        self.sf.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum()
    }

    /// Row duals of the current basis (minimization form).
    pub fn duals(&mut self) -> Vec<f64> {
        if self.factor.is_none() {
            self.refactor();
        }
        let cb: Vec<f64> = self.head.iter().map(|&j| self.sf.cost[j]).collect();
        self.factor.as_ref().unwrap().btran(&self.sf.a, &cb)
    }

    /// Lagrangian lower bound `sum_j min_{v in box} d_j v` for the row
    /// multipliers `y`, with `d = c - [A -I]^T y`.
    pub fn dual_bound(&self, y: &[f64]) -> f64 {
        let mut total = 0.0;
        for j in 0..self.sf.n + self.sf.m {
            let d = self.sf.cost[j] - self.dot_col(j, y);
            if d.abs() <= self.dual_tol {
                continue;
            }
            let v = if d > 0.0 {
                self.lower[j]
            } else {
                self.upper[j]
            };
            if !v.is_finite() {
                return f64::NEG_INFINITY;
            }
            total += d * v;
        }
        total
    }

    fn place_nonbasic(&mut self, j: usize) {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        let st = match self.state[j] {
            VarState::Upper if hi.is_finite() => VarState::Upper,
            _ if lo.is_finite() => VarState::Lower,
            _ if hi.is_finite() => VarState::Upper,
            _ => VarState::Zero,
        };
        self.state[j] = st;
        self.x[j] = match st {
            VarState::Lower => lo,
            VarState::Upper => hi,
            _ => 0.0,
        };
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    fn dot_col(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.sf.n {
            self.sf.a.col(j).map(|(r, v)| v * y[r]).sum()
        } else {
            -y[j - self.sf.n]
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.sf.m];
        if j < self.sf.n {
            for (r, v) in self.sf.a.col(j) {
                c[r] = v;
            }
        } else {
            c[j - self.sf.n] = -1.0;
        }
        c
    }

    fn refactor(&mut self) {
        let n = self.sf.n;
        loop {
            self.head = (0..self.state.len())
                .filter(|&j| self.state[j] == VarState::Basic)
                .collect();
            debug_assert_eq!(self.head.len(), self.sf.m);
            match BasisFactor::new(&self.sf.a, &self.head) {
                Ok(f) => {
                    self.factor = Some(f);
                    break;
                }
                Err(sing) => {
                    log::debug!("basis repair: {} dependent columns", sing.positions.len());
                    for (&p, &r) in sing.positions.iter().zip(&sing.free_rows) {
                        let out = self.head[p];
                        self.state[out] = if self.x[out] >= self.upper[out] {
                            VarState::Upper
                        } else {
                            VarState::Lower
                        };
                        self.place_nonbasic(out);
                        self.state[n + r] = VarState::Basic;
                    }
                }
            }
        }
        self.compute_basic_values();
    }

    fn compute_basic_values(&mut self) {
        let mut rhs = vec![0.0; self.sf.m];
        for j in 0..self.state.len() {
            if self.state[j] == VarState::Basic {
                continue;
            }
            let xj = self.x[j];
            if xj == 0.0 {
                continue;
            }
            if j < self.sf.n {
                for (r, v) in self.sf.a.col(j) {
                    rhs[r] -= v * xj;
                }
            } else {
                rhs[j - self.sf.n] += xj;
            }
        }
        let xb = self.factor.as_ref().unwrap().ftran(&self.sf.a, &rhs);
        for (p, &j) in self.head.iter().enumerate() {
            self.x[j] = xb[p];
        }
        self.xb_stale = false;
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        (self.lower[j] - x).max(x - self.upper[j]).max(0.0)
    }

    fn primal_infeasible(&self) -> bool {
        self.head
            .iter()
            .any(|&j| self.infeasibility(j) > self.feas_tol)
    }

    fn reduced_costs_from(&self, y: &[f64]) -> Vec<f64> {
        (0..self.state.len())
            .map(|j| {
                if self.state[j] == VarState::Basic {
                    0.0
                } else {
                    self.cost[j] - self.dot_col(j, y)
                }
            })
            .collect()
    }

    /// Moves boxed nonbasic variables to the bound that makes their reduced
    /// cost dual feasible. Returns false if some variable cannot be fixed up.
    fn make_dual_feasible(&mut self) -> bool {
        let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
        let y = self.factor.as_ref().unwrap().btran(&self.sf.a, &cb);
        let d = self.reduced_costs_from(&y);
        let mut moved = false;
        for j in 0..self.state.len() {
            if self.state[j] == VarState::Basic || self.is_fixed(j) {
                continue;
            }
            let want = if d[j] > self.dual_tol {
                VarState::Lower
            } else if d[j] < -self.dual_tol {
                VarState::Upper
            } else {
                continue;
            };
            if self.state[j] == want {
                continue;
            }
            let ok = match want {
                VarState::Lower => self.lower[j].is_finite(),
                _ => self.upper[j].is_finite(),
            };
            if !ok {
                return false;
            }
            self.state[j] = want;
            self.place_nonbasic(j);
            moved = true;
        }
        if moved {
            self.compute_basic_values();
        }
        true
    }

    /// Solves from the current basis. `cutoff` (minimization form) lets the
    /// dual method stop early once the objective provably exceeds it.
    pub fn solve(&mut self, cutoff: Option<f64>) -> LpOutcome {
        self.perturb_costs();
        let outcome = self.solve_with_working_costs(cutoff);
        self.cost.copy_from_slice(&self.sf.cost);
        self.perturbation_slack = 0.0;
        if outcome != LpOutcome::Optimal {
            return outcome;
        }
        match self.primal(false) {
            PrimalEnd::Optimal | PrimalEnd::Feasible => {
                self.refactor();
                if self.primal_infeasible() {
                    self.solve_with_working_costs(None)
                } else {
                    LpOutcome::Optimal
                }
            }
            PrimalEnd::Unbounded => LpOutcome::Unbounded,
            PrimalEnd::Infeasible => LpOutcome::Infeasible,
            PrimalEnd::IterationLimit => LpOutcome::IterationLimit,
        }
    }

    /// Shifts each structural cost by a tiny deterministic amount in the
    /// direction that keeps the current nonbasic reduced costs dual feasible.
    fn perturb_costs(&mut self) {
        let mut slack = 0.0;
        for j in 0..self.sf.n {
            let h = (j as u64 ^ 0x5bd1_e995).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11;
            let u = h as f64 / (1u64 << 53) as f64;
            let base = self.sf.cost[j];
            let eps = PERTURBATION * (1.0 + u) * base.abs().max(1.0);
            let signed = match self.state[j] {
                VarState::Upper => -eps,
                _ => eps,
            };
            self.cost[j] = base + signed;
            let reach = self.lower[j].abs().max(self.upper[j].abs());
            slack += eps * reach;
        }
        self.perturbation_slack = if slack.is_finite() {
            slack
        } else {
            f64::INFINITY
        };
    }

    fn solve_with_working_costs(&mut self, cutoff: Option<f64>) -> LpOutcome {
        if self.sf.trivially_infeasible {
            return LpOutcome::Infeasible;
        }
        if (0..self.state.len()).any(|j| self.lower[j] > self.upper[j]) {
            return LpOutcome::Infeasible;
        }
        self.bland = false;
        self.degenerate_run = 0;
        if self.factor.is_none() {
            self.refactor();
        } else if self.xb_stale {
            self.compute_basic_values();
        }
        if self.primal_infeasible() {
            if self.make_dual_feasible() {
                match self.dual(cutoff) {
                    LpOutcome::Optimal => {}
                    other => return other,
                }
            } else {
                match self.primal(true) {
                    PrimalEnd::Feasible | PrimalEnd::Optimal => {}
                    PrimalEnd::Infeasible => return LpOutcome::Infeasible,
                    PrimalEnd::IterationLimit => return LpOutcome::IterationLimit,
                    PrimalEnd::Unbounded => return LpOutcome::IterationLimit,
                }
            }
        }
        match self.primal(false) {
            PrimalEnd::Optimal | PrimalEnd::Feasible => {
                // A final fresh factorization guards against drift in x_B.
                self.refactor();
                if self.primal_infeasible() {
                    match self.primal(true) {
                        PrimalEnd::Feasible | PrimalEnd::Optimal => {}
                        PrimalEnd::Infeasible => return LpOutcome::Infeasible,
                        _ => return LpOutcome::IterationLimit,
                    }
                    return match self.primal(false) {
                        PrimalEnd::Optimal | PrimalEnd::Feasible => LpOutcome::Optimal,
                        PrimalEnd::Unbounded => LpOutcome::Unbounded,
                        PrimalEnd::Infeasible => LpOutcome::Infeasible,
                        PrimalEnd::IterationLimit => LpOutcome::IterationLimit,
                    };
                }
                LpOutcome::Optimal
            }
            PrimalEnd::Unbounded => LpOutcome::Unbounded,
            PrimalEnd::Infeasible => LpOutcome::Infeasible,
            PrimalEnd::IterationLimit => LpOutcome::IterationLimit,
        }
    }

    fn out_of_budget(&mut self) -> bool {
        if self.iterations >= self.iteration_limit {
            return true;
        }
        if self.iterations % 32 == 0 {
            if let Some(d) = self.deadline {
                if std::time::Instant::now() >= d {
                    self.timed_out = true;
                    return true;
                }
            }
        }
        false
    }

    fn maybe_refactor(&mut self) {
        let stale = match &self.factor {
            None => true,
            Some(f) => f.num_updates() >= REFACTOR_INTERVAL,
        };
        if stale {
            self.refactor();
        }
    }

    fn note_step(&mut self, step: f64) {
        if step <= 1e-12 {
            self.degenerate_run += 1;
            if self.degenerate_run > DEGENERATE_RUN_FOR_BLAND {
                self.bland = true;
            }
        } else {
            self.degenerate_run = 0;
            self.bland = false;
        }
    }

    fn pivot(&mut self, pos: usize, entering: usize, leaving_state: VarState, alpha: &[f64]) {
        let leaving = self.head[pos];
        self.state[leaving] = leaving_state;
        self.x[leaving] = if leaving_state == VarState::Lower {
            self.lower[leaving]
        } else {
            self.upper[leaving]
        };
        self.state[entering] = VarState::Basic;
        self.head[pos] = entering;
        self.factor.as_mut().unwrap().update(pos, alpha);
    }

    fn primal(&mut self, phase_one: bool) -> PrimalEnd {
        let total = self.state.len();
        loop {
            if self.out_of_budget() {
                return PrimalEnd::IterationLimit;
            }
            self.maybe_refactor();
            let ftol = self.feas_tol;
            let cb: Vec<f64> = if phase_one {
                self.head
                    .iter()
                    .map(|&j| {
                        if self.x[j] < self.lower[j] - ftol {
                            -1.0
                        } else if self.x[j] > self.upper[j] + ftol {
                            1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            } else {
                self.head.iter().map(|&j| self.cost[j]).collect()
            };
            if phase_one && cb.iter().all(|&c| c == 0.0) {
                return PrimalEnd::Feasible;
            }
            let y = self.factor.as_ref().unwrap().btran(&self.sf.a, &cb);

            // Pricing.
            let mut entering = usize::MAX;
            let mut best = 0.0;
            let mut dir = 0.0;
            for j in 0..total {
                let st = self.state[j];
                if st == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let cj = if phase_one { 0.0 } else { self.cost[j] };
                let d = cj - self.dot_col(j, &y);
                let candidate = match st {
                    VarState::Lower if d < -self.dual_tol => Some(1.0),
                    VarState::Upper if d > self.dual_tol => Some(-1.0),
                    VarState::Zero if d.abs() > self.dual_tol => {
                        Some(if d < 0.0 { 1.0 } else { -1.0 })
                    }
                    _ => None,
                };
                if let Some(s) = candidate {
                    if self.bland {
                        entering = j;
                        dir = s;
                        break;
                    }
                    if d.abs() > best {
                        best = d.abs();
                        entering = j;
                        dir = s;
                    }
                }
            }
            if entering == usize::MAX {
                return if phase_one {
                    PrimalEnd::Infeasible
                } else {
                    PrimalEnd::Optimal
                };
            }

            let alpha = self
                .factor
                .as_ref()
                .unwrap()
                .ftran(&self.sf.a, &self.column(entering));

            // Harris two-pass ratio test.
            let mut theta_max = f64::INFINITY;
            let mut limits: Vec<(usize, f64, VarState, f64)> = Vec::new();
            for (p, &a) in alpha.iter().enumerate() {
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.head[p];
                let rate = -dir * a;
                let xj = self.x[j];
                let (lo, hi) = (self.lower[j], self.upper[j]);
                let target = if rate > 0.0 {
                    if phase_one && xj < lo - ftol {
                        Some((lo, VarState::Lower))
                    } else if phase_one && xj > hi + ftol {
                        None
                    } else if hi.is_finite() {
                        Some((hi, VarState::Upper))
                    } else {
                        None
                    }
                } else if phase_one && xj > hi + ftol {
                    Some((hi, VarState::Upper))
                } else if phase_one && xj < lo - ftol {
                    None
                } else if lo.is_finite() {
                    Some((lo, VarState::Lower))
                } else {
                    None
                };
                if let Some((bound, st)) = target {
                    let dist = (bound - xj) * rate.signum();
                    let ratio = dist / rate.abs();
                    let harris = (dist.max(0.0) + ftol) / rate.abs();
                    theta_max = theta_max.min(harris);
                    limits.push((p, ratio, st, a.abs()));
                }
            }
            let range = self.upper[entering] - self.lower[entering];
            let mut leave: Option<(usize, f64, VarState)> = None;
            if self.bland {
                let min_ratio = limits.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
                for &(p, ratio, st, _) in &limits {
                    if ratio <= min_ratio + 1e-12
                        && leave.is_none_or(|(q, _, _)| self.head[p] < self.head[q])
                    {
                        leave = Some((p, ratio.max(0.0), st));
                    }
                }
            } else {
                let mut best_piv = -1.0;
                for &(p, ratio, st, piv) in &limits {
                    if ratio <= theta_max && piv > best_piv {
                        best_piv = piv;
                        leave = Some((p, ratio.max(0.0), st));
                    }
                }
            }
            let theta_basic = leave.map(|l| l.1).unwrap_or(f64::INFINITY);
            if !range.is_finite() && leave.is_none() {
                if phase_one {
                    // Cannot happen for a bounded phase-one objective; treat as
                    // a numerical failure and restart from a fresh factor.
                    self.refactor();
                    self.iterations += 1;
                    continue;
                }
                return PrimalEnd::Unbounded;
            }
            self.iterations += 1;
            if range.is_finite() && range <= theta_basic {
                // Bound flip, no basis change.
                for (p, &a) in alpha.iter().enumerate() {
                    if a != 0.0 {
                        let j = self.head[p];
                        self.x[j] -= dir * range * a;
                    }
                }
                if dir > 0.0 {
                    self.state[entering] = VarState::Upper;
                    self.x[entering] = self.upper[entering];
                } else {
                    self.state[entering] = VarState::Lower;
                    self.x[entering] = self.lower[entering];
                }
                self.note_step(range);
                continue;
            }
            let (pos, theta, st) = leave.unwrap();
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= dir * theta * a;
                }
            }
            self.x[entering] += dir * theta;
            self.pivot(pos, entering, st, &alpha);
            self.note_step(theta);
        }
    }

    fn dual(&mut self, cutoff: Option<f64>) -> LpOutcome {
        let n = self.sf.n;
        let total = self.state.len();
        let mut weights = vec![1.0; total];
        loop {
            if self.out_of_budget() {
                return LpOutcome::IterationLimit;
            }
            self.maybe_refactor();
            let ftol = self.feas_tol;

            // Leaving row: largest bound violation relative to its Devex weight.
            let mut pos = usize::MAX;
            let mut worst = 0.0;
            for (p, &j) in self.head.iter().enumerate() {
                let v = self.infeasibility(j);
                if v > ftol {
                    if self.bland {
                        if pos == usize::MAX || j < self.head[pos] {
                            pos = p;
                        }
                    } else {
                        let score = v * v / weights[j];
                        if score > worst {
                            worst = score;
                            pos = p;
                        }
                    }
                }
            }
            if pos == usize::MAX {
                return LpOutcome::Optimal;
            }
            if let Some(c) = cutoff {
                let working: f64 = self.cost.iter().zip(&self.x).map(|(c, x)| c * x).sum();
                if working - self.perturbation_slack > c {
                    return LpOutcome::Cutoff;
                }
            }
            let r = self.head[pos];
            let up = self.x[r] < self.lower[r];
            let target = if up { self.lower[r] } else { self.upper[r] };

            let f = self.factor.as_ref().unwrap();
            let cb: Vec<f64> = self.head.iter().map(|&j| self.cost[j]).collect();
            let y = f.btran(&self.sf.a, &cb);
            let mut unit = vec![0.0; self.sf.m];
            unit[pos] = 1.0;
            let rho = f.btran(&self.sf.a, &unit);

            // Pivot row alpha_r = rho^T [A -I], scattered over rows of A.
            let mut arow = vec![0.0; total];
            for (i, &ri) in rho.iter().enumerate() {
                if ri == 0.0 {
                    continue;
                }
                for (j, v) in self.sf.a_rows.col(i) {
                    arow[j] += ri * v;
                }
                arow[n + i] = -ri;
            }

            let mut theta_max = f64::INFINITY;
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..total {
                let st = self.state[j];
                if st == VarState::Basic || self.is_fixed(j) {
                    continue;
                }
                let a = arow[j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                // x_r moves by -a per unit increase of x_j.
                let can_inc = matches!(st, VarState::Lower | VarState::Zero);
                let can_dec = matches!(st, VarState::Upper | VarState::Zero);
                let eligible = if up {
                    (can_inc && a < 0.0) || (can_dec && a > 0.0)
                } else {
                    (can_inc && a > 0.0) || (can_dec && a < 0.0)
                };
                if !eligible {
                    continue;
                }
                let d = self.cost[j] - self.dot_col(j, &y);
                let dd = match st {
                    VarState::Lower => d,
                    VarState::Upper => -d,
                    _ => d.abs(),
                };
                let ratio = dd.max(0.0) / a.abs();
                let harris = (dd.max(0.0) + self.dual_tol) / a.abs();
                theta_max = theta_max.min(harris);
                cands.push((j, ratio, a.abs()));
            }
            if cands.is_empty() {
                return LpOutcome::Infeasible;
            }
            let mut entering = usize::MAX;
            let mut dual_step = 0.0;
            if self.bland {
                let min_ratio = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
                for &(j, ratio, _) in &cands {
                    if ratio <= min_ratio + 1e-12 && (entering == usize::MAX || j < entering) {
                        entering = j;
                        dual_step = ratio;
                    }
                }
            } else {
                let mut best_piv = -1.0;
                for &(j, ratio, piv) in &cands {
                    if ratio <= theta_max && piv > best_piv {
                        best_piv = piv;
                        entering = j;
                        dual_step = ratio;
                    }
                }
            }
            let alpha = self
                .factor
                .as_ref()
                .unwrap()
                .ftran(&self.sf.a, &self.column(entering));
            let ar = alpha[pos];
            if ar.abs() <= PIVOT_TOL || ar * arow[entering] <= 0.0 {
                // Row and column disagree; refresh the factorization.
                self.refactor();
                self.iterations += 1;
                continue;
            }
            self.iterations += 1;
            let t = (self.x[r] - target) / ar;
            for (p, &a) in alpha.iter().enumerate() {
                if a != 0.0 {
                    let j = self.head[p];
                    self.x[j] -= t * a;
                }
            }
            self.x[entering] += t;
            let wr = weights[r];
            for (p, &a) in alpha.iter().enumerate() {
                if p != pos && a != 0.0 {
                    let j = self.head[p];
                    let ratio = a / ar;
                    weights[j] = weights[j].max(ratio * ratio * wr);
                }
            }
            weights[entering] = (wr / (ar * ar)).max(1.0);
            let st = if up { VarState::Lower } else { VarState::Upper };
            self.pivot(pos, entering, st, &alpha);
            self.note_step(dual_step);
        }
    }
}
