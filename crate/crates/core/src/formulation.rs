//! Builds the scheduling MILP for an [`Instance`] and decodes solver output
//! back into a [`Schedule`].
//!
//! Variable families, in declaration order:
//!
//! | family | index           | kind       | meaning                                        |
//! |--------|-----------------|------------|------------------------------------------------|
//! | W      | d               | binary     | drone is reserved                              |
//! | Y      | i, d, p         | binary     | customer served by drone flying from depot     |
//! | Z      | i               | binary     | customer outsourced to the carrier             |
//! | T      | p               | binary     | some package is transferred from/to depot      |
//! | M      | i, p, q (p!=q)  | binary     | package moved from depot p to depot q          |
//! | B      | d, p            | binary     | home depot of the drone                        |
//! | U      | i, d            | integer    | serving position on the drone (0 = not served) |
//! | A      | i, j, d (i!=j)  | binary     | position disjunction selector                  |
//! | Xb     | i, d, w         | binary     | package lost because the drone is grounded     |
//! | Xa     | i, d, w, l      | binary     | package lost to a breakdown                    |
//! | F      | i, f            | binary     | delivery lands in the window of rank f         |
//! | V      | i, j, d (i!=j)  | binary     | i is served before j on the drone              |
//! | Q      | i               | continuous | departure time of the trip, minutes            |

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{CustomerPlan, Mode, Route, Schedule};
use crate::instance::{Instance, InstanceError};
use crate::milp::{LinExpr, MilpModel, Relation, Sense, VarId};

/// Discrete values further than this from an integer are rejected when
/// decoding.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Cost,
    Unsuccessful,
    Reward,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [
        ObjectiveKind::Cost,
        ObjectiveKind::Unsuccessful,
        ObjectiveKind::Reward,
    ];

    pub fn sense(self) -> Sense {
        match self {
            ObjectiveKind::Reward => Sense::Maximize,
            _ => Sense::Minimize,
        }
    }

    /// True if `a` is strictly better than `b` for this objective.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self.sense() {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Cost => "cost",
            ObjectiveKind::Unsuccessful => "unsuccessful",
            ObjectiveKind::Reward => "reward",
        })
    }
}

impl FromStr for ObjectiveKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cost" | "c" => Ok(ObjectiveKind::Cost),
            "unsuccessful" | "u" => Ok(ObjectiveKind::Unsuccessful),
            "reward" | "r" => Ok(ObjectiveKind::Reward),
            other => Err(format!(
                "unknown objective '{other}' (expected cost, unsuccessful or reward)"
            )),
        }
    }
}

/// Primary objective plus bounds on the other two. A bound attached to the
/// primary objective is ignored.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSelection {
    pub primary: ObjectiveKind,
    /// Upper bound on total cost.
    pub eps_c: Option<f64>,
    /// Upper bound on the unsuccessful-delivery percentage.
    pub eps_u: Option<f64>,
    /// Lower bound on the on-time reward.
    pub eps_r: Option<f64>,
}

impl ObjectiveSelection {
    pub fn unconstrained(primary: ObjectiveKind) -> Self {
        ObjectiveSelection {
            primary,
            eps_c: None,
            eps_u: None,
            eps_r: None,
        }
    }

    /// Bounds that actually apply, as `(objective, relation, value)`.
    pub fn active_bounds(&self) -> Vec<(ObjectiveKind, Relation, f64)> {
        let mut out = Vec::new();
        if let (Some(v), false) = (self.eps_c, self.primary == ObjectiveKind::Cost) {
            out.push((ObjectiveKind::Cost, Relation::Le, v));
        }
        if let (Some(v), false) = (self.eps_u, self.primary == ObjectiveKind::Unsuccessful) {
            out.push((ObjectiveKind::Unsuccessful, Relation::Le, v));
        }
        if let (Some(v), false) = (self.eps_r, self.primary == ObjectiveKind::Reward) {
            out.push((ObjectiveKind::Reward, Relation::Ge, v));
        }
        out
    }
}

/// Big-M constants. `None` means derive the smallest safe value from the
/// instance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FormulationConfig {
    pub big_m_order: Option<f64>,
    pub big_m_time: Option<f64>,
}

impl FormulationConfig {
    pub fn min_big_m_order(instance: &Instance) -> f64 {
        instance.num_customers() as f64 + 1.0
    }

    /// Latest shift end or window end, plus the longest trip and the longest
    /// service time.
    pub fn min_big_m_time(instance: &Instance) -> f64 {
        let latest_shift = instance
            .drones
            .iter()
            .map(|d| d.shift_end_min)
            .fold(0.0, f64::max);
        let latest_window = instance
            .customers
            .iter()
            .flat_map(|c| c.windows.iter().map(|w| w.end))
            .fold(0.0, f64::max);
        let mut longest_trip: f64 = 0.0;
        for i in 0..instance.num_customers() {
            for d in 0..instance.num_drones() {
                for p in 0..instance.num_depots() {
                    longest_trip = longest_trip.max(instance.trip_minutes(i, d, p));
                }
            }
        }
        let longest_service = instance
            .customers
            .iter()
            .map(|c| c.serving_time_min)
            .fold(0.0, f64::max);
        latest_shift.max(latest_window) + longest_trip + longest_service
    }

    /// Resolves to concrete `(order, time)` constants, rejecting values below
    /// the safe minimum.
    pub fn resolve(&self, instance: &Instance) -> Result<(f64, f64), FormulationError> {
        let min_order = Self::min_big_m_order(instance);
        let min_time = Self::min_big_m_time(instance);
        let order = self.big_m_order.unwrap_or(min_order);
        let time = self.big_m_time.unwrap_or(min_time);
        if !(order >= min_order) {
            return Err(FormulationError::BigM(format!(
                "big_m_order {order} is below {min_order}"
            )));
        }
        if !(time >= min_time) {
            return Err(FormulationError::BigM(format!(
                "big_m_time {time} is below {min_time}"
            )));
        }
        Ok((order, time))
    }
}

#[derive(Debug, Error)]
pub enum FormulationError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("{0}")]
    BigM(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum DecodeError {
    #[error("expected {expected} values, got {got}")]
    Length { expected: usize, got: usize },
    #[error("variable {name} has fractional value {value}")]
    Fractional { name: String, value: f64 },
    #[error("customer {0} assigned twice")]
    AssignedTwice(String),
    #[error("customer {0} has neither a drone nor the carrier")]
    Unassigned(String),
    #[error("{0}")]
    Contradiction(String),
}

/// Index arithmetic for every variable family. Variables are declared in
/// family order, so ids are pure functions of the instance dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableCatalogue {
    pub customers: usize,
    pub drones: usize,
    pub depots: usize,
    pub ranks: usize,
    pub takeoff: usize,
    pub breakdown: usize,
    base: [usize; 14],
}

/// Family positions inside `VariableCatalogue::base`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    W = 0,
    Y,
    Z,
    T,
    M,
    B,
    U,
    A,
    Xb,
    Xa,
    F,
    V,
    Q,
}

impl Family {
    pub const ALL: [Family; 13] = [
        Family::W,
        Family::Y,
        Family::Z,
        Family::T,
        Family::M,
        Family::B,
        Family::U,
        Family::A,
        Family::Xb,
        Family::Xa,
        Family::F,
        Family::V,
        Family::Q,
    ];
}

impl VariableCatalogue {
    pub fn new(instance: &Instance) -> Self {
        let c = instance.num_customers();
        let d = instance.num_drones();
        let p = instance.num_depots();
        let f = instance.num_window_ranks();
        let w = instance.scenarios.takeoff.len();
        let l = instance.scenarios.breakdown.len();
        let pairs = c * c.saturating_sub(1);
        let sizes = [
            d,
            c * d * p,
            c,
            p,
            c * p * p.saturating_sub(1),
            d * p,
            c * d,
            pairs * d,
            c * d * w,
            c * d * w * l,
            c * f,
            pairs * d,
            c,
        ];
        let mut base = [0; 14];
        for (k, s) in sizes.iter().enumerate() {
            base[k + 1] = base[k] + s;
        }
        VariableCatalogue {
            customers: c,
            drones: d,
            depots: p,
            ranks: f,
            takeoff: w,
            breakdown: l,
            base,
        }
    }

    pub fn len(&self) -> usize {
        self.base[13]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn family_len(&self, fam: Family) -> usize {
        self.base[fam as usize + 1] - self.base[fam as usize]
    }

    pub fn family_of(&self, id: VarId) -> Family {
        let k = (0..13)
            .rev()
            .find(|&k| self.base[k] <= id.0)
            .expect("id in range");
        Family::ALL[k]
    }

    fn id(&self, fam: Family, offset: usize) -> VarId {
        VarId(self.base[fam as usize] + offset)
    }

    fn pair(&self, i: usize, j: usize) -> usize {
        debug_assert_ne!(i, j);
        i * (self.customers - 1) + if j < i { j } else { j - 1 }
    }

    pub fn w(&self, d: usize) -> VarId {
        self.id(Family::W, d)
    }
    pub fn y(&self, i: usize, d: usize, p: usize) -> VarId {
        self.id(Family::Y, (i * self.drones + d) * self.depots + p)
    }
    pub fn z(&self, i: usize) -> VarId {
        self.id(Family::Z, i)
    }
    pub fn t(&self, p: usize) -> VarId {
        self.id(Family::T, p)
    }
    pub fn m(&self, i: usize, p: usize, q: usize) -> VarId {
        debug_assert_ne!(p, q);
        let q2 = if q < p { q } else { q - 1 };
        self.id(Family::M, (i * self.depots + p) * (self.depots - 1) + q2)
    }
    pub fn b(&self, d: usize, p: usize) -> VarId {
        self.id(Family::B, d * self.depots + p)
    }
    pub fn u(&self, i: usize, d: usize) -> VarId {
        self.id(Family::U, i * self.drones + d)
    }
    pub fn a(&self, i: usize, j: usize, d: usize) -> VarId {
        self.id(Family::A, self.pair(i, j) * self.drones + d)
    }
    pub fn xb(&self, i: usize, d: usize, w: usize) -> VarId {
        self.id(Family::Xb, (i * self.drones + d) * self.takeoff + w)
    }
    pub fn xa(&self, i: usize, d: usize, w: usize, l: usize) -> VarId {
        self.id(
            Family::Xa,
            ((i * self.drones + d) * self.takeoff + w) * self.breakdown + l,
        )
    }
    /// `rank` is 1-based.
    pub fn f(&self, i: usize, rank: usize) -> VarId {
        self.id(Family::F, i * self.ranks + rank - 1)
    }
    pub fn v(&self, i: usize, j: usize, d: usize) -> VarId {
        self.id(Family::V, self.pair(i, j) * self.drones + d)
    }
    pub fn q(&self, i: usize) -> VarId {
        self.id(Family::Q, i)
    }

    /// Adds every variable to `model` in catalogue order.
    fn declare(&self, model: &mut MilpModel, inst: &Instance, big_m_time: f64) {
        assert_eq!(
            model.num_vars(),
            0,
            "catalogue must own the model's variables"
        );
        let c = self.customers;
        let cid = |i: usize| inst.customers[i].id.as_str();
        let did = |d: usize| inst.drones[d].id.as_str();
        let pid = |p: usize| inst.depots[p].as_str();
        for d in 0..self.drones {
            model.add_binary(format!("W({})", did(d)));
        }
        for i in 0..c {
            for d in 0..self.drones {
                for p in 0..self.depots {
                    model.add_binary(format!("Y({},{},{})", cid(i), did(d), pid(p)));
                }
            }
        }
        for i in 0..c {
            model.add_binary(format!("Z({})", cid(i)));
        }
        for p in 0..self.depots {
            model.add_binary(format!("T({})", pid(p)));
        }
        for i in 0..c {
            for p in 0..self.depots {
                for q in (0..self.depots).filter(|&q| q != p) {
                    model.add_binary(format!("M({},{},{})", cid(i), pid(p), pid(q)));
                }
            }
        }
        for d in 0..self.drones {
            for p in 0..self.depots {
                model.add_binary(format!("B({},{})", did(d), pid(p)));
            }
        }
        for i in 0..c {
            for d in 0..self.drones {
                model.add_integer(format!("U({},{})", cid(i), did(d)), 0.0, c as f64);
            }
        }
        for i in 0..c {
            for j in (0..c).filter(|&j| j != i) {
                for d in 0..self.drones {
                    model.add_binary(format!("A({},{},{})", cid(i), cid(j), did(d)));
                }
            }
        }
        for i in 0..c {
            for d in 0..self.drones {
                for w in 0..self.takeoff {
                    model.add_binary(format!("Xb({},{},w{})", cid(i), did(d), w + 1));
                }
            }
        }
        for i in 0..c {
            for d in 0..self.drones {
                for w in 0..self.takeoff {
                    for l in 0..self.breakdown {
                        model.add_binary(format!(
                            "Xa({},{},w{},l{})",
                            cid(i),
                            did(d),
                            w + 1,
                            l + 1
                        ));
                    }
                }
            }
        }
        for i in 0..c {
            for rank in 1..=self.ranks {
                let id = model.add_binary(format!("F({},{})", cid(i), rank));
                if inst.customers[i].window(rank as u32).is_none() {
                    model.variables[id.0].upper = 0.0;
                }
            }
        }
        for i in 0..c {
            for j in (0..c).filter(|&j| j != i) {
                for d in 0..self.drones {
                    model.add_binary(format!("V({},{},{})", cid(i), cid(j), did(d)));
                }
            }
        }
        for i in 0..c {
            model.add_continuous(format!("Q({})", cid(i)), 0.0, big_m_time);
        }
        debug_assert_eq!(model.num_vars(), self.len());
    }
}

/// Linear expression of one objective over the catalogue's variables.
pub fn build_objective(
    instance: &Instance,
    which: ObjectiveKind,
    cat: &VariableCatalogue,
) -> LinExpr {
    let mut e = LinExpr::new();
    let c = cat.customers;
    match which {
        ObjectiveKind::Cost => {
            for (d, drone) in instance.drones.iter().enumerate() {
                e.add(cat.w(d), drone.initial_cost);
            }
            for i in 0..c {
                for d in 0..cat.drones {
                    for p in 0..cat.depots {
                        e.add(cat.y(i, d, p), instance.round_trip_cost(i, p));
                    }
                }
            }
            for p in 0..cat.depots {
                e.add(cat.t(p), instance.costs.transfer_cost[p]);
            }
            for i in 0..c {
                e.add(cat.z(i), instance.costs.outsource_cost[i]);
            }
        }
        ObjectiveKind::Unsuccessful => {
            if c == 0 {
                return e;
            }
            let scale = 100.0 / c as f64;
            let sc = &instance.scenarios;
            for i in 0..c {
                for d in 0..cat.drones {
                    for (w, tk) in sc.takeoff.iter().enumerate() {
                        e.add(cat.xb(i, d, w), scale * tk.probability);
                        for (l, bk) in sc.breakdown.iter().enumerate() {
                            e.add(
                                cat.xa(i, d, w, l),
                                scale * (tk.probability * bk.probability),
                            );
                        }
                    }
                }
            }
        }
        ObjectiveKind::Reward => {
            for (i, cust) in instance.customers.iter().enumerate() {
                for w in &cust.windows {
                    e.add(cat.f(i, w.rank as usize), instance.costs.reward(w.rank));
                }
            }
        }
    }
    e
}

/// Branching priorities for the variables of `build_milp`: fleet, depot and
/// assignment decisions first, then window and transfer choices, then the
/// serving order, and the loss indicators (implied by the order) last.
pub fn branching_priorities(instance: &Instance) -> Vec<i32> {
    let cat = VariableCatalogue::new(instance);
    (0..cat.len())
        .map(|k| match cat.family_of(VarId(k)) {
            Family::W | Family::B | Family::Y | Family::Z => 3,
            Family::F | Family::T | Family::M => 2,
            Family::U | Family::A | Family::V => 1,
            Family::Xb | Family::Xa | Family::Q => 0,
        })
        .collect()
}

/// Partial MIP start for `build_milp` describing the schedule that
/// outsources every customer and reserves no drone.
pub fn outsourced_start(instance: &Instance) -> Vec<Option<f64>> {
    let cat = VariableCatalogue::new(instance);
    (0..cat.len())
        .map(|k| match cat.family_of(VarId(k)) {
            Family::Z => Some(1.0),
            Family::W | Family::Y | Family::B | Family::T | Family::M | Family::U => Some(0.0),
            _ => None,
        })
        .collect()
}

/// Builds the single-objective MILP for `selection`.
pub fn build_milp(
    instance: &Instance,
    selection: &ObjectiveSelection,
    config: &FormulationConfig,
) -> Result<MilpModel, FormulationError> {
    instance.validate()?;
    let (big_order, big_time) = config.resolve(instance)?;
    let cat = VariableCatalogue::new(instance);
    let mut m = MilpModel::new();
    cat.declare(&mut m, instance, big_time);

    let c = cat.customers;
    let nd = cat.drones;
    let np = cat.depots;
    let cid = |i: usize| instance.customers[i].id.as_str();
    let did = |d: usize| instance.drones[d].id.as_str();
    let pid = |p: usize| instance.depots[p].as_str();
    let served = |i: usize, d: usize, scale: f64| -> LinExpr {
        LinExpr::from_terms((0..np).map(|p| (cat.y(i, d, p), scale)))
    };
    let sc = &instance.scenarios;

    // Allocation: every package goes to exactly one drone/depot pair or to the carrier.
    for i in 0..c {
        let mut e = LinExpr::from_terms([(cat.z(i), 1.0)]);
        for d in 0..nd {
            e.add_expr(&served(i, d, 1.0), 1.0);
        }
        m.add_constraint(format!("alloc({})", cid(i)), e, Relation::Eq, 1.0);
    }
    // Drone activation and one home depot per drone.
    for d in 0..nd {
        for i in 0..c {
            for p in 0..np {
                let e = LinExpr::from_terms([(cat.y(i, d, p), 1.0), (cat.w(d), -1.0)]);
                m.add_constraint(
                    format!("activate({},{},{})", cid(i), did(d), pid(p)),
                    e,
                    Relation::Le,
                    0.0,
                );
                let e = LinExpr::from_terms([(cat.y(i, d, p), 1.0), (cat.b(d, p), -1.0)]);
                m.add_constraint(
                    format!("home({},{},{})", cid(i), did(d), pid(p)),
                    e,
                    Relation::Le,
                    0.0,
                );
            }
        }
        let mut e = LinExpr::from_terms((0..np).map(|p| (cat.b(d, p), 1.0)));
        e.add(cat.w(d), -1.0);
        m.add_constraint(format!("one_home({})", did(d)), e, Relation::Eq, 0.0);
    }
    // Transfers between depots.
    for i in 0..c {
        let origin = instance.origin(i);
        for p in 0..np {
            for q in (0..np).filter(|&q| q != p) {
                if p == origin {
                    let mut e = LinExpr::from_terms([(cat.m(i, p, q), 1.0)]);
                    for d in 0..nd {
                        e.add(cat.y(i, d, q), -1.0);
                    }
                    m.add_constraint(
                        format!("move({},{},{})", cid(i), pid(p), pid(q)),
                        e,
                        Relation::Ge,
                        0.0,
                    );
                }
                for (end, tag) in [(p, "from"), (q, "to")] {
                    let e = LinExpr::from_terms([(cat.t(end), 1.0), (cat.m(i, p, q), -1.0)]);
                    m.add_constraint(
                        format!("transfer_{tag}({},{},{})", cid(i), pid(p), pid(q)),
                        e,
                        Relation::Ge,
                        0.0,
                    );
                }
            }
        }
    }
    // Capacity, per-trip and daily distance limits.
    for (d, drone) in instance.drones.iter().enumerate() {
        let mut daily = LinExpr::new();
        for i in 0..c {
            for p in 0..np {
                let y = cat.y(i, d, p);
                let km = instance.round_trip_km(i, p);
                let tag = format!("{},{},{}", cid(i), did(d), pid(p));
                m.add_constraint(
                    format!("capacity({tag})"),
                    LinExpr::from_terms([(y, instance.customers[i].weight_kg)]),
                    Relation::Le,
                    drone.capacity_kg,
                );
                m.add_constraint(
                    format!("trip_range({tag})"),
                    LinExpr::from_terms([(y, km)]),
                    Relation::Le,
                    drone.trip_range_km,
                );
                daily.add(y, km);
            }
        }
        m.add_constraint(
            format!("daily_range({})", did(d)),
            daily,
            Relation::Le,
            drone.daily_range_km,
        );
    }
    // Grounded drones lose every package assigned to them.
    for i in 0..c {
        for d in 0..nd {
            for (w, tk) in sc.takeoff.iter().enumerate() {
                let grounded = if tk.cannot_takeoff[d] { 1.0 } else { 0.0 };
                let mut e = LinExpr::from_terms([(cat.xb(i, d, w), 1.0)]);
                e.add_expr(&served(i, d, grounded), -1.0);
                m.add_constraint(
                    format!("takeoff({},{},w{})", cid(i), did(d), w + 1),
                    e,
                    Relation::Eq,
                    0.0,
                );
            }
        }
    }
    // Breakdowns: the package being served is lost ...
    for i in 0..c {
        for d in 0..nd {
            for (w, tk) in sc.takeoff.iter().enumerate() {
                for (l, bk) in sc.breakdown.iter().enumerate() {
                    let hit = if !tk.cannot_takeoff[d] && bk.breaks[i][d] {
                        1.0
                    } else {
                        0.0
                    };
                    let mut e = served(i, d, hit);
                    e.add(cat.xa(i, d, w, l), -1.0);
                    m.add_constraint(
                        format!("breakdown({},{},w{},l{})", cid(i), did(d), w + 1, l + 1),
                        e,
                        Relation::Le,
                        0.0,
                    );
                }
            }
        }
    }
    // ... and so is every package scheduled after it on the same drone.
    for i in 0..c {
        for j in (0..c).filter(|&j| j != i) {
            for d in 0..nd {
                for w in 0..cat.takeoff {
                    for l in 0..cat.breakdown {
                        let e = LinExpr::from_terms([
                            (cat.u(i, d), 1.0),
                            (cat.u(j, d), -1.0),
                            (cat.xa(j, d, w, l), big_order),
                            (cat.xa(i, d, w, l), -big_order),
                        ]);
                        m.add_constraint(
                            format!(
                                "after_breakdown({},{},{},w{},l{})",
                                cid(i),
                                cid(j),
                                did(d),
                                w + 1,
                                l + 1
                            ),
                            e,
                            Relation::Le,
                            big_order,
                        );
                    }
                }
            }
        }
    }
    // Serving positions.
    for d in 0..nd {
        let mut count = LinExpr::new();
        for i in 0..c {
            count.add_expr(&served(i, d, 1.0), 1.0);
        }
        for i in 0..c {
            let mut e = served(i, d, 1.0);
            e.add(cat.u(i, d), -1.0);
            m.add_constraint(
                format!("position_lo({},{})", cid(i), did(d)),
                e,
                Relation::Le,
                0.0,
            );
            let mut e = LinExpr::from_terms([(cat.u(i, d), 1.0)]);
            e.add_expr(&count, -1.0);
            m.add_constraint(
                format!("position_hi({},{})", cid(i), did(d)),
                e,
                Relation::Le,
                0.0,
            );
        }
        for i in 0..c {
            for j in (0..c).filter(|&j| j != i) {
                let tag = format!("{},{},{}", cid(i), cid(j), did(d));
                let mut e = LinExpr::from_terms([
                    (cat.u(i, d), 1.0),
                    (cat.u(j, d), -1.0),
                    (cat.a(i, j, d), -big_order),
                ]);
                e.add_expr(&served(i, d, 1.0), 1.0);
                m.add_constraint(format!("distinct_lo({tag})"), e, Relation::Le, 0.0);
                let mut e = LinExpr::from_terms([
                    (cat.u(i, d), 1.0),
                    (cat.u(j, d), -1.0),
                    (cat.a(i, j, d), -big_order),
                ]);
                e.add_expr(&served(i, d, 1.0), -1.0);
                m.add_constraint(format!("distinct_hi({tag})"), e, Relation::Ge, -big_order);
                // Precedence indicator, active only when i itself is on drone d.
                let mut e = LinExpr::from_terms([
                    (cat.u(j, d), 1.0),
                    (cat.u(i, d), -1.0),
                    (cat.v(i, j, d), -big_order),
                ]);
                e.add_expr(&served(i, d, big_order), 1.0);
                m.add_constraint(format!("precedes({tag})"), e, Relation::Le, big_order);
            }
        }
    }
    // Order indicators of a pair agree with each other.
    for d in 0..nd {
        for i in 0..c {
            for j in (i + 1)..c {
                let tag = format!("{},{},{}", cid(i), cid(j), did(d));
                let pair = LinExpr::from_terms([(cat.a(i, j, d), 1.0), (cat.a(j, i, d), 1.0)]);
                m.add_constraint(
                    format!("order_pair({tag})"),
                    pair.clone(),
                    Relation::Le,
                    1.0,
                );
                for k in [i, j] {
                    let mut e = pair.clone();
                    e.add_expr(&served(k, d, -1.0), 1.0);
                    m.add_constraint(
                        format!("order_pair_{}({tag})", cid(k)),
                        e,
                        Relation::Ge,
                        0.0,
                    );
                }
                let e = LinExpr::from_terms([(cat.v(i, j, d), 1.0), (cat.v(j, i, d), 1.0)]);
                m.add_constraint(format!("sequence_pair({tag})"), e, Relation::Le, 1.0);
                for (a, b) in [(i, j), (j, i)] {
                    let mut e = LinExpr::from_terms([(cat.v(a, b, d), 1.0), (cat.a(a, b, d), 1.0)]);
                    e.add_expr(&served(a, d, -1.0), 1.0);
                    e.add_expr(&served(b, d, -1.0), 1.0);
                    m.add_constraint(
                        format!("order_link({},{},{})", cid(a), cid(b), did(d)),
                        e,
                        Relation::Ge,
                        -1.0,
                    );
                }
            }
        }
    }
    // Trips on one drone do not overlap.
    for i in 0..c {
        for j in (0..c).filter(|&j| j != i) {
            for d in 0..nd {
                let mut e = LinExpr::from_terms([
                    (cat.q(i), 1.0),
                    (cat.q(j), -1.0),
                    (cat.v(i, j, d), big_time),
                ]);
                for p in 0..np {
                    e.add(cat.y(i, d, p), instance.trip_minutes(i, d, p));
                }
                m.add_constraint(
                    format!("sequence({},{},{})", cid(i), cid(j), did(d)),
                    e,
                    Relation::Le,
                    big_time,
                );
            }
        }
    }
    // Shift limits of the serving drone.
    for (d, drone) in instance.drones.iter().enumerate() {
        for i in 0..c {
            let mut e = LinExpr::from_terms([(cat.q(i), 1.0)]);
            e.add_expr(&served(i, d, -big_time), 1.0);
            m.add_constraint(
                format!("shift_start({},{})", cid(i), did(d)),
                e,
                Relation::Ge,
                drone.shift_start_min - big_time,
            );
            for p in 0..np {
                let e = LinExpr::from_terms([(cat.q(i), 1.0), (cat.y(i, d, p), big_time)]);
                m.add_constraint(
                    format!("shift_end({},{},{})", cid(i), did(d), pid(p)),
                    e,
                    Relation::Le,
                    drone.shift_end_min - instance.trip_minutes(i, d, p) + big_time,
                );
            }
        }
    }
    // Time windows and the reward counter.
    for (i, cust) in instance.customers.iter().enumerate() {
        for w in &cust.windows {
            let f = cat.f(i, w.rank as usize);
            let mut open = LinExpr::from_terms([(cat.q(i), -1.0), (f, big_time)]);
            let mut close = LinExpr::from_terms([(cat.q(i), 1.0), (f, big_time)]);
            for d in 0..nd {
                for p in 0..np {
                    open.add(cat.y(i, d, p), -instance.flight_minutes(i, d, p));
                    close.add(cat.y(i, d, p), instance.trip_minutes(i, d, p));
                }
            }
            m.add_constraint(
                format!("window_open({},{})", cid(i), w.rank),
                open,
                Relation::Le,
                big_time - w.start,
            );
            m.add_constraint(
                format!("window_close({},{})", cid(i), w.rank),
                close,
                Relation::Le,
                big_time + w.end,
            );
            let mut e = LinExpr::from_terms([(f, 1.0)]);
            for d in 0..nd {
                e.add_expr(&served(i, d, 1.0), -1.0);
            }
            m.add_constraint(
                format!("reward_needs_drone({},{})", cid(i), w.rank),
                e,
                Relation::Le,
                0.0,
            );
        }
        let e = LinExpr::from_terms((1..=cat.ranks).map(|r| (cat.f(i, r), 1.0)));
        m.add_constraint(format!("one_window({})", cid(i)), e, Relation::Le, 1.0);
    }

    for (kind, rel, value) in selection.active_bounds() {
        m.add_constraint(
            format!("eps_{kind}"),
            build_objective(instance, kind, &cat),
            rel,
            value,
        );
    }
    let primary = selection.primary;
    m.set_objective(primary.sense(), build_objective(instance, primary, &cat));
    Ok(m)
}

/// Turns raw variable values (indexed like the catalogue) into a schedule.
pub fn decode_schedule(instance: &Instance, values: &[f64]) -> Result<Schedule, DecodeError> {
    let cat = VariableCatalogue::new(instance);
    if values.len() != cat.len() {
        return Err(DecodeError::Length {
            expected: cat.len(),
            got: values.len(),
        });
    }
    for (k, &v) in values.iter().enumerate() {
        if cat.family_of(VarId(k)) != Family::Q && (v - v.round()).abs() > INTEGRALITY_TOL {
            return Err(DecodeError::Fractional {
                name: variable_name(instance, &cat, k),
                value: v,
            });
        }
    }
    let on = |id: VarId| values[id.0] > 0.5;

    let mut schedule = Schedule::default();
    let mut positions: Vec<Vec<(f64, usize)>> = vec![Vec::new(); cat.drones];
    let mut homes: Vec<Option<usize>> = vec![None; cat.drones];
    for (i, cust) in instance.customers.iter().enumerate() {
        let mut modes = Vec::new();
        for d in 0..cat.drones {
            for p in 0..cat.depots {
                if on(cat.y(i, d, p)) {
                    modes.push((d, p));
                }
            }
        }
        let outsourced = on(cat.z(i));
        if modes.len() + usize::from(outsourced) > 1 {
            return Err(DecodeError::AssignedTwice(cust.id.clone()));
        }
        let ranks: Vec<usize> = (1..=cat.ranks).filter(|&r| on(cat.f(i, r))).collect();
        if ranks.len() > 1 {
            return Err(DecodeError::Contradiction(format!(
                "customer {} selects {} windows",
                cust.id,
                ranks.len()
            )));
        }
        let plan = match modes.first() {
            Some(&(d, p)) => {
                if let Some(prev) = homes[d] {
                    if prev != p {
                        return Err(DecodeError::Contradiction(format!(
                            "drone {} departs from both {} and {}",
                            instance.drones[d].id, instance.depots[prev], instance.depots[p]
                        )));
                    }
                }
                homes[d] = Some(p);
                positions[d].push((values[cat.u(i, d).0], i));
                CustomerPlan {
                    mode: Mode::Drone {
                        drone: instance.drones[d].id.clone(),
                        depot: instance.depots[p].clone(),
                    },
                    start_min: Some(values[cat.q(i).0]),
                    window: ranks.first().map(|&r| r as u32),
                }
            }
            None if outsourced => {
                if !ranks.is_empty() {
                    return Err(DecodeError::Contradiction(format!(
                        "outsourced customer {} has a delivery window",
                        cust.id
                    )));
                }
                CustomerPlan {
                    mode: Mode::Outsourced,
                    start_min: None,
                    window: None,
                }
            }
            None => return Err(DecodeError::Unassigned(cust.id.clone())),
        };
        schedule.customers.insert(cust.id.clone(), plan);
    }
    for (d, mut served) in positions.into_iter().enumerate() {
        if served.is_empty() {
            continue;
        }
        served.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        schedule.routes.insert(
            instance.drones[d].id.clone(),
            Route {
                depot: instance.depots[homes[d].expect("home set with customers")].clone(),
                sequence: served
                    .into_iter()
                    .map(|(_, i)| instance.customers[i].id.clone())
                    .collect(),
            },
        );
    }
    Ok(schedule)
}

fn variable_name(instance: &Instance, cat: &VariableCatalogue, k: usize) -> String {
    // Cheap path for error messages: rebuild the names once.
    let mut m = MilpModel::new();
    cat.declare(&mut m, instance, 0.0);
    m.variables[k].name.clone()
}
