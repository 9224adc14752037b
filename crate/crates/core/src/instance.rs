//! Problem input: customers, depots, drones, distances, uncertainty
//! scenarios and the cost/reward parameters.
//!
//! Times are minutes from midnight, distances are kilometres and speeds are
//! km/h. Scenario flags are stored positionally, aligned with the order of
//! `Instance::drones` and `Instance::customers`.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Currency per km used when no routing rate is given (1.05 detour factor
/// times 0.1 per km).
pub const DEFAULT_ROUTING_RATE: f64 = 0.105;

/// Tolerance on scenario probability sums.
pub const PROBABILITY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    /// Preference rank, 1 is the most preferred.
    pub rank: u32,
    pub start: f64,
    pub end: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    pub id: String,
    pub weight_kg: f64,
    pub serving_time_min: f64,
    pub origin_depot: String,
    /// Sorted by rank.
    pub windows: Vec<TimeWindow>,
}

impl Customer {
    pub fn window(&self, rank: u32) -> Option<&TimeWindow> {
        self.windows.iter().find(|w| w.rank == rank)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Drone {
    pub id: String,
    pub capacity_kg: f64,
    pub trip_range_km: f64,
    pub daily_range_km: f64,
    pub shift_start_min: f64,
    pub shift_end_min: f64,
    pub speed_kmh: f64,
    pub initial_cost: f64,
}

/// Directed distances between locations (customers and depots), in km.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    entries: HashMap<String, HashMap<String, f64>>,
}

impl DistanceMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, from: impl Into<String>, to: impl Into<String>, km: f64) {
        self.entries
            .entry(from.into())
            .or_default()
            .insert(to.into(), km);
    }

    /// Inserts `km` in both directions.
    pub fn insert_symmetric(&mut self, a: &str, b: &str, km: f64) {
        self.insert(a, b, km);
        self.insert(b, a, km);
    }

    pub fn get(&self, from: &str, to: &str) -> Option<f64> {
        if from == to {
            return Some(
                self.entries
                    .get(from)
                    .and_then(|m| m.get(to))
                    .copied()
                    .unwrap_or(0.0),
            );
        }
        self.entries.get(from)?.get(to).copied()
    }

    /// All stored entries in a stable order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str, f64)> {
        let mut out: Vec<(&str, &str, f64)> = self
            .entries
            .iter()
            .flat_map(|(f, row)| row.iter().map(move |(t, &k)| (f.as_str(), t.as_str(), k)))
            .collect();
        out.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        out.into_iter()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TakeoffScenario {
    pub probability: f64,
    /// `cannot_takeoff[d]` is true when drone `d` stays grounded.
    pub cannot_takeoff: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreakdownScenario {
    pub probability: f64,
    /// `breaks[i][d]` is true when drone `d` breaks down while serving customer `i`.
    pub breaks: Vec<Vec<bool>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    pub takeoff: Vec<TakeoffScenario>,
    pub breakdown: Vec<BreakdownScenario>,
}

impl ScenarioSet {
    /// One certain scenario in each set with no failures.
    pub fn reliable(customers: usize, drones: usize) -> Self {
        ScenarioSet {
            takeoff: vec![TakeoffScenario {
                probability: 1.0,
                cannot_takeoff: vec![false; drones],
            }],
            breakdown: vec![BreakdownScenario {
                probability: 1.0,
                breaks: vec![vec![false; drones]; customers],
            }],
        }
    }

    /// Two scenarios per set: every drone grounded with probability
    /// `p_grounded`, and every drone breaking at every customer with
    /// probability `p_breakdown`.
    pub fn all_or_nothing(
        customers: usize,
        drones: usize,
        p_grounded: f64,
        p_breakdown: f64,
    ) -> Self {
        ScenarioSet {
            takeoff: vec![
                TakeoffScenario {
                    probability: 1.0 - p_grounded,
                    cannot_takeoff: vec![false; drones],
                },
                TakeoffScenario {
                    probability: p_grounded,
                    cannot_takeoff: vec![true; drones],
                },
            ],
            breakdown: vec![
                BreakdownScenario {
                    probability: 1.0 - p_breakdown,
                    breaks: vec![vec![false; drones]; customers],
                },
                BreakdownScenario {
                    probability: p_breakdown,
                    breaks: vec![vec![true; drones]; customers],
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostRewardParams {
    /// Carrier fee per customer, aligned with `Instance::customers`.
    pub outsource_cost: Vec<f64>,
    /// Flat transfer fee per depot, aligned with `Instance::depots`.
    pub transfer_cost: Vec<f64>,
    pub routing_rate_per_km: f64,
    /// Reward for serving inside the window of rank `f` is `window_rewards[f - 1]`.
    pub window_rewards: Vec<f64>,
}

impl CostRewardParams {
    pub fn reward(&self, rank: u32) -> f64 {
        self.window_rewards[rank as usize - 1]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub customers: Vec<Customer>,
    pub depots: Vec<String>,
    pub drones: Vec<Drone>,
    pub distances: DistanceMatrix,
    pub scenarios: ScenarioSet,
    pub costs: CostRewardParams,
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("{what} index {index} out of range (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("negative distance {0}")]
    NegativeDistance(f64),
    #[error("distance from {from} to {to} is missing")]
    MissingDistance { from: String, to: String },
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// One broken invariant, tagged with the offending entity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

impl Instance {
    pub fn num_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn num_drones(&self) -> usize {
        self.drones.len()
    }

    pub fn num_depots(&self) -> usize {
        self.depots.len()
    }

    /// Number of window ranks (the length of the reward list).
    pub fn num_window_ranks(&self) -> usize {
        self.costs.window_rewards.len()
    }

    pub fn depot_index(&self, id: &str) -> Option<usize> {
        self.depots.iter().position(|d| d == id)
    }

    pub fn drone_index(&self, id: &str) -> Option<usize> {
        self.drones.iter().position(|d| d.id == id)
    }

    pub fn customer_index(&self, id: &str) -> Option<usize> {
        self.customers.iter().position(|c| c.id == id)
    }

    /// Index of customer `i`'s origin depot. Panics on an unvalidated
    /// instance whose origin does not resolve.
    pub fn origin(&self, i: usize) -> usize {
        self.depot_index(&self.customers[i].origin_depot)
            .expect("origin depot resolves")
    }

    /// Depot to customer and back, km.
    pub fn round_trip_km(&self, i: usize, p: usize) -> f64 {
        let c = &self.customers[i].id;
        let d = &self.depots[p];
        self.distances.get(d, c).expect("distance depot->customer")
            + self.distances.get(c, d).expect("distance customer->depot")
    }

    /// Flying time of the round trip for drone `d`, minutes.
    pub fn flight_minutes(&self, i: usize, d: usize, p: usize) -> f64 {
        self.round_trip_km(i, p) / self.drones[d].speed_kmh * 60.0
    }

    /// Time the drone is busy with customer `i`: round trip plus service.
    pub fn trip_minutes(&self, i: usize, d: usize, p: usize) -> f64 {
        self.flight_minutes(i, d, p) + self.customers[i].serving_time_min
    }

    /// Routing cost of the depot-customer-depot round trip.
    pub fn round_trip_cost(&self, i: usize, p: usize) -> f64 {
        let c = &self.customers[i].id;
        let d = &self.depots[p];
        let go = self.distances.get(d, c).expect("distance depot->customer");
        let back = self.distances.get(c, d).expect("distance customer->depot");
        self.costs.routing_rate_per_km * go + self.costs.routing_rate_per_km * back
    }

    /// Whether drone `d` flying from depot `p` can physically make the trip
    /// to customer `i` (capacity and per-trip range).
    pub fn trip_allowed(&self, i: usize, d: usize, p: usize) -> bool {
        let drone = &self.drones[d];
        self.customers[i].weight_kg <= drone.capacity_kg
            && self.round_trip_km(i, p) <= drone.trip_range_km
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let v = validate_instance(self);
        if v.is_empty() {
            Ok(())
        } else {
            Err(InstanceError::Invalid(v))
        }
    }
}

fn push(out: &mut Vec<Violation>, subject: impl Into<String>, message: impl Into<String>) {
    out.push(Violation {
        subject: subject.into(),
        message: message.into(),
    });
}

fn probability_sum_ok(probs: impl Iterator<Item = f64>, label: &str, out: &mut Vec<Violation>) {
    let mut sum = 0.0;
    for (k, p) in probs.enumerate() {
        if !(p.is_finite() && p >= 0.0) {
            push(
                out,
                format!("{label} scenario {}", k + 1),
                format!("probability {p} is negative or not finite"),
            );
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROBABILITY_TOL {
        push(
            out,
            format!("{label} scenarios"),
            format!("probabilities sum to {sum}"),
        );
    }
}

/// Lists every broken invariant of `instance`; empty means well formed.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let c = instance.num_customers();
    let d = instance.num_drones();
    let ranks = instance.num_window_ranks();

    if instance.depots.is_empty() && !(instance.customers.is_empty() && instance.drones.is_empty())
    {
        push(&mut out, "depots", "at least one depot is required");
    }
    let mut depot_ids = HashSet::new();
    for p in &instance.depots {
        if p.is_empty() {
            push(&mut out, "depot", "empty id");
        }
        if !depot_ids.insert(p.as_str()) {
            push(&mut out, format!("depot {p}"), "duplicate id");
        }
    }

    let mut seen: HashMap<&str, &str> = HashMap::new();
    let mut reported = HashSet::new();
    for cust in &instance.customers {
        let id = cust.id.as_str();
        if id.is_empty() {
            push(&mut out, "customer", "empty id");
        }
        if depot_ids.contains(id) {
            push(
                &mut out,
                format!("customer {id}"),
                "id collides with a depot id",
            );
        }
        if let Some(prev) = seen.insert(id, cust.origin_depot.as_str()) {
            if reported.insert(id) {
                if prev != cust.origin_depot {
                    push(
                        &mut out,
                        format!("customer {id}"),
                        "more than one origin depot",
                    );
                } else {
                    push(&mut out, format!("customer {id}"), "duplicate id");
                }
            }
        }
        if !(cust.weight_kg.is_finite() && cust.weight_kg > 0.0) {
            push(
                &mut out,
                format!("customer {id}"),
                format!("weight {} must be positive", cust.weight_kg),
            );
        }
        if !(cust.serving_time_min.is_finite() && cust.serving_time_min >= 0.0) {
            push(
                &mut out,
                format!("customer {id}"),
                format!("serving time {} must be nonnegative", cust.serving_time_min),
            );
        }
        if !depot_ids.contains(cust.origin_depot.as_str()) {
            push(
                &mut out,
                format!("customer {id}"),
                format!("origin depot {} is unknown", cust.origin_depot),
            );
        }
        let mut last_rank = 0;
        for w in &cust.windows {
            if !(w.start.is_finite() && w.end.is_finite() && w.start < w.end) {
                push(
                    &mut out,
                    format!("customer {id}"),
                    format!(
                        "window rank {} has start {} >= end {}",
                        w.rank, w.start, w.end
                    ),
                );
            }
            if w.rank == 0 || w.rank as usize > ranks {
                push(
                    &mut out,
                    format!("customer {id}"),
                    format!("window rank {} outside 1..={ranks}", w.rank),
                );
            }
            if w.rank <= last_rank {
                push(
                    &mut out,
                    format!("customer {id}"),
                    "window ranks must be unique and ordered by preference",
                );
            }
            last_rank = w.rank;
        }
    }

    let mut drone_ids = HashSet::new();
    for dr in &instance.drones {
        let id = dr.id.as_str();
        if !drone_ids.insert(id) {
            push(&mut out, format!("drone {id}"), "duplicate id");
        }
        for (name, v) in [
            ("capacity", dr.capacity_kg),
            ("trip range", dr.trip_range_km),
            ("daily range", dr.daily_range_km),
            ("speed", dr.speed_kmh),
        ] {
            if !(v.is_finite() && v > 0.0) {
                push(
                    &mut out,
                    format!("drone {id}"),
                    format!("{name} {v} must be positive"),
                );
            }
        }
        for (name, v) in [
            ("shift start", dr.shift_start_min),
            ("initial cost", dr.initial_cost),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                push(
                    &mut out,
                    format!("drone {id}"),
                    format!("{name} {v} must be nonnegative"),
                );
            }
        }
        if !(dr.shift_end_min.is_finite() && dr.shift_start_min < dr.shift_end_min) {
            push(
                &mut out,
                format!("drone {id}"),
                "shift start must precede shift end",
            );
        }
    }

    let mut missing = Vec::new();
    for p in &instance.depots {
        for cust in &instance.customers {
            for (from, to) in [
                (p.as_str(), cust.id.as_str()),
                (cust.id.as_str(), p.as_str()),
            ] {
                match instance.distances.get(from, to) {
                    None => missing.push(format!("({from}, {to})")),
                    Some(k) if !(k.is_finite() && k >= 0.0) => push(
                        &mut out,
                        format!("distance ({from}, {to})"),
                        format!("{k} must be nonnegative"),
                    ),
                    _ => {}
                }
            }
        }
    }
    if !missing.is_empty() {
        push(
            &mut out,
            "distances",
            format!("incomplete distance matrix, missing {}", missing.join(", ")),
        );
    }
    for (from, to, k) in instance.distances.iter() {
        if from == to && k != 0.0 {
            push(
                &mut out,
                format!("distance ({from}, {to})"),
                "self distance must be 0",
            );
        }
    }

    let sc = &instance.scenarios;
    if sc.takeoff.is_empty() {
        push(&mut out, "takeoff scenarios", "empty set");
    }
    if sc.breakdown.is_empty() {
        push(&mut out, "breakdown scenarios", "empty set");
    }
    probability_sum_ok(
        sc.takeoff.iter().map(|s| s.probability),
        "takeoff",
        &mut out,
    );
    probability_sum_ok(
        sc.breakdown.iter().map(|s| s.probability),
        "breakdown",
        &mut out,
    );
    for (k, s) in sc.takeoff.iter().enumerate() {
        if s.cannot_takeoff.len() != d {
            push(
                &mut out,
                format!("takeoff scenario {}", k + 1),
                format!("has {} drone flags, expected {d}", s.cannot_takeoff.len()),
            );
        }
    }
    for (k, s) in sc.breakdown.iter().enumerate() {
        if s.breaks.len() != c || s.breaks.iter().any(|row| row.len() != d) {
            push(
                &mut out,
                format!("breakdown scenario {}", k + 1),
                format!("flag matrix must be {c} x {d}"),
            );
        }
    }

    let costs = &instance.costs;
    if costs.outsource_cost.len() != c {
        push(
            &mut out,
            "costs",
            format!(
                "{} outsourcing costs for {c} customers",
                costs.outsource_cost.len()
            ),
        );
    }
    if costs.transfer_cost.len() != instance.num_depots() {
        push(
            &mut out,
            "costs",
            format!(
                "{} transfer costs for {} depots",
                costs.transfer_cost.len(),
                instance.num_depots()
            ),
        );
    }
    for (k, &v) in costs.outsource_cost.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            let who = instance.customers.get(k).map_or("?", |c| c.id.as_str());
            push(
                &mut out,
                format!("customer {who}"),
                format!("outsourcing cost {v} must be nonnegative"),
            );
        }
    }
    for (k, &v) in costs.transfer_cost.iter().enumerate() {
        if !(v.is_finite() && v >= 0.0) {
            let who = instance.depots.get(k).map_or("?", |s| s.as_str());
            push(
                &mut out,
                format!("depot {who}"),
                format!("transfer cost {v} must be nonnegative"),
            );
        }
    }
    if !(costs.routing_rate_per_km.is_finite() && costs.routing_rate_per_km >= 0.0) {
        push(
            &mut out,
            "costs",
            format!(
                "routing rate {} must be nonnegative",
                costs.routing_rate_per_km
            ),
        );
    }
    if costs
        .window_rewards
        .iter()
        .any(|r| !(r.is_finite() && *r >= 0.0))
    {
        push(&mut out, "costs", "window rewards must be nonnegative");
    }
    if costs.window_rewards.windows(2).any(|w| w[0] <= w[1]) {
        push(
            &mut out,
            "costs",
            "window rewards must be strictly decreasing in rank",
        );
    }
    out
}

/// Probability of takeoff scenario `omega` together with breakdown
/// scenario `lambda`; the two sets are independent.
pub fn joint_probability(
    scenarios: &ScenarioSet,
    omega: usize,
    lambda: usize,
) -> Result<f64, InstanceError> {
    let w = scenarios
        .takeoff
        .get(omega)
        .ok_or(InstanceError::IndexOutOfRange {
            what: "takeoff scenario",
            index: omega,
            len: scenarios.takeoff.len(),
        })?;
    let l = scenarios
        .breakdown
        .get(lambda)
        .ok_or(InstanceError::IndexOutOfRange {
            what: "breakdown scenario",
            index: lambda,
            len: scenarios.breakdown.len(),
        })?;
    Ok(w.probability * l.probability)
}

pub fn routing_cost(params: &CostRewardParams, distance_km: f64) -> Result<f64, InstanceError> {
    if distance_km < 0.0 || distance_km.is_nan() {
        return Err(InstanceError::NegativeDistance(distance_km));
    }
    Ok(distance_km * params.routing_rate_per_km)
}
