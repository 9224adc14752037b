//! Schedules and their objective values, computed directly from the
//! scheduling semantics rather than from MILP variables.

mod brute_force;
mod monte_carlo;

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formulation::ObjectiveKind;
use crate::instance::Instance;

pub use brute_force::{brute_force_optimum, OracleError, ORACLE_CAP};
pub use monte_carlo::{monte_carlo_unsuccessful, McEstimate};

/// Absolute slack (minutes, km, kg) when checking a schedule's timing and
/// limits.
pub const SCHEDULE_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum Mode {
    Outsourced,
    Drone { drone: String, depot: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomerPlan {
    #[serde(flatten)]
    pub mode: Mode,
    /// Departure time of the drone trip, minutes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_min: Option<f64>,
    /// Rank of the window the delivery is credited to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub depot: String,
    /// Customers in serving order.
    pub sequence: Vec<String>,
}

/// Decoded delivery plan, keyed by ids so that it does not depend on the
/// order customers or drones appear in the input.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub customers: BTreeMap<String, CustomerPlan>,
    /// Only drones with at least one customer appear.
    pub routes: BTreeMap<String, Route>,
}

impl Schedule {
    /// Every customer handed to the carrier.
    pub fn all_outsourced(instance: &Instance) -> Schedule {
        Schedule {
            customers: instance
                .customers
                .iter()
                .map(|c| {
                    (
                        c.id.clone(),
                        CustomerPlan {
                            mode: Mode::Outsourced,
                            start_min: None,
                            window: None,
                        },
                    )
                })
                .collect(),
            routes: BTreeMap::new(),
        }
    }

    /// Confirms the schedule is complete and executable: exclusive modes,
    /// routes matching modes, capacity and range limits, shift bounds,
    /// non-overlapping trips and honoured windows.
    pub fn check(&self, instance: &Instance) -> Result<(), ScheduleError> {
        let bad = |msg: String| Err(ScheduleError(msg));
        for id in self.customers.keys() {
            if instance.customer_index(id).is_none() {
                return bad(format!("unknown customer {id}"));
            }
        }
        for c in &instance.customers {
            if !self.customers.contains_key(&c.id) {
                return bad(format!("customer {} has no plan", c.id));
            }
        }
        let mut routed = HashSet::new();
        for (drone_id, route) in &self.routes {
            let Some(d) = instance.drone_index(drone_id) else {
                return bad(format!("unknown drone {drone_id}"));
            };
            let Some(p) = instance.depot_index(&route.depot) else {
                return bad(format!("unknown depot {}", route.depot));
            };
            let drone = &instance.drones[d];
            if route.sequence.is_empty() {
                return bad(format!("drone {drone_id} has an empty route"));
            }
            let mut clock = drone.shift_start_min;
            let mut daily = 0.0;
            for cid in &route.sequence {
                if !routed.insert(cid.as_str()) {
                    return bad(format!(
                        "customer {cid} appears in more than one route position"
                    ));
                }
                let Some(i) = instance.customer_index(cid) else {
                    return bad(format!("unknown customer {cid} in route of {drone_id}"));
                };
                let plan = &self.customers[cid];
                match &plan.mode {
                    Mode::Drone {
                        drone: pd,
                        depot: pp,
                    } if pd == drone_id && *pp == route.depot => {}
                    _ => {
                        return bad(format!(
                            "customer {cid} is routed on {drone_id} but its mode disagrees"
                        ))
                    }
                }
                let cust = &instance.customers[i];
                if cust.weight_kg > drone.capacity_kg + SCHEDULE_TOL {
                    return bad(format!("customer {cid} exceeds the capacity of {drone_id}"));
                }
                let km = instance.round_trip_km(i, p);
                if km > drone.trip_range_km + SCHEDULE_TOL {
                    return bad(format!("trip to {cid} exceeds the range of {drone_id}"));
                }
                daily += km;
                let Some(start) = plan.start_min else {
                    return bad(format!("drone-served customer {cid} has no start time"));
                };
                let tol = SCHEDULE_TOL * start.abs().max(1.0);
                if start < 0.0 || start + tol < clock {
                    return bad(format!(
                        "trip to {cid} starts at {start} before the drone is free at {clock}"
                    ));
                }
                let trip = instance.trip_minutes(i, d, p);
                if start + trip > drone.shift_end_min + tol {
                    return bad(format!("trip to {cid} ends after the shift of {drone_id}"));
                }
                if let Some(rank) = plan.window {
                    let Some(w) = cust.window(rank) else {
                        return bad(format!("customer {cid} has no window of rank {rank}"));
                    };
                    let arrive = start + instance.flight_minutes(i, d, p);
                    if arrive + tol < w.start || start + trip > w.end + tol {
                        return bad(format!(
                            "delivery to {cid} misses its window of rank {rank}"
                        ));
                    }
                }
                clock = start + trip;
            }
            if daily > drone.daily_range_km + SCHEDULE_TOL {
                return bad(format!("drone {drone_id} exceeds its daily range"));
            }
        }
        for (cid, plan) in &self.customers {
            match plan.mode {
                Mode::Drone { .. } if !routed.contains(cid.as_str()) => {
                    return bad(format!(
                        "drone-served customer {cid} is missing from its route"
                    ))
                }
                Mode::Outsourced if plan.window.is_some() => {
                    return bad(format!(
                        "outsourced customer {cid} cannot earn a window reward"
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("inconsistent schedule: {0}")]
pub struct ScheduleError(pub String);

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub total_cost: f64,
    pub unsuccessful_pct: f64,
    pub reward: f64,
}

impl ObjectiveVector {
    pub fn get(&self, kind: ObjectiveKind) -> f64 {
        match kind {
            ObjectiveKind::Cost => self.total_cost,
            ObjectiveKind::Unsuccessful => self.unsuccessful_pct,
            ObjectiveKind::Reward => self.reward,
        }
    }

    /// Pareto dominance: no worse in every objective (cost and unsuccessful
    /// minimised, reward maximised) and strictly better in one.
    pub fn dominates(&self, other: &ObjectiveVector) -> bool {
        let no_worse = self.total_cost <= other.total_cost
            && self.unsuccessful_pct <= other.unsuccessful_pct
            && self.reward >= other.reward;
        let better = self.total_cost < other.total_cost
            || self.unsuccessful_pct < other.unsuccessful_pct
            || self.reward > other.reward;
        no_worse && better
    }
}

/// Expected number of packages lost on one drone whose serving order is
/// `route` (customer indices), over all takeoff and breakdown scenarios.
pub(crate) fn expected_losses(instance: &Instance, d: usize, route: &[usize]) -> f64 {
    let n = route.len() as f64;
    let mut total = 0.0;
    for tk in &instance.scenarios.takeoff {
        if tk.cannot_takeoff[d] {
            total += tk.probability * n;
            continue;
        }
        for bk in &instance.scenarios.breakdown {
            if let Some(k) = route.iter().position(|&i| bk.breaks[i][d]) {
                total += tk.probability * bk.probability * (route.len() - k) as f64;
            }
        }
    }
    total
}

/// Objective values of `schedule` on `instance`.
pub fn evaluate_schedule(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<ObjectiveVector, ScheduleError> {
    schedule.check(instance)?;
    let mut cost = 0.0;
    let mut reward = 0.0;
    let mut touched = vec![false; instance.num_depots()];
    // Iterate in instance order so the sums do not depend on map order.
    for (i, cust) in instance.customers.iter().enumerate() {
        let plan = &schedule.customers[&cust.id];
        match &plan.mode {
            Mode::Outsourced => cost += instance.costs.outsource_cost[i],
            Mode::Drone { depot, .. } => {
                let p = instance.depot_index(depot).expect("checked");
                cost += instance.round_trip_cost(i, p);
                let origin = instance.origin(i);
                if origin != p {
                    touched[origin] = true;
                    touched[p] = true;
                }
                if let Some(rank) = plan.window {
                    reward += instance.costs.reward(rank);
                }
            }
        }
    }
    for (p, t) in touched.iter().enumerate() {
        if *t {
            cost += instance.costs.transfer_cost[p];
        }
    }
    let mut losses = 0.0;
    for (d, drone) in instance.drones.iter().enumerate() {
        if let Some(route) = schedule.routes.get(&drone.id) {
            cost += drone.initial_cost;
            let idx: Vec<usize> = route
                .sequence
                .iter()
                .map(|c| instance.customer_index(c).expect("checked"))
                .collect();
            losses += expected_losses(instance, d, &idx);
        }
    }
    let c = instance.num_customers();
    let unsuccessful_pct = if c == 0 {
        0.0
    } else {
        100.0 / c as f64 * losses
    };
    Ok(ObjectiveVector {
        total_cost: cost,
        unsuccessful_pct,
        reward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::tests::small;
    use crate::instance::{Customer, DistanceMatrix, ScenarioSet};

    fn one_drone_schedule(inst: &Instance, order: &[&str]) -> Schedule {
        let mut s = Schedule::all_outsourced(inst);
        let mut clock = inst.drones[0].shift_start_min;
        for id in order {
            let i = inst.customer_index(id).unwrap();
            s.customers.insert(
                id.to_string(),
                CustomerPlan {
                    mode: Mode::Drone {
                        drone: "d1".into(),
                        depot: "p1".into(),
                    },
                    start_min: Some(clock),
                    window: None,
                },
            );
            clock += inst.trip_minutes(i, 0, 0);
        }
        s.routes.insert(
            "d1".into(),
            Route {
                depot: "p1".into(),
                sequence: order.iter().map(|s| s.to_string()).collect(),
            },
        );
        s
    }

    /// `n` identical customers around a single depot.
    fn ring(n: usize, outsource: f64) -> Instance {
        let mut inst = small();
        inst.customers.clear();
        inst.distances = DistanceMatrix::new();
        for k in 0..n {
            let id = format!("c{}", k + 1);
            inst.distances.insert_symmetric("p1", &id, 1.0);
            inst.customers.push(Customer {
                id,
                weight_kg: 1.0,
                serving_time_min: 1.0,
                origin_depot: "p1".into(),
                windows: vec![],
            });
        }
        inst.drones[0].shift_end_min = 480.0 + 10.0 * n as f64;
        inst.costs.outsource_cost = vec![outsource; n];
        inst.scenarios = ScenarioSet::reliable(n, 1);
        inst
    }

    #[test]
    fn all_outsourced_forty_customers() {
        let inst = ring(40, 16.0);
        let v = evaluate_schedule(&inst, &Schedule::all_outsourced(&inst)).unwrap();
        assert_eq!(
            v,
            ObjectiveVector {
                total_cost: 640.0,
                unsuccessful_pct: 0.0,
                reward: 0.0
            }
        );
    }

    #[test]
    fn one_customer_under_two_scenario_model() {
        let mut inst = ring(1, 16.0);
        inst.scenarios = ScenarioSet::all_or_nothing(1, 1, 0.1, 0.1);
        let v = evaluate_schedule(&inst, &one_drone_schedule(&inst, &["c1"])).unwrap();
        assert!((v.unsuccessful_pct - 19.0).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn expected_losses_scale_with_route_length() {
        for n in 1..=5 {
            let mut inst = ring(n, 16.0);
            inst.scenarios = ScenarioSet::all_or_nothing(n, 1, 0.1, 0.1);
            let ids: Vec<String> = (1..=n).map(|k| format!("c{k}")).collect();
            let order: Vec<&str> = ids.iter().map(|s| s.as_str()).collect();
            let v = evaluate_schedule(&inst, &one_drone_schedule(&inst, &order)).unwrap();
            assert!((v.unsuccessful_pct - 100.0 * 0.19 * n as f64 / n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn breakdown_at_position_k_loses_the_tail() {
        let mut inst = ring(4, 16.0);
        // Certain takeoff; a single certain breakdown scenario at c3.
        inst.scenarios = ScenarioSet::reliable(4, 1);
        inst.scenarios.breakdown[0].breaks[2][0] = true;
        let s = one_drone_schedule(&inst, &["c1", "c2", "c3", "c4"]);
        let v = evaluate_schedule(&inst, &s).unwrap();
        assert!((v.unsuccessful_pct - 100.0 * 2.0 / 4.0).abs() < 1e-12);
        let s = one_drone_schedule(&inst, &["c3", "c1", "c2", "c4"]);
        assert!((evaluate_schedule(&inst, &s).unwrap().unsuccessful_pct - 100.0).abs() < 1e-12);
    }

    #[test]
    fn cost_counts_drone_routing_and_transfers() {
        let mut inst = small();
        inst.depots.push("p2".into());
        inst.costs.transfer_cost = vec![30.0, 20.0];
        inst.distances.insert_symmetric("p2", "c1", 1.0);
        inst.distances.insert_symmetric("p2", "c2", 1.0);
        let mut s = Schedule::all_outsourced(&inst);
        s.customers.insert(
            "c1".into(),
            CustomerPlan {
                mode: Mode::Drone {
                    drone: "d1".into(),
                    depot: "p2".into(),
                },
                start_min: Some(480.0),
                window: None,
            },
        );
        s.routes.insert(
            "d1".into(),
            Route {
                depot: "p2".into(),
                sequence: vec!["c1".into()],
            },
        );
        let v = evaluate_schedule(&inst, &s).unwrap();
        let expected = 100.0 + 2.0 * 0.105 + 30.0 + 20.0 + 16.0;
        assert!((v.total_cost - expected).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn reward_requires_the_window_to_be_met() {
        let inst = small();
        let mut s = one_drone_schedule(&inst, &["c1"]);
        s.customers.get_mut("c1").unwrap().window = Some(1);
        assert_eq!(evaluate_schedule(&inst, &s).unwrap().reward, 10.0);
        // Window of c2 opens at 540; leaving at 480 arrives at 492.
        let mut s = one_drone_schedule(&inst, &["c2"]);
        s.customers.get_mut("c2").unwrap().window = Some(1);
        assert!(evaluate_schedule(&inst, &s).is_err());
    }

    #[test]
    fn overlapping_trips_are_rejected() {
        let inst = small();
        let mut s = one_drone_schedule(&inst, &["c1", "c2"]);
        s.customers.get_mut("c2").unwrap().start_min = Some(481.0);
        assert!(s
            .check(&inst)
            .unwrap_err()
            .0
            .contains("before the drone is free"));
    }

    #[test]
    fn dominance() {
        let a = ObjectiveVector {
            total_cost: 450.0,
            unsuccessful_pct: 5.0,
            reward: 0.0,
        };
        let b = ObjectiveVector {
            total_cost: 500.0,
            unsuccessful_pct: 5.0,
            reward: 0.0,
        };
        assert!(a.dominates(&b));
        assert!(!b.dominates(&a));
        assert!(!a.dominates(&a));
    }
}
