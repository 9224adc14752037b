//! Exhaustive optimizer for tiny instances, independent of the MILP.
//!
//! Enumerates a home depot per drone, a mode per customer, and per drone
//! every serving order and window selection. For a fixed order and window
//! choice, departures are placed at the earliest feasible time: the later of
//! the shift start, the moment the previous trip ends, and the time needed to
//! arrive when the selected window opens. Departing earlier never hurts the
//! trips that follow, so if any placement of the departures is feasible the
//! earliest one is. Restricting departures to these candidate times therefore
//! loses no feasible discrete choice.

use thiserror::Error;

use super::{
    evaluate_schedule, expected_losses, CustomerPlan, Mode, ObjectiveVector, Route, Schedule,
};
use crate::formulation::{ObjectiveKind, ObjectiveSelection};
use crate::instance::{Instance, InstanceError};

/// Largest instance the oracle accepts: (customers, drones, depots, window ranks).
pub const ORACLE_CAP: (usize, usize, usize, usize) = (4, 2, 2, 2);

/// Slack applied to bounds and ties.
const TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance too large for enumeration: {0}")]
    TooLarge(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// One way to run a drone's route.
#[derive(Clone, Debug)]
struct RouteOption {
    losses: f64,
    reward: f64,
    order: Vec<usize>,
    windows: Vec<Option<u32>>,
    starts: Vec<f64>,
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for k in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(k);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Departure times for `order` with `windows`, or `None` if infeasible.
fn earliest_starts(
    inst: &Instance,
    d: usize,
    p: usize,
    order: &[usize],
    windows: &[Option<u32>],
) -> Option<Vec<f64>> {
    let drone = &inst.drones[d];
    let mut clock = drone.shift_start_min.max(0.0);
    let mut starts = Vec::with_capacity(order.len());
    for (&i, w) in order.iter().zip(windows) {
        let flight = inst.flight_minutes(i, d, p);
        let trip = inst.trip_minutes(i, d, p);
        let mut start = clock;
        if let Some(rank) = w {
            let win = inst.customers[i]
                .window(*rank)
                .expect("enumerated ranks exist");
            start = start.max(win.start - flight);
            if start + trip > win.end {
                return None;
            }
        }
        if start + trip > drone.shift_end_min {
            return None;
        }
        starts.push(start);
        clock = start + trip;
    }
    Some(starts)
}

/// All non-dominated (fewest expected losses, most reward) ways to fly
/// `customers` on drone `d` from depot `p`.
fn route_options(inst: &Instance, d: usize, p: usize, customers: &[usize]) -> Vec<RouteOption> {
    let mut all: Vec<RouteOption> = Vec::new();
    for order in permutations(customers) {
        let losses = expected_losses(inst, d, &order);
        // Mixed-radix counter over "no window" plus each available window.
        let choices: Vec<Vec<Option<u32>>> = order
            .iter()
            .map(|&i| {
                std::iter::once(None)
                    .chain(inst.customers[i].windows.iter().map(|w| Some(w.rank)))
                    .collect()
            })
            .collect();
        let mut digit = vec![0usize; order.len()];
        loop {
            let windows: Vec<Option<u32>> =
                digit.iter().zip(&choices).map(|(&k, ch)| ch[k]).collect();
            if let Some(starts) = earliest_starts(inst, d, p, &order, &windows) {
                let reward = windows
                    .iter()
                    .flatten()
                    .map(|&r| inst.costs.reward(r))
                    .sum();
                all.push(RouteOption {
                    losses,
                    reward,
                    order: order.clone(),
                    windows,
                    starts,
                });
            }
            let mut k = 0;
            while k < digit.len() {
                digit[k] += 1;
                if digit[k] < choices[k].len() {
                    break;
                }
                digit[k] = 0;
                k += 1;
            }
            if k == digit.len() {
                break;
            }
        }
    }
    let mut kept: Vec<RouteOption> = Vec::new();
    for (k, o) in all.iter().enumerate() {
        let dominated = all.iter().enumerate().any(|(j, q)| {
            let no_worse = q.losses <= o.losses && q.reward >= o.reward;
            let better = q.losses < o.losses || q.reward > o.reward;
            (no_worse && better) || (j < k && q.losses == o.losses && q.reward == o.reward)
        });
        if !dominated {
            kept.push(o.clone());
        }
    }
    kept
}

/// Lexicographic "strictly better" with tolerance.
fn lex_better(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if *x < *y - TOL {
            return true;
        }
        if *x > *y + TOL {
            return false;
        }
    }
    false
}

fn sort_key(v: &ObjectiveVector, primary: ObjectiveKind) -> [f64; 4] {
    let p = match primary {
        ObjectiveKind::Reward => -v.reward,
        k => v.get(k),
    };
    [p, v.total_cost, v.unsuccessful_pct, -v.reward]
}

fn within_bounds(v: &ObjectiveVector, sel: &ObjectiveSelection) -> bool {
    sel.active_bounds()
        .iter()
        .all(|&(kind, rel, eps)| match rel {
            crate::milp::Relation::Le => v.get(kind) <= eps + TOL,
            crate::milp::Relation::Ge => v.get(kind) >= eps - TOL,
            crate::milp::Relation::Eq => (v.get(kind) - eps).abs() <= TOL,
        })
}

/// Optimum of `selection` by enumeration, with ties broken by (cost,
/// unsuccessful, -reward). `Ok(None)` when no schedule meets the bounds.
pub fn brute_force_optimum(
    instance: &Instance,
    selection: &ObjectiveSelection,
) -> Result<Option<(ObjectiveVector, Schedule)>, OracleError> {
    instance.validate()?;
    let (c, nd, np, nf) = (
        instance.num_customers(),
        instance.num_drones(),
        instance.num_depots(),
        instance.num_window_ranks(),
    );
    let cap = ORACLE_CAP;
    if c > cap.0 || nd > cap.1 || np > cap.2 || nf > cap.3 {
        return Err(OracleError::TooLarge(format!(
            "{c} customers, {nd} drones, {np} depots, {nf} window ranks (cap {}, {}, {}, {})",
            cap.0, cap.1, cap.2, cap.3
        )));
    }

    let mut best: Option<(
        [f64; 4],
        ObjectiveVector,
        Vec<usize>,
        Vec<Option<usize>>,
        Vec<RouteOption>,
    )> = None;
    let homes_total = np.pow(nd as u32);
    let modes_total = (nd + 1).pow(c as u32);
    for h in 0..homes_total {
        let homes: Vec<usize> = (0..nd).map(|d| h / np.pow(d as u32) % np).collect();
        'modes: for mcode in 0..modes_total {
            // 0 = carrier, k = drone k - 1.
            let modes: Vec<Option<usize>> = (0..c)
                .map(|i| mcode / (nd + 1).pow(i as u32) % (nd + 1))
                .map(|k| k.checked_sub(1))
                .collect();
            let mut per_drone: Vec<Vec<usize>> = vec![Vec::new(); nd];
            for (i, m) in modes.iter().enumerate() {
                if let Some(d) = m {
                    per_drone[*d].push(i);
                }
            }
            // An idle drone's depot is irrelevant; visit it once.
            if (0..nd).any(|d| per_drone[d].is_empty() && homes[d] != 0) {
                continue;
            }
            let mut cost = 0.0;
            let mut touched = vec![false; np];
            for (i, m) in modes.iter().enumerate() {
                match m {
                    None => cost += instance.costs.outsource_cost[i],
                    Some(d) => {
                        let p = homes[*d];
                        if !instance.trip_allowed(i, *d, p) {
                            continue 'modes;
                        }
                        cost += instance.round_trip_cost(i, p);
                        let o = instance.origin(i);
                        if o != p {
                            touched[o] = true;
                            touched[p] = true;
                        }
                    }
                }
            }
            for (p, t) in touched.iter().enumerate() {
                if *t {
                    cost += instance.costs.transfer_cost[p];
                }
            }
            let mut options = Vec::with_capacity(nd);
            for d in 0..nd {
                if per_drone[d].is_empty() {
                    options.push(vec![RouteOption {
                        losses: 0.0,
                        reward: 0.0,
                        order: vec![],
                        windows: vec![],
                        starts: vec![],
                    }]);
                    continue;
                }
                cost += instance.drones[d].initial_cost;
                let daily: f64 = per_drone[d]
                    .iter()
                    .map(|&i| instance.round_trip_km(i, homes[d]))
                    .sum();
                if daily > instance.drones[d].daily_range_km {
                    continue 'modes;
                }
                let opts = route_options(instance, d, homes[d], &per_drone[d]);
                if opts.is_empty() {
                    continue 'modes;
                }
                options.push(opts);
            }
            let total: usize = options.iter().map(Vec::len).product();
            for combo in 0..total {
                let mut rest = combo;
                let picks: Vec<usize> = options
                    .iter()
                    .map(|o| {
                        let k = rest % o.len();
                        rest /= o.len();
                        k
                    })
                    .collect();
                let losses: f64 = picks.iter().zip(&options).map(|(&k, o)| o[k].losses).sum();
                let reward: f64 = picks.iter().zip(&options).map(|(&k, o)| o[k].reward).sum();
                let v = ObjectiveVector {
                    total_cost: cost,
                    unsuccessful_pct: if c == 0 {
                        0.0
                    } else {
                        100.0 / c as f64 * losses
                    },
                    reward,
                };
                if !within_bounds(&v, selection) {
                    continue;
                }
                let key = sort_key(&v, selection.primary);
                if best.as_ref().is_none_or(|b| lex_better(&key, &b.0)) {
                    let chosen = picks
                        .iter()
                        .zip(&options)
                        .map(|(&k, o)| o[k].clone())
                        .collect();
                    best = Some((key, v, homes.clone(), modes.clone(), chosen));
                }
            }
        }
    }

    let Some((_, _, homes, modes, chosen)) = best else {
        return Ok(None);
    };
    let mut schedule = Schedule::default();
    for (i, m) in modes.iter().enumerate() {
        if m.is_none() {
            schedule.customers.insert(
                instance.customers[i].id.clone(),
                CustomerPlan {
                    mode: Mode::Outsourced,
                    start_min: None,
                    window: None,
                },
            );
        }
    }
    for (d, opt) in chosen.iter().enumerate() {
        if opt.order.is_empty() {
            continue;
        }
        let drone = instance.drones[d].id.clone();
        let depot = instance.depots[homes[d]].clone();
        for ((&i, &start), &window) in opt.order.iter().zip(&opt.starts).zip(&opt.windows) {
            schedule.customers.insert(
                instance.customers[i].id.clone(),
                CustomerPlan {
                    mode: Mode::Drone {
                        drone: drone.clone(),
                        depot: depot.clone(),
                    },
                    start_min: Some(start),
                    window,
                },
            );
        }
        schedule.routes.insert(
            drone,
            Route {
                depot,
                sequence: opt
                    .order
                    .iter()
                    .map(|&i| instance.customers[i].id.clone())
                    .collect(),
            },
        );
    }
    let v = evaluate_schedule(instance, &schedule).expect("enumerated schedules are consistent");
    Ok(Some((v, schedule)))
}
