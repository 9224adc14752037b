//! Random instance and model generators for tests and benchmarks.

use rand::Rng;

use crate::instance::{
    BreakdownScenario, CostRewardParams, Customer, DistanceMatrix, Drone, Instance, ScenarioSet,
    TakeoffScenario, TimeWindow, DEFAULT_ROUTING_RATE,
};
use crate::milp::{LinExpr, MilpModel, Relation, Sense};

/// Shape and parameter ranges of a random instance.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub customers: usize,
    pub drones: usize,
    pub depots: usize,
    /// Window ranks per customer.
    pub ranks: usize,
    pub takeoff_scenarios: usize,
    pub breakdown_scenarios: usize,
    /// Side of the square service area, km.
    pub area_km: f64,
    /// Shift length range, minutes; shifts start at 08:00.
    pub shift_min: (f64, f64),
    pub initial_costs: Vec<f64>,
    pub outsource_cost: Option<f64>,
}

impl SyntheticSpec {
    /// Small instances within the enumeration cap of the oracle.
    pub fn tiny(customers: usize, drones: usize, depots: usize, ranks: usize) -> Self {
        SyntheticSpec {
            customers,
            drones,
            depots,
            ranks,
            takeoff_scenarios: 2,
            breakdown_scenarios: 2,
            area_km: 8.0,
            shift_min: (40.0, 150.0),
            initial_costs: vec![0.0, 5.0, 20.0],
            outsource_cost: None,
        }
    }

    /// Two-depot, two-drone fleet with full-day shifts.
    pub fn fleet(customers: usize) -> Self {
        SyntheticSpec {
            customers,
            drones: 2,
            depots: 2,
            ranks: 2,
            takeoff_scenarios: 2,
            breakdown_scenarios: 2,
            area_km: 8.0,
            shift_min: (480.0, 480.0),
            initial_costs: vec![100.0],
            outsource_cost: Some(16.0),
        }
    }
}

fn round_to(x: f64, unit: f64) -> f64 {
    (x / unit).round() * unit
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, spec: &SyntheticSpec) -> Instance {
    let shift_start = 480.0;
    let depots: Vec<String> = (1..=spec.depots).map(|k| format!("p{k}")).collect();
    let mut points = Vec::new();
    for p in &depots {
        points.push((
            p.clone(),
            rng.random_range(0.0..spec.area_km),
            rng.random_range(0.0..spec.area_km),
        ));
    }
    let mut drones = Vec::new();
    for k in 1..=spec.drones {
        let shift = round_to(rng.random_range(spec.shift_min.0..=spec.shift_min.1), 1.0);
        drones.push(Drone {
            id: format!("d{k}"),
            capacity_kg: 5.0,
            trip_range_km: 10.0,
            daily_range_km: if spec.customers <= 4 {
                rng.random_range(12.0..40.0f64).round()
            } else {
                150.0
            },
            shift_start_min: shift_start,
            shift_end_min: shift_start + shift,
            speed_kmh: 30.0,
            initial_cost: spec.initial_costs[rng.random_range(0..spec.initial_costs.len())],
        });
    }
    let day_end = drones
        .iter()
        .map(|d| d.shift_end_min)
        .fold(shift_start + 60.0, f64::max);
    let mut customers = Vec::new();
    for k in 1..=spec.customers {
        let id = format!("c{k}");
        points.push((
            id.clone(),
            rng.random_range(0.0..spec.area_km),
            rng.random_range(0.0..spec.area_km),
        ));
        let mut windows = Vec::new();
        for rank in 1..=spec.ranks as u32 {
            let len = round_to(rng.random_range(20.0..90.0), 1.0);
            let start = round_to(rng.random_range(shift_start - 30.0..day_end - 10.0), 1.0);
            windows.push(TimeWindow {
                rank,
                start,
                end: start + len,
            });
        }
        customers.push(Customer {
            id,
            weight_kg: round_to(rng.random_range(0.5..6.0), 0.1),
            serving_time_min: round_to(rng.random_range(1.0..10.0), 1.0),
            origin_depot: depots[rng.random_range(0..depots.len())].clone(),
            windows,
        });
    }
    let mut distances = DistanceMatrix::new();
    for (a, ax, ay) in &points {
        for (b, bx, by) in &points {
            if a != b {
                distances.insert(
                    a.clone(),
                    b.clone(),
                    round_to(((ax - bx).powi(2) + (ay - by).powi(2)).sqrt(), 0.001),
                );
            }
        }
    }
    let c = spec.customers;
    let d = spec.drones;
    let mut takeoff = Vec::new();
    let grounded_p = round_to(rng.random_range(0.05..0.3), 0.01);
    for k in 0..spec.takeoff_scenarios {
        let cannot_takeoff = if k == 0 {
            vec![false; d]
        } else {
            (0..d).map(|_| rng.random_bool(0.6)).collect()
        };
        takeoff.push(TakeoffScenario {
            probability: 0.0,
            cannot_takeoff,
        });
    }
    split_probability(
        takeoff.iter_mut().map(|s| &mut s.probability).collect(),
        grounded_p,
    );
    let mut breakdown = Vec::new();
    let broken_p = round_to(rng.random_range(0.05..0.3), 0.01);
    for k in 0..spec.breakdown_scenarios {
        let breaks = if k == 0 {
            vec![vec![false; d]; c]
        } else {
            (0..c)
                .map(|_| (0..d).map(|_| rng.random_bool(0.4)).collect())
                .collect()
        };
        breakdown.push(BreakdownScenario {
            probability: 0.0,
            breaks,
        });
    }
    split_probability(
        breakdown.iter_mut().map(|s| &mut s.probability).collect(),
        broken_p,
    );

    let outsource = |rng: &mut R| {
        spec.outsource_cost
            .unwrap_or_else(|| round_to(rng.random_range(4.0..20.0), 0.5))
    };
    let outsource_cost = (0..c).map(|_| outsource(rng)).collect();
    let transfer_cost = (0..spec.depots)
        .map(|_| round_to(rng.random_range(0.0..30.0), 1.0))
        .collect();
    let mut window_rewards: Vec<f64> = (0..spec.ranks)
        .map(|k| (spec.ranks - k) as f64 * 5.0)
        .collect();
    if let Some(r) = window_rewards.first_mut() {
        *r += round_to(rng.random_range(0.0..3.0), 0.5);
    }
    Instance {
        customers,
        depots,
        drones,
        distances,
        scenarios: ScenarioSet { takeoff, breakdown },
        costs: CostRewardParams {
            outsource_cost,
            transfer_cost,
            routing_rate_per_km: DEFAULT_ROUTING_RATE,
            window_rewards,
        },
    }
}

/// First scenario gets `1 - rest`, the others share `rest` equally.
fn split_probability(mut slots: Vec<&mut f64>, rest: f64) {
    match slots.len() {
        0 => {}
        1 => *slots[0] = 1.0,
        n => {
            let share = rest / (n - 1) as f64;
            for s in slots.iter_mut().skip(1) {
                **s = share;
            }
            *slots[0] = 1.0 - share * (n - 1) as f64;
        }
    }
}

/// Random pure-binary program with `n` variables and `m` rows, mixing
/// knapsack, covering and equality rows. Infeasible draws are possible.
pub fn random_binary_milp<R: Rng + ?Sized>(rng: &mut R, n: usize, m: usize) -> MilpModel {
    let mut model = MilpModel::new();
    let vars: Vec<_> = (0..n).map(|k| model.add_binary(format!("x{k}"))).collect();
    for r in 0..m {
        let mut e = LinExpr::new();
        for &v in &vars {
            if rng.random_bool(0.5) {
                e.add(v, rng.random_range(-5..=9) as f64);
            }
        }
        if e.is_empty() {
            e.add(vars[rng.random_range(0..n)], 1.0);
        }
        let total: f64 = e.terms().iter().map(|t| t.1.max(0.0)).sum();
        let (rel, rhs) = match rng.random_range(0..10) {
            0 => (
                Relation::Eq,
                rng.random_range(0..=(total as i64).max(1)) as f64,
            ),
            1..=3 => (Relation::Ge, (rng.random_range(0.0..0.4) * total).floor()),
            _ => (Relation::Le, (rng.random_range(0.3..0.8) * total).floor()),
        };
        model.add_constraint(format!("r{r}"), e, rel, rhs);
    }
    let mut obj = LinExpr::new();
    for &v in &vars {
        obj.add(
            v,
            rng.random_range(-10..=10) as f64 + rng.random_range(0..4) as f64 * 0.25,
        );
    }
    let sense = if rng.random_bool(0.5) {
        Sense::Maximize
    } else {
        Sense::Minimize
    };
    model.set_objective(sense, obj);
    model
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::validate_instance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn generated_instances_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for k in 0..50 {
            let spec = if k % 2 == 0 {
                SyntheticSpec::tiny(1 + k % 4, 1 + k % 2, 1 + k % 2, 1 + k % 2)
            } else {
                SyntheticSpec::fleet(10)
            };
            let inst = random_instance(&mut rng, &spec);
            assert_eq!(validate_instance(&inst), vec![], "draw {k}");
        }
    }
}
