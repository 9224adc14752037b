use dronesched::pareto::{dominates, nondominated_indices, solve_selection};
use dronesched::synthetic::{random_instance, SyntheticSpec};
use dronesched::{
    evaluate_schedule, eval::monte_carlo_unsuccessful, FormulationConfig, Instance, ObjectiveKind, ObjectiveSelection,
    ObjectiveVector, Schedule, SolverParams,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn vectors() -> impl Strategy<Value = Vec<ObjectiveVector>> {
    // a coarse grid so that ties and duplicates are common
    prop::collection::vec((0u8..6, 0u8..6, 0u8..6), 0..25).prop_map(|v| {
        v.into_iter()
            .map(|(c, u, r)| ObjectiveVector { total_cost: c as f64 * 10.0, unsuccessful_pct: u as f64, reward: r as f64 })
            .collect()
    })
}

/// A solved schedule for a random tiny instance; the reward primary tends to
/// put customers on drones.
fn drawn(seed: u64) -> (Instance, Schedule) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let customers = 1 + (seed % 4) as usize;
    let inst = random_instance(&mut rng, &SyntheticSpec::tiny(customers, 2, 2, 2));
    let kind = ObjectiveKind::ALL[(seed % 3) as usize];
    let p = solve_selection(&inst, &ObjectiveSelection::unconstrained(kind), &SolverParams::default(), &FormulationConfig::default())
        .unwrap();
    let schedule = p.schedule.unwrap_or_else(|| Schedule::all_outsourced(&inst));
    (inst, schedule)
}

/// Same instance with customers and drones listed in another order.
fn shuffled(inst: &Instance, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ci: Vec<usize> = (0..inst.num_customers()).collect();
    let mut di: Vec<usize> = (0..inst.num_drones()).collect();
    ci.shuffle(&mut rng);
    di.shuffle(&mut rng);
    let mut out = inst.clone();
    out.customers = ci.iter().map(|&i| inst.customers[i].clone()).collect();
    out.costs.outsource_cost = ci.iter().map(|&i| inst.costs.outsource_cost[i]).collect();
    out.drones = di.iter().map(|&d| inst.drones[d].clone()).collect();
    for (s, t) in out.scenarios.takeoff.iter_mut().zip(&inst.scenarios.takeoff) {
        s.cannot_takeoff = di.iter().map(|&d| t.cannot_takeoff[d]).collect();
    }
    for (s, b) in out.scenarios.breakdown.iter_mut().zip(&inst.scenarios.breakdown) {
        s.breaks = ci.iter().map(|&i| di.iter().map(|&d| b.breaks[i][d]).collect()).collect();
    }
    out
}

proptest! {
    #[test]
    fn frontier_filter_invariants(v in vectors()) {
        let idx = nondominated_indices(&v);
        prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
        for &a in &idx {
            for &b in &idx {
                prop_assert!(!dominates(&v[a], &v[b]));
                prop_assert!(a == b || v[a] != v[b]);
            }
        }
        for (k, x) in v.iter().enumerate() {
            let covered = idx.iter().any(|&f| dominates(&v[f], x) || v[f] == *x);
            prop_assert!(covered, "vector {k} is neither kept nor dominated");
            if !idx.contains(&k) {
                prop_assert!(v.iter().any(|o| dominates(o, x)) || v[..k].contains(x));
            }
        }
        let front: Vec<ObjectiveVector> = idx.iter().map(|&k| v[k]).collect();
        prop_assert_eq!(nondominated_indices(&front), (0..front.len()).collect::<Vec<_>>());
    }

    #[test]
    fn dominance_is_a_strict_order(a in (0u8..4, 0u8..4, 0u8..4), b in (0u8..4, 0u8..4, 0u8..4), c in (0u8..4, 0u8..4, 0u8..4)) {
        let f = |(x, y, z): (u8, u8, u8)| ObjectiveVector { total_cost: x as f64, unsuccessful_pct: y as f64, reward: z as f64 };
        let (a, b, c) = (f(a), f(b), f(c));
        prop_assert!(!dominates(&a, &a));
        prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
        if dominates(&a, &b) && dominates(&b, &c) {
            prop_assert!(dominates(&a, &c));
        }
        prop_assert_eq!(dominates(&a, &b), a.dominates(&b));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn objectives_ignore_input_order(seed in 0u64..10_000, order in 0u64..1000) {
        let (inst, schedule) = drawn(seed);
        let a = evaluate_schedule(&inst, &schedule).unwrap();
        let b = evaluate_schedule(&shuffled(&inst, order), &schedule).unwrap();
        for kind in ObjectiveKind::ALL {
            prop_assert!((a.get(kind) - b.get(kind)).abs() <= 1e-9 * (1.0 + a.get(kind).abs()), "{:?} {:?}", a, b);
        }
    }

    #[test]
    fn sampling_agrees_with_the_expectation(seed in 0u64..10_000, mc_seed in any::<u64>()) {
        let (inst, schedule) = drawn(seed);
        let exact = evaluate_schedule(&inst, &schedule).unwrap().unsuccessful_pct;
        let mc = monte_carlo_unsuccessful(&inst, &schedule, 20_000, mc_seed).unwrap();
        prop_assert_eq!(mc.samples, 20_000);
        prop_assert!((0.0..=100.0).contains(&mc.estimate_pct));
        // 4.5 standard errors; the floor covers schedules whose loss is certain
        let tol = 4.5 * mc.standard_error + 1e-9;
        prop_assert!((mc.estimate_pct - exact).abs() <= tol, "exact {} mc {:?}", exact, mc);
        let again = monte_carlo_unsuccessful(&inst, &schedule, 20_000, mc_seed).unwrap();
        prop_assert_eq!(again, mc);
    }
}
