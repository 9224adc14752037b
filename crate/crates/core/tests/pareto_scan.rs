use dronesched::eval::brute_force_optimum;
use dronesched::instance::{CostRewardParams, Customer, DistanceMatrix, Drone, Instance, ScenarioSet, TimeWindow};
use dronesched::pareto::{dominates, frontier_indices, solve_selection};
use dronesched::synthetic::{random_instance, SyntheticSpec};
use dronesched::{
    branching_priorities, build_milp, filter_nondominated, payoff_table, scan, solve_mip, EpsRange, EpsilonGrid,
    FormulationConfig, ObjectiveKind, ObjectiveSelection, SolveStatus, SolverParams,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cfg() -> FormulationConfig {
    FormulationConfig::default()
}

fn two_customers() -> Instance {
    let mut distances = DistanceMatrix::new();
    distances.insert_symmetric("p1", "c1", 2.0);
    distances.insert_symmetric("p1", "c2", 3.0);
    distances.insert_symmetric("c1", "c2", 4.0);
    let cust = |id: &str, start: f64| Customer {
        id: id.into(),
        weight_kg: 1.0,
        serving_time_min: 2.0,
        origin_depot: "p1".into(),
        windows: vec![TimeWindow { rank: 1, start, end: start + 30.0 }],
    };
    Instance {
        customers: vec![cust("c1", 480.0), cust("c2", 520.0)],
        depots: vec!["p1".into()],
        drones: vec![Drone {
            id: "d1".into(),
            capacity_kg: 5.0,
            trip_range_km: 10.0,
            daily_range_km: 50.0,
            shift_start_min: 480.0,
            shift_end_min: 600.0,
            speed_kmh: 30.0,
            initial_cost: 1.0,
        }],
        distances,
        scenarios: ScenarioSet::all_or_nothing(2, 1, 0.1, 0.1),
        costs: CostRewardParams {
            outsource_cost: vec![16.0, 16.0],
            transfer_cost: vec![30.0],
            routing_rate_per_km: 0.105,
            window_rewards: vec![5.0],
        },
    }
}

fn u_sweep(values: (f64, f64), steps: usize) -> EpsilonGrid {
    EpsilonGrid {
        primary: ObjectiveKind::Cost,
        ranges: vec![EpsRange { kind: ObjectiveKind::Unsuccessful, min: values.0, max: values.1, steps }],
    }
}

#[test]
fn two_cell_sweep_matches_brute_force() {
    let inst = two_customers();
    let pts = scan(&inst, &u_sweep((0.0, 100.0), 2), &SolverParams::default(), &cfg()).unwrap();
    assert_eq!(pts.len(), 2);
    let tight = pts[0].objectives.unwrap();
    assert_eq!((tight.total_cost, tight.unsuccessful_pct, tight.reward), (32.0, 0.0, 0.0));
    let loose = pts[1].objectives.unwrap();
    let mut sel = ObjectiveSelection::unconstrained(ObjectiveKind::Cost);
    sel.eps_u = Some(100.0);
    let (best, _) = brute_force_optimum(&inst, &sel).unwrap().unwrap();
    assert!((loose.total_cost - best.total_cost).abs() < 1e-9);
    assert!(loose.total_cost < 32.0);
}

#[test]
fn single_cell_grid_is_a_plain_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for kind in ObjectiveKind::ALL {
        let inst = random_instance(&mut rng, &SyntheticSpec::tiny(3, 2, 2, 2));
        let grid = EpsilonGrid { primary: kind, ranges: vec![] };
        let pts = scan(&inst, &grid, &SolverParams::default(), &cfg()).unwrap();
        assert_eq!(pts.len(), 1);
        let model = build_milp(&inst, &ObjectiveSelection::unconstrained(kind), &cfg()).unwrap();
        let plain = solve_mip(&model, &SolverParams::default()).unwrap();
        assert_eq!(pts[0].status, plain.status);
        assert!((pts[0].objectives.unwrap().get(kind) - plain.objective.unwrap()).abs() < 1e-6);
    }
}

#[test]
fn warm_started_cells_match_cold_solves() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for k in 0..4 {
        let inst = random_instance(&mut rng, &SyntheticSpec::tiny(2 + k % 3, 2, 2, 2));
        let table = payoff_table(&inst, &SolverParams::default(), &cfg()).unwrap();
        let grid = EpsilonGrid::from_payoff(&table, ObjectiveKind::Cost, [1, 4, 3]);
        let pts = scan(&inst, &grid, &SolverParams::default(), &cfg()).unwrap();
        for p in &pts {
            let model = build_milp(&inst, &p.selection, &cfg()).unwrap();
            let cold = SolverParams { priorities: Some(branching_priorities(&inst)), ..Default::default() };
            let r = solve_mip(&model, &cold).unwrap();
            assert_eq!(r.status, p.status, "draw {k} {:?}", p.selection);
            if let Some(v) = r.objective {
                assert!((v - p.objectives.unwrap().total_cost).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn scans_are_monotone_and_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for k in 0..5 {
        let inst = random_instance(&mut rng, &SyntheticSpec::tiny(3, 2, 2, 2));
        let table = payoff_table(&inst, &SolverParams::default(), &cfg()).unwrap();
        let grid = EpsilonGrid::from_payoff(&table, ObjectiveKind::Cost, [1, 6, 1]);
        let pts = scan(&inst, &grid, &SolverParams::default(), &cfg()).unwrap();
        assert_eq!(pts.len(), 6);
        let eps: Vec<f64> = pts.iter().map(|p| p.selection.eps_u.unwrap()).collect();
        assert!(eps.windows(2).all(|w| w[0] <= w[1]));
        let costs: Vec<Option<f64>> = pts.iter().map(|p| p.objectives.map(|o| o.total_cost)).collect();
        let mut prev: Option<f64> = None;
        for c in &costs {
            match (prev, c) {
                (Some(_), None) => panic!("draw {k}: a looser bound became infeasible"),
                (Some(a), Some(b)) => assert!(*b <= a + 1e-9, "draw {k}: {costs:?}"),
                _ => {}
            }
            prev = *c;
        }
        assert!(prev.is_some(), "the loosest cell admits the cost optimum");
        let again = scan(&inst, &grid, &SolverParams::default(), &cfg()).unwrap();
        for (a, b) in pts.iter().zip(&again) {
            assert_eq!((a.status, a.objectives, &a.schedule), (b.status, b.objectives, &b.schedule));
        }
    }
}

#[test]
fn frontier_is_nondominated_and_contains_the_outsource_anchor() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for k in 0..3 {
        let mut spec = SyntheticSpec::tiny(3, 2, 2, 2);
        spec.outsource_cost = Some(16.0);
        let mut inst = random_instance(&mut rng, &spec);
        inst.scenarios = ScenarioSet::all_or_nothing(inst.num_customers(), inst.num_drones(), 0.1, 0.1);
        let table = payoff_table(&inst, &SolverParams::default(), &cfg()).unwrap();
        let grid = EpsilonGrid::from_payoff(&table, ObjectiveKind::Cost, [1, 4, 3]);
        let pts = scan(&inst, &grid, &SolverParams::default(), &cfg()).unwrap();
        let front = filter_nondominated(&pts);
        assert!(!front.is_empty());
        for a in &front {
            for b in &front {
                assert!(!dominates(&a.objectives.unwrap(), &b.objectives.unwrap()));
            }
        }
        for p in pts.iter().filter(|p| p.objectives.is_some()) {
            let v = p.objectives.unwrap();
            assert!(front.iter().any(|f| dominates(&f.objectives.unwrap(), &v) || f.objectives.unwrap() == v));
        }
        assert_eq!(filter_nondominated(&front), front);
        let idx = frontier_indices(&pts);
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        let anchor = 16.0 * inst.num_customers() as f64;
        assert!(
            front.iter().any(|f| {
                let v = f.objectives.unwrap();
                (v.total_cost, v.unsuccessful_pct, v.reward) == (anchor, 0.0, 0.0)
            }),
            "draw {k}: {:?}",
            front.iter().map(|f| f.objectives.unwrap()).collect::<Vec<_>>()
        );
    }
}

#[test]
fn infeasible_cells_are_kept() {
    let inst = two_customers();
    let grid = EpsilonGrid {
        primary: ObjectiveKind::Cost,
        ranges: vec![EpsRange { kind: ObjectiveKind::Reward, min: 0.0, max: 20.0, steps: 3 }],
    };
    let pts = scan(&inst, &grid, &SolverParams::default(), &cfg()).unwrap();
    assert_eq!(pts.len(), 3);
    assert_eq!(pts[2].status, SolveStatus::Infeasible);
    assert!(pts[2].objectives.is_none() && pts[2].schedule.is_none());
    assert!(pts[0].objectives.is_some());
}

#[test]
fn payoff_table_examples() {
    let mut far = two_customers();
    far.distances.insert_symmetric("p1", "c1", 8.0);
    far.distances.insert_symmetric("p1", "c2", 9.0);
    let t = payoff_table(&far, &SolverParams::default(), &cfg()).unwrap();
    assert_eq!(t.best(ObjectiveKind::Unsuccessful), 0.0);
    assert_eq!(t.best(ObjectiveKind::Cost), 32.0);
    assert_eq!(t.best(ObjectiveKind::Reward), 0.0);

    let mut one = two_customers();
    one.customers.truncate(1);
    one.costs.outsource_cost.truncate(1);
    one.scenarios = ScenarioSet::reliable(1, 1);
    one.drones[0].initial_cost = 0.0;
    let t = payoff_table(&one, &SolverParams::default(), &cfg()).unwrap();
    assert!((t.best(ObjectiveKind::Cost) - 4.0 * 0.105).abs() < 1e-12);
    assert_eq!(t.best(ObjectiveKind::Unsuccessful), 0.0);

    let mut empty = two_customers();
    empty.customers.clear();
    empty.costs.outsource_cost.clear();
    empty.scenarios = ScenarioSet::all_or_nothing(0, 1, 0.1, 0.1);
    let t = payoff_table(&empty, &SolverParams::default(), &cfg()).unwrap();
    for kind in ObjectiveKind::ALL {
        assert_eq!((t.best(kind), t.worst(kind)), (0.0, 0.0));
    }
}

#[test]
fn solve_selection_reports_analytic_objectives() {
    let inst = two_customers();
    let p = solve_selection(&inst, &ObjectiveSelection::unconstrained(ObjectiveKind::Reward), &SolverParams::default(), &cfg())
        .unwrap();
    assert_eq!(p.status, SolveStatus::Optimal);
    assert!((p.objectives.unwrap().reward - p.model_objective.unwrap()).abs() < 1e-9);
}
