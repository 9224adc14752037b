use std::fs;
use std::path::{Path, PathBuf};

use dronesched::io::{
    load_instance_dir, read_pareto_csv, read_schedule, write_instance_dir, write_pareto_csv, write_schedule, IoError,
    ParetoRow,
};
use dronesched::synthetic::{random_instance, SyntheticSpec};
use dronesched::{evaluate_schedule, Schedule};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sample(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        fs::copy(e.path(), to.join(e.file_name())).unwrap();
    }
}

fn edit(dir: &Path, file: &str, f: impl FnOnce(String) -> String) {
    let p = dir.join(file);
    let text = fs::read_to_string(&p).unwrap();
    fs::write(&p, f(text)).unwrap();
}

#[test]
fn paper_fleet_parses() {
    let inst = load_instance_dir(&sample("paper-fleet")).unwrap();
    assert_eq!(inst.num_customers(), 8);
    assert_eq!(inst.depots, vec!["p1", "p2"]);
    assert_eq!(inst.num_drones(), 2);
    for d in &inst.drones {
        assert_eq!((d.capacity_kg, d.trip_range_km, d.daily_range_km, d.speed_kmh), (5.0, 10.0, 150.0, 30.0));
        assert_eq!(d.initial_cost, 100.0);
        assert_eq!(d.shift_end_min - d.shift_start_min, 480.0);
    }
    assert_eq!(inst.costs.transfer_cost, vec![30.0, 30.0]);
    assert!(inst.costs.outsource_cost.iter().all(|&c| c == 16.0));
    let p: Vec<f64> = inst.scenarios.takeoff.iter().map(|s| s.probability).collect();
    assert_eq!(p, vec![0.9, 0.1]);
    let p: Vec<f64> = inst.scenarios.breakdown.iter().map(|s| s.probability).collect();
    assert_eq!(p, vec![0.9, 0.1]);
    let v = evaluate_schedule(&inst, &Schedule::all_outsourced(&inst)).unwrap();
    assert_eq!((v.total_cost, v.unsuccessful_pct, v.reward), (128.0, 0.0, 0.0));
}

#[test]
fn tiny_oracle_is_within_the_enumeration_cap() {
    let inst = load_instance_dir(&sample("tiny-oracle")).unwrap();
    assert!(inst.num_customers() <= 4);
    assert!(inst.num_drones() <= 2 && inst.num_depots() <= 2 && inst.num_window_ranks() <= 2);
}

#[test]
fn written_instances_load_back_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..10 {
        let spec = if k % 2 == 0 { SyntheticSpec::tiny(1 + k % 4, 2, 2, 2) } else { SyntheticSpec::fleet(6) };
        let inst = random_instance(&mut rng, &spec);
        let dir = tempfile::tempdir().unwrap();
        write_instance_dir(&inst, dir.path()).unwrap();
        assert_eq!(load_instance_dir(dir.path()).unwrap(), inst, "draw {k}");
    }
    let inst = load_instance_dir(&sample("tiny-oracle")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_instance_dir(&inst, dir.path()).unwrap();
    assert_eq!(load_instance_dir(dir.path()).unwrap(), inst);
}

#[test]
fn negative_weight_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&sample("paper-fleet"), dir.path());
    edit(dir.path(), "customers.csv", |t| t.replace("c3,1.2,", "c3,-1,"));
    let err = load_instance_dir(dir.path()).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, IoError::Invalid(_)));
    assert!(msg.contains("customers.csv line 4"), "{msg}");
    assert!(msg.contains("customer c3"), "{msg}");
    assert!(msg.contains("weight -1"), "{msg}");
}

#[test]
fn missing_distance_pair_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&sample("paper-fleet"), dir.path());
    edit(dir.path(), "distances.csv", |t| t.lines().filter(|l| !l.starts_with("c3,p2,")).collect::<Vec<_>>().join("\n"));
    let msg = load_instance_dir(dir.path()).unwrap_err().to_string();
    assert!(msg.contains("incomplete distance matrix"), "{msg}");
    assert!(msg.contains("(p2, c3)"), "{msg}");
}

#[test]
fn schema_and_reference_errors_carry_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    copy_dir(&sample("paper-fleet"), dir.path());
    edit(dir.path(), "drones.csv", |t| t.replacen("speed_kmh", "speed", 1));
    let msg = load_instance_dir(dir.path()).unwrap_err().to_string();
    assert!(msg.starts_with("drones.csv line 1: expected header"), "{msg}");

    copy_dir(&sample("paper-fleet"), dir.path());
    edit(dir.path(), "windows.csv", |t| t + "c99,1,500,520\n");
    let msg = load_instance_dir(dir.path()).unwrap_err().to_string();
    assert_eq!(msg, "windows.csv line 18: unknown customer c99");

    copy_dir(&sample("paper-fleet"), dir.path());
    edit(dir.path(), "customers.csv", |t| t.replace("c2,4.5,", "c2,heavy,"));
    let msg = load_instance_dir(dir.path()).unwrap_err().to_string();
    assert!(msg.starts_with("customers.csv line 3:"), "{msg}");

    copy_dir(&sample("paper-fleet"), dir.path());
    fs::remove_file(dir.path().join("costs.json")).unwrap();
    let err = load_instance_dir(dir.path()).unwrap_err();
    assert!(matches!(err, IoError::File { .. }));
    assert!(err.to_string().contains("costs.json"));

    copy_dir(&sample("paper-fleet"), dir.path());
    edit(dir.path(), "scenarios.json", |t| t.replacen("\"d1\"", "\"d9\"", 1));
    let msg = load_instance_dir(dir.path()).unwrap_err().to_string();
    assert_eq!(msg, "scenarios.json: unknown drone d9");
}

#[test]
fn one_directional_distances_are_mirrored() {
    let inst = load_instance_dir(&sample("paper-fleet")).unwrap();
    assert_eq!(inst.distances.get("c1", "p1"), inst.distances.get("p1", "c1"));
    assert!(inst.distances.get("p1", "c1").unwrap() > 0.0);
}

#[test]
fn schedules_and_tables_round_trip() {
    let inst = load_instance_dir(&sample("tiny-oracle")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let s = Schedule::all_outsourced(&inst);
    let path = dir.path().join("nested/schedule.json");
    write_schedule(&path, &s).unwrap();
    assert_eq!(read_schedule(&path).unwrap(), s);

    let rows = vec![
        ParetoRow {
            eps_u: Some(0.1 + 0.2),
            eps_r: None,
            status: "OPTIMAL".into(),
            cost: Some(37.5),
            unsuccessful_pct: Some(1.0 / 3.0),
            reward: Some(0.0),
            schedule_path: Some("schedules/cell_0000.json".into()),
            eps_c: None,
        },
        ParetoRow {
            eps_u: Some(2.0),
            eps_r: Some(9.0),
            status: "INFEASIBLE".into(),
            cost: None,
            unsuccessful_pct: None,
            reward: None,
            schedule_path: None,
            eps_c: Some(1e-300),
        },
    ];
    let p = dir.path().join("pareto.csv");
    write_pareto_csv(&p, &rows).unwrap();
    let text = fs::read_to_string(&p).unwrap();
    assert!(text.starts_with("eps_u,eps_r,status,cost,unsuccessful_pct,reward,schedule_path,eps_c\n"));
    assert_eq!(read_pareto_csv(&p).unwrap(), rows);
}
