//! Instance directories, schedule files and frontier tables.
//!
//! An instance directory holds `customers.csv`, `windows.csv`, `depots.csv`,
//! `drones.csv`, `distances.csv`, `scenarios.json` and `costs.json`. Every
//! CSV file has a header row with exactly the documented columns.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{ObjectiveVector, Schedule};
use crate::formulation::ObjectiveKind;
use crate::instance::{
    validate_instance, BreakdownScenario, CostRewardParams, Customer, DistanceMatrix, Drone, Instance, ScenarioSet,
    TakeoffScenario, TimeWindow, DEFAULT_ROUTING_RATE,
};
use crate::pareto::ParetoPoint;

pub const CUSTOMERS_HEADER: &[&str] = &["id", "weight_kg", "serving_time_min", "origin_depot"];
pub const WINDOWS_HEADER: &[&str] = &["customer_id", "rank", "start_min", "end_min"];
pub const DEPOTS_HEADER: &[&str] = &["id"];
pub const DRONES_HEADER: &[&str] = &[
    "id",
    "capacity_kg",
    "trip_range_km",
    "daily_range_km",
    "shift_start_min",
    "shift_end_min",
    "speed_kmh",
    "initial_cost",
];
pub const DISTANCES_HEADER: &[&str] = &["from_id", "to_id", "km"];
pub const PARETO_HEADER: &[&str] =
    &["eps_u", "eps_r", "status", "cost", "unsuccessful_pct", "reward", "schedule_path", "eps_c"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file} line {line}: {message}")]
    Row { file: String, line: u64, message: String },
    #[error("{file}: {message}")]
    Format { file: String, message: String },
    #[error("invalid instance:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::File { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

/// Rows of a CSV file with their 1-based line numbers.
fn read_csv<T: DeserializeOwned>(path: &Path, header: &[&str]) -> Result<Vec<(u64, T)>, IoError> {
    let file = file_name(path);
    let text = read_text(path)?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let found = rdr.headers().map_err(|e| IoError::Format { file: file.clone(), message: e.to_string() })?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IoError::Row {
            file,
            line: 1,
            message: format!("expected header '{}', found '{}'", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            IoError::Row { file: file.clone(), line, message: e.to_string() }
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .deserialize(Some(&found))
            .map_err(|e| IoError::Row { file: file.clone(), line, message: e.to_string() })?;
        out.push((line, row));
    }
    Ok(out)
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    serde_json::from_str(&read_text(path)?)
        .map_err(|e| IoError::Format { file: file_name(path), message: e.to_string() })
}

#[derive(Serialize, Deserialize)]
struct CustomerRow {
    id: String,
    weight_kg: f64,
    serving_time_min: f64,
    origin_depot: String,
}

#[derive(Serialize, Deserialize)]
struct WindowRow {
    customer_id: String,
    rank: u32,
    start_min: f64,
    end_min: f64,
}

#[derive(Serialize, Deserialize)]
struct DepotRow {
    id: String,
}

#[derive(Serialize, Deserialize)]
struct DistanceRow {
    from_id: String,
    to_id: String,
    km: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenariosFile {
    takeoff: Vec<TakeoffEntry>,
    breakdown: Vec<BreakdownEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TakeoffEntry {
    p: f64,
    #[serde(default)]
    cannot_takeoff: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BreakdownEntry {
    p: f64,
    #[serde(default)]
    breaks: Vec<BreakEvent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BreakEvent {
    drone: String,
    customer: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PerId {
    Uniform(f64),
    Map(BTreeMap<String, f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostsFile {
    outsource_per_customer: PerId,
    transfer_per_depot: PerId,
    #[serde(default = "default_rate")]
    routing_rate_per_km: f64,
    window_rewards: Vec<f64>,
}

fn default_rate() -> f64 {
    DEFAULT_ROUTING_RATE
}

fn expand(file: &str, field: &str, value: &PerId, ids: &[&str]) -> Result<Vec<f64>, IoError> {
    match value {
        PerId::Uniform(v) => Ok(vec![*v; ids.len()]),
        PerId::Map(m) => {
            if let Some(extra) = m.keys().find(|k| !ids.contains(&k.as_str())) {
                return Err(IoError::Format { file: file.into(), message: format!("{field}: unknown id {extra}") });
            }
            ids.iter()
                .map(|id| {
                    m.get(*id).copied().ok_or_else(|| IoError::Format {
                        file: file.into(),
                        message: format!("{field}: no value for {id}"),
                    })
                })
                .collect()
        }
    }
}

/// Parses and validates an instance directory.
pub fn load_instance_dir(dir: &Path) -> Result<Instance, IoError> {
    let mut lines: HashMap<String, String> = HashMap::new();

    let depots: Vec<String> = read_csv::<DepotRow>(&dir.join("depots.csv"), DEPOTS_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            lines.entry(format!("depot {}", r.id)).or_insert(format!("depots.csv line {line}"));
            r.id
        })
        .collect();

    let mut customers: Vec<Customer> = read_csv::<CustomerRow>(&dir.join("customers.csv"), CUSTOMERS_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            lines.entry(format!("customer {}", r.id)).or_insert(format!("customers.csv line {line}"));
            Customer {
                id: r.id,
                weight_kg: r.weight_kg,
                serving_time_min: r.serving_time_min,
                origin_depot: r.origin_depot,
                windows: Vec::new(),
            }
        })
        .collect();

    for (line, w) in read_csv::<WindowRow>(&dir.join("windows.csv"), WINDOWS_HEADER)? {
        let Some(c) = customers.iter_mut().find(|c| c.id == w.customer_id) else {
            return Err(IoError::Row {
                file: "windows.csv".into(),
                line,
                message: format!("unknown customer {}", w.customer_id),
            });
        };
        c.windows.push(TimeWindow { rank: w.rank, start: w.start_min, end: w.end_min });
    }
    for c in &mut customers {
        c.windows.sort_by_key(|w| w.rank);
    }

    let drones: Vec<Drone> = read_csv::<Drone>(&dir.join("drones.csv"), DRONES_HEADER)?
        .into_iter()
        .map(|(line, d)| {
            lines.entry(format!("drone {}", d.id)).or_insert(format!("drones.csv line {line}"));
            d
        })
        .collect();

    let known: std::collections::HashSet<&str> =
        depots.iter().chain(customers.iter().map(|c| &c.id)).map(String::as_str).collect();
    let mut distances = DistanceMatrix::new();
    let mut given = std::collections::HashSet::new();
    let rows = read_csv::<DistanceRow>(&dir.join("distances.csv"), DISTANCES_HEADER)?;
    for (line, r) in &rows {
        for id in [&r.from_id, &r.to_id] {
            if !known.contains(id.as_str()) {
                return Err(IoError::Row { file: "distances.csv".into(), line: *line, message: format!("unknown location {id}") });
            }
        }
        if !given.insert((r.from_id.as_str(), r.to_id.as_str())) {
            return Err(IoError::Row {
                file: "distances.csv".into(),
                line: *line,
                message: format!("duplicate pair ({}, {})", r.from_id, r.to_id),
            });
        }
        distances.insert(r.from_id.clone(), r.to_id.clone(), r.km);
    }
    for (_, r) in &rows {
        if !given.contains(&(r.to_id.as_str(), r.from_id.as_str())) {
            distances.insert(r.to_id.clone(), r.from_id.clone(), r.km);
        }
    }

    let drone_pos = |file: &str, id: &str| {
        drones.iter().position(|d| d.id == id).ok_or_else(|| IoError::Format {
            file: file.into(),
            message: format!("unknown drone {id}"),
        })
    };
    let sc: ScenariosFile = read_json(&dir.join("scenarios.json"))?;
    let mut takeoff = Vec::new();
    for t in &sc.takeoff {
        let mut cannot = vec![false; drones.len()];
        for id in &t.cannot_takeoff {
            cannot[drone_pos("scenarios.json", id)?] = true;
        }
        takeoff.push(TakeoffScenario { probability: t.p, cannot_takeoff: cannot });
    }
    let mut breakdown = Vec::new();
    for b in &sc.breakdown {
        let mut breaks = vec![vec![false; drones.len()]; customers.len()];
        for e in &b.breaks {
            let d = drone_pos("scenarios.json", &e.drone)?;
            let i = customers.iter().position(|c| c.id == e.customer).ok_or_else(|| IoError::Format {
                file: "scenarios.json".into(),
                message: format!("unknown customer {}", e.customer),
            })?;
            breaks[i][d] = true;
        }
        breakdown.push(BreakdownScenario { probability: b.p, breaks });
    }

    let costs: CostsFile = read_json(&dir.join("costs.json"))?;
    let cust_ids: Vec<&str> = customers.iter().map(|c| c.id.as_str()).collect();
    let depot_ids: Vec<&str> = depots.iter().map(String::as_str).collect();
    let costs = CostRewardParams {
        outsource_cost: expand("costs.json", "outsource_per_customer", &costs.outsource_per_customer, &cust_ids)?,
        transfer_cost: expand("costs.json", "transfer_per_depot", &costs.transfer_per_depot, &depot_ids)?,
        routing_rate_per_km: costs.routing_rate_per_km,
        window_rewards: costs.window_rewards,
    };

    let instance =
        Instance { customers, depots, drones, distances, scenarios: ScenarioSet { takeoff, breakdown }, costs };
    let violations = validate_instance(&instance);
    if !violations.is_empty() {
        return Err(IoError::Invalid(
            violations
                .iter()
                .map(|v| match lines.get(&v.subject) {
                    Some(at) => format!("{at}: {v}"),
                    None => v.to_string(),
                })
                .collect(),
        ));
    }
    Ok(instance)
}

fn csv_text<T: Serialize>(header: &[&str], rows: impl IntoIterator<Item = T>) -> Result<String, IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let fail = |e: csv::Error| IoError::Format { file: "csv".into(), message: e.to_string() };
    w.write_record(header).map_err(fail)?;
    for r in rows {
        w.serialize(r).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Format { file: "csv".into(), message: e.to_string() })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Writes `instance` in the directory layout read by [`load_instance_dir`].
pub fn write_instance_dir(instance: &Instance, dir: &Path) -> Result<(), IoError> {
    let c = &instance.customers;
    write_text(
        &dir.join("customers.csv"),
        &csv_text(
            CUSTOMERS_HEADER,
            c.iter().map(|c| CustomerRow {
                id: c.id.clone(),
                weight_kg: c.weight_kg,
                serving_time_min: c.serving_time_min,
                origin_depot: c.origin_depot.clone(),
            }),
        )?,
    )?;
    write_text(
        &dir.join("windows.csv"),
        &csv_text(
            WINDOWS_HEADER,
            c.iter().flat_map(|c| {
                c.windows.iter().map(|w| WindowRow {
                    customer_id: c.id.clone(),
                    rank: w.rank,
                    start_min: w.start,
                    end_min: w.end,
                })
            }),
        )?,
    )?;
    write_text(
        &dir.join("depots.csv"),
        &csv_text(DEPOTS_HEADER, instance.depots.iter().map(|p| DepotRow { id: p.clone() }))?,
    )?;
    write_text(&dir.join("drones.csv"), &csv_text(DRONES_HEADER, instance.drones.iter())?)?;
    write_text(
        &dir.join("distances.csv"),
        &csv_text(
            DISTANCES_HEADER,
            instance
                .distances
                .iter()
                .map(|(f, t, km)| DistanceRow { from_id: f.into(), to_id: t.into(), km }),
        )?,
    )?;
    let dr = &instance.drones;
    let sc = ScenariosFile {
        takeoff: instance
            .scenarios
            .takeoff
            .iter()
            .map(|t| TakeoffEntry {
                p: t.probability,
                cannot_takeoff: dr.iter().zip(&t.cannot_takeoff).filter(|x| *x.1).map(|x| x.0.id.clone()).collect(),
            })
            .collect(),
        breakdown: instance
            .scenarios
            .breakdown
            .iter()
            .map(|b| BreakdownEntry {
                p: b.probability,
                breaks: c
                    .iter()
                    .zip(&b.breaks)
                    .flat_map(|(cust, row)| {
                        dr.iter()
                            .zip(row)
                            .filter(|x| *x.1)
                            .map(|x| BreakEvent { drone: x.0.id.clone(), customer: cust.id.clone() })
                    })
                    .collect(),
            })
            .collect(),
    };
    write_json(&dir.join("scenarios.json"), &sc)?;
    let k = &instance.costs;
    let costs = CostsFile {
        outsource_per_customer: PerId::Map(c.iter().map(|c| c.id.clone()).zip(k.outsource_cost.iter().copied()).collect()),
        transfer_per_depot: PerId::Map(instance.depots.iter().cloned().zip(k.transfer_cost.iter().copied()).collect()),
        routing_rate_per_km: k.routing_rate_per_km,
        window_rewards: k.window_rewards.clone(),
    };
    write_json(&dir.join("costs.json"), &costs)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| IoError::Format { file: file_name(path), message: e.to_string() })?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_schedule(path: &Path) -> Result<Schedule, IoError> {
    read_json(path)
}

pub fn write_schedule(path: &Path, schedule: &Schedule) -> Result<(), IoError> {
    write_json(path, schedule)
}

/// One row of `pareto.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoRow {
    pub eps_u: Option<f64>,
    pub eps_r: Option<f64>,
    pub status: String,
    pub cost: Option<f64>,
    pub unsuccessful_pct: Option<f64>,
    pub reward: Option<f64>,
    pub schedule_path: Option<String>,
    pub eps_c: Option<f64>,
}

impl ParetoRow {
    pub fn new(point: &ParetoPoint, schedule_path: Option<String>) -> Self {
        let o = point.objectives;
        ParetoRow {
            eps_u: point.selection.eps_u,
            eps_r: point.selection.eps_r,
            status: point.status.to_string(),
            cost: o.map(|o| o.total_cost),
            unsuccessful_pct: o.map(|o| o.unsuccessful_pct),
            reward: o.map(|o| o.reward),
            schedule_path,
            eps_c: point.selection.eps_c,
        }
    }

    pub fn objectives(&self) -> Option<ObjectiveVector> {
        Some(ObjectiveVector { total_cost: self.cost?, unsuccessful_pct: self.unsuccessful_pct?, reward: self.reward? })
    }
}

pub fn write_pareto_csv(path: &Path, rows: &[ParetoRow]) -> Result<(), IoError> {
    write_text(path, &csv_text(PARETO_HEADER, rows)?)
}

pub fn read_pareto_csv(path: &Path) -> Result<Vec<ParetoRow>, IoError> {
    Ok(read_csv(path, PARETO_HEADER)?.into_iter().map(|(_, r)| r).collect())
}

/// Two-column `x,y` files, one per constrained objective, with the primary
/// objective on the y axis and rows sorted by x. Returns the paths written.
pub fn write_plot_data(dir: &Path, primary: ObjectiveKind, front: &[ObjectiveVector]) -> Result<Vec<PathBuf>, IoError> {
    let column = |k: ObjectiveKind| match k {
        ObjectiveKind::Cost => "cost",
        ObjectiveKind::Unsuccessful => "unsuccessful_pct",
        ObjectiveKind::Reward => "reward",
    };
    let mut written = Vec::new();
    for x in ObjectiveKind::ALL.into_iter().filter(|&k| k != primary) {
        let mut pts: Vec<(f64, f64)> = front.iter().map(|v| (v.get(x), v.get(primary))).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let path = dir.join(format!("plot_{}_vs_{}.csv", column(primary), column(x)));
        write_text(&path, &csv_text(&[column(x), column(primary)], pts)?)?;
        written.push(path);
    }
    Ok(written)
}
