//! Command-line front end: `solve`, `scan`, `evaluate`, `simulate`,
//! `export-lp` and `payoff`.
//!
//! Exit codes: 0 success, 1 when the primary solve returns no schedule,
//! 2 on bad arguments or input files. Log verbosity comes from
//! `DRONESCHED_LOG` (an `env_logger` filter, default `warn`).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use dronesched::eval::monte_carlo_unsuccessful;
use dronesched::io::{
    load_instance_dir, read_schedule, write_json, write_pareto_csv, write_plot_data, write_schedule, ParetoRow,
};
use dronesched::milp::{export_lp_text, BranchingRule};
use dronesched::pareto::{frontier_indices, solve_selection, DEFAULT_STEPS};
use dronesched::{
    build_milp, evaluate_schedule, payoff_table, scan, EpsRange, EpsilonGrid, FormulationConfig,
    Instance, ObjectiveKind, ObjectiveSelection, ObjectiveVector, SolverParams,
};

pub const LOG_ENV: &str = "DRONESCHED_LOG";

#[derive(Parser, Debug)]
#[command(name = "dronesched", version, about = "Multi-objective drone delivery scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one epsilon-constraint problem and write schedule.json.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bounds: Bounds,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sweep an epsilon grid and write pareto.csv, pareto_front.csv and plot data.
    Scan {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print the objective vector of a schedule.
    Evaluate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
    },
    /// Monte Carlo estimate of the unsuccessful-delivery percentage.
    Simulate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the model of one epsilon-constraint problem in LP format.
    ExportLp {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "cost")]
        primary: ObjectiveKind,
        #[command(flatten)]
        bounds: Bounds,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the payoff table of the three single-objective optima.
    Payoff {
        #[command(flatten)]
        common: Common,
        /// Also write the table as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "cost")]
    primary: ObjectiveKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    time_limit_s: Option<f64>,
    #[arg(long)]
    node_limit: Option<u64>,
    #[arg(long, value_enum, default_value_t = Branching::MostFractional)]
    branching: Branching,
    #[arg(long, default_value_t = 1e-6)]
    mip_gap: f64,
}

#[derive(Args, Debug, Clone, Default)]
struct Bounds {
    /// Upper bound on total cost.
    #[arg(long)]
    eps_c: Option<f64>,
    /// Upper bound on the unsuccessful-delivery percentage.
    #[arg(long)]
    eps_u: Option<f64>,
    /// Lower bound on the on-time reward.
    #[arg(long)]
    eps_r: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct GridArgs {
    #[arg(long)]
    eps_c_steps: Option<usize>,
    #[arg(long)]
    eps_u_steps: Option<usize>,
    #[arg(long)]
    eps_r_steps: Option<usize>,
    #[arg(long)]
    eps_c_min: Option<f64>,
    #[arg(long)]
    eps_c_max: Option<f64>,
    #[arg(long)]
    eps_u_min: Option<f64>,
    #[arg(long)]
    eps_u_max: Option<f64>,
    #[arg(long)]
    eps_r_min: Option<f64>,
    #[arg(long)]
    eps_r_max: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Branching {
    MostFractional,
    PseudoCost,
}

/// Everything one command needs, resolved from the arguments.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub instance_dir: PathBuf,
    pub selection: ObjectiveSelection,
    /// Per objective in cost, unsuccessful, reward order: steps and
    /// optional range overrides.
    pub grid_steps: [usize; 3],
    pub grid_min: [Option<f64>; 3],
    pub grid_max: [Option<f64>; 3],
    pub params: SolverParams,
    pub out: PathBuf,
    pub samples: u64,
    pub seed: u64,
}

impl RunConfig {
    fn new(instance_dir: PathBuf, primary: ObjectiveKind, out: PathBuf) -> Self {
        RunConfig {
            instance_dir,
            selection: ObjectiveSelection::unconstrained(primary),
            grid_steps: [DEFAULT_STEPS; 3],
            grid_min: [None; 3],
            grid_max: [None; 3],
            params: SolverParams::default(),
            out,
            samples: 0,
            seed: 0,
        }
    }

    fn with_common(mut self, c: &Common) -> Self {
        self.params = SolverParams {
            node_limit: c.node_limit,
            time_limit_s: c.time_limit_s,
            branching: match c.branching {
                Branching::MostFractional => BranchingRule::MostFractional,
                Branching::PseudoCost => BranchingRule::PseudoCost,
            },
            mip_gap: c.mip_gap,
            seed: c.seed,
            ..SolverParams::default()
        };
        self.seed = c.seed;
        self
    }

    fn with_bounds(mut self, b: &Bounds) -> Self {
        self.selection.eps_c = b.eps_c;
        self.selection.eps_u = b.eps_u;
        self.selection.eps_r = b.eps_r;
        self
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(self.instance_dir.is_dir(), "instance directory {} does not exist", self.instance_dir.display());
        self.params.validate()?;
        for v in [self.selection.eps_c, self.selection.eps_u, self.selection.eps_r].into_iter().flatten() {
            anyhow::ensure!(v.is_finite(), "epsilon bounds must be finite");
        }
        Ok(())
    }
}

/// Failure classes mapped onto exit codes.
enum Failure {
    NoSolution(String),
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::new().filter_or(LOG_ENV, "warn")).try_init();
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(Failure::NoSolution(status)) => {
            println!("status {status}");
            1
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn load(cfg: &RunConfig) -> anyhow::Result<Instance> {
    cfg.validate()?;
    load_instance_dir(&cfg.instance_dir).with_context(|| format!("loading {}", cfg.instance_dir.display()))
}

fn print_objectives(out: &mut impl Write, v: &ObjectiveVector) -> std::io::Result<()> {
    writeln!(out, "cost {}", v.total_cost)?;
    writeln!(out, "unsuccessful_pct {}", v.unsuccessful_pct)?;
    writeln!(out, "reward {}", v.reward)
}

fn dispatch(command: Command) -> Result<(), Failure> {
    let stdout = &mut std::io::stdout().lock();
    match command {
        Command::Solve { common, bounds, out } => {
            let cfg = RunConfig::new(common.instance.clone(), common.primary, out).with_common(&common).with_bounds(&bounds);
            let instance = load(&cfg)?;
            let point = solve_selection(&instance, &cfg.selection, &cfg.params, &FormulationConfig::default())
                .map_err(anyhow::Error::from)?;
            let (Some(schedule), Some(v)) = (&point.schedule, &point.objectives) else {
                return Err(Failure::NoSolution(point.status.to_string()));
            };
            let path = cfg.out.join("schedule.json");
            write_schedule(&path, schedule).map_err(anyhow::Error::from)?;
            write_json(&cfg.out.join("objectives.json"), v).map_err(anyhow::Error::from)?;
            writeln!(stdout, "status {}", point.status).map_err(anyhow::Error::from)?;
            print_objectives(stdout, v).map_err(anyhow::Error::from)?;
            writeln!(stdout, "schedule {}", path.display()).map_err(anyhow::Error::from)?;
            Ok(())
        }
        Command::Scan { common, grid, out } => {
            let mut cfg = RunConfig::new(common.instance.clone(), common.primary, out).with_common(&common);
            cfg.grid_steps = [grid.eps_c_steps, grid.eps_u_steps, grid.eps_r_steps].map(|s| s.unwrap_or(DEFAULT_STEPS));
            cfg.grid_min = [grid.eps_c_min, grid.eps_u_min, grid.eps_r_min];
            cfg.grid_max = [grid.eps_c_max, grid.eps_u_max, grid.eps_r_max];
            let instance = load(&cfg)?;
            run_scan(&instance, &cfg, stdout).map_err(Failure::Input)
        }
        Command::Evaluate { instance, schedule } => {
            let cfg = RunConfig::new(instance, ObjectiveKind::Cost, PathBuf::new());
            let inst = load(&cfg)?;
            let s = read_schedule(&schedule).map_err(anyhow::Error::from)?;
            let v = evaluate_schedule(&inst, &s).map_err(anyhow::Error::from)?;
            print_objectives(stdout, &v).map_err(anyhow::Error::from)?;
            Ok(())
        }
        Command::Simulate { instance, schedule, samples, seed } => {
            let mut cfg = RunConfig::new(instance, ObjectiveKind::Unsuccessful, PathBuf::new());
            cfg.samples = samples;
            cfg.seed = seed;
            let inst = load(&cfg)?;
            let s = read_schedule(&schedule).map_err(anyhow::Error::from)?;
            let est = monte_carlo_unsuccessful(&inst, &s, cfg.samples, cfg.seed).map_err(anyhow::Error::from)?;
            writeln!(stdout, "unsuccessful_pct {} +- {}", est.estimate_pct, est.standard_error)
                .map_err(anyhow::Error::from)?;
            writeln!(stdout, "samples {}", est.samples).map_err(anyhow::Error::from)?;
            Ok(())
        }
        Command::ExportLp { instance, primary, bounds, out } => {
            let cfg = RunConfig::new(instance, primary, out).with_bounds(&bounds);
            let inst = load(&cfg)?;
            let model = build_milp(&inst, &cfg.selection, &FormulationConfig::default()).map_err(anyhow::Error::from)?;
            let text = export_lp_text(&model).map_err(anyhow::Error::from)?;
            if let Some(dir) = cfg.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(anyhow::Error::from)?;
            }
            std::fs::write(&cfg.out, text).with_context(|| format!("writing {}", cfg.out.display()))?;
            writeln!(stdout, "wrote {} ({} variables, {} constraints)", cfg.out.display(), model.num_vars(), model.constraints.len())
                .map_err(anyhow::Error::from)?;
            Ok(())
        }
        Command::Payoff { common, out } => {
            let cfg = RunConfig::new(common.instance.clone(), common.primary, out.clone().unwrap_or_default())
                .with_common(&common);
            let instance = load(&cfg)?;
            let table = payoff_table(&instance, &cfg.params, &FormulationConfig::default()).map_err(anyhow::Error::from)?;
            writeln!(stdout, "primary,status,cost,unsuccessful_pct,reward").map_err(anyhow::Error::from)?;
            for r in &table.rows {
                let v = r.objectives;
                writeln!(stdout, "{},{},{},{},{}", r.primary, r.status, v.total_cost, v.unsuccessful_pct, v.reward)
                    .map_err(anyhow::Error::from)?;
            }
            if let Some(path) = out {
                write_json(&path, &table).map_err(anyhow::Error::from)?;
            }
            Ok(())
        }
    }
}

fn run_scan(instance: &Instance, cfg: &RunConfig, stdout: &mut impl Write) -> anyhow::Result<()> {
    let primary = cfg.selection.primary;
    let config = FormulationConfig::default();
    let needs_table = ObjectiveKind::ALL
        .iter()
        .enumerate()
        .any(|(k, &kind)| kind != primary && (cfg.grid_min[k].is_none() || cfg.grid_max[k].is_none()));
    let table = if needs_table { Some(payoff_table(instance, &cfg.params, &config)?) } else { None };
    let ranges = ObjectiveKind::ALL
        .iter()
        .enumerate()
        .filter(|(_, &kind)| kind != primary)
        .map(|(k, &kind)| {
            let default = table.as_ref().map(|t| t.range(kind));
            EpsRange {
                kind,
                min: cfg.grid_min[k].or(default.map(|d| d.0)).expect("payoff table present"),
                max: cfg.grid_max[k].or(default.map(|d| d.1)).expect("payoff table present"),
                steps: cfg.grid_steps[k],
            }
        })
        .collect();
    let grid = EpsilonGrid { primary, ranges };
    let points = scan(instance, &grid, &cfg.params, &config)?;

    let mut rows = Vec::with_capacity(points.len());
    for (k, p) in points.iter().enumerate() {
        let rel = p.schedule.as_ref().map(|_| format!("schedules/cell_{k:04}.json"));
        if let (Some(s), Some(rel)) = (&p.schedule, &rel) {
            write_schedule(&cfg.out.join(rel), s)?;
        }
        rows.push(ParetoRow::new(p, rel));
    }
    write_pareto_csv(&cfg.out.join("pareto.csv"), &rows)?;
    let front = frontier_indices(&points);
    let front_rows: Vec<ParetoRow> = front.iter().map(|&k| rows[k].clone()).collect();
    write_pareto_csv(&cfg.out.join("pareto_front.csv"), &front_rows)?;
    let vectors: Vec<ObjectiveVector> = front.iter().filter_map(|&k| points[k].objectives).collect();
    write_plot_data(&cfg.out, primary, &vectors)?;
    let feasible = points.iter().filter(|p| p.objectives.is_some()).count();
    writeln!(
        stdout,
        "{} cells, {} with a schedule, {} on the frontier; wrote {}",
        points.len(),
        feasible,
        front.len(),
        display(&cfg.out.join("pareto.csv"))
    )?;
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
