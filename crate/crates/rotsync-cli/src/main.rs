//! Command-line harness: scenario generation, single solver runs,
//! parameter sweeps over the corruption fraction, graph checking, and
//! depth utilities. Every command is a pure function of its input files,
//! flags, and seed. Logging level comes from the SYNC_LOG environment
//! variable (error, warn, info, debug).

mod config;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rotsync::dds::{dds_run, DdsConfig, SyncState};
use rotsync::depth::{max_depth_point, tukey_depth, depth_region_1d, PointCloud, SelectionRule};
use rotsync::error::{Result, SyncError};
use rotsync::graph::{So2View, WellConnectMode, WellConnectedness};
use rotsync::io::{
    scenario_from_json, scenario_to_json, status_exit_code, summary_to_json, trace_to_csv,
};
use rotsync::l1mra::{gd_l1_run, is_coordinatewise_fixed};
use rotsync::manifold::UnitComplex;
use rotsync::scenario::Scenario;
use rotsync::tas::{tas_run, TasConfig};
use rotsync::trace::RunTrace;

use config::{parse_rule, validate_algo, ExperimentConfig, SolverConfig};

#[derive(Parser)]
#[command(
    name = "rotsync",
    about = "Robust rotation synchronization from corrupted pairwise measurements",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario file from an experiment config.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for scenario.json.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one solver on a scenario file.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Solver: dds, tas, or l1mra.
        #[arg(long, default_value = "dds")]
        algo: String,
        /// Output directory for trace.csv and summary.json; without it the
        /// summary goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed for the solver's selection randomness.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Selection rule for dds: trimmed_mean, deepest, random_interior.
        #[arg(long)]
        rule: Option<String>,
        #[arg(long, default_value_t = 2000)]
        max_epochs: usize,
        #[arg(long, default_value_t = 1e-12)]
        stop_tol: f64,
    },
    /// Run the full (alpha x seed x algo) grid of an experiment config.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for independent runs; 0 picks the CPU count.
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Validate a graph file and report degrees, corruption, and the
    /// well-connectedness verdict.
    CheckGraph {
        #[arg(long)]
        graph: PathBuf,
    },
    /// Depth queries on a point-cloud file {"dim": d, "points": [[...]]}.
    Depth {
        #[arg(long)]
        points: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        beta: f64,
        /// Query point as comma-separated coordinates.
        #[arg(long)]
        query: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SYNC_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Generate { config, out, seed } => cmd_generate(&config, &out, seed),
        Command::Run {
            scenario,
            algo,
            out,
            seed,
            eta,
            beta,
            rule,
            max_epochs,
            stop_tol,
        } => {
            let solver = SolverConfig {
                algo: algo.clone(),
                eta,
                beta,
                rule,
                max_epochs,
                stop_tol,
                ..SolverConfig::default()
            };
            cmd_run(&scenario, &solver, out.as_deref(), seed)
        }
        Command::Sweep {
            config,
            out,
            workers,
        } => cmd_sweep(&config, &out, workers),
        Command::CheckGraph { graph } => cmd_check_graph(&graph),
        Command::Depth {
            points,
            beta,
            query,
            seed,
        } => cmd_depth(&points, beta, query.as_deref(), seed),
    }
}

fn cmd_generate(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(s) = seed {
        config.corruption.seed = s;
    }
    let spec = config.scenario_spec(config.corruption.alpha, config.corruption.seed)?;
    let scenario = spec.build()?;
    std::fs::create_dir_all(out)?;
    let path = out.join("scenario.json");
    std::fs::write(&path, scenario_to_json(&scenario)?)?;
    println!("wrote {}", path.display());

    let stats = scenario.graph.corruption_stats()?;
    println!("alpha0 = {:.6}", stats.alpha0);
    print_well_connectedness(&scenario)?;
    Ok(ExitCode::SUCCESS)
}

fn print_well_connectedness(scenario: &Scenario) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.meta.seed);
    let (mode, label) = if scenario.graph.n() <= 24 {
        (WellConnectMode::Exhaustive, "exhaustive")
    } else {
        (WellConnectMode::Sampled { trials: 5000 }, "sampled")
    };
    match scenario.graph.is_well_connected(mode, &mut rng)? {
        WellConnectedness::WellConnected => println!("well-connected: true ({label})"),
        WellConnectedness::NotWellConnected { witness } => {
            println!("well-connected: false ({label}), witness J = {witness:?}")
        }
        WellConnectedness::Unknown => println!("well-connected: unknown ({label})"),
    }
    Ok(())
}

/// Runs one solver on a scenario; shared by `run` and `sweep`.
pub(crate) fn execute_solver(
    scenario: &Scenario,
    solver: &SolverConfig,
    seed: u64,
) -> Result<(SyncState, RunTrace, Option<bool>)> {
    validate_algo(&solver.algo, scenario.dim())?;
    match solver.algo.as_str() {
        "dds" => {
            let cfg = DdsConfig {
                beta: solver.beta,
                eta: solver.eta,
                rule: solver.rule.as_deref().map(parse_rule).transpose()?,
                max_epochs: solver.max_epochs,
                stop_tol: solver.stop_tol,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (state, trace) = dds_run(scenario, &cfg, &mut rng)?;
            Ok((state, trace, None))
        }
        "tas" => {
            let cfg = TasConfig {
                eta: solver.eta,
                max_epochs: solver.max_epochs,
                stop_tol: solver.stop_tol,
            };
            let (state, trace) = tas_run(scenario, &cfg)?;
            Ok((state, trace, None))
        }
        "l1mra" => {
            let (state, trace) = gd_l1_run(scenario, solver.max_epochs, true)?;
            let view = So2View::new(&scenario.graph)?;
            let z: Vec<UnitComplex> = state.estimates.iter().map(UnitComplex::from_rotation).collect();
            let (fixed, _) = is_coordinatewise_fixed(&z, &view);
            Ok((state, trace, Some(fixed)))
        }
        other => Err(SyncError::InvalidConfig(format!("unknown solver '{other}'"))),
    }
}

fn cmd_run(
    scenario_path: &Path,
    solver: &SolverConfig,
    out: Option<&Path>,
    seed: u64,
) -> Result<ExitCode> {
    let scenario = scenario_from_json(&std::fs::read_to_string(scenario_path)?)?;
    let (_, trace, fixed) = execute_solver(&scenario, solver, seed)?;
    let summary = summary_to_json(&trace, fixed)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("trace.csv"), trace_to_csv(&trace))?;
        std::fs::write(dir.join("summary.json"), &summary)?;
        info!("wrote trace.csv and summary.json to {}", dir.display());
    }
    println!("{summary}");
    Ok(ExitCode::from(status_exit_code(&trace.status) as u8))
}

fn cmd_sweep(config_path: &Path, out: &Path, workers: usize) -> Result<ExitCode> {
    let config = ExperimentConfig::load(config_path)?;
    let summary = sweep::run_sweep(&config, workers)?;
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("sweep_runs.csv"), sweep::runs_csv(&summary))?;
    std::fs::write(out.join("sweep_success.csv"), sweep::pivot_csv(&summary))?;
    println!("wrote {} run rows to {}", summary.rows.len(), out.display());
    for line in sweep::pivot_csv(&summary).lines().skip(1) {
        println!("{line}");
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_graph(path: &Path) -> Result<ExitCode> {
    let scenario = scenario_from_json(&std::fs::read_to_string(path)?)?;
    let g = &scenario.graph;
    println!("nodes: {}, D: {}, edges: {}", g.n(), g.dim(), g.edges().len());
    println!("connected: true");
    let degrees: Vec<usize> = (0..g.n()).map(|j| g.degree(j)).collect();
    println!(
        "degree: min {}, max {}",
        degrees.iter().min().unwrap(),
        degrees.iter().max().unwrap()
    );
    if g.is_labeled() {
        let stats = g.corruption_stats()?;
        println!("alpha0 = {:.6}", stats.alpha0);
    } else {
        println!("alpha0: unavailable (unlabeled edges)");
    }
    print_well_connectedness(&scenario)?;
    Ok(ExitCode::SUCCESS)
}

#[derive(serde::Deserialize)]
struct PointsFile {
    dim: usize,
    points: Vec<Vec<f64>>,
}

fn cmd_depth(path: &Path, beta: f64, query: Option<&str>, seed: u64) -> Result<ExitCode> {
    let file: PointsFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let cloud = PointCloud::new(file.dim, file.points)?;
    println!("cloud: dim {}, {} points", cloud.dim(), cloud.len());
    if let Some(q) = query {
        let coords: Vec<f64> = q
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| SyncError::InvalidInput(format!("bad query coordinate: {e}")))
            })
            .collect::<Result<_>>()?;
        let d = tukey_depth(&coords, &cloud)?;
        println!("depth of query: {d}");
    }
    let rule = SelectionRule::default_for_dim(cloud.dim());
    let rule = if cloud.dim() == 1 {
        // report a deepest point rather than a trimmed mean for queries
        SelectionRule::new(rotsync::depth::RuleKind::DeepestCandidate, rule.search_budget)
    } else {
        rule
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = max_depth_point(&cloud, beta, &rule, &mut rng)?;
    let d = tukey_depth(&p, &cloud)?;
    let formatted: Vec<String> = p.iter().map(|v| format!("{v:.12}")).collect();
    println!("max-depth point found: [{}] with depth {d}", formatted.join(", "));
    if cloud.dim() == 1 {
        let region = depth_region_1d(beta, &cloud)?;
        println!("depth region at beta = {beta}: [{}, {}]", region.lo, region.hi);
    }
    Ok(ExitCode::SUCCESS)
}
