//! Command-line harness around the linktomo library: network generation,
//! hub-selection and dynamic-update benchmarks, recovery sweeps, and event
//! log replay. Every run writes a self-contained directory with its config
//! snapshot and CSV outputs; column layout is documented in the README.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use linktomo::experiment::{
    cells_csv, dynamic_bench_csv, dynamic_bench_summary_csv, hub_bench_csv,
    hub_bench_summary_csv, rows_csv, run_bench_dynamic, run_bench_hub, run_recover_sweep,
    run_replay, ExperimentConfig,
};
use linktomo::graph::{generate_ba_with, write_edge_list_file, BaConfig};

#[derive(Parser)]
#[command(name = "linktomo", version, about = "Sparse link-delay estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a scale-free network and write it as an edge list.
    Gen(GenArgs),
    /// Time matching-based hub selection against the BFS baseline.
    BenchHub(RunArgs),
    /// Time incremental updates against full recomputation under deletions.
    BenchDynamic(RunArgs),
    /// Run the recovery success sweep over sparsity rates and ratios.
    RecoverSweep(RunArgs),
    /// Replay a persisted event log and verify the recorded final hub.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Seed-clique size; defaults to d/2 + 1.
    #[arg(long)]
    clique: Option<usize>,
    /// Output edge-list path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Flat key=value config file; flags below override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    d: Option<Vec<usize>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    events: Option<usize>,
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    selector: Option<String>,
    /// Output root; falls back to $LINKTOMO_OUT, then `runs`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run directory name under the output root; defaults to a timestamp.
    #[arg(long)]
    label: Option<String>,
}

#[derive(Args)]
struct ReplayArgs {
    /// Directory holding initial.edges, events.log and (optionally)
    /// final_hub.txt, as written by bench-dynamic.
    #[arg(long)]
    state_dir: PathBuf,
    /// Alternative event log path (defaults to state_dir/events.log).
    #[arg(long)]
    log: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Gen(args) => {
            let g = generate_ba_with(BaConfig {
                n: args.n,
                d: args.d,
                clique: args.clique,
                seed: args.seed,
            })?;
            write_edge_list_file(&g, &args.out)?;
            println!(
                "wrote {} ({} vertices, {} edges, avg degree {:.2})",
                args.out.display(),
                g.vertex_count(),
                g.edge_count(),
                g.average_degree()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::BenchHub(args) => {
            let (cfg, dir) = prepare(&args, "bench-hub")?;
            let out = run_bench_hub(&cfg)?;
            std::fs::write(dir.join("bench_hub.csv"), hub_bench_csv(&out.rows))?;
            std::fs::write(
                dir.join("bench_hub_summary.csv"),
                hub_bench_summary_csv(&out.rows),
            )?;
            print!("{}", hub_bench_summary_csv(&out.rows));
            finish(&dir, &out.violations)
        }
        Command::BenchDynamic(args) => {
            let (cfg, dir) = prepare(&args, "bench-dynamic")?;
            let out = run_bench_dynamic(&cfg)?;
            std::fs::write(dir.join("bench_dynamic.csv"), dynamic_bench_csv(&out.rows))?;
            std::fs::write(
                dir.join("bench_dynamic_summary.csv"),
                dynamic_bench_summary_csv(&out.rows),
            )?;
            for (n, d, trial, edges, log, hub) in &out.replay_artifacts {
                let state = dir.join(format!("state_n{n}_d{d}_t{trial}"));
                std::fs::create_dir_all(&state)?;
                std::fs::write(state.join("initial.edges"), edges)?;
                std::fs::write(state.join("events.log"), log)?;
                std::fs::write(state.join("final_hub.txt"), hub)?;
            }
            if out.skipped_events > 0 {
                eprintln!("skipped {} events with no safe deletion", out.skipped_events);
            }
            print!("{}", dynamic_bench_summary_csv(&out.rows));
            finish(&dir, &out.violations)
        }
        Command::RecoverSweep(args) => {
            let (cfg, dir) = prepare(&args, "recover-sweep")?;
            let out = run_recover_sweep(&cfg)?;
            std::fs::write(dir.join("recover_rows.csv"), rows_csv(&out.rows))?;
            std::fs::write(dir.join("recover_cells.csv"), cells_csv(&out.cells))?;
            let artifacts = dir.join("artifacts");
            std::fs::create_dir_all(&artifacts)?;
            for (n, d, trial, edges) in &out.networks {
                std::fs::write(artifacts.join(format!("network_n{n}_d{d}_t{trial}.edges")), edges)?;
            }
            for (n, d, trial, origin, hub) in &out.hubs {
                std::fs::write(
                    artifacts.join(format!("hub_n{n}_d{d}_t{trial}_{}.txt", origin.as_str())),
                    hub,
                )?;
            }
            print!("{}", cells_csv(&out.cells));
            finish(&dir, &out.violations)
        }
        Command::Replay(args) => {
            let log_path = args.log.unwrap_or_else(|| args.state_dir.join("events.log"));
            let edges = std::fs::read_to_string(args.state_dir.join("initial.edges"))?;
            let log = std::fs::read_to_string(&log_path)?;
            let recorded = std::fs::read_to_string(args.state_dir.join("final_hub.txt")).ok();
            let summary = run_replay(&edges, &log, recorded.as_deref())?;
            println!(
                "epoch {} matching {} hub {} sha256 {}",
                summary.epoch,
                summary.matching_size,
                summary.hub_size,
                &summary.hub_sha256[..16],
            );
            match summary.matches_recorded {
                Some(true) => {
                    println!("final hub matches the recorded serialization");
                    Ok(ExitCode::SUCCESS)
                }
                Some(false) => {
                    eprintln!("final hub DIFFERS from the recorded serialization");
                    Ok(ExitCode::FAILURE)
                }
                None => {
                    println!("no recorded hub to compare against");
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
    }
}

/// Loads config file + overrides and creates the run directory with a
/// config snapshot inside.
fn prepare(args: &RunArgs, experiment: &str) -> Result<(ExperimentConfig, PathBuf), Box<dyn std::error::Error>> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    for pair in &args.sets {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| format!("--set expects key=value, got {pair}"))?;
        cfg.set(key.trim(), value.trim())?;
    }
    if let Some(n) = &args.n {
        cfg.n = n.clone();
    }
    if let Some(d) = &args.d {
        cfg.d = d.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(events) = args.events {
        cfg.events = events;
    }
    if let Some(solver) = &args.solver {
        cfg.set("solver", solver)?;
    }
    if let Some(selector) = &args.selector {
        cfg.set("selector", selector)?;
    }
    cfg.validate()?;

    let root = args
        .out
        .clone()
        .or_else(|| std::env::var_os("LINKTOMO_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let label = args.label.clone().unwrap_or_else(|| {
        let ms = SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_millis();
        format!("run-{ms}")
    });
    let dir = root.join(experiment).join(label);
    std::fs::create_dir_all(&dir)?;
    std::fs::write(dir.join("config.txt"), cfg.snapshot())?;
    Ok((cfg, dir))
}

fn finish(dir: &Path, violations: &[String]) -> Result<ExitCode, Box<dyn std::error::Error>> {
    if violations.is_empty() {
        println!("outputs in {}", dir.display());
        Ok(ExitCode::SUCCESS)
    } else {
        for v in violations {
            eprintln!("invariant violation: {v}");
        }
        std::fs::write(dir.join("violations.txt"), violations.join("\n"))?;
        Ok(ExitCode::FAILURE)
    }
}
