use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use gallop_sim::harness::{
    run_scenario, sweep, write_plot_data, ConfigError, PlotMetric, RunError, ScenarioConfig,
    SweepGrid, Trace,
};

#[derive(Parser)]
#[command(name = "gallop-sim", version, about = "TDMA wireless control co-simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv, metrics.json and cycle_cdf.csv.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a grid of erasure probabilities and seeds in parallel.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
    },
    /// Extract plot-ready CSV from a trace; writes to stdout.
    PlotData {
        trace: PathBuf,
        #[arg(long)]
        metric: PlotMetric,
    },
}

/// Exit code for configurations rejected before simulation.
const EXIT_CONFIG: u8 = 2;

fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let cfg = ScenarioConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn run(config: &Path, out: &Path, seed: Option<u64>) -> anyhow::Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let result = run_scenario(&cfg)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    result.trace.save(out.join("trace.csv"))?;
    std::fs::write(out.join("metrics.json"), result.metrics.to_json())?;
    let cdf = std::fs::File::create(out.join("cycle_cdf.csv"))?;
    write_plot_data(&result.trace, PlotMetric::CycleCdf, cdf)?;
    let m = &result.metrics;
    println!(
        "{}: {} at {:.3} s, {} cycles of {} us",
        cfg.name,
        result.end_reason,
        m.end_time_us as f64 * 1e-6,
        m.cycles,
        m.cycle_length_us
    );
    if let Some(s) = &m.latency.stats {
        println!(
            "latency us: min {:.0} mean {:.1} p99 {:.0} max {:.0} (n={})",
            s.min_us, s.mean_us, s.p99_us, s.max_us, s.count
        );
    }
    for (id, ct) in &m.cross_track {
        println!("robot {id}: cross-track rms {:.4} m, max {:.4} m", ct.rms_m, ct.max_m);
    }
    if let Some(f) = &m.follower {
        println!(
            "follower {}: rms {:?} m, min gap {:?} m",
            f.follower, f.rms_m, f.min_gap_m
        );
    }
    if let Some(e) = &m.estop {
        println!(
            "estop: latency {:?} us, bound {:.0} us, late robots {:?}",
            e.latency_us, e.bound_us, e.late_robots
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn run_sweep(config: &Path, grid: &Path, out: &Path) -> anyhow::Result<()> {
    let cfg = load_config(config)?;
    let text = std::fs::read_to_string(grid).with_context(|| format!("reading {}", grid.display()))?;
    let grid: SweepGrid = serde_json::from_str(&text).context("parsing grid")?;
    std::fs::create_dir_all(out)?;
    let report = sweep(&cfg, &grid, Some(out))?;
    report.write_rows_csv(std::fs::File::create(out.join("sweep.csv"))?)?;
    report.write_summary_csv(std::fs::File::create(out.join("summary.csv"))?)?;
    report.write_summary_csv(std::io::stdout().lock())?;
    Ok(())
}

fn plot_data(trace: &Path, metric: PlotMetric) -> anyhow::Result<()> {
    let trace = Trace::load(trace)?;
    write_plot_data(&trace, metric, std::io::stdout().lock())?;
    Ok(())
}

fn is_config_error(e: &anyhow::Error) -> bool {
    e.downcast_ref::<ConfigError>().is_some()
        || matches!(e.downcast_ref::<RunError>(), Some(RunError::Config(_)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, out, seed } => run(config, out, *seed),
        Command::Sweep { config, grid, out } => run_sweep(config, grid, out),
        Command::PlotData { trace, metric } => plot_data(trace, *metric),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_config_error(&e) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
