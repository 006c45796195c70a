//! motewatch: wireless sensor network fault-detection toolkit.
//!
//! Four subcommands cover the end-to-end flows:
//! - `simulate` — synthetic base station serving telemetry frames over TCP
//!   with optional scripted fault injection;
//! - `monitor` — connect to a base station, maintain per-node windows,
//!   rebuild prediction models each cycle, and raise fault alerts;
//! - `replay` — run recorded window CSVs through the detector
//!   deterministically;
//! - `bench` — compare the five prediction algorithms on a recorded
//!   dataset.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::FileConfig;

#[derive(Parser)]
#[command(name = "motewatch", version, about = "Wireless sensor network fault detection")]
struct Cli {
    /// Flat key=value config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Increase output detail (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Serve synthetic mote telemetry over TCP.
    Simulate(SimulateArgs),
    /// Connect to a base station and detect sensor faults in real time.
    Monitor(MonitorArgs),
    /// Re-run recorded window CSVs through the fault detector.
    Replay(ReplayArgs),
    /// Benchmark the prediction algorithms on a recorded dataset.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// Listen endpoint, host:port.
    #[arg(long)]
    listen: Option<String>,
    /// Number of simulated nodes (ids 1..=N).
    #[arg(long)]
    nodes: Option<u8>,
    /// RNG seed; a fixed seed reproduces the byte stream exactly.
    #[arg(long)]
    seed: Option<u64>,
    /// Milliseconds between ticks.
    #[arg(long)]
    tick_ms: Option<u64>,
    /// Stop after this many ticks (runs until interrupted if omitted).
    #[arg(long)]
    max_ticks: Option<u64>,
    /// Stream-time seconds per simulated day (small values accelerate the
    /// diurnal cycle).
    #[arg(long)]
    sim_day_s: Option<u64>,
    /// Epoch milliseconds of tick 0 (0 = midnight).
    #[arg(long)]
    base_ts_ms: Option<u64>,
    /// Fault script file (see the repository docs for the format).
    #[arg(long)]
    fault_script: Option<PathBuf>,
}

/// Detection settings shared by `monitor` and `replay`.
#[derive(Args, Clone)]
struct DetectorArgs {
    /// Instances per short window.
    #[arg(long)]
    short_len: Option<usize>,
    /// Appends averaged into one long-window entry.
    #[arg(long)]
    avg_group: Option<usize>,
    /// Averages per long window.
    #[arg(long)]
    long_len: Option<usize>,
    /// Prediction algorithm: linear, stump, table, knn, m5p.
    #[arg(long)]
    algorithm: Option<String>,
    /// Neighbors for knn.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Bins per feature for the decision table.
    #[arg(long)]
    table_bins: Option<usize>,
    /// Minimum rows per leaf for m5p.
    #[arg(long)]
    m5p_min_leaf: Option<usize>,
    /// Light threshold, percent.
    #[arg(long)]
    th_light: Option<f64>,
    /// Temperature threshold, percent.
    #[arg(long)]
    th_temp: Option<f64>,
    /// Accelerometer X threshold, percent.
    #[arg(long)]
    th_accel_x: Option<f64>,
    /// Accelerometer Y threshold, percent.
    #[arg(long)]
    th_accel_y: Option<f64>,
    /// Voltage threshold, percent.
    #[arg(long)]
    th_volt: Option<f64>,
    /// Deviation denominator guard.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Alert cooldown per (node, sensor), in instances. 0 disables.
    #[arg(long)]
    quiet_ticks: Option<u64>,
    /// Disable long-window confirmation (short breaches alert immediately).
    #[arg(long)]
    no_long: bool,
    /// Directory for window CSVs and model files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Alert log path (JSON lines).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    /// Base station endpoint, host:port.
    #[arg(long)]
    connect: Option<String>,
    /// Reconnect attempts after a mid-stream disconnect.
    #[arg(long)]
    retries: Option<u32>,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Args)]
struct ReplayArgs {
    /// Window CSV files to replay (named node_<id>_*.csv, or use --node).
    #[arg(long, required = true, num_args = 1..)]
    data: Vec<PathBuf>,
    /// Node id override when a file name does not carry one.
    #[arg(long)]
    node: Option<u8>,
    #[command(flatten)]
    detector: DetectorArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Window CSV file with the recorded dataset.
    #[arg(long)]
    data: PathBuf,
    /// Target sensor to predict: light, temperature, accel_x, accel_y,
    /// voltage.
    #[arg(long)]
    target: Option<String>,
    /// Comma-separated algorithms, or "all".
    #[arg(long)]
    algorithms: Option<String>,
    /// Trailing fraction of rows held out for testing.
    #[arg(long)]
    holdout: Option<f64>,
    /// Directory for the report CSVs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// CPU power in watts for the energy estimate.
    #[arg(long)]
    cpu_w: Option<f64>,
    /// Radio power in watts.
    #[arg(long)]
    radio_w: Option<f64>,
    /// Radio rate in bits per second.
    #[arg(long)]
    radio_bps: Option<f64>,
    /// Message size in bits.
    #[arg(long)]
    msg_bits: Option<f64>,
    /// Neighbors for knn.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Bins per feature for the decision table.
    #[arg(long)]
    table_bins: Option<usize>,
    /// Minimum rows per leaf for m5p.
    #[arg(long)]
    m5p_min_leaf: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> anyhow::Result<()> {
        let file = FileConfig::load(cli.config.as_ref())?;
        match cli.command {
            Command::Simulate(args) => commands::simulate::run(args, &file, cli.verbose),
            Command::Monitor(args) => commands::monitor::run(args, &file, cli.verbose),
            Command::Replay(args) => commands::replay::run(args, &file, cli.verbose),
            Command::Bench(args) => commands::bench::run(args, &file, cli.verbose),
        }
    })();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
