use std::path::Path;

use anyhow::{anyhow, Context, Result};
use motewatch_core::convert::EngineeringInstance;
use motewatch_core::detect::{format_alert, format_anomaly, AlertLog, Verdict};
use motewatch_core::engine::{MonitorEngine, RebuildMode};
use motewatch_core::window::read_instances_csv;

use crate::config::FileConfig;
use crate::ReplayArgs;

/// `node_<id>_short.csv` and friends carry their node id in the name.
fn node_id_from_path(path: &Path) -> Option<u8> {
    let stem = path.file_stem()?.to_str()?;
    let rest = stem.strip_prefix("node_")?;
    let digits: String = rest.chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}

pub fn run(args: ReplayArgs, file: &FileConfig, _verbose: u8) -> Result<()> {
    let out = args
        .detector
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| "alerts.jsonl".into());

    let mut cfg = crate::commands::resolve_engine_config(&args.detector, file)?;
    // Replays are the deterministic path: fits run inline, so identical
    // input always produces an identical alert log.
    cfg.rebuild_mode = RebuildMode::Synchronous;
    let mut engine = MonitorEngine::new(cfg).context("starting replay engine")?;
    let mut log = AlertLog::open(&out).context("opening alert log")?;

    let mut instances: Vec<EngineeringInstance> = Vec::new();
    for path in &args.data {
        let node_id = node_id_from_path(path).or(args.node).ok_or_else(|| {
            anyhow!(
                "{}: cannot infer a node id from the file name; pass --node",
                path.display()
            )
        })?;
        let rows = read_instances_csv(path, node_id)
            .with_context(|| format!("reading {}", path.display()))?;
        instances.extend(rows);
    }
    if instances.is_empty() {
        return Err(anyhow!("no instances to replay"));
    }
    // Interleave multiple nodes the way the live stream would.
    instances.sort_by_key(|i| (i.timestamp_ms, i.node_id));

    let total = instances.len();
    for inst in instances {
        match engine.ingest(inst)? {
            Some(Verdict::Alert(alert)) => {
                println!("{}", format_alert(&alert));
                log.log_alert(&alert)?;
            }
            Some(Verdict::NodeAnomaly(event)) => {
                println!("{}", format_anomaly(&event));
                log.log_anomaly(&event)?;
            }
            _ => {}
        }
    }

    let stats = engine.finish()?;
    println!(
        "replay done: {total} instances, {} evaluated, {} alerts ({} suppressed), {} node anomalies, {} rebuilds",
        stats.evaluated, stats.alerts, stats.suppressed_alerts, stats.anomalies, stats.rebuilds
    );
    println!("alert log written to {}", out.display());
    Ok(())
}
