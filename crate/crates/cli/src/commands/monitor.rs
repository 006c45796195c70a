use std::io::Read;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use motewatch_core::detect::{format_alert, format_anomaly, AlertLog, Verdict};
use motewatch_core::engine::{EngineError, MonitorEngine, RebuildMode};
use motewatch_core::sim::connect;
use motewatch_core::window::WindowError;
use motewatch_core::wire::{FrameScanner, ScanItem};

use crate::config::FileConfig;
use crate::MonitorArgs;

/// Alert-history window used for the exit health summary, and the repeat
/// count that localizes a sensor fault.
const HEALTH_HORIZON_MS: u64 = 3_600_000;
const HEALTH_MIN_ALERTS: usize = 3;

pub fn run(args: MonitorArgs, file: &FileConfig, verbose: u8) -> Result<()> {
    let endpoint = args
        .connect
        .or_else(|| file.connect.clone())
        .unwrap_or_else(|| "127.0.0.1:9001".to_string());
    let retries = args.retries.or(file.retries).unwrap_or(3);
    let out = args
        .detector
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| "alerts.jsonl".into());

    let mut cfg = crate::commands::resolve_engine_config(&args.detector, file)?;
    cfg.rebuild_mode = RebuildMode::Background;
    let mut engine = MonitorEngine::new(cfg).context("starting monitor engine")?;

    // Window files from a previous run continue where they left off.
    let restored = engine.load_persisted(&(0..=255).collect::<Vec<u8>>())?;
    if restored > 0 {
        println!("restored windows for {restored} node(s) from the data directory");
    }

    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = stop.clone();
        ctrlc::set_handler(move || stop.store(true, Ordering::Relaxed))
            .context("installing interrupt handler")?;
    }

    let mut stream = connect(&endpoint)
        .with_context(|| format!("connecting to base station at {endpoint}"))?;
    stream
        .set_read_timeout(Some(Duration::from_millis(250)))
        .context("configuring socket timeout")?;
    println!("connected to {endpoint}; monitoring");
    let mut log = AlertLog::open(&out).context("opening alert log")?;

    let mut scanner = FrameScanner::new();
    let mut buf = [0u8; 4096];
    let mut frame_errors: u64 = 0;
    let mut stale_frames: u64 = 0;
    let mut reconnects_left = retries;

    'outer: while !stop.load(Ordering::Relaxed) {
        let n = match stream.read(&mut buf) {
            Ok(0) => {
                // Stream closed. Reconnect a bounded number of times; a
                // finished simulator simply refuses, which ends the run.
                while reconnects_left > 0 && !stop.load(Ordering::Relaxed) {
                    reconnects_left -= 1;
                    std::thread::sleep(Duration::from_millis(500));
                    match connect(&endpoint) {
                        Ok(s) => {
                            stream = s;
                            stream
                                .set_read_timeout(Some(Duration::from_millis(250)))
                                .context("configuring socket timeout")?;
                            scanner = FrameScanner::new();
                            if verbose > 0 {
                                println!("reconnected to {endpoint}");
                            }
                            continue 'outer;
                        }
                        Err(_) => continue,
                    }
                }
                break;
            }
            Ok(n) => n,
            Err(e)
                if e.kind() == std::io::ErrorKind::WouldBlock
                    || e.kind() == std::io::ErrorKind::TimedOut =>
            {
                engine.drain_completed_rebuilds()?;
                continue;
            }
            Err(e) => {
                eprintln!("read error: {e}");
                break;
            }
        };

        scanner.push(&buf[..n]);
        while let Some(item) = scanner.poll() {
            match item {
                ScanItem::Frame(frame) => {
                    match engine.ingest_frame(&frame) {
                        Ok(Some(Verdict::Alert(alert))) => {
                            println!("{}", format_alert(&alert));
                            log.log_alert(&alert)?;
                        }
                        Ok(Some(Verdict::NodeAnomaly(event))) => {
                            println!("{}", format_anomaly(&event));
                            log.log_anomaly(&event)?;
                        }
                        Ok(_) => {}
                        // Replayed or out-of-order frames (a restarted
                        // base station, duplicated delivery) are skipped,
                        // not fatal.
                        Err(EngineError::Window(
                            WindowError::NonMonotonicTimestamp { .. },
                        )) => {
                            stale_frames += 1;
                            if verbose > 0 {
                                eprintln!(
                                    "stale frame from node {} dropped",
                                    frame.node_id
                                );
                            }
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                ScanItem::Error(e) => {
                    frame_errors += 1;
                    if verbose > 0 {
                        eprintln!("frame error: {e}");
                    }
                }
            }
        }
    }

    if let Some(err) = scanner.finish() {
        frame_errors += 1;
        if verbose > 0 {
            eprintln!("frame error at end of stream: {err}");
        }
    }

    let health = engine.health_summary(HEALTH_HORIZON_MS, HEALTH_MIN_ALERTS);
    let stats = engine.finish()?;
    if stats.instances == 0 {
        bail!("no telemetry received from {endpoint}");
    }
    println!(
        "monitor done: {} instances, {} evaluated, {} alerts ({} suppressed), {} node anomalies, {} rebuilds, {} frame errors, {} stale frames",
        stats.instances,
        stats.evaluated,
        stats.alerts,
        stats.suppressed_alerts,
        stats.anomalies,
        stats.rebuilds,
        frame_errors,
        stale_frames
    );
    for (node_id, status) in health {
        println!("node {node_id}: {status}");
    }
    println!("alert log written to {}", out.display());
    Ok(())
}
