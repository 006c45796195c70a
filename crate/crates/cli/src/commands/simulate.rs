use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use anyhow::{Context, Result};
use motewatch_core::sim::{load_script, standard_profiles, SimClock, SimConfig, SimServer};

use crate::config::FileConfig;
use crate::SimulateArgs;

pub fn run(args: SimulateArgs, file: &FileConfig, verbose: u8) -> Result<()> {
    let listen = args
        .listen
        .or_else(|| file.listen.clone())
        .unwrap_or_else(|| "127.0.0.1:9001".to_string());
    let nodes = args.nodes.or(file.nodes).unwrap_or(5);
    let seed = args.seed.or(file.seed).unwrap_or(7);
    let tick_ms = args.tick_ms.or(file.tick_ms).unwrap_or(1000);
    let script_path = args.fault_script.or_else(|| file.fault_script.clone());

    let mut clock = SimClock::new(tick_ms);
    clock.sim_day_s = args.sim_day_s.or(file.sim_day_s).unwrap_or(clock.sim_day_s);
    clock.base_ts_ms = args
        .base_ts_ms
        .or(file.base_ts_ms)
        .unwrap_or(clock.base_ts_ms);

    let mut cfg = SimConfig::new(standard_profiles(nodes), clock);
    cfg.seed = seed;
    cfg.max_ticks = args.max_ticks.or(file.max_ticks);
    cfg.script = load_script(script_path.as_ref()).context("loading fault script")?;
    cfg.verbose = verbose > 0;

    let stop = Arc::new(AtomicBool::new(false));
    cfg.stop = Some(stop.clone());
    ctrlc::set_handler(move || stop.store(true, Ordering::Relaxed))
        .context("installing interrupt handler")?;

    let server = SimServer::bind(&listen, cfg).context("starting simulator")?;
    let addr = server.local_addr()?;
    println!(
        "simulator listening on {addr}: {nodes} nodes, tick {tick_ms} ms, seed {seed}"
    );
    let stats = server.run()?;
    println!(
        "simulator done: {} ticks, {} frames, {} clients served, {} dropped",
        stats.ticks, stats.frames_emitted, stats.clients_served, stats.clients_dropped
    );
    Ok(())
}
