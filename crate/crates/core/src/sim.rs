//! Synthetic base station: diurnal sensor traces, scripted fault injection,
//! and a TCP broadcast server.
//!
//! Readings are generated per node per tick in ADC counts. Light and
//! temperature ride a sinusoid over the simulated day (minimum at
//! midnight, maximum at noon), acceleration holds its baseline, and
//! voltage decays linearly with the tick count; every channel adds
//! Gaussian noise and clamps to the 10-bit ADC range. A fixed seed fully
//! determines the emitted byte stream.
//!
//! Fault scripts are plain text, one event per line:
//!
//! ```text
//! # start_tick  node_id  sensor  kind  [arg]
//! 130 3 temperature stuck 200
//! 200 1 light       drift 0.5
//! 300 2 -           dropout 50
//! 400 5 -           death
//! ```
//!
//! `stuck <adc>` pins a sensor, `drift <counts_per_tick>` ramps it,
//! `dropout <ticks>` suppresses the node's frames for a window, and
//! `death` silences the node permanently. Dropout and death apply to the
//! whole node and take `-` in the sensor column.
//!
//! Clients connect over TCP, send the greeting line `HELLO v1`, receive
//! `OK`, and then raw 28-byte frames back to back. A client whose send
//! queue fills is disconnected rather than stalling the tick loop.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender, TrySendError};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::convert::Sensor;
use crate::wire::{encode_frame, AdcReadings, RawFrame, ADC_MAX};

/// Client greeting expected before frames flow.
pub const GREETING: &str = "HELLO v1";
/// Server reply granting access.
pub const GREETING_OK: &str = "OK";

/// Per-sensor parameter block in ADC counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorLevels {
    pub light: f64,
    pub temperature: f64,
    pub accel_x: f64,
    pub accel_y: f64,
    pub voltage: f64,
}

impl SensorLevels {
    pub const fn uniform(value: f64) -> Self {
        Self {
            light: value,
            temperature: value,
            accel_x: value,
            accel_y: value,
            voltage: value,
        }
    }

    pub fn get(&self, sensor: Sensor) -> f64 {
        match sensor {
            Sensor::Light => self.light,
            Sensor::Temperature => self.temperature,
            Sensor::AccelX => self.accel_x,
            Sensor::AccelY => self.accel_y,
            Sensor::Voltage => self.voltage,
        }
    }

    pub fn as_array(&self) -> [f64; 5] {
        [
            self.light,
            self.temperature,
            self.accel_x,
            self.accel_y,
            self.voltage,
        ]
    }
}

/// Trace parameters for one simulated node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeProfile {
    pub node_id: u8,
    /// Mean ADC level per sensor.
    pub baseline: SensorLevels,
    /// Diurnal swing per sensor; meaningful for light and temperature,
    /// zero by default elsewhere.
    pub amplitude: SensorLevels,
    /// Gaussian noise standard deviation per sensor, in ADC counts.
    pub noise_sd: SensorLevels,
    /// Battery decay applied to the voltage channel, ADC counts per tick.
    pub battery_decay: f64,
}

impl NodeProfile {
    /// A plausible outdoor mote: mid-scale light and temperature with a
    /// gentle day/night swing, one gravity unit on each accelerometer
    /// axis, a healthy battery, and low noise everywhere.
    pub fn standard(node_id: u8) -> Self {
        Self {
            node_id,
            baseline: SensorLevels {
                light: 500.0,
                temperature: 512.0,
                accel_x: 717.0,
                accel_y: 717.0,
                voltage: 980.0,
            },
            amplitude: SensorLevels {
                light: 50.0,
                temperature: 30.0,
                accel_x: 0.0,
                accel_y: 0.0,
                voltage: 0.0,
            },
            noise_sd: SensorLevels {
                light: 2.0,
                temperature: 2.0,
                accel_x: 1.0,
                accel_y: 1.0,
                voltage: 1.0,
            },
            battery_decay: 0.0,
        }
    }
}

/// Simulated time: tick counter resolution and day length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimClock {
    pub tick_ms: u64,
    /// Stream-time seconds per simulated day. 86400 is real time; small
    /// values compress a full day into a short run.
    pub sim_day_s: u64,
    /// Epoch milliseconds of tick 0. Zero puts tick 0 at midnight.
    pub base_ts_ms: u64,
}

impl SimClock {
    pub fn new(tick_ms: u64) -> Self {
        Self {
            tick_ms,
            sim_day_s: 86_400,
            base_ts_ms: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.tick_ms == 0 || self.sim_day_s == 0 {
            return Err(SimError::InvalidConfig(
                "tick_ms and sim_day_s must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn timestamp_ms(&self, tick: u64) -> u64 {
        self.base_ts_ms + tick * self.tick_ms
    }

    /// Fraction of the simulated day elapsed at a tick, in [0, 1).
    pub fn time_of_day_fraction(&self, tick: u64) -> f64 {
        let day_ms = self.sim_day_s as f64 * 1000.0;
        (self.timestamp_ms(tick) as f64 % day_ms) / day_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FaultKind {
    /// Pin the sensor's ADC reading to a fixed value.
    Stuck(u16),
    /// Add `rate * (tick - start_tick)` counts to the sensor.
    Drift(f64),
    /// Suppress the node's frames for this many ticks.
    Dropout(u64),
    /// Suppress the node's frames from start_tick onward.
    Death,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultEvent {
    pub start_tick: u64,
    pub node_id: u8,
    /// Named for stuck/drift; `None` for the node-level dropout/death.
    pub sensor: Option<Sensor>,
    pub kind: FaultKind,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("fault script line {line}: {msg}")]
    ScriptParse { line: usize, msg: String },
    #[error("overlapping faults for node {node_id}: {msg}")]
    OverlappingFaults { node_id: u8, msg: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> SimError {
    let context = context.into();
    move |source| SimError::Io { context, source }
}

/// A validated set of scripted fault events.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FaultScript {
    events: Vec<FaultEvent>,
}

impl FaultScript {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn events(&self) -> &[FaultEvent] {
        &self.events
    }

    /// Validates that no two value faults target the same (node, sensor),
    /// dropout windows per node are disjoint, and each node dies at most
    /// once.
    pub fn new(events: Vec<FaultEvent>) -> Result<Self, SimError> {
        let mut value_targets: HashMap<(u8, Sensor), u64> = HashMap::new();
        let mut dropouts: HashMap<u8, Vec<(u64, u64)>> = HashMap::new();
        let mut deaths: HashMap<u8, u64> = HashMap::new();
        for event in &events {
            match event.kind {
                FaultKind::Stuck(_) | FaultKind::Drift(_) => {
                    let sensor = event.sensor.ok_or_else(|| SimError::InvalidConfig(
                        "stuck/drift events need a sensor".into(),
                    ))?;
                    if value_targets
                        .insert((event.node_id, sensor), event.start_tick)
                        .is_some()
                    {
                        return Err(SimError::OverlappingFaults {
                            node_id: event.node_id,
                            msg: format!("second value fault on sensor {sensor}"),
                        });
                    }
                }
                FaultKind::Dropout(duration) => {
                    dropouts
                        .entry(event.node_id)
                        .or_default()
                        .push((event.start_tick, event.start_tick.saturating_add(duration)));
                }
                FaultKind::Death => {
                    if deaths.insert(event.node_id, event.start_tick).is_some() {
                        return Err(SimError::OverlappingFaults {
                            node_id: event.node_id,
                            msg: "node dies twice".into(),
                        });
                    }
                }
            }
        }
        for (node_id, mut windows) in dropouts {
            windows.sort_unstable();
            for pair in windows.windows(2) {
                if pair[1].0 < pair[0].1 {
                    return Err(SimError::OverlappingFaults {
                        node_id,
                        msg: format!(
                            "dropout starting at tick {} overlaps one ending at {}",
                            pair[1].0, pair[0].1
                        ),
                    });
                }
            }
        }
        Ok(Self { events })
    }

    /// Parse the one-event-per-line text format described in the module
    /// docs. `#` starts a comment; blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut events = Vec::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw_line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::ScriptParse { line: line_no, msg };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() < 4 {
                return Err(err(format!(
                    "expected at least 4 fields (start_tick node sensor kind), found {}",
                    tokens.len()
                )));
            }
            let start_tick: u64 = tokens[0]
                .parse()
                .map_err(|e| err(format!("bad start tick: {e}")))?;
            let node_id: u8 = tokens[1]
                .parse()
                .map_err(|e| err(format!("bad node id: {e}")))?;
            let sensor = match tokens[2] {
                "-" => None,
                name => Some(name.parse::<Sensor>().map_err(&err)?),
            };
            let kind = match tokens[3].to_ascii_lowercase().as_str() {
                "stuck" => {
                    let value: u16 = tokens
                        .get(4)
                        .ok_or_else(|| err("stuck needs an adc value".into()))?
                        .parse()
                        .map_err(|e| err(format!("bad stuck value: {e}")))?;
                    FaultKind::Stuck(value.min(ADC_MAX))
                }
                "drift" => {
                    let rate: f64 = tokens
                        .get(4)
                        .ok_or_else(|| err("drift needs a counts-per-tick rate".into()))?
                        .parse()
                        .map_err(|e| err(format!("bad drift rate: {e}")))?;
                    FaultKind::Drift(rate)
                }
                "dropout" => {
                    let ticks: u64 = tokens
                        .get(4)
                        .ok_or_else(|| err("dropout needs a duration in ticks".into()))?
                        .parse()
                        .map_err(|e| err(format!("bad dropout duration: {e}")))?;
                    FaultKind::Dropout(ticks)
                }
                "death" => FaultKind::Death,
                other => {
                    return Err(err(format!(
                        "unknown fault kind {other:?} (expected stuck, drift, dropout, death)"
                    )))
                }
            };
            match kind {
                FaultKind::Stuck(_) | FaultKind::Drift(_) if sensor.is_none() => {
                    return Err(err("stuck/drift events need a sensor name".into()));
                }
                FaultKind::Dropout(_) | FaultKind::Death if sensor.is_some() => {
                    return Err(err(
                        "dropout/death apply to the whole node; use '-' for the sensor".into(),
                    ));
                }
                _ => {}
            }
            events.push(FaultEvent {
                start_tick,
                node_id,
                sensor,
                kind,
            });
        }
        Self::new(events)
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(io_err(format!("reading fault script {}", path.display())))?;
        Self::parse(&text)
    }

    /// Whether the node's frame is suppressed at this tick (dropout window
    /// or death).
    pub fn suppressed(&self, tick: u64, node_id: u8) -> bool {
        self.events.iter().any(|e| {
            e.node_id == node_id
                && match e.kind {
                    FaultKind::Dropout(duration) => {
                        tick >= e.start_tick && tick < e.start_tick.saturating_add(duration)
                    }
                    FaultKind::Death => tick >= e.start_tick,
                    _ => false,
                }
        })
    }

    fn value_fault(&self, tick: u64, node_id: u8, sensor: Sensor) -> Option<&FaultEvent> {
        self.events.iter().find(|e| {
            e.node_id == node_id
                && e.sensor == Some(sensor)
                && tick >= e.start_tick
                && matches!(e.kind, FaultKind::Stuck(_) | FaultKind::Drift(_))
        })
    }
}

/// Deterministic per-node RNG: one stream per (seed, node).
pub fn node_rng(seed: u64, node_id: u8) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (node_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn clamp_adc(value: f64) -> u16 {
    value.round().clamp(0.0, ADC_MAX as f64) as u16
}

/// One tick of fault-free readings for a node, in ADC counts.
///
/// The sinusoid peaks at simulated noon and bottoms at midnight. Five
/// noise samples are drawn per call in sensor order, so the RNG stream
/// position depends only on the tick count.
pub fn generate_reading(
    profile: &NodeProfile,
    clock: &SimClock,
    tick: u64,
    rng: &mut ChaCha8Rng,
) -> [u16; 5] {
    let phase = 2.0 * std::f64::consts::PI * clock.time_of_day_fraction(tick)
        - std::f64::consts::FRAC_PI_2;
    let diurnal = phase.sin();
    let mut values = [0.0f64; 5];
    for (i, sensor) in Sensor::ALL.iter().enumerate() {
        let noise: f64 = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            * profile.noise_sd.get(*sensor);
        let mut value = profile.baseline.get(*sensor) + profile.amplitude.get(*sensor) * diurnal;
        if *sensor == Sensor::Voltage {
            value -= profile.battery_decay * tick as f64;
        }
        values[i] = value + noise;
    }
    values.map(clamp_adc)
}

/// Apply scripted faults to one node's readings at a tick. Returns `None`
/// when the frame is suppressed entirely (dropout window or death).
pub fn apply_fault(
    readings: [u16; 5],
    script: &FaultScript,
    tick: u64,
    node_id: u8,
) -> Option<[u16; 5]> {
    if script.suppressed(tick, node_id) {
        return None;
    }
    let mut out = readings;
    for (i, sensor) in Sensor::ALL.iter().enumerate() {
        if let Some(event) = script.value_fault(tick, node_id, *sensor) {
            out[i] = match event.kind {
                FaultKind::Stuck(value) => value.min(ADC_MAX),
                FaultKind::Drift(rate) => {
                    clamp_adc(readings[i] as f64 + rate * (tick - event.start_tick) as f64)
                }
                _ => out[i],
            };
        }
    }
    Some(out)
}

/// Full simulator configuration for a server run.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub profiles: Vec<NodeProfile>,
    pub script: FaultScript,
    pub clock: SimClock,
    pub seed: u64,
    /// Stop after this many ticks; `None` runs until the process exits.
    pub max_ticks: Option<u64>,
    /// Frames queued per client before it is dropped as too slow.
    pub queue_capacity: usize,
    /// Hold tick 0 until this many clients have connected (frames queued
    /// for a client survive until its handshake completes, so nothing is
    /// lost once it is registered).
    pub min_clients: usize,
    /// Print per-tick frame counts.
    pub verbose: bool,
    /// External stop request, checked once per tick.
    pub stop: Option<Arc<AtomicBool>>,
}

impl SimConfig {
    pub fn new(profiles: Vec<NodeProfile>, clock: SimClock) -> Self {
        Self {
            profiles,
            script: FaultScript::empty(),
            clock,
            seed: 0,
            max_ticks: None,
            queue_capacity: 1024,
            min_clients: 0,
            verbose: false,
            stop: None,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        self.clock.validate()?;
        if self.profiles.is_empty() {
            return Err(SimError::InvalidConfig("no node profiles".into()));
        }
        let mut ids: Vec<u8> = self.profiles.iter().map(|p| p.node_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != self.profiles.len() {
            return Err(SimError::InvalidConfig("duplicate node ids".into()));
        }
        if self.queue_capacity == 0 {
            return Err(SimError::InvalidConfig("queue capacity must be > 0".into()));
        }
        Ok(())
    }
}

/// Totals from a finished server run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SimStats {
    pub ticks: u64,
    pub frames_emitted: u64,
    pub clients_served: usize,
    pub clients_dropped: usize,
}

struct ClientHandle {
    tx: SyncSender<Vec<u8>>,
}

fn serve_client(stream: TcpStream, rx: Receiver<Vec<u8>>) {
    let peer = stream.peer_addr().ok();
    let mut stream = stream;
    let mut reader = BufReader::new(match stream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    });
    let mut greeting = String::new();
    if reader.read_line(&mut greeting).is_err() || greeting.trim() != GREETING {
        let _ = writeln!(stream, "ERR");
        return;
    }
    if writeln!(stream, "{GREETING_OK}").is_err() {
        return;
    }
    let _ = peer;
    while let Ok(bytes) = rx.recv() {
        if stream.write_all(&bytes).is_err() {
            return;
        }
    }
}

/// TCP broadcast server generating one frame per live node per tick.
pub struct SimServer {
    listener: TcpListener,
    cfg: SimConfig,
}

impl SimServer {
    pub fn bind(endpoint: &str, cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let listener = TcpListener::bind(endpoint)
            .map_err(io_err(format!("binding simulator listener on {endpoint}")))?;
        listener
            .set_nonblocking(true)
            .map_err(io_err("setting listener non-blocking"))?;
        Ok(Self { listener, cfg })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, SimError> {
        self.listener
            .local_addr()
            .map_err(io_err("reading listener address"))
    }

    /// Run the tick loop until `max_ticks` elapse. Each tick generates
    /// frames for every live node in ascending node-id order and broadcasts
    /// the concatenated bytes to every connected client.
    pub fn run(self) -> Result<SimStats, SimError> {
        let SimServer { listener, cfg } = self;
        let mut profiles = cfg.profiles.clone();
        profiles.sort_by_key(|p| p.node_id);

        let mut rngs: Vec<ChaCha8Rng> = profiles
            .iter()
            .map(|p| node_rng(cfg.seed, p.node_id))
            .collect();
        let mut sequences: Vec<u32> = vec![0; profiles.len()];
        let mut clients: Vec<ClientHandle> = Vec::new();
        let mut handles: Vec<std::thread::JoinHandle<()>> = Vec::new();
        let mut stats = SimStats::default();

        let accept_pending = |clients: &mut Vec<ClientHandle>,
                              handles: &mut Vec<std::thread::JoinHandle<()>>,
                              stats: &mut SimStats|
         -> Result<(), SimError> {
            loop {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let (tx, rx) = sync_channel::<Vec<u8>>(cfg.queue_capacity);
                        let handle = std::thread::Builder::new()
                            .name("sim-client".into())
                            .spawn(move || serve_client(stream, rx))
                            .map_err(io_err("spawning client writer"))?;
                        handles.push(handle);
                        clients.push(ClientHandle { tx });
                        stats.clients_served += 1;
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => return Ok(()),
                    Err(e) => return Err(io_err("accepting client")(e)),
                }
            }
        };

        let stopped = || {
            cfg.stop
                .as_ref()
                .is_some_and(|flag| flag.load(Ordering::Relaxed))
        };

        // Hold the tick loop until the required audience is connected.
        while clients.len() < cfg.min_clients && !stopped() {
            accept_pending(&mut clients, &mut handles, &mut stats)?;
            std::thread::sleep(Duration::from_millis(1));
        }

        let start = Instant::now();
        let mut tick: u64 = 0;
        loop {
            if stopped() {
                break;
            }
            if let Some(max) = cfg.max_ticks {
                if tick >= max {
                    break;
                }
            }

            // Pick up new connections; the handshake runs on the client
            // thread so a slow peer cannot stall the tick loop.
            accept_pending(&mut clients, &mut handles, &mut stats)?;

            // Generate this tick's frames.
            let mut tick_bytes = Vec::new();
            let mut frames_this_tick = 0u64;
            for (i, profile) in profiles.iter().enumerate() {
                let readings = generate_reading(profile, &cfg.clock, tick, &mut rngs[i]);
                let sequence = sequences[i];
                sequences[i] = sequences[i].wrapping_add(1);
                let Some(faulted) = apply_fault(readings, &cfg.script, tick, profile.node_id)
                else {
                    continue;
                };
                let frame = RawFrame {
                    node_id: profile.node_id,
                    sequence,
                    timestamp_ms: cfg.clock.timestamp_ms(tick),
                    adc: AdcReadings::from_array(faulted),
                };
                let bytes = encode_frame(&frame).expect("generated readings are in range");
                tick_bytes.extend_from_slice(&bytes);
                frames_this_tick += 1;
            }
            stats.frames_emitted += frames_this_tick;
            if cfg.verbose {
                println!("tick {tick}: {frames_this_tick} frames");
            }

            if !tick_bytes.is_empty() {
                clients.retain(|client| match client.tx.try_send(tick_bytes.clone()) {
                    Ok(()) => true,
                    Err(TrySendError::Full(_)) | Err(TrySendError::Disconnected(_)) => {
                        stats.clients_dropped += 1;
                        false
                    }
                });
            }

            tick += 1;
            stats.ticks = tick;

            // Pace to the tick period from the loop start, skipping sleep
            // when behind.
            let next_deadline = start + Duration::from_millis(tick * cfg.clock.tick_ms);
            let now = Instant::now();
            if next_deadline > now {
                std::thread::sleep(next_deadline - now);
            }
        }

        // Close queues so client writers drain and exit.
        drop(clients);
        for handle in handles {
            let _ = handle.join();
        }
        Ok(stats)
    }
}

/// Connect to a simulator endpoint and perform the greeting handshake,
/// returning a stream positioned at the first frame byte.
pub fn connect(endpoint: &str) -> Result<TcpStream, SimError> {
    let stream = TcpStream::connect(endpoint)
        .map_err(io_err(format!("connecting to base station {endpoint}")))?;
    handshake(stream)
}

fn handshake(mut stream: TcpStream) -> Result<TcpStream, SimError> {
    writeln!(stream, "{GREETING}").map_err(io_err("sending greeting"))?;
    let mut reader = BufReader::new(
        stream
            .try_clone()
            .map_err(io_err("cloning stream for handshake"))?,
    );
    let mut reply = String::new();
    reader
        .read_line(&mut reply)
        .map_err(io_err("reading greeting reply"))?;
    if reply.trim() != GREETING_OK {
        return Err(SimError::InvalidConfig(format!(
            "base station refused access: {:?}",
            reply.trim()
        )));
    }
    Ok(stream)
}

/// Convenience for tests and the CLI: default profiles for nodes 1..=n.
pub fn standard_profiles(n: u8) -> Vec<NodeProfile> {
    (1..=n).map(NodeProfile::standard).collect()
}

/// Used by the CLI to resolve a script path argument.
pub fn load_script(path: Option<&PathBuf>) -> Result<FaultScript, SimError> {
    match path {
        Some(p) => FaultScript::load(p),
        None => Ok(FaultScript::empty()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{decode_frame, FrameScanner, ScanItem, FRAME_LEN};
    use std::io::Read;

    fn quiet_profile(node_id: u8) -> NodeProfile {
        let mut p = NodeProfile::standard(node_id);
        p.noise_sd = SensorLevels::uniform(0.0);
        p
    }

    #[test]
    fn zero_amplitude_zero_noise_is_constant() {
        let mut p = quiet_profile(1);
        p.amplitude = SensorLevels::uniform(0.0);
        let clock = SimClock::new(1000);
        let mut rng = node_rng(7, 1);
        let first = generate_reading(&p, &clock, 0, &mut rng);
        for tick in 1..50 {
            assert_eq!(generate_reading(&p, &clock, tick, &mut rng), first);
        }
        assert_eq!(first, [500, 512, 717, 717, 980]);
    }

    #[test]
    fn noiseless_noon_hits_baseline_plus_amplitude() {
        let p = quiet_profile(1);
        let clock = SimClock {
            tick_ms: 1000,
            sim_day_s: 86_400,
            base_ts_ms: 0,
        };
        let mut rng = node_rng(1, 1);
        // Noon is tick 43200 at one tick per second.
        let noon = generate_reading(&p, &clock, 43_200, &mut rng);
        assert_eq!(noon[0], 550);
        assert_eq!(noon[1], 542);
        let mut rng = node_rng(1, 1);
        let midnight = generate_reading(&p, &clock, 0, &mut rng);
        assert_eq!(midnight[0], 450);
        assert!(noon[0] > midnight[0]);
    }

    #[test]
    fn fixed_seed_reproduces_the_trace() {
        let p = NodeProfile::standard(3);
        let clock = SimClock::new(20);
        let mut a = node_rng(42, 3);
        let mut b = node_rng(42, 3);
        for tick in 0..200 {
            assert_eq!(
                generate_reading(&p, &clock, tick, &mut a),
                generate_reading(&p, &clock, tick, &mut b)
            );
        }
    }

    #[test]
    fn stuck_fault_pins_only_its_sensor() {
        let script = FaultScript::new(vec![FaultEvent {
            start_tick: 10,
            node_id: 2,
            sensor: Some(Sensor::Temperature),
            kind: FaultKind::Stuck(200),
        }])
        .unwrap();
        let readings = [500, 512, 717, 717, 980];
        assert_eq!(apply_fault(readings, &script, 9, 2).unwrap(), readings);
        let faulted = apply_fault(readings, &script, 10, 2).unwrap();
        assert_eq!(faulted, [500, 200, 717, 717, 980]);
        // Other nodes are untouched.
        assert_eq!(apply_fault(readings, &script, 10, 3).unwrap(), readings);
    }

    #[test]
    fn drift_fault_ramps_from_its_start() {
        let script = FaultScript::new(vec![FaultEvent {
            start_tick: 100,
            node_id: 1,
            sensor: Some(Sensor::Light),
            kind: FaultKind::Drift(1.0),
        }])
        .unwrap();
        let readings = [500, 512, 717, 717, 980];
        let at_150 = apply_fault(readings, &script, 150, 1).unwrap();
        assert_eq!(at_150[0], 550);
    }

    #[test]
    fn death_suppresses_all_later_frames() {
        let script = FaultScript::new(vec![FaultEvent {
            start_tick: 10,
            node_id: 4,
            sensor: None,
            kind: FaultKind::Death,
        }])
        .unwrap();
        assert!(apply_fault([0; 5], &script, 9, 4).is_some());
        assert!(apply_fault([0; 5], &script, 10, 4).is_none());
        assert!(apply_fault([0; 5], &script, 10_000, 4).is_none());
    }

    #[test]
    fn script_parse_round_trip_and_errors() {
        let script = FaultScript::parse(
            "# a comment\n\
             130 3 temperature stuck 200\n\
             \n\
             200 1 light drift 0.5   # trailing comment\n\
             300 2 - dropout 50\n\
             400 5 - death\n",
        )
        .unwrap();
        assert_eq!(script.events().len(), 4);
        assert_eq!(
            script.events()[0].kind,
            FaultKind::Stuck(200)
        );

        let err = FaultScript::parse("10 1 light dropout 5").unwrap_err();
        assert!(matches!(err, SimError::ScriptParse { line: 1, .. }));
        let err = FaultScript::parse("10 1 - stuck 5").unwrap_err();
        assert!(matches!(err, SimError::ScriptParse { line: 1, .. }));
        let err = FaultScript::parse("10 1 light wobble").unwrap_err();
        assert!(matches!(err, SimError::ScriptParse { line: 1, .. }));
    }

    #[test]
    fn duplicate_value_faults_are_rejected() {
        let err = FaultScript::parse(
            "10 1 light stuck 5\n\
             20 1 light drift 1.0\n",
        )
        .unwrap_err();
        assert!(matches!(err, SimError::OverlappingFaults { node_id: 1, .. }));
    }

    #[test]
    fn server_broadcasts_identical_streams_to_two_clients() {
        let clock = SimClock::new(5);
        let mut cfg = SimConfig::new(standard_profiles(3), clock);
        cfg.seed = 11;
        cfg.max_ticks = Some(20);
        cfg.min_clients = 2;
        let server = SimServer::bind("127.0.0.1:0", cfg).unwrap();
        let addr = server.local_addr().unwrap();

        let reader = |addr: SocketAddr| {
            move || -> Vec<u8> {
                let mut stream = connect(&addr.to_string()).unwrap();
                let mut bytes = Vec::new();
                stream.read_to_end(&mut bytes).unwrap();
                bytes
            }
        };
        let c1 = std::thread::spawn(reader(addr));
        let c2 = std::thread::spawn(reader(addr));
        let stats = server.run().unwrap();
        let b1 = c1.join().unwrap();
        let b2 = c2.join().unwrap();

        assert_eq!(stats.ticks, 20);
        assert_eq!(stats.clients_served, 2);
        assert_eq!(b1, b2, "broadcast streams must be identical");
        assert_eq!(b1.len() % FRAME_LEN, 0);
        let frames = b1.len() / FRAME_LEN;
        assert_eq!(frames, 60, "3 nodes x 20 ticks");
        // Every frame decodes.
        let mut scanner = FrameScanner::new();
        scanner.push(&b1);
        let mut decoded = 0;
        while let Some(item) = scanner.poll() {
            match item {
                ScanItem::Frame(_) => decoded += 1,
                ScanItem::Error(e) => panic!("undecodable frame in sim stream: {e}"),
            }
        }
        assert_eq!(decoded, frames);
    }

    #[test]
    fn dropout_leaves_sequence_gaps() {
        let clock = SimClock::new(1);
        let mut cfg = SimConfig::new(standard_profiles(3), clock);
        cfg.seed = 5;
        cfg.max_ticks = Some(30);
        cfg.min_clients = 1;
        cfg.script = FaultScript::parse("10 2 - dropout 3").unwrap();
        let server = SimServer::bind("127.0.0.1:0", cfg).unwrap();
        let addr = server.local_addr().unwrap();
        let client = std::thread::spawn(move || {
            let mut stream = connect(&addr.to_string()).unwrap();
            let mut bytes = Vec::new();
            stream.read_to_end(&mut bytes).unwrap();
            bytes
        });
        server.run().unwrap();
        let bytes = client.join().unwrap();

        let mut node2_seqs = Vec::new();
        for chunk in bytes.chunks(FRAME_LEN) {
            let frame = decode_frame(chunk).unwrap();
            if frame.node_id == 2 {
                node2_seqs.push(frame.sequence);
            }
        }
        assert_eq!(node2_seqs.len(), 27, "3 of 30 frames suppressed");
        for missing in [10u32, 11, 12] {
            assert!(!node2_seqs.contains(&missing));
        }
        // Other nodes keep a full sequence.
        let node1: Vec<u32> = bytes
            .chunks(FRAME_LEN)
            .map(|c| decode_frame(c).unwrap())
            .filter(|f| f.node_id == 1)
            .map(|f| f.sequence)
            .collect();
        assert_eq!(node1, (0..30).collect::<Vec<u32>>());
    }
}
