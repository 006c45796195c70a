//! The streaming monitor: windows, periodic model rebuilds, and per-instance
//! evaluation wired together.
//!
//! Ingestion is single-threaded. Model rebuilds run either inline
//! (`Synchronous`, used by deterministic replays) or on a background worker
//! (`Background`, the live-monitor default): the ingestion path snapshots
//! an immutable training set at each cycle boundary, hands it to the
//! worker, and keeps evaluating with the previously published models —
//! it never waits on a fit. A finished [`ModelSet`] is published as one
//! atomic map insertion, so no evaluation ever sees a half-replaced set.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread::JoinHandle;
use std::time::Duration;

use thiserror::Error;

use crate::convert::{to_instance, AccelCalibration, ConvertError, EngineeringInstance};
use crate::detect::{
    evaluate_instance, node_health, rebuild_models, Alert, AlertGate, DetectError, ModelSet,
    NodeAnomalyEvent, NodeHealth, ThresholdConfig, Verdict,
};
use crate::regress::{model_file_name, save_model, Algorithm, FitParams, RegressError};
use crate::wire::RawFrame;
use crate::window::{NodeStore, WindowConfig, WindowError, WindowKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RebuildMode {
    /// Fit inline during ingest. Deterministic; used by replay.
    Synchronous,
    /// Fit on a background worker; ingestion never blocks on model builds.
    Background,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub window: WindowConfig,
    pub thresholds: ThresholdConfig,
    pub algorithm: Algorithm,
    pub fit_params: FitParams,
    pub calibration: AccelCalibration,
    /// Cooldown between repeated alerts for one (node, sensor), counted in
    /// per-node ingested instances. Zero disables suppression.
    pub quiet_ticks: u64,
    /// When false, long-window models are neither built nor consulted and
    /// short-stage breaches alert immediately.
    pub use_long_window: bool,
    /// Directory for window CSVs and model files; `None` disables
    /// persistence.
    pub data_dir: Option<PathBuf>,
    pub rebuild_mode: RebuildMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            window: WindowConfig::default(),
            thresholds: ThresholdConfig::default(),
            algorithm: Algorithm::DecisionStump,
            fit_params: FitParams::default(),
            calibration: AccelCalibration::default(),
            quiet_ticks: 60,
            use_long_window: true,
            data_dir: None,
            rebuild_mode: RebuildMode::Synchronous,
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error(transparent)]
    Convert(#[from] ConvertError),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error("background rebuild failed: {0}")]
    RebuildFailed(String),
    #[error("model rebuild worker is gone")]
    WorkerGone,
}

/// Counters exposed for operator summaries.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EngineStats {
    pub instances: u64,
    pub evaluated: u64,
    pub alerts: u64,
    pub suppressed_alerts: u64,
    pub anomalies: u64,
    pub suppressed_anomalies: u64,
    pub rebuilds: u64,
}

struct RebuildJob {
    window: WindowKind,
    store: NodeStore,
    algorithm: Algorithm,
    params: FitParams,
}

enum WorkerMsg {
    Job(Box<RebuildJob>),
    Shutdown,
}

pub struct MonitorEngine {
    cfg: EngineConfig,
    stores: BTreeMap<u8, NodeStore>,
    active: HashMap<(u8, WindowKind), ModelSet>,
    gate: AlertGate,
    node_ticks: BTreeMap<u8, u64>,
    stats: EngineStats,
    alert_history: Vec<Alert>,
    anomaly_history: Vec<NodeAnomalyEvent>,
    jobs_in_flight: usize,
    job_tx: Option<Sender<WorkerMsg>>,
    done_rx: Option<Receiver<Result<ModelSet, String>>>,
    worker: Option<JoinHandle<()>>,
}

impl MonitorEngine {
    pub fn new(cfg: EngineConfig) -> Result<Self, EngineError> {
        cfg.window.validate()?;
        cfg.thresholds.validate()?;

        let (job_tx, done_rx, worker) = match cfg.rebuild_mode {
            RebuildMode::Synchronous => (None, None, None),
            RebuildMode::Background => {
                let (job_tx, job_rx) = channel::<WorkerMsg>();
                let (done_tx, done_rx) = channel();
                let worker = std::thread::Builder::new()
                    .name("model-rebuild".into())
                    .spawn(move || {
                        while let Ok(WorkerMsg::Job(job)) = job_rx.recv() {
                            let result =
                                rebuild_models(&job.store, job.window, job.algorithm, &job.params)
                                    .map_err(|e| e.to_string());
                            if done_tx.send(result).is_err() {
                                break;
                            }
                        }
                    })
                    .expect("spawning the rebuild worker");
                (Some(job_tx), Some(done_rx), Some(worker))
            }
        };

        Ok(Self {
            gate: AlertGate::new(cfg.quiet_ticks),
            cfg,
            stores: BTreeMap::new(),
            active: HashMap::new(),
            node_ticks: BTreeMap::new(),
            stats: EngineStats::default(),
            alert_history: Vec::new(),
            anomaly_history: Vec::new(),
            jobs_in_flight: 0,
            job_tx,
            done_rx,
            worker,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn stats(&self) -> EngineStats {
        self.stats
    }

    pub fn node_ids(&self) -> Vec<u8> {
        self.stores.keys().copied().collect()
    }

    pub fn has_models(&self, node_id: u8, window: WindowKind) -> bool {
        self.active.contains_key(&(node_id, window))
    }

    pub fn alert_history(&self) -> &[Alert] {
        &self.alert_history
    }

    pub fn anomaly_history(&self) -> &[NodeAnomalyEvent] {
        &self.anomaly_history
    }

    /// Reload any window files found in the data directory for the given
    /// nodes. Returns how many stores were restored.
    pub fn load_persisted(&mut self, node_ids: &[u8]) -> Result<usize, EngineError> {
        let Some(dir) = self.cfg.data_dir.clone() else {
            return Ok(0);
        };
        let mut loaded = 0;
        for &node_id in node_ids {
            if dir.join(crate::window::short_file_name(node_id)).exists() {
                let store = NodeStore::load(&dir, node_id, self.cfg.window)?;
                self.stores.insert(node_id, store);
                loaded += 1;
            }
        }
        Ok(loaded)
    }

    /// Convert and ingest one decoded frame.
    pub fn ingest_frame(&mut self, frame: &RawFrame) -> Result<Option<Verdict>, EngineError> {
        let inst = to_instance(frame, &self.cfg.calibration)?;
        self.ingest(inst)
    }

    /// Ingest one instance: append to the node's windows, evaluate against
    /// the currently published models, and schedule rebuilds at cycle
    /// boundaries. Returns `None` when no short models exist yet for the
    /// node (nothing was evaluated).
    pub fn ingest(&mut self, inst: EngineeringInstance) -> Result<Option<Verdict>, EngineError> {
        let node_id = inst.node_id;
        if !self.stores.contains_key(&node_id) {
            self.stores
                .insert(node_id, NodeStore::new(node_id, self.cfg.window)?);
        }
        let outcome = self
            .stores
            .get_mut(&node_id)
            .expect("just inserted")
            .append(inst)?;
        self.stats.instances += 1;
        let tick_ref = self.node_ticks.entry(node_id).or_insert(0);
        *tick_ref += 1;
        let tick = *tick_ref;

        let raw_verdict = match self.active.get(&(node_id, WindowKind::Short)) {
            None => None,
            Some(short) => {
                let long = if self.cfg.use_long_window {
                    self.active.get(&(node_id, WindowKind::Long))
                } else {
                    None
                };
                Some(evaluate_instance(&inst, short, long, &self.cfg.thresholds)?)
            }
        };
        let verdict = raw_verdict.map(|v| {
            self.stats.evaluated += 1;
            self.gate_verdict(v, node_id, tick)
        });

        if outcome.short_cycle_complete || outcome.long_cycle_complete {
            if let Some(dir) = self.cfg.data_dir.clone() {
                self.stores[&node_id].persist(&dir)?;
            }
            if outcome.short_cycle_complete {
                self.schedule_rebuild(node_id, WindowKind::Short)?;
                self.stores
                    .get_mut(&node_id)
                    .expect("store exists")
                    .rollover(WindowKind::Short)?;
            }
            if outcome.long_cycle_complete {
                self.schedule_rebuild(node_id, WindowKind::Long)?;
                self.stores
                    .get_mut(&node_id)
                    .expect("store exists")
                    .rollover(WindowKind::Long)?;
            }
        }

        self.drain_completed_rebuilds()?;
        Ok(verdict)
    }

    fn gate_verdict(&mut self, verdict: Verdict, node_id: u8, tick: u64) -> Verdict {
        match verdict {
            Verdict::Alert(alert) => {
                if self.gate.admit_alert(node_id, alert.sensor, tick) {
                    self.stats.alerts += 1;
                    self.alert_history.push(alert.clone());
                    Verdict::Alert(alert)
                } else {
                    self.stats.suppressed_alerts += 1;
                    Verdict::Ok
                }
            }
            Verdict::NodeAnomaly(event) => {
                if self.gate.admit_anomaly(node_id, tick) {
                    self.stats.anomalies += 1;
                    self.anomaly_history.push(event.clone());
                    Verdict::NodeAnomaly(event)
                } else {
                    self.stats.suppressed_anomalies += 1;
                    Verdict::Ok
                }
            }
            Verdict::Ok => Verdict::Ok,
        }
    }

    fn schedule_rebuild(&mut self, node_id: u8, window: WindowKind) -> Result<(), EngineError> {
        if window == WindowKind::Long && !self.cfg.use_long_window {
            return Ok(());
        }
        // The clone is the immutable training snapshot: appends continue on
        // the live store while the fit runs.
        let store = self.stores[&node_id].clone();
        match self.cfg.rebuild_mode {
            RebuildMode::Synchronous => {
                let models =
                    rebuild_models(&store, window, self.cfg.algorithm, &self.cfg.fit_params)?;
                self.publish(models)?;
            }
            RebuildMode::Background => {
                let job = RebuildJob {
                    window,
                    store,
                    algorithm: self.cfg.algorithm,
                    params: self.cfg.fit_params,
                };
                self.job_tx
                    .as_ref()
                    .expect("background mode has a job channel")
                    .send(WorkerMsg::Job(Box::new(job)))
                    .map_err(|_| EngineError::WorkerGone)?;
                self.jobs_in_flight += 1;
            }
        }
        Ok(())
    }

    fn publish(&mut self, models: ModelSet) -> Result<(), EngineError> {
        if let Some(dir) = &self.cfg.data_dir {
            for (sensor, predictor) in models.predictors() {
                let name = model_file_name(models.node_id(), sensor, models.window());
                save_model(predictor, &dir.join(name))?;
            }
        }
        self.stats.rebuilds += 1;
        self.active
            .insert((models.node_id(), models.window()), models);
        Ok(())
    }

    /// Publish any background rebuilds that have finished. Non-blocking.
    pub fn drain_completed_rebuilds(&mut self) -> Result<(), EngineError> {
        let mut ready = Vec::new();
        if let Some(done_rx) = &self.done_rx {
            while let Ok(result) = done_rx.try_recv() {
                ready.push(result);
            }
        }
        for result in ready {
            self.jobs_in_flight -= 1;
            match result {
                Ok(models) => self.publish(models)?,
                Err(msg) => return Err(EngineError::RebuildFailed(msg)),
            }
        }
        Ok(())
    }

    /// Block until all in-flight background rebuilds publish or the timeout
    /// elapses. Returns whether everything landed.
    pub fn wait_for_rebuilds(&mut self, timeout: Duration) -> Result<bool, EngineError> {
        let deadline = std::time::Instant::now() + timeout;
        loop {
            self.drain_completed_rebuilds()?;
            if self.jobs_in_flight == 0 {
                return Ok(true);
            }
            if std::time::Instant::now() >= deadline {
                return Ok(false);
            }
            std::thread::sleep(Duration::from_millis(1));
        }
    }

    /// Persist every node's windows to the data directory.
    pub fn persist_all(&self) -> Result<(), EngineError> {
        if let Some(dir) = &self.cfg.data_dir {
            for store in self.stores.values() {
                store.persist(dir)?;
            }
        }
        Ok(())
    }

    /// Health classification per node over the trailing horizon.
    pub fn health_summary(&self, horizon_ms: u64, min_alerts: usize) -> Vec<(u8, NodeHealth)> {
        self.stores
            .iter()
            .map(|(&node_id, store)| {
                let now = store.last_timestamp().unwrap_or(0);
                let alerts: Vec<Alert> = self
                    .alert_history
                    .iter()
                    .filter(|a| a.node_id == node_id)
                    .cloned()
                    .collect();
                let anomalies: Vec<NodeAnomalyEvent> = self
                    .anomaly_history
                    .iter()
                    .filter(|e| e.node_id == node_id)
                    .cloned()
                    .collect();
                (
                    node_id,
                    node_health(&alerts, &anomalies, now, horizon_ms, min_alerts),
                )
            })
            .collect()
    }

    /// Shut down the background worker (if any) and persist windows.
    pub fn finish(mut self) -> Result<EngineStats, EngineError> {
        self.shutdown_worker();
        self.drain_completed_rebuilds()?;
        self.persist_all()?;
        Ok(self.stats)
    }

    fn shutdown_worker(&mut self) {
        if let Some(tx) = self.job_tx.take() {
            let _ = tx.send(WorkerMsg::Shutdown);
        }
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}

impl Drop for MonitorEngine {
    fn drop(&mut self) {
        self.shutdown_worker();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convert::Sensor;
    use crate::detect::AlertStage;

    fn instance(node_id: u8, ts: u64, values: [f64; 5]) -> EngineeringInstance {
        EngineeringInstance {
            node_id,
            timestamp_ms: ts,
            light: values[0],
            temperature: values[1],
            accel_x: values[2],
            accel_y: values[3],
            voltage: values[4],
        }
    }

    const BASE: [f64; 5] = [50.0, 25.0, 1.0, 1.0, 1.25];

    fn small_config() -> EngineConfig {
        EngineConfig {
            window: WindowConfig {
                tick_ms: 1000,
                short_len: 10,
                avg_group: 5,
                long_len: 4,
            },
            quiet_ticks: 0,
            ..EngineConfig::default()
        }
    }

    #[test]
    fn no_verdicts_before_first_short_cycle() {
        let mut engine = MonitorEngine::new(small_config()).unwrap();
        for k in 1..=10u64 {
            let v = engine.ingest(instance(1, k * 1000, BASE)).unwrap();
            assert!(v.is_none(), "evaluated before models existed (k={k})");
        }
        // Models exist now; the next instance is evaluated.
        let v = engine.ingest(instance(1, 11_000, BASE)).unwrap();
        assert_eq!(v, Some(Verdict::Ok));
        assert!(engine.has_models(1, WindowKind::Short));
    }

    #[test]
    fn healthy_stream_stays_quiet_and_faulty_sensor_alerts() {
        let mut engine = MonitorEngine::new(small_config()).unwrap();
        for k in 1..=15u64 {
            let v = engine.ingest(instance(1, k * 1000, BASE)).unwrap();
            assert!(!matches!(v, Some(Verdict::Alert(_))));
        }
        let mut faulty = BASE;
        faulty[1] = 40.0;
        let v = engine.ingest(instance(1, 16_000, faulty)).unwrap();
        match v {
            Some(Verdict::Alert(a)) => {
                assert_eq!(a.sensor, Sensor::Temperature);
                assert_eq!(a.node_id, 1);
                assert_eq!(a.stage, AlertStage::ShortOnlyNoLongModels);
            }
            other => panic!("expected temperature alert, got {other:?}"),
        }
        assert_eq!(engine.stats().alerts, 1);
    }

    #[test]
    fn long_models_appear_after_a_full_long_cycle() {
        // long cycle = avg_group * long_len = 20 appends.
        let mut engine = MonitorEngine::new(small_config()).unwrap();
        for k in 1..=20u64 {
            engine.ingest(instance(1, k * 1000, BASE)).unwrap();
        }
        assert!(engine.has_models(1, WindowKind::Long));
    }

    #[test]
    fn cooldown_suppresses_repeat_alerts() {
        let mut cfg = small_config();
        cfg.quiet_ticks = 100;
        let mut engine = MonitorEngine::new(cfg).unwrap();
        for k in 1..=10u64 {
            engine.ingest(instance(1, k * 1000, BASE)).unwrap();
        }
        let mut faulty = BASE;
        faulty[1] = 40.0;
        let mut alerts = 0;
        for k in 11..=20u64 {
            if let Some(Verdict::Alert(_)) = engine.ingest(instance(1, k * 1000, faulty)).unwrap()
            {
                alerts += 1;
            }
        }
        assert_eq!(alerts, 1, "cooldown should leave exactly one alert");
        assert_eq!(engine.stats().suppressed_alerts, 9);
    }

    #[test]
    fn background_mode_publishes_rebuilds_without_blocking_ingest() {
        let mut cfg = small_config();
        cfg.rebuild_mode = RebuildMode::Background;
        let mut engine = MonitorEngine::new(cfg).unwrap();
        for k in 1..=10u64 {
            engine.ingest(instance(1, k * 1000, BASE)).unwrap();
        }
        assert!(engine.wait_for_rebuilds(Duration::from_secs(10)).unwrap());
        assert!(engine.has_models(1, WindowKind::Short));
        let v = engine.ingest(instance(1, 11_000, BASE)).unwrap();
        assert_eq!(v, Some(Verdict::Ok));
        engine.finish().unwrap();
    }

    #[test]
    fn windows_persist_and_reload_across_engines() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config();
        cfg.data_dir = Some(dir.path().to_path_buf());
        let mut engine = MonitorEngine::new(cfg.clone()).unwrap();
        for k in 1..=7u64 {
            engine.ingest(instance(4, k * 1000, BASE)).unwrap();
        }
        engine.persist_all().unwrap();
        drop(engine);

        let mut restored = MonitorEngine::new(cfg).unwrap();
        assert_eq!(restored.load_persisted(&[4]).unwrap(), 1);
        // The reloaded store continues from the persisted timestamps.
        let v = restored.ingest(instance(4, 8000, BASE)).unwrap();
        assert!(v.is_none());
        let err = restored.ingest(instance(4, 500, BASE));
        assert!(matches!(
            err,
            Err(EngineError::Window(WindowError::NonMonotonicTimestamp { .. }))
        ));
    }

    #[test]
    fn model_files_are_written_at_rebuild() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config();
        cfg.data_dir = Some(dir.path().to_path_buf());
        let mut engine = MonitorEngine::new(cfg).unwrap();
        for k in 1..=10u64 {
            engine.ingest(instance(2, k * 1000, BASE)).unwrap();
        }
        let model_path = dir
            .path()
            .join(model_file_name(2, Sensor::Temperature, WindowKind::Short));
        assert!(model_path.exists(), "missing {model_path:?}");
        assert!(crate::regress::load_model(&model_path).is_ok());
    }
}
