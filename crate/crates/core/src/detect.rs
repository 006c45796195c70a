//! Per-sensor deviation thresholds and the two-stage fault decision flow.
//!
//! For every incoming instance each sensor's short-window model predicts
//! its value from time-of-day plus the other sensors' observations. A
//! sensor breaches when the deviation percent exceeds its threshold:
//!
//! - no breaches: the instance is healthy;
//! - exactly one breach: if long-window models exist the sensor is
//!   re-checked against them and alerted only when the deviation persists
//!   (`LongConfirmed`); without long models the sensor is marked faulty
//!   immediately (`ShortOnlyNoLongModels`);
//! - two or more breaches: the whole node is suspect — reported as a
//!   [`NodeAnomalyEvent`] rather than per-sensor faults, since a common
//!   cause (environmental event, node failure) is more likely than
//!   simultaneous independent sensor faults.
//!
//! Alerts append to a JSON-lines log, one object per line.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::{EngineeringInstance, Sensor};
use crate::regress::{fit, Algorithm, FitParams, Predictor, RegressError};
use crate::window::{features_for_target, NodeStore, WindowError, WindowKind};

/// Default denominator guard for deviation percent.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Per-sensor deviation thresholds, in percent.
///
/// The temperature default is 5%; the rest are artifact defaults chosen to
/// the same order: 5% for voltage (also a slow-moving signal), 10% for
/// light and both accelerometer axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub light_pct: f64,
    pub temperature_pct: f64,
    pub accel_x_pct: f64,
    pub accel_y_pct: f64,
    pub voltage_pct: f64,
    /// Denominator guard: deviations divide by `max(|actual|, epsilon)`.
    pub epsilon: f64,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            light_pct: 10.0,
            temperature_pct: 5.0,
            accel_x_pct: 10.0,
            accel_y_pct: 10.0,
            voltage_pct: 5.0,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl ThresholdConfig {
    /// Same threshold for every sensor.
    pub fn uniform(pct: f64) -> Self {
        Self {
            light_pct: pct,
            temperature_pct: pct,
            accel_x_pct: pct,
            accel_y_pct: pct,
            voltage_pct: pct,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn threshold_for(&self, sensor: Sensor) -> f64 {
        match sensor {
            Sensor::Light => self.light_pct,
            Sensor::Temperature => self.temperature_pct,
            Sensor::AccelX => self.accel_x_pct,
            Sensor::AccelY => self.accel_y_pct,
            Sensor::Voltage => self.voltage_pct,
        }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        let all_positive = Sensor::ALL.iter().all(|s| self.threshold_for(*s) > 0.0);
        if !all_positive || self.epsilon <= 0.0 {
            return Err(DetectError::InvalidConfig(
                "thresholds and epsilon must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("invalid detector config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Window(#[from] WindowError),
    #[error(transparent)]
    Regress(#[from] RegressError),
    #[error("alert log {path}: {source}")]
    Log {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// `100 * |predicted - actual| / max(|actual|, epsilon)`.
pub fn deviation_percent(predicted: f64, actual: f64, epsilon: f64) -> f64 {
    100.0 * (predicted - actual).abs() / actual.abs().max(epsilon)
}

/// One fitted predictor per sensor for a (node, window). Immutable once
/// built; evaluations always see a complete set.
#[derive(Debug, Clone)]
pub struct ModelSet {
    node_id: u8,
    window: WindowKind,
    algorithm: Algorithm,
    built_at_ms: u64,
    predictors: Vec<(Sensor, Predictor)>,
}

impl ModelSet {
    pub fn node_id(&self) -> u8 {
        self.node_id
    }

    pub fn window(&self) -> WindowKind {
        self.window
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn built_at_ms(&self) -> u64 {
        self.built_at_ms
    }

    pub fn predictor_for(&self, sensor: Sensor) -> &Predictor {
        &self
            .predictors
            .iter()
            .find(|(s, _)| *s == sensor)
            .expect("one predictor per sensor by construction")
            .1
    }

    pub fn predictors(&self) -> impl Iterator<Item = (Sensor, &Predictor)> {
        self.predictors.iter().map(|(s, p)| (*s, p))
    }
}

/// Fit one predictor per sensor from a node's completed window.
pub fn rebuild_models(
    store: &NodeStore,
    window: WindowKind,
    algorithm: Algorithm,
    params: &FitParams,
) -> Result<ModelSet, DetectError> {
    let mut predictors = Vec::with_capacity(Sensor::ALL.len());
    for sensor in Sensor::ALL {
        let dataset = store.snapshot_training_set(window, sensor)?;
        predictors.push((sensor, fit(algorithm, &dataset, params)?));
    }
    let built_at_ms = store.last_timestamp().unwrap_or(0);
    Ok(ModelSet {
        node_id: store.node_id(),
        window,
        algorithm,
        built_at_ms,
        predictors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlertStage {
    /// Short-window breach with no long models yet: faulted immediately.
    ShortOnlyNoLongModels,
    /// Breached the short model and persisted against the long model.
    LongConfirmed,
}

/// A sensor fault report. `observed`, `predicted`, and `deviation_pct`
/// come from the short-window stage that triggered the check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub node_id: u8,
    pub sensor: Sensor,
    pub observed: f64,
    pub predicted: f64,
    pub deviation_pct: f64,
    pub stage: AlertStage,
    pub timestamp_ms: u64,
}

/// Two or more sensors breaching at once on one node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAnomalyEvent {
    pub node_id: u8,
    pub sensors: Vec<Sensor>,
    pub timestamp_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Ok,
    Alert(Alert),
    NodeAnomaly(NodeAnomalyEvent),
}

/// Run one instance through the decision flow described in the module docs.
pub fn evaluate_instance(
    inst: &EngineeringInstance,
    short: &ModelSet,
    long: Option<&ModelSet>,
    cfg: &ThresholdConfig,
) -> Result<Verdict, RegressError> {
    let mut breaches: Vec<(Sensor, f64, f64)> = Vec::new();
    for sensor in Sensor::ALL {
        let features = features_for_target(inst, sensor);
        let predicted = short.predictor_for(sensor).predict(&features)?;
        let observed = sensor.value_of(inst);
        let deviation = deviation_percent(predicted, observed, cfg.epsilon);
        if deviation > cfg.threshold_for(sensor) {
            breaches.push((sensor, predicted, deviation));
        }
    }

    match breaches.len() {
        0 => Ok(Verdict::Ok),
        1 => {
            let (sensor, predicted, deviation) = breaches[0];
            let observed = sensor.value_of(inst);
            let alert = Alert {
                node_id: inst.node_id,
                sensor,
                observed,
                predicted,
                deviation_pct: deviation,
                stage: AlertStage::ShortOnlyNoLongModels,
                timestamp_ms: inst.timestamp_ms,
            };
            match long {
                None => Ok(Verdict::Alert(alert)),
                Some(long_models) => {
                    let features = features_for_target(inst, sensor);
                    let long_predicted = long_models.predictor_for(sensor).predict(&features)?;
                    let long_deviation =
                        deviation_percent(long_predicted, observed, cfg.epsilon);
                    if long_deviation > cfg.threshold_for(sensor) {
                        Ok(Verdict::Alert(Alert {
                            stage: AlertStage::LongConfirmed,
                            ..alert
                        }))
                    } else {
                        // The long window knows this pattern; not a fault.
                        Ok(Verdict::Ok)
                    }
                }
            }
        }
        _ => Ok(Verdict::NodeAnomaly(NodeAnomalyEvent {
            node_id: inst.node_id,
            sensors: breaches.iter().map(|(s, _, _)| *s).collect(),
            timestamp_ms: inst.timestamp_ms,
        })),
    }
}

/// Node-level status derived from recent alert history.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeHealth {
    Healthy,
    SensorFault(Sensor),
    NodeSuspect,
}

impl std::fmt::Display for NodeHealth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeHealth::Healthy => write!(f, "healthy"),
            NodeHealth::SensorFault(s) => write!(f, "sensor fault: {s}"),
            NodeHealth::NodeSuspect => write!(f, "node suspect"),
        }
    }
}

/// Classify one node from its alert history within `horizon_ms` of
/// `now_ms`: any anomaly event or alerts across several sensors make the
/// node suspect; `min_alerts` repeated alerts on one sensor localize a
/// sensor fault; anything quieter is healthy.
pub fn node_health(
    alerts: &[Alert],
    anomalies: &[NodeAnomalyEvent],
    now_ms: u64,
    horizon_ms: u64,
    min_alerts: usize,
) -> NodeHealth {
    let cutoff = now_ms.saturating_sub(horizon_ms);
    let in_horizon = |ts: u64| ts >= cutoff && ts <= now_ms;

    if anomalies.iter().any(|e| in_horizon(e.timestamp_ms)) {
        return NodeHealth::NodeSuspect;
    }
    let recent: Vec<&Alert> = alerts
        .iter()
        .filter(|a| in_horizon(a.timestamp_ms))
        .collect();
    if recent.is_empty() {
        return NodeHealth::Healthy;
    }
    let first_sensor = recent[0].sensor;
    if recent.iter().any(|a| a.sensor != first_sensor) {
        return NodeHealth::NodeSuspect;
    }
    if recent.len() >= min_alerts {
        return NodeHealth::SensorFault(first_sensor);
    }
    NodeHealth::Healthy
}

/// Cooldown gate suppressing repeated alerts for the same (node, sensor)
/// within a quiet period, counted in per-node ingest ticks. Node anomaly
/// events are gated per node the same way. A quiet period of zero disables
/// suppression.
#[derive(Debug, Default)]
pub struct AlertGate {
    quiet_ticks: u64,
    last_alert: HashMap<(u8, Sensor), u64>,
    last_anomaly: HashMap<u8, u64>,
}

impl AlertGate {
    pub fn new(quiet_ticks: u64) -> Self {
        Self {
            quiet_ticks,
            ..Self::default()
        }
    }

    pub fn admit_alert(&mut self, node_id: u8, sensor: Sensor, tick: u64) -> bool {
        if self.quiet_ticks == 0 {
            return true;
        }
        match self.last_alert.get(&(node_id, sensor)) {
            Some(&last) if tick.saturating_sub(last) < self.quiet_ticks => false,
            _ => {
                self.last_alert.insert((node_id, sensor), tick);
                true
            }
        }
    }

    pub fn admit_anomaly(&mut self, node_id: u8, tick: u64) -> bool {
        if self.quiet_ticks == 0 {
            return true;
        }
        match self.last_anomaly.get(&node_id) {
            Some(&last) if tick.saturating_sub(last) < self.quiet_ticks => false,
            _ => {
                self.last_anomaly.insert(node_id, tick);
                true
            }
        }
    }
}

/// Append-only JSON-lines alert log. Alert lines carry the [`Alert`]
/// fields; node anomaly lines carry the [`NodeAnomalyEvent`] fields (the
/// two are distinguishable by their field sets).
#[derive(Debug)]
pub struct AlertLog {
    path: PathBuf,
    writer: BufWriter<File>,
}

impl AlertLog {
    pub fn open(path: &Path) -> Result<Self, DetectError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|source| DetectError::Log {
                path: path.to_path_buf(),
                source,
            })?;
        Ok(Self {
            path: path.to_path_buf(),
            writer: BufWriter::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn write_line(&mut self, line: &str) -> Result<(), DetectError> {
        let io_err = |source| DetectError::Log {
            path: self.path.clone(),
            source,
        };
        writeln!(self.writer, "{line}").map_err(io_err)?;
        self.writer.flush().map_err(io_err)
    }

    pub fn log_alert(&mut self, alert: &Alert) -> Result<(), DetectError> {
        let line = serde_json::to_string(alert).expect("alert serialization cannot fail");
        self.write_line(&line)
    }

    pub fn log_anomaly(&mut self, event: &NodeAnomalyEvent) -> Result<(), DetectError> {
        let line = serde_json::to_string(event).expect("event serialization cannot fail");
        self.write_line(&line)
    }
}

/// Human-readable one-line rendering used for stdout alert reporting.
pub fn format_alert(alert: &Alert) -> String {
    format!(
        "ALERT node {} sensor {} observed {:.4} predicted {:.4} deviation {:.2}% ({}) at {} ms",
        alert.node_id,
        alert.sensor,
        alert.observed,
        alert.predicted,
        alert.deviation_pct,
        match alert.stage {
            AlertStage::ShortOnlyNoLongModels => "short window, no long models",
            AlertStage::LongConfirmed => "confirmed by long window",
        },
        alert.timestamp_ms
    )
}

/// Human-readable rendering of a node anomaly event.
pub fn format_anomaly(event: &NodeAnomalyEvent) -> String {
    let sensors: Vec<&str> = event.sensors.iter().map(|s| s.name()).collect();
    format!(
        "NODE ANOMALY node {} sensors [{}] at {} ms",
        event.node_id,
        sensors.join(", "),
        event.timestamp_ms
    )
}
