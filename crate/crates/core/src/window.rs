//! Per-node short and long sliding windows.
//!
//! Each node keeps a short buffer of raw per-tick instances and a long
//! buffer of per-group averages (one average per `avg_group` appends, the
//! production default being one per minute). Buffers report cycle
//! completion when they first fill; once full they slide, so they never
//! exceed their configured lengths. A rollover empties a buffer after the
//! caller has snapshot a training set from it.
//!
//! On disk each node owns three CSV files in the data directory:
//! `node_<id>_short.csv`, `node_<id>_long.csv`, and `node_<id>_pending.csv`
//! (the not-yet-averaged tail, kept so a reload restores the store
//! exactly). All share the header
//! `timestamp_ms,light_pct,temp_c,accel_x_g,accel_y_g,voltage_v` with
//! values at six decimal places, and are replaced atomically (temp file,
//! then rename).

use std::collections::VecDeque;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convert::{EngineeringInstance, Sensor};
use crate::regress::{Dataset, RegressError};

/// CSV header shared by all window files.
pub const CSV_HEADER: &str = "timestamp_ms,light_pct,temp_c,accel_x_g,accel_y_g,voltage_v";

/// Milliseconds per day, for the time-of-day feature.
const DAY_MS: u64 = 86_400_000;

/// Window dimensions. Defaults match production scale: one instance per
/// second for an hour in the short window, per-minute averages for a day in
/// the long window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowConfig {
    /// Sampling period in milliseconds.
    pub tick_ms: u64,
    /// Instances per short window.
    pub short_len: usize,
    /// Appends averaged into one long-window entry.
    pub avg_group: usize,
    /// Averages per long window.
    pub long_len: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            tick_ms: 1000,
            short_len: 3600,
            avg_group: 60,
            long_len: 1440,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<(), WindowError> {
        if self.tick_ms == 0 || self.short_len == 0 || self.avg_group == 0 || self.long_len == 0 {
            return Err(WindowError::InvalidConfig(
                "window dimensions must all be at least 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    Short,
    Long,
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WindowKind::Short => "short",
            WindowKind::Long => "long",
        })
    }
}

/// What one append did to the buffers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AppendOutcome {
    /// A full averaging group was folded into the long buffer.
    pub new_long_entry: bool,
    /// The short buffer reached its configured length with this append.
    pub short_cycle_complete: bool,
    /// The long buffer reached its configured length with this append.
    pub long_cycle_complete: bool,
}

#[derive(Debug, Error)]
pub enum WindowError {
    #[error("invalid window config: {0}")]
    InvalidConfig(String),
    #[error("instance for node {got} appended to store for node {expected}")]
    NodeMismatch { expected: u8, got: u8 },
    #[error("non-monotonic timestamp for node {node_id}: {next} after {prev}")]
    NonMonotonicTimestamp { node_id: u8, prev: u64, next: u64 },
    #[error("cannot average an empty group")]
    EmptyGroup,
    #[error("{kind} window incomplete: {have} of {need} entries")]
    IncompleteWindow {
        kind: WindowKind,
        have: usize,
        need: usize,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path} line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Regress(#[from] RegressError),
}

/// Short and long windows for one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStore {
    node_id: u8,
    config: WindowConfig,
    short: VecDeque<EngineeringInstance>,
    long: VecDeque<EngineeringInstance>,
    pending: Vec<EngineeringInstance>,
    last_ts: Option<u64>,
}

impl NodeStore {
    pub fn new(node_id: u8, config: WindowConfig) -> Result<Self, WindowError> {
        config.validate()?;
        Ok(Self {
            node_id,
            config,
            short: VecDeque::with_capacity(config.short_len),
            long: VecDeque::with_capacity(config.long_len),
            pending: Vec::with_capacity(config.avg_group),
            last_ts: None,
        })
    }

    pub fn node_id(&self) -> u8 {
        self.node_id
    }

    pub fn config(&self) -> &WindowConfig {
        &self.config
    }

    pub fn short(&self) -> &VecDeque<EngineeringInstance> {
        &self.short
    }

    pub fn long(&self) -> &VecDeque<EngineeringInstance> {
        &self.long
    }

    pub fn pending(&self) -> &[EngineeringInstance] {
        &self.pending
    }

    pub fn last_timestamp(&self) -> Option<u64> {
        self.last_ts
    }

    /// Append one instance. Timestamps must strictly increase per node.
    pub fn append(&mut self, inst: EngineeringInstance) -> Result<AppendOutcome, WindowError> {
        if inst.node_id != self.node_id {
            return Err(WindowError::NodeMismatch {
                expected: self.node_id,
                got: inst.node_id,
            });
        }
        if let Some(prev) = self.last_ts {
            if inst.timestamp_ms <= prev {
                return Err(WindowError::NonMonotonicTimestamp {
                    node_id: self.node_id,
                    prev,
                    next: inst.timestamp_ms,
                });
            }
        }
        self.last_ts = Some(inst.timestamp_ms);

        let mut outcome = AppendOutcome::default();

        let short_was_full = self.short.len() == self.config.short_len;
        if short_was_full {
            self.short.pop_front();
        }
        self.short.push_back(inst);
        outcome.short_cycle_complete =
            !short_was_full && self.short.len() == self.config.short_len;

        self.pending.push(inst);
        if self.pending.len() == self.config.avg_group {
            let avg = minute_average(&self.pending)?;
            self.pending.clear();
            let long_was_full = self.long.len() == self.config.long_len;
            if long_was_full {
                self.long.pop_front();
            }
            self.long.push_back(avg);
            outcome.new_long_entry = true;
            outcome.long_cycle_complete =
                !long_was_full && self.long.len() == self.config.long_len;
        }
        Ok(outcome)
    }

    fn buffer(&self, kind: WindowKind) -> (&VecDeque<EngineeringInstance>, usize) {
        match kind {
            WindowKind::Short => (&self.short, self.config.short_len),
            WindowKind::Long => (&self.long, self.config.long_len),
        }
    }

    /// Training rows for one sensor from a complete window: features are
    /// time-of-day plus the other sensors' observed values, the target is
    /// the named sensor. Row order matches buffer order.
    pub fn snapshot_training_set(
        &self,
        kind: WindowKind,
        target: Sensor,
    ) -> Result<Dataset, WindowError> {
        let (buf, need) = self.buffer(kind);
        if buf.len() < need {
            return Err(WindowError::IncompleteWindow {
                kind,
                have: buf.len(),
                need,
            });
        }
        let mut dataset = Dataset::new(feature_names_for_target(target));
        for inst in buf {
            dataset.push_row(features_for_target(inst, target), target.value_of(inst))?;
        }
        Ok(dataset)
    }

    /// Empty a completed window. The on-disk file is replaced on the next
    /// persist.
    pub fn rollover(&mut self, kind: WindowKind) -> Result<(), WindowError> {
        let (buf, need) = self.buffer(kind);
        if buf.len() < need {
            return Err(WindowError::IncompleteWindow {
                kind,
                have: buf.len(),
                need,
            });
        }
        match kind {
            WindowKind::Short => self.short.clear(),
            WindowKind::Long => self.long.clear(),
        }
        Ok(())
    }

    /// Write the three window CSV files for this node, atomically replacing
    /// previous contents.
    pub fn persist(&self, dir: &Path) -> Result<(), WindowError> {
        fs::create_dir_all(dir).map_err(|source| WindowError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        write_instances_csv(
            &dir.join(short_file_name(self.node_id)),
            self.short.iter(),
        )?;
        write_instances_csv(&dir.join(long_file_name(self.node_id)), self.long.iter())?;
        write_instances_csv(
            &dir.join(pending_file_name(self.node_id)),
            self.pending.iter(),
        )?;
        Ok(())
    }

    /// Reload a node store persisted by [`persist`](Self::persist). The
    /// pending file is optional; the short and long files must exist.
    pub fn load(dir: &Path, node_id: u8, config: WindowConfig) -> Result<Self, WindowError> {
        config.validate()?;
        let short = read_instances_csv(&dir.join(short_file_name(node_id)), node_id)?;
        let long = read_instances_csv(&dir.join(long_file_name(node_id)), node_id)?;
        let pending_path = dir.join(pending_file_name(node_id));
        let pending = if pending_path.exists() {
            read_instances_csv(&pending_path, node_id)?
        } else {
            Vec::new()
        };

        let last_ts = short
            .last()
            .into_iter()
            .chain(long.last())
            .chain(pending.last())
            .map(|i| i.timestamp_ms)
            .max();

        Ok(Self {
            node_id,
            config,
            short: short.into(),
            long: long.into(),
            pending,
            last_ts,
        })
    }
}

pub fn short_file_name(node_id: u8) -> String {
    format!("node_{node_id}_short.csv")
}

pub fn long_file_name(node_id: u8) -> String {
    format!("node_{node_id}_long.csv")
}

pub fn pending_file_name(node_id: u8) -> String {
    format!("node_{node_id}_pending.csv")
}

/// Arithmetic mean of each attribute over a group; the timestamp is the
/// last instance's, node identity is preserved.
pub fn minute_average(group: &[EngineeringInstance]) -> Result<EngineeringInstance, WindowError> {
    let last = group.last().ok_or(WindowError::EmptyGroup)?;
    let n = group.len() as f64;
    Ok(EngineeringInstance {
        node_id: last.node_id,
        timestamp_ms: last.timestamp_ms,
        light: group.iter().map(|i| i.light).sum::<f64>() / n,
        temperature: group.iter().map(|i| i.temperature).sum::<f64>() / n,
        accel_x: group.iter().map(|i| i.accel_x).sum::<f64>() / n,
        accel_y: group.iter().map(|i| i.accel_y).sum::<f64>() / n,
        voltage: group.iter().map(|i| i.voltage).sum::<f64>() / n,
    })
}

/// Seconds since midnight of an epoch-millisecond timestamp.
pub fn time_of_day_seconds(timestamp_ms: u64) -> f64 {
    (timestamp_ms % DAY_MS) as f64 / 1000.0
}

/// Feature vector used by every per-sensor model: time-of-day, then the
/// other four sensors' observed values in canonical order.
pub fn features_for_target(inst: &EngineeringInstance, target: Sensor) -> Vec<f64> {
    let mut features = Vec::with_capacity(Sensor::ALL.len());
    features.push(time_of_day_seconds(inst.timestamp_ms));
    for sensor in Sensor::ALL {
        if sensor != target {
            features.push(sensor.value_of(inst));
        }
    }
    features
}

pub fn feature_names_for_target(target: Sensor) -> Vec<String> {
    let mut names = Vec::with_capacity(Sensor::ALL.len());
    names.push("time_of_day_s".to_string());
    for sensor in Sensor::ALL {
        if sensor != target {
            names.push(sensor.column().to_string());
        }
    }
    names
}

fn format_instance(inst: &EngineeringInstance) -> String {
    format!(
        "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
        inst.timestamp_ms, inst.light, inst.temperature, inst.accel_x, inst.accel_y, inst.voltage
    )
}

/// Write instances as CSV, atomically (write `<path>.tmp`, then rename).
pub fn write_instances_csv<'a>(
    path: &Path,
    instances: impl Iterator<Item = &'a EngineeringInstance>,
) -> Result<(), WindowError> {
    let io_err = |source| WindowError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension("csv.tmp");
    {
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        writeln!(file, "{CSV_HEADER}").map_err(io_err)?;
        for inst in instances {
            writeln!(file, "{}", format_instance(inst)).map_err(io_err)?;
        }
        file.flush().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

/// Read a window CSV. The node id is taken from the caller because the file
/// format does not carry it. Timestamps must strictly increase; violations
/// and malformed rows are reported with their line number.
pub fn read_instances_csv(
    path: &Path,
    node_id: u8,
) -> Result<Vec<EngineeringInstance>, WindowError> {
    let file = fs::File::open(path).map_err(|source| WindowError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let parse_err = |line: usize, msg: String| WindowError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut instances = Vec::new();
    let mut last_ts: Option<u64> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| WindowError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line_no == 1 {
            if line.trim() != CSV_HEADER {
                return Err(parse_err(1, format!("expected header {CSV_HEADER:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(parse_err(
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        let timestamp_ms: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(line_no, format!("bad timestamp: {e}")))?;
        let mut values = [0.0f64; 5];
        for (i, v) in values.iter_mut().enumerate() {
            *v = fields[i + 1]
                .trim()
                .parse()
                .map_err(|e| parse_err(line_no, format!("bad value in field {}: {e}", i + 2)))?;
        }
        if let Some(prev) = last_ts {
            if timestamp_ms <= prev {
                return Err(parse_err(
                    line_no,
                    format!("timestamp {timestamp_ms} not after {prev}"),
                ));
            }
        }
        last_ts = Some(timestamp_ms);
        instances.push(EngineeringInstance {
            node_id,
            timestamp_ms,
            light: values[0],
            temperature: values[1],
            accel_x: values[2],
            accel_y: values[3],
            voltage: values[4],
        });
    }
    Ok(instances)
}
