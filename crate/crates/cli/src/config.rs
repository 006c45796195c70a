//! Flat key=value config files.
//!
//! Lines are `key = value`; `#` starts a comment. Every key corresponds to
//! a command-line flag and flags always win over file values. Unknown keys
//! are rejected so typos fail loudly before anything starts.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};

/// Optional values read from a config file. `None` means the file did not
/// set the key.
#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    pub listen: Option<String>,
    pub connect: Option<String>,
    pub nodes: Option<u8>,
    pub seed: Option<u64>,
    pub tick_ms: Option<u64>,
    pub max_ticks: Option<u64>,
    pub sim_day_s: Option<u64>,
    pub base_ts_ms: Option<u64>,
    pub fault_script: Option<PathBuf>,
    pub short_len: Option<usize>,
    pub avg_group: Option<usize>,
    pub long_len: Option<usize>,
    pub algorithm: Option<String>,
    pub knn_k: Option<usize>,
    pub table_bins: Option<usize>,
    pub m5p_min_leaf: Option<usize>,
    pub th_light: Option<f64>,
    pub th_temp: Option<f64>,
    pub th_accel_x: Option<f64>,
    pub th_accel_y: Option<f64>,
    pub th_volt: Option<f64>,
    pub epsilon: Option<f64>,
    pub quiet_ticks: Option<u64>,
    pub no_long: Option<bool>,
    pub data_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub holdout: Option<f64>,
    pub target: Option<String>,
    pub cpu_w: Option<f64>,
    pub radio_w: Option<f64>,
    pub radio_bps: Option<f64>,
    pub msg_bits: Option<f64>,
    pub retries: Option<u32>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => Self::parse_file(p),
        }
    }

    fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: HashMap<String, (usize, String)> = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {line_no}: expected key = value"))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if entries.insert(key.clone(), (line_no, value)).is_some() {
                bail!("line {line_no}: duplicate key {key:?}");
            }
        }

        let mut cfg = Self::default();
        for (key, (line_no, value)) in entries {
            cfg.apply(&key, &value)
                .with_context(|| format!("line {line_no}: key {key:?}"))?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(value: &str) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| anyhow!("invalid value {value:?}: {e}"))
        }
        fn flag(value: &str) -> Result<bool> {
            match value.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                other => bail!("invalid boolean {other:?}"),
            }
        }

        match key {
            "listen" => self.listen = Some(value.to_string()),
            "connect" => self.connect = Some(value.to_string()),
            "nodes" => self.nodes = Some(num(value)?),
            "seed" => self.seed = Some(num(value)?),
            "tick_ms" => self.tick_ms = Some(num(value)?),
            "max_ticks" => self.max_ticks = Some(num(value)?),
            "sim_day_s" => self.sim_day_s = Some(num(value)?),
            "base_ts_ms" => self.base_ts_ms = Some(num(value)?),
            "fault_script" => self.fault_script = Some(PathBuf::from(value)),
            "short_len" => self.short_len = Some(num(value)?),
            "avg_group" => self.avg_group = Some(num(value)?),
            "long_len" => self.long_len = Some(num(value)?),
            "algorithm" => self.algorithm = Some(value.to_string()),
            "knn_k" => self.knn_k = Some(num(value)?),
            "table_bins" => self.table_bins = Some(num(value)?),
            "m5p_min_leaf" => self.m5p_min_leaf = Some(num(value)?),
            "th_light" => self.th_light = Some(num(value)?),
            "th_temp" => self.th_temp = Some(num(value)?),
            "th_accel_x" => self.th_accel_x = Some(num(value)?),
            "th_accel_y" => self.th_accel_y = Some(num(value)?),
            "th_volt" => self.th_volt = Some(num(value)?),
            "epsilon" => self.epsilon = Some(num(value)?),
            "quiet_ticks" => self.quiet_ticks = Some(num(value)?),
            "no_long" => self.no_long = Some(flag(value)?),
            "data_dir" => self.data_dir = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "out_dir" => self.out_dir = Some(PathBuf::from(value)),
            "holdout" => self.holdout = Some(num(value)?),
            "target" => self.target = Some(value.to_string()),
            "cpu_w" => self.cpu_w = Some(num(value)?),
            "radio_w" => self.radio_w = Some(num(value)?),
            "radio_bps" => self.radio_bps = Some(num(value)?),
            "msg_bits" => self.msg_bits = Some(num(value)?),
            "retries" => self.retries = Some(num(value)?),
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }
}
