pub mod bench;
pub mod monitor;
pub mod replay;
pub mod simulate;

use anyhow::{anyhow, Result};
use motewatch_core::detect::ThresholdConfig;
use motewatch_core::engine::EngineConfig;
use motewatch_core::regress::{Algorithm, FitParams};
use motewatch_core::window::WindowConfig;

use crate::config::FileConfig;
use crate::DetectorArgs;

/// Merge detector flags over file values over defaults into an engine
/// config. The rebuild mode is the caller's choice.
pub fn resolve_engine_config(
    args: &DetectorArgs,
    file: &FileConfig,
) -> Result<EngineConfig> {
    let defaults = EngineConfig::default();
    let window_defaults = WindowConfig::default();
    let threshold_defaults = ThresholdConfig::default();
    let fit_defaults = FitParams::default();

    let algorithm = match args.algorithm.clone().or_else(|| file.algorithm.clone()) {
        Some(name) => name.parse::<Algorithm>().map_err(|e| anyhow!(e))?,
        None => defaults.algorithm,
    };

    Ok(EngineConfig {
        window: WindowConfig {
            tick_ms: window_defaults.tick_ms,
            short_len: args
                .short_len
                .or(file.short_len)
                .unwrap_or(window_defaults.short_len),
            avg_group: args
                .avg_group
                .or(file.avg_group)
                .unwrap_or(window_defaults.avg_group),
            long_len: args
                .long_len
                .or(file.long_len)
                .unwrap_or(window_defaults.long_len),
        },
        thresholds: ThresholdConfig {
            light_pct: args
                .th_light
                .or(file.th_light)
                .unwrap_or(threshold_defaults.light_pct),
            temperature_pct: args
                .th_temp
                .or(file.th_temp)
                .unwrap_or(threshold_defaults.temperature_pct),
            accel_x_pct: args
                .th_accel_x
                .or(file.th_accel_x)
                .unwrap_or(threshold_defaults.accel_x_pct),
            accel_y_pct: args
                .th_accel_y
                .or(file.th_accel_y)
                .unwrap_or(threshold_defaults.accel_y_pct),
            voltage_pct: args
                .th_volt
                .or(file.th_volt)
                .unwrap_or(threshold_defaults.voltage_pct),
            epsilon: args
                .epsilon
                .or(file.epsilon)
                .unwrap_or(threshold_defaults.epsilon),
        },
        algorithm,
        fit_params: FitParams {
            knn_k: args.knn_k.or(file.knn_k).unwrap_or(fit_defaults.knn_k),
            table_bins: args
                .table_bins
                .or(file.table_bins)
                .unwrap_or(fit_defaults.table_bins),
            m5p_min_leaf: args
                .m5p_min_leaf
                .or(file.m5p_min_leaf)
                .unwrap_or(fit_defaults.m5p_min_leaf),
        },
        quiet_ticks: args
            .quiet_ticks
            .or(file.quiet_ticks)
            .unwrap_or(defaults.quiet_ticks),
        use_long_window: !(args.no_long || file.no_long.unwrap_or(false)),
        data_dir: args.data_dir.clone().or_else(|| file.data_dir.clone()),
        ..defaults
    })
}
