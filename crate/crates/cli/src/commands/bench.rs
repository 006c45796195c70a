use anyhow::{anyhow, Context, Result};
use motewatch_core::bench::{run_bench, write_report_files, EnergyModel};
use motewatch_core::convert::Sensor;
use motewatch_core::regress::{Algorithm, Dataset, FitParams};
use motewatch_core::window::{feature_names_for_target, features_for_target, read_instances_csv};

use crate::config::FileConfig;
use crate::BenchArgs;

fn parse_algorithms(spec: &str) -> Result<Vec<Algorithm>> {
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(Algorithm::ALL.to_vec());
    }
    spec.split(',')
        .map(|token| token.trim().parse::<Algorithm>().map_err(|e| anyhow!(e)))
        .collect()
}

pub fn run(args: BenchArgs, file: &FileConfig, _verbose: u8) -> Result<()> {
    let target: Sensor = args
        .target
        .or_else(|| file.target.clone())
        .unwrap_or_else(|| "temperature".into())
        .parse()
        .map_err(|e: String| anyhow!(e))?;
    let algorithms = parse_algorithms(
        &args
            .algorithms
            .or_else(|| file.algorithm.clone())
            .unwrap_or_else(|| "all".into()),
    )?;
    let holdout = args.holdout.or(file.holdout).unwrap_or(0.3);
    let out_dir = args
        .out_dir
        .or_else(|| file.out_dir.clone())
        .unwrap_or_else(|| ".".into());

    let defaults = EnergyModel::default();
    let energy = EnergyModel {
        cpu_power_watts: args.cpu_w.or(file.cpu_w).unwrap_or(defaults.cpu_power_watts),
        radio_power_watts: args
            .radio_w
            .or(file.radio_w)
            .unwrap_or(defaults.radio_power_watts),
        radio_rate_bps: args
            .radio_bps
            .or(file.radio_bps)
            .unwrap_or(defaults.radio_rate_bps),
        message_bits: args
            .msg_bits
            .or(file.msg_bits)
            .unwrap_or(defaults.message_bits),
    };
    let fit_defaults = FitParams::default();
    let params = FitParams {
        knn_k: args.knn_k.or(file.knn_k).unwrap_or(fit_defaults.knn_k),
        table_bins: args
            .table_bins
            .or(file.table_bins)
            .unwrap_or(fit_defaults.table_bins),
        m5p_min_leaf: args
            .m5p_min_leaf
            .or(file.m5p_min_leaf)
            .unwrap_or(fit_defaults.m5p_min_leaf),
    };

    let instances = read_instances_csv(&args.data, 0)
        .with_context(|| format!("reading {}", args.data.display()))?;
    let mut dataset = Dataset::new(feature_names_for_target(target));
    for inst in &instances {
        dataset.push_row(features_for_target(inst, target), target.value_of(inst))?;
    }

    let report = run_bench(&dataset, &algorithms, holdout, &energy, &params)
        .context("running benchmark")?;

    println!(
        "benchmark over {} rows ({} train, {} test), target {target}",
        instances.len(),
        report.train_rows,
        report.test_rows
    );
    println!(
        "{:<18} {:>16} {:>16} {:>12} {:>12}",
        "algorithm", "predict_time_s", "energy_j", "error_pct", "fit_time_s"
    );
    for row in &report.results {
        println!(
            "{:<18} {:>16.9} {:>16.9} {:>12.4} {:>12.6}",
            row.algorithm.label(),
            row.predict_time_s,
            row.energy_j,
            row.error_rate_pct,
            row.fit_time_s
        );
    }

    write_report_files(&report, &out_dir).context("writing report CSVs")?;
    println!(
        "wrote {} and {}",
        out_dir.join("bench_report.csv").display(),
        out_dir.join("bench_histogram.csv").display()
    );
    Ok(())
}
