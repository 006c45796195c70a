//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (run with `cargo test --test acceptance -- --nocapture` to see
//! them). Expected values come from independent oracles written in this
//! file, never from the implementation under test.

use std::io::Read;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use motewatch_core::bench::{energy_per_instance, report_csv, run_bench, EnergyModel};
use motewatch_core::convert::{to_instance, AccelCalibration, EngineeringInstance, Sensor};
use motewatch_core::detect::{AlertStage, ThresholdConfig, Verdict};
use motewatch_core::engine::{EngineConfig, MonitorEngine, RebuildMode};
use motewatch_core::regress::{
    fit, fit_knn, fit_m5p, Algorithm, Dataset, FitParams, Predictor,
};
use motewatch_core::sim::{
    connect, generate_reading, node_rng, standard_profiles, FaultScript, NodeProfile, SimClock,
    SimConfig, SimServer,
};
use motewatch_core::window::{minute_average, NodeStore, WindowConfig};
use motewatch_core::wire::{
    crc16, decode_frame, encode_frame, AdcReadings, RawFrame, FRAME_LEN,
};

fn pass(line: &str) {
    println!("ACCEPTANCE {line}: PASS");
}

// --- criterion 1 ------------------------------------------------------

#[test]
fn c01_codec_roundtrip_and_corruption_detection() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0DEC);

    for i in 0..10_000u32 {
        let frame = RawFrame {
            node_id: rng.random(),
            sequence: rng.random(),
            timestamp_ms: rng.random(),
            adc: AdcReadings::from_array([
                rng.random_range(0..=1023),
                rng.random_range(0..=1023),
                rng.random_range(0..=1023),
                rng.random_range(0..=1023),
                rng.random_range(0..=1023),
            ]),
        };
        let bytes = encode_frame(&frame).unwrap();
        assert_eq!(bytes.len(), FRAME_LEN);
        assert_eq!(decode_frame(&bytes).unwrap(), frame, "round-trip {i}");
    }

    let fixed = RawFrame {
        node_id: 3,
        sequence: 12_345,
        timestamp_ms: 86_400_000,
        adc: AdcReadings::from_array([100, 512, 700, 717, 980]),
    };
    let bytes = encode_frame(&fixed).unwrap();
    for bit in 0..FRAME_LEN * 8 {
        let mut corrupted = bytes;
        corrupted[bit / 8] ^= 1 << (bit % 8);
        assert!(
            decode_frame(&corrupted).is_err(),
            "single-bit flip at {bit} was not detected"
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    pass("C1 codec round-trip and 224-bit corruption detection");
}

// --- criterion 2 ------------------------------------------------------

/// Bit-at-a-time shift register, independent of the table-driven
/// implementation: CRC-16/CCITT-FALSE.
fn crc16_bitwise_oracle(bytes: &[u8]) -> u16 {
    let mut crc: u16 = 0xFFFF;
    for &byte in bytes {
        crc ^= (byte as u16) << 8;
        for _ in 0..8 {
            crc = if crc & 0x8000 != 0 {
                (crc << 1) ^ 0x1021
            } else {
                crc << 1
            };
        }
    }
    crc
}

#[test]
fn c02_crc_check_value_matches_bitwise_oracle() {
    assert_eq!(crc16_bitwise_oracle(b"123456789"), 0x29B1);
    assert_eq!(crc16(b"123456789"), 0x29B1);

    let mut rng = ChaCha8Rng::seed_from_u64(0xCCC);
    for _ in 0..200 {
        let len = rng.random_range(0..64);
        let data: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        assert_eq!(crc16(&data), crc16_bitwise_oracle(&data));
        // Residue check: appending the big-endian CRC validates to zero.
        let mut with_crc = data.clone();
        with_crc.extend_from_slice(&crc16(&data).to_be_bytes());
        assert_eq!(crc16_bitwise_oracle(&with_crc), 0x0000);
    }
    pass("C2 crc16(\"123456789\") == 0x29B1 against a bitwise oracle");
}

// --- criterion 3 ------------------------------------------------------

fn random_dataset(rng: &mut ChaCha8Rng, rows: usize, feats: usize) -> Dataset {
    let names = (0..feats).map(|i| format!("f{i}")).collect();
    let coefs: Vec<f64> = (0..feats).map(|_| rng.random_range(-3.0..3.0)).collect();
    let intercept: f64 = rng.random_range(-5.0..5.0);
    Dataset::from_rows(
        names,
        (0..rows).map(|_| {
            let x: Vec<f64> = (0..feats).map(|_| rng.random_range(-5.0..5.0)).collect();
            let noise: f64 = rng.random_range(-1.0..1.0);
            let y = intercept
                + x.iter().zip(&coefs).map(|(a, b)| a * b).sum::<f64>()
                + noise;
            (x, y)
        }),
    )
    .unwrap()
}

/// Direct augmented normal equations (intercept column of ones) solved by
/// Gauss-Jordan with row pivoting; structurally independent of the
/// centered solver in the implementation.
#[allow(clippy::needless_range_loop)]
fn ols_oracle(d: &Dataset) -> Vec<f64> {
    let n = d.len();
    let p = d.arity() + 1;
    let mut a = vec![vec![0.0f64; p]; p];
    let mut b = vec![0.0f64; p];
    let aug = |row: &[f64], j: usize| if j == 0 { 1.0 } else { row[j - 1] };
    for i in 0..n {
        let row = d.row(i);
        for j in 0..p {
            b[j] += aug(row, j) * d.target(i);
            for k in 0..p {
                a[j][k] += aug(row, j) * aug(row, k);
            }
        }
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let scale = a[col][col];
        for k in 0..p {
            a[col][k] /= scale;
        }
        b[col] /= scale;
        for row in 0..p {
            if row != col && a[row][col] != 0.0 {
                let factor = a[row][col];
                for k in 0..p {
                    a[row][k] -= factor * a[col][k];
                }
                b[row] -= factor * b[col];
            }
        }
    }
    b
}

/// Enumerate every (feature, midpoint) split and return the minimum total
/// squared error, computed directly.
fn stump_oracle_min_sse(d: &Dataset) -> f64 {
    let n = d.len();
    let mean = |ys: &[f64]| ys.iter().sum::<f64>() / ys.len() as f64;
    let sse = |ys: &[f64]| {
        let m = mean(ys);
        ys.iter().map(|y| (y - m).powi(2)).sum::<f64>()
    };
    let all: Vec<f64> = (0..n).map(|i| d.target(i)).collect();
    let mut best = sse(&all);
    for f in 0..d.arity() {
        let mut values: Vec<f64> = (0..n).map(|i| d.row(i)[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let threshold = (w[0] + w[1]) / 2.0;
            let left: Vec<f64> = (0..n)
                .filter(|&i| d.row(i)[f] < threshold)
                .map(|i| d.target(i))
                .collect();
            let right: Vec<f64> = (0..n)
                .filter(|&i| d.row(i)[f] >= threshold)
                .map(|i| d.target(i))
                .collect();
            best = best.min(sse(&left) + sse(&right));
        }
    }
    best
}

/// Full-scan k-NN oracle: normalize independently, sort all distances,
/// break ties by row index, average the k targets.
fn knn_oracle(d: &Dataset, k: usize, query: &[f64]) -> f64 {
    let n = d.len();
    let p = d.arity();
    let mut min = vec![f64::INFINITY; p];
    let mut max = vec![f64::NEG_INFINITY; p];
    for i in 0..n {
        for (j, v) in d.row(i).iter().enumerate() {
            min[j] = min[j].min(*v);
            max[j] = max[j].max(*v);
        }
    }
    let norm = |row: &[f64]| -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, v)| {
                if max[j] > min[j] {
                    (v - min[j]) / (max[j] - min[j])
                } else {
                    0.0
                }
            })
            .collect()
    };
    let nq = norm(query);
    let mut scored: Vec<(f64, usize)> = (0..n)
        .map(|i| {
            let nr = norm(d.row(i));
            let d2: f64 = nr.iter().zip(&nq).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = scored[..k].iter().map(|(_, i)| *i).collect();
    chosen.sort_unstable();
    chosen.iter().map(|&i| d.target(i)).sum::<f64>() / k as f64
}

#[test]
fn c03_regressor_oracle_equivalence() {
    let start = Instant::now();
    let params = FitParams::default();

    // (a) OLS coefficients against the direct normal-equations oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(0x1331);
    for case in 0..100 {
        let rows = rng.random_range(5..=50);
        let feats = rng.random_range(1..=4);
        let d = random_dataset(&mut rng, rows, feats);
        let Predictor::LinearRegression(model) =
            fit(Algorithm::LinearRegression, &d, &params).unwrap()
        else {
            unreachable!()
        };
        let expected = ols_oracle(&d);
        assert!(
            (model.intercept() - expected[0]).abs() <= 1e-8,
            "case {case}: intercept {} vs {}",
            model.intercept(),
            expected[0]
        );
        for (j, coef) in model.coefficients().iter().enumerate() {
            assert!(
                (coef - expected[j + 1]).abs() <= 1e-8,
                "case {case}: coef {j}: {coef} vs {}",
                expected[j + 1]
            );
        }
    }

    // (b) Stump split SSE equals the exhaustive-enumeration minimum.
    let mut rng = ChaCha8Rng::seed_from_u64(0x57B);
    for case in 0..100 {
        let rows = rng.random_range(4..=40);
        let feats = rng.random_range(1..=3);
        let d = random_dataset(&mut rng, rows, feats);
        let predictor = fit(Algorithm::DecisionStump, &d, &params).unwrap();
        let fitted_sse: f64 = (0..d.len())
            .map(|i| (predictor.predict(d.row(i)).unwrap() - d.target(i)).powi(2))
            .sum();
        let oracle = stump_oracle_min_sse(&d);
        assert!(
            (fitted_sse - oracle).abs() <= 1e-9 * oracle.max(1.0),
            "case {case}: {fitted_sse} vs {oracle}"
        );
    }

    // (c) k-NN predictions identical to the full-scan oracle.
    let mut rng = ChaCha8Rng::seed_from_u64(0x4A4);
    for case in 0..100 {
        let rows = rng.random_range(6..=40);
        let feats = rng.random_range(1..=3);
        let d = random_dataset(&mut rng, rows, feats);
        for k in [1usize, 3, 5] {
            let predictor = fit_knn(&d, k).unwrap();
            for q in 0..5 {
                let query: Vec<f64> =
                    (0..feats).map(|_| rng.random_range(-6.0..6.0)).collect();
                let got = predictor.predict(&query).unwrap();
                let expected = knn_oracle(&d, k, &query);
                assert_eq!(got, expected, "case {case} k {k} query {q}");
            }
        }
    }

    // (d) M5P on exactly linear data reproduces targets after pruning.
    let linear = Dataset::from_rows(
        vec!["x".into()],
        (0..100).map(|i| {
            let x = i as f64 * 0.25;
            (vec![x], 2.0 * x + 1.0)
        }),
    )
    .unwrap();
    let tree = fit_m5p(&linear, 4).unwrap();
    for i in 0..100 {
        let x = i as f64 * 0.25;
        let got = tree.predict(&[x]).unwrap();
        assert!(
            (got - (2.0 * x + 1.0)).abs() <= 1e-8,
            "x={x}: {got} vs {}",
            2.0 * x + 1.0
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    pass("C3 regressor oracle equivalence (OLS, stump, k-NN, M5P)");
}

// --- criterion 4 ------------------------------------------------------

#[test]
fn c04_constant_targets_predict_the_constant_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x404);
    let d = Dataset::from_rows(
        vec!["a".into(), "b".into(), "c".into()],
        (0..40).map(|_| {
            (
                vec![
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                    rng.random_range(-10.0..10.0),
                ],
                7.0,
            )
        }),
    )
    .unwrap();

    for alg in Algorithm::ALL {
        let predictor = fit(alg, &d, &FitParams::default()).unwrap();
        for q in 0..100 {
            let query = [
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
                rng.random_range(-20.0..20.0),
            ];
            let got = predictor.predict(&query).unwrap();
            assert_eq!(got, 7.0, "{alg} query {q} returned {got}");
        }
    }
    pass("C4 constant-data sanity across all five algorithms");
}

// --- criterion 5 ------------------------------------------------------

#[test]
fn c05_windowing_arithmetic_at_scaled_dimensions() {
    let config = WindowConfig {
        tick_ms: 1000,
        short_len: 60,
        avg_group: 5,
        long_len: 24,
    };
    let mut store = NodeStore::new(1, config).unwrap();
    for k in 1..=60u64 {
        let inst = EngineeringInstance {
            node_id: 1,
            timestamp_ms: k * 1000,
            light: 50.0,
            temperature: k as f64,
            accel_x: 1.0,
            accel_y: 1.0,
            voltage: 1.25,
        };
        store.append(inst).unwrap();
    }
    assert_eq!(store.short().len(), 60);
    assert_eq!(store.long().len(), 12);

    let group: Vec<EngineeringInstance> = (1..=60u64)
        .map(|k| EngineeringInstance {
            node_id: 1,
            timestamp_ms: k,
            light: 0.0,
            temperature: k as f64,
            accel_x: 0.0,
            accel_y: 0.0,
            voltage: 1.0,
        })
        .collect();
    let avg = minute_average(&group).unwrap();
    assert_eq!(avg.temperature, 30.5);
    pass("C5 windowing arithmetic (60 appends -> 60 short / 12 long; mean 30.5)");
}

// --- criteria 6 and 7: live TCP scenarios -----------------------------

struct LiveRun {
    engine: MonitorEngine,
}

/// Run a simulator and a background-mode monitor engine end to end over
/// TCP, returning the engine after the stream ends.
fn live_run(
    profiles: Vec<NodeProfile>,
    script: FaultScript,
    tick_ms: u64,
    max_ticks: u64,
    seed: u64,
    engine_cfg: EngineConfig,
) -> LiveRun {
    let clock = SimClock::new(tick_ms);
    let mut sim_cfg = SimConfig::new(profiles, clock);
    sim_cfg.script = script;
    sim_cfg.seed = seed;
    sim_cfg.max_ticks = Some(max_ticks);
    sim_cfg.min_clients = 1;

    let server = SimServer::bind("127.0.0.1:0", sim_cfg).unwrap();
    let addr = server.local_addr().unwrap();
    let server_thread = std::thread::spawn(move || server.run().unwrap());

    let mut engine = MonitorEngine::new(engine_cfg).unwrap();
    let mut stream = connect(&addr.to_string()).unwrap();
    let mut scanner = motewatch_core::wire::FrameScanner::new();
    let mut buf = [0u8; 4096];
    loop {
        let n = stream.read(&mut buf).unwrap();
        if n == 0 {
            break;
        }
        scanner.push(&buf[..n]);
        while let Some(item) = scanner.poll() {
            match item {
                motewatch_core::wire::ScanItem::Frame(frame) => {
                    engine.ingest_frame(&frame).unwrap();
                }
                motewatch_core::wire::ScanItem::Error(e) => {
                    panic!("frame error in simulator stream: {e}");
                }
            }
        }
    }
    server_thread.join().unwrap();
    LiveRun { engine }
}

fn desk_scale_engine_config() -> EngineConfig {
    EngineConfig {
        window: WindowConfig {
            tick_ms: 20,
            short_len: 120,
            avg_group: 10,
            long_len: 36,
        },
        rebuild_mode: RebuildMode::Background,
        ..EngineConfig::default()
    }
}

#[test]
fn c06_end_to_end_stuck_sensor_alerts_within_thirty_ticks() {
    let start = Instant::now();
    let tick_ms = 20u64;
    let inject_tick = 130u64;
    // After the first short cycle (120 ticks); deadline 30 ticks later.
    let script = FaultScript::parse("130 3 temperature stuck 150").unwrap();

    let run = live_run(
        standard_profiles(5),
        script,
        tick_ms,
        200,
        42,
        desk_scale_engine_config(),
    );

    let alerts = run.engine.alert_history();
    let on_target: Vec<_> = alerts
        .iter()
        .filter(|a| a.node_id == 3 && a.sensor == Sensor::Temperature)
        .collect();
    assert!(
        !on_target.is_empty(),
        "no alert for node 3 temperature; alerts: {alerts:?}"
    );
    let deadline_ms = (inject_tick + 30) * tick_ms;
    assert!(
        on_target[0].timestamp_ms <= deadline_ms,
        "first alert at {} ms, deadline {deadline_ms} ms",
        on_target[0].timestamp_ms
    );
    let off_target = alerts
        .iter()
        .filter(|a| !(a.node_id == 3 && a.sensor == Sensor::Temperature))
        .count();
    assert_eq!(off_target, 0, "unexpected alerts: {alerts:?}");
    assert_eq!(run.engine.anomaly_history().len(), 0);

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(60), "took {elapsed:?}");
    pass("C6 end-to-end stuck-temperature alert on node 3 within 30 ticks");
}

#[test]
fn c07_no_false_positives_over_three_short_cycles() {
    // Three full short cycles plus slack, default thresholds, no faults.
    let run = live_run(
        standard_profiles(5),
        FaultScript::empty(),
        20,
        365,
        42,
        desk_scale_engine_config(),
    );
    let stats = run.engine.stats();
    assert!(stats.evaluated > 0, "nothing was evaluated");
    assert_eq!(
        stats.alerts, 0,
        "false positives: {:?}",
        run.engine.alert_history()
    );
    assert_eq!(stats.anomalies, 0);
    pass("C7 zero false positives over three healthy short cycles");
}

// --- criterion 8 ------------------------------------------------------

/// Two simulated days at 120 instances per day. Day 1 carries a morning
/// dip (first quarter of the day) inside the unevaluated first short
/// window; day 2 repeats the dip. The short models only ever see flat
/// segments, so the dip breaches them; the long models cover the full
/// day and predict the dip from time-of-day.
fn diurnal_shift_trace() -> Vec<EngineeringInstance> {
    let day = 120u64;
    (0..180u64)
        .map(|i| {
            let tod = i % day;
            let dip = tod < 30;
            EngineeringInstance {
                node_id: 1,
                timestamp_ms: i * 720_000,
                light: 50.0,
                temperature: if dip { 10.0 } else { 20.0 },
                accel_x: 1.0,
                accel_y: 1.0,
                voltage: 1.25,
            }
        })
        .collect()
}

fn veto_engine_config(use_long_window: bool) -> EngineConfig {
    EngineConfig {
        window: WindowConfig {
            tick_ms: 720_000,
            short_len: 60,
            avg_group: 5,
            long_len: 24,
        },
        quiet_ticks: 0,
        use_long_window,
        ..EngineConfig::default()
    }
}

#[test]
fn c08_long_window_vetoes_known_diurnal_shift() {
    // With long models: the day-2 dip matches the long model's pattern.
    let mut with_long = MonitorEngine::new(veto_engine_config(true)).unwrap();
    for inst in diurnal_shift_trace() {
        with_long.ingest(inst).unwrap();
    }
    assert_eq!(
        with_long.stats().alerts,
        0,
        "alerts despite long-window veto: {:?}",
        with_long.alert_history()
    );
    assert_eq!(with_long.stats().anomalies, 0);
    assert!(with_long.stats().evaluated > 0);

    // Without long models the same trace faults immediately at the dip.
    let mut without_long = MonitorEngine::new(veto_engine_config(false)).unwrap();
    let mut first_alert = None;
    for inst in diurnal_shift_trace() {
        if let Some(Verdict::Alert(alert)) = without_long.ingest(inst).unwrap() {
            first_alert.get_or_insert(alert);
        }
    }
    let alert = first_alert.expect("dip must alert when long models are absent");
    assert_eq!(alert.sensor, Sensor::Temperature);
    assert_eq!(alert.stage, AlertStage::ShortOnlyNoLongModels);
    assert_eq!(alert.timestamp_ms, 120 * 720_000, "alert at the dip start");
    pass("C8 long-window veto of a known diurnal shift");
}

// --- criterion 9 ------------------------------------------------------

#[test]
fn c09_bench_report_shape_and_linear_error_floor() {
    // Record a 500-row dataset through the window CSV format.
    let dir = tempfile::tempdir().unwrap();
    let profile = NodeProfile::standard(1);
    let clock = SimClock::new(1000);
    let mut rng = node_rng(9, 1);
    let cal = AccelCalibration::default();
    let instances: Vec<EngineeringInstance> = (0..500u64)
        .map(|tick| {
            let adc = generate_reading(&profile, &clock, tick, &mut rng);
            let frame = RawFrame {
                node_id: 1,
                sequence: tick as u32,
                timestamp_ms: clock.timestamp_ms(tick),
                adc: AdcReadings::from_array(adc),
            };
            to_instance(&frame, &cal).unwrap()
        })
        .collect();
    let csv_path = dir.path().join("node_1_short.csv");
    motewatch_core::window::write_instances_csv(&csv_path, instances.iter()).unwrap();
    let recorded = motewatch_core::window::read_instances_csv(&csv_path, 1).unwrap();
    assert_eq!(recorded.len(), 500);

    let target = Sensor::Temperature;
    let mut dataset =
        Dataset::new(motewatch_core::window::feature_names_for_target(target));
    for inst in &recorded {
        dataset
            .push_row(
                motewatch_core::window::features_for_target(inst, target),
                target.value_of(inst),
            )
            .unwrap();
    }
    let report = run_bench(
        &dataset,
        &Algorithm::ALL,
        0.3,
        &EnergyModel::default(),
        &FitParams::default(),
    )
    .unwrap();

    let csv = report_csv(&report);
    assert_eq!(csv.lines().count(), 6, "header plus five algorithm rows");
    for row in &report.results {
        assert_eq!(
            row.histogram.iter().sum::<u64>(),
            report.test_rows as u64,
            "{} histogram mass",
            row.algorithm
        );
    }

    // Perfectly linear data: LinearRegression error rate under 0.01%.
    let linear = Dataset::from_rows(
        vec!["a".into(), "b".into()],
        (0..500).map(|i| {
            let a = i as f64 * 0.25;
            let b = (i % 13) as f64;
            (vec![a, b], 40.0 + 2.0 * a - 3.0 * b)
        }),
    )
    .unwrap();
    let linear_report = run_bench(
        &linear,
        &[Algorithm::LinearRegression],
        0.3,
        &EnergyModel::default(),
        &FitParams::default(),
    )
    .unwrap();
    let error = linear_report.results[0].error_rate_pct;
    assert!(error < 0.01, "linear regression error {error}%");
    pass("C9 bench report shape and linear-data error floor");
}

// --- criterion 10 -----------------------------------------------------

#[test]
fn c10_energy_model_radio_floor() {
    let floor = energy_per_instance(0.0, &EnergyModel::default());
    let closed_form = 1.221 * 224e-6;
    assert!(
        (floor - closed_form).abs() < 1e-9,
        "{floor} vs {closed_form}"
    );
    pass("C10 energy radio-only floor matches the closed form");
}

// --- criterion 11 -----------------------------------------------------

/// Flat trace, then a mild temperature offset (deviation about 20%), then
/// a severe one (about 60%): the mild segment alerts only under the tight
/// thresholds.
fn faulty_trace() -> Vec<EngineeringInstance> {
    (0..120u64)
        .map(|i| {
            let temperature = match i {
                0..=59 => 25.0,
                60..=89 => 31.25,
                _ => 62.5,
            };
            EngineeringInstance {
                node_id: 1,
                timestamp_ms: (i + 1) * 1000,
                light: 50.0,
                temperature,
                accel_x: 1.0,
                accel_y: 1.0,
                voltage: 1.25,
            }
        })
        .collect()
}

fn replay_alert_set(threshold_pct: f64) -> Vec<(u64, u8, Sensor)> {
    let cfg = EngineConfig {
        window: WindowConfig {
            tick_ms: 1000,
            short_len: 60,
            avg_group: 5,
            long_len: 24,
        },
        thresholds: ThresholdConfig::uniform(threshold_pct),
        quiet_ticks: 0,
        ..EngineConfig::default()
    };
    let mut engine = MonitorEngine::new(cfg).unwrap();
    for inst in faulty_trace() {
        engine.ingest(inst).unwrap();
    }
    engine
        .alert_history()
        .iter()
        .map(|a| (a.timestamp_ms, a.node_id, a.sensor))
        .collect()
}

#[test]
fn c11_raising_thresholds_only_shrinks_the_alert_set() {
    let tight = replay_alert_set(5.0);
    let loose = replay_alert_set(50.0);
    assert!(!loose.is_empty(), "severe segment must alert at 50%");
    assert!(
        loose.len() < tight.len(),
        "tight run must catch the mild segment too"
    );
    for alert in &loose {
        assert!(
            tight.contains(alert),
            "alert {alert:?} appears only under looser thresholds"
        );
    }
    pass("C11 threshold monotonicity: 50% alert set is a subset of 5%");
}
