//! End-to-end flows through the public API and the `lfpp` binary.

use std::path::Path;
use std::process::Command;

use lfpp::harness::{
    export_results, ingest_events, read_results, run_grid, write_events_csv, write_labels_csv, Cell, ExperimentGrid,
    Method, Metric, ModelGenerator, ResultRow, ResultTable,
};
use lfpp::model::TransferKernel;
use lfpp::simulate::{simulate_cohort, ObservationTimes, SimulationPlan};
use lfpp::{EstimatorConfig, SpectralConfig};

fn cohort(n: usize, seed: u64) -> lfpp::Dataset {
    let model = ModelGenerator { d: 7, delta: 0.6, ..Default::default() }.build(seed).unwrap();
    simulate_cohort(&SimulationPlan {
        model,
        n,
        observation_times: ObservationTimes::PerPatient((0..n).map(|i| 20.0 + i as f64 * 0.37).collect()),
        seed,
        stratified: true,
        burn_in: None,
    })
    .unwrap()
}

#[test]
fn export_then_ingest_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = cohort(12, 4);
    let (events, labels) = (dir.path().join("e.csv"), dir.path().join("l.csv"));
    write_events_csv(&data, &events).unwrap();
    write_labels_csv(&data, &labels).unwrap();
    let back = ingest_events(&events, Some(&labels)).unwrap();
    assert_eq!(back, data);
}

fn tiny_grid() -> ExperimentGrid {
    ExperimentGrid {
        d: 6,
        n: vec![16, 24],
        t: vec![20.0, 30.0],
        delta: vec![0.0, 0.8],
        replications: 2,
        test_size: 10,
        estimator: EstimatorConfig { lag_grid_step: 0.5, ..Default::default() },
        spectral: SpectralConfig { frequency: 0.1, embed_dim: 2 },
        ..Default::default()
    }
}

#[test]
fn results_round_trip_and_figure_layout() {
    let dir = tempfile::tempdir().unwrap();
    let table = run_grid(&tiny_grid()).unwrap();
    let paths = export_results(&table, dir.path(), true).unwrap();
    assert_eq!(read_results(dir.path()).unwrap(), table);
    let svg = std::fs::read_to_string(dir.path().join("figure_auc_gauss.svg")).unwrap();
    assert_eq!(svg.matches(r#"<g class="panel">"#).count(), 2 * 2);
    assert_eq!(paths.len(), 3 + 2);
}

#[test]
fn single_row_table_exports_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let table = ResultTable {
        rows: vec![ResultRow {
            kernel: TransferKernel::Exp4,
            n: 10,
            t: 5.5,
            delta: 0.25,
            method: Method::Pmi,
            metric: Metric::Ari,
            mean: Some(0.125),
            se: None,
            replications: 1,
            failures: 0,
        }],
        ..Default::default()
    };
    export_results(&table, dir.path(), false).unwrap();
    let text = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert_eq!(read_results(dir.path()).unwrap(), table);
    assert!(export_results(&ResultTable::default(), dir.path(), false).is_err());
}

#[test]
fn grid_numbers_do_not_depend_on_thread_count() {
    let grid = tiny_grid();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_grid(&grid).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    let cell = Cell { kernel: TransferKernel::Gauss, n: 16, t: 20.0, delta: 0.8 };
    assert!(one.row(&cell, Method::Counts, Metric::Auc).unwrap().mean.is_some());
}

fn lfpp(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lfpp"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("bad.json"), r#"{"n": 10, "typo": true}"#).unwrap();
    assert_eq!(lfpp(p, &["simulate", "--config", "bad.json"]).status.code(), Some(2));
    std::fs::write(p.join("neg.json"), r#"{"n": 10, "generator": {"delta": 3.0}}"#).unwrap();
    assert_eq!(lfpp(p, &["simulate", "--config", "neg.json"]).status.code(), Some(2));
    std::fs::write(p.join("gap.csv"), "patient_id,code_index,event_time\na,0,1\na,2,2\n").unwrap();
    let out = lfpp(p, &["embed", "--events", "gap.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("remap"));

    std::fs::write(
        p.join("fail.json"),
        r#"{"d": 5, "n": [12], "t": [20.0], "delta": [0.8], "replications": 2, "test_size": 6,
            "methods": ["counts"], "logistic": {"reg": 1e-4, "tol": 1e-300, "max_iter": 1}}"#,
    )
    .unwrap();
    let out = lfpp(p, &["experiment", "--config", "fail.json", "--out-dir", "g", "--no-svg"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(std::fs::read_to_string(p.join("g/failures.csv")).unwrap().lines().count() > 1);

    std::fs::write(p.join("ok.json"), r#"{"generator": {"d": 5}, "n": 8, "observation_times": 15.0}"#).unwrap();
    let out = lfpp(p, &["simulate", "--config", "ok.json", "--out-dir", "sim"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(p.join("sim/events.csv").exists() && p.join("sim/labels.csv").exists());
}

#[test]
fn cli_embed_classify_cluster() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("train.json"), r#"{"generator": {"d": 6, "delta": 0.8}, "n": 40, "observation_times": 80.0, "seed": 1}"#).unwrap();
    std::fs::write(p.join("test.json"), r#"{"generator": {"d": 6, "delta": 0.8}, "coefficient_seed": 1, "n": 20, "observation_times": 80.0, "seed": 2}"#).unwrap();
    std::fs::write(p.join("embed.json"), r#"{"methods": ["counts"]}"#).unwrap();
    for (cfg, ev, lab) in [("train.json", "tr.csv", "trl.csv"), ("test.json", "te.csv", "tel.csv")] {
        assert!(lfpp(p, &["simulate", "--config", cfg, "--out", ev, "--labels", lab]).status.success());
    }
    for (ev, out) in [("tr.csv", "tr_emb.csv"), ("te.csv", "te_emb.csv")] {
        assert!(lfpp(p, &["embed", "--events", ev, "--config", "embed.json", "--out", out]).status.success());
    }
    let header = std::fs::read_to_string(p.join("tr_emb.csv")).unwrap();
    assert!(header.starts_with("patient_id,method,f_1,f_2,f_3,f_4,f_5,f_6\n"));

    let out = lfpp(
        p,
        &["classify", "--train", "tr_emb.csv", "--labels", "trl.csv", "--test", "te_emb.csv", "--test-labels", "tel.csv", "--out", "scores.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    let auc: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("auc [counts]: "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((0.0..=1.0).contains(&auc));
    assert_eq!(std::fs::read_to_string(p.join("scores.csv")).unwrap().lines().count(), 21);

    let out = lfpp(p, &["cluster", "--embeddings", "tr_emb.csv", "--labels", "trl.csv", "--out", "clusters.csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("ari [counts]: "));
    assert_eq!(std::fs::read_to_string(p.join("clusters.csv")).unwrap().lines().count(), 41);
}
