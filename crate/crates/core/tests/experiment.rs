use std::fs;

use clusterduel::config::ExperimentConfig;
use clusterduel::experiment::{compare, load_synthetic_spec, run, synth, Dataset};
use clusterduel::policies::PolicyId;

const CONFIG: &str = r#"
[engine]
k = 2
policy = "e-greedy"
seed = 3
warmup_trials = 300
series_window = 200

[models]
hidden_layers = [8]

[schedule]
interval_trials = 200
minibatch_size = 100
steps_per_update = 3

[compare]
policies = ["random", "db-lr", "dbscan-db-mlp"]
k_values = [1, 2]
seeds = [1, 2, 3]

[data]
n_trials = 900

[synthetic]
n_items = 8
categorical_sizes = [3, 3]
n_continuous = 1
n_latent_segments = 3
seed = 5
"#;

fn setup() -> (ExperimentConfig, Dataset) {
    let config = ExperimentConfig::from_toml(CONFIG).unwrap();
    let data = Dataset::load(&config, None).unwrap();
    (config, data)
}

#[test]
fn run_writes_report_series_and_manifest() {
    let (config, data) = setup();
    let dir = tempfile::tempdir().unwrap();
    let art = run(&config, None, &data, dir.path()).unwrap();
    assert!(art.report_path.ends_with("report_e-greedy_k2_seed3.json"));
    assert!(art.series_path.ends_with("series_e-greedy_k2_seed3.csv"));
    assert!(art
        .manifest_path
        .ends_with("manifest_e-greedy_k2_seed3.json"));

    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(&art.report_path).unwrap()).unwrap();
    for key in [
        "avg_ctr",
        "precision_at_k",
        "hit_rate",
        "per_item_ctr",
        "relative_ctr_series",
        "items",
        "config",
    ] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    assert_eq!(report["n_trials"], 900);
    assert_eq!(report["eval_trials"], 270);

    let series = fs::read_to_string(&art.series_path).unwrap();
    let mut lines = series.lines();
    assert_eq!(
        lines.next().unwrap(),
        "window,start_trial,trials,avg_ctr,relative_ctr"
    );
    assert_eq!(lines.count(), 5);

    let manifest: serde_json::Value =
        serde_json::from_slice(&fs::read(&art.manifest_path).unwrap()).unwrap();
    assert_eq!(manifest["data_sha256"], data.fingerprint);
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);
    for out in manifest["outputs"].as_array().unwrap() {
        let path = dir.path().join(out["path"].as_str().unwrap());
        let bytes = fs::read(path).unwrap();
        assert_eq!(out["sha256"], clusterduel::experiment::sha256_hex(&bytes));
    }
}

#[test]
fn compare_covers_the_matrix_with_medians() {
    let (config, data) = setup();
    let dir = tempfile::tempdir().unwrap();
    let art = compare(&config, None, &data, dir.path()).unwrap();
    // 3 policies x 2 k x (3 seeds + median)
    assert_eq!(art.rows.len(), 24);
    assert_eq!(art.series_paths.len(), 18);
    let table = fs::read_to_string(&art.table_path).unwrap();
    assert_eq!(
        table.lines().next().unwrap(),
        "policy,k,seed,avg_ctr,precision_at_k,hit_rate,mean_candidates_scored"
    );
    for policy in [PolicyId::Random, PolicyId::DbLr, PolicyId::DbscanDbMlp] {
        for k in [1, 2] {
            let cell: Vec<_> = art
                .rows
                .iter()
                .filter(|r| r.policy == policy && r.k == k)
                .collect();
            assert_eq!(cell.len(), 4);
            let med = cell.iter().find(|r| r.seed == "median").unwrap();
            let mut ctr: Vec<f64> = cell
                .iter()
                .filter(|r| r.seed != "median")
                .map(|r| r.avg_ctr)
                .collect();
            ctr.sort_by(f64::total_cmp);
            assert_eq!(med.avg_ctr, ctr[1]);
        }
    }
    let clustered = art
        .rows
        .iter()
        .find(|r| r.policy == PolicyId::DbscanDbMlp && r.seed == "median")
        .unwrap();
    assert!(clustered.mean_candidates_scored <= 8.0);
    assert!(dir.path().join("compare_manifest.json").exists());
}

#[test]
fn synth_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("env.toml");
    fs::write(&spec_path, CONFIG).unwrap();
    let spec = load_synthetic_spec(&spec_path).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let sha_a = synth(&spec, 250, &a).unwrap();
    let sha_b = synth(&spec, 250, &b).unwrap();
    assert_eq!(sha_a, sha_b);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(fs::read_to_string(&a).unwrap().lines().count(), 251);

    // the written log replays to the same trials as the in-memory generator
    let from_csv = Dataset::from_csv_bytes(&fs::read(&a).unwrap(), None, "a").unwrap();
    let direct = Dataset::from_synthetic(&spec, 250, None).unwrap();
    assert_eq!(from_csv.trials, direct.trials);
}
