//! File-level orchestration behind the `run`, `compare` and `synth`
//! commands: data loading, report/series/manifest writing and the policy
//! comparison matrix.
//!
//! Output names embed policy, k and seed, e.g. `report_db-mlp_k1_seed7.json`
//! and `series_db-mlp_k1_seed7.csv`. Series CSV columns:
//! `window,start_trial,trials,avg_ctr,relative_ctr`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::dataio::{
    fit_schema, generate_synthetic, read_csv_from, stream, write_csv_to, EncodedTrial, Encoder,
    SyntheticEnvSpec,
};
use crate::engine::{run_replay_with, EngineConfig, MetricsReport, SeriesPoint};
use crate::par::{self, Exec};
use crate::policies::PolicyId;
use crate::{Error, Result};

/// An encoded, ordered replay stream plus its provenance.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub trials: Vec<EncodedTrial>,
    pub item_names: Vec<String>,
    pub context_dim: usize,
    /// SHA-256 of the CSV bytes the trials were read from.
    pub fingerprint: String,
    pub source: String,
}

impl Dataset {
    pub fn n_items(&self) -> usize {
        self.item_names.len()
    }

    /// Parses CSV bytes, fits the schema and orders the stream.
    pub fn from_csv_bytes(
        bytes: &[u8],
        shuffle_seed: Option<u64>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let raws = read_csv_from(bytes)?;
        let schema = fit_schema(&raws)?;
        let item_names = schema.item_vocabulary.clone();
        let context_dim = schema.context_dim;
        let encoded = Encoder::new(schema).encode_all(&raws)?;
        Ok(Self {
            trials: stream(encoded, shuffle_seed).collect(),
            item_names,
            context_dim,
            fingerprint: sha256_hex(bytes),
            source: source.into(),
        })
    }

    pub fn from_synthetic(
        spec: &SyntheticEnvSpec,
        n_trials: usize,
        shuffle_seed: Option<u64>,
    ) -> Result<Self> {
        let bytes = synth_bytes(spec, n_trials)?;
        Self::from_csv_bytes(
            &bytes,
            shuffle_seed,
            format!("synthetic(seed={}, n={n_trials})", spec.seed),
        )
    }

    /// `data` overrides the config's CSV path; without either, generates
    /// from the `[synthetic]` table.
    pub fn load(config: &ExperimentConfig, data: Option<&Path>) -> Result<Self> {
        let shuffle = config.data.shuffle_seed;
        if let Some(path) = data.or(config.data.path.as_deref()) {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            return Self::from_csv_bytes(&bytes, shuffle, path.display().to_string());
        }
        match (&config.synthetic, config.data.n_trials) {
            (Some(spec), Some(n)) => Self::from_synthetic(spec, n, shuffle),
            _ => Err(Error::config(
                "no data source: pass --data, set data.path, or give [synthetic] with data.n_trials",
            )),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn synth_bytes(spec: &SyntheticEnvSpec, n_trials: usize) -> Result<Vec<u8>> {
    spec.validate()?;
    let rows = generate_synthetic(spec, n_trials)?;
    let mut bytes = Vec::new();
    write_csv_to(&mut bytes, &rows)?;
    Ok(bytes)
}

/// Report file layout: the metrics plus the item names behind the indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub items: Vec<String>,
    #[serde(flatten)]
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: PathBuf,
    pub sha256: String,
}

/// Everything needed to reproduce a set of outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub data_source: String,
    pub data_sha256: String,
    pub outputs: Vec<OutputFile>,
    pub duration_ms: u128,
    pub version: String,
}

fn stem(policy: PolicyId, k: usize, seed: u64) -> String {
    format!("{policy}_k{k}_seed{seed}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<OutputFile> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    Ok(OutputFile {
        path: path.to_path_buf(),
        sha256: sha256_hex(bytes),
    })
}

pub fn series_csv(series: &[SeriesPoint]) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for p in series {
        wtr.serialize(p)?;
    }
    if series.is_empty() {
        wtr.write_record(["window", "start_trial", "trials", "avg_ctr", "relative_ctr"])?;
    }
    wtr.into_inner()
        .map_err(|e| Error::io("<series>", e.into_error()))
}

fn report_json(report: &MetricsReport, data: &Dataset) -> Result<Vec<u8>> {
    let file = ReportFile {
        items: data.item_names.clone(),
        metrics: report.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&file)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_manifest(
    out_dir: &Path,
    name: &str,
    mut manifest: RunManifest,
    started: Instant,
) -> Result<PathBuf> {
    manifest.duration_ms = started.elapsed().as_millis();
    let path = out_dir.join(name);
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn manifest(
    command: &str,
    config_path: Option<&Path>,
    config: &ExperimentConfig,
    data: &Dataset,
) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        config_path: config_path.map(Path::to_path_buf),
        config: config.clone(),
        data_source: data.source.clone(),
        data_sha256: data.fingerprint.clone(),
        outputs: Vec::new(),
        duration_ms: 0,
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub report: MetricsReport,
    pub report_path: PathBuf,
    pub series_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Single replay run: report JSON, series CSV and manifest in `out_dir`.
pub fn run(
    config: &ExperimentConfig,
    config_path: Option<&Path>,
    data: &Dataset,
    out_dir: &Path,
) -> Result<RunArtifacts> {
    let started = Instant::now();
    let engine = config.engine_config();
    let run = run_replay_with(
        &data.trials,
        data.n_items(),
        data.context_dim,
        &engine,
        Exec::default(),
    )?;
    ensure_dir(out_dir)?;
    let stem = stem(engine.policy, engine.k, engine.seed);
    let report_path = out_dir.join(format!("report_{stem}.json"));
    let series_path = out_dir.join(format!("series_{stem}.csv"));
    let mut m = manifest("run", config_path, config, data);
    m.outputs
        .push(write_file(&report_path, &report_json(&run.report, data)?)?);
    m.outputs.push(write_file(
        &series_path,
        &series_csv(&run.report.relative_ctr_series)?,
    )?);
    let manifest_path = write_manifest(out_dir, &format!("manifest_{stem}.json"), m, started)?;
    log::info!(
        "{}: avg_ctr={:.4} precision@{}={:.4}",
        engine.policy,
        run.report.avg_ctr,
        engine.k,
        run.report.precision_at_k
    );
    Ok(RunArtifacts {
        report: run.report,
        report_path,
        series_path,
        manifest_path,
    })
}

/// One row of the comparison table; `seed` is `median` for summary rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub policy: PolicyId,
    pub k: usize,
    pub seed: String,
    pub avg_ctr: f64,
    pub precision_at_k: f64,
    pub hit_rate: f64,
    pub mean_candidates_scored: f64,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => v[n / 2],
        _ => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Every (policy, k, seed) cell on the same stream.
pub fn compare_reports(config: &ExperimentConfig, data: &Dataset) -> Result<Vec<MetricsReport>> {
    let mut cells: Vec<EngineConfig> = Vec::new();
    for &policy in &config.compare.policies {
        for &k in &config.compare_k_values() {
            for &seed in &config.compare_seeds() {
                cells.push(config.cell_config(policy, k, seed));
            }
        }
    }
    let inner = if cells.len() > 1 {
        Exec::Sequential
    } else {
        Exec::default()
    };
    par::map_slice(Exec::default(), &cells, |cell| {
        log::debug!("cell {} k={} seed={}", cell.policy, cell.k, cell.seed);
        run_replay_with(&data.trials, data.n_items(), data.context_dim, cell, inner)
            .map(|r| r.report)
    })
    .into_iter()
    .collect()
}

/// Per-seed rows followed by a median row, for each (policy, k).
pub fn compare_table(reports: &[MetricsReport]) -> Vec<CompareRow> {
    let mut rows = Vec::new();
    let mut i = 0;
    while i < reports.len() {
        let (policy, k) = (reports[i].policy, reports[i].k);
        let group: Vec<&MetricsReport> = reports[i..]
            .iter()
            .take_while(|r| r.policy == policy && r.k == k)
            .collect();
        i += group.len();
        for r in &group {
            rows.push(CompareRow {
                policy,
                k,
                seed: r.seed.to_string(),
                avg_ctr: r.avg_ctr,
                precision_at_k: r.precision_at_k,
                hit_rate: r.hit_rate,
                mean_candidates_scored: r.mean_candidates_scored,
            });
        }
        let col =
            |f: fn(&MetricsReport) -> f64| median(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
        rows.push(CompareRow {
            policy,
            k,
            seed: "median".to_string(),
            avg_ctr: col(|r| r.avg_ctr),
            precision_at_k: col(|r| r.precision_at_k),
            hit_rate: col(|r| r.hit_rate),
            mean_candidates_scored: col(|r| r.mean_candidates_scored),
        });
    }
    rows
}

pub fn table_csv(rows: &[CompareRow]) -> Result<Vec<u8>> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.into_inner()
        .map_err(|e| Error::io("<table>", e.into_error()))
}

#[derive(Debug, Clone)]
pub struct CompareArtifacts {
    pub rows: Vec<CompareRow>,
    pub table_path: PathBuf,
    pub series_paths: Vec<PathBuf>,
    pub manifest_path: PathBuf,
}

/// Runs the comparison matrix and writes `compare_table.csv`, one series
/// CSV per cell and `compare_manifest.json`.
pub fn compare(
    config: &ExperimentConfig,
    config_path: Option<&Path>,
    data: &Dataset,
    out_dir: &Path,
) -> Result<CompareArtifacts> {
    let started = Instant::now();
    let reports = compare_reports(config, data)?;
    ensure_dir(out_dir)?;
    let rows = compare_table(&reports);
    let mut m = manifest("compare", config_path, config, data);
    let table_path = out_dir.join("compare_table.csv");
    m.outputs.push(write_file(&table_path, &table_csv(&rows)?)?);
    let mut series_paths = Vec::new();
    for r in &reports {
        let path = out_dir.join(format!("series_{}.csv", stem(r.policy, r.k, r.seed)));
        m.outputs
            .push(write_file(&path, &series_csv(&r.relative_ctr_series)?)?);
        series_paths.push(path);
    }
    let manifest_path = write_manifest(out_dir, "compare_manifest.json", m, started)?;
    Ok(CompareArtifacts {
        rows,
        table_path,
        series_paths,
        manifest_path,
    })
}

/// The `[synthetic]` table of a config file, or a bare spec file.
pub fn load_synthetic_spec(path: &Path) -> Result<SyntheticEnvSpec> {
    #[derive(Deserialize)]
    struct Wrapper {
        synthetic: SyntheticEnvSpec,
    }
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let spec = match toml::from_str::<Wrapper>(&text) {
        Ok(w) => w.synthetic,
        Err(_) => toml::from_str::<SyntheticEnvSpec>(&text)
            .map_err(|e| Error::config(e.message().to_string()))?,
    };
    spec.validate()?;
    Ok(spec)
}

/// Writes `n_trials` synthetic rows to `out_path` and returns the SHA-256 of
/// the file.
pub fn synth(spec: &SyntheticEnvSpec, n_trials: usize, out_path: &Path) -> Result<String> {
    let bytes = synth_bytes(spec, n_trials)?;
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    Ok(write_file(out_path, &bytes)?.sha256)
}
