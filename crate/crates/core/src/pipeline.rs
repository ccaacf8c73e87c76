//! End-to-end runs: load or synthesize, split, fit transforms on the training
//! split, over-sample the training split, train both branches, aggregate and
//! evaluate on the untouched test split.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::bundle::{ModelBundle, Provenance, Seeds};
use crate::data::{
    parse_dataset, split, synth_generate, synth_unlabeled, Dataset, Schema, SplitFractions,
    SynthConfig,
};
use crate::ensemble::EnsembleConfig;
use crate::error::{NeoError, Result};
use crate::explain::{
    aggregate_importance, correlation_matrix, redundancy_report, CorrelationMatrix, RelevanceReport,
};
use crate::json::to_canonical_string;
use crate::metrics::{evaluate, roc_to_csv, EvalReport};
use crate::nn::{train, Arch, FfnnModel, RnnModel, SequenceSource, TrainConfig, TrainHistory};
use crate::packing::{SequencePacking, DEFAULT_STEP_WIDTH};
use crate::preprocess::{apply, fit, PreprocessOptions};
use crate::smote::{oversample, SmoteConfig};

pub const REPORT_FILE: &str = "report.json";
pub const ROC_FILE: &str = "roc.csv";
pub const BUNDLE_FILE: &str = "model.neo.json";
pub const RELEVANCE_FILE: &str = "relevance.json";
pub const CORRELATION_FILE: &str = "correlation.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMING_FILE: &str = "timing.json";
pub const GRID_FILE: &str = "grid.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSettings {
    pub fractions: SplitFractions,
    pub seed: u64,
    pub stratify: bool,
}

impl Default for SplitSettings {
    fn default() -> Self {
        SplitSettings {
            fractions: SplitFractions::default(),
            seed: 0,
            stratify: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoteSettings {
    pub enabled: bool,
    /// Splits to over-sample. Only `train` is accepted.
    pub apply_to: Vec<String>,
    pub k: usize,
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteSettings {
    fn default() -> Self {
        let c = SmoteConfig::default();
        SmoteSettings {
            enabled: true,
            apply_to: vec!["train".into()],
            k: c.k,
            target_ratio: c.target_ratio,
            seed: c.seed,
        }
    }
}

impl SmoteSettings {
    pub fn config(&self) -> SmoteConfig {
        SmoteConfig {
            k: self.k,
            target_ratio: self.target_ratio,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.apply_to {
            match s.as_str() {
                "train" => {}
                "validation" | "test" => {
                    return Err(NeoError::Config(format!(
                        "SMOTE may only be applied to the training split, not '{s}'"
                    )))
                }
                other => {
                    return Err(NeoError::Config(format!(
                        "unknown split '{other}' in smote.apply_to"
                    )))
                }
            }
        }
        if self.enabled && self.apply_to.is_empty() {
            return Err(NeoError::Config(
                "smote is enabled but apply_to is empty".into(),
            ));
        }
        self.config().validate()
    }

    fn active(&self) -> bool {
        self.enabled && !self.apply_to.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    pub arch: Arch,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainSettings {
    /// Test records used for aggregate relevance (the first `max_records`).
    pub max_records: usize,
    pub redundancy_threshold: f64,
}

impl Default for ExplainSettings {
    fn default() -> Self {
        ExplainSettings {
            max_records: 1000,
            redundancy_threshold: crate::explain::DEFAULT_REDUNDANCY_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub ffnn: String,
    pub rnn: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// CSV input; when absent the `synth` parameters generate the dataset.
    pub input: Option<PathBuf>,
    pub synth: SynthConfig,
    pub output_dir: PathBuf,
    pub schema: Schema,
    pub preprocess: PreprocessOptions,
    pub split: SplitSettings,
    pub smote: SmoteSettings,
    pub ffnn: BranchConfig,
    pub rnn: BranchConfig,
    pub ensemble: EnsembleConfig,
    pub explain: ExplainSettings,
    pub grid: Vec<GridEntry>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            synth: SynthConfig::default(),
            output_dir: PathBuf::from("neo-out"),
            schema: Schema::default(),
            preprocess: PreprocessOptions::default(),
            split: SplitSettings::default(),
            smote: SmoteSettings::default(),
            ffnn: BranchConfig {
                arch: "8:16:32:1".parse().expect("valid arch"),
                train: TrainConfig::default(),
            },
            rnn: BranchConfig {
                arch: "35:32:32:1".parse().expect("valid arch"),
                train: TrainConfig::rnn_default(),
            },
            ensemble: EnsembleConfig::default(),
            explain: ExplainSettings::default(),
            grid: Vec::new(),
        }
    }
}

fn merge(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

impl PipelineConfig {
    /// Parse a possibly partial config; nested objects are merged over the
    /// defaults field by field.
    pub fn from_json(text: &str) -> Result<Self> {
        let user: Value =
            serde_json::from_str(text).map_err(|e| NeoError::Config(e.to_string()))?;
        let mut merged = serde_json::to_value(Self::default())?;
        merge(&mut merged, user);
        serde_json::from_value(merged).map_err(|e| NeoError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| NeoError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            NeoError::Config(m) => NeoError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Use one seed for every random stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.synth.seed = seed;
        self.split.seed = seed;
        self.smote.seed = seed;
        self.ffnn.train.seed = seed;
        self.rnn.train.seed = seed;
        self
    }

    /// SHA-256 of the canonical config, ignoring `output_dir`.
    pub fn digest(&self) -> Result<String> {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let text = to_canonical_string(&c)?;
        Ok(format!("{:x}", Sha256::digest(text.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        self.split.fractions.validate()?;
        self.smote.validate()?;
        self.ffnn.arch.validate()?;
        self.rnn.arch.validate()?;
        self.ffnn.train.validate()?;
        self.rnn.train.validate()?;
        self.ensemble.validate()?;
        if self.rnn.arch.sizes()[0] != DEFAULT_STEP_WIDTH {
            return Err(NeoError::Config(format!(
                "rnn architecture '{}' must take {DEFAULT_STEP_WIDTH}-wide timesteps",
                self.rnn.arch
            )));
        }
        if self.rnn.arch.sizes().len() < 3 {
            return Err(NeoError::Config(format!(
                "rnn architecture '{}' needs at least one hidden layer",
                self.rnn.arch
            )));
        }
        parse_grid(&self.grid)?;
        if let Some(p) = &self.input {
            if !p.is_file() {
                return Err(NeoError::Config(format!(
                    "input file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// Parsed `(ffnn, rnn)` architectures for every grid row.
pub fn parse_grid(grid: &[GridEntry]) -> Result<Vec<(Arch, Arch)>> {
    grid.iter()
        .enumerate()
        .map(|(i, e)| {
            let parse = |s: &str| {
                s.parse::<Arch>()
                    .and_then(|a| a.validate().map(|_| a))
                    .map_err(|err| NeoError::Config(format!("grid row {}: {err}", i + 1)))
            };
            Ok((parse(&e.ffnn)?, parse(&e.rnn)?))
        })
        .collect()
}

/// Which records each data-touching stage saw.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageAudit {
    pub stages: Vec<&'static str>,
    pub train_ids: Vec<String>,
    pub validation_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub fit_ids: Vec<String>,
    pub smote_ids: Vec<String>,
    pub evaluated_ids: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub total: usize,
    pub train: usize,
    pub train_positives: usize,
    pub validation: usize,
    pub test: usize,
    pub test_positives: usize,
    pub train_after_smote: usize,
    pub train_positives_after_smote: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSummary {
    pub arch: String,
    pub accuracy: f64,
    pub auc: f64,
    pub recall: f64,
    pub epoch_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationSummary {
    pub accuracy: f64,
    pub auc: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub counts: Counts,
    pub ffnn: BranchSummary,
    pub rnn: BranchSummary,
    pub ensemble: EnsembleConfig,
    /// Ensemble metrics on the validation split; absent when it holds one class.
    pub validation: Option<ValidationSummary>,
    pub redundant_pairs: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub report: EvalReport,
    pub ffnn_report: EvalReport,
    pub rnn_report: EvalReport,
    pub bundle: ModelBundle,
    pub summary: RunSummary,
    pub relevance: RelevanceReport,
    pub correlation: CorrelationMatrix,
    pub audit: StageAudit,
    /// Wall-clock milliseconds per stage.
    pub timing: BTreeMap<String, f64>,
}

struct Stages {
    audit: StageAudit,
    timing: BTreeMap<String, f64>,
}

impl Stages {
    fn run<T>(&mut self, name: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().map_err(|e| e.in_stage(name))?;
        self.timing
            .insert(name.to_string(), start.elapsed().as_secs_f64() * 1e3);
        self.audit.stages.push(name);
        Ok(out)
    }
}

fn ids(d: &Dataset) -> Vec<String> {
    d.records.iter().map(|r| r.id.clone()).collect()
}

fn branch_summary(arch: &Arch, r: &EvalReport, h: &TrainHistory) -> BranchSummary {
    BranchSummary {
        arch: arch.to_string(),
        accuracy: r.accuracy,
        auc: r.auc,
        recall: r.sensitivity,
        epoch_loss: h.epoch_loss.clone(),
    }
}

/// Run every stage in memory; nothing is written.
pub fn run(cfg: &PipelineConfig) -> Result<PipelineRun> {
    cfg.validate()?;
    let mut st = Stages {
        audit: StageAudit::default(),
        timing: BTreeMap::new(),
    };

    let data = st.run("load", || match &cfg.input {
        Some(path) => parse_dataset(path, &cfg.schema),
        None => Ok(synth_generate(&cfg.synth)?.dataset),
    })?;
    let (train_d, val_d, test_d) = st.run("split", || {
        split(
            &data,
            &cfg.split.fractions,
            cfg.split.seed,
            cfg.split.stratify,
        )
    })?;
    st.audit.train_ids = ids(&train_d);
    st.audit.validation_ids = ids(&val_d);
    st.audit.test_ids = ids(&test_d);

    let params = st.run("fit", || fit(&train_d, &cfg.preprocess))?;
    st.audit.fit_ids = ids(&train_d);
    let (x_train, x_val, x_test) = st.run("apply", || {
        Ok((
            apply(&params, &train_d)?,
            apply(&params, &val_d)?,
            apply(&params, &test_d)?,
        ))
    })?;
    let y_train = train_d.labels();
    let y_test = test_d.labels();

    let (x_fit, y_fit) = st.run("smote", || {
        if cfg.smote.active() {
            oversample(&x_train, &y_train, &cfg.smote.config())
        } else {
            Ok((x_train.clone(), y_train.clone()))
        }
    })?;
    if cfg.smote.active() {
        st.audit.smote_ids = ids(&train_d);
    }

    let n_hla = params.hla_categories().map_or(0, |m| m.len());
    let packing = SequencePacking::new(params.layout(), n_hla)?;
    let dense_fit = packing.dense_inputs(&x_fit);

    let (ffnn, ffnn_hist) = st.run("train_ffnn", || {
        let expected = params.layout().n_numeric;
        if cfg.ffnn.arch.sizes()[0] != expected {
            return Err(NeoError::Config(format!(
                "ffnn architecture '{}' takes {} inputs but the transform produces {expected}",
                cfg.ffnn.arch,
                cfg.ffnn.arch.sizes()[0]
            )));
        }
        let mut m = FfnnModel::init(&cfg.ffnn.arch, cfg.ffnn.train.seed)?;
        let h = train(&mut m, &dense_fit, &y_fit, &cfg.ffnn.train)?;
        Ok((m, h))
    })?;
    let (rnn, rnn_hist) = st.run("train_rnn", || {
        let mut m = RnnModel::init(&cfg.rnn.arch, cfg.rnn.train.seed)?;
        let source = packing.source(x_fit);
        let h = train(
            &mut m,
            &source as &dyn SequenceSource,
            &y_fit,
            &cfg.rnn.train,
        )?;
        Ok((m, h))
    })?;

    let provenance = Provenance {
        seeds: Seeds {
            split: cfg.split.seed,
            smote: cfg.smote.seed,
            ffnn: cfg.ffnn.train.seed,
            rnn: cfg.rnn.train.seed,
        },
        config_sha256: cfg.digest()?,
    };
    let bundle = ModelBundle::new(params, packing, ffnn, rnn, cfg.ensemble, provenance)?;

    let (val_preds, preds) = st.run("aggregate", || {
        Ok((bundle.predict_rows(&x_val)?, bundle.predict_rows(&x_test)?))
    })?;
    st.audit.evaluated_ids = ids(&test_d);
    let thr = cfg.ensemble.threshold;
    let (report, ffnn_report, rnn_report) = st.run("evaluate", || {
        let p: Vec<f64> = preds.iter().map(|p| p.probability).collect();
        let pf: Vec<f64> = preds.iter().map(|p| p.p_ffnn).collect();
        let pr: Vec<f64> = preds.iter().map(|p| p.p_rnn).collect();
        Ok((
            evaluate(&p, &y_test, thr)?,
            evaluate(&pf, &y_test, thr)?,
            evaluate(&pr, &y_test, thr)?,
        ))
    })?;

    let names = bundle.feature_names();
    let (relevance, correlation) = st.run("explain", || {
        let dense_test = bundle.packing.dense_inputs(&x_test);
        let n = dense_test.rows().min(cfg.explain.max_records.max(1));
        let sample = dense_test.select_rows(&(0..n).collect::<Vec<_>>());
        let relevance = aggregate_importance(&bundle.ffnn, &sample, &names)?;
        let correlation = correlation_matrix(&bundle.packing.dense_inputs(&x_train), &names)?;
        Ok((relevance, correlation))
    })?;
    let redundant_pairs = redundancy_report(&correlation, cfg.explain.redundancy_threshold)
        .into_iter()
        .map(|(i, j)| (names[i].clone(), names[j].clone()))
        .collect();

    let val_p: Vec<f64> = val_preds.iter().map(|p| p.probability).collect();
    let validation = evaluate(&val_p, &val_d.labels(), thr)
        .ok()
        .map(|r| ValidationSummary {
            accuracy: r.accuracy,
            auc: r.auc,
            recall: r.sensitivity,
        });

    let mut warnings = ffnn_hist.warnings.clone();
    warnings.extend(rnn_hist.warnings.iter().cloned());
    let summary = RunSummary {
        counts: Counts {
            total: data.len(),
            train: train_d.len(),
            train_positives: train_d.positives(),
            validation: val_d.len(),
            test: test_d.len(),
            test_positives: test_d.positives(),
            train_after_smote: y_fit.len(),
            train_positives_after_smote: y_fit.iter().filter(|&&y| y == 1).count(),
        },
        ffnn: branch_summary(&cfg.ffnn.arch, &ffnn_report, &ffnn_hist),
        rnn: branch_summary(&cfg.rnn.arch, &rnn_report, &rnn_hist),
        ensemble: cfg.ensemble,
        validation,
        redundant_pairs,
        warnings,
    };

    Ok(PipelineRun {
        report,
        ffnn_report,
        rnn_report,
        bundle,
        summary,
        relevance,
        correlation,
        audit: st.audit,
        timing: st.timing,
    })
}

/// Write a set of files; on any failure remove the ones already written.
pub fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| NeoError::io(dir, e))?;
    let mut written = Vec::with_capacity(files.len());
    for (name, contents) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, contents) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(NeoError::io(path, e));
        }
        written.push(path);
    }
    Ok(written)
}

impl PipelineRun {
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        let files = [
            (REPORT_FILE, to_canonical_string(&self.report)?),
            (ROC_FILE, roc_to_csv(&self.report.roc)),
            (BUNDLE_FILE, self.bundle.to_json()?),
            (RELEVANCE_FILE, to_canonical_string(&self.relevance)?),
            (CORRELATION_FILE, self.correlation.to_csv()),
            (SUMMARY_FILE, to_canonical_string(&self.summary)?),
            (TIMING_FILE, to_canonical_string(&self.timing)?),
        ];
        write_all(dir, &files).map_err(|e| e.in_stage("write"))
    }
}

/// Run and write all outputs to `cfg.output_dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun> {
    let r = run(cfg)?;
    r.write(&cfg.output_dir)?;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub ffnn_arch: String,
    pub rnn_arch: String,
    pub accuracy: f64,
    pub auc: f64,
    pub recall: f64,
}

/// One full run per grid row on identical splits and seeds. An empty grid
/// runs the configured architectures once.
pub fn grid_run(cfg: &PipelineConfig) -> Result<Vec<GridResult>> {
    let rows = if cfg.grid.is_empty() {
        vec![(cfg.ffnn.arch.clone(), cfg.rnn.arch.clone())]
    } else {
        parse_grid(&cfg.grid)?
    };
    rows.into_iter()
        .map(|(f, r)| {
            let mut c = cfg.clone();
            c.ffnn.arch = f;
            c.rnn.arch = r;
            c.grid.clear();
            let run = run(&c)?;
            Ok(GridResult {
                ffnn_arch: c.ffnn.arch.to_string(),
                rnn_arch: c.rnn.arch.to_string(),
                accuracy: run.report.accuracy,
                auc: run.report.auc,
                recall: run.report.sensitivity,
            })
        })
        .collect()
}

pub fn grid_to_csv(rows: &[GridResult]) -> String {
    let mut out = String::from("ffnn_arch,rnn_arch,accuracy,auc,recall\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:?},{:?},{:?}\n",
            r.ffnn_arch, r.rnn_arch, r.accuracy, r.auc, r.recall
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub records: usize,
    pub total_ms: f64,
    pub records_per_second: f64,
    pub predicted_positive: usize,
    pub threads: usize,
}

/// Time batch inference (preprocessing included) over `n` synthetic records.
pub fn benchmark(bundle: &ModelBundle, n: usize, seed: u64) -> Result<BenchmarkReport> {
    if n == 0 {
        return Err(NeoError::Config(
            "benchmark needs at least one record".into(),
        ));
    }
    let records = synth_unlabeled(n, &bundle.known_alleles(), seed);
    let start = Instant::now();
    let preds = bundle.predict_records(&records)?;
    let secs = start.elapsed().as_secs_f64().max(1e-9);
    Ok(BenchmarkReport {
        records: n,
        total_ms: secs * 1e3,
        records_per_second: n as f64 / secs,
        predicted_positive: preds.iter().filter(|p| p.label == 1).count(),
        threads: rayon::current_num_threads(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> PipelineConfig {
        let mut c = PipelineConfig::default().with_seed(3);
        c.synth.n_neg = 120;
        c.synth.n_pos = 30;
        c.ffnn.arch = "8:4:1".parse().unwrap();
        c.ffnn.train.epochs = 3;
        c.ffnn.train.batch_size = 32;
        c.rnn.arch = "35:3:1".parse().unwrap();
        c.rnn.train.epochs = 1;
        c.rnn.train.batch_size = 32;
        c
    }

    #[test]
    fn digest_ignores_output_dir() {
        let a = small();
        let mut b = small();
        b.output_dir = PathBuf::from("elsewhere");
        assert_eq!(a.digest().unwrap(), b.digest().unwrap());
        assert_ne!(a.digest().unwrap(), small().with_seed(4).digest().unwrap());
    }

    #[test]
    fn partial_config_keeps_branch_defaults() {
        let c = PipelineConfig::from_json(
            r#"{"ffnn": {"train": {"epochs": 7}}, "synth": {"n_pos": 3}}"#,
        )
        .unwrap();
        let d = PipelineConfig::default();
        assert_eq!(c.ffnn.arch, d.ffnn.arch);
        assert_eq!(c.ffnn.train.epochs, 7);
        assert_eq!(c.ffnn.train.learning_rate, d.ffnn.train.learning_rate);
        assert_eq!(c.rnn, d.rnn);
        assert_eq!(c.synth.n_pos, 3);
        assert!(PipelineConfig::from_json(r#"{"ffnn": {"depth": 3}}"#).is_err());
        assert!(PipelineConfig::from_json("[1]").is_err());
    }

    #[test]
    fn config_json_roundtrip() {
        let c = small();
        let text = to_canonical_string(&c).unwrap();
        assert_eq!(PipelineConfig::from_json(&text).unwrap(), c);
        assert_eq!(
            PipelineConfig::from_json("{}").unwrap(),
            PipelineConfig::default()
        );
        assert!(PipelineConfig::from_json("{\"bogus\": 1}").is_err());
        assert_eq!(c.digest().unwrap(), small().digest().unwrap());
        assert_ne!(
            c.digest().unwrap(),
            PipelineConfig::default().digest().unwrap()
        );
    }

    #[test]
    fn smote_leakage_rejected() {
        let mut c = small();
        c.smote.apply_to = vec!["train".into(), "test".into()];
        let e = c.validate().unwrap_err();
        assert_eq!(e.exit_code(), crate::error::EXIT_CONFIG);
        c.smote.apply_to = vec!["validation".into()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn grid_rows_named_in_errors() {
        let grid = vec![
            GridEntry {
                ffnn: "8:16:32:1".into(),
                rnn: "35:32:32:1".into(),
            },
            GridEntry {
                ffnn: "8:x:1".into(),
                rnn: "35:32:1".into(),
            },
        ];
        let e = parse_grid(&grid).unwrap_err().to_string();
        assert!(e.contains("grid row 2"), "{e}");
        assert_eq!(
            parse_grid(&grid[..1]).unwrap()[0].0.sizes(),
            &[8, 16, 32, 1]
        );
    }

    #[test]
    fn stage_order_and_audit() {
        let r = run(&small()).unwrap();
        assert_eq!(
            r.audit.stages,
            [
                "load",
                "split",
                "fit",
                "apply",
                "smote",
                "train_ffnn",
                "train_rnn",
                "aggregate",
                "evaluate",
                "explain"
            ]
        );
        assert_eq!(r.audit.fit_ids, r.audit.train_ids);
        assert_eq!(r.audit.smote_ids, r.audit.train_ids);
        assert_eq!(r.audit.evaluated_ids, r.audit.test_ids);
        assert_eq!(
            r.summary.counts.train_after_smote,
            2 * (r.summary.counts.train - r.summary.counts.train_positives)
        );
    }

    #[test]
    fn stage_errors_name_the_stage() {
        let mut c = small();
        c.ffnn.arch = "7:4:1".parse().unwrap();
        let e = run(&c).unwrap_err();
        assert!(
            matches!(
                e,
                NeoError::Stage {
                    stage: "train_ffnn",
                    ..
                }
            ),
            "{e}"
        );
        assert_eq!(e.exit_code(), crate::error::EXIT_CONFIG);
    }

    #[test]
    fn grid_csv_shape() {
        let rows = [GridResult {
            ffnn_arch: "8:16:32:1".into(),
            rnn_arch: "35:32:32:1".into(),
            accuracy: 0.5,
            auc: 0.75,
            recall: 0.25,
        }];
        assert_eq!(
            grid_to_csv(&rows),
            "ffnn_arch,rnn_arch,accuracy,auc,recall\n8:16:32:1,35:32:32:1,0.5,0.75,0.25\n"
        );
    }
}
