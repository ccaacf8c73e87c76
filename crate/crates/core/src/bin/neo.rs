use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use neo_core::bundle::ModelBundle;
use neo_core::data::{parse_dataset, split, synth_generate, write_dataset, Dataset};
use neo_core::error::EXIT_CONFIG;
use neo_core::explain::{aggregate_importance, correlation_matrix};
use neo_core::json::to_canonical_string;
use neo_core::metrics::{evaluate, roc_to_csv};
use neo_core::pipeline::{
    benchmark, grid_run, grid_to_csv, run_pipeline, write_all, PipelineConfig, CORRELATION_FILE,
    GRID_FILE, RELEVANCE_FILE, REPORT_FILE, ROC_FILE,
};
use neo_core::preprocess::{apply, fit};
use neo_core::{NeoError, NumericMatrix, Result};

#[derive(Parser)]
#[command(
    name = "neo",
    version,
    about = "Neoepitope binding classifier: train, evaluate, explain"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Pipeline configuration (JSON). Missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for every random stage, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory, overriding the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BundleInput {
    /// Model bundle written by `neo train`.
    #[arg(long)]
    bundle: PathBuf,
    /// Input CSV (defaults to the config's input).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    Synth {
        /// Output CSV path (default: <out>/synth.csv).
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        n_neg: Option<usize>,
        #[arg(long)]
        n_pos: Option<usize>,
    },
    /// Fit transforms on the training split and write transformed splits.
    Preprocess {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the full pipeline and write report, ROC, bundle and explanations.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Score a labelled CSV with a bundle and write report.json and roc.csv.
    Evaluate(BundleInput),
    /// Write per-record probabilities and labels.
    Predict(BundleInput),
    /// Feature relevance and correlation screening for a CSV.
    Explain(BundleInput),
    /// Run every architecture pair in the config grid and write grid.csv.
    Grid {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Time batch inference over synthetic records.
    Benchmark {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, default_value_t = 40_000)]
        records: usize,
    },
}

fn config(common: &Common, input: Option<&PathBuf>) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg = cfg.with_seed(s);
    }
    if let Some(o) = &common.out {
        cfg.output_dir = o.clone();
    }
    if let Some(i) = input {
        cfg.input = Some(i.clone());
    }
    Ok(cfg)
}

fn load_input(cfg: &PipelineConfig) -> Result<Dataset> {
    match &cfg.input {
        Some(p) => parse_dataset(p, &cfg.schema),
        None => Ok(synth_generate(&cfg.synth)?.dataset),
    }
}

fn matrix_csv(header: &[String], m: &NumericMatrix) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in m.iter_rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: Cli, common: &Common) -> Result<()> {
    match cli.command {
        Command::Synth {
            output,
            n_neg,
            n_pos,
        } => {
            let mut cfg = config(common, None)?;
            cfg.synth.n_neg = n_neg.unwrap_or(cfg.synth.n_neg);
            cfg.synth.n_pos = n_pos.unwrap_or(cfg.synth.n_pos);
            let d = synth_generate(&cfg.synth)?.dataset;
            let path = output.unwrap_or_else(|| cfg.output_dir.join("synth.csv"));
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| NeoError::io(dir, e))?;
            }
            write_dataset(&d, &path)?;
            println!(
                "wrote {} ({} records, {} positive)",
                path.display(),
                d.len(),
                d.positives()
            );
        }
        Command::Preprocess { input } => {
            let cfg = config(common, input.as_ref())?;
            cfg.validate()?;
            let d = load_input(&cfg)?;
            let (tr, va, te) = split(&d, &cfg.split.fractions, cfg.split.seed, cfg.split.stratify)?;
            let params = fit(&tr, &cfg.preprocess)?;
            let layout = params.layout();
            let mut header: Vec<String> = params.numeric.iter().map(|c| c.name.clone()).collect();
            header.push("hla_code".into());
            header.extend((0..layout.max_len).map(|i| format!("mut_{i}")));
            header.extend((0..layout.max_len).map(|i| format!("wt_{i}")));
            let files = [
                ("transform.json", to_canonical_string(&params)?),
                (
                    "train.features.csv",
                    matrix_csv(&header, &apply(&params, &tr)?),
                ),
                (
                    "validation.features.csv",
                    matrix_csv(&header, &apply(&params, &va)?),
                ),
                (
                    "test.features.csv",
                    matrix_csv(&header, &apply(&params, &te)?),
                ),
            ];
            print_written(&write_all(&cfg.output_dir, &files)?);
        }
        Command::Train { input } => {
            let cfg = config(common, input.as_ref())?;
            let run = run_pipeline(&cfg)?;
            let r = &run.report;
            println!(
                "test: {} records ({} positive)  accuracy {:.4}  sensitivity {:.4}  specificity {:.4}  auc {:.4}",
                r.records, r.positives, r.accuracy, r.sensitivity, r.specificity, r.auc
            );
            println!(
                "branches: ffnn auc {:.4}  rnn auc {:.4}",
                run.ffnn_report.auc, run.rnn_report.auc
            );
            for w in &run.summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("outputs in {}", cfg.output_dir.display());
        }
        Command::Evaluate(b) => {
            let cfg = config(common, b.input.as_ref())?;
            let bundle = ModelBundle::load(&b.bundle)?;
            let d = load_input(&cfg)?;
            let preds = bundle.predict_records(&d.records)?;
            let p: Vec<f64> = preds.iter().map(|x| x.probability).collect();
            let report = evaluate(&p, &d.labels(), bundle.ensemble.threshold)?;
            println!(
                "accuracy {:.4}  sensitivity {:.4}  specificity {:.4}  precision {:.4}  f1 {:.4}  auc {:.4}",
                report.accuracy, report.sensitivity, report.specificity, report.precision, report.f1, report.auc
            );
            let files = [
                (REPORT_FILE, to_canonical_string(&report)?),
                (ROC_FILE, roc_to_csv(&report.roc)),
            ];
            print_written(&write_all(&cfg.output_dir, &files)?);
        }
        Command::Predict(b) => {
            let cfg = config(common, b.input.as_ref())?;
            let bundle = ModelBundle::load(&b.bundle)?;
            let d = load_input(&cfg)?;
            let preds = bundle.predict_records(&d.records)?;
            let mut out = String::from("id,p_ffnn,p_rnn,probability,label\n");
            for (r, p) in d.records.iter().zip(&preds) {
                out.push_str(&format!(
                    "{},{:?},{:?},{:?},{}\n",
                    r.id, p.p_ffnn, p.p_rnn, p.probability, p.label
                ));
            }
            print_written(&write_all(&cfg.output_dir, &[("predictions.csv", out)])?);
        }
        Command::Explain(b) => {
            let cfg = config(common, b.input.as_ref())?;
            let bundle = ModelBundle::load(&b.bundle)?;
            let d = load_input(&cfg)?;
            let rows = apply(&bundle.transform, &d)?;
            let dense = bundle.packing.dense_inputs(&rows);
            let names = bundle.feature_names();
            let relevance = aggregate_importance(&bundle.ffnn, &dense, &names)?;
            let corr = correlation_matrix(&dense, &names)?;
            for f in &relevance.features {
                println!("{:>12}  {:.6}", f.feature, f.mean_abs_relevance);
            }
            let files = [
                (RELEVANCE_FILE, to_canonical_string(&relevance)?),
                (CORRELATION_FILE, corr.to_csv()),
            ];
            print_written(&write_all(&cfg.output_dir, &files)?);
        }
        Command::Grid { input } => {
            let cfg = config(common, input.as_ref())?;
            let rows = grid_run(&cfg)?;
            let csv = grid_to_csv(&rows);
            print!("{csv}");
            print_written(&write_all(&cfg.output_dir, &[(GRID_FILE, csv)])?);
        }
        Command::Benchmark { bundle, records } => {
            let cfg = config(common, None)?;
            let b = ModelBundle::load(&bundle)?;
            let report = benchmark(&b, records, cfg.synth.seed)?;
            println!(
                "{} records in {:.2} ms ({:.0} records/s, {} thread(s))",
                report.records, report.total_ms, report.records_per_second, report.threads
            );
            print_written(&write_all(
                &cfg.output_dir,
                &[("benchmark.json", to_canonical_string(&report)?)],
            )?);
        }
    }
    Ok(())
}

fn report_error(e: &NeoError) {
    eprintln!("error: {e}");
    let mut source = std::error::Error::source(e);
    while let Some(s) = source {
        eprintln!("  caused by: {s}");
        source = s.source();
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let common = cli.common.clone();
    match execute(cli, &common) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
