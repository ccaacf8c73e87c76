use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use neo_core::bundle::{ModelBundle, Provenance};
use neo_core::data::{synth_generate, synth_unlabeled, SplitFractions, SynthConfig};
use neo_core::ensemble::EnsembleConfig;
use neo_core::explain::lrp;
use neo_core::metrics::{rates, roc_auc, ConfusionMatrix};
use neo_core::nn::{bce_loss, Arch, FfnnModel, Parameters, RnnModel, SeqData};
use neo_core::packing::SequencePacking;
use neo_core::pipeline::{self, benchmark, PipelineConfig, BUNDLE_FILE, REPORT_FILE};
use neo_core::preprocess::fit;
use neo_core::smote::{oversample, SmoteConfig};
use neo_core::NumericMatrix;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(elapsed: Duration, limit_s: f64, detail: String) -> Outcome {
    let s = elapsed.as_secs_f64();
    check(s < limit_s, format!("{detail}; {s:.2}s (limit {limit_s}s)"))
}

fn rel_err(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().max(b.abs()).max(1e-8)
    }
}

/// Largest relative error between analytic and central-difference gradients
/// of `loss` over every parameter of `model`.
fn worst_gradient_error<M: Parameters + Clone>(
    model: &M,
    analytic: &[Vec<f64>],
    loss: impl Fn(&M) -> f64,
) -> f64 {
    const H: f64 = 1e-5;
    let mut worst: f64 = 0.0;
    for (t, grad) in analytic.iter().enumerate() {
        for (i, &g) in grad.iter().enumerate() {
            let mut plus = model.clone();
            plus.tensors_mut()[t][i] += H;
            let mut minus = model.clone();
            minus.tensors_mut()[t][i] -= H;
            let numeric = (loss(&plus) - loss(&minus)) / (2.0 * H);
            worst = worst.max(rel_err(g, numeric));
        }
    }
    worst
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let ffnn_arch: Arch = "8:4:1".parse().unwrap();
    let rnn_arch: Arch = "2:3:1".parse().unwrap();
    let (mut worst_ffnn, mut worst_rnn): (f64, f64) = (0.0, 0.0);
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);

        let mut m = FfnnModel::init(&ffnn_arch, seed).unwrap();
        for b in m.layers.iter_mut().flat_map(|l| l.bias.iter_mut()) {
            *b = rng.gen_range(-0.5..0.5);
        }
        let examples: Vec<(Vec<f64>, u8)> = (0..3)
            .map(|i| {
                (
                    (0..8).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                    (i % 2) as u8,
                )
            })
            .collect();
        let mut grads = m.zero_grads();
        for (x, y) in &examples {
            m.accumulate(x, *y, &mut grads).unwrap();
        }
        worst_ffnn = worst_ffnn.max(worst_gradient_error(&m, &grads, |net| {
            examples
                .iter()
                .map(|(x, y)| bce_loss(net.forward(x).unwrap(), *y))
                .sum()
        }));

        let mut r = RnnModel::init(&rnn_arch, seed).unwrap();
        for b in r
            .layers
            .iter_mut()
            .flat_map(|l| l.b.iter_mut())
            .chain(r.readout.bias.iter_mut())
        {
            *b = rng.gen_range(-0.5..0.5);
        }
        let mut seqs = SeqData::new(2, 4);
        for _ in 0..2 {
            let steps: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.5..1.5)).collect();
            seqs.push(&steps, 4).unwrap();
        }
        let labels = [1u8, 0];
        let mut grads = r.zero_grads();
        for (i, &y) in labels.iter().enumerate() {
            r.accumulate(seqs.view(i), y, &mut grads).unwrap();
        }
        worst_rnn = worst_rnn.max(worst_gradient_error(&r, &grads, |net| {
            labels
                .iter()
                .enumerate()
                .map(|(i, &y)| bce_loss(net.forward(seqs.view(i)).unwrap(), y))
                .sum()
        }));
    }
    let detail =
        format!("max relative error ffnn {worst_ffnn:.2e}, lstm {worst_rnn:.2e} (limit 1e-4)");
    check(worst_ffnn < 1e-4 && worst_rnn < 1e-4, detail.clone())?;
    within(start.elapsed(), 60.0, detail)
}

fn knn(x: &NumericMatrix, i: usize, k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = (0..x.rows())
        .filter(|&j| j != i)
        .map(|j| {
            let s: f64 = x
                .row(i)
                .iter()
                .zip(x.row(j))
                .map(|(a, b)| (a - b).powi(2))
                .sum();
            (s, j)
        })
        .collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    d.into_iter().take(k).map(|(_, j)| j).collect()
}

fn collinear_residual(r: &[f64], s: &[f64], n: &[f64]) -> f64 {
    let dir: Vec<f64> = s.iter().zip(n).map(|(a, b)| b - a).collect();
    let norm2: f64 = dir.iter().map(|v| v * v).sum();
    let u = if norm2 == 0.0 {
        0.0
    } else {
        r.iter()
            .zip(s)
            .zip(&dir)
            .map(|((ri, si), di)| (ri - si) * di)
            .sum::<f64>()
            / norm2
    };
    if !(-1e-12..=1.0 + 1e-12).contains(&u) {
        return f64::INFINITY;
    }
    r.iter()
        .zip(s)
        .zip(&dir)
        .map(|((ri, si), di)| (ri - (si + u * di)).abs())
        .fold(0.0, f64::max)
}

fn smote_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut synthetic = 0usize;
    for case in 0..100 {
        let n_min = rng.gen_range(2..25);
        let n_maj = rng.gen_range(n_min..200);
        let cols = rng.gen_range(1..9);
        let cfg = SmoteConfig {
            k: rng.gen_range(1..8),
            target_ratio: rng.gen_range(0.5..1.5),
            seed: rng.gen(),
        };
        let mut y: Vec<u8> = (0..n_min + n_maj).map(|i| u8::from(i < n_min)).collect();
        y.shuffle(&mut rng);
        let rows: Vec<Vec<f64>> = y
            .iter()
            .map(|&label| {
                let shift = 2.0 * label as f64;
                (0..cols)
                    .map(|_| shift + rng.gen_range(-1.0..1.0))
                    .collect()
            })
            .collect();
        let n_pos = y.iter().filter(|&&v| v == 1).count();
        let n_neg = y.len() - n_pos;
        let x = NumericMatrix::from_rows(&rows).unwrap();
        let (ox, oy) = oversample(&x, &y, &cfg).map_err(|e| format!("case {case}: {e}"))?;

        let (minority, n_small, n_large) = if n_pos <= n_neg {
            (1u8, n_pos, n_neg)
        } else {
            (0u8, n_neg, n_pos)
        };
        let target = ((cfg.target_ratio * n_large as f64).round() as usize).max(n_small);
        let got = oy.iter().filter(|&&v| v == minority).count();
        if got != target {
            return Err(format!(
                "case {case}: minority count {got}, expected {target}"
            ));
        }
        for i in 0..x.rows() {
            if ox
                .row(i)
                .iter()
                .map(|v| v.to_bits())
                .ne(x.row(i).iter().map(|v| v.to_bits()))
                || oy[i] != y[i]
            {
                return Err(format!("case {case}: original row {i} changed"));
            }
        }
        let min_idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority).collect();
        let x_min = x.select_rows(&min_idx);
        let k = cfg.k.min(x_min.rows() - 1);
        let neighbours: Vec<Vec<usize>> = (0..x_min.rows()).map(|i| knn(&x_min, i, k)).collect();
        for r in x.rows()..ox.rows() {
            let row = ox.row(r);
            let best = (0..x_min.rows())
                .flat_map(|s| neighbours[s].iter().map(move |&n| (s, n)))
                .map(|(s, n)| collinear_residual(row, x_min.row(s), x_min.row(n)))
                .fold(f64::INFINITY, f64::min);
            if best >= 1e-9 {
                return Err(format!("case {case}: synthetic row {r} residual {best:e}"));
            }
            worst = worst.max(best);
            synthetic += 1;
        }
        let again = oversample(&x, &y, &cfg).unwrap();
        if again != (ox, oy) {
            return Err(format!("case {case}: same seed gave different output"));
        }
    }
    within(
        start.elapsed(),
        30.0,
        format!("{synthetic} synthetic rows, worst collinearity residual {worst:.1e}"),
    )
}

fn pairwise_auc(scores: &[f64], truth: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        if truth[i] != 1 {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if truth[j] != 0 {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

fn auc_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let n = rng.gen_range(2..=500);
        let levels = rng.gen_range(2..40);
        let p_pos = rng.gen_range(0.05..0.95);
        let mut truth: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(p_pos))).collect();
        truth[0] = 1;
        truth[1] = 0;
        let scores: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(0..levels) as f64 / levels as f64)
            .collect();
        let got = roc_auc(&scores, &truth).map_err(|e| format!("case {case}: {e}"))?;
        worst = worst.max((got - pairwise_auc(&scores, &truth)).abs());
    }
    let detail = format!("max |trapezoid - pairwise| {worst:.1e} (limit 1e-9)");
    check(worst <= 1e-9, detail.clone())?;
    within(start.elapsed(), 30.0, detail)
}

fn imbalance_config(smote: bool) -> PipelineConfig {
    let mut c = PipelineConfig::default().with_seed(0);
    c.synth = SynthConfig {
        n_neg: 50_000,
        n_pos: 50,
        motif_weight: 0.0,
        ..c.synth
    };
    c.split.fractions = SplitFractions::new(0.7, 0.1, 0.2);
    c.smote.enabled = smote;
    c.ffnn.train.epochs = 4;
    c.rnn.arch = "35:4:1".parse().unwrap();
    c.rnn.train.epochs = 1;
    c
}

fn imbalance_collapse(
    without: &pipeline::PipelineRun,
    with: &pipeline::PipelineRun,
    elapsed: Duration,
) -> Outcome {
    let (a, b) = (&without.ffnn_report, &with.ffnn_report);
    let detail = format!(
        "without oversampling: recall {:.2} accuracy {:.4} auc {:.3}; with: recall {:.2} auc {:.3}",
        a.sensitivity, a.accuracy, a.auc, b.sensitivity, b.auc
    );
    let ok = a.sensitivity <= 0.2
        && a.accuracy >= 0.99
        && (0.4..=0.75).contains(&a.auc)
        && b.sensitivity >= 0.6
        && b.auc >= 0.85;
    check(ok, detail.clone())?;
    within(elapsed, 600.0, detail)
}

fn ensemble_sanity(with: &pipeline::PipelineRun) -> Outcome {
    let best = with.ffnn_report.auc.max(with.rnn_report.auc);
    let mut cfg = imbalance_config(true);
    cfg.ensemble = EnsembleConfig {
        w_ffnn: 1.0,
        w_rnn: 0.0,
        ..cfg.ensemble
    };
    let solo = pipeline::run(&cfg).map_err(|e| e.to_string())?;
    let identical = solo.report == solo.ffnn_report;
    check(
        with.report.auc >= best - 0.02 && identical,
        format!(
            "ensemble auc {:.4} vs best branch {:.4}; weights (1,0) report identical to ffnn: {identical}",
            with.report.auc, best
        ),
    )
}

fn metrics_fixed_point() -> Outcome {
    let cm = ConfusionMatrix {
        tp: 10,
        fn_: 2,
        fp: 3,
        tn: 29_997,
    };
    let r = rates(&cm).map_err(|e| e.to_string())?;
    let pairs = [
        ("accuracy", r.accuracy, 0.9998),
        ("sensitivity", r.recall, 0.8333),
        ("specificity", r.specificity, 0.9999),
        ("precision", r.precision, 0.7692),
        ("f1", r.f1, 0.80),
    ];
    let worst = pairs
        .iter()
        .map(|(_, got, want)| (got - want).abs())
        .fold(0.0, f64::max);
    let listed: Vec<String> = pairs
        .iter()
        .map(|(n, got, _)| format!("{n} {got:.6}"))
        .collect();
    check(
        worst <= 5e-5,
        format!("{}; max deviation {worst:.1e}", listed.join(", ")),
    )
}

fn lrp_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for seed in 0..100u64 {
        let depth = rng.gen_range(1..4);
        let mut sizes = vec![8];
        sizes.extend((0..depth).map(|_| rng.gen_range(2..33)));
        sizes.push(1);
        let m = FfnnModel::init(&Arch(sizes), seed).unwrap();
        let x: Vec<f64> = (0..8).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let score = m.score(&x).unwrap();
        let total: f64 = lrp(&m, &x).unwrap().iter().sum();
        let err = if score == 0.0 {
            total.abs()
        } else {
            (total - score).abs() / score.abs()
        };
        worst = worst.max(err);
        if lrp(&m, &[0.0; 8]).unwrap().iter().any(|&v| v != 0.0) {
            return Err(format!("net {seed}: zero input produced nonzero relevance"));
        }
    }
    check(
        worst <= 0.01,
        format!("max relative conservation error {worst:.2e} (limit 1e-2); zero input exact"),
    )
}

fn small_config(dir: &std::path::Path) -> PipelineConfig {
    let mut c = PipelineConfig::default().with_seed(11);
    c.synth.n_neg = 900;
    c.synth.n_pos = 100;
    c.output_dir = dir.to_path_buf();
    c.ffnn.train.epochs = 4;
    c.rnn.arch = "35:6:1".parse().unwrap();
    c.rnn.train.epochs = 2;
    c
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let run = pipeline::run_pipeline(&small_config(&a)).map_err(|e| e.to_string())?;
    pipeline::run_pipeline(&small_config(&b)).map_err(|e| e.to_string())?;
    for name in [REPORT_FILE, BUNDLE_FILE] {
        let (x, y) = (
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
        );
        if x != y {
            return Err(format!("{name} differs between identical runs"));
        }
    }

    let saved = a.join(BUNDLE_FILE);
    let loaded = ModelBundle::load(&saved).map_err(|e| e.to_string())?;
    let resaved = tmp.path().join("again.json");
    loaded.save(&resaved).map_err(|e| e.to_string())?;
    if std::fs::read(&saved).unwrap() != std::fs::read(&resaved).unwrap() {
        return Err("bundle bytes changed on save/load/save".into());
    }
    let records = synth_unlabeled(1000, &run.bundle.known_alleles(), 5);
    let p1 = run
        .bundle
        .predict_records(&records)
        .map_err(|e| e.to_string())?;
    let p2 = loaded
        .predict_records(&records)
        .map_err(|e| e.to_string())?;
    let same = p1.iter().zip(&p2).all(|(x, y)| {
        x.p_ffnn.to_bits() == y.p_ffnn.to_bits()
            && x.p_rnn.to_bits() == y.p_rnn.to_bits()
            && x.probability.to_bits() == y.probability.to_bits()
            && x.label == y.label
    });
    check(
        same && p1.len() == 1000,
        format!("report and bundle byte-identical across runs; 1000 reloaded predictions bit-exact: {same}"),
    )
}

fn throughput() -> Outcome {
    let d = synth_generate(&SynthConfig::default()).unwrap().dataset;
    let params = fit(&d, &Default::default()).unwrap();
    let n_hla = params.hla_categories().unwrap().len();
    let packing = SequencePacking::new(params.layout(), n_hla).unwrap();
    let defaults = PipelineConfig::default();
    let ffnn = FfnnModel::init(&defaults.ffnn.arch, 1).unwrap();
    let rnn = RnnModel::init(&defaults.rnn.arch, 2).unwrap();
    let bundle = ModelBundle::new(
        params,
        packing,
        ffnn,
        rnn,
        EnsembleConfig::default(),
        Provenance::default(),
    )
    .map_err(|e| e.to_string())?;
    let report = benchmark(&bundle, 40_000, 0).map_err(|e| e.to_string())?;
    check(
        report.total_ms < 10_000.0,
        format!(
            "40000 records in {:.0} ms ({:.0} records/s, {} thread(s), archs {} + {}; limit 10 s)",
            report.total_ms,
            report.records_per_second,
            report.threads,
            defaults.ffnn.arch,
            defaults.rnn.arch
        ),
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(&str, Outcome)> = vec![
        ("1 gradient check", gradient_check()),
        ("2 smote properties", smote_properties()),
        ("3 auc oracle", auc_oracle()),
    ];

    let start = Instant::now();
    let runs = pipeline::run(&imbalance_config(false))
        .and_then(|a| Ok((a, pipeline::run(&imbalance_config(true))?)));
    let elapsed = start.elapsed();
    match runs {
        Ok((without, with)) => {
            results.push((
                "4 imbalance collapse",
                imbalance_collapse(&without, &with, elapsed),
            ));
            results.push(("5 ensemble sanity", ensemble_sanity(&with)));
        }
        Err(e) => {
            results.push(("4 imbalance collapse", Err(e.to_string())));
            results.push(("5 ensemble sanity", Err(e.to_string())));
        }
    }

    results.push(("6 metrics fixed point", metrics_fixed_point()));
    results.push(("7 lrp conservation", lrp_conservation()));
    results.push(("8 determinism and persistence", determinism()));
    results.push(("9 throughput", throughput()));

    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(d) => println!("PASS  criterion {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL  criterion {name}: {d}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
