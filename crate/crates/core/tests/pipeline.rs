use std::collections::HashSet;

use proptest::prelude::*;

use neo_core::bundle::ModelBundle;
use neo_core::data::{
    read_dataset, serialize_dataset, split, synth_generate, Schema, SplitFractions, SynthConfig,
};
use neo_core::error::EXIT_CONFIG;
use neo_core::metrics::roc_auc;
use neo_core::pipeline::{
    self, PipelineConfig, BUNDLE_FILE, REPORT_FILE, SUMMARY_FILE, TIMING_FILE,
};

fn small() -> PipelineConfig {
    let mut c = PipelineConfig::default().with_seed(9);
    c.synth.n_neg = 400;
    c.synth.n_pos = 60;
    c.ffnn.train.epochs = 3;
    c.rnn.arch = "35:4:1".parse().unwrap();
    c.rnn.train.epochs = 1;
    c
}

#[test]
fn planted_rule_separates_labels() {
    let s = synth_generate(&SynthConfig {
        n_neg: 500,
        n_pos: 100,
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let logits: Vec<f64> = s.dataset.records.iter().map(|r| s.rule.logit(r)).collect();
    let labels = s.dataset.labels();
    for (l, y) in logits.iter().zip(&labels) {
        assert_eq!(u8::from(*l > 0.0), *y);
    }
    assert_eq!(roc_auc(&logits, &labels).unwrap(), 1.0);
}

#[test]
fn noisy_rule_still_ranks() {
    let s = synth_generate(&SynthConfig {
        n_neg: 2000,
        n_pos: 200,
        noise: 0.2,
        seed: 1,
        ..Default::default()
    })
    .unwrap();
    let logits: Vec<f64> = s.dataset.records.iter().map(|r| s.rule.logit(r)).collect();
    let auc = roc_auc(&logits, &s.dataset.labels()).unwrap();
    assert!(auc > 0.8 && auc < 1.0, "{auc}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn csv_round_trip(seed in 0u64..1000, missing in 0.0f64..0.3) {
        let d = synth_generate(&SynthConfig { n_neg: 30, n_pos: 10, missing_rate: missing, seed, ..Default::default() })
            .unwrap()
            .dataset;
        let text = serialize_dataset(&d);
        let back = read_dataset(text.as_bytes(), &Schema::default()).unwrap();
        prop_assert_eq!(&back.records, &d.records);
        prop_assert_eq!(serialize_dataset(&back), text);
    }

    #[test]
    fn split_partitions_records(seed in 0u64..1000, stratify in any::<bool>()) {
        let d = synth_generate(&SynthConfig { n_neg: 90, n_pos: 20, seed, ..Default::default() }).unwrap().dataset;
        let (a, b, c) = split(&d, &SplitFractions::new(0.6, 0.2, 0.2), seed, stratify).unwrap();
        prop_assert_eq!(a.len() + b.len() + c.len(), d.len());
        let ids: HashSet<_> = a.records.iter().chain(&b.records).chain(&c.records).map(|r| r.id.clone()).collect();
        prop_assert_eq!(ids.len(), d.len());
        if stratify {
            prop_assert_eq!(a.positives(), 12);
            prop_assert_eq!(c.positives(), 4);
        }
    }
}

#[test]
fn transforms_fit_on_train_only() {
    let run = pipeline::run(&small()).unwrap();
    let a = &run.audit;
    assert_eq!(a.fit_ids, a.train_ids);
    assert_eq!(a.smote_ids, a.train_ids);
    assert_eq!(a.evaluated_ids, a.test_ids);
    let train: HashSet<_> = a.train_ids.iter().collect();
    assert!(a
        .test_ids
        .iter()
        .chain(&a.validation_ids)
        .all(|id| !train.contains(id)));
    let c = &run.summary.counts;
    assert_eq!(c.train_after_smote, 2 * (c.train - c.train_positives));
    assert_eq!(c.train_positives_after_smote, c.train - c.train_positives);
    assert_eq!(run.report.records, c.test);
}

#[test]
fn oversampling_held_out_splits_is_rejected() {
    let mut c = small();
    c.smote.apply_to = vec!["train".into(), "test".into()];
    let e = pipeline::run(&c).unwrap_err();
    assert_eq!(e.exit_code(), EXIT_CONFIG);
}

#[test]
fn outputs_are_deterministic_and_loadable() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = small();
    c.output_dir = tmp.path().join("one");
    let run = pipeline::run_pipeline(&c).unwrap();
    c.output_dir = tmp.path().join("two");
    pipeline::run_pipeline(&c).unwrap();
    for name in [REPORT_FILE, BUNDLE_FILE, SUMMARY_FILE] {
        assert_eq!(
            std::fs::read(tmp.path().join("one").join(name)).unwrap(),
            std::fs::read(tmp.path().join("two").join(name)).unwrap(),
            "{name}"
        );
    }
    assert!(tmp.path().join("one").join(TIMING_FILE).exists());

    let loaded = ModelBundle::load(&tmp.path().join("one").join(BUNDLE_FILE)).unwrap();
    assert_eq!(loaded, run.bundle);
    let d = synth_generate(&c.synth).unwrap().dataset;
    assert_eq!(
        loaded.predict_records(&d.records).unwrap(),
        run.bundle.predict_records(&d.records).unwrap()
    );
}

#[test]
fn different_seeds_differ() {
    let a = pipeline::run(&small()).unwrap();
    let b = pipeline::run(&small().with_seed(10)).unwrap();
    assert_ne!(a.bundle, b.bundle);
}
