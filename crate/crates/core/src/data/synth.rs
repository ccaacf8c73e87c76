//! Synthetic datasets with a planted, recoverable labelling rule.
//!
//! Each candidate draws a latent vector `z ~ N(0, I_8)`, a random 8-12-mer
//! mutant peptide (the wild type differs at one position) and an HLA allele.
//! Its label is
//!
//! ```text
//! label = 1  iff  sigmoid(w . z + bias + motif_score(peptide_mut)) + noise * e > 0.5
//! ```
//!
//! with `e ~ N(0, 1)`. The stored numeric features are an affine image of `z`
//! (`offset + scale * z`) so that standardization has real work to do.
//! Candidates are drawn until both class quotas are filled.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{parse_residues, AminoAcid, Dataset, FeatureRecord, Peptide, Schema, NUM_FEATURES};
use crate::error::{NeoError, Result};
use crate::nn::sigmoid;

pub const HLA_ALLELES: [&str; 6] = [
    "A*01:01", "A*02:01", "A*03:01", "A*24:02", "B*07:02", "B*08:01",
];

const DEFAULT_WEIGHTS: [f64; NUM_FEATURES] = [1.2, -0.9, 0.7, 0.0, 0.8, -0.6, 0.0, 0.4];
const OFFSETS: [f64; NUM_FEATURES] = [0.0, 5.0, -2.0, 100.0, 0.5, 10.0, 0.0, 1.0];
const SCALES: [f64; NUM_FEATURES] = [1.0, 2.0, 0.5, 25.0, 0.1, 3.0, 1.0, 4.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_neg: usize,
    pub n_pos: usize,
    /// Residue set whose frequency in the mutant peptide raises the logit.
    pub motif: String,
    pub motif_weight: f64,
    /// Standard deviation of the additive label noise.
    pub noise: f64,
    pub bias: f64,
    pub weights: [f64; NUM_FEATURES],
    /// Probability that any numeric cell is blanked after labelling.
    pub missing_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_neg: 900,
            n_pos: 100,
            motif: "HKR".into(),
            motif_weight: 4.0,
            noise: 0.0,
            bias: -2.0,
            weights: DEFAULT_WEIGHTS,
            missing_rate: 0.0,
            seed: 0,
        }
    }
}

/// The generator's ground truth, enough to recompute every noiseless logit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedRule {
    pub weights: [f64; NUM_FEATURES],
    pub offsets: [f64; NUM_FEATURES],
    pub scales: [f64; NUM_FEATURES],
    pub bias: f64,
    pub motif: String,
    pub motif_weight: f64,
    pub noise: f64,
}

impl PlantedRule {
    pub fn motif_score(&self, peptide: &Peptide) -> f64 {
        let set = parse_residues(&self.motif).unwrap_or_default();
        if set.is_empty() || peptide.is_empty() {
            return 0.0;
        }
        let hits = peptide
            .residues()
            .iter()
            .filter(|aa| set.contains(aa))
            .count();
        self.motif_weight * (hits as f64 / peptide.len() as f64 - set.len() as f64 / 20.0)
    }

    /// Noiseless logit of a record; missing cells count as a zero latent.
    pub fn logit(&self, r: &FeatureRecord) -> f64 {
        let linear: f64 = (0..NUM_FEATURES)
            .map(|j| {
                let z = r.numeric[j].map_or(0.0, |v| (v - self.offsets[j]) / self.scales[j]);
                self.weights[j] * z
            })
            .sum();
        linear + self.bias + self.motif_score(&r.peptide_mut)
    }
}

#[derive(Debug, Clone)]
pub struct Synthesized {
    pub dataset: Dataset,
    pub rule: PlantedRule,
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<Synthesized> {
    if cfg.n_neg + cfg.n_pos == 0 {
        return Err(NeoError::Config(
            "synthetic dataset needs at least one record".into(),
        ));
    }
    if !(cfg.noise.is_finite() && cfg.noise >= 0.0) || !(0.0..1.0).contains(&cfg.missing_rate) {
        return Err(NeoError::Config(
            "noise must be >= 0 and missing_rate in [0, 1)".into(),
        ));
    }
    parse_residues(&cfg.motif)?;

    let rule = PlantedRule {
        weights: cfg.weights,
        offsets: OFFSETS,
        scales: SCALES,
        bias: cfg.bias,
        motif: cfg.motif.clone(),
        motif_weight: cfg.motif_weight,
        noise: cfg.noise,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut pos, mut neg) = (Vec::with_capacity(cfg.n_pos), Vec::with_capacity(cfg.n_neg));
    let budget = 1_000_000 + 1000 * (cfg.n_pos + cfg.n_neg);
    let mut draws = 0usize;

    while pos.len() < cfg.n_pos || neg.len() < cfg.n_neg {
        draws += 1;
        if draws > budget {
            return Err(NeoError::Config(format!(
                "planted rule too extreme: {} of {} positives and {} of {} negatives after {budget} draws",
                pos.len(),
                cfg.n_pos,
                neg.len(),
                cfg.n_neg
            )));
        }
        let (mut record, z) = draw_candidate(&mut rng);
        let linear: f64 = z.iter().zip(&rule.weights).map(|(a, b)| a * b).sum();
        let logit = linear + rule.bias + rule.motif_score(&record.peptide_mut);
        let e: f64 = rng.sample(StandardNormal);
        let positive = sigmoid(logit) + cfg.noise * e > 0.5;

        for (j, zj) in z.iter().enumerate() {
            let blank = cfg.missing_rate > 0.0 && rng.gen::<f64>() < cfg.missing_rate;
            record.numeric[j] = (!blank).then(|| rule.offsets[j] + rule.scales[j] * zj);
        }

        if positive && pos.len() < cfg.n_pos {
            record.label = 1;
            pos.push(record);
        } else if !positive && neg.len() < cfg.n_neg {
            neg.push(record);
        }
    }

    let mut records: Vec<FeatureRecord> = pos.into_iter().chain(neg).collect();
    records.shuffle(&mut rng);
    for (i, r) in records.iter_mut().enumerate() {
        r.id = format!("syn{i:06}");
    }
    Ok(Synthesized {
        dataset: Dataset::new(records, Schema::default())?,
        rule,
    })
}

/// Unlabelled records (label 0) drawn like synthetic candidates, with the
/// HLA allele cycled through `alleles` (the built-in set when empty).
pub fn synth_unlabeled(n: usize, alleles: &[String], seed: u64) -> Vec<FeatureRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let (mut r, z) = draw_candidate(&mut rng);
            for (j, zj) in z.iter().enumerate() {
                r.numeric[j] = Some(OFFSETS[j] + SCALES[j] * zj);
            }
            if !alleles.is_empty() {
                r.hla = alleles[i % alleles.len()].clone();
            }
            r.id = format!("bench{i:06}");
            r
        })
        .collect()
}

fn random_residue(rng: &mut ChaCha8Rng) -> AminoAcid {
    AminoAcid::from_code(rng.gen_range(0..20)).expect("code < 20")
}

/// A candidate with random peptides and HLA; numerics are filled by the caller.
pub(crate) fn draw_candidate(rng: &mut ChaCha8Rng) -> (FeatureRecord, [f64; NUM_FEATURES]) {
    let len = rng.gen_range(8..=12);
    let mutant: Vec<AminoAcid> = (0..len).map(|_| random_residue(rng)).collect();
    let mut wild = mutant.clone();
    let site = rng.gen_range(0..len);
    loop {
        let aa = random_residue(rng);
        if aa != mutant[site] {
            wild[site] = aa;
            break;
        }
    }
    let hla = HLA_ALLELES[rng.gen_range(0..HLA_ALLELES.len())].to_string();
    let mut z = [0.0; NUM_FEATURES];
    for zj in &mut z {
        *zj = rng.sample(StandardNormal);
    }
    let record = FeatureRecord {
        id: String::new(),
        peptide_mut: Peptide::new(mutant).expect("8-12 residues"),
        peptide_wt: Peptide::new(wild).expect("8-12 residues"),
        hla,
        numeric: [None; NUM_FEATURES],
        label: 0,
    };
    (record, z)
}
