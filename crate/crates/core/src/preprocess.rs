//! Fit-on-train, apply-everywhere feature transforms.
//!
//! Numeric columns are mean-imputed and z-scored with the population standard
//! deviation; the HLA column is label-encoded with codes assigned in
//! lexicographic order; peptides are tokenized. Everything is packed into one
//! numeric row per record (see [`FeatureLayout`]).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{tokenize, ColumnRole, Dataset, FeatureRecord, DEFAULT_MAX_LEN, NUM_FEATURES};
use crate::error::{NeoError, Result};
use crate::matrix::NumericMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessOptions {
    /// Numeric columns to leave out of the model inputs.
    pub drop: Vec<String>,
    pub max_len: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            drop: Vec::new(),
            max_len: DEFAULT_MAX_LEN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub name: String,
    /// Position among the record's numeric slots.
    pub slot: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    pub numeric: Vec<ColumnStats>,
    pub categories: BTreeMap<String, BTreeMap<String, u32>>,
    pub dropped: Vec<String>,
    pub max_len: usize,
}

/// Column layout of a transformed row:
/// `[kept numerics..., hla code, mutant tokens (max_len), wild-type tokens (max_len)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub n_numeric: usize,
    pub max_len: usize,
}

impl FeatureLayout {
    pub fn numeric(&self) -> std::ops::Range<usize> {
        0..self.n_numeric
    }

    pub fn hla(&self) -> usize {
        self.n_numeric
    }

    pub fn mutant(&self) -> std::ops::Range<usize> {
        let start = self.n_numeric + 1;
        start..start + self.max_len
    }

    pub fn wild_type(&self) -> std::ops::Range<usize> {
        let start = self.n_numeric + 1 + self.max_len;
        start..start + self.max_len
    }

    pub fn width(&self) -> usize {
        self.n_numeric + 1 + 2 * self.max_len
    }
}

impl TransformParams {
    pub fn layout(&self) -> FeatureLayout {
        FeatureLayout {
            n_numeric: self.numeric.len(),
            max_len: self.max_len,
        }
    }

    pub fn hla_categories(&self) -> Option<&BTreeMap<String, u32>> {
        self.categories.values().next()
    }
}

pub fn fit(train: &Dataset, opts: &PreprocessOptions) -> Result<TransformParams> {
    if train.is_empty() {
        return Err(NeoError::Data(
            "cannot fit transforms on an empty dataset".into(),
        ));
    }
    if opts.max_len == 0 {
        return Err(NeoError::Config("max_len must be positive".into()));
    }
    let names = train.schema.numeric_names();
    for d in &opts.drop {
        if !names.contains(&d.as_str()) {
            return Err(NeoError::Config(format!(
                "cannot drop unknown numeric column '{d}'"
            )));
        }
    }

    let mut numeric = Vec::new();
    for (slot, name) in names.iter().enumerate().take(NUM_FEATURES) {
        if opts.drop.iter().any(|d| d == name) {
            continue;
        }
        let present: Vec<f64> = train
            .records
            .iter()
            .filter_map(|r| r.numeric[slot])
            .collect();
        if present.is_empty() {
            return Err(NeoError::EmptyColumn(name.to_string()));
        }
        let n = present.len() as f64;
        let mean = present.iter().sum::<f64>() / n;
        let var = present.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        numeric.push(ColumnStats {
            name: name.to_string(),
            slot,
            mean,
            std: var.sqrt(),
        });
    }

    let hla_name = train
        .schema
        .columns
        .iter()
        .find(|c| c.role == ColumnRole::Hla)
        .map(|c| c.name.clone())
        .expect("validated schema has an hla column");
    let mut seen: Vec<&str> = train.records.iter().map(|r| r.hla.as_str()).collect();
    seen.sort_unstable();
    seen.dedup();
    let codes = seen
        .into_iter()
        .enumerate()
        .map(|(i, s)| (s.to_string(), i as u32))
        .collect();

    let mut dropped = opts.drop.clone();
    dropped.sort();
    Ok(TransformParams {
        numeric,
        categories: BTreeMap::from([(hla_name, codes)]),
        dropped,
        max_len: opts.max_len,
    })
}

/// z-score with the zero-variance rule.
pub fn standardize(x: f64, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        (x - mean) / std
    }
}

pub fn apply(params: &TransformParams, d: &Dataset) -> Result<NumericMatrix> {
    apply_records(params, &d.records)
}

pub fn apply_records(params: &TransformParams, records: &[FeatureRecord]) -> Result<NumericMatrix> {
    let layout = params.layout();
    let (hla_col, codes) = params
        .categories
        .iter()
        .next()
        .ok_or_else(|| NeoError::Config("transform has no categorical encoding".into()))?;

    let mut out = NumericMatrix::zeros(records.len(), layout.width());
    for (i, r) in records.iter().enumerate() {
        let row = out.row_mut(i);
        for (k, col) in params.numeric.iter().enumerate() {
            let x = r.numeric[col.slot].unwrap_or(col.mean);
            row[k] = standardize(x, col.mean, col.std);
        }
        let code = codes.get(&r.hla).ok_or_else(|| NeoError::UnseenCategory {
            column: hla_col.clone(),
            value: r.hla.clone(),
        })?;
        row[layout.hla()] = *code as f64;
        let mt = tokenize(r.peptide_mut.residues(), layout.max_len)?;
        let wt = tokenize(r.peptide_wt.residues(), layout.max_len)?;
        for (dst, &t) in row[layout.mutant()].iter_mut().zip(&mt.tokens) {
            *dst = t as f64;
        }
        for (dst, &t) in row[layout.wild_type()].iter_mut().zip(&wt.tokens) {
            *dst = t as f64;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Peptide, Schema};

    fn record(f1: Option<f64>, hla: &str) -> FeatureRecord {
        let mut numeric = [Some(1.0); NUM_FEATURES];
        numeric[0] = f1;
        FeatureRecord {
            id: "r".into(),
            peptide_mut: Peptide::parse("SIINFEKL").unwrap(),
            peptide_wt: Peptide::parse("SIINFEKA").unwrap(),
            hla: hla.into(),
            numeric,
            label: 0,
        }
    }

    fn dataset(f1: &[Option<f64>]) -> Dataset {
        Dataset::new(
            f1.iter().map(|&v| record(v, "A*02:01")).collect(),
            Schema::default(),
        )
        .unwrap()
    }

    #[test]
    fn mean_skips_missing() {
        let p = fit(&dataset(&[Some(1.0), None, Some(3.0)]), &Default::default()).unwrap();
        assert_eq!(p.numeric[0].mean, 2.0);
    }

    #[test]
    fn population_std() {
        let p = fit(
            &dataset(&[Some(1.0), Some(2.0), Some(3.0)]),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(p.numeric[0].mean, 2.0);
        assert!((p.numeric[0].std - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn categories_sorted() {
        let d = Dataset::new(
            vec![
                record(Some(1.0), "A*02:01"),
                record(Some(1.0), "A*01:01"),
                record(Some(2.0), "A*02:01"),
            ],
            Schema::default(),
        )
        .unwrap();
        let p = fit(&d, &Default::default()).unwrap();
        let codes = p.hla_categories().unwrap();
        assert_eq!(codes["A*01:01"], 0);
        assert_eq!(codes["A*02:01"], 1);
        assert_eq!(codes.len(), 2);
    }

    #[test]
    fn standardizes() {
        let d = dataset(&[Some(1.0), Some(2.0), Some(3.0)]);
        let p = fit(&d, &Default::default()).unwrap();
        let m = apply(&p, &d).unwrap();
        let col = m.column(0);
        let z = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((col[0] + z).abs() < 1e-12 && col[1] == 0.0 && (col[2] - z).abs() < 1e-12);
        assert!((z - 1.2247).abs() < 1e-4);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        let d = dataset(&[Some(5.0), Some(5.0), Some(5.0)]);
        let p = fit(&d, &Default::default()).unwrap();
        assert_eq!(apply(&p, &d).unwrap().column(0), vec![0.0; 3]);
    }

    #[test]
    fn missing_imputes_to_zero_score() {
        let train = dataset(&[Some(1.0), Some(3.0)]);
        let p = fit(&train, &Default::default()).unwrap();
        let m = apply(&p, &dataset(&[None])).unwrap();
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn all_missing_column_is_an_error() {
        let err = fit(&dataset(&[None, None]), &Default::default()).unwrap_err();
        assert!(err.to_string().contains("f1"));
    }

    #[test]
    fn unseen_category() {
        let p = fit(&dataset(&[Some(1.0)]), &Default::default()).unwrap();
        let other = Dataset::new(vec![record(Some(1.0), "C*07:01")], Schema::default()).unwrap();
        let err = apply(&p, &other).unwrap_err();
        assert!(err.to_string().contains("C*07:01"));
    }

    #[test]
    fn layout_and_tokens() {
        let d = dataset(&[Some(1.0)]);
        let opts = PreprocessOptions {
            drop: vec!["f3".into()],
            max_len: 10,
        };
        let p = fit(&d, &opts).unwrap();
        let lay = p.layout();
        assert_eq!(lay.n_numeric, 7);
        assert_eq!(lay.width(), 7 + 1 + 20);
        let m = apply(&p, &d).unwrap();
        let row = m.row(0);
        // SIINFEKL / SIINFEKA
        assert_eq!(
            &row[lay.mutant()],
            &[15., 7., 7., 11., 4., 3., 8., 9., 20., 20.]
        );
        assert_eq!(row[lay.wild_type()][7], 0.0);
        assert!(fit(
            &d,
            &PreprocessOptions {
                drop: vec!["zz".into()],
                max_len: 10
            }
        )
        .is_err());
    }

    proptest::proptest! {
        #[test]
        fn standardized_moments(xs in proptest::collection::vec(-1e3f64..1e3, 2..60)) {
            let d = dataset(&xs.iter().map(|&x| Some(x)).collect::<Vec<_>>());
            let p = fit(&d, &Default::default()).unwrap();
            let col = apply(&p, &d).unwrap().column(0);
            let n = col.len() as f64;
            let mean = col.iter().sum::<f64>() / n;
            let std = (col.iter().map(|z| (z - mean) * (z - mean)).sum::<f64>() / n).sqrt();
            proptest::prop_assert!(mean.abs() < 1e-9);
            proptest::prop_assert!(std == 0.0 || (std - 1.0).abs() < 1e-9, "std {}", std);
        }
    }
}
