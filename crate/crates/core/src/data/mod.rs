//! Records, peptides and datasets.
//!
//! A dataset row describes one candidate epitope: the mutant and wild-type
//! peptide strings, the HLA allele it was scored against, eight opaque numeric
//! feature columns (external predictor scores, expression values, ...) and the
//! binary binding label.

mod csv_io;
mod split;
mod synth;

pub use csv_io::{parse_dataset, read_dataset, serialize_dataset, write_dataset};
pub use split::{split, SplitFractions};
pub use synth::{
    synth_generate, synth_unlabeled, PlantedRule, SynthConfig, Synthesized, HLA_ALLELES,
};

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};

/// Canonical amino-acid alphabet, sorted.
pub const ALPHABET: &[u8; 20] = b"ACDEFGHIKLMNPQRSTVWY";
/// Token emitted for positions past the end of a peptide.
pub const PAD_CODE: u8 = 20;
pub const MIN_PEPTIDE_LEN: usize = 8;
pub const MAX_PEPTIDE_LEN: usize = 25;
pub const DEFAULT_MAX_LEN: usize = 25;
/// Number of numeric feature slots per record.
pub const NUM_FEATURES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AminoAcid(u8);

impl AminoAcid {
    pub fn from_code(code: u8) -> Option<Self> {
        (code < 20).then_some(AminoAcid(code))
    }

    pub fn from_letter(c: char) -> Result<Self> {
        if !c.is_ascii() {
            return Err(NeoError::InvalidResidue(c));
        }
        ALPHABET
            .iter()
            .position(|&l| l == c as u8)
            .map(|i| AminoAcid(i as u8))
            .ok_or(NeoError::InvalidResidue(c))
    }

    pub fn code(self) -> u8 {
        self.0
    }

    pub fn letter(self) -> char {
        ALPHABET[self.0 as usize] as char
    }
}

/// Parse a residue string without length bounds.
pub fn parse_residues(s: &str) -> Result<Vec<AminoAcid>> {
    s.chars().map(AminoAcid::from_letter).collect()
}

/// A peptide of 8 to 25 canonical residues.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Peptide(Vec<AminoAcid>);

impl Peptide {
    pub fn new(residues: Vec<AminoAcid>) -> Result<Self> {
        let len = residues.len();
        if !(MIN_PEPTIDE_LEN..=MAX_PEPTIDE_LEN).contains(&len) {
            return Err(NeoError::Length {
                len,
                min: MIN_PEPTIDE_LEN,
                max: MAX_PEPTIDE_LEN,
            });
        }
        Ok(Peptide(residues))
    }

    pub fn parse(s: &str) -> Result<Self> {
        Peptide::new(parse_residues(s)?)
    }

    pub fn residues(&self) -> &[AminoAcid] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Peptide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for aa in &self.0 {
            write!(f, "{}", aa.letter())?;
        }
        Ok(())
    }
}

/// Fixed-width token vector; positions at or past `valid_len` hold [`PAD_CODE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPeptide {
    pub tokens: Vec<u8>,
    pub valid_len: usize,
}

pub fn tokenize(residues: &[AminoAcid], max_len: usize) -> Result<TokenizedPeptide> {
    if residues.len() > max_len {
        return Err(NeoError::Length {
            len: residues.len(),
            min: 0,
            max: max_len,
        });
    }
    let mut tokens = vec![PAD_CODE; max_len];
    for (t, aa) in tokens.iter_mut().zip(residues) {
        *t = aa.code();
    }
    Ok(TokenizedPeptide {
        tokens,
        valid_len: residues.len(),
    })
}

pub fn detokenize(t: &TokenizedPeptide) -> Vec<AminoAcid> {
    t.tokens[..t.valid_len]
        .iter()
        .map(|&c| AminoAcid(c))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRecord {
    pub id: String,
    pub peptide_mut: Peptide,
    pub peptide_wt: Peptide,
    pub hla: String,
    pub numeric: [Option<f64>; NUM_FEATURES],
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnRole {
    Id,
    PeptideMut,
    PeptideWt,
    Hla,
    Numeric,
    Label,
    /// Present in the file, ignored on read.
    Dropped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub role: ColumnRole,
}

/// Column layout of an input file.
///
/// The standard layout is
/// `id,peptide_mut,peptide_wt,hla,f1,f2,f3,f4,f5,f6,f7,f8,label`; extra
/// columns may be declared with [`ColumnRole::Dropped`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Default for Schema {
    fn default() -> Self {
        let mut columns = vec![
            Column::new("id", ColumnRole::Id),
            Column::new("peptide_mut", ColumnRole::PeptideMut),
            Column::new("peptide_wt", ColumnRole::PeptideWt),
            Column::new("hla", ColumnRole::Hla),
        ];
        for j in 1..=NUM_FEATURES {
            columns.push(Column::new(&format!("f{j}"), ColumnRole::Numeric));
        }
        columns.push(Column::new("label", ColumnRole::Label));
        Schema { columns }
    }
}

impl Column {
    pub fn new(name: &str, role: ColumnRole) -> Self {
        Column {
            name: name.to_string(),
            role,
        }
    }
}

impl Schema {
    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn numeric_names(&self) -> Vec<&str> {
        self.columns
            .iter()
            .filter(|c| c.role == ColumnRole::Numeric)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        for role in [
            ColumnRole::Id,
            ColumnRole::PeptideMut,
            ColumnRole::PeptideWt,
            ColumnRole::Hla,
            ColumnRole::Label,
        ] {
            let n = self.columns.iter().filter(|c| c.role == role).count();
            if n != 1 {
                return Err(NeoError::Config(format!(
                    "schema needs exactly one {role:?} column, found {n}"
                )));
            }
        }
        let numeric = self.numeric_names().len();
        if numeric != NUM_FEATURES {
            return Err(NeoError::Config(format!(
                "schema needs {NUM_FEATURES} numeric columns, found {numeric}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: Vec<FeatureRecord>,
    pub schema: Schema,
}

impl Dataset {
    pub fn new(records: Vec<FeatureRecord>, schema: Schema) -> Result<Self> {
        if records.is_empty() {
            return Err(NeoError::Data("dataset has no records".into()));
        }
        schema.validate()?;
        Ok(Dataset { records, schema })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label == 1).count()
    }
}
