use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{NeoError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.8,
            validation: 0.1,
            test: 0.1,
        }
    }
}

impl SplitFractions {
    pub fn new(train: f64, validation: f64, test: f64) -> Self {
        SplitFractions {
            train,
            validation,
            test,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|&f| !(f.is_finite() && f > 0.0)) {
            return Err(NeoError::Config(format!(
                "split fractions must be positive, got {parts:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(NeoError::Config(format!(
                "split fractions sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Counts (train, validation, test) for a pool of `n`. Validation and test
/// take their rounded share; train takes the remainder. With `floor_one`,
/// every split gets at least one item (caller guarantees `n >= 3`).
fn allocate(n: usize, f: &SplitFractions, floor_one: bool) -> [usize; 3] {
    let share = |frac: f64| (n as f64 * frac).round() as usize;
    let (mut va, mut te) = (share(f.validation), share(f.test));
    let min = usize::from(floor_one);
    va = va.max(min);
    te = te.max(min);
    while va + te + min > n {
        if va >= te && va > min {
            va -= 1;
        } else if te > min {
            te -= 1;
        } else {
            break;
        }
    }
    [n - va - te, va, te]
}

/// Partition record indices into (train, validation, test).
///
/// Each returned index list is sorted ascending, so the original row order is
/// kept inside every split.
pub fn split_indices(
    labels: &[u8],
    fractions: &SplitFractions,
    seed: u64,
    stratify: bool,
) -> Result<[Vec<usize>; 3]> {
    fractions.validate()?;
    if labels.is_empty() {
        return Err(NeoError::Data("cannot split an empty dataset".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: [Vec<usize>; 3] = Default::default();

    let mut deal = |mut pool: Vec<usize>, floor_one: bool, rng: &mut ChaCha8Rng| {
        pool.shuffle(rng);
        let counts = allocate(pool.len(), fractions, floor_one);
        let mut rest = pool.as_slice();
        for (bucket, &c) in out.iter_mut().zip(&counts) {
            let (take, tail) = rest.split_at(c);
            bucket.extend_from_slice(take);
            rest = tail;
        }
    };

    if stratify {
        let pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).collect();
        let neg: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] != 1).collect();
        if pos.is_empty() {
            return Err(NeoError::Data(
                "stratified split requested but the dataset has no positives".into(),
            ));
        }
        let floor = pos.len() >= 3;
        deal(pos, floor, &mut rng);
        deal(neg, false, &mut rng);
    } else {
        deal((0..labels.len()).collect(), false, &mut rng);
    }

    for bucket in &mut out {
        bucket.sort_unstable();
    }
    Ok(out)
}

/// Split into (train, validation, test) datasets. Fails if any split would be
/// empty.
pub fn split(
    d: &Dataset,
    fractions: &SplitFractions,
    seed: u64,
    stratify: bool,
) -> Result<(Dataset, Dataset, Dataset)> {
    let [tr, va, te] = split_indices(&d.labels(), fractions, seed, stratify)?;
    let take = |idx: &[usize], name: &str| {
        if idx.is_empty() {
            return Err(NeoError::Data(format!(
                "{name} split is empty ({} records is too few)",
                d.len()
            )));
        }
        Dataset::new(
            idx.iter().map(|&i| d.records[i].clone()).collect(),
            d.schema.clone(),
        )
    };
    Ok((
        take(&tr, "train")?,
        take(&va, "validation")?,
        take(&te, "test")?,
    ))
}
