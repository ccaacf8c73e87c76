//! Synthetic minority over-sampling.
//!
//! Each synthetic row picks a minority sample uniformly at random, one of its
//! `k` nearest minority neighbours uniformly at random, and a point uniformly
//! on the segment between them. Neighbour search is exact brute force.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::matrix::NumericMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoteConfig {
    pub k: usize,
    /// Desired minority/majority count ratio after over-sampling.
    pub target_ratio: f64,
    pub seed: u64,
}

impl Default for SmoteConfig {
    fn default() -> Self {
        SmoteConfig {
            k: 5,
            target_ratio: 1.0,
            seed: 0,
        }
    }
}

impl SmoteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(NeoError::Config("smote k must be >= 1".into()));
        }
        if !(self.target_ratio.is_finite() && self.target_ratio > 0.0) {
            return Err(NeoError::Config("smote target_ratio must be > 0".into()));
        }
        Ok(())
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// For every row, the indices of its `k` nearest other rows (Euclidean), ties
/// broken by lower index. `k` is clamped to `rows - 1`.
pub fn minority_neighbors(x_min: &NumericMatrix, k: usize) -> Result<Vec<Vec<usize>>> {
    let m = x_min.rows();
    if m < 2 {
        return Err(NeoError::Data(format!(
            "need at least 2 minority rows to interpolate, found {m}"
        )));
    }
    let k = k.min(m - 1);
    let mut table = Vec::with_capacity(m);
    for i in 0..m {
        let mut cand: Vec<(f64, usize)> = (0..m)
            .filter(|&j| j != i)
            .map(|j| (sq_dist(x_min.row(i), x_min.row(j)), j))
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        table.push(cand.into_iter().take(k).map(|(_, j)| j).collect());
    }
    Ok(table)
}

/// `s + u * (n - s)`.
pub fn synthesize(s: &[f64], n: &[f64], u: f64) -> Result<Vec<f64>> {
    if s.len() != n.len() {
        return Err(NeoError::Dimension {
            context: "smote interpolation",
            expected: s.len(),
            got: n.len(),
        });
    }
    Ok(s.iter().zip(n).map(|(a, b)| a + u * (b - a)).collect())
}

/// Grow the minority class until it holds `round(target_ratio * majority)`
/// rows. Original rows come first and are untouched; synthetic rows follow.
pub fn oversample(
    x: &NumericMatrix,
    y: &[u8],
    cfg: &SmoteConfig,
) -> Result<(NumericMatrix, Vec<u8>)> {
    cfg.validate()?;
    if x.rows() != y.len() {
        return Err(NeoError::Dimension {
            context: "smote labels",
            expected: x.rows(),
            got: y.len(),
        });
    }
    let n_pos = y.iter().filter(|&&l| l == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(NeoError::Data("smote needs both classes present".into()));
    }
    let (minority, n_min, n_maj) = if n_pos <= n_neg {
        (1u8, n_pos, n_neg)
    } else {
        (0u8, n_neg, n_pos)
    };
    let target = (cfg.target_ratio * n_maj as f64).round() as usize;

    let mut out_x = x.clone();
    let mut out_y = y.to_vec();
    if target <= n_min {
        return Ok((out_x, out_y));
    }

    let min_idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == minority).collect();
    let x_min = x.select_rows(&min_idx);
    let neighbors = minority_neighbors(&x_min, cfg.k)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..target - n_min {
        let s = rng.gen_range(0..x_min.rows());
        let nb = &neighbors[s];
        let n = nb[rng.gen_range(0..nb.len())];
        let u: f64 = rng.gen();
        out_x.push_row(&synthesize(x_min.row(s), x_min.row(n), u)?)?;
        out_y.push(minority);
    }
    Ok((out_x, out_y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(rows: &[&[f64]]) -> NumericMatrix {
        NumericMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn nearest_neighbour() {
        let x = mat(&[&[0., 0.], &[1., 0.], &[10., 0.]]);
        assert_eq!(
            minority_neighbors(&x, 1).unwrap(),
            vec![vec![1], vec![0], vec![1]]
        );
    }

    #[test]
    fn k_is_clamped() {
        let x = mat(&[&[0., 0.], &[1., 0.], &[10., 0.]]);
        let t = minority_neighbors(&x, 5).unwrap();
        assert!(t.iter().all(|r| r.len() == 2));
    }

    #[test]
    fn ties_prefer_lower_index() {
        let x = mat(&[&[0.], &[1.], &[1.], &[-1.]]);
        let t = minority_neighbors(&x, 1).unwrap();
        assert_eq!(t[0], vec![1]);
        assert_eq!(t[1], vec![2]);
        assert_eq!(t[2], vec![1]);
    }

    #[test]
    fn too_few_rows() {
        assert!(minority_neighbors(&mat(&[&[0.]]), 3).is_err());
    }

    #[test]
    fn interpolation() {
        assert_eq!(synthesize(&[0., 0.], &[2., 2.], 0.5).unwrap(), vec![1., 1.]);
        assert_eq!(
            synthesize(&[3., -1.], &[2., 2.], 0.0).unwrap(),
            vec![3., -1.]
        );
        assert_eq!(
            synthesize(&[3., -1.], &[2., 2.], 1.0).unwrap(),
            vec![2., 2.]
        );
        assert!(synthesize(&[0.], &[1., 2.], 0.3).is_err());
    }

    fn imbalanced(n_neg: usize, n_pos: usize) -> (NumericMatrix, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let rows: Vec<Vec<f64>> = (0..n_neg + n_pos)
            .map(|i| {
                let shift = if i < n_pos { 3.0 } else { 0.0 };
                (0..3).map(|_| shift + rng.gen::<f64>()).collect()
            })
            .collect();
        let y = (0..n_neg + n_pos).map(|i| u8::from(i < n_pos)).collect();
        (NumericMatrix::from_rows(&rows).unwrap(), y)
    }

    #[test]
    fn balances_to_one_to_one() {
        let (x, y) = imbalanced(100, 10);
        let (ox, oy) = oversample(&x, &y, &SmoteConfig::default()).unwrap();
        assert_eq!(oy.iter().filter(|&&l| l == 1).count(), 100);
        assert_eq!(oy.iter().filter(|&&l| l == 0).count(), 100);
        assert_eq!(ox.rows(), 200);
        for i in 0..x.rows() {
            assert_eq!(ox.row(i), x.row(i));
        }
    }

    #[test]
    fn balanced_input_unchanged() {
        let (x, y) = imbalanced(10, 10);
        let (ox, oy) = oversample(&x, &y, &SmoteConfig::default()).unwrap();
        assert_eq!(ox, x);
        assert_eq!(oy, y);
    }

    #[test]
    fn synthetic_rows_stay_in_minority_box() {
        let (x, y) = imbalanced(300, 12);
        let (ox, oy) = oversample(
            &x,
            &y,
            &SmoteConfig {
                seed: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let minority: Vec<&[f64]> = (0..x.rows())
            .filter(|&i| y[i] == 1)
            .map(|i| x.row(i))
            .collect();
        for j in 0..x.cols() {
            let lo = minority.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = minority
                .iter()
                .map(|r| r[j])
                .fold(f64::NEG_INFINITY, f64::max);
            for (i, &label) in oy.iter().enumerate().skip(x.rows()) {
                assert_eq!(label, 1);
                assert!(ox.get(i, j) >= lo && ox.get(i, j) <= hi);
            }
        }
    }

    #[test]
    fn ratio_rounding() {
        let (x, y) = imbalanced(101, 5);
        let cfg = SmoteConfig {
            target_ratio: 0.5,
            ..Default::default()
        };
        let (_, oy) = oversample(&x, &y, &cfg).unwrap();
        assert_eq!(oy.iter().filter(|&&l| l == 1).count(), 51);
    }

    #[test]
    fn rejects_bad_input() {
        let (x, _) = imbalanced(5, 0);
        assert!(oversample(&x, &[0; 5], &SmoteConfig::default()).is_err());
        let (x, y) = imbalanced(5, 1);
        assert!(oversample(&x, &y, &SmoteConfig::default()).is_err());
        let (x, y) = imbalanced(5, 2);
        assert!(oversample(
            &x,
            &y,
            &SmoteConfig {
                k: 0,
                ..Default::default()
            }
        )
        .is_err());
        assert!(oversample(&x, &y[1..], &SmoteConfig::default()).is_err());
    }

    #[test]
    fn seeds() {
        let (x, y) = imbalanced(50, 5);
        let a = oversample(
            &x,
            &y,
            &SmoteConfig {
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let b = oversample(
            &x,
            &y,
            &SmoteConfig {
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let c = oversample(
            &x,
            &y,
            &SmoteConfig {
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }
}
