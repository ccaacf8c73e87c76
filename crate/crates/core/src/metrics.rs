//! Confusion-matrix rates, ROC curve and AUC.
//!
//! Every threshold comparison uses `score >= threshold`, matching the
//! classifier's decision rule, so the ROC curve and the reported confusion
//! matrix agree at the deployed threshold.

use serde::{Deserialize, Serialize};

use crate::error::{NeoError, Result};
use crate::nn::{classify, mean_bce};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(preds: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(NeoError::Dimension {
            context: "confusion matrix",
            expected: truth.len(),
            got: preds.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truth) {
        match (p, t) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fn_ += 1,
            _ => return Err(NeoError::Data(format!("non-binary label pair ({p}, {t})"))),
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub accuracy: f64,
    pub recall: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    /// Rates that were defined as 0 because their denominator vanished.
    pub degenerate: Vec<String>,
}

pub fn rates(cm: &ConfusionMatrix) -> Result<Rates> {
    let total = cm.total();
    if total == 0 {
        return Err(NeoError::Data("confusion matrix is empty".into()));
    }
    let mut degenerate = Vec::new();
    let mut ratio = |num: u64, den: u64, name: &str| {
        if den == 0 {
            degenerate.push(name.to_string());
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let accuracy = ratio(cm.tp + cm.tn, total, "accuracy");
    let recall = ratio(cm.tp, cm.tp + cm.fn_, "recall");
    let specificity = ratio(cm.tn, cm.tn + cm.fp, "specificity");
    let precision = ratio(cm.tp, cm.tp + cm.fp, "precision");
    let f1 = if precision + recall == 0.0 {
        degenerate.push("f1".into());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Rates {
        accuracy,
        recall,
        specificity,
        precision,
        f1,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points at every distinct score (descending), preceded by a sentinel
/// threshold above the maximum score at which nothing is called positive.
pub fn roc_curve(scores: &[f64], truth: &[u8]) -> Result<Vec<RocPoint>> {
    if scores.len() != truth.len() {
        return Err(NeoError::Dimension {
            context: "roc curve",
            expected: truth.len(),
            got: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(NeoError::Data("roc curve needs finite scores".into()));
    }
    let pos = truth.iter().filter(|&&y| y == 1).count() as f64;
    let neg = truth.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Err(NeoError::Data(
            "roc curve needs both classes present".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let max = scores[order[0]];
    let mut points = vec![RocPoint {
        threshold: max + 1.0,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let thr = scores[order[i]];
        while i < order.len() && scores[order[i]] == thr {
            if truth[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: thr,
            fpr: fp as f64 / neg,
            tpr: tp as f64 / pos,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve.
pub fn auc(roc: &[RocPoint]) -> Result<f64> {
    let (first, last) = match (roc.first(), roc.last()) {
        (Some(f), Some(l)) if roc.len() >= 2 => (f, l),
        _ => return Err(NeoError::Data("roc curve needs at least two points".into())),
    };
    if first.fpr != 0.0 || first.tpr != 0.0 || last.fpr != 1.0 || last.tpr != 1.0 {
        return Err(NeoError::Data(
            "roc curve must run from (0,0) to (1,1)".into(),
        ));
    }
    let mut area = 0.0;
    for w in roc.windows(2) {
        if w[1].fpr < w[0].fpr || w[1].tpr < w[0].tpr {
            return Err(NeoError::Data("roc curve is not monotone".into()));
        }
        area += (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0;
    }
    Ok(area.clamp(0.0, 1.0))
}

pub fn roc_auc(scores: &[f64], truth: &[u8]) -> Result<f64> {
    auc(&roc_curve(scores, truth)?)
}

pub fn roc_to_csv(roc: &[RocPoint]) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for p in roc {
        out.push_str(&format!("{:?},{:?},{:?}\n", p.threshold, p.fpr, p.tpr));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub records: usize,
    pub total_ms: f64,
    pub records_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub records: usize,
    pub positives: usize,
    pub threshold: f64,
    pub confusion: ConfusionMatrix,
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub precision: f64,
    pub f1: f64,
    pub degenerate: Vec<String>,
    pub auc: f64,
    /// Mean BCE of the scored probabilities.
    pub loss: f64,
    pub roc: Vec<RocPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

/// Full evaluation of probabilities against truth at `threshold`.
pub fn evaluate(probs: &[f64], truth: &[u8], threshold: f64) -> Result<EvalReport> {
    let preds: Vec<u8> = probs.iter().map(|&p| classify(p, threshold)).collect();
    let cm = confusion(&preds, truth)?;
    let r = rates(&cm)?;
    let roc = roc_curve(probs, truth)?;
    Ok(EvalReport {
        records: truth.len(),
        positives: truth.iter().filter(|&&y| y == 1).count(),
        threshold,
        confusion: cm,
        accuracy: r.accuracy,
        sensitivity: r.recall,
        specificity: r.specificity,
        precision: r.precision,
        f1: r.f1,
        degenerate: r.degenerate,
        auc: auc(&roc)?,
        loss: mean_bce(probs, truth),
        roc,
        timing: None,
    })
}
