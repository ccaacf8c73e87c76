/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before taking logs.
pub const PROB_CLIP: f64 = 1e-12;

/// Binary cross-entropy of a single prediction.
pub fn bce_loss(p: f64, y: u8) -> f64 {
    let p = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
    if y == 1 {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn mean_bce(probs: &[f64], labels: &[u8]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| bce_loss(p, y))
        .sum();
    total / probs.len() as f64
}
