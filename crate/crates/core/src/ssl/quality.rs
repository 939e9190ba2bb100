use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use super::pseudo::PseudoCategorySet;
use crate::numerics::argmax;
use crate::{FfError, Result};

/// Share of a sample's pseudo-category mass held by each original class.
#[derive(Clone, Debug, PartialEq)]
pub struct QualityScore {
    pub scores: Array1<f64>,
    pub best_class: usize,
    pub best_score: f64,
}

/// `S_i = Σ_{k∈C_i} p_k / Σ_j p_j`
pub fn quality_scores(p: ArrayView1<f64>, cats: &PseudoCategorySet) -> Result<QualityScore> {
    if p.len() != cats.len() {
        return Err(FfError::dim("probability vector length differs from category count"));
    }
    let total: f64 = p.sum();
    if !(total > 0.0) {
        return Err(FfError::Degenerate("probability vector has no mass".into()));
    }
    let mut scores = Array1::zeros(cats.num_classes());
    for (&pk, &c) in p.iter().zip(&cats.class_of) {
        scores[c] += pk;
    }
    scores /= total;
    let best_class = argmax(scores.view());
    Ok(QualityScore {
        best_score: scores[best_class],
        best_class,
        scores,
    })
}

/// N × L class scores for a batch of probability rows.
pub fn quality_scores_batch(p: ArrayView2<f64>, cats: &PseudoCategorySet) -> Result<Array2<f64>> {
    if p.ncols() != cats.len() {
        return Err(FfError::dim("probability width differs from category count"));
    }
    let mut s = p.dot(&cats.membership());
    for mut row in s.rows_mut() {
        let total = row.sum();
        if total > 0.0 {
            row /= total;
        }
    }
    Ok(s)
}

/// Keeps the `⌈keep_fraction·n⌉` highest scores (ties to the lower index);
/// returns their indices in ascending order.
pub fn select_unlabeled(best_scores: &[f64], keep_fraction: f64) -> Result<Vec<usize>> {
    if !(keep_fraction > 0.0 && keep_fraction <= 1.0) {
        return Err(FfError::config(format!(
            "keep fraction {keep_fraction} outside (0, 1]"
        )));
    }
    let n = best_scores.len();
    let keep = ((keep_fraction * n as f64) - 1e-9).ceil().clamp(0.0, n as f64) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        best_scores[b]
            .total_cmp(&best_scores[a])
            .then(a.cmp(&b))
    });
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();
    Ok(kept)
}
