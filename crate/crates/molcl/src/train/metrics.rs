//! Evaluation metrics: ROC-AUC via the rank-sum identity, RMSE/MAE, and
//! range-scaled errors.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("need both classes to rank, got only one")]
    SingleClass,
    #[error("empty input")]
    EmptyInput,
    #[error("label range is zero")]
    ZeroRange,
    #[error("scores and labels differ in length")]
    LengthMismatch,
}

/// Area under the ROC curve, computed as the Mann-Whitney U statistic over
/// `n_pos * n_neg` with ties counted one half.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch);
    }
    if scores.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::SingleClass);
    }
    // Average ranks (1-based) over tied score groups.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut rank_sum_pos = 0.0f64;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share the average rank.
        let avg_rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

pub fn rmse(preds: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(if preds.is_empty() {
            MetricError::EmptyInput
        } else {
            MetricError::LengthMismatch
        });
    }
    let mse: f64 = preds
        .iter()
        .zip(labels.iter())
        .map(|(p, l)| (p - l) * (p - l))
        .sum::<f64>()
        / preds.len() as f64;
    Ok(mse.sqrt())
}

pub fn mae(preds: &[f64], labels: &[f64]) -> Result<f64, MetricError> {
    if preds.is_empty() || preds.len() != labels.len() {
        return Err(if preds.is_empty() {
            MetricError::EmptyInput
        } else {
            MetricError::LengthMismatch
        });
    }
    Ok(preds
        .iter()
        .zip(labels.iter())
        .map(|(p, l)| (p - l).abs())
        .sum::<f64>()
        / preds.len() as f64)
}

/// Error divided by the label range of the benchmark.
pub fn scaled_error(error: f64, label_range: f64) -> Result<f64, MetricError> {
    if label_range <= 0.0 {
        return Err(MetricError::ZeroRange);
    }
    Ok(error / label_range)
}
