use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ClassifierKind, ExperimentConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Binary classification rates with class 1 as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

/// Accuracy, precision, recall and F1 for class 1.
///
/// Zero denominators give 0: precision with no positive predictions, recall
/// with no positive truths, F1 when precision + recall is 0.
pub fn compute_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<SplitMetrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension(format!(
            "{} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    if y_true.is_empty() {
        return Err(Error::Argument("cannot score an empty split".into()));
    }
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => c.tp += 1,
            (0, 1) => c.fp += 1,
            (0, 0) => c.tn += 1,
            (1, 0) => c.fn_ += 1,
            _ => return Err(Error::Argument(format!("labels must be 0/1, got ({t}, {p})"))),
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(SplitMetrics {
        accuracy: ratio(c.tp + c.tn, c.total()),
        precision,
        recall,
        f1,
        confusion: c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Train,
    Test,
}

/// Which split a fitted stage was estimated from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitRecord {
    pub stage: String,
    pub split: SplitKind,
    pub rows: usize,
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: ClassifierKind,
    pub pca_k: Option<usize>,
    pub haar_levels: usize,
    pub train: SplitMetrics,
    pub test: SplitMetrics,
    /// Classifier training wall time, including kernel construction.
    pub train_time_s: f64,
    pub n_train: usize,
    /// Training rows seen by the classifier after Haar compression.
    pub n_train_used: usize,
    pub n_test: usize,
    /// Documents dropped because nothing survived cleaning.
    pub discarded_rows: usize,
    /// Training rows dropped to fill whole Haar blocks, per class.
    pub truncated_rows: BTreeMap<u8, usize>,
    pub converged: bool,
    pub fits: Vec<FitRecord>,
    pub config: ExperimentConfig,
}
