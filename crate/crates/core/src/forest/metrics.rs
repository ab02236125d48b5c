use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Confusion counts with label 1 (manipulated) as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

/// Classification metrics. Any ratio with a zero denominator is 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl Metrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            accuracy: ratio(c.tp + c.tn, c.tp + c.fp + c.tn + c.fn_),
            f1,
            confusion: c,
        }
    }
}

pub fn evaluate(y_true: &[u8], y_pred: &[u8]) -> Result<Metrics> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            expected: y_true.len(),
            actual: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::EmptyData);
    }
    let mut c = Confusion::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t != 0, p != 0) {
            (true, true) => c.tp += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fn_ += 1,
        }
    }
    Ok(Metrics::from_confusion(c))
}

/// Mean and population standard deviation of one metric over folds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return Self::default();
        }
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub accuracy: MeanStd,
    pub f1: MeanStd,
}

impl MetricSummary {
    pub fn of(folds: &[Metrics]) -> Self {
        Self {
            precision: MeanStd::of(folds.iter().map(|m| m.precision)),
            recall: MeanStd::of(folds.iter().map(|m| m.recall)),
            accuracy: MeanStd::of(folds.iter().map(|m| m.accuracy)),
            f1: MeanStd::of(folds.iter().map(|m| m.f1)),
        }
    }

    /// Four-row `metric  mean ± std` table.
    pub fn table(&self, title: &str) -> String {
        let mut s = format!("{title:<12} {:>8}   {:>8}\n", "mean", "std");
        for (name, m) in [
            ("Precision", self.precision),
            ("Recall", self.recall),
            ("Accuracy", self.accuracy),
            ("F1 Score", self.f1),
        ] {
            s.push_str(&format!("{name:<12} {:>8.4} ± {:>8.4}\n", m.mean, m.std));
        }
        s
    }
}
