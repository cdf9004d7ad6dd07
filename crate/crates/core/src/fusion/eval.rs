use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{extract_features, require_labels, SampleFeatures, TrainedModel};
use crate::csi::{ActivityLabel, CsiTrace};
use crate::error::{Error, Result};
use crate::svm::ovo::CLASSES;

/// `counts[actual][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub counts: [[u64; CLASSES]; CLASSES],
}

impl Confusion {
    pub fn add(&mut self, actual: ActivityLabel, predicted: ActivityLabel) {
        self.counts[actual.code()][predicted.code()] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let diag: u64 = (0..CLASSES).map(|c| self.counts[c][c]).sum();
        ratio(diag, self.total())
    }

    pub fn tp_rate(&self) -> [f64; CLASSES] {
        std::array::from_fn(|c| ratio(self.counts[c][c], self.row_sum(c)))
    }

    pub fn fp_rate(&self) -> [f64; CLASSES] {
        let total = self.total();
        std::array::from_fn(|c| {
            ratio(self.col_sum(c) - self.counts[c][c], total - self.row_sum(c))
        })
    }
}

// 0 when the denominator is empty
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub confusion: Confusion,
    pub accuracy: f64,
    pub tp_rate: [f64; CLASSES],
    pub fp_rate: [f64; CLASSES],
    pub amplitude_confusion: Confusion,
    pub phase_confusion: Confusion,
    pub amplitude_accuracy: f64,
    pub phase_accuracy: f64,
}

impl EvalReport {
    pub fn from_confusions(fused: Confusion, amplitude: Confusion, phase: Confusion) -> Self {
        Self {
            accuracy: fused.accuracy(),
            tp_rate: fused.tp_rate(),
            fp_rate: fused.fp_rate(),
            confusion: fused,
            amplitude_accuracy: amplitude.accuracy(),
            phase_accuracy: phase.accuracy(),
            amplitude_confusion: amplitude,
            phase_confusion: phase,
        }
    }
}

pub fn evaluate(model: &TrainedModel, test: &[CsiTrace]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    evaluate_features(model, &extract_features(test, &model.features)?)
}

pub fn evaluate_features(model: &TrainedModel, test: &[SampleFeatures]) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let labels = require_labels(test)?;
    let predictions = test
        .par_iter()
        .map(|f| model.predict_features(f))
        .collect::<Result<Vec<_>>>()?;
    let mut fused = Confusion::default();
    let mut amp = Confusion::default();
    let mut phase = Confusion::default();
    for (p, &y) in predictions.iter().zip(&labels) {
        fused.add(y, p.label);
        amp.add(y, p.amplitude.argmax());
        phase.add(y, p.phase.argmax());
    }
    Ok(EvalReport::from_confusions(fused, amp, phase))
}

/// Writes `confusion.csv` (fused, rows actual, columns predicted) and
/// `metrics.json` into `dir`.
pub fn write_report(report: &EvalReport, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("confusion.csv"))
        .map_err(|e| Error::Io(std::io::Error::other(e)))?;
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut header = vec!["actual".to_string()];
    header.extend(ActivityLabel::ALL.iter().map(|l| l.name().to_string()));
    w.write_record(&header).map_err(csv_err)?;
    for (c, row) in report.confusion.counts.iter().enumerate() {
        let mut rec = vec![ActivityLabel::ALL[c].name().to_string()];
        rec.extend(row.iter().map(|n| n.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    let json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::InvalidArgument(format!("report serialisation failed: {e}")))?;
    fs::write(dir.join("metrics.json"), json)?;
    Ok(())
}
