//! One-vs-one ensemble over the six activity classes.
//!
//! Every unordered class pair gets its own binary SVM and sigmoid. At
//! prediction time the pairwise probabilities are averaged per class into a
//! score vector. Scores lie in `[0, 1]` but need not sum to one.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{distance_matrix, median_distance, Gram, KernelKind, KernelSpec};
use super::platt::{fit_platt, PlattSigmoid};
use super::smo::{solve, BinarySvm, SmoConfig};
use crate::csi::ActivityLabel;
use crate::error::{Error, Result};

pub const CLASSES: usize = ActivityLabel::COUNT;
pub const PAIRS: usize = CLASSES * (CLASSES - 1) / 2;

/// Per-class scores produced by a stream or by fusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorVector {
    pub scores: [f64; CLASSES],
}

impl PosteriorVector {
    pub fn new(scores: [f64; CLASSES]) -> Self {
        Self { scores }
    }

    pub fn from_slice(scores: &[f64]) -> Result<Self> {
        let scores: [f64; CLASSES] = scores.try_into().map_err(|_| {
            Error::InvalidArgument(format!(
                "posterior vector needs {CLASSES} scores, got {}",
                scores.len()
            ))
        })?;
        Ok(Self { scores })
    }

    /// Index of the largest score; ties go to the lowest class code.
    pub fn argmax(&self) -> ActivityLabel {
        let mut best = 0;
        for (i, &s) in self.scores.iter().enumerate().skip(1) {
            if s > self.scores[best] {
                best = i;
            }
        }
        ActivityLabel::ALL[best]
    }
}

/// `table[c][d]` is the probability that class `c` beats class `d`.
pub type PairwiseTable = [[f64; CLASSES]; CLASSES];

/// Average each row of the pairwise table over its five opponents.
pub fn posterior_from_pairwise(table: &PairwiseTable) -> PosteriorVector {
    let mut scores = [0.0; CLASSES];
    for (c, score) in scores.iter_mut().enumerate() {
        let sum: f64 = (0..CLASSES).filter(|&d| d != c).map(|d| table[c][d]).sum();
        *score = sum / (CLASSES - 1) as f64;
    }
    PosteriorVector { scores }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseClassifier {
    /// Class mapped to label `+1`.
    pub positive: ActivityLabel,
    /// Class mapped to label `-1`.
    pub negative: ActivityLabel,
    pub svm: BinarySvm,
    pub platt: PlattSigmoid,
    pub kkt_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvoEnsemble {
    pub kernel: KernelSpec,
    pub members: Vec<PairwiseClassifier>,
}

/// All unordered class pairs `(c, d)` with `c < d`, in code order.
pub fn class_pairs() -> Vec<(ActivityLabel, ActivityLabel)> {
    let mut out = Vec::with_capacity(PAIRS);
    for c in 0..CLASSES {
        for d in c + 1..CLASSES {
            out.push((ActivityLabel::ALL[c], ActivityLabel::ALL[d]));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OvoConfig {
    pub kind: KernelKind,
    /// Kernel bandwidth; the median pairwise training distance when `None`.
    pub sigma: Option<f64>,
    pub smo: SmoConfig,
}

impl OvoEnsemble {
    pub fn train(features: &[Vec<f64>], labels: &[ActivityLabel], config: &OvoConfig) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::InvalidArgument(format!(
                "{} features but {} labels",
                features.len(),
                labels.len()
            )));
        }
        for class in ActivityLabel::ALL {
            if !labels.contains(&class) {
                return Err(Error::DegenerateTraining(format!(
                    "no training samples for class {class}"
                )));
            }
        }
        let distances = distance_matrix(config.kind, features)?;
        let sigma = match config.sigma {
            Some(s) => s,
            None => median_distance(&distances).unwrap_or(1.0),
        };
        let kernel = KernelSpec::new(config.kind, sigma)?;
        let gram = Gram::gaussian_of(&distances, sigma);

        let members = class_pairs()
            .into_par_iter()
            .map(|(pos, neg)| train_pair(features, labels, &gram, kernel, &config.smo, pos, neg))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kernel, members })
    }

    /// Pairwise win probabilities for one feature vector.
    pub fn pairwise_table(&self, feature: &[f64]) -> Result<PairwiseTable> {
        if self.members.len() != PAIRS {
            return Err(Error::InvalidArgument(format!(
                "ensemble holds {} classifiers, expected {PAIRS}",
                self.members.len()
            )));
        }
        let mut table = [[0.0; CLASSES]; CLASSES];
        for m in &self.members {
            let p = m.platt.probability(m.svm.decision_value(feature)?);
            let (c, d) = (m.positive.code(), m.negative.code());
            table[c][d] = p;
            table[d][c] = 1.0 - p;
        }
        Ok(table)
    }

    pub fn predict_posterior(&self, feature: &[f64]) -> Result<PosteriorVector> {
        Ok(posterior_from_pairwise(&self.pairwise_table(feature)?))
    }
}

fn train_pair(
    features: &[Vec<f64>],
    labels: &[ActivityLabel],
    gram: &Gram,
    kernel: KernelSpec,
    smo: &SmoConfig,
    pos: ActivityLabel,
    neg: ActivityLabel,
) -> Result<PairwiseClassifier> {
    let idx: Vec<usize> = (0..labels.len())
        .filter(|&i| labels[i] == pos || labels[i] == neg)
        .collect();
    let y: Vec<f64> = idx
        .iter()
        .map(|&i| if labels[i] == pos { 1.0 } else { -1.0 })
        .collect();
    let sub = gram.submatrix(&idx);
    let solution = solve(&sub, &y, smo)?;
    let decisions: Vec<f64> = (0..idx.len())
        .map(|a| {
            solution.bias
                + (0..idx.len())
                    .filter(|&b| solution.alphas[b] > 0.0)
                    .map(|b| solution.alphas[b] * y[b] * sub.get(b, a))
                    .sum::<f64>()
        })
        .collect();
    let platt = fit_platt(&decisions, &y)?;
    let refs: Vec<&[f64]> = idx.iter().map(|&i| features[i].as_slice()).collect();
    Ok(PairwiseClassifier {
        positive: pos,
        negative: neg,
        svm: BinarySvm::from_solution(kernel, smo.c, &refs, &y, &solution),
        platt,
        kkt_residual: solution.kkt_residual,
    })
}
