use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{evaluate_features, require_labels, train_features, SampleFeatures, TrainConfig};
use crate::csi::{ActivityLabel, CsiTrace};
use crate::error::{Error, Result};
use crate::phase::Standardizer;
use crate::svm::kernel::KernelKind;
use crate::svm::ovo::{OvoConfig, OvoEnsemble, CLASSES};
use crate::svm::smo::SmoConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrainSize {
    PerClass(usize),
    /// Spread over the classes in proportion to their sizes.
    Total(usize),
}

/// 110 samples when more are available, otherwise 70 %.
pub fn default_train_size(n: usize) -> TrainSize {
    if n > 110 {
        TrainSize::Total(110)
    } else {
        TrainSize::Total((0.7 * n as f64).round() as usize)
    }
}

/// Training samples per class. Totals use largest remainders; equal
/// remainders favour the lower class code.
pub fn stratified_quotas(counts: &[usize; CLASSES], size: TrainSize) -> Result<[usize; CLASSES]> {
    let total: usize = counts.iter().sum();
    let quotas = match size {
        TrainSize::PerClass(n) => {
            if let Some(c) = (0..CLASSES).find(|&c| counts[c] < n) {
                return Err(Error::InvalidArgument(format!(
                    "{n} training samples per class requested but {} has {}",
                    ActivityLabel::ALL[c],
                    counts[c]
                )));
            }
            [n; CLASSES]
        }
        TrainSize::Total(n) => {
            if n > total {
                return Err(Error::InvalidArgument(format!(
                    "{n} training samples requested but only {total} available"
                )));
            }
            let mut q = [0usize; CLASSES];
            let mut rem = Vec::with_capacity(CLASSES);
            for c in 0..CLASSES {
                let num = n * counts[c];
                q[c] = num / total;
                rem.push((num % total, c));
            }
            let left = n - q.iter().sum::<usize>();
            rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
            for &(_, c) in rem.iter().take(left) {
                q[c] += 1;
            }
            q
        }
    };
    if quotas.iter().sum::<usize>() >= total {
        return Err(Error::InvalidArgument(
            "training set would leave no test samples".into(),
        ));
    }
    Ok(quotas)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

// Per-class index lists, each shuffled by the seed.
fn shuffled_classes(labels: &[ActivityLabel], seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_class = vec![Vec::new(); CLASSES];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.code()].push(i);
    }
    for idx in &mut by_class {
        idx.shuffle(&mut rng);
    }
    by_class
}

fn class_counts(labels: &[ActivityLabel]) -> [usize; CLASSES] {
    let mut counts = [0; CLASSES];
    for l in labels {
        counts[l.code()] += 1;
    }
    counts
}

/// Nested training sets for each size and one test set, the complement of
/// the largest training set.
fn nested_splits(labels: &[ActivityLabel], sizes: &[TrainSize], seed: u64) -> Result<(Vec<Vec<usize>>, Vec<usize>)> {
    let counts = class_counts(labels);
    let quotas = sizes
        .iter()
        .map(|&s| stratified_quotas(&counts, s))
        .collect::<Result<Vec<_>>>()?;
    let by_class = shuffled_classes(labels, seed);
    let mut largest = [0; CLASSES];
    for q in &quotas {
        for c in 0..CLASSES {
            largest[c] = largest[c].max(q[c]);
        }
    }
    let pick = |q: &[usize; CLASSES]| {
        let mut v: Vec<usize> = (0..CLASSES).flat_map(|c| by_class[c][..q[c]].iter().copied()).collect();
        v.sort_unstable();
        v
    };
    let trains = quotas.iter().map(pick).collect();
    let mut test: Vec<usize> = (0..CLASSES)
        .flat_map(|c| by_class[c][largest[c]..].iter().copied())
        .collect();
    test.sort_unstable();
    Ok((trains, test))
}

/// Stratified random holdout.
pub fn holdout_split(labels: &[ActivityLabel], size: TrainSize, seed: u64) -> Result<Split> {
    let (mut trains, test) = nested_splits(labels, &[size], seed)?;
    Ok(Split {
        train: trains.pop().unwrap_or_default(),
        test,
    })
}

fn select(features: &[SampleFeatures], idx: &[usize]) -> Vec<SampleFeatures> {
    idx.iter().map(|&i| features[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub size: TrainSize,
    pub train_count: usize,
    pub amplitude_mean: f64,
    pub amplitude_std: f64,
    pub phase_mean: f64,
    pub phase_std: f64,
    pub fused_mean: f64,
    pub fused_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub rows: Vec<CurveRow>,
    /// Whether mean fused accuracy never decreases along `rows`.
    pub monotone: bool,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Accuracy per training size, averaged over seeds. For each seed all sizes
/// share the same test set.
pub fn learning_curve(
    features: &[SampleFeatures],
    sizes: &[TrainSize],
    seeds: &[u64],
    config: &TrainConfig,
) -> Result<LearningCurve> {
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no training sizes given".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds given".into()));
    }
    let labels = require_labels(features)?;
    // acc[size][seed] = (amp, phase, fused)
    let mut acc = vec![Vec::with_capacity(seeds.len()); sizes.len()];
    let mut counts = vec![0; sizes.len()];
    for &seed in seeds {
        let (trains, test) = nested_splits(&labels, sizes, seed)?;
        let test = select(features, &test);
        for (s, train) in trains.iter().enumerate() {
            counts[s] = train.len();
            let model = train_features(&select(features, train), config)?;
            let r = evaluate_features(&model, &test)?;
            acc[s].push((r.amplitude_accuracy, r.phase_accuracy, r.accuracy));
        }
    }
    let rows: Vec<CurveRow> = sizes
        .iter()
        .zip(&acc)
        .zip(&counts)
        .map(|((&size, a), &train_count)| {
            let (amplitude_mean, amplitude_std) = mean_std(&a.iter().map(|x| x.0).collect::<Vec<_>>());
            let (phase_mean, phase_std) = mean_std(&a.iter().map(|x| x.1).collect::<Vec<_>>());
            let (fused_mean, fused_std) = mean_std(&a.iter().map(|x| x.2).collect::<Vec<_>>());
            CurveRow {
                size,
                train_count,
                amplitude_mean,
                amplitude_std,
                phase_mean,
                phase_std,
                fused_mean,
                fused_std,
            }
        })
        .collect();
    let monotone = rows.windows(2).all(|w| w[1].fused_mean >= w[0].fused_mean);
    Ok(LearningCurve { rows, monotone })
}

/// Partition by subject id. Traces of other subjects are left out.
pub fn split_by_subject(
    dataset: &[CsiTrace],
    train_subjects: &[&str],
    test_subjects: &[&str],
) -> Result<(Vec<CsiTrace>, Vec<CsiTrace>)> {
    if train_subjects.is_empty() || test_subjects.is_empty() {
        return Err(Error::InvalidArgument("both subject sets must be non-empty".into()));
    }
    let train: BTreeSet<&str> = train_subjects.iter().copied().collect();
    let test: BTreeSet<&str> = test_subjects.iter().copied().collect();
    if let Some(s) = train.intersection(&test).next() {
        return Err(Error::InvalidArgument(format!(
            "subject {s} is in both the training and the test set"
        )));
    }
    let known: BTreeSet<&str> = dataset.iter().filter_map(|t| t.subject_id.as_deref()).collect();
    if let Some(s) = train.union(&test).find(|s| !known.contains(*s)) {
        return Err(Error::InvalidArgument(format!("unknown subject {s}")));
    }
    let pick = |set: &BTreeSet<&str>| {
        dataset
            .iter()
            .filter(|t| t.subject_id.as_deref().is_some_and(|s| set.contains(s)))
            .cloned()
            .collect::<Vec<_>>()
    };
    Ok((pick(&train), pick(&test)))
}

/// Stratified `k`-fold splits: class members are dealt to folds in turn.
pub fn k_fold(labels: &[ActivityLabel], k: usize, seed: u64) -> Result<Vec<Split>> {
    if k < 2 || k > labels.len() {
        return Err(Error::InvalidArgument(format!(
            "fold count must be between 2 and {}, got {k}",
            labels.len()
        )));
    }
    let mut fold_of = vec![0; labels.len()];
    let mut next = 0;
    for idx in shuffled_classes(labels, seed) {
        for i in idx {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    Ok((0..k)
        .map(|f| Split {
            train: (0..labels.len()).filter(|&i| fold_of[i] != f).collect(),
            test: (0..labels.len()).filter(|&i| fold_of[i] == f).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub c_values: Vec<f64>,
    /// Candidate bandwidths for each stream; `None` is the median heuristic.
    pub sigma_amp: Vec<Option<f64>>,
    pub sigma_phase: Vec<Option<f64>>,
    pub folds: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub sigma: Option<f64>,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    /// The base configuration with the best point of each stream filled in.
    pub config: TrainConfig,
    pub amplitude: Vec<GridPoint>,
    pub phase: Vec<GridPoint>,
}

/// Cross-validated stream accuracy for every `(C, σ)` candidate. Each stream
/// is tuned on its own; the first best point wins ties.
pub fn grid_search(features: &[SampleFeatures], spec: &GridSpec, base: &TrainConfig) -> Result<GridResult> {
    if spec.c_values.is_empty() || spec.sigma_amp.is_empty() || spec.sigma_phase.is_empty() {
        return Err(Error::InvalidArgument("grid has an empty axis".into()));
    }
    let labels = require_labels(features)?;
    let folds = k_fold(&labels, spec.folds, spec.seed)?;
    let run = |kind: KernelKind, sigmas: &[Option<f64>]| -> Result<Vec<GridPoint>> {
        let mut out = Vec::new();
        for &c in &spec.c_values {
            for &sigma in sigmas {
                let cfg = OvoConfig {
                    kind,
                    sigma,
                    smo: SmoConfig {
                        c,
                        tol: base.tol,
                        max_iter: base.max_iter,
                    },
                };
                let mut correct = 0usize;
                let mut total = 0usize;
                for fold in &folds {
                    let (train_x, test_x) = stream_features(features, fold, kind)?;
                    let train_y: Vec<ActivityLabel> = fold.train.iter().map(|&i| labels[i]).collect();
                    let e = OvoEnsemble::train(&train_x, &train_y, &cfg)?;
                    for (x, &i) in test_x.iter().zip(&fold.test) {
                        if e.predict_posterior(x)?.argmax() == labels[i] {
                            correct += 1;
                        }
                        total += 1;
                    }
                }
                out.push(GridPoint {
                    c,
                    sigma,
                    accuracy: correct as f64 / total as f64,
                });
            }
        }
        Ok(out)
    };
    let amplitude = run(KernelKind::DtwGaussian, &spec.sigma_amp)?;
    let phase = run(KernelKind::Gaussian, &spec.sigma_phase)?;
    let best = |points: &[GridPoint]| {
        let mut b = points[0];
        for p in &points[1..] {
            if p.accuracy > b.accuracy {
                b = *p;
            }
        }
        b
    };
    let (ba, bp) = (best(&amplitude), best(&phase));
    let mut config = base.clone();
    config.c_amp = ba.c;
    config.sigma_amp = ba.sigma;
    config.c_phase = bp.c;
    config.sigma_phase = bp.sigma;
    Ok(GridResult {
        config,
        amplitude,
        phase,
    })
}

type StreamSets = (Vec<Vec<f64>>, Vec<Vec<f64>>);

fn stream_features(features: &[SampleFeatures], fold: &Split, kind: KernelKind) -> Result<StreamSets> {
    match kind {
        KernelKind::DtwGaussian => Ok((
            fold.train.iter().map(|&i| features[i].amplitude.clone()).collect(),
            fold.test.iter().map(|&i| features[i].amplitude.clone()).collect(),
        )),
        KernelKind::Gaussian => {
            let raw: Vec<Vec<f64>> = fold.train.iter().map(|&i| features[i].phase.clone()).collect();
            let s = Standardizer::fit(&raw)?;
            let train = raw.iter().map(|x| s.apply(x)).collect::<Result<Vec<_>>>()?;
            let test = fold
                .test
                .iter()
                .map(|&i| s.apply(&features[i].phase))
                .collect::<Result<Vec<_>>>()?;
            Ok((train, test))
        }
    }
}
