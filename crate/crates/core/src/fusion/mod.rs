//! The dual-stream model: feature extraction, training, fusion and the model
//! bundle.

mod eval;
mod split;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use eval::{evaluate, evaluate_features, write_report, Confusion, EvalReport};
pub use split::{
    default_train_size, grid_search, holdout_split, k_fold, learning_curve, split_by_subject,
    stratified_quotas, CurveRow, GridPoint, GridResult, GridSpec, LearningCurve, Split, TrainSize,
};

use crate::amplitude::{amplitude_feature, AmplitudeConfig};
use crate::csi::{ActivityLabel, CsiTrace};
use crate::error::{Error, Result};
use crate::phase::{phase_feature, PhaseConfig, Standardizer};
use crate::svm::kernel::KernelKind;
use crate::svm::ovo::{OvoConfig, OvoEnsemble, PosteriorVector, CLASSES};
use crate::svm::smo::SmoConfig;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub amplitude: AmplitudeConfig,
    pub phase: PhaseConfig,
}

/// Both stream features of one trace. The phase feature is unstandardised.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleFeatures {
    pub amplitude: Vec<f64>,
    pub phase: Vec<f64>,
    pub label: Option<ActivityLabel>,
}

pub fn features_of(trace: &CsiTrace, config: &FeatureConfig) -> Result<SampleFeatures> {
    Ok(SampleFeatures {
        amplitude: amplitude_feature(trace, &config.amplitude)?.coeffs,
        phase: phase_feature(trace, &config.phase)?.as_slice().to_vec(),
        label: trace.label,
    })
}

pub fn extract_features(traces: &[CsiTrace], config: &FeatureConfig) -> Result<Vec<SampleFeatures>> {
    traces.par_iter().map(|t| features_of(t, config)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub features: FeatureConfig,
    pub c_amp: f64,
    pub c_phase: f64,
    /// `None` selects the median pairwise training distance.
    pub sigma_amp: Option<f64>,
    pub sigma_phase: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    pub fusion_weights: [f64; 2],
}

impl Default for TrainConfig {
    fn default() -> Self {
        let smo = SmoConfig::default();
        Self {
            features: FeatureConfig::default(),
            c_amp: smo.c,
            c_phase: smo.c,
            sigma_amp: None,
            sigma_phase: None,
            tol: smo.tol,
            max_iter: smo.max_iter,
            fusion_weights: [1.0, 1.0],
        }
    }
}

impl TrainConfig {
    fn stream(&self, kind: KernelKind) -> OvoConfig {
        let (c, sigma) = match kind {
            KernelKind::DtwGaussian => (self.c_amp, self.sigma_amp),
            KernelKind::Gaussian => (self.c_phase, self.sigma_phase),
        };
        OvoConfig {
            kind,
            sigma,
            smo: SmoConfig {
                c,
                tol: self.tol,
                max_iter: self.max_iter,
            },
        }
    }
}

fn check_weights(w: [f64; 2]) -> Result<()> {
    if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w[0] + w[1] <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "fusion weights must be non-negative with a positive sum, got {w:?}"
        )));
    }
    Ok(())
}

/// `w₁·amp + w₂·phase` and its argmax (ties go to the lowest class code).
pub fn fuse(
    amplitude: &PosteriorVector,
    phase: &PosteriorVector,
    weights: [f64; 2],
) -> (PosteriorVector, ActivityLabel) {
    let mut scores = [0.0; CLASSES];
    for (i, s) in scores.iter_mut().enumerate() {
        *s = weights[0] * amplitude.scores[i] + weights[1] * phase.scores[i];
    }
    let fused = PosteriorVector::new(scores);
    (fused, fused.argmax())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub amplitude: PosteriorVector,
    pub phase: PosteriorVector,
    pub fused: PosteriorVector,
    pub label: ActivityLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub labels: Vec<ActivityLabel>,
    pub features: FeatureConfig,
    pub amplitude_ensemble: OvoEnsemble,
    pub phase_ensemble: OvoEnsemble,
    pub phase_standardizer: Standardizer,
    pub fusion_weights: [f64; 2],
}

fn require_labels(features: &[SampleFeatures]) -> Result<Vec<ActivityLabel>> {
    features
        .iter()
        .enumerate()
        .map(|(i, f)| {
            f.label
                .ok_or_else(|| Error::InvalidArgument(format!("sample {i} has no label")))
        })
        .collect()
}

pub fn train(dataset: &[CsiTrace], config: &TrainConfig) -> Result<TrainedModel> {
    let features = extract_features(dataset, &config.features)?;
    train_features(&features, config)
}

pub fn train_features(features: &[SampleFeatures], config: &TrainConfig) -> Result<TrainedModel> {
    check_weights(config.fusion_weights)?;
    let labels = require_labels(features)?;
    for class in ActivityLabel::ALL {
        let n = labels.iter().filter(|&&l| l == class).count();
        if n < 2 {
            return Err(Error::DegenerateTraining(format!(
                "class {class} has {n} training samples, at least 2 are required"
            )));
        }
    }
    let amp: Vec<Vec<f64>> = features.iter().map(|f| f.amplitude.clone()).collect();
    let raw_phase: Vec<Vec<f64>> = features.iter().map(|f| f.phase.clone()).collect();
    let standardizer = Standardizer::fit(&raw_phase)?;
    let phase = raw_phase
        .iter()
        .map(|p| standardizer.apply(p))
        .collect::<Result<Vec<_>>>()?;

    let (amplitude_ensemble, phase_ensemble) = rayon::join(
        || OvoEnsemble::train(&amp, &labels, &config.stream(KernelKind::DtwGaussian)),
        || OvoEnsemble::train(&phase, &labels, &config.stream(KernelKind::Gaussian)),
    );
    Ok(TrainedModel {
        format_version: FORMAT_VERSION,
        labels: ActivityLabel::ALL.to_vec(),
        features: config.features.clone(),
        amplitude_ensemble: amplitude_ensemble?,
        phase_ensemble: phase_ensemble?,
        phase_standardizer: standardizer,
        fusion_weights: config.fusion_weights,
    })
}

impl TrainedModel {
    pub fn predict(&self, trace: &CsiTrace) -> Result<Prediction> {
        self.predict_features(&features_of(trace, &self.features)?)
    }

    pub fn predict_features(&self, features: &SampleFeatures) -> Result<Prediction> {
        let amplitude = self.amplitude_ensemble.predict_posterior(&features.amplitude)?;
        let phase = self
            .phase_ensemble
            .predict_posterior(&self.phase_standardizer.apply(&features.phase)?)?;
        let (fused, label) = fuse(&amplitude, &phase, self.fusion_weights);
        Ok(Prediction {
            amplitude,
            phase,
            fused,
            label,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("model serialisation failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::ModelLoad(e.to_string()))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(Error::ModelLoad(format!(
                    "unsupported format version {v}, expected {FORMAT_VERSION}"
                )))
            }
            None => return Err(Error::ModelLoad("missing format_version".into())),
        }
        let model: Self = serde_json::from_value(value).map_err(|e| Error::ModelLoad(e.to_string()))?;
        if model.labels != ActivityLabel::ALL {
            return Err(Error::ModelLoad("unexpected label order".into()));
        }
        check_weights(model.fusion_weights).map_err(|e| Error::ModelLoad(e.to_string()))?;
        Ok(model)
    }
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model.to_json()?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    TrainedModel::from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate_dataset;

    #[test]
    fn fusion_example() {
        let a = PosteriorVector::new([0.1, 0.2, 0.13, 0.78, 0.9, 0.27]);
        let p = PosteriorVector::new([0.12, 0.34, 0.2, 0.87, 0.14, 0.24]);
        let (f, l) = fuse(&a, &p, [1.0, 1.0]);
        assert_eq!(f.scores, [0.22, 0.54, 0.33, 1.65, 1.04, 0.51]);
        assert_eq!(l.code(), 3);
    }

    #[test]
    fn zero_phase_follows_amplitude() {
        let a = PosteriorVector::new([0.1, 0.5, 0.2, 0.3, 0.0, 0.4]);
        let (_, l) = fuse(&a, &PosteriorVector::new([0.0; 6]), [1.0, 1.0]);
        assert_eq!(l, a.argmax());
        let (_, l) = fuse(&a, &a, [1.0, 1.0]);
        assert_eq!(l, a.argmax());
    }

    #[test]
    fn weights_validated() {
        assert!(check_weights([1.0, 0.0]).is_ok());
        assert!(check_weights([0.0, 0.0]).is_err());
        assert!(check_weights([-1.0, 2.0]).is_err());
    }

    #[test]
    fn missing_class_names_the_class() {
        let mut data = generate_dataset(2, 3).unwrap();
        data.retain(|t| t.label != Some(ActivityLabel::Squat));
        match train(&data, &TrainConfig::default()) {
            Err(Error::DegenerateTraining(msg)) => assert!(msg.contains("Squat")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn training_fit_and_determinism() {
        let data = generate_dataset(20, 9).unwrap();
        let cfg = TrainConfig::default();
        let m1 = train(&data, &cfg).unwrap();
        let correct = data
            .iter()
            .filter(|t| m1.predict(t).unwrap().label == t.label.unwrap())
            .count();
        assert!(correct as f64 / data.len() as f64 >= 0.98, "{correct}");
        let m2 = train(&data, &cfg).unwrap();
        assert_eq!(m1.to_json().unwrap(), m2.to_json().unwrap());
    }

    #[test]
    fn bundle_round_trip_and_errors() {
        let data = generate_dataset(3, 4).unwrap();
        let m = train(&data, &TrainConfig::default()).unwrap();
        let text = m.to_json().unwrap();
        let back = TrainedModel::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert!(matches!(
            TrainedModel::from_json(&text[..text.len() / 2]),
            Err(Error::ModelLoad(_))
        ));
        let wrong = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(TrainedModel::from_json(&wrong), Err(Error::ModelLoad(_))));
    }
}
