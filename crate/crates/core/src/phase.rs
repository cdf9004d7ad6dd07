//! Phase stream: unwrapping, linear calibration, antenna phase differences
//! and singular-value features.
//!
//! Raw CSI phase carries a slope from the receiver timing offset and a
//! constant offset, neither of which is observable. Calibration removes the
//! straight line through the first and last unwrapped subcarrier and the mean
//! across the band. What remains is the non-linear part of the phase
//! response, which is what body motion perturbs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::csi::{phase_matrix, CsiTrace, SubcarrierIndexSet, SUBCARRIERS};
use crate::error::{Error, Result};

pub const PHASE_FEATURE_LEN: usize = 5;

/// Jump threshold for unwrapping.
const ETA: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UnwrapMode {
    /// Only positive jumps larger than π are corrected.
    #[default]
    OneSided,
    /// Jumps larger than π in either direction are corrected.
    TwoSided,
}

/// Wrapped phases of the 30 subcarriers of one antenna pair.
#[derive(Debug, Clone, Copy)]
pub struct RawPhaseVector<'a> {
    pub values: [f64; SUBCARRIERS],
    pub k: &'a SubcarrierIndexSet,
}

impl<'a> RawPhaseVector<'a> {
    pub fn new(values: [f64; SUBCARRIERS], k: &'a SubcarrierIndexSet) -> Self {
        Self { values, k }
    }

    pub fn from_slice(values: &[f64], k: &'a SubcarrierIndexSet) -> Result<Self> {
        let values: [f64; SUBCARRIERS] = values.try_into().map_err(|_| {
            Error::InvalidArgument(format!(
                "phase vector needs {SUBCARRIERS} values, got {}",
                values.len()
            ))
        })?;
        Ok(Self { values, k })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibratedPhaseVector {
    pub values: [f64; SUBCARRIERS],
    /// Slope removed across subcarrier index.
    pub slope: f64,
    /// Mean removed across the band.
    pub offset: f64,
}

/// Top singular values of the phase-difference matrix, descending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseFeature {
    pub singular_values: [f64; PHASE_FEATURE_LEN],
}

impl PhaseFeature {
    pub fn as_slice(&self) -> &[f64] {
        &self.singular_values
    }
}

pub fn unwrap(raw: &RawPhaseVector<'_>) -> [f64; SUBCARRIERS] {
    unwrap_with(raw, UnwrapMode::OneSided)
}

pub fn unwrap_with(raw: &RawPhaseVector<'_>, mode: UnwrapMode) -> [f64; SUBCARRIERS] {
    let m = &raw.values;
    let mut out = [0.0; SUBCARRIERS];
    out[0] = m[0];
    let mut diff = 0i64;
    for i in 1..SUBCARRIERS {
        let step = m[i] - m[i - 1];
        if step > ETA {
            diff += 1;
        } else if mode == UnwrapMode::TwoSided && step < -ETA {
            diff -= 1;
        }
        out[i] = m[i] - diff as f64 * TWO_PI;
    }
    out
}

pub fn calibrate(raw: &RawPhaseVector<'_>) -> CalibratedPhaseVector {
    calibrate_with(raw, UnwrapMode::OneSided)
}

pub fn calibrate_with(raw: &RawPhaseVector<'_>, mode: UnwrapMode) -> CalibratedPhaseVector {
    let t = unwrap_with(raw, mode);
    let k = raw.k.indices();
    let last = SUBCARRIERS - 1;
    let slope = (t[last] - t[0]) / (k[last] - k[0]) as f64;
    let offset = t.iter().sum::<f64>() / SUBCARRIERS as f64;
    let mut values = [0.0; SUBCARRIERS];
    for i in 0..SUBCARRIERS {
        values[i] = t[i] - slope * k[i] as f64 - offset;
    }
    CalibratedPhaseVector {
        values,
        slope,
        offset,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub tx: usize,
    pub rx_a: usize,
    pub rx_b: usize,
    pub unwrap: UnwrapMode,
    pub subcarriers: SubcarrierIndexSet,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            tx: 0,
            rx_a: 0,
            rx_b: 1,
            unwrap: UnwrapMode::OneSided,
            subcarriers: SubcarrierIndexSet::default(),
        }
    }
}

fn calibrated_rows(raw: &DMatrix<f64>, config: &PhaseConfig) -> Vec<[f64; SUBCARRIERS]> {
    (0..raw.nrows())
        .map(|t| {
            let mut values = [0.0; SUBCARRIERS];
            for (k, v) in values.iter_mut().enumerate() {
                *v = raw[(t, k)];
            }
            calibrate_with(&RawPhaseVector::new(values, &config.subcarriers), config.unwrap).values
        })
        .collect()
}

/// Row `t` is the calibrated phase of antenna `rx_a` minus that of `rx_b`.
pub fn phase_difference_matrix(trace: &CsiTrace, config: &PhaseConfig) -> Result<DMatrix<f64>> {
    let (_, nrx) = trace
        .shape()
        .ok_or(Error::InsufficientData {
            what: "phase difference frames",
            needed: 1,
            got: 0,
        })?;
    if nrx < 2 {
        return Err(Error::Config(format!(
            "phase difference needs two receive antennas, trace has {nrx}"
        )));
    }
    let a = calibrated_rows(&phase_matrix(trace, config.tx, config.rx_a)?, config);
    let b = calibrated_rows(&phase_matrix(trace, config.tx, config.rx_b)?, config);
    Ok(DMatrix::from_fn(trace.len(), SUBCARRIERS, |t, k| a[t][k] - b[t][k]))
}

/// Singular values of `m`, largest first.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn phase_feature_from_matrix(m: &DMatrix<f64>) -> Result<PhaseFeature> {
    if m.nrows() < PHASE_FEATURE_LEN {
        return Err(Error::InsufficientData {
            what: "phase feature frames",
            needed: PHASE_FEATURE_LEN,
            got: m.nrows(),
        });
    }
    let sv = singular_values(m);
    let mut out = [0.0; PHASE_FEATURE_LEN];
    out.copy_from_slice(&sv[..PHASE_FEATURE_LEN]);
    Ok(PhaseFeature {
        singular_values: out,
    })
}

pub fn phase_feature(trace: &CsiTrace, config: &PhaseConfig) -> Result<PhaseFeature> {
    if trace.len() < PHASE_FEATURE_LEN {
        return Err(Error::InsufficientData {
            what: "phase feature frames",
            needed: PHASE_FEATURE_LEN,
            got: trace.len(),
        });
    }
    phase_feature_from_matrix(&phase_difference_matrix(trace, config)?)
}

/// Per-dimension z-score using training-set statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(samples: &[Vec<f64>]) -> Result<Self> {
        let first = samples.first().ok_or(Error::InsufficientData {
            what: "standardizer samples",
            needed: 1,
            got: 0,
        })?;
        let dim = first.len();
        if samples.iter().any(|s| s.len() != dim) {
            return Err(Error::InvalidArgument("standardizer samples differ in length".into()));
        }
        let n = samples.len() as f64;
        let mut mean = vec![0.0; dim];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut std = vec![0.0; dim];
        for s in samples {
            for ((acc, v), m) in std.iter_mut().zip(s).zip(&mean) {
                *acc += (v - m) * (v - m);
            }
        }
        for s in std.iter_mut() {
            *s = (*s / n).sqrt();
            // constant dimensions pass through centred but unscaled
            if *s <= f64::EPSILON {
                *s = 1.0;
            }
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::InvalidArgument(format!(
                "standardizer expects {} dimensions, got {}",
                self.mean.len(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}
