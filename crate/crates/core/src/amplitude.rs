//! Amplitude stream: weighted moving average, first principal component and
//! Haar wavelet approximation features.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::csi::{amplitude_matrix, CsiTrace};
use crate::error::{Error, Result};

/// Linearly weighted moving average. The newest sample gets weight `m`.
///
/// The first `m - 1` outputs use the available prefix with weights
/// `t + 1, t, …, 1`, so output length equals input length.
pub fn wma_filter(series: &[f64], m: usize) -> Result<Vec<f64>> {
    if m == 0 {
        return Err(Error::InvalidArgument("WMA window must be at least 1".into()));
    }
    Ok((0..series.len())
        .map(|t| {
            let width = m.min(t + 1);
            let mut acc = 0.0;
            for j in 0..width {
                acc += (width - j) as f64 * series[t - j];
            }
            acc / (width * (width + 1) / 2) as f64
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct PrincipalComponent {
    /// Projection of the centred data onto the loading vector.
    pub scores: Vec<f64>,
    /// Unit eigenvector with the largest eigenvalue.
    pub loading: Vec<f64>,
    /// Largest eigenvalue of the column covariance (`T - 1` normalisation).
    pub variance: f64,
}

pub fn principal_component(data: &DMatrix<f64>) -> Result<PrincipalComponent> {
    let (t, d) = data.shape();
    if t < 2 {
        return Err(Error::InsufficientData {
            what: "PCA rows",
            needed: 2,
            got: t,
        });
    }
    let mut centred = data.clone();
    for j in 0..d {
        let mean = centred.column(j).mean();
        centred.column_mut(j).add_scalar_mut(-mean);
    }
    let cov = (centred.transpose() * &centred) / (t - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let best = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("at least one column");
    let mut loading: Vec<f64> = eig.eigenvectors.column(best).iter().copied().collect();
    let pivot = loading
        .iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0);
    if pivot < 0.0 {
        loading.iter_mut().for_each(|v| *v = -*v);
    }
    let w = nalgebra::DVector::from_column_slice(&loading);
    let scores = (&centred * w).iter().copied().collect();
    Ok(PrincipalComponent {
        scores,
        loading,
        variance: eig.eigenvalues[best],
    })
}

pub fn first_principal_component(data: &DMatrix<f64>) -> Result<Vec<f64>> {
    Ok(principal_component(data)?.scores)
}

/// Approximation path of a multi-level orthonormal Haar analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct HaarDecomposition {
    pub approx: Vec<f64>,
    /// Detail coefficients, finest level first.
    pub details: Vec<Vec<f64>>,
    /// Samples dropped from odd-length stages.
    pub dropped: Vec<f64>,
}

impl HaarDecomposition {
    pub fn energy(&self) -> f64 {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        sq(&self.approx) + self.details.iter().map(|d| sq(d)).sum::<f64>() + sq(&self.dropped)
    }
}

/// `2^{-level/2}`, exact for even levels.
fn level_scale(level: usize) -> f64 {
    let even = 0.5f64.powi((level / 2) as i32);
    if level % 2 == 1 {
        even * FRAC_1_SQRT_2
    } else {
        even
    }
}

/// Orthonormal Haar transform. Pair sums are kept unscaled and every level
/// is scaled once, so a constant `c` maps to exactly `c·2^{level/2}`.
pub fn haar_decompose(series: &[f64], levels: usize) -> HaarDecomposition {
    let mut sums = series.to_vec();
    let mut details = Vec::with_capacity(levels);
    let mut dropped = Vec::new();
    for level in 1..=levels {
        if sums.len() % 2 == 1 {
            let last = sums.pop().expect("odd length is non-empty");
            dropped.push(last * level_scale(level - 1));
        }
        let scale = level_scale(level);
        let (a, d): (Vec<f64>, Vec<f64>) = sums
            .chunks_exact(2)
            .map(|p| (p[0] + p[1], (p[0] - p[1]) * scale))
            .unzip();
        sums = a;
        details.push(d);
    }
    let scale = level_scale(levels);
    HaarDecomposition {
        approx: sums.iter().map(|s| s * scale).collect(),
        details,
        dropped,
    }
}

/// L2-normalised last-level approximation coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeFeature {
    pub coeffs: Vec<f64>,
}

pub fn haar_dwt_features(series: &[f64], levels: usize) -> Result<AmplitudeFeature> {
    let needed = 1usize << levels;
    if series.len() < needed {
        return Err(Error::InsufficientData {
            what: "DWT samples",
            needed,
            got: series.len(),
        });
    }
    let mut coeffs = haar_decompose(series, levels).approx;
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    if norm > 0.0 {
        coeffs.iter_mut().for_each(|c| *c /= norm);
    }
    Ok(AmplitudeFeature { coeffs })
}

/// Deterministic feature length for a trace of `t` frames.
pub fn feature_len(mut t: usize, levels: usize) -> usize {
    for _ in 0..levels {
        t /= 2;
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeConfig {
    pub tx: usize,
    pub rx: usize,
    pub wma_window: usize,
    pub dwt_levels: usize,
}

impl Default for AmplitudeConfig {
    fn default() -> Self {
        Self {
            tx: 0,
            rx: 0,
            wma_window: 10,
            dwt_levels: 3,
        }
    }
}

/// Amplitudes of one link → WMA per subcarrier → PC1 → Haar features.
pub fn amplitude_feature(trace: &CsiTrace, config: &AmplitudeConfig) -> Result<AmplitudeFeature> {
    let needed = 1usize << config.dwt_levels;
    if trace.len() < needed.max(2) {
        return Err(Error::InsufficientData {
            what: "amplitude feature frames",
            needed: needed.max(2),
            got: trace.len(),
        });
    }
    let mut amp = amplitude_matrix(trace, config.tx, config.rx)?;
    for j in 0..amp.ncols() {
        let col: Vec<f64> = amp.column(j).iter().copied().collect();
        let smoothed = wma_filter(&col, config.wma_window)?;
        amp.column_mut(j).copy_from_slice(&smoothed);
    }
    let pc = first_principal_component(&amp)?;
    haar_dwt_features(&pc, config.dwt_levels)
}
