use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dtw::dtw_distance;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelKind {
    /// `exp(-‖x - y‖² / 2σ²)`, equal-length inputs.
    Gaussian,
    /// `exp(-DTW(x, y)² / 2σ²)`, inputs may differ in length. Not PSD in general.
    DtwGaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub sigma: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kernel bandwidth must be positive, got {sigma}"
            )));
        }
        Ok(Self { kind, sigma })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::Gaussian, sigma)
    }

    pub fn dtw_gaussian(sigma: f64) -> Result<Self> {
        Self::new(KernelKind::DtwGaussian, sigma)
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let d = distance(self.kind, x, y)?;
        Ok((-d * d / (2.0 * self.sigma * self.sigma)).exp())
    }
}

/// The distance the kernel of `kind` wraps.
pub fn distance(kind: KernelKind, x: &[f64], y: &[f64]) -> Result<f64> {
    match kind {
        KernelKind::Gaussian => {
            if x.len() != y.len() {
                return Err(Error::InvalidArgument(format!(
                    "Gaussian kernel needs equal lengths, got {} and {}",
                    x.len(),
                    y.len()
                )));
            }
            Ok(x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        }
        KernelKind::DtwGaussian => dtw_distance(x, y),
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.eval(x, y)
}

/// Symmetric pairwise distance matrix, computed in parallel.
pub fn distance_matrix(kind: KernelKind, features: &[Vec<f64>]) -> Result<Gram> {
    let n = features.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| {
                    if i == j {
                        Ok(0.0)
                    } else {
                        distance(kind, &features[i], &features[j])
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let mut data = vec![0.0; n * n];
    for (i, row) in rows.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let j = i + off;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(Gram { n, data })
}

/// Median of the strictly off-diagonal distances; `None` with fewer than two
/// samples or when every distance is zero.
pub fn median_distance(distances: &Gram) -> Option<f64> {
    let n = distances.n;
    let mut d: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| distances.get(i, j))
        .collect();
    if d.is_empty() {
        return None;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len().is_multiple_of(2) {
        0.5 * (d[mid - 1] + d[mid])
    } else {
        d[mid]
    };
    (med > 0.0).then_some(med)
}

/// Dense row-major square matrix, used for kernel and distance caches.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn submatrix(&self, idx: &[usize]) -> Gram {
        Gram::from_fn(idx.len(), |a, b| self.get(idx[a], idx[b]))
    }

    /// Element-wise Gaussian of a distance matrix.
    pub fn gaussian_of(distances: &Gram, sigma: f64) -> Gram {
        let denom = 2.0 * sigma * sigma;
        Gram {
            n: distances.n,
            data: distances.data.iter().map(|d| (-d * d / denom).exp()).collect(),
        }
    }
}
