//! Sigmoid calibration of SVM decision values,
//! `P(y = 1 | f) = 1 / (1 + exp(A f + B))`, fitted by regularised maximum
//! likelihood with Newton steps and backtracking line search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are kept this far from 0 and 1.
const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattSigmoid {
    pub a: f64,
    pub b: f64,
}

impl PlattSigmoid {
    pub fn probability(&self, decision: f64) -> f64 {
        sigmoid_neg(self.a * decision + self.b).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
    }
}

// 1 / (1 + e^z), without overflow
fn sigmoid_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Smoothed targets: `(n₊ + 1)/(n₊ + 2)` for positives, `1/(n₋ + 2)` for negatives.
pub fn targets(labels: &[f64]) -> Vec<f64> {
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    let hi = (n_pos + 1.0) / (n_pos + 2.0);
    let lo = 1.0 / (n_neg + 2.0);
    labels.iter().map(|&y| if y > 0.0 { hi } else { lo }).collect()
}

/// Negative log-likelihood `F(A, B)`.
pub fn objective(a: f64, b: f64, decisions: &[f64], targets: &[f64]) -> f64 {
    decisions
        .iter()
        .zip(targets)
        .map(|(&f, &t)| {
            let z = a * f + b;
            if z >= 0.0 {
                t * z + (-z).exp().ln_1p()
            } else {
                (t - 1.0) * z + z.exp().ln_1p()
            }
        })
        .sum()
}

/// `(∂F/∂A, ∂F/∂B)`.
pub fn gradient(a: f64, b: f64, decisions: &[f64], targets: &[f64]) -> (f64, f64) {
    let mut ga = 0.0;
    let mut gb = 0.0;
    for (&f, &t) in decisions.iter().zip(targets) {
        let d = t - sigmoid_neg(a * f + b);
        ga += f * d;
        gb += d;
    }
    (ga, gb)
}

#[derive(Debug, Clone, Copy)]
pub struct PlattConfig {
    pub max_iter: usize,
    pub min_step: f64,
    pub eps: f64,
    /// Ridge added to the Hessian diagonal.
    pub sigma: f64,
}

impl Default for PlattConfig {
    fn default() -> Self {
        Self {
            max_iter: 100,
            min_step: 1e-10,
            eps: 1e-5,
            sigma: 1e-12,
        }
    }
}

pub fn fit_platt(decisions: &[f64], labels: &[f64]) -> Result<PlattSigmoid> {
    fit_platt_with(decisions, labels, &PlattConfig::default())
}

pub fn fit_platt_with(
    decisions: &[f64],
    labels: &[f64],
    config: &PlattConfig,
) -> Result<PlattSigmoid> {
    if decisions.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} decision values but {} labels",
            decisions.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&y| y > 0.0).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(Error::DegenerateTraining(
            "Platt calibration needs both classes".into(),
        ));
    }
    let t = targets(labels);
    let mut a = 0.0;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let mut fval = objective(a, b, decisions, &t);

    for _ in 0..config.max_iter {
        let mut h11 = config.sigma;
        let mut h22 = config.sigma;
        let mut h21 = 0.0;
        let mut g1 = 0.0;
        let mut g2 = 0.0;
        for (&f, &ti) in decisions.iter().zip(&t) {
            let p = sigmoid_neg(a * f + b);
            let d2 = p * (1.0 - p);
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = ti - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < config.eps && g2.abs() < config.eps {
            return Ok(PlattSigmoid { a, b });
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        loop {
            if step < config.min_step {
                // no further decrease representable
                let norm = g1.hypot(g2);
                return if norm < 1e-3 {
                    Ok(PlattSigmoid { a, b })
                } else {
                    Err(Error::Calibration { gradient_norm: norm })
                };
            }
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb, decisions, &t);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
    }
    let (g1, g2) = gradient(a, b, decisions, &t);
    let norm = g1.hypot(g2);
    if norm < 1e-3 {
        Ok(PlattSigmoid { a, b })
    } else {
        Err(Error::Calibration { gradient_norm: norm })
    }
}
