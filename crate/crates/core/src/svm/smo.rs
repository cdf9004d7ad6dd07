//! Sequential minimal optimisation for the C-SVC dual
//!
//! ```text
//! max  W(α) = Σ αᵢ − ½ Σᵢⱼ αᵢ αⱼ yᵢ yⱼ Kᵢⱼ
//! s.t. 0 ≤ αᵢ ≤ C,  Σ αᵢ yᵢ = 0
//! ```
//!
//! Working pairs are chosen by maximal violation for `i` and second-order
//! gain for `j`. Non-positive curvature along the pair (possible with the
//! DTW kernel) is replaced by a small constant, which still yields a
//! monotone objective.

use serde::{Deserialize, Serialize};

use super::kernel::{Gram, KernelSpec};
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoConfig {
    pub c: f64,
    /// Stop once the maximal KKT violation gap falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alphas: Vec<f64>,
    /// Decision is `Σ αᵢ yᵢ K(xᵢ, x) + bias`.
    pub bias: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Dual objective `W(α)` at exit.
    pub objective: f64,
    /// `W(α)` after every iteration, when requested.
    pub objective_trace: Vec<f64>,
}

/// Dual objective `W(α)` for a given kernel matrix.
pub fn dual_objective(gram: &Gram, y: &[f64], alphas: &[f64]) -> f64 {
    let n = gram.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * y[i] * y[j] * gram.get(i, j);
        }
    }
    alphas.iter().sum::<f64>() - 0.5 * quad
}

fn validate(gram: &Gram, y: &[f64], config: &SmoConfig) -> Result<()> {
    if gram.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "kernel matrix is {0}x{0} but {1} labels given",
            gram.len(),
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidArgument(format!("labels must be ±1, got {bad}")));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::DegenerateTraining(
            "binary training needs both +1 and -1 samples".into(),
        ));
    }
    if !(config.c > 0.0 && config.c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {}", config.c)));
    }
    if !(config.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(())
}

pub fn solve(gram: &Gram, y: &[f64], config: &SmoConfig) -> Result<SmoSolution> {
    solve_inner(gram, y, config, false)
}

/// As [`solve`], also recording the dual objective after each step.
pub fn solve_traced(gram: &Gram, y: &[f64], config: &SmoConfig) -> Result<SmoSolution> {
    solve_inner(gram, y, config, true)
}

fn solve_inner(gram: &Gram, y: &[f64], config: &SmoConfig, trace: bool) -> Result<SmoSolution> {
    validate(gram, y, config)?;
    let n = y.len();
    let c = config.c;
    let q = |i: usize, j: usize| y[i] * y[j] * gram.get(i, j);
    let mut alpha = vec![0.0; n];
    // gradient of ½αᵀQα − eᵀα
    let mut grad = vec![-1.0; n];
    let mut objective_trace = Vec::new();
    let mut iterations = 0usize;

    let residual = loop {
        let (i, gmax) = {
            let mut gmax = f64::NEG_INFINITY;
            let mut idx = None;
            for t in 0..n {
                let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
                if in_up && -y[t] * grad[t] >= gmax {
                    gmax = -y[t] * grad[t];
                    idx = Some(t);
                }
            }
            (idx, gmax)
        };
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best_j = None;
        let mut best_gain = f64::INFINITY;
        for t in 0..n {
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if !in_low {
                continue;
            }
            let v = y[t] * grad[t];
            gmax2 = gmax2.max(v);
            if let Some(i) = i {
                let b = gmax + v;
                if b > 0.0 {
                    let mut a = gram.get(i, i) + gram.get(t, t) - 2.0 * gram.get(i, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let gain = -(b * b) / a;
                    if gain <= best_gain {
                        best_gain = gain;
                        best_j = Some(t);
                    }
                }
            }
        }
        let residual = gmax + gmax2;
        let (i, j) = match (i, best_j) {
            (Some(i), Some(j)) if residual >= config.tol => (i, j),
            _ => break residual.max(0.0),
        };
        if iterations >= config.max_iter {
            return Err(Error::Convergence {
                iterations,
                residual,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let mut quad = gram.get(i, i) + gram.get(j, j) - 2.0 * gram.get(i, j);
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (k, g) in grad.iter_mut().enumerate() {
            *g += q(i, k) * di + q(j, k) * dj;
        }
        if trace {
            objective_trace.push(objective_from_grad(&alpha, &grad));
        }
    };

    let bias = -rho(&alpha, &grad, y, c);
    Ok(SmoSolution {
        objective: objective_from_grad(&alpha, &grad),
        alphas: alpha,
        bias,
        iterations,
        kkt_residual: residual,
        objective_trace,
    })
}

// W(α) = −(½αᵀQα − eᵀα) = −½ Σ αᵢ (Gᵢ − 1)
fn objective_from_grad(alpha: &[f64], grad: &[f64]) -> f64 {
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

fn rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    if free > 0 {
        sum_free / free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// A trained two-class machine with its support vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvm {
    pub kernel: KernelSpec,
    pub c: f64,
    pub bias: f64,
    pub support_vectors: Vec<Vec<f64>>,
    pub alphas: Vec<f64>,
    pub labels: Vec<i8>,
}

impl BinarySvm {
    /// Keep the samples with `α > 0`.
    pub fn from_solution(
        kernel: KernelSpec,
        c: f64,
        features: &[&[f64]],
        y: &[f64],
        solution: &SmoSolution,
    ) -> Self {
        let mut support_vectors = Vec::new();
        let mut alphas = Vec::new();
        let mut labels = Vec::new();
        for (i, &a) in solution.alphas.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(features[i].to_vec());
                alphas.push(a);
                labels.push(if y[i] > 0.0 { 1 } else { -1 });
            }
        }
        Self {
            kernel,
            c,
            bias: solution.bias,
            support_vectors,
            alphas,
            labels,
        }
    }

    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let mut f = self.bias;
        for ((sv, a), y) in self.support_vectors.iter().zip(&self.alphas).zip(&self.labels) {
            f += a * *y as f64 * self.kernel.eval(sv, x)?;
        }
        Ok(f)
    }
}

/// Train a binary SVM from raw features and ±1 labels.
pub fn train_binary(
    features: &[Vec<f64>],
    labels: &[f64],
    c: f64,
    kernel: KernelSpec,
    tol: f64,
) -> Result<BinarySvm> {
    if features.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} features but {} labels",
            features.len(),
            labels.len()
        )));
    }
    let n = features.len();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&features[i], &features[j])?;
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let gram = Gram::from_fn(n, |i, j| k[i * n + j]);
    let config = SmoConfig {
        c,
        tol,
        ..SmoConfig::default()
    };
    let solution = solve(&gram, labels, &config)?;
    let refs: Vec<&[f64]> = features.iter().map(Vec::as_slice).collect();
    Ok(BinarySvm::from_solution(kernel, c, &refs, labels, &solution))
}
