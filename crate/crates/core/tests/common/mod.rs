//! Independent reference implementations used by several test targets.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wimotion::svm::Gram;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum cost over every admissible warping path, by exhaustive recursion.
/// Costs are summed in path order.
pub fn dtw_enumerate(x: &[f64], y: &[f64]) -> f64 {
    fn walk(x: &[f64], y: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (x[i] - y[j]).abs();
        if i == x.len() - 1 && j == y.len() - 1 {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if i + 1 < x.len() {
            walk(x, y, i + 1, j, acc, best);
        }
        if j + 1 < y.len() {
            walk(x, y, i, j + 1, acc, best);
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(x, y, 0, 0, 0.0, &mut best);
    best
}

/// `W(α) = Σα − ½ Σ αᵢαⱼyᵢyⱼKᵢⱼ`.
pub fn dual(gram: &Gram, y: &[f64], a: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * y[i] * y[j] * gram.get(i, j);
        }
    }
    a.iter().sum::<f64>() - 0.5 * quad
}

/// Maximum of the SVM dual over `0 ≤ α ≤ C`, `Σ yᵢαᵢ = 0`, by grid search.
/// The last multiplier is fixed by the equality constraint; the grid over
/// the others is refined around the incumbent until it is finer than 1e-7.
pub fn dual_grid_max(gram: &Gram, y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let free = n - 1;
    let steps = 24usize;
    let mut lo = vec![0.0; free];
    let mut hi = vec![c; free];
    let mut best = f64::NEG_INFINITY;
    let mut best_a = vec![0.0; free];
    loop {
        let widths: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| h - l).collect();
        let mut idx = vec![0usize; free];
        loop {
            let mut a: Vec<f64> = (0..free)
                .map(|d| lo[d] + widths[d] * idx[d] as f64 / steps as f64)
                .collect();
            let last = -y[n - 1] * (0..free).map(|d| y[d] * a[d]).sum::<f64>();
            if (-1e-12..=c + 1e-12).contains(&last) {
                a.push(last.clamp(0.0, c));
                let w = dual(gram, y, &a);
                if w > best {
                    best = w;
                    best_a.copy_from_slice(&a[..free]);
                }
            }
            let mut d = 0;
            while d < free {
                idx[d] += 1;
                if idx[d] <= steps {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
            if d == free {
                break;
            }
        }
        let width = widths.iter().cloned().fold(0.0, f64::max);
        if width < 1e-7 {
            return best;
        }
        for d in 0..free {
            let step = widths[d] / steps as f64;
            lo[d] = (best_a[d] - 3.0 * step).max(0.0);
            hi[d] = (best_a[d] + 3.0 * step).min(c);
        }
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-26 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = cs * akp - sn * akq;
                    a[k][q] = sn * akp + cs * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = cs * apk - sn * aqk;
                    a[q][k] = sn * apk + cs * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}

/// Singular values of a row-major `rows × cols` matrix, largest first, via
/// the eigenvalues of `MᵀM`.
pub fn singular_values_oracle(m: &[Vec<f64>]) -> Vec<f64> {
    let cols = m[0].len();
    let mut mtm = vec![vec![0.0; cols]; cols];
    for row in m {
        for i in 0..cols {
            for j in 0..cols {
                mtm[i][j] += row[i] * row[j];
            }
        }
    }
    let mut sv: Vec<f64> = jacobi_eigenvalues(mtm).into_iter().map(|e| e.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

pub fn wrap(x: f64) -> f64 {
    let mut v = (x + PI).rem_euclid(2.0 * PI) - PI;
    if v <= -PI {
        v += 2.0 * PI;
    }
    v
}

/// True when `b − a` is affine in `k`, i.e. unwrapping made the same 2π
/// decisions on both vectors.
pub fn same_unwrap_decisions(a: &[f64], b: &[f64], k: &[i32]) -> bool {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let slopes: Vec<f64> = (1..d.len())
        .map(|i| (d[i] - d[i - 1]) / (k[i] - k[i - 1]) as f64)
        .collect();
    slopes.iter().all(|s| (s - slopes[0]).abs() < 1.0)
}

pub fn random_vec(rng: &mut impl Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}
