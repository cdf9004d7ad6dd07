use crate::error::{Error, Result};

/// Dynamic time warping distance with absolute-difference local cost and
/// steps `(i-1, j)`, `(i, j-1)`, `(i-1, j-1)`. Both ends are anchored.
pub fn dtw_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::InvalidArgument("DTW needs non-empty sequences".into()));
    }
    let m = y.len();
    let mut prev = vec![f64::INFINITY; m];
    let mut cur = vec![0.0; m];
    for (i, &xi) in x.iter().enumerate() {
        for j in 0..m {
            let cost = (xi - y[j]).abs();
            let best = if i == 0 && j == 0 {
                0.0
            } else {
                let up = prev[j];
                let left = if j > 0 { cur[j - 1] } else { f64::INFINITY };
                let diag = if j > 0 { prev[j - 1] } else { f64::INFINITY };
                up.min(left).min(diag)
            };
            cur[j] = best + cost;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}
