//! Summary statistics for repetition sweeps: empirical quantiles, log-log
//! slope fits, and deterministic seed derivation for nested loops.

use skmor::error::{Error, Result};

/// Quantiles the sweep studies report, largest first.
pub const REPORT_QUANTILES: [f64; 4] = [1.0, 0.9, 0.5, 0.1];

/// Empirical p-quantile `inf { t : P(X <= t) >= p }` of the sample
/// distribution. Infinities are legal and sort high, so a failed repetition
/// drags the upper quantiles to infinity instead of disappearing; NaN is
/// rejected because it cannot be ordered.
pub fn quantile(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::argument("quantile of an empty sample".to_string()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::argument(format!("quantile level must lie in (0, 1], got {p}")));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::argument("sample contains NaN".to_string()));
    }
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("NaN was rejected above"));
    let idx = (p * s.len() as f64).ceil() as usize;
    Ok(s[idx.clamp(1, s.len()) - 1])
}

pub fn median(samples: &[f64]) -> Result<f64> {
    quantile(samples, 0.5)
}

/// Least-squares slope of `ln y` against `ln x`: the exponent of the best
/// algebraic fit `y ~ C x^slope`. All inputs must be positive and finite.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::argument(format!(
            "slope fit needs two matched samples at least, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    for (&x, &y) in xs.iter().zip(ys) {
        if !(x > 0.0 && x.is_finite() && y > 0.0 && y.is_finite()) {
            return Err(Error::argument(format!(
                "log-log fit needs positive finite data, got ({x}, {y})"
            )));
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::argument("slope fit over a single abscissa".to_string()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Folds a sweep position into a seed, so every randomized object in a study
/// is reproducible from the seed root recorded in the config header alone.
pub fn derive_seed(root: u64, path: &[u64]) -> u64 {
    let mut s = root;
    for (depth, &x) in path.iter().enumerate() {
        s = skmor::rng::bits(s ^ x, skmor::rng::streams::SUBSPACE, depth as u64);
    }
    s
}
