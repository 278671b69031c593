use crate::error::{Error, Result};

/// Sparsification curves sampled at removal fractions `b / n_bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparsification {
    pub fractions: Vec<f64>,
    pub curve: Vec<f64>,
    pub oracle: Vec<f64>,
    pub ause: f64,
}

/// Indices sorted by descending key (stable, so ties keep input order).
fn descending(keys: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..keys.len()).collect();
    idx.sort_by(|&a, &b| keys[b].total_cmp(&keys[a]));
    idx
}

/// Mean remaining error after removing `floor(b·n/n_bins)` points in `order`.
fn curve(errors: &[f64], order: &[usize], n_bins: usize) -> Vec<f64> {
    let n = errors.len();
    let mut suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + errors[order[i]];
    }
    (0..n_bins)
        .map(|b| {
            let removed = b * n / n_bins;
            suffix[removed] / (n - removed) as f64
        })
        .collect()
}

/// Uncertainty-ranked and oracle (error-ranked) sparsification curves,
/// both normalised by the full-set mean error, and the area between them.
pub fn sparsification(errors: &[f64], uncertainty: &[f64], n_bins: usize) -> Result<Sparsification> {
    if errors.len() != uncertainty.len() {
        return Err(Error::LengthMismatch {
            left: errors.len(),
            right: uncertainty.len(),
        });
    }
    if n_bins == 0 || errors.len() < n_bins {
        return Err(Error::InvalidArgument(format!(
            "need at least n_bins = {n_bins} ≥ 1 points, got {}",
            errors.len()
        )));
    }
    let mut c = curve(errors, &descending(uncertainty), n_bins);
    let mut o = curve(errors, &descending(errors), n_bins);
    let norm = if c[0] > 0.0 { c[0] } else { 1.0 };
    c.iter_mut().for_each(|v| *v /= norm);
    o.iter_mut().for_each(|v| *v /= norm);
    let ause = c.iter().zip(&o).map(|(a, b)| a - b).sum::<f64>() / n_bins as f64;
    Ok(Sparsification {
        fractions: (0..n_bins).map(|b| b as f64 / n_bins as f64).collect(),
        curve: c,
        oracle: o,
        ause,
    })
}

/// Mean metric error per equal-count uncertainty bucket, labelled by the
/// bucket's upper quantile `(b + 1)/n_quantiles`. Empty buckets are skipped.
pub fn error_plot(errors: &[f64], uncertainty: &[f64], n_quantiles: usize) -> Result<Vec<(f64, f64)>> {
    if errors.len() != uncertainty.len() {
        return Err(Error::LengthMismatch {
            left: errors.len(),
            right: uncertainty.len(),
        });
    }
    if n_quantiles == 0 {
        return Err(Error::InvalidArgument("n_quantiles must be ≥ 1".into()));
    }
    let n = errors.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| uncertainty[a].total_cmp(&uncertainty[b]));
    Ok((0..n_quantiles)
        .filter_map(|b| {
            let lo = b * n / n_quantiles;
            let hi = (b + 1) * n / n_quantiles;
            (hi > lo).then(|| {
                let m = idx[lo..hi].iter().map(|&i| errors[i]).sum::<f64>() / (hi - lo) as f64;
                ((b + 1) as f64 / n_quantiles as f64, m)
            })
        })
        .collect())
}
