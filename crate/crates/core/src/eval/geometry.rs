use super::KdTree;
use crate::error::{Error, Result};
use crate::geom::{PointCloud, Vec3};
use crate::par;

/// Distance from every point of `from` to its nearest neighbour in `to`.
pub fn nn_distances(from: &[Vec3], to: &[Vec3]) -> Vec<f64> {
    let tree = KdTree::new(to);
    par::map_chunks(from, 1024, |chunk| {
        chunk.iter().map(|p| tree.nearest(p).map_or(f64::INFINITY, |n| n.1)).collect::<Vec<_>>()
    })
    .into_iter()
    .flatten()
    .collect()
}

fn non_empty(c: &PointCloud, name: &str) -> Result<Vec<Vec3>> {
    if c.is_empty() {
        Err(Error::EmptyCloud(name.into()))
    } else {
        Ok(c.positions())
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `(accuracy, completeness)`: mean NN distance recon → reference and
/// reference → recon.
pub fn accuracy_completeness(recon: &PointCloud, reference: &PointCloud) -> Result<(f64, f64)> {
    let r = non_empty(recon, "reconstruction")?;
    let g = non_empty(reference, "reference")?;
    Ok((mean(&nn_distances(&r, &g)), mean(&nn_distances(&g, &r))))
}

/// Precision, recall and F-score at threshold `tau` (distance `≤ tau` counts).
pub fn precision_recall(recon: &PointCloud, reference: &PointCloud, tau: f64) -> Result<(f64, f64, f64)> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument("threshold must be > 0".into()));
    }
    let r = non_empty(recon, "reconstruction")?;
    let g = non_empty(reference, "reference")?;
    Ok(prf_from_distances(&nn_distances(&r, &g), &nn_distances(&g, &r), tau))
}

pub(crate) fn prf_from_distances(d_rg: &[f64], d_gr: &[f64], tau: f64) -> (f64, f64, f64) {
    let frac = |d: &[f64]| d.iter().filter(|x| **x <= tau).count() as f64 / d.len() as f64;
    let p = frac(d_rg);
    let r = frac(d_gr);
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(pts: &[[f64; 3]]) -> PointCloud {
        PointCloud::from_positions(pts.iter().map(|p| Vec3::from(*p)))
    }

    #[test]
    fn identical_and_subset() {
        let a = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 1.0, 0.0]]);
        assert_eq!(accuracy_completeness(&a, &a).unwrap(), (0.0, 0.0));
        assert_eq!(precision_recall(&a, &a, 0.05).unwrap(), (1.0, 1.0, 1.0));
        let half = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let (acc, comp) = accuracy_completeness(&half, &a).unwrap();
        assert_eq!(acc, 0.0);
        assert!(comp > 0.0);
        assert!(matches!(accuracy_completeness(&PointCloud::default(), &a), Err(Error::EmptyCloud(_))));
    }

    #[test]
    fn threshold_is_inclusive() {
        let a = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let b = cloud(&[[0.0, 0.0, 0.25], [1.0, 0.0, 0.25]]);
        assert_eq!(precision_recall(&a, &b, 0.25).unwrap(), (1.0, 1.0, 1.0));
    }

    #[test]
    fn mixed_counts() {
        let reference = cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let recon = cloud(&[[0.0, 0.0, 0.01], [1.0, 0.0, 0.01], [5.0, 0.0, 0.0], [6.0, 0.0, 0.0]]);
        let (p, r, f) = precision_recall(&recon, &reference, 0.05).unwrap();
        assert_eq!((p, r), (0.5, 1.0));
        assert!((f - 2.0 / 3.0).abs() < 1e-15);
    }
}
