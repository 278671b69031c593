use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::Scene;
use crate::geom::{CloudPoint, PointCloud, Vec3};

/// Draws `n` points uniformly by area over the listed (bounded) primitives.
pub(crate) fn sample_by_area<R: Rng>(scene: &Scene, prims: &[usize], n: usize, rng: &mut R) -> Vec<(usize, Vec3)> {
    let areas: Vec<f64> = prims
        .iter()
        .map(|&i| scene.primitives[i].shape.area().unwrap_or(0.0))
        .collect();
    let total: f64 = areas.iter().sum();
    if prims.is_empty() || total <= 0.0 {
        return Vec::new();
    }
    (0..n)
        .map(|_| {
            let mut pick = rng.random_range(0.0..total);
            let mut which = prims[prims.len() - 1];
            for (&i, &a) in prims.iter().zip(&areas) {
                if pick < a {
                    which = i;
                    break;
                }
                pick -= a;
            }
            let p = scene.primitives[which]
                .shape
                .sample(rng)
                .expect("bounded primitive");
            (which, p)
        })
        .collect()
}

/// Uniformly samples every bounded primitive at `density` points per m².
/// Each primitive gets a Poisson-distributed count with mean `area × density`.
pub fn sample_surface_points(scene: &Scene, density: f64, seed: u64) -> Vec<(usize, Vec3)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for (i, prim) in scene.primitives.iter().enumerate() {
        let Some(area) = prim.shape.area() else {
            continue;
        };
        let mean = area * density;
        if !(mean > 0.0) {
            continue;
        }
        let count = Poisson::new(mean).map(|d| d.sample(&mut rng) as usize).unwrap_or(0);
        for _ in 0..count {
            out.push((i, prim.shape.sample(&mut rng).expect("bounded primitive")));
        }
    }
    out
}

/// Dense ground-truth cloud: uniform surface samples coloured by albedo.
/// Unbounded planes are skipped.
pub fn reference_cloud(scene: &Scene, density: f64, seed: u64) -> PointCloud {
    assert!(density > 0.0, "density must be positive");
    sample_surface_points(scene, density, seed)
        .into_iter()
        .map(|(i, p)| CloudPoint::new(p, scene.primitives[i].shade(&p)))
        .collect()
}
