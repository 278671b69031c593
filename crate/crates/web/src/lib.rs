//! Browser bindings for three small interactive views: compositing along a
//! single ray with the depth-KL target, sparsification curves for a
//! synthetic error/uncertainty pair, and a two-way Normalized Cut of a
//! planted covisibility graph.

use lvmap::field::composite;
use lvmap::submap::{ncut_value, normalized_cuts, CovisibilityGraph};
use lvmap::train::depth_kl_loss;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

/// Rays run from `t = 0` to `RAY_LENGTH`.
pub const RAY_LENGTH: f64 = 4.0;

/// Composites a Gaussian density bump `peak·exp(−(t − centre)²/(2·width²))`
/// sampled at `n` bin midpoints.
///
/// Returns `[depth, opacity, kl_loss, t_0.., σ_0.., w_0.., target_0..]`,
/// where the target is the normalised window of width `sigma_hat` around
/// `lidar_depth` that the depth loss pulls the weights towards.
#[wasm_bindgen]
pub fn ray_profile(peak: f64, centre: f64, width: f64, lidar_depth: f64, sigma_hat: f64, n: usize) -> Vec<f64> {
    let n = n.clamp(2, 512);
    let delta = RAY_LENGTH / n as f64;
    let t: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * delta).collect();
    let width = width.max(1e-3);
    let sigma: Vec<f64> = t
        .iter()
        .map(|ti| peak.max(0.0) * (-(ti - centre).powi(2) / (2.0 * width * width)).exp())
        .collect();
    let deltas = vec![delta; n];
    let (w, _) = composite(&sigma, &deltas);
    let sigma_hat = sigma_hat.max(1e-3);
    let target: Vec<f64> = t
        .iter()
        .map(|ti| (-(ti - lidar_depth).powi(2) / (2.0 * sigma_hat * sigma_hat)).exp() * delta)
        .collect();
    let z: f64 = target.iter().sum();
    let opacity: f64 = w.iter().sum();
    let depth = if opacity > 0.0 {
        t.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / opacity
    } else {
        0.0
    };
    let loss = depth_kl_loss(&t, &deltas, &w, lidar_depth, sigma_hat);
    let mut out = vec![depth, opacity, loss];
    out.extend(&t);
    out.extend(&sigma);
    out.extend(&w);
    out.extend(target.iter().map(|v| if z > 0.0 { v / z } else { 0.0 }));
    out
}

/// Sparsification of `n` synthetic points whose uncertainty is
/// `correlation·error + (1 − correlation)·noise`.
///
/// Returns `[ause, random_ause, curve.., oracle.., random_curve..]`, each
/// curve `n_bins` long.
#[wasm_bindgen]
pub fn sparsify(n: usize, correlation: f64, n_bins: usize, seed: u64) -> Result<Vec<f64>, JsError> {
    let n = n.max(n_bins);
    let rho = correlation.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let errors: Vec<f64> = (0..n).map(|_| rng.random::<f64>().powi(2)).collect();
    let unc: Vec<f64> = errors.iter().map(|e| rho * e + (1.0 - rho) * rng.random::<f64>()).collect();
    let random: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let s = lvmap::eval::sparsification(&errors, &unc, n_bins).map_err(|e| JsError::new(&e.to_string()))?;
    let r = lvmap::eval::sparsification(&errors, &random, n_bins).map_err(|e| JsError::new(&e.to_string()))?;
    let mut out = vec![s.ause, r.ause];
    out.extend(&s.curve);
    out.extend(&s.oracle);
    out.extend(&r.curve);
    Ok(out)
}

/// Two cliques of `n_a` and `n_b` images with intra-cluster weights in
/// `[10, 20)` and a fraction `bridge` of cross pairs joined with weight
/// `cross` ∈ (0, 20].
///
/// Returns `[ncut, planted_ncut, label_0.., planted_0.., then (i, j, w) per edge]`.
#[wasm_bindgen]
pub fn ncut_demo(n_a: usize, n_b: usize, bridge: f64, cross: f64, seed: u64) -> Result<Vec<f64>, JsError> {
    let (n_a, n_b) = (n_a.clamp(1, 40), n_b.clamp(1, 40));
    let n = n_a + n_b;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<usize> = (0..n).map(|i| usize::from(i >= n_a)).collect();
    let mut g = CovisibilityGraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let w = if planted[i] == planted[j] {
                rng.random_range(10.0..20.0)
            } else if rng.random_bool(bridge.clamp(0.0, 1.0)) {
                cross.clamp(1e-3, 20.0) * rng.random_range(0.5..1.0)
            } else {
                0.0
            };
            if w > 0.0 {
                g.set(i, j, w);
            }
        }
    }
    let part = normalized_cuts(&g, 2).map_err(|e| JsError::new(&e.to_string()))?;
    let mut out = vec![ncut_value(&g, &part.labels), ncut_value(&g, &planted)];
    out.extend(part.labels.iter().map(|l| *l as f64));
    out.extend(planted.iter().map(|l| *l as f64));
    for (i, j, w) in g.edges() {
        out.extend([i as f64, j as f64, w]);
    }
    Ok(out)
}
