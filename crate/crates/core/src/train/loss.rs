use crate::error::{Error, Result};
use crate::field::{render_ray_with, FieldGrad, RayGradSeeds, RayRender, VoxelRadianceField};
use crate::geom::{Ray, Vec3};
use crate::par;

/// Guards `log(w)` in the depth surrogate.
pub const KL_EPS: f64 = 1e-6;

/// Rays evaluated per gradient shard; fixed so results do not depend on the
/// thread count.
/// Rays whose rendered opacity is below this carry no normal term.
pub const NORMAL_MIN_OPACITY: f64 = 0.5;

const SHARD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub colour: f64,
    pub depth: f64,
    pub normal: f64,
    pub sky: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            colour: 1.0,
            depth: 0.1,
            normal: 0.01,
            sky: 0.01,
        }
    }
}

impl LossWeights {
    pub fn colour_only() -> Self {
        Self {
            colour: 1.0,
            depth: 0.0,
            normal: 0.0,
            sky: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.colour, self.depth, self.normal, self.sky];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("loss weights must be finite and ≥ 0".into()));
        }
        if all.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument("at least one loss weight must be positive".into()));
        }
        Ok(())
    }
}

/// A pixel ray with its supervision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingRay {
    pub ray: Ray,
    pub colour: [f64; 3],
    /// Measured range along the ray, if the pixel has a lidar return.
    pub depth: Option<f64>,
    pub normal: Option<Vec3>,
    pub sky: bool,
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::LengthMismatch { left: a, right: b })
    }
}

fn sq_err(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|k| (a[k] - b[k]).powi(2)).sum()
}

/// Mean over rays of the squared colour error summed over channels.
pub fn photometric_loss(rendered: &[[f64; 3]], reference: &[[f64; 3]]) -> Result<f64> {
    check_len(rendered.len(), reference.len())?;
    if rendered.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = rendered.iter().zip(reference).map(|(a, b)| sq_err(a, b)).sum();
    Ok(s / rendered.len() as f64)
}

fn depth_window(t: f64, d: f64, sigma_hat: f64) -> f64 {
    (-(t - d).powi(2) / (2.0 * sigma_hat * sigma_hat)).exp()
}

/// Discrete KL surrogate `Σ −log(w_i + ε)·exp(−(t_i − D)²/2σ̂²)·δ_i`.
pub fn depth_kl_loss(t: &[f64], delta: &[f64], weights: &[f64], d: f64, sigma_hat: f64) -> f64 {
    t.iter()
        .zip(delta)
        .zip(weights)
        .map(|((ti, di), wi)| -(wi + KL_EPS).ln() * depth_window(*ti, d, sigma_hat) * di)
        .sum()
}

/// `∂/∂w_i` of [`depth_kl_loss`].
pub fn depth_kl_grad(t: &[f64], delta: &[f64], weights: &[f64], d: f64, sigma_hat: f64) -> Vec<f64> {
    t.iter()
        .zip(delta)
        .zip(weights)
        .map(|((ti, di), wi)| -depth_window(*ti, d, sigma_hat) * di / (wi + KL_EPS))
        .collect()
}

/// `|N̂ − N̄|₁ + |1 − N̂ᵀN̄|` for one ray, and its gradient in `N̂`.
pub fn normal_loss_ray(n_hat: &Vec3, n_ref: &Vec3) -> (f64, Vec3) {
    let diff = n_hat - n_ref;
    let cos = 1.0 - n_hat.dot(n_ref);
    let loss = diff.abs().sum() + cos.abs();
    let grad = diff.map(sign) - n_ref * sign(cos);
    (loss, grad)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn normal_loss(rendered: &[Vec3], reference: &[Vec3]) -> Result<f64> {
    check_len(rendered.len(), reference.len())?;
    if rendered.is_empty() {
        return Ok(0.0);
    }
    let s: f64 = rendered.iter().zip(reference).map(|(a, b)| normal_loss_ray(a, b).0).sum();
    Ok(s / rendered.len() as f64)
}

/// Mean over rays of `Σ w_i²`.
pub fn sky_loss(weights: &[Vec<f64>]) -> f64 {
    if weights.is_empty() {
        return 0.0;
    }
    weights.iter().map(|w| w.iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / weights.len() as f64
}

/// Weighted total and the unweighted per-term losses.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub colour: f64,
    pub depth: f64,
    pub normal: f64,
    pub sky: f64,
}

#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: LossBreakdown,
    pub grad: FieldGrad,
}

#[derive(Default, Clone, Copy)]
struct Sums {
    colour: f64,
    depth: f64,
    normal: f64,
    sky: f64,
}

/// Loss of one rendered ray (already divided by the per-term counts) and the
/// seeds for its backward pass.
fn ray_terms(
    r: &RayRender,
    tr: &TrainingRay,
    w: &LossWeights,
    scale: &Sums,
    sigma_hat: f64,
) -> (Sums, RayGradSeeds) {
    let mut out = Sums::default();
    let n = r.samples.len();
    let mut seeds = RayGradSeeds {
        colour: [0.0; 3],
        weights: Vec::new(),
        normal: Vec3::zeros(),
    };

    out.colour = sq_err(&r.colour, &tr.colour) * scale.colour;
    let kc = 2.0 * w.colour * scale.colour;
    seeds.colour = std::array::from_fn(|ch| kc * (r.colour[ch] - tr.colour[ch]));

    let mut dw = vec![0.0; n];
    let mut touched = false;
    if let Some(d) = tr.depth {
        let t: Vec<f64> = r.samples.iter().map(|s| s.t).collect();
        let delta: Vec<f64> = r.samples.iter().map(|s| s.delta).collect();
        out.depth = depth_kl_loss(&t, &delta, &r.weights, d, sigma_hat) * scale.depth;
        if w.depth != 0.0 {
            let g = depth_kl_grad(&t, &delta, &r.weights, d, sigma_hat);
            for i in 0..n {
                dw[i] += w.depth * scale.depth * g[i];
            }
            touched = true;
        }
    }
    if tr.sky {
        out.sky = r.weights.iter().map(|x| x * x).sum::<f64>() * scale.sky;
        if w.sky != 0.0 {
            for i in 0..n {
                dw[i] += w.sky * scale.sky * 2.0 * r.weights[i];
            }
            touched = true;
        }
    }
    if touched {
        seeds.weights = dw;
    }
    if let (Some(n_ref), true) = (tr.normal, r.opacity >= NORMAL_MIN_OPACITY) {
        if let Some(n_hat) = r.normal().direction() {
            let (l, g) = normal_loss_ray(&n_hat, &n_ref);
            out.normal = l * scale.normal;
            seeds.normal = g * (w.normal * scale.normal);
        }
    }
    (out, seeds)
}

/// Weighted loss over `batch` and its exact gradient.
///
/// Each term is a mean over the rays it applies to: colour over all rays,
/// depth and normal over rays with a lidar return, sky over sky rays.
/// `offsets` holds `n_samples` stratification offsets per ray (midpoints if
/// `None`).
pub fn total_loss(
    field: &VoxelRadianceField,
    batch: &[TrainingRay],
    weights: &LossWeights,
    sigma_hat: f64,
    n_samples: usize,
    offsets: Option<&[f64]>,
) -> LossEval {
    let count = |f: &dyn Fn(&TrainingRay) -> bool| batch.iter().filter(|r| f(r)).count();
    let inv = |n: usize| if n == 0 { 0.0 } else { 1.0 / n as f64 };
    let scale = Sums {
        colour: inv(batch.len()),
        depth: inv(count(&|r| r.depth.is_some())),
        normal: inv(count(&|r| r.normal.is_some())),
        sky: inv(count(&|r| r.sky)),
    };
    let need_normal = weights.normal != 0.0;
    let indices: Vec<usize> = (0..batch.len()).collect();
    let shards = par::map_chunks(&indices, SHARD, |chunk| {
        let mut grad = FieldGrad::zeros(field.vertex_count());
        let mut sums = Sums::default();
        for &i in chunk {
            let tr = &batch[i];
            let off = offsets.map(|o| &o[i * n_samples..(i + 1) * n_samples]);
            let r = render_ray_with(field, &tr.ray, n_samples, off);
            let (s, mut seeds) = ray_terms(&r, tr, weights, &scale, sigma_hat);
            if !need_normal {
                seeds.normal = Vec3::zeros();
            }
            sums.colour += s.colour;
            sums.depth += s.depth;
            sums.normal += s.normal;
            sums.sky += s.sky;
            r.backward(&seeds, &mut grad);
        }
        (sums, grad)
    });
    let mut grad = FieldGrad::zeros(field.vertex_count());
    let mut sums = Sums::default();
    for (s, g) in &shards {
        sums.colour += s.colour;
        sums.depth += s.depth;
        sums.normal += s.normal;
        sums.sky += s.sky;
        grad.add_assign(g);
    }
    let total = weights.colour * sums.colour
        + weights.depth * sums.depth
        + weights.normal * sums.normal
        + weights.sky * sums.sky;
    LossEval {
        loss: LossBreakdown {
            total,
            colour: sums.colour,
            depth: sums.depth,
            normal: sums.normal,
            sky: sums.sky,
        },
        grad,
    }
}
