//! Loss stack and Adam trainer fitting a [`VoxelRadianceField`] to sensor frames.

mod loss;

pub use loss::{
    depth_kl_grad, depth_kl_loss, normal_loss, normal_loss_ray, photometric_loss, sky_loss, total_loss,
    LossBreakdown, LossEval, LossWeights, TrainingRay, KL_EPS,
};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::Section;
use crate::error::{Error, Result};
use crate::field::{render_ray, FieldGrad, VoxelRadianceField};
use crate::par;
use crate::scene::SensorFrame;

/// Exponential decay of the depth-window width from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSchedule {
    pub start: f64,
    pub end: f64,
    pub iterations: usize,
}

impl DepthSchedule {
    pub fn new(start: f64, end: f64, iterations: usize) -> Result<Self> {
        if !(end > 0.0 && start >= end && start.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "depth schedule needs start ≥ end > 0, got {start} → {end}"
            )));
        }
        Ok(Self { start, end, iterations })
    }

    /// Per-iteration multiplicative factor.
    pub fn decay(&self) -> f64 {
        if self.iterations == 0 {
            1.0
        } else {
            (self.end / self.start).powf(1.0 / self.iterations as f64)
        }
    }

    pub fn sigma_hat(&self, iter: usize) -> f64 {
        if iter >= self.iterations {
            return self.end;
        }
        let f = iter as f64 / self.iterations as f64;
        (self.start * (self.end / self.start).powf(f)).max(self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub rays_per_batch: usize,
    pub learning_rate: f64,
    pub adam_betas: (f64, f64),
    pub seed: u64,
    pub n_samples_per_ray: usize,
    pub depth_sigma_start: f64,
    pub depth_sigma_end: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            rays_per_batch: 4096,
            learning_rate: 1e-2,
            adam_betas: (0.9, 0.999),
            seed: 0,
            n_samples_per_ray: 64,
            depth_sigma_start: 0.5,
            depth_sigma_end: 0.02,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::config("train.iterations", "must be ≥ 1"));
        }
        if self.rays_per_batch < 1 {
            return Err(Error::config("train.rays_per_batch", "must be ≥ 1"));
        }
        if self.n_samples_per_ray < 1 {
            return Err(Error::config("train.n_samples", "must be ≥ 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("train.learning_rate", "must be > 0"));
        }
        let (b1, b2) = self.adam_betas;
        if !(0.0..1.0).contains(&b1) || !(0.0..1.0).contains(&b2) {
            return Err(Error::config("train.adam_beta1", "betas must lie in [0, 1)"));
        }
        self.schedule()
            .map(|_| ())
            .map_err(|e| Error::config("train.depth_sigma_start", e.to_string()))
    }

    pub fn schedule(&self) -> Result<DepthSchedule> {
        DepthSchedule::new(self.depth_sigma_start, self.depth_sigma_end, self.iterations)
    }

    /// Reads `[train]` keys over the defaults.
    pub fn from_section(s: &Section) -> Result<Self> {
        let d = Self::default();
        let c = Self {
            iterations: s.parse_or("iterations", d.iterations)?,
            rays_per_batch: s.parse_or("rays_per_batch", d.rays_per_batch)?,
            learning_rate: s.parse_or("learning_rate", d.learning_rate)?,
            adam_betas: (s.parse_or("adam_beta1", d.adam_betas.0)?, s.parse_or("adam_beta2", d.adam_betas.1)?),
            seed: s.parse_or("seed", d.seed)?,
            n_samples_per_ray: s.parse_or("n_samples", d.n_samples_per_ray)?,
            depth_sigma_start: s.parse_or("depth_sigma_start", d.depth_sigma_start)?,
            depth_sigma_end: s.parse_or("depth_sigma_end", d.depth_sigma_end)?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn write_section(&self, s: &mut Section) {
        s.set("iterations", self.iterations);
        s.set("rays_per_batch", self.rays_per_batch);
        s.set("learning_rate", self.learning_rate);
        s.set("adam_beta1", self.adam_betas.0);
        s.set("adam_beta2", self.adam_betas.1);
        s.set("n_samples", self.n_samples_per_ray);
        s.set("depth_sigma_start", self.depth_sigma_start);
        s.set("depth_sigma_end", self.depth_sigma_end);
    }
}

impl LossWeights {
    /// Reads `lambda_*` keys over the defaults.
    pub fn from_section(s: &Section) -> Result<Self> {
        let d = Self::default();
        let w = Self {
            colour: s.parse_or("lambda_colour", d.colour)?,
            depth: s.parse_or("lambda_depth", d.depth)?,
            normal: s.parse_or("lambda_normal", d.normal)?,
            sky: s.parse_or("lambda_sky", d.sky)?,
        };
        w.validate().map_err(|e| s.error("lambda_colour", e.to_string()))?;
        Ok(w)
    }

    pub fn write_section(&self, s: &mut Section) {
        s.set("lambda_colour", self.colour);
        s.set("lambda_depth", self.depth);
        s.set("lambda_normal", self.normal);
        s.set("lambda_sky", self.sky);
    }
}

pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64, betas: (f64, f64)) -> Self {
        Self {
            lr,
            beta1: betas.0,
            beta2: betas.1,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, field: &mut VoxelRadianceField, grad: &FieldGrad) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        let params = field
            .density_raw
            .iter_mut()
            .chain(field.colour_raw.iter_mut().flat_map(|c| c.iter_mut()));
        let grads = grad.density.iter().chain(grad.colour.iter().flatten());
        for (((p, g), m), v) in params.zip(grads).zip(self.m.iter_mut()).zip(self.v.iter_mut()) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
        }
    }
}

/// One row of the loss history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRecord {
    pub iter: usize,
    pub loss: LossBreakdown,
    pub sigma_hat: f64,
}

pub const LOSS_HISTORY_HEADER: [&str; 7] =
    ["iter", "loss_total", "loss_colour", "loss_depth", "loss_normal", "loss_sky", "sigma_hat"];

pub fn write_loss_history(path: &Path, history: &[LossRecord]) -> Result<()> {
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|r| {
            let l = &r.loss;
            let mut row = vec![r.iter.to_string()];
            row.extend([l.total, l.colour, l.depth, l.normal, l.sky, r.sigma_hat].map(|v| v.to_string()));
            row
        })
        .collect();
    crate::io::write_csv(path, &LOSS_HISTORY_HEADER, &rows)
}

/// Every pixel of every frame as a supervised ray.
pub fn collect_rays(frames: &[SensorFrame]) -> Vec<TrainingRay> {
    let mut out = Vec::new();
    for f in frames {
        let w = f.width();
        for idx in 0..f.camera.pixel_count() {
            let lidar = f.has_lidar(idx);
            out.push(TrainingRay {
                ray: f.camera.pixel_ray(&f.pose, idx % w, idx / w),
                colour: f.rgb[idx],
                depth: lidar.then_some(f.depth[idx]),
                normal: lidar.then_some(f.normal[idx]),
                sky: f.sky_mask[idx],
            });
        }
    }
    out
}

/// Fits `field` with Adam on uniformly resampled ray batches.
///
/// On a non-finite loss or gradient returns `DivergenceDetected` and leaves
/// `field` at the last finite iterate. `history` receives one record per
/// completed iteration, also on failure.
pub fn train(
    field: &mut VoxelRadianceField,
    frames: &[SensorFrame],
    config: &TrainConfig,
    weights: &LossWeights,
    history: &mut Vec<LossRecord>,
) -> Result<()> {
    weights.validate()?;
    let schedule = config.schedule()?;
    let rays = collect_rays(frames);
    if rays.is_empty() {
        return Err(Error::EmptyRaySet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut adam = Adam::new(field.parameter_count(), config.learning_rate, config.adam_betas);
    let ns = config.n_samples_per_ray;
    let mut batch = Vec::with_capacity(config.rays_per_batch);
    let mut offsets = vec![0.0; config.rays_per_batch * ns];
    for iter in 0..config.iterations {
        batch.clear();
        for _ in 0..config.rays_per_batch {
            batch.push(rays[rng.random_range(0..rays.len())]);
        }
        for o in offsets.iter_mut() {
            *o = rng.random::<f64>();
        }
        let sigma_hat = schedule.sigma_hat(iter);
        let eval = total_loss(field, &batch, weights, sigma_hat, ns, Some(&offsets));
        if !eval.loss.total.is_finite() || !eval.grad.is_finite() {
            log::error!("loss diverged at iteration {iter}");
            return Err(Error::DivergenceDetected { iteration: iter });
        }
        if iter % 100 == 0 {
            log::debug!("iter {iter}: loss {:.6} σ̂ {:.4}", eval.loss.total, sigma_hat);
        }
        history.push(LossRecord {
            iter,
            loss: eval.loss,
            sigma_hat,
        });
        adam.step(field, &eval.grad);
    }
    Ok(())
}

/// Rendered colour, depth and opacity for every pixel of a view.
#[derive(Debug, Clone)]
pub struct RenderedView {
    pub rgb: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
    pub opacity: Vec<f64>,
    pub normal: Vec<Option<crate::geom::Vec3>>,
}

pub fn render_view(field: &VoxelRadianceField, frame: &SensorFrame, n_samples: usize) -> RenderedView {
    let w = frame.width();
    let px = par::map_range(frame.camera.pixel_count(), |idx| {
        let ray = frame.camera.pixel_ray(&frame.pose, idx % w, idx / w);
        let r = render_ray(field, &ray, n_samples);
        (r.colour, r.depth, r.opacity, r.normal().direction())
    });
    RenderedView {
        rgb: px.iter().map(|p| p.0).collect(),
        depth: px.iter().map(|p| p.1).collect(),
        opacity: px.iter().map(|p| p.2).collect(),
        normal: px.iter().map(|p| p.3).collect(),
    }
}
