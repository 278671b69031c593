use super::{sigmoid, FieldGrad, FieldSample, VoxelRadianceField, NORMAL_EPS};
use crate::geom::{Ray, Vec3};

/// Guards the weight-normalised depth against empty rays.
pub const DEPTH_EPS: f64 = 1e-10;

/// Below this magnitude the accumulated normal of a ray is undefined.
pub const RAY_NORMAL_EPS: f64 = 1e-12;

/// One quadrature sample along a ray.
#[derive(Debug, Clone, Copy)]
pub struct RaySample {
    pub t: f64,
    pub delta: f64,
    pub position: Vec3,
    /// `None` if the sample fell outside the field (σ = 0).
    pub field: Option<FieldSample>,
    /// Spatial gradient of the interpolated raw density.
    pub raw_grad: Vec3,
}

impl RaySample {
    pub fn sigma(&self) -> f64 {
        self.field.map_or(0.0, |s| s.sigma)
    }

    pub fn colour(&self) -> [f64; 3] {
        self.field.map_or([0.5; 3], |s| s.colour)
    }

    /// `∇σ` at the sample (zero outside the field).
    pub fn density_gradient(&self) -> Vec3 {
        self.field.map_or(Vec3::zeros(), |s| self.raw_grad * s.dsigma())
    }

    /// Unit density normal, `None` where undefined.
    pub fn normal(&self) -> Option<Vec3> {
        let g = self.density_gradient();
        let n = g.norm();
        (n >= NORMAL_EPS).then(|| -g / n)
    }
}

/// Output of [`render_ray`] plus what the backward pass needs.
#[derive(Debug, Clone)]
pub struct RayRender {
    pub samples: Vec<RaySample>,
    pub weights: Vec<f64>,
    /// Transmittance before each sample; `transmittance[N]` is the residual `T_N`.
    pub transmittance: Vec<f64>,
    pub colour: [f64; 3],
    pub depth: f64,
    /// `Σ w_i`.
    pub opacity: f64,
}

/// Accumulated ray normal `m = Σ w_i n_i` and its normalisation.
#[derive(Debug, Clone, Copy)]
pub struct NormalRender {
    pub sum: Vec3,
}

impl NormalRender {
    pub fn direction(&self) -> Option<Vec3> {
        let n = self.sum.norm();
        (n > RAY_NORMAL_EPS).then(|| self.sum / n)
    }
}

/// Upstream derivatives of a scalar loss with respect to one ray's outputs.
#[derive(Debug, Clone, Default)]
pub struct RayGradSeeds {
    pub colour: [f64; 3],
    /// `dL/dw_i`; empty when the loss does not touch the weights directly.
    pub weights: Vec<f64>,
    /// `dL/dN̂` for the normalised ray normal.
    pub normal: Vec3,
}

/// Per-sample adjoints: `dL/dσ_i`, `dL/dc_i` and `dL/d(∇σ_i)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SampleAdjoint {
    pub sigma: f64,
    pub colour: [f64; 3],
    pub density_grad: Vec3,
}

/// Weights and residual transmittance for optical depths `δ_i σ_i`.
///
/// Returns `(weights, transmittance)` where `transmittance` has `N + 1`
/// entries, the last being `T_N`.
pub fn composite(sigmas: &[f64], deltas: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(sigmas.len(), deltas.len());
    let mut weights = Vec::with_capacity(sigmas.len());
    let mut trans = Vec::with_capacity(sigmas.len() + 1);
    let mut t = 1.0;
    for (s, d) in sigmas.iter().zip(deltas) {
        let x = s * d;
        trans.push(t);
        weights.push(t * -(-x).exp_m1());
        t *= (-x).exp();
    }
    trans.push(t);
    (weights, trans)
}

/// Equal-width bins covering the part of `ray` inside the field bounds:
/// `(t_start, δ)`, or `None` if the ray misses the field.
pub fn sample_spacing(field: &VoxelRadianceField, ray: &Ray, n_samples: usize) -> Option<(f64, f64)> {
    assert!(n_samples >= 1, "n_samples must be ≥ 1");
    let (t0, t1) = field.bounds().clip_ray(ray)?;
    Some((t0, (t1 - t0) / n_samples as f64))
}

/// Renders `ray` with `n_samples` bin midpoints.
pub fn render_ray(field: &VoxelRadianceField, ray: &Ray, n_samples: usize) -> RayRender {
    render_ray_with(field, ray, n_samples, None)
}

/// Renders `ray` with one sample per bin at `t_start + (i + offset_i)·δ`;
/// `offsets` in `[0, 1)` give stratified jitter, `None` uses midpoints.
pub fn render_ray_with(
    field: &VoxelRadianceField,
    ray: &Ray,
    n_samples: usize,
    offsets: Option<&[f64]>,
) -> RayRender {
    let Some((t0, delta)) = sample_spacing(field, ray, n_samples) else {
        return RayRender {
            samples: Vec::new(),
            weights: Vec::new(),
            transmittance: vec![1.0],
            colour: [0.0; 3],
            depth: 0.0,
            opacity: 0.0,
        };
    };
    let samples: Vec<RaySample> = (0..n_samples)
        .map(|i| {
            let u = offsets.map_or(0.5, |o| o[i]);
            let t = t0 + (i as f64 + u) * delta;
            let position = ray.at(t);
            let fs = field.sample(&position);
            let raw_grad = fs.map_or(Vec3::zeros(), |s| s.stencil.gradient(&field.density_raw));
            RaySample {
                t,
                delta,
                position,
                field: fs,
                raw_grad,
            }
        })
        .collect();
    finish_render(samples)
}

pub(crate) fn finish_render(samples: Vec<RaySample>) -> RayRender {
    let sigmas: Vec<f64> = samples.iter().map(RaySample::sigma).collect();
    let deltas: Vec<f64> = samples.iter().map(|s| s.delta).collect();
    let (weights, transmittance) = composite(&sigmas, &deltas);
    let mut colour = [0.0; 3];
    let mut wt = 0.0;
    let mut opacity = 0.0;
    for (s, w) in samples.iter().zip(&weights) {
        let c = s.colour();
        for ch in 0..3 {
            colour[ch] += w * c[ch];
        }
        wt += w * s.t;
        opacity += w;
    }
    RayRender {
        samples,
        weights,
        transmittance,
        colour,
        depth: wt / opacity.max(DEPTH_EPS),
        opacity,
    }
}

/// Rendered ray normal `normalise(Σ w_i n_i)`.
pub fn render_ray_normal(r: &RayRender) -> NormalRender {
    let sum = r
        .samples
        .iter()
        .zip(&r.weights)
        .fold(Vec3::zeros(), |acc, (s, w)| match s.normal() {
            Some(n) => acc + n * *w,
            None => acc,
        });
    NormalRender { sum }
}

/// `dL/dm` for `m = Σ w n` given `dL/dN̂`, `N̂ = m/|m|`.
pub fn ray_normal_backward(nr: &NormalRender, d_dir: &Vec3) -> Vec3 {
    let norm = nr.sum.norm();
    if norm <= RAY_NORMAL_EPS {
        return Vec3::zeros();
    }
    let n = nr.sum / norm;
    (d_dir - n * n.dot(d_dir)) / norm
}

impl RayRender {
    pub fn transmittance_residual(&self) -> f64 {
        *self.transmittance.last().unwrap()
    }

    pub fn normal(&self) -> NormalRender {
        render_ray_normal(self)
    }

    /// Reverse accumulation from ray outputs to per-sample `σ`, colour and
    /// density-gradient adjoints.
    pub fn adjoints(&self, seeds: &RayGradSeeds) -> Vec<SampleAdjoint> {
        let n = self.samples.len();
        let mut g: Vec<f64> = (0..n)
            .map(|i| {
                let c = self.samples[i].colour();
                let mut v = (0..3).map(|ch| seeds.colour[ch] * c[ch]).sum::<f64>();
                if let Some(w) = seeds.weights.get(i) {
                    v += w;
                }
                v
            })
            .collect();
        let mut adj: Vec<SampleAdjoint> = (0..n)
            .map(|i| SampleAdjoint {
                sigma: 0.0,
                colour: seeds.colour.map(|c| c * self.weights[i]),
                density_grad: Vec3::zeros(),
            })
            .collect();

        if seeds.normal != Vec3::zeros() {
            let dm = ray_normal_backward(&self.normal(), &seeds.normal);
            if dm != Vec3::zeros() {
                for (i, s) in self.samples.iter().enumerate() {
                    let grad = s.density_gradient();
                    let gn = grad.norm();
                    if gn < NORMAL_EPS {
                        continue;
                    }
                    let ni = -grad / gn;
                    g[i] += dm.dot(&ni);
                    let dn = dm * self.weights[i];
                    adj[i].density_grad = -(dn - ni * ni.dot(&dn)) / gn;
                }
            }
        }

        // dL/dσ_k = δ_k (g_k T_{k+1} − Σ_{i>k} g_i w_i)
        let mut tail = 0.0;
        for k in (0..n).rev() {
            adj[k].sigma = self.samples[k].delta * (g[k] * self.transmittance[k + 1] - tail);
            tail += g[k] * self.weights[k];
        }
        adj
    }

    /// Pushes per-sample adjoints into the raw field parameters.
    pub fn accumulate(&self, adj: &[SampleAdjoint], grad: &mut FieldGrad) {
        for (s, a) in self.samples.iter().zip(adj) {
            let Some(fs) = s.field else { continue };
            let sig = sigmoid(fs.raw_density);
            let d_raw = a.sigma * sig + a.density_grad.dot(&s.raw_grad) * sig * (1.0 - sig);
            let d_raw_grad = a.density_grad * sig;
            let d_col: [f64; 3] = std::array::from_fn(|ch| a.colour[ch] * fs.colour[ch] * (1.0 - fs.colour[ch]));
            let st = &fs.stencil;
            for c in 0..8 {
                let v = st.index[c];
                grad.density[v] += st.weight[c] * d_raw + st.grad[c].dot(&d_raw_grad);
                for ch in 0..3 {
                    grad.colour[v][ch] += st.weight[c] * d_col[ch];
                }
            }
        }
    }

    pub fn backward(&self, seeds: &RayGradSeeds, grad: &mut FieldGrad) {
        let adj = self.adjoints(seeds);
        self.accumulate(&adj, grad);
    }
}
