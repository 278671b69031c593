//! Per-modality epistemic uncertainty from a Laplace approximation over a
//! trilinear displacement ("perturbation") grid held at zero, and
//! uncertainty-based point filtering.

use std::path::Path;

use crate::config::Section;
use crate::error::{Error, Result};
use crate::field::{
    render_ray, sample_field, ByteReader, Grid, RayGradSeeds, RayRender, VoxelRadianceField,
};
use crate::geom::{Aabb, CloudPoint, PointCloud, Ray, Vec3};
use crate::par;
use crate::train::{depth_kl_grad, TrainingRay};

const SHARD: usize = 256;

/// Trilinear displacement field over the radiance field's bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationGrid {
    pub grid: Grid,
    pub displacement: Vec<Vec3>,
}

impl PerturbationGrid {
    /// Grid at the MAP (all displacements zero).
    pub fn new(bounds: Aabb, resolution: [usize; 3]) -> Self {
        let grid = Grid::new(bounds, resolution);
        Self {
            displacement: vec![Vec3::zeros(); grid.vertex_count()],
            grid,
        }
    }

    /// Interpolated displacement at `p` (zero outside the bounds).
    pub fn offset(&self, p: &Vec3) -> Vec3 {
        self.grid
            .stencil(p)
            .map_or(Vec3::zeros(), |s| s.interpolate_vec3(&self.displacement))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModalityKind {
    Colour,
    Depth,
}

impl ModalityKind {
    pub fn name(self) -> &'static str {
        match self {
            ModalityKind::Colour => "colour",
            ModalityKind::Depth => "depth",
        }
    }
}

/// Field output at `p + D(p)`.
pub fn perturbed_sample(field: &VoxelRadianceField, pgrid: &PerturbationGrid, p: &Vec3) -> (f64, [f64; 3]) {
    sample_field(field, &(p + pgrid.offset(p)))
}

/// Derivatives of [`perturbed_sample`] with respect to the displacement of
/// each of the 8 perturbation vertices around `p`.
#[derive(Debug, Clone, Copy)]
pub struct PerturbedJacobian {
    pub vertex: [usize; 8],
    /// `∂σ/∂θ_v` (one entry per displacement component).
    pub sigma: [Vec3; 8],
    /// `∂c_ch/∂θ_v`.
    pub colour: [[Vec3; 3]; 8],
}

pub fn perturbed_sample_jacobian(
    field: &VoxelRadianceField,
    pgrid: &PerturbationGrid,
    p: &Vec3,
) -> Option<PerturbedJacobian> {
    let st = pgrid.grid.stencil(p)?;
    let x = p + st.interpolate_vec3(&pgrid.displacement);
    let (gs, gc) = match field.sample(&x) {
        Some(s) => (field.density_gradient(&s), field.colour_gradient(&s)),
        None => (Vec3::zeros(), [Vec3::zeros(); 3]),
    };
    Some(PerturbedJacobian {
        vertex: st.index,
        sigma: st.weight.map(|b| gs * b),
        colour: st.weight.map(|b| gc.map(|g| g * b)),
    })
}

/// Renders `ray` with every sample displaced by the perturbation field.
pub fn render_ray_perturbed(
    field: &VoxelRadianceField,
    pgrid: &PerturbationGrid,
    ray: &Ray,
    n_samples: usize,
) -> RayRender {
    let mut r = render_ray(field, ray, n_samples);
    for s in r.samples.iter_mut() {
        let x = s.position + pgrid.offset(&s.position);
        s.field = field.sample(&x);
        s.raw_grad = s.field.map_or(Vec3::zeros(), |f| f.stencil.gradient(&field.density_raw));
    }
    crate::field::finish_render(r.samples)
}

/// Diagonal Hessian accumulators for one modality.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianDiag {
    pub grid: Grid,
    pub gamma: f64,
    pub h: Vec<[f64; 3]>,
}

impl HessianDiag {
    pub fn zeros(grid: Grid, gamma: f64) -> Self {
        Self {
            h: vec![[0.0; 3]; grid.vertex_count()],
            grid,
            gamma,
        }
    }

    /// `max_k 1/(h_k + γ⁻²)` at vertex `v`.
    pub fn vertex_variance(&self, v: usize) -> f64 {
        let prior = 1.0 / (self.gamma * self.gamma);
        self.h[v].iter().map(|h| 1.0 / (h + prior)).fold(0.0, f64::max)
    }

    pub fn vertex_variances(&self) -> Vec<f64> {
        (0..self.h.len()).map(|v| self.vertex_variance(v)).collect()
    }

    /// Writes the `HES1` checkpoint: magic, resolution (3×u32), bounds
    /// (6×f64), γ, then the per-vertex triples, little-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 12 + 56 + 24 * self.h.len());
        out.extend_from_slice(b"HES1");
        for r in self.grid.resolution {
            out.extend_from_slice(&(r as u32).to_le_bytes());
        }
        for v in self.grid.bounds.min.iter().chain(self.grid.bounds.max.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&self.gamma.to_le_bytes());
        for t in &self.h {
            for v in t {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader::new(bytes);
        if r.take(4)? != b"HES1" {
            return Err(Error::parse(0, "bad Hessian checkpoint magic"));
        }
        let res = [r.u32()? as usize, r.u32()? as usize, r.u32()? as usize];
        let min = Vec3::new(r.f64()?, r.f64()?, r.f64()?);
        let max = Vec3::new(r.f64()?, r.f64()?, r.f64()?);
        if res.iter().any(|&n| n < 2) || (0..3).any(|k| !(max[k] > min[k])) {
            return Err(Error::parse(0, "invalid Hessian grid"));
        }
        let gamma = r.f64()?;
        if !(gamma > 0.0) {
            return Err(Error::parse(0, "non-positive prior scale"));
        }
        let mut hd = HessianDiag::zeros(Grid::new(Aabb::new(min, max), res), gamma);
        for t in hd.h.iter_mut() {
            for v in t.iter_mut() {
                *v = r.f64()?;
            }
        }
        r.finish()?;
        Ok(hd)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_bytes(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&crate::io::read_bytes(path)?)
    }
}

/// Per-ray Jacobian of a scalar with respect to the perturbation vertices,
/// from per-sample spatial derivatives `dℓ/dx_i`.
fn scatter_jacobian(
    pgrid: &PerturbationGrid,
    r: &RayRender,
    dldx: &[Vec3],
    scratch: &mut [Vec3],
    mark: &mut [bool],
    touched: &mut Vec<usize>,
) {
    for (s, g) in r.samples.iter().zip(dldx) {
        let Some(st) = pgrid.grid.stencil(&s.position) else { continue };
        for c in 0..8 {
            let v = st.index[c];
            if !mark[v] {
                mark[v] = true;
                touched.push(v);
            }
            scratch[v] += g * st.weight[c];
        }
    }
}

/// `dℓ/dx_i` for every sample given per-sample adjoints.
fn spatial_adjoints(field: &VoxelRadianceField, r: &RayRender, seeds: &RayGradSeeds) -> Vec<Vec3> {
    let adj = r.adjoints(seeds);
    r.samples
        .iter()
        .zip(&adj)
        .map(|(s, a)| match s.field {
            Some(fs) => {
                let gc = field.colour_gradient(&fs);
                field.density_gradient(&fs) * a.sigma + gc[0] * a.colour[0] + gc[1] * a.colour[1] + gc[2] * a.colour[2]
            }
            None => Vec3::zeros(),
        })
        .collect()
}

/// Squared-Jacobian accumulation over `rays` at the MAP.
///
/// `Colour` sums `Σ_ch (∂Ĉ_ch/∂θ)²` over all rays (Fisher form of the
/// squared photometric loss); `Depth` sums `(∂ℓ/∂θ)²` of the KL surrogate at
/// window width `sigma_hat` over rays with a lidar return (rays without one
/// leave the depth accumulators untouched).
pub fn accumulate_hessian(
    field: &VoxelRadianceField,
    pgrid: &PerturbationGrid,
    rays: &[TrainingRay],
    kind: ModalityKind,
    n_samples: usize,
    sigma_hat: f64,
    gamma: f64,
) -> Result<HessianDiag> {
    if rays.is_empty() {
        return Err(Error::EmptyRaySet);
    }
    let used: Vec<&TrainingRay> = match kind {
        ModalityKind::Colour => rays.iter().collect(),
        ModalityKind::Depth => rays.iter().filter(|r| r.depth.is_some()).collect(),
    };
    let m = pgrid.grid.vertex_count();
    let shards = par::map_chunks(&used, SHARD, |chunk| {
        let mut h = vec![[0.0; 3]; m];
        let mut scratch = vec![Vec3::zeros(); m];
        let mut mark = vec![false; m];
        let mut touched = Vec::new();
        for tr in chunk {
            let r = render_ray(field, &tr.ray, n_samples);
            let seeds: Vec<RayGradSeeds> = match kind {
                ModalityKind::Colour => (0..3)
                    .map(|ch| {
                        let mut c = [0.0; 3];
                        c[ch] = 1.0;
                        RayGradSeeds {
                            colour: c,
                            ..Default::default()
                        }
                    })
                    .collect(),
                ModalityKind::Depth => {
                    let t: Vec<f64> = r.samples.iter().map(|s| s.t).collect();
                    let d: Vec<f64> = r.samples.iter().map(|s| s.delta).collect();
                    vec![RayGradSeeds {
                        weights: depth_kl_grad(&t, &d, &r.weights, tr.depth.unwrap(), sigma_hat),
                        ..Default::default()
                    }]
                }
            };
            for sd in &seeds {
                let dldx = spatial_adjoints(field, &r, sd);
                scatter_jacobian(pgrid, &r, &dldx, &mut scratch, &mut mark, &mut touched);
                for &v in &touched {
                    let j = scratch[v];
                    for k in 0..3 {
                        h[v][k] += j[k] * j[k];
                    }
                    scratch[v] = Vec3::zeros();
                    mark[v] = false;
                }
                touched.clear();
            }
        }
        h
    });
    let mut out = HessianDiag::zeros(pgrid.grid, gamma);
    for h in &shards {
        for (a, b) in out.h.iter_mut().zip(h) {
            for k in 0..3 {
                a[k] += b[k];
            }
        }
    }
    Ok(out)
}

/// Trilinear interpolation of the vertex variances; `γ²` outside the grid.
pub fn pointwise_variance(hess: &HessianDiag, p: &Vec3) -> f64 {
    match hess.grid.stencil(p) {
        Some(st) => (0..8).map(|c| st.weight[c] * hess.vertex_variance(st.index[c])).sum(),
        None => hess.gamma * hess.gamma,
    }
}

/// Precomputed vertex variances for fast repeated queries.
pub struct VarianceField {
    grid: Grid,
    prior: f64,
    values: Vec<f64>,
}

impl VarianceField {
    pub fn new(hess: &HessianDiag) -> Self {
        Self {
            grid: hess.grid,
            prior: hess.gamma * hess.gamma,
            values: hess.vertex_variances(),
        }
    }

    pub fn at(&self, p: &Vec3) -> Option<f64> {
        self.grid
            .stencil(p)
            .map(|st| st.interpolate(&self.values).clamp(0.0, self.prior))
    }
}

/// Nearest-rank `q`-quantile of `values` (smallest `v` with at least
/// `⌈q·n⌉` entries `≤ v`).
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Fills `u_colour`/`u_depth` for every point; points outside either grid
/// get `γ²`. Returns a per-point inside flag.
pub fn annotate(cloud: &mut PointCloud, hess_colour: &HessianDiag, hess_depth: &HessianDiag) -> Vec<bool> {
    let vc = VarianceField::new(hess_colour);
    let vd = VarianceField::new(hess_depth);
    let vals = par::map_range(cloud.len(), |i| {
        let p = &cloud.points[i].position;
        (vc.at(p), vd.at(p))
    });
    vals.iter()
        .zip(cloud.points.iter_mut())
        .map(|((c, d), pt)| {
            pt.u_colour = c.unwrap_or(vc.prior);
            pt.u_depth = d.unwrap_or(vd.prior);
            c.is_some() && d.is_some()
        })
        .collect()
}

/// Quantile filter: a point is kept if either its depth or colour
/// uncertainty is at or below that modality's `q`-quantile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPolicy {
    pub quantile: f64,
}

impl Default for FilterPolicy {
    fn default() -> Self {
        Self { quantile: 0.95 }
    }
}

/// Annotates `cloud` and keeps trusted points (see [`FilterPolicy`]).
/// Points outside the field are dropped; quantiles are taken over the rest.
pub fn annotate_and_filter(
    mut cloud: PointCloud,
    hess_colour: &HessianDiag,
    hess_depth: &HessianDiag,
    policy: FilterPolicy,
) -> PointCloud {
    let inside = annotate(&mut cloud, hess_colour, hess_depth);
    let pts: Vec<CloudPoint> = cloud
        .points
        .into_iter()
        .zip(inside)
        .filter_map(|(p, i)| i.then_some(p))
        .collect();
    if pts.is_empty() {
        return PointCloud::new(pts);
    }
    let qd = quantile(&pts.iter().map(|p| p.u_depth).collect::<Vec<_>>(), policy.quantile);
    let qc = quantile(&pts.iter().map(|p| p.u_colour).collect::<Vec<_>>(), policy.quantile);
    pts.into_iter().filter(|p| p.u_depth <= qd || p.u_colour <= qc).collect()
}

/// `[uncertainty]` settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UncertaintyConfig {
    pub gamma: f64,
    /// Perturbation grid resolution; `None` uses the radiance grid's.
    pub resolution: Option<[usize; 3]>,
    pub quantile: f64,
}

impl Default for UncertaintyConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            resolution: None,
            quantile: 0.95,
        }
    }
}

impl UncertaintyConfig {
    pub fn from_section(s: &Section) -> Result<Self> {
        let d = Self::default();
        let gamma = s.parse_or("gamma", d.gamma)?;
        if !(gamma > 0.0) {
            return Err(s.error("gamma", "must be > 0"));
        }
        let quantile = s.parse_or("quantile", d.quantile)?;
        if !(quantile > 0.0 && quantile <= 1.0) {
            return Err(s.error("quantile", "must lie in (0, 1]"));
        }
        let resolution = match s.fixed::<3>("resolution")? {
            None => None,
            Some(r) => {
                if r.iter().any(|v| *v < 2.0 || v.fract() != 0.0) {
                    return Err(s.error("resolution", "expected three integers ≥ 2"));
                }
                Some(r.map(|v| v as usize))
            }
        };
        Ok(Self {
            gamma,
            resolution,
            quantile,
        })
    }

    pub fn write_section(&self, s: &mut Section) {
        s.set("gamma", self.gamma);
        s.set("quantile", self.quantile);
        if let Some(r) = self.resolution {
            s.set("resolution", format!("{} {} {}", r[0], r[1], r[2]));
        }
    }

    pub fn perturbation_grid(&self, field: &VoxelRadianceField) -> PerturbationGrid {
        PerturbationGrid::new(field.grid.bounds, self.resolution.unwrap_or(field.grid.resolution))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(res: usize) -> Grid {
        Grid::new(Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)), [res; 3])
    }

    #[test]
    fn variance_examples() {
        let mut h = HessianDiag::zeros(grid(2), 1.0);
        assert_eq!(pointwise_variance(&h, &Vec3::new(0.3, 0.2, 0.9)), 1.0);
        h.h[0] = [0.0, 1.0, 0.0];
        assert_eq!(h.vertex_variance(0), 1.0);
        h.h[0] = [1.0, 1.0, 1.0];
        assert_eq!(h.vertex_variance(0), 0.5);
        h.h[0] = [1e300; 3];
        assert!(h.vertex_variance(0) < 1e-299);
        let g = HessianDiag::zeros(grid(2), 0.5);
        let mut g2 = g.clone();
        g2.h[3] = [4.0; 3];
        assert_eq!(g2.vertex_variance(3), 0.125);
    }

    #[test]
    fn quantile_nearest_rank() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(quantile(&v, 0.95), 5.0);
        assert_eq!(quantile(&v, 0.6), 3.0);
        assert_eq!(quantile(&v, 0.01), 1.0);
    }

    #[test]
    fn prior_only_filter_keeps_everything_inside() {
        let g = grid(3);
        let h = HessianDiag::zeros(g, 1.0);
        let cloud = PointCloud::from_positions([
            Vec3::new(0.1, 0.1, 0.1),
            Vec3::new(0.5, 0.9, 0.2),
            Vec3::new(2.0, 0.0, 0.0),
        ]);
        let out = annotate_and_filter(cloud, &h, &h, FilterPolicy::default());
        assert_eq!(out.len(), 2);
        assert!(out.points.iter().all(|p| p.u_colour == 1.0 && p.u_depth == 1.0));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut h = HessianDiag::zeros(grid(3), 0.7);
        h.h[5] = [1.0, 2.0, 3.5];
        let b = h.to_bytes();
        assert_eq!(&b[..4], b"HES1");
        assert_eq!(HessianDiag::from_bytes(&b).unwrap(), h);
        assert!(HessianDiag::from_bytes(&b[..b.len() - 8]).is_err());
    }

    #[test]
    fn zero_displacement_is_identity_and_constant_shifts() {
        let mut f = VoxelRadianceField::new(Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)), [5; 3], 0.0);
        for i in 0..f.vertex_count() {
            let p = f.grid.vertex_position(i);
            f.density_raw[i] = (3.0 * p.x).sin() + p.y * p.z;
            f.colour_raw[i] = [p.x, -p.y, p.z * 2.0];
        }
        let mut pg = PerturbationGrid::new(f.grid.bounds, [3; 3]);
        let p = Vec3::new(0.33, 0.61, 0.27);
        assert_eq!(perturbed_sample(&f, &pg, &p), sample_field(&f, &p));
        pg.displacement.iter_mut().for_each(|d| *d = Vec3::new(0.05, 0.0, 0.0));
        let (s1, c1) = perturbed_sample(&f, &pg, &p);
        let (s2, c2) = sample_field(&f, &(p + Vec3::new(0.05, 0.0, 0.0)));
        assert!((s1 - s2).abs() < 1e-15);
        for ch in 0..3 {
            assert!((c1[ch] - c2[ch]).abs() < 1e-15);
        }
    }
}
