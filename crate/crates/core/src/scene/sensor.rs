use nalgebra::Matrix3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{RayResult, Scene, SensorFrame};
use crate::error::{Error, Result};
use crate::geom::{CloudPoint, PinholeCamera, PointCloud, Pose, Projection, Ray, Vec3};
use crate::par;

/// Spinning lidar co-located with the camera. Beams sweep the full azimuth
/// about the camera's up axis (`-y`) and span `vertical_fov` degrees of
/// elevation centred on the camera's horizontal plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarSpec {
    pub vertical_fov: f64,
    pub azimuth_steps: usize,
    pub elevation_steps: usize,
    pub max_range: f64,
}

impl LidarSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.vertical_fov > 0.0 && self.vertical_fov <= 180.0)
            || !(self.max_range > 0.0)
            || self.azimuth_steps == 0
            || self.elevation_steps == 0
        {
            return Err(Error::InvalidArgument(format!("invalid lidar spec {self:?}")));
        }
        Ok(())
    }

    pub fn elevation(&self, k: usize) -> f64 {
        if self.elevation_steps == 1 {
            return 0.0;
        }
        let half = 0.5 * self.vertical_fov.to_radians();
        -half + 2.0 * half * k as f64 / (self.elevation_steps - 1) as f64
    }

    pub fn azimuth(&self, j: usize) -> f64 {
        std::f64::consts::TAU * j as f64 / self.azimuth_steps as f64
    }

    /// Beam direction in the camera frame.
    pub fn beam(&self, k: usize, j: usize) -> Vec3 {
        let (e, a) = (self.elevation(k), self.azimuth(j));
        Vec3::new(e.cos() * a.sin(), -e.sin(), e.cos() * a.cos())
    }
}

/// Lidar range noise: additive Gaussian on every return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub range_sigma: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            range_sigma: 0.01,
            seed: 0,
        }
    }
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            range_sigma: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarReturn {
    /// World-space (noisy) return.
    pub point: Vec3,
    pub direction: Vec3,
    /// Measured range, including noise.
    pub range: f64,
    pub noise: f64,
}

/// One sweep from `pose`, laid out as a range image `[elevation][azimuth]`.
pub fn lidar_scan(scene: &Scene, pose: &Pose, lidar: &LidarSpec, noise: &NoiseSpec) -> Vec<Option<LidarReturn>> {
    let (ne, na) = (lidar.elevation_steps, lidar.azimuth_steps);
    let hits: Vec<Option<(Vec3, f64)>> = par::map_range(ne * na, |idx| {
        let (k, j) = (idx / na, idx % na);
        let dir = pose.rotation * lidar.beam(k, j);
        let ray = Ray::new(pose.translation, dir).with_range(0.0, lidar.max_range);
        match scene.raycast(&ray) {
            RayResult::Hit(h) => Some((ray.direction, h.depth)),
            RayResult::Sky => None,
        }
    });
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = (noise.range_sigma > 0.0)
        .then(|| Normal::new(0.0, noise.range_sigma).expect("finite sigma"));
    hits.into_iter()
        .map(|h| {
            h.map(|(direction, t)| {
                let n = normal.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                let range = t + n;
                LidarReturn {
                    point: pose.translation + direction * range,
                    direction,
                    range,
                    noise: n,
                }
            })
        })
        .collect()
}

/// Surface normals from a range image by local plane fitting over the 3×3
/// neighbourhood (azimuth wraps). Normals face the sensor. Returns `None`
/// where fewer than four consistent neighbours exist or they are collinear.
pub fn estimate_range_normals(scan: &[Option<LidarReturn>], lidar: &LidarSpec) -> Vec<Option<Vec3>> {
    let (ne, na) = (lidar.elevation_steps, lidar.azimuth_steps);
    par::map_range(ne * na, |idx| {
        let (k, j) = (idx / na, idx % na);
        let centre = scan[idx]?;
        let mut pts = Vec::with_capacity(9);
        for dk in -1i64..=1 {
            let kk = k as i64 + dk;
            if kk < 0 || kk >= ne as i64 {
                continue;
            }
            for dj in -1i64..=1 {
                let jj = (j as i64 + dj).rem_euclid(na as i64) as usize;
                if let Some(r) = scan[kk as usize * na + jj] {
                    if (r.range - centre.range).abs() <= 0.2 * centre.range {
                        pts.push(r.point);
                    }
                }
            }
        }
        if pts.len() < 4 {
            return None;
        }
        let mean = pts.iter().sum::<Vec3>() / pts.len() as f64;
        let cov = pts
            .iter()
            .fold(Matrix3::zeros(), |acc, p| acc + (p - mean) * (p - mean).transpose());
        let eig = cov.symmetric_eigen();
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let (l0, l1) = (eig.eigenvalues[order[0]], eig.eigenvalues[order[1]]);
        if !(l1 > 1e-12) || l0 > 0.25 * l1 {
            return None;
        }
        let mut n: Vec3 = eig.eigenvectors.column(order[0]).into_owned().normalize();
        if n.dot(&centre.direction) > 0.0 {
            n = -n;
        }
        Some(n)
    })
}

/// Renders a posed RGB image with projected lidar depth/normal images and a sky mask.
///
/// RGB comes from per-pixel ray casting. A pixel gets depth and normal only
/// if a lidar return (within range and vertical FoV, with a valid plane-fit
/// normal) projects into it; its depth is the pixel-ray surface distance plus
/// that return's range noise.
pub fn render_frame(
    scene: &Scene,
    pose: &Pose,
    cam: &PinholeCamera,
    lidar: &LidarSpec,
    noise: &NoiseSpec,
) -> SensorFrame {
    let (w, h) = (cam.width, cam.height);
    let pixels: Vec<RayResult> = par::map_range(w * h, |idx| {
        let ray = cam.pixel_ray(pose, idx % w, idx / w);
        scene.raycast(&ray)
    });
    let mut frame = SensorFrame::empty(*pose, *cam);
    for (idx, px) in pixels.iter().enumerate() {
        match px {
            RayResult::Hit(hit) => frame.rgb[idx] = hit.colour,
            RayResult::Sky => frame.sky_mask[idx] = true,
        }
    }

    let scan = lidar_scan(scene, pose, lidar, noise);
    let normals = estimate_range_normals(&scan, lidar);
    // Nearest return per pixel wins.
    let mut best_range = vec![f64::INFINITY; w * h];
    for (ret, n) in scan.iter().zip(&normals) {
        let (Some(ret), Some(n)) = (ret, n) else {
            continue;
        };
        let true_point = ret.point - ret.direction * ret.noise;
        let Projection::Visible { u, v, .. } = cam.project(pose, &true_point) else {
            continue;
        };
        let Some((c, r)) = cam.pixel_of(u, v) else {
            continue;
        };
        let idx = r * w + c;
        let RayResult::Hit(hit) = pixels[idx] else {
            continue;
        };
        let depth = hit.depth + ret.noise;
        if depth <= 0.0 || ret.range >= best_range[idx] {
            continue;
        }
        best_range[idx] = ret.range;
        frame.depth[idx] = depth;
        frame.normal[idx] = *n;
    }
    frame
}

/// Union of noisy lidar sweeps from every pose, in world coordinates.
pub fn simulate_lidar_cloud(scene: &Scene, poses: &[Pose], lidar: &LidarSpec, noise: &NoiseSpec) -> PointCloud {
    let mut cloud = PointCloud::default();
    for (i, pose) in poses.iter().enumerate() {
        let per_pose = NoiseSpec {
            seed: noise.seed.wrapping_add(i as u64),
            ..*noise
        };
        for ret in lidar_scan(scene, pose, lidar, &per_pose).into_iter().flatten() {
            if ret.range <= lidar.max_range {
                cloud.points.push(CloudPoint::new(ret.point, [0.5; 3]));
            }
        }
    }
    cloud
}
