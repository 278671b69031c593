//! Shared geometric primitives: poses, rays, pinhole cameras, similarity
//! transforms and uncertainty-annotated point clouds.

mod camera;
pub(crate) mod cloud;
mod pose;
mod sim3;

pub use camera::{project_point, PinholeCamera, Projection};
pub use cloud::{CloudPoint, PointCloud, MAX_VARIANCE};
pub use pose::Pose;
pub use sim3::{umeyama_align, Sim3};

use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// A ray `origin + t * direction` restricted to `[t_near, t_far]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
    pub t_near: f64,
    pub t_far: f64,
}

impl Ray {
    /// Builds a ray, normalising `direction`.
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Self {
            origin,
            direction: direction.normalize(),
            t_near: 0.0,
            t_far: f64::INFINITY,
        }
    }

    pub fn with_range(mut self, t_near: f64, t_far: f64) -> Self {
        self.t_near = t_near;
        self.t_far = t_far;
        self
    }

    #[inline]
    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Slab test; returns the parametric interval of `ray` inside the box,
    /// clipped to the ray's own range.
    pub fn clip_ray(&self, ray: &Ray) -> Option<(f64, f64)> {
        let mut t0 = ray.t_near;
        let mut t1 = ray.t_far;
        for k in 0..3 {
            let d = ray.direction[k];
            let o = ray.origin[k];
            if d.abs() < 1e-300 {
                if o < self.min[k] || o > self.max[k] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / d;
            let mut ta = (self.min[k] - o) * inv;
            let mut tb = (self.max[k] - o) * inv;
            if ta > tb {
                std::mem::swap(&mut ta, &mut tb);
            }
            t0 = t0.max(ta);
            t1 = t1.min(tb);
            if t0 > t1 {
                return None;
            }
        }
        (t1 > t0).then_some((t0, t1))
    }
}
