use crate::error::{Error, Result};

use super::{Pose, Ray, Vec3};

/// Ideal pinhole intrinsics. Pixel `(i, j)` covers `[i, i+1) × [j, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

/// Result of projecting a world point into an image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projection {
    /// `(u, v)` in pixels (possibly outside the image), `depth` is camera-frame z.
    Visible { u: f64, v: f64, depth: f64 },
    Behind,
}

impl PinholeCamera {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Square-pixel camera with the given vertical field of view and a centred principal point.
    pub fn from_vertical_fov(width: usize, height: usize, vfov_deg: f64) -> Result<Self> {
        let f = 0.5 * height as f64 / (0.5 * vfov_deg.to_radians()).tan();
        Self::new(f, f, 0.5 * width as f64, 0.5 * height as f64, width, height)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.fx > 0.0
            && self.fy > 0.0
            && self.width > 0
            && self.height > 0
            && self.cx >= 0.0
            && self.cx < self.width as f64
            && self.cy >= 0.0
            && self.cy < self.height as f64;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid pinhole camera {self:?}")))
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn vertical_fov_deg(&self) -> f64 {
        let top = self.cy / self.fy;
        let bottom = (self.height as f64 - self.cy) / self.fy;
        (top.atan() + bottom.atan()).to_degrees()
    }

    pub fn project(&self, pose: &Pose, p_world: &Vec3) -> Projection {
        let p = pose.to_camera(p_world);
        if p.z <= 0.0 {
            return Projection::Behind;
        }
        Projection::Visible {
            u: self.fx * p.x / p.z + self.cx,
            v: self.fy * p.y / p.z + self.cy,
            depth: p.z,
        }
    }

    /// Inverse of [`project`](Self::project) at camera-frame depth `depth`.
    pub fn back_project(&self, pose: &Pose, u: f64, v: f64, depth: f64) -> Vec3 {
        let p = Vec3::new((u - self.cx) / self.fx * depth, (v - self.cy) / self.fy * depth, depth);
        pose.to_world(&p)
    }

    /// World-space ray through the centre of pixel `(col, row)`.
    pub fn pixel_ray(&self, pose: &Pose, col: usize, row: usize) -> Ray {
        let u = col as f64 + 0.5;
        let v = row as f64 + 0.5;
        let d_cam = Vec3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0);
        Ray::new(pose.translation, pose.rotation * d_cam)
    }

    /// Pixel containing `(u, v)`, if inside the image.
    pub fn pixel_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if u < 0.0 || v < 0.0 {
            return None;
        }
        let (c, r) = (u.floor() as usize, v.floor() as usize);
        (c < self.width && r < self.height).then_some((c, r))
    }
}

/// Projects `p_world` through `cam` at `pose`.
pub fn project_point(pose: &Pose, cam: &PinholeCamera, p_world: &Vec3) -> Projection {
    cam.project(pose, p_world)
}
