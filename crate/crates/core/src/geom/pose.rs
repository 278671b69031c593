use nalgebra::{Matrix3, Rotation3, UnitQuaternion};

use super::Vec3;

/// Rigid camera-to-world transform with a timestamp.
///
/// The camera frame follows the usual vision convention: `+z` forward,
/// `+x` right, `+y` down.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
    pub timestamp: f64,
}

impl Pose {
    pub fn new(rotation: UnitQuaternion<f64>, translation: Vec3, timestamp: f64) -> Self {
        Self {
            rotation,
            translation,
            timestamp,
        }
    }

    pub fn identity() -> Self {
        Self::new(UnitQuaternion::identity(), Vec3::zeros(), 0.0)
    }

    /// Camera at `eye` looking at `target`; `up` is the world up direction.
    pub fn look_at(eye: Vec3, target: Vec3, up: Vec3, timestamp: f64) -> Self {
        let forward = (target - eye).normalize();
        let mut right = forward.cross(&up);
        if right.norm() < 1e-9 {
            // Looking straight along `up`: pick any perpendicular.
            let alt = if forward.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
            right = forward.cross(&alt);
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        let m = Matrix3::from_columns(&[right, down, forward]);
        let rot = Rotation3::from_matrix_unchecked(m);
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), eye, timestamp)
    }

    #[inline]
    pub fn to_world(&self, p_cam: &Vec3) -> Vec3 {
        self.rotation * p_cam + self.translation
    }

    #[inline]
    pub fn to_camera(&self, p_world: &Vec3) -> Vec3 {
        self.rotation.inverse_transform_vector(&(p_world - self.translation))
    }

    /// `self ∘ other`, with the rotation renormalised.
    pub fn compose(&self, other: &Pose) -> Pose {
        let mut rotation = self.rotation * other.rotation;
        rotation.renormalize();
        Pose::new(rotation, self.to_world(&other.translation), other.timestamp)
    }

    pub fn inverse(&self) -> Pose {
        let rotation = self.rotation.inverse();
        Pose::new(rotation, -(rotation * self.translation), self.timestamp)
    }

    pub fn forward(&self) -> Vec3 {
        self.rotation * Vec3::z()
    }
}
