use std::ops::Mul;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion};

use crate::error::{Error, Result};

use super::Vec3;

/// Similarity transform `x ↦ s·R·x + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sim3 {
    pub scale: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
}

impl Sim3 {
    pub fn new(scale: f64, rotation: UnitQuaternion<f64>, translation: Vec3) -> Self {
        debug_assert!(scale > 0.0);
        Self {
            scale,
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(1.0, UnitQuaternion::identity(), Vec3::zeros())
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p * self.scale + self.translation
    }

    pub fn inverse(&self) -> Sim3 {
        let rotation = self.rotation.inverse();
        let scale = 1.0 / self.scale;
        Sim3::new(scale, rotation, -(rotation * self.translation) * scale)
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }
}

impl Mul for Sim3 {
    type Output = Sim3;

    /// `(self * rhs)(x) = self(rhs(x))`.
    fn mul(self, rhs: Sim3) -> Sim3 {
        let mut rotation = self.rotation * rhs.rotation;
        rotation.renormalize();
        Sim3::new(self.scale * rhs.scale, rotation, self.apply(&rhs.translation))
    }
}

/// Least-squares similarity transform mapping `src` onto `dst` (Umeyama 1991).
///
/// Minimises `Σ |s·R·src_i + t − dst_i|²` using the SVD of the 3×3
/// cross-covariance with a determinant sign correction, so the result is
/// always a proper rotation.
pub fn umeyama_align(src: &[Vec3], dst: &[Vec3]) -> Result<Sim3> {
    if src.len() != dst.len() {
        return Err(Error::DegenerateInput(format!(
            "point count mismatch: {} vs {}",
            src.len(),
            dst.len()
        )));
    }
    let n = src.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!("need at least 3 points, got {n}")));
    }
    let inv_n = 1.0 / n as f64;
    let mu_src = src.iter().sum::<Vec3>() * inv_n;
    let mu_dst = dst.iter().sum::<Vec3>() * inv_n;

    let mut cov = Matrix3::zeros();
    let mut src_cov = Matrix3::zeros();
    let mut var_src = 0.0;
    for (s, d) in src.iter().zip(dst) {
        let sc = s - mu_src;
        let dc = d - mu_dst;
        cov += dc * sc.transpose();
        src_cov += sc * sc.transpose();
        var_src += sc.norm_squared();
    }
    cov *= inv_n;
    src_cov *= inv_n;
    var_src *= inv_n;

    // Rank of the centred source spread must be at least 2.
    let spread = src_cov.symmetric_eigenvalues();
    let mut ev = [spread[0], spread[1], spread[2]];
    ev.sort_by(|a, b| b.total_cmp(a));
    if !(ev[0] > 0.0) || ev[1] <= 1e-12 * ev[0] {
        return Err(Error::DegenerateInput("source points are collinear".into()));
    }

    let svd = cov.svd(true, true);
    let u = svd.u.expect("svd u");
    let v_t = svd.v_t.expect("svd v_t");
    let mut signs = Vec3::new(1.0, 1.0, 1.0);
    if u.determinant() * v_t.determinant() < 0.0 {
        // nalgebra sorts singular values in decreasing order; flip the smallest.
        signs[2] = -1.0;
    }
    let r = u * Matrix3::from_diagonal(&signs) * v_t;
    let scale = svd.singular_values.component_mul(&signs).sum() / var_src;
    let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    let translation = mu_dst - rotation * mu_src * scale;
    Ok(Sim3::new(scale, rotation, translation))
}
