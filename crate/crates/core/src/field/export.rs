use super::{render_ray, VoxelRadianceField};
use crate::geom::{CloudPoint, PointCloud, Vec3};
use crate::par;
use crate::scene::SensorFrame;

/// Minimum accumulated weight for a ray to emit a point.
pub const EXPORT_MIN_OPACITY: f64 = 0.5;

/// Renders every `stride`-th pixel ray (row-major) of every frame and emits
/// a point at the rendered depth for rays with `Σw > 0.5`.
pub fn export_pointcloud(
    field: &VoxelRadianceField,
    frames: &[SensorFrame],
    stride: usize,
    n_samples: usize,
) -> PointCloud {
    export_pointcloud_with_origins(field, frames, stride, n_samples).0
}

/// As [`export_pointcloud`], also returning the camera centre each point
/// was rendered from.
pub fn export_pointcloud_with_origins(
    field: &VoxelRadianceField,
    frames: &[SensorFrame],
    stride: usize,
    n_samples: usize,
) -> (PointCloud, Vec<Vec3>) {
    let stride = stride.max(1);
    let mut points = Vec::new();
    let mut origins = Vec::new();
    for frame in frames {
        let w = frame.width();
        let pixels: Vec<usize> = (0..frame.camera.pixel_count()).step_by(stride).collect();
        let hits = par::map_range(pixels.len(), |k| {
            let idx = pixels[k];
            let ray = frame.camera.pixel_ray(&frame.pose, idx % w, idx / w);
            let r = render_ray(field, &ray, n_samples);
            (r.opacity > EXPORT_MIN_OPACITY).then(|| CloudPoint::new(ray.at(r.depth), r.colour))
        });
        for p in hits.into_iter().flatten() {
            points.push(p);
            origins.push(frame.pose.translation);
        }
    }
    (PointCloud::new(points), origins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Aabb, PinholeCamera, Pose};

    fn frame() -> SensorFrame {
        let cam = PinholeCamera::from_vertical_fov(8, 6, 20.0).unwrap();
        let pose = Pose::look_at(Vec3::new(0.5, 0.5, -1.0), Vec3::new(0.5, 0.5, 0.5), -Vec3::y(), 0.0);
        SensorFrame::empty(pose, cam)
    }

    #[test]
    fn empty_field_exports_nothing() {
        let f = VoxelRadianceField::new(Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)), [4; 3], -50.0);
        assert!(export_pointcloud(&f, &[frame()], 1, 32).is_empty());
    }

    #[test]
    fn slab_field_exports_points_on_slab() {
        let mut f = VoxelRadianceField::new(Aabb::new(Vec3::zeros(), Vec3::new(1.0, 1.0, 1.0)), [11; 3], -30.0);
        for i in 0..f.vertex_count() {
            if f.grid.vertex_position(i).z >= 0.5 - 1e-9 {
                f.density_raw[i] = 200.0;
            }
        }
        let (cloud, origins) = export_pointcloud_with_origins(&f, &[frame()], 1, 200);
        assert_eq!(cloud.len(), 48);
        assert_eq!(origins.len(), 48);
        for p in &cloud.points {
            assert!((p.position.z - 0.45).abs() <= 0.1, "{}", p.position.z);
        }
    }
}
