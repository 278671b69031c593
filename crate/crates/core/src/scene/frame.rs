use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{PinholeCamera, Pose, Vec3};
use crate::io::{read_pfm, read_pgm_mask, read_ppm, write_pfm, write_pgm_mask, write_ppm, PfmImage};

/// A posed camera image with its projected lidar depth, lidar normals and sky mask.
///
/// Depth is the distance along the pixel-centre ray; `0` marks "no return".
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub pose: Pose,
    pub camera: PinholeCamera,
    pub rgb: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub sky_mask: Vec<bool>,
}

impl SensorFrame {
    pub fn empty(pose: Pose, camera: PinholeCamera) -> Self {
        let n = camera.pixel_count();
        Self {
            pose,
            camera,
            rgb: vec![[0.0; 3]; n],
            depth: vec![0.0; n],
            normal: vec![Vec3::zeros(); n],
            sky_mask: vec![false; n],
        }
    }

    pub fn width(&self) -> usize {
        self.camera.width
    }

    pub fn height(&self) -> usize {
        self.camera.height
    }

    pub fn has_lidar(&self, idx: usize) -> bool {
        self.depth[idx] > 0.0
    }

    /// Checks the frame invariants: depth ≥ 0, unit normals exactly where
    /// depth > 0, and no depth on sky pixels.
    pub fn check_invariants(&self) -> bool {
        (0..self.depth.len()).all(|i| {
            let d = self.depth[i];
            let n = self.normal[i].norm();
            d >= 0.0
                && if d > 0.0 { (n - 1.0).abs() < 1e-6 } else { n == 0.0 }
                && !(self.sky_mask[i] && d > 0.0)
        })
    }
}

/// Writes `rgb.ppm`, `depth.pfm`, `normal.pfm` and `sky.pgm` with the given stem.
pub fn save_frame(frame: &SensorFrame, dir: &Path, stem: &str) -> Result<()> {
    let (w, h) = (frame.width(), frame.height());
    write_ppm(&dir.join(format!("{stem}_rgb.ppm")), w, h, &frame.rgb)?;
    write_pfm(
        &dir.join(format!("{stem}_depth.pfm")),
        &PfmImage {
            width: w,
            height: h,
            channels: 1,
            data: frame.depth.iter().map(|&d| d as f32).collect(),
        },
    )?;
    write_pfm(
        &dir.join(format!("{stem}_normal.pfm")),
        &PfmImage {
            width: w,
            height: h,
            channels: 3,
            data: frame
                .normal
                .iter()
                .flat_map(|n| [n.x as f32, n.y as f32, n.z as f32])
                .collect(),
        },
    )?;
    write_pgm_mask(&dir.join(format!("{stem}_sky.pgm")), w, h, &frame.sky_mask)
}

pub fn load_frame(dir: &Path, stem: &str, pose: Pose, camera: PinholeCamera) -> Result<SensorFrame> {
    let (w, h) = (camera.width, camera.height);
    let check = |ww: usize, hh: usize, what: &str| {
        if (ww, hh) != (w, h) {
            Err(Error::DimensionMismatch(format!(
                "{stem} {what} is {ww}x{hh}, camera is {w}x{h}"
            )))
        } else {
            Ok(())
        }
    };
    let (ww, hh, rgb) = read_ppm(&dir.join(format!("{stem}_rgb.ppm")))?;
    check(ww, hh, "rgb")?;
    let depth = read_pfm(&dir.join(format!("{stem}_depth.pfm")))?;
    check(depth.width, depth.height, "depth")?;
    let normal = read_pfm(&dir.join(format!("{stem}_normal.pfm")))?;
    check(normal.width, normal.height, "normal")?;
    let (ww, hh, sky_mask) = read_pgm_mask(&dir.join(format!("{stem}_sky.pgm")))?;
    check(ww, hh, "sky")?;
    let normal = normal
        .data
        .chunks_exact(3)
        .map(|c| {
            let n = Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64);
            if n.norm() > 0.0 {
                n.normalize()
            } else {
                n
            }
        })
        .collect();
    Ok(SensorFrame {
        pose,
        camera,
        rgb,
        depth: depth.data.iter().map(|&d| d as f64).collect(),
        normal,
        sky_mask,
    })
}
