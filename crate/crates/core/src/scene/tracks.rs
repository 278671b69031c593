use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sampling::sample_by_area, RayResult, Scene};
use crate::error::{Error, Result};
use crate::geom::{PinholeCamera, Pose, Projection, Ray, Vec3};
use crate::io::{read_csv, write_csv};
use crate::par;

/// Landmarks and which images observe them (`visibility[image][landmark]`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LandmarkTracks {
    pub landmarks: Vec<Vec3>,
    pub visibility: Vec<Vec<bool>>,
}

impl LandmarkTracks {
    pub fn n_images(&self) -> usize {
        self.visibility.len()
    }

    pub fn n_landmarks(&self) -> usize {
        self.visibility.first().map_or(self.landmarks.len(), Vec::len)
    }
}

/// Is `p` visible from `pose`: inside the image, in front, and unoccluded.
pub fn landmark_visible(scene: &Scene, pose: &Pose, cam: &PinholeCamera, p: &Vec3) -> bool {
    let Projection::Visible { u, v, .. } = cam.project(pose, p) else {
        return false;
    };
    if cam.pixel_of(u, v).is_none() {
        return false;
    }
    let to = p - pose.translation;
    let dist = to.norm();
    let ray = Ray::new(pose.translation, to).with_range(0.0, dist * (1.0 + 1e-9) + 1e-9);
    match scene.raycast(&ray) {
        RayResult::Hit(h) => h.depth >= dist - 1e-6 * dist.max(1.0),
        RayResult::Sky => true,
    }
}

/// Samples `n_landmarks` points uniformly by area on checker-textured
/// primitives and computes per-image visibility by projection plus an
/// occlusion ray cast.
pub fn generate_tracks(
    scene: &Scene,
    poses: &[Pose],
    cam: &PinholeCamera,
    n_landmarks: usize,
    seed: u64,
) -> Result<LandmarkTracks> {
    if n_landmarks == 0 {
        return Err(Error::InvalidArgument("n_landmarks must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let textured: Vec<usize> = scene
        .primitives
        .iter()
        .enumerate()
        .filter(|(_, p)| p.albedo.is_textured() && p.shape.area().is_some())
        .map(|(i, _)| i)
        .collect();
    let landmarks: Vec<Vec3> = sample_by_area(scene, &textured, n_landmarks, &mut rng)
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    let visibility = par::map_range(poses.len(), |i| {
        landmarks
            .iter()
            .map(|p| landmark_visible(scene, &poses[i], cam, p))
            .collect()
    });
    Ok(LandmarkTracks {
        landmarks,
        visibility,
    })
}

/// Row per image, column per landmark, `0`/`1`.
/// One row per image: its index, then a 0/1 flag per landmark.
pub fn write_tracks_csv(tracks: &LandmarkTracks, path: &Path) -> Result<()> {
    let header: Vec<String> = std::iter::once("image".to_string())
        .chain((0..tracks.n_landmarks()).map(|j| format!("l{j}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = tracks
        .visibility
        .iter()
        .enumerate()
        .map(|(i, row)| {
            std::iter::once(i.to_string())
                .chain(row.iter().map(|&v| if v { "1" } else { "0" }.to_string()))
                .collect()
        })
        .collect();
    write_csv(path, &header, &rows)
}

/// Reads a visibility matrix (landmark positions are not stored in the CSV).
pub fn read_tracks_csv(path: &Path) -> Result<LandmarkTracks> {
    let (header, rows) = read_csv(path)?;
    let visibility = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.len() != header.len() {
                return Err(Error::parse(i + 2, "row length differs from header"));
            }
            if r.first().and_then(|c| c.parse::<usize>().ok()) != Some(i) {
                return Err(Error::parse(i + 2, "expected the image index in the first column"));
            }
            r[1..]
                .iter()
                .map(|c| match c.as_str() {
                    "0" => Ok(false),
                    "1" => Ok(true),
                    other => Err(Error::parse(i + 2, format!("expected 0/1, got `{other}`"))),
                })
                .collect()
        })
        .collect::<Result<Vec<Vec<bool>>>>()?;
    Ok(LandmarkTracks {
        landmarks: Vec::new(),
        visibility,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Primitive, Shape};

    fn checker(shape: Shape) -> Primitive {
        Primitive::checker(shape, [0.9; 3], [0.1; 3], 0.3)
    }

    #[test]
    fn identical_poses_have_identical_rows() {
        let scene = Scene::new(vec![checker(Shape::Sphere {
            center: Vec3::zeros(),
            radius: 1.0,
        })])
        .unwrap();
        let cam = PinholeCamera::from_vertical_fov(64, 48, 60.0).unwrap();
        let p = Pose::look_at(Vec3::new(0.0, -4.0, 0.5), Vec3::zeros(), Vec3::z(), 0.0);
        let t = generate_tracks(&scene, &[p, p], &cam, 200, 1).unwrap();
        assert_eq!(t.visibility[0], t.visibility[1]);
        assert!(t.visibility[0].iter().any(|&v| v));
        // The far hemisphere is self-occluded.
        assert!(t.visibility[0].iter().any(|&v| !v));
    }

    #[test]
    fn opposite_views_share_nothing() {
        let scene = Scene::new(vec![
            checker(Shape::Sphere {
                center: Vec3::new(-4.0, 0.0, 0.0),
                radius: 1.0,
            }),
            checker(Shape::Sphere {
                center: Vec3::new(4.0, 0.0, 0.0),
                radius: 1.0,
            }),
        ])
        .unwrap();
        let cam = PinholeCamera::from_vertical_fov(64, 48, 60.0).unwrap();
        let a = Pose::look_at(Vec3::zeros(), Vec3::new(-1.0, 0.0, 0.0), Vec3::z(), 0.0);
        let c = Pose::look_at(Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::z(), 1.0);
        let t = generate_tracks(&scene, &[a, c], &cam, 300, 2).unwrap();
        let shared = (0..t.n_landmarks()).filter(|&j| t.visibility[0][j] && t.visibility[1][j]).count();
        assert_eq!(shared, 0);
        assert!(t.visibility[0].iter().any(|&v| v) && t.visibility[1].iter().any(|&v| v));
    }

    #[test]
    fn untextured_scene_has_no_landmarks() {
        let scene = Scene::new(vec![Primitive::uniform(
            Shape::Sphere {
                center: Vec3::zeros(),
                radius: 1.0,
            },
            [0.5; 3],
        )])
        .unwrap();
        let cam = PinholeCamera::from_vertical_fov(8, 8, 60.0).unwrap();
        let t = generate_tracks(&scene, &[Pose::identity()], &cam, 10, 0).unwrap();
        assert!(t.landmarks.is_empty());
        assert!(generate_tracks(&scene, &[Pose::identity()], &cam, 0, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = LandmarkTracks {
            landmarks: vec![Vec3::zeros(); 3],
            visibility: vec![vec![true, false, true], vec![false, false, true]],
        };
        let path = dir.path().join("tracks.csv");
        write_tracks_csv(&t, &path).unwrap();
        assert_eq!(read_tracks_csv(&path).unwrap().visibility, t.visibility);

        // Images with no landmarks at all still get a row each.
        let empty = LandmarkTracks {
            landmarks: Vec::new(),
            visibility: vec![Vec::new(); 4],
        };
        write_tracks_csv(&empty, &path).unwrap();
        assert_eq!(read_tracks_csv(&path).unwrap().n_images(), 4);
    }
}
