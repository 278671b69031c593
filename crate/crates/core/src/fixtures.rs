//! Small synthetic scenes used by the acceptance suite, the examples and the
//! browser demo. Every fixture is a 20-frame 64×48 capture of a scene that
//! fits a 32³ field.

use crate::geom::{Aabb, PinholeCamera, PointCloud, Pose, Vec3};
use crate::scene::{reference_cloud, render_frame, LidarSpec, NoiseSpec, Primitive, Scene, SensorFrame, Shape};

pub const FIXTURE_RESOLUTION: [usize; 3] = [32, 32, 32];
pub const FIXTURE_WIDTH: usize = 64;
pub const FIXTURE_HEIGHT: usize = 48;
pub const FIXTURE_FRAMES: usize = 20;

/// Height where the street facades switch from the lower to the upper band.
pub const STREET_BAND: f64 = 1.5;

const GREY: [f64; 3] = [0.6, 0.6, 0.6];
const LIGHT: [f64; 3] = [0.9, 0.85, 0.8];
const DARK: [f64; 3] = [0.15, 0.2, 0.25];

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub scene: Scene,
    pub poses: Vec<Pose>,
    pub camera: PinholeCamera,
    pub lidar: LidarSpec,
    pub noise: NoiseSpec,
    pub bounds: Aabb,
}

impl Fixture {
    /// Renders every pose. Frame `i` draws its range noise from `noise.seed + i`.
    pub fn frames(&self) -> Vec<SensorFrame> {
        self.poses
            .iter()
            .enumerate()
            .map(|(i, pose)| {
                let noise = NoiseSpec {
                    seed: self.noise.seed.wrapping_add(i as u64),
                    ..self.noise
                };
                render_frame(&self.scene, pose, &self.camera, &self.lidar, &noise)
            })
            .collect()
    }

    /// Ground-truth surface samples clipped to the field bounds.
    pub fn reference(&self, density: f64) -> PointCloud {
        let mut cloud = reference_cloud(&self.scene, density, self.noise.seed);
        cloud.retain(|p| self.bounds.contains(&p.position));
        cloud
    }
}

fn camera(vfov_deg: f64) -> PinholeCamera {
    PinholeCamera::from_vertical_fov(FIXTURE_WIDTH, FIXTURE_HEIGHT, vfov_deg).expect("valid camera")
}

fn scene(primitives: Vec<Primitive>) -> Scene {
    Scene::new(primitives).expect("valid primitives")
}

fn ring(n: usize, radius: f64, height: f64, target: Vec3, arc: f64) -> Vec<Pose> {
    (0..n)
        .map(|i| {
            let a = -0.5 * arc + arc * i as f64 / (n - 1).max(1) as f64;
            let eye = Vec3::new(radius * a.cos(), radius * a.sin(), height);
            Pose::look_at(eye, target, Vec3::z(), i as f64)
        })
        .collect()
}

/// A textureless square floor seen obliquely from a ring of cameras, with a
/// wide lidar that covers most of it.
pub fn textureless_plane(seed: u64) -> Fixture {
    let plane = Shape::Plane {
        point: Vec3::zeros(),
        normal: Vec3::z(),
        extent: Some([3.0, 3.0]),
    };
    Fixture {
        name: "textureless_plane",
        scene: scene(vec![Primitive::uniform(plane, GREY)]),
        poses: ring(FIXTURE_FRAMES, 2.4, 1.4, Vec3::zeros(), std::f64::consts::TAU * 0.95),
        camera: camera(50.0),
        lidar: LidarSpec {
            vertical_fov: 60.0,
            azimuth_steps: 360,
            elevation_steps: 48,
            max_range: 10.0,
        },
        noise: NoiseSpec {
            range_sigma: 0.01,
            seed,
        },
        bounds: Aabb::new(Vec3::new(-2.0, -2.0, -0.5), Vec3::new(2.0, 2.0, 1.5)),
    }
}

/// A row of three box buildings on a floor, seen from a street in front.
/// The lidar is narrow and mounted level, so it sweeps the lower part of
/// the facades only. Facades are textured above `band_height` when
/// `textured_upper` is set and uniform everywhere else.
fn street(name: &'static str, seed: u64, textured_upper: bool) -> Fixture {
    let band_height = STREET_BAND;
    let mut prims = vec![Primitive::uniform(
        Shape::Plane {
            point: Vec3::zeros(),
            normal: Vec3::z(),
            extent: Some([5.6, 3.6]),
        },
        GREY,
    )];
    for (x0, x1) in [(-2.6, -1.0), (-0.8, 0.8), (1.0, 2.6)] {
        prims.push(Primitive::uniform(
            Shape::AxisBox {
                min: Vec3::new(x0, 0.6, 0.0),
                max: Vec3::new(x1, 1.6, band_height),
            },
            GREY,
        ));
        let upper = Shape::AxisBox {
            min: Vec3::new(x0, 0.6, band_height),
            max: Vec3::new(x1, 1.6, 2.6),
        };
        prims.push(if textured_upper {
            Primitive::checker(upper, LIGHT, DARK, 0.3)
        } else {
            Primitive::uniform(upper, GREY)
        });
    }
    // Level cameras, so the lidar sweep stays level too.
    let poses = (0..FIXTURE_FRAMES)
        .map(|i| {
            let x = -2.0 + 4.0 * i as f64 / (FIXTURE_FRAMES - 1) as f64;
            let eye = Vec3::new(x, -1.6, 0.6);
            Pose::look_at(eye, Vec3::new(0.5 * x, 1.0, 0.6), Vec3::z(), i as f64)
        })
        .collect();
    Fixture {
        name,
        scene: scene(prims),
        poses,
        camera: camera(70.0),
        lidar: LidarSpec {
            vertical_fov: 20.0,
            azimuth_steps: 360,
            elevation_steps: 16,
            max_range: 10.0,
        },
        noise: NoiseSpec {
            range_sigma: 0.01,
            seed,
        },
        bounds: Aabb::new(Vec3::new(-3.0, -2.0, -0.2), Vec3::new(3.0, 2.0, 2.8)),
    }
}

/// Textured upper facades above a narrow lidar sweep.
pub fn narrow_lidar_street(seed: u64) -> Fixture {
    street("narrow_lidar_street", seed, true)
}

/// Textureless facades with lidar on the lower band only.
pub fn mixed_coverage(seed: u64) -> Fixture {
    street("mixed_coverage", seed, false)
}

/// A textured floor covered by lidar, plus one small textureless object
/// past the lidar's maximum range.
pub fn distant_artefact(seed: u64) -> Fixture {
    let floor = Shape::Plane {
        point: Vec3::new(0.75, 0.0, 0.0),
        normal: Vec3::z(),
        extent: Some([2.5, 2.0]),
    };
    let far = Shape::AxisBox {
        min: Vec3::new(-1.85, -0.15, 0.25),
        max: Vec3::new(-1.55, 0.15, 0.55),
    };
    let poses = (0..FIXTURE_FRAMES)
        .map(|i| {
            let y = -1.0 + 2.0 * i as f64 / (FIXTURE_FRAMES - 1) as f64;
            let eye = Vec3::new(2.4, y, 1.0);
            Pose::look_at(eye, Vec3::new(-0.5, 0.3 * y, 0.2), Vec3::z(), i as f64)
        })
        .collect();
    Fixture {
        name: "distant_artefact",
        scene: scene(vec![
            Primitive::checker(floor, LIGHT, DARK, 0.4),
            Primitive::uniform(far, GREY),
        ]),
        poses,
        camera: camera(50.0),
        lidar: LidarSpec {
            vertical_fov: 60.0,
            azimuth_steps: 360,
            elevation_steps: 48,
            max_range: 3.8,
        },
        noise: NoiseSpec {
            range_sigma: 0.01,
            seed,
        },
        bounds: Aabb::new(Vec3::new(-2.0, -2.0, -0.5), Vec3::new(2.0, 2.0, 1.5)),
    }
}

/// Two objects on opposite sides of a line of camera stations. Each station
/// carries one camera looking at each object.
pub fn opposite_facing(seed: u64) -> Fixture {
    let floor = Shape::Plane {
        point: Vec3::zeros(),
        normal: Vec3::z(),
        extent: Some([5.6, 3.6]),
    };
    let a = Shape::AxisBox {
        min: Vec3::new(1.6, -0.6, 0.0),
        max: Vec3::new(2.4, 0.6, 1.2),
    };
    let c = Shape::AxisBox {
        min: Vec3::new(-2.4, -0.6, 0.0),
        max: Vec3::new(-1.6, 0.6, 1.2),
    };
    let stations = FIXTURE_FRAMES / 2;
    let mut poses = Vec::with_capacity(FIXTURE_FRAMES);
    for i in 0..stations {
        let y = -1.2 + 2.4 * i as f64 / (stations - 1) as f64;
        let eye = Vec3::new(0.0, y, 0.8);
        for side in [1.0, -1.0] {
            let target = Vec3::new(2.0 * side, 0.3 * y, 0.5);
            poses.push(Pose::look_at(eye, target, Vec3::z(), poses.len() as f64));
        }
    }
    Fixture {
        name: "opposite_facing",
        scene: scene(vec![
            Primitive::checker(floor, LIGHT, DARK, 0.5),
            Primitive::checker(a, LIGHT, DARK, 0.3),
            Primitive::checker(c, DARK, LIGHT, 0.3),
        ]),
        poses,
        camera: camera(60.0),
        lidar: LidarSpec {
            vertical_fov: 40.0,
            azimuth_steps: 360,
            elevation_steps: 24,
            max_range: 10.0,
        },
        noise: NoiseSpec {
            range_sigma: 0.01,
            seed,
        },
        bounds: Aabb::new(Vec3::new(-3.0, -2.0, -0.2), Vec3::new(3.0, 2.0, 1.8)),
    }
}

pub const FIXTURE_NAMES: [&str; 5] = [
    "textureless_plane",
    "narrow_lidar_street",
    "mixed_coverage",
    "distant_artefact",
    "opposite_facing",
];

pub fn by_name(name: &str, seed: u64) -> Option<Fixture> {
    Some(match name {
        "textureless_plane" => textureless_plane(seed),
        "narrow_lidar_street" => narrow_lidar_street(seed),
        "mixed_coverage" => mixed_coverage(seed),
        "distant_artefact" => distant_artefact(seed),
        "opposite_facing" => opposite_facing(seed),
        _ => return None,
    })
}
