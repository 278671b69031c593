//! Analytic synthetic scenes: parametric primitives, exact ray casting, and
//! the simulated camera/lidar sensors that produce training frames,
//! landmark tracks and ground-truth reference clouds.

mod frame;
mod primitive;
mod sampling;
mod sensor;
mod tracks;

pub use frame::{load_frame, save_frame, SensorFrame};
pub use primitive::{Albedo, Primitive, Shape};
pub use sampling::{reference_cloud, sample_surface_points};
pub use sensor::{
    estimate_range_normals, lidar_scan, render_frame, simulate_lidar_cloud, LidarReturn, LidarSpec,
    NoiseSpec,
};
pub use tracks::{generate_tracks, read_tracks_csv, write_tracks_csv, LandmarkTracks};

use crate::config::{ConfigDoc, Section};
use crate::error::{Error, Result};
use crate::geom::{Ray, Vec3};

/// Surface hit returned by [`raycast`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    /// Distance along the (unit) ray direction.
    pub depth: f64,
    /// Unit normal facing the ray origin.
    pub normal: Vec3,
    pub colour: [f64; 3],
    pub primitive: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RayResult {
    Hit(Hit),
    Sky,
}

impl RayResult {
    pub fn hit(&self) -> Option<&Hit> {
        match self {
            RayResult::Hit(h) => Some(h),
            RayResult::Sky => None,
        }
    }
}

/// A collection of primitives.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
}

/// Fixed light direction of the diffuse term. Shading depends on the surface
/// only, never on the viewer.
pub fn light_direction() -> Vec3 {
    Vec3::new(0.3, 0.5, 0.8).normalize()
}

impl Scene {
    pub fn new(primitives: Vec<Primitive>) -> Result<Self> {
        for p in &primitives {
            p.validate()?;
        }
        Ok(Self { primitives })
    }

    pub fn push(&mut self, p: Primitive) -> Result<()> {
        p.validate()?;
        self.primitives.push(p);
        Ok(())
    }

    /// Nearest intersection in `(ray.t_near, ray.t_far]`.
    pub fn raycast(&self, ray: &Ray) -> RayResult {
        let mut best: Option<(f64, usize)> = None;
        for (i, p) in self.primitives.iter().enumerate() {
            if let Some(t) = p.shape.intersect(ray) {
                if best.map_or(true, |(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        match best {
            None => RayResult::Sky,
            Some((t, i)) => {
                let prim = &self.primitives[i];
                let point = ray.at(t);
                let outward = prim.shape.outward_normal(&point);
                let normal = if outward.dot(&ray.direction) > 0.0 { -outward } else { outward };
                RayResult::Hit(Hit {
                    depth: t,
                    normal,
                    colour: prim.shade(&point),
                    primitive: i,
                })
            }
        }
    }

    /// Parses the scene grammar: one `[sphere]`, `[box]` or `[plane]` block per primitive.
    ///
    /// ```text
    /// [sphere]
    /// center = 0 0 1
    /// radius = 0.5
    /// albedo = 0.8 0.2 0.2          # uniform colour, or:
    /// checker = 0.9 0.9 0.9 0.1 0.1 0.1
    /// period = 0.25
    ///
    /// [box]
    /// min = -1 -1 0
    /// max = 1 1 2
    ///
    /// [plane]
    /// point = 0 0 0
    /// normal = 0 0 1
    /// extent = 8 8                  # side lengths; omit for an infinite plane
    /// ```
    pub fn from_config(doc: &ConfigDoc) -> Result<Self> {
        let mut scene = Scene::default();
        for s in &doc.sections {
            let shape = match s.name.as_str() {
                "sphere" => Shape::Sphere {
                    center: s.require_vec3("center")?,
                    radius: s.require("radius")?,
                },
                "box" => Shape::AxisBox {
                    min: s.require_vec3("min")?,
                    max: s.require_vec3("max")?,
                },
                "plane" => Shape::Plane {
                    point: s.require_vec3("point")?,
                    normal: s.require_vec3("normal")?.normalize(),
                    extent: s.fixed::<2>("extent")?,
                },
                "" | "scene" => continue,
                other => {
                    return Err(Error::config(other, "unknown primitive type"));
                }
            };
            let albedo = parse_albedo(s)?;
            scene
                .push(Primitive { shape, albedo })
                .map_err(|e| s.error("geometry", e.to_string()))?;
        }
        Ok(scene)
    }

    pub fn to_config(&self) -> ConfigDoc {
        let mut doc = ConfigDoc::default();
        let v = |p: &Vec3| format!("{} {} {}", p.x, p.y, p.z);
        for p in &self.primitives {
            let mut s = match &p.shape {
                Shape::Sphere { center, radius } => {
                    let mut s = Section::new("sphere");
                    s.set("center", v(center));
                    s.set("radius", radius);
                    s
                }
                Shape::AxisBox { min, max } => {
                    let mut s = Section::new("box");
                    s.set("min", v(min));
                    s.set("max", v(max));
                    s
                }
                Shape::Plane {
                    point,
                    normal,
                    extent,
                } => {
                    let mut s = Section::new("plane");
                    s.set("point", v(point));
                    s.set("normal", v(normal));
                    if let Some([a, b]) = extent {
                        s.set("extent", format!("{a} {b}"));
                    }
                    s
                }
            };
            match p.albedo {
                Albedo::Uniform(c) => s.set("albedo", format!("{} {} {}", c[0], c[1], c[2])),
                Albedo::Checker { a, b, period } => {
                    s.set(
                        "checker",
                        format!("{} {} {} {} {} {}", a[0], a[1], a[2], b[0], b[1], b[2]),
                    );
                    s.set("period", period);
                }
            }
            doc.sections.push(s);
        }
        doc
    }
}

fn parse_albedo(s: &Section) -> Result<Albedo> {
    if let Some(c) = s.fixed::<6>("checker")? {
        let period: f64 = s.require("period")?;
        if !(period > 0.0) {
            return Err(s.error("period", "must be positive"));
        }
        return Ok(Albedo::Checker {
            a: [c[0], c[1], c[2]],
            b: [c[3], c[4], c[5]],
            period,
        });
    }
    Ok(Albedo::Uniform(s.fixed::<3>("albedo")?.unwrap_or([0.7, 0.7, 0.7])))
}

/// Free-function form of [`Scene::raycast`].
pub fn raycast(scene: &Scene, ray: &Ray) -> RayResult {
    scene.raycast(ray)
}
