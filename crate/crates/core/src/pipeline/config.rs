use std::path::{Path, PathBuf};

use crate::config::{ConfigDoc, Section};
use crate::error::{Error, Result};
use crate::eval::EvalConfig;
use crate::fixtures::{self, FIXTURE_NAMES};
use crate::geom::{Aabb, PinholeCamera, Vec3};
use crate::scene::LidarSpec;
use crate::train::{LossWeights, TrainConfig};
use crate::uncertainty::UncertaintyConfig;

/// Where camera poses come from when simulating a scene file.
#[derive(Debug, Clone, PartialEq)]
pub enum TrajectorySpec {
    /// TUM trajectory file.
    File(PathBuf),
    /// `count` cameras on a horizontal arc of `arc_deg` degrees around
    /// `target`, all looking at it.
    Ring {
        count: usize,
        radius: f64,
        height: f64,
        target: Vec3,
        arc_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// A built-in fixture (see [`crate::fixtures`]).
    Fixture(String),
    SceneFile {
        scene: PathBuf,
        trajectory: TrajectorySpec,
        width: usize,
        height: usize,
        vfov_deg: f64,
        lidar: LidarSpec,
        range_sigma: f64,
        bounds: Aabb,
    },
}

/// `[data]`: what to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub source: DataSource,
    pub landmarks: usize,
    /// Reference samples per square metre.
    pub reference_density: f64,
}

/// `[field]`: radiance grid and point export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub resolution: [usize; 3],
    pub init_density: f64,
    pub export_stride: usize,
}

impl Default for FieldConfig {
    fn default() -> Self {
        Self {
            resolution: [32, 32, 32],
            init_density: -3.0,
            export_stride: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmapMethod {
    Covisibility,
    Distance,
}

impl SubmapMethod {
    pub fn name(self) -> &'static str {
        match self {
            SubmapMethod::Covisibility => "covis",
            SubmapMethod::Distance => "distance",
        }
    }
}

/// `[submap]`: trajectory partitioning and merging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubmapConfig {
    pub method: SubmapMethod,
    pub k: usize,
    pub merge_voxel: f64,
}

impl Default for SubmapConfig {
    fn default() -> Self {
        Self {
            method: SubmapMethod::Covisibility,
            k: 1,
            merge_voxel: 0.02,
        }
    }
}

/// The whole run, one section per module.
///
/// ```text
/// [pipeline]
/// out = runs/plane
/// seed = 0
///
/// [data]
/// fixture = textureless_plane      # or scene = path, see below
/// landmarks = 300
/// reference_density = 400
///
/// [field]
/// resolution = 32 32 32
/// init_density = -3
/// export_stride = 1
///
/// [train]          iterations, rays_per_batch, …, lambda_colour, …
/// [uncertainty]    gamma, quantile, resolution
/// [submap]         method = covis | distance, k, merge_voxel
/// [eval]           thresholds, occupancy_voxel, n_bins, n_quantiles, exclude
/// ```
///
/// A scene file instead of a fixture needs `scene`, `bounds` (six numbers),
/// `width`, `height`, `vfov`, the `lidar_*` keys and either `trajectory`
/// (TUM file) or the `ring_*` keys. Relative paths are resolved against the
/// config file's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub data: DataConfig,
    pub field: FieldConfig,
    pub train: TrainConfig,
    pub weights: LossWeights,
    pub uncertainty: UncertaintyConfig,
    pub submap: SubmapConfig,
    pub eval: EvalConfig,
}

fn absolute(base: &Path, p: &str) -> PathBuf {
    let p = base.join(p);
    std::path::absolute(&p).unwrap_or(p)
}

fn fmt_vec3(v: &Vec3) -> String {
    format!("{} {} {}", v.x, v.y, v.z)
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let doc = ConfigDoc::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_doc(&doc, base)
    }

    pub fn from_doc(doc: &ConfigDoc, base: &Path) -> Result<Self> {
        let p = doc.section_or_empty("pipeline");
        let out = absolute(base, p.get("out").unwrap_or("run"));
        let seed = p.parse_or("seed", 0u64)?;

        let d = doc
            .section("data")
            .ok_or_else(|| Error::config("data", "missing section"))?;
        let source = match (d.get("fixture"), d.get("scene")) {
            (Some(name), None) => {
                if !FIXTURE_NAMES.contains(&name) {
                    return Err(d.error(
                        "fixture",
                        format!("unknown fixture `{name}`, expected one of {}", FIXTURE_NAMES.join(", ")),
                    ));
                }
                DataSource::Fixture(name.to_string())
            }
            (None, Some(scene)) => Self::scene_source(d, absolute(base, scene), base)?,
            (Some(_), Some(_)) => return Err(d.error("scene", "give either `fixture` or `scene`, not both")),
            (None, None) => return Err(d.error("fixture", "missing (or `scene`)")),
        };
        let landmarks = d.parse_or("landmarks", 300usize)?;
        if landmarks == 0 {
            return Err(d.error("landmarks", "must be ≥ 1"));
        }
        let reference_density = d.parse_or("reference_density", 400.0)?;
        if !(reference_density > 0.0) {
            return Err(d.error("reference_density", "must be > 0"));
        }

        let f = doc.section_or_empty("field");
        let fd = FieldConfig::default();
        let resolution = match f.fixed::<3>("resolution")? {
            None => fd.resolution,
            Some(r) if r.iter().all(|v| *v >= 1.0 && v.fract() == 0.0) => r.map(|v| v as usize),
            Some(_) => return Err(f.error("resolution", "expected three integers ≥ 1")),
        };
        let field = FieldConfig {
            resolution,
            init_density: f.parse_or("init_density", fd.init_density)?,
            export_stride: f.parse_or("export_stride", fd.export_stride)?,
        };
        if field.export_stride == 0 {
            return Err(f.error("export_stride", "must be ≥ 1"));
        }

        let t = doc.section_or_empty("train");
        let mut train = TrainConfig::from_section(&t)?;
        train.seed = seed;
        let weights = LossWeights::from_section(&t)?;
        let uncertainty = UncertaintyConfig::from_section(&doc.section_or_empty("uncertainty"))?;

        let s = doc.section_or_empty("submap");
        let sd = SubmapConfig::default();
        let method = match s.get("method").unwrap_or("covis") {
            "covis" => SubmapMethod::Covisibility,
            "distance" => SubmapMethod::Distance,
            other => return Err(s.error("method", format!("expected covis or distance, got `{other}`"))),
        };
        let submap = SubmapConfig {
            method,
            k: s.parse_or("k", sd.k)?,
            merge_voxel: s.parse_or("merge_voxel", sd.merge_voxel)?,
        };
        if submap.k == 0 {
            return Err(s.error("k", "must be ≥ 1"));
        }
        if !(submap.merge_voxel > 0.0) {
            return Err(s.error("merge_voxel", "must be > 0"));
        }
        let eval = EvalConfig::from_section(&doc.section_or_empty("eval"))?;
        Ok(Self {
            out,
            seed,
            data: DataConfig {
                source,
                landmarks,
                reference_density,
            },
            field,
            train,
            weights,
            uncertainty,
            submap,
            eval,
        })
    }

    fn scene_source(d: &Section, scene: PathBuf, base: &Path) -> Result<DataSource> {
        let trajectory = match d.get("trajectory") {
            Some(path) => TrajectorySpec::File(absolute(base, path)),
            None => {
                let count: usize = d.require("ring_count")?;
                if count == 0 {
                    return Err(d.error("ring_count", "must be ≥ 1"));
                }
                TrajectorySpec::Ring {
                    count,
                    radius: d.require("ring_radius")?,
                    height: d.parse_or("ring_height", 0.0)?,
                    target: d.vec3("ring_target")?.unwrap_or_else(Vec3::zeros),
                    arc_deg: d.parse_or("ring_arc", 360.0)?,
                }
            }
        };
        let (width, height, vfov_deg) = (d.require("width")?, d.require("height")?, d.require("vfov")?);
        PinholeCamera::from_vertical_fov(width, height, vfov_deg).map_err(|e| d.error("vfov", e.to_string()))?;
        let lidar = LidarSpec {
            vertical_fov: d.parse_or("lidar_vfov", 30.0)?,
            azimuth_steps: d.parse_or("lidar_azimuth_steps", 360)?,
            elevation_steps: d.parse_or("lidar_elevation_steps", 16)?,
            max_range: d.parse_or("lidar_max_range", 20.0)?,
        };
        lidar.validate().map_err(|e| d.error("lidar_vfov", e.to_string()))?;
        let range_sigma = d.parse_or("range_sigma", 0.01)?;
        if !(range_sigma >= 0.0) {
            return Err(d.error("range_sigma", "must be ≥ 0"));
        }
        let b = d
            .fixed::<6>("bounds")?
            .ok_or_else(|| d.error("bounds", "missing"))?;
        let bounds = Aabb::new(Vec3::new(b[0], b[1], b[2]), Vec3::new(b[3], b[4], b[5]));
        if (0..3).any(|k| bounds.max[k] <= bounds.min[k]) {
            return Err(d.error("bounds", "max must exceed min on every axis"));
        }
        Ok(DataSource::SceneFile {
            scene,
            trajectory,
            width,
            height,
            vfov_deg,
            lidar,
            range_sigma,
            bounds,
        })
    }

    /// Full, resolved configuration. Loading it again yields an equal config.
    pub fn to_doc(&self) -> ConfigDoc {
        let mut doc = ConfigDoc::default();
        let mut p = Section::new("pipeline");
        p.set("out", self.out.display());
        p.set("seed", self.seed);
        doc.sections.push(p);

        let mut d = Section::new("data");
        match &self.data.source {
            DataSource::Fixture(name) => d.set("fixture", name),
            DataSource::SceneFile {
                scene,
                trajectory,
                width,
                height,
                vfov_deg,
                lidar,
                range_sigma,
                bounds,
            } => {
                d.set("scene", scene.display());
                match trajectory {
                    TrajectorySpec::File(path) => d.set("trajectory", path.display()),
                    TrajectorySpec::Ring {
                        count,
                        radius,
                        height,
                        target,
                        arc_deg,
                    } => {
                        d.set("ring_count", count);
                        d.set("ring_radius", radius);
                        d.set("ring_height", height);
                        d.set("ring_target", fmt_vec3(target));
                        d.set("ring_arc", arc_deg);
                    }
                }
                d.set("width", width);
                d.set("height", height);
                d.set("vfov", vfov_deg);
                d.set("lidar_vfov", lidar.vertical_fov);
                d.set("lidar_azimuth_steps", lidar.azimuth_steps);
                d.set("lidar_elevation_steps", lidar.elevation_steps);
                d.set("lidar_max_range", lidar.max_range);
                d.set("range_sigma", range_sigma);
                d.set("bounds", format!("{} {}", fmt_vec3(&bounds.min), fmt_vec3(&bounds.max)));
            }
        }
        d.set("landmarks", self.data.landmarks);
        d.set("reference_density", self.data.reference_density);
        doc.sections.push(d);

        let mut f = Section::new("field");
        let r = self.field.resolution;
        f.set("resolution", format!("{} {} {}", r[0], r[1], r[2]));
        f.set("init_density", self.field.init_density);
        f.set("export_stride", self.field.export_stride);
        doc.sections.push(f);

        let mut t = Section::new("train");
        self.train.write_section(&mut t);
        self.weights.write_section(&mut t);
        doc.sections.push(t);

        let mut u = Section::new("uncertainty");
        self.uncertainty.write_section(&mut u);
        doc.sections.push(u);

        let mut s = Section::new("submap");
        s.set("method", self.submap.method.name());
        s.set("k", self.submap.k);
        s.set("merge_voxel", self.submap.merge_voxel);
        doc.sections.push(s);

        let mut e = Section::new("eval");
        self.eval.write_section(&mut e);
        doc.sections.push(e);
        doc
    }

    /// Field bounds of the configured data source.
    pub fn bounds(&self) -> Aabb {
        match &self.data.source {
            DataSource::Fixture(name) => fixtures::by_name(name, 0).expect("validated name").bounds,
            DataSource::SceneFile { bounds, .. } => *bounds,
        }
    }
}
