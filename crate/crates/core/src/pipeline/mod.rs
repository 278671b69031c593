//! Stage orchestration over an output directory:
//!
//! ```text
//! simulate → partition → train → hessian → filter → merge → evaluate
//! ```
//!
//! Each stage reads earlier stages' files, writes its own under
//! `<out>/<stage>/` and records `manifest.txt` there with the SHA-256 of
//! every input and output. All randomness derives from the config seed
//! through [`stage_seed`], keyed by stage name (and submap index where a
//! stage runs once per submap).

mod config;

pub use config::{DataConfig, DataSource, FieldConfig, PipelineConfig, SubmapConfig, SubmapMethod, TrajectorySpec};

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{ConfigDoc, Section};
use crate::error::{Error, Result};
use crate::eval::{
    error_plot, evaluate_clouds, psnr, sparsification, ssim, write_error_plot_csv, write_sparsification_csv,
    EvalConfig, MetricsReport, ObservedCloud,
};
use crate::field::{export_pointcloud, VoxelRadianceField};
use crate::fixtures;
use crate::geom::{Aabb, PinholeCamera, PointCloud, Pose, Vec3};
use crate::io::{read_ply, read_trajectory, write_ply, write_trajectory};
use crate::scene::{
    generate_tracks, load_frame, read_tracks_csv, reference_cloud, render_frame, save_frame, write_tracks_csv,
    LandmarkTracks, NoiseSpec, Scene, SensorFrame,
};
use crate::submap::{
    build_covisibility, distance_clustering, merge_submaps, partition_covisibility, read_partition_csv,
    write_graph_csv, write_partition_csv, Partition,
};
use crate::train::{collect_rays, render_view, train, write_loss_history, LossRecord};
use crate::uncertainty::{accumulate_hessian, annotate, annotate_and_filter, FilterPolicy, HessianDiag, ModalityKind};

pub const STAGES: [&str; 7] = ["simulate", "partition", "train", "hessian", "filter", "merge", "evaluate"];

pub const SNAPSHOT_FILE: &str = "config.snapshot.cfg";

/// Seed for the component named `key`: the first 8 bytes (little endian) of
/// `SHA-256(seed as 8 LE bytes ‖ key)`.
pub fn stage_seed(seed: u64, key: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(key.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn relative(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).display().to_string()
}

fn write_manifest(out: &Path, stage: &str, seed: u64, inputs: &[PathBuf], outputs: &[PathBuf]) -> Result<()> {
    let mut doc = ConfigDoc::default();
    let mut m = Section::new("manifest");
    m.set("stage", stage);
    m.set("seed", seed);
    doc.sections.push(m);
    for (name, files) in [("inputs", inputs), ("outputs", outputs)] {
        let mut s = Section::new(name);
        for f in files {
            s.set(&relative(out, f), hash_file(f)?);
        }
        doc.sections.push(s);
    }
    let path = out.join(stage).join("manifest.txt");
    crate::io::write_bytes(&path, doc.to_text().as_bytes())
}

fn submap_dir(out: &Path, stage: &str, c: usize) -> PathBuf {
    out.join(stage).join(format!("submap_{c:02}"))
}

/// A simulated dataset as stored by the `simulate` stage.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub camera: PinholeCamera,
    pub bounds: Aabb,
    pub poses: Vec<Pose>,
    pub frames: Vec<SensorFrame>,
    pub tracks: LandmarkTracks,
    pub reference: PointCloud,
}

impl Dataset {
    pub fn positions(&self) -> Vec<Vec3> {
        self.poses.iter().map(|p| p.translation).collect()
    }
}

fn frame_stem(i: usize) -> String {
    format!("frame_{i:03}")
}

fn dataset_files(out: &Path, n_frames: usize) -> Vec<PathBuf> {
    let dir = out.join("simulate");
    let mut files = vec![
        dir.join("dataset.cfg"),
        dir.join("trajectory.txt"),
        dir.join("tracks.csv"),
        dir.join("reference.ply"),
    ];
    for i in 0..n_frames {
        for suffix in ["rgb.ppm", "depth.pfm", "normal.pfm", "sky.pgm"] {
            files.push(dir.join(format!("{}_{suffix}", frame_stem(i))));
        }
    }
    files
}

pub fn load_dataset(out: &Path) -> Result<Dataset> {
    let dir = out.join("simulate");
    let doc = ConfigDoc::load(&dir.join("dataset.cfg"))?;
    let c = doc.section_or_empty("camera");
    let camera = PinholeCamera::new(
        c.require("fx")?,
        c.require("fy")?,
        c.require("cx")?,
        c.require("cy")?,
        c.require("width")?,
        c.require("height")?,
    )?;
    let f = doc.section_or_empty("field");
    let bounds = Aabb::new(f.require_vec3("min")?, f.require_vec3("max")?);
    let poses = read_trajectory(&dir.join("trajectory.txt"))?;
    let frames = poses
        .iter()
        .enumerate()
        .map(|(i, pose)| load_frame(&dir, &frame_stem(i), *pose, camera))
        .collect::<Result<Vec<_>>>()?;
    let tracks = read_tracks_csv(&dir.join("tracks.csv"))?;
    if tracks.n_images() != poses.len() {
        return Err(Error::LengthMismatch {
            left: tracks.n_images(),
            right: poses.len(),
        });
    }
    let reference = read_ply(&dir.join("reference.ply"))?;
    Ok(Dataset {
        camera,
        bounds,
        poses,
        frames,
        tracks,
        reference,
    })
}

fn ring_poses(count: usize, radius: f64, height: f64, target: Vec3, arc_deg: f64) -> Vec<Pose> {
    let arc = arc_deg.to_radians();
    // A full circle would put the last camera on top of the first.
    let span = if (arc_deg - 360.0).abs() < 1e-9 { count } else { count.saturating_sub(1).max(1) };
    (0..count)
        .map(|i| {
            let a = -0.5 * arc + arc * i as f64 / span as f64;
            let eye = target + Vec3::new(radius * a.cos(), radius * a.sin(), 0.0);
            let eye = Vec3::new(eye.x, eye.y, height);
            Pose::look_at(eye, target, Vec3::z(), i as f64)
        })
        .collect()
}

/// Renders frames, landmark tracks and the reference cloud into `<out>/simulate/`.
pub fn cmd_simulate(cfg: &PipelineConfig, out: &Path) -> Result<Dataset> {
    stage("simulate", || {
        let seed = stage_seed(cfg.seed, "simulate");
        let (scene, poses, camera, lidar, range_sigma, bounds, inputs) = match &cfg.data.source {
            DataSource::Fixture(name) => {
                let fx = fixtures::by_name(name, 0).ok_or_else(|| Error::config("data.fixture", "unknown fixture"))?;
                (fx.scene, fx.poses, fx.camera, fx.lidar, fx.noise.range_sigma, fx.bounds, Vec::new())
            }
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
                let doc = ConfigDoc::load(scene)?;
                let mut inputs = vec![scene.clone()];
                let poses = match trajectory {
                    TrajectorySpec::File(path) => {
                        inputs.push(path.clone());
                        read_trajectory(path)?
                    }
                    TrajectorySpec::Ring {
                        count,
                        radius,
                        height,
                        target,
                        arc_deg,
                    } => ring_poses(*count, *radius, *height, *target, *arc_deg),
                };
                let camera = PinholeCamera::from_vertical_fov(*width, *height, *vfov_deg)?;
                (Scene::from_config(&doc)?, poses, camera, *lidar, *range_sigma, *bounds, inputs)
            }
        };
        if poses.is_empty() {
            return Err(Error::config("data.trajectory", "no poses"));
        }
        let dir = out.join("simulate");
        create_dir(&dir)?;
        let frames: Vec<SensorFrame> = poses
            .iter()
            .enumerate()
            .map(|(i, pose)| {
                let noise = NoiseSpec {
                    range_sigma,
                    seed: stage_seed(seed, &format!("noise/{i}")),
                };
                render_frame(&scene, pose, &camera, &lidar, &noise)
            })
            .collect();
        for (i, f) in frames.iter().enumerate() {
            save_frame(f, &dir, &frame_stem(i))?;
        }
        write_trajectory(&poses, &dir.join("trajectory.txt"))?;

        let mut doc = ConfigDoc::default();
        let mut c = Section::new("camera");
        c.set("fx", camera.fx);
        c.set("fy", camera.fy);
        c.set("cx", camera.cx);
        c.set("cy", camera.cy);
        c.set("width", camera.width);
        c.set("height", camera.height);
        doc.sections.push(c);
        let mut f = Section::new("field");
        f.set("min", format!("{} {} {}", bounds.min.x, bounds.min.y, bounds.min.z));
        f.set("max", format!("{} {} {}", bounds.max.x, bounds.max.y, bounds.max.z));
        doc.sections.push(f);
        crate::io::write_bytes(&dir.join("dataset.cfg"), doc.to_text().as_bytes())?;
        crate::io::write_bytes(&dir.join("scene.cfg"), scene.to_config().to_text().as_bytes())?;

        let tracks = if scene.primitives.iter().any(|p| p.albedo.is_textured()) {
            generate_tracks(&scene, &poses, &camera, cfg.data.landmarks, stage_seed(seed, "tracks"))?
        } else {
            LandmarkTracks {
                landmarks: Vec::new(),
                visibility: vec![Vec::new(); poses.len()],
            }
        };
        write_tracks_csv(&tracks, &dir.join("tracks.csv"))?;
        let mut reference = reference_cloud(&scene, cfg.data.reference_density, stage_seed(seed, "reference"));
        reference.retain(|p| bounds.contains(&p.position));
        write_ply(&reference, &dir.join("reference.ply"))?;

        let mut outputs = dataset_files(out, poses.len());
        outputs.push(dir.join("scene.cfg"));
        write_manifest(out, "simulate", seed, &inputs, &outputs)?;
        log::info!(
            "simulated {} frames, {} landmarks, {} reference points",
            frames.len(),
            tracks.n_landmarks(),
            reference.len()
        );
        load_dataset(out)
    })
}

fn stage<T>(name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    log::info!("stage {name}");
    f().map_err(|e| e.in_stage(name))
}

fn partition_path(out: &Path) -> PathBuf {
    out.join("partition").join("partition.csv")
}

pub fn cmd_partition(cfg: &PipelineConfig, out: &Path) -> Result<Partition> {
    stage("partition", || {
        let data = load_dataset(out)?;
        let seed = stage_seed(cfg.seed, "partition");
        let graph = build_covisibility(&data.tracks);
        let positions = data.positions();
        let part = match cfg.submap.method {
            SubmapMethod::Covisibility => partition_covisibility(&graph, &positions, cfg.submap.k)?,
            SubmapMethod::Distance => distance_clustering(&positions, cfg.submap.k, seed)?,
        };
        let dir = out.join("partition");
        write_partition_csv(&partition_path(out), &part)?;
        write_graph_csv(&dir.join("graph.csv"), &graph)?;
        write_manifest(
            out,
            "partition",
            seed,
            &dataset_files(out, data.frames.len()),
            &[partition_path(out), dir.join("graph.csv")],
        )?;
        log::info!("partition ({}): {:?}", cfg.submap.method.name(), part.labels);
        Ok(part)
    })
}

fn load_partition(out: &Path, n: usize) -> Result<Partition> {
    let part = read_partition_csv(&partition_path(out))?;
    if part.labels.len() != n {
        return Err(Error::LengthMismatch {
            left: part.labels.len(),
            right: n,
        });
    }
    Ok(part)
}

fn submap_frames(data: &Dataset, part: &Partition, c: usize) -> Vec<SensorFrame> {
    part.members(c).into_iter().map(|i| data.frames[i].clone()).collect()
}

fn field_path(out: &Path, c: usize) -> PathBuf {
    submap_dir(out, "train", c).join("field.vrf")
}

/// Trains one field per submap. Returns each submap's final loss.
pub fn cmd_train(cfg: &PipelineConfig, out: &Path) -> Result<Vec<f64>> {
    stage("train", || {
        let data = load_dataset(out)?;
        let part = load_partition(out, data.frames.len())?;
        let mut finals = Vec::new();
        let mut outputs = Vec::new();
        for c in 0..part.k() {
            let frames = submap_frames(&data, &part, c);
            let tc = crate::train::TrainConfig {
                seed: stage_seed(cfg.seed, &format!("train/{c}")),
                ..cfg.train
            };
            let mut field = VoxelRadianceField::new(data.bounds, cfg.field.resolution, cfg.field.init_density);
            let mut history: Vec<LossRecord> = Vec::new();
            let result = train(&mut field, &frames, &tc, &cfg.weights, &mut history);
            let dir = submap_dir(out, "train", c);
            write_loss_history(&dir.join("loss_history.csv"), &history)?;
            result?;
            field.save(&field_path(out, c))?;
            let last = history.last().map_or(f64::NAN, |r| r.loss.total);
            log::info!("submap {c}: {} frames, final loss {last:.6}", frames.len());
            finals.push(last);
            outputs.push(field_path(out, c));
            outputs.push(dir.join("loss_history.csv"));
        }
        let mut inputs = dataset_files(out, data.frames.len());
        inputs.push(partition_path(out));
        write_manifest(out, "train", stage_seed(cfg.seed, "train"), &inputs, &outputs)?;
        Ok(finals)
    })
}

fn hessian_path(out: &Path, c: usize, kind: ModalityKind) -> PathBuf {
    submap_dir(out, "hessian", c).join(format!("{}.hes", kind.name()))
}

pub fn cmd_hessian(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    stage("hessian", || {
        let data = load_dataset(out)?;
        let part = load_partition(out, data.frames.len())?;
        let mut inputs = vec![partition_path(out)];
        let mut outputs = Vec::new();
        for c in 0..part.k() {
            let field = VoxelRadianceField::load(&field_path(out, c))?;
            let rays = collect_rays(&submap_frames(&data, &part, c));
            let pgrid = cfg.uncertainty.perturbation_grid(&field);
            for kind in [ModalityKind::Colour, ModalityKind::Depth] {
                let h = accumulate_hessian(
                    &field,
                    &pgrid,
                    &rays,
                    kind,
                    cfg.train.n_samples_per_ray,
                    cfg.train.depth_sigma_end,
                    cfg.uncertainty.gamma,
                )?;
                h.save(&hessian_path(out, c, kind))?;
                outputs.push(hessian_path(out, c, kind));
            }
            inputs.push(field_path(out, c));
        }
        write_manifest(out, "hessian", stage_seed(cfg.seed, "hessian"), &inputs, &outputs)
    })
}

fn cloud_path(out: &Path, c: usize, name: &str) -> PathBuf {
    submap_dir(out, "filter", c).join(format!("{name}.ply"))
}

/// Exports each submap's cloud from its own training rays, annotates it with
/// both variances and applies the quantile filter.
pub fn cmd_filter(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    stage("filter", || {
        let data = load_dataset(out)?;
        let part = load_partition(out, data.frames.len())?;
        let policy = FilterPolicy {
            quantile: cfg.uncertainty.quantile,
        };
        let mut inputs = vec![partition_path(out)];
        let mut outputs = Vec::new();
        for c in 0..part.k() {
            let field = VoxelRadianceField::load(&field_path(out, c))?;
            let hc = HessianDiag::load(&hessian_path(out, c, ModalityKind::Colour))?;
            let hd = HessianDiag::load(&hessian_path(out, c, ModalityKind::Depth))?;
            let frames = submap_frames(&data, &part, c);
            let cloud = export_pointcloud(&field, &frames, cfg.field.export_stride, cfg.train.n_samples_per_ray);
            let mut annotated = cloud.clone();
            annotate(&mut annotated, &hc, &hd);
            let filtered = annotate_and_filter(cloud, &hc, &hd, policy);
            log::info!("submap {c}: kept {} of {} points", filtered.len(), annotated.len());
            write_ply(&annotated, &cloud_path(out, c, "annotated"))?;
            write_ply(&filtered, &cloud_path(out, c, "filtered"))?;
            inputs.extend([
                field_path(out, c),
                hessian_path(out, c, ModalityKind::Colour),
                hessian_path(out, c, ModalityKind::Depth),
            ]);
            outputs.extend([cloud_path(out, c, "annotated"), cloud_path(out, c, "filtered")]);
        }
        write_manifest(out, "filter", stage_seed(cfg.seed, "filter"), &inputs, &outputs)
    })
}

fn merged_path(out: &Path, name: &str) -> PathBuf {
    out.join("merge").join(format!("{name}.ply"))
}

/// Merges the filtered submap clouds into `merge/merged.ply`, and the
/// annotated but unfiltered ones into `merge/merged_unfiltered.ply`.
pub fn cmd_merge(cfg: &PipelineConfig, out: &Path) -> Result<PointCloud> {
    stage("merge", || {
        let data = load_dataset(out)?;
        let part = load_partition(out, data.frames.len())?;
        let mut inputs = Vec::new();
        let mut merged = PointCloud::default();
        for (name, target) in [("filtered", "merged"), ("annotated", "merged_unfiltered")] {
            let clouds = (0..part.k())
                .map(|c| {
                    inputs.push(cloud_path(out, c, name));
                    read_ply(&cloud_path(out, c, name))
                })
                .collect::<Result<Vec<_>>>()?;
            let m = merge_submaps(&clouds, cfg.submap.merge_voxel)?;
            write_ply(&m, &merged_path(out, target))?;
            if target == "merged" {
                merged = m;
            }
        }
        write_manifest(
            out,
            "merge",
            stage_seed(cfg.seed, "merge"),
            &inputs,
            &[merged_path(out, "merged"), merged_path(out, "merged_unfiltered")],
        )?;
        log::info!("merged cloud: {} points", merged.len());
        Ok(merged)
    })
}

pub fn report_path(out: &Path) -> PathBuf {
    out.join("evaluate").join("report.txt")
}

/// Geometric metrics of the merged cloud against the reference, image
/// metrics of every training view rendered by its submap's field, and
/// sparsification / error-plot tables for both uncertainty modalities
/// (computed on the unfiltered merged cloud).
pub fn cmd_evaluate(cfg: &PipelineConfig, out: &Path) -> Result<MetricsReport> {
    stage("evaluate", || {
        let data = load_dataset(out)?;
        let part = load_partition(out, data.frames.len())?;
        let traj = data.positions();
        let reference = ObservedCloud::with_nearest_origin(data.reference.clone(), &traj)?;
        let merged = read_ply(&merged_path(out, "merged"))?;
        let unfiltered = read_ply(&merged_path(out, "merged_unfiltered"))?;
        let mut report =
            evaluate_clouds(&ObservedCloud::with_nearest_origin(merged, &traj)?, &reference, &cfg.eval)?.report;

        let dir = out.join("evaluate");
        let mut outputs = vec![report_path(out)];
        let all = evaluate_clouds(&ObservedCloud::with_nearest_origin(unfiltered, &traj)?, &reference, &cfg.eval)?;
        for kind in [ModalityKind::Depth, ModalityKind::Colour] {
            let u: Vec<f64> = all
                .recon
                .points
                .iter()
                .map(|p| match kind {
                    ModalityKind::Depth => p.u_depth,
                    ModalityKind::Colour => p.u_colour,
                })
                .collect();
            if u.len() < cfg.eval.n_bins {
                log::warn!("too few points for {} sparsification", kind.name());
                continue;
            }
            let sp = sparsification(&all.recon_errors, &u, cfg.eval.n_bins)?;
            let ep = error_plot(&all.recon_errors, &u, cfg.eval.n_quantiles)?;
            let sub = dir.join(format!("uncertainty_{}", kind.name()));
            write_sparsification_csv(&sub.join("sparsification.csv"), &sp)?;
            write_error_plot_csv(&sub.join("error_plot.csv"), &ep)?;
            outputs.push(sub.join("sparsification.csv"));
            outputs.push(sub.join("error_plot.csv"));
            match kind {
                ModalityKind::Depth => report.ause_depth = Some(sp.ause),
                ModalityKind::Colour => report.ause_colour = Some(sp.ause),
            }
        }

        let (mut psnr_sum, mut ssim_sum) = (0.0, 0.0);
        let mut inputs = vec![partition_path(out), merged_path(out, "merged"), merged_path(out, "merged_unfiltered")];
        for c in 0..part.k() {
            let field = VoxelRadianceField::load(&field_path(out, c))?;
            inputs.push(field_path(out, c));
            for frame in submap_frames(&data, &part, c) {
                let view = render_view(&field, &frame, cfg.train.n_samples_per_ray);
                psnr_sum += psnr(&view.rgb, &frame.rgb)?;
                ssim_sum += ssim(&view.rgb, &frame.rgb, frame.width(), frame.height())?;
            }
        }
        let n = data.frames.len() as f64;
        report.psnr = Some(psnr_sum / n);
        report.ssim = Some(ssim_sum / n);
        report.write(&report_path(out))?;
        inputs.extend(dataset_files(out, data.frames.len()));
        write_manifest(out, "evaluate", stage_seed(cfg.seed, "evaluate"), &inputs, &outputs)?;
        log::info!(
            "accuracy {:.4} completeness {:.4} psnr {:.2}",
            report.accuracy,
            report.completeness,
            report.psnr.unwrap_or(f64::NAN)
        );
        Ok(report)
    })
}

/// Runs one named stage.
pub fn run_stage(cfg: &PipelineConfig, out: &Path, name: &str) -> Result<()> {
    match name {
        "simulate" => cmd_simulate(cfg, out).map(drop),
        "partition" => cmd_partition(cfg, out).map(drop),
        "train" => cmd_train(cfg, out).map(drop),
        "hessian" => cmd_hessian(cfg, out),
        "filter" => cmd_filter(cfg, out),
        "merge" => cmd_merge(cfg, out).map(drop),
        "evaluate" => cmd_evaluate(cfg, out).map(drop),
        other => Err(Error::config(
            "stage",
            format!("unknown stage `{other}`, expected one of {}", STAGES.join(", ")),
        )),
    }
}

/// Writes the config snapshot, then runs every stage from `from` (default:
/// the first) to the end.
pub fn cmd_pipeline(cfg: &PipelineConfig, out: &Path, from: Option<&str>) -> Result<MetricsReport> {
    let start = match from {
        None => 0,
        Some(name) => STAGES.iter().position(|s| *s == name).ok_or_else(|| {
            Error::config("stage", format!("unknown stage `{name}`, expected one of {}", STAGES.join(", ")))
        })?,
    };
    write_snapshot(cfg, out)?;
    for name in &STAGES[start..] {
        run_stage(cfg, out, name)?;
    }
    MetricsReport::from_text(&crate::io::read_to_string(&report_path(out))?)
}

/// Writes `config.snapshot.cfg`: the resolved config with `out` set to the
/// directory actually used.
pub fn write_snapshot(cfg: &PipelineConfig, out: &Path) -> Result<()> {
    let snap = PipelineConfig {
        out: out.to_path_buf(),
        ..cfg.clone()
    };
    crate::io::write_bytes(&out.join(SNAPSHOT_FILE), snap.to_doc().to_text().as_bytes())
}

/// Evaluates arbitrary cloud files. Every point's sensor origin is taken to
/// be the nearest trajectory position.
pub fn cmd_eval(recon: &Path, reference: &Path, trajectory: &Path, cfg: &EvalConfig) -> Result<MetricsReport> {
    stage("evaluate", || {
        let traj: Vec<Vec3> = read_trajectory(trajectory)?.iter().map(|p| p.translation).collect();
        let recon = ObservedCloud::with_nearest_origin(read_ply(recon)?, &traj)?;
        let reference = ObservedCloud::with_nearest_origin(read_ply(reference)?, &traj)?;
        Ok(evaluate_clouds(&recon, &reference, cfg)?.report)
    })
}
