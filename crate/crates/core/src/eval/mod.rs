//! Reconstruction evaluation: occupancy-filtered geometric metrics, image
//! metrics, and uncertainty quality (sparsification, AUSE, error plots).

mod geometry;
mod image;
mod kdtree;
mod occupancy;
mod sparsify;

pub use geometry::{accuracy_completeness, nn_distances, precision_recall};
pub use image::{psnr, ssim, ssim_plane, PSNR_CAP};
pub use kdtree::KdTree;
pub use occupancy::{build_occupancy, occupancy_filter, OccupancyGrid, VoxelState};
pub use sparsify::{error_plot, sparsification, Sparsification};

use std::path::Path;

use crate::config::{ConfigDoc, Section};
use crate::error::{Error, Result};
use crate::geom::{Aabb, PointCloud, Vec3};
use crate::io::write_csv;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdScores {
    pub tau: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub completeness: f64,
    pub n_recon: usize,
    pub n_reference: usize,
    pub thresholds: Vec<ThresholdScores>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub ause_depth: Option<f64>,
    pub ause_colour: Option<f64>,
}

impl MetricsReport {
    /// Sections `[geometry]`, one `[threshold]` per τ, and optional
    /// `[image]` / `[uncertainty]`.
    pub fn to_doc(&self) -> ConfigDoc {
        let mut doc = ConfigDoc::default();
        let mut g = Section::new("geometry");
        g.set("accuracy", self.accuracy);
        g.set("completeness", self.completeness);
        g.set("n_recon", self.n_recon);
        g.set("n_reference", self.n_reference);
        doc.sections.push(g);
        for t in &self.thresholds {
            let mut s = Section::new("threshold");
            s.set("tau", t.tau);
            s.set("precision", t.precision);
            s.set("recall", t.recall);
            s.set("f_score", t.f_score);
            doc.sections.push(s);
        }
        if self.psnr.is_some() || self.ssim.is_some() {
            let mut s = Section::new("image");
            if let Some(v) = self.psnr {
                s.set("psnr", v);
            }
            if let Some(v) = self.ssim {
                s.set("ssim", v);
            }
            doc.sections.push(s);
        }
        if self.ause_depth.is_some() || self.ause_colour.is_some() {
            let mut s = Section::new("uncertainty");
            if let Some(v) = self.ause_depth {
                s.set("ause_depth", v);
            }
            if let Some(v) = self.ause_colour {
                s.set("ause_colour", v);
            }
            doc.sections.push(s);
        }
        doc
    }

    pub fn to_text(&self) -> String {
        self.to_doc().to_text()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc = ConfigDoc::parse(text)?;
        let g = doc
            .section("geometry")
            .ok_or_else(|| Error::config("geometry", "missing section"))?;
        let mut r = MetricsReport {
            accuracy: g.require("accuracy")?,
            completeness: g.require("completeness")?,
            n_recon: g.require("n_recon")?,
            n_reference: g.require("n_reference")?,
            ..Default::default()
        };
        for s in doc.sections.iter() {
            match s.name.as_str() {
                "threshold" => r.thresholds.push(ThresholdScores {
                    tau: s.require("tau")?,
                    precision: s.require("precision")?,
                    recall: s.require("recall")?,
                    f_score: s.require("f_score")?,
                }),
                "image" => {
                    r.psnr = s.parse_opt("psnr")?;
                    r.ssim = s.parse_opt("ssim")?;
                }
                "uncertainty" => {
                    r.ause_depth = s.parse_opt("ause_depth")?;
                    r.ause_colour = s.parse_opt("ause_colour")?;
                }
                _ => {}
            }
        }
        Ok(r)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        crate::io::write_bytes(path, self.to_text().as_bytes())
    }
}

/// `[eval]` settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    pub occupancy_voxel: f64,
    pub n_bins: usize,
    pub n_quantiles: usize,
    /// Regions removed from both clouds before any metric.
    pub exclusion: Vec<Aabb>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            thresholds: vec![0.05, 0.10],
            occupancy_voxel: 0.05,
            n_bins: 20,
            n_quantiles: 10,
            exclusion: Vec::new(),
        }
    }
}

impl EvalConfig {
    /// `exclude` lists boxes as `minx miny minz maxx maxy maxz`, separated by `;`.
    pub fn from_section(s: &Section) -> Result<Self> {
        let d = Self::default();
        let thresholds = s.floats("thresholds")?.unwrap_or(d.thresholds);
        if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0)) {
            return Err(s.error("thresholds", "expected positive distances"));
        }
        let occupancy_voxel = s.parse_or("occupancy_voxel", d.occupancy_voxel)?;
        if !(occupancy_voxel > 0.0) {
            return Err(s.error("occupancy_voxel", "must be > 0"));
        }
        let n_bins = s.parse_or("n_bins", d.n_bins)?;
        let n_quantiles = s.parse_or("n_quantiles", d.n_quantiles)?;
        if n_bins == 0 || n_quantiles == 0 {
            return Err(s.error("n_bins", "bin counts must be ≥ 1"));
        }
        let mut exclusion = Vec::new();
        if let Some(v) = s.get("exclude") {
            for part in v.split(';').filter(|p| !p.trim().is_empty()) {
                let nums: Vec<f64> = part
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| s.error("exclude", format!("bad box `{}`", part.trim())))?;
                if nums.len() != 6 {
                    return Err(s.error("exclude", "each box needs 6 numbers"));
                }
                exclusion.push(Aabb::new(
                    Vec3::new(nums[0], nums[1], nums[2]),
                    Vec3::new(nums[3], nums[4], nums[5]),
                ));
            }
        }
        Ok(Self {
            thresholds,
            occupancy_voxel,
            n_bins,
            n_quantiles,
            exclusion,
        })
    }

    pub fn write_section(&self, s: &mut Section) {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        s.set("thresholds", join(&self.thresholds));
        s.set("occupancy_voxel", self.occupancy_voxel);
        s.set("n_bins", self.n_bins);
        s.set("n_quantiles", self.n_quantiles);
        if !self.exclusion.is_empty() {
            let boxes: Vec<String> = self
                .exclusion
                .iter()
                .map(|b| join(&[b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z]))
                .collect();
            s.set("exclude", boxes.join("; "));
        }
    }

    pub fn excluded(&self, p: &Vec3) -> bool {
        self.exclusion.iter().any(|b| b.contains(p))
    }
}

/// Cloud with the sensor origin each point was observed from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservedCloud {
    pub cloud: PointCloud,
    pub origins: Vec<Vec3>,
}

impl ObservedCloud {
    pub fn new(cloud: PointCloud, origins: Vec<Vec3>) -> Result<Self> {
        if cloud.len() != origins.len() {
            return Err(Error::LengthMismatch {
                left: cloud.len(),
                right: origins.len(),
            });
        }
        Ok(Self { cloud, origins })
    }

    /// Pairs every point with the nearest of `trajectory` as its origin.
    pub fn with_nearest_origin(cloud: PointCloud, trajectory: &[Vec3]) -> Result<Self> {
        if trajectory.is_empty() {
            return Err(Error::InvalidArgument("empty trajectory".into()));
        }
        let tree = KdTree::new(trajectory);
        let origins = cloud
            .points
            .iter()
            .map(|p| trajectory[tree.nearest(&p.position).unwrap().0])
            .collect();
        Ok(Self { cloud, origins })
    }

    fn without(&self, cfg: &EvalConfig) -> Self {
        let keep: Vec<usize> = (0..self.cloud.len())
            .filter(|&i| !cfg.excluded(&self.cloud.points[i].position))
            .collect();
        Self {
            cloud: keep.iter().map(|&i| self.cloud.points[i]).collect(),
            origins: keep.iter().map(|&i| self.origins[i]).collect(),
        }
    }
}

/// Evaluated, mutually occupancy-filtered clouds and their metrics.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub report: MetricsReport,
    pub recon: PointCloud,
    pub reference: PointCloud,
    /// NN distance of each retained recon point to the retained reference.
    pub recon_errors: Vec<f64>,
}

/// Exclusion boxes, then each cloud filtered by the other's occupancy map,
/// then accuracy/completeness and P/R/F per threshold.
pub fn evaluate_clouds(recon: &ObservedCloud, reference: &ObservedCloud, cfg: &EvalConfig) -> Result<Evaluation> {
    let recon = recon.without(cfg);
    let reference = reference.without(cfg);
    let occ_ref = build_occupancy(&reference.cloud.positions(), &reference.origins, cfg.occupancy_voxel);
    let occ_rec = build_occupancy(&recon.cloud.positions(), &recon.origins, cfg.occupancy_voxel);
    let rf = occupancy_filter(&recon.cloud, &occ_ref);
    let gf = occupancy_filter(&reference.cloud, &occ_rec);
    if rf.is_empty() {
        return Err(Error::EmptyCloud("reconstruction after occupancy filtering".into()));
    }
    if gf.is_empty() {
        return Err(Error::EmptyCloud("reference after occupancy filtering".into()));
    }
    let (rp, gp) = (rf.positions(), gf.positions());
    let d_rg = nn_distances(&rp, &gp);
    let d_gr = nn_distances(&gp, &rp);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let thresholds = cfg
        .thresholds
        .iter()
        .map(|&tau| {
            let (precision, recall, f_score) = geometry::prf_from_distances(&d_rg, &d_gr, tau);
            ThresholdScores {
                tau,
                precision,
                recall,
                f_score,
            }
        })
        .collect();
    Ok(Evaluation {
        report: MetricsReport {
            accuracy: mean(&d_rg),
            completeness: mean(&d_gr),
            n_recon: rf.len(),
            n_reference: gf.len(),
            thresholds,
            ..Default::default()
        },
        recon: rf,
        reference: gf,
        recon_errors: d_rg,
    })
}

pub fn write_sparsification_csv(path: &Path, s: &Sparsification) -> Result<()> {
    let rows: Vec<Vec<String>> = (0..s.curve.len())
        .map(|i| vec![s.fractions[i].to_string(), s.curve[i].to_string(), s.oracle[i].to_string()])
        .collect();
    write_csv(path, &["fraction", "curve", "oracle"], &rows)
}

pub fn write_error_plot_csv(path: &Path, plot: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<Vec<String>> = plot.iter().map(|(q, e)| vec![q.to_string(), e.to_string()]).collect();
    write_csv(path, &["quantile", "mean_error"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips() {
        let r = MetricsReport {
            accuracy: 0.125,
            completeness: 0.5,
            n_recon: 10,
            n_reference: 12,
            thresholds: vec![ThresholdScores {
                tau: 0.05,
                precision: 0.5,
                recall: 1.0,
                f_score: 2.0 / 3.0,
            }],
            psnr: Some(31.5),
            ssim: None,
            ause_depth: Some(0.01),
            ause_colour: Some(0.2),
        };
        assert_eq!(MetricsReport::from_text(&r.to_text()).unwrap(), r);
    }

    #[test]
    fn eval_config_parses_boxes() {
        let mut s = Section::new("eval");
        s.set("exclude", "0 0 0 1 1 1; -1 -1 -1 0 0 0");
        s.set("thresholds", "0.02 0.2");
        let c = EvalConfig::from_section(&s).unwrap();
        assert_eq!(c.exclusion.len(), 2);
        assert_eq!(c.thresholds, vec![0.02, 0.2]);
        let mut back = Section::new("eval");
        c.write_section(&mut back);
        assert_eq!(EvalConfig::from_section(&back).unwrap(), c);
        s.set("exclude", "0 0 0 1 1");
        assert!(EvalConfig::from_section(&s).is_err());
    }
}
