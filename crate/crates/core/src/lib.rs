//! Lidar-visual reconstruction in an explicit voxel radiance field, with
//! per-modality epistemic uncertainty from a Laplace-approximated
//! perturbation field, covisibility submapping and a reconstruction
//! evaluation suite.

pub mod config;
pub mod error;
pub mod eval;
pub mod field;
pub mod fixtures;
pub mod geom;
pub mod io;
pub mod par;
pub mod pipeline;
pub mod scene;
pub mod submap;
pub mod train;
pub mod uncertainty;

pub use error::{Error, Result};
