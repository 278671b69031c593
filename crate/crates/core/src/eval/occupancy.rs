use std::collections::HashMap;

use crate::geom::{PointCloud, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoxelState {
    Free,
    Occupied,
    Unknown,
}

/// Sparse voxel map over world-aligned voxels `[i·s, (i+1)·s)` per axis.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    pub voxel: f64,
    pub origin: Vec3,
    cells: HashMap<[i64; 3], VoxelState>,
}

impl OccupancyGrid {
    pub fn new(voxel: f64) -> Self {
        assert!(voxel > 0.0, "voxel size must be positive");
        Self {
            voxel,
            origin: Vec3::zeros(),
            cells: HashMap::new(),
        }
    }

    pub fn key(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|k| ((p[k] - self.origin[k]) / self.voxel).floor() as i64)
    }

    pub fn state(&self, p: &Vec3) -> VoxelState {
        self.state_of(self.key(p))
    }

    pub fn state_of(&self, key: [i64; 3]) -> VoxelState {
        self.cells.get(&key).copied().unwrap_or(VoxelState::Unknown)
    }

    pub fn count(&self, s: VoxelState) -> usize {
        self.cells.values().filter(|v| **v == s).count()
    }

    fn mark_free(&mut self, key: [i64; 3]) {
        self.cells.entry(key).or_insert(VoxelState::Free);
    }

    /// Voxels crossed by the segment `a → b`, in traversal order, ending with
    /// the voxel containing `b` (Amanatides–Woo).
    pub fn traverse(&self, a: &Vec3, b: &Vec3) -> Vec<[i64; 3]> {
        let mut key = self.key(a);
        let end = self.key(b);
        let d = b - a;
        let len = d.norm();
        let mut out = vec![key];
        if len == 0.0 {
            return out;
        }
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for k in 0..3 {
            if d[k] > 0.0 {
                step[k] = 1;
                let boundary = self.origin[k] + (key[k] + 1) as f64 * self.voxel;
                t_max[k] = (boundary - a[k]) / d[k];
                t_delta[k] = self.voxel / d[k];
            } else if d[k] < 0.0 {
                step[k] = -1;
                let boundary = self.origin[k] + key[k] as f64 * self.voxel;
                t_max[k] = (boundary - a[k]) / d[k];
                t_delta[k] = -self.voxel / d[k];
            }
        }
        // Bounded by the Manhattan voxel distance so rounding cannot loop.
        let limit: i64 = (0..3).map(|k| (end[k] - key[k]).abs()).sum();
        for _ in 0..limit {
            if key == end {
                break;
            }
            let k = if t_max[0] <= t_max[1] && t_max[0] <= t_max[2] {
                0
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            if t_max[k] > 1.0 {
                break;
            }
            key[k] += step[k];
            t_max[k] += t_delta[k];
            out.push(key);
        }
        if *out.last().unwrap() != end {
            out.push(end);
        }
        out
    }
}

/// Carves free space along every `origin → point` segment, then marks the
/// voxels containing points occupied.
pub fn build_occupancy(points: &[Vec3], origins: &[Vec3], voxel: f64) -> OccupancyGrid {
    assert_eq!(points.len(), origins.len(), "one sensor origin per point");
    let mut g = OccupancyGrid::new(voxel);
    for (p, o) in points.iter().zip(origins) {
        let path = g.traverse(o, p);
        for key in &path[..path.len() - 1] {
            g.mark_free(*key);
        }
    }
    for p in points {
        let k = g.key(p);
        g.cells.insert(k, VoxelState::Occupied);
    }
    g
}

/// Drops points lying in unknown space.
pub fn occupancy_filter(cloud: &PointCloud, grid: &OccupancyGrid) -> PointCloud {
    cloud
        .points
        .iter()
        .filter(|p| grid.state(&p.position) != VoxelState::Unknown)
        .copied()
        .collect()
}
