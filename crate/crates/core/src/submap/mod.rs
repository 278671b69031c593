//! Trajectory partitioning into submaps (covisibility Normalized Cuts and a
//! k-means distance baseline) and merging of uncertainty-filtered clouds.

mod ncut;

pub use ncut::{bipartition, ncut_value, normalized_cuts};

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{CloudPoint, PointCloud, Vec3};
use crate::io::{read_csv, write_csv};
use crate::scene::LandmarkTracks;

/// Symmetric image-covisibility weights (dense, row-major, zero diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct CovisibilityGraph {
    pub n: usize,
    pub weights: Vec<f64>,
}

impl CovisibilityGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            weights: vec![0.0; n * n],
        }
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: f64) {
        assert!(i != j && w >= 0.0);
        self.weights[i * self.n + j] = w;
        self.weights[j * self.n + i] = w;
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.weights[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Non-zero edges `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                let w = self.weight(i, j);
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }
}

/// `W_ij` = number of landmarks seen by both images.
pub fn build_covisibility(tracks: &LandmarkTracks) -> CovisibilityGraph {
    let n = tracks.n_images();
    let mut g = CovisibilityGraph::new(n);
    for i in 0..n {
        for j in i + 1..n {
            let c = tracks.visibility[i]
                .iter()
                .zip(&tracks.visibility[j])
                .filter(|(a, b)| **a && **b)
                .count();
            if c > 0 {
                g.set(i, j, c as f64);
            }
        }
    }
    g
}

/// Cluster label per node, in `[0, k)`, numbered by first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub labels: Vec<usize>,
}

impl Partition {
    /// Relabels clusters in order of first appearance.
    pub fn canonical(labels: &[usize]) -> Self {
        let mut map = HashMap::new();
        let labels = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    pub fn k(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == cluster).collect()
    }
}

/// Normalized Cuts on the nodes with non-zero covisibility; isolated nodes
/// then join the cluster of their spatially nearest connected node.
pub fn partition_covisibility(graph: &CovisibilityGraph, positions: &[Vec3], k: usize) -> Result<Partition> {
    if positions.len() != graph.n {
        return Err(Error::LengthMismatch {
            left: graph.n,
            right: positions.len(),
        });
    }
    let connected: Vec<usize> = (0..graph.n).filter(|&i| graph.degree(i) > 0.0).collect();
    if connected.is_empty() {
        return if k == 1 && graph.n > 0 {
            Ok(Partition { labels: vec![0; graph.n] })
        } else {
            Err(Error::KTooLarge { k, n: 0 })
        };
    }
    let mut sub = CovisibilityGraph::new(connected.len());
    for (a, &i) in connected.iter().enumerate() {
        for (b, &j) in connected.iter().enumerate() {
            sub.weights[a * sub.n + b] = graph.weight(i, j);
        }
    }
    let part = normalized_cuts(&sub, k)?;
    let mut labels = vec![usize::MAX; graph.n];
    for (a, &i) in connected.iter().enumerate() {
        labels[i] = part.labels[a];
    }
    for i in 0..graph.n {
        if labels[i] == usize::MAX {
            let nearest = connected
                .iter()
                .min_by(|&&a, &&b| {
                    let da = (positions[a] - positions[i]).norm_squared();
                    let db = (positions[b] - positions[i]).norm_squared();
                    da.total_cmp(&db)
                })
                .unwrap();
            labels[i] = labels[*nearest];
        }
    }
    Ok(Partition::canonical(&labels))
}

/// k-means on camera positions with k-means++ seeding from `seed`, at most
/// 100 Lloyd iterations.
pub fn distance_clustering(positions: &[Vec3], k: usize, seed: u64) -> Result<Partition> {
    let n = positions.len();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be ≥ 1".into()));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres = vec![positions[rng.random_range(0..n)]];
    while centres.len() < k {
        let d2: Vec<f64> = positions
            .iter()
            .map(|p| centres.iter().map(|c| (p - c).norm_squared()).fold(f64::INFINITY, f64::min))
            .collect();
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut r = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, d) in d2.iter().enumerate() {
                if r < *d {
                    idx = i;
                    break;
                }
                r -= d;
            }
            idx
        } else {
            // Coincident points: take the first not yet used as a centre.
            (0..n).find(|i| !centres.contains(&positions[*i])).unwrap_or(centres.len())
        };
        centres.push(positions[pick]);
    }
    let nearest = |p: &Vec3, centres: &[Vec3]| {
        (0..centres.len())
            .min_by(|&a, &b| (p - centres[a]).norm_squared().total_cmp(&(p - centres[b]).norm_squared()))
            .unwrap()
    };
    let mut labels: Vec<usize> = positions.iter().map(|p| nearest(p, &centres)).collect();
    for _ in 0..100 {
        let mut sums = vec![Vec3::zeros(); k];
        let mut counts = vec![0usize; k];
        for (p, &l) in positions.iter().zip(&labels) {
            sums[l] += p;
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centres[c] = sums[c] / counts[c] as f64;
            } else {
                // Re-seed an empty cluster at the point farthest from its centre.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = (positions[a] - centres[labels[a]]).norm_squared();
                        let db = (positions[b] - centres[labels[b]]).norm_squared();
                        da.total_cmp(&db).then(b.cmp(&a))
                    })
                    .unwrap();
                centres[c] = positions[far];
                labels[far] = c;
            }
        }
        let next: Vec<usize> = positions.iter().map(|p| nearest(p, &centres)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    Ok(Partition::canonical(&labels))
}

/// Concatenates clouds and keeps, per voxel of side `voxel`, the point with
/// the lowest `min(u_colour, u_depth)` (first seen on ties).
pub fn merge_submaps(clouds: &[PointCloud], voxel: f64) -> Result<PointCloud> {
    if !(voxel > 0.0) {
        return Err(Error::InvalidArgument("merge voxel size must be > 0".into()));
    }
    let mut slot: HashMap<[i64; 3], usize> = HashMap::new();
    let mut out: Vec<CloudPoint> = Vec::new();
    for p in clouds.iter().flat_map(|c| c.points.iter()) {
        let key = [0, 1, 2].map(|k| (p.position[k] / voxel).floor() as i64);
        match slot.get(&key) {
            Some(&i) => {
                if p.min_uncertainty() < out[i].min_uncertainty() {
                    out[i] = *p;
                }
            }
            None => {
                slot.insert(key, out.len());
                out.push(*p);
            }
        }
    }
    Ok(PointCloud::new(out))
}

pub fn write_partition_csv(path: &Path, part: &Partition) -> Result<()> {
    let rows: Vec<Vec<String>> = part
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| vec![i.to_string(), l.to_string()])
        .collect();
    write_csv(path, &["image_index", "cluster_id"], &rows)
}

pub fn read_partition_csv(path: &Path) -> Result<Partition> {
    let (_, rows) = read_csv(path)?;
    let mut labels = vec![usize::MAX; rows.len()];
    for (line, row) in rows.iter().enumerate() {
        let bad = || Error::parse(line + 2, "expected `image_index,cluster_id`");
        if row.len() != 2 {
            return Err(bad());
        }
        let i: usize = row[0].parse().map_err(|_| bad())?;
        let l: usize = row[1].parse().map_err(|_| bad())?;
        *labels.get_mut(i).ok_or_else(bad)? = l;
    }
    if labels.contains(&usize::MAX) {
        return Err(Error::parse(0, "partition file does not list every image"));
    }
    Ok(Partition { labels })
}

pub fn write_graph_csv(path: &Path, g: &CovisibilityGraph) -> Result<()> {
    let rows: Vec<Vec<String>> = g
        .edges()
        .into_iter()
        .map(|(i, j, w)| vec![i.to_string(), j.to_string(), w.to_string()])
        .collect();
    write_csv(path, &["i", "j", "weight"], &rows)
}

/// Reads an edge list for a graph with `n` nodes.
pub fn read_graph_csv(path: &Path, n: usize) -> Result<CovisibilityGraph> {
    let (_, rows) = read_csv(path)?;
    let mut g = CovisibilityGraph::new(n);
    for (line, row) in rows.iter().enumerate() {
        let bad = || Error::parse(line + 2, "expected `i,j,weight`");
        if row.len() != 3 {
            return Err(bad());
        }
        let i: usize = row[0].parse().map_err(|_| bad())?;
        let j: usize = row[1].parse().map_err(|_| bad())?;
        let w: f64 = row[2].parse().map_err(|_| bad())?;
        if i >= n || j >= n || i == j || !(w >= 0.0) {
            return Err(bad());
        }
        g.set(i, j, w);
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covisibility_counts() {
        let t = LandmarkTracks {
            landmarks: vec![Vec3::zeros(); 4],
            visibility: vec![
                vec![true, true, false, true],
                vec![true, true, false, true],
                vec![false, false, true, false],
            ],
        };
        let g = build_covisibility(&t);
        assert_eq!(g.weight(0, 1), 3.0);
        assert_eq!(g.weight(0, 2), 0.0);
        assert_eq!(g.weight(2, 2), 0.0);
    }

    #[test]
    fn kmeans_examples() {
        let mut pts: Vec<Vec3> = (0..5).map(|i| Vec3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        pts.extend((0..5).map(|i| Vec3::new(100.0 + i as f64 * 0.1, 0.0, 0.0)));
        let p = distance_clustering(&pts, 2, 1).unwrap();
        assert_eq!(p.labels, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        let s = distance_clustering(&pts, 10, 2).unwrap();
        assert_eq!(s.labels, (0..10).collect::<Vec<_>>());
        assert!(matches!(distance_clustering(&pts, 11, 0), Err(Error::KTooLarge { k: 11, n: 10 })));
    }

    #[test]
    fn merge_prefers_lower_uncertainty() {
        let a = PointCloud::new(vec![
            CloudPoint::new(Vec3::new(0.01, 0.01, 0.01), [1.0, 0.0, 0.0]).with_uncertainty(0.5, 0.1),
            CloudPoint::new(Vec3::new(0.5, 0.5, 0.5), [1.0, 0.0, 0.0]).with_uncertainty(0.5, 0.5),
        ]);
        let b = PointCloud::new(vec![
            CloudPoint::new(Vec3::new(0.02, 0.02, 0.02), [0.0, 1.0, 0.0]).with_uncertainty(0.5, 0.3),
            CloudPoint::new(Vec3::new(2.0, 2.0, 2.0), [0.0, 1.0, 0.0]).with_uncertainty(0.5, 0.3),
        ]);
        let m = merge_submaps(&[a.clone(), b], 0.1).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.points[0].colour, [1.0, 0.0, 0.0]);
        assert_eq!(merge_submaps(&[a.clone(), a.clone()], 0.1).unwrap().len(), a.len());
    }

    #[test]
    fn isolated_nodes_join_nearest_cluster() {
        let mut g = CovisibilityGraph::new(5);
        g.set(0, 1, 5.0);
        g.set(2, 3, 5.0);
        g.set(1, 2, 0.1);
        let pos = [0.0, 1.0, 10.0, 11.0, 10.5].map(|x| Vec3::new(x, 0.0, 0.0));
        let p = partition_covisibility(&g, &pos, 2).unwrap();
        assert_eq!(p.labels, vec![0, 0, 1, 1, 1]);
    }

    #[test]
    fn csv_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = Partition { labels: vec![0, 1, 1, 0] };
        write_partition_csv(&dir.path().join("p.csv"), &p).unwrap();
        assert_eq!(read_partition_csv(&dir.path().join("p.csv")).unwrap(), p);
        let mut g = CovisibilityGraph::new(4);
        g.set(0, 3, 2.0);
        g.set(1, 2, 7.0);
        write_graph_csv(&dir.path().join("g.csv"), &g).unwrap();
        assert_eq!(read_graph_csv(&dir.path().join("g.csv"), 4).unwrap(), g);
    }
}
