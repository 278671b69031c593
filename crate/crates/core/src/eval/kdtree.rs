use crate::geom::Vec3;

/// Exact nearest-neighbour index over a fixed point set.
pub struct KdTree {
    points: Vec<Vec3>,
    /// Permutation of point indices; each subtree is a contiguous range split
    /// at its median on `axis`.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

#[derive(Clone, Copy)]
struct Node {
    lo: usize,
    hi: usize,
    axis: usize,
    split: f64,
    left: Option<usize>,
    right: Option<usize>,
}

const LEAF: usize = 8;

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut t = Self {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            nodes: Vec::new(),
        };
        if !points.is_empty() {
            t.build(0, points.len());
        }
        t
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn build(&mut self, lo: usize, hi: usize) -> usize {
        let id = self.nodes.len();
        let mut min = Vec3::repeat(f64::INFINITY);
        let mut max = Vec3::repeat(f64::NEG_INFINITY);
        for &i in &self.order[lo..hi] {
            min = min.inf(&self.points[i]);
            max = max.sup(&self.points[i]);
        }
        let axis = (max - min).imax();
        self.nodes.push(Node {
            lo,
            hi,
            axis,
            split: 0.0,
            left: None,
            right: None,
        });
        if hi - lo > LEAF {
            let mid = (lo + hi) / 2;
            let pts = &self.points;
            self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| {
                pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b))
            });
            self.nodes[id].split = self.points[self.order[mid]][axis];
            let l = self.build(lo, mid);
            let r = self.build(mid, hi);
            self.nodes[id].left = Some(l);
            self.nodes[id].right = Some(r);
        }
        id
    }

    /// Index and distance of the nearest point (lowest index on ties).
    pub fn nearest(&self, q: &Vec3) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, &mut best);
        Some((best.0, best.1.sqrt()))
    }

    fn search(&self, id: usize, q: &Vec3, best: &mut (usize, f64)) {
        let n = self.nodes[id];
        match (n.left, n.right) {
            (Some(l), Some(r)) => {
                let d = q[n.axis] - n.split;
                let (near, far) = if d < 0.0 { (l, r) } else { (r, l) };
                self.search(near, q, best);
                if d * d <= best.1 {
                    self.search(far, q, best);
                }
            }
            _ => {
                for &i in &self.order[n.lo..n.hi] {
                    let d2 = (self.points[i] - q).norm_squared();
                    if d2 < best.1 || (d2 == best.1 && i < best.0) {
                        *best = (i, d2);
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn agrees_with_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Vec3> = (0..500)
            .map(|_| Vec3::new(rng.random(), rng.random::<f64>() * 3.0, rng.random::<f64>() * 0.1))
            .collect();
        let tree = KdTree::new(&pts);
        for _ in 0..300 {
            let q = Vec3::new(rng.random_range(-0.5..1.5), rng.random_range(-0.5..3.5), rng.random());
            let (i, d) = tree.nearest(&q).unwrap();
            let bd = pts.iter().map(|p| (p - q).norm()).fold(f64::INFINITY, f64::min);
            assert_eq!(d, bd);
            assert_eq!((pts[i] - q).norm(), bd);
        }
        assert!(KdTree::new(&[]).nearest(&Vec3::zeros()).is_none());
    }
}
