use crate::geom::{Aabb, Vec3};

/// Regular vertex lattice over an axis-aligned box, indexed x-fastest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub bounds: Aabb,
    pub resolution: [usize; 3],
}

/// Trilinear interpolation weights of the 8 vertices around a point, and
/// their spatial gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub index: [usize; 8],
    pub weight: [f64; 8],
    pub grad: [Vec3; 8],
}

impl Stencil {
    #[inline]
    pub fn interpolate(&self, values: &[f64]) -> f64 {
        (0..8).map(|c| self.weight[c] * values[self.index[c]]).sum()
    }

    #[inline]
    pub fn gradient(&self, values: &[f64]) -> Vec3 {
        (0..8).fold(Vec3::zeros(), |acc, c| acc + self.grad[c] * values[self.index[c]])
    }

    #[inline]
    pub fn interpolate3(&self, values: &[[f64; 3]]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for c in 0..8 {
            let v = &values[self.index[c]];
            for ch in 0..3 {
                out[ch] += self.weight[c] * v[ch];
            }
        }
        out
    }

    /// Spatial gradient of each interpolated channel.
    #[inline]
    pub fn gradient3(&self, values: &[[f64; 3]]) -> [Vec3; 3] {
        let mut out = [Vec3::zeros(); 3];
        for c in 0..8 {
            let v = &values[self.index[c]];
            for ch in 0..3 {
                out[ch] += self.grad[c] * v[ch];
            }
        }
        out
    }

    #[inline]
    pub fn interpolate_vec3(&self, values: &[Vec3]) -> Vec3 {
        (0..8).fold(Vec3::zeros(), |acc, c| acc + values[self.index[c]] * self.weight[c])
    }
}

impl Grid {
    /// # Panics
    /// If any axis has fewer than two vertices or the box is empty.
    pub fn new(bounds: Aabb, resolution: [usize; 3]) -> Self {
        assert!(resolution.iter().all(|&n| n >= 2), "grid needs ≥2 vertices per axis");
        assert!((0..3).all(|k| bounds.max[k] > bounds.min[k]), "empty grid bounds");
        Self { bounds, resolution }
    }

    pub fn vertex_count(&self) -> usize {
        self.resolution.iter().product()
    }

    pub fn spacing(&self) -> Vec3 {
        let e = self.bounds.extent();
        Vec3::new(
            e.x / (self.resolution[0] - 1) as f64,
            e.y / (self.resolution[1] - 1) as f64,
            e.z / (self.resolution[2] - 1) as f64,
        )
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.resolution[0] * (j + self.resolution[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let nx = self.resolution[0];
        let ny = self.resolution[1];
        [idx % nx, (idx / nx) % ny, idx / (nx * ny)]
    }

    pub fn vertex_position(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        let h = self.spacing();
        self.bounds.min + Vec3::new(c[0] as f64 * h.x, c[1] as f64 * h.y, c[2] as f64 * h.z)
    }

    /// Trilinear stencil at `p`, or `None` outside the bounds.
    pub fn stencil(&self, p: &Vec3) -> Option<Stencil> {
        if !self.bounds.contains(p) {
            return None;
        }
        let h = self.spacing();
        let mut base = [0usize; 3];
        let mut frac = [0.0; 3];
        for k in 0..3 {
            let f = (p[k] - self.bounds.min[k]) / h[k];
            let i = (f.floor().max(0.0) as usize).min(self.resolution[k] - 2);
            base[k] = i;
            frac[k] = f - i as f64;
        }
        let mut s = Stencil {
            index: [0; 8],
            weight: [0.0; 8],
            grad: [Vec3::zeros(); 8],
        };
        for c in 0..8 {
            let bit = [c & 1, (c >> 1) & 1, (c >> 2) & 1];
            let f: [f64; 3] = std::array::from_fn(|k| if bit[k] == 1 { frac[k] } else { 1.0 - frac[k] });
            let df: [f64; 3] = std::array::from_fn(|k| if bit[k] == 1 { 1.0 / h[k] } else { -1.0 / h[k] });
            s.index[c] = self.index(base[0] + bit[0], base[1] + bit[1], base[2] + bit[2]);
            s.weight[c] = f[0] * f[1] * f[2];
            s.grad[c] = Vec3::new(df[0] * f[1] * f[2], f[0] * df[1] * f[2], f[0] * f[1] * df[2]);
        }
        Some(s)
    }
}
