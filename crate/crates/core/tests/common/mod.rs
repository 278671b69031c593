//! Independent oracles shared by integration tests.
#![allow(dead_code)]

use lvmap::geom::{PointCloud, Vec3};

/// O(n·m) nearest-neighbour distances.
pub fn brute_nn(from: &[Vec3], to: &[Vec3]) -> Vec<f64> {
    from.iter()
        .map(|p| to.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
        .collect()
}

pub fn brute_metrics(recon: &PointCloud, reference: &PointCloud, tau: f64) -> (f64, f64, f64, f64, f64) {
    let r = recon.positions();
    let g = reference.positions();
    let d_rg = brute_nn(&r, &g);
    let d_gr = brute_nn(&g, &r);
    let acc = d_rg.iter().sum::<f64>() / d_rg.len() as f64;
    let comp = d_gr.iter().sum::<f64>() / d_gr.len() as f64;
    let p = d_rg.iter().filter(|d| **d <= tau).count() as f64 / d_rg.len() as f64;
    let rc = d_gr.iter().filter(|d| **d <= tau).count() as f64 / d_gr.len() as f64;
    let f = if p + rc > 0.0 { 2.0 * p * rc / (p + rc) } else { 0.0 };
    (acc, comp, p, rc, f)
}

/// SSIM of one plane evaluated window by window with explicit 2-D weights.
pub fn direct_ssim(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let win = 11usize;
    let (wx, wy) = (win.min(w), win.min(h));
    let weight = |i: usize, j: usize| {
        let cx = (wx as f64 - 1.0) / 2.0;
        let cy = (wy as f64 - 1.0) / 2.0;
        (-((i as f64 - cx).powi(2) + (j as f64 - cy).powi(2)) / (2.0 * 1.5 * 1.5)).exp()
    };
    let mut norm = 0.0;
    for j in 0..wy {
        for i in 0..wx {
            norm += weight(i, j);
        }
    }
    let (c1, c2) = (0.01f64.powi(2), 0.03f64.powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - wy {
        for x0 in 0..=w - wx {
            let (mut ma, mut mb) = (0.0, 0.0);
            for j in 0..wy {
                for i in 0..wx {
                    let g = weight(i, j) / norm;
                    ma += g * a[(y0 + j) * w + x0 + i];
                    mb += g * b[(y0 + j) * w + x0 + i];
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for j in 0..wy {
                for i in 0..wx {
                    let g = weight(i, j) / norm;
                    let da = a[(y0 + j) * w + x0 + i] - ma;
                    let db = b[(y0 + j) * w + x0 + i] - mb;
                    va += g * da * da;
                    vb += g * db * db;
                    cov += g * da * db;
                }
            }
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}
