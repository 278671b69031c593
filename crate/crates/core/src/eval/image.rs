use crate::error::{Error, Result};

/// PSNR cap used when the images (nearly) coincide.
pub const PSNR_CAP: f64 = 100.0;

const SSIM_WINDOW: usize = 11;
const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn same_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!("{a} vs {b} values")))
    }
}

/// `10·log10(1/MSE)` over all channels of images with values in `[0, 1]`.
pub fn psnr(a: &[[f64; 3]], b: &[[f64; 3]]) -> Result<f64> {
    same_dims(a.len(), b.len())?;
    if a.is_empty() {
        return Err(Error::DimensionMismatch("empty image".into()));
    }
    let mse = a
        .iter()
        .zip(b)
        .map(|(x, y)| (0..3).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>())
        .sum::<f64>()
        / (3 * a.len()) as f64;
    Ok(if mse < 1e-10 { PSNR_CAP } else { (10.0 * (1.0 / mse).log10()).min(PSNR_CAP) })
}

/// Normalised 1-D Gaussian taps of length `n`.
fn gaussian(n: usize) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..n).map(|i| (-(i as f64 - c).powi(2) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Valid-mode separable filtering of a `w × h` plane.
fn filter(plane: &[f64], w: usize, h: usize, gx: &[f64], gy: &[f64]) -> (Vec<f64>, usize, usize) {
    let ow = w + 1 - gx.len();
    let oh = h + 1 - gy.len();
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        for x in 0..ow {
            tmp[y * ow + x] = gx.iter().enumerate().map(|(i, g)| g * plane[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = gy.iter().enumerate().map(|(i, g)| g * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean SSIM of one channel, Gaussian window 11×11 (clipped to the image
/// size), valid positions only.
pub fn ssim_plane(a: &[f64], b: &[f64], width: usize, height: usize) -> Result<f64> {
    same_dims(a.len(), b.len())?;
    if a.len() != width * height || a.is_empty() {
        return Err(Error::DimensionMismatch(format!("{} values for {width}×{height}", a.len())));
    }
    let gx = gaussian(SSIM_WINDOW.min(width));
    let gy = gaussian(SSIM_WINDOW.min(height));
    let prod = |f: &dyn Fn(usize) -> f64| (0..a.len()).map(f).collect::<Vec<f64>>();
    let (mu_a, ow, oh) = filter(a, width, height, &gx, &gy);
    let (mu_b, ..) = filter(b, width, height, &gx, &gy);
    let (aa, ..) = filter(&prod(&|i| a[i] * a[i]), width, height, &gx, &gy);
    let (bb, ..) = filter(&prod(&|i| b[i] * b[i]), width, height, &gx, &gy);
    let (ab, ..) = filter(&prod(&|i| a[i] * b[i]), width, height, &gx, &gy);
    let n = ow * oh;
    let total: f64 = (0..n)
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Channel-averaged SSIM of two RGB images.
pub fn ssim(a: &[[f64; 3]], b: &[[f64; 3]], width: usize, height: usize) -> Result<f64> {
    same_dims(a.len(), b.len())?;
    let mut s = 0.0;
    for ch in 0..3 {
        let pa: Vec<f64> = a.iter().map(|p| p[ch]).collect();
        let pb: Vec<f64> = b.iter().map(|p| p[ch]).collect();
        s += ssim_plane(&pa, &pb, width, height)?;
    }
    Ok(s / 3.0)
}
