use std::path::Path;

use crate::error::{Error, Result};

/// Single- or three-channel float image, row-major from the top row.
#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

fn header_tokens(bytes: &[u8], n: usize) -> Result<(Vec<String>, usize)> {
    let mut toks = Vec::new();
    let mut i = 0;
    while toks.len() < n {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if i < bytes.len() && bytes[i] == b'#' {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return Err(Error::parse(0, "truncated image header"));
        }
        toks.push(String::from_utf8_lossy(&bytes[start..i]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    Ok((toks, i + 1))
}

fn dim(tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| Error::parse(0, format!("bad image dimension `{tok}`")))
}

/// Binary PPM (P6, 8-bit). Values are clamped to `[0,1]` and rounded.
pub fn write_ppm(path: &Path, width: usize, height: usize, rgb: &[[f64; 3]]) -> Result<()> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend(
        rgb.iter()
            .flat_map(|c| c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)),
    );
    super::write_bytes(path, &out)
}

pub fn read_ppm(path: &Path) -> Result<(usize, usize, Vec<[f64; 3]>)> {
    let bytes = super::read_bytes(path)?;
    let (toks, start) = header_tokens(&bytes, 4)?;
    if toks[0] != "P6" || toks[3] != "255" {
        return Err(Error::parse(1, "expected 8-bit P6 image"));
    }
    let (w, h) = (dim(&toks[1])?, dim(&toks[2])?);
    let raster = bytes
        .get(start..start + 3 * w * h)
        .ok_or_else(|| Error::parse(0, "truncated PPM raster"))?;
    let px = raster
        .chunks_exact(3)
        .map(|c| [c[0] as f64 / 255.0, c[1] as f64 / 255.0, c[2] as f64 / 255.0])
        .collect();
    Ok((w, h, px))
}

/// Binary PGM (P5) mask, 0 or 255.
pub fn write_pgm_mask(path: &Path, width: usize, height: usize, mask: &[bool]) -> Result<()> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(mask.iter().map(|&m| if m { 255u8 } else { 0 }));
    super::write_bytes(path, &out)
}

pub fn read_pgm_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let bytes = super::read_bytes(path)?;
    let (toks, start) = header_tokens(&bytes, 4)?;
    if toks[0] != "P5" {
        return Err(Error::parse(1, "expected P5 image"));
    }
    let (w, h) = (dim(&toks[1])?, dim(&toks[2])?);
    let raster = bytes
        .get(start..start + w * h)
        .ok_or_else(|| Error::parse(0, "truncated PGM raster"))?;
    Ok((w, h, raster.iter().map(|&b| b >= 128).collect()))
}

/// PFM with a negative scale (little-endian). Rows are stored bottom to top.
pub fn write_pfm(path: &Path, img: &PfmImage) -> Result<()> {
    let magic = match img.channels {
        1 => "Pf",
        3 => "PF",
        c => return Err(Error::InvalidArgument(format!("PFM needs 1 or 3 channels, got {c}"))),
    };
    let mut out = format!("{magic}\n{} {}\n-1.0\n", img.width, img.height).into_bytes();
    let row_len = img.width * img.channels;
    for row in (0..img.height).rev() {
        for v in &img.data[row * row_len..(row + 1) * row_len] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    super::write_bytes(path, &out)
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    let bytes = super::read_bytes(path)?;
    let (toks, start) = header_tokens(&bytes, 4)?;
    let channels = match toks[0].as_str() {
        "Pf" => 1,
        "PF" => 3,
        m => return Err(Error::parse(1, format!("bad PFM magic `{m}`"))),
    };
    let (w, h) = (dim(&toks[1])?, dim(&toks[2])?);
    let scale: f64 = toks[3]
        .parse()
        .map_err(|_| Error::parse(3, "bad PFM scale"))?;
    let little = scale < 0.0;
    let row_len = w * channels;
    let raster = bytes
        .get(start..start + 4 * row_len * h)
        .ok_or_else(|| Error::parse(0, "truncated PFM raster"))?;
    let mut data = vec![0f32; row_len * h];
    for (k, c) in raster.chunks_exact(4).enumerate() {
        let b = [c[0], c[1], c[2], c[3]];
        let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let file_row = k / row_len;
        let col = k % row_len;
        data[(h - 1 - file_row) * row_len + col] = v;
    }
    Ok(PfmImage {
        width: w,
        height: h,
        channels,
        data,
    })
}
