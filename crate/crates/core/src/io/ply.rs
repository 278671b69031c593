use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{cloud::sanitize_variance, CloudPoint, PointCloud, Vec3};

const HEADER: &str = "ply\nformat ascii 1.0\nelement vertex {n}\nproperty float x\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\nproperty uchar blue\nproperty float u_colour\nproperty float u_depth\nend_header\n";

/// Serialises a cloud as ASCII PLY. Positions and variances are stored as
/// `float`, colours as `uchar`, so `write(read(write(c))) == write(c)` byte for byte.
pub fn write_ply_string(cloud: &PointCloud) -> String {
    let mut out = HEADER.replace("{n}", &cloud.len().to_string());
    for p in &cloud.points {
        let [r, g, b] = p.colour.map(to_u8);
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            p.position.x as f32,
            p.position.y as f32,
            p.position.z as f32,
            r,
            g,
            b,
            p.u_colour as f32,
            p.u_depth as f32
        );
    }
    out
}

pub fn write_ply(cloud: &PointCloud, path: &Path) -> Result<()> {
    super::write_bytes(path, write_ply_string(cloud).as_bytes())
}

pub fn read_ply(path: &Path) -> Result<PointCloud> {
    parse_ply(&super::read_to_string(path)?)
}

fn to_u8(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

struct Element {
    name: String,
    count: usize,
    props: Vec<String>,
}

/// Parses an ASCII PLY file. Only the `vertex` element is interpreted;
/// other elements and unknown vertex properties are skipped.
pub fn parse_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(1, "missing `ply` magic")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut header_done = false;
    for (i, raw) in lines.by_ref() {
        let line_no = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["format", fmt, ..] => {
                if *fmt != "ascii" {
                    return Err(Error::parse(line_no, format!("unsupported format `{fmt}`")));
                }
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| Error::parse(line_no, "bad element count"))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", _, _, name] | ["property", _, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(line_no, "property before element"))?;
                el.props.push(name.to_string());
            }
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(Error::parse(line_no, format!("unexpected header line `{raw}`"))),
        }
    }
    if !header_done {
        return Err(Error::parse(0, "missing end_header"));
    }

    let mut cloud = PointCloud::default();
    for el in &elements {
        if el.name != "vertex" {
            for _ in 0..el.count {
                lines
                    .next()
                    .ok_or_else(|| Error::parse(0, format!("truncated `{}` data", el.name)))?;
            }
            continue;
        }
        let find = |n: &str| el.props.iter().position(|p| p == n);
        let ix = find("x").ok_or_else(|| Error::MissingRequiredProperty("x".into()))?;
        let iy = find("y").ok_or_else(|| Error::MissingRequiredProperty("y".into()))?;
        let iz = find("z").ok_or_else(|| Error::MissingRequiredProperty("z".into()))?;
        let rgb = match (find("red"), find("green"), find("blue")) {
            (Some(r), Some(g), Some(b)) => Some([r, g, b]),
            _ => None,
        };
        let iuc = find("u_colour");
        let iud = find("u_depth");
        cloud.points.reserve(el.count);
        for _ in 0..el.count {
            let (i, raw) = lines
                .next()
                .ok_or_else(|| Error::parse(0, "truncated vertex data"))?;
            let line_no = i + 1;
            let vals: Vec<&str> = raw.split_whitespace().collect();
            if vals.len() < el.props.len() {
                return Err(Error::parse(line_no, "too few vertex values"));
            }
            let num = |k: usize| -> Result<f64> {
                vals[k]
                    .parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("bad number `{}`", vals[k])))
            };
            let position = Vec3::new(num(ix)?, num(iy)?, num(iz)?);
            let colour = match rgb {
                Some(idx) => {
                    let mut c = [0.0; 3];
                    for (ch, &k) in c.iter_mut().zip(&idx) {
                        *ch = num(k)? / 255.0;
                    }
                    c
                }
                None => [0.5; 3],
            };
            let mut p = CloudPoint::new(position, colour);
            if let Some(k) = iuc {
                p.u_colour = sanitize_variance(num(k)?);
            }
            if let Some(k) = iud {
                p.u_depth = sanitize_variance(num(k)?);
            }
            cloud.points.push(p);
        }
    }
    Ok(cloud)
}
