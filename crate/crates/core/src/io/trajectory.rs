use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion};

use crate::error::{Error, Result};
use crate::geom::{Pose, Vec3};

/// Parses TUM lines `timestamp tx ty tz qx qy qz qw`. Blank lines and `#`
/// comments are skipped.
pub fn parse_trajectory(text: &str) -> Result<Vec<Pose>> {
    let mut poses: Vec<Pose> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| Error::parse(line_no, format!("bad number `{tok}`")))
            })
            .collect::<Result<_>>()?;
        if vals.len() != 8 {
            return Err(Error::parse(line_no, format!("expected 8 fields, found {}", vals.len())));
        }
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(line_no, "non-finite value"));
        }
        let q = Quaternion::new(vals[7], vals[4], vals[5], vals[6]);
        if q.norm() < 1e-12 {
            return Err(Error::parse(line_no, "zero quaternion"));
        }
        let pose = Pose::new(
            UnitQuaternion::from_quaternion(q),
            Vec3::new(vals[1], vals[2], vals[3]),
            vals[0],
        );
        if let Some(prev) = poses.last() {
            if pose.timestamp <= prev.timestamp {
                return Err(Error::NonMonotonicTimestamps { line: line_no });
            }
        }
        poses.push(pose);
    }
    Ok(poses)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<Pose>> {
    parse_trajectory(&super::read_to_string(path)?)
}

/// Serialises poses in TUM format with shortest round-trip float formatting.
pub fn write_trajectory_string(poses: &[Pose]) -> String {
    let mut out = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for p in poses {
        let q = p.rotation.quaternion();
        let t = p.translation;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            p.timestamp, t.x, t.y, t.z, q.i, q.j, q.k, q.w
        );
    }
    out
}

pub fn write_trajectory(poses: &[Pose], path: &Path) -> Result<()> {
    super::write_bytes(path, write_trajectory_string(poses).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_origin_pose() {
        let poses = parse_trajectory("0.0 0 0 0 0 0 0 1").unwrap();
        assert_eq!(poses.len(), 1);
        assert_eq!(poses[0].translation, Vec3::zeros());
        assert!(poses[0].rotation.angle() == 0.0);
    }

    #[test]
    fn empty_and_comment_only() {
        assert!(parse_trajectory("").unwrap().is_empty());
        assert!(parse_trajectory("# nothing\n\n").unwrap().is_empty());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_trajectory("# h\n0 0 0 0 0 0 0 1\n1 0 0 0 0 0 x 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = parse_trajectory("1 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1\n").unwrap_err();
        assert!(matches!(err, Error::NonMonotonicTimestamps { line: 2 }));
        let err = parse_trajectory("1 0 0 0 0 0 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn random_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut t = 0.0;
        let poses: Vec<Pose> = (0..100)
            .map(|_| {
                t += rng.random_range(0.01..1.0);
                let q = UnitQuaternion::from_euler_angles(
                    rng.random_range(-3.0..3.0),
                    rng.random_range(-1.5..1.5),
                    rng.random_range(-3.0..3.0),
                );
                let tr = Vec3::new(
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-50.0..50.0),
                    rng.random_range(-50.0..50.0),
                );
                Pose::new(q, tr, t)
            })
            .collect();
        let back = parse_trajectory(&write_trajectory_string(&poses)).unwrap();
        assert_eq!(back.len(), poses.len());
        let mut max_err: f64 = 0.0;
        for (a, b) in poses.iter().zip(&back) {
            max_err = max_err.max((a.timestamp - b.timestamp).abs());
            max_err = max_err.max((a.translation - b.translation).amax());
            max_err = max_err.max((a.rotation.coords - b.rotation.coords).amax());
        }
        assert!(max_err < 1e-8, "max component error {max_err}");
    }
}
