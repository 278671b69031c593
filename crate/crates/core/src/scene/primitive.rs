use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::{Ray, Vec3};

const T_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Albedo {
    /// Textureless surface.
    Uniform([f64; 3]),
    /// Two-colour checkerboard in surface coordinates with square side `period` metres.
    Checker { a: [f64; 3], b: [f64; 3], period: f64 },
}

impl Albedo {
    pub fn is_textured(&self) -> bool {
        matches!(self, Albedo::Checker { .. })
    }

    fn at(&self, uv: (f64, f64)) -> [f64; 3] {
        match *self {
            Albedo::Uniform(c) => c,
            Albedo::Checker { a, b, period } => {
                let i = (uv.0 / period).floor() as i64 + (uv.1 / period).floor() as i64;
                if i.rem_euclid(2) == 0 {
                    a
                } else {
                    b
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Sphere { center: Vec3, radius: f64 },
    AxisBox { min: Vec3, max: Vec3 },
    /// Rectangle of side lengths `extent` centred on `point`; `None` is unbounded.
    Plane { point: Vec3, normal: Vec3, extent: Option<[f64; 2]> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub shape: Shape,
    pub albedo: Albedo,
}

/// Deterministic in-plane basis for a unit normal.
pub(crate) fn plane_basis(normal: &Vec3) -> (Vec3, Vec3) {
    let a = if normal.x.abs() <= normal.y.abs() && normal.x.abs() <= normal.z.abs() {
        Vec3::x()
    } else if normal.y.abs() <= normal.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let u = normal.cross(&a).normalize();
    let v = normal.cross(&u);
    (u, v)
}

impl Primitive {
    pub fn uniform(shape: Shape, colour: [f64; 3]) -> Self {
        Self {
            shape,
            albedo: Albedo::Uniform(colour),
        }
    }

    pub fn checker(shape: Shape, a: [f64; 3], b: [f64; 3], period: f64) -> Self {
        Self {
            shape,
            albedo: Albedo::Checker { a, b, period },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.shape {
            Shape::Sphere { radius, .. } => radius > 0.0,
            Shape::AxisBox { min, max } => (0..3).all(|k| max[k] > min[k]),
            Shape::Plane { normal, extent, .. } => {
                (normal.norm() - 1.0).abs() < 1e-9
                    && extent.map_or(true, |[a, b]| a > 0.0 && b > 0.0)
            }
        };
        let albedo_ok = match self.albedo {
            Albedo::Uniform(c) => c.iter().all(|v| (0.0..=1.0).contains(v)),
            Albedo::Checker { a, b, period } => {
                period > 0.0 && a.iter().chain(&b).all(|v| (0.0..=1.0).contains(v))
            }
        };
        if ok && albedo_ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid primitive {self:?}")))
        }
    }

    /// Albedo times a fixed-direction diffuse term.
    pub fn shade(&self, p: &Vec3) -> [f64; 3] {
        let n = self.shape.outward_normal(p);
        let lambert = 0.55 + 0.45 * n.dot(&super::light_direction()).abs();
        self.albedo.at(self.shape.surface_uv(p)).map(|c| c * lambert)
    }
}

impl Shape {
    /// Smallest `t` in `(t_near, t_far]` where the ray meets the surface.
    pub fn intersect(&self, ray: &Ray) -> Option<f64> {
        let lo = ray.t_near + T_EPS;
        let hi = ray.t_far;
        let accept = |t: f64| (t > lo && t <= hi).then_some(t);
        match *self {
            Shape::Sphere { center, radius } => {
                let oc = ray.origin - center;
                let b = oc.dot(&ray.direction);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                accept(-b - s).or_else(|| accept(-b + s))
            }
            Shape::AxisBox { min, max } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for k in 0..3 {
                    let d = ray.direction[k];
                    let o = ray.origin[k];
                    if d.abs() < 1e-300 {
                        if o < min[k] || o > max[k] {
                            return None;
                        }
                        continue;
                    }
                    let mut ta = (min[k] - o) / d;
                    let mut tb = (max[k] - o) / d;
                    if ta > tb {
                        std::mem::swap(&mut ta, &mut tb);
                    }
                    t0 = t0.max(ta);
                    t1 = t1.min(tb);
                }
                if t0 > t1 {
                    return None;
                }
                accept(t0).or_else(|| accept(t1))
            }
            Shape::Plane {
                point,
                normal,
                extent,
            } => {
                let denom = ray.direction.dot(&normal);
                if denom.abs() < 1e-15 {
                    return None;
                }
                let t = (point - ray.origin).dot(&normal) / denom;
                let t = accept(t)?;
                if let Some([ea, eb]) = extent {
                    let (u, v) = plane_basis(&normal);
                    let d = ray.at(t) - point;
                    if d.dot(&u).abs() > 0.5 * ea || d.dot(&v).abs() > 0.5 * eb {
                        return None;
                    }
                }
                Some(t)
            }
        }
    }

    /// Outward normal at a surface point (planes use their stored normal).
    pub fn outward_normal(&self, p: &Vec3) -> Vec3 {
        match *self {
            Shape::Sphere { center, .. } => (p - center).normalize(),
            Shape::AxisBox { min, max } => {
                let (axis, sign) = box_face(&min, &max, p);
                let mut n = Vec3::zeros();
                n[axis] = sign;
                n
            }
            Shape::Plane { normal, .. } => normal,
        }
    }

    /// 2-D surface coordinates in metres, used for texturing.
    pub fn surface_uv(&self, p: &Vec3) -> (f64, f64) {
        match *self {
            Shape::Sphere { center, radius } => {
                let d = (p - center) / radius;
                let lon = d.y.atan2(d.x);
                let lat = d.z.clamp(-1.0, 1.0).asin();
                (lon * radius, lat * radius)
            }
            Shape::AxisBox { min, max } => {
                let (axis, _) = box_face(&min, &max, p);
                let (a, b) = ((axis + 1) % 3, (axis + 2) % 3);
                (p[a] - min[a], p[b] - min[b])
            }
            Shape::Plane { point, normal, .. } => {
                let (u, v) = plane_basis(&normal);
                let d = p - point;
                (d.dot(&u), d.dot(&v))
            }
        }
    }

    /// Surface area, `None` for unbounded planes.
    pub fn area(&self) -> Option<f64> {
        match *self {
            Shape::Sphere { radius, .. } => Some(4.0 * std::f64::consts::PI * radius * radius),
            Shape::AxisBox { min, max } => {
                let e = max - min;
                Some(2.0 * (e.x * e.y + e.y * e.z + e.z * e.x))
            }
            Shape::Plane { extent, .. } => extent.map(|[a, b]| a * b),
        }
    }

    /// Uniform sample on the surface (bounded shapes only).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Option<Vec3> {
        match *self {
            Shape::Sphere { center, radius } => {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let r = (1.0 - z * z).max(0.0).sqrt();
                Some(center + Vec3::new(r * phi.cos(), r * phi.sin(), z) * radius)
            }
            Shape::AxisBox { min, max } => {
                let e = max - min;
                let faces = [e.y * e.z, e.y * e.z, e.x * e.z, e.x * e.z, e.x * e.y, e.x * e.y];
                let total: f64 = faces.iter().sum();
                let mut pick = rng.random_range(0.0..total);
                let mut face = 5;
                for (i, a) in faces.iter().enumerate() {
                    if pick < *a {
                        face = i;
                        break;
                    }
                    pick -= a;
                }
                let axis = face / 2;
                let mut p = Vec3::new(
                    rng.random_range(min.x..=max.x),
                    rng.random_range(min.y..=max.y),
                    rng.random_range(min.z..=max.z),
                );
                p[axis] = if face % 2 == 0 { min[axis] } else { max[axis] };
                Some(p)
            }
            Shape::Plane {
                point,
                normal,
                extent,
            } => {
                let [a, b] = extent?;
                let (u, v) = plane_basis(&normal);
                let s: f64 = rng.random_range(-0.5..=0.5);
                let t: f64 = rng.random_range(-0.5..=0.5);
                Some(point + u * (s * a) + v * (t * b))
            }
        }
    }

    /// Unsigned distance from `p` to the surface.
    pub fn distance(&self, p: &Vec3) -> f64 {
        match *self {
            Shape::Sphere { center, radius } => ((p - center).norm() - radius).abs(),
            Shape::AxisBox { min, max } => {
                let outside = Vec3::new(
                    (min.x - p.x).max(p.x - max.x).max(0.0),
                    (min.y - p.y).max(p.y - max.y).max(0.0),
                    (min.z - p.z).max(p.z - max.z).max(0.0),
                );
                if outside.norm() > 0.0 {
                    outside.norm()
                } else {
                    (0..3)
                        .map(|k| (p[k] - min[k]).min(max[k] - p[k]))
                        .fold(f64::INFINITY, f64::min)
                }
            }
            Shape::Plane {
                point,
                normal,
                extent,
            } => {
                let d = p - point;
                let h = d.dot(&normal);
                match extent {
                    None => h.abs(),
                    Some([a, b]) => {
                        let (u, v) = plane_basis(&normal);
                        let du = (d.dot(&u).abs() - 0.5 * a).max(0.0);
                        let dv = (d.dot(&v).abs() - 0.5 * b).max(0.0);
                        (h * h + du * du + dv * dv).sqrt()
                    }
                }
            }
        }
    }
}

/// Face of the box closest to `p`: (axis, ±1).
fn box_face(min: &Vec3, max: &Vec3, p: &Vec3) -> (usize, f64) {
    let mut best = (0, -1.0);
    let mut best_d = f64::INFINITY;
    for k in 0..3 {
        let dl = (p[k] - min[k]).abs();
        let dh = (p[k] - max[k]).abs();
        if dl < best_d {
            best_d = dl;
            best = (k, -1.0);
        }
        if dh < best_d {
            best_d = dh;
            best = (k, 1.0);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_lie_on_surfaces() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let shapes = [
            Shape::Sphere {
                center: Vec3::new(1.0, 2.0, 3.0),
                radius: 0.7,
            },
            Shape::AxisBox {
                min: Vec3::new(-1.0, 0.0, 0.0),
                max: Vec3::new(1.0, 0.5, 3.0),
            },
            Shape::Plane {
                point: Vec3::new(0.0, 0.0, 1.0),
                normal: Vec3::new(1.0, 1.0, 0.0).normalize(),
                extent: Some([2.0, 1.0]),
            },
        ];
        for s in shapes {
            for _ in 0..200 {
                let p = s.sample(&mut rng).unwrap();
                assert!(s.distance(&p) < 1e-9, "{s:?} {p:?}");
            }
        }
    }

    #[test]
    fn checker_alternates() {
        let alb = Albedo::Checker {
            a: [1.0; 3],
            b: [0.0; 3],
            period: 1.0,
        };
        assert_eq!(alb.at((0.5, 0.5)), [1.0; 3]);
        assert_eq!(alb.at((1.5, 0.5)), [0.0; 3]);
        assert_eq!(alb.at((-0.5, 0.5)), [0.0; 3]);
    }

    #[test]
    fn bounded_plane_rejects_outside_hits() {
        let s = Shape::Plane {
            point: Vec3::zeros(),
            normal: Vec3::z(),
            extent: Some([1.0, 1.0]),
        };
        let hit = Ray::new(Vec3::new(0.4, 0.0, 1.0), -Vec3::z());
        let miss = Ray::new(Vec3::new(0.6, 0.0, 1.0), -Vec3::z());
        assert!(s.intersect(&hit).is_some());
        assert!(s.intersect(&miss).is_none());
    }
}
