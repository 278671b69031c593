use super::Vec3;

/// Sentinel for a variance that could not be bounded. Representable as `f32`
/// so it survives a PLY round trip.
pub const MAX_VARIANCE: f64 = f32::MAX as f64;

/// A reconstructed point with colour and per-modality variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudPoint {
    pub position: Vec3,
    pub colour: [f64; 3],
    pub u_colour: f64,
    pub u_depth: f64,
}

impl CloudPoint {
    pub fn new(position: Vec3, colour: [f64; 3]) -> Self {
        Self {
            position,
            colour: colour.map(|c| c.clamp(0.0, 1.0)),
            u_colour: 0.0,
            u_depth: 0.0,
        }
    }

    pub fn with_uncertainty(mut self, u_colour: f64, u_depth: f64) -> Self {
        self.u_colour = sanitize_variance(u_colour);
        self.u_depth = sanitize_variance(u_depth);
        self
    }

    /// The smaller of the two modality variances.
    pub fn min_uncertainty(&self) -> f64 {
        self.u_colour.min(self.u_depth)
    }
}

pub(crate) fn sanitize_variance(v: f64) -> f64 {
    if v.is_finite() {
        v.clamp(0.0, MAX_VARIANCE)
    } else {
        MAX_VARIANCE
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<CloudPoint>,
}

impl PointCloud {
    pub fn new(points: Vec<CloudPoint>) -> Self {
        Self { points }
    }

    pub fn from_positions(positions: impl IntoIterator<Item = Vec3>) -> Self {
        positions
            .into_iter()
            .map(|p| CloudPoint::new(p, [0.5; 3]))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.position).collect()
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }

    pub fn retain(&mut self, f: impl FnMut(&CloudPoint) -> bool) {
        self.points.retain(f);
    }
}

impl FromIterator<CloudPoint> for PointCloud {
    fn from_iter<I: IntoIterator<Item = CloudPoint>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}
