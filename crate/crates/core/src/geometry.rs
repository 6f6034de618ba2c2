//! Conflict-boundary geometry: segments, outward normals, rigid transforms
//! that place a segment horizontal, and chord approximations of circular
//! boundaries.

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

use crate::motion::GaussianBelief;

/// Segments shorter than this are rejected as degenerate rather than silently
/// skipped, so configuration errors surface early.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("degenerate segment: endpoints closer than {MIN_SEGMENT_LENGTH} m")]
    DegenerateSegment,
    #[error("ambiguous side: interior point lies on the segment's supporting line")]
    AmbiguousSide,
    #[error("invalid arc: angular interval is empty")]
    InvalidArc,
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("rotation matrix is not a proper rotation (det = {0})")]
    ImproperRotation(f64),
    #[error("normal count {normals} does not match segment count {segments}")]
    NormalCountMismatch { segments: usize, normals: usize },
    #[error("normal {index} is not a unit vector perpendicular to its segment")]
    BadNormal { index: usize },
}

/// A point in the plane, metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn vector(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    #[inline]
    pub fn from_vector(v: Vector2<f64>) -> Self {
        Self { x: v.x, y: v.y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Directed straight-line segment with strictly positive length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    p1: Point2,
    p2: Point2,
}

impl Segment {
    pub fn new(p1: Point2, p2: Point2) -> Result<Self, GeometryError> {
        if !p1.is_finite() || !p2.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if (p2.vector() - p1.vector()).norm() < MIN_SEGMENT_LENGTH {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Self { p1, p2 })
    }

    #[inline]
    pub fn p1(&self) -> Point2 {
        self.p1
    }

    #[inline]
    pub fn p2(&self) -> Point2 {
        self.p2
    }

    #[inline]
    pub fn midpoint(&self) -> Point2 {
        Point2::new(0.5 * (self.p1.x + self.p2.x), 0.5 * (self.p1.y + self.p2.y))
    }

    #[inline]
    pub fn direction(&self) -> Vector2<f64> {
        (self.p2.vector() - self.p1.vector()).normalize()
    }

    #[inline]
    pub fn length(&self) -> f64 {
        (self.p2.vector() - self.p1.vector()).norm()
    }
}

/// Unit normal of `segment` pointing away from the conflict region, which is
/// identified by an interior point on the region side.
pub fn outward_normal(segment: &Segment, interior_point: Point2) -> Result<Vector2<f64>, GeometryError> {
    let d = segment.direction();
    let n = Vector2::new(-d.y, d.x);
    let offset = (interior_point.vector() - segment.midpoint().vector()).dot(&n);
    if offset.abs() < 1e-9 {
        return Err(GeometryError::AmbiguousSide);
    }
    // flip so the normal points away from the interior
    Ok(if offset > 0.0 { -n } else { n })
}

/// A rigid motion of the plane: `x -> R x + t` with `det R = +1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: Matrix2<f64>,
    translation: Vector2<f64>,
}

impl RigidTransform {
    pub fn new(rotation: Matrix2<f64>, translation: Vector2<f64>) -> Result<Self, GeometryError> {
        let det = rotation.determinant();
        let ortho = (rotation.transpose() * rotation - Matrix2::identity()).norm();
        if (det - 1.0).abs() > 1e-12 || ortho > 1e-11 {
            return Err(GeometryError::ImproperRotation(det));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity() -> Self {
        Self { rotation: Matrix2::identity(), translation: Vector2::zeros() }
    }

    /// Rotation by `angle` radians about the origin, then translation.
    pub fn rotation_then_translation(angle: f64, translation: Vector2<f64>) -> Self {
        let (s, c) = angle.sin_cos();
        Self { rotation: Matrix2::new(c, -s, s, c), translation }
    }

    #[inline]
    pub fn rotation(&self) -> &Matrix2<f64> {
        &self.rotation
    }

    #[inline]
    pub fn translation(&self) -> Vector2<f64> {
        self.translation
    }

    #[inline]
    pub fn apply_point(&self, p: Point2) -> Point2 {
        Point2::from_vector(self.rotation * p.vector() + self.translation)
    }

    /// Vectors (velocities, normals) rotate but do not translate.
    #[inline]
    pub fn apply_vector(&self, v: Vector2<f64>) -> Vector2<f64> {
        self.rotation * v
    }

    pub fn apply_segment(&self, s: &Segment) -> Segment {
        Segment { p1: self.apply_point(s.p1), p2: self.apply_point(s.p2) }
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self { rotation: rt, translation: -(rt * self.translation) }
    }
}

/// Rigid transform mapping `segment` onto a horizontal line, with `normal`
/// mapped to `(0, s)`, `s` in `{+1, -1}`. The rotation is the minimal one
/// aligning the segment direction with the x-axis; no translation is applied,
/// so an already-horizontal segment yields the identity.
pub fn horizontalize(segment: &Segment, normal: Vector2<f64>) -> Result<RigidTransform, GeometryError> {
    if segment.length() < MIN_SEGMENT_LENGTH {
        return Err(GeometryError::DegenerateSegment);
    }
    let d = segment.direction();
    let angle = d.y.atan2(d.x);
    let t = RigidTransform::rotation_then_translation(-angle, Vector2::zeros());
    debug_assert!(
        t.apply_vector(normal).x.abs() < 1e-9,
        "normal must be perpendicular to the segment"
    );
    Ok(t)
}

/// Ordered boundary segments with their outward unit normals.
#[derive(Debug, Clone, PartialEq)]
pub struct ConflictBoundary {
    segments: Vec<Segment>,
    normals: Vec<Vector2<f64>>,
}

impl ConflictBoundary {
    /// Build from explicit segments and normals; validates unit length,
    /// perpendicularity and matching counts.
    pub fn from_parts(segments: Vec<Segment>, normals: Vec<Vector2<f64>>) -> Result<Self, GeometryError> {
        if segments.len() != normals.len() {
            return Err(GeometryError::NormalCountMismatch {
                segments: segments.len(),
                normals: normals.len(),
            });
        }
        for (i, (s, n)) in segments.iter().zip(&normals).enumerate() {
            if (n.norm() - 1.0).abs() > 1e-12 || n.dot(&s.direction()).abs() > 1e-9 {
                return Err(GeometryError::BadNormal { index: i });
            }
        }
        Ok(Self { segments, normals })
    }

    /// Build from segments plus a point interior to the conflict region; each
    /// normal is oriented away from the interior point.
    pub fn from_segments(segments: Vec<Segment>, interior_point: Point2) -> Result<Self, GeometryError> {
        let normals = segments
            .iter()
            .map(|s| outward_normal(s, interior_point))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { segments, normals })
    }

    #[inline]
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    #[inline]
    pub fn normals(&self) -> &[Vector2<f64>] {
        &self.normals
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn transformed(&self, t: &RigidTransform) -> Self {
        Self {
            segments: self.segments.iter().map(|s| t.apply_segment(s)).collect(),
            normals: self.normals.iter().map(|n| t.apply_vector(*n)).collect(),
        }
    }

    /// Axis-aligned bounding box `(min, max)` over all segment endpoints.
    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for s in &self.segments {
            for p in [s.p1(), s.p2()] {
                min.x = min.x.min(p.x);
                min.y = min.y.min(p.y);
                max.x = max.x.max(p.x);
                max.y = max.y.max(p.y);
            }
        }
        (min, max)
    }
}

/// Approximate the arc `[arc_start, arc_end]` (radians) of the circle at
/// `center` with `n_segments` inscribed chords. Chord endpoints lie on the
/// circle; normals point radially away from the center.
pub fn approximate_circle(
    center: Point2,
    radius: f64,
    n_segments: usize,
    arc_start: f64,
    arc_end: f64,
) -> Result<ConflictBoundary, GeometryError> {
    if !(radius > 0.0) || !arc_start.is_finite() || !arc_end.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if n_segments == 0 || arc_end <= arc_start {
        return Err(GeometryError::InvalidArc);
    }
    let c = center.vector();
    let point_at = |a: f64| Point2::from_vector(c + radius * Vector2::new(a.cos(), a.sin()));
    let mut segments = Vec::with_capacity(n_segments);
    let mut normals = Vec::with_capacity(n_segments);
    let step = (arc_end - arc_start) / n_segments as f64;
    for k in 0..n_segments {
        let a0 = arc_start + k as f64 * step;
        let a1 = arc_start + (k + 1) as f64 * step;
        segments.push(Segment::new(point_at(a0), point_at(a1))?);
        let mid = 0.5 * (a0 + a1);
        normals.push(Vector2::new(mid.cos(), mid.sin()));
    }
    ConflictBoundary::from_parts(segments, normals)
}

/// Approximate the arc `[arc_start, arc_end]` of the circle at `center` with
/// `n_segments` tangent faces (a circumscribed covering): face `k` touches the
/// circle at the midpoint of its sub-arc and extends to the sub-arc ends,
/// where neighboring tangent lines meet at radius `r / cos(half_step)`.
/// Normals point radially away from the center, out of the tangent point.
pub fn circumscribe_circle_arc(
    center: Point2,
    radius: f64,
    n_segments: usize,
    arc_start: f64,
    arc_end: f64,
) -> Result<ConflictBoundary, GeometryError> {
    if !(radius > 0.0) || !arc_start.is_finite() || !arc_end.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    if n_segments == 0 || arc_end <= arc_start {
        return Err(GeometryError::InvalidArc);
    }
    let c = center.vector();
    let step = (arc_end - arc_start) / n_segments as f64;
    let outer = radius / (0.5 * step).cos();
    let corner = |a: f64| Point2::from_vector(c + outer * Vector2::new(a.cos(), a.sin()));
    let mut segments = Vec::with_capacity(n_segments);
    let mut normals = Vec::with_capacity(n_segments);
    for k in 0..n_segments {
        let a0 = arc_start + k as f64 * step;
        let a1 = a0 + step;
        segments.push(Segment::new(corner(a0), corner(a1))?);
        let mid = 0.5 * (a0 + a1);
        normals.push(Vector2::new(mid.cos(), mid.sin()));
    }
    ConflictBoundary::from_parts(segments, normals)
}

/// Image of a joint position-velocity Gaussian under a rigid motion: the
/// position mean is rotated and translated, the velocity mean rotated only,
/// and every covariance block `B` becomes `R B R^T`.
pub fn transform_belief(belief: &GaussianBelief, t: &RigidTransform) -> GaussianBelief {
    let r = t.rotation();
    let mut mean = belief.mean();
    let pos = r * Vector2::new(mean[0], mean[1]) + t.translation();
    let vel = r * Vector2::new(mean[2], mean[3]);
    mean[0] = pos.x;
    mean[1] = pos.y;
    mean[2] = vel.x;
    mean[3] = vel.y;

    let mut big_r = nalgebra::Matrix4::<f64>::zeros();
    big_r.fixed_view_mut::<2, 2>(0, 0).copy_from(r);
    big_r.fixed_view_mut::<2, 2>(2, 2).copy_from(r);
    let cov = big_r * belief.covariance() * big_r.transpose();
    GaussianBelief::new(belief.time(), mean, cov).expect("rotation preserves covariance validity")
}
