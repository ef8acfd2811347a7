//! Planar poses and oriented rectangles with exact separating-axis predicates.
//!
//! Everything here is a top-down footprint: heights are carried by
//! [`BoxShape`] but never consulted by the predicates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;

/// Boundary tolerance in meters. Contact with zero penetration is not a collision.
pub const EPS_GEO: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("extent must be strictly positive, got {0}")]
    NonPositiveExtent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point2) -> f64 {
        math::hypot(self.x - other.x, self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        math::hypot(self.x, self.y)
    }

    pub fn lerp(&self, other: &Point2, t: f64) -> Point2 {
        Point2::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }

    fn dot(&self, other: &Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }
}

/// Planar pose; `theta` is kept in `(-π, π]` by [`Pose2::new`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: math::normalize_angle(theta),
        }
    }

    pub const fn origin() -> Self {
        Self {
            x: 0.0,
            y: 0.0,
            theta: 0.0,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite()
            && self.y.is_finite()
            && self.theta.is_finite()
            && self.theta > -core::f64::consts::PI
            && self.theta <= core::f64::consts::PI
    }

    /// Maps a point expressed in this pose's frame to the world frame.
    pub fn transform_point(&self, local: Point2) -> Point2 {
        let (s, c) = (math::sin(self.theta), math::cos(self.theta));
        Point2::new(
            self.x + c * local.x - s * local.y,
            self.y + s * local.x + c * local.y,
        )
    }

    /// Maps a world point into this pose's frame.
    pub fn inverse_transform_point(&self, world: Point2) -> Point2 {
        let (s, c) = (math::sin(self.theta), math::cos(self.theta));
        let dx = world.x - self.x;
        let dy = world.y - self.y;
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }

    /// `self ∘ other`: `other` is interpreted in this pose's frame.
    pub fn compose(&self, other: &Pose2) -> Pose2 {
        let p = self.transform_point(other.position());
        Pose2::new(p.x, p.y, self.theta + other.theta)
    }
}

/// Physical box dimensions; only `size_x`/`size_y` matter for footprints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxShape {
    pub size_x: f64,
    pub size_y: f64,
    pub size_z: f64,
}

impl BoxShape {
    pub fn new(size_x: f64, size_y: f64, size_z: f64) -> Result<Self, GeometryError> {
        for v in [size_x, size_y, size_z] {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            if v <= 0.0 {
                return Err(GeometryError::NonPositiveExtent(v));
            }
        }
        Ok(Self {
            size_x,
            size_y,
            size_z,
        })
    }

    pub fn footprint_area(&self) -> f64 {
        self.size_x * self.size_y
    }

    /// Footprint of this shape placed at `pose`.
    pub fn footprint(&self, pose: Pose2) -> OrientedBox2 {
        OrientedBox2 {
            center: pose,
            half_x: self.size_x / 2.0,
            half_y: self.size_y / 2.0,
        }
    }
}

/// Axis-aligned rectangle, used for workspace bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb2 {
    pub min: Point2,
    pub max: Point2,
}

impl Aabb2 {
    pub const fn new(min: Point2, max: Point2) -> Self {
        Self { min, max }
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// Rectangle centred on `center` and rotated by `center.theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox2 {
    pub center: Pose2,
    pub half_x: f64,
    pub half_y: f64,
}

impl OrientedBox2 {
    pub fn new(center: Pose2, half_x: f64, half_y: f64) -> Result<Self, GeometryError> {
        if !center.x.is_finite() || !center.y.is_finite() || !center.theta.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        for h in [half_x, half_y] {
            if !h.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            if h <= 0.0 {
                return Err(GeometryError::NonPositiveExtent(h));
            }
        }
        Ok(Self {
            center: Pose2::new(center.x, center.y, center.theta),
            half_x,
            half_y,
        })
    }

    pub fn area(&self) -> f64 {
        4.0 * self.half_x * self.half_y
    }

    pub fn circumradius(&self) -> f64 {
        math::hypot(self.half_x, self.half_y)
    }

    /// Unit axes of the box frame.
    pub fn axes(&self) -> [Point2; 2] {
        let (s, c) = (math::sin(self.center.theta), math::cos(self.center.theta));
        [Point2::new(c, s), Point2::new(-s, c)]
    }

    /// Vertices in counter-clockwise order, starting from the local `(-hx, -hy)` corner.
    pub fn corners(&self) -> [Point2; 4] {
        let (hx, hy) = (self.half_x, self.half_y);
        [
            Point2::new(-hx, -hy),
            Point2::new(hx, -hy),
            Point2::new(hx, hy),
            Point2::new(-hx, hy),
        ]
        .map(|p| self.center.transform_point(p))
    }

    /// Closed membership with `EPS_GEO` slack.
    pub fn contains_point(&self, p: Point2) -> bool {
        let l = self.center.inverse_transform_point(p);
        l.x.abs() <= self.half_x + EPS_GEO && l.y.abs() <= self.half_y + EPS_GEO
    }

    pub fn aabb(&self) -> Aabb2 {
        let cs = self.corners();
        let mut min = cs[0];
        let mut max = cs[0];
        for c in &cs[1..] {
            min.x = min.x.min(c.x);
            min.y = min.y.min(c.y);
            max.x = max.x.max(c.x);
            max.y = max.y.max(c.y);
        }
        Aabb2::new(min, max)
    }

    fn project(&self, axis: &Point2) -> (f64, f64) {
        let c = self.center.position().dot(axis);
        let [ax, ay] = self.axes();
        let r = self.half_x * ax.dot(axis).abs() + self.half_y * ay.dot(axis).abs();
        (c - r, c + r)
    }
}

/// True iff the interiors of `a` and `b` intersect by more than `EPS_GEO`.
pub fn overlap(a: &OrientedBox2, b: &OrientedBox2) -> bool {
    let [a0, a1] = a.axes();
    let [b0, b1] = b.axes();
    for axis in [a0, a1, b0, b1] {
        let (amin, amax) = a.project(&axis);
        let (bmin, bmax) = b.project(&axis);
        let penetration = amax.min(bmax) - amin.max(bmin);
        if penetration <= EPS_GEO {
            return false;
        }
    }
    true
}

/// True iff every corner of `inner` lies inside `outer` (closed, `EPS_GEO` slack).
pub fn contains(outer: &OrientedBox2, inner: &OrientedBox2) -> bool {
    inner.corners().iter().all(|c| outer.contains_point(*c))
}

pub fn corners(b: &OrientedBox2) -> [Point2; 4] {
    b.corners()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn unit_at(x: f64, y: f64, theta: f64) -> OrientedBox2 {
        OrientedBox2::new(Pose2::new(x, y, theta), 0.5, 0.5).unwrap()
    }

    fn close(a: Point2, b: Point2) -> bool {
        (a.x - b.x).abs() < 1e-12 && (a.y - b.y).abs() < 1e-12
    }

    #[test]
    fn rejects_degenerate_extents() {
        assert_eq!(
            OrientedBox2::new(Pose2::origin(), 0.0, 1.0),
            Err(GeometryError::NonPositiveExtent(0.0))
        );
        assert!(OrientedBox2::new(Pose2::origin(), f64::NAN, 1.0).is_err());
        assert!(BoxShape::new(0.1, -0.1, 0.1).is_err());
    }

    #[test]
    fn coincident_boxes_overlap() {
        assert!(overlap(&unit_at(0.0, 0.0, 0.0), &unit_at(0.0, 0.0, 0.0)));
    }

    #[test]
    fn distant_boxes_do_not_overlap() {
        assert!(!overlap(&unit_at(0.0, 0.0, 0.0), &unit_at(10.0, 0.0, 0.0)));
    }

    #[test]
    fn flush_contact_is_not_overlap() {
        assert!(!overlap(&unit_at(0.0, 0.0, 0.0), &unit_at(1.0, 0.0, 0.0)));
        assert!(overlap(&unit_at(0.0, 0.0, 0.0), &unit_at(1.0 - 1e-6, 0.0, 0.0)));
    }

    #[test]
    fn diamond_near_corner() {
        // Grid oracle (200x200 samples of B tested against A): no sample of B
        // falls inside A; B's nearest edge lies on x + y = 1.0929 while A's
        // corner is at x + y = 1.0.
        let a = unit_at(0.0, 0.0, 0.0);
        let b = unit_at(0.9, 0.9, FRAC_PI_4);
        assert!(!overlap(&a, &b));
        assert!(overlap(&a, &unit_at(0.8, 0.8, FRAC_PI_4)));
    }

    #[test]
    fn axis_aligned_corners() {
        let cs = unit_at(0.0, 0.0, 0.0).corners();
        let expected = [
            Point2::new(-0.5, -0.5),
            Point2::new(0.5, -0.5),
            Point2::new(0.5, 0.5),
            Point2::new(-0.5, 0.5),
        ];
        for (c, e) in cs.iter().zip(expected.iter()) {
            assert!(close(*c, *e));
        }
    }

    #[test]
    fn quarter_turn_rotates_corner_order() {
        let a = unit_at(0.0, 0.0, 0.0).corners();
        let b = unit_at(0.0, 0.0, FRAC_PI_2).corners();
        for i in 0..4 {
            assert!(close(b[i], a[(i + 1) % 4]));
        }
    }

    #[test]
    fn corners_by_rotation_matrix() {
        let b = OrientedBox2::new(Pose2::new(1.0, 2.0, FRAC_PI_6), 0.3, 0.1).unwrap();
        let (s, c) = (0.5_f64, 3.0_f64.sqrt() / 2.0);
        let expect = |lx: f64, ly: f64| Point2::new(1.0 + c * lx - s * ly, 2.0 + s * lx + c * ly);
        let cs = b.corners();
        assert!(close(cs[0], expect(-0.3, -0.1)));
        assert!(close(cs[1], expect(0.3, -0.1)));
        assert!(close(cs[2], expect(0.3, 0.1)));
        assert!(close(cs[3], expect(-0.3, 0.1)));
        // 0.3·cos30 + 0.1·sin30 etc.
        assert!((cs[2].x - (1.0 + 0.3 * c - 0.05)).abs() < 1e-12);
        assert!((cs[2].y - (2.0 + 0.15 + 0.1 * c)).abs() < 1e-12);
    }

    #[test]
    fn corners_are_counter_clockwise() {
        let cs = OrientedBox2::new(Pose2::new(0.2, -0.4, 2.0), 0.7, 0.2)
            .unwrap()
            .corners();
        let mut twice_area = 0.0;
        for i in 0..4 {
            let (p, q) = (cs[i], cs[(i + 1) % 4]);
            twice_area += p.x * q.y - q.x * p.y;
        }
        assert!((twice_area / 2.0 - 4.0 * 0.7 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn contains_identity_and_outside() {
        let o = unit_at(0.0, 0.0, 0.0);
        assert!(contains(&o, &o));
        assert!(!contains(&o, &unit_at(3.0, 0.0, 0.0)));
    }

    #[test]
    fn rotated_inner_protrudes() {
        // Square outer half 0.5. Inner square half h rotated π/4 has its
        // corners at distance h·√2 along the axes: h=0.3 → 0.424 (inside),
        // h=0.4 → 0.566 (protrudes).
        let outer = unit_at(0.0, 0.0, 0.0);
        let fits = OrientedBox2::new(Pose2::new(0.0, 0.0, FRAC_PI_4), 0.3, 0.3).unwrap();
        let sticks = OrientedBox2::new(Pose2::new(0.0, 0.0, FRAC_PI_4), 0.4, 0.4).unwrap();
        assert!(contains(&outer, &fits));
        assert!(!contains(&outer, &sticks));
    }

    #[test]
    fn pose_compose_inverse() {
        let t = Pose2::new(0.3, -1.2, 0.7);
        let p = Point2::new(0.25, 0.5);
        let back = t.inverse_transform_point(t.transform_point(p));
        assert!(close(back, p));
    }
}
