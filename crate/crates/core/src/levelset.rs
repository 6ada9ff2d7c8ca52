//! Implicit description of the interface.
//!
//! `Omega_1 = {phi < 0}` and `Omega_2 = {phi > 0}`; normals point from
//! `Omega_1` into `Omega_2`.

use alloc::sync::Arc;
use core::fmt;

use crate::point::Point2;
#[allow(unused_imports)]
use crate::float::Float;

type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point2) -> Point2 + Send + Sync>;

#[derive(Clone)]
pub enum LevelSet {
    /// `phi(x) = |x - center| - radius`
    Circle { center: Point2, radius: f64 },
    /// `phi(x) = normal . (x - point)` with a unit normal.
    Line { point: Point2, normal: Point2 },
    /// Arbitrary smooth function with its gradient.
    Generic { value: ScalarFn, gradient: VectorFn },
}

impl fmt::Debug for LevelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelSet::Circle { center, radius } => f
                .debug_struct("Circle")
                .field("center", center)
                .field("radius", radius)
                .finish(),
            LevelSet::Line { point, normal } => f
                .debug_struct("Line")
                .field("point", point)
                .field("normal", normal)
                .finish(),
            LevelSet::Generic { .. } => f.write_str("Generic"),
        }
    }
}

/// Real roots of `phi(a + t (b - a)) = 0`, sorted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SegmentRoots {
    None,
    One(f64),
    Two(f64, f64),
}

impl LevelSet {
    pub fn circle(center: Point2, radius: f64) -> Self {
        LevelSet::Circle { center, radius }
    }

    /// Line through `point` running along `direction`; `Omega_2` lies to the
    /// right of the direction.
    pub fn line(point: Point2, direction: Point2) -> Self {
        let d = direction.normalized();
        LevelSet::Line {
            point,
            normal: Point2::new(d.y, -d.x),
        }
    }

    /// `phi(x, y) = x - x0`
    pub fn vertical_line(x0: f64) -> Self {
        Self::line(Point2::new(x0, 0.0), Point2::new(0.0, 1.0))
    }

    pub fn generic(
        value: impl Fn(Point2) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(Point2) -> Point2 + Send + Sync + 'static,
    ) -> Self {
        LevelSet::Generic {
            value: Arc::new(value),
            gradient: Arc::new(gradient),
        }
    }

    #[inline]
    pub fn value(&self, p: Point2) -> f64 {
        match self {
            LevelSet::Circle { center, radius } => (p - *center).norm() - radius,
            LevelSet::Line { point, normal } => normal.dot(p - *point),
            LevelSet::Generic { value, .. } => value(p),
        }
    }

    #[inline]
    pub fn gradient(&self, p: Point2) -> Point2 {
        match self {
            LevelSet::Circle { center, .. } => (p - *center).normalized(),
            LevelSet::Line { normal, .. } => *normal,
            LevelSet::Generic { gradient, .. } => gradient(p),
        }
    }

    /// `grad phi / |grad phi|`, the normal from `Omega_1` into `Omega_2`.
    #[inline]
    pub fn unit_normal(&self, p: Point2) -> Point2 {
        self.gradient(p).normalized()
    }

    /// Whether intersections and the interface itself are computed in closed
    /// form (no geometric approximation).
    pub fn is_exact(&self) -> bool {
        !matches!(self, LevelSet::Generic { .. })
    }

    /// Closed-form roots along the segment `a -> b` (parameter in `R`, not
    /// clipped to `[0, 1]`). `None` for generic level sets.
    pub fn segment_roots(&self, a: Point2, b: Point2) -> Option<SegmentRoots> {
        match self {
            LevelSet::Circle { center, radius } => {
                let d = b - a;
                let f = a - *center;
                let qa = d.norm_squared();
                let qb = 2.0 * f.dot(d);
                let qc = f.norm_squared() - radius * radius;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 || qa == 0.0 {
                    return Some(SegmentRoots::None);
                }
                let s = disc.sqrt();
                // numerically stable pair
                let q = -0.5 * (qb + qb.signum() * s);
                let (r1, r2) = if q == 0.0 {
                    (0.0, 0.0)
                } else {
                    (q / qa, qc / q)
                };
                let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
                if disc == 0.0 {
                    Some(SegmentRoots::One(lo))
                } else {
                    Some(SegmentRoots::Two(lo, hi))
                }
            }
            LevelSet::Line { .. } => {
                let fa = self.value(a);
                let fb = self.value(b);
                if fa == fb {
                    Some(SegmentRoots::None)
                } else {
                    Some(SegmentRoots::One(fa / (fa - fb)))
                }
            }
            LevelSet::Generic { .. } => None,
        }
    }
}
