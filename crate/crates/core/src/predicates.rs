//! Orientation predicate with an exact fallback.
//!
//! The floating point determinant is accepted whenever its magnitude exceeds
//! a forward error bound; otherwise the sign is recomputed with arbitrary
//! precision rationals, which represent every finite `f64` exactly.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::vec2::Vec2;

const EPS: f64 = f64::EPSILON * 0.5;
const CCW_ERRBOUND: f64 = (3.0 + 16.0 * EPS) * EPS;

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite coordinate")
}

/// Exact orientation determinant of `(a, b, c)` as a rational.
pub fn orient2d_exact(a: Vec2<f64>, b: Vec2<f64>, c: Vec2<f64>) -> BigRational {
    let (ax, ay) = (exact(a.x), exact(a.y));
    let (bx, by) = (exact(b.x), exact(b.y));
    let (cx, cy) = (exact(c.x), exact(c.y));
    (&ax - &cx) * (&by - &cy) - (&ay - &cy) * (&bx - &cx)
}

/// Sign of the signed area of triangle `(a, b, c)`: `Greater` when counter-
/// clockwise, `Less` when clockwise, `Equal` when collinear. Always exact.
pub fn orient2d(a: Vec2<f64>, b: Vec2<f64>, c: Vec2<f64>) -> Ordering {
    let left = (a.x - c.x) * (b.y - c.y);
    let right = (a.y - c.y) * (b.x - c.x);
    let det = left - right;
    let bound = CCW_ERRBOUND * (left.abs() + right.abs());
    if det > bound {
        return Ordering::Greater;
    }
    if -det > bound {
        return Ordering::Less;
    }
    let d = orient2d_exact(a, b, c);
    if d.is_zero() {
        Ordering::Equal
    } else if d.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Whether collinear point `p` lies within the closed bounding box of `a b`.
pub(crate) fn within_box(a: Vec2<f64>, b: Vec2<f64>, p: Vec2<f64>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Whether `p` lies on the closed segment `a b`.
pub fn on_segment(a: Vec2<f64>, b: Vec2<f64>, p: Vec2<f64>) -> bool {
    orient2d(a, b, p) == Ordering::Equal && within_box(a, b, p)
}

/// Whether closed segments `p1 p2` and `q1 q2` share at least one point.
pub fn segments_intersect(p1: Vec2<f64>, p2: Vec2<f64>, q1: Vec2<f64>, q2: Vec2<f64>) -> bool {
    let d1 = orient2d(q1, q2, p1);
    let d2 = orient2d(q1, q2, p2);
    let d3 = orient2d(p1, p2, q1);
    let d4 = orient2d(p1, p2, q2);
    if d1 != d2
        && d1 != Ordering::Equal
        && d2 != Ordering::Equal
        && d3 != d4
        && d3 != Ordering::Equal
        && d4 != Ordering::Equal
    {
        return true;
    }
    (d1 == Ordering::Equal && within_box(q1, q2, p1))
        || (d2 == Ordering::Equal && within_box(q1, q2, p2))
        || (d3 == Ordering::Equal && within_box(p1, p2, q1))
        || (d4 == Ordering::Equal && within_box(p1, p2, q2))
}

/// Rational coordinates of a point, for exact geometry in tests and oracles.
pub fn to_rational(p: Vec2<f64>) -> Vec2<BigRational> {
    Vec2::new(exact(p.x), exact(p.y))
}

pub fn rational_to_f64(r: &BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}
