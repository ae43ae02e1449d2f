//! Area of the symmetric difference of two simple polygons.
//!
//! `|P ∩ Q|` is evaluated as the boundary integral `½ ∮ x dy − y dx` over
//! the pieces of `∂P` inside `Q` and of `∂Q` inside `P`. Each edge is split
//! at crossings and at vertices of the other polygon lying on it; every
//! piece is then classified by an exact winding-number test. Collinear
//! overlaps are resolved at edge level: a shared boundary piece traversed
//! in the same direction by both polygons bounds the intersection and is
//! counted once, one traversed in opposite directions separates the two
//! interiors and is dropped.

use std::cmp::Ordering;

use crate::predicates::{on_segment, orient2d};
use crate::vec2::Vec2;

use super::region::RegionPolygon;

type P = Vec2<f64>;

/// `Md(P, Q) = |P| + |Q| − 2|P ∩ Q|`, never negative.
pub fn manifold_distance(p: &RegionPolygon, q: &RegionPolygon) -> f64 {
    let inter = intersection_area(p, q);
    (p.area() + q.area() - 2.0 * inter).max(0.0)
}

/// Manifold distance between two unions of pairwise disjoint regions.
pub fn regions_distance(p: &[RegionPolygon], q: &[RegionPolygon]) -> f64 {
    let area = |r: &[RegionPolygon]| r.iter().map(RegionPolygon::area).sum::<f64>();
    let inter: f64 = p.iter().flat_map(|a| q.iter().map(move |b| intersection_area(a, b))).sum();
    (area(p) + area(q) - 2.0 * inter).max(0.0)
}

/// Area of `P ∩ Q`.
pub fn intersection_area(p: &RegionPolygon, q: &RegionPolygon) -> f64 {
    let origin = p.vertices()[0];
    let a = boundary_part(p, q, true, origin);
    let b = boundary_part(q, p, false, origin);
    (a + b).max(0.0)
}

struct Bbox {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Bbox {
    fn of(a: P, b: P) -> Self {
        Self { x0: a.x.min(b.x), x1: a.x.max(b.x), y0: a.y.min(b.y), y1: a.y.max(b.y) }
    }

    fn overlaps(&self, o: &Bbox) -> bool {
        self.x0 <= o.x1 && o.x0 <= self.x1 && self.y0 <= o.y1 && o.y0 <= self.y1
    }
}

/// Parameter of point `x` along `a → b`, assuming `x` lies on the line.
fn param(a: P, b: P, x: P) -> f64 {
    let d = b - a;
    (x - a).dot(d) / d.norm_sq()
}

/// `½ Σ cross` over the pieces of `∂poly` inside `other`; collinear pieces
/// shared with `other` count only when `keep_shared` and both polygons run
/// the same way there.
fn boundary_part(poly: &RegionPolygon, other: &RegionPolygon, keep_shared: bool, origin: P) -> f64 {
    let other_edges: Vec<(P, P, Bbox)> = other.edges().map(|(c, d)| (c, d, Bbox::of(c, d))).collect();
    let mut total = 0.0;
    let mut cuts: Vec<f64> = Vec::new();
    let mut shared: Vec<(f64, f64, bool)> = Vec::new();

    for (a, b) in poly.edges() {
        let bb = Bbox::of(a, b);
        cuts.clear();
        shared.clear();
        cuts.push(0.0);
        cuts.push(1.0);
        for (c, d, cb) in &other_edges {
            if !bb.overlaps(cb) {
                continue;
            }
            let (c, d) = (*c, *d);
            let oc = orient2d(a, b, c);
            let od = orient2d(a, b, d);
            if oc == Ordering::Equal && od == Ordering::Equal {
                // collinear: overlap interval on this edge
                let (tc, td) = (param(a, b, c), param(a, b, d));
                let (lo, hi) = (tc.min(td).max(0.0), tc.max(td).min(1.0));
                if hi > lo {
                    cuts.push(lo);
                    cuts.push(hi);
                    shared.push((lo, hi, (d - c).dot(b - a) > 0.0));
                }
                continue;
            }
            for x in [c, d] {
                if on_segment(a, b, x) {
                    cuts.push(param(a, b, x));
                }
            }
            let oa = orient2d(c, d, a);
            let ob = orient2d(c, d, b);
            let proper = oc != Ordering::Equal
                && od != Ordering::Equal
                && oc != od
                && oa != Ordering::Equal
                && ob != Ordering::Equal
                && oa != ob;
            if proper {
                let e = b - a;
                let f = d - c;
                let t = (c - a).cross(f) / e.cross(f);
                cuts.push(t.clamp(0.0, 1.0));
            }
        }
        cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        cuts.dedup();
        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let tm = 0.5 * (t0 + t1);
            let include = match shared.iter().find(|(lo, hi, _)| *lo <= t0 && t1 <= *hi) {
                Some(&(_, _, same_dir)) => keep_shared && same_dir,
                None => winding_inside(other, a.lerp(b, tm)),
            };
            if include {
                let s = a.lerp(b, t0) - origin;
                let e = a.lerp(b, t1) - origin;
                total += 0.5 * s.cross(e);
            }
        }
    }
    total
}

/// Non-zero winding number test with exact orientation; points on the
/// boundary count as outside.
pub fn winding_inside(poly: &RegionPolygon, x: P) -> bool {
    let mut wn = 0i32;
    for (a, b) in poly.edges() {
        if a.y <= x.y {
            if b.y > x.y && orient2d(a, b, x) == Ordering::Greater {
                wn += 1;
            }
        } else if b.y <= x.y && orient2d(a, b, x) == Ordering::Less {
            wn -= 1;
        }
        if on_segment(a, b, x) {
            return false;
        }
    }
    wn != 0
}
