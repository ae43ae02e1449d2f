use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::evolution::{Island, SingleCurve};
use crate::geometry::{shoelace_area, NetworkState};
use crate::predicates::{orient2d, segments_intersect, within_box};
use crate::vec2::Vec2;

type P = Vec2<f64>;

/// Closed simple polygon, counter-clockwise, without a repeated closing
/// vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionPolygon {
    vertices: Vec<P>,
}

impl RegionPolygon {
    /// Validates simplicity and orientation; clockwise input is reversed.
    pub fn new(mut vertices: Vec<P>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidRegion(format!("polygon with {} vertices", vertices.len())));
        }
        if let Some(p) = vertices.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidRegion(format!("non-finite vertex {p:?}")));
        }
        check_simple(&vertices)?;
        let a = shoelace_area(&vertices);
        if !(a.abs() > 0.0) {
            return Err(Error::InvalidRegion("polygon encloses zero area".into()));
        }
        if a < 0.0 {
            vertices.reverse();
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[P] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn area(&self) -> f64 {
        shoelace_area(&self.vertices)
    }

    pub fn edges(&self) -> impl Iterator<Item = (P, P)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Same polygon shifted horizontally.
    pub fn translated(&self, dx: f64) -> Self {
        Self { vertices: self.vertices.iter().map(|p| P::new(p.x + dx, p.y)).collect() }
    }
}

/// Rejects polygons whose edges meet anywhere except at shared vertices of
/// consecutive edges.
fn check_simple(v: &[P]) -> Result<()> {
    let n = v.len();
    let edge = |i: usize| (v[i], v[(i + 1) % n]);
    let bbox = |(a, b): (P, P)| (a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y));
    let boxes: Vec<_> = (0..n).map(|i| bbox(edge(i))).collect();
    for i in 0..n {
        let (a, b) = edge(i);
        if a == b {
            return Err(Error::InvalidRegion(format!("repeated vertex at index {i}")));
        }
        for j in i + 1..n {
            let (bi, bj) = (boxes[i], boxes[j]);
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            let (c, d) = edge(j);
            let adjacent_next = j == i + 1;
            let adjacent_prev = i == 0 && j == n - 1;
            let bad = if adjacent_next {
                // share b == c; overlap only if collinear and folding back
                orient2d(a, b, d) == Ordering::Equal && (within_box(a, b, d) || within_box(c, d, a))
            } else if adjacent_prev {
                orient2d(c, d, b) == Ordering::Equal && (within_box(c, d, b) || within_box(a, b, c))
            } else {
                segments_intersect(a, b, c, d)
            };
            if bad {
                return Err(Error::InvalidRegion(format!("boundary self-intersects (edges {i} and {j})")));
            }
        }
    }
    Ok(())
}

/// Film regions of a double bubble.
#[derive(Clone, Debug)]
pub struct NetworkRegions {
    /// Both films together: substrate `A → B`, then `Γ₂`, then `Γ₁` back.
    pub union: RegionPolygon,
    /// Film under `Γ₁` (bounded by `Γ₁`, `Γ₃` and the substrate).
    pub film1: RegionPolygon,
    /// Film under `Γ₂`.
    pub film2: RegionPolygon,
}

pub fn network_regions(network: &NetworkState<f64>) -> Result<NetworkRegions> {
    let g1 = network.curve_nodes(0);
    let g2 = network.curve_nodes(1);
    let g3 = network.curve_nodes(2);
    let n1 = g1.len() - 1;
    let n3 = g3.len() - 1;

    let mut union = vec![g1[0]];
    union.extend_from_slice(&g2);
    union.extend(g1[1..n1].iter().rev());

    let mut film1 = vec![g1[0]];
    film1.extend_from_slice(&g3);
    film1.extend(g1[1..n1].iter().rev());

    let mut film2 = g3[..1].to_vec();
    film2.extend_from_slice(&g2);
    film2.extend(g3[1..n3].iter().rev());

    Ok(NetworkRegions {
        union: RegionPolygon::new(union)?,
        film1: RegionPolygon::new(film1)?,
        film2: RegionPolygon::new(film2)?,
    })
}

/// Union polygon of a double bubble.
pub fn region_polygon(network: &NetworkState<f64>) -> Result<RegionPolygon> {
    Ok(network_regions(network)?.union)
}

pub fn single_region(island: &SingleCurve<f64>) -> Result<RegionPolygon> {
    RegionPolygon::new(island.nodes.clone())
}

/// One polygon per enclosed region: two for a double bubble, one for a
/// single-curve island.
pub fn island_regions(island: &Island<f64>) -> Result<Vec<RegionPolygon>> {
    match island {
        Island::Network(n) => {
            let r = network_regions(n)?;
            Ok(vec![r.film1, r.film2])
        }
        Island::Single(s) => Ok(vec![single_region(s)?]),
    }
}
