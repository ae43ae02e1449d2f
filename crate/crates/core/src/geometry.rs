//! Polyline curves, the three-curve network, and discrete differential
//! geometry on them: segment frames, mass-lumped inner products, the enclosed
//! area and the mesh ratio.
//!
//! Every curve is stored in parameter order from its substrate contact node
//! (index 0) to its far end. In a [`NetworkState`] the far end of all three
//! curves is the triple junction, which is stored exactly once.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vec2::Vec2;

/// Which interface a curve represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CurveRole {
    /// Film 1 / vapor, contact point A.
    F1V,
    /// Film 2 / vapor, contact point B.
    F2V,
    /// Film 1 / film 2, contact point C.
    F1F2,
}

impl CurveRole {
    pub const ALL: [CurveRole; 3] = [CurveRole::F1V, CurveRole::F2V, CurveRole::F1F2];

    pub fn index(self) -> usize {
        match self {
            CurveRole::F1V => 0,
            CurveRole::F2V => 1,
            CurveRole::F1F2 => 2,
        }
    }

    pub fn from_index(j: usize) -> Option<Self> {
        Self::ALL.get(j).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            CurveRole::F1V => "F1V",
            CurveRole::F2V => "F2V",
            CurveRole::F1F2 => "F1F2",
        }
    }
}

impl fmt::Display for CurveRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CurveRole {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "F1V" => Ok(CurveRole::F1V),
            "F2V" => Ok(CurveRole::F2V),
            "F1F2" => Ok(CurveRole::F1F2),
            other => Err(Error::InvalidCurve(format!("unknown curve role `{other}`"))),
        }
    }
}

/// One open polyline interface. Node 0 is the substrate contact node.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveState<T> {
    role: CurveRole,
    nodes: Vec<Vec2<T>>,
}

impl<T: Scalar> CurveState<T> {
    pub fn new(role: CurveRole, nodes: Vec<Vec2<T>>) -> Result<Self> {
        check_polyline(role.label(), &nodes)?;
        Ok(Self { role, nodes })
    }

    pub fn role(&self) -> CurveRole {
        self.role
    }

    pub fn nodes(&self) -> &[Vec2<T>] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Vec2<T>> {
        self.nodes
    }

    /// Number of segments `N`.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn contact(&self) -> Vec2<T> {
        self.nodes[0]
    }

    pub fn length(&self) -> T {
        polyline_length(&self.nodes)
    }
}

/// Checks the curve invariants: at least three nodes, contact node on the
/// substrate, no zero-length segment.
pub(crate) fn check_polyline<T: Scalar>(label: &str, nodes: &[Vec2<T>]) -> Result<()> {
    if nodes.len() < 3 {
        return Err(Error::InvalidCurve(format!("curve {label} has {} nodes, at least 3 required", nodes.len())));
    }
    if nodes[0].y != T::zero() {
        return Err(Error::InvalidCurve(format!("curve {label}: contact node y = {} (must be exactly 0)", nodes[0].y)));
    }
    if let Some(p) = nodes.iter().find(|p| !p.is_finite()) {
        return Err(Error::InvalidCurve(format!("curve {label}: non-finite node {p:?}")));
    }
    for (k, w) in nodes.windows(2).enumerate() {
        if w[0] == w[1] {
            return Err(Error::DegenerateSegment { curve: label.to_string(), segment: k + 1 });
        }
    }
    Ok(())
}

/// Length, unit tangent and outward unit normal of one segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentFrame<T> {
    pub length: T,
    pub tangent: Vec2<T>,
    pub normal: Vec2<T>,
}

impl<T: Scalar> SegmentFrame<T> {
    /// Frame of the segment `a -> b`; `None` when the segment has zero length.
    pub fn of(a: Vec2<T>, b: Vec2<T>) -> Option<Self> {
        let h = b - a;
        let length = h.norm();
        if length <= T::zero() || !length.is_finite() {
            return None;
        }
        let tangent = h.scale(length.recip());
        Some(Self { length, tangent, normal: -tangent.perp() })
    }
}

/// Frames for every segment of a node sequence, `k = 1..=N` stored at `k - 1`.
pub fn frames_of<T: Scalar>(label: &str, nodes: &[Vec2<T>]) -> Result<Vec<SegmentFrame<T>>> {
    nodes
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            SegmentFrame::of(w[0], w[1])
                .ok_or_else(|| Error::DegenerateSegment { curve: label.to_string(), segment: k + 1 })
        })
        .collect()
}

pub fn segment_frames<T: Scalar>(curve: &CurveState<T>) -> Result<Vec<SegmentFrame<T>>> {
    frames_of(curve.role.label(), &curve.nodes)
}

pub fn polyline_length<T: Scalar>(nodes: &[Vec2<T>]) -> T {
    nodes.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Values that can be paired pointwise inside [`lumped_inner`].
pub trait NodalValue<T>: Copy {
    fn pair(&self, other: &Self) -> T;
}

impl<T: Scalar> NodalValue<T> for T {
    fn pair(&self, other: &Self) -> T {
        *self * *other
    }
}

impl<T: Scalar> NodalValue<T> for Vec2<T> {
    fn pair(&self, other: &Self) -> T {
        self.dot(*other)
    }
}

/// Mass-lumped inner product `½ Σ_k |h_k| [(f·g)(q_k) + (f·g)(q_{k-1})]`.
pub fn lumped_inner_nodes<T: Scalar, V: NodalValue<T>>(nodes: &[Vec2<T>], f: &[V], g: &[V]) -> Result<T> {
    if f.len() != nodes.len() || g.len() != nodes.len() {
        return Err(Error::contract(format!(
            "lumped_inner: {} nodes but {} / {} values",
            nodes.len(),
            f.len(),
            g.len()
        )));
    }
    let half = T::lit(0.5);
    Ok((1..nodes.len())
        .map(|k| {
            let len = (nodes[k] - nodes[k - 1]).norm();
            half * len * (f[k].pair(&g[k]) + f[k - 1].pair(&g[k - 1]))
        })
        .sum())
}

pub fn lumped_inner<T: Scalar, V: NodalValue<T>>(curve: &CurveState<T>, f: &[V], g: &[V]) -> Result<T> {
    lumped_inner_nodes(&curve.nodes, f, g)
}

/// `½ Σ_k (x_k − x_{k−1})(y_k + y_{k−1})`, exact in any ring.
pub fn trapezoid_sum<T: Num + Clone>(nodes: &[Vec2<T>]) -> T {
    let mut acc = T::zero();
    for w in nodes.windows(2) {
        let dx = w[1].x.clone() - w[0].x.clone();
        let sy = w[1].y.clone() + w[0].y.clone();
        acc = acc + dx * sy;
    }
    let two = T::one() + T::one();
    acc / two
}

/// Signed shoelace area of a closed polygon (implicit closing edge);
/// positive for counter-clockwise vertex order.
pub fn shoelace_area<T: Num + Clone>(vertices: &[Vec2<T>]) -> T {
    let n = vertices.len();
    let mut acc = T::zero();
    for i in 0..n {
        let a = &vertices[i];
        let b = &vertices[(i + 1) % n];
        acc = acc + (a.x.clone() * b.y.clone() - b.x.clone() * a.y.clone());
    }
    let two = T::one() + T::one();
    acc / two
}

/// Mesh ratio of a single curve: longest over shortest segment.
pub fn curve_mesh_ratio<T: Scalar>(label: &str, nodes: &[Vec2<T>]) -> Result<T> {
    let frames = frames_of(label, nodes)?;
    let (lo, hi) = frames.iter().fold((T::infinity(), T::zero()), |(lo, hi), f| (lo.min(f.length), hi.max(f.length)));
    Ok(hi / lo)
}

/// Places `n_segments + 1` nodes at equal arc-length fractions along the
/// polyline. Both endpoints are copied exactly.
pub fn resample_polyline<T: Scalar>(nodes: &[Vec2<T>], n_segments: usize) -> Result<Vec<Vec2<T>>> {
    if n_segments < 2 {
        return Err(Error::contract(format!("resample needs at least 2 segments, got {n_segments}")));
    }
    if nodes.len() < 2 {
        return Err(Error::contract("resample needs a polyline with at least 2 nodes"));
    }
    let mut cumulative = Vec::with_capacity(nodes.len());
    let mut s = T::zero();
    cumulative.push(s);
    for w in nodes.windows(2) {
        s = s + (w[1] - w[0]).norm();
        cumulative.push(s);
    }
    let total = s;
    if total <= T::zero() {
        return Err(Error::contract("resample of a zero-length polyline"));
    }
    let last = nodes.len() - 1;
    let mut out = Vec::with_capacity(n_segments + 1);
    out.push(nodes[0]);
    let mut seg = 1;
    for k in 1..n_segments {
        let target = total * T::of_usize(k) / T::of_usize(n_segments);
        while seg < last && cumulative[seg] < target {
            seg += 1;
        }
        let (s0, s1) = (cumulative[seg - 1], cumulative[seg]);
        let t = if s1 > s0 { (target - s0) / (s1 - s0) } else { T::zero() };
        out.push(nodes[seg - 1].lerp(nodes[seg], t));
    }
    out.push(nodes[last]);
    Ok(out)
}

pub fn resample<T: Scalar>(curve: &CurveState<T>, n_segments: usize) -> Result<CurveState<T>> {
    let nodes = resample_polyline(&curve.nodes, n_segments)?;
    CurveState::new(curve.role, nodes)
}

/// The double-bubble network: three open curves sharing one junction node.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState<T> {
    /// Nodes `0..N_j` of each curve (junction excluded), indexed by role.
    legs: [Vec<Vec2<T>>; 3],
    junction: Vec2<T>,
    pub time: T,
}

impl<T: Scalar> NetworkState<T> {
    /// Builds a network from three full curves (junction included in each),
    /// ordered F1V, F2V, F1F2. The junction nodes must coincide exactly and
    /// the contact points must satisfy `x_A < x_C < x_B`.
    pub fn from_curves(curves: [Vec<Vec2<T>>; 3], time: T) -> Result<Self> {
        for (j, c) in curves.iter().enumerate() {
            check_polyline(CurveRole::ALL[j].label(), c)?;
        }
        let p = *curves[0].last().unwrap();
        if curves.iter().any(|c| *c.last().unwrap() != p) {
            return Err(Error::InvalidCurve("junction nodes of the three curves do not coincide".into()));
        }
        let [mut c1, mut c2, mut c3] = curves;
        c1.pop();
        c2.pop();
        c3.pop();
        let net = Self { legs: [c1, c2, c3], junction: p, time };
        let (xa, xb, xc) = (net.contact(0).x, net.contact(1).x, net.contact(2).x);
        if !(xa < xc && xc < xb) {
            return Err(Error::InvalidCurve(format!(
                "contact points must satisfy x_A < x_C < x_B, got {xa}, {xc}, {xb}"
            )));
        }
        Ok(net)
    }

    /// Builds a network from legs and a shared junction without the
    /// ordering check (used for evolved states).
    pub fn from_parts(legs: [Vec<Vec2<T>>; 3], junction: Vec2<T>, time: T) -> Result<Self> {
        for (j, leg) in legs.iter().enumerate() {
            let mut full = leg.clone();
            full.push(junction);
            check_polyline(CurveRole::ALL[j].label(), &full)?;
        }
        Ok(Self { legs, junction, time })
    }

    pub fn junction(&self) -> Vec2<T> {
        self.junction
    }

    /// Nodes of curve `j` excluding the junction.
    pub fn leg(&self, j: usize) -> &[Vec2<T>] {
        &self.legs[j]
    }

    /// Number of segments of curve `j`.
    pub fn segments(&self, j: usize) -> usize {
        self.legs[j].len()
    }

    pub fn contact(&self, j: usize) -> Vec2<T> {
        self.legs[j][0]
    }

    /// Node `k` of curve `j`, `k = N_j` being the junction.
    pub fn node(&self, j: usize, k: usize) -> Vec2<T> {
        if k == self.legs[j].len() {
            self.junction
        } else {
            self.legs[j][k]
        }
    }

    /// Full node list of curve `j`, junction included.
    pub fn curve_nodes(&self, j: usize) -> Vec<Vec2<T>> {
        let mut v = Vec::with_capacity(self.legs[j].len() + 1);
        v.extend_from_slice(&self.legs[j]);
        v.push(self.junction);
        v
    }

    pub fn curve(&self, role: CurveRole) -> CurveState<T> {
        CurveState { role, nodes: self.curve_nodes(role.index()) }
    }

    pub fn curves(&self) -> [CurveState<T>; 3] {
        CurveRole::ALL.map(|r| self.curve(r))
    }

    pub fn total_nodes(&self) -> usize {
        self.legs.iter().map(Vec::len).sum::<usize>() + 1
    }

    pub fn translated(&self, dx: T) -> Self {
        let shift = |p: &Vec2<T>| Vec2::new(p.x + dx, p.y);
        Self {
            legs: self.legs.clone().map(|l| l.iter().map(shift).collect()),
            junction: shift(&self.junction),
            time: self.time,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let curves: Vec<_> = CurveRole::ALL.iter().map(|r| (*r, self.curve_nodes(r.index()))).collect();
        let borrowed: Vec<_> = curves.iter().map(|(r, n)| (*r, n.as_slice())).collect();
        write_snapshot_csv(w, &borrowed)
    }
}

/// Signed enclosed area `A = T(Γ₂) − T(Γ₁)` where `T` is the trapezoid sum.
/// With curves oriented contact → junction this is minus the geometric area.
pub fn discrete_area<T: Scalar>(network: &NetworkState<T>) -> T {
    trapezoid_sum(&network.curve_nodes(1)) - trapezoid_sum(&network.curve_nodes(0))
}

/// Same formula on exact coordinates.
pub fn discrete_area_exact<T: Num + Clone>(gamma1: &[Vec2<T>], gamma2: &[Vec2<T>]) -> T {
    trapezoid_sum(gamma2) - trapezoid_sum(gamma1)
}

pub fn geometric_area<T: Scalar>(network: &NetworkState<T>) -> T {
    discrete_area(network).abs()
}

/// Maximum over the three curves of (longest segment / shortest segment).
pub fn mesh_ratio<T: Scalar>(network: &NetworkState<T>) -> Result<T> {
    let mut r = T::one();
    for role in CurveRole::ALL {
        r = r.max(curve_mesh_ratio(role.label(), &network.curve_nodes(role.index()))?);
    }
    Ok(r)
}

/// Writes curves as `curve,node,x,y` rows.
pub fn write_snapshot_csv<T: Scalar, W: Write>(mut w: W, curves: &[(CurveRole, &[Vec2<T>])]) -> std::io::Result<()> {
    writeln!(w, "curve,node,x,y")?;
    for (role, nodes) in curves {
        for (k, p) in nodes.iter().enumerate() {
            writeln!(w, "{},{},{},{}", role.label(), k, p.x, p.y)?;
        }
    }
    Ok(())
}

/// Parses the `curve,node,x,y` format back into per-role node lists, in the
/// order the curves first appear.
pub fn read_snapshot_csv<R: BufRead>(r: R) -> Result<Vec<(CurveRole, Vec<Vec2<f64>>)>> {
    let mut out: Vec<(CurveRole, Vec<Vec2<f64>>)> = Vec::new();
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != "curve,node,x,y" {
        return Err(Error::contract(format!("unexpected snapshot header `{header}`")));
    }
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = || Error::contract(format!("malformed snapshot row {}: `{line}`", lineno + 2));
        if fields.len() != 4 {
            return Err(bad());
        }
        let role: CurveRole = fields[0].parse()?;
        let node: usize = fields[1].parse().map_err(|_| bad())?;
        let x: f64 = fields[2].parse().map_err(|_| bad())?;
        let y: f64 = fields[3].parse().map_err(|_| bad())?;
        let start_new = match out.last() {
            Some((r, nodes)) => *r != role || node != nodes.len(),
            None => true,
        };
        if start_new {
            if node != 0 {
                return Err(bad());
            }
            out.push((role, Vec::new()));
        }
        out.last_mut().unwrap().1.push(Vec2::new(x, y));
    }
    Ok(out)
}
