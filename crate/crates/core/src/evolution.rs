//! Time marching, history recording, pinch-off surgery and equilibrium
//! detection.

use std::fmt;
use std::io::Write;

use crate::analysis::{discrete_energy, single_curve_energy};
use crate::anisotropy::{AnisotropySpec, CurveAnisotropy};
use crate::error::{Error, Result};
use crate::geometry::{
    check_polyline, curve_mesh_ratio, discrete_area, frames_of, mesh_ratio, polyline_length, resample_polyline,
    trapezoid_sum, write_snapshot_csv, CurveRole, NetworkState,
};
use crate::scalar::Scalar;
use crate::scheme::{solve_single_step, solve_step, Contact, MaterialParams, StepperConfig};
use crate::vec2::Vec2;

/// Minimum node count of a curve created by surgery.
pub const MIN_SURGERY_NODES: usize = 16;

/// One film/vapor curve with both ends on the substrate.
#[derive(Clone, Debug)]
pub struct SingleCurve<T> {
    /// Role of the curve this island was cut from; labels output only.
    pub role: CurveRole,
    pub nodes: Vec<Vec2<T>>,
    pub anisotropy: CurveAnisotropy<T>,
    /// Substrate constant of the film under this curve.
    pub sigma: T,
    pub eta: T,
}

impl<T: Scalar> SingleCurve<T> {
    pub fn new(role: CurveRole, nodes: Vec<Vec2<T>>, anisotropy: CurveAnisotropy<T>, sigma: T, eta: T) -> Result<Self> {
        check_polyline(role.label(), &nodes)?;
        let last = *nodes.last().unwrap();
        if last.y != T::zero() {
            return Err(Error::InvalidCurve(format!(
                "single-curve island: end node y = {} (must be exactly 0)",
                last.y
            )));
        }
        if last.x == nodes[0].x {
            return Err(Error::InvalidCurve("single-curve island: both contacts at the same x".into()));
        }
        Ok(Self { role, nodes, anisotropy, sigma, eta })
    }

    pub fn start_is_left(&self) -> bool {
        self.nodes[0].x < self.nodes.last().unwrap().x
    }

    /// `∂E/∂x` at the first and last node.
    pub fn contact_forces(&self) -> [T; 2] {
        let s = if self.start_is_left() { self.sigma } else { -self.sigma };
        [s, -s]
    }

    /// Left and right contact abscissae.
    pub fn contact_span(&self) -> (T, T) {
        let (a, b) = (self.nodes[0].x, self.nodes.last().unwrap().x);
        (a.min(b), a.max(b))
    }

    /// Enclosed area with the sign convention of [`discrete_area`]
    /// (negative for a film above the substrate).
    pub fn signed_area(&self) -> T {
        let t = trapezoid_sum(&self.nodes);
        if self.start_is_left() {
            -t
        } else {
            t
        }
    }
}

#[derive(Clone, Debug)]
pub enum Island<T> {
    Network(NetworkState<T>),
    Single(SingleCurve<T>),
}

impl<T: Scalar> Island<T> {
    pub fn signed_area(&self) -> T {
        match self {
            Island::Network(n) => discrete_area(n),
            Island::Single(s) => s.signed_area(),
        }
    }

    pub fn mesh_ratio(&self) -> Result<T> {
        match self {
            Island::Network(n) => mesh_ratio(n),
            Island::Single(s) => curve_mesh_ratio(s.role.label(), &s.nodes),
        }
    }

    pub fn energy(&self, spec: &AnisotropySpec<T>, params: &MaterialParams<T>) -> Result<T> {
        match self {
            Island::Network(n) => discrete_energy(n, spec, params),
            Island::Single(s) => single_curve_energy(s),
        }
    }

    /// Curves with their roles, junction included in every network curve.
    pub fn curves(&self) -> Vec<(CurveRole, Vec<Vec2<T>>)> {
        match self {
            Island::Network(n) => CurveRole::ALL.iter().map(|r| (*r, n.curve_nodes(r.index()))).collect(),
            Island::Single(s) => vec![(s.role, s.nodes.clone())],
        }
    }

    /// Every stored node once, in a fixed order.
    fn positions(&self) -> Vec<Vec2<T>> {
        match self {
            Island::Network(n) => {
                let mut v: Vec<_> = (0..3).flat_map(|j| n.leg(j).iter().copied()).collect();
                v.push(n.junction());
                v
            }
            Island::Single(s) => s.nodes.clone(),
        }
    }

    fn segments_and_length(&self) -> (usize, T) {
        self.curves().iter().fold((0, T::zero()), |(n, l), (_, c)| (n + c.len() - 1, l + polyline_length(c)))
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let curves = self.curves();
        let borrowed: Vec<_> = curves.iter().map(|(r, n)| (*r, n.as_slice())).collect();
        write_snapshot_csv(w, &borrowed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryRecord<T> {
    pub t: T,
    pub area_signed: T,
    pub area_abs: T,
    pub energy: T,
    pub energy_ratio: T,
    pub mesh_ratio: T,
    /// Contact abscissae of the network, or the outermost contacts (and
    /// `NaN` for `x_C`) once no network is left.
    pub x_a: T,
    pub x_b: T,
    pub x_c: T,
    pub picard_iters: usize,
    /// Largest node displacement during the step (infinite across surgery
    /// and for the initial record).
    pub max_displacement: T,
    pub mean_segment: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    Pinch,
    /// A fragment flat on the substrate was dropped.
    Vanish,
    Equilibrium,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::Pinch => "pinch",
            EventKind::Vanish => "vanish",
            EventKind::Equilibrium => "equilibrium",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunEvent<T> {
    pub t: T,
    pub kind: EventKind,
    pub location: Vec2<T>,
    pub island: usize,
}

#[derive(Clone, Debug, Default)]
pub struct RunHistory<T> {
    pub records: Vec<HistoryRecord<T>>,
    pub events: Vec<RunEvent<T>>,
}

impl<T: Scalar> RunHistory<T> {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,area_signed,area_abs,energy,energy_ratio,mesh_ratio,xA,xB,xC,picard_iters")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                r.t,
                r.area_signed,
                r.area_abs,
                r.energy,
                r.energy_ratio,
                r.mesh_ratio,
                r.x_a,
                r.x_b,
                r.x_c,
                r.picard_iters
            )?;
        }
        Ok(())
    }

    pub fn write_events_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,kind,x,y,island_id")?;
        for e in &self.events {
            writeln!(w, "{},{},{},{},{}", e.t, e.kind, e.location.x, e.location.y, e.island)?;
        }
        Ok(())
    }

    /// Largest `|A(t) − A(0)| / |A(0)|` over the records.
    pub fn max_relative_area_drift(&self) -> T {
        let a0 = match self.records.first() {
            Some(r) => r.area_signed,
            None => return T::zero(),
        };
        self.records.iter().map(|r| ((r.area_signed - a0) / a0).abs()).fold(T::zero(), T::max)
    }

    /// Whether `E` never increases by more than `rel · |E|` between records.
    pub fn energy_non_increasing(&self, rel: T) -> bool {
        self.records.windows(2).all(|w| w[1].energy <= w[0].energy + rel * w[0].energy.abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumCriterion<T> {
    pub window: usize,
    pub eps: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions<T> {
    pub t_max: T,
    /// Snapshot cadence in steps; 0 keeps only the initial, final and
    /// event snapshots.
    pub snapshot_every: usize,
    /// Pinch threshold; `None` uses `1e-3 ×` the initial maximum height.
    pub delta_pinch: Option<T>,
    pub equilibrium: Option<EquilibriumCriterion<T>>,
}

impl<T: Scalar> RunOptions<T> {
    pub fn until(t_max: T) -> Self {
        Self { t_max, snapshot_every: 0, delta_pinch: None, equilibrium: None }
    }
}

#[derive(Clone, Debug)]
pub struct Snapshot<T> {
    pub step: usize,
    pub t: T,
    pub islands: Vec<(usize, Island<T>)>,
}

/// Stepping state of one simulation.
pub struct Simulation<T: Scalar> {
    islands: Vec<(usize, Island<T>)>,
    spec: AnisotropySpec<T>,
    params: MaterialParams<T>,
    cfg: StepperConfig<T>,
    opts: RunOptions<T>,
    delta_pinch: T,
    history: RunHistory<T>,
    t0: T,
    step: usize,
    total_steps: usize,
    next_id: usize,
    equilibrium: bool,
}

impl<T: Scalar> Simulation<T> {
    pub fn new(
        initial: NetworkState<T>,
        spec: AnisotropySpec<T>,
        params: MaterialParams<T>,
        cfg: StepperConfig<T>,
        opts: RunOptions<T>,
    ) -> Result<Self> {
        cfg.validate()?;
        params.validate()?;
        if !(opts.t_max >= T::zero()) || !opts.t_max.is_finite() {
            return Err(Error::Config(vec![format!("run.t_max: must be finite and >= 0, got {}", opts.t_max)]));
        }
        if let Some(eq) = opts.equilibrium {
            if eq.window < 2 || !(eq.eps > T::zero()) {
                return Err(Error::Config(vec!["run.eq_window must be >= 2 and run.eq_eps > 0".into()]));
            }
        }
        let height = (0..3).flat_map(|j| initial.curve_nodes(j)).map(|p| p.y).fold(T::zero(), T::max);
        let delta_pinch = opts.delta_pinch.unwrap_or(T::lit(1e-3) * height);
        if !(delta_pinch > T::zero()) {
            return Err(Error::Config(vec![format!("run.delta_pinch: must be > 0, got {delta_pinch}")]));
        }
        let ratio = opts.t_max / cfg.dt;
        let total_steps = (ratio - T::lit(1e-9)).ceil().max(T::zero()).to_usize().unwrap_or(0);
        let t0 = initial.time;
        let mut sim = Self {
            islands: vec![(0, Island::Network(initial))],
            spec,
            params,
            cfg,
            opts,
            delta_pinch,
            history: RunHistory::default(),
            t0,
            step: 0,
            total_steps,
            next_id: 1,
            equilibrium: false,
        };
        let rec = sim.record(T::infinity(), 0)?;
        sim.history.records.push(rec);
        Ok(sim)
    }

    pub fn time(&self) -> T {
        self.t0 + self.cfg.dt * T::of_usize(self.step)
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn islands(&self) -> &[(usize, Island<T>)] {
        &self.islands
    }

    pub fn history(&self) -> &RunHistory<T> {
        &self.history
    }

    pub fn into_history(self) -> RunHistory<T> {
        self.history
    }

    pub fn delta_pinch(&self) -> T {
        self.delta_pinch
    }

    pub fn is_finished(&self) -> bool {
        self.step >= self.total_steps || self.equilibrium || self.islands.is_empty()
    }

    pub fn reached_equilibrium(&self) -> bool {
        self.equilibrium
    }

    pub fn snapshot(&self) -> Snapshot<T> {
        Snapshot { step: self.step, t: self.time(), islands: self.islands.clone() }
    }

    fn record(&self, max_displacement: T, picard_iters: usize) -> Result<HistoryRecord<T>> {
        let mut area = T::zero();
        let mut energy = T::zero();
        let mut ratio = T::one();
        let mut segs = 0;
        let mut length = T::zero();
        let (mut lo, mut hi, mut xc) = (T::infinity(), T::neg_infinity(), T::nan());
        let mut network_contacts = None;
        for (_, island) in &self.islands {
            area = area + island.signed_area();
            energy = energy + island.energy(&self.spec, &self.params)?;
            ratio = ratio.max(island.mesh_ratio()?);
            let (n, l) = island.segments_and_length();
            segs += n;
            length = length + l;
            match island {
                Island::Network(net) => network_contacts = Some([0, 1, 2].map(|j| net.contact(j).x)),
                Island::Single(s) => {
                    let (a, b) = s.contact_span();
                    lo = lo.min(a);
                    hi = hi.max(b);
                }
            }
        }
        if let Some([a, b, c]) = network_contacts {
            lo = a;
            hi = b;
            xc = c;
        }
        let e0 = self.history.records.first().map(|r| r.energy).unwrap_or(energy);
        Ok(HistoryRecord {
            t: self.time(),
            area_signed: area,
            area_abs: area.abs(),
            energy,
            energy_ratio: energy / e0,
            mesh_ratio: ratio,
            x_a: lo,
            x_b: hi,
            x_c: xc,
            picard_iters,
            max_displacement,
            mean_segment: if segs > 0 { length / T::of_usize(segs) } else { T::zero() },
        })
    }

    fn step_island(&self, island: &Island<T>) -> Result<(Island<T>, usize)> {
        match island {
            Island::Network(net) => {
                let s = solve_step(net, &self.spec, &self.params, &self.cfg)?;
                let mut network = s.network;
                network.time = self.t0 + self.cfg.dt * T::of_usize(self.step + 1);
                Ok((Island::Network(network), s.picard_iters))
            }
            Island::Single(c) => {
                let f = c.contact_forces();
                let n = c.nodes.len() - 1;
                let contacts =
                    [Contact { node: 0, eta: c.eta, force: f[0] }, Contact { node: n, eta: c.eta, force: f[1] }];
                let s = solve_single_step(c.role.label(), &c.nodes, &c.anisotropy, contacts, &self.cfg)?;
                let next = SingleCurve { nodes: s.nodes, ..c.clone() };
                frames_of(next.role.label(), &next.nodes)?;
                Ok((Island::Single(next), s.picard_iters))
            }
        }
    }

    /// Advances every island by one time step, then performs pinch-off
    /// surgery and the equilibrium check. Returns the events of this step.
    pub fn advance(&mut self) -> Result<Vec<RunEvent<T>>> {
        if self.is_finished() {
            return Ok(Vec::new());
        }
        let t_old = self.time();
        let mut next = Vec::with_capacity(self.islands.len());
        let mut iters = 0;
        let mut disp = T::zero();
        for (id, island) in &self.islands {
            let (stepped, it) = self.step_island(island).map_err(|e| Error::Step {
                time: t_old.as_f64(),
                island: *id,
                source: Box::new(e),
            })?;
            iters = iters.max(it);
            for (a, b) in island.positions().iter().zip(stepped.positions()) {
                disp = disp.max((b - *a).norm());
            }
            next.push((*id, stepped));
        }
        self.step += 1;
        let t = self.time();

        let mut events = Vec::new();
        let mut after = Vec::with_capacity(next.len());
        for (id, island) in next {
            let sites = detect_pinch(&island, self.delta_pinch);
            if sites.is_empty() {
                after.push((id, island));
                continue;
            }
            for s in &sites {
                events.push(RunEvent { t, kind: EventKind::Pinch, location: s.location(), island: id });
            }
            let location = sites[0].location();
            let parts = split_at_pinch(&island, &sites, &self.spec, &self.params).map_err(|e| Error::Step {
                time: t.as_f64(),
                island: id,
                source: Box::new(e),
            })?;
            if parts.is_empty() {
                events.push(RunEvent { t, kind: EventKind::Vanish, location, island: id });
            }
            for (k, part) in parts.into_iter().enumerate() {
                let pid = if k == 0 {
                    id
                } else {
                    self.next_id += 1;
                    self.next_id - 1
                };
                after.push((pid, part));
            }
            disp = T::infinity();
        }
        self.islands = after;

        let rec = self.record(disp, iters)?;
        self.history.records.push(rec);
        if let Some(eq) = self.opts.equilibrium {
            if detect_equilibrium(&self.history, eq.window, eq.eps) {
                self.equilibrium = true;
                events.push(RunEvent {
                    t,
                    kind: EventKind::Equilibrium,
                    location: Vec2::new(T::nan(), T::nan()),
                    island: usize::MAX,
                });
            }
        }
        self.history.events.extend(events.iter().copied());
        Ok(events)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput<T> {
    pub history: RunHistory<T>,
    pub snapshots: Vec<Snapshot<T>>,
    pub reached_equilibrium: bool,
}

/// Runs to `opts.t_max` (or equilibrium), keeping snapshots at the initial
/// state, every `opts.snapshot_every` steps, at every event and at the end.
pub fn run<T: Scalar>(
    initial: NetworkState<T>,
    spec: AnisotropySpec<T>,
    params: MaterialParams<T>,
    cfg: StepperConfig<T>,
    opts: RunOptions<T>,
) -> Result<RunOutput<T>> {
    let mut snapshots = Vec::new();
    let history = run_observed(initial, spec, params, cfg, opts, |sim, events| {
        let due = opts.snapshot_every > 0 && sim.step_index() % opts.snapshot_every == 0;
        if sim.step_index() == 0 || due || !events.is_empty() || sim.is_finished() {
            snapshots.push(sim.snapshot());
        }
    })?;
    let reached_equilibrium = history.events.iter().any(|e| e.kind == EventKind::Equilibrium);
    Ok(RunOutput { history, snapshots, reached_equilibrium })
}

/// Runs like [`run`], calling `observe` after the initial state and after
/// every step with that step's events.
pub fn run_observed<T: Scalar, F>(
    initial: NetworkState<T>,
    spec: AnisotropySpec<T>,
    params: MaterialParams<T>,
    cfg: StepperConfig<T>,
    opts: RunOptions<T>,
    mut observe: F,
) -> Result<RunHistory<T>>
where
    F: FnMut(&Simulation<T>, &[RunEvent<T>]),
{
    let mut sim = Simulation::new(initial, spec, params, cfg, opts)?;
    observe(&sim, &[]);
    while !sim.is_finished() {
        let events = sim.advance()?;
        observe(&sim, &events);
    }
    Ok(sim.into_history())
}

/// Contiguous run of interior nodes touching the substrate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PinchSite<T> {
    /// Nodes `first..=last` of curve `curve` (island-local index).
    Curve { curve: usize, first: usize, last: usize, location: Vec2<T> },
    /// The triple junction itself.
    Junction { location: Vec2<T> },
}

impl<T: Scalar> PinchSite<T> {
    pub fn location(&self) -> Vec2<T> {
        match self {
            PinchSite::Curve { location, .. } | PinchSite::Junction { location } => *location,
        }
    }
}

/// Runs of low interior nodes. Node 0 is a contact, and so is the last
/// node when `end_is_contact`; a run reaching a contact is part of the
/// contact region, not a touch-down.
fn touching_runs<T: Scalar>(curve: usize, nodes: &[Vec2<T>], end_is_contact: bool, delta: T) -> Vec<PinchSite<T>> {
    let mut out = Vec::new();
    let end = nodes.len() - 1;
    let mut k = 1;
    while k < end {
        if nodes[k].y <= delta {
            let first = k;
            while k + 1 < end && nodes[k + 1].y <= delta {
                k += 1;
            }
            if first == 1 || (end_is_contact && k + 1 == end) {
                k += 1;
                continue;
            }
            let lowest = (first..=k).min_by(|a, b| nodes[*a].y.partial_cmp(&nodes[*b].y).unwrap()).unwrap();
            out.push(PinchSite::Curve { curve, first, last: k, location: nodes[lowest] });
        }
        k += 1;
    }
    out
}

/// Interior nodes with `y ≤ delta`, grouped into contiguous sites. Contact
/// nodes and runs attached to them never count; the junction forms a site
/// of its own.
pub fn detect_pinch<T: Scalar>(island: &Island<T>, delta: T) -> Vec<PinchSite<T>> {
    match island {
        Island::Network(net) => {
            let mut sites = Vec::new();
            if net.junction().y <= delta {
                sites.push(PinchSite::Junction { location: net.junction() });
            }
            for j in 0..3 {
                let nodes = net.curve_nodes(j);
                sites.extend(touching_runs(j, &nodes, false, delta));
            }
            sites
        }
        Island::Single(s) => touching_runs(0, &s.nodes, true, delta),
    }
}

/// Cuts a chain at its touching runs. Node 0 is a contact; the last node is
/// a contact when `end_is_contact`, otherwise it stays attached and the
/// final piece always survives. Cut ends are snapped to `y = 0`.
fn cut_chain<T: Scalar>(nodes: &[Vec2<T>], touching: &[bool], end_is_contact: bool) -> Vec<(Vec<Vec2<T>>, bool)> {
    let n = nodes.len() - 1;
    let mut runs = Vec::new();
    let mut k = 1;
    while k < n {
        if touching[k] {
            let first = k;
            while k + 1 < n && touching[k + 1] {
                k += 1;
            }
            runs.push((first, k));
        }
        k += 1;
    }
    let piece = |a: usize, b: usize| -> Vec<Vec2<T>> {
        let mut p = nodes[a..=b].to_vec();
        p[0].y = T::zero();
        if b < n || end_is_contact {
            p.last_mut().unwrap().y = T::zero();
        }
        p
    };
    let mut out = Vec::new();
    let mut start = 0;
    for (first, last) in runs {
        if first >= start + 2 {
            out.push((piece(start, first), false));
        }
        start = last;
    }
    if !end_is_contact || n >= start + 2 {
        out.push((piece(start, n), true));
    }
    out
}

/// Uniform arc-length resampling that keeps both end nodes and restores the
/// trapezoid area by scaling interior heights.
fn resample_preserving_area<T: Scalar>(nodes: &[Vec2<T>], density: T) -> Result<Vec<Vec2<T>>> {
    let target = trapezoid_sum(nodes);
    let len = polyline_length(nodes);
    let segments = (len * density).round().to_usize().unwrap_or(0).max(MIN_SURGERY_NODES - 1);
    let mut out = resample_polyline(nodes, segments)?;
    let n = out.len() - 1;
    let half = T::lit(0.5);
    let mut interior = T::zero();
    for k in 1..n {
        interior = interior + half * (out[k + 1].x - out[k - 1].x) * out[k].y;
    }
    let ends = half * (out[1].x - out[0].x) * out[0].y + half * (out[n].x - out[n - 1].x) * out[n].y;
    if interior.abs() > T::epsilon() * len * len {
        let s = (target - ends) / interior;
        if (s - T::one()).abs() < T::lit(0.1) {
            for p in &mut out[1..n] {
                p.y = p.y * s;
            }
        }
    }
    Ok(out)
}

fn surgery<E: fmt::Display>(e: E) -> Error {
    Error::Surgery(e.to_string())
}

/// Cuts an island at the given pinch sites and resamples every cut curve.
///
/// A network whose junction touches the substrate falls apart into two
/// single-curve chains, `Γ₁` followed by `Γ₃` and `Γ₂` followed by `Γ₃`,
/// each carrying the material of its film. Otherwise touching runs on `Γ₁`
/// or `Γ₂` shed single-curve islands and move that curve's contact point.
/// Fragments lying flat on the substrate are dropped.
pub fn split_at_pinch<T: Scalar>(
    island: &Island<T>,
    sites: &[PinchSite<T>],
    spec: &AnisotropySpec<T>,
    params: &MaterialParams<T>,
) -> Result<Vec<Island<T>>> {
    if sites.is_empty() {
        return Err(Error::contract("split_at_pinch needs at least one pinch site"));
    }
    let (segs, len) = island.segments_and_length();
    let density = T::of_usize(segs) / len;
    let sigma = [params.sigma1, params.sigma2];
    let single = |role: CurveRole, nodes: Vec<Vec2<T>>| -> Result<Island<T>> {
        let j = role.index().min(1);
        let nodes = resample_preserving_area(&nodes, density)?;
        SingleCurve::new(role, nodes, spec.curve(j).clone(), sigma[j], params.eta[j])
            .map(Island::Single)
            .map_err(surgery)
    };

    match island {
        Island::Single(s) => {
            let mut touching = vec![false; s.nodes.len()];
            mark(&mut touching, sites, 0);
            let mut out = Vec::new();
            for (piece, _) in cut_chain(&s.nodes, &touching, true) {
                let nodes = resample_preserving_area(&piece, density)?;
                let c = SingleCurve::new(s.role, nodes, s.anisotropy.clone(), s.sigma, s.eta).map_err(surgery)?;
                out.push(Island::Single(c));
            }
            Ok(out)
        }
        Island::Network(net) => {
            let mut touching: Vec<Vec<bool>> = (0..3).map(|j| vec![false; net.segments(j) + 1]).collect();
            for (j, t) in touching.iter_mut().enumerate() {
                mark(t, sites, j);
            }
            let junction = sites.iter().any(|s| matches!(s, PinchSite::Junction { .. }));
            if junction {
                let mut out = Vec::new();
                for (j, role) in [(0, CurveRole::F1V), (1, CurveRole::F2V)] {
                    let mut chain = net.curve_nodes(j);
                    let mut flags = touching[j].clone();
                    *flags.last_mut().unwrap() = true;
                    let stem = net.curve_nodes(2);
                    // the stem goes down with the junction
                    for k in (0..stem.len() - 1).rev() {
                        chain.push(stem[k]);
                        flags.push(k > 0);
                    }
                    for (piece, _) in cut_chain(&chain, &flags, true) {
                        out.push(single(role, piece)?);
                    }
                }
                return Ok(out);
            }

            let mut legs: Vec<Vec<Vec2<T>>> = (0..3).map(|j| net.curve_nodes(j)).collect();
            let mut out = Vec::new();
            for j in 0..3 {
                if !touching[j].iter().any(|t| *t) {
                    continue;
                }
                let pieces = cut_chain(&legs[j], &touching[j], false);
                for (piece, tail) in pieces {
                    if tail {
                        legs[j] = resample_preserving_area(&piece, density)?;
                    } else if j == 2 {
                        return Err(Error::Surgery(
                            "the internal interface touched the substrate away from its contact point".into(),
                        ));
                    } else {
                        out.push(single(CurveRole::ALL[j], piece)?);
                    }
                }
            }
            let [l1, l2, l3]: [Vec<Vec2<T>>; 3] = legs.try_into().unwrap();
            let network = NetworkState::from_curves([l1, l2, l3], net.time).map_err(surgery)?;
            out.insert(0, Island::Network(network));
            Ok(out)
        }
    }
}

fn mark<T>(flags: &mut [bool], sites: &[PinchSite<T>], curve: usize) {
    for s in sites {
        if let PinchSite::Curve { curve: c, first, last, .. } = s {
            if *c == curve {
                for f in &mut flags[*first..=*last] {
                    *f = true;
                }
            }
        }
    }
}

/// Whether, over the last `window` records, every relative energy change is
/// below `eps` and every step moved nodes by less than `eps` times the mean
/// segment length.
pub fn detect_equilibrium<T: Scalar>(history: &RunHistory<T>, window: usize, eps: T) -> bool {
    let r = &history.records;
    if window < 2 || r.len() < window {
        return false;
    }
    r[r.len() - window..].windows(2).all(|w| {
        let de = ((w[1].energy - w[0].energy) / w[0].energy).abs();
        de < eps && w[1].max_displacement < eps * w[1].mean_segment
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geometric_area;
    use crate::scheme::SchemeKind;

    fn v(x: f64, y: f64) -> Vec2<f64> {
        Vec2::new(x, y)
    }

    fn ellipse(n: usize) -> NetworkState<f64> {
        let pi = std::f64::consts::PI;
        let arc = |left: bool| -> Vec<Vec2<f64>> {
            (0..=n)
                .map(|k| {
                    let r = k as f64 / n as f64;
                    let phi = if left { pi - pi * r / 2.0 } else { pi * r / 2.0 };
                    match k {
                        0 => v(4.0 + 2.0 * phi.cos(), 0.0),
                        _ if k == n => v(4.0, 1.0),
                        _ => v(4.0 + 2.0 * phi.cos(), phi.sin()),
                    }
                })
                .collect()
        };
        let stem = (0..=n).map(|k| v(4.0, k as f64 / n as f64)).collect();
        NetworkState::from_curves([arc(true), arc(false), stem], 0.0).unwrap()
    }

    fn record(energy: f64, disp: f64) -> HistoryRecord<f64> {
        HistoryRecord {
            t: 0.0,
            area_signed: -1.0,
            area_abs: 1.0,
            energy,
            energy_ratio: 1.0,
            mesh_ratio: 1.0,
            x_a: 0.0,
            x_b: 1.0,
            x_c: 0.5,
            picard_iters: 1,
            max_displacement: disp,
            mean_segment: 0.1,
        }
    }

    #[test]
    fn equilibrium_detection() {
        let constant = RunHistory { records: vec![record(2.0, 0.0); 6], events: vec![] };
        assert!(detect_equilibrium(&constant, 5, 1e-9));
        assert!(!detect_equilibrium(&constant, 7, 1e-9));
        let decaying =
            RunHistory { records: (0..6).map(|k| record(2.0 - 0.1 * k as f64, 0.05)).collect(), events: vec![] };
        assert!(!detect_equilibrium(&decaying, 5, 1e-9));
    }

    #[test]
    fn no_pinch_on_initial_ellipse() {
        let net = ellipse(128);
        assert!(detect_pinch(&Island::Network(net), 1e-3).is_empty());
    }

    #[test]
    fn one_low_node_is_one_event() {
        let nodes = vec![v(0.0, 0.0), v(1.0, 1.0), v(2.0, 1e-5), v(3.0, 1.0), v(4.0, 0.0)];
        let c = SingleCurve::new(CurveRole::F1V, nodes, CurveAnisotropy::isotropic(), 0.5, 10.0).unwrap();
        let sites = detect_pinch(&Island::Single(c), 1e-3);
        assert_eq!(sites, vec![PinchSite::Curve { curve: 0, first: 2, last: 2, location: v(2.0, 1e-5) }]);
    }

    fn w_shape(depth: f64) -> Vec<Vec2<f64>> {
        // two bumps joined by a valley reaching down to `depth`
        let mut nodes = Vec::new();
        let n = 40;
        for k in 0..=n {
            let x = 4.0 * k as f64 / n as f64;
            let y = if k == 0 || k == n {
                0.0
            } else if k == n / 2 {
                depth
            } else {
                (std::f64::consts::PI * x / 2.0).sin().abs() * 0.5
            };
            nodes.push(v(x, y));
        }
        nodes
    }

    #[test]
    fn single_island_splits_in_two() {
        let delta = 1e-3;
        let nodes = w_shape(1e-4);
        let before = trapezoid_sum(&nodes);
        let c = SingleCurve::new(CurveRole::F1V, nodes, CurveAnisotropy::isotropic(), 0.5, 10.0).unwrap();
        let island = Island::Single(c);
        let sites = detect_pinch(&island, delta);
        assert_eq!(sites.len(), 1);
        let spec = AnisotropySpec::isotropic();
        let params = MaterialParams::symmetric(0.5, 10.0).unwrap();
        let parts = split_at_pinch(&island, &sites, &spec, &params).unwrap();
        assert_eq!(parts.len(), 2);
        let mut after = 0.0;
        for p in &parts {
            let Island::Single(s) = p else { panic!("expected single-curve islands") };
            assert_eq!(s.nodes[0].y, 0.0);
            assert_eq!(s.nodes.last().unwrap().y, 0.0);
            assert!(s.nodes.len() >= MIN_SURGERY_NODES);
            after += trapezoid_sum(&s.nodes);
        }
        // sliver: the snapped node moved by ≤ δ over a local width of two segments
        let width = 2.0 * 0.1;
        assert!((after - before).abs() <= 2.0 * delta * width, "{before} {after}");
    }

    #[test]
    fn junction_pinch_gives_two_single_islands() {
        // flat double bubble whose junction has come down onto the substrate
        let n = 20;
        let low = 5e-5;
        let bump = |x0: f64, x1: f64| -> Vec<Vec2<f64>> {
            (0..=n)
                .map(|k| {
                    let s = k as f64 / n as f64;
                    let x = x0 + (x1 - x0) * s;
                    let y = if k == 0 {
                        0.0
                    } else if k == n {
                        low
                    } else {
                        (std::f64::consts::PI * s).sin() * 0.4 + low * s
                    };
                    v(x, y)
                })
                .collect()
        };
        let g1 = bump(-2.0, 0.0);
        let g2 = bump(2.0, 0.0);
        let g3 = vec![v(0.0, 0.0), v(0.0, low / 2.0), v(0.0, low)];
        let net = NetworkState::from_curves([g1, g2, g3], 0.0).unwrap();
        let before = geometric_area(&net);
        let island = Island::Network(net);
        let sites = detect_pinch(&island, 1e-3);
        assert!(sites.iter().any(|s| matches!(s, PinchSite::Junction { .. })));
        let spec = AnisotropySpec::isotropic();
        let params = MaterialParams::new(0.3, 0.6, [10.0, 20.0, 30.0]).unwrap();
        let parts = split_at_pinch(&island, &sites, &spec, &params).unwrap();
        assert_eq!(parts.len(), 2);
        let (Island::Single(a), Island::Single(b)) = (&parts[0], &parts[1]) else { panic!() };
        assert!(a.start_is_left() && !b.start_is_left());
        assert_eq!((a.sigma, a.eta), (0.3, 10.0));
        assert_eq!((b.sigma, b.eta), (0.6, 20.0));
        let after = a.signed_area().abs() + b.signed_area().abs();
        let width = 2.0 * 0.1;
        assert!((after - before).abs() <= 2.0 * 1e-3 * width, "{before} {after}");
    }

    #[test]
    fn zero_duration_run_has_initial_record_only() {
        let out = run(
            ellipse(16),
            AnisotropySpec::isotropic(),
            MaterialParams::symmetric(-0.7, 100.0).unwrap(),
            StepperConfig::new(0.01, SchemeKind::SP),
            RunOptions::until(0.0),
        )
        .unwrap();
        assert_eq!(out.history.records.len(), 1);
        assert_eq!(out.snapshots.len(), 1);
    }

    #[test]
    fn short_run_records_every_step() {
        let opts = RunOptions { snapshot_every: 2, ..RunOptions::until(0.1) };
        let out = run(
            ellipse(16),
            AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 1.0 / 6.0)).unwrap(),
            MaterialParams::symmetric(-0.7, 100.0).unwrap(),
            StepperConfig::new(0.02, SchemeKind::SP),
            opts,
        )
        .unwrap();
        let h = &out.history;
        assert_eq!(h.records.len(), 6);
        assert!(h.records.windows(2).all(|w| w[1].t > w[0].t));
        assert!((h.records[5].t - 0.1).abs() < 1e-15);
        assert!(h.energy_non_increasing(1e-12));
        assert!(h.max_relative_area_drift() < 1e-8);
        assert_eq!(out.snapshots.iter().map(|s| s.step).collect::<Vec<_>>(), vec![0, 2, 4, 5]);
        let mut csv = Vec::new();
        h.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,area_signed,area_abs,energy,energy_ratio,mesh_ratio,xA,xB,xC,picard_iters\n"));
        assert_eq!(text.lines().count(), 7);
    }
}
