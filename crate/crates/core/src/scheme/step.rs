use crate::anisotropy::{AnisotropySpec, CurveAnisotropy};
use crate::error::{Error, Result};
use crate::geometry::{frames_of, CurveState, NetworkState};
use crate::scalar::Scalar;
use crate::vec2::{Mat2, Vec2};

use super::dofs::{Component, DofMap, Expansion, Topology};
use super::linalg::BorderedSystem;
use super::{MaterialParams, SchemeKind, StepperConfig};

/// Half bandwidth of a curve block: node-interleaved `x, y, μ` couple only
/// to the neighbouring nodes.
const HALF_BAND: usize = 5;

/// Relaxed contact condition acting on the `x` unknown of one end node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contact<T> {
    pub node: usize,
    pub eta: T,
    /// Substrate force `∂E/∂x` at this contact.
    pub force: T,
}

/// Time-weighted normal per segment, scaled by the old segment length
/// only: `−(h^m + h^{m+1})^⊥ / (2|h^m|)`. Not a unit vector in general.
pub fn half_step_normal<T: Scalar>(curve_m: &CurveState<T>, curve_next: &CurveState<T>) -> Result<Vec<Vec2<T>>> {
    let (old, new) = (curve_m.nodes(), curve_next.nodes());
    if old.len() != new.len() {
        return Err(Error::contract(format!("half_step_normal: {} old nodes but {} new nodes", old.len(), new.len())));
    }
    let frames = frames_of(curve_m.role().label(), old)?;
    Ok(frames
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let h = old[i + 1] - old[i];
            let g = new[i + 1] - new[i];
            -(h + g).perp().scale(T::lit(0.5) / f.length)
        })
        .collect())
}

struct PreCurve<T> {
    old: Vec<Vec2<T>>,
    inv_len: Vec<T>,
    /// `Z_K(n^m) / |h^m|` per segment.
    z_scaled: Vec<Mat2<T>>,
    contacts: Vec<Contact<T>>,
    expansions: Vec<[Expansion; 3]>,
}

/// Everything about one step that does not depend on the Picard iterate:
/// the dof layout, old-mesh lengths and the stabilized energy matrices.
pub struct StepOperator<T> {
    map: DofMap,
    curves: Vec<PreCurve<T>>,
    dt: T,
}

/// Positions and `μ` per curve, Picard iterations, final residual.
pub type Iterate<T> = (Vec<Vec<Vec2<T>>>, Vec<Vec<T>>, usize, T);

impl<T: Scalar> StepOperator<T> {
    pub fn new(
        topology: Topology,
        old: Vec<Vec<Vec2<T>>>,
        labels: &[&str],
        anisotropy: &[&CurveAnisotropy<T>],
        contacts: Vec<Vec<Contact<T>>>,
        dt: T,
    ) -> Result<Self> {
        let map = DofMap::new(topology);
        let mut curves = Vec::with_capacity(old.len());
        for (j, ((nodes, aniso), contacts)) in old.into_iter().zip(anisotropy).zip(contacts).enumerate() {
            assert_eq!(nodes.len(), topology.segments(j) + 1, "node count does not match topology");
            let frames = frames_of(labels[j], &nodes)?;
            let inv_len: Vec<T> = frames.iter().map(|f| f.length.recip()).collect();
            let z_scaled = frames.iter().zip(&inv_len).map(|(f, il)| aniso.zk_unchecked(f.normal).scale(*il)).collect();
            let expansions = (0..nodes.len()).map(|k| Component::ALL.map(|c| map.expand(j, k, c))).collect();
            curves.push(PreCurve { old: nodes, inv_len, z_scaled, contacts, expansions });
        }
        Ok(Self { map, curves, dt })
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.map
    }

    /// Assembles the linear system whose normal weights come from
    /// `(X^m, guess)`. Passing `guess = X^m` gives the old-mesh normal.
    pub fn assemble(&self, guess: &[Vec<Vec2<T>>]) -> BorderedSystem<T> {
        let sizes: Vec<usize> = self.map.blocks().iter().map(|b| b.len()).collect();
        let mut sys = BorderedSystem::new(&sizes, self.map.border().len(), HALF_BAND, HALF_BAND);
        let half = T::lit(0.5);
        let dt = self.dt;

        fn put<T: Scalar>(sys: &mut BorderedSystem<T>, r: &Expansion, c: &Expansion, v: T) {
            for &(i, ci) in r.terms() {
                for &(j, cj) in c.terms() {
                    let s = if ci == cj { v } else { -v };
                    sys.add(i, j, s);
                }
            }
        }
        fn put_rhs<T: Scalar>(sys: &mut BorderedSystem<T>, r: &Expansion, v: T) {
            for &(i, ci) in r.terms() {
                sys.rhs[i] = if ci > 0 { sys.rhs[i] + v } else { sys.rhs[i] - v };
            }
        }

        for (pc, g) in self.curves.iter().zip(guess) {
            let ex = &pc.expansions;
            for k in 1..pc.old.len() {
                let (a, b) = (k - 1, k);
                let h = pc.old[b] - pc.old[a];
                let w = -(h + (g[b] - g[a])).perp().scale(half);
                for node in [a, b] {
                    let [ex_x, ex_y, ex_mu] = &ex[node];
                    let wx = half * w.x;
                    let wy = half * w.y;
                    put(&mut sys, ex_mu, ex_x, wx);
                    put(&mut sys, ex_x, ex_mu, wx);
                    put(&mut sys, ex_mu, ex_y, wy);
                    put(&mut sys, ex_y, ex_mu, wy);
                    put_rhs(&mut sys, ex_mu, half * w.dot(pc.old[node]));
                }
                let l = dt * pc.inv_len[k - 1];
                put(&mut sys, &ex[a][2], &ex[a][2], l);
                put(&mut sys, &ex[b][2], &ex[b][2], l);
                put(&mut sys, &ex[a][2], &ex[b][2], -l);
                put(&mut sys, &ex[b][2], &ex[a][2], -l);
                let z = &pc.z_scaled[k - 1];
                for p in 0..2 {
                    for q in 0..2 {
                        let v = z.get(p, q);
                        put(&mut sys, &ex[a][p], &ex[a][q], -v);
                        put(&mut sys, &ex[b][p], &ex[b][q], -v);
                        put(&mut sys, &ex[a][p], &ex[b][q], v);
                        put(&mut sys, &ex[b][p], &ex[a][q], v);
                    }
                }
            }
            for c in &pc.contacts {
                let coef = (c.eta * dt).recip();
                let ex_x = &ex[c.node][0];
                put(&mut sys, ex_x, ex_x, -coef);
                put_rhs(&mut sys, ex_x, -coef * pc.old[c.node].x + c.force);
            }
        }
        sys
    }

    /// Splits a solution vector into node positions and chemical potentials.
    pub fn extract(&self, sol: &[T]) -> (Vec<Vec<Vec2<T>>>, Vec<Vec<T>>) {
        let mut xs = Vec::with_capacity(self.curves.len());
        let mut mus = Vec::with_capacity(self.curves.len());
        for (j, pc) in self.curves.iter().enumerate() {
            let n = pc.old.len();
            xs.push(
                (0..n)
                    .map(|k| {
                        Vec2::new(self.map.value(sol, j, k, Component::X), self.map.value(sol, j, k, Component::Y))
                    })
                    .collect(),
            );
            mus.push((0..n).map(|k| self.map.value(sol, j, k, Component::Mu)).collect());
        }
        (xs, mus)
    }

    pub fn old(&self) -> Vec<Vec<Vec2<T>>> {
        self.curves.iter().map(|c| c.old.clone()).collect()
    }

    /// Runs the (possibly one-shot) fixed-point iteration of one step.
    pub fn iterate(&self, cfg: &StepperConfig<T>) -> Result<Iterate<T>> {
        let mut guess = self.old();
        let max_iters = match cfg.scheme {
            SchemeKind::ES => 1,
            SchemeKind::SP => cfg.picard_max_iters,
        };
        let mut residual = T::infinity();
        for it in 1..=max_iters {
            let sol = self.assemble(&guess).solve()?;
            let (xs, mus) = self.extract(&sol);
            residual = xs
                .iter()
                .zip(&guess)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| p.max_abs_diff(*q)))
                .fold(T::zero(), T::max);
            if !residual.is_finite() {
                return Err(Error::NonConvergence { iters: it, residual: residual.as_f64() });
            }
            guess = xs;
            if cfg.scheme == SchemeKind::ES {
                return Ok((guess, mus, 1, T::zero()));
            }
            if residual < cfg.picard_tol {
                return Ok((guess, mus, it, residual));
            }
        }
        Err(Error::NonConvergence { iters: max_iters, residual: residual.as_f64() })
    }
}

fn network_operator<T: Scalar>(
    network: &NetworkState<T>,
    spec: &AnisotropySpec<T>,
    params: &MaterialParams<T>,
    dt: T,
) -> Result<StepOperator<T>> {
    let segments = [0, 1, 2].map(|j| network.segments(j));
    let old: Vec<_> = (0..3).map(|j| network.curve_nodes(j)).collect();
    let forces = params.contact_forces();
    let contacts = (0..3).map(|j| vec![Contact { node: 0, eta: params.eta[j], force: forces[j] }]).collect();
    let aniso: Vec<&CurveAnisotropy<T>> = spec.curves.iter().collect();
    StepOperator::new(Topology::Network { segments }, old, &["F1V", "F2V", "F1F2"], &aniso, contacts, dt)
}

/// Assembles the step system for `network_m` with normal weights taken from
/// the iterate `guess` (same node counts).
pub fn assemble<T: Scalar>(
    network_m: &NetworkState<T>,
    guess: &NetworkState<T>,
    spec: &AnisotropySpec<T>,
    params: &MaterialParams<T>,
    cfg: &StepperConfig<T>,
) -> Result<(DofMap, BorderedSystem<T>)> {
    for j in 0..3 {
        if guess.segments(j) != network_m.segments(j) {
            return Err(Error::contract("assemble: iterate and old network differ in node counts"));
        }
    }
    let op = network_operator(network_m, spec, params, cfg.dt)?;
    let g: Vec<_> = (0..3).map(|j| guess.curve_nodes(j)).collect();
    let sys = op.assemble(&g);
    Ok((op.map, sys))
}

#[derive(Clone, Debug)]
pub struct StepSolution<T> {
    pub network: NetworkState<T>,
    pub mu: [Vec<T>; 3],
    pub picard_iters: usize,
    pub residual: T,
}

/// Advances the network by one time step.
pub fn solve_step<T: Scalar>(
    network_m: &NetworkState<T>,
    spec: &AnisotropySpec<T>,
    params: &MaterialParams<T>,
    cfg: &StepperConfig<T>,
) -> Result<StepSolution<T>> {
    let op = network_operator(network_m, spec, params, cfg.dt)?;
    let (mut xs, mus, picard_iters, residual) = op.iterate(cfg)?;
    let junction = *xs[0].last().unwrap();
    for c in xs.iter_mut() {
        c.pop();
    }
    let legs: [Vec<Vec2<T>>; 3] = [xs.remove(0), xs.remove(0), xs.remove(0)];
    let network = NetworkState::from_parts(legs, junction, network_m.time + cfg.dt)?;
    let mut mus = mus.into_iter();
    let mu = [mus.next().unwrap(), mus.next().unwrap(), mus.next().unwrap()];
    Ok(StepSolution { network, mu, picard_iters, residual })
}

#[derive(Clone, Debug)]
pub struct SingleStepSolution<T> {
    pub nodes: Vec<Vec2<T>>,
    pub mu: Vec<T>,
    pub picard_iters: usize,
    pub residual: T,
}

/// Advances one curve whose two end nodes both rest on the substrate.
pub fn solve_single_step<T: Scalar>(
    label: &str,
    nodes: &[Vec2<T>],
    aniso: &CurveAnisotropy<T>,
    contacts: [Contact<T>; 2],
    cfg: &StepperConfig<T>,
) -> Result<SingleStepSolution<T>> {
    let n = nodes.len() - 1;
    if nodes[n].y != T::zero() || nodes[0].y != T::zero() {
        return Err(Error::contract("single-curve island must have both end nodes on the substrate"));
    }
    let op = StepOperator::new(
        Topology::Single { segments: n },
        vec![nodes.to_vec()],
        &[label],
        &[aniso],
        vec![contacts.to_vec()],
        cfg.dt,
    )?;
    let (mut xs, mut mus, picard_iters, residual) = op.iterate(cfg)?;
    Ok(SingleStepSolution { nodes: xs.remove(0), mu: mus.remove(0), picard_iters, residual })
}
