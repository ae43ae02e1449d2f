//! Constrained degree-of-freedom layout.
//!
//! Contact-node `y` values are eliminated (fixed at zero), the junction
//! position is one shared pair, and the third curve's junction chemical
//! potential is expressed as `μ₃ = −μ₁ − μ₂`. Unknowns are grouped into one
//! banded block per curve (node-interleaved `x, y, μ`) plus a small border
//! holding the junction unknowns `x_P, y_P, μ₁(P), μ₂(P)`.

use std::ops::Range;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    X,
    Y,
    Mu,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::X, Component::Y, Component::Mu];

    fn slot(self) -> usize {
        match self {
            Component::X => 0,
            Component::Y => 1,
            Component::Mu => 2,
        }
    }
}

/// One scalar unknown before constraints: component of curve `curve` at node `node`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dof {
    pub curve: usize,
    pub node: usize,
    pub component: Component,
}

impl Dof {
    pub fn new(curve: usize, node: usize, component: Component) -> Self {
        Self { curve, node, component }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    /// Three curves meeting at a shared junction; `segments[j] = N_j`.
    Network { segments: [usize; 3] },
    /// One curve with substrate contacts at both ends.
    Single { segments: usize },
}

impl Topology {
    pub fn curves(&self) -> usize {
        match self {
            Topology::Network { .. } => 3,
            Topology::Single { .. } => 1,
        }
    }

    pub fn segments(&self, curve: usize) -> usize {
        match self {
            Topology::Network { segments } => segments[curve],
            Topology::Single { segments } => {
                assert_eq!(curve, 0, "single-curve topology has one curve");
                *segments
            }
        }
    }

    /// Scalar unknowns before any constraint: `x, y, μ` at every node.
    pub fn unconstrained_count(&self) -> usize {
        (0..self.curves()).map(|j| 3 * (self.segments(j) + 1)).sum()
    }

    /// Scalars removed by the pointwise constraints.
    pub fn eliminated_count(&self) -> usize {
        match self {
            // contact y (3), junction coincidence (2 curves × 2 coordinates), junction μ sum (1)
            Topology::Network { .. } => 3 + 4 + 1,
            Topology::Single { .. } => 2,
        }
    }
}

const ELIMINATED: u32 = u32::MAX;
const DEPENDENT: u32 = u32::MAX - 1;

/// Linear expression of a constrained unknown in terms of free unknowns.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Expansion {
    terms: [(usize, i8); 2],
    len: u8,
}

impl Expansion {
    const EMPTY: Self = Self { terms: [(0, 0); 2], len: 0 };

    fn one(i: usize) -> Self {
        Self { terms: [(i, 1), (0, 0)], len: 1 }
    }

    pub fn terms(&self) -> &[(usize, i8)] {
        &self.terms[..self.len as usize]
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Bijection between free unknowns and `0..len()`.
#[derive(Clone, Debug)]
pub struct DofMap {
    topology: Topology,
    dofs: Vec<Dof>,
    slots: Vec<Vec<[u32; 3]>>,
    blocks: Vec<Range<usize>>,
    border: Range<usize>,
    junction_mu: [usize; 2],
}

impl DofMap {
    pub fn new(topology: Topology) -> Self {
        let curves = topology.curves();
        let mut dofs = Vec::with_capacity(topology.unconstrained_count());
        let mut slots: Vec<Vec<[u32; 3]>> =
            (0..curves).map(|j| vec![[ELIMINATED; 3]; topology.segments(j) + 1]).collect();
        let mut blocks = Vec::with_capacity(curves);
        let network = matches!(topology, Topology::Network { .. });

        for j in 0..curves {
            let n = topology.segments(j);
            let start = dofs.len();
            let last_node = if network { n - 1 } else { n };
            for k in 0..=last_node {
                let contact = k == 0 || (!network && k == n);
                for c in Component::ALL {
                    if c == Component::Y && contact {
                        continue;
                    }
                    slots[j][k][c.slot()] = dofs.len() as u32;
                    dofs.push(Dof::new(j, k, c));
                }
            }
            blocks.push(start..dofs.len());
        }

        let border_start = dofs.len();
        let mut junction_mu = [0; 2];
        if let Topology::Network { segments } = topology {
            let xp = dofs.len();
            dofs.push(Dof::new(0, segments[0], Component::X));
            dofs.push(Dof::new(0, segments[0], Component::Y));
            for j in 0..3 {
                slots[j][segments[j]][0] = xp as u32;
                slots[j][segments[j]][1] = xp as u32 + 1;
            }
            for j in 0..2 {
                junction_mu[j] = dofs.len();
                slots[j][segments[j]][2] = dofs.len() as u32;
                dofs.push(Dof::new(j, segments[j], Component::Mu));
            }
            slots[2][segments[2]][2] = DEPENDENT;
        }
        let border = border_start..dofs.len();
        Self { topology, dofs, slots, blocks, border, junction_mu }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Canonical unknown stored at global index `i`.
    pub fn dof(&self, i: usize) -> Dof {
        self.dofs[i]
    }

    /// Global index of a free unknown; `None` for eliminated or dependent ones.
    pub fn index(&self, d: Dof) -> Option<usize> {
        let s = *self.slots.get(d.curve)?.get(d.node)?;
        match s[d.component.slot()] {
            ELIMINATED | DEPENDENT => None,
            i => Some(i as usize),
        }
    }

    /// Expresses any unconstrained unknown in terms of free ones.
    #[inline]
    pub fn expand(&self, curve: usize, node: usize, component: Component) -> Expansion {
        match self.slots[curve][node][component.slot()] {
            ELIMINATED => Expansion::EMPTY,
            DEPENDENT => Expansion { terms: [(self.junction_mu[0], -1), (self.junction_mu[1], -1)], len: 2 },
            i => Expansion::one(i as usize),
        }
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn border(&self) -> Range<usize> {
        self.border.clone()
    }

    /// Value of an unconstrained unknown given a solution vector.
    pub fn value<T: crate::Scalar>(&self, sol: &[T], curve: usize, node: usize, component: Component) -> T {
        self.expand(curve, node, component).terms().iter().fold(T::zero(), |acc, &(i, c)| {
            if c > 0 {
                acc + sol[i]
            } else {
                acc - sol[i]
            }
        })
    }
}
