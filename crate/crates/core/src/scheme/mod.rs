//! One time step of the structure-preserving parametric finite element
//! scheme (`SP`) and its linear energy-stable variant (`ES`).

mod dofs;
pub mod linalg;
mod step;

pub use dofs::{Component, Dof, DofMap, Expansion, Topology};
pub use step::{
    assemble, half_step_normal, solve_single_step, solve_step, Contact, SingleStepSolution, StepOperator, StepSolution,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Substrate constants and contact-point mobilities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialParams<T> {
    pub sigma1: T,
    pub sigma2: T,
    /// Mobilities of the contact points A, B, C.
    pub eta: [T; 3],
}

impl<T: Scalar> MaterialParams<T> {
    pub fn new(sigma1: T, sigma2: T, eta: [T; 3]) -> Result<Self> {
        let p = Self { sigma1, sigma2, eta };
        p.validate()?;
        Ok(p)
    }

    /// `σ₁ = σ₂ = sigma`, all mobilities `eta`.
    pub fn symmetric(sigma: T, eta: T) -> Result<Self> {
        Self::new(sigma, sigma, [eta; 3])
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        for (j, e) in self.eta.iter().enumerate() {
            if !(*e > T::zero()) || !e.is_finite() {
                bad.push(format!("params.eta{}: must be finite and > 0, got {e}", j + 1));
            }
        }
        if !self.sigma1.is_finite() {
            bad.push(format!("params.sigma1: must be finite, got {}", self.sigma1));
        }
        if !self.sigma2.is_finite() {
            bad.push(format!("params.sigma2: must be finite, got {}", self.sigma2));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    /// Substrate force `∂E/∂x` at contacts A, B, C: `σ₁`, `−σ₂`, `σ₂ − σ₁`.
    pub fn contact_forces(&self) -> [T; 3] {
        [self.sigma1, -self.sigma2, self.sigma2 - self.sigma1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SchemeKind {
    /// Time-weighted normal, Picard iteration; conserves area exactly.
    #[default]
    SP,
    /// Old-mesh normal, one linear solve per step.
    ES,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::SP => "sp",
            SchemeKind::ES => "es",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sp" => Ok(SchemeKind::SP),
            "es" => Ok(SchemeKind::ES),
            _ => Err(Error::Config(vec![format!("numerics.scheme: expected `sp` or `es`, got `{s}`")])),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepperConfig<T> {
    pub dt: T,
    pub picard_tol: T,
    pub picard_max_iters: usize,
    pub scheme: SchemeKind,
}

impl<T: Scalar> StepperConfig<T> {
    pub const DEFAULT_PICARD_TOL: f64 = 1e-8;
    pub const DEFAULT_PICARD_MAX_ITERS: usize = 100;

    pub fn new(dt: T, scheme: SchemeKind) -> Self {
        Self {
            dt,
            picard_tol: T::lit(Self::DEFAULT_PICARD_TOL),
            picard_max_iters: Self::DEFAULT_PICARD_MAX_ITERS,
            scheme,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            bad.push(format!("numerics.dt: must be finite and > 0, got {}", self.dt));
        }
        if !(self.picard_tol > T::zero()) {
            bad.push(format!("numerics.picard_tol: must be > 0, got {}", self.picard_tol));
        }
        if self.picard_max_iters == 0 {
            bad.push("numerics.picard_max_iters: must be >= 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }
}
