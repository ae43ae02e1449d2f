//! Run configuration: TOML sections `[initial]`, `[anisotropy.curveN]`,
//! `[numerics]`, `[params]` and `[run]`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::anisotropy::{AnisotropyKind, AnisotropySpec, CurveAnisotropy};
use crate::error::{Error, Result};
use crate::evolution::{EquilibriumCriterion, RunOptions};
use crate::geometry::{resample_polyline, NetworkState};
use crate::scheme::{MaterialParams, SchemeKind, StepperConfig};
use crate::vec2::Vec2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub initial: InitialShape,
    pub anisotropy: AnisotropyConfig,
    pub numerics: NumericsConfig,
    pub params: ParamsConfig,
    pub run: RunSection,
}

/// Initial triple curve. Curves are sampled at uniform parameter spacing
/// with `numerics.N1..N3` segments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialShape {
    /// `Γ₁ = (c + a cos(π − πρ/2), b sin(π − πρ/2))`, `Γ₂` its mirror image,
    /// `Γ₃ = (c, bρ)`.
    HalfEllipse { center: f64, a: f64, b: f64 },
    /// Polar curves `r(φ) = R + A cos(ω(2 − ρ))` (left) and `R + A cos(ωρ)`
    /// (right) with `ω = frequency·π`, joined by a vertical `Γ₃` at `x = 0`.
    Flower { radius: f64, amplitude: f64, frequency: f64 },
    /// Explicit node lists (contact first, junction last), resampled to the
    /// configured segment counts.
    Polylines { curve1: Vec<[f64; 2]>, curve2: Vec<[f64; 2]>, curve3: Vec<[f64; 2]> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnisotropyConfig {
    pub curve1: DensityConfig,
    pub curve2: DensityConfig,
    pub curve3: DensityConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DensityConfig {
    Isotropic,
    Kfold { k: u32, beta: f64 },
}

impl DensityConfig {
    pub fn kfold(k: u32, beta: f64) -> Self {
        DensityConfig::Kfold { k, beta }
    }

    /// Density with the given stabilizer, or the default one.
    pub fn to_density(&self, stabilizer: Option<f64>) -> CurveAnisotropy<f64> {
        let kind = match *self {
            DensityConfig::Isotropic => AnisotropyKind::Isotropic,
            DensityConfig::Kfold { k, beta } => AnisotropyKind::KFold { k, beta },
        };
        let d = CurveAnisotropy::new(kind);
        match stabilizer {
            Some(k) => d.with_stabilizer(k),
            None => d,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    pub dt: f64,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    #[serde(rename = "N3")]
    pub n3: usize,
    #[serde(default = "default_scheme")]
    pub scheme: String,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_picard_max_iters")]
    pub picard_max_iters: usize,
    /// Stabilizers `K₁..K₃`; absent means the default for the density.
    #[serde(rename = "K1", default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(rename = "K2", default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(rename = "K3", default, skip_serializing_if = "Option::is_none")]
    pub k3: Option<f64>,
}

fn default_scheme() -> String {
    "sp".into()
}

fn default_picard_tol() -> f64 {
    StepperConfig::<f64>::DEFAULT_PICARD_TOL
}

fn default_picard_max_iters() -> usize {
    StepperConfig::<f64>::DEFAULT_PICARD_MAX_ITERS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub sigma1: f64,
    pub sigma2: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub eta3: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub t_max: f64,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_pinch: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_window: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq_eps: Option<f64>,
}

/// Everything a run needs, built from a validated [`RunConfig`].
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub network: NetworkState<f64>,
    pub spec: AnisotropySpec<f64>,
    pub params: MaterialParams<f64>,
    pub stepper: StepperConfig<f64>,
    pub options: RunOptions<f64>,
}

fn finite_positive(bad: &mut Vec<String>, key: &str, v: f64) {
    if !(v > 0.0) || !v.is_finite() {
        bad.push(format!("{key}: must be finite and > 0, got {v}"));
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(s).map_err(|e| Error::Config(vec![e.message().trim().to_string()]))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }

    /// Checks every field and reports all problems at once.
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        match &self.initial {
            InitialShape::HalfEllipse { center, a, b } => {
                if !center.is_finite() {
                    bad.push(format!("initial.center: must be finite, got {center}"));
                }
                finite_positive(&mut bad, "initial.a", *a);
                finite_positive(&mut bad, "initial.b", *b);
            }
            InitialShape::Flower { radius, amplitude, frequency } => {
                finite_positive(&mut bad, "initial.radius", *radius);
                if !(*amplitude >= 0.0 && amplitude < radius) {
                    bad.push(format!("initial.amplitude: must lie in [0, radius), got {amplitude}"));
                }
                if !frequency.is_finite() {
                    bad.push(format!("initial.frequency: must be finite, got {frequency}"));
                }
            }
            InitialShape::Polylines { curve1, curve2, curve3 } => {
                for (name, c) in [("curve1", curve1), ("curve2", curve2), ("curve3", curve3)] {
                    if c.len() < 2 {
                        bad.push(format!("initial.{name}: needs at least 2 nodes, got {}", c.len()));
                    }
                }
            }
        }
        for (j, d) in [&self.anisotropy.curve1, &self.anisotropy.curve2, &self.anisotropy.curve3].iter().enumerate() {
            let key = format!("anisotropy.curve{}", j + 1);
            if let DensityConfig::Kfold { k, beta } = **d {
                if k < 2 || k % 2 != 0 {
                    bad.push(format!("{key}.k: must be an even integer >= 2, got {k}"));
                }
                if !(0.0..1.0).contains(&beta) {
                    bad.push(format!("{key}.beta: must lie in [0, 1), got {beta}"));
                }
            }
        }
        let n = &self.numerics;
        finite_positive(&mut bad, "numerics.dt", n.dt);
        for (key, v) in [("numerics.N1", n.n1), ("numerics.N2", n.n2), ("numerics.N3", n.n3)] {
            if v < 2 {
                bad.push(format!("{key}: must be >= 2, got {v}"));
            }
        }
        if let Err(Error::Config(mut e)) = n.scheme.parse::<SchemeKind>() {
            bad.append(&mut e);
        }
        finite_positive(&mut bad, "numerics.picard_tol", n.picard_tol);
        if n.picard_max_iters == 0 {
            bad.push("numerics.picard_max_iters: must be >= 1".into());
        }
        for (key, v) in [("numerics.K1", n.k1), ("numerics.K2", n.k2), ("numerics.K3", n.k3)] {
            if let Some(k) = v {
                if !(k >= 0.0) || !k.is_finite() {
                    bad.push(format!("{key}: must be finite and >= 0, got {k}"));
                }
            }
        }
        let p = &self.params;
        for (key, v) in [("params.sigma1", p.sigma1), ("params.sigma2", p.sigma2)] {
            if !v.is_finite() {
                bad.push(format!("{key}: must be finite, got {v}"));
            }
        }
        for (key, v) in [("params.eta1", p.eta1), ("params.eta2", p.eta2), ("params.eta3", p.eta3)] {
            finite_positive(&mut bad, key, v);
        }
        let r = &self.run;
        if !(r.t_max >= 0.0) || !r.t_max.is_finite() {
            bad.push(format!("run.t_max: must be finite and >= 0, got {}", r.t_max));
        }
        if let Some(d) = r.delta_pinch {
            finite_positive(&mut bad, "run.delta_pinch", d);
        }
        match (r.eq_window, r.eq_eps) {
            (None, None) => {}
            (Some(w), Some(e)) => {
                if w < 2 {
                    bad.push(format!("run.eq_window: must be >= 2, got {w}"));
                }
                finite_positive(&mut bad, "run.eq_eps", e);
            }
            _ => bad.push("run.eq_window and run.eq_eps must be given together".into()),
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad))
        }
    }

    pub fn spec(&self) -> Result<AnisotropySpec<f64>> {
        let (a, n) = (&self.anisotropy, &self.numerics);
        AnisotropySpec::new([a.curve1.to_density(n.k1), a.curve2.to_density(n.k2), a.curve3.to_density(n.k3)])
    }

    pub fn material(&self) -> Result<MaterialParams<f64>> {
        let p = &self.params;
        MaterialParams::new(p.sigma1, p.sigma2, [p.eta1, p.eta2, p.eta3])
    }

    pub fn stepper(&self) -> Result<StepperConfig<f64>> {
        let n = &self.numerics;
        let c = StepperConfig {
            dt: n.dt,
            picard_tol: n.picard_tol,
            picard_max_iters: n.picard_max_iters,
            scheme: n.scheme.parse()?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn options(&self) -> RunOptions<f64> {
        let r = &self.run;
        RunOptions {
            t_max: r.t_max,
            snapshot_every: r.snapshot_every,
            delta_pinch: r.delta_pinch,
            equilibrium: match (r.eq_window, r.eq_eps) {
                (Some(window), Some(eps)) => Some(EquilibriumCriterion { window, eps }),
                _ => None,
            },
        }
    }

    pub fn segments(&self) -> [usize; 3] {
        [self.numerics.n1, self.numerics.n2, self.numerics.n3]
    }

    pub fn initial_network(&self) -> Result<NetworkState<f64>> {
        self.initial.network(self.segments())
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        self.validate()?;
        Ok(ResolvedRun {
            network: self.initial_network()?,
            spec: self.spec()?,
            params: self.material()?,
            stepper: self.stepper()?,
            options: self.options(),
        })
    }

    /// Same configuration at a different resolution.
    pub fn with_resolution(&self, segments: [usize; 3], dt: f64) -> Self {
        let mut c = self.clone();
        c.numerics.n1 = segments[0];
        c.numerics.n2 = segments[1];
        c.numerics.n3 = segments[2];
        c.numerics.dt = dt;
        c
    }

    pub fn with_scheme(&self, scheme: SchemeKind) -> Self {
        let mut c = self.clone();
        c.numerics.scheme = scheme.to_string();
        c
    }
}

fn sample(n: usize, f: impl Fn(f64) -> Vec2<f64>) -> Vec<Vec2<f64>> {
    (0..=n).map(|k| f(k as f64 / n as f64)).collect()
}

/// Pins the contact node to the substrate and the last node to the junction.
fn pin(mut nodes: Vec<Vec2<f64>>, junction: Vec2<f64>) -> Vec<Vec2<f64>> {
    nodes[0].y = 0.0;
    *nodes.last_mut().unwrap() = junction;
    nodes
}

impl InitialShape {
    pub fn network(&self, n: [usize; 3]) -> Result<NetworkState<f64>> {
        let curves = match *self {
            InitialShape::HalfEllipse { center, a, b } => {
                let p = Vec2::new(center, b);
                let g1 = sample(n[0], |r| {
                    let phi = PI - PI * r / 2.0;
                    Vec2::new(center + a * phi.cos(), b * phi.sin())
                });
                let g2 = sample(n[1], |r| {
                    let phi = PI * r / 2.0;
                    Vec2::new(center + a * phi.cos(), b * phi.sin())
                });
                let g3 = sample(n[2], |r| Vec2::new(center, b * r));
                [pin(g1, p), pin(g2, p), pin(g3, p)]
            }
            InitialShape::Flower { radius, amplitude, frequency } => {
                let w = frequency * PI;
                let top = radius + amplitude * w.cos();
                let p = Vec2::new(0.0, top);
                let g1 = sample(n[0], |r| {
                    let phi = PI - PI * r / 2.0;
                    let rad = radius + amplitude * (2.0 * w - w * r).cos();
                    Vec2::new(rad * phi.cos(), rad * phi.sin())
                });
                let g2 = sample(n[1], |r| {
                    let phi = PI * r / 2.0;
                    let rad = radius + amplitude * (w * r).cos();
                    Vec2::new(rad * phi.cos(), rad * phi.sin())
                });
                let g3 = sample(n[2], |r| Vec2::new(0.0, top * r));
                [pin(g1, p), pin(g2, p), pin(g3, p)]
            }
            InitialShape::Polylines { ref curve1, ref curve2, ref curve3 } => {
                let mut out: [Vec<Vec2<f64>>; 3] = Default::default();
                for (j, c) in [curve1, curve2, curve3].iter().enumerate() {
                    let nodes: Vec<_> = c.iter().map(|q| Vec2::new(q[0], q[1])).collect();
                    out[j] = resample_polyline(&nodes, n[j])?;
                }
                out
            }
        };
        NetworkState::from_curves(curves, 0.0)
    }
}
