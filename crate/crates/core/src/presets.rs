//! Named experiment configurations.

use crate::config::{
    AnisotropyConfig, DensityConfig, InitialShape, NumericsConfig, ParamsConfig, RunConfig, RunSection,
};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 7] = [
    "example1",
    "example2-meshq",
    "example3-conservation",
    "example4-eq-a",
    "example4-eq-b",
    "example4-eq-c",
    "example5-pinch",
];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "example1" => {
            "convergence base level: half-ellipse a=2, b=1 at x=4, 2-fold beta=1/6, sigma=-0.7, N=32, dt=1/40"
        }
        "example2-meshq" => "mesh quality: half-ellipse, 2-fold beta=1/6, sigma=-0.7, N=128, dt=1/40",
        "example3-conservation" => "area and energy: half-ellipse, 2-fold beta=1/6, sigma=-0.6, N=256, dt=1/40, t=4",
        "example4-eq-a" => "equilibrium from a semicircle r=2, 2-fold beta=1/4, sigma=-0.8, N=128, dt=1/50",
        "example4-eq-b" => "equilibrium from a half-ellipse a=3, b=3/2, 2-fold beta=1/4, sigma=-0.8, N=128, dt=1/50",
        "example4-eq-c" => "equilibrium from a flower r=2+cos(3 pi rho), 2-fold beta=1/4, sigma=-0.8, N=128, dt=1/50",
        "example5-pinch" => "pinch-off of a flat island a=80, b=1/10, 4-fold beta=1/15, sigma=0.8, N=200, dt=1/200",
        _ => return None,
    })
}

fn uniform(d: DensityConfig) -> AnisotropyConfig {
    AnisotropyConfig { curve1: d.clone(), curve2: d.clone(), curve3: d }
}

fn numerics(n: usize, dt: f64) -> NumericsConfig {
    NumericsConfig {
        dt,
        n1: n,
        n2: n,
        n3: n,
        scheme: "sp".into(),
        picard_tol: 1e-8,
        picard_max_iters: 100,
        k1: None,
        k2: None,
        k3: None,
    }
}

fn params(sigma: f64, eta: f64) -> ParamsConfig {
    ParamsConfig { sigma1: sigma, sigma2: sigma, eta1: eta, eta2: eta, eta3: eta }
}

fn run(t_max: f64) -> RunSection {
    RunSection { t_max, snapshot_every: 0, out_dir: None, delta_pinch: None, eq_window: None, eq_eps: None }
}

const ELLIPSE: InitialShape = InitialShape::HalfEllipse { center: 4.0, a: 2.0, b: 1.0 };

pub fn preset(name: &str) -> Result<RunConfig> {
    let two_fold = |beta: f64| uniform(DensityConfig::kfold(2, beta));
    let equilibrium = |initial: InitialShape| RunConfig {
        initial,
        anisotropy: two_fold(0.25),
        numerics: numerics(128, 1.0 / 50.0),
        params: params(-0.8, 100.0),
        run: RunSection { eq_window: Some(20), eq_eps: Some(1e-9), ..run(40.0) },
    };
    Ok(match name {
        "example1" => RunConfig {
            initial: ELLIPSE,
            anisotropy: two_fold(1.0 / 6.0),
            numerics: numerics(32, 1.0 / 40.0),
            params: params(-0.7, 100.0),
            run: run(2.0),
        },
        "example2-meshq" => RunConfig {
            initial: ELLIPSE,
            anisotropy: two_fold(1.0 / 6.0),
            numerics: numerics(128, 1.0 / 40.0),
            params: params(-0.7, 100.0),
            run: run(10.0),
        },
        "example3-conservation" => RunConfig {
            initial: ELLIPSE,
            anisotropy: two_fold(1.0 / 6.0),
            numerics: numerics(256, 1.0 / 40.0),
            params: params(-0.6, 100.0),
            run: run(4.0),
        },
        "example4-eq-a" => equilibrium(InitialShape::HalfEllipse { center: 0.0, a: 2.0, b: 2.0 }),
        "example4-eq-b" => equilibrium(InitialShape::HalfEllipse { center: 0.0, a: 3.0, b: 1.5 }),
        "example4-eq-c" => equilibrium(InitialShape::Flower { radius: 2.0, amplitude: 1.0, frequency: 3.0 }),
        "example5-pinch" => RunConfig {
            initial: InitialShape::HalfEllipse { center: 0.0, a: 80.0, b: 0.1 },
            anisotropy: uniform(DensityConfig::kfold(4, 1.0 / 15.0)),
            numerics: numerics(200, 1.0 / 200.0),
            params: params(0.8, 100.0),
            run: RunSection { snapshot_every: 200, ..run(20.0) },
        },
        _ => return Err(Error::UnknownPreset(name.to_string())),
    })
}
