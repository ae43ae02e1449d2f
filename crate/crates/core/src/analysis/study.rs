use std::fmt;
use std::io::Write;
use std::thread;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::evolution::{run_observed, Island, RunHistory, RunOptions};
use crate::geometry::NetworkState;
use crate::scheme::SchemeKind;
use crate::vec2::Vec2;

use super::distance::manifold_distance;
use super::region::region_polygon;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub h: f64,
    pub dt: f64,
    /// Manifold distance to the next finer level.
    pub error: f64,
    /// `log₂(e_coarser / e)`; `NaN` on the first row.
    pub order: f64,
}

/// Errors at one evaluation time, coarsest level first.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorTable {
    pub t_eval: f64,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    fn from_errors(t_eval: f64, levels: &[(f64, f64)], errors: &[f64]) -> Self {
        let rows = errors
            .iter()
            .enumerate()
            .map(|(i, &e)| ErrorRow {
                h: levels[i].0,
                dt: levels[i].1,
                error: e,
                order: if i == 0 { f64::NAN } else { (errors[i - 1] / e).log2() },
            })
            .collect();
        Self { t_eval, rows }
    }

    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().skip(1).map(|r| r.order).collect()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "h,dt,error,order")?;
        for r in &self.rows {
            let order = if r.order.is_nan() { String::new() } else { r.order.to_string() };
            writeln!(w, "{},{},{},{}", r.h, r.dt, r.error, order)?;
        }
        Ok(())
    }
}

/// Tables for every evaluation time. When a level fails, the tables hold
/// the rows computable from the levels before it and `failure` says why.
#[derive(Debug)]
pub struct ConvergenceStudy {
    pub tables: Vec<ErrorTable>,
    pub failure: Option<Error>,
}

impl ConvergenceStudy {
    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }
}

/// Largest initial segment length.
fn mesh_size(net: &NetworkState<f64>) -> f64 {
    (0..3)
        .flat_map(|j| net.curve_nodes(j).windows(2).map(|w| (w[1] - w[0]).norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max)
}

fn lerp_network(a: &NetworkState<f64>, b: &NetworkState<f64>, s: f64, t: f64) -> Result<NetworkState<f64>> {
    let mix =
        |p: &[Vec2<f64>], q: &[Vec2<f64>]| -> Vec<Vec2<f64>> { p.iter().zip(q).map(|(x, y)| x.lerp(*y, s)).collect() };
    let legs = [mix(a.leg(0), b.leg(0)), mix(a.leg(1), b.leg(1)), mix(a.leg(2), b.leg(2))];
    NetworkState::from_parts(legs, a.junction().lerp(b.junction(), s), t)
}

/// Runs one configuration and returns the network at each `t_evals` entry,
/// interpolated linearly between the bracketing steps.
pub fn states_at(config: &RunConfig, t_evals: &[f64]) -> Result<Vec<NetworkState<f64>>> {
    let r = config.resolve()?;
    let t_max = t_evals.iter().copied().fold(0.0, f64::max);
    let opts = RunOptions { t_max, snapshot_every: 0, delta_pinch: r.options.delta_pinch, equilibrium: None };
    let mut out: Vec<Option<NetworkState<f64>>> = vec![None; t_evals.len()];
    let mut prev: Option<(f64, NetworkState<f64>)> = None;
    let mut failure = None;
    run_observed(r.network, r.spec, r.params, r.stepper, opts, |sim, _| {
        if failure.is_some() {
            return;
        }
        let net = match sim.islands() {
            [(_, Island::Network(n))] => n.clone(),
            _ => {
                failure = Some(Error::Surgery(format!("topology changed before t = {}", sim.time())));
                return;
            }
        };
        let t = sim.time();
        for (slot, &te) in out.iter_mut().zip(t_evals) {
            if slot.is_some() {
                continue;
            }
            if t == te {
                *slot = Some(net.clone());
            } else if let Some((t0, p)) = &prev {
                if *t0 < te && te < t {
                    *slot = lerp_network(p, &net, (te - t0) / (t - t0), te).ok();
                }
            }
        }
        prev = Some((t, net));
    })?;
    if let Some(e) = failure {
        return Err(e);
    }
    out.into_iter()
        .zip(t_evals)
        .map(|(s, t)| s.ok_or_else(|| Error::contract(format!("run ended before t = {t}"))))
        .collect()
}

/// Refines `config` `levels` times (`h → h/2`, `Δt → Δt/4`) and reports
/// `Md(Γ_{h,Δt}, Γ_{h/2,Δt/4})` of the union regions at each `t_evals`
/// entry. Levels run concurrently.
pub fn convergence_study(config: &RunConfig, levels: usize, t_evals: &[f64]) -> Result<ConvergenceStudy> {
    if levels < 3 {
        return Err(Error::contract(format!("convergence study needs at least 3 levels, got {levels}")));
    }
    if t_evals.is_empty() || t_evals.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::contract("evaluation times must be positive"));
    }
    config.validate()?;
    let base = config.segments();
    let configs: Vec<RunConfig> = (0..=levels)
        .map(|i| {
            let f = 1usize << i;
            config.with_resolution(base.map(|n| n * f), config.numerics.dt / (f * f) as f64)
        })
        .collect();
    Ok(study_levels(&configs, t_evals))
}

/// Errors between consecutive configurations, coarsest first.
pub fn study_levels(configs: &[RunConfig], t_evals: &[f64]) -> ConvergenceStudy {
    let results: Vec<Result<Vec<NetworkState<f64>>>> = thread::scope(|s| {
        let handles: Vec<_> = configs.iter().map(|c| s.spawn(move || states_at(c, t_evals))).collect();
        handles.into_iter().map(|h| h.join().expect("convergence level panicked")).collect()
    });

    let mut sizes = Vec::new();
    let mut states = Vec::new();
    let mut failure = None;
    for (level, (c, r)) in configs.iter().zip(results).enumerate() {
        match r.and_then(|s| Ok((mesh_size(&c.initial_network()?), s))) {
            Ok((h, s)) => {
                sizes.push((h, c.numerics.dt));
                states.push(s);
            }
            Err(e) => {
                failure = Some(Error::Study { level, source: Box::new(e) });
                break;
            }
        }
    }

    let mut tables = Vec::new();
    for (k, &t) in t_evals.iter().enumerate() {
        let mut errors = Vec::new();
        for (level, w) in states.windows(2).enumerate() {
            let d = region_polygon(&w[0][k]).and_then(|p| Ok(manifold_distance(&p, &region_polygon(&w[1][k])?)));
            match d {
                Ok(d) => errors.push(d),
                Err(e) => {
                    failure.get_or_insert(Error::Study { level, source: Box::new(e) });
                    break;
                }
            }
        }
        tables.push(ErrorTable::from_errors(t, &sizes, &errors));
    }
    ConvergenceStudy { tables, failure }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeSummary {
    pub scheme: SchemeKind,
    pub max_area_drift: f64,
    pub final_energy_ratio: f64,
    pub final_energy: f64,
    pub energy_non_increasing: bool,
}

impl SchemeSummary {
    fn of(scheme: SchemeKind, h: &RunHistory<f64>) -> Self {
        let last = h.records.last();
        Self {
            scheme,
            max_area_drift: h.max_relative_area_drift(),
            final_energy_ratio: last.map_or(f64::NAN, |r| r.energy_ratio),
            final_energy: last.map_or(f64::NAN, |r| r.energy),
            energy_non_increasing: h.energy_non_increasing(1e-12),
        }
    }
}

/// Paired SP and ES runs of one configuration.
#[derive(Clone, Debug)]
pub struct SchemeComparison {
    pub sp: RunHistory<f64>,
    pub es: RunHistory<f64>,
    pub summary: [SchemeSummary; 2],
}

impl fmt::Display for SchemeComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.summary {
            writeln!(
                f,
                "scheme={} max_area_drift={:e} final_energy={} final_energy_ratio={} energy_non_increasing={}",
                s.scheme, s.max_area_drift, s.final_energy, s.final_energy_ratio, s.energy_non_increasing
            )?;
        }
        Ok(())
    }
}

pub fn compare_schemes(config: &RunConfig) -> Result<SchemeComparison> {
    let run_with = |scheme: SchemeKind| -> Result<RunHistory<f64>> {
        let r = config.with_scheme(scheme).resolve()?;
        let opts = RunOptions { equilibrium: None, snapshot_every: 0, ..r.options };
        run_observed(r.network, r.spec, r.params, r.stepper, opts, |_, _| {})
    };
    let (sp, es) = thread::scope(|s| {
        let es = s.spawn(|| run_with(SchemeKind::ES));
        let sp = run_with(SchemeKind::SP);
        (sp, es.join().expect("ES run panicked"))
    });
    let (sp, es) = (sp?, es?);
    let summary = [SchemeSummary::of(SchemeKind::SP, &sp), SchemeSummary::of(SchemeKind::ES, &es)];
    Ok(SchemeComparison { sp, es, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::preset;

    fn tiny() -> RunConfig {
        let mut c = preset("example1").unwrap();
        c.numerics.n1 = 6;
        c.numerics.n2 = 6;
        c.numerics.n3 = 6;
        c.numerics.dt = 0.05;
        c
    }

    #[test]
    fn identical_levels_give_zero_error() {
        let c = tiny();
        let s = study_levels(&[c.clone(), c.clone(), c], &[0.1, 0.2]);
        assert!(s.is_complete());
        for t in &s.tables {
            assert_eq!(t.rows.len(), 2);
            assert!(t.rows.iter().all(|r| r.error == 0.0));
        }
    }

    #[test]
    fn interpolation_between_steps() {
        let c = tiny();
        let s = states_at(&c, &[0.05, 0.075, 0.1]).unwrap();
        let mid = lerp_network(&s[0], &s[2], 0.5, 0.075).unwrap();
        for j in 0..3 {
            for (p, q) in s[1].curve_nodes(j).iter().zip(mid.curve_nodes(j)) {
                assert!((*p - q).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn orders_from_errors() {
        let t = ErrorTable::from_errors(1.0, &[(0.4, 0.1), (0.2, 0.025), (0.1, 0.00625)], &[1.6, 0.4, 0.1]);
        assert!(t.rows[0].order.is_nan());
        assert_eq!(t.orders(), vec![2.0, 2.0]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().next(), Some("h,dt,error,order"));
        assert!(s.lines().nth(1).unwrap().ends_with(','));
    }

    #[test]
    fn study_rejects_too_few_levels() {
        assert!(convergence_study(&tiny(), 2, &[1.0]).is_err());
    }

    #[test]
    fn failing_level_is_flagged() {
        let mut c = tiny();
        c.numerics.picard_max_iters = 1;
        c.numerics.picard_tol = 1e-300;
        let s = convergence_study(&c, 3, &[0.1]).unwrap();
        assert!(matches!(s.failure, Some(Error::Study { level: 0, .. })));
        assert!(s.tables[0].rows.is_empty());
    }
}
