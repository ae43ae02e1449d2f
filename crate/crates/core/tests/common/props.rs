//! Property checks shared by the property suite and the acceptance report.

use std::f64::consts::PI;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;
use proptest::test_runner::TestCaseResult;

use dbfilm::analysis::{discrete_energy, intersection_area, manifold_distance, RegionPolygon};
use dbfilm::anisotropy::{stability_check, AnisotropyClass, AnisotropySpec, CurveAnisotropy};
use dbfilm::config::{AnisotropyConfig, DensityConfig, InitialShape, ParamsConfig, RunConfig};
use dbfilm::geometry::{discrete_area, discrete_area_exact, lumped_inner_nodes, shoelace_area, NetworkState};
use dbfilm::predicates::{rational_to_f64, to_rational};
use dbfilm::presets::preset;
use dbfilm::scheme::{solve_step, MaterialParams, SchemeKind, StepperConfig};
use dbfilm::Vec2;

type P = Vec2<f64>;
type Q = Vec2<BigRational>;

pub fn density() -> impl Strategy<Value = CurveAnisotropy<f64>> {
    prop_oneof![
        Just(CurveAnisotropy::isotropic()),
        (prop::sample::select(vec![2u32, 4, 6]), 0.0..0.9f64).prop_map(|(k, b)| CurveAnisotropy::kfold(k, b)),
    ]
}

fn weak_density() -> impl Strategy<Value = CurveAnisotropy<f64>> {
    (prop::sample::select(vec![2u32, 4]), 0.0..0.9f64)
        .prop_map(|(k, frac)| CurveAnisotropy::kfold(k, frac / (k * k - 1) as f64))
}

pub fn density_at_angle() -> impl Strategy<Value = (CurveAnisotropy<f64>, f64)> {
    (density(), -PI..PI)
}

fn unit(theta: f64) -> P {
    P::new(theta.cos(), theta.sin())
}

fn gamma_hat(a: &CurveAnisotropy<f64>, p: P) -> f64 {
    let r = p.norm();
    r * a.gamma(p * (1.0 / r)).unwrap()
}

pub fn xi_dot_n_is_gamma((a, theta): (CurveAnisotropy<f64>, f64)) -> TestCaseResult {
    let n = unit(theta);
    let xi = a.xi(n.perp()).unwrap().0;
    prop_assert!((xi.dot(n) - a.gamma(n).unwrap()).abs() <= 1e-12);
    Ok(())
}

pub fn xi_is_gradient((a, theta): (CurveAnisotropy<f64>, f64)) -> TestCaseResult {
    let n = unit(theta);
    let xi = a.xi(n.perp()).unwrap().0;
    let h = 1e-6;
    let gx = (gamma_hat(&a, n + P::new(h, 0.0)) - gamma_hat(&a, n - P::new(h, 0.0))) / (2.0 * h);
    let gy = (gamma_hat(&a, n + P::new(0.0, h)) - gamma_hat(&a, n - P::new(0.0, h))) / (2.0 * h);
    prop_assert!((xi.x - gx).abs() <= 1e-6 && (xi.y - gy).abs() <= 1e-6, "{:?} vs ({gx}, {gy})", xi);
    Ok(())
}

pub fn zk_cases() -> impl Strategy<Value = (CurveAnisotropy<f64>, f64)> {
    (density(), -PI..PI, prop::option::of(0.0..10.0f64)).prop_map(|(a, theta, k)| match k {
        Some(k) => (a.with_stabilizer(k), theta),
        None => (a, theta),
    })
}

pub fn zk_identities((a, theta): (CurveAnisotropy<f64>, f64)) -> TestCaseResult {
    let n = unit(theta);
    let tau = n.perp();
    let z = a.zk(n).unwrap();
    prop_assert!((z.get(0, 1) - z.get(1, 0)).abs() <= 1e-12);
    let xi = a.xi(tau).unwrap().0;
    prop_assert!((z.mul_vec(tau) - xi.perp()).norm() <= 1e-12);
    Ok(())
}

pub fn stiffness_matches_second_difference((a, theta): (CurveAnisotropy<f64>, f64)) -> TestCaseResult {
    let h = 1e-4;
    let g = |t: f64| a.kind.gamma_theta(t);
    let fd = (g(theta + h) - 2.0 * g(theta) + g(theta - h)) / (h * h) + g(theta);
    prop_assert!((a.stiffness(theta) - fd).abs() <= 1e-6);
    Ok(())
}

pub fn classification_flips_at_threshold(k: u32) -> TestCaseResult {
    let t = 1.0 / (k * k - 1) as f64;
    let below = stability_check(&AnisotropySpec::uniform(CurveAnisotropy::kfold(k, t * (1.0 - 1e-6))).unwrap());
    let above = stability_check(&AnisotropySpec::uniform(CurveAnisotropy::kfold(k, t * (1.0 + 1e-6))).unwrap());
    prop_assert_eq!(below.curves[0].class, AnisotropyClass::Weak);
    prop_assert!(below.curves[0].min_stiffness > 0.0);
    prop_assert_eq!(above.curves[0].class, AnisotropyClass::Strong);
    prop_assert!(above.curves[0].min_stiffness < 0.0);
    Ok(())
}

pub type Fields = (Vec<(f64, f64)>, Vec<f64>, f64);

pub fn nodal_fields() -> impl Strategy<Value = Fields> {
    (prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 3..20), prop::collection::vec(-3.0..3.0f64, 60), -2.0..2.0f64)
}

pub fn lumped_inner_symmetric_and_bilinear((pts, seed, c): Fields) -> TestCaseResult {
    let nodes: Vec<P> = pts.iter().map(|&(x, y)| P::new(x, y)).collect();
    let n = nodes.len();
    let f: Vec<P> = (0..n).map(|k| P::new(seed[k], seed[k + 20])).collect();
    let g: Vec<P> = (0..n).map(|k| P::new(seed[k + 40], seed[k])).collect();
    let fg = lumped_inner_nodes(&nodes, &f, &g).unwrap();
    let gf = lumped_inner_nodes(&nodes, &g, &f).unwrap();
    prop_assert!((fg - gf).abs() <= 1e-12 * (1.0 + fg.abs()));
    let cf: Vec<P> = f.iter().map(|v| *v * c).collect();
    let cfg = lumped_inner_nodes(&nodes, &cf, &g).unwrap();
    prop_assert!((cfg - c * fg).abs() <= 1e-12 * (1.0 + fg.abs()));
    prop_assert!(lumped_inner_nodes(&nodes, &f, &f).unwrap() >= 0.0);
    Ok(())
}

pub type Legs = (Vec<(f64, f64)>, Vec<(f64, f64)>, f64, f64);

pub fn network_legs() -> impl Strategy<Value = Legs> {
    (
        prop::collection::vec((0.0..1.0f64, 0.05..2.0f64), 1..12),
        prop::collection::vec((0.0..1.0f64, 0.05..2.0f64), 1..12),
        0.5..5.0f64,
        0.5..2.0f64,
    )
}

/// Double bubble with contacts at `±width`, junction at `(0, top)` and random
/// interior nodes above the substrate.
fn random_network((left, right, width, top): &Legs) -> NetworkState<f64> {
    let leg = |side: f64, pts: &[(f64, f64)]| -> Vec<P> {
        let mut xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut v = vec![P::new(side * width, 0.0)];
        for (i, x) in xs.iter().enumerate() {
            let s = (i as f64 + 1.0 + 0.5 * x) / (xs.len() as f64 + 2.0);
            v.push(P::new(side * width * (1.0 - s), pts[i].1));
        }
        v.push(P::new(0.0, *top));
        v
    };
    let stem = vec![P::new(0.0, 0.0), P::new(0.0, top / 2.0), P::new(0.0, *top)];
    NetworkState::from_curves([leg(-1.0, left), leg(1.0, right), stem], 0.0).unwrap()
}

pub fn discrete_area_matches_exact_shoelace(legs: Legs) -> TestCaseResult {
    let net = random_network(&legs);
    let g1 = net.curve_nodes(0);
    let g2 = net.curve_nodes(1);
    // A → P along Γ₁, back to B along Γ₂; the edge B → A lies on y = 0
    let mut ring: Vec<Q> = g1.iter().map(|p| to_rational(*p)).collect();
    ring.extend(g2.iter().rev().skip(1).map(|p| to_rational(*p)));
    let exact = shoelace_area(&ring);
    let exact_trap = discrete_area_exact(
        &g1.iter().map(|p| to_rational(*p)).collect::<Vec<_>>(),
        &g2.iter().map(|p| to_rational(*p)).collect::<Vec<_>>(),
    );
    prop_assert_eq!(&exact_trap, &exact);
    let a = discrete_area(&net);
    let e = rational_to_f64(&exact);
    prop_assert!((a - e).abs() <= 1e-12 * e.abs().max(1.0), "{a} vs {e}");
    Ok(())
}

/// Exact Sutherland–Hodgman clip of convex `p` by convex counter-clockwise `q`.
fn exact_convex_intersection(p: &[P], q: &[P]) -> BigRational {
    let mut poly: Vec<Q> = p.iter().map(|v| to_rational(*v)).collect();
    let q: Vec<Q> = q.iter().map(|v| to_rational(*v)).collect();
    let side = |a: &Q, b: &Q, c: &Q| {
        (b.x.clone() - a.x.clone()) * (c.y.clone() - a.y.clone())
            - (b.y.clone() - a.y.clone()) * (c.x.clone() - a.x.clone())
    };
    for i in 0..q.len() {
        let (a, b) = (&q[i], &q[(i + 1) % q.len()]);
        let mut out = Vec::new();
        for j in 0..poly.len() {
            let (s, e) = (&poly[j], &poly[(j + 1) % poly.len()]);
            let (ds, de) = (side(a, b, s), side(a, b, e));
            let s_in = !ds.is_negative();
            let e_in = !de.is_negative();
            if s_in {
                out.push(s.clone());
            }
            if s_in != e_in && !(ds.is_zero() || de.is_zero()) {
                let t = ds.clone() / (ds - de);
                out.push(Q::new(
                    s.x.clone() + t.clone() * (e.x.clone() - s.x.clone()),
                    s.y.clone() + t * (e.y.clone() - s.y.clone()),
                ));
            }
        }
        poly = out;
        if poly.len() < 3 {
            return BigRational::zero();
        }
    }
    shoelace_area(&poly).abs()
}

fn convex_polygon() -> impl Strategy<Value = Vec<P>> {
    (-1.0..1.0f64, -1.0..1.0f64, 0.3..1.5f64, prop::collection::vec(0.0..1.0f64, 3..9)).prop_map(
        |(cx, cy, r, mut ts)| {
            ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            ts.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
            if ts.len() < 3 {
                ts = vec![0.0, 1.0 / 3.0, 2.0 / 3.0];
            }
            ts.iter().map(|t| P::new(cx + r * (2.0 * PI * t).cos(), cy + r * (2.0 * PI * t).sin())).collect()
        },
    )
}

pub fn convex_triples() -> impl Strategy<Value = [Vec<P>; 3]> {
    [convex_polygon(), convex_polygon(), convex_polygon()]
}

pub fn manifold_distance_pseudometric([a, b, c]: [Vec<P>; 3]) -> TestCaseResult {
    let (pa, pb, pc) = (RegionPolygon::new(a).unwrap(), RegionPolygon::new(b).unwrap(), RegionPolygon::new(c).unwrap());
    prop_assert!(manifold_distance(&pa, &pa).abs() <= 1e-12);
    let ab = manifold_distance(&pa, &pb);
    prop_assert!((ab - manifold_distance(&pb, &pa)).abs() <= 1e-12);
    let (bc, ac) = (manifold_distance(&pb, &pc), manifold_distance(&pa, &pc));
    prop_assert!(ac <= ab + bc + 1e-12, "{ac} > {ab} + {bc}");

    let exact = rational_to_f64(&exact_convex_intersection(pa.vertices(), pb.vertices()));
    let got = intersection_area(&pa, &pb);
    prop_assert!((got - exact).abs() <= 1e-12, "{got} vs {exact}");
    prop_assert!((ab - (pa.area() + pb.area() - 2.0 * exact).max(0.0)).abs() <= 1e-12);
    Ok(())
}

fn star_polygon() -> impl Strategy<Value = Vec<P>> {
    (-0.5..0.5f64, -0.5..0.5f64, prop::collection::vec(0.4..1.4f64, 5..16)).prop_map(|(cx, cy, radii)| {
        let n = radii.len();
        radii
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let t = 2.0 * PI * i as f64 / n as f64;
                P::new(cx + r * t.cos(), cy + r * t.sin())
            })
            .collect()
    })
}

pub fn star_pairs() -> impl Strategy<Value = (Vec<P>, Vec<P>, f64)> {
    (star_polygon(), star_polygon(), -1.0..1.0f64)
}

/// Scanline areas of `p`, `q` and `p ∩ q` with `rows` sample lines.
fn scanline_areas(p: &[P], q: &[P], rows: usize) -> (f64, f64, f64) {
    let (y0, y1) = p.iter().chain(q).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v.y), hi.max(v.y)));
    let dy = (y1 - y0) / rows as f64;
    let spans = |poly: &[P], y: f64| -> Vec<(f64, f64)> {
        let mut xs = Vec::new();
        for i in 0..poly.len() {
            let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
            if (a.y <= y) != (b.y <= y) {
                xs.push(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        xs.chunks(2).map(|c| (c[0], c[1])).collect()
    };
    let (mut ap, mut aq, mut ai) = (0.0, 0.0, 0.0);
    for r in 0..rows {
        let y = y0 + (r as f64 + 0.5) * dy;
        let sp = spans(p, y);
        let sq = spans(q, y);
        ap += sp.iter().map(|s| s.1 - s.0).sum::<f64>() * dy;
        aq += sq.iter().map(|s| s.1 - s.0).sum::<f64>() * dy;
        for a in &sp {
            for b in &sq {
                ai += (a.1.min(b.1) - a.0.max(b.0)).max(0.0) * dy;
            }
        }
    }
    (ap, aq, ai)
}

pub fn clipper_agrees_with_rasterization((a, b, dx): (Vec<P>, Vec<P>, f64)) -> TestCaseResult {
    let pa = RegionPolygon::new(a).unwrap();
    let pb = RegionPolygon::new(b).unwrap().translated(dx);
    let (a1, b1, i1) = scanline_areas(pa.vertices(), pb.vertices(), 500);
    let (a2, b2, i2) = scanline_areas(pa.vertices(), pb.vertices(), 1000);
    // midpoint rule in y is second order
    let ext = |c: f64, f: f64| (4.0 * f - c) / 3.0;
    let (ra, rb, ri) = (ext(a1, a2), ext(b1, b2), ext(i1, i2));
    prop_assert!((pa.area() - ra).abs() <= 1e-2 * ra);
    prop_assert!((pb.area() - rb).abs() <= 1e-2 * rb);
    let scale = ra + rb;
    let got = intersection_area(&pa, &pb);
    prop_assert!((got - ri).abs() <= 1e-2 * scale, "{got} vs {ri}");
    prop_assert!((manifold_distance(&pa, &pb) - (ra + rb - 2.0 * ri)).abs() <= 1e-2 * scale);
    Ok(())
}

fn perturbed_ellipse(n: usize, bumps: &[f64]) -> NetworkState<f64> {
    let arc = |left: bool, offset: usize| -> Vec<P> {
        (0..=n)
            .map(|k| {
                let r = k as f64 / n as f64;
                let phi = if left { PI - PI * r / 2.0 } else { PI * r / 2.0 };
                let scale = 1.0 + bumps[(k + offset) % bumps.len()];
                match k {
                    0 => P::new(2.0 * phi.cos(), 0.0),
                    _ if k == n => P::new(0.0, 1.0),
                    _ => P::new(2.0 * phi.cos() * scale, phi.sin() * scale),
                }
            })
            .collect()
    };
    let stem = (0..=n).map(|k| P::new(0.0, k as f64 / n as f64)).collect();
    NetworkState::from_curves([arc(true, 0), arc(false, 7), stem], 0.0).unwrap()
}

pub type Perturbed = (Vec<f64>, [CurveAnisotropy<f64>; 3], (f64, f64));

pub fn perturbed_networks() -> impl Strategy<Value = Perturbed> {
    (
        prop::collection::vec(-0.15..0.15f64, 11),
        [weak_density(), weak_density(), weak_density()],
        (-0.9..0.9f64, -0.9..0.9f64),
    )
}

pub fn energy_decreases_and_area_is_kept((bumps, densities, (s1, s2)): Perturbed) -> TestCaseResult {
    let spec = AnisotropySpec::new(densities).unwrap();
    let params = MaterialParams::new(s1, s2, [100.0, 100.0, 100.0]).unwrap();
    let cfg = StepperConfig { picard_tol: 1e-11, ..StepperConfig::new(0.01, SchemeKind::SP) };
    let mut net = perturbed_ellipse(12, &bumps);
    let a0 = discrete_area(&net);
    let mut e = discrete_energy(&net, &spec, &params).unwrap();
    for _ in 0..5 {
        net = solve_step(&net, &spec, &params, &cfg).unwrap().network;
        let e1 = discrete_energy(&net, &spec, &params).unwrap();
        prop_assert!(e1 <= e + 1e-12 * e.abs(), "{e1} > {e}");
        e = e1;
    }
    prop_assert!((discrete_area(&net) - a0).abs() <= 1e-9 * a0.abs());
    Ok(())
}

fn density_config() -> impl Strategy<Value = DensityConfig> {
    prop_oneof![
        Just(DensityConfig::Isotropic),
        (1u32..5, 0.0..0.5f64).prop_map(|(k, b)| DensityConfig::kfold(2 * k, b))
    ]
}

pub fn run_configs() -> impl Strategy<Value = RunConfig> {
    (
        (0.5..3.0f64, 0.3..2.0f64, -5.0..5.0f64),
        [density_config(), density_config(), density_config()],
        (1e-4..0.1f64, 2usize..200, 2usize..200, 2usize..200, prop::option::of(0.0..10.0f64)),
        (-0.95..0.95f64, -0.95..0.95f64, 1.0..500.0f64),
        (0.1..50.0f64, 0usize..20, prop::option::of(1e-4..1e-2f64)),
    )
        .prop_map(|((a, b, center), [d1, d2, d3], (dt, n1, n2, n3, k), (s1, s2, eta), (t_max, every, dp))| {
            let mut c = preset("example1").unwrap();
            c.initial = InitialShape::HalfEllipse { center, a, b };
            c.anisotropy = AnisotropyConfig { curve1: d1, curve2: d2, curve3: d3 };
            c.numerics.dt = dt;
            (c.numerics.n1, c.numerics.n2, c.numerics.n3) = (n1, n2, n3);
            c.numerics.k2 = k;
            c.params = ParamsConfig { sigma1: s1, sigma2: s2, eta1: eta, eta2: eta * 0.5, eta3: eta * 2.0 };
            c.run.t_max = t_max;
            c.run.snapshot_every = every;
            c.run.delta_pinch = dp;
            c
        })
}

pub fn config_round_trips(c: RunConfig) -> TestCaseResult {
    let back = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
    prop_assert_eq!(back, c);
    Ok(())
}
