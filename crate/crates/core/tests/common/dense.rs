//! One time step compared against a brute-force dense implementation:
//! every node carries `x, y, μ`, the weak form is assembled with hat
//! functions over all of them, and the pointwise constraints enter through
//! Lagrange multipliers instead of elimination.

use dbfilm::anisotropy::{AnisotropyKind, AnisotropySpec, CurveAnisotropy};
use dbfilm::scheme::{solve_step, MaterialParams, SchemeKind, StepperConfig};
use dbfilm::{Network, Point};
use nalgebra::{DMatrix, DVector};

pub fn ellipse(n: usize) -> Network {
    let pi = std::f64::consts::PI;
    let arc = |left: bool| -> Vec<Point> {
        (0..=n)
            .map(|k| {
                let r = k as f64 / n as f64;
                let phi = if left { pi - pi * r / 2.0 } else { pi * r / 2.0 };
                match k {
                    0 => Point::new(4.0 + 2.0 * phi.cos(), 0.0),
                    _ if k == n => Point::new(4.0, 1.0),
                    _ => Point::new(4.0 + 2.0 * phi.cos(), phi.sin()),
                }
            })
            .collect()
    };
    let stem = (0..=n).map(|k| Point::new(4.0, k as f64 / n as f64)).collect();
    Network::from_curves([arc(true), arc(false), stem], 0.0).unwrap()
}

/// `γ`, `γ'` as functions of the normal angle, written out per family.
fn density(a: &CurveAnisotropy<f64>, theta: f64) -> (f64, f64) {
    match a.kind {
        AnisotropyKind::Isotropic => (1.0, 0.0),
        AnisotropyKind::KFold { k, beta } => {
            let k = k as f64;
            (1.0 + beta * (k * theta).cos(), -beta * k * (k * theta).sin())
        }
        AnisotropyKind::Custom(_) => unreachable!(),
    }
}

fn z_matrix(a: &CurveAnisotropy<f64>, h: Point) -> DMatrix<f64> {
    let len = h.norm();
    let (tx, ty) = (h.x / len, h.y / len);
    let (nx, ny) = (ty, -tx);
    let theta = ty.atan2(tx);
    let (g, dg) = density(a, theta);
    let (xx, xy) = (g * nx + dg * tx, g * ny + dg * ty);
    let kk = a.stabilizer;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            g - 2.0 * nx * xx + kk * nx * nx,
            -nx * xy - xx * ny + kk * nx * ny,
            -ny * xx - xy * nx + kk * ny * nx,
            g - 2.0 * ny * xy + kk * ny * ny,
        ],
    )
}

/// Solves the step with normal weights from `guess`; returns new positions
/// and chemical potentials per curve.
fn dense_solve(
    old: &[Vec<Point>; 3],
    guess: &[Vec<Point>; 3],
    spec: &AnisotropySpec<f64>,
    p: &MaterialParams<f64>,
    dt: f64,
) -> ([Vec<Point>; 3], [Vec<f64>; 3]) {
    let offs: Vec<usize> = (0..3)
        .scan(0, |acc, j| {
            let o = *acc;
            *acc += 3 * old[j].len();
            Some(o)
        })
        .collect();
    let n_raw = offs[2] + 3 * old[2].len();
    let xi = |j: usize, k: usize, c: usize| offs[j] + 3 * k + c;
    let mut a = DMatrix::<f64>::zeros(n_raw, n_raw);
    let mut b = DVector::<f64>::zeros(n_raw);
    let sub = [p.sigma1, -p.sigma2, p.sigma2 - p.sigma1];

    for j in 0..3 {
        let (xm, g) = (&old[j], &guess[j]);
        for e in 0..xm.len() - 1 {
            let nodes = [e, e + 1];
            let h = xm[e + 1] - xm[e];
            let len = h.norm();
            let dh = g[e + 1] - g[e];
            // time-weighted normal (not unit), constant on the element
            let nh = Point::new(-(h.y + dh.y), h.x + dh.x).scale(-0.5 / len);
            let nh = [nh.x, nh.y];
            // hat-function arc-length derivatives
            let dphi = [-1.0 / len, 1.0 / len];
            let z = z_matrix(spec.curve(j), h);
            for (li, &ni) in nodes.iter().enumerate() {
                // lumped weight |h|/2 at each element node
                let wq = len / 2.0;
                for c in 0..2 {
                    // test φ at node ni: ((X^{m+1} − X^m)·n, φ)
                    a[(xi(j, ni, 2), xi(j, ni, c))] += wq * nh[c];
                    b[xi(j, ni, 2)] += wq * nh[c] * [xm[ni].x, xm[ni].y][c];
                    // test ω_c at node ni: (μ n, ω)
                    a[(xi(j, ni, c), xi(j, ni, 2))] += wq * nh[c];
                }
                for (lk, &nk) in nodes.iter().enumerate() {
                    let stiff = len * dphi[li] * dphi[lk];
                    a[(xi(j, ni, 2), xi(j, nk, 2))] += dt * stiff;
                    for c in 0..2 {
                        for d in 0..2 {
                            a[(xi(j, ni, c), xi(j, nk, d))] -= stiff * z[(c, d)];
                        }
                    }
                }
            }
        }
        let r = xi(j, 0, 0);
        a[(r, r)] -= 1.0 / (p.eta[j] * dt);
        b[r] += -old[j][0].x / (p.eta[j] * dt) + sub[j];
    }

    // constraints C u = 0
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    for j in 0..3 {
        rows.push(vec![(xi(j, 0, 1), 1.0)]);
    }
    let last = |j: usize| old[j].len() - 1;
    for j in 1..3 {
        for c in 0..2 {
            rows.push(vec![(xi(0, last(0), c), 1.0), (xi(j, last(j), c), -1.0)]);
        }
    }
    rows.push((0..3).map(|j| (xi(j, last(j), 2), 1.0)).collect());

    let m = rows.len();
    let mut kkt = DMatrix::<f64>::zeros(n_raw + m, n_raw + m);
    kkt.view_mut((0, 0), (n_raw, n_raw)).copy_from(&a);
    let mut rhs = DVector::<f64>::zeros(n_raw + m);
    rhs.rows_mut(0, n_raw).copy_from(&b);
    for (r, row) in rows.iter().enumerate() {
        for &(i, v) in row {
            kkt[(n_raw + r, i)] = v;
            kkt[(i, n_raw + r)] = v;
        }
    }
    let u = kkt.lu().solve(&rhs).expect("nonsingular KKT system");
    let pos = |j: usize| (0..old[j].len()).map(|k| Point::new(u[xi(j, k, 0)], u[xi(j, k, 1)])).collect::<Vec<_>>();
    let mu = |j: usize| (0..old[j].len()).map(|k| u[xi(j, k, 2)]).collect::<Vec<_>>();
    ([pos(0), pos(1), pos(2)], [mu(0), mu(1), mu(2)])
}

pub fn dense_step(
    net: &Network,
    spec: &AnisotropySpec<f64>,
    p: &MaterialParams<f64>,
    dt: f64,
) -> ([Vec<Point>; 3], [Vec<f64>; 3]) {
    let old = [net.curve_nodes(0), net.curve_nodes(1), net.curve_nodes(2)];
    let mut guess = old.clone();
    for _ in 0..200 {
        let (x, mu) = dense_solve(&old, &guess, spec, p, dt);
        let change =
            x.iter().zip(&guess).flat_map(|(a, b)| a.iter().zip(b).map(|(p, q)| (*p - *q).norm())).fold(0.0, f64::max);
        guess = x;
        if change < 1e-14 {
            return (guess, mu);
        }
    }
    panic!("dense fixed point did not converge");
}

/// Largest deviations of our step from the dense one: `(positions, μ)`.
pub fn step_deviation(spec: &AnisotropySpec<f64>) -> (f64, f64) {
    let net = ellipse(8);
    let p = MaterialParams::symmetric(-0.7, 100.0).unwrap();
    let dt = 0.01;
    let cfg = StepperConfig { picard_tol: 1e-13, ..StepperConfig::new(dt, SchemeKind::SP) };
    let ours = solve_step(&net, spec, &p, &cfg).unwrap();
    let (x, mu) = dense_step(&net, spec, &p, dt);
    let (mut dx, mut dmu) = (0.0f64, 0.0f64);
    for j in 0..3 {
        for (a, b) in ours.network.curve_nodes(j).iter().zip(&x[j]) {
            dx = dx.max((a.x - b.x).abs()).max((a.y - b.y).abs());
        }
        for (a, b) in ours.mu[j].iter().zip(&mu[j]) {
            dmu = dmu.max((a - b).abs());
        }
    }
    (dx, dmu)
}
