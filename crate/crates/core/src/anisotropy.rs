//! Anisotropic surface energy densities and the derived quantities used by
//! the scheme: the Cahn–Hoffman vector, the surface stiffness and the
//! stabilized surface-energy matrix `Z_K`.
//!
//! Orientation is measured by the tangent angle θ, with tangent
//! `τ = (cos θ, sin θ)` and outward normal `n = −τ^⊥ = (sin θ, −cos θ)`.
//! In this convention the gradient of the one-homogeneous extension
//! `γ̂(p) = |p| γ(p/|p|)` is `ξ = γ(θ) n + γ'(θ) τ`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vec2::{Mat2, Vec2};

/// Number of sampled orientations used by diagnostics and stabilizer
/// defaults for custom densities.
pub const STABILITY_SAMPLES: usize = 16384;

type AngleFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// User-supplied density `γ(θ)` with analytic first and second derivatives.
#[derive(Clone)]
pub struct CustomDensity<T> {
    pub name: String,
    pub gamma: AngleFn<T>,
    pub d1: AngleFn<T>,
    pub d2: AngleFn<T>,
}

impl<T> fmt::Debug for CustomDensity<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity").field("name", &self.name).finish_non_exhaustive()
    }
}

impl<T> CustomDensity<T> {
    pub fn new(
        name: impl Into<String>,
        gamma: impl Fn(T) -> T + Send + Sync + 'static,
        d1: impl Fn(T) -> T + Send + Sync + 'static,
        d2: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), gamma: Arc::new(gamma), d1: Arc::new(d1), d2: Arc::new(d2) }
    }
}

#[derive(Clone, Debug)]
pub enum AnisotropyKind<T> {
    Isotropic,
    /// `γ(θ) = 1 + β cos(kθ)`.
    KFold {
        k: u32,
        beta: T,
    },
    Custom(CustomDensity<T>),
}

impl<T: Scalar> AnisotropyKind<T> {
    #[inline]
    pub fn gamma_theta(&self, theta: T) -> T {
        match self {
            AnisotropyKind::Isotropic => T::one(),
            AnisotropyKind::KFold { k, beta } => T::one() + *beta * (T::of_usize(*k as usize) * theta).cos(),
            AnisotropyKind::Custom(c) => (c.gamma)(theta),
        }
    }

    /// `γ'(θ)`
    #[inline]
    pub fn dgamma_theta(&self, theta: T) -> T {
        match self {
            AnisotropyKind::Isotropic => T::zero(),
            AnisotropyKind::KFold { k, beta } => {
                let kf = T::of_usize(*k as usize);
                -*beta * kf * (kf * theta).sin()
            }
            AnisotropyKind::Custom(c) => (c.d1)(theta),
        }
    }

    /// `γ''(θ)`
    #[inline]
    pub fn d2gamma_theta(&self, theta: T) -> T {
        match self {
            AnisotropyKind::Isotropic => T::zero(),
            AnisotropyKind::KFold { k, beta } => {
                let kf = T::of_usize(*k as usize);
                -*beta * kf * kf * (kf * theta).cos()
            }
            AnisotropyKind::Custom(c) => (c.d2)(theta),
        }
    }

    /// `γ(θ) + γ''(θ)`
    pub fn stiffness(&self, theta: T) -> T {
        self.gamma_theta(theta) + self.d2gamma_theta(theta)
    }

    fn sampled<F: Fn(T) -> T>(f: F) -> impl Iterator<Item = T> {
        let two_pi = T::PI() + T::PI();
        (0..STABILITY_SAMPLES).map(move |i| f(two_pi * T::of_usize(i) / T::of_usize(STABILITY_SAMPLES)))
    }

    /// Upper-bound heuristic `2·max γ + 2·max |γ'|` used as the default stabilizer.
    pub fn default_stabilizer(&self) -> T {
        let two = T::lit(2.0);
        match self {
            AnisotropyKind::Isotropic => two,
            AnisotropyKind::KFold { k, beta } => {
                two * (T::one() + beta.abs()) + two * T::of_usize(*k as usize) * beta.abs()
            }
            AnisotropyKind::Custom(_) => {
                let gmax = Self::sampled(|t| self.gamma_theta(t)).fold(T::zero(), T::max);
                let dmax = Self::sampled(|t| self.dgamma_theta(t).abs()).fold(T::zero(), T::max);
                two * gmax + two * dmax
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            AnisotropyKind::Isotropic => "isotropic".to_string(),
            AnisotropyKind::KFold { k, beta } => format!("{k}-fold beta={beta}"),
            AnisotropyKind::Custom(c) => format!("custom `{}`", c.name),
        }
    }
}

/// Density and stabilizer of one curve.
#[derive(Clone, Debug)]
pub struct CurveAnisotropy<T> {
    pub kind: AnisotropyKind<T>,
    pub stabilizer: T,
}

#[inline]
pub fn theta_of_normal<T: Scalar>(n: Vec2<T>) -> T {
    n.x.atan2(-n.y)
}

#[inline]
pub fn theta_of_tangent<T: Scalar>(tau: Vec2<T>) -> T {
    tau.y.atan2(tau.x)
}

fn check_unit<T: Scalar>(what: &str, v: Vec2<T>) -> Result<()> {
    let dev = (v.norm() - T::one()).abs();
    if !(dev <= T::lit(1e-10)) {
        return Err(Error::contract(format!("{what} {:?} is not a unit vector (| |v| - 1 | = {dev})", v)));
    }
    Ok(())
}

/// Cahn–Hoffman vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XiVector<T>(pub Vec2<T>);

impl<T: Scalar> CurveAnisotropy<T> {
    /// Curve density with the default stabilizer.
    pub fn new(kind: AnisotropyKind<T>) -> Self {
        let stabilizer = kind.default_stabilizer();
        Self { kind, stabilizer }
    }

    pub fn isotropic() -> Self {
        Self::new(AnisotropyKind::Isotropic)
    }

    pub fn kfold(k: u32, beta: T) -> Self {
        Self::new(AnisotropyKind::KFold { k, beta })
    }

    pub fn with_stabilizer(mut self, k: T) -> Self {
        self.stabilizer = k;
        self
    }

    pub fn gamma(&self, n: Vec2<T>) -> Result<T> {
        check_unit("normal", n)?;
        Ok(self.kind.gamma_theta(theta_of_normal(n)))
    }

    pub fn xi(&self, tangent: Vec2<T>) -> Result<XiVector<T>> {
        check_unit("tangent", tangent)?;
        Ok(XiVector(self.xi_unchecked(tangent)))
    }

    #[inline]
    pub(crate) fn xi_unchecked(&self, tau: Vec2<T>) -> Vec2<T> {
        let theta = theta_of_tangent(tau);
        let n = -tau.perp();
        n.scale(self.kind.gamma_theta(theta)) + tau.scale(self.kind.dgamma_theta(theta))
    }

    pub fn stiffness(&self, theta: T) -> T {
        self.kind.stiffness(theta)
    }

    pub fn zk(&self, n: Vec2<T>) -> Result<Mat2<T>> {
        check_unit("normal", n)?;
        Ok(self.zk_unchecked(n))
    }

    /// `Z_K(n) = γ I − n ξᵀ − ξ nᵀ + K n nᵀ` for a unit normal.
    #[inline]
    pub(crate) fn zk_unchecked(&self, n: Vec2<T>) -> Mat2<T> {
        let theta = theta_of_normal(n);
        let tau = n.perp();
        let g = self.kind.gamma_theta(theta);
        let xi = n.scale(g) + tau.scale(self.kind.dgamma_theta(theta));
        Mat2::identity().scale(g) - Mat2::outer(n, xi) - Mat2::outer(xi, n) + Mat2::outer(n, n).scale(self.stabilizer)
    }

    /// Weighted segment energy `|h| γ(n)` for a non-degenerate segment.
    #[inline]
    pub(crate) fn segment_energy(&self, h: Vec2<T>) -> T {
        let len = h.norm();
        len * self.kind.gamma_theta(h.y.atan2(h.x))
    }

    pub fn validate(&self, curve: usize) -> Result<()> {
        let bad = |reason: String| Error::InvalidAnisotropy { curve, reason };
        match &self.kind {
            AnisotropyKind::Isotropic => {}
            AnisotropyKind::KFold { k, beta } => {
                if *k < 2 || k % 2 != 0 {
                    return Err(bad(format!("k = {k} must be an even integer >= 2")));
                }
                if !(*beta >= T::zero()) {
                    return Err(bad(format!("beta = {beta} must be >= 0")));
                }
                if !(*beta < T::one()) {
                    return Err(bad(format!("beta = {beta} makes gamma non-positive")));
                }
            }
            AnisotropyKind::Custom(_) => {
                let min = AnisotropyKind::<T>::sampled(|t| self.kind.gamma_theta(t)).fold(T::infinity(), T::min);
                if !(min > T::zero()) {
                    return Err(bad(format!("gamma attains non-positive value {min}")));
                }
            }
        }
        if !(self.stabilizer >= T::zero()) || !self.stabilizer.is_finite() {
            return Err(bad(format!("stabilizer K = {} must be finite and >= 0", self.stabilizer)));
        }
        Ok(())
    }
}

/// Per-curve densities for the three interfaces, indexed by curve role.
#[derive(Clone, Debug)]
pub struct AnisotropySpec<T> {
    pub curves: [CurveAnisotropy<T>; 3],
}

impl<T: Scalar> AnisotropySpec<T> {
    pub fn new(curves: [CurveAnisotropy<T>; 3]) -> Result<Self> {
        for (j, c) in curves.iter().enumerate() {
            c.validate(j + 1)?;
        }
        Ok(Self { curves })
    }

    /// The same density on all three curves.
    pub fn uniform(curve: CurveAnisotropy<T>) -> Result<Self> {
        Self::new([curve.clone(), curve.clone(), curve])
    }

    pub fn isotropic() -> Self {
        Self { curves: [CurveAnisotropy::isotropic(), CurveAnisotropy::isotropic(), CurveAnisotropy::isotropic()] }
    }

    pub fn curve(&self, j: usize) -> &CurveAnisotropy<T> {
        &self.curves[j]
    }

    pub fn gamma(&self, j: usize, n: Vec2<T>) -> Result<T> {
        self.curve_checked(j)?.gamma(n)
    }

    pub fn xi_vector(&self, j: usize, tangent: Vec2<T>) -> Result<XiVector<T>> {
        self.curve_checked(j)?.xi(tangent)
    }

    pub fn stiffness(&self, j: usize, theta: T) -> Result<T> {
        Ok(self.curve_checked(j)?.stiffness(theta))
    }

    pub fn zk_matrix(&self, j: usize, n: Vec2<T>) -> Result<Mat2<T>> {
        self.curve_checked(j)?.zk(n)
    }

    fn curve_checked(&self, j: usize) -> Result<&CurveAnisotropy<T>> {
        self.curves.get(j).ok_or_else(|| Error::contract(format!("curve index {j} out of range 0..3")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AnisotropyClass {
    Isotropic,
    Weak,
    Strong,
}

impl fmt::Display for AnisotropyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnisotropyClass::Isotropic => "isotropic",
            AnisotropyClass::Weak => "weakly anisotropic",
            AnisotropyClass::Strong => "strongly anisotropic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveStability {
    pub curve: usize,
    pub description: String,
    pub class: AnisotropyClass,
    pub min_stiffness: f64,
    /// Whether `γ(−n) < 3γ(n)` held at every sampled orientation.
    pub reflection_condition: bool,
    pub stabilizer: f64,
    pub stabilizer_floor: f64,
}

impl CurveStability {
    pub fn stabilizer_warning(&self) -> bool {
        self.stabilizer < self.stabilizer_floor
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityReport {
    pub curves: Vec<CurveStability>,
}

impl StabilityReport {
    pub fn all_conditions_hold(&self) -> bool {
        self.curves.iter().all(|c| c.reflection_condition && !c.stabilizer_warning())
    }
}

impl fmt::Display for StabilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.curves {
            writeln!(
                f,
                "curve {}: {} -> {} (min stiffness {:.6}); gamma(-n) < 3 gamma(n): {}; K = {} (heuristic floor {}){}",
                c.curve,
                c.description,
                c.class,
                c.min_stiffness,
                if c.reflection_condition { "holds" } else { "VIOLATED" },
                c.stabilizer,
                c.stabilizer_floor,
                if c.stabilizer_warning() { " WARNING: K below floor" } else { "" }
            )?;
        }
        Ok(())
    }
}

/// Samples every curve's density and reports anisotropy strength, the
/// reflection condition required for energy stability and the stabilizer.
pub fn stability_check<T: Scalar>(spec: &AnisotropySpec<T>) -> StabilityReport {
    let two_pi = T::PI() + T::PI();
    let curves = spec
        .curves
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut min_stiff = T::infinity();
            let mut reflection = true;
            for i in 0..STABILITY_SAMPLES {
                let theta = two_pi * T::of_usize(i) / T::of_usize(STABILITY_SAMPLES);
                min_stiff = min_stiff.min(c.kind.stiffness(theta));
                let g = c.kind.gamma_theta(theta);
                let g_opp = c.kind.gamma_theta(theta + T::PI());
                if !(g_opp < T::lit(3.0) * g) {
                    reflection = false;
                }
            }
            let class = match &c.kind {
                AnisotropyKind::Isotropic => AnisotropyClass::Isotropic,
                AnisotropyKind::KFold { beta, .. } if *beta == T::zero() => AnisotropyClass::Isotropic,
                AnisotropyKind::KFold { k, beta } => {
                    let threshold = T::one() / T::of_usize((k * k - 1) as usize);
                    if *beta < threshold {
                        AnisotropyClass::Weak
                    } else {
                        AnisotropyClass::Strong
                    }
                }
                AnisotropyKind::Custom(_) => {
                    if min_stiff > T::zero() {
                        AnisotropyClass::Weak
                    } else {
                        AnisotropyClass::Strong
                    }
                }
            };
            if let AnisotropyKind::KFold { k, beta } = &c.kind {
                min_stiff = min_stiff.min(T::one() - T::of_usize((k * k - 1) as usize) * *beta);
            }
            CurveStability {
                curve: j + 1,
                description: c.kind.describe(),
                class,
                min_stiffness: min_stiff.as_f64(),
                reflection_condition: reflection,
                stabilizer: c.stabilizer.as_f64(),
                stabilizer_floor: c.kind.default_stabilizer().as_f64(),
            }
        })
        .collect();
    StabilityReport { curves }
}
