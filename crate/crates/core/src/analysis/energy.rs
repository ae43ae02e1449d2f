use crate::anisotropy::{AnisotropySpec, CurveAnisotropy};
use crate::error::Result;
use crate::evolution::SingleCurve;
use crate::geometry::{frames_of, NetworkState};
use crate::scalar::Scalar;
use crate::scheme::MaterialParams;
use crate::vec2::Vec2;

/// Weighted length `Σ_k |h_k| γ(n_k)` of one polyline.
pub fn curve_energy<T: Scalar>(label: &str, nodes: &[Vec2<T>], anisotropy: &CurveAnisotropy<T>) -> Result<T> {
    frames_of(label, nodes)?;
    Ok(nodes.windows(2).map(|w| anisotropy.segment_energy(w[1] - w[0])).sum())
}

/// `Σ_j Σ_k |h_{j,k}| γ_j(n_{j,k}) − σ₁(x_C − x_A) − σ₂(x_B − x_C)`.
pub fn discrete_energy<T: Scalar>(
    network: &NetworkState<T>,
    spec: &AnisotropySpec<T>,
    params: &MaterialParams<T>,
) -> Result<T> {
    let mut e = T::zero();
    for j in 0..3 {
        e = e + curve_energy(crate::geometry::CurveRole::ALL[j].label(), &network.curve_nodes(j), spec.curve(j))?;
    }
    let (xa, xb, xc) = (network.contact(0).x, network.contact(1).x, network.contact(2).x);
    Ok(e - params.sigma1 * (xc - xa) - params.sigma2 * (xb - xc))
}

/// Weighted length minus `σ` times the contact span.
pub fn single_curve_energy<T: Scalar>(island: &SingleCurve<T>) -> Result<T> {
    let e = curve_energy(island.role.label(), &island.nodes, &island.anisotropy)?;
    let (lo, hi) = island.contact_span();
    Ok(e - island.sigma * (hi - lo))
}
