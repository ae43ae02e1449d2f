mod common;

use common::dense::step_deviation;
use dbfilm::anisotropy::{AnisotropySpec, CurveAnisotropy};

fn compare(spec: AnisotropySpec<f64>) {
    let (dx, dmu) = step_deviation(&spec);
    assert!(dx < 1e-10, "positions off by {dx:e}");
    assert!(dmu < 1e-10, "chemical potentials off by {dmu:e}");
}

#[test]
fn matches_dense_oracle_isotropic() {
    compare(AnisotropySpec::isotropic());
}

#[test]
fn matches_dense_oracle_weak_two_fold() {
    compare(AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 1.0 / 6.0)).unwrap());
}

#[test]
fn matches_dense_oracle_strong_two_fold() {
    compare(AnisotropySpec::uniform(CurveAnisotropy::kfold(2, 0.5)).unwrap());
}

#[test]
fn matches_dense_oracle_mixed_curves() {
    compare(
        AnisotropySpec::new([
            CurveAnisotropy::kfold(4, 1.0 / 19.0),
            CurveAnisotropy::isotropic(),
            CurveAnisotropy::kfold(2, 0.25).with_stabilizer(5.0),
        ])
        .unwrap(),
    );
}
