use std::f64::consts::PI;

use cyldtn::dispersion::locate_eigenvalues;
use cyldtn::oracles::continuum_threshold;
use cyldtn::{BoundaryData, DispersionSolver, PotentialSpec, Truncation, WaveguideConfig};

fn coupled() -> DispersionSolver {
    let cfg = WaveguideConfig::new(2, 1.5, PotentialSpec::coupled_well(-8.0, -1.0)).with_truncation(Truncation::new(32, 6, 2));
    DispersionSolver::new(cfg).unwrap()
}

#[test]
fn band_is_even_about_pi() {
    let s = coupled();
    let k = 0.7;
    let window = (-9.5, continuum_threshold(k) - 0.05);
    let a = locate_eigenvalues(&s, k, window, 24).unwrap();
    let b = locate_eigenvalues(&s, 2.0 * PI - k, window, 24).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(&b) {
        assert!((p.lambda - q.lambda).abs() < 1e-8, "{} vs {}", p.lambda, q.lambda);
        assert_eq!(p.multiplicity, q.multiplicity);
    }
}

#[test]
fn kernel_json_roundtrip() {
    let s = coupled();
    let p = locate_eigenvalues(&s, 0.7, (-5.0, -4.0), 16).unwrap().remove(0);
    assert!(p.accepted(s.kernel_tol()));
    let f = &p.kernel[0];
    let back = BoundaryData::from_json(&f.to_json()).unwrap();
    assert_eq!(&back, f);
}

#[test]
fn invalid_configs_rejected() {
    assert!(DispersionSolver::new(WaveguideConfig::new(2, 1.0, PotentialSpec::zero())).is_err());
    assert!(DispersionSolver::new(WaveguideConfig::new(4, 1.5, PotentialSpec::zero())).is_err());
}
