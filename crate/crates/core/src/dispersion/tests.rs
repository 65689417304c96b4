use super::*;
use crate::exterior::exterior_dtn_diag;
use crate::harmonics::Angles;
use crate::interior::free_interior_dtn_diag;
use crate::linalg::{hermitian_defect, norm2};
use crate::model::{PotentialSpec, RadialProfile, Truncation};
use crate::oracles::{radial_bound_states, RadialProblem};
use std::f64::consts::PI;

fn solver(pot: PotentialSpec, radius: f64, trunc: Truncation) -> DispersionSolver {
    DispersionSolver::new(WaveguideConfig::new(2, radius, pot).with_truncation(trunc)).unwrap()
}

fn small() -> Truncation {
    Truncation::new(32, 6, 2)
}

fn mu(l: u32) -> f64 {
    radial_bound_states(&RadialProblem::new(2, l, RadialProfile::well(10.0), 1.0), 1)[0]
}

#[test]
fn free_lambda_three_routes_agree() {
    let s = solver(PotentialSpec::zero(), 1.5, Truncation::new(40, 8, 2));
    let k = C64::new(0.6, 0.0);
    let e = -2.5;
    let dtn = s.assemble_at(k, e, 1.5, None).unwrap();
    let sq = dtn.admissible_square();
    let inner = free_interior_dtn_diag(k, e, &dtn.basis, 1.5).unwrap();
    let outer = exterior_dtn_diag(&dtn.basis, 1.5).unwrap().diagonal;
    let wronskian = free_dtn_diag(&dtn.basis, 1.5).unwrap();
    for i in 0..dtn.basis.len() {
        let w = wronskian[i];
        assert!((inner[i] - outer[i] - w).norm() <= 1e-10 * w.norm(), "closed forms at {i}");
        assert!((sq[(i, i)] - w).norm() <= 1e-10 * w.norm(), "assembled at {:?}", dtn.basis.modes[i]);
    }
}

#[test]
fn coupled_lambda_is_hermitian() {
    let s = solver(PotentialSpec::coupled_well(-8.0, 1.5), 1.5, small());
    let dtn = s.assemble_at(C64::new(0.9, 0.0), -4.1, 1.5, None).unwrap();
    let sq = dtn.admissible_square();
    assert!(hermitian_defect(&sq) <= 1e-8 * norm2(&sq).unwrap());
}

#[test]
fn free_sigma_min_is_smallest_weighted_entry() {
    let s = solver(PotentialSpec::zero(), 1.5, small());
    let dtn = s.assemble(C64::new(0.0, 0.0), -1.0).unwrap();
    let diag = free_dtn_diag(&dtn.basis, dtn.radius).unwrap();
    let expect = dtn
        .basis
        .modes
        .iter()
        .zip(&diag)
        .map(|(m, d)| d.norm() / m.weight_about(dtn.basis.j_center).sqrt())
        .fold(f64::INFINITY, f64::min);
    let sig = dtn.sigma_min().unwrap();
    assert!(expect > 0.0);
    assert!((sig - expect).abs() < 1e-10 * expect);
}

#[test]
fn free_operator_has_no_eigenvalues() {
    let s = solver(PotentialSpec::zero(), 1.5, small());
    assert!(locate_eigenvalues(&s, 0.0, (-5.0, -0.1), 24).unwrap().is_empty());
}

#[test]
fn separable_ground_state_located() {
    let s = solver(PotentialSpec::well(10.0), 1.5, small());
    let k = 0.5;
    let found = locate_eigenvalues(&s, k, (-7.5, -5.0), 16).unwrap();
    assert_eq!(found.len(), 1);
    let p = &found[0];
    assert!((p.lambda - (mu(0) + k * k)).abs() < 1e-6, "{} vs {}", p.lambda, mu(0) + k * k);
    assert_eq!(p.multiplicity, 1);
    assert!(p.accepted(s.kernel_tol()));
    assert!((p.residual - p.sigma_min).abs() <= 1e-6 * p.norm);
    let f = &kernel_boundary_data(p)[0];
    let norm: f64 = f.coefficients.iter().map(|c| c.norm_sqr()).sum();
    assert!((norm - 1.0).abs() < 1e-12);
    let leak: f64 = f
        .basis
        .iter()
        .zip(&f.coefficients)
        .filter(|(m, _)| !(m.j == 0 && m.l == 0))
        .map(|(_, c)| c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    assert!(leak < 1e-8);
}

#[test]
fn symmetric_pair_is_doubly_degenerate() {
    let s = solver(PotentialSpec::well(10.0), 1.5, small());
    let k = 0.3;
    let target = mu(1) + k * k;
    let found = locate_eigenvalues(&s, k, (target - 0.3, target + 0.3), 12).unwrap();
    assert_eq!(found.len(), 1);
    assert_eq!(found[0].multiplicity, 2);
    assert_eq!(found[0].kernel.len(), 2);
    assert!((found[0].lambda - target).abs() < 1e-6);
    let a = &found[0].kernel[0];
    let b = &found[0].kernel[1];
    assert!(inner(a, b).norm() < 1e-12);
}

#[test]
fn eigenvalue_independent_of_radius() {
    let k = 0.8;
    let a = locate_eigenvalues(&solver(PotentialSpec::well(10.0), 1.5, small()), k, (-7.0, -5.0), 12).unwrap();
    let b = locate_eigenvalues(&solver(PotentialSpec::well(10.0), 1.8, small()), k, (-7.0, -5.0), 12).unwrap();
    assert_eq!(a.len(), 1);
    assert_eq!(b.len(), 1);
    assert!((a[0].lambda - b[0].lambda).abs() < 1e-6);
}

#[test]
fn refinement_width_is_stable() {
    let s = solver(PotentialSpec::well(10.0), 1.5, small());
    let k = 0.5;
    let a = locate_with(&s, k, (-7.0, -5.0), LocateOptions::new(12, 1e-10)).unwrap();
    let b = locate_with(&s, k, (-7.0, -5.0), LocateOptions::new(12, 5e-11)).unwrap();
    assert!((a[0].lambda - b[0].lambda).abs() < 1e-8);
}

#[test]
fn separable_band_traced() {
    let s = solver(PotentialSpec::well(10.0), 1.5, small());
    let grid: Vec<f64> = (0..11).map(|i| 0.1 + (PI - 0.2) * i as f64 / 10.0).collect();
    let seed = locate_eigenvalues(&s, grid[0], (-7.5, -5.0), 12).unwrap().remove(0);
    let band = trace_band(&s, &grid, &seed).unwrap();
    assert_eq!(band.points.len(), grid.len());
    assert_eq!(band.stop_high, StopReason::GridEnd);
    let m0 = mu(0);
    for p in &band.points {
        assert!((p.lambda - (m0 + p.k * p.k)).abs() < 1e-6, "k = {}", p.k);
    }
    for g in &band.gradient {
        assert!((g.dlambda_dk - 2.0 * g.k).abs() < 1e-4);
        assert!(!g.flat);
    }
    assert!(band.points.windows(2).all(|w| w[0].k < w[1].k));
}

#[test]
fn unaccepted_seed_is_rejected() {
    let s = solver(PotentialSpec::well(10.0), 1.5, small());
    let bogus = s.band_point(0.5, -6.0, 1.5).unwrap();
    assert!(matches!(trace_band(&s, &[0.5, 0.6, 0.7], &bogus), Err(Error::SeedRejected { .. })));
}

#[test]
fn gradient_flags() {
    let ks: Vec<f64> = (0..9).map(|i| i as f64 * 0.25).collect();
    let flat = gradient_samples(&ks, &vec![-3.0; 9]).unwrap();
    assert!(flat.iter().all(|g| g.flat));
    let ks: Vec<f64> = (0..9).map(|i| PI - 1.0 + i as f64 * 0.25).collect();
    let ls: Vec<f64> = ks.iter().map(|k| (k - PI).powi(2)).collect();
    let g = gradient_samples(&ks, &ls).unwrap();
    let flagged: Vec<f64> = g.iter().filter(|s| s.flat).map(|s| s.k).collect();
    assert_eq!(flagged.len(), 1);
    assert!((flagged[0] - PI).abs() < 1e-12);
    assert!(gradient_samples(&ks[..2], &ls[..2]).is_err());
}

#[test]
fn eigenfunction_is_consistent() {
    let s = solver(PotentialSpec::well(10.0), 1.5, small());
    let k = 0.5;
    let p = locate_eigenvalues(&s, k, (-7.5, -5.0), 12).unwrap().remove(0);
    let ef = Eigenfunction::new(&s, &p, 0).unwrap();
    assert!(ef.derivative_mismatch().unwrap() < 1e-4);
    let at = |r: f64| FieldPoint { r, angles: Angles::Circle { theta: 0.3 }, y: 0.2 };
    let inside = ef.value(&at(ef.radius)).unwrap();
    let outside = ef.value(&at(ef.radius * (1.0 + 1e-12))).unwrap();
    assert!((inside - outside).norm() < 1e-6 * inside.norm());
    // tail decays like exp(-sqrt(k^2 - lambda) r) up to the algebraic factor r^{-1/2}
    let z = (k * k - p.lambda).sqrt();
    let (r1, r2) = (5.0, 7.0);
    let v1 = ef.value(&at(r1)).unwrap().norm() * r1.sqrt();
    let v2 = ef.value(&at(r2)).unwrap().norm() * r2.sqrt();
    let rate = (v1 / v2).ln() / (r2 - r1);
    assert!((rate - z).abs() < 0.02 * z, "rate {rate} vs {z}");
    let samples = reconstruct_eigenfunction(&s, &p, &[at(0.5), at(3.0)]).unwrap();
    assert!(samples[0].norm() > samples[1].norm());
}

#[test]
fn thomas_growth() {
    let cfg = WaveguideConfig::new(2, 1.5, PotentialSpec::zero()).with_truncation(Truncation::new(40, 10, 4));
    let ts: Vec<f64> = (0..10).map(|i| 5.0 + 5.0 * i as f64).collect();
    let scan = thomas_scan(&cfg, 1.0, -2.0, &ts).unwrap();
    assert!(scan.sigma.windows(2).all(|w| w[1] > w[0]), "{:?}", scan.sigma);
    let ts: Vec<f64> = (0..12).map(|i| 10.0 * (20.0f64).powf(i as f64 / 11.0)).collect();
    let fit = thomas_scan(&cfg, 1.0, -2.0, &ts).unwrap();
    assert!(fit.exponent >= 0.28, "exponent {}", fit.exponent);
    let zero = thomas_scan(&cfg, 1.0, -2.0, &[0.0]).unwrap().sigma[0];
    let s = DispersionSolver::new(cfg).unwrap();
    let real = s.assemble(C64::new(1.0, 0.0), -2.0).unwrap();
    // the real free operator at R = cfg.radius when no Dirichlet shift is needed
    assert_eq!(real.radius, 1.5);
    assert!((zero - real.sigma_min().unwrap()).abs() < 1e-8 * zero);
}
