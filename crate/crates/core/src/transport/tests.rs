use std::sync::OnceLock;

use proptest::prelude::*;

use super::*;
use crate::dispersion::{locate_eigenvalues, trace_band};
use crate::model::{PotentialSpec, Truncation, WaveguideConfig};

struct Fixture {
    solver: DispersionSolver,
    band: Band,
}

fn fixture() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let cfg = WaveguideConfig::new(2, 1.5, PotentialSpec::well(10.0)).with_truncation(Truncation::new(32, 6, 2));
        let solver = DispersionSolver::new(cfg).unwrap();
        let grid: Vec<f64> = (0..21).map(|i| -0.2 + 0.1 * i as f64).collect();
        let seed = locate_eigenvalues(&solver, grid[10], (-7.0, -5.0), 12).unwrap().remove(0);
        let band = trace_band(&solver, &grid, &seed).unwrap();
        Fixture { solver, band }
    })
}

fn gaussian() -> WavepacketSpec {
    let f = fixture();
    build_packet(&f.solver, &f.band, Envelope::Gaussian { center: 0.8, width: 0.1 }, PacketOptions::default()).unwrap()
}

fn at(r: f64, y: f64) -> FieldPoint {
    FieldPoint { r, angles: Angles::Circle { theta: 0.4 }, y }
}

#[test]
fn lagrange_weights_reproduce_quintics() {
    let xs = [0.0, 0.3, 0.5, 0.9, 1.2, 1.6];
    let f = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.25 * x.powi(5);
    let df = |x: f64| -2.0 + 1.5 * x * x - 1.25 * x.powi(4);
    let (w, d) = lagrange(&xs, 0.77);
    let v: f64 = w.iter().zip(&xs).map(|(w, x)| w * f(*x)).sum();
    let dv: f64 = d.iter().zip(&xs).map(|(d, x)| d * f(*x)).sum();
    assert!((v - f(0.77)).abs() < 1e-13);
    assert!((dv - df(0.77)).abs() < 1e-12);
}

proptest! {
    #[test]
    fn lagrange_weights_partition_unity(x in -1.0f64..3.0) {
        let xs = [0.0, 0.4, 0.8, 1.2, 1.6, 2.0];
        let (w, d) = lagrange(&xs, x);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        prop_assert!(d.iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn stencil_stays_inside(x in -5.0f64..5.0) {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.5).collect();
        let s = stencil_start(&xs, x);
        prop_assert!(s + STENCIL <= xs.len());
    }
}

#[test]
fn packet_norm_matches_envelope() {
    let p = gaussian();
    let m = p.moments_fixed(0.0);
    let expect = p.expected_norm_squared();
    assert!((m.norm * m.norm - expect).abs() < 1e-6 * expect, "{} vs {expect}", m.norm * m.norm);
    assert!(m.edge_fraction < 1e-6);
}

#[test]
fn symmetric_packet_is_centred() {
    let m = gaussian().moments_fixed(0.0);
    assert!(m.x.iter().all(|x| x.abs() < 1e-10), "{:?}", m.x);
    assert!(m.y.abs() < 1e-6, "{}", m.y);
}

#[test]
fn evolution_conserves_norm_and_x() {
    let mut p = gaussian();
    let rec = transport_record(&mut p, &[0.0, 25.0, 50.0, 100.0]).unwrap();
    for i in 1..rec.times.len() {
        assert!((rec.norm[i] - rec.norm[0]).abs() < 1e-10 * rec.norm[0]);
        for (a, b) in rec.x[i].iter().zip(&rec.x[0]) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn evolve_at_zero_is_the_envelope() {
    let p = gaussian();
    assert_eq!(p.evolve(0.0), p.envelope_samples());
}

#[test]
fn ballistic_velocity() {
    let mut p = gaussian();
    let times: Vec<f64> = (0..=10).map(|i| 100.0 * i as f64).collect();
    let rec = transport_record(&mut p, &times).unwrap();
    let fit = velocity_fit(&rec, &p).unwrap();
    assert!((fit.v_expected - 1.6).abs() < 1e-6, "{}", fit.v_expected);
    assert!((fit.v_y - fit.v_expected).abs() < 1e-3, "{fit:?}");
    assert!(fit.max_deviation < 1e-2 * 1000.0);
    assert!(fit.x_drift < 1e-8);
    assert!(fit.v_x < 1e-10);
}

#[test]
fn velocity_fit_needs_long_records() {
    let mut p = gaussian();
    let rec = transport_record(&mut p, &[0.0, 10.0, 20.0]).unwrap();
    assert!(velocity_fit(&rec, &p).is_err());
}

#[test]
fn single_k_packet_is_bloch_like() {
    let f = fixture();
    let p = build_packet(&f.solver, &f.band, Envelope::Point { k: 0.8 }, PacketOptions::default()).unwrap();
    let cells = [-7, 0, 3, 40];
    let pt = [at(0.7, 0.3), at(2.5, 0.8)];
    let s0 = p.samples(0.0, &pt, &cells).unwrap();
    let s1 = p.samples(37.0, &pt, &cells).unwrap();
    for (row0, row1) in s0.iter().zip(&s1) {
        for (a, b) in row0.iter().zip(row1) {
            assert!((a.norm() - row0[0].norm()).abs() < 1e-12 * row0[0].norm());
            assert!((a.norm() - b.norm()).abs() < 1e-12 * a.norm());
        }
    }
}

#[test]
fn gaussian_packet_is_localized() {
    let p = gaussian();
    let pt = [at(0.7, 0.25)];
    let s = p.samples(0.0, &pt, &[0, 30, 60]).unwrap();
    let peak = s[0][0].norm();
    assert!(peak > 0.0);
    // |psi(p)| ~ exp(-(width p)^2 / 2)
    assert!(s[0][1].norm() < 0.05 * peak);
    assert!(s[0][2].norm() < 1e-6 * peak);
}

#[test]
fn samples_agree_with_moments_density() {
    // direct summation at the radial nodes reproduces the FFT-based norm
    let p = gaussian();
    let cells: Vec<i64> = (-60..=60).collect();
    let pts: Vec<FieldPoint> = p.radial_nodes.iter().map(|&r| at(r, 0.0)).collect();
    let s = p.samples(0.0, &pts, &cells).unwrap();
    let mut mass = 0.0;
    for (row, w) in s.iter().zip(&p.radial_weights) {
        // theta-independent single label: integrate over the circle analytically
        mass += w * 2.0 * PI * row.iter().map(|v| v.norm_sqr()).sum::<f64>();
    }
    let expect = p.expected_norm_squared();
    assert!((mass - expect).abs() < 1e-6 * expect, "{mass} vs {expect}");
}

#[test]
fn envelope_must_avoid_band_ends() {
    let f = fixture();
    let e = build_packet(&f.solver, &f.band, Envelope::Gaussian { center: 0.0, width: 0.1 }, PacketOptions::default());
    assert!(matches!(e, Err(Error::EnvelopeAtBandEdge)));
}

#[test]
fn degenerate_band_rejected() {
    let f = fixture();
    let mut band = f.band.clone();
    band.points[3].multiplicity = 2;
    let e = build_packet(&f.solver, &band, Envelope::Gaussian { center: 0.8, width: 0.1 }, PacketOptions::default());
    assert!(matches!(e, Err(Error::DegenerateBand(2))));
}

#[test]
fn csv_header() {
    let rec = TransportRecord { times: vec![0.0], x: vec![vec![0.0, 0.0]], y: vec![0.5], norm: vec![1.0], v_x: 0.0, v_y: 0.0 };
    let csv = rec.to_csv();
    assert_eq!(csv.lines().next().unwrap(), "t,X1,X2,Y,norm");
    assert_eq!(csv.lines().nth(1).unwrap(), "0.0,0.0,0.0,0.5,1.0");
}
