//! Acceptance criteria on the reference configuration (n = 2, m = 1).
//!
//! Each criterion returns a report with the measured quantity and its
//! tolerance; a numerical failure inside a criterion is reported as FAIL.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dispersion::{locate_eigenvalues, thomas_scan, trace_band, Band, DispersionSolver};
use crate::error::{Error, Result};
use crate::interior::{assemble_interior, dirichlet_eigs, dirichlet_spectrum, free_interior_dtn_diag, interior_dtn, Discretization};
use crate::linalg::{hermitian_defect, norm2};
use crate::model::{PotentialSpec, RadialProfile, Truncation, WaveguideConfig};
use crate::oracles::{box_discretization, box_eigs, continuum_threshold, radial_bound_states, RadialProblem};
use crate::specfun::{bessel_i, bessel_k, log_derivatives, p_product, wronskian_residual};
use crate::transport::{build_packet, transport_record, velocity_fit, Envelope, PacketOptions};
use crate::C64;

/// Square of the first zero of J_0.
pub const J01_SQUARED: f64 = 5.783_185_962_946_784;

pub const CRITERIA: [u32; 12] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CriterionReport {
    fn new(id: u32, title: &str, measured: f64, tolerance: f64, passed: bool, detail: String) -> Self {
        Self { id, title: title.to_string(), passed, measured, tolerance, detail }
    }

    fn failed(id: u32, title: &str, err: Error) -> Self {
        Self::new(id, title, f64::NAN, f64::NAN, false, format!("error: {err}"))
    }

    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {} {}: measured {:.3e} (tol {:.1e}){}{}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.measured,
            self.tolerance,
            if self.detail.is_empty() { "" } else { "; " },
            self.detail
        )
    }
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "free DtN triple identity",
        2 => "Wronskian and recurrences",
        3 => "interior discretization convergence",
        4 => "Hermiticity",
        5 => "separable oracle band",
        6 => "non-separable oracle",
        7 => "radius independence",
        8 => "Dirichlet spectrum",
        9 => "Thomas growth",
        10 => "P_nu bound stability",
        11 => "ballistic transport",
        12 => "conjugation symmetry",
        13 => "thread determinism",
        _ => "unknown",
    }
}

/// Reference settings shared by all criteria, with the separable band cached.
pub struct Suite {
    pub radius: f64,
    pub trunc: Truncation,
    band: OnceLock<std::result::Result<(Band, f64), Error>>,
}

const WELL_DEPTH: f64 = 10.0;

fn separable_grid() -> Vec<f64> {
    (0..20).map(|i| 0.1 + (PI - 0.2) * i as f64 / 19.0).collect()
}

impl Suite {
    pub fn new(radius: f64, trunc: Truncation) -> Self {
        Self { radius, trunc, band: OnceLock::new() }
    }

    pub fn reference() -> Self {
        Self::new(1.5, Truncation::default())
    }

    fn config(&self, potential: PotentialSpec) -> WaveguideConfig {
        WaveguideConfig::new(2, self.radius, potential).with_truncation(self.trunc)
    }

    fn disc(&self) -> Discretization {
        Discretization::from_truncation(&self.trunc)
    }

    fn ground_mu(&self) -> f64 {
        radial_bound_states(&RadialProblem::new(2, 0, RadialProfile::well(WELL_DEPTH), 1.0), 1)[0]
    }

    fn separable_solver(&self, radius: f64) -> Result<DispersionSolver> {
        DispersionSolver::new(self.config(PotentialSpec::well(WELL_DEPTH)).with_radius(radius))
    }

    fn trace_separable(&self, radius: f64) -> Result<Band> {
        let solver = self.separable_solver(radius)?;
        let grid = separable_grid();
        let seed = first_point(&solver, grid[0], self.ground_mu() + grid[0] * grid[0])?;
        trace_band(&solver, &grid, &seed)
    }

    /// Band at the configured radius and the oracle mu_0.
    fn separable_band(&self) -> Result<&(Band, f64)> {
        self.band
            .get_or_init(|| Ok((self.trace_separable(self.radius)?, self.ground_mu())))
            .as_ref()
            .map_err(|e| e.clone())
    }

    pub fn run(&self, id: u32) -> CriterionReport {
        let t = title(id);
        let out = match id {
            1 => self.free_identity(false),
            2 => self.specfun_identities(),
            3 => self.interior_convergence(),
            4 => self.hermiticity(),
            5 => self.separable(),
            6 => self.non_separable(),
            7 => self.radius_independence(),
            8 => self.dirichlet(),
            9 => self.thomas(),
            10 => self.p_bound(),
            11 => self.transport(),
            12 => self.symmetry(),
            _ => Err(Error::InvalidConfig(format!("no criterion {id}"))),
        };
        out.unwrap_or_else(|e| CriterionReport::failed(id, t, e))
    }

    pub fn run_all(&self) -> Vec<CriterionReport> {
        CRITERIA.iter().map(|&id| self.run(id)).collect()
    }

    /// Criterion 1 with the residual written as inner - outer + 1/(R P).
    pub fn free_identity_as_stated(&self) -> CriterionReport {
        self.free_identity(true).unwrap_or_else(|e| CriterionReport::failed(1, title(1), e))
    }

    fn free_identity(&self, stated_sign: bool) -> Result<CriterionReport> {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = self.radius;
        let n = 2.0;
        let mut worst = 0.0f64;
        let mut other = 0.0f64;
        for _ in 0..50 {
            let nu = rng.random_range(0.0..20.0);
            let z = C64::from_polar(rng.random_range(0.05..30.0), rng.random_range(-1.5..1.5));
            let (dk, di) = log_derivatives(nu, z * r)?;
            let inner = C64::new((1.0 - n / 2.0) / r, 0.0) + z * di;
            let outer = C64::new((1.0 - n / 2.0) / r, 0.0) + z * dk;
            let wr = 1.0 / (r * p_product(nu, z * r)?);
            let scale = inner.norm().max(outer.norm()).max(wr.norm());
            let (a, b) = ((inner - outer - wr).norm() / scale, (inner - outer + wr).norm() / scale);
            let (res, alt) = if stated_sign { (b, a) } else { (a, b) };
            worst = worst.max(res);
            other = other.max(alt);
        }
        let tol = 1e-10;
        let detail = if stated_sign {
            format!("residual of inner - outer - 1/(R P) is {other:.1e}")
        } else {
            format!("residual with inner - outer = -1/(R P) is {other:.1e}")
        };
        let name = if stated_sign { "free DtN triple identity, -1/(R P) sign" } else { "free DtN triple identity, +1/(R P) sign" };
        Ok(CriterionReport::new(1, name, worst, tol, worst <= tol, detail))
    }

    fn specfun_identities(&self) -> Result<CriterionReport> {
        let nus = [0.0, 0.25, 0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 35.0, 50.0];
        let rhos = [0.01, 0.1, 1.0, 3.0, 10.0, 30.0, 100.0, 1000.0];
        let phis = [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5];
        let (mut wr, mut rec) = (0.0f64, 0.0f64);
        for &nu in &nus {
            for &rho in &rhos {
                for &phi in &phis {
                    let z = C64::from_polar(rho, phi);
                    wr = wr.max(wronskian_residual(nu, z)?);
                    if nu >= 1.0 {
                        let k0 = bessel_k(nu, z)?;
                        let (kp, km) = (bessel_k(nu + 1.0, z)?.ratio(&k0), bessel_k(nu - 1.0, z)?.ratio(&k0));
                        let t = 2.0 * nu / z;
                        rec = rec.max((kp - km - t).norm() / kp.norm().max(km.norm()).max(t.norm()));
                        let i0 = bessel_i(nu, z)?;
                        let (ip, im) = (bessel_i(nu + 1.0, z)?.ratio(&i0), bessel_i(nu - 1.0, z)?.ratio(&i0));
                        rec = rec.max((im - ip - t).norm() / ip.norm().max(im.norm()).max(t.norm()));
                    }
                }
            }
        }
        let worst = wr.max(rec);
        let tol = 1e-12;
        Ok(CriterionReport::new(2, title(2), worst, tol, worst <= tol, format!("Wronskian {wr:.1e}, recurrences {rec:.1e}")))
    }

    fn interior_convergence(&self) -> Result<CriterionReport> {
        let cfg = self.config(PotentialSpec::zero());
        let (k, e) = (C64::new(0.5, 0.0), -2.0);
        let basis = cfg.admissible(k, e, false)?;
        let exact = free_interior_dtn_diag(k, e, &basis, self.radius)?;
        let keep: Vec<usize> = (0..basis.len())
            .filter(|&i| {
                let z = crate::model::decay_rate(k, e, basis.modes[i].j);
                (z * self.radius).norm() <= 20.0
            })
            .collect();
        let err = |n_r: usize| -> Result<f64> {
            let op = assemble_interior(k, e, &cfg, &self.disc().with_nodes(n_r))?;
            let d = interior_dtn(&op, &basis)?;
            let mut worst = 0.0f64;
            for &a in &keep {
                for &b in &keep {
                    let target = if a == b { exact[a] } else { C64::new(0.0, 0.0) };
                    worst = worst.max((d[(a, b)] - target).norm());
                }
            }
            Ok(worst)
        };
        let (e24, e48) = (err(24)?, err(48)?);
        let tol = 1e-8;
        let passed = e48 <= tol && e24 >= 10.0 * e48;
        Ok(CriterionReport::new(3, title(3), e48, tol, passed, format!("N_r = 24 error {e24:.2e}, ratio {:.1}", e24 / e48)))
    }

    fn coupled(&self) -> PotentialSpec {
        PotentialSpec::coupled_well(-8.0, -1.0)
    }

    fn hermiticity(&self) -> Result<CriterionReport> {
        let solver = DispersionSolver::new(self.config(self.coupled()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut worst = 0.0f64;
        let mut done = 0;
        let mut skipped = 0;
        while done < 20 {
            let k = rng.random_range(0.0..2.0 * PI);
            let e = rng.random_range(-9.0..3.0);
            let dtn = match solver.assemble(C64::new(k, 0.0), e) {
                Ok(d) => d,
                Err(Error::NearCrossing { .. } | Error::NoClearRadius { .. } | Error::DirichletProximity { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(err) => return Err(err),
            };
            let sq = dtn.admissible_square();
            worst = worst.max(hermitian_defect(&sq) / norm2(&sq)?);
            done += 1;
        }
        let tol = 1e-8;
        Ok(CriterionReport::new(4, title(4), worst, tol, worst <= tol, format!("20 points, {skipped} redrawn")))
    }

    fn separable(&self) -> Result<CriterionReport> {
        let (band, mu) = self.separable_band()?;
        let dev = band.points.iter().map(|p| (p.lambda - (mu + p.k * p.k)).abs()).fold(0.0, f64::max);
        let gdev = band.gradient.iter().map(|g| (g.dlambda_dk - 2.0 * g.k).abs()).fold(0.0, f64::max);
        let tol = 1e-6;
        let passed = band.points.len() == 20 && dev <= tol && gdev <= 1e-4;
        Ok(CriterionReport::new(
            5,
            title(5),
            dev,
            tol,
            passed,
            format!("{} of 20 k-points, gradient deviation {gdev:.2e} (tol 1e-4)", band.points.len()),
        ))
    }

    fn non_separable(&self) -> Result<CriterionReport> {
        let k = 0.7;
        let cfg = self.config(self.coupled());
        let solver = DispersionSolver::new(cfg)?;
        let found = locate_eigenvalues(&solver, k, (-9.5, continuum_threshold(k) - 0.05), 24)?;
        let lambda = found.first().ok_or_else(|| Error::InvalidConfig("no sub-threshold eigenvalue found".into()))?.lambda;
        let disc = box_discretization(&self.disc(), 12.0, 28);
        let reference = box_eigs(2, &self.coupled(), k, 12.0, &disc, 1)?[0];
        let dev = (lambda - reference).abs();
        let tol = 1e-3;
        Ok(CriterionReport::new(6, title(6), dev, tol, dev <= tol, format!("DtN {lambda:.10}, box {reference:.10}")))
    }

    fn radius_independence(&self) -> Result<CriterionReport> {
        let (band, mu) = self.separable_band()?;
        let other = self.trace_separable(1.8)?;
        let mut dev = 0.0f64;
        for (a, b) in band.points.iter().zip(&other.points) {
            dev = dev.max((a.lambda - b.lambda).abs());
        }
        // the j = -1 Dirichlet level crosses the band near k = pi; put a k-point on it
        let cfg = self.config(PotentialSpec::well(WELL_DEPTH));
        let levels = dirichlet_spectrum(0.0, self.radius, &cfg, &self.disc())?;
        let mu_d = levels.iter().filter(|l| l.l == 0).map(|l| l.value.re).fold(f64::INFINITY, f64::min);
        let kx = PI + (mu_d - mu) / (4.0 * PI);
        let ex = mu + kx * kx;
        let at = |r: f64| -> Result<crate::dispersion::BandPoint> { first_point(&self.separable_solver(r)?, kx, ex) };
        let (p15, p18) = (at(self.radius)?, at(1.8)?);
        dev = dev.max((p15.lambda - p18.lambda).abs());
        let tol = 1e-6;
        let passed = other.points.len() == band.points.len() && p15.radius_shifted && dev <= tol;
        Ok(CriterionReport::new(
            7,
            title(7),
            dev,
            tol,
            passed,
            format!(
                "{} k-points plus k = {kx:.6} on a Dirichlet level (R moved {} -> {:.2})",
                band.points.len(),
                self.radius,
                p15.radius
            ),
        ))
    }

    fn dirichlet(&self) -> Result<CriterionReport> {
        let cfg = self.config(PotentialSpec::zero());
        let disc = self.disc();
        let lowest = |r: f64| -> Result<f64> { Ok(dirichlet_eigs(0.0, r, 1, &cfg, &disc)?[0]) };
        let dev = (lowest(1.0)? - J01_SQUARED).abs();
        let values: Vec<f64> = (0..=10).map(|i| lowest(1.0 + 0.1 * i as f64)).collect::<Result<_>>()?;
        let monotone = values.windows(2).all(|w| w[1] < w[0]);
        let tol = 1e-4;
        Ok(CriterionReport::new(8, title(8), dev, tol, dev <= tol && monotone, format!("strictly decreasing on R in [1, 2]: {monotone}")))
    }

    fn thomas(&self) -> Result<CriterionReport> {
        let cfg = self.config(PotentialSpec::zero());
        let ts: Vec<f64> = (1..=20).map(|i| 10.0 * i as f64).collect();
        let scan = thomas_scan(&cfg, 1.0, -1.0, &ts)?;
        let monotone = scan.sigma.windows(2).all(|w| w[1] > w[0]);
        let tol = 0.28;
        Ok(CriterionReport::new(
            9,
            title(9),
            scan.exponent,
            tol,
            monotone && scan.exponent >= tol,
            format!("monotone: {monotone}"),
        ))
    }

    fn p_bound(&self) -> Result<CriterionReport> {
        let coarse = p_bound_sup(1)?;
        let fine = p_bound_sup(2)?;
        let change = (fine - coarse).abs() / coarse;
        let tol = 0.05;
        Ok(CriterionReport::new(10, title(10), change, tol, change <= tol, format!("sup {coarse:.6} -> {fine:.6}")))
    }

    fn transport(&self) -> Result<CriterionReport> {
        let solver = self.separable_solver(self.radius)?;
        let grid: Vec<f64> = (0..27).map(|i| -0.5 + 0.1 * i as f64).collect();
        let mu = self.ground_mu();
        let seed = first_point(&solver, grid[13], mu + grid[13] * grid[13])?;
        let band = trace_band(&solver, &grid, &seed)?;
        let k_star = 0.8;
        let mut packet = build_packet(&solver, &band, Envelope::Gaussian { center: k_star, width: 0.15 }, PacketOptions::default())?;
        let times: Vec<f64> = (0..=10).map(|i| 100.0 * i as f64).collect();
        let rec = transport_record(&mut packet, &times)?;
        let fit = velocity_fit(&rec, &packet)?;
        let dev = (fit.v_y - fit.v_expected).abs();
        let dev_k = (fit.v_y - 2.0 * k_star).abs();
        let tol = 1e-3;
        let passed = fit.x_drift <= 1e-8 && dev <= tol && dev_k <= 1e-2;
        Ok(CriterionReport::new(
            11,
            title(11),
            dev,
            tol,
            passed,
            format!(
                "v_y {:.6}, band average {:.6}, |v_y - 2k*| {dev_k:.1e} (tol 1e-2), <X> drift {:.1e} (tol 1e-8)",
                fit.v_y, fit.v_expected, fit.x_drift
            ),
        ))
    }

    fn symmetry(&self) -> Result<CriterionReport> {
        let solver = DispersionSolver::new(self.config(self.coupled()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < 10 {
            let k = rng.random_range(0.05..PI - 0.05);
            let e = rng.random_range(-9.0..0.0);
            let pair = solver.radius_for(k, e, e).and_then(|r| {
                let a = solver.assemble_at(C64::new(k, 0.0), e, r, None)?.sigma_min()?;
                let b = solver.assemble_at(C64::new(2.0 * PI - k, 0.0), e, r, None)?.sigma_min()?;
                Ok((a, b))
            });
            match pair {
                Ok((a, b)) => {
                    worst = worst.max((a - b).abs());
                    done += 1;
                }
                Err(Error::NearCrossing { .. } | Error::NoClearRadius { .. } | Error::DirichletProximity { .. }) => continue,
                Err(err) => return Err(err),
            }
        }
        let tol = 1e-8;
        Ok(CriterionReport::new(12, title(12), worst, tol, worst <= tol, "10 points, sigma_min at k and 2 pi - k".into()))
    }
}

/// The accepted eigenvalue nearest `guess` at k, from a window of half-width 0.4.
fn first_point(solver: &DispersionSolver, k: f64, guess: f64) -> Result<crate::dispersion::BandPoint> {
    let hi = (guess + 0.4).min(continuum_threshold(k) - 1e-3);
    locate_eigenvalues(solver, k, (guess - 0.4, hi), 12)?
        .into_iter()
        .min_by(|a, b| (a.lambda - guess).abs().total_cmp(&(b.lambda - guess).abs()))
        .ok_or_else(|| Error::InvalidConfig(format!("no eigenvalue near {guess} at k = {k}")))
}

/// sup of |P_nu(z)| |Im z^2|^{1/3} over nu in {0, h, ..., 20}, |Im z^2| in
/// [1, 10^4] (log-uniform) and arg z in (0, pi/2), with h = 1/2 / refine.
pub fn p_bound_sup(refine: usize) -> Result<f64> {
    let n_nu = 40 * refine;
    let n_a = 40 * refine;
    let n_phi = 16 * refine;
    let mut sup = 0.0f64;
    for i in 0..=n_nu {
        let nu = 20.0 * i as f64 / n_nu as f64;
        for a in 0..=n_a {
            let im = 10f64.powf(4.0 * a as f64 / n_a as f64);
            for b in 0..n_phi {
                let phi = (b as f64 + 0.5) * (PI / 2.0) / n_phi as f64;
                let z = C64::from_polar((im / (2.0 * phi).sin()).sqrt(), phi);
                sup = sup.max(p_product(nu, z)?.norm() * im.cbrt());
            }
        }
    }
    Ok(sup)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_line_format() {
        let r = CriterionReport::new(3, "x", 1e-9, 1e-8, true, String::new());
        assert_eq!(r.line(), "criterion  3 PASS x: measured 1.000e-9 (tol 1.0e-8)");
    }

    #[test]
    fn p_bound_grid_covers_the_sup() {
        // P_0 at |Im z^2| = 1 is the largest contribution near arg z = pi/4
        let s = p_bound_sup(1).unwrap();
        let z = C64::from_polar(1.0, PI / 4.0);
        assert!(s >= p_product(0.0, z).unwrap().norm());
        assert!(s.is_finite());
    }

    #[test]
    fn cheap_criteria_pass() {
        let suite = Suite::reference();
        for id in [1, 2, 8, 9, 10] {
            let r = suite.run(id);
            assert!(r.passed, "{}", r.line());
        }
        assert!(!suite.free_identity_as_stated().passed);
    }
}
