//! Brute-force reference spectra: finite-difference radial bound states for
//! separable wells and Dirichlet boxes B_L x T for general potentials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interior::{dirichlet_eigs, Discretization};
use crate::model::{angular_labels, torus_center, torus_frequency, PotentialSpec, RadialProfile, WaveguideConfig};

/// -u'' - (n-1)/r u' + l(l+n-2)/r^2 u + v(r) u = mu u on (0, r_inf), u(r_inf) = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub n: usize,
    pub l: u32,
    pub profile: RadialProfile,
    /// Overall multiplier of the profile.
    pub strength: f64,
    pub r_inf: f64,
    /// Cells per unit length on the coarsest mesh.
    pub cells_per_unit: usize,
}

impl RadialProblem {
    pub fn new(n: usize, l: u32, profile: RadialProfile, strength: f64) -> Self {
        Self { n, l, profile, strength, r_inf: 12.0, cells_per_unit: 400 }
    }

    fn potential(&self, r: f64) -> f64 {
        if r >= 1.0 { 0.0 } else { self.strength * self.profile.eval(r) }
    }

    /// Lower bound for the spectrum: below the potential's minimum.
    fn floor(&self) -> f64 {
        let vmin = (0..=2000).map(|i| self.potential(i as f64 / 2000.0)).fold(0.0, f64::min);
        2.0 * vmin - 1.0
    }
}

/// Symmetric tridiagonal matrix (diag, off) of the cell-centred scheme with h = 1/m.
fn tridiagonal(p: &RadialProblem, m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / m as f64;
    let cells = (p.r_inf * m as f64).round() as usize;
    let e = p.n as f64 - 1.0;
    let cent = p.l as f64 * (p.l as f64 + p.n as f64 - 2.0);
    let mut diag = Vec::with_capacity(cells);
    let mut off = Vec::with_capacity(cells.saturating_sub(1));
    for i in 0..cells {
        let r = (i as f64 + 0.5) * h;
        let (rm, rp) = (i as f64 * h, (i as f64 + 1.0) * h);
        let w = r.powf(e);
        let flux_p = if i + 1 == cells { 2.0 * rp.powf(e) } else { rp.powf(e) };
        let a = (rm.powf(e) + flux_p) / (h * h) + (cent / (r * r) + p.potential(r)) * w;
        diag.push(a / w);
        if i + 1 < cells {
            let r2 = (i as f64 + 1.5) * h;
            off.push(-rp.powf(e) / (h * h) / (w * r2.powf(e)).sqrt());
        }
    }
    (diag, off)
}

/// Number of eigenvalues of the tridiagonal matrix below x (Sturm count).
fn count_below(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..diag.len() {
        let b2 = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] };
        d = diag[i] - x - if i == 0 { 0.0 } else { b2 / d };
        if d == 0.0 {
            d = -1e-300;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn negative_eigs(diag: &[f64], off: &[f64], lower: f64, count: usize) -> Vec<f64> {
    let avail = count_below(diag, off, 0.0).min(count);
    (0..avail)
        .map(|idx| {
            let (mut a, mut b) = (lower, 0.0);
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                if count_below(diag, off, c) > idx { b = c } else { a = c }
                if b - a < 1e-14 * (1.0 + a.abs()) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Ascending negative radial eigenvalues, Richardson-extrapolated from meshes h, h/2, h/4.
pub fn radial_bound_states(p: &RadialProblem, count: usize) -> Vec<f64> {
    let lower = p.floor();
    let levels: Vec<Vec<f64>> = [1usize, 2, 4]
        .iter()
        .map(|f| {
            let (d, o) = tridiagonal(p, p.cells_per_unit * f);
            negative_eigs(&d, &o, lower, count)
        })
        .collect();
    let n = levels.iter().map(Vec::len).min().unwrap_or(0);
    (0..n)
        .map(|i| {
            let (a, b, c) = (levels[0][i], levels[1][i], levels[2][i]);
            let r1 = (4.0 * b - a) / 3.0;
            let r2 = (4.0 * c - b) / 3.0;
            (16.0 * r2 - r1) / 15.0
        })
        .filter(|&mu| mu < 0.0)
        .collect()
}

/// Same problem at a single mesh (no extrapolation), for convergence checks.
pub fn radial_bound_states_at(p: &RadialProblem, cells_per_unit: usize, count: usize) -> Vec<f64> {
    let (d, o) = tridiagonal(p, cells_per_unit);
    negative_eigs(&d, &o, p.floor(), count)
}

/// Fiber eigenvalue of the separable problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableLevel {
    pub j: i32,
    pub l: u32,
    /// Radial level index within (l).
    pub p: usize,
    pub mu: f64,
    pub lambda: f64,
    /// Number of m labels.
    pub multiplicity: usize,
}

/// Radial part of a y-independent potential: sum of zero-frequency terms.
fn radial_part(spec: &PotentialSpec) -> Result<Vec<(RadialProfile, f64)>> {
    if !spec.is_y_independent() {
        return Err(Error::InvalidConfig("separable oracle needs a y-independent potential".into()));
    }
    Ok(spec
        .terms
        .iter()
        .filter_map(|t| t.coeffs.get(&0).map(|c| (t.profile.clone(), c.re)))
        .collect())
}

/// lambda = mu_{l,p} + (k + 2 pi j)^2 for the separable case, ascending, first `count`.
pub fn separable_bands(
    spec: &PotentialSpec,
    n: usize,
    k: f64,
    l_max: u32,
    j_max: u32,
    count: usize,
) -> Result<Vec<SeparableLevel>> {
    let parts = radial_part(spec)?;
    let mut out = Vec::new();
    if parts.is_empty() {
        return Ok(out);
    }
    if parts.len() > 1 {
        return Err(Error::InvalidConfig("separable oracle supports a single radial term".into()));
    }
    let (profile, strength) = parts[0].clone();
    let jc = torus_center(k);
    let jm = j_max as i32;
    for l in 0..=l_max {
        let mus = radial_bound_states(&RadialProblem::new(n, l, profile.clone(), strength), count);
        for (p, &mu) in mus.iter().enumerate() {
            for j in jc - jm..=jc + jm {
                let s = k + torus_frequency(j);
                out.push(SeparableLevel { j, l, p, mu, lambda: mu + s * s, multiplicity: angular_labels(n, l).len() });
            }
        }
    }
    out.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    out.truncate(count);
    Ok(out)
}

/// Discretization for the box B_L: breaks at 1, 2, 4, 8, 12 inside (0, L)
/// and `per_domain` nodes in each domain.
pub fn box_discretization(base: &Discretization, length: f64, per_domain: usize) -> Discretization {
    let breaks: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 12.0].into_iter().filter(|&b| b < length - 1e-9).collect();
    let domains = breaks.len() + 1;
    base.clone().with_breaks(&breaks).with_nodes(per_domain * domains)
}

/// Lowest Dirichlet eigenvalues of H(k) on B_L x T.
pub fn box_eigs(n: usize, spec: &PotentialSpec, k: f64, length: f64, disc: &Discretization, count: usize) -> Result<Vec<f64>> {
    let cfg = WaveguideConfig::new(n, length, spec.clone());
    dirichlet_eigs(k, length, count, &cfg, disc)
}

/// Box eigenvalues at two lengths; entries whose drift exceeds `drift` are
/// continuum artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSweep {
    pub lengths: (f64, f64),
    pub values: Vec<(f64, f64)>,
    pub stable: Vec<bool>,
}

pub fn box_sweep(
    n: usize,
    spec: &PotentialSpec,
    k: f64,
    lengths: (f64, f64),
    disc: &Discretization,
    per_domain: usize,
    count: usize,
    drift: f64,
) -> Result<BoxSweep> {
    let a = box_eigs(n, spec, k, lengths.0, &box_discretization(disc, lengths.0, per_domain), count)?;
    let b = box_eigs(n, spec, k, lengths.1, &box_discretization(disc, lengths.1, per_domain), count)?;
    let values: Vec<(f64, f64)> = a.into_iter().zip(b).collect();
    let stable = values.iter().map(|(x, y)| (x - y).abs() <= drift).collect();
    Ok(BoxSweep { lengths, values, stable })
}

/// Lowest threshold min_j (k + 2 pi j)^2.
pub fn continuum_threshold(k: f64) -> f64 {
    let jc = torus_center(k);
    (k + torus_frequency(jc)).powi(2)
}
