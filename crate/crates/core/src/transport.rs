//! Single-band surface wavepackets: inverse Floquet synthesis, fiberwise
//! evolution and position moments.
//!
//! A packet is psi(x, y + p) = (2 pi)^{-1} sum_i g_i e^{-i t lambda_i} e^{i k_i (y + p)} phi_{k_i}(x, y) dk
//! on a uniform k-grid with dk = 2 pi / M. For fixed (x, y) the sum over i is a
//! length-M inverse DFT in the cell index p, so the cells form a periodic
//! window of M cells, re-centred on the expected packet centre at each time.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dispersion::{Band, DispersionSolver, Eigenfunction, FieldPoint};
use crate::error::{Error, Result};
use crate::harmonics::{angular_value, Angles};
use crate::model::{torus_frequency, ModeIndex};
use crate::quadrature::{composite_gauss, gauss_legendre};
use crate::C64;

/// |g| below this is treated as outside the envelope support.
const ENVELOPE_FLOOR: f64 = 1e-8;
/// Points in each Lagrange stencil.
const STENCIL: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    /// g(k) = exp(-(k - center)^2 / (2 width^2)), cut where it drops below 1e-8.
    Gaussian { center: f64, width: f64 },
    /// A single k-grid point (a discrete delta).
    Point { k: f64 },
}

impl Envelope {
    fn support(&self) -> (f64, f64) {
        match *self {
            Envelope::Gaussian { center, width } => {
                let h = width * (-2.0 * ENVELOPE_FLOOR.ln()).sqrt();
                (center - h, center + h)
            }
            Envelope::Point { k } => (k, k),
        }
    }

    fn eval(&self, k: f64) -> C64 {
        match *self {
            Envelope::Gaussian { center, width } => C64::new((-(k - center).powi(2) / (2.0 * width * width)).exp(), 0.0),
            Envelope::Point { .. } => C64::new(1.0, 0.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketOptions {
    /// Gauss points per radial panel.
    pub per_panel: usize,
    /// Minimum number of k-points across the envelope support.
    pub min_k_points: usize,
    /// Largest admissible half-width P of the cell window.
    pub cell_cap: usize,
    /// Largest admissible fraction of the mass in the outer quarter of the cell window.
    pub edge_tol: f64,
    /// Smallest admissible |<phi_k, phi_k'>| between neighbouring band points.
    pub min_overlap: f64,
}

impl Default for PacketOptions {
    fn default() -> Self {
        Self { per_panel: 16, min_k_points: 128, cell_cap: 20_000, edge_tol: 1e-6, min_overlap: 0.5 }
    }
}

#[derive(Debug, Clone)]
struct KGrid {
    ks: Vec<f64>,
    dk: f64,
    g: Vec<C64>,
    lambda: Vec<f64>,
    dlambda: Vec<f64>,
    /// Lagrange stencil (first band index, weights) per k.
    stencils: Vec<(usize, [f64; STENCIL])>,
}

/// Single-band wavepacket with gauge-aligned eigenfunctions cached on a radial grid.
#[derive(Clone)]
pub struct WavepacketSpec {
    pub n: usize,
    pub envelope: Envelope,
    /// Band samples (k, lambda) used for interpolation.
    pub band_ks: Vec<f64>,
    pub band_lambda: Vec<f64>,
    pub modes: Vec<ModeIndex>,
    /// Distinct angular labels (l, m) among `modes`.
    pub labels: Vec<(u32, i32)>,
    pub radial_nodes: Vec<f64>,
    /// Quadrature weights including r^{n-1}.
    pub radial_weights: Vec<f64>,
    /// Uniform y-nodes per cell.
    pub y_nodes: usize,
    /// Cell window length M (a power of two); also fixes dk = 2 pi / M.
    pub cells: usize,
    opts: PacketOptions,
    /// v(r) with phi = sum v_mode(r) Y_{l,m} e^{2 pi i j y}, per band point, mode, radial node.
    profiles: Vec<Vec<Vec<C64>>>,
    /// Band eigenfunctions with the factor taking u to the aligned v.
    eigenfunctions: Arc<Vec<(Eigenfunction, C64)>>,
    grid: KGrid,
}

/// Position moments at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: f64,
    pub norm: f64,
    /// Mass fraction in the outer quarter of the cell window.
    pub edge_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportRecord {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub norm: Vec<f64>,
    pub v_x: f64,
    pub v_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityFit {
    pub v_x: f64,
    pub v_y: f64,
    /// sum |g|^2 lambda' / sum |g|^2.
    pub v_expected: f64,
    pub intercept: f64,
    /// max_t |<Y>(t) - <Y>(0) - t v_expected|.
    pub max_deviation: f64,
    /// max_t |<X>(t) - <X>(0)|.
    pub x_drift: f64,
}

/// Lagrange weights and derivative weights of the nodes `xs` at `x`.
fn lagrange(xs: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let mut w = vec![0.0; n];
    let mut d = vec![0.0; n];
    for i in 0..n {
        let mut denom = 1.0;
        for j in 0..n {
            if j != i {
                denom *= xs[i] - xs[j];
            }
        }
        let mut prod = 1.0;
        for j in 0..n {
            if j != i {
                prod *= x - xs[j];
            }
        }
        w[i] = prod / denom;
        let mut s = 0.0;
        for m in 0..n {
            if m == i {
                continue;
            }
            let mut p = 1.0;
            for j in 0..n {
                if j != i && j != m {
                    p *= x - xs[j];
                }
            }
            s += p;
        }
        d[i] = s / denom;
    }
    (w, d)
}

fn stencil_start(xs: &[f64], x: f64) -> usize {
    let width = STENCIL.min(xs.len());
    let pos = xs.partition_point(|&v| v < x);
    pos.saturating_sub(width / 2).min(xs.len() - width)
}

/// Build a packet on `band` with envelope `env`. Each band point contributes
/// one normalized eigenfunction; neighbours are phase-aligned so their
/// overlap is real and positive.
pub fn build_packet(solver: &DispersionSolver, band: &Band, env: Envelope, opts: PacketOptions) -> Result<WavepacketSpec> {
    let n = solver.cfg.n;
    if band.points.len() < STENCIL {
        return Err(Error::InvalidConfig(format!("band needs at least {STENCIL} points, got {}", band.points.len())));
    }
    if let Some(p) = band.points.iter().find(|p| p.multiplicity != 1) {
        return Err(Error::DegenerateBand(p.multiplicity));
    }
    let band_ks: Vec<f64> = band.points.iter().map(|p| p.k).collect();
    let band_lambda: Vec<f64> = band.points.iter().map(|p| p.lambda).collect();
    let step = band_ks.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let (lo, hi) = env.support();
    if lo < band_ks[0] + 2.0 * step || hi > band_ks[band_ks.len() - 1] - 2.0 * step {
        return Err(Error::EnvelopeAtBandEdge);
    }

    let efs: Vec<Eigenfunction> = band.points.par_iter().map(|p| Eigenfunction::new(solver, p, 0)).collect::<Result<_>>()?;
    // interior mesh breaks of every point, then one graded tail past the largest R
    let mut breaks: Vec<f64> = efs.iter().flat_map(|e| e.breaks().into_iter().filter(|&b| b <= e.radius)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let r_max = breaks[breaks.len() - 1];
    let span = efs.iter().map(|e| e.tail_radius()).fold(r_max, f64::max) - r_max;
    if span > 0.0 {
        breaks.extend([1.0 / 64.0, 1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 1.0].iter().map(|f| r_max + f * span));
    }
    let (radial_nodes, w) = composite_gauss(&breaks, opts.per_panel);
    let radial_weights: Vec<f64> = radial_nodes.iter().zip(&w).map(|(r, w)| w * r.powi(n as i32 - 1)).collect();
    let modes: Vec<ModeIndex> = efs.iter().flat_map(|e| e.modes()).collect::<BTreeSet<_>>().into_iter().collect();
    let labels: Vec<(u32, i32)> = modes.iter().map(|m| (m.l, m.m)).collect::<BTreeSet<_>>().into_iter().collect();

    let mut profiles: Vec<Vec<Vec<C64>>> = efs
        .par_iter()
        .map(|ef| {
            let s = ef.radius.powf(-(n as f64 - 1.0) / 2.0);
            modes
                .iter()
                .map(|m| radial_nodes.iter().map(|&r| Ok(ef.radial(m, r)? * s)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut factors: Vec<C64> = efs.iter().map(|ef| C64::new(ef.radius.powf(-(n as f64 - 1.0) / 2.0), 0.0)).collect();
    for b in 1..profiles.len() {
        let mut s = C64::new(0.0, 0.0);
        for (prev, next) in profiles[b - 1].iter().zip(&profiles[b]) {
            for ((u, v), w) in prev.iter().zip(next).zip(&radial_weights) {
                s += u.conj() * v * *w;
            }
        }
        if s.norm() < opts.min_overlap {
            return Err(Error::GaugeFailure { k0: band_ks[b - 1], k1: band_ks[b], overlap: s.norm() });
        }
        let phase = s.conj() / s.norm();
        for v in profiles[b].iter_mut().flatten() {
            *v *= phase;
        }
        factors[b] *= phase;
    }

    let j_span = modes.iter().map(|m| m.j).max().unwrap_or(0) - modes.iter().map(|m| m.j).min().unwrap_or(0);
    let cells = match env {
        Envelope::Point { .. } => 64,
        Envelope::Gaussian { .. } => ((2.0 * PI * opts.min_k_points as f64 / (hi - lo)).ceil() as usize).next_power_of_two().max(64),
    };
    let mut packet = WavepacketSpec {
        n,
        envelope: env,
        band_ks,
        band_lambda,
        modes,
        labels,
        radial_nodes,
        radial_weights,
        y_nodes: 4 * j_span as usize + 4,
        cells,
        opts,
        profiles,
        eigenfunctions: Arc::new(efs.into_iter().zip(factors).collect()),
        grid: KGrid { ks: vec![], dk: 0.0, g: vec![], lambda: vec![], dlambda: vec![], stencils: vec![] },
    };
    packet.set_cells(cells)?;
    Ok(packet)
}

impl WavepacketSpec {
    /// Rebuild the k-grid for a cell window of length `cells`.
    pub fn set_cells(&mut self, cells: usize) -> Result<()> {
        if cells / 2 > self.opts.cell_cap {
            return Err(Error::CellOverflow { cap: self.opts.cell_cap });
        }
        let dk = 2.0 * PI / cells as f64;
        let (lo, hi) = self.envelope.support();
        let count = ((hi - lo) / dk).floor() as usize + 1;
        let ks: Vec<f64> = match self.envelope {
            Envelope::Point { k } => vec![k],
            Envelope::Gaussian { center, .. } => {
                let half = (count / 2) as f64;
                (0..count).map(|i| center + (i as f64 - half) * dk).collect()
            }
        };
        let mut stencils = Vec::with_capacity(ks.len());
        let mut lambda = Vec::with_capacity(ks.len());
        let mut dlambda = Vec::with_capacity(ks.len());
        for &k in &ks {
            let start = stencil_start(&self.band_ks, k);
            let (w, d) = lagrange(&self.band_ks[start..start + STENCIL], k);
            lambda.push(w.iter().zip(&self.band_lambda[start..]).map(|(w, l)| w * l).sum());
            dlambda.push(d.iter().zip(&self.band_lambda[start..]).map(|(d, l)| d * l).sum());
            stencils.push((start, w.try_into().expect("stencil length")));
        }
        let g = ks.iter().map(|&k| self.envelope.eval(k)).collect();
        self.cells = cells;
        self.grid = KGrid { ks, dk, g, lambda, dlambda, stencils };
        Ok(())
    }

    pub fn k_grid(&self) -> &[f64] {
        &self.grid.ks
    }

    pub fn dk(&self) -> f64 {
        self.grid.dk
    }

    pub fn envelope_samples(&self) -> &[C64] {
        &self.grid.g
    }

    /// Interpolated band energies on the k-grid.
    pub fn lambda(&self) -> &[f64] {
        &self.grid.lambda
    }

    /// (2 pi)^{-1} sum |g|^2 dk: the squared norm the packet must have.
    pub fn expected_norm_squared(&self) -> f64 {
        self.grid.g.iter().map(|g| g.norm_sqr()).sum::<f64>() * self.grid.dk / (2.0 * PI)
    }

    /// sum |g|^2 lambda' / sum |g|^2.
    pub fn group_velocity(&self) -> f64 {
        let num: f64 = self.grid.g.iter().zip(&self.grid.dlambda).map(|(g, d)| g.norm_sqr() * d).sum();
        num / self.grid.g.iter().map(|g| g.norm_sqr()).sum::<f64>()
    }

    /// Interpolated radial profile of `mode` at k-grid index i, radial node a.
    fn profile(&self, i: usize, mode: usize, a: usize) -> C64 {
        let (start, w) = &self.grid.stencils[i];
        w.iter().enumerate().map(|(s, w)| self.profiles[start + s][mode][a] * *w).sum()
    }

    /// Envelope amplitudes at time t: g_i e^{-i t lambda_i}.
    pub fn evolve(&self, t: f64) -> Vec<C64> {
        self.grid.g.iter().zip(&self.grid.lambda).map(|(g, l)| g * C64::from_polar(1.0, -t * l)).collect()
    }

    /// psi_t(x, y + p) by direct summation, indexed [point][cell].
    pub fn samples(&self, t: f64, points: &[FieldPoint], cells: &[i64]) -> Result<Vec<Vec<C64>>> {
        let amps = self.evolve(t);
        let scale = self.grid.dk / (2.0 * PI);
        points
            .iter()
            .map(|pt| {
                let a = self.node_profiles_at(pt.r)?;
                let fiber: Vec<C64> = (0..self.grid.ks.len())
                    .map(|i| {
                        self.modes
                            .iter()
                            .enumerate()
                            .map(|(mi, m)| {
                                a[i][mi] * angular_value(m.l, m.m, pt.angles) * C64::from_polar(1.0, torus_frequency(m.j) * pt.y)
                            })
                            .sum()
                    })
                    .collect();
                Ok(cells
                    .iter()
                    .map(|&p| {
                        let yp = pt.y + p as f64;
                        self.grid
                            .ks
                            .iter()
                            .zip(&amps)
                            .zip(&fiber)
                            .map(|((k, c), f)| c * f * C64::from_polar(1.0, k * yp))
                            .sum::<C64>()
                            * scale
                    })
                    .collect())
            })
            .collect()
    }

    /// Profiles [k index][mode] at an arbitrary radius.
    fn node_profiles_at(&self, r: f64) -> Result<Vec<Vec<C64>>> {
        let at_band: Vec<Vec<C64>> = self
            .eigenfunctions
            .iter()
            .map(|(ef, f)| self.modes.iter().map(|m| Ok(ef.radial(m, r)? * f)).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        Ok(self
            .grid
            .stencils
            .iter()
            .map(|(start, w)| {
                (0..self.modes.len())
                    .map(|mi| w.iter().enumerate().map(|(s, w)| at_band[start + s][mi] * *w).sum())
                    .collect()
            })
            .collect())
    }

    /// Angular coupling matrices C^c_{LL'} = integral of omega_c conj(Y_L) Y_L'.
    fn couplings(&self) -> Vec<Vec<Vec<C64>>> {
        let lmax = self.labels.iter().map(|l| l.0).max().unwrap_or(0) as usize;
        let mut rule: Vec<(Angles, f64)> = Vec::new();
        if self.n == 2 {
            let nt = 2 * lmax + 4;
            for a in 0..nt {
                rule.push((Angles::Circle { theta: 2.0 * PI * a as f64 / nt as f64 }, 2.0 * PI / nt as f64));
            }
        } else {
            let (mu, wmu) = gauss_legendre(lmax + 2);
            let np = 2 * lmax + 4;
            for (x, w) in mu.iter().zip(&wmu) {
                for b in 0..np {
                    let phi = 2.0 * PI * b as f64 / np as f64;
                    rule.push((Angles::Sphere { theta: x.acos(), phi }, w * 2.0 * PI / np as f64));
                }
            }
        }
        (0..self.n)
            .map(|c| {
                self.labels
                    .iter()
                    .map(|&(l1, m1)| {
                        self.labels
                            .iter()
                            .map(|&(l2, m2)| {
                                rule.iter()
                                    .map(|(ang, w)| {
                                        angular_value(l1, m1, *ang).conj() * angular_value(l2, m2, *ang) * (ang.direction()[c] * w)
                                    })
                                    .sum()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Moments at time t with the current cell window; no enlargement.
    pub fn moments_fixed(&self, t: f64) -> Moments {
        let m = self.cells;
        let nk = self.grid.ks.len();
        let amps = self.evolve(t);
        let scale = self.grid.dk / (2.0 * PI);
        let centre = (self.group_velocity() * t).round() as i64;
        let fft = FftPlanner::<f64>::new().plan_fft_inverse(m);
        let coupling = self.couplings();
        let label_of: Vec<usize> =
            self.modes.iter().map(|md| self.labels.iter().position(|&l| l == (md.l, md.m)).expect("label")).collect();
        let ny = self.y_nodes;
        let edge = 3 * m / 8;
        // signed cell for FFT bin q, inside [centre - M/2, centre + M/2)
        let cell = |q: usize| -> i64 {
            let off = (q as i64 - centre).rem_euclid(m as i64);
            let off = if off >= (m / 2) as i64 { off - m as i64 } else { off };
            centre + off
        };
        let per_node: Vec<(f64, f64, f64, Vec<f64>)> = (0..self.radial_nodes.len())
            .into_par_iter()
            .map(|a| {
                let r = self.radial_nodes[a];
                let w = self.radial_weights[a] / ny as f64;
                let prof: Vec<Vec<C64>> = (0..nk).map(|i| (0..self.modes.len()).map(|mi| self.profile(i, mi, a)).collect()).collect();
                let (mut mass, mut edge_mass, mut ysum) = (0.0, 0.0, 0.0);
                let mut xsum = vec![0.0; self.n];
                let mut buf = vec![C64::new(0.0, 0.0); m];
                let mut fields = vec![vec![C64::new(0.0, 0.0); m]; self.labels.len()];
                for s in 0..ny {
                    let y = s as f64 / ny as f64;
                    for (li, field) in fields.iter_mut().enumerate() {
                        buf.iter_mut().for_each(|b| *b = C64::new(0.0, 0.0));
                        for i in 0..nk {
                            let mut f = C64::new(0.0, 0.0);
                            for (mi, md) in self.modes.iter().enumerate() {
                                if label_of[mi] == li {
                                    f += prof[i][mi] * C64::from_polar(1.0, torus_frequency(md.j) * y);
                                }
                            }
                            buf[i] = amps[i] * f * C64::from_polar(1.0, self.grid.ks[i] * y);
                        }
                        fft.process(&mut buf);
                        field.copy_from_slice(&buf);
                    }
                    for q in 0..m {
                        let p = cell(q);
                        // the omitted e^{i k_0 p} has unit modulus and is common to all labels
                        let rho: f64 = fields.iter().map(|f| f[q].norm_sqr()).sum::<f64>() * scale * scale;
                        mass += w * rho;
                        ysum += w * rho * (y + p as f64);
                        if (p - centre).unsigned_abs() as usize >= edge {
                            edge_mass += w * rho;
                        }
                        for (c, xs) in xsum.iter_mut().enumerate() {
                            let mut acc = C64::new(0.0, 0.0);
                            for (l1, f1) in fields.iter().enumerate() {
                                for (l2, f2) in fields.iter().enumerate() {
                                    let cc = coupling[c][l1][l2];
                                    if cc.norm() > 0.0 {
                                        acc += f1[q].conj() * f2[q] * cc;
                                    }
                                }
                            }
                            *xs += w * r * acc.re * scale * scale;
                        }
                    }
                }
                (mass, edge_mass, ysum, xsum)
            })
            .collect();
        let mut mass = 0.0;
        let mut edge_mass = 0.0;
        let mut ysum = 0.0;
        let mut xsum = vec![0.0; self.n];
        for (ms, em, ys, xs) in per_node {
            mass += ms;
            edge_mass += em;
            ysum += ys;
            for (a, b) in xsum.iter_mut().zip(&xs) {
                *a += b;
            }
        }
        Moments {
            t,
            x: xsum.iter().map(|x| x / mass).collect(),
            y: ysum / mass,
            norm: mass.sqrt(),
            edge_fraction: edge_mass / mass.max(f64::MIN_POSITIVE),
        }
    }
}

/// Moments at t, doubling the cell window until the outer quarter holds
/// less than the edge tolerance.
pub fn moments(packet: &mut WavepacketSpec, t: f64) -> Result<Moments> {
    loop {
        let mo = packet.moments_fixed(t);
        if mo.edge_fraction < packet.opts.edge_tol {
            return Ok(mo);
        }
        packet.set_cells(2 * packet.cells)?;
    }
}

/// Moments over `times` on one common cell window.
pub fn transport_record(packet: &mut WavepacketSpec, times: &[f64]) -> Result<TransportRecord> {
    let all = loop {
        let all: Vec<Moments> = times.iter().map(|&t| packet.moments_fixed(t)).collect();
        if all.iter().all(|m| m.edge_fraction < packet.opts.edge_tol) {
            break all;
        }
        packet.set_cells(2 * packet.cells)?;
    };
    let mut rec = TransportRecord {
        times: times.to_vec(),
        x: all.iter().map(|m| m.x.clone()).collect(),
        y: all.iter().map(|m| m.y).collect(),
        norm: all.iter().map(|m| m.norm).collect(),
        v_x: f64::NAN,
        v_y: f64::NAN,
    };
    if times.len() >= 2 {
        let fit = least_squares(&rec.times, &rec.y);
        rec.v_y = fit.0;
        rec.v_x = x_velocity(&rec);
    }
    Ok(rec)
}

/// (slope, intercept).
fn least_squares(t: &[f64], y: &[f64]) -> (f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let num: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let den: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    let slope = num / den;
    (slope, ym - slope * tm)
}

fn x_drift(rec: &TransportRecord, i: usize) -> f64 {
    rec.x[i].iter().zip(&rec.x[0]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
}

fn x_velocity(rec: &TransportRecord) -> f64 {
    (1..rec.times.len()).filter(|&i| rec.times[i] > 0.0).map(|i| x_drift(rec, i) / rec.times[i]).fold(0.0, f64::max)
}

/// Least-squares v_y, max-ratio v_x and the comparison against the band-gradient average.
pub fn velocity_fit(rec: &TransportRecord, packet: &WavepacketSpec) -> Result<VelocityFit> {
    let t_max = rec.times.iter().copied().fold(0.0, f64::max);
    if rec.times.len() < 10 || t_max < 100.0 {
        return Err(Error::InvalidConfig(format!(
            "velocity fit needs at least 10 times reaching T >= 100, got {} up to {t_max}",
            rec.times.len()
        )));
    }
    let (v_y, intercept) = least_squares(&rec.times, &rec.y);
    let v = packet.group_velocity();
    let max_deviation = rec.times.iter().zip(&rec.y).map(|(t, y)| (y - rec.y[0] - t * v).abs()).fold(0.0, f64::max);
    let x_drift = (0..rec.times.len()).map(|i| x_drift(rec, i)).fold(0.0, f64::max);
    Ok(VelocityFit { v_x: x_velocity(rec), v_y, v_expected: v, intercept, max_deviation, x_drift })
}

impl TransportRecord {
    /// CSV with header `t,X1,...,Xn,Y,norm`.
    pub fn to_csv(&self) -> String {
        let n = self.x.first().map_or(0, |x| x.len());
        let mut out = String::from("t");
        for c in 1..=n {
            let _ = write!(out, ",X{c}");
        }
        out.push_str(",Y,norm\n");
        for i in 0..self.times.len() {
            let _ = write!(out, "{:?}", self.times[i]);
            for x in &self.x[i] {
                let _ = write!(out, ",{x:?}");
            }
            let _ = writeln!(out, ",{:?},{:?}", self.y[i], self.norm[i]);
        }
        out
    }
}

#[cfg(test)]
mod tests;
