//! Two-sided DtN map Lambda(k, E) = Lambda^- - Lambda^+, kernel detection and
//! band continuation.
//!
//! Lambda is block diagonal in the angular label (l, m) and the block does not
//! depend on m, so everything is stored per l: rows run over the whole torus
//! window, columns over the admissible torus modes at that l. Rows of
//! non-admissible modes demand a vanishing interior normal derivative.

mod eigenfunction;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryData;
use crate::error::{Error, Result};
use crate::exterior::ExteriorProfile;
use crate::interior::{assemble_interior_partial, dirichlet_spectrum, DirichletLevel, Discretization};
use crate::linalg::{svd, CMat};
use crate::model::{
    angular_labels, crossing_band, decay_rate, torus_center, torus_frequency, AdmissibleBasis, ModeIndex, ModeKind,
    WaveguideConfig,
};
use crate::specfun::p_product;
use crate::C64;

pub use eigenfunction::{reconstruct_eigenfunction, Eigenfunction, FieldPoint};

/// One angular block of Lambda.
#[derive(Debug, Clone)]
pub struct DtnBlock {
    pub l: u32,
    /// Number of m labels sharing this block.
    pub multiplicity: usize,
    pub rows: Vec<i32>,
    pub cols: Vec<i32>,
    pub matrix: CMat,
    /// Sobolev weights 1 + l^2 + (j - j_c)^2.
    pub row_weights: Vec<f64>,
    pub col_weights: Vec<f64>,
}

impl DtnBlock {
    /// W^{1/4} Lambda W^{-3/4}: the H^{3/2} -> H^{1/2} normalization.
    pub fn weighted(&self) -> CMat {
        CMat::from_fn(self.rows.len(), self.cols.len(), |i, j| {
            self.matrix[(i, j)] * (self.row_weights[i].powf(0.25) * self.col_weights[j].powf(-0.75))
        })
    }
}

/// Lambda(k, E) at radius R over the admissible basis.
#[derive(Debug, Clone)]
pub struct DtnMatrix {
    pub k: C64,
    pub energy: f64,
    pub radius: f64,
    pub basis: AdmissibleBasis,
    pub blocks: Vec<DtnBlock>,
}

/// Singular data of the weighted blocks.
#[derive(Debug, Clone)]
pub struct WeightedSpectrum {
    pub sigma_min: f64,
    /// Weighted spectral norm.
    pub norm: f64,
    /// Angular index of the block attaining sigma_min.
    pub argmin_l: u32,
    ls: Vec<u32>,
    blocks: Vec<(Vec<f64>, CMat)>,
}

impl WeightedSpectrum {
    /// Smallest weighted singular value of each nonempty angular block.
    pub fn block_minima(&self) -> Vec<(u32, f64)> {
        self.ls.iter().zip(&self.blocks).filter_map(|(&l, (s, _))| s.last().map(|&v| (l, v))).collect()
    }
}

impl DtnMatrix {
    /// Rows: full truncated basis; columns: admissible basis.
    pub fn dense(&self) -> (Vec<ModeIndex>, CMat) {
        let rows = self.basis.row_modes();
        let cols = &self.basis.modes;
        let mut out = CMat::zeros(rows.len(), cols.len());
        for b in &self.blocks {
            for (ri, rm) in rows.iter().enumerate().filter(|(_, m)| m.l == b.l) {
                let Some(bi) = b.rows.iter().position(|&j| j == rm.j) else { continue };
                for (ci, cm) in cols.iter().enumerate().filter(|(_, m)| m.l == b.l && m.m == rm.m) {
                    if let Some(bj) = b.cols.iter().position(|&j| j == cm.j) {
                        out[(ri, ci)] = b.matrix[(bi, bj)];
                    }
                }
            }
        }
        (rows, out)
    }

    /// Square restriction to admissible rows and columns.
    pub fn admissible_square(&self) -> CMat {
        let (rows, full) = self.dense();
        let keep: Vec<usize> = rows.iter().enumerate().filter(|(_, m)| self.basis.position(m).is_some()).map(|(i, _)| i).collect();
        CMat::from_fn(keep.len(), full.ncols(), |i, j| full[(keep[i], j)])
    }

    /// Sobolev weights of the admissible basis.
    pub fn weights(&self) -> Vec<f64> {
        self.basis.modes.iter().map(|m| m.weight_about(self.basis.j_center)).collect()
    }

    pub fn spectrum(&self) -> Result<WeightedSpectrum> {
        let mut sigma_min = f64::INFINITY;
        let mut norm = 0.0f64;
        let mut argmin_l = 0;
        let mut blocks = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            if b.cols.is_empty() {
                blocks.push((Vec::new(), CMat::zeros(0, 0)));
                continue;
            }
            let (s, v) = svd(&b.weighted())?;
            let lo = *s.last().expect("nonempty block");
            if lo < sigma_min {
                sigma_min = lo;
                argmin_l = b.l;
            }
            norm = norm.max(s[0]);
            blocks.push((s, v));
        }
        Ok(WeightedSpectrum { sigma_min, norm, argmin_l, ls: self.blocks.iter().map(|b| b.l).collect(), blocks })
    }

    pub fn sigma_min(&self) -> Result<f64> {
        Ok(self.spectrum()?.sigma_min)
    }

    /// Orthonormal boundary data for singular values below `threshold`, with
    /// the count including the m degeneracy.
    pub fn kernel(&self, spec: &WeightedSpectrum, threshold: f64) -> Result<Vec<BoundaryData>> {
        let mut out: Vec<BoundaryData> = Vec::new();
        for (b, (s, v)) in self.blocks.iter().zip(&spec.blocks) {
            for (idx, &sv) in s.iter().enumerate() {
                if sv >= threshold {
                    continue;
                }
                let coef: Vec<C64> = (0..b.cols.len()).map(|c| v[(c, idx)] * b.col_weights[c].powf(-0.75)).collect();
                for m in angular_labels(self.basis.n, b.l) {
                    let mut f = BoundaryData::zeros(self.basis.modes.clone());
                    for (c, &j) in b.cols.iter().enumerate() {
                        let pos = self.basis.position(&ModeIndex::new(j, b.l, m)).expect("admissible column");
                        f.coefficients[pos] = coef[c];
                    }
                    out.push(f);
                }
            }
        }
        gram_schmidt(&mut out);
        Ok(out)
    }

    /// ||W^{1/4} Lambda f|| / ||W^{3/4} f||.
    pub fn weighted_residual(&self, f: &BoundaryData) -> f64 {
        let (rows, full) = self.dense();
        let w_in = self.weights();
        let mut num = 0.0;
        for (ri, rm) in rows.iter().enumerate() {
            let s: C64 = (0..full.ncols()).map(|c| full[(ri, c)] * f.coefficients[c]).sum();
            num += rm.weight_about(self.basis.j_center).sqrt() * s.norm_sqr();
        }
        let den: f64 = f.coefficients.iter().zip(&w_in).map(|(c, w)| w.powf(1.5) * c.norm_sqr()).sum();
        (num / den).sqrt()
    }
}

fn inner(a: &BoundaryData, b: &BoundaryData) -> C64 {
    a.coefficients.iter().zip(&b.coefficients).map(|(x, y)| x.conj() * y).sum()
}

fn gram_schmidt(vs: &mut [BoundaryData]) {
    for i in 0..vs.len() {
        for p in 0..i {
            let c = inner(&vs[p], &vs[i]);
            let prev = vs[p].coefficients.clone();
            for (x, y) in vs[i].coefficients.iter_mut().zip(prev) {
                *x -= c * y;
            }
        }
        let nrm = inner(&vs[i], &vs[i]).re.sqrt();
        if nrm > 0.0 {
            for x in vs[i].coefficients.iter_mut() {
                *x /= nrm;
            }
        }
    }
}

/// Free Lambda: 1/(R P_nu(z R)) on decaying modes, (2l + n - 2)/R on zero modes.
pub fn free_dtn_diag(basis: &AdmissibleBasis, radius: f64) -> Result<Vec<C64>> {
    basis
        .modes
        .iter()
        .map(|m| {
            if basis.kind(m.j) == ModeKind::Zero {
                return Ok(C64::new((2.0 * m.l as f64 + basis.n as f64 - 2.0) / radius, 0.0));
            }
            let z = decay_rate(basis.k, basis.energy, m.j);
            Ok(1.0 / (radius * p_product(m.bessel_order(basis.n), z * radius)?))
        })
        .collect()
}

/// A point (k, lambda) where Lambda has a kernel.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandPoint {
    pub k: f64,
    pub lambda: f64,
    pub sigma_min: f64,
    /// Weighted norm of Lambda at the point.
    pub norm: f64,
    pub residual: f64,
    pub multiplicity: usize,
    pub radius: f64,
    /// True when R had to move off the configured radius.
    pub radius_shifted: bool,
    pub kernel: Vec<BoundaryData>,
}

impl BandPoint {
    pub fn accepted(&self, kernel_rel: f64) -> bool {
        self.sigma_min < kernel_rel * self.norm
    }
}

/// Orthonormal kernel data of an accepted point.
pub fn kernel_boundary_data(point: &BandPoint) -> &[BoundaryData] {
    &point.kernel
}

/// Evaluator shared by scans: configuration, discretization and a cache of
/// Dirichlet spectra per (k, R).
pub struct DispersionSolver {
    pub cfg: WaveguideConfig,
    pub disc: Discretization,
    spectra: Mutex<HashMap<(u64, u64), Arc<Vec<DirichletLevel>>>>,
}

impl DispersionSolver {
    pub fn new(cfg: WaveguideConfig) -> Result<Self> {
        let disc = Discretization::from_truncation(&cfg.trunc);
        Self::with_discretization(cfg, disc)
    }

    pub fn with_discretization(cfg: WaveguideConfig, disc: Discretization) -> Result<Self> {
        cfg.validate()?;
        disc.validate()?;
        Ok(Self { cfg, disc, spectra: Mutex::new(HashMap::new()) })
    }

    pub fn kernel_tol(&self) -> f64 {
        self.cfg.tol.kernel_rel
    }

    pub fn dirichlet_levels(&self, k: f64, radius: f64) -> Result<Arc<Vec<DirichletLevel>>> {
        let key = (k.to_bits(), radius.to_bits());
        if let Some(v) = self.spectra.lock().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let levels = Arc::new(dirichlet_spectrum(k, radius, &self.cfg, &self.disc)?);
        self.spectra.lock().expect("cache lock").entry(key).or_insert(levels.clone());
        Ok(levels)
    }

    /// Smallest R on the radius grid keeping [lo, hi] clear of the Dirichlet
    /// spectrum by the configured margin.
    pub fn radius_for(&self, k: f64, lo: f64, hi: f64) -> Result<f64> {
        let tol = &self.cfg.tol;
        let margin = tol.margin(0.5 * (lo + hi));
        let steps = (tol.radius_window / tol.radius_step).round() as usize;
        for i in 0..=steps {
            let r = self.cfg.radius + i as f64 * tol.radius_step;
            let levels = self.dirichlet_levels(k, r)?;
            let dist = levels
                .iter()
                .map(|l| {
                    if l.value.re >= lo && l.value.re <= hi {
                        l.value.im.abs()
                    } else {
                        (l.value - lo).norm().min((l.value - hi).norm())
                    }
                })
                .fold(f64::INFINITY, f64::min);
            if dist > margin {
                return Ok(r);
            }
        }
        Err(Error::NoClearRadius { energy: 0.5 * (lo + hi), r0: self.cfg.radius, r1: self.cfg.radius + tol.radius_window, margin })
    }

    /// Largest sub-interval of [lo, hi] around `at` whose distance to every
    /// real Dirichlet level at R exceeds the margin, or None if `at` itself is too close.
    pub fn clear_interval(&self, k: f64, radius: f64, at: f64, lo: f64, hi: f64) -> Result<Option<(f64, f64)>> {
        let margin = self.cfg.tol.margin(at);
        let (mut a, mut b) = (lo, hi);
        for l in self.dirichlet_levels(k, radius)?.iter() {
            if l.value.im.abs() > margin {
                continue;
            }
            let v = l.value.re;
            if (v - at).abs() <= margin {
                return Ok(None);
            }
            if v < at {
                a = a.max(v + margin);
            } else {
                b = b.min(v - margin);
            }
        }
        Ok((a < b).then_some((a, b)))
    }

    /// Lambda(k, E) at an automatically chosen radius (real k) or the configured one.
    pub fn assemble(&self, k: C64, energy: f64) -> Result<DtnMatrix> {
        let radius = if k.im == 0.0 { self.radius_for(k.re, energy, energy)? } else { self.cfg.radius };
        self.assemble_at(k, energy, radius, None)
    }

    /// Lambda(k, E) at radius R, optionally restricted to the angular indices `ls`.
    pub fn assemble_at(&self, k: C64, energy: f64, radius: f64, ls: Option<&[u32]>) -> Result<DtnMatrix> {
        let basis = self.cfg.admissible(k, energy, false)?;
        let all: Vec<u32> = (0..=basis.l_max).collect();
        let ls = ls.unwrap_or(&all);
        let op = assemble_interior_partial(k, energy, &self.cfg, &self.disc, radius, ls)?;
        let rows: Vec<i32> = basis.torus_window().collect();
        let jc = basis.j_center;
        let mut blocks = Vec::with_capacity(ls.len());
        for &l in ls {
            let cols: Vec<i32> =
                rows.iter().copied().filter(|&j| basis.position(&ModeIndex::new(j, l, angular_labels(basis.n, l)[0])).is_some()).collect();
            let mut matrix = op.radial_block(l, &rows, &cols)?;
            for (c, &j) in cols.iter().enumerate() {
                let r = rows.iter().position(|&x| x == j).expect("column in window");
                let mode = ModeIndex::new(j, l, angular_labels(basis.n, l)[0]);
                matrix[(r, c)] -= ExteriorProfile::new(&basis, &mode)?.boundary_derivative(basis.n, radius)?;
            }
            let w = |j: i32| 1.0 + (l as f64).powi(2) + ((j - jc) as f64).powi(2);
            blocks.push(DtnBlock {
                l,
                multiplicity: angular_labels(basis.n, l).len(),
                row_weights: rows.iter().map(|&j| w(j)).collect(),
                col_weights: cols.iter().map(|&j| w(j)).collect(),
                rows: rows.clone(),
                cols,
                matrix,
            });
        }
        Ok(DtnMatrix { k, energy, radius, basis, blocks })
    }

    /// Full evaluation with kernel extraction at (k, E, R).
    pub fn band_point(&self, k: f64, energy: f64, radius: f64) -> Result<BandPoint> {
        let dtn = self.assemble_at(C64::new(k, 0.0), energy, radius, None)?;
        let spec = dtn.spectrum()?;
        let threshold = 10.0 * self.kernel_tol() * spec.norm;
        let kernel = dtn.kernel(&spec, threshold)?;
        let residual = kernel.iter().map(|f| dtn.weighted_residual(f)).fold(spec.sigma_min, f64::max);
        Ok(BandPoint {
            k,
            lambda: energy,
            sigma_min: spec.sigma_min,
            norm: spec.norm,
            residual: if kernel.is_empty() { spec.sigma_min } else { residual },
            multiplicity: kernel.len(),
            radius,
            radius_shifted: (radius - self.cfg.radius).abs() > 1e-12,
            kernel,
        })
    }
}

/// Lambda(k, E) with automatic radius choice.
pub fn assemble_dtn(solver: &DispersionSolver, k: C64, energy: f64) -> Result<DtnMatrix> {
    solver.assemble(k, energy)
}

/// Weighted sigma_min of Lambda(k, E).
pub fn sigma_min(solver: &DispersionSolver, k: C64, energy: f64) -> Result<f64> {
    solver.assemble(k, energy)?.sigma_min()
}

/// Threshold energies (k + 2 pi j)^2 over the solver's torus window.
pub fn hypersurface_energies(solver: &DispersionSolver, k: f64) -> Vec<(i32, f64)> {
    let jc = torus_center(k);
    let jm = solver.cfg.trunc.j_max as i32;
    (jc - jm..=jc + jm).map(|j| (j, (k + torus_frequency(j)).powi(2))).collect()
}

/// Split (lo, hi) into pieces avoiding the hypersurface crossing bands.
pub fn split_window(solver: &DispersionSolver, k: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<(f64, f64)> = hypersurface_energies(solver, k)
        .into_iter()
        .map(|(_, h)| {
            let eps = 1.01 * crossing_band(&solver.cfg.tol, h) + 1e-12;
            (h - eps, h + eps)
        })
        .filter(|(a, b)| *b > lo && *a < hi)
        .collect();
    cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut start = lo;
    for (a, b) in cuts {
        if a > start {
            out.push((start, a));
        }
        start = start.max(b);
    }
    if hi > start {
        out.push((start, hi));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocateOptions {
    pub grid: usize,
    pub refine_width: f64,
    /// Refine with only the angular block that attains the scan minimum.
    pub restrict_refinement: bool,
}

impl LocateOptions {
    pub fn new(grid: usize, refine_width: f64) -> Self {
        Self { grid, refine_width, restrict_refinement: true }
    }
}

struct ScanSample {
    energy: f64,
    blocks: BTreeMap<u32, f64>,
}

fn golden_section(mut a: f64, mut b: f64, width: f64, mut f: impl FnMut(f64) -> Result<f64>) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while b - a > width {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        }
    }
    Ok(if f1 <= f2 { x1 } else { x2 })
}

/// Accepted kernel points of Lambda(k, .) in the energy window, using the
/// configured refinement width.
pub fn locate_eigenvalues(solver: &DispersionSolver, k: f64, window: (f64, f64), grid: usize) -> Result<Vec<BandPoint>> {
    locate_with(solver, k, window, LocateOptions::new(grid, solver.cfg.tol.refine_width))
}

pub fn locate_with(solver: &DispersionSolver, k: f64, window: (f64, f64), opts: LocateOptions) -> Result<Vec<BandPoint>> {
    let (lo, hi) = window;
    let pieces = split_window(solver, k, lo, hi);
    let total: f64 = pieces.iter().map(|p| p.1 - p.0).sum();
    let mut found: Vec<BandPoint> = Vec::new();
    for (a, b) in pieces {
        let count = ((opts.grid as f64 * (b - a) / total).ceil() as usize).max(5);
        let energies: Vec<f64> = (0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect();
        let scan: Vec<ScanSample> = energies
            .par_iter()
            .map(|&e| {
                let r = solver.radius_for(k, e, e)?;
                let spec = solver.assemble_at(C64::new(k, 0.0), e, r, None)?.spectrum()?;
                Ok(ScanSample { energy: e, blocks: spec.block_minima().into_iter().collect() })
            })
            .collect::<Result<_>>()?;
        // a dip in one block can sit far above another block's floor, so
        // minima are sought block by block
        let ls: BTreeSet<u32> = scan.iter().flat_map(|s| s.blocks.keys().copied()).collect();
        let mut brackets = Vec::new();
        for &l in &ls {
            let sig = |i: usize| scan[i].blocks.get(&l).copied().unwrap_or(f64::INFINITY);
            for i in 0..scan.len() {
                let here = sig(i);
                if !here.is_finite() {
                    continue;
                }
                let left = if i == 0 { f64::INFINITY } else { sig(i - 1) };
                let right = if i + 1 == scan.len() { f64::INFINITY } else { sig(i + 1) };
                if here <= left && here < right || here < left && here <= right {
                    let e0 = scan[i.saturating_sub(1)].energy;
                    let e1 = scan[(i + 1).min(scan.len() - 1)].energy;
                    brackets.push((e0, e1, scan[i].energy, l));
                }
            }
        }
        let refine = |r: f64, e0: f64, e1: f64, l: u32| -> Result<Option<BandPoint>> {
            let ls = [l];
            let restrict = if opts.restrict_refinement { Some(&ls[..]) } else { None };
            let e = golden_section(e0, e1, opts.refine_width, |e| {
                solver.assemble_at(C64::new(k, 0.0), e, r, restrict)?.sigma_min()
            })?;
            let p = solver.band_point(k, e, r)?;
            Ok(p.accepted(solver.kernel_tol()).then_some(p))
        };
        let points: Vec<Option<BandPoint>> = brackets
            .par_iter()
            .map(|&(e0, e1, ec, l)| {
                // refine at the scan point's radius on the part of the bracket
                // clear of its Dirichlet levels; if a level was cut out and
                // nothing was found, retry at a few nearby radii where it has moved
                let r = solver.radius_for(k, ec, ec)?;
                let clear = solver.clear_interval(k, r, ec, e0, e1)?;
                if let Some((a, b)) = clear {
                    if let Some(p) = refine(r, a, b, l)? {
                        return Ok(Some(p));
                    }
                }
                if clear == Some((e0, e1)) {
                    return Ok(None);
                }
                let (r0, r1) = (solver.cfg.radius, solver.cfg.radius + solver.cfg.tol.radius_window);
                for dr in [0.1, 0.2, -0.1] {
                    let rr = r + dr;
                    if rr < r0 - 1e-12 || rr > r1 + 1e-12 {
                        continue;
                    }
                    if let Some((a, b)) = solver.clear_interval(k, rr, ec, e0, e1)? {
                        if let Some(p) = refine(rr, a, b, l)? {
                            return Ok(Some(p));
                        }
                    }
                }
                Ok(None)
            })
            .collect::<Result<_>>()?;
        found.extend(points.into_iter().flatten());
    }
    found.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    let mut out: Vec<BandPoint> = Vec::new();
    for p in found {
        match out.last_mut() {
            Some(q) if (p.lambda - q.lambda).abs() < 1e-8 => {
                if p.sigma_min < q.sigma_min {
                    *q = p;
                }
            }
            _ => out.push(p),
        }
    }
    Ok(out)
}

/// Multiply `next`'s kernel vector by the phase making its overlap with
/// `prev` real and positive; returns |overlap|.
pub fn align_gauge(prev: &BoundaryData, next: &mut BoundaryData) -> f64 {
    let mut s = C64::new(0.0, 0.0);
    for (m, c) in next.basis.iter().zip(&next.coefficients) {
        if let Some(p) = prev.coefficient(m) {
            s += p.conj() * c;
        }
    }
    let a = s.norm();
    if a > 0.0 {
        let phase = s.conj() / a;
        for c in next.coefficients.iter_mut() {
            *c *= phase;
        }
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    /// Reached the end of the k-grid.
    GridEnd,
    /// The continuation window met the threshold (k + 2 pi j)^2.
    Hypersurface { j: i32 },
    /// No kernel near the prediction after all step halvings.
    KernelLoss,
    /// Kernel found but never within the acceptance distance of the prediction.
    StepFailure,
    MultiplicityChange { from: usize, to: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientSample {
    pub k: f64,
    pub dlambda_dk: f64,
    /// |dlambda/dk| is negligible relative to the band's largest slope.
    pub flat: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Band {
    pub points: Vec<BandPoint>,
    /// Sampled k-range.
    pub interval: (f64, f64),
    pub stop_low: StopReason,
    pub stop_high: StopReason,
    pub gradient: Vec<GradientSample>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    /// Minimum corrector half-window in energy.
    pub window: f64,
    pub grid: usize,
    pub max_halvings: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self { window: 0.05, grid: 9, max_halvings: 8 }
    }
}

/// Continue the band through `seed` over the k-grid in both directions.
pub fn trace_band(solver: &DispersionSolver, k_grid: &[f64], seed: &BandPoint) -> Result<Band> {
    trace_with(solver, k_grid, seed, TraceOptions::default())
}

pub fn trace_with(solver: &DispersionSolver, k_grid: &[f64], seed: &BandPoint, opts: TraceOptions) -> Result<Band> {
    if !seed.accepted(solver.kernel_tol()) {
        return Err(Error::SeedRejected { sigma: seed.sigma_min, tol: solver.kernel_tol() * seed.norm });
    }
    let mut grid: Vec<f64> = k_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let pos = match grid.iter().position(|&k| (k - seed.k).abs() < 1e-12) {
        Some(p) => p,
        None => {
            let p = grid.partition_point(|&k| k < seed.k);
            grid.insert(p, seed.k);
            p
        }
    };
    let (up, stop_high) = trace_direction(solver, &grid[pos + 1..], seed, opts)?;
    let down_targets: Vec<f64> = grid[..pos].iter().rev().copied().collect();
    let (down, stop_low) = trace_direction(solver, &down_targets, seed, opts)?;
    let mut points: Vec<BandPoint> = down.into_iter().rev().collect();
    points.push(seed.clone());
    points.extend(up);
    let interval = (points[0].k, points[points.len() - 1].k);
    let mut band = Band { points, interval, stop_low, stop_high, gradient: Vec::new() };
    if band.points.len() >= 3 {
        band.gradient = band_gradient(&band)?;
    }
    Ok(band)
}

fn trace_direction(
    solver: &DispersionSolver,
    targets: &[f64],
    seed: &BandPoint,
    opts: TraceOptions,
) -> Result<(Vec<BandPoint>, StopReason)> {
    let mut history: Vec<(f64, f64)> = vec![(seed.k, seed.lambda)];
    let mut prev = seed.clone();
    let mut out = Vec::new();
    for &target in targets {
        let mut k_from = prev.k;
        let mut k_try = target;
        let mut halvings = 0;
        loop {
            let (k_last, l_last) = history[history.len() - 1];
            let predicted = if history.len() >= 2 {
                let (k0, l0) = history[history.len() - 2];
                l_last + (l_last - l0) / (k_last - k0) * (k_try - k_last)
            } else {
                l_last
            };
            let hw = opts.window.max(2.0 * (predicted - l_last).abs());
            let (lo, hi) = (predicted - hw, predicted + hw);
            for (j, h) in hypersurface_energies(solver, k_try) {
                let eps = crossing_band(&solver.cfg.tol, h);
                if h + eps > lo && h - eps < hi {
                    return Ok((out, StopReason::Hypersurface { j }));
                }
            }
            let found = locate_eigenvalues(solver, k_try, (lo, hi), opts.grid)?;
            let best = found
                .into_iter()
                .min_by(|a, b| (a.lambda - predicted).abs().total_cmp(&(b.lambda - predicted).abs()));
            match best {
                Some(mut p) if (p.lambda - predicted).abs() < 0.2 * (hi - lo) => {
                    if p.multiplicity != prev.multiplicity {
                        return Ok((out, StopReason::MultiplicityChange { from: prev.multiplicity, to: p.multiplicity }));
                    }
                    if p.multiplicity == 1 {
                        align_gauge(&prev.kernel[0], &mut p.kernel[0]);
                    }
                    history.push((p.k, p.lambda));
                    let done = k_try == target;
                    prev = p;
                    if done {
                        out.push(prev.clone());
                        break;
                    }
                    k_from = k_try;
                    k_try = target;
                }
                other => {
                    halvings += 1;
                    if halvings > opts.max_halvings {
                        let reason = if other.is_none() { StopReason::KernelLoss } else { StopReason::StepFailure };
                        return Ok((out, reason));
                    }
                    k_try = k_from + 0.5 * (k_try - k_from);
                }
            }
        }
    }
    Ok((out, StopReason::GridEnd))
}

/// Three-point (non-uniform) differences, second-order one-sided at the ends.
pub fn band_gradient(band: &Band) -> Result<Vec<GradientSample>> {
    let ks: Vec<f64> = band.points.iter().map(|p| p.k).collect();
    let ls: Vec<f64> = band.points.iter().map(|p| p.lambda).collect();
    gradient_samples(&ks, &ls)
}

pub fn gradient_samples(ks: &[f64], ls: &[f64]) -> Result<Vec<GradientSample>> {
    let n = ks.len();
    if n < 3 || ls.len() != n {
        return Err(Error::InvalidConfig(format!("band gradient needs at least 3 samples, got {n}")));
    }
    let mut g = vec![0.0; n];
    for i in 1..n - 1 {
        let (h1, h2) = (ks[i] - ks[i - 1], ks[i + 1] - ks[i]);
        g[i] = -h2 / (h1 * (h1 + h2)) * ls[i - 1] + (h2 - h1) / (h1 * h2) * ls[i] + h1 / (h2 * (h1 + h2)) * ls[i + 1];
    }
    let (h1, h2) = (ks[1] - ks[0], ks[2] - ks[1]);
    g[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * ls[0] + (h1 + h2) / (h1 * h2) * ls[1] - h1 / (h2 * (h1 + h2)) * ls[2];
    let (h1, h2) = (ks[n - 2] - ks[n - 3], ks[n - 1] - ks[n - 2]);
    g[n - 1] = (2.0 * h2 + h1) / (h2 * (h1 + h2)) * ls[n - 1] - (h1 + h2) / (h1 * h2) * ls[n - 2]
        + h2 / (h1 * (h1 + h2)) * ls[n - 3];
    let scale = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ks
        .iter()
        .zip(&g)
        .map(|(&k, &d)| GradientSample { k, dlambda_dk: d, flat: d.abs() <= 1e-6 * scale })
        .collect())
}

/// sigma_min of the weighted free Lambda_0 along k0 + i t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThomasScan {
    pub t: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Least-squares slope of log sigma against log t (positive t only).
    pub exponent: f64,
}

pub fn thomas_scan(cfg: &WaveguideConfig, k0: f64, e0: f64, ts: &[f64]) -> Result<ThomasScan> {
    let basis = cfg.admissible(C64::new(k0, 0.0), e0, false)?;
    let radius = cfg.radius;
    let jc = basis.j_center;
    let sigma = ts
        .iter()
        .map(|&t| {
            let k = C64::new(k0, t);
            let mut best = f64::INFINITY;
            for m in &basis.modes {
                let z = decay_rate(k, e0, m.j);
                if !(z.re > 0.0) {
                    return Err(Error::BranchViolation { re: z.re, im: z.im });
                }
                let entry = (1.0 / (radius * p_product(m.bessel_order(basis.n), z * radius)?)).norm();
                best = best.min(entry / m.weight_about(jc).sqrt());
            }
            Ok(best)
        })
        .collect::<Result<Vec<f64>>>()?;
    let pts: Vec<(f64, f64)> = ts.iter().zip(&sigma).filter(|(t, _)| **t > 0.0).map(|(t, s)| (t.ln(), s.ln())).collect();
    let exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    } else {
        f64::NAN
    };
    Ok(ThomasScan { t: ts.to_vec(), sigma, exponent })
}

#[cfg(test)]
mod tests;
