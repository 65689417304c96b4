//! Eigenfunctions D^- f + D^+ f from kernel data.

use std::collections::BTreeMap;

use crate::boundary::{basis_value, BoundaryData};
use crate::error::{Error, Result};
use crate::exterior::ExteriorProfile;
pub use crate::exterior::ExteriorPoint as FieldPoint;
use crate::interior::{assemble_interior_partial, InteriorOperator, RadialSolution};
use crate::model::{AdmissibleBasis, ModeIndex};
use crate::quadrature::composite_gauss;
use crate::C64;

use super::{BandPoint, DispersionSolver};

/// L2-normalized eigenfunction at an accepted band point.
pub struct Eigenfunction {
    pub n: usize,
    pub k: f64,
    pub lambda: f64,
    pub radius: f64,
    pub basis: AdmissibleBasis,
    pub data: BoundaryData,
    op: InteriorOperator,
    /// Interior solutions per (l, m).
    radial: BTreeMap<(u32, i32), RadialSolution>,
    exterior: BTreeMap<ModeIndex, (C64, ExteriorProfile)>,
    /// Multiplier making the field unit-norm on B x T.
    pub scale: f64,
}

impl Eigenfunction {
    /// Build from the `which`-th kernel vector of `point`.
    pub fn new(solver: &DispersionSolver, point: &BandPoint, which: usize) -> Result<Self> {
        let data = point
            .kernel
            .get(which)
            .cloned()
            .ok_or_else(|| Error::BasisMismatch(format!("kernel index {which} out of {} vectors", point.kernel.len())))?;
        let k = C64::new(point.k, 0.0);
        let basis = solver.cfg.admissible(k, point.lambda, false)?;
        let mut per_lm: BTreeMap<(u32, i32), Vec<(i32, C64)>> = BTreeMap::new();
        let mut exterior = BTreeMap::new();
        for (m, &c) in data.basis.iter().zip(&data.coefficients) {
            if c.norm() == 0.0 {
                continue;
            }
            per_lm.entry((m.l, m.m)).or_default().push((m.j, c));
            exterior.insert(*m, (c, ExteriorProfile::new(&basis, m)?));
        }
        let ls: Vec<u32> = {
            let mut v: Vec<u32> = per_lm.keys().map(|k| k.0).collect();
            v.dedup();
            v
        };
        let op = assemble_interior_partial(k, point.lambda, &solver.cfg, &solver.disc, point.radius, &ls)?;
        let mut radial = BTreeMap::new();
        for ((l, m), d) in per_lm {
            radial.insert((l, m), op.solve_radial(l, &d)?);
        }
        let mut ef = Self {
            n: solver.cfg.n,
            k: point.k,
            lambda: point.lambda,
            radius: point.radius,
            basis,
            data,
            op,
            radial,
            exterior,
            scale: 1.0,
        };
        ef.scale = 1.0 / ef.norm_squared_unscaled()?.sqrt();
        Ok(ef)
    }

    /// Modes carrying a nonzero radial profile.
    pub fn modes(&self) -> Vec<ModeIndex> {
        let mut out = Vec::new();
        for (&(l, m), sol) in &self.radial {
            for &j in sol.values.keys() {
                out.push(ModeIndex::new(j, l, m));
            }
        }
        out.sort();
        out
    }

    fn radial_unscaled(&self, mode: &ModeIndex, r: f64) -> Result<(C64, C64)> {
        let zero = C64::new(0.0, 0.0);
        if r <= self.radius {
            let Some(sol) = self.radial.get(&(mode.l, mode.m)) else { return Ok((zero, zero)) };
            return Ok(self.op.evaluate(sol, mode.j, r));
        }
        match self.exterior.get(mode) {
            Some((c, prof)) => Ok((c * prof.eval(self.n, self.radius, r)?, zero)),
            None => Ok((zero, zero)),
        }
    }

    /// Normalized radial profile u_mode(r); the field is
    /// sum_mode u_mode(r) Y(omega) e^{2 pi i j y} R^{-(n-1)/2}.
    pub fn radial(&self, mode: &ModeIndex, r: f64) -> Result<C64> {
        Ok(self.radial_unscaled(mode, r)?.0 * self.scale)
    }

    /// Interior radial derivative of u_mode at r <= R (normalized).
    pub fn interior_derivative(&self, mode: &ModeIndex, r: f64) -> Result<C64> {
        Ok(self.radial_unscaled(mode, r.min(self.radius))?.1 * self.scale)
    }

    /// Exterior radial derivative of u_mode at r = R+ (normalized).
    pub fn exterior_derivative(&self, mode: &ModeIndex) -> Result<C64> {
        match self.exterior.get(mode) {
            Some((c, prof)) => Ok(c * prof.boundary_derivative(self.n, self.radius)? * self.scale),
            None => Ok(C64::new(0.0, 0.0)),
        }
    }

    pub fn value(&self, p: &FieldPoint) -> Result<C64> {
        let mut s = C64::new(0.0, 0.0);
        for mode in self.modes() {
            let u = self.radial(&mode, p.r)?;
            if u.norm() > 0.0 {
                s += u * basis_value(self.n, self.radius, &mode, p.angles, p.y);
            }
        }
        Ok(s)
    }

    /// Outer radius beyond which every decaying mode is below e^{-16} of its trace.
    pub fn tail_radius(&self) -> f64 {
        let zmin = self
            .exterior
            .values()
            .filter_map(|(_, p)| match p {
                ExteriorProfile::Decaying { z, .. } => Some(z.re),
                _ => None,
            })
            .fold(f64::INFINITY, f64::min);
        if zmin.is_finite() { self.radius + 16.0 / zmin } else { self.radius }
    }

    /// Radial quadrature rule on [0, R + 16/z_min] with panels at the mesh breaks.
    pub fn radial_rule(&self, per_panel: usize) -> (Vec<f64>, Vec<f64>) {
        composite_gauss(&self.breaks(), per_panel)
    }

    /// Panel breaks of the radial rule: mesh breaks, then a graded exterior tail.
    pub fn breaks(&self) -> Vec<f64> {
        let mut breaks = vec![0.0];
        for d in &self.op.mesh.domains {
            breaks.push(d.b);
        }
        let outer = self.tail_radius();
        if outer > self.radius {
            let span = outer - self.radius;
            for f in [1.0 / 64.0, 1.0 / 16.0, 1.0 / 8.0, 0.25, 0.5, 1.0] {
                breaks.push(self.radius + f * span);
            }
        }
        breaks
    }

    fn norm_squared_unscaled(&self) -> Result<f64> {
        let (nodes, weights) = self.radial_rule(24);
        let rn = self.radius.powi(self.n as i32 - 1);
        let mut total = 0.0;
        for mode in self.modes() {
            for (&r, &w) in nodes.iter().zip(&weights) {
                total += w * self.radial_unscaled(&mode, r)?.0.norm_sqr() * r.powi(self.n as i32 - 1) / rn;
            }
            if let Some((c, ExteriorProfile::PowerLaw { .. })) = self.exterior.get(&mode) {
                // integral of (r/R)^{2(2-n-l)} r^{n-1} over (R, inf), over R^{n-1}
                total += c.norm_sqr() * self.radius / (2.0 * mode.l as f64 + self.n as f64 - 4.0);
            }
        }
        Ok(total)
    }

    /// Interior minus exterior normal derivative, relative to the trace size.
    pub fn derivative_mismatch(&self) -> Result<f64> {
        let mut num = 0.0;
        let mut den = 0.0;
        for mode in self.modes() {
            let di = self.interior_derivative(&mode, self.radius)?;
            let de = self.exterior_derivative(&mode)?;
            num += (di - de).norm_sqr();
            den += di.norm_sqr().max(de.norm_sqr());
        }
        Ok((num / den.max(f64::MIN_POSITIVE)).sqrt())
    }
}

/// Normalized eigenfunction samples from the first kernel vector of `point`.
pub fn reconstruct_eigenfunction(solver: &DispersionSolver, point: &BandPoint, points: &[FieldPoint]) -> Result<Vec<C64>> {
    let ef = Eigenfunction::new(solver, point, 0)?;
    points.iter().map(|p| ef.value(p)).collect()
}
