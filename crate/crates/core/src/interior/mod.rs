//! Interior problem on B_R x T: collocation of H(k) - E in the radial variable
//! per angular mode (l, m) and torus mode j, Dirichlet data at r = R.
//!
//! V is radial in x, so it only couples torus modes j <-> j - w through its
//! Fourier coefficients; each connected set of coupled j's at fixed l is one
//! dense block with its own LU.

pub mod cheb;
pub mod mesh;

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, CMat, Lu};
use crate::model::{
    angular_labels, decay_rate, torus_center, torus_frequency, AdmissibleBasis, ModeKind, PotentialSpec, Truncation,
    WaveguideConfig,
};
use crate::specfun::log_derivatives;
use crate::C64;

pub use mesh::{NodeRole, RadialMesh};

/// Radial node count, angular and torus truncations, and extra domain breaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub n_r: usize,
    pub q: u32,
    pub j: u32,
    pub l_max: u32,
    pub j_max: u32,
    /// Radii (besides r = 1 and the profile breakpoints) where domains split.
    pub extra_breaks: Vec<f64>,
}

impl Discretization {
    pub fn from_truncation(t: &Truncation) -> Self {
        Self { n_r: t.n_r, q: t.q, j: t.j, l_max: t.l_max, j_max: t.j_max, extra_breaks: Vec::new() }
    }

    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.extra_breaks = breaks.to_vec();
        self
    }

    pub fn with_nodes(mut self, n_r: usize) -> Self {
        self.n_r = n_r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        Truncation { n_r: self.n_r, q: self.q, j: self.j, l_max: self.l_max, j_max: self.j_max }.validate()
    }

    /// Domain breaks inside (0, R): r = 1, profile breakpoints, extra breaks.
    pub fn breaks(&self, radius: f64, potential: &PotentialSpec) -> Vec<f64> {
        let mut b: Vec<f64> = potential.breakpoints();
        b.push(1.0);
        b.extend(&self.extra_breaks);
        b.retain(|&x| x > 1e-9 && x < radius - 1e-9);
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        b
    }

    pub fn mesh(&self, radius: f64, potential: &PotentialSpec) -> RadialMesh {
        RadialMesh::balanced(radius, &self.breaks(radius, potential), self.n_r)
    }
}

/// Connected components of the torus window under j <-> j - w coupling.
pub fn coupling_components(window: &[i32], frequencies: &[i32]) -> Vec<Vec<i32>> {
    let mut parent: Vec<usize> = (0..window.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (a, &j) in window.iter().enumerate() {
        for &w in frequencies.iter().filter(|&&w| w != 0) {
            if let Some(b) = window.iter().position(|&jj| jj == j - w) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<i32>> = BTreeMap::new();
    for (a, &j) in window.iter().enumerate() {
        let r = find(&mut parent, a);
        groups.entry(r).or_default().push(j);
    }
    groups.into_values().collect()
}

/// Dense collocation matrix of -u'' - (n-1)/r u' + [l(l+n-2)/r^2 + (k+2 pi j)^2 - shift] u
/// + sum_w V_w(r) u_{j-w} for the torus modes in `comp`, with unit-scaled
/// Dirichlet rows (times `boundary_scale`) and derivative-continuity rows.
fn collocation_matrix(
    mesh: &RadialMesh,
    n: usize,
    l: u32,
    comp: &[i32],
    k: C64,
    shift: f64,
    potential: &PotentialSpec,
) -> CMat {
    let nn = mesh.len();
    let size = nn * comp.len();
    let parity = (l % 2) as usize;
    let (s1, s2) = mesh.scales();
    let interface_scale = s2 / s1;
    let boundary_scale = s2;
    let freqs: Vec<i32> = potential.frequencies();
    let centrifugal = (l as f64) * (l as f64 + n as f64 - 2.0);
    let mut a = CMat::zeros(size, size);
    for (jj, &j) in comp.iter().enumerate() {
        let kj = k + torus_frequency(j);
        let diag_shift = kj * kj - shift;
        let base = jj * nn;
        for g in 0..nn {
            let row = base + g;
            match mesh.roles[g] {
                NodeRole::Ode { domain, local } => {
                    let dom = &mesh.domains[domain];
                    let r = mesh.nodes[g];
                    let (d1, d2) = (dom.d1(parity), dom.d2(parity));
                    for c in 0..dom.len() {
                        let v = -d2.get(local, c) - (n as f64 - 1.0) / r * d1.get(local, c);
                        a[(row, base + dom.global[c])] += C64::new(v, 0.0);
                    }
                    a[(row, row)] += diag_shift + centrifugal / (r * r);
                    for &w in &freqs {
                        let vw = potential.mode_coefficient(w, r);
                        if vw == C64::new(0.0, 0.0) {
                            continue;
                        }
                        if let Some(jp) = comp.iter().position(|&x| x == j - w) {
                            a[(row, jp * nn + g)] += vw;
                        }
                    }
                }
                NodeRole::Interface { left, left_local, right, right_local } => {
                    let (dl, dr) = (&mesh.domains[left], &mesh.domains[right]);
                    for c in 0..dl.len() {
                        a[(row, base + dl.global[c])] += C64::new(interface_scale * dl.d1(parity).get(left_local, c), 0.0);
                    }
                    for c in 0..dr.len() {
                        a[(row, base + dr.global[c])] -=
                            C64::new(interface_scale * dr.d1(parity).get(right_local, c), 0.0);
                    }
                }
                NodeRole::Boundary { .. } => {
                    a[(row, row)] = C64::new(boundary_scale, 0.0);
                }
            }
        }
    }
    a
}

fn boundary_scale(mesh: &RadialMesh) -> f64 {
    mesh.scales().1
}

/// Factorized interior problem at one (k, E, R).
pub struct InteriorOperator {
    pub n: usize,
    pub k: C64,
    pub energy: f64,
    pub radius: f64,
    /// Torus window of the interior unknowns, ascending.
    pub window: Vec<i32>,
    pub components: Vec<Vec<i32>>,
    pub mesh: Arc<RadialMesh>,
    blocks: BTreeMap<u32, Vec<Lu>>,
    /// Smallest relative pivot over all factored blocks.
    pub min_pivot_rel: f64,
}

/// Solution of the interior problem for one (l, m): nodal values per torus mode.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    pub l: u32,
    pub values: BTreeMap<i32, Vec<C64>>,
}

/// Factor every l <= l_max of the interior problem.
pub fn assemble_interior(k: C64, energy: f64, cfg: &WaveguideConfig, disc: &Discretization) -> Result<InteriorOperator> {
    let ls: Vec<u32> = (0..=disc.l_max).collect();
    assemble_interior_partial(k, energy, cfg, disc, cfg.radius, &ls)
}

/// Factor only the angular indices `ls`, at radius `radius`.
pub fn assemble_interior_partial(
    k: C64,
    energy: f64,
    cfg: &WaveguideConfig,
    disc: &Discretization,
    radius: f64,
    ls: &[u32],
) -> Result<InteriorOperator> {
    let mesh = Arc::new(disc.mesh(radius, &cfg.potential));
    let jc = torus_center(k.re);
    let jw = disc.j as i32;
    let window: Vec<i32> = (jc - jw..=jc + jw).collect();
    let components = coupling_components(&window, &cfg.potential.frequencies());
    let mut blocks = BTreeMap::new();
    let mut min_pivot_rel = f64::INFINITY;
    for &l in ls {
        let mut lus = Vec::with_capacity(components.len());
        for comp in &components {
            let a = collocation_matrix(&mesh, cfg.n, l, comp, k, energy, &cfg.potential);
            let lu = Lu::new(&a);
            min_pivot_rel = min_pivot_rel.min(lu.min_pivot_rel);
            lus.push(lu);
        }
        blocks.insert(l, lus);
    }
    if min_pivot_rel < cfg.tol.pivot_rel {
        return Err(Error::DirichletProximity { energy, pivot: min_pivot_rel });
    }
    Ok(InteriorOperator { n: cfg.n, k, energy, radius, window, components, mesh, blocks, min_pivot_rel })
}

impl InteriorOperator {
    pub fn angular_indices(&self) -> Vec<u32> {
        self.blocks.keys().copied().collect()
    }

    fn component_of(&self, j: i32) -> Result<usize> {
        self.components
            .iter()
            .position(|c| c.contains(&j))
            .ok_or_else(|| Error::BasisMismatch(format!("torus mode {j} outside the interior window")))
    }

    fn lus(&self, l: u32) -> Result<&Vec<Lu>> {
        self.blocks.get(&l).ok_or_else(|| Error::BasisMismatch(format!("angular index {l} was not assembled")))
    }

    /// Nodal solutions for unit Dirichlet data on each `cols` mode: returns, per
    /// column, the component index and the solved block.
    fn solve_units(&self, l: u32, cols: &[i32]) -> Result<Vec<(usize, CMat)>> {
        let lus = self.lus(l)?;
        let nn = self.mesh.len();
        let sb = boundary_scale(&self.mesh);
        let mut by_comp: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (ci, &j) in cols.iter().enumerate() {
            by_comp.entry(self.component_of(j)?).or_default().push(ci);
        }
        let mut out: Vec<Option<(usize, CMat)>> = vec![None; cols.len()];
        for (c, members) in by_comp {
            let comp = &self.components[c];
            let mut rhs = CMat::zeros(nn * comp.len(), members.len());
            for (col, &ci) in members.iter().enumerate() {
                let jj = comp.iter().position(|&x| x == cols[ci]).expect("member of component");
                rhs[(jj * nn + self.mesh.boundary_node(), col)] = C64::new(sb, 0.0);
            }
            let x = lus[c].solve(&rhs);
            for (col, &ci) in members.iter().enumerate() {
                out[ci] = Some((c, CMat::from_fn(x.nrows(), 1, |i, _| x[(i, col)])));
            }
        }
        Ok(out.into_iter().map(|o| o.expect("every column solved")).collect())
    }

    /// Radial interior DtN block at angular index l: entry (row j, col j') is
    /// the boundary derivative of mode j for unit Dirichlet data on mode j'.
    pub fn radial_block(&self, l: u32, rows: &[i32], cols: &[i32]) -> Result<CMat> {
        let nn = self.mesh.len();
        let deriv = self.mesh.boundary_derivative((l % 2) as usize);
        let solved = self.solve_units(l, cols)?;
        let mut out = CMat::zeros(rows.len(), cols.len());
        for (ci, (c, x)) in solved.iter().enumerate() {
            let comp = &self.components[*c];
            for (ri, &j) in rows.iter().enumerate() {
                if let Some(jj) = comp.iter().position(|&x| x == j) {
                    out[(ri, ci)] = deriv.iter().map(|&(g, d)| x[(jj * nn + g, 0)] * d).sum();
                }
            }
        }
        Ok(out)
    }

    /// Solve with Dirichlet data `data` (torus mode -> coefficient) at angular index l.
    pub fn solve_radial(&self, l: u32, data: &[(i32, C64)]) -> Result<RadialSolution> {
        let nn = self.mesh.len();
        let cols: Vec<i32> = data.iter().map(|d| d.0).collect();
        let solved = self.solve_units(l, &cols)?;
        let mut values: BTreeMap<i32, Vec<C64>> = BTreeMap::new();
        for ((c, x), &(_, coef)) in solved.iter().zip(data) {
            for (jj, &j) in self.components[*c].iter().enumerate() {
                let v = values.entry(j).or_insert_with(|| vec![C64::new(0.0, 0.0); nn]);
                for g in 0..nn {
                    v[g] += coef * x[(jj * nn + g, 0)];
                }
            }
        }
        Ok(RadialSolution { l, values })
    }

    /// Radial value and derivative of a nodal solution at r in [0, R].
    pub fn evaluate(&self, sol: &RadialSolution, j: i32, r: f64) -> (C64, C64) {
        let zero = C64::new(0.0, 0.0);
        let Some(v) = sol.values.get(&j) else { return (zero, zero) };
        let parity = (sol.l % 2) as usize;
        let val = self.mesh.interpolation(r, parity).iter().map(|&(g, c)| v[g] * c).sum();
        let der = self.mesh.derivative_at(r, parity).iter().map(|&(g, c)| v[g] * c).sum();
        (val, der)
    }
}

/// Interior DtN over the admissible basis (square, block diagonal in (l, m)).
pub fn interior_dtn(op: &InteriorOperator, basis: &AdmissibleBasis) -> Result<CMat> {
    let modes = &basis.modes;
    let mut out = CMat::zeros(modes.len(), modes.len());
    let mut per_l: BTreeMap<u32, Vec<i32>> = BTreeMap::new();
    for m in modes {
        let js = per_l.entry(m.l).or_default();
        if !js.contains(&m.j) {
            js.push(m.j);
        }
    }
    for (l, js) in per_l {
        let block = op.radial_block(l, &js, &js)?;
        for (a, ma) in modes.iter().enumerate().filter(|(_, m)| m.l == l) {
            let ra = js.iter().position(|&x| x == ma.j).expect("listed");
            for (b, mb) in modes.iter().enumerate().filter(|(_, m)| m.l == l && m.m == ma.m) {
                let cb = js.iter().position(|&x| x == mb.j).expect("listed");
                out[(a, b)] = block[(ra, cb)];
            }
        }
    }
    Ok(out)
}

/// Closed-form free interior DtN: (1 - n/2)/R + z I'/I(zR), or l/R on a zero mode.
pub fn free_interior_dtn_diag(k: C64, energy: f64, basis: &AdmissibleBasis, radius: f64) -> Result<Vec<C64>> {
    let n = basis.n;
    basis
        .modes
        .iter()
        .map(|m| {
            if basis.kind(m.j) == ModeKind::Zero {
                return Ok(C64::new(m.l as f64 / radius, 0.0));
            }
            let z = decay_rate(k, energy, m.j);
            let (_, fi) = log_derivatives(m.bessel_order(n), z * radius)?;
            Ok(C64::new((1.0 - n as f64 / 2.0) / radius, 0.0) + z * fi)
        })
        .collect()
}

/// Dirichlet eigenvalue with its angular index and multiplicity (number of m labels).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletLevel {
    pub value: C64,
    pub l: u32,
    pub multiplicity: usize,
}

/// Eigenvalues of H_D(k) on B_R x T for every l <= l_max and every torus
/// component, by eliminating the constraint rows (Schur complement).
pub fn dirichlet_spectrum(k: f64, radius: f64, cfg: &WaveguideConfig, disc: &Discretization) -> Result<Vec<DirichletLevel>> {
    let mesh = disc.mesh(radius, &cfg.potential);
    let jc = torus_center(k);
    let jw = disc.j as i32;
    let window: Vec<i32> = (jc - jw..=jc + jw).collect();
    let components = coupling_components(&window, &cfg.potential.frequencies());
    let nn = mesh.len();
    let is_ode: Vec<bool> = mesh.roles.iter().map(|r| matches!(r, NodeRole::Ode { .. })).collect();
    let mut levels = Vec::new();
    for l in 0..=disc.l_max {
        let mult = angular_labels(cfg.n, l).len();
        for comp in &components {
            let a = collocation_matrix(&mesh, cfg.n, l, comp, C64::new(k, 0.0), 0.0, &cfg.potential);
            let mut o_idx = Vec::new();
            let mut c_idx = Vec::new();
            for jj in 0..comp.len() {
                for g in 0..nn {
                    if is_ode[g] { o_idx.push(jj * nn + g) } else { c_idx.push(jj * nn + g) }
                }
            }
            let sub = |rows: &[usize], cols: &[usize]| CMat::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]);
            let a_oo = sub(&o_idx, &o_idx);
            let a_oc = sub(&o_idx, &c_idx);
            let a_co = sub(&c_idx, &o_idx);
            let a_cc = sub(&c_idx, &c_idx);
            let elim = Lu::new(&a_cc).solve(&a_co);
            let schur = &a_oo - &a_oc * &elim;
            for value in eigenvalues(&schur)? {
                levels.push(DirichletLevel { value, l, multiplicity: mult });
            }
        }
    }
    levels.sort_by(|a, b| a.value.re.total_cmp(&b.value.re));
    Ok(levels)
}

/// Lowest `count` Dirichlet eigenvalues, repeated by multiplicity, ascending.
pub fn dirichlet_eigs(k: f64, radius: f64, count: usize, cfg: &WaveguideConfig, disc: &Discretization) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(count);
    for lev in dirichlet_spectrum(k, radius, cfg, disc)? {
        for _ in 0..lev.multiplicity {
            if out.len() == count {
                return Ok(out);
            }
            out.push(lev.value.re);
        }
    }
    Ok(out)
}

/// Distance from E to the Dirichlet spectrum at (k, R).
pub fn dirichlet_distance(levels: &[DirichletLevel], energy: f64) -> f64 {
    levels.iter().map(|l| (l.value - energy).norm()).fold(f64::INFINITY, f64::min)
}

/// Smallest R on the grid R0, R0 + step, ..., R0 + window with
/// dist(E, sigma(H_D(k, R))) > margin.
pub fn choose_radius(
    k: f64,
    energy: f64,
    r0: f64,
    margin: f64,
    cfg: &WaveguideConfig,
    disc: &Discretization,
) -> Result<f64> {
    if !(r0 > 1.0) {
        return Err(Error::InvalidConfig(format!("radius = {r0} must satisfy R > 1")));
    }
    let steps = (cfg.tol.radius_window / cfg.tol.radius_step).round() as usize;
    for i in 0..=steps {
        let r = r0 + i as f64 * cfg.tol.radius_step;
        let levels = dirichlet_spectrum(k, r, cfg, disc)?;
        if dirichlet_distance(&levels, energy) > margin {
            return Ok(r);
        }
    }
    Err(Error::NoClearRadius { energy, r0, r1: r0 + cfg.tol.radius_window, margin })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_defect, norm2};
    use crate::model::{PotentialSpec, Tolerances};

    fn cfg(n: usize, radius: f64, pot: PotentialSpec, n_r: usize) -> (WaveguideConfig, Discretization) {
        let t = Truncation::new(n_r, 6, 2);
        let c = WaveguideConfig::new(n, radius, pot).with_truncation(t);
        let d = Discretization::from_truncation(&t);
        (c, d)
    }

    /// First zero of J_0 by bisection on its power series.
    fn j0_first_zero() -> f64 {
        let j0 = |x: f64| {
            let mut term = 1.0;
            let mut s = 1.0;
            for m in 1..60 {
                term *= -(x * x / 4.0) / (m as f64 * m as f64);
                s += term;
            }
            s
        };
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let c = 0.5 * (a + b);
            if j0(a) * j0(c) <= 0.0 { b = c } else { a = c }
        }
        0.5 * (a + b)
    }

    #[test]
    fn components_follow_frequencies() {
        let w: Vec<i32> = (-2..=2).collect();
        assert_eq!(coupling_components(&w, &[0]).len(), 5);
        assert_eq!(coupling_components(&w, &[-1, 0, 1]), vec![w.clone()]);
        let two = coupling_components(&w, &[2]);
        assert_eq!(two, vec![vec![-2, 0, 2], vec![-1, 1]]);
    }

    #[test]
    fn free_dtn_converges_spectrally() {
        let k = C64::new(0.3, 0.0);
        let e = -2.0;
        let errs: Vec<f64> = [24usize, 48]
            .iter()
            .map(|&n_r| {
                let (c, d) = cfg(2, 1.5, PotentialSpec::zero(), n_r);
                let basis = c.admissible(k, e, false).unwrap();
                let op = assemble_interior(k, e, &c, &d).unwrap();
                let lam = interior_dtn(&op, &basis).unwrap();
                let diag = free_interior_dtn_diag(k, e, &basis, 1.5).unwrap();
                let mut err = 0.0f64;
                for a in 0..basis.len() {
                    for b in 0..basis.len() {
                        let exact = if a == b { diag[a] } else { C64::new(0.0, 0.0) };
                        err = err.max((lam[(a, b)] - exact).norm());
                    }
                }
                err
            })
            .collect();
        assert!(errs[1] < 1e-8, "{errs:?}");
        assert!(errs[1] * 10.0 <= errs[0], "{errs:?}");
    }

    #[test]
    fn free_dtn_n3_closed_form() {
        // n = 3, l = 0: z coth(zR) - 1/R with z = 1 at R = 1.5
        let e = -1.0;
        let k = C64::new(0.0, 0.0);
        let (c, d) = cfg(3, 1.5, PotentialSpec::zero(), 40);
        let basis = c.admissible(k, e, false).unwrap();
        let op = assemble_interior(k, e, &c, &d).unwrap();
        let lam = interior_dtn(&op, &basis).unwrap();
        let pos = basis.position(&crate::model::ModeIndex::new(0, 0, 0)).unwrap();
        let exact = 1.0 / (1.5f64).tanh() - 1.0 / 1.5;
        assert!((lam[(pos, pos)].re - exact).abs() < 1e-10);
    }

    #[test]
    fn zero_datum_gives_zero_solution() {
        let (c, d) = cfg(2, 1.5, PotentialSpec::well(10.0), 24);
        let k = C64::new(0.4, 0.0);
        let op = assemble_interior(k, -3.0, &c, &d).unwrap();
        let sol = op.solve_radial(1, &[(0, C64::new(0.0, 0.0))]).unwrap();
        assert!(sol.values[&0].iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn coupled_dtn_is_hermitian() {
        let (c, d) = cfg(2, 1.5, PotentialSpec::coupled_well(-8.0, 1.5), 32);
        let k = C64::new(0.7, 0.0);
        let e = -4.3;
        let basis = c.admissible(k, e, false).unwrap();
        let op = assemble_interior(k, e, &c, &d).unwrap();
        let lam = interior_dtn(&op, &basis).unwrap();
        assert!(hermitian_defect(&lam) <= 1e-8 * norm2(&lam).unwrap());
        // coupling present between j and j +- 1 at equal (l, m)
        let a = basis.position(&crate::model::ModeIndex::new(0, 0, 0)).unwrap();
        let b = basis.position(&crate::model::ModeIndex::new(1, 0, 0)).unwrap();
        assert!(lam[(a, b)].norm() > 1e-6);
    }

    #[test]
    fn dirichlet_ground_state_of_unit_disk() {
        let t = Truncation::new(32, 4, 1);
        let c = WaveguideConfig::new(2, 1.5, PotentialSpec::zero()).with_truncation(t);
        let d = Discretization::from_truncation(&t);
        // R = 1 is below the configuration constraint but fine for the spectrum alone
        let ev = dirichlet_eigs(0.0, 1.0, 3, &c, &d).unwrap();
        let z = j0_first_zero();
        assert!((ev[0] - z * z).abs() < 1e-9, "{} vs {}", ev[0], z * z);
        assert!((5.7831859629 - z * z).abs() < 1e-9);
        // next level: l = 1 doublet, j_{1,1}^2 = 14.68197
        assert!((ev[1] - 14.681970642).abs() < 1e-6 && (ev[2] - ev[1]).abs() < 1e-9);
    }

    #[test]
    fn dirichlet_torus_shift_and_monotonicity() {
        let t = Truncation::new(32, 4, 1);
        let c = WaveguideConfig::new(2, 1.5, PotentialSpec::well(10.0)).with_truncation(t);
        let d = Discretization::from_truncation(&t);
        let k = 0.5;
        let mut prev = f64::INFINITY;
        for r in [1.0, 1.1, 1.2, 1.4] {
            let l1 = dirichlet_eigs(k, r, 1, &c, &d).unwrap()[0];
            assert!(l1 < prev - 1e-8, "R = {r}");
            prev = l1;
        }
        let free = WaveguideConfig::new(2, 1.5, PotentialSpec::zero()).with_truncation(t);
        let ev = dirichlet_eigs(k, 1.0, 1, &free, &d).unwrap();
        assert!((ev[0] - (5.7831859629 + k * k)).abs() < 1e-8);
    }

    #[test]
    fn choose_radius_moves_off_eigenvalue() {
        let t = Truncation::new(24, 4, 1);
        let c = WaveguideConfig::new(2, 1.5, PotentialSpec::well(10.0)).with_truncation(t);
        let d = Discretization::from_truncation(&t);
        let k = 0.3;
        let margin = Tolerances::default().margin(0.0);
        let low = dirichlet_eigs(k, 1.5, 1, &c, &d).unwrap()[0];
        assert_eq!(choose_radius(k, low - 5.0, 1.5, margin, &c, &d).unwrap(), 1.5);
        let r = choose_radius(k, low, 1.5, margin, &c, &d).unwrap();
        assert!(r > 1.5);
        let lev = dirichlet_spectrum(k, r, &c, &d).unwrap();
        assert!(dirichlet_distance(&lev, low) > margin);
        assert_eq!(choose_radius(k, low + 1e-3, 1.5, 0.0, &c, &d).unwrap(), 1.5);
        assert!(matches!(choose_radius(k, low, 1.5, 1e6, &c, &d), Err(Error::NoClearRadius { .. })));
    }

    #[test]
    fn pivot_guard_near_dirichlet_level() {
        let t = Truncation::new(24, 4, 1);
        let c = WaveguideConfig::new(2, 1.5, PotentialSpec::zero()).with_truncation(t);
        let d = Discretization::from_truncation(&t);
        let lev = dirichlet_eigs(0.0, 1.5, 1, &c, &d).unwrap()[0];
        match assemble_interior(C64::new(0.0, 0.0), lev, &c, &d) {
            Err(Error::DirichletProximity { pivot, .. }) => assert!(pivot < 1e-10),
            other => panic!("expected proximity error, got {:?}", other.map(|o| o.min_pivot_rel)),
        }
    }
}
