//! Geometry, potentials and mode bookkeeping for H(k) on B_R x T.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Number of periodic directions. Only one is supported.
pub const PERIODIC_DIM: usize = 1;

/// Torus frequency of mode `j`.
#[inline]
pub fn torus_frequency(j: i32) -> f64 {
    2.0 * PI * j as f64
}

/// E_j(k) = E - (k + 2 pi j)^2, using the complex square when k is complex.
pub fn shifted_energy(k: C64, energy: f64, j: i32) -> C64 {
    let s = k + torus_frequency(j);
    C64::new(energy, 0.0) - s * s
}

/// z_j = sqrt(-E_j(k)) on the principal branch (Re z >= 0).
pub fn decay_rate(k: C64, energy: f64, j: i32) -> C64 {
    (-shifted_energy(k, energy, j)).sqrt()
}

/// Smallest angular index with an L2 power-law exterior solution.
pub fn min_angular_index(n: usize) -> Result<u32> {
    match n {
        0 | 1 => Err(Error::InvalidConfig(format!("dimension n = {n} must be at least 2"))),
        2 => Ok(2),
        3 | 4 => Ok(1),
        _ => Ok(0),
    }
}

/// Torus index j plus angular label. For n = 2 the angular label is `m = q`
/// with `l = |q|`; for n = 3 it is the real spherical harmonic (l, m).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex {
    pub j: i32,
    pub l: u32,
    pub m: i32,
}

impl ModeIndex {
    pub fn new(j: i32, l: u32, m: i32) -> Self {
        Self { j, l, m }
    }

    /// Angular part only; V is radial in x so it never mixes these.
    pub fn angular(&self) -> (u32, i32) {
        (self.l, self.m)
    }

    /// Bessel order n/2 + l - 1 of the radial solutions.
    pub fn bessel_order(&self, n: usize) -> f64 {
        n as f64 / 2.0 + self.l as f64 - 1.0
    }

    /// Sobolev weight 1 + l^2 + j^2.
    pub fn weight(&self) -> f64 {
        self.weight_about(0)
    }

    /// Sobolev weight with j measured from the torus window center.
    pub fn weight_about(&self, j_center: i32) -> f64 {
        1.0 + (self.l as f64).powi(2) + ((self.j - j_center) as f64).powi(2)
    }

    /// Partner index under conjugation combined with k -> 2 pi - k:
    /// (q, j) -> (-q, -1 - j). Real harmonics (n = 3) keep m.
    pub fn mirrored(&self, n: usize) -> Self {
        let m = if n == 2 { -self.m } else { self.m };
        Self::new(-1 - self.j, self.l, m)
    }
}

/// Angular sub-indices at angular momentum `l`, ascending.
pub fn angular_labels(n: usize, l: u32) -> Vec<i32> {
    let l = l as i32;
    if n == 2 {
        if l == 0 {
            vec![0]
        } else {
            vec![-l, l]
        }
    } else {
        (-l..=l).collect()
    }
}

/// Torus index closest to the quasimomentum: the window |j - j_c| <= J is
/// carried along under k -> k + 2 pi and mirrored under k -> 2 pi - k.
pub fn torus_center(k: f64) -> i32 {
    -(k / (2.0 * PI)).round() as i32
}

/// All (j, l, m) with |j - j_center| <= j_max, l <= l_max, in basis order.
pub fn truncated_basis(n: usize, l_max: u32, j_center: i32, j_max: u32) -> Vec<ModeIndex> {
    let jm = j_max as i32;
    let mut out = Vec::new();
    for j in j_center - jm..=j_center + jm {
        for l in 0..=l_max {
            for m in angular_labels(n, l) {
                out.push(ModeIndex::new(j, l, m));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeKind {
    Negative,
    Zero,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeClass {
    pub kind: ModeKind,
    pub near_crossing: bool,
}

/// Crossing band half-width for energy `energy`.
pub fn crossing_band(tol: &Tolerances, energy: f64) -> f64 {
    tol.cross_rel * (1.0 + energy.abs())
}

/// Sign class of every |j| <= j_max against E_j(k).
pub fn classify_modes(
    k: f64,
    energy: f64,
    j_max: u32,
    eps_cross: f64,
    exact_zero: bool,
) -> BTreeMap<i32, ModeClass> {
    let jm = j_max as i32;
    classify_window(k, energy, -jm..=jm, eps_cross, exact_zero)
}

/// Sign class of every j in `window`.
pub fn classify_window(
    k: f64,
    energy: f64,
    window: std::ops::RangeInclusive<i32>,
    eps_cross: f64,
    exact_zero: bool,
) -> BTreeMap<i32, ModeClass> {
    window
        .map(|j| {
            let ej = shifted_energy(C64::new(k, 0.0), energy, j).re;
            let near = ej.abs() <= eps_cross;
            let kind = if near && exact_zero {
                ModeKind::Zero
            } else if ej < 0.0 {
                ModeKind::Negative
            } else if ej > 0.0 {
                ModeKind::Positive
            } else {
                ModeKind::Zero
            };
            (j, ModeClass { kind, near_crossing: near })
        })
        .collect()
}

/// Truncated admissible subspace at (k, E) together with its mode classes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleBasis {
    pub n: usize,
    pub k: C64,
    pub energy: f64,
    pub l_max: u32,
    pub j_max: u32,
    pub j_center: i32,
    pub modes: Vec<ModeIndex>,
    pub classes: BTreeMap<i32, ModeClass>,
}

impl AdmissibleBasis {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn kind(&self, j: i32) -> ModeKind {
        self.classes[&j].kind
    }

    /// Full truncated boundary basis (admissible or not).
    pub fn row_modes(&self) -> Vec<ModeIndex> {
        truncated_basis(self.n, self.l_max, self.j_center, self.j_max)
    }

    /// Torus indices of the window, ascending.
    pub fn torus_window(&self) -> std::ops::RangeInclusive<i32> {
        let jm = self.j_max as i32;
        self.j_center - jm..=self.j_center + jm
    }

    pub fn position(&self, mode: &ModeIndex) -> Option<usize> {
        self.modes.binary_search(mode).ok()
    }
}

/// Ordered basis of the truncated admissible subspace.
pub fn admissible_basis(
    n: usize,
    k: C64,
    energy: f64,
    trunc: &Truncation,
    tol: &Tolerances,
    exact_zero: bool,
) -> Result<AdmissibleBasis> {
    let l0 = min_angular_index(n)?;
    let eps = crossing_band(tol, energy);
    let jc = torus_center(k.re);
    let jm = trunc.j_max as i32;
    let classes = classify_window(k.re, energy, jc - jm..=jc + jm, eps, exact_zero);
    let near: Vec<i32> = classes.iter().filter(|(_, c)| c.near_crossing).map(|(j, _)| *j).collect();
    if !exact_zero {
        if let Some(&j) = near.first() {
            return Err(Error::NearCrossing { j, eps });
        }
    } else if near.len() > 1 {
        return Err(Error::HypersurfaceIntersection { j1: near[0], j2: near[1] });
    }
    let modes = truncated_basis(n, trunc.l_max, jc, trunc.j_max)
        .into_iter()
        .filter(|mode| match classes[&mode.j].kind {
            ModeKind::Negative => true,
            ModeKind::Zero => mode.l >= l0,
            ModeKind::Positive => false,
        })
        .collect();
    Ok(AdmissibleBasis { n, k, energy, l_max: trunc.l_max, j_max: trunc.j_max, j_center: jc, modes, classes })
}

/// Real radial profile supported in [0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialProfile {
    /// `values[i]` on `[radii[i-1], radii[i])`, with `radii[-1] = 0`.
    Step { radii: Vec<f64>, values: Vec<f64> },
    /// `amplitude * exp(-r^2 / (2 width^2))` times a C-infinity bump vanishing at r = 1.
    Gaussian { amplitude: f64, width: f64 },
}

impl RadialProfile {
    pub fn well(depth: f64) -> Self {
        RadialProfile::Step { radii: vec![1.0], values: vec![-depth] }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialProfile::Step { radii, values } => radii
                .iter()
                .zip(values)
                .find(|(rad, _)| r < **rad)
                .map_or(0.0, |(_, v)| *v),
            RadialProfile::Gaussian { amplitude, width } => {
                if r >= 1.0 {
                    0.0
                } else {
                    let s = r * r;
                    amplitude * (-s / (2.0 * width * width)).exp() * (1.0 - 1.0 / (1.0 - s)).exp()
                }
            }
        }
    }

    /// Radii in (0, 1] where the profile is not smooth.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            RadialProfile::Step { radii, .. } => radii.clone(),
            RadialProfile::Gaussian { .. } => vec![1.0],
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            RadialProfile::Step { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::InvalidConfig(
                        "step profile needs matching non-empty radii and values".into(),
                    ));
                }
                let mut prev = 0.0;
                for &r in radii {
                    if !(r > prev && r <= 1.0) {
                        return Err(Error::InvalidConfig(format!(
                            "step radii must increase within (0, 1], got {r}"
                        )));
                    }
                    prev = r;
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidConfig("step values must be finite".into()));
                }
                Ok(())
            }
            RadialProfile::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() || !(*width > 0.0) {
                    return Err(Error::InvalidConfig("gaussian needs finite amplitude and width > 0".into()));
                }
                Ok(())
            }
        }
    }
}

/// p(r) * sum_w c_w e^{2 pi i w y}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparableTerm {
    pub profile: RadialProfile,
    pub coeffs: BTreeMap<i32, C64>,
}

impl SeparableTerm {
    pub fn new(profile: RadialProfile, coeffs: impl IntoIterator<Item = (i32, C64)>) -> Self {
        Self { profile, coeffs: coeffs.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub terms: Vec<SeparableTerm>,
}

impl PotentialSpec {
    pub fn zero() -> Self {
        Self::default()
    }

    /// -depth on r < 1, constant in y.
    pub fn well(depth: f64) -> Self {
        Self { terms: vec![SeparableTerm::new(RadialProfile::well(depth), [(0, C64::new(1.0, 0.0))])] }
    }

    /// (c0 + 2 c1 cos 2 pi y) on r < 1.
    pub fn coupled_well(c0: f64, c1: f64) -> Self {
        Self {
            terms: vec![SeparableTerm::new(
                RadialProfile::well(-1.0),
                [(-1, C64::new(c1, 0.0)), (0, C64::new(c0, 0.0)), (1, C64::new(c1, 0.0))],
            )],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for term in &self.terms {
            term.profile.validate()?;
            for (&w, &c) in &term.coeffs {
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(Error::InvalidConfig(format!("coefficient c_{w} is not finite")));
                }
                let partner = term.coeffs.get(&-w).copied().unwrap_or_default();
                if (partner - c.conj()).norm() > 1e-14 * (1.0 + c.norm()) {
                    return Err(Error::InvalidConfig(format!(
                        "potential must be real: c_{} must equal conj(c_{w})",
                        -w
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.coeffs.values().all(|c| *c == C64::new(0.0, 0.0)))
    }

    /// True when V does not depend on y.
    pub fn is_y_independent(&self) -> bool {
        self.terms.iter().all(|t| t.coeffs.iter().all(|(w, c)| *w == 0 || c.norm() == 0.0))
    }

    /// Torus frequencies present with nonzero coefficient.
    pub fn frequencies(&self) -> Vec<i32> {
        let mut ws: Vec<i32> = self
            .terms
            .iter()
            .flat_map(|t| t.coeffs.iter().filter(|(_, c)| c.norm() > 0.0).map(|(w, _)| *w))
            .collect();
        ws.sort_unstable();
        ws.dedup();
        ws
    }

    /// Fourier coefficient of V in y at frequency w, as a function of r.
    pub fn mode_coefficient(&self, w: i32, r: f64) -> C64 {
        self.terms
            .iter()
            .filter_map(|t| t.coeffs.get(&w).map(|c| c * t.profile.eval(r)))
            .sum()
    }

    /// Sorted profile breakpoints in (0, 1].
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.terms.iter().flat_map(|t| t.profile.breakpoints()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        b
    }
}

/// V(r, angles, y). Radial in x, so the angles are ignored.
pub fn evaluate_potential(spec: &PotentialSpec, r: f64, _angles: &[f64], y: f64) -> f64 {
    if r >= 1.0 {
        return 0.0;
    }
    let mut v = 0.0;
    for term in &spec.terms {
        let p = term.profile.eval(r);
        if p == 0.0 {
            continue;
        }
        for (&w, &c) in &term.coeffs {
            let phase = C64::from_polar(1.0, torus_frequency(w) * y);
            v += p * (c * phase).re;
        }
    }
    v
}

/// Radial node count, angular cutoff Q and torus cutoff J, with the
/// admissible truncation (l_max, j_max) derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Truncation {
    pub n_r: usize,
    pub q: u32,
    pub j: u32,
    pub l_max: u32,
    pub j_max: u32,
}

impl Truncation {
    pub fn new(n_r: usize, q: u32, j: u32) -> Self {
        Self { n_r, q, j, l_max: q.saturating_sub(2), j_max: j }
    }

    pub fn with_limits(mut self, l_max: u32, j_max: u32) -> Self {
        self.l_max = l_max;
        self.j_max = j_max;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_r < 8 || self.q < 1 || self.j < 1 {
            return Err(Error::InvalidConfig(format!(
                "truncation counts too small: n_r = {} (>= 8), q = {} (>= 1), j = {} (>= 1)",
                self.n_r, self.q, self.j
            )));
        }
        if self.q < self.l_max + 2 || self.j < self.j_max {
            return Err(Error::InvalidConfig(format!(
                "truncation must resolve the admissible basis: q >= l_max + 2 and j >= j_max (q = {}, l_max = {}, j = {}, j_max = {})",
                self.q, self.l_max, self.j, self.j_max
            )));
        }
        Ok(())
    }
}

impl Default for Truncation {
    fn default() -> Self {
        Self::new(40, 10, 4)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Kernel acceptance: weighted sigma_min below this times the weighted norm.
    pub kernel_rel: f64,
    /// Crossing band half-width is cross_rel * (1 + |E|).
    pub cross_rel: f64,
    /// Dirichlet clearance is margin_rel * (1 + |E|).
    pub margin_rel: f64,
    /// Pivot threshold relative to the operator norm.
    pub pivot_rel: f64,
    /// Final bracket width of the energy refinement.
    pub refine_width: f64,
    pub radius_window: f64,
    pub radius_step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel_rel: 1e-6,
            cross_rel: 1e-4,
            margin_rel: 1e-3,
            pivot_rel: 1e-10,
            refine_width: 1e-10,
            radius_window: 0.5,
            radius_step: 0.01,
        }
    }
}

impl Tolerances {
    pub fn margin(&self, energy: f64) -> f64 {
        self.margin_rel * (1.0 + energy.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveguideConfig {
    pub n: usize,
    pub radius: f64,
    pub potential: PotentialSpec,
    pub trunc: Truncation,
    pub tol: Tolerances,
}

impl WaveguideConfig {
    pub fn new(n: usize, radius: f64, potential: PotentialSpec) -> Self {
        Self { n, radius, potential, trunc: Truncation::default(), tol: Tolerances::default() }
    }

    pub fn with_truncation(mut self, trunc: Truncation) -> Self {
        self.trunc = trunc;
        self
    }

    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 2 && self.n != 3 {
            return Err(Error::InvalidConfig(format!("n = {} must be 2 or 3", self.n)));
        }
        if !(self.radius > 1.0) || !self.radius.is_finite() {
            return Err(Error::InvalidConfig(format!("radius = {} must satisfy R > 1", self.radius)));
        }
        self.trunc.validate()?;
        self.potential.validate()
    }

    pub fn admissible(&self, k: C64, energy: f64, exact_zero: bool) -> Result<AdmissibleBasis> {
        admissible_basis(self.n, k, energy, &self.trunc, &self.tol, exact_zero)
    }
}
