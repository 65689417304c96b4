//! Boundary data on dB_R x T as coefficients over Y(x/R) xi_j(y) / R^{(n-1)/2}.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonics::{angular_value, Angles};
use crate::model::{torus_frequency, ModeIndex};
use crate::quadrature::gauss_legendre;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "BoundaryJson", try_from = "BoundaryJson")]
pub struct BoundaryData {
    pub basis: Vec<ModeIndex>,
    pub coefficients: Vec<C64>,
}

/// JSON layout: one `[j, l, m, re, im]` row per basis element.
#[derive(Serialize, Deserialize)]
struct BoundaryJson {
    coefficients: Vec<(i32, u32, i32, f64, f64)>,
}

impl From<BoundaryData> for BoundaryJson {
    fn from(f: BoundaryData) -> Self {
        BoundaryJson {
            coefficients: f.basis.iter().zip(&f.coefficients).map(|(b, c)| (b.j, b.l, b.m, c.re, c.im)).collect(),
        }
    }
}

impl TryFrom<BoundaryJson> for BoundaryData {
    type Error = Error;
    fn try_from(j: BoundaryJson) -> Result<Self> {
        let basis: Vec<ModeIndex> = j.coefficients.iter().map(|r| ModeIndex::new(r.0, r.1, r.2)).collect();
        if !basis.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::BasisMismatch("boundary basis must be strictly ordered".into()));
        }
        let coefficients = j.coefficients.iter().map(|r| C64::new(r.3, r.4)).collect();
        Ok(BoundaryData { basis, coefficients })
    }
}

impl BoundaryData {
    pub fn new(basis: Vec<ModeIndex>, coefficients: Vec<C64>) -> Result<Self> {
        if basis.len() != coefficients.len() {
            return Err(Error::BasisMismatch(format!(
                "{} basis elements but {} coefficients",
                basis.len(),
                coefficients.len()
            )));
        }
        Ok(Self { basis, coefficients })
    }

    pub fn zeros(basis: Vec<ModeIndex>) -> Self {
        let n = basis.len();
        Self { basis, coefficients: vec![C64::new(0.0, 0.0); n] }
    }

    pub fn unit(basis: Vec<ModeIndex>, index: usize, value: C64) -> Self {
        let mut f = Self::zeros(basis);
        f.coefficients[index] = value;
        f
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn coefficient(&self, mode: &ModeIndex) -> Option<C64> {
        self.basis.binary_search(mode).ok().map(|i| self.coefficients[i])
    }

    pub fn l_max(&self) -> u32 {
        self.basis.iter().map(|b| b.l).max().unwrap_or(0)
    }

    /// Spread max j - min j of the torus indices.
    pub fn torus_span(&self) -> i32 {
        let lo = self.basis.iter().map(|b| b.j).min().unwrap_or(0);
        let hi = self.basis.iter().map(|b| b.j).max().unwrap_or(0);
        hi - lo
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { basis: self.basis.clone(), coefficients: self.coefficients.iter().map(|c| c * s).collect() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("boundary data serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::BasisMismatch(format!("boundary JSON: {e}")))
    }
}

/// sqrt(sum (1 + l^2 + j^2)^s |f_i|^2).
pub fn sobolev_norm(f: &BoundaryData, s: f64) -> f64 {
    f.basis.iter().zip(&f.coefficients).map(|(b, c)| b.weight().powf(s) * c.norm_sqr()).sum::<f64>().sqrt()
}

/// Restriction of `f` to `basis`.
pub fn project_admissible(f: &BoundaryData, basis: &[ModeIndex]) -> Result<BoundaryData> {
    let coefficients = basis
        .iter()
        .map(|b| {
            f.coefficient(b).ok_or_else(|| Error::BasisMismatch(format!("target index {b:?} missing from source basis")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundaryData { basis: basis.to_vec(), coefficients })
}

/// Tensor grid on dB_R x T: uniform in theta (n = 2) or Gauss in cos(theta)
/// times uniform phi (n = 3), uniform in y.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    pub n: usize,
    pub radius: f64,
    pub angles: Vec<Angles>,
    /// Surface-measure weight of each angular node on the unit sphere.
    pub angle_weights: Vec<f64>,
    pub n_y: usize,
    /// Largest angular index resolved exactly.
    pub l_resolved: u32,
}

impl BoundaryGrid {
    pub fn circle(radius: f64, n_theta: usize, n_y: usize) -> Self {
        let angles = (0..n_theta).map(|a| Angles::Circle { theta: 2.0 * PI * a as f64 / n_theta as f64 }).collect();
        Self {
            n: 2,
            radius,
            angles,
            angle_weights: vec![2.0 * PI / n_theta as f64; n_theta],
            n_y,
            l_resolved: (n_theta.saturating_sub(1) / 2) as u32,
        }
    }

    pub fn sphere(radius: f64, n_polar: usize, n_azimuth: usize, n_y: usize) -> Self {
        let (mu, wmu) = gauss_legendre(n_polar);
        let mut angles = Vec::new();
        let mut angle_weights = Vec::new();
        for (x, w) in mu.iter().zip(&wmu) {
            for a in 0..n_azimuth {
                angles.push(Angles::Sphere { theta: x.acos(), phi: 2.0 * PI * a as f64 / n_azimuth as f64 });
                angle_weights.push(w * 2.0 * PI / n_azimuth as f64);
            }
        }
        let l_resolved = (n_polar.saturating_sub(1) as u32).min((n_azimuth.saturating_sub(1) / 2) as u32);
        Self { n: 3, radius, angles, angle_weights, n_y, l_resolved }
    }

    /// Smallest grid resolving angular indices up to `l_max` and torus span `j_span`.
    pub fn resolving(n: usize, radius: f64, l_max: u32, j_span: i32) -> Self {
        let n_y = (j_span as usize) + 2;
        if n == 2 {
            Self::circle(radius, 2 * l_max as usize + 2, n_y)
        } else {
            Self::sphere(radius, l_max as usize + 1, 2 * l_max as usize + 2, n_y)
        }
    }

    pub fn len(&self) -> usize {
        self.angles.len() * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 / self.n_y as f64
    }

    /// Quadrature weight of point (angle a, any y) for the measure of dB_R x T.
    pub fn weight(&self, a: usize) -> f64 {
        self.angle_weights[a] * self.radius.powi(self.n as i32 - 1) / self.n_y as f64
    }

    fn check(&self, f: &BoundaryData) -> Result<()> {
        if f.l_max() > self.l_resolved {
            return Err(Error::Undersampled(format!(
                "angular grid resolves l <= {} but data reaches l = {}",
                self.l_resolved,
                f.l_max()
            )));
        }
        if f.torus_span() as usize >= self.n_y {
            return Err(Error::Undersampled(format!(
                "N_y = {} cannot separate a torus span of {}",
                self.n_y,
                f.torus_span()
            )));
        }
        Ok(())
    }
}

/// Value of the normalized boundary basis function at (angles, y).
pub fn basis_value(n: usize, radius: f64, mode: &ModeIndex, angles: Angles, y: f64) -> C64 {
    let norm = radius.powf(-(n as f64 - 1.0) / 2.0);
    angular_value(mode.l, mode.m, angles) * C64::from_polar(norm, torus_frequency(mode.j) * y)
}

/// Grid samples, index `a * n_y + iy`.
pub fn synthesize(f: &BoundaryData, grid: &BoundaryGrid) -> Result<Vec<C64>> {
    grid.check(f)?;
    let mut out = vec![C64::new(0.0, 0.0); grid.len()];
    for (a, &ang) in grid.angles.iter().enumerate() {
        for iy in 0..grid.n_y {
            let y = grid.y(iy);
            out[a * grid.n_y + iy] = f
                .basis
                .iter()
                .zip(&f.coefficients)
                .map(|(b, c)| c * basis_value(grid.n, grid.radius, b, ang, y))
                .sum();
        }
    }
    Ok(out)
}

/// Discrete-orthogonality projection of grid samples onto `basis`.
pub fn analyze(values: &[C64], grid: &BoundaryGrid, basis: &[ModeIndex]) -> Result<BoundaryData> {
    if values.len() != grid.len() {
        return Err(Error::BasisMismatch(format!("{} samples for a grid of {}", values.len(), grid.len())));
    }
    let probe = BoundaryData::zeros(basis.to_vec());
    grid.check(&probe)?;
    let coefficients = basis
        .iter()
        .map(|b| {
            let mut s = C64::new(0.0, 0.0);
            for (a, &ang) in grid.angles.iter().enumerate() {
                let w = grid.weight(a);
                for iy in 0..grid.n_y {
                    s += values[a * grid.n_y + iy] * basis_value(grid.n, grid.radius, b, ang, grid.y(iy)).conj() * w;
                }
            }
            s
        })
        .collect();
    Ok(BoundaryData { basis: basis.to_vec(), coefficients })
}

/// Grid quadrature of |values|^2 over dB_R x T.
pub fn grid_l2_squared(values: &[C64], grid: &BoundaryGrid) -> f64 {
    let mut s = 0.0;
    for a in 0..grid.angles.len() {
        let w = grid.weight(a);
        for iy in 0..grid.n_y {
            s += w * values[a * grid.n_y + iy].norm_sqr();
        }
    }
    s
}
