//! Free exterior problem on (R^n \ B_R) x T, solved mode by mode in closed form.

use serde::{Deserialize, Serialize};

use crate::boundary::{basis_value, BoundaryData};
use crate::error::{Error, Result};
use crate::harmonics::Angles;
use crate::model::{decay_rate, AdmissibleBasis, ModeIndex, ModeKind};
use crate::specfun::{bessel_k, log_derivatives};
use crate::C64;

/// Exterior DtN, diagonal in the mode basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExteriorDtn {
    pub basis: Vec<ModeIndex>,
    pub diagonal: Vec<C64>,
}

/// Radial profile of an exterior mode, normalized to 1 at r = R.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExteriorProfile {
    /// (r/R)^{1-n/2} K_nu(z r) / K_nu(z R)
    Decaying { nu: f64, z: C64 },
    /// (r/R)^{2-n-l}
    PowerLaw { exponent: f64 },
}

impl ExteriorProfile {
    pub fn new(basis: &AdmissibleBasis, mode: &ModeIndex) -> Result<Self> {
        let n = basis.n;
        match basis.kind(mode.j) {
            ModeKind::Positive => Err(Error::PositiveMode { j: mode.j }),
            ModeKind::Zero => Ok(Self::PowerLaw { exponent: 2.0 - n as f64 - mode.l as f64 }),
            ModeKind::Negative => {
                let z = decay_rate(basis.k, basis.energy, mode.j);
                if !(z.re > 0.0) {
                    return Err(Error::BranchViolation { re: z.re, im: z.im });
                }
                Ok(Self::Decaying { nu: mode.bessel_order(n), z })
            }
        }
    }

    /// Value at r >= R.
    pub fn eval(&self, n: usize, radius: f64, r: f64) -> Result<C64> {
        match *self {
            Self::PowerLaw { exponent } => Ok(C64::new((r / radius).powf(exponent), 0.0)),
            Self::Decaying { nu, z } => {
                let ratio = bessel_k(nu, z * r)?.ratio(&bessel_k(nu, z * radius)?);
                Ok(ratio * (r / radius).powf(1.0 - n as f64 / 2.0))
            }
        }
    }

    /// Radial derivative at r = R.
    pub fn boundary_derivative(&self, n: usize, radius: f64) -> Result<C64> {
        match *self {
            Self::PowerLaw { exponent } => Ok(C64::new(exponent / radius, 0.0)),
            Self::Decaying { nu, z } => {
                let (dk, _) = log_derivatives(nu, z * radius)?;
                Ok(C64::new((1.0 - n as f64 / 2.0) / radius, 0.0) + z * dk)
            }
        }
    }
}

/// Diagonal of the exterior DtN over the admissible basis.
pub fn exterior_dtn_diag(basis: &AdmissibleBasis, radius: f64) -> Result<ExteriorDtn> {
    let diagonal = basis
        .modes
        .iter()
        .map(|m| ExteriorProfile::new(basis, m)?.boundary_derivative(basis.n, radius))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExteriorDtn { basis: basis.modes.clone(), diagonal })
}

/// Exterior sample point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExteriorPoint {
    pub r: f64,
    pub angles: Angles,
    pub y: f64,
}

/// Exterior solution with boundary data f, sampled at r > R.
pub fn exterior_field(f: &BoundaryData, basis: &AdmissibleBasis, radius: f64, points: &[ExteriorPoint]) -> Result<Vec<C64>> {
    for m in &f.basis {
        if basis.position(m).is_none() {
            return Err(Error::BasisMismatch(format!("mode {m:?} is not admissible at this (k, E)")));
        }
    }
    let profiles: Vec<ExteriorProfile> = f.basis.iter().map(|m| ExteriorProfile::new(basis, m)).collect::<Result<_>>()?;
    points
        .iter()
        .map(|p| {
            if !(p.r > radius) {
                return Err(Error::NotExterior { r: p.r, radius });
            }
            let mut s = C64::new(0.0, 0.0);
            for ((m, c), prof) in f.basis.iter().zip(&f.coefficients).zip(&profiles) {
                if c.norm() == 0.0 {
                    continue;
                }
                s += c * prof.eval(basis.n, radius, p.r)? * basis_value(basis.n, radius, m, p.angles, p.y);
            }
            Ok(s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Tolerances, Truncation};
    use crate::model::admissible_basis;

    fn basis(n: usize, k: f64, e: f64, exact_zero: bool) -> AdmissibleBasis {
        admissible_basis(n, C64::new(k, 0.0), e, &Truncation::new(16, 10, 2), &Tolerances::default(), exact_zero).unwrap()
    }

    #[test]
    fn half_integer_entry() {
        // k = 0, E = -4: z_0 = 2
        let b = basis(3, 0.0, -4.0, false);
        let d = exterior_dtn_diag(&b, 1.0).unwrap();
        let i = b.position(&ModeIndex::new(0, 0, 0)).unwrap();
        assert!((d.diagonal[i] - C64::new(-3.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn zero_class_power_law_entry() {
        // E = 0, k = 0: mode j = 0 sits on its hypersurface
        let b = basis(2, 0.0, 0.0, true);
        assert_eq!(b.kind(0), ModeKind::Zero);
        let d = exterior_dtn_diag(&b, 2.0).unwrap();
        let i = b.position(&ModeIndex::new(0, 3, 3)).unwrap();
        assert!((d.diagonal[i] - C64::new(-1.5, 0.0)).norm() < 1e-15);
        // l < l0 excluded for n = 2
        assert!(b.position(&ModeIndex::new(0, 1, 1)).is_none());
    }

    #[test]
    fn small_z_continuity() {
        let radius = 1.5;
        for zeta in [1e-3, 1e-5] {
            let prof = ExteriorProfile::Decaying { nu: 2.0, z: C64::new(zeta, 0.0) };
            let e = prof.boundary_derivative(2, radius).unwrap();
            assert!((e.re - (-2.0 / radius)).abs() < 10.0 * zeta, "{zeta}: {e}");
        }
    }

    #[test]
    fn large_l_symbol() {
        let radius = 1.3;
        let z = C64::new(1.7, 0.0);
        let mut prev = f64::INFINITY;
        for l in [5u32, 20, 80, 320] {
            let nu = 3.0 / 2.0 + l as f64 - 1.0;
            let e = ExteriorProfile::Decaying { nu, z }.boundary_derivative(3, radius).unwrap();
            let gap = (e.re + (l as f64 + 1.0) / radius).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn real_entries_for_real_parameters() {
        let b = basis(3, 0.4, -2.5, false);
        for v in exterior_dtn_diag(&b, 1.2).unwrap().diagonal {
            assert!(v.im.abs() < 1e-14 * v.re.abs().max(1.0));
        }
    }

    #[test]
    fn positive_mode_rejected() {
        let mut b = basis(2, 0.0, -1.0, false);
        b.classes.get_mut(&0).unwrap().kind = ModeKind::Positive;
        assert!(matches!(exterior_dtn_diag(&b, 1.5), Err(Error::PositiveMode { j: 0 })));
    }

    #[test]
    fn field_boundary_value_and_derivative() {
        let radius = 1.4;
        let b = basis(2, 0.7, -3.0, false);
        let coefs: Vec<C64> = (0..b.len()).map(|i| C64::new(((i * 7) % 5) as f64 - 2.0, (i % 3) as f64)).collect();
        let f = BoundaryData::new(b.modes.clone(), coefs).unwrap();
        let d = exterior_dtn_diag(&b, radius).unwrap();
        let ang = Angles::Circle { theta: 0.9 };
        let y = 0.37;
        let h = 1e-3;
        let pts: Vec<ExteriorPoint> =
            (0..7).map(|i| ExteriorPoint { r: radius + 1e-12 + i as f64 * h, angles: ang, y }).collect();
        let vals = exterior_field(&f, &b, radius, &pts).unwrap();
        let boundary: C64 = f.basis.iter().zip(&f.coefficients).map(|(m, c)| c * basis_value(2, radius, m, ang, y)).sum();
        assert!((vals[0] - boundary).norm() < 1e-9);
        // sixth-order forward difference
        let w = [-49.0 / 20.0, 6.0, -15.0 / 2.0, 20.0 / 3.0, -15.0 / 4.0, 6.0 / 5.0, -1.0 / 6.0];
        let fd: C64 = w.iter().zip(&vals).map(|(w, v)| v * *w).sum::<C64>() / h;
        let exact: C64 = f
            .basis
            .iter()
            .zip(&f.coefficients)
            .zip(&d.diagonal)
            .map(|((m, c), e)| c * e * basis_value(2, radius, m, ang, y))
            .sum();
        assert!((fd - exact).norm() < 1e-8 * exact.norm().max(1.0), "{fd} vs {exact}");
    }

    #[test]
    fn decay_and_power_law_ratios() {
        let radius = 1.2;
        let z = C64::new(1.3, 0.0);
        let prof = ExteriorProfile::Decaying { nu: 0.5, z };
        // n = 3, nu = 1/2: K_{1/2}(x) ~ exp(-x)/sqrt(x), so the profile ratio is exp(-z dr) r1/r2
        let (r1, r2) = (30.0, 31.0);
        let ratio = prof.eval(3, radius, r2).unwrap() / prof.eval(3, radius, r1).unwrap();
        let exact = (-1.3f64).exp() * (r1 / r2);
        assert!((ratio.re - exact).abs() < 1e-12 * exact);
        let b = basis(2, 0.0, 0.0, true);
        let f = BoundaryData::unit(vec![ModeIndex::new(0, 2, 2)], 0, C64::new(1.0, 0.0));
        let at = |r: f64| exterior_field(&f, &b, radius, &[ExteriorPoint { r, angles: Angles::Circle { theta: 0.2 }, y: 0.0 }]).unwrap()[0];
        let q = at(2.0 * radius).norm() / at(radius * (1.0 + 1e-13)).norm();
        assert!((q - 0.25).abs() < 1e-10);
    }

    #[test]
    fn rejects_interior_points() {
        let b = basis(2, 0.0, -1.0, false);
        let f = BoundaryData::zeros(b.modes.clone());
        let p = ExteriorPoint { r: 1.0, angles: Angles::Circle { theta: 0.0 }, y: 0.0 };
        assert!(matches!(exterior_field(&f, &b, 1.5, &[p]), Err(Error::NotExterior { .. })));
    }
}
