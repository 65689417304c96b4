//! Orthonormal angular bases: e^{i q theta} / sqrt(2 pi) on the circle and
//! real spherical harmonics on S^2.

use std::f64::consts::PI;

use crate::C64;

/// A point on the unit sphere S^{n-1}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angles {
    Circle { theta: f64 },
    /// Polar angle theta from the x3 axis, azimuth phi.
    Sphere { theta: f64, phi: f64 },
}

impl Angles {
    /// Cartesian unit vector.
    pub fn direction(&self) -> Vec<f64> {
        match *self {
            Angles::Circle { theta } => vec![theta.cos(), theta.sin()],
            Angles::Sphere { theta, phi } => {
                vec![theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
            }
        }
    }
}

/// Normalized associated Legendre values Pbar_l^m(cos theta) for l in m..=l_max,
/// with sum over the sphere of |Pbar_l^m e^{i m phi}|^2 = 1 (no Condon-Shortley phase).
fn normalized_legendre(m: u32, l_max: u32, theta: f64) -> Vec<f64> {
    let x = theta.cos();
    let s = theta.sin().abs();
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for k in 1..=m {
        let kf = k as f64;
        pmm *= ((2.0 * kf + 1.0) / (2.0 * kf)).sqrt() * s;
    }
    let mut out = vec![pmm];
    if l_max == m {
        return out;
    }
    let mut prev = pmm;
    let mut cur = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
    out.push(cur);
    let mf = m as f64;
    for l in (m + 2)..=l_max {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
        let next = a * (x * cur - b * prev);
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Real orthonormal spherical harmonic Y_{l,m}(theta, phi).
pub fn real_spherical_harmonic(l: u32, m: i32, theta: f64, phi: f64) -> f64 {
    let am = m.unsigned_abs();
    if am > l {
        return 0.0;
    }
    let p = normalized_legendre(am, l, theta)[(l - am) as usize];
    match m.cmp(&0) {
        std::cmp::Ordering::Equal => p,
        std::cmp::Ordering::Greater => std::f64::consts::SQRT_2 * p * (am as f64 * phi).cos(),
        std::cmp::Ordering::Less => std::f64::consts::SQRT_2 * p * (am as f64 * phi).sin(),
    }
}

/// Angular basis function for label (l, m) at `angles`.
pub fn angular_value(l: u32, m: i32, angles: Angles) -> C64 {
    match angles {
        Angles::Circle { theta } => C64::from_polar(1.0 / (2.0 * PI).sqrt(), m as f64 * theta),
        Angles::Sphere { theta, phi } => C64::new(real_spherical_harmonic(l, m, theta, phi), 0.0),
    }
}
