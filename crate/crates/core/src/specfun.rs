//! Modified Bessel functions I_nu, K_nu of real order and complex argument
//! in the right half-plane, kept in scaled form.
//!
//! K is obtained at the reduced order mu = nu - round(nu) from Temme's series
//! (|z| <= 2) or Steed's continued fraction (|z| > 2), carried up to nu by
//! forward recurrence. I'/I comes from its continued fraction and I itself
//! from the Wronskian K I' - K' I = 1/z.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::C64;

const EPS: f64 = 1e-17;
const TINY: f64 = 1e-150;
const MAX_ITER: usize = 200_000;
const RESCALE: f64 = 1e150;

/// `value * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledBessel {
    pub value: C64,
    pub log_scale: f64,
}

impl ScaledBessel {
    fn normalized(value: C64, log_scale: f64) -> Self {
        let m = value.norm();
        if m > 0.0 && m.is_finite() {
            Self { value: value / m, log_scale: log_scale + m.ln() }
        } else {
            Self { value, log_scale }
        }
    }

    /// Unscaled value; overflows for extreme arguments.
    pub fn to_complex(&self) -> C64 {
        self.value * self.log_scale.exp()
    }

    /// Principal complex logarithm.
    pub fn ln(&self) -> C64 {
        self.value.ln() + self.log_scale
    }

    /// self / other without forming either value.
    pub fn ratio(&self, other: &ScaledBessel) -> C64 {
        self.value / other.value * (self.log_scale - other.log_scale).exp()
    }

    /// self * other without forming either value.
    pub fn product(&self, other: &ScaledBessel) -> C64 {
        self.value * other.value * (self.log_scale + other.log_scale).exp()
    }
}

/// Coefficients of 1/Gamma(x) = sum_k c_k x^k, k = 1..26.
const RGAMMA_TAYLOR: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_86,
    -0.655_878_071_520_253_88,
    -0.042_002_635_034_095_236,
    0.166_538_611_382_291_49,
    -0.042_197_734_555_544_337,
    -0.009_621_971_527_876_973_6,
    0.007_218_943_246_663_099_5,
    -0.001_165_167_591_859_065_1,
    -0.000_215_241_674_114_950_97,
    0.000_128_050_282_388_116_19,
    -2.013_485_478_078_823_9e-5,
    -1.250_493_482_142_670_7e-6,
    1.133_027_231_981_695_9e-6,
    -2.056_338_416_977_607_1e-7,
    6.116_095_104_481_415_8e-9,
    5.002_007_644_469_222_9e-9,
    -1.181_274_570_487_020_1e-9,
    1.043_426_711_691_100_5e-10,
    7.782_263_439_905_071_3e-12,
    -3.696_805_618_642_205_7e-12,
    5.100_370_287_454_476e-13,
    -2.058_326_053_566_506_8e-14,
    -5.348_122_539_423_018e-15,
    1.226_778_628_238_260_8e-15,
    -1.181_259_301_697_458_8e-16,
];

/// Temme's gamma combinations for |mu| <= 1/2:
/// (gam1, gam2, 1/Gamma(1+mu), 1/Gamma(1-mu)) with
/// gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu),
/// gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    // 1/Gamma(1+x) = sum_k c_k x^(k-1); split into even and odd powers.
    let x2 = mu * mu;
    let mut even = 0.0;
    let mut odd = 0.0;
    for (i, &c) in RGAMMA_TAYLOR.iter().enumerate().rev() {
        if i % 2 == 0 {
            even = even * x2 + c;
        } else {
            odd = odd * x2 + c;
        }
    }
    let gam1 = -odd;
    let gam2 = even;
    (gam1, gam2, gam2 + mu * odd, gam2 - mu * odd)
}

/// e^z K_mu(z), e^z K_{mu+1}(z) for |mu| <= 1/2 and |z| <= 2.
fn temme_series(mu: f64, z: C64) -> (C64, C64) {
    let x2 = z * 0.5;
    let pimu = PI * mu;
    let fact = if pimu.abs() < 1e-300 { 1.0 } else { pimu / pimu.sin() };
    let d = -x2.ln();
    let e = d * mu;
    let fact2 = if e.norm() < 1e-300 { C64::new(1.0, 0.0) } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = (e.cosh() * gam1 + fact2 * d * gam2) * fact;
    let mut sum = ff;
    let ee = e.exp();
    let mut p = ee * (0.5 / gampl);
    let mut q = (ee * gammi).inv() * 0.5;
    let mut c = C64::new(1.0, 0.0);
    let dd = x2 * x2;
    let mut sum1 = p;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        ff = (ff * fi + p + q) / (fi * fi - mu * mu);
        c = c * dd / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * (p - ff * fi);
        sum1 += del1;
        if del.norm() < sum.norm() * EPS {
            break;
        }
    }
    let ez = z.exp();
    (sum * ez, sum1 * (z * 0.5).inv() * ez)
}

/// e^z K_mu(z), e^z K_{mu+1}(z) for |mu| <= 1/2 and |z| > 2 (Steed).
fn steed_cf2(mu: f64, z: C64) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    let mut b = (z + 1.0) * 2.0;
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = C64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25 - mu * mu;
    let mut q = C64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 2..MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += qnew * c;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).norm() < EPS {
            break;
        }
    }
    let h = h * a1;
    let kmu = (C64::new(PI, 0.0) / (z * 2.0)).sqrt() / s;
    let k1 = kmu * (z + mu + 0.5 - h) / z;
    (kmu, k1)
}

/// I'_nu(z) / I_nu(z) by the modified Lentz method.
fn i_log_derivative(nu: f64, z: C64) -> C64 {
    let xi = z.inv();
    let xi2 = xi * 2.0;
    let mut h = xi * nu;
    if h.norm() < TINY {
        h = C64::new(TINY, 0.0);
    }
    let mut b = xi2 * nu;
    let mut d = C64::new(0.0, 0.0);
    let mut c = h;
    for _ in 0..MAX_ITER {
        b += xi2;
        d = b + d;
        if d.norm() < TINY {
            d = C64::new(TINY, 0.0);
        }
        d = d.inv();
        c = b + c.inv();
        if c.norm() < TINY {
            c = C64::new(TINY, 0.0);
        }
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < EPS {
            break;
        }
    }
    h
}

/// Scaled pieces at order nu: K_nu = k0 e^{L - z}, K_{nu+1} = k1 e^{L - z},
/// and I'_nu / I_nu.
#[derive(Debug, Clone, Copy)]
struct Core {
    nu: f64,
    z: C64,
    k0: C64,
    k1: C64,
    log_k: f64,
    fi: C64,
}

impl Core {
    fn new(nu: f64, z: C64) -> Result<Self> {
        check_args(nu, z)?;
        let nl = (nu + 0.5).floor();
        let mu = nu - nl;
        let (mut k0, mut k1) = if z.norm() <= 2.0 { temme_series(mu, z) } else { steed_cf2(mu, z) };
        let mut log_k = 0.0;
        let xi2 = z.inv() * 2.0;
        for i in 1..=(nl as usize) {
            let next = xi2 * (mu + i as f64) * k1 + k0;
            k0 = k1;
            k1 = next;
            let m = k1.norm();
            if m > RESCALE {
                k0 /= m;
                k1 /= m;
                log_k += m.ln();
            }
        }
        let fi = i_log_derivative(nu, z);
        Ok(Self { nu, z, k0, k1, log_k, fi })
    }

    /// K'_nu / K_nu.
    fn k_log_derivative(&self) -> C64 {
        self.nu / self.z - self.k1 / self.k0
    }

    fn k(&self) -> ScaledBessel {
        let phase = C64::from_polar(1.0, -self.z.im);
        ScaledBessel::normalized(self.k0 * phase, self.log_k - self.z.re)
    }

    fn i(&self) -> ScaledBessel {
        let kp = self.k0 * (self.nu / self.z) - self.k1;
        let denom = self.z * (self.fi * self.k0 - kp);
        let phase = C64::from_polar(1.0, self.z.im);
        ScaledBessel::normalized(phase / denom, self.z.re - self.log_k)
    }

    /// I_nu K_nu = 1 / (z (I'/I - K'/K)); the scales cancel identically.
    fn product(&self) -> C64 {
        (self.z * (self.fi - self.k_log_derivative())).inv()
    }
}

fn check_args(nu: f64, z: C64) -> Result<()> {
    if !(z.re > 0.0) || !z.im.is_finite() || !z.re.is_finite() {
        return Err(Error::BranchViolation { re: z.re, im: z.im });
    }
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidConfig(format!("Bessel order {nu} must be finite and >= 0")));
    }
    Ok(())
}

pub fn bessel_i(nu: f64, z: C64) -> Result<ScaledBessel> {
    Ok(Core::new(nu, z)?.i())
}

pub fn bessel_k(nu: f64, z: C64) -> Result<ScaledBessel> {
    Ok(Core::new(nu, z)?.k())
}

/// (K'_nu(z)/K_nu(z), I'_nu(z)/I_nu(z)).
pub fn log_derivatives(nu: f64, z: C64) -> Result<(C64, C64)> {
    let c = Core::new(nu, z)?;
    Ok((c.k_log_derivative(), c.fi))
}

/// P_nu(z) = I_nu(z) K_nu(z).
pub fn p_product(nu: f64, z: C64) -> Result<C64> {
    Ok(Core::new(nu, z)?.product())
}

/// Everything needed at one (nu, z) from a single evaluation.
#[derive(Debug, Clone, Copy)]
pub struct BesselPair {
    pub i: ScaledBessel,
    pub k: ScaledBessel,
    pub di: ScaledBessel,
    pub dk: ScaledBessel,
    pub i_log_derivative: C64,
    pub k_log_derivative: C64,
    pub product: C64,
}

pub fn bessel_pair(nu: f64, z: C64) -> Result<BesselPair> {
    let c = Core::new(nu, z)?;
    let i = c.i();
    let k = c.k();
    let kl = c.k_log_derivative();
    Ok(BesselPair {
        i,
        k,
        di: ScaledBessel::normalized(i.value * c.fi, i.log_scale),
        dk: ScaledBessel::normalized(k.value * kl, k.log_scale),
        i_log_derivative: c.fi,
        k_log_derivative: kl,
        product: c.product(),
    })
}

/// Relative Wronskian residual |w (K I' - K' I) - 1| at (nu, w).
pub fn wronskian_residual(nu: f64, w: C64) -> Result<f64> {
    let p = bessel_pair(nu, w)?;
    let lhs = p.k.product(&p.di) - p.dk.product(&p.i);
    Ok((lhs * w - 1.0).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    /// I_nu(z) = sum_k (z/2)^{2k+nu} / (k! Gamma(nu+k+1)), summed in logs.
    fn i_series(nu: f64, z: C64) -> C64 {
        let x2 = z * 0.5;
        let mut term = (x2.ln() * nu).exp() / gamma(nu + 1.0);
        let mut sum = term;
        let q = x2 * x2;
        for k in 1..400 {
            term = term * q / (k as f64 * (nu + k as f64));
            sum += term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        sum
    }

    /// Lanczos gamma (g = 7, n = 9) for positive real arguments.
    fn gamma(x: f64) -> f64 {
        const G: [f64; 9] = [
            0.999_999_999_999_809_9,
            676.520_368_121_885_1,
            -1_259.139_216_722_402_8,
            771.323_428_777_653_1,
            -176.615_029_162_140_6,
            12.507_343_278_686_905,
            -0.138_571_095_265_720_12,
            9.984_369_578_019_572e-6,
            1.505_632_735_149_311_6e-7,
        ];
        if x < 0.5 {
            return PI / ((PI * x).sin() * gamma(1.0 - x));
        }
        let x = x - 1.0;
        let mut a = G[0];
        let t = x + 7.5;
        for (i, g) in G.iter().enumerate().skip(1) {
            a += g / (x + i as f64);
        }
        (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }

    /// K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt by the trapezoid rule,
    /// exponentially accurate for this even, entire integrand.
    fn k_quadrature(nu: f64, z: C64) -> C64 {
        let h: f64 = 0.01;
        let mut sum = c(0.5, 0.0) * (-z).exp();
        let mut t = h;
        loop {
            let term = (-z * t.cosh()).exp() * (nu * t).cosh();
            sum += term;
            if term.norm() < 1e-30 && t > 1.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    #[test]
    fn gamma_taylor_coefficients() {
        let (_, _, gp, gm) = temme_gammas(0.5);
        assert!((gp - 2.0 / PI.sqrt()).abs() < 2e-16);
        assert!((gm - 1.0 / PI.sqrt()).abs() < 2e-16);
        let (g1, g2, _, _) = temme_gammas(0.0);
        assert!((g1 + 0.577_215_664_901_532_9).abs() < 1e-16);
        assert!((g2 - 1.0).abs() < 1e-16);
        assert!((1.0 / gamma(1.3) - temme_gammas(0.3).2).abs() < 1e-14);
    }

    #[test]
    fn half_integer_closed_forms() {
        let i = bessel_i(0.5, c(1.0, 0.0)).unwrap().to_complex();
        assert!((i.re - 0.937_674_888_2).abs() < 1e-10);
        let k = bessel_k(0.5, c(1.0, 0.0)).unwrap().to_complex();
        assert!((k.re - 0.461_068_504_4).abs() < 1e-10);
        let k = bessel_k(1.5, c(1.0, 0.0)).unwrap().to_complex();
        assert!((k.re - 0.922_137_008_8).abs() < 1e-10);
        for z in [c(2.0, 1.0), c(0.3, 0.1), c(5.0, -7.0), c(0.05, 40.0), c(25.0, 3.0)] {
            let ik = (c(2.0, 0.0) / (z * PI)).sqrt() * z.sinh();
            assert!(rel(bessel_i(0.5, z).unwrap().to_complex(), ik) < 1e-13, "I at {z}");
            let kk = (c(PI, 0.0) / (z * 2.0)).sqrt() * (-z).exp();
            assert!(rel(bessel_k(0.5, z).unwrap().to_complex(), kk) < 1e-13, "K at {z}");
            let k32 = kk * (z.inv() + 1.0);
            assert!(rel(bessel_k(1.5, z).unwrap().to_complex(), k32) < 1e-13, "K3/2 at {z}");
        }
    }

    #[test]
    fn log_derivative_closed_forms() {
        let (kd, id) = log_derivatives(0.5, c(1.0, 0.0)).unwrap();
        assert!((kd - c(-1.5, 0.0)).norm() < 1e-14);
        assert!((id - c(1.0f64.cosh() / 1.0f64.sinh() - 0.5, 0.0)).norm() < 1e-14);
        assert!((id.re - 0.813_035_285_5).abs() < 1e-10);
    }

    #[test]
    fn products_closed_forms() {
        let p = p_product(0.5, c(1.0, 0.0)).unwrap();
        assert!((p.re - 0.432_332_358_4).abs() < 1e-10);
        let p = p_product(0.5, c(2.0, 0.0)).unwrap();
        assert!((p.re - (1.0 - (-4.0f64).exp()) / 4.0).abs() < 1e-15);
        assert!((p.re - 0.245_421_090_3).abs() < 1e-10);
        let w = c(3.0, -2.0);
        let expect = (c(1.0, 0.0) - (w * -2.0).exp()) / (w * 2.0);
        let r = rel(p_product(0.5, w).unwrap(), expect);
        assert!(r < 1e-13, "{r:e} {} {expect}", p_product(0.5, w).unwrap());
    }

    #[test]
    fn series_oracle_for_i() {
        for &(nu, z) in &[
            (3.3, c(2.0, 0.7)),
            (0.0, c(1.5, -0.4)),
            (1.0, c(0.2, 0.1)),
            (7.25, c(6.0, 3.0)),
            (20.0, c(10.0, -5.0)),
            (2.5, c(0.01, 0.0)),
        ] {
            let r = rel(bessel_i(nu, z).unwrap().to_complex(), i_series(nu, z));
            assert!(r < 1e-12, "nu {nu} z {z}: {r:e}");
        }
    }

    #[test]
    fn quadrature_oracle_for_k() {
        for &(nu, z) in &[
            (3.3, c(2.0, 0.7)),
            (0.0, c(1.5, -0.4)),
            (1.0, c(0.2, 0.1)),
            (0.75, c(4.0, 0.5)),
            (7.25, c(6.0, 3.0)),
            (12.0, c(25.0, -10.0)),
            (0.0, c(1.0, 3.0)),
        ] {
            let r = rel(bessel_k(nu, z).unwrap().to_complex(), k_quadrature(nu, z));
            assert!(r < 1e-12, "nu {nu} z {z}: {r:e}");
        }
    }

    #[test]
    fn finite_difference_log_derivatives() {
        let z = c(3.0, 1.0);
        let (kd, id) = log_derivatives(2.0, z).unwrap();
        let h = 1e-5;
        let fd = |f: &dyn Fn(C64) -> ScaledBessel| {
            let zp = f(z + h);
            let zm = f(z - h);
            let z0 = f(z);
            (zp.ratio(&z0) - zm.ratio(&z0)) / (2.0 * h)
        };
        let kfd = fd(&|w| bessel_k(2.0, w).unwrap());
        let ifd = fd(&|w| bessel_i(2.0, w).unwrap());
        assert!((kd - kfd).norm() < 1e-8);
        assert!((id - ifd).norm() < 1e-8);
    }

    #[test]
    fn recurrences() {
        for &(nu, z) in &[(1.3, c(2.0, 0.7)), (5.0, c(0.5, 0.2)), (17.5, c(30.0, 10.0)), (40.0, c(3.0, -1.0))] {
            let km = bessel_k(nu - 1.0, z).unwrap();
            let k0 = bessel_k(nu, z).unwrap();
            let kp = bessel_k(nu + 1.0, z).unwrap();
            let res = (kp.ratio(&k0) - km.ratio(&k0) - 2.0 * nu / z).norm() / kp.ratio(&k0).norm();
            assert!(res < 1e-10, "K recurrence {nu} {z}: {res:e}");
            let im = bessel_i(nu - 1.0, z).unwrap();
            let i0 = bessel_i(nu, z).unwrap();
            let ip = bessel_i(nu + 1.0, z).unwrap();
            let res = (im.ratio(&i0) - ip.ratio(&i0) - 2.0 * nu / z).norm() / im.ratio(&i0).norm();
            assert!(res < 1e-10, "I recurrence {nu} {z}: {res:e}");
        }
    }

    #[test]
    fn scaled_magnitudes_and_extremes() {
        for &(nu, z) in &[(200.0, c(1e-3, 0.0)), (0.0, c(1e4, 0.0)), (200.0, c(1e4, -3e3)), (50.0, c(700.0, 5.0))] {
            let i = bessel_i(nu, z).unwrap();
            let k = bessel_k(nu, z).unwrap();
            for s in [i, k] {
                assert!(s.value.norm() >= 1e-2 && s.value.norm() <= 1e2);
                assert!(s.log_scale.is_finite());
            }
            assert!(wronskian_residual(nu, z).unwrap() < 1e-12);
        }
    }

    #[test]
    fn large_argument_decay() {
        let mut prev = f64::INFINITY;
        for t in [10.0, 100.0, 1000.0, 10000.0] {
            let k = bessel_k(0.0, c(t, 0.0)).unwrap();
            let scaled = (k.value * (k.log_scale + t).exp()).re * t.sqrt();
            let gap = (scaled - (PI / 2.0).sqrt()).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn rejects_left_half_plane() {
        assert!(matches!(bessel_i(1.0, c(0.0, 1.0)), Err(Error::BranchViolation { .. })));
        assert!(matches!(bessel_k(1.0, c(-1.0, 0.0)), Err(Error::BranchViolation { .. })));
        assert!(p_product(1.0, c(-1.0, 0.0)).is_err());
        assert!(bessel_k(-1.0, c(1.0, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn wronskian_identity(nu in 0.0f64..50.0, r in 0.01f64..60.0, phi in -1.5f64..1.5) {
            let w = C64::from_polar(r, phi);
            prop_assert!(wronskian_residual(nu, w).unwrap() < 1e-12);
        }

        #[test]
        fn product_matches_pieces(nu in 0.0f64..20.0, r in 0.05f64..30.0, phi in -1.5f64..1.5) {
            let w = C64::from_polar(r, phi);
            let p = bessel_pair(nu, w).unwrap();
            let direct = p.i.product(&p.k);
            prop_assert!(rel(direct, p.product) < 1e-12);
        }
    }
}
