//! Bessel functions needed by the channel model.
//!
//! Gamma-family functions come from `statrs`; the Bessel routines below cover
//! what it lacks: `J0`, `J1` for the Airy encircled energy, the exponentially
//! scaled `I0` for the exact disc-collection integral, and `K_ν` of real order
//! for the gamma-gamma density.

use std::f64::consts::{FRAC_PI_4, PI};

pub use statrs::function::gamma::{digamma, gamma, ln_gamma};

const EPS: f64 = 1e-16;
const SERIES_CUTOFF: f64 = 12.0;

/// Hankel asymptotic expansion for `J_n(x)`, `n` in {0, 1}, `x` large.
fn bessel_j_asymptotic(n: u32, x: f64) -> f64 {
    let mu = 4.0 * f64::from(n * n);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut k = 1u32;
    let mut last = f64::INFINITY;
    loop {
        let odd = f64::from(2 * k - 1);
        term *= (mu - odd * odd) / (f64::from(k) * 8.0 * x);
        if term.abs() >= last || term.abs() < EPS {
            break;
        }
        last = term.abs();
        // a_k contributes to Q for odd k and to P for even k, with alternating sign.
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        k += 1;
        if k > 60 {
            break;
        }
    }
    let chi = x - (f64::from(n) / 2.0) * PI - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}

fn bessel_j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    let mut term = if n == 0 { 1.0 } else { half };
    let mut sum = term;
    for k in 1..200u32 {
        term *= q / (f64::from(k) * f64::from(k + n));
        sum += term;
        if term.abs() < EPS * sum.abs() {
            break;
        }
    }
    sum
}

/// Bessel function of the first kind, order zero.
pub fn bessel_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < SERIES_CUTOFF {
        bessel_j_series(0, ax)
    } else {
        bessel_j_asymptotic(0, ax)
    }
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    let ax = x.abs();
    let v = if ax < SERIES_CUTOFF {
        bessel_j_series(1, ax)
    } else {
        bessel_j_asymptotic(1, ax)
    };
    if x < 0.0 {
        -v
    } else {
        v
    }
}

/// `exp(-|x|) · I0(x)`.
pub fn bessel_i0_scaled(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 30.0 {
        let q = 0.25 * ax * ax;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..500u32 {
            term *= q / (f64::from(k) * f64::from(k));
            sum += term;
            if term < EPS * sum {
                break;
            }
        }
        sum * (-ax).exp()
    } else {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..40u32 {
            let odd = f64::from(2 * k - 1);
            let next = term * odd * odd / (f64::from(k) * 8.0 * ax);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum += term;
            if term < EPS * sum {
                break;
            }
        }
        sum / (2.0 * PI * ax).sqrt()
    }
}

// Taylor coefficients of 1/Γ(z) about 0: 1/Γ(z) = Σ_{k≥1} c_k z^k.
const RECIP_GAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Returns (gam1, gam2, 1/Γ(1+μ), 1/Γ(1−μ)) for |μ| ≤ 1/2, as used by Temme's series.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mu2 = mu * mu;
    // Even-index coefficients (c2, c4, ...) give the odd part of 1/Γ(1+z).
    let mut gam1 = 0.0;
    let mut gam2 = 0.0;
    let mut pow = 1.0;
    for pair in RECIP_GAMMA.chunks(2) {
        gam2 += pair[0] * pow;
        if let Some(c) = pair.get(1) {
            gam1 -= c * pow;
        }
        pow *= mu2;
    }
    let gampl = gam2 - mu * gam1;
    let gammi = gam2 + mu * gam1;
    (gam1, gam2, gampl, gammi)
}

/// Modified Bessel function of the second kind `K_ν(x)` for real order and `x > 0`.
///
/// Temme's series for `x < 2`, Steed's continued fraction otherwise, then
/// forward recurrence in the order. Near-integer orders go through the same
/// path; the fractional part is handled by the even/odd Gamma expansions, which
/// stay finite as it tends to zero.
pub fn bessel_k(nu: f64, x: f64) -> f64 {
    bessel_k_impl(nu, x, false)
}

/// `e^x K_ν(x)`, which stays representable where `K_ν` itself underflows.
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    bessel_k_impl(nu, x, true)
}

fn bessel_k_impl(nu: f64, x: f64, scaled: bool) -> f64 {
    if x.is_nan() || nu.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 {
        return f64::INFINITY;
    }
    let nu = nu.abs();
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let mu2 = mu * mu;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let (mut k_mu, mut k_mu1);
    if x < 2.0 {
        let x2 = 0.5 * x;
        let pimu = PI * mu;
        let fact = if pimu.abs() < EPS { 1.0 } else { pimu / pimu.sin() };
        let d = -x2.ln();
        let e = mu * d;
        let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = e.exp();
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..10_000u32 {
            let fi = f64::from(i);
            ff = (fi * ff + p + q) / (fi * fi - mu2);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if del.abs() < sum.abs() * EPS {
                break;
            }
        }
        let scale = if scaled { x.exp() } else { 1.0 };
        k_mu = sum * scale;
        k_mu1 = sum1 * xi2 * scale;
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut delh = d;
        let mut h = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu2;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 2..10_000u32 {
            let fi = f64::from(i);
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh *= b * d - 1.0;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).abs() < EPS {
                break;
            }
        }
        h *= a1;
        let decay = if scaled { 1.0 } else { (-x).exp() };
        k_mu = (PI / (2.0 * x)).sqrt() * decay / s;
        k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
    }
    let steps = nl as u64;
    for i in 1..=steps {
        let next = (mu + i as f64) * xi2 * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    k_mu
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    // Reference values from 30-digit arbitrary-precision evaluation.
    #[test]
    fn j0_j1_reference_values() {
        let table = [
            (0.5, 0.938_469_807_240_812_9, 0.242_268_457_674_873_9),
            (1.0, 0.765_197_686_557_966_6, 0.440_050_585_744_933_5),
            (5.0, -0.177_596_771_314_338_3, -0.327_579_137_591_465_2),
            (11.9, 0.025_049_441_699_589_645, -0.228_983_249_661_924_05),
            (12.1, 0.069_666_773_606_807_31, -0.215_748_973_376_924_8),
            (20.0, 0.167_024_664_340_583_15, 0.066_833_124_175_850_05),
            (100.0, 0.019_985_850_304_223_122, -0.077_145_352_014_112_16),
            (2026.7, -0.016_235_148_850_587_11, 0.007_104_888_207_958_349),
        ];
        for (x, j0, j1) in table {
            assert!((bessel_j0(x) - j0).abs() < 1e-11, "J0({x})");
            assert!((bessel_j1(x) - j1).abs() < 1e-11, "J1({x})");
        }
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert_eq!(bessel_j1(-1.0), -bessel_j1(1.0));
    }

    #[test]
    fn i0_scaled_reference_values() {
        let table = [
            (0.01, 0.990_074_585_149_707_5),
            (1.0, 0.465_759_607_593_640_4),
            (10.0, 0.127_833_337_163_428_6),
            (29.0, 0.074_407_468_222_225_59),
            (31.0, 0.071_946_496_696_983_83),
            (200.0, 0.028_227_159_949_111_916),
        ];
        for (x, v) in table {
            assert!(rel(bessel_i0_scaled(x), v) < 1e-12, "I0e({x})");
        }
    }

    #[test]
    fn k_nu_reference_values() {
        let table = [
            (0.0, 0.05, 3.114_234_029_471_99),
            (0.0, 1.999, 0.114_033_830_589_232_9),
            (0.0, 40.0, 8.392_861_100_099_567e-19),
            (0.3, 0.05, 3.811_966_336_769_111),
            (0.3, 2.001, 0.115_893_650_662_572_8),
            (0.5, 1.0, 0.461_068_504_447_894_56),
            (1.0, 0.05, 19.909_674_325_882_505),
            (1.0, 7.5, 2.652_973_901_252_895e-4),
            (2.7, 1.0, 4.374_241_826_191_164),
            (2.7, 7.5, 3.922_988_803_768_349e-4),
            (2.999_999_9, 1.999, 0.648_611_517_593_745_9),
            (3.000_000_1, 1.999, 0.648_611_658_776_017_2),
            (3.000_000_1, 0.05, 63_980.035_745_941_4),
            (7.25, 0.05, 2.380_053_607_383_285e14),
            (7.25, 2.001, 491.559_990_770_767),
            (0.478, 40.0, 8.416_572_871_625_11e-19),
        ];
        for (nu, x, v) in table {
            let got = bessel_k(nu, x);
            assert!(rel(got, v) < 1e-11, "K_{nu}({x}) = {got}, want {v}");
        }
    }

    #[test]
    fn k_scaled_survives_underflow() {
        assert_eq!(bessel_k(0.4, 800.0), 0.0);
        assert!(rel(bessel_k_scaled(0.4, 800.0), 0.044_308_855_385_271_23) < 1e-11);
        assert!(rel(bessel_k_scaled(2.5, 1.5), 4.434_415_734_434_783) < 1e-11);
    }

    #[test]
    fn k_nu_is_even_in_order() {
        assert_eq!(bessel_k(-1.3, 0.7), bessel_k(1.3, 0.7));
    }

    #[test]
    fn temme_gammas_match_statrs() {
        for &mu in &[0.5, 0.3, -0.2, 1e-3] {
            let (_, _, gampl, gammi) = temme_gammas(mu);
            assert!(rel(gampl, 1.0 / gamma(1.0 + mu)) < 1e-14);
            assert!(rel(gammi, 1.0 / gamma(1.0 - mu)) < 1e-14);
        }
    }
}
