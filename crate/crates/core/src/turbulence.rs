//! Irradiance fading from atmospheric turbulence.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate, integrate_to_infinity, QuadratureSpec};
use crate::special::{bessel_k_scaled, ln_gamma};

/// Fading family, without its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurbulenceKind {
    LogNormal,
    #[default]
    GammaGamma,
}

/// Unit-mean fading distribution of `h_at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TurbulenceModel {
    /// `ln h ~ N(-2σ², 4σ²)` with `σ² = sigma_bu_sq`.
    LogNormal { sigma_bu_sq: f64 },
    GammaGamma { alpha: f64, beta: f64 },
}

/// Large- and small-scale eddy parameters `(α, β)` from the Rytov variance.
pub fn gg_params_from_rytov(sigma_bu_sq: f64) -> Result<(f64, f64)> {
    ensure(sigma_bu_sq > 0.0 && sigma_bu_sq.is_finite(), || {
        format!("Rytov variance must be finite and > 0, got {sigma_bu_sq}")
    })?;
    // σ^(12/6) read with σ² = sigma_bu_sq, i.e. the variance itself.
    let s = sigma_bu_sq;
    let alpha = 1.0 / ((0.49 * s / (1.0 + 0.56 * s).powf(7.0 / 6.0)).exp() - 1.0);
    let beta = 1.0 / ((0.51 * s / (1.0 + 0.69 * s).powf(5.0 / 6.0)).exp() - 1.0);
    Ok((alpha, beta))
}

impl TurbulenceModel {
    pub fn log_normal(sigma_bu_sq: f64) -> Result<Self> {
        let m = Self::LogNormal { sigma_bu_sq };
        m.validate()?;
        Ok(m)
    }

    pub fn gamma_gamma(alpha: f64, beta: f64) -> Result<Self> {
        let m = Self::GammaGamma { alpha, beta };
        m.validate()?;
        Ok(m)
    }

    /// Builds the requested family from a Rytov variance.
    pub fn from_rytov(kind: TurbulenceKind, sigma_bu_sq: f64) -> Result<Self> {
        match kind {
            TurbulenceKind::LogNormal => Self::log_normal(sigma_bu_sq),
            TurbulenceKind::GammaGamma => {
                let (a, b) = gg_params_from_rytov(sigma_bu_sq)?;
                Self::gamma_gamma(a, b)
            }
        }
    }

    pub fn kind(&self) -> TurbulenceKind {
        match self {
            Self::LogNormal { .. } => TurbulenceKind::LogNormal,
            Self::GammaGamma { .. } => TurbulenceKind::GammaGamma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::LogNormal { sigma_bu_sq } => ensure(sigma_bu_sq > 0.0 && sigma_bu_sq.is_finite(), || {
                format!("log-normal variance must be finite and > 0, got {sigma_bu_sq}")
            }),
            Self::GammaGamma { alpha, beta } => ensure(
                alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite(),
                || format!("gamma-gamma parameters must be finite and > 0, got alpha={alpha}, beta={beta}"),
            ),
        }
    }

    /// Scintillation index `Var[h] / E[h]²`.
    pub fn scintillation_index(&self) -> f64 {
        match *self {
            Self::LogNormal { sigma_bu_sq } => (4.0 * sigma_bu_sq).exp() - 1.0,
            Self::GammaGamma { alpha, beta } => 1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta),
        }
    }

    /// Density of `h_at`.
    pub fn pdf(&self, h: f64) -> Result<f64> {
        ensure(h >= 0.0, || format!("irradiance must be >= 0, got {h}"))?;
        if h == 0.0 {
            return Ok(match *self {
                Self::LogNormal { .. } => 0.0,
                Self::GammaGamma { alpha, beta } => {
                    let m = alpha.min(beta);
                    if m > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                }
            });
        }
        Ok(self.ln_pdf(h).exp())
    }

    fn ln_pdf(&self, h: f64) -> f64 {
        match *self {
            Self::LogNormal { sigma_bu_sq: s } => {
                let z = h.ln() + 2.0 * s;
                -z * z / (8.0 * s) - h.ln() - 0.5 * (8.0 * PI * s).ln()
            }
            Self::GammaGamma { alpha, beta } => {
                let ab = alpha * beta;
                let x = 2.0 * (ab * h).sqrt();
                std::f64::consts::LN_2 + 0.5 * (alpha + beta) * ab.ln() - ln_gamma(alpha) - ln_gamma(beta)
                    + (0.5 * (alpha + beta) - 1.0) * h.ln()
                    + bessel_k_scaled(alpha - beta, x).ln()
                    - x
            }
        }
    }

    /// Cumulative distribution of `h_at`.
    pub fn cdf(&self, h: f64) -> Result<f64> {
        ensure(h >= 0.0, || format!("irradiance must be >= 0, got {h}"))?;
        if h == 0.0 {
            return Ok(0.0);
        }
        match *self {
            Self::LogNormal { sigma_bu_sq: s } => {
                let z = (h.ln() + 2.0 * s) / (8.0 * s).sqrt();
                Ok(0.5 * erfc(-z))
            }
            Self::GammaGamma { .. } => {
                let spec = QuadratureSpec::new(1e-10, 2000)?;
                let f = |x: f64| if x > 0.0 { self.ln_pdf(x).exp() } else { 0.0 };
                // Integrate over the shorter side to keep tails accurate.
                if h <= 1.0 {
                    Ok(integrate(f, 0.0, h, &spec)?.clamp(0.0, 1.0))
                } else {
                    let tail = integrate_to_infinity(f, h, &spec)?;
                    Ok((1.0 - tail).clamp(0.0, 1.0))
                }
            }
        }
    }

    /// `ln E[h^(-s)]`, finite for `s < min(α, β)` under gamma-gamma.
    pub fn ln_negative_moment(&self, s: f64) -> Result<f64> {
        match *self {
            Self::LogNormal { sigma_bu_sq: v } => Ok(2.0 * v * s * (1.0 + s)),
            Self::GammaGamma { alpha, beta } => {
                if s >= alpha || s >= beta {
                    return Err(Error::ParameterRegion(format!(
                        "negative moment of order {s} diverges for alpha={alpha}, beta={beta}"
                    )));
                }
                Ok(s * (alpha * beta).ln() + ln_gamma(alpha - s) + ln_gamma(beta - s)
                    - ln_gamma(alpha)
                    - ln_gamma(beta))
            }
        }
    }

    /// Draws one realization of `h_at`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sampler().draw(rng)
    }

    /// Pre-built sampler for repeated draws.
    pub fn sampler(&self) -> TurbulenceSampler {
        match *self {
            Self::LogNormal { sigma_bu_sq: s } => TurbulenceSampler::LogNormal(
                Normal::new(-2.0 * s, 2.0 * s.sqrt()).expect("validated variance"),
            ),
            Self::GammaGamma { alpha, beta } => TurbulenceSampler::GammaGamma(
                Gamma::new(alpha, 1.0 / alpha).expect("validated alpha"),
                Gamma::new(beta, 1.0 / beta).expect("validated beta"),
            ),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum TurbulenceSampler {
    LogNormal(Normal<f64>),
    GammaGamma(Gamma<f64>, Gamma<f64>),
}

impl TurbulenceSampler {
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::LogNormal(n) => n.sample(rng).exp(),
            Self::GammaGamma(x, y) => x.sample(rng) * y.sample(rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn gg_params_for_weak_turbulence() {
        // 30-digit reference values.
        let (a, b) = gg_params_from_rytov(0.1).unwrap();
        assert!((a - 21.251_456_140_017_82).abs() < 1e-11);
        assert!((b - 20.232_998_981_324_18).abs() < 1e-11);
        let (a, b) = gg_params_from_rytov(1.0).unwrap();
        assert!((a - 2.952_864_147_232_499).abs() < 1e-12);
        assert!((b - 2.563_631_979_503_695).abs() < 1e-12);
        assert!(a > 1.0 && b > 1.0);
    }

    #[test]
    fn gg_params_decrease_and_alpha_exceeds_beta() {
        let mut prev = gg_params_from_rytov(1e-3).unwrap();
        for k in 1..=100 {
            let s = 1e-3 * 10f64.powf(5.0 * k as f64 / 100.0);
            let (a, b) = gg_params_from_rytov(s).unwrap();
            assert!(a > b, "sigma^2 = {s}");
            if s <= 5.0 {
                assert!(a < prev.0 && b < prev.1);
            }
            prev = (a, b);
        }
    }

    #[test]
    fn gg_params_reject_nonpositive() {
        assert!(gg_params_from_rytov(0.0).is_err());
        assert!(gg_params_from_rytov(-1.0).is_err());
    }

    #[test]
    fn densities_integrate_to_one_and_have_unit_mean() {
        let spec = QuadratureSpec::default();
        for m in [
            TurbulenceModel::log_normal(0.18).unwrap(),
            TurbulenceModel::gamma_gamma(10.98, 10.5).unwrap(),
            TurbulenceModel::gamma_gamma(4.0, 1.9).unwrap(),
        ] {
            let mass = integrate_to_infinity(|h| m.pdf(h).unwrap(), 0.0, &spec).unwrap();
            let mean = integrate_to_infinity(|h| h * m.pdf(h).unwrap(), 0.0, &spec).unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "{m:?} mass {mass}");
            assert!((mean - 1.0).abs() < 1e-8, "{m:?} mean {mean}");
        }
    }

    #[test]
    fn cdf_is_consistent_with_pdf() {
        let m = TurbulenceModel::gamma_gamma(6.0, 3.5).unwrap();
        let spec = QuadratureSpec::default();
        for h in [0.1, 0.7, 1.0, 2.5] {
            let direct = integrate(|x| m.pdf(x).unwrap(), 0.0, h, &spec).unwrap();
            assert!((m.cdf(h).unwrap() - direct).abs() < 1e-8);
        }
        let ln = TurbulenceModel::log_normal(0.2).unwrap();
        let direct = integrate(|x| ln.pdf(x).unwrap(), 1e-12, 0.8, &spec).unwrap();
        assert!((ln.cdf(0.8).unwrap() - direct).abs() < 1e-9);
    }

    #[test]
    fn negative_moment_matches_quadrature() {
        let spec = QuadratureSpec::default();
        for (m, s) in [
            (TurbulenceModel::gamma_gamma(10.98, 10.5).unwrap(), 1.3),
            (TurbulenceModel::log_normal(0.18).unwrap(), 0.8),
        ] {
            let q = integrate_to_infinity(|h| h.powf(-s) * m.pdf(h).unwrap(), 0.0, &spec).unwrap();
            let c = m.ln_negative_moment(s).unwrap().exp();
            assert!((q / c - 1.0).abs() < 1e-7, "{m:?}");
        }
    }

    #[test]
    fn negative_moment_diverges_past_beta() {
        let m = TurbulenceModel::gamma_gamma(5.0, 2.0).unwrap();
        assert!(matches!(m.ln_negative_moment(2.0), Err(Error::ParameterRegion(_))));
    }

    #[test]
    fn samples_have_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for m in [
            TurbulenceModel::log_normal(0.18).unwrap(),
            TurbulenceModel::gamma_gamma(10.98, 10.5).unwrap(),
        ] {
            let s = m.sampler();
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| s.draw(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            assert!((mean - 1.0).abs() < 0.01, "{m:?} {mean}");
            assert!((var / m.scintillation_index() - 1.0).abs() < 0.05, "{m:?} {var}");
        }
    }

    #[test]
    fn pdf_rejects_negative() {
        let m = TurbulenceModel::gamma_gamma(2.0, 3.0).unwrap();
        assert!(m.pdf(-0.1).is_err());
        assert!(m.cdf(-0.1).is_err());
    }
}
