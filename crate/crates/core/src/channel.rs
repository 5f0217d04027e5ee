//! Composite channel: noise, SNR, the small-`h` channel density and the
//! closed-form outage probability.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::aoa::{capture_probability, ReceiverFov};
use crate::error::{ensure, Error, Result};
use crate::pointing::{conditional_pl_pdf, PointingConstants};
use crate::quadrature::{integrate_to_infinity, QuadratureSpec};
use crate::special::ln_gamma;
use crate::turbulence::TurbulenceModel;

/// Elementary charge as used throughout the link budget (C).
pub const ELECTRON_CHARGE_C: f64 = 1.6e-19;

/// `W cm⁻² m⁻¹ sr⁻¹` to `W m⁻² m⁻¹ sr⁻¹`.
pub const RADIANCE_PER_CM2_TO_SI: f64 = 1e4;

/// Photodetector and optical front end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverElectronics {
    /// A/W.
    pub responsivity: f64,
    pub electrical_bandwidth_hz: f64,
    /// Optical filter width in wavelength (m).
    pub optical_bandwidth_m: f64,
    /// Background spectral radiance, SI: W m⁻² m⁻¹ sr⁻¹.
    pub background_radiance_si: f64,
    pub electron_charge_c: f64,
}

impl ReceiverElectronics {
    /// Builds from a background radiance given per cm² of aperture.
    pub fn with_radiance_per_cm2(
        responsivity: f64,
        electrical_bandwidth_hz: f64,
        optical_bandwidth_m: f64,
        background_radiance_w_cm2_m_sr: f64,
    ) -> Result<Self> {
        let rx = Self {
            responsivity,
            electrical_bandwidth_hz,
            optical_bandwidth_m,
            background_radiance_si: background_radiance_w_cm2_m_sr * RADIANCE_PER_CM2_TO_SI,
            electron_charge_c: ELECTRON_CHARGE_C,
        };
        rx.validate()?;
        Ok(rx)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.responsivity > 0.0
                && self.electrical_bandwidth_hz > 0.0
                && self.optical_bandwidth_m > 0.0
                && self.background_radiance_si > 0.0
                && self.electron_charge_c > 0.0,
            || format!("receiver electronics must be strictly positive, got {self:?}"),
        )
    }
}

/// Background power `N_b B_o Ω_FOV A_r` (W).
pub fn background_power(fov: &ReceiverFov, rx: &ReceiverElectronics, aperture_area_m2: f64) -> f64 {
    rx.background_radiance_si * rx.optical_bandwidth_m * fov.solid_angle_sr() * aperture_area_m2
}

/// Background shot-noise variance `2 e B_e η P_b` (A²).
pub fn noise_variance(rx: &ReceiverElectronics, background_power_w: f64) -> f64 {
    2.0 * rx.electron_charge_c * rx.electrical_bandwidth_hz * rx.responsivity * background_power_w
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * (w / 1e-3).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Transmit power and SNR threshold of an outage question.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageQuery {
    pub transmit_power_w: f64,
    /// Linear, not dB.
    pub snr_threshold: f64,
}

impl OutageQuery {
    pub fn new(transmit_power_w: f64, snr_threshold: f64) -> Result<Self> {
        ensure(transmit_power_w > 0.0 && snr_threshold > 0.0, || {
            format!("transmit power and SNR threshold must be > 0, got {transmit_power_w}, {snr_threshold}")
        })?;
        Ok(Self {
            transmit_power_w,
            snr_threshold,
        })
    }

    pub fn from_dbm(p_t_dbm: f64, snr_threshold_db: f64) -> Result<Self> {
        Self::new(dbm_to_watts(p_t_dbm), db_to_linear(snr_threshold_db))
    }

    /// Channel gain at which the SNR equals the threshold: `√(γ_th σ_n²) / (η P_t)`.
    pub fn h_th(&self, rx: &ReceiverElectronics, sigma_n_sq: f64) -> Result<f64> {
        if sigma_n_sq <= 0.0 {
            return Err(Error::DegenerateJitter(format!("noise variance must be > 0, got {sigma_n_sq}")));
        }
        Ok((self.snr_threshold * sigma_n_sq).sqrt() / (rx.responsivity * self.transmit_power_w))
    }
}

/// Instantaneous channel factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub h_al: f64,
    pub h_at: f64,
    pub h_pl: f64,
    pub h_af: f64,
}

impl LinkState {
    pub fn gain(&self) -> f64 {
        self.h_al * self.h_at * self.h_pl * self.h_af
    }
}

/// `γ = η² P_t² h² / σ_n²`.
pub fn snr(h: f64, query: &OutageQuery, rx: &ReceiverElectronics, sigma_n_sq: f64) -> Result<f64> {
    ensure(h >= 0.0, || format!("channel gain must be >= 0, got {h}"))?;
    if sigma_n_sq <= 0.0 {
        return Err(Error::DegenerateJitter(format!("noise variance must be > 0, got {sigma_n_sq}")));
    }
    let s = rx.responsivity * query.transmit_power_w * h;
    Ok(s * s / sigma_n_sq)
}

const POLE_TOLERANCE: f64 = 1e-9;

fn near_nonpositive_integer(a: f64) -> bool {
    let r = a.round();
    r <= 0.0 && (a - r).abs() < POLE_TOLERANCE
}

/// `ln` of the coefficient `K` in the small-`h` conditional density
/// `f(h | θ_d) ≈ K h^(C3-1)`, `h = h_al h_at h_pl`.
///
/// The pointing peak is taken as `C1 cos θ_d`, the support edge of the
/// conditional pointing density, so the result stays a proper density for
/// any `θ_d`. At `θ_d = 0` this is the printed expression unchanged.
pub fn ln_composite_coefficient(
    model: &TurbulenceModel,
    pc: &PointingConstants,
    h_al: f64,
    theta_d: f64,
) -> Result<f64> {
    model.validate()?;
    pc.validate()?;
    ensure(h_al > 0.0 && h_al <= 1.0, || format!("h_al must lie in (0, 1], got {h_al}"))?;
    ensure((0.0..PI / 2.0).contains(&theta_d), || format!("theta_d must lie in [0, pi/2), got {theta_d}"))?;
    let peak = pc.c1 * theta_d.cos();
    let mut c3 = pc.c3;
    match *model {
        TurbulenceModel::LogNormal { sigma_bu_sq: s } => {
            // C3 C1^-C3 / (2 h_al^C3 √(2πσ²)) · √(8πσ²) · exp(8σ²(((2C3+1)/4)² - 1/16))
            let q = (2.0 * c3 + 1.0) / 4.0;
            Ok(c3.ln() - c3 * peak.ln() - LN_2 - c3 * h_al.ln() - 0.5 * (2.0 * PI * s).ln()
                + 0.5 * (8.0 * PI * s).ln()
                + 8.0 * s * (q * q - 1.0 / 16.0))
        }
        TurbulenceModel::GammaGamma { alpha, beta } => {
            let args = |c3: f64| {
                let c5 = (alpha + beta - 2.0 * c3 - 2.0) / 2.0;
                (c5, (2.0 * c5 + 2.0 + alpha - beta) / 2.0, (2.0 * c5 + 2.0 + beta - alpha) / 2.0)
            };
            let (_, a1, a2) = args(c3);
            if near_nonpositive_integer(a1) || near_nonpositive_integer(a2) {
                log::warn!("Gamma argument at a pole (C3 = {c3}); perturbing C3 by 1e-9 relative");
                c3 *= 1.0 - POLE_TOLERANCE;
            }
            let (c5, a1, a2) = args(c3);
            if a1 <= 0.0 || a2 <= 0.0 {
                return Err(Error::ParameterRegion(format!(
                    "C3 = {c3:.6} is not below min(alpha, beta) = {:.6}; the gamma-gamma outage form diverges \
                     (Gamma arguments {a1:.6}, {a2:.6})",
                    alpha.min(beta)
                )));
            }
            let ab = alpha * beta;
            let ln_c4 = (2.0 * c3).ln() + 0.5 * (alpha + beta) * ab.ln()
                - c3 * h_al.ln()
                - ln_gamma(alpha)
                - ln_gamma(beta);
            Ok((2.0 * c5 + 1.0) * LN_2 - c3 * peak.ln() + ln_c4 - (c5 + 1.0) * (4.0 * ab).ln()
                + ln_gamma(a1)
                + ln_gamma(a2))
        }
    }
}

/// Conditional density of `h_ag = h_al h_at h_pl` given `θ_d`, small-`h` form.
pub fn conditional_composite_pdf(
    model: &TurbulenceModel,
    pc: &PointingConstants,
    h_al: f64,
    theta_d: f64,
    h_ag: f64,
) -> Result<f64> {
    ensure(h_ag >= 0.0, || format!("h must be >= 0, got {h_ag}"))?;
    let ln_k = ln_composite_coefficient(model, pc, h_al, theta_d)?;
    if h_ag == 0.0 {
        return Ok(if pc.c3 > 1.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((ln_k + (pc.c3 - 1.0) * h_ag.ln()).exp())
}

/// Conditional composite density by direct quadrature of the product
/// distribution, `∫ f_pl(h / (h_al x)) f_at(x) / (h_al x) dx`.
pub fn composite_pdf_by_mixing(
    model: &TurbulenceModel,
    pc: &PointingConstants,
    h_al: f64,
    theta_d: f64,
    h_ag: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    ensure(h_ag > 0.0 && h_al > 0.0, || format!("need h > 0 and h_al > 0, got {h_ag}, {h_al}"))?;
    let lo = h_ag / (h_al * pc.c1 * theta_d.cos());
    model.validate()?;
    integrate_to_infinity(
        |x| conditional_pl_pdf(pc, theta_d, h_ag / (h_al * x)) * model.pdf(x).unwrap_or(0.0) / (h_al * x),
        lo,
        quad,
    )
}

/// Point mass at zero plus the continuous part of the channel density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelDensity {
    pub density: f64,
    pub point_mass: f64,
}

/// Probability that the deviation leaves the field of view (`h = 0`).
pub fn outage_floor(theta_fov_rad: f64, sigma_o_rad: f64) -> f64 {
    1.0 - capture_probability(theta_fov_rad, sigma_o_rad)
}

/// Small-`h` channel density in gate mode, small-angle (`θ_d ≈ 0`) form.
pub fn channel_pdf_smooth(
    model: &TurbulenceModel,
    pc: &PointingConstants,
    h_al: f64,
    theta_fov_rad: f64,
    sigma_o_rad: f64,
    h: f64,
) -> Result<ChannelDensity> {
    ensure(theta_fov_rad > 0.0 && sigma_o_rad >= 0.0, || {
        format!("need theta_fov > 0 and sigma_o >= 0, got {theta_fov_rad}, {sigma_o_rad}")
    })?;
    let point_mass = outage_floor(theta_fov_rad, sigma_o_rad);
    let cond = conditional_composite_pdf(model, pc, h_al, 0.0, h)?;
    Ok(ChannelDensity {
        density: cond * (1.0 - point_mass),
        point_mass,
    })
}

/// Closed-form outage probability with its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageBreakdown {
    /// Reported probability, clamped to [0, 1].
    pub p_out: f64,
    /// `exp(-θ_FOV² / 2σ_o²)`.
    pub floor: f64,
    /// `ln` of the unclamped continuous contribution.
    pub ln_smooth: f64,
    /// Threshold at which the smooth CDF alone would reach 1/2.
    pub validity_limit_h: f64,
    pub beyond_validity: bool,
    pub clamped: bool,
}

impl OutageBreakdown {
    pub fn smooth(&self) -> f64 {
        self.ln_smooth.exp()
    }
}

/// `P_out = F + (1 - F) (K / C3) h_th^C3`, `F = exp(-θ_FOV² / 2σ_o²)`.
pub fn outage_closed_form(
    model: &TurbulenceModel,
    pc: &PointingConstants,
    h_al: f64,
    theta_fov_rad: f64,
    sigma_o_rad: f64,
    h_th: f64,
) -> Result<OutageBreakdown> {
    ensure(h_th > 0.0, || format!("h_th must be > 0, got {h_th}"))?;
    ensure(theta_fov_rad > 0.0 && sigma_o_rad >= 0.0, || {
        format!("need theta_fov > 0 and sigma_o >= 0, got {theta_fov_rad}, {sigma_o_rad}")
    })?;
    let floor = outage_floor(theta_fov_rad, sigma_o_rad);
    let ln_k = ln_composite_coefficient(model, pc, h_al, 0.0)?;
    let c3 = pc.c3;
    let ln_capture = (1.0 - floor).ln();
    let ln_cdf_coeff = ln_k - c3.ln();
    let ln_smooth = ln_capture + ln_cdf_coeff + c3 * h_th.ln();
    let validity_limit_h = ((0.5f64).ln() - ln_cdf_coeff) / c3;
    let validity_limit_h = validity_limit_h.exp();
    let beyond_validity = h_th > validity_limit_h;
    if beyond_validity {
        log::debug!(
            "h_th = {h_th:.4e} exceeds the small-h validity limit {validity_limit_h:.4e}; closed form is unreliable"
        );
    }
    let raw = floor + ln_smooth.exp();
    let clamped = raw > 1.0;
    if clamped {
        log::debug!("closed-form outage {raw:.4} exceeds 1; clamped");
    }
    Ok(OutageBreakdown {
        p_out: raw.min(1.0),
        floor,
        ln_smooth,
        validity_limit_h,
        beyond_validity,
        clamped,
    })
}
