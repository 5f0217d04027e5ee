//! Slant-path atmosphere: the Hufnagel–Valley refractive-index profile and
//! the path integrals built on it (Rytov variance, beam wander, coherence
//! length), plus Beer–Lambert attenuation.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::quadrature::{integrate_with_breaks, QuadratureSpec};

/// Ground transmitter to HAP receiver geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    pub hap_altitude_m: f64,
    pub tx_altitude_m: f64,
    pub zenith_angle_rad: f64,
}

impl LinkGeometry {
    pub fn new(hap_altitude_m: f64, tx_altitude_m: f64, zenith_angle_rad: f64) -> Result<Self> {
        let g = Self {
            hap_altitude_m,
            tx_altitude_m,
            zenith_angle_rad,
        };
        g.validate()?;
        Ok(g)
    }

    /// Geometry whose slant range equals `path_length_m` for the given zenith angle.
    pub fn from_path_length(path_length_m: f64, tx_altitude_m: f64, zenith_angle_rad: f64) -> Result<Self> {
        Self::new(
            tx_altitude_m + path_length_m * zenith_angle_rad.cos(),
            tx_altitude_m,
            zenith_angle_rad,
        )
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.tx_altitude_m >= 0.0, || {
            format!("transmitter altitude must be >= 0, got {}", self.tx_altitude_m)
        })?;
        ensure(self.hap_altitude_m > self.tx_altitude_m, || {
            format!(
                "HAP altitude {} must exceed transmitter altitude {}",
                self.hap_altitude_m, self.tx_altitude_m
            )
        })?;
        ensure(
            self.zenith_angle_rad >= 0.0 && self.zenith_angle_rad < PI / 2.0,
            || format!("zenith angle must lie in [0, pi/2), got {}", self.zenith_angle_rad),
        )?;
        let z = self.path_length_m();
        ensure(z.is_finite() && z > 0.0, || format!("slant path length {z} is not finite and positive"))
    }

    pub fn secant(&self) -> f64 {
        1.0 / self.zenith_angle_rad.cos()
    }

    /// Slant range `Z = (H - h0) sec ζ`.
    pub fn path_length_m(&self) -> f64 {
        (self.hap_altitude_m - self.tx_altitude_m) * self.secant()
    }

    /// Distance along the path from the transmitter to the point at altitude `l`.
    pub fn distance_at_altitude(&self, altitude_m: f64) -> f64 {
        (altitude_m - self.tx_altitude_m) * self.secant()
    }

    fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = (self.tx_altitude_m, self.hap_altitude_m);
        let mut pts = vec![lo];
        // Scale heights of the three profile terms.
        for off in [100.0, 300.0, 1_000.0, 3_000.0, 6_000.0, 10_000.0, 15_000.0, 20_000.0, 30_000.0] {
            let p = lo + off;
            if p < hi {
                pts.push(p);
            }
        }
        pts.push(hi);
        pts
    }
}

/// Turbulence and extinction parameters of the atmosphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtmosphereProfile {
    pub rms_wind_speed_mps: f64,
    /// `C_n²` at ground level, m^(-2/3).
    pub ground_cn2: f64,
    pub attenuation_coeff_per_m: f64,
}

impl AtmosphereProfile {
    pub fn new(rms_wind_speed_mps: f64, ground_cn2: f64, attenuation_coeff_per_m: f64) -> Result<Self> {
        let p = Self {
            rms_wind_speed_mps,
            ground_cn2,
            attenuation_coeff_per_m,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.rms_wind_speed_mps > 0.0, || {
            format!("rms wind speed must be > 0, got {}", self.rms_wind_speed_mps)
        })?;
        ensure(self.ground_cn2 > 0.0, || format!("ground Cn2 must be > 0, got {}", self.ground_cn2))?;
        ensure(self.attenuation_coeff_per_m >= 0.0, || {
            format!("attenuation coefficient must be >= 0, got {}", self.attenuation_coeff_per_m)
        })
    }
}

/// Which expression to use for the coherence length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoherenceForm {
    /// `∫ (0.55 C_n²(l) k² l)^(-3/5) dl`, integrand raised to -3/5 before integrating.
    #[default]
    AsPrinted,
    /// Spherical-wave form `[1.46 k² sec ζ ∫ C_n²(l) (s/L)^(5/3) dl]^(-3/5)`.
    Standard,
}

fn cn2_unchecked(l: f64, p: &AtmosphereProfile) -> f64 {
    let wind = p.rms_wind_speed_mps / 27.0;
    0.00594 * wind * wind * (1e-5 * l).powi(10) * (-l / 1000.0).exp()
        + 2.7e-16 * (-l / 1500.0).exp()
        + p.ground_cn2 * (-l / 100.0).exp()
}

/// Hufnagel–Valley refractive-index structure parameter at `altitude_m`.
pub fn cn2_at(altitude_m: f64, profile: &AtmosphereProfile) -> Result<f64> {
    ensure(altitude_m >= 0.0, || format!("altitude must be >= 0, got {altitude_m}"))?;
    Ok(cn2_unchecked(altitude_m, profile))
}

fn wavenumber(wavelength_m: f64) -> Result<f64> {
    ensure(wavelength_m > 0.0, || format!("wavelength must be > 0, got {wavelength_m}"))?;
    Ok(2.0 * PI / wavelength_m)
}

/// Slant-path Rytov variance `σ_Bu²`.
pub fn rytov_variance(
    geom: &LinkGeometry,
    profile: &AtmosphereProfile,
    wavelength_m: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    geom.validate()?;
    profile.validate()?;
    let k = wavenumber(wavelength_m)?;
    let h0 = geom.tx_altitude_m;
    let span = geom.hap_altitude_m - h0;
    let integral = integrate_with_breaks(
        |l| {
            let u = ((l - h0) / span).clamp(0.0, 1.0);
            cn2_unchecked(l, profile) * ((1.0 - u) * u).powf(5.0 / 6.0)
        },
        &geom.breakpoints(),
        quad,
    )?;
    let v = 2.25 * k.powf(7.0 / 6.0) * span.powf(5.0 / 6.0) * geom.secant().powf(11.0 / 6.0) * integral;
    Ok(v.max(0.0))
}

/// Beam-wander variance `σ_b²` (m²).
///
/// `beam_radius` maps altitude `l` to the beam radius at the slant distance
/// `s(l) = (l - h0) sec ζ` reached there; the path factor is `(Z - s(l))²`.
pub fn beam_wander_variance<W: Fn(f64) -> f64>(
    geom: &LinkGeometry,
    profile: &AtmosphereProfile,
    beam_radius: W,
    quad: &QuadratureSpec,
) -> Result<f64> {
    geom.validate()?;
    profile.validate()?;
    let z = geom.path_length_m();
    let integral = integrate_with_breaks(
        |l| {
            let s = geom.distance_at_altitude(l);
            let remaining = (z - s).max(0.0);
            cn2_unchecked(l, profile) * remaining * remaining * beam_radius(l).powf(-1.0 / 3.0)
        },
        &geom.breakpoints(),
        quad,
    )?;
    Ok((2.07 * integral).max(0.0))
}

/// Lower limit used by the as-printed coherence integral, whose integrand
/// diverges like `l^(-3/5)` at zero altitude.
pub const COHERENCE_MIN_ALTITUDE_M: f64 = 1.0;

/// Coherence length `ρ_0` in the selected form.
pub fn coherence_length(
    geom: &LinkGeometry,
    profile: &AtmosphereProfile,
    wavelength_m: f64,
    form: CoherenceForm,
    quad: &QuadratureSpec,
) -> Result<f64> {
    geom.validate()?;
    profile.validate()?;
    let k = wavenumber(wavelength_m)?;
    match form {
        CoherenceForm::AsPrinted => {
            let lo = geom.tx_altitude_m.max(COHERENCE_MIN_ALTITUDE_M);
            if lo >= geom.hap_altitude_m {
                return Ok(0.0);
            }
            let mut pts = geom.breakpoints();
            pts.retain(|&p| p > lo);
            pts.insert(0, lo);
            integrate_with_breaks(
                |l| (0.55 * cn2_unchecked(l, profile) * k * k * l).powf(-0.6),
                &pts,
                quad,
            )
        }
        CoherenceForm::Standard => {
            let h0 = geom.tx_altitude_m;
            let span = geom.hap_altitude_m - h0;
            let integral = integrate_with_breaks(
                |l| cn2_unchecked(l, profile) * ((l - h0) / span).clamp(0.0, 1.0).powf(5.0 / 3.0),
                &geom.breakpoints(),
                quad,
            )?;
            Ok((1.46 * k * k * geom.secant() * integral).powf(-0.6))
        }
    }
}

/// Beer–Lambert attenuation `exp(-Z ξ)`.
pub fn attenuation_loss(geom: &LinkGeometry, profile: &AtmosphereProfile) -> f64 {
    (-geom.path_length_m() * profile.attenuation_coeff_per_m).exp()
}

/// Transmit beam waist for an aperture of diameter `d`: `D / (√2 π)`.
pub fn waist_from_aperture_diameter(diameter_m: f64) -> f64 {
    diameter_m / (SQRT_2 * PI)
}
