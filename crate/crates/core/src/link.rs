//! A complete link scenario and the constants derived from it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::aoa::ReceiverFov;
use crate::atmosphere::{
    attenuation_loss, beam_wander_variance, coherence_length, rytov_variance, AtmosphereProfile, CoherenceForm,
    LinkGeometry,
};
use crate::channel::{
    background_power, dbm_to_watts, db_to_linear, noise_variance, outage_closed_form, OutageBreakdown, OutageQuery,
    ReceiverElectronics,
};
use crate::error::{ensure, Result};
use crate::pointing::{pointing_constants, BeamParams, JitterParams, PointingConstants};
use crate::quadrature::QuadratureSpec;
use crate::turbulence::{TurbulenceKind, TurbulenceModel};

/// Every input of the link model, in SI units (powers in dBm, thresholds in dB).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkScenario {
    pub geometry: LinkGeometry,
    pub atmosphere: AtmosphereProfile,
    pub wavelength_m: f64,
    pub coherence_form: CoherenceForm,
    /// Beam radius at the receiver, the beam design variable.
    pub beam_width_m: f64,
    pub aperture_radius_m: f64,
    pub fov: ReceiverFov,
    pub electronics: ReceiverElectronics,
    pub sigma_d_m: f64,
    pub sigma_o_rad: f64,
    /// Replaces the beam-wander integral when set.
    pub sigma_b_override_m: Option<f64>,
    pub turbulence: TurbulenceKind,
    /// Replaces the Rytov integral when set.
    pub rytov_override: Option<f64>,
    pub transmit_power_dbm: f64,
    pub snr_threshold_db: f64,
    pub quadrature: QuadratureSpec,
}

impl LinkScenario {
    /// Nominal ground-to-HAP link: 20 km slant range at 40° zenith, 1550 nm,
    /// Hufnagel–Valley with 21 m/s wind and `C_n²(0) = 1.7e-13`.
    pub fn nominal() -> Self {
        Self {
            geometry: LinkGeometry::from_path_length(20_000.0, 0.0, 40f64.to_radians()).expect("valid"),
            atmosphere: AtmosphereProfile {
                rms_wind_speed_mps: 21.0,
                ground_cn2: 1.7e-13,
                attenuation_coeff_per_m: 0.0,
            },
            wavelength_m: 1550e-9,
            coherence_form: CoherenceForm::AsPrinted,
            beam_width_m: 1.0,
            aperture_radius_m: 0.05,
            fov: ReceiverFov::from_angle(0.075, 1e-3).expect("valid"),
            electronics: ReceiverElectronics::with_radiance_per_cm2(0.9, 1e9, 10e-9, 1e-3).expect("valid"),
            sigma_d_m: 0.4,
            sigma_o_rad: 0.010,
            sigma_b_override_m: None,
            turbulence: TurbulenceKind::GammaGamma,
            rytov_override: None,
            transmit_power_dbm: 5.0,
            snr_threshold_db: 0.0,
            quadrature: QuadratureSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.atmosphere.validate()?;
        self.fov.validate()?;
        self.electronics.validate()?;
        ensure(self.wavelength_m > 0.0, || format!("wavelength must be > 0, got {}", self.wavelength_m))?;
        ensure(self.beam_width_m > 0.0, || format!("beam width must be > 0, got {}", self.beam_width_m))?;
        ensure(self.aperture_radius_m > 0.0, || {
            format!("aperture radius must be > 0, got {}", self.aperture_radius_m)
        })?;
        ensure(self.sigma_d_m >= 0.0 && self.sigma_o_rad >= 0.0, || {
            format!("jitter deviations must be >= 0, got {} m, {} rad", self.sigma_d_m, self.sigma_o_rad)
        })?;
        if let Some(sb) = self.sigma_b_override_m {
            ensure(sb >= 0.0, || format!("sigma_b override must be >= 0, got {sb}"))?;
        }
        if let Some(r) = self.rytov_override {
            ensure(r > 0.0, || format!("Rytov override must be > 0, got {r}"))?;
        }
        ensure(self.transmit_power_dbm.is_finite() && self.snr_threshold_db.is_finite(), || {
            "transmit power and SNR threshold must be finite".to_string()
        })
    }

    pub fn with_beam_width(mut self, w_z: f64) -> Self {
        self.beam_width_m = w_z;
        self
    }

    pub fn with_fov_angle(mut self, theta_fov_rad: f64) -> Result<Self> {
        self.fov = self.fov.with_angle(theta_fov_rad)?;
        Ok(self)
    }

    pub fn with_transmit_power_dbm(mut self, p_t_dbm: f64) -> Self {
        self.transmit_power_dbm = p_t_dbm;
        self
    }

    pub fn with_zenith(mut self, zenith_rad: f64) -> Result<Self> {
        self.geometry = LinkGeometry::new(self.geometry.hap_altitude_m, self.geometry.tx_altitude_m, zenith_rad)?;
        Ok(self)
    }

    pub fn query(&self) -> Result<OutageQuery> {
        OutageQuery::new(dbm_to_watts(self.transmit_power_dbm), db_to_linear(self.snr_threshold_db))
    }

    pub fn aperture_area_m2(&self) -> f64 {
        PI * self.aperture_radius_m * self.aperture_radius_m
    }

    /// Quantities that depend only on the path and the atmosphere.
    pub fn path_terms(&self) -> Result<PathTerms> {
        self.validate()?;
        let q = &self.quadrature;
        let rytov = match self.rytov_override {
            Some(r) => r,
            None => rytov_variance(&self.geometry, &self.atmosphere, self.wavelength_m, q)?,
        };
        let rho0 = coherence_length(&self.geometry, &self.atmosphere, self.wavelength_m, self.coherence_form, q)?;
        Ok(PathTerms {
            path_length_m: self.geometry.path_length_m(),
            rytov_variance: rytov,
            coherence_length_m: rho0,
            h_al: attenuation_loss(&self.geometry, &self.atmosphere),
            model: TurbulenceModel::from_rytov(self.turbulence, rytov)?,
        })
    }

    pub fn derive(&self) -> Result<DerivedLink> {
        let terms = self.path_terms()?;
        self.derive_with(&terms)
    }

    /// Derives the remaining constants reusing precomputed path terms.
    pub fn derive_with(&self, terms: &PathTerms) -> Result<DerivedLink> {
        self.validate()?;
        let beam = BeamParams::for_receiver_width(
            self.beam_width_m,
            terms.path_length_m,
            self.wavelength_m,
            terms.coherence_length_m,
        )?;
        let sigma_b_m = match self.sigma_b_override_m {
            Some(sb) => sb,
            None => {
                let g = self.geometry;
                beam_wander_variance(
                    &g,
                    &self.atmosphere,
                    |l| beam.radius_at(g.distance_at_altitude(l)),
                    &self.quadrature,
                )?
                .sqrt()
            }
        };
        let jitter = JitterParams::new(self.sigma_d_m, sigma_b_m, self.sigma_o_rad)?;
        let pointing = pointing_constants(self.beam_width_m, self.aperture_radius_m, &jitter)?;
        let p_b = background_power(&self.fov, &self.electronics, self.aperture_area_m2());
        let sigma_n_sq = noise_variance(&self.electronics, p_b);
        let query = self.query()?;
        let h_th = query.h_th(&self.electronics, sigma_n_sq)?;
        let eta_p = self.electronics.responsivity * query.transmit_power_w;
        Ok(DerivedLink {
            terms: *terms,
            beam,
            sigma_b_m,
            jitter,
            pointing,
            background_power_w: p_b,
            noise_variance: sigma_n_sq,
            query,
            h_th,
            snr_scale: eta_p * eta_p / sigma_n_sq,
            beam_width_m: self.beam_width_m,
            aperture_radius_m: self.aperture_radius_m,
            fov: self.fov,
            wavelength_m: self.wavelength_m,
        })
    }
}

impl Default for LinkScenario {
    fn default() -> Self {
        Self::nominal()
    }
}

/// Path-only quantities, shared across beam, FOV and power sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathTerms {
    pub path_length_m: f64,
    pub rytov_variance: f64,
    pub coherence_length_m: f64,
    pub h_al: f64,
    pub model: TurbulenceModel,
}

/// All constants the closed forms and the sampler need.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedLink {
    pub terms: PathTerms,
    pub beam: BeamParams,
    pub sigma_b_m: f64,
    pub jitter: JitterParams,
    pub pointing: PointingConstants,
    pub background_power_w: f64,
    pub noise_variance: f64,
    pub query: OutageQuery,
    pub h_th: f64,
    /// `η² P_t² / σ_n²`, so that `γ = snr_scale · h²`.
    pub snr_scale: f64,
    pub beam_width_m: f64,
    pub aperture_radius_m: f64,
    pub fov: ReceiverFov,
    pub wavelength_m: f64,
}

impl DerivedLink {
    pub fn outage(&self) -> Result<OutageBreakdown> {
        self.outage_at(self.h_th)
    }

    pub fn outage_at(&self, h_th: f64) -> Result<OutageBreakdown> {
        outage_closed_form(
            &self.terms.model,
            &self.pointing,
            self.terms.h_al,
            self.fov.theta_fov_rad,
            self.jitter.sigma_o_rad,
            h_th,
        )
    }

    /// `h_th` for another transmit power, all else fixed.
    pub fn h_th_at_dbm(&self, p_t_dbm: f64) -> f64 {
        self.h_th * self.query.transmit_power_w / dbm_to_watts(p_t_dbm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nominal_derives() {
        let s = LinkScenario::nominal();
        let d = s.derive().unwrap();
        assert!((d.terms.path_length_m - 20_000.0).abs() < 1e-9);
        assert!(d.terms.rytov_variance > 0.0 && d.terms.rytov_variance < 1.0);
        assert!(d.sigma_b_m > 0.0 && d.sigma_b_m < 1.0);
        assert!((d.beam.radius_at(d.terms.path_length_m) - 1.0).abs() < 1e-12);
        assert!((d.pointing.c1 - 0.005).abs() < 1e-15);
        let o = d.outage().unwrap();
        assert!(o.p_out >= o.floor && o.p_out <= 1.0);
    }

    #[test]
    fn h_th_scales_inversely_with_power() {
        let d = LinkScenario::nominal().derive().unwrap();
        let h = d.h_th_at_dbm(15.0);
        let d2 = LinkScenario::nominal().with_transmit_power_dbm(15.0).derive().unwrap();
        assert!((h / d2.h_th - 1.0).abs() < 1e-12);
        assert!((d.h_th / h - 10.0).abs() < 1e-9);
    }

    #[test]
    fn overrides_apply() {
        let mut s = LinkScenario::nominal();
        s.sigma_b_override_m = Some(0.0);
        s.rytov_override = Some(0.3);
        let d = s.derive().unwrap();
        assert_eq!(d.sigma_b_m, 0.0);
        assert_eq!(d.terms.rytov_variance, 0.3);
        s.rytov_override = Some(-1.0);
        assert!(s.derive().is_err());
    }
}
