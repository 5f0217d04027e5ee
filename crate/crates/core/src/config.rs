//! TOML run configuration. Every physical key carries its unit in the name;
//! missing keys fall back to the nominal scenario and are logged.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::aoa::ReceiverFov;
use crate::atmosphere::{AtmosphereProfile, CoherenceForm, LinkGeometry};
use crate::channel::ReceiverElectronics;
use crate::error::{Error, Result};
use crate::link::LinkScenario;
use crate::montecarlo::{AoaMode, SimConfig};
use crate::quadrature::QuadratureSpec;
use crate::turbulence::TurbulenceKind;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    geometry: RawGeometry,
    #[serde(default)]
    atmosphere: RawAtmosphere,
    #[serde(default)]
    transceiver: RawTransceiver,
    #[serde(default)]
    jitter: RawJitter,
    #[serde(default)]
    turbulence: RawTurbulence,
    #[serde(default)]
    simulation: RawSimulation,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGeometry {
    hap_altitude_m: Option<f64>,
    path_length_m: Option<f64>,
    tx_altitude_m: Option<f64>,
    zenith_deg: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtmosphere {
    wind_speed_mps: Option<f64>,
    ground_cn2_m_minus_2_3: Option<f64>,
    attenuation_per_m: Option<f64>,
    coherence_form: Option<CoherenceForm>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTransceiver {
    wavelength_nm: Option<f64>,
    beam_width_m: Option<f64>,
    aperture_radius_m: Option<f64>,
    theta_fov_mrad: Option<f64>,
    detector_radius_mm: Option<f64>,
    responsivity_a_per_w: Option<f64>,
    electrical_bandwidth_hz: Option<f64>,
    optical_bandwidth_nm: Option<f64>,
    background_radiance_w_per_cm2_m_sr: Option<f64>,
    p_t_dbm: Option<f64>,
    snr_threshold_db: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJitter {
    sigma_d_m: Option<f64>,
    sigma_o_mrad: Option<f64>,
    sigma_b_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTurbulence {
    model: Option<TurbulenceKind>,
    rytov_variance: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulation {
    trials: Option<u64>,
    seed: Option<u64>,
    aoa_mode: Option<AoaMode>,
    histogram_bins: Option<usize>,
    batch_size: Option<u64>,
    workers: Option<usize>,
    quadrature_rel_tol: Option<f64>,
    quadrature_max_subdivisions: Option<usize>,
}

/// Resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[derive(Default)]
pub struct RunConfig {
    pub scenario: LinkScenario,
    pub simulation: SimConfig,
    /// `section.key` of every value taken from the defaults.
    #[serde(skip)]
    pub defaulted: Vec<String>,
}

struct Resolver {
    defaulted: Vec<String>,
}

impl Resolver {
    fn pick<T: std::fmt::Debug>(&mut self, key: &str, value: Option<T>, default: T) -> T {
        match value {
            Some(v) => v,
            None => {
                log::info!("{key} not set, using default {default:?}");
                self.defaulted.push(key.to_string());
                default
            }
        }
    }

    /// Like `pick`, for keys given in `scale` × SI units; the default is SI
    /// and is passed through untouched.
    fn pick_si(&mut self, key: &str, value: Option<f64>, scale: f64, default_si: f64) -> f64 {
        match value {
            Some(v) => v * scale,
            None => {
                log::info!("{key} not set, using default {:?}", default_si / scale);
                self.defaulted.push(key.to_string());
                default_si
            }
        }
    }
}

fn cfg_err(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}


impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let d = LinkScenario::nominal();
        let ds = SimConfig::default();
        let mut r = Resolver { defaulted: Vec::new() };

        let g = raw.geometry;
        let tx = r.pick("geometry.tx_altitude_m", g.tx_altitude_m, d.geometry.tx_altitude_m);
        let zenith = r.pick_si(
            "geometry.zenith_deg",
            g.zenith_deg,
            std::f64::consts::PI / 180.0,
            d.geometry.zenith_angle_rad,
        );
        let geometry = match (g.hap_altitude_m, g.path_length_m) {
            (Some(_), Some(_)) => {
                return Err(Error::Config(
                    "geometry.hap_altitude_m and geometry.path_length_m are mutually exclusive".into(),
                ))
            }
            (Some(h), None) => LinkGeometry::new(h, tx, zenith),
            (None, l) => {
                let l = r.pick("geometry.path_length_m", l, d.geometry.path_length_m());
                LinkGeometry::from_path_length(l, tx, zenith)
            }
        }
        .map_err(cfg_err)?;

        let a = raw.atmosphere;
        let atmosphere = AtmosphereProfile::new(
            r.pick("atmosphere.wind_speed_mps", a.wind_speed_mps, d.atmosphere.rms_wind_speed_mps),
            r.pick("atmosphere.ground_cn2_m_minus_2_3", a.ground_cn2_m_minus_2_3, d.atmosphere.ground_cn2),
            r.pick("atmosphere.attenuation_per_m", a.attenuation_per_m, d.atmosphere.attenuation_coeff_per_m),
        )
        .map_err(cfg_err)?;
        let coherence_form = r.pick("atmosphere.coherence_form", a.coherence_form, d.coherence_form);

        let t = raw.transceiver;
        let wavelength_m = r.pick_si("transceiver.wavelength_nm", t.wavelength_nm, 1e-9, d.wavelength_m);
        let beam_width_m = r.pick("transceiver.beam_width_m", t.beam_width_m, d.beam_width_m);
        let aperture_radius_m = r.pick("transceiver.aperture_radius_m", t.aperture_radius_m, d.aperture_radius_m);
        let fov = ReceiverFov::from_angle(
            r.pick_si("transceiver.theta_fov_mrad", t.theta_fov_mrad, 1e-3, d.fov.theta_fov_rad),
            r.pick_si("transceiver.detector_radius_mm", t.detector_radius_mm, 1e-3, d.fov.detector_radius_m),
        )
        .map_err(cfg_err)?;
        let e = d.electronics;
        let electronics = ReceiverElectronics::with_radiance_per_cm2(
            r.pick("transceiver.responsivity_a_per_w", t.responsivity_a_per_w, e.responsivity),
            r.pick("transceiver.electrical_bandwidth_hz", t.electrical_bandwidth_hz, e.electrical_bandwidth_hz),
            r.pick_si("transceiver.optical_bandwidth_nm", t.optical_bandwidth_nm, 1e-9, e.optical_bandwidth_m),
            r.pick(
                "transceiver.background_radiance_w_per_cm2_m_sr",
                t.background_radiance_w_per_cm2_m_sr,
                e.background_radiance_si / crate::channel::RADIANCE_PER_CM2_TO_SI,
            ),
        )
        .map_err(cfg_err)?;
        let transmit_power_dbm = r.pick("transceiver.p_t_dbm", t.p_t_dbm, d.transmit_power_dbm);
        let snr_threshold_db = r.pick("transceiver.snr_threshold_db", t.snr_threshold_db, d.snr_threshold_db);

        let j = raw.jitter;
        let sigma_d_m = r.pick("jitter.sigma_d_m", j.sigma_d_m, d.sigma_d_m);
        let sigma_o_rad = r.pick_si("jitter.sigma_o_mrad", j.sigma_o_mrad, 1e-3, d.sigma_o_rad);

        let tb = raw.turbulence;
        let turbulence = r.pick("turbulence.model", tb.model, d.turbulence);

        let s = raw.simulation;
        let quadrature = QuadratureSpec::new(
            r.pick("simulation.quadrature_rel_tol", s.quadrature_rel_tol, d.quadrature.relative_tolerance),
            r.pick(
                "simulation.quadrature_max_subdivisions",
                s.quadrature_max_subdivisions,
                d.quadrature.max_subdivisions,
            ),
        )
        .map_err(cfg_err)?;
        let simulation = SimConfig {
            n_trials: r.pick("simulation.trials", s.trials, ds.n_trials),
            seed: r.pick("simulation.seed", s.seed, ds.seed),
            aoa_mode: r.pick("simulation.aoa_mode", s.aoa_mode, ds.aoa_mode),
            histogram_bins: r.pick("simulation.histogram_bins", s.histogram_bins, ds.histogram_bins),
            batch_size: r.pick("simulation.batch_size", s.batch_size, ds.batch_size),
            workers: r.pick("simulation.workers", s.workers, ds.workers),
        };
        simulation.validate()?;

        let scenario = LinkScenario {
            geometry,
            atmosphere,
            wavelength_m,
            coherence_form,
            beam_width_m,
            aperture_radius_m,
            fov,
            electronics,
            sigma_d_m,
            sigma_o_rad,
            sigma_b_override_m: j.sigma_b_m,
            turbulence,
            rytov_override: tb.rytov_variance,
            transmit_power_dbm,
            snr_threshold_db,
            quadrature,
        };
        scenario.validate().map_err(cfg_err)?;
        Ok(Self {
            scenario,
            simulation,
            defaulted: r.defaulted,
        })
    }

    /// SHA-256 over the resolved values, so explicit and defaulted keys with
    /// equal values hash the same. The seed and trial count are included.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_nominal_scenario() {
        let c = RunConfig::from_toml_str("").unwrap();
        let d = LinkScenario::nominal();
        assert!((c.scenario.geometry.path_length_m() - 20_000.0).abs() < 1e-9);
        assert!((c.scenario.wavelength_m - d.wavelength_m).abs() < 1e-18);
        assert!((c.scenario.fov.theta_fov_rad - d.fov.theta_fov_rad).abs() < 1e-15);
        assert_eq!(c.simulation, SimConfig::default());
        assert!(c.defaulted.contains(&"jitter.sigma_d_m".to_string()));
        assert_eq!(c.hash(), RunConfig::default().hash());
    }

    #[test]
    fn explicit_keys_are_applied() {
        let c = RunConfig::from_toml_str(
            r#"
            [geometry]
            hap_altitude_m = 17000.0
            zenith_deg = 60.0
            [transceiver]
            theta_fov_mrad = 45.0
            p_t_dbm = -10.0
            [jitter]
            sigma_o_mrad = 15.0
            [turbulence]
            model = "log_normal"
            [simulation]
            seed = 7
            trials = 20000
            aoa_mode = "exact_airy"
            "#,
        )
        .unwrap();
        assert!((c.scenario.geometry.path_length_m() - 34_000.0).abs() < 1e-6);
        assert!((c.scenario.fov.theta_fov_rad - 0.045).abs() < 1e-15);
        assert!((c.scenario.sigma_o_rad - 0.015).abs() < 1e-15);
        assert_eq!(c.scenario.turbulence, TurbulenceKind::LogNormal);
        assert_eq!(c.simulation.seed, 7);
        assert_eq!(c.simulation.aoa_mode, AoaMode::ExactAiry);
        assert!(!c.defaulted.contains(&"simulation.seed".to_string()));
        assert_ne!(c.hash(), RunConfig::default().hash());
    }

    #[test]
    fn rejects_unknown_and_invalid() {
        for bad in [
            "[geometry]\nzenith = 40.0",
            "[bogus]\nx = 1",
            "[jitter]\nsigma_d_m = -1.0",
            "[geometry]\nhap_altitude_m = 17000.0\npath_length_m = 20000.0",
            "[simulation]\ntrials = 10",
            "[transceiver]\ntheta_fov_mrad = 0.0",
            "[turbulence]\nmodel = \"rician\"",
        ] {
            assert!(matches!(RunConfig::from_toml_str(bad), Err(Error::Config(_))), "{bad}");
        }
    }
}
