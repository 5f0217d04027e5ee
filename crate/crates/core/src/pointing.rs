//! Gaussian-beam footprint at the receiver and pointing-error statistics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::quadrature::{integrate, QuadratureSpec};
use crate::special::bessel_i0_scaled;

/// Below this `w_Z / r_a` the constant-intensity approximation is poor.
pub const FAR_FIELD_RATIO_WARN: f64 = 5.0;

/// Transmit-side Gaussian beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    pub waist_at_tx_m: f64,
    pub wavelength_m: f64,
    /// `1 + 2 w_0² / ρ_0²`.
    pub epsilon: f64,
}

impl BeamParams {
    pub fn new(waist_at_tx_m: f64, wavelength_m: f64, epsilon: f64) -> Result<Self> {
        let b = Self {
            waist_at_tx_m,
            wavelength_m,
            epsilon,
        };
        b.validate()?;
        Ok(b)
    }

    /// Beam whose `ε` comes from the coherence length `ρ_0`.
    pub fn with_coherence_length(waist_at_tx_m: f64, wavelength_m: f64, coherence_length_m: f64) -> Result<Self> {
        ensure(coherence_length_m > 0.0, || {
            format!("coherence length must be > 0, got {coherence_length_m}")
        })?;
        let r = waist_at_tx_m / coherence_length_m;
        Self::new(waist_at_tx_m, wavelength_m, 1.0 + 2.0 * r * r)
    }

    /// Transmit waist whose footprint at `distance_m` is `w_z`, on the
    /// divergent (small-waist) branch of the two solutions.
    pub fn for_receiver_width(
        w_z: f64,
        distance_m: f64,
        wavelength_m: f64,
        coherence_length_m: f64,
    ) -> Result<Self> {
        ensure(w_z > 0.0 && distance_m > 0.0 && wavelength_m > 0.0 && coherence_length_m > 0.0, || {
            format!(
                "beam inversion needs positive inputs, got w_Z={w_z}, Z={distance_m}, lambda={wavelength_m}, rho0={coherence_length_m}"
            )
        })?;
        let q = wavelength_m * distance_m / PI;
        let w = w_z * w_z - 2.0 * q * q / (coherence_length_m * coherence_length_m);
        let disc = w * w - 4.0 * q * q;
        if w <= 0.0 || disc < 0.0 {
            return Err(Error::Domain(format!(
                "beam width {w_z} m is below the smallest footprint reachable over {distance_m} m ({:.4} m)",
                min_receiver_width(distance_m, wavelength_m, coherence_length_m)
            )));
        }
        // Small root written to avoid cancellation.
        let w0_sq = 2.0 * q * q / (w + disc.sqrt());
        Self::with_coherence_length(w0_sq.sqrt(), wavelength_m, coherence_length_m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.waist_at_tx_m > 0.0, || format!("w0 must be > 0, got {}", self.waist_at_tx_m))?;
        ensure(self.wavelength_m > 0.0, || format!("wavelength must be > 0, got {}", self.wavelength_m))?;
        ensure(self.epsilon >= 1.0, || format!("epsilon must be >= 1, got {}", self.epsilon))
    }

    /// Beam radius after propagating `distance_m`.
    pub fn radius_at(&self, distance_m: f64) -> f64 {
        let w0 = self.waist_at_tx_m;
        let t = self.wavelength_m * distance_m / (PI * w0 * w0);
        w0 * (1.0 + self.epsilon * t * t).sqrt()
    }
}

/// Smallest `w_Z` any transmit waist can produce over `distance_m`.
pub fn min_receiver_width(distance_m: f64, wavelength_m: f64, coherence_length_m: f64) -> f64 {
    let q = wavelength_m * distance_m / PI;
    (2.0 * q + 2.0 * q * q / (coherence_length_m * coherence_length_m)).sqrt()
}

/// `w_Z = w_0 [1 + ε (λZ / π w_0²)²]^(1/2)`.
pub fn beam_waist_at(beam: &BeamParams, distance_m: f64) -> Result<f64> {
    beam.validate()?;
    ensure(distance_m >= 0.0, || format!("distance must be >= 0, got {distance_m}"))?;
    Ok(beam.radius_at(distance_m))
}

/// Platform and beam jitter scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterParams {
    pub sigma_d_m: f64,
    pub sigma_b_m: f64,
    pub sigma_o_rad: f64,
}

impl JitterParams {
    pub fn new(sigma_d_m: f64, sigma_b_m: f64, sigma_o_rad: f64) -> Result<Self> {
        let j = Self {
            sigma_d_m,
            sigma_b_m,
            sigma_o_rad,
        };
        j.validate()?;
        Ok(j)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(
            self.sigma_d_m >= 0.0 && self.sigma_b_m >= 0.0 && self.sigma_o_rad >= 0.0,
            || format!("jitter deviations must be >= 0, got {self:?}"),
        )
    }

    /// `σ_r = √(σ_d² + σ_b²)`.
    pub fn sigma_r_m(&self) -> f64 {
        self.sigma_d_m.hypot(self.sigma_b_m)
    }
}

/// Constants of the conditional pointing-loss density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointingConstants {
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
}

impl PointingConstants {
    pub fn validate(&self) -> Result<()> {
        ensure(self.c1 > 0.0 && self.c1 <= 1.0, || format!("C1 must lie in (0, 1], got {}", self.c1))?;
        ensure(self.c2 > 0.0 && self.c2.is_finite(), || format!("C2 must be > 0, got {}", self.c2))?;
        ensure(self.c3 > 0.0 && self.c3.is_finite(), || format!("C3 must be > 0, got {}", self.c3))
    }
}

/// `C1 = 2 r_a² / w_Z²`, `C2 = 2 / w_Z²`, `C3 = w_Z² / (4 σ_r²)`.
pub fn pointing_constants(w_z: f64, aperture_radius_m: f64, jitter: &JitterParams) -> Result<PointingConstants> {
    jitter.validate()?;
    ensure(w_z > 0.0 && aperture_radius_m > 0.0, || {
        format!("w_Z and r_a must be > 0, got {w_z}, {aperture_radius_m}")
    })?;
    let sr = jitter.sigma_r_m();
    if sr == 0.0 {
        return Err(Error::DegenerateJitter("sigma_r = 0 makes C3 infinite".into()));
    }
    let ratio = w_z / aperture_radius_m;
    if ratio < FAR_FIELD_RATIO_WARN {
        log::warn!("w_Z/r_a = {ratio:.3} is below {FAR_FIELD_RATIO_WARN}; far-field pointing loss is inaccurate");
    }
    let c1 = 2.0 * aperture_radius_m * aperture_radius_m / (w_z * w_z);
    ensure(c1 <= 1.0, || format!("C1 = {c1} exceeds 1 (w_Z = {w_z} m too small for r_a = {aperture_radius_m} m)"))?;
    Ok(PointingConstants {
        c1,
        c2: 2.0 / (w_z * w_z),
        c3: w_z * w_z / (4.0 * sr * sr),
    })
}

/// Rayleigh density of the radial displacement.
pub fn displacement_pdf(jitter: &JitterParams, r_d: f64) -> Result<f64> {
    ensure(r_d >= 0.0, || format!("displacement must be >= 0, got {r_d}"))?;
    let s = jitter.sigma_r_m();
    if s == 0.0 {
        return Err(Error::DegenerateJitter("sigma_r = 0".into()));
    }
    let v = s * s;
    Ok(r_d / v * (-r_d * r_d / (2.0 * v)).exp())
}

/// Far-field collected fraction `(2r_a²/w_Z²) exp(-2r_d²/w_Z²) cos θ_d`, clamped to [0, 1].
pub fn pointing_loss(w_z: f64, aperture_radius_m: f64, r_d: f64, theta_d: f64) -> f64 {
    let c1 = 2.0 * aperture_radius_m * aperture_radius_m / (w_z * w_z);
    (c1 * (-2.0 * r_d * r_d / (w_z * w_z)).exp() * theta_d.cos()).clamp(0.0, 1.0)
}

/// Gaussian intensity integrated over the displaced aperture disc, times `cos θ_d`.
pub fn pointing_loss_exact(
    w_z: f64,
    aperture_radius_m: f64,
    r_d: f64,
    theta_d: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    ensure(w_z > 0.0 && aperture_radius_m > 0.0 && r_d >= 0.0, || {
        format!("invalid pointing geometry w_Z={w_z}, r_a={aperture_radius_m}, r_d={r_d}")
    })?;
    let w2 = w_z * w_z;
    let a = aperture_radius_m;
    if r_d == 0.0 {
        return Ok((1.0 - (-2.0 * a * a / w2).exp()) * theta_d.cos().max(0.0));
    }
    // Azimuthal integral in closed form: exp(-2(ρ - r_d)²/w²) I0e(4ρ r_d / w²).
    let f = |rho: f64| {
        let d = rho - r_d;
        4.0 * rho / w2 * (-2.0 * d * d / w2).exp() * bessel_i0_scaled(4.0 * rho * r_d / w2)
    };
    let mut pts = vec![0.0];
    if r_d > 0.0 && r_d < a {
        pts.push(r_d);
    }
    pts.push(a);
    let v = crate::quadrature::integrate_with_breaks(f, &pts, quad)?;
    Ok((v * theta_d.cos().max(0.0)).clamp(0.0, 1.0))
}

/// Density of `h_pl` given `θ_d`, on the support `(0, C1 cos θ_d]`.
pub fn conditional_pl_pdf(pc: &PointingConstants, theta_d: f64, h_pl: f64) -> f64 {
    let peak = pc.c1 * theta_d.cos();
    if !(h_pl > 0.0 && h_pl <= peak) {
        return 0.0;
    }
    pc.c3 * peak.powf(-pc.c3) * h_pl.powf(pc.c3 - 1.0)
}

/// Distribution function matching [`conditional_pl_pdf`].
pub fn conditional_pl_cdf(pc: &PointingConstants, theta_d: f64, h_pl: f64) -> f64 {
    let peak = pc.c1 * theta_d.cos();
    if h_pl <= 0.0 {
        0.0
    } else if h_pl >= peak {
        1.0
    } else {
        (h_pl / peak).powf(pc.c3)
    }
}

/// Total mass of [`conditional_pl_pdf`] by quadrature (should be 1).
pub fn conditional_pl_mass(pc: &PointingConstants, theta_d: f64) -> Result<f64> {
    let peak = pc.c1 * theta_d.cos();
    // Substitute h = peak·u^(1/C3) to remove the endpoint singularity when C3 < 1.
    integrate(
        |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let h = peak * u.powf(1.0 / pc.c3);
            let dh = peak * u.powf(1.0 / pc.c3 - 1.0) / pc.c3;
            conditional_pl_pdf(pc, theta_d, h) * dh
        },
        0.0,
        1.0,
        &QuadratureSpec::default(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jitter(sd: f64, sb: f64) -> JitterParams {
        JitterParams::new(sd, sb, 0.01).unwrap()
    }

    #[test]
    fn waist_at_zero_distance() {
        let b = BeamParams::new(0.02, 1550e-9, 1.3).unwrap();
        assert_eq!(beam_waist_at(&b, 0.0).unwrap(), 0.02);
        assert!(beam_waist_at(&b, -1.0).is_err());
    }

    #[test]
    fn waist_at_20km_reference() {
        // w0 √(1 + (λZ/πw0²)²) at 30 digits for w0 = 2 cm.
        let b = BeamParams::new(0.02, 1550e-9, 1.0).unwrap();
        let w = beam_waist_at(&b, 20_000.0).unwrap();
        assert!((w - 0.493_785_523_988_620_5).abs() < 1e-13, "{w}");
    }

    #[test]
    fn waist_far_field_asymptote() {
        let b = BeamParams::new(0.01, 1550e-9, 2.0).unwrap();
        let z = 1e9;
        let asym = 2f64.sqrt() * 1550e-9 * z / (PI * 0.01);
        assert!((beam_waist_at(&b, z).unwrap() / asym - 1.0).abs() < 1e-9);
    }

    #[test]
    fn waist_inversion_round_trips() {
        let z = 15_320.888;
        let rho0 = 0.3;
        for w_z in [0.5, 1.0, 2.5] {
            let b = BeamParams::for_receiver_width(w_z, z, 1550e-9, rho0).unwrap();
            assert!((b.radius_at(z) / w_z - 1.0).abs() < 1e-12);
            assert!(b.waist_at_tx_m < (1550e-9 * z / PI).sqrt());
        }
        assert!(BeamParams::for_receiver_width(0.05, z, 1550e-9, rho0).is_err());
    }

    #[test]
    fn constants_examples() {
        let pc = pointing_constants(0.2, 0.1, &jitter(0.3, 0.0)).unwrap();
        assert!((pc.c1 - 0.5).abs() < 1e-15);
        let pc = pointing_constants(1.0, 0.05, &jitter(0.3, 0.4)).unwrap();
        assert!((pc.c3 - 1.0).abs() < 1e-12);
        assert!((pc.c2 - 2.0).abs() < 1e-15);
        assert!(matches!(
            pointing_constants(1.0, 0.05, &jitter(0.0, 0.0)),
            Err(Error::DegenerateJitter(_))
        ));
    }

    #[test]
    fn c1_matches_on_axis_disc_integral() {
        let q = QuadratureSpec::default();
        for ratio in [10.0, 20.0, 50.0] {
            let pc = pointing_constants(ratio * 0.05, 0.05, &jitter(0.3, 0.0)).unwrap();
            let exact = pointing_loss_exact(ratio * 0.05, 0.05, 0.0, 0.0, &q).unwrap();
            assert!(((pc.c1 - exact) / pc.c1).abs() < 0.01, "ratio {ratio}");
        }
    }

    #[test]
    fn constants_show_beam_width_tradeoff() {
        let j = jitter(0.3, 0.1);
        let a = pointing_constants(1.0, 0.05, &j).unwrap();
        let b = pointing_constants(1.5, 0.05, &j).unwrap();
        assert!(b.c1 < a.c1 && b.c3 > a.c3);
    }

    #[test]
    fn rayleigh_displacement() {
        let j = jitter(0.3, 0.4);
        let mode = j.sigma_r_m();
        let f = |r| displacement_pdf(&j, r).unwrap();
        assert!(f(mode) > f(0.99 * mode) && f(mode) > f(1.01 * mode));
        let mass = crate::quadrature::integrate_to_infinity(f, 0.0, &QuadratureSpec::default()).unwrap();
        assert!((mass - 1.0).abs() < 1e-9);
        assert!(displacement_pdf(&jitter(0.0, 0.0), 0.1).is_err());
    }

    #[test]
    fn pointing_loss_examples() {
        let on_axis = pointing_loss(1.0, 0.05, 0.0, 0.0);
        assert!((on_axis - 0.005).abs() < 1e-15);
        let tilted = pointing_loss(1.0, 0.05, 0.0, PI / 3.0);
        assert!((tilted - 0.0025).abs() < 1e-12);
        assert_eq!(pointing_loss(0.01, 0.05, 0.0, 0.0), 1.0);
    }

    #[test]
    fn exact_loss_matches_erf_closed_form_on_axis_and_decays() {
        let q = QuadratureSpec::default();
        let v = pointing_loss_exact(1.0, 0.3, 1e-12, 0.0, &q).unwrap();
        assert!((v - (1.0 - (-0.18f64).exp())).abs() < 1e-9);
        let mut prev = v;
        for k in 1..20 {
            let x = pointing_loss_exact(1.0, 0.3, 0.1 * k as f64, 0.0, &q).unwrap();
            assert!(x < prev);
            prev = x;
        }
    }

    #[test]
    fn conditional_pdf_uniform_when_c3_is_one() {
        let pc = PointingConstants { c1: 0.01, c2: 2.0, c3: 1.0 };
        for h in [0.001, 0.005, 0.0099] {
            assert!((conditional_pl_pdf(&pc, 0.0, h) - 100.0).abs() < 1e-9);
        }
        assert_eq!(conditional_pl_pdf(&pc, 0.0, 0.011), 0.0);
        assert_eq!(conditional_pl_pdf(&pc, 0.0, 0.0), 0.0);
    }

    #[test]
    fn conditional_pdf_is_normalized() {
        for c3 in [0.5, 1.0, 2.0, 5.0] {
            let pc = PointingConstants { c1: 0.02, c2: 2.0, c3 };
            for theta in [0.0, 0.3, 1.2] {
                let m = conditional_pl_mass(&pc, theta).unwrap();
                assert!((m - 1.0).abs() < 1e-9, "c3 {c3} theta {theta}: {m}");
            }
        }
    }
}
