//! Angle-of-arrival fluctuations and the receiver field of view.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::special::{bessel_j0, bessel_j1};

/// Photodetector behind a focusing lens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReceiverFov {
    pub detector_radius_m: f64,
    pub focal_length_m: f64,
    pub theta_fov_rad: f64,
}

impl ReceiverFov {
    /// Field of view `2 arctan(r_p / f_c)` from the optics.
    pub fn from_optics(detector_radius_m: f64, focal_length_m: f64) -> Result<Self> {
        ensure(detector_radius_m > 0.0 && focal_length_m > 0.0, || {
            format!("detector radius and focal length must be > 0, got {detector_radius_m}, {focal_length_m}")
        })?;
        Ok(Self {
            detector_radius_m,
            focal_length_m,
            theta_fov_rad: 2.0 * (detector_radius_m / focal_length_m).atan(),
        })
    }

    /// Field of view set directly; the focal length is chosen to match it.
    pub fn from_angle(theta_fov_rad: f64, detector_radius_m: f64) -> Result<Self> {
        ensure(theta_fov_rad > 0.0 && theta_fov_rad < PI, || {
            format!("field of view must lie in (0, pi), got {theta_fov_rad}")
        })?;
        ensure(detector_radius_m > 0.0, || format!("detector radius must be > 0, got {detector_radius_m}"))?;
        Ok(Self {
            detector_radius_m,
            focal_length_m: detector_radius_m / (0.5 * theta_fov_rad).tan(),
            theta_fov_rad,
        })
    }

    pub fn with_angle(&self, theta_fov_rad: f64) -> Result<Self> {
        Self::from_angle(theta_fov_rad, self.detector_radius_m)
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.theta_fov_rad > 0.0 && self.theta_fov_rad < PI, || {
            format!("field of view must lie in (0, pi), got {}", self.theta_fov_rad)
        })?;
        ensure(self.detector_radius_m > 0.0 && self.focal_length_m > 0.0, || {
            format!("detector radius and focal length must be > 0, got {self:?}")
        })
    }

    /// `Ω = 2π (1 - cos(θ_FOV / 2))`.
    pub fn solid_angle_sr(&self) -> f64 {
        2.0 * PI * (1.0 - (0.5 * self.theta_fov_rad).cos())
    }

    /// Image shift on the detector plane for an incidence deviation `θ_d`.
    pub fn focal_plane_shift(&self, theta_d: f64) -> f64 {
        self.focal_length_m * theta_d.tan()
    }
}

/// Rayleigh density of the angle-of-arrival deviation.
pub fn theta_d_pdf(sigma_o_rad: f64, theta_d: f64) -> Result<f64> {
    ensure(theta_d >= 0.0, || format!("theta_d must be >= 0, got {theta_d}"))?;
    if sigma_o_rad <= 0.0 {
        return Err(Error::DegenerateJitter(format!("sigma_o must be > 0, got {sigma_o_rad}")));
    }
    let v = sigma_o_rad * sigma_o_rad;
    Ok(theta_d / v * (-theta_d * theta_d / (2.0 * v)).exp())
}

/// Probability that the deviation stays inside the field of view.
pub fn capture_probability(theta_fov_rad: f64, sigma_o_rad: f64) -> f64 {
    if sigma_o_rad == 0.0 {
        return 1.0;
    }
    -(-theta_fov_rad * theta_fov_rad / (2.0 * sigma_o_rad * sigma_o_rad)).exp_m1()
}

/// Fraction of Airy-pattern power inside radius `ψ`, given as `ψ / λ`.
pub fn airy_fraction(psi_over_lambda: f64) -> f64 {
    let x = PI * psi_over_lambda.abs();
    let j0 = bessel_j0(x);
    let j1 = bessel_j1(x);
    (1.0 - j0 * j0 - j1 * j1).clamp(0.0, 1.0)
}

/// AOA loss including side-lobe leakage outside the field of view.
pub fn aoa_loss_exact(fov: &ReceiverFov, theta_d: f64, wavelength_m: f64) -> f64 {
    let rp = fov.detector_radius_m;
    let main = airy_fraction(rp / wavelength_m);
    if theta_d <= fov.theta_fov_rad {
        return main;
    }
    let rd = fov.focal_plane_shift(theta_d.min(0.5 * PI - 1e-12));
    let outer = airy_fraction((rd + rp) / wavelength_m);
    let inner = airy_fraction((rd - rp) / wavelength_m);
    (rp / (4.0 * rd) * (outer - inner)).clamp(0.0, 1.0)
}

/// Hard gate: 1 strictly inside the field of view, 0 otherwise.
pub fn aoa_loss_gate(fov: &ReceiverFov, theta_d: f64) -> f64 {
    if theta_d < fov.theta_fov_rad {
        1.0
    } else {
        0.0
    }
}
