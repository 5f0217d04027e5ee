//! Analytic-vs-sampler and analytic-vs-quadrature checks at one configuration.

use serde::Serialize;

use crate::aoa::airy_fraction;
use crate::channel::{composite_pdf_by_mixing, conditional_composite_pdf, outage_floor};
use crate::config::RunConfig;
use crate::error::Result;
use crate::montecarlo::{replay_determinism, simulate_thresholds};
use crate::pointing::pointing_loss_exact;
use crate::quadrature::{integrate_to_infinity, QuadratureSpec};

/// Deliberate faults for negative-control tests.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hooks {
    /// Multiplies `C1` before the pointing-loss oracle sees it.
    pub corrupt_c1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    /// Pass band, human-readable.
    pub expected: String,
    pub observed: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub config_hash: String,
    pub seed: u64,
    pub n_trials: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub const POINTING_REL_TOL: f64 = 0.02;
pub const PDF_MASS_TOL: f64 = 1e-6;
pub const MIXING_REL_TOL: f64 = 0.02;
pub const MC_REL_TOL: f64 = 0.5;
pub const MC_BAND: (f64, f64) = (1e-4, 1e-1);
pub const ZERO_MASS_SIGMAS: f64 = 3.0;
pub const DETERMINISM_WORKERS: [usize; 2] = [1, 4];

fn check(name: impl Into<String>, expected: impl Into<String>, observed: f64, passed: bool) -> Check {
    Check {
        name: name.into(),
        expected: expected.into(),
        observed,
        passed,
    }
}

fn failed(name: &str, e: impl std::fmt::Display) -> Check {
    check(name, format!("no error ({e})"), f64::NAN, false)
}

/// Runs every check. Only configuration problems are returned as errors;
/// numerical failures become failed checks.
pub fn run(cfg: &RunConfig, hooks: &Hooks) -> Result<ValidationReport> {
    let s = &cfg.scenario;
    let link = s.derive()?;
    let quad = QuadratureSpec::new(1e-10, 2000)?;
    let mut checks = Vec::new();

    let c1 = link.pointing.c1 * hooks.corrupt_c1.unwrap_or(1.0);
    let w = link.beam_width_m;
    for (label, r_d) in [("on_axis", 0.0), ("half_width", 0.5 * w)] {
        let name = format!("pointing_loss_{label}");
        match pointing_loss_exact(w, link.aperture_radius_m, r_d, 0.0, &quad) {
            Ok(exact) => {
                let approx = c1 * (-2.0 * r_d * r_d / (w * w)).exp();
                let rel = (approx / exact - 1.0).abs();
                checks.push(check(name, format!("relative error <= {POINTING_REL_TOL}"), rel, rel <= POINTING_REL_TOL));
            }
            Err(e) => checks.push(failed(&name, e)),
        }
    }

    let model = link.terms.model;
    let mass = integrate_to_infinity(|x| model.pdf(x).unwrap_or(0.0), 0.0, &quad);
    let mean = integrate_to_infinity(|x| x * model.pdf(x).unwrap_or(0.0), 0.0, &quad);
    match (mass, mean) {
        (Ok(m), Ok(mu)) => {
            let dev = (m - 1.0).abs().max((mu - 1.0).abs());
            checks.push(check(
                "turbulence_pdf_mass_and_mean",
                format!("|mass - 1|, |mean - 1| <= {PDF_MASS_TOL}"),
                dev,
                dev <= PDF_MASS_TOL,
            ));
        }
        (Err(e), _) | (_, Err(e)) => checks.push(failed("turbulence_pdf_mass_and_mean", e)),
    }

    let h_ref = link.terms.h_al * link.pointing.c1;
    let mut worst: f64 = 0.0;
    let mut mix_err = None;
    for u in [1e-4, 1e-3] {
        let h = u * h_ref;
        let closed = conditional_composite_pdf(&model, &link.pointing, link.terms.h_al, 0.0, h);
        let num = composite_pdf_by_mixing(&model, &link.pointing, link.terms.h_al, 0.0, h, &quad);
        match (closed, num) {
            (Ok(c), Ok(n)) => worst = worst.max((c / n - 1.0).abs()),
            (Err(e), _) | (_, Err(e)) => mix_err = Some(e),
        }
    }
    checks.push(match mix_err {
        Some(e) => failed("composite_pdf_vs_mixing_integral", e),
        None => check(
            "composite_pdf_vs_mixing_integral",
            format!("relative error <= {MIXING_REL_TOL}"),
            worst,
            worst <= MIXING_REL_TOL,
        ),
    });

    let first_dark = 3.831_705_970_207_512 / std::f64::consts::PI;
    let l = airy_fraction(first_dark);
    checks.push(check("airy_first_dark_ring", "0.8378 +- 1e-3", l, (l - 0.8378).abs() <= 1e-3));
    let l = airy_fraction(25.0);
    checks.push(check("airy_25_lambda", "> 0.99", l, l > 0.99));

    let h_ths: Vec<f64> = (0..=40).map(|k| h_ref * 10f64.powf(-4.0 + 0.1 * k as f64)).collect();
    match simulate_thresholds(&link, &h_ths, &cfg.simulation) {
        Ok((res, est)) => {
            let floor = outage_floor(link.fov.theta_fov_rad, link.jitter.sigma_o_rad);
            let se = (floor * (1.0 - floor) / res.n_trials as f64).sqrt();
            let dev = (res.zero_mass - floor).abs();
            let band = ZERO_MASS_SIGMAS * se + 1.0 / res.n_trials as f64;
            checks.push(check(
                "zero_mass_vs_floor",
                format!("|zero_mass - exp(-theta_fov^2/(2 sigma_o^2))| <= {band:.3e}"),
                dev,
                dev <= band,
            ));
            let mut worst: f64 = 0.0;
            let mut compared = 0;
            for e in &est {
                if e.insufficient_trials || e.estimate < MC_BAND.0 || e.estimate > MC_BAND.1 {
                    continue;
                }
                let cf = link.outage_at(e.h_th)?.p_out;
                worst = worst.max((cf - e.estimate).abs() / e.estimate);
                compared += 1;
            }
            checks.push(check(
                "outage_closed_form_vs_mc",
                format!("relative error <= {MC_REL_TOL} where MC in [{:e}, {:e}], at least one point", MC_BAND.0, MC_BAND.1),
                worst,
                compared > 0 && worst <= MC_REL_TOL,
            ));
        }
        Err(e) => {
            checks.push(failed("zero_mass_vs_floor", &e));
            checks.push(failed("outage_closed_form_vs_mc", &e));
        }
    }

    match replay_determinism(&link, &cfg.simulation, &DETERMINISM_WORKERS) {
        Ok(same) => checks.push(check(
            "mc_determinism_across_workers",
            "bit-identical",
            if same { 1.0 } else { 0.0 },
            same,
        )),
        Err(e) => checks.push(failed("mc_determinism_across_workers", e)),
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(ValidationReport {
        config_hash: cfg.hash(),
        seed: cfg.simulation.seed,
        n_trials: cfg.simulation.n_trials,
        passed,
        checks,
    })
}
