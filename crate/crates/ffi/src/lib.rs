//! C ABI over `hapfso`.
//!
//! Every fallible call returns a [`HapfsoStatus`]; on failure the message is
//! kept per thread and read back with [`hapfso_last_error_message`]. Outputs
//! are written through caller-owned pointers only on success. Scenario
//! handles are opaque and must be released with [`hapfso_scenario_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hapfso::aoa::airy_fraction;
use hapfso::atmosphere::{cn2_at, AtmosphereProfile};
use hapfso::config::RunConfig;
use hapfso::montecarlo::simulate;
use hapfso::optimize::{optimize_fov, GridScale, SweepGrid, SweepVariable};
use hapfso::pointing::pointing_loss;
use hapfso::turbulence::gg_params_from_rytov;
use hapfso::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HapfsoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Quadrature = 4,
    DegenerateJitter = 5,
    ParameterRegion = 6,
    Panic = 7,
}

/// Opaque scenario plus simulation settings.
pub struct HapfsoScenario {
    cfg: RunConfig,
}

/// Closed-form outage and its parts.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HapfsoOutage {
    pub p_out: f64,
    pub floor: f64,
    pub ln_smooth: f64,
    pub h_th: f64,
    pub beyond_validity: bool,
}

/// Summary of one Monte-Carlo run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct HapfsoSimSummary {
    pub n_trials: u64,
    pub outage: f64,
    pub ci_half_width: f64,
    pub insufficient_trials: bool,
    pub zero_mass: f64,
    pub mean_snr: f64,
    pub mean_snr_db_given_link: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> HapfsoStatus {
    match e {
        Error::Domain(_) => HapfsoStatus::InvalidArgument,
        Error::Quadrature { .. } => HapfsoStatus::Quadrature,
        Error::DegenerateJitter(_) => HapfsoStatus::DegenerateJitter,
        Error::ParameterRegion(_) => HapfsoStatus::ParameterRegion,
        Error::Config(_) => HapfsoStatus::Config,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> HapfsoStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => HapfsoStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            HapfsoStatus::NullPointer
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            HapfsoStatus::Panic
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    // SAFETY: caller promises `p` is null or valid for writes.
    unsafe { p.as_mut() }.ok_or(Fail::Null(what))
}

unsafe fn scn<'a>(p: *const HapfsoScenario) -> Result<&'a HapfsoScenario, Fail> {
    // SAFETY: caller promises `p` is null or a live handle.
    unsafe { p.as_ref() }.ok_or(Fail::Null("scenario"))
}

unsafe fn scn_mut<'a>(p: *mut HapfsoScenario) -> Result<&'a mut HapfsoScenario, Fail> {
    // SAFETY: caller promises `p` is null or a live handle not aliased elsewhere.
    unsafe { p.as_mut() }.ok_or(Fail::Null("scenario"))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hapfso_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn hapfso_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn hapfso_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// New handle holding the nominal scenario.
///
/// # Safety
/// `out_handle` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hapfso_scenario_default(out_handle: *mut *mut HapfsoScenario) -> HapfsoStatus {
    guard(|| {
        let o = unsafe { out(out_handle, "out_handle") }?;
        *o = Box::into_raw(Box::new(HapfsoScenario {
            cfg: RunConfig::default(),
        }));
        Ok(())
    })
}

/// New handle from TOML text in the run-configuration format.
///
/// # Safety
/// `toml` must be null or a NUL-terminated string; `out_handle` must be null
/// or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hapfso_scenario_from_toml(
    toml: *const c_char,
    out_handle: *mut *mut HapfsoScenario,
) -> HapfsoStatus {
    guard(|| {
        if toml.is_null() {
            return Err(Fail::Null("toml"));
        }
        let o = unsafe { out(out_handle, "out_handle") }?;
        // SAFETY: checked non-null; caller guarantees NUL termination.
        let text = unsafe { CStr::from_ptr(toml) }
            .to_str()
            .map_err(|e| Error::Config(format!("config is not UTF-8: {e}")))?;
        let cfg = RunConfig::from_toml_str(text)?;
        *o = Box::into_raw(Box::new(HapfsoScenario { cfg }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `handle` must be null or come from a constructor above, and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn hapfso_scenario_free(handle: *mut HapfsoScenario) {
    if !handle.is_null() {
        // SAFETY: produced by Box::into_raw in a constructor.
        drop(unsafe { Box::from_raw(handle) });
    }
}

/// Sets the transmit power (dBm).
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hapfso_scenario_set_transmit_power_dbm(handle: *mut HapfsoScenario, p_t_dbm: f64) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn_mut(handle) }?;
        let s = h.cfg.scenario.with_transmit_power_dbm(p_t_dbm);
        s.validate()?;
        h.cfg.scenario = s;
        Ok(())
    })
}

/// Sets the beam radius at the receiver (m).
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hapfso_scenario_set_beam_width(handle: *mut HapfsoScenario, w_z_m: f64) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn_mut(handle) }?;
        let s = h.cfg.scenario.with_beam_width(w_z_m);
        s.validate()?;
        h.cfg.scenario = s;
        Ok(())
    })
}

/// Sets the receiver field of view (rad).
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hapfso_scenario_set_fov(handle: *mut HapfsoScenario, theta_fov_rad: f64) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn_mut(handle) }?;
        h.cfg.scenario = h.cfg.scenario.with_fov_angle(theta_fov_rad)?;
        Ok(())
    })
}

/// Sets the sampler trial count and seed.
///
/// # Safety
/// `handle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn hapfso_scenario_set_simulation(handle: *mut HapfsoScenario, n_trials: u64, seed: u64) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn_mut(handle) }?;
        let mut sim = h.cfg.simulation;
        sim.n_trials = n_trials;
        sim.seed = seed;
        sim.validate()?;
        h.cfg.simulation = sim;
        Ok(())
    })
}

/// Hufnagel–Valley `C_n²` at `altitude_m` (m⁻²ᐟ³).
///
/// # Safety
/// `out_cn2` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hapfso_cn2(
    altitude_m: f64,
    wind_speed_mps: f64,
    ground_cn2: f64,
    out_cn2: *mut f64,
) -> HapfsoStatus {
    guard(|| {
        let o = unsafe { out(out_cn2, "out_cn2") }?;
        let p = AtmosphereProfile::new(wind_speed_mps, ground_cn2, 0.0)?;
        *o = cn2_at(altitude_m, &p)?;
        Ok(())
    })
}

/// Rytov variance of the handle's path.
///
/// # Safety
/// `handle` must be null or a live handle; `out_rytov` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hapfso_rytov_variance(handle: *const HapfsoScenario, out_rytov: *mut f64) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn(handle) }?;
        let o = unsafe { out(out_rytov, "out_rytov") }?;
        *o = h.cfg.scenario.path_terms()?.rytov_variance;
        Ok(())
    })
}

/// Gamma-gamma `α`, `β` for a Rytov variance.
///
/// # Safety
/// `out_alpha` and `out_beta` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn hapfso_gg_params(rytov: f64, out_alpha: *mut f64, out_beta: *mut f64) -> HapfsoStatus {
    guard(|| {
        let a = unsafe { out(out_alpha, "out_alpha") }?;
        let b = unsafe { out(out_beta, "out_beta") }?;
        let (alpha, beta) = gg_params_from_rytov(rytov)?;
        *a = alpha;
        *b = beta;
        Ok(())
    })
}

/// Fraction of Airy-pattern power inside radius `ψ`, given as `ψ / λ`.
#[no_mangle]
pub extern "C" fn hapfso_airy_fraction(psi_over_lambda: f64) -> f64 {
    airy_fraction(psi_over_lambda)
}

/// Far-field pointing loss; NaN for non-positive widths.
#[no_mangle]
pub extern "C" fn hapfso_pointing_loss(w_z_m: f64, aperture_radius_m: f64, r_d_m: f64, theta_d_rad: f64) -> f64 {
    if !(w_z_m > 0.0 && aperture_radius_m > 0.0) {
        return f64::NAN;
    }
    pointing_loss(w_z_m, aperture_radius_m, r_d_m, theta_d_rad)
}

/// Closed-form outage at the handle's transmit power.
///
/// # Safety
/// `handle` must be null or a live handle; `out_outage` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hapfso_outage(handle: *const HapfsoScenario, out_outage: *mut HapfsoOutage) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn(handle) }?;
        let o = unsafe { out(out_outage, "out_outage") }?;
        let link = h.cfg.scenario.derive()?;
        let b = link.outage()?;
        *o = HapfsoOutage {
            p_out: b.p_out,
            floor: b.floor,
            ln_smooth: b.ln_smooth,
            h_th: link.h_th,
            beyond_validity: b.beyond_validity,
        };
        Ok(())
    })
}

/// Monte-Carlo run with the handle's simulation settings.
///
/// # Safety
/// `handle` must be null or a live handle; `out_summary` null or writable.
#[no_mangle]
pub unsafe extern "C" fn hapfso_simulate(handle: *const HapfsoScenario, out_summary: *mut HapfsoSimSummary) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn(handle) }?;
        let o = unsafe { out(out_summary, "out_summary") }?;
        let r = simulate(&h.cfg.scenario.derive()?, &h.cfg.simulation)?;
        *o = HapfsoSimSummary {
            n_trials: r.n_trials,
            outage: r.outage.estimate,
            ci_half_width: r.outage.ci_half_width,
            insufficient_trials: r.outage.insufficient_trials,
            zero_mass: r.zero_mass,
            mean_snr: r.mean_snr,
            mean_snr_db_given_link: r.mean_snr_db_given_link,
        };
        Ok(())
    })
}

/// Field of view minimizing closed-form outage over a linear grid.
///
/// # Safety
/// `handle` must be null or a live handle; the output pointers null or
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hapfso_optimize_fov(
    handle: *const HapfsoScenario,
    lo_rad: f64,
    hi_rad: f64,
    n_points: usize,
    out_theta_rad: *mut f64,
    out_p_out: *mut f64,
) -> HapfsoStatus {
    guard(|| {
        let h = unsafe { scn(handle) }?;
        let t = unsafe { out(out_theta_rad, "out_theta_rad") }?;
        let p = unsafe { out(out_p_out, "out_p_out") }?;
        let g = SweepGrid::new(SweepVariable::ThetaFov, lo_rad, hi_rad, n_points, GridScale::Linear)?;
        let r = optimize_fov(&h.cfg.scenario, &g)?;
        *t = r.argmin;
        *p = r.p_out;
        Ok(())
    })
}
