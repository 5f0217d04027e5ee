use std::ffi::{CStr, CString};
use std::ptr;

use hapfso_ffi::*;

fn last_error() -> String {
    let p = hapfso_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

struct Handle(*mut HapfsoScenario);

impl Drop for Handle {
    fn drop(&mut self) {
        unsafe { hapfso_scenario_free(self.0) };
    }
}

fn default_handle() -> Handle {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hapfso_scenario_default(&mut h) }, HapfsoStatus::Ok);
    assert!(!h.is_null());
    Handle(h)
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    assert_eq!(unsafe { hapfso_cn2(0.0, 21.0, 1.7e-13, &mut v) }, HapfsoStatus::Ok);
    assert!((v - 1.7027e-13).abs() < 1e-25);
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { hapfso_gg_params(1.0, &mut a, &mut b) }, HapfsoStatus::Ok);
    assert!((a - 2.952864147232499).abs() < 1e-9 && (b - 2.563631979503695).abs() < 1e-9);
    assert!((hapfso_airy_fraction(25.0) - 0.991_945_741_171_411).abs() < 1e-12);
    assert!((hapfso_pointing_loss(1.0, 0.05, 0.0, 0.0) - 0.005).abs() < 1e-15);
    assert!(hapfso_pointing_loss(0.0, 0.05, 0.0, 0.0).is_nan());
    let ver = unsafe { CStr::from_ptr(hapfso_version()) }.to_str().unwrap();
    assert_eq!(ver, env!("CARGO_PKG_VERSION"));
}

#[test]
fn error_codes_and_messages() {
    hapfso_clear_error();
    assert!(hapfso_last_error_message().is_null());
    let mut v = 0.0;
    assert_eq!(unsafe { hapfso_cn2(-1.0, 21.0, 1.7e-13, &mut v) }, HapfsoStatus::InvalidArgument);
    assert!(last_error().contains("altitude"));
    assert_eq!(unsafe { hapfso_cn2(0.0, 21.0, 1.7e-13, ptr::null_mut()) }, HapfsoStatus::NullPointer);
    assert!(last_error().contains("out_cn2"));
    let (mut a, mut b) = (0.0, 0.0);
    assert_eq!(unsafe { hapfso_gg_params(0.0, &mut a, &mut b) }, HapfsoStatus::InvalidArgument);
    assert_eq!((a, b), (0.0, 0.0));
    let mut o = HapfsoOutage::default();
    assert_eq!(unsafe { hapfso_outage(ptr::null(), &mut o) }, HapfsoStatus::NullPointer);
}

#[test]
fn toml_handles() {
    let text = CString::new("[transceiver]\np_t_dbm = -20.0\n[simulation]\ntrials = 200000\n").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { hapfso_scenario_from_toml(text.as_ptr(), &mut h) }, HapfsoStatus::Ok);
    let h = Handle(h);
    let mut o = HapfsoOutage::default();
    assert_eq!(unsafe { hapfso_outage(h.0, &mut o) }, HapfsoStatus::Ok);
    assert!(o.p_out > 1e-4 && o.p_out < 1e-1, "{o:?}");
    let mut s = HapfsoSimSummary::default();
    assert_eq!(unsafe { hapfso_simulate(h.0, &mut s) }, HapfsoStatus::Ok);
    assert_eq!(s.n_trials, 200_000);
    assert!((s.outage / o.p_out - 1.0).abs() < 0.5, "{s:?} vs {o:?}");

    let bad = CString::new("[geometry]\nzenith = 3.0\n").unwrap();
    let mut h2 = ptr::null_mut();
    assert_eq!(unsafe { hapfso_scenario_from_toml(bad.as_ptr(), &mut h2) }, HapfsoStatus::Config);
    assert!(h2.is_null());
    assert!(last_error().contains("zenith"));
    unsafe { hapfso_scenario_free(ptr::null_mut()) };
}

#[test]
fn setters_and_path_quantities() {
    let h = default_handle();
    let mut r = 0.0;
    assert_eq!(unsafe { hapfso_rytov_variance(h.0, &mut r) }, HapfsoStatus::Ok);
    assert!((r - 0.181793).abs() < 1e-5);
    let mut o1 = HapfsoOutage::default();
    let mut o2 = HapfsoOutage::default();
    assert_eq!(unsafe { hapfso_outage(h.0, &mut o1) }, HapfsoStatus::Ok);
    assert_eq!(unsafe { hapfso_scenario_set_transmit_power_dbm(h.0, -10.0) }, HapfsoStatus::Ok);
    assert_eq!(unsafe { hapfso_outage(h.0, &mut o2) }, HapfsoStatus::Ok);
    assert!(o2.p_out > o1.p_out);
    assert_eq!(unsafe { hapfso_scenario_set_fov(h.0, 0.0) }, HapfsoStatus::InvalidArgument);
    assert_eq!(unsafe { hapfso_scenario_set_beam_width(h.0, -1.0) }, HapfsoStatus::InvalidArgument);
    assert_eq!(unsafe { hapfso_scenario_set_simulation(h.0, 10, 1) }, HapfsoStatus::Config);
    assert_eq!(unsafe { hapfso_scenario_set_beam_width(h.0, 1.5) }, HapfsoStatus::Ok);
}

#[test]
fn fov_optimum() {
    let h = default_handle();
    let (mut t, mut p) = (0.0, 0.0);
    assert_eq!(unsafe { hapfso_optimize_fov(h.0, 0.005, 0.3, 64, &mut t, &mut p) }, HapfsoStatus::Ok);
    assert!(t > 0.005 && t < 0.3 && p > 0.0 && p < 1.0);
    let mut o = HapfsoOutage::default();
    assert_eq!(unsafe { hapfso_scenario_set_fov(h.0, t) }, HapfsoStatus::Ok);
    assert_eq!(unsafe { hapfso_outage(h.0, &mut o) }, HapfsoStatus::Ok);
    assert!((o.p_out / p - 1.0).abs() < 1e-9);
    assert_eq!(unsafe { hapfso_optimize_fov(h.0, 0.3, 0.005, 64, &mut t, &mut p) }, HapfsoStatus::InvalidArgument);
}

#[test]
fn errors_are_thread_local() {
    let mut v = 0.0;
    assert_eq!(unsafe { hapfso_cn2(-1.0, 21.0, 1.7e-13, &mut v) }, HapfsoStatus::InvalidArgument);
    std::thread::spawn(|| assert!(hapfso_last_error_message().is_null())).join().unwrap();
    assert!(!hapfso_last_error_message().is_null());
}

#[test]
fn header_is_valid_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/hapfso.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in ["hapfso_scenario_default", "hapfso_outage", "hapfso_simulate", "HAPFSO_STATUS_CONFIG"] {
        assert!(text.contains(sym), "{sym} missing from header");
    }
    let Ok(status) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-std=c99", "-x", "c", header])
        .status()
    else {
        eprintln!("no C compiler; skipping syntax check");
        return;
    };
    assert!(status.success());
}
