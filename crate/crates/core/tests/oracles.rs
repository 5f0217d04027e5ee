mod common;

use std::f64::consts::PI;

use common::{composite_gl, hv, ks_distance, rng, uniform};
use hapfso::atmosphere::{
    beam_wander_variance, cn2_at, coherence_length, rytov_variance, AtmosphereProfile, CoherenceForm, LinkGeometry,
};
use hapfso::link::LinkScenario;
use hapfso::montecarlo::{simulate, simulate_thresholds, AoaMode, SimConfig};
use hapfso::pointing::{conditional_pl_cdf, pointing_loss_exact, JitterParams, pointing_constants};
use hapfso::quadrature::QuadratureSpec;
use hapfso::turbulence::TurbulenceModel;
use rand_distr::{Distribution, StandardNormal};

const PANELS: usize = 10_000;

struct Case {
    geom: LinkGeometry,
    prof: AtmosphereProfile,
    lambda: f64,
}

fn cases() -> Vec<Case> {
    let mut r = rng(2024);
    (0..20)
        .map(|_| {
            let h0 = uniform(&mut r, 0.0, 500.0);
            Case {
                geom: LinkGeometry::new(uniform(&mut r, 10_000.0, 25_000.0), h0, uniform(&mut r, 0.0, 70f64.to_radians()))
                    .unwrap(),
                prof: AtmosphereProfile::new(uniform(&mut r, 5.0, 40.0), 10f64.powf(uniform(&mut r, -15.0, -12.0)), 0.0)
                    .unwrap(),
                lambda: uniform(&mut r, 800e-9, 1600e-9),
            }
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

#[test]
fn cn2_matches_independent_profile() {
    let p = AtmosphereProfile::new(21.0, 1.7e-13, 0.0).unwrap();
    for k in 0..=200 {
        let h = 10f64.powf(6.0 * k as f64 / 200.0) - 1.0;
        let v = cn2_at(h, &p).unwrap();
        assert!(v > 0.0);
        assert!(rel(v, hv(h, 21.0, 1.7e-13)) < 1e-14, "h={h}");
    }
}

#[test]
fn path_integrals_match_composite_gauss_legendre() {
    let quad = QuadratureSpec::default();
    let tol = 10.0 * quad.relative_tolerance;
    for c in cases() {
        let (g, p) = (&c.geom, &c.prof);
        let (h0, hh) = (g.tx_altitude_m, g.hap_altitude_m);
        let sec = 1.0 / g.zenith_angle_rad.cos();
        let k = 2.0 * PI / c.lambda;
        let f = |h: f64| hv(h, p.rms_wind_speed_mps, p.ground_cn2);

        let span = hh - h0;
        let i = composite_gl(|h| f(h) * ((h - h0) * (1.0 - (h - h0) / span)).powf(5.0 / 6.0), h0, hh, PANELS, 3);
        let rytov = 2.25 * k.powf(7.0 / 6.0) * sec.powf(11.0 / 6.0) * i;
        let got = rytov_variance(g, p, c.lambda, &quad).unwrap();
        assert!(rel(got, rytov) < tol, "rytov {got} vs {rytov}");

        let z = span * sec;
        let w = |h: f64| 0.02 + 3e-5 * (h - h0) * sec;
        let i = composite_gl(|h| f(h) * (z - (h - h0) * sec).powi(2) * w(h).powf(-1.0 / 3.0), h0, hh, PANELS, 3);
        let got = beam_wander_variance(g, p, w, &quad).unwrap();
        assert!(rel(got, 2.07 * i) < tol, "wander {got} vs {}", 2.07 * i);

        let lo = h0.max(1.0);
        let i = composite_gl(|h| (0.55 * f(h) * k * k * h).powf(-0.6), lo, hh, PANELS, 3);
        let got = coherence_length(g, p, c.lambda, CoherenceForm::AsPrinted, &quad).unwrap();
        assert!(rel(got, i) < tol, "coherence {got} vs {i}");

        let i = composite_gl(|h| f(h) * ((h - h0) / span).powf(5.0 / 3.0), h0, hh, PANELS, 3);
        let std = (1.46 * k * k * sec * i).powf(-0.6);
        let got = coherence_length(g, p, c.lambda, CoherenceForm::Standard, &quad).unwrap();
        assert!(rel(got, std) < tol, "standard coherence {got} vs {std}");
    }
}

#[test]
fn gamma_gamma_pdf_matches_high_precision_bessel_reference() {
    // 40-digit values of 2(αβ)^((α+β)/2) h^((α+β)/2-1) K_{α-β}(2√(αβh)) / (Γ(α)Γ(β)).
    let refs: [(f64, f64, [f64; 6]); 4] = [
        (4.2, 1.4, [0.182_971_877_158_898_32, 0.4465371816880658, 0.831_347_002_210_642_7, 0.373_008_681_073_649_26, 0.072_477_269_627_098_52, 0.000_232_407_649_580_787_4]),
        (4.0000001, 1.0, [1.330_671_944_832_745, 1.307_171_904_465_644_5, 0.799_050_131_810_382_2, 0.318_772_528_257_157_63, 0.071_119_072_580_923_02, 0.000_531_826_586_729_288_4]),
        (3.0, 2.0, [0.017_462_055_124_450_215, 0.149_919_247_587_342_18, 0.853_912_883_922_776_6, 0.399_138_033_396_940_26, 0.071_052_615_881_123_31, 0.000_170_025_908_920_870_56]),
        (12.077, 11.409, [2.555_321_342_091_742_4e-22, 1.514_807_649_426_645e-12, 0.126_712_794_226_356, 0.947_720_098_606_162_9, 0.016_845_910_307_599_483, 2.645_504_537_405_753e-12]),
    ];
    let hs = [0.001, 0.01, 0.3, 1.0, 2.5, 10.0];
    for (a, b, vals) in refs {
        let m = TurbulenceModel::gamma_gamma(a, b).unwrap();
        for (h, want) in hs.iter().zip(vals) {
            let got = m.pdf(*h).unwrap();
            assert!(rel(got, want) < 1e-8, "α={a} β={b} h={h}: {got:e} vs {want:e}");
        }
    }
}

#[test]
fn pointing_loss_matches_cartesian_disc_quadrature() {
    // Gaussian intensity 2/(πw²) exp(-2|ρ - r_d|²/w²) over the aperture disc,
    // integrated over x, with each chord in y done by Gauss–Legendre.
    let quad = QuadratureSpec::new(1e-11, 2000).unwrap();
    for (w, a, rd) in [(1.0, 0.05, 0.0), (1.0, 0.05, 0.7), (0.5, 0.05, 0.3), (0.3, 0.1, 0.05), (2.0, 0.05, 3.0)] {
        let inner = |x: f64| {
            let half = (a * a - x * x).max(0.0).sqrt();
            composite_gl(
                |y| 2.0 / (PI * w * w) * (-2.0 * ((x - rd).powi(2) + y * y) / (w * w)).exp(),
                -half,
                half,
                40,
                1,
            )
        };
        let oracle = composite_gl(inner, -a, a, 400, 1);
        let got = pointing_loss_exact(w, a, rd, 0.0, &quad).unwrap();
        assert!(rel(got, oracle) < 1e-6, "w={w} a={a} rd={rd}: {got:e} vs {oracle:e}");
    }
}

#[test]
fn pointing_cdf_matches_sampled_displacements() {
    let jit = JitterParams::new(0.4, 0.25, 0.01).unwrap();
    let (w, a) = (1.2, 0.05);
    let pc = pointing_constants(w, a, &jit).unwrap();
    let s = jit.sigma_r_m();
    let mut r = rng(9);
    let hs: Vec<f64> = (0..100_000)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut r);
            let y: f64 = StandardNormal.sample(&mut r);
            let d2 = s * s * (x * x + y * y);
            pc.c1 * (-2.0 * d2 / (w * w)).exp()
        })
        .collect();
    let d = ks_distance(hs, |h| conditional_pl_cdf(&pc, 0.0, h));
    assert!(d < 0.01, "KS {d}");
}

#[test]
fn sampled_density_follows_the_power_law() {
    let link = LinkScenario::nominal().derive().unwrap();
    let cfg = SimConfig::default();
    let res = simulate(&link, &cfg).unwrap();
    let h_ref = link.terms.h_al * link.pointing.c1;
    let pts: Vec<(f64, f64)> = res
        .histogram
        .centers()
        .into_iter()
        .zip(res.histogram.densities())
        .filter(|(h, d)| *h > 1e-3 * h_ref && *h < 1e-2 * h_ref && *d > 0.0)
        .map(|(h, d)| (h.ln(), d.ln()))
        .collect();
    assert!(pts.len() >= 5);
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let want = link.pointing.c3 - 1.0;
    assert!((slope - want).abs() < 0.05, "slope {slope} vs {want}");
}

#[test]
fn sampled_outage_is_monotone_in_power() {
    let link = LinkScenario::nominal().derive().unwrap();
    let powers: Vec<f64> = (0..10).map(|k| -50.0 + 5.0 * k as f64).collect();
    let h: Vec<f64> = powers.iter().map(|&p| link.h_th_at_dbm(p)).collect();
    let cfg = SimConfig {
        n_trials: 500_000,
        ..SimConfig::default()
    };
    let (_, est) = simulate_thresholds(&link, &h, &cfg).unwrap();
    for w in est.windows(2) {
        assert!(w[1].estimate <= w[0].estimate);
    }
}

#[test]
fn exact_airy_and_gate_agree_for_wide_fov() {
    let s = LinkScenario::nominal().with_fov_angle(0.025).unwrap().with_transmit_power_dbm(-30.0);
    let link = s.derive().unwrap();
    let gate = SimConfig {
        n_trials: 1_000_000,
        ..SimConfig::default()
    };
    let exact = SimConfig {
        aoa_mode: AoaMode::ExactAiry,
        ..gate
    };
    let a = simulate(&link, &gate).unwrap().outage;
    let b = simulate(&link, &exact).unwrap().outage;
    let band = a.ci_half_width + b.ci_half_width;
    assert!((a.estimate - b.estimate).abs() <= band, "{a:?} vs {b:?}");
}
