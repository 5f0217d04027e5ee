//! Design sweeps: receiver field of view, beam width at the receiver, mean
//! SNR against beam width, and the transmit power needed per zenith angle.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{outage_floor, watts_to_dbm, OutageBreakdown};
use crate::error::{Error, Result};
use crate::link::{LinkScenario, PathTerms};
use crate::montecarlo::{simulate, SimConfig};
use crate::special::digamma;
use crate::turbulence::TurbulenceModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    ThetaFov,
    WZ,
    PT,
    Zenith,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
    pub scale: GridScale,
}

impl SweepGrid {
    pub fn new(variable: SweepVariable, lo: f64, hi: f64, n_points: usize, scale: GridScale) -> Result<Self> {
        let g = Self {
            variable,
            lo,
            hi,
            n_points,
            scale,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::Domain(format!("grid needs lo < hi, got [{}, {}]", self.lo, self.hi)));
        }
        if self.n_points < 3 {
            return Err(Error::Domain(format!("grid needs at least 3 points, got {}", self.n_points)));
        }
        if self.scale == GridScale::Log && self.lo <= 0.0 {
            return Err(Error::Domain("log grid needs lo > 0".into()));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points - 1;
        (0..=n)
            .map(|i| {
                let t = i as f64 / n as f64;
                match self.scale {
                    GridScale::Linear => self.lo + (self.hi - self.lo) * t,
                    GridScale::Log => (self.lo.ln() + (self.hi.ln() - self.lo.ln()) * t).exp(),
                }
            })
            .collect()
    }
}

/// One evaluated point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub x: f64,
    /// Minimized quantity; `+inf` where the model is undefined.
    pub objective: f64,
    /// Closed-form outage, when defined.
    pub p_out: f64,
    pub refinement: bool,
}

/// Outcome of a one-dimensional optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub variable: SweepVariable,
    pub argmin: f64,
    pub objective: f64,
    pub p_out: f64,
    /// Grid points on either side of the coarse minimum.
    pub neighbors: [TracePoint; 2],
    pub refinement_iterations: usize,
    /// The coarse minimum sat on the edge of the grid.
    pub boundary: bool,
    /// Transmit waist implied by the optimal receiver width (beam sweeps only).
    pub implied_w0_m: Option<f64>,
    pub trace: Vec<TracePoint>,
    pub mc_check: Option<McCheck>,
}

/// Monte-Carlo re-validation of a reported optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCheck {
    pub estimate: f64,
    pub ci_half_width: f64,
    pub n_trials: u64,
    pub insufficient_trials: bool,
}

/// Golden-section minimization of `f` on `[a, b]` down to width `tol`.
/// Returns `(x, f(x), iterations, evaluations)`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64, usize, Vec<(f64, f64)>) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut evals = vec![(c, fc), (d, fd)];
    let mut it = 0;
    while (b - a).abs() > tol && it < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
            evals.push((c, fc));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
            evals.push((d, fd));
        }
        it += 1;
    }
    let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
    (x, fx, it, evals)
}

fn ln_total(o: &OutageBreakdown) -> f64 {
    // ln(floor + smooth) without underflow when both are tiny.
    let lf = o.floor.ln();
    let ls = o.ln_smooth;
    let m = lf.max(ls);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((lf - m).exp() + (ls - m).exp()).ln()
}

struct Eval {
    objective: f64,
    p_out: f64,
}

fn scan_and_refine<F>(variable: SweepVariable, grid: &SweepGrid, tol: f64, eval: F) -> Result<OptimumReport>
where
    F: Fn(f64) -> Result<Eval> + Sync,
{
    grid.validate()?;
    let score = |x: f64| match eval(x) {
        Ok(e) if e.objective.is_finite() => e,
        Ok(_) | Err(_) => Eval {
            objective: f64::INFINITY,
            p_out: f64::NAN,
        },
    };
    let xs = grid.points();
    let coarse: Vec<TracePoint> = xs
        .par_iter()
        .map(|&x| {
            let e = score(x);
            TracePoint {
                x,
                objective: e.objective,
                p_out: e.p_out,
                refinement: false,
            }
        })
        .collect();
    let (best, _) = coarse
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective))
        .expect("grid has points");
    if !coarse[best].objective.is_finite() {
        return Err(Error::ParameterRegion(format!(
            "objective undefined at every {variable:?} grid point in [{}, {}]",
            grid.lo, grid.hi
        )));
    }
    let n = coarse.len();
    let boundary = best == 0 || best == n - 1;
    let lo_i = best.saturating_sub(1);
    let hi_i = (best + 1).min(n - 1);
    let mut trace = coarse.clone();
    let (gx, gf, iterations, evals) = golden_section(|x| score(x).objective, xs[lo_i], xs[hi_i], tol);
    for (x, f) in evals {
        trace.push(TracePoint {
            x,
            objective: f,
            p_out: score(x).p_out,
            refinement: true,
        });
    }
    let (mut argmin, mut objective) = (gx, gf);
    if !(gf <= coarse[best].objective) {
        // Not unimodal inside the bracket: fall back to a dense scan of it.
        let m = 400;
        let dense: Vec<TracePoint> = (0..=m)
            .into_par_iter()
            .map(|k| {
                let x = xs[lo_i] + (xs[hi_i] - xs[lo_i]) * k as f64 / m as f64;
                let e = score(x);
                TracePoint {
                    x,
                    objective: e.objective,
                    p_out: e.p_out,
                    refinement: true,
                }
            })
            .collect();
        let d = dense
            .iter()
            .min_by(|a, b| a.objective.total_cmp(&b.objective))
            .copied()
            .expect("dense scan has points");
        trace.extend(dense);
        argmin = d.x;
        objective = d.objective;
        if coarse[best].objective < objective {
            argmin = coarse[best].x;
            objective = coarse[best].objective;
        }
    }
    let p_out = score(argmin).p_out;
    Ok(OptimumReport {
        variable,
        argmin,
        objective,
        p_out,
        neighbors: [coarse[lo_i], coarse[hi_i]],
        refinement_iterations: iterations,
        boundary,
        implied_w0_m: None,
        trace,
        mc_check: None,
    })
}

/// Resolution of the field-of-view refinement (rad).
pub const FOV_RESOLUTION_RAD: f64 = 1e-4;
/// Resolution of the beam-width refinement (m).
pub const BEAM_RESOLUTION_M: f64 = 1e-4;

/// Minimizes closed-form outage over `θ_FOV`. The objective is `ln P_out`;
/// `θ_FOV` enters both the capture probability and, through the background
/// power, `h_th`.
pub fn optimize_fov(scenario: &LinkScenario, grid: &SweepGrid) -> Result<OptimumReport> {
    if grid.variable != SweepVariable::ThetaFov {
        return Err(Error::Domain(format!("optimize_fov needs a theta_fov grid, got {:?}", grid.variable)));
    }
    if grid.lo <= 0.0 || grid.hi >= std::f64::consts::PI {
        return Err(Error::Domain("theta_fov grid must lie in (0, pi)".into()));
    }
    let terms = scenario.path_terms()?;
    // Beam wander does not depend on the field of view; integrate it once.
    let mut fixed = *scenario;
    fixed.sigma_b_override_m = Some(scenario.derive_with(&terms)?.sigma_b_m);
    scan_and_refine(SweepVariable::ThetaFov, grid, FOV_RESOLUTION_RAD, |theta| {
        let o = fixed.with_fov_angle(theta)?.derive_with(&terms)?.outage()?;
        Ok(Eval {
            objective: ln_total(&o),
            p_out: o.p_out,
        })
    })
}

/// Minimizes closed-form outage over the receiver beam width `w_Z`.
///
/// The outage floor does not depend on `w_Z`, so the objective is the log of
/// the continuous part; its argmin is the argmin of `P_out` even where the
/// floor dominates the sum numerically.
pub fn optimize_beam_waist(scenario: &LinkScenario, grid: &SweepGrid) -> Result<OptimumReport> {
    if grid.variable != SweepVariable::WZ {
        return Err(Error::Domain(format!("optimize_beam_waist needs a w_z grid, got {:?}", grid.variable)));
    }
    if grid.lo / scenario.aperture_radius_m < crate::pointing::FAR_FIELD_RATIO_WARN {
        log::warn!(
            "w_Z grid starts at {:.3} r_a, below the far-field ratio {}",
            grid.lo / scenario.aperture_radius_m,
            crate::pointing::FAR_FIELD_RATIO_WARN
        );
    }
    let terms = scenario.path_terms()?;
    let mut report = scan_and_refine(SweepVariable::WZ, grid, BEAM_RESOLUTION_M, |w| {
        let o = scenario.with_beam_width(w).derive_with(&terms)?.outage()?;
        Ok(Eval {
            objective: o.ln_smooth,
            p_out: o.p_out,
        })
    })?;
    report.implied_w0_m = scenario
        .with_beam_width(report.argmin)
        .derive_with(&terms)
        .ok()
        .map(|d| d.beam.waist_at_tx_m);
    Ok(report)
}

/// Re-runs the sampler at a reported optimum and attaches the estimate.
pub fn attach_mc_check(scenario: &LinkScenario, report: &mut OptimumReport, cfg: &SimConfig) -> Result<()> {
    let s = match report.variable {
        SweepVariable::ThetaFov => scenario.with_fov_angle(report.argmin)?,
        SweepVariable::WZ => scenario.with_beam_width(report.argmin),
        v => return Err(Error::Domain(format!("no MC check defined for {v:?} sweeps"))),
    };
    let r = simulate(&s.derive()?, cfg)?;
    report.mc_check = Some(McCheck {
        estimate: r.outage.estimate,
        ci_half_width: r.outage.ci_half_width,
        n_trials: r.n_trials,
        insufficient_trials: r.outage.insufficient_trials,
    });
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SnrMethod {
    MonteCarlo(SimConfig),
    SemiAnalytic,
}

impl Default for SnrMethod {
    fn default() -> Self {
        Self::MonteCarlo(SimConfig::default())
    }
}

/// Average SNR at one beam width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrEstimate {
    pub w_z_m: f64,
    /// `E[γ]`, linear.
    pub mean_snr: f64,
    /// `E[10 log10 γ | h > 0]`.
    pub mean_snr_db_given_link: f64,
}

fn ln_moment_expectation(model: &TurbulenceModel) -> f64 {
    match *model {
        TurbulenceModel::LogNormal { sigma_bu_sq } => -2.0 * sigma_bu_sq,
        TurbulenceModel::GammaGamma { alpha, beta } => digamma(alpha) - alpha.ln() + digamma(beta) - beta.ln(),
    }
}

/// Mean SNR with the scenario's beam width replaced by `w_z`.
///
/// The semi-analytic path uses `E[h_pl²] = C1² C3 / (C3 + 2)` and
/// `E[ln h_pl] = ln C1 - 1/C3` from the small-angle pointing density.
pub fn mean_snr(scenario: &LinkScenario, w_z: f64, method: &SnrMethod) -> Result<SnrEstimate> {
    let link = scenario.with_beam_width(w_z).derive()?;
    match method {
        SnrMethod::MonteCarlo(cfg) => {
            let r = simulate(&link, cfg)?;
            Ok(SnrEstimate {
                w_z_m: w_z,
                mean_snr: r.mean_snr,
                mean_snr_db_given_link: r.mean_snr_db_given_link,
            })
        }
        SnrMethod::SemiAnalytic => {
            let pc = link.pointing;
            let h_al = link.terms.h_al;
            let capture = 1.0 - outage_floor(link.fov.theta_fov_rad, link.jitter.sigma_o_rad);
            let e_hat2 = 1.0 + link.terms.model.scintillation_index();
            let e_hpl2 = pc.c1 * pc.c1 * pc.c3 / (pc.c3 + 2.0);
            let mean = link.snr_scale * h_al * h_al * e_hat2 * e_hpl2 * capture;
            let e_ln_h = h_al.ln() + ln_moment_expectation(&link.terms.model) + pc.c1.ln() - 1.0 / pc.c3;
            let db = 10.0 * std::f64::consts::LOG10_E * (link.snr_scale.ln() + 2.0 * e_ln_h);
            Ok(SnrEstimate {
                w_z_m: w_z,
                mean_snr: mean,
                mean_snr_db_given_link: db,
            })
        }
    }
}

/// Settings for [`zenith_budget`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetOptions {
    pub w_z_grid: SweepGrid,
    pub theta_fov_grid: SweepGrid,
    /// Transmit power bracket searched by bisection (dBm).
    pub p_t_lo_dbm: f64,
    pub p_t_hi_dbm: f64,
    pub bracket_db: f64,
    pub max_iterations: usize,
    /// Alternating beam/FOV refinements per design.
    pub design_rounds: usize,
    /// Re-optimizations of the design at the newly found power.
    pub power_passes: usize,
}

impl Default for BudgetOptions {
    fn default() -> Self {
        Self {
            w_z_grid: SweepGrid {
                variable: SweepVariable::WZ,
                lo: 0.25,
                hi: 5.0,
                n_points: 48,
                scale: GridScale::Log,
            },
            theta_fov_grid: SweepGrid {
                variable: SweepVariable::ThetaFov,
                lo: 0.005,
                hi: 0.3,
                n_points: 48,
                scale: GridScale::Log,
            },
            p_t_lo_dbm: -60.0,
            p_t_hi_dbm: 60.0,
            bracket_db: 1e-3,
            max_iterations: 60,
            design_rounds: 3,
            power_passes: 4,
        }
    }
}

/// Required transmit power at one zenith angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZenithBudget {
    pub zenith_rad: f64,
    pub path_length_m: f64,
    pub w_z_m: f64,
    pub theta_fov_rad: f64,
    pub floor: f64,
    pub feasible: bool,
    pub required_p_t_dbm: f64,
    pub p_out_at_required: f64,
    pub iterations: usize,
    pub bracket_db: f64,
}

/// Alternating 1-D optimization of `w_Z` and `θ_FOV` at the scenario's power.
pub fn optimize_design(scenario: &LinkScenario, opts: &BudgetOptions) -> Result<LinkScenario> {
    let mut s = *scenario;
    for _ in 0..opts.design_rounds {
        let w = optimize_beam_waist(&s, &opts.w_z_grid)?;
        s = s.with_beam_width(w.argmin);
        let f = optimize_fov(&s, &opts.theta_fov_grid)?;
        s = s.with_fov_angle(f.argmin)?;
    }
    Ok(s)
}

fn bisect_power(s: &LinkScenario, terms: &PathTerms, target: f64, opts: &BudgetOptions) -> Result<(f64, f64, usize, f64)> {
    let d = s.derive_with(terms)?;
    let f = |p: f64| -> Result<f64> { Ok(d.outage_at(d.h_th_at_dbm(p))?.p_out) };
    let (mut lo, mut hi) = (opts.p_t_lo_dbm, opts.p_t_hi_dbm);
    if f(hi)? > target {
        return Err(Error::ParameterRegion(format!(
            "target {target:e} not reached even at {hi} dBm"
        )));
    }
    let mut it = 0;
    while hi - lo > opts.bracket_db && it < opts.max_iterations {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        it += 1;
    }
    Ok((hi, f(hi)?, it, hi - lo))
}

/// Transmit power that brings closed-form outage down to `target` at each
/// zenith angle, with `w_Z` and `θ_FOV` re-optimized per angle. The HAP
/// altitude is held fixed, so the slant range grows as `sec ζ`.
pub fn zenith_budget(
    scenario: &LinkScenario,
    zeniths_rad: &[f64],
    target: f64,
    opts: &BudgetOptions,
) -> Result<Vec<ZenithBudget>> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target outage must lie in (0, 1), got {target}")));
    }
    zeniths_rad
        .iter()
        .map(|&z| {
            let mut s = scenario.with_zenith(z)?;
            let terms = s.path_terms()?;
            let mut p = s.transmit_power_dbm;
            let mut last = None;
            for _ in 0..opts.power_passes.max(1) {
                s = optimize_design(&s.with_transmit_power_dbm(p), opts)?;
                let floor = outage_floor(s.fov.theta_fov_rad, s.sigma_o_rad);
                if floor >= target {
                    last = Some((f64::NAN, floor, 0, f64::NAN, false));
                    break;
                }
                let (req, pout, it, width) = bisect_power(&s, &terms, target, opts)?;
                let settled = (req - p).abs() < opts.bracket_db.max(0.01);
                p = req;
                last = Some((req, pout, it, width, true));
                if settled {
                    break;
                }
            }
            let (req, pout, it, width, feasible) = last.expect("at least one pass");
            Ok(ZenithBudget {
                zenith_rad: z,
                path_length_m: terms.path_length_m,
                w_z_m: s.beam_width_m,
                theta_fov_rad: s.fov.theta_fov_rad,
                floor: outage_floor(s.fov.theta_fov_rad, s.sigma_o_rad),
                feasible,
                required_p_t_dbm: req,
                p_out_at_required: pout,
                iterations: it,
                bracket_db: width,
            })
        })
        .collect()
}

/// Closed-form outage against transmit power for a fixed design.
pub fn outage_vs_power(scenario: &LinkScenario, p_t_dbm: &[f64]) -> Result<Vec<OutageBreakdown>> {
    let d = scenario.derive()?;
    p_t_dbm.iter().map(|&p| d.outage_at(d.h_th_at_dbm(p))).collect()
}

/// Power in dBm of the scenario's current query.
pub fn query_dbm(scenario: &LinkScenario) -> Result<f64> {
    Ok(watts_to_dbm(scenario.query()?.transmit_power_w))
}
