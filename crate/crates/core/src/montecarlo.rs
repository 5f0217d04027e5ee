//! Monte-Carlo oracle for the composite channel.
//!
//! Trial `i` draws from its own ChaCha stream `(seed, i)`, trials are grouped
//! into fixed batches, and batches are merged in index order, so results do
//! not depend on how many worker threads run the batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aoa::{aoa_loss_exact, aoa_loss_gate};
use crate::error::{Error, Result};
use crate::link::DerivedLink;
use crate::pointing::pointing_loss;

/// How the receiver field of view enters each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AoaMode {
    #[default]
    Gate,
    ExactAiry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_trials: u64,
    pub seed: u64,
    pub aoa_mode: AoaMode,
    pub histogram_bins: usize,
    pub batch_size: u64,
    /// Worker threads; 0 uses the global rayon pool.
    #[serde(default)]
    pub workers: usize,
}

pub const MIN_TRIALS: u64 = 10_000;
pub const MIN_BINS: usize = 32;
/// Fewer outage events than this and the estimate is flagged.
pub const MIN_OUTAGE_EVENTS: u64 = 10;

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_trials: 4_000_000,
            seed: 42,
            aoa_mode: AoaMode::Gate,
            histogram_bins: 64,
            batch_size: 65_536,
            workers: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trials < MIN_TRIALS {
            return Err(Error::Config(format!("n_trials must be >= {MIN_TRIALS}, got {}", self.n_trials)));
        }
        if self.histogram_bins < MIN_BINS {
            return Err(Error::Config(format!(
                "histogram_bins must be >= {MIN_BINS}, got {}",
                self.histogram_bins
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be > 0".into()));
        }
        Ok(())
    }
}

/// Log-spaced histogram of the positive channel gains. The end bins are open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub masses: Vec<f64>,
}

impl Histogram {
    /// Mass per unit `h` in each bin.
    pub fn densities(&self) -> Vec<f64> {
        self.masses
            .iter()
            .zip(self.edges.windows(2))
            .map(|(m, e)| m / (e[1] - e[0]))
            .collect()
    }

    /// Geometric bin centres.
    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|e| (e[0] * e[1]).sqrt()).collect()
    }
}

/// Empirical outage at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageEstimate {
    pub h_th: f64,
    pub count: u64,
    pub estimate: f64,
    /// `1.96 √(p(1-p)/n)`.
    pub ci_half_width: f64,
    pub insufficient_trials: bool,
}

impl OutageEstimate {
    fn new(h_th: f64, count: u64, n: u64) -> Self {
        let p = count as f64 / n as f64;
        Self {
            h_th,
            count,
            estimate: p,
            ci_half_width: 1.96 * (p * (1.0 - p) / n as f64).sqrt(),
            insufficient_trials: count < MIN_OUTAGE_EVENTS,
        }
    }

    /// Binomial standard error.
    pub fn standard_error(&self, n: u64) -> f64 {
        (self.estimate * (1.0 - self.estimate) / n as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub n_trials: u64,
    pub outage: OutageEstimate,
    /// `E[γ]`, linear.
    pub mean_snr: f64,
    /// `E[10 log10 γ | h > 0]`.
    pub mean_snr_db_given_link: f64,
    pub zero_count: u64,
    pub zero_mass: f64,
    pub histogram: Histogram,
}

impl SimResult {
    pub fn outage_estimate(&self) -> f64 {
        self.outage.estimate
    }

    pub fn ci_half_width(&self) -> f64 {
        self.outage.ci_half_width
    }
}

#[derive(Debug, Clone)]
struct Tally {
    n: u64,
    zeros: u64,
    below: Vec<u64>,
    snr_sum: f64,
    snr_db_sum: f64,
    bins: Vec<u64>,
}

impl Tally {
    fn new(n_thresholds: usize, n_bins: usize) -> Self {
        Self {
            n: 0,
            zeros: 0,
            below: vec![0; n_thresholds],
            snr_sum: 0.0,
            snr_db_sum: 0.0,
            bins: vec![0; n_bins],
        }
    }

    fn merge(&mut self, other: &Tally) {
        self.n += other.n;
        self.zeros += other.zeros;
        for (a, b) in self.below.iter_mut().zip(&other.below) {
            *a += b;
        }
        self.snr_sum += other.snr_sum;
        self.snr_db_sum += other.snr_db_sum;
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }
}

/// Draw-ready constants, checked once before sampling.
struct Plan<'a> {
    link: &'a DerivedLink,
    thresholds: &'a [f64],
    sampler: crate::turbulence::TurbulenceSampler,
    ln_lo: f64,
    ln_step: f64,
    n_bins: usize,
    mode: AoaMode,
}

impl Plan<'_> {
    fn trial(&self, rng: &mut ChaCha8Rng, t: &mut Tally) {
        let l = self.link;
        let j = &l.jitter;
        let mut z = || -> f64 { rng.sample(StandardNormal) };
        let dx = j.sigma_d_m * z();
        let dy = j.sigma_d_m * z();
        let bx = j.sigma_b_m * z();
        let by = j.sigma_b_m * z();
        let tx = j.sigma_o_rad * z();
        let ty = j.sigma_o_rad * z();
        let h_at = self.sampler.draw(rng);
        let r_d = (dx + bx).hypot(dy + by);
        let theta_d = tx.hypot(ty);
        let h_pl = pointing_loss(l.beam_width_m, l.aperture_radius_m, r_d, theta_d);
        let h_af = match self.mode {
            AoaMode::Gate => aoa_loss_gate(&l.fov, theta_d),
            AoaMode::ExactAiry => aoa_loss_exact(&l.fov, theta_d, l.wavelength_m),
        };
        let h = l.terms.h_al * h_at * h_pl * h_af;
        t.n += 1;
        for (c, &th) in t.below.iter_mut().zip(self.thresholds) {
            if h < th {
                *c += 1;
            }
        }
        let gamma = l.snr_scale * h * h;
        t.snr_sum += gamma;
        if h > 0.0 {
            t.snr_db_sum += 10.0 * gamma.log10();
            let k = ((h.ln() - self.ln_lo) / self.ln_step).floor();
            let k = if k < 0.0 { 0 } else { (k as usize).min(self.n_bins - 1) };
            t.bins[k] += 1;
        } else {
            t.zeros += 1;
        }
    }
}

fn check_link(link: &DerivedLink) -> Result<()> {
    let bad = |what: &str| Err(Error::Config(format!("inconsistent precomputed constants: {what}")));
    let pc = &link.pointing;
    if let Err(e) = pc.validate() {
        return bad(&e.to_string());
    }
    let w = link.beam_width_m;
    let c1 = 2.0 * link.aperture_radius_m * link.aperture_radius_m / (w * w);
    if (c1 / pc.c1 - 1.0).abs() > 1e-9 {
        return bad("C1 does not match the beam width and aperture radius");
    }
    let sr2 = link.jitter.sigma_d_m.powi(2) + link.jitter.sigma_b_m.powi(2);
    if (w * w / (4.0 * sr2) / pc.c3 - 1.0).abs() > 1e-9 {
        return bad("C3 does not match the beam width and jitter");
    }
    if !(link.terms.h_al > 0.0 && link.terms.h_al <= 1.0) {
        return bad("h_al outside (0, 1]");
    }
    if !(link.snr_scale > 0.0 && link.snr_scale.is_finite()) {
        return bad("SNR scale must be finite and > 0");
    }
    link.terms.model.validate().or_else(|e| bad(&e.to_string()))?;
    link.jitter.validate().or_else(|e| bad(&e.to_string()))?;
    link.fov.validate().or_else(|e| bad(&e.to_string()))
}

fn run(link: &DerivedLink, thresholds: &[f64], cfg: &SimConfig) -> Result<Tally> {
    cfg.validate()?;
    check_link(link)?;
    if thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::Config("outage thresholds must be > 0".into()));
    }
    let h_ref = link.terms.h_al * link.pointing.c1;
    let (lo, hi) = (h_ref * 1e-6, h_ref * 10.0);
    let n_bins = cfg.histogram_bins;
    let plan = Plan {
        link,
        thresholds,
        sampler: link.terms.model.sampler(),
        ln_lo: lo.ln(),
        ln_step: (hi.ln() - lo.ln()) / n_bins as f64,
        n_bins,
        mode: cfg.aoa_mode,
    };
    let base = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_batches = cfg.n_trials.div_ceil(cfg.batch_size);
    let batch = |b: u64| {
        let mut t = Tally::new(thresholds.len(), n_bins);
        let start = b * cfg.batch_size;
        let end = (start + cfg.batch_size).min(cfg.n_trials);
        for i in start..end {
            let mut rng = base.clone();
            rng.set_stream(i);
            plan.trial(&mut rng, &mut t);
        }
        t
    };
    let tallies: Vec<Tally> = if cfg.workers == 0 {
        (0..n_batches).into_par_iter().map(batch).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
        pool.install(|| (0..n_batches).into_par_iter().map(batch).collect())
    };
    let mut total = Tally::new(thresholds.len(), n_bins);
    for t in &tallies {
        total.merge(t);
    }
    Ok(total)
}

/// Bin edges of the gain histogram: log-spaced over `[10⁻⁶, 10] · h_al C1`.
pub fn histogram_edges(link: &DerivedLink, n_bins: usize) -> Vec<f64> {
    let h_ref = link.terms.h_al * link.pointing.c1;
    let (lo, hi) = ((h_ref * 1e-6).ln(), (h_ref * 10.0).ln());
    (0..=n_bins)
        .map(|i| (lo + (hi - lo) * i as f64 / n_bins as f64).exp())
        .collect()
}

fn result_from(link: &DerivedLink, total: &Tally, h_th: f64, below: u64) -> SimResult {
    let n = total.n;
    let edges = histogram_edges(link, total.bins.len());
    let positive = n - total.zeros;
    SimResult {
        n_trials: n,
        outage: OutageEstimate::new(h_th, below, n),
        mean_snr: total.snr_sum / n as f64,
        mean_snr_db_given_link: if positive > 0 {
            total.snr_db_sum / positive as f64
        } else {
            f64::NEG_INFINITY
        },
        zero_count: total.zeros,
        zero_mass: total.zeros as f64 / n as f64,
        histogram: Histogram {
            edges,
            counts: total.bins.clone(),
            masses: total.bins.iter().map(|&c| c as f64 / n as f64).collect(),
        },
    }
}

/// Samples the channel of `link` and estimates outage at `link.h_th`.
pub fn simulate(link: &DerivedLink, cfg: &SimConfig) -> Result<SimResult> {
    let total = run(link, &[link.h_th], cfg)?;
    Ok(result_from(link, &total, link.h_th, total.below[0]))
}

/// One sampling pass, outage estimated at every threshold in `h_ths`.
pub fn simulate_thresholds(link: &DerivedLink, h_ths: &[f64], cfg: &SimConfig) -> Result<(SimResult, Vec<OutageEstimate>)> {
    let mut all = vec![link.h_th];
    all.extend_from_slice(h_ths);
    let total = run(link, &all, cfg)?;
    let res = result_from(link, &total, link.h_th, total.below[0]);
    let curve = h_ths
        .iter()
        .zip(&total.below[1..])
        .map(|(&h, &c)| OutageEstimate::new(h, c, total.n))
        .collect();
    Ok((res, curve))
}

/// Runs `cfg` with one worker and with `workers`, and reports whether the results match bit for bit.
pub fn replay_determinism(link: &DerivedLink, cfg: &SimConfig, workers: &[usize]) -> Result<bool> {
    let mut reference: Option<SimResult> = None;
    for &w in workers {
        let r = simulate(link, &SimConfig { workers: w, ..*cfg })?;
        match &reference {
            None => reference = Some(r),
            Some(first) => {
                if !bit_identical(first, &r) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Equality down to the bit pattern of every float.
pub fn bit_identical(a: &SimResult, b: &SimResult) -> bool {
    let same = |x: f64, y: f64| x.to_bits() == y.to_bits();
    a.n_trials == b.n_trials
        && a.outage.count == b.outage.count
        && same(a.outage.estimate, b.outage.estimate)
        && same(a.outage.ci_half_width, b.outage.ci_half_width)
        && same(a.mean_snr, b.mean_snr)
        && same(a.mean_snr_db_given_link, b.mean_snr_db_given_link)
        && a.zero_count == b.zero_count
        && a.histogram.counts == b.histogram.counts
        && a.histogram.edges.iter().zip(&b.histogram.edges).all(|(x, y)| same(*x, *y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkScenario;

    fn small() -> SimConfig {
        SimConfig {
            n_trials: 200_000,
            batch_size: 10_000,
            ..SimConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig { n_trials: 100, ..small() }.validate().is_err());
        assert!(SimConfig { histogram_bins: 8, ..small() }.validate().is_err());
        assert!(SimConfig { batch_size: 0, ..small() }.validate().is_err());
    }

    #[test]
    fn masses_sum_to_one() {
        let link = LinkScenario::nominal().derive().unwrap();
        let r = simulate(&link, &small()).unwrap();
        let total: f64 = r.zero_mass + r.histogram.masses.iter().sum::<f64>();
        assert!((total - 1.0).abs() < 1e-12);
        let p = r.outage.estimate;
        assert!((r.outage.ci_half_width - 1.96 * (p * (1.0 - p) / r.n_trials as f64).sqrt()).abs() < 1e-18);
    }

    #[test]
    fn huge_orientation_jitter_closes_the_link() {
        let mut s = LinkScenario::nominal();
        s.sigma_o_rad = s.fov.theta_fov_rad / 0.01;
        let link = s.derive().unwrap();
        let r = simulate(&link, &small()).unwrap();
        assert!(1.0 - r.outage.estimate <= r.outage.ci_half_width.max(3.0 / r.n_trials as f64) + 1e-4);
    }

    #[test]
    fn serial_replay_is_identical_and_seeds_differ() {
        let link = LinkScenario::nominal().with_transmit_power_dbm(-25.0).derive().unwrap();
        let a = simulate(&link, &small()).unwrap();
        let b = simulate(&link, &small()).unwrap();
        assert!(bit_identical(&a, &b));
        let c = simulate(&link, &SimConfig { seed: 7, ..small() }).unwrap();
        assert_ne!(a.outage.count, c.outage.count);
        let joint = (a.outage.ci_half_width.powi(2) + c.outage.ci_half_width.powi(2)).sqrt();
        assert!((a.outage.estimate - c.outage.estimate).abs() < 1.5 * joint);
    }

    #[test]
    fn thresholds_match_single_runs() {
        let link = LinkScenario::nominal().derive().unwrap();
        let hs = [link.h_th * 1e3, link.h_th * 1e4];
        let (_, curve) = simulate_thresholds(&link, &hs, &small()).unwrap();
        let mut l2 = link;
        l2.h_th = hs[1];
        let single = simulate(&l2, &small()).unwrap();
        assert_eq!(single.outage.count, curve[1].count);
    }

    #[test]
    fn inconsistent_constants_rejected() {
        let mut link = LinkScenario::nominal().derive().unwrap();
        link.pointing.c1 *= 1.5;
        assert!(matches!(simulate(&link, &small()), Err(Error::Config(_))));
    }
}
