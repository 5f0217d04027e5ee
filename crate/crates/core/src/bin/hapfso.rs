use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hapfso::atmosphere::cn2_at;
use hapfso::channel::channel_pdf_smooth;
use hapfso::config::RunConfig;
use hapfso::montecarlo::{histogram_edges, simulate, simulate_thresholds};
use hapfso::optimize::{
    attach_mc_check, mean_snr, optimize_beam_waist, optimize_fov, zenith_budget, BudgetOptions, GridScale,
    OptimumReport, SnrMethod, SweepGrid, SweepVariable,
};
use hapfso::validate::{self, Hooks};
use hapfso::Error;

#[derive(Parser)]
#[command(name = "hapfso", version, about = "Ground-to-HAP optical link channel and outage tools")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; missing keys take nominal defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Run the Monte-Carlo columns (default).
    #[arg(long, global = true, overrides_with = "no_mc")]
    mc: bool,
    /// Skip the Monte-Carlo columns.
    #[arg(long, global = true, overrides_with = "mc")]
    no_mc: bool,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Log level passed to the logger (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    log: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OptVar {
    #[value(name = "theta_fov")]
    ThetaFov,
    #[value(name = "w_z")]
    WZ,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Scale {
    Linear,
    Log,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cn² against altitude on a log-spaced grid starting at 1 m.
    Profile {
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 30_000.0)]
        max_altitude_m: f64,
    },
    /// Outage probability against transmit power.
    Outage {
        #[arg(long, default_value_t = -60.0, allow_negative_numbers = true)]
        p_t_min_dbm: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        p_t_max_dbm: f64,
        #[arg(long, default_value_t = 71)]
        points: usize,
    },
    /// Minimize outage over the field of view or the receiver beam width.
    Optimize {
        #[arg(long, value_enum)]
        variable: OptVar,
        /// Grid start, SI (rad or m).
        #[arg(long)]
        lo: Option<f64>,
        /// Grid end, SI (rad or m).
        #[arg(long)]
        hi: Option<f64>,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Scale::Linear)]
        scale: Scale,
        /// Also write the sweep trace as CSV here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Analytic-vs-sampler and analytic-vs-quadrature checks.
    Validate {
        #[arg(long, hide = true)]
        corrupt_c1: Option<f64>,
    },
    /// Small-h channel density, with the sampled histogram alongside.
    Pdf,
    /// Mean SNR against receiver beam width.
    Snr {
        #[arg(long, default_value_t = 0.25)]
        w_min_m: f64,
        #[arg(long, default_value_t = 5.0)]
        w_max_m: f64,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Transmit power needed for a target outage at each zenith angle.
    Budget {
        #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 20.0, 30.0, 40.0, 50.0, 60.0])]
        zenith_deg: Vec<f64>,
        #[arg(long, default_value_t = 1e-4)]
        target: f64,
    },
}

enum Outcome {
    Ok,
    ValidationFailed,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn to_csv(&self, comment: &str) -> Result<Vec<u8>, Error> {
        let mut buf = format!("# {comment}\n").into_bytes();
        let mut w = csv::Writer::from_writer(&mut buf);
        let io = |e: csv::Error| Error::Domain(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Domain(e.to_string()))?;
        drop(w);
        Ok(buf)
    }

    fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let obj = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(k, v)| {
                        let val = match v.parse::<f64>() {
                            Ok(x) if x.is_finite() => serde_json::json!(x),
                            _ if v.is_empty() => serde_json::Value::Null,
                            _ => serde_json::json!(v),
                        };
                        (k.to_string(), val)
                    })
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// Shortest round-trip text; scientific outside `[1e-3, 1e6)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-3..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

struct Ctx {
    cfg: RunConfig,
    mc: bool,
    format: Format,
    out: Option<PathBuf>,
}

impl Ctx {
    fn comment(&self) -> String {
        format!(
            "hapfso {} config_hash={} seed={} trials={}",
            env!("CARGO_PKG_VERSION"),
            self.cfg.hash(),
            self.cfg.simulation.seed,
            self.cfg.simulation.n_trials
        )
    }

    fn write(&self, bytes: &[u8]) -> Result<(), Error> {
        let io = |e: std::io::Error| Error::Domain(format!("write failed: {e}"));
        match &self.out {
            Some(p) => std::fs::write(p, bytes).map_err(io),
            None => std::io::stdout().write_all(bytes).map_err(io),
        }
    }

    fn emit_table(&self, t: &Table) -> Result<(), Error> {
        match self.format {
            Format::Csv => self.write(&t.to_csv(&self.comment())?),
            Format::Json => self.emit_json(&serde_json::json!({
                "artifact": format!("hapfso {}", env!("CARGO_PKG_VERSION")),
                "config_hash": self.cfg.hash(),
                "seed": self.cfg.simulation.seed,
                "rows": t.to_json(),
            })),
        }
    }

    fn emit_json<T: Serialize>(&self, v: &T) -> Result<(), Error> {
        let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Domain(e.to_string()))?;
        s.push('\n');
        self.write(s.as_bytes())
    }
}

fn grid_points(lo: f64, hi: f64, n: usize, log: bool) -> Result<Vec<f64>, Error> {
    let scale = if log { GridScale::Log } else { GridScale::Linear };
    Ok(SweepGrid::new(SweepVariable::PT, lo, hi, n, scale)?.points())
}

fn cmd_profile(ctx: &Ctx, points: usize, max_altitude_m: f64) -> Result<Outcome, Error> {
    if max_altitude_m <= 1.0 {
        return Err(Error::Config(format!("--max-altitude-m must exceed 1, got {max_altitude_m}")));
    }
    let mut t = Table::new(&["altitude_m", "cn2"]);
    for h in grid_points(1.0, max_altitude_m, points, true)? {
        t.push(vec![num(h), num(cn2_at(h, &ctx.cfg.scenario.atmosphere)?)]);
    }
    ctx.emit_table(&t)?;
    Ok(Outcome::Ok)
}

fn cmd_outage(ctx: &Ctx, lo: f64, hi: f64, points: usize) -> Result<Outcome, Error> {
    let powers = grid_points(lo, hi, points, false)?;
    let link = ctx.cfg.scenario.derive()?;
    let h_ths: Vec<f64> = powers.iter().map(|&p| link.h_th_at_dbm(p)).collect();
    let mc = if ctx.mc {
        Some(simulate_thresholds(&link, &h_ths, &ctx.cfg.simulation)?.1)
    } else {
        None
    };
    let mut t = Table::new(&["p_t_dbm", "p_out_closed_form", "floor", "p_out_mc", "mc_ci", "flag"]);
    for (i, (&p, &h)) in powers.iter().zip(&h_ths).enumerate() {
        let o = link.outage_at(h)?;
        if o.beyond_validity {
            log::warn!("p_t = {p} dBm: h_th beyond the small-h validity limit");
        }
        let flag = if o.beyond_validity {
            "beyond_validity"
        } else if o.smooth() < 0.01 * o.floor {
            "floor_limited"
        } else {
            "ok"
        };
        let e = mc.as_ref().map(|v| v[i]);
        t.push(vec![
            num(p),
            num(o.p_out),
            num(o.floor),
            opt(e.map(|e| e.estimate)),
            opt(e.map(|e| e.ci_half_width)),
            flag.to_string(),
        ]);
    }
    ctx.emit_table(&t)?;
    Ok(Outcome::Ok)
}

fn trace_table(r: &OptimumReport) -> Table {
    let mut t = Table::new(&["x", "objective", "p_out", "refinement"]);
    for p in &r.trace {
        t.push(vec![num(p.x), num(p.objective), num(p.p_out), p.refinement.to_string()]);
    }
    t
}

fn cmd_optimize(
    ctx: &Ctx,
    var: OptVar,
    lo: Option<f64>,
    hi: Option<f64>,
    points: usize,
    scale: Scale,
    trace: Option<PathBuf>,
) -> Result<Outcome, Error> {
    let s = &ctx.cfg.scenario;
    let scale = match scale {
        Scale::Linear => GridScale::Linear,
        Scale::Log => GridScale::Log,
    };
    let mut report = match var {
        OptVar::ThetaFov => {
            let g = SweepGrid::new(SweepVariable::ThetaFov, lo.unwrap_or(0.005), hi.unwrap_or(0.3), points, scale)?;
            optimize_fov(s, &g)?
        }
        OptVar::WZ => {
            let g = SweepGrid::new(
                SweepVariable::WZ,
                lo.unwrap_or(10.0 * s.aperture_radius_m),
                hi.unwrap_or(6.0),
                points,
                scale,
            )?;
            optimize_beam_waist(s, &g)?
        }
    };
    if report.boundary {
        log::warn!("optimum {} lies on the grid boundary", report.argmin);
    }
    if ctx.mc {
        attach_mc_check(s, &mut report, &ctx.cfg.simulation)?;
    }
    if let Some(path) = trace {
        std::fs::write(&path, trace_table(&report).to_csv(&ctx.comment())?)
            .map_err(|e| Error::Domain(format!("cannot write {}: {e}", path.display())))?;
    }
    match ctx.format {
        Format::Csv => ctx.emit_table(&trace_table(&report))?,
        Format::Json => ctx.emit_json(&serde_json::json!({
            "artifact": format!("hapfso {}", env!("CARGO_PKG_VERSION")),
            "config_hash": ctx.cfg.hash(),
            "seed": ctx.cfg.simulation.seed,
            "report": report,
        }))?,
    }
    Ok(Outcome::Ok)
}

fn cmd_validate(ctx: &Ctx, corrupt_c1: Option<f64>) -> Result<Outcome, Error> {
    let report = validate::run(&ctx.cfg, &Hooks { corrupt_c1 })?;
    for c in report.failures() {
        log::error!("check {} failed: expected {}, observed {}", c.name, c.expected, c.observed);
    }
    match ctx.format {
        Format::Json => ctx.emit_json(&report)?,
        Format::Csv => {
            let mut t = Table::new(&["check", "expected", "observed", "passed"]);
            for c in &report.checks {
                t.push(vec![c.name.clone(), c.expected.clone(), num(c.observed), c.passed.to_string()]);
            }
            ctx.emit_table(&t)?;
        }
    }
    Ok(if report.passed {
        Outcome::Ok
    } else {
        Outcome::ValidationFailed
    })
}

fn cmd_pdf(ctx: &Ctx) -> Result<Outcome, Error> {
    let s = &ctx.cfg.scenario;
    let link = s.derive()?;
    let edges = histogram_edges(&link, ctx.cfg.simulation.histogram_bins);
    let dens = if ctx.mc {
        Some(simulate(&link, &ctx.cfg.simulation)?.histogram.densities())
    } else {
        None
    };
    let mut t = Table::new(&["h", "pdf_closed_form", "pdf_mc", "point_mass"]);
    for (i, e) in edges.windows(2).enumerate() {
        let h = (e[0] * e[1]).sqrt();
        let d = channel_pdf_smooth(
            &link.terms.model,
            &link.pointing,
            link.terms.h_al,
            link.fov.theta_fov_rad,
            link.jitter.sigma_o_rad,
            h,
        )?;
        t.push(vec![num(h), num(d.density), opt(dens.as_ref().map(|v| v[i])), num(d.point_mass)]);
    }
    ctx.emit_table(&t)?;
    Ok(Outcome::Ok)
}

fn cmd_snr(ctx: &Ctx, lo: f64, hi: f64, points: usize) -> Result<Outcome, Error> {
    let method = if ctx.mc {
        SnrMethod::MonteCarlo(ctx.cfg.simulation)
    } else {
        SnrMethod::SemiAnalytic
    };
    let mut t = Table::new(&["w_z_m", "mean_snr", "mean_snr_db", "mean_snr_db_given_link"]);
    for w in grid_points(lo, hi, points, false)? {
        let e = mean_snr(&ctx.cfg.scenario, w, &method)?;
        t.push(vec![
            num(w),
            num(e.mean_snr),
            num(10.0 * e.mean_snr.log10()),
            num(e.mean_snr_db_given_link),
        ]);
    }
    ctx.emit_table(&t)?;
    Ok(Outcome::Ok)
}

fn cmd_budget(ctx: &Ctx, zenith_deg: &[f64], target: f64) -> Result<Outcome, Error> {
    let z: Vec<f64> = zenith_deg.iter().map(|d| d.to_radians()).collect();
    let rows = zenith_budget(&ctx.cfg.scenario, &z, target, &BudgetOptions::default())?;
    let mut t = Table::new(&[
        "zenith_rad",
        "path_length_m",
        "w_z_m",
        "theta_fov_rad",
        "floor",
        "feasible",
        "required_p_t_dbm",
        "p_out_at_required",
    ]);
    for r in rows {
        t.push(vec![
            num(r.zenith_rad),
            num(r.path_length_m),
            num(r.w_z_m),
            num(r.theta_fov_rad),
            num(r.floor),
            r.feasible.to_string(),
            num(r.required_p_t_dbm),
            num(r.p_out_at_required),
        ]);
    }
    ctx.emit_table(&t)?;
    Ok(Outcome::Ok)
}

fn run(cli: Cli) -> Result<Outcome, Error> {
    let c = cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::from_toml_str("")?,
    };
    if let Some(s) = c.seed {
        cfg.simulation.seed = s;
    }
    if let Some(n) = c.trials {
        cfg.simulation.n_trials = n;
    }
    cfg.simulation.validate()?;
    let ctx = Ctx {
        cfg,
        mc: !c.no_mc,
        format: c.format,
        out: c.out,
    };
    match cli.cmd {
        Cmd::Profile { points, max_altitude_m } => cmd_profile(&ctx, points, max_altitude_m),
        Cmd::Outage {
            p_t_min_dbm,
            p_t_max_dbm,
            points,
        } => cmd_outage(&ctx, p_t_min_dbm, p_t_max_dbm, points),
        Cmd::Optimize {
            variable,
            lo,
            hi,
            points,
            scale,
            trace,
        } => cmd_optimize(&ctx, variable, lo, hi, points, scale, trace),
        Cmd::Validate { corrupt_c1 } => cmd_validate(&ctx, corrupt_c1),
        Cmd::Pdf => cmd_pdf(&ctx),
        Cmd::Snr {
            w_min_m,
            w_max_m,
            points,
        } => cmd_snr(&ctx, w_min_m, w_max_m, points),
        Cmd::Budget { zenith_deg, target } => cmd_budget(&ctx, &zenith_deg, target),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.common.log).init();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::ValidationFailed) => ExitCode::from(1),
        Err(e @ Error::Config(_)) => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
