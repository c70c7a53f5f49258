//! Command-line front end: configuration, orchestration and output files.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

pub use config::RunConfig;

use crate::dichotomy::{self, BlowUpClass, SweepOptions, SweepTable};
use crate::energy::{self, RkSource};
use crate::error::{Error, Result};
use crate::kernels::{self, dyadic_cutoffs, Lemma1Params, Nonlinearity, OmegaSpec, ProblemSpec, ScanGrid};
use crate::rdsolver::{self, RadialGrid};
use crate::selfsimilar;
use svg::{Plot, Series};

pub const MANIFEST_SCHEMA: u32 = 1;

#[derive(Parser, Debug)]
#[command(name = "diffabs", version, about = "Diffusion versus time-dependent absorption: solver, sweeps and diagnostics")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// Key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Named bundle of settings applied before the file.
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Override any key, e.g. --set problem.horizon=0.5 (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory (output.dir).
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Skip SVG plots (output.svg = false).
    #[arg(long, global = true)]
    pub no_svg: bool,
    /// Space dimension (problem.dim).
    #[arg(long = "N", global = true)]
    pub dim: Option<usize>,
    /// Kernel descriptor (problem.kernel).
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    /// Nonlinearity descriptor (problem.nonlinearity).
    #[arg(long, global = true)]
    pub nonlinearity: Option<String>,
    /// Final time (problem.horizon).
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Integrate one problem and store snapshots.
    Solve,
    /// Shoot for the very singular self-similar profile.
    Profile {
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Run a k-sweep and store the probe table.
    Sweep(SweepArgs),
    /// Run (or load) a k-sweep and classify it.
    Classify {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Sweep table JSON to classify instead of running the sweep.
        #[arg(long)]
        table: Option<String>,
    },
    /// Solve, then evaluate the local energy functionals.
    Energy {
        /// Comma-separated r values (energy.r).
        #[arg(long)]
        r: Option<String>,
        /// Comma-separated τ values (energy.tau).
        #[arg(long)]
        tau: Option<String>,
        #[arg(long)]
        mu: Option<String>,
    },
    /// Dini integral classification of ω.
    Thresholds {
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        exponent: Option<f64>,
    },
    /// Scan the subsolution inequality for the lemma1 kernel and search for β.
    #[command(name = "verify-lemma1")]
    VerifyLemma1 {
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        ell: Option<f64>,
        #[arg(long)]
        tau: Option<f64>,
        /// Bisect for β instead of scanning a single τ.
        #[arg(long)]
        tau_sweep: bool,
    },
    /// Tabulate M_k, r_k, τ_k and the tail sums.
    Schedule {
        #[arg(long)]
        omega: Option<String>,
        #[arg(long)]
        k_min: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
        #[arg(long)]
        eps0: Option<f64>,
    },
    /// Collect the manifests below the output directory into report.md.
    Report {
        /// Run directories; defaults to output.dir and its subdirectories.
        dirs: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Probes as x0@t0;x0@t0 (sweep.probes).
    #[arg(long)]
    pub probes: Option<String>,
    /// Comma-separated k values (sweep.ladder).
    #[arg(long)]
    pub ladder: Option<String>,
    /// Warm-start time (sweep.t_warm).
    #[arg(long)]
    pub t_warm: Option<f64>,
}

fn overrides(cli: &Cli) -> Vec<(String, String)> {
    let mut o = Vec::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            o.push((k.to_string(), v));
        }
    };
    let c = &cli.common;
    put("output.dir", c.out.clone());
    put("problem.dim", c.dim.map(|v| v.to_string()));
    put("problem.kernel", c.kernel.clone());
    put("problem.nonlinearity", c.nonlinearity.clone());
    put("problem.horizon", c.horizon.map(|v| v.to_string()));
    if c.no_svg {
        put("output.svg", Some("false".into()));
    }
    let sweep_args = |put: &mut dyn FnMut(&str, Option<String>), s: &SweepArgs| {
        put("sweep.probes", s.probes.clone());
        put("sweep.ladder", s.ladder.clone());
        put("sweep.t_warm", s.t_warm.map(|v| v.to_string()));
    };
    match &cli.command {
        Command::Profile { ell, tolerance } => {
            put("profile.ell", ell.map(|v| v.to_string()));
            put("profile.tolerance", tolerance.map(|v| v.to_string()));
        }
        Command::Sweep(s) => sweep_args(&mut put, s),
        Command::Classify { sweep, table } => {
            sweep_args(&mut put, sweep);
            put("classify.table", table.clone());
        }
        Command::Energy { r, tau, mu } => {
            put("energy.r", r.clone());
            put("energy.tau", tau.clone());
            put("energy.mu", mu.clone());
        }
        Command::Thresholds { omega, exponent } => {
            put("thresholds.omega", omega.clone());
            put("thresholds.exponent", exponent.map(|v| v.to_string()));
        }
        Command::VerifyLemma1 { sigma, ell, tau, tau_sweep } => {
            put("lemma1.sigma", sigma.map(|v| v.to_string()));
            put("lemma1.ell", ell.map(|v| v.to_string()));
            put("lemma1.tau", tau.map(|v| v.to_string()));
            if *tau_sweep {
                put("lemma1.tau_sweep", Some("true".into()));
            }
        }
        Command::Schedule { omega, k_min, k_max, eps0 } => {
            put("schedule.omega", omega.clone());
            put("schedule.k_min", k_min.map(|v| v.to_string()));
            put("schedule.k_max", k_max.map(|v| v.to_string()));
            put("schedule.eps0", eps0.map(|v| v.to_string()));
        }
        Command::Solve | Command::Report { .. } => {}
    }
    o
}

/// Defaults, then preset, then config file, then flags, then --set.
pub fn build_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(name) = &cli.common.preset {
        for (k, v) in config::preset(name)? {
            cfg.set(k, v)?;
        }
    }
    if let Some(path) = &cli.common.config {
        cfg.apply_file(path)?;
    }
    for (k, v) in overrides(cli) {
        cfg.set(&k, &v)?;
    }
    for kv in &cli.common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v)?;
    }
    Ok(cfg)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Solve => "solve",
        Command::Profile { .. } => "profile",
        Command::Sweep(_) => "sweep",
        Command::Classify { .. } => "classify",
        Command::Energy { .. } => "energy",
        Command::Thresholds { .. } => "thresholds",
        Command::VerifyLemma1 { .. } => "verify-lemma1",
        Command::Schedule { .. } => "schedule",
        Command::Report { .. } => "report",
    }
}

/// What a command produced: files written and a JSON summary.
struct Outcome {
    files: Vec<String>,
    summary: Value,
    /// Set when the run finished but its result is partial.
    error: Option<Error>,
}

struct Out {
    dir: PathBuf,
    files: Vec<String>,
    svg: bool,
}

impl Out {
    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.dir.join(name)
    }

    fn json(&mut self, name: &str, v: &impl serde::Serialize) -> Result<()> {
        let p = self.path(name);
        let mut s = serde_json::to_string_pretty(v)?;
        s.push('\n');
        std::fs::write(p, s)?;
        Ok(())
    }

    fn plot(&mut self, name: &str, plot: Plot) -> Result<()> {
        if self.svg {
            let p = self.path(name);
            std::fs::write(p, plot.render())?;
        }
        Ok(())
    }

    fn done(self, summary: Value) -> Outcome {
        Outcome { files: self.files, summary, error: None }
    }
}

fn grid_for(cfg: &RunConfig, spec: &ProblemSpec) -> Result<RadialGrid> {
    let mut g = RadialGrid::graded(spec.dim, spec.radius, &cfg.grid_params())?;
    for _ in 0..cfg.grid.refine {
        g = g.refine();
    }
    Ok(g)
}

fn run_solve(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let spec = cfg.problem_spec()?;
    let grid = grid_for(cfg, &spec)?;
    let res = rdsolver::solve(&spec, &cfg.initial_data()?, &grid, &cfg.solve_options())?;
    rdsolver::write_snapshot_csv(&res, out.path("snapshots.csv"))?;
    rdsolver::write_diagnostics_json(&res, out.path("diagnostics.json"))?;
    let series = res
        .times
        .iter()
        .zip(&res.fields)
        .map(|(t, u)| Series::line(format!("t = {t}"), res.r.iter().copied().zip(u.iter().copied()).collect()))
        .collect();
    out.plot("solution.svg", Plot { title: "u(r, t)".into(), x_label: "r".into(), y_label: "u".into(), series, ..Default::default() })?;
    if res.barrier.iter().any(Option::is_some) {
        let pick = |f: &dyn Fn(usize) -> Option<f64>| -> Vec<(f64, f64)> {
            (0..res.times.len()).filter_map(|i| f(i).map(|v| (res.times[i], v))).collect()
        };
        let max_u = pick(&|i| Some(res.fields[i].iter().cloned().fold(f64::MIN, f64::max)));
        let bar = pick(&|i| res.barrier[i]);
        out.plot(
            "barrier.svg",
            Plot {
                title: "max u against the flat supersolution".into(),
                x_label: "t".into(),
                y_label: "u".into(),
                log_y: true,
                series: vec![Series::line("max u", max_u), Series::dashed("flat supersolution", bar)],
                ..Default::default()
            },
        )?;
    }
    Ok(json!({
        "steps": res.diagnostics.steps,
        "rejected_steps": res.diagnostics.rejected_steps,
        "clamp_events": res.diagnostics.clamp_events,
        "max_abs_u": res.diagnostics.max_abs_u,
        "nodes": res.r.len(),
        "final_time": res.times[res.times.len() - 1],
    }))
}

fn run_profile(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let p = selfsimilar::find_profile(cfg.problem.dim, cfg.profile.ell, cfg.profile.tolerance)?;
    let mut w = csv::Writer::from_path(out.path("profile.csv"))?;
    w.write_record(["eta", "f"])?;
    for (e, f) in p.eta.iter().zip(&p.f) {
        w.write_record([e.to_string(), f.to_string()])?;
    }
    w.flush()?;
    let summary = json!({
        "dim": p.dim,
        "ell": p.ell,
        "amplitude": p.amplitude,
        "bracket": p.bracket,
        "tail_c": p.tail_c,
        "tail_p": p.tail_p,
        "splice_eta": p.splice_eta,
        "delta_fit": p.delta_fit,
        "residual": p.residual(),
    });
    out.json("profile.json", &summary)?;
    let tail: Vec<(f64, f64)> = p
        .eta
        .iter()
        .filter(|&&e| e > 0.5)
        .map(|&e| (e, p.tail_c * e.powf(p.tail_p) * (-e * e / 4.0).exp()))
        .collect();
    out.plot(
        "profile.svg",
        Plot {
            title: format!("profile, N = {}, ell = {}", p.dim, p.ell),
            x_label: "eta".into(),
            y_label: "f".into(),
            log_y: true,
            series: vec![
                Series::line("f", p.eta.iter().copied().zip(p.f.iter().copied()).collect()),
                Series::dashed("tail fit", tail),
            ],
            ..Default::default()
        },
    )?;
    Ok(summary)
}

fn sweep_plot(table: &SweepTable) -> Plot {
    let mut series = Vec::new();
    for (j, p) in table.probes.iter().enumerate() {
        let col = table.column(j);
        let name = format!("x0 = {}, t0 = {}", p.x0, p.t0);
        series.push(Series::line(name, table.ladder.iter().copied().zip(col).collect()));
    }
    let mut seen: Vec<f64> = Vec::new();
    for (p, s) in table.probes.iter().zip(&table.supersolution) {
        if let Some(u) = s {
            if !seen.contains(&p.t0) {
                seen.push(p.t0);
                let (a, b) = (table.ladder[0], table.ladder[table.ladder.len() - 1]);
                series.push(Series::dashed(format!("U({})", p.t0), vec![(a, *u), (b, *u)]));
            }
        }
    }
    Plot {
        title: format!("probe values against k, {}", table.kernel),
        x_label: "k".into(),
        y_label: "u_k(x0, t0)".into(),
        log_x: true,
        log_y: true,
        series,
    }
}

fn do_sweep(cfg: &RunConfig) -> Result<(ProblemSpec, SweepTable)> {
    let spec = cfg.problem_spec()?;
    let grid = grid_for(cfg, &spec)?;
    let opts = SweepOptions { t_warm: cfg.sweep.t_warm, solve: cfg.solve_options() };
    let table = match spec.nonlinearity {
        Nonlinearity::Porous { .. } => dichotomy::porous_sweep(&spec, &cfg.sweep.probes, &cfg.sweep.ladder, &grid, &opts)?,
        _ => dichotomy::sweep(&spec, &cfg.sweep.probes, &cfg.sweep.ladder, &grid, &opts)?,
    };
    Ok((spec, table))
}

fn write_sweep(table: &SweepTable, out: &mut Out) -> Result<()> {
    dichotomy::write_table_csv(table, out.path("sweep.csv"))?;
    out.json("sweep.json", table)?;
    out.plot("sweep.svg", sweep_plot(table))
}

fn incomplete(table: &SweepTable) -> Option<Error> {
    (!table.complete).then(|| Error::IncompleteSweep(table.failure.clone().unwrap_or_default()))
}

fn run_sweep(cfg: &RunConfig, out: &mut Out) -> Result<(Value, Option<Error>)> {
    let (_, table) = do_sweep(cfg)?;
    write_sweep(&table, out)?;
    let summary = json!({
        "complete": table.complete,
        "failure": table.failure,
        "rows": table.values.len(),
        "worst_monotonicity": table.worst_monotonicity,
        "supersolution": table.supersolution,
    });
    Ok((summary, incomplete(&table)))
}

fn run_classify(cfg: &RunConfig, out: &mut Out) -> Result<(Value, Option<Error>)> {
    let (spec, table) = match &cfg.classify.table {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read sweep table {path}: {e}")))?;
            let table: SweepTable = serde_json::from_str(&text)?;
            let spec = ProblemSpec::new(table.dim, table.nonlinearity, table.kernel.clone(), 1.0);
            (spec, table)
        }
        None => {
            let (spec, table) = do_sweep(cfg)?;
            write_sweep(&table, out)?;
            (spec, table)
        }
    };
    if let Some(e) = incomplete(&table) {
        return Ok((json!({ "complete": false, "failure": table.failure }), Some(e)));
    }
    let verdict = dichotomy::classify(&table, &cfg.thresholds(), dichotomy::kernel_dini(&spec)?)?;
    out.json("verdict.json", &verdict)?;
    let agrees = match (verdict.class, verdict.dini) {
        (BlowUpClass::Complete, Some(kernels::DiniClass::Divergent)) => Some(true),
        (BlowUpClass::SinglePoint, Some(kernels::DiniClass::Finite(_))) => Some(true),
        (_, None) | (_, Some(kernels::DiniClass::Undecided)) => None,
        _ => Some(false),
    };
    Ok((json!({ "verdict": verdict, "agrees_with_dini": agrees }), None))
}

fn run_energy(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let spec = cfg.problem_spec()?;
    let grid = grid_for(cfg, &spec)?;
    let mut opts = cfg.solve_options();
    let init = cfg.initial_data()?;
    if opts.snapshots.is_empty() {
        let (a, b) = (init.start_time(), spec.horizon);
        opts.snapshots = (1..=40).map(|i| a + (b - a) * i as f64 / 40.0).collect();
    }
    let res = rdsolver::solve(&spec, &init, &grid, &opts)?;
    let mu = cfg.mu()?;
    let mut reports = Vec::new();
    for &r in &cfg.energy.r {
        for &tau in &cfg.energy.tau {
            reports.push(energy::energy_report(&res, &spec, r, tau, mu, cfg.energy.cap)?);
        }
    }
    let mut w = csv::Writer::from_path(out.path("energy.csv"))?;
    w.write_record(["r", "tau", "i1", "i2", "i3", "f_mu", "e1_mu", "e2", "h_r", "mu"])?;
    for e in &reports {
        let h = e.h_r.map_or("inf".to_string(), |v| v.to_string());
        w.write_record(
            [e.r, e.tau, e.i1, e.i2, e.i3, e.f_mu, e.e1_mu, e.e2]
                .iter()
                .map(f64::to_string)
                .chain([h, e.mu_value.to_string()]),
        )?;
    }
    w.flush()?;
    Ok(json!({ "reports": reports.len(), "snapshots": res.times.len() }))
}

fn run_thresholds(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let omega = OmegaSpec::from_str(&cfg.thresholds.omega)?;
    let class = kernels::dini_classify(&omega, cfg.thresholds.exponent, &dyadic_cutoffs(cfg.thresholds.cutoffs))?;
    let v = serde_json::to_value(class)?;
    out.json("thresholds.json", &v)?;
    Ok(v)
}

fn run_lemma1(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let s = &cfg.lemma1;
    let p = Lemma1Params::new(s.sigma, s.ell, cfg.problem.dim);
    let grid = ScanGrid { n_t: s.n_t, decades: s.decades, n_rho: s.n_rho };
    let v = if s.tau_sweep {
        let b = kernels::find_beta(&p, s.beta_lo * s.sigma, s.beta_hi * s.sigma, &grid)?;
        let checks: Vec<Value> = [0.25, 0.5, 1.0]
            .iter()
            .map(|f| -> Result<Value> {
                let tau = f * b.tau_star;
                Ok(json!({ "tau": tau, "scan": kernels::verify_subsolution_inequality(&p, tau, &grid)? }))
            })
            .collect::<Result<_>>()?;
        let trail: Vec<Value> = b.trail.iter().map(|(tau, ok)| json!({ "tau": tau, "holds": ok })).collect();
        json!({ "params": p, "beta": b.beta, "tau_star": b.tau_star, "trail": trail, "checks": checks, "grid": grid })
    } else {
        json!({
            "params": p,
            "tau": s.tau,
            "constant": kernels::lemma1_constant(&p, s.tau)?,
            "scan": kernels::verify_subsolution_inequality(&p, s.tau, &grid)?,
            "grid": grid,
        })
    };
    out.json("lemma1.json", &v)?;
    Ok(v)
}

fn run_schedule(cfg: &RunConfig, out: &mut Out) -> Result<Value> {
    let p = cfg.schedule_params()?;
    let source = if cfg.schedule.r.is_empty() {
        RkSource::Bound
    } else {
        RkSource::Supplied { r: cfg.schedule.r.clone() }
    };
    let s = energy::schedule(&p, &source)?;
    let mut w = csv::Writer::from_path(out.path("schedule.csv"))?;
    w.write_record(["k", "ln_mk", "m_k", "r_k", "tau_k", "bound", "implied_c8"])?;
    for r in &s.rows {
        let m = r.m_k.map_or("inf".to_string(), |v| v.to_string());
        w.write_record([r.k.to_string(), r.ln_mk.to_string(), m, r.r_k.to_string(), r.tau_k.to_string(), r.bound.to_string(), r.implied_c8.to_string()])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(out.path("tails.csv"))?;
    w.write_record(["n", "tau_star", "bound_sum", "integral"])?;
    for t in &s.tails {
        w.write_record([t.n.to_string(), t.tau_star.to_string(), t.bound_sum.to_string(), t.integral.to_string()])?;
    }
    w.flush()?;
    out.plot(
        "schedule.svg",
        Plot {
            title: "tail sums".into(),
            x_label: "n".into(),
            y_label: "value".into(),
            log_y: true,
            series: vec![
                Series::line("tau*(n)", s.tails.iter().map(|t| (t.n as f64, t.tau_star)).collect()),
                Series::line("bound sum", s.tails.iter().map(|t| (t.n as f64, t.bound_sum)).collect()),
                Series::dashed("integral", s.tails.iter().map(|t| (t.n as f64, t.integral)).collect()),
            ],
            ..Default::default()
        },
    )?;
    let first = &s.tails[0];
    Ok(json!({ "rows": s.rows.len(), "tau_star": first.tau_star, "bound_sum": first.bound_sum, "integral": first.integral }))
}

fn run_report(cfg: &RunConfig, dirs: &[PathBuf], out: &mut Out) -> Result<Value> {
    let mut dirs = dirs.to_vec();
    if dirs.is_empty() {
        let root = PathBuf::from(&cfg.output.dir);
        dirs.push(root.clone());
        let mut subs: Vec<PathBuf> = std::fs::read_dir(&root)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        subs.sort();
        dirs.extend(subs);
    }
    let mut text = String::from("# Run report\n\n| directory | command | status | wall time (s) | summary |\n|---|---|---|---|---|\n");
    let mut count = 0;
    for d in &dirs {
        let Ok(raw) = std::fs::read_to_string(d.join("manifest.json")) else { continue };
        let m: Value = serde_json::from_str(&raw)?;
        if m["command"] == "report" {
            continue;
        }
        count += 1;
        text.push_str(&format!(
            "| {} | {} | {} | {} | `{}` |\n",
            d.display(),
            m["command"].as_str().unwrap_or("?"),
            m["status"].as_str().unwrap_or("?"),
            m["wall_time_s"],
            m["summary"].to_string().replace('|', "\\|")
        ));
    }
    std::fs::write(out.path("report.md"), text)?;
    Ok(json!({ "runs": count }))
}

fn execute(cfg: &RunConfig, command: &Command, out: &mut Out) -> Result<(Value, Option<Error>)> {
    let plain = |v: Result<Value>| v.map(|v| (v, None));
    match command {
        Command::Solve => plain(run_solve(cfg, out)),
        Command::Profile { .. } => plain(run_profile(cfg, out)),
        Command::Sweep(_) => run_sweep(cfg, out),
        Command::Classify { .. } => run_classify(cfg, out),
        Command::Energy { .. } => plain(run_energy(cfg, out)),
        Command::Thresholds { .. } => plain(run_thresholds(cfg, out)),
        Command::VerifyLemma1 { .. } => plain(run_lemma1(cfg, out)),
        Command::Schedule { .. } => plain(run_schedule(cfg, out)),
        Command::Report { dirs } => plain(run_report(cfg, dirs, out)),
    }
}

fn write_manifest(dir: &Path, cfg: &RunConfig, command: &str, started: Instant, outcome: &Outcome) -> Result<()> {
    let status = match &outcome.error {
        None => "ok".to_string(),
        Some(Error::IncompleteSweep(_)) => "incomplete".to_string(),
        Some(_) => "failed".to_string(),
    };
    let manifest = json!({
        "schema_version": MANIFEST_SCHEMA,
        "command": command,
        "versions": { "diffabs": env!("CARGO_PKG_VERSION") },
        "config": cfg,
        "wall_time_s": started.elapsed().as_secs_f64(),
        "status": status,
        "error": outcome.error.as_ref().map(|e| e.to_string()),
        "outputs": outcome.files,
        "summary": outcome.summary,
    });
    let mut s = serde_json::to_string_pretty(&manifest)?;
    s.push('\n');
    std::fs::write(dir.join("manifest.json"), s)?;
    std::fs::write(dir.join("config.txt"), cfg.to_text()?)?;
    Ok(())
}

/// Runs one command; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let started = Instant::now();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let dir = PathBuf::from(&cfg.output.dir);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return 2;
    }
    let mut out = Out { dir: dir.clone(), files: Vec::new(), svg: cfg.output.svg };
    let name = command_name(&cli.command);
    let outcome = match execute(&cfg, &cli.command, &mut out) {
        Ok((summary, error)) => Outcome { error, ..out.done(summary) },
        Err(e) => Outcome { files: out.files, summary: Value::Null, error: Some(e) },
    };
    if let Err(e) = write_manifest(&dir, &cfg, name, started, &outcome) {
        eprintln!("error: cannot write manifest: {e}");
        return e.exit_code();
    }
    match &outcome.error {
        None => {
            println!("{}", outcome.summary);
            0
        }
        Some(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
