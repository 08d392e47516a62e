//! Command-line front end: one subcommand per experiment, CSV output under
//! `--out` with a `manifest.csv`.

use crate::config::{Config, SUBCOMMANDS};
use crate::constants::DerivedConstants;
use crate::error::{Error, Result};
use crate::estimates::{
    monotone_approximation_experiment, stability_study, vss_limit_experiment, CheckKind, EstimateReport, Verdict,
};
use crate::io::{self, OutputDir, SummaryRow};
use crate::rates::{smoothing_rate_experiment, RateExperimentConfig};
use crate::selfsimilar::{
    curvature_limit, nonuniqueness_experiment, residual_order, solve_nonuniq_with, solve_vss_with, stationary_residual,
    ShootOptions, NONUNIQ_ETA_MAX, VSS_ETA_MAX,
};
use crate::solver::{hopf_cole_convergence, run};
use crate::supersolution::{build_phi, default_branch, supersolution_residual};
use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "vhj", version, about = "Numerical laboratory for u_t - nu Lap(u) + |grad u|^q = 0")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Config file with `section.key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Number of grid cells (`grid.cells`).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Gradient exponent (`problem.q`).
    #[arg(long, global = true)]
    pub q: Option<f64>,
    /// Viscosity (`problem.nu`).
    #[arg(long, global = true)]
    pub nu: Option<f64>,
    /// Space dimension (`grid.dim`); N > 1 selects the radial grid.
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    /// Estimate to check (`check.estimate`).
    #[arg(long, global = true)]
    pub estimate: Option<String>,
    /// Suppress the summary on standard output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve one problem and write its snapshots.
    Solve,
    /// Check the a priori estimates on one problem.
    Check,
    /// Very singular self-similar profile.
    ProfileVss,
    /// Increasing self-similar profile with a prescribed tail constant.
    ProfileNonuniq,
    /// Residual of the stationary solution `C |x|^{|a|}`.
    Stationary,
    /// Build and certify the ball supersolution.
    Supersolution,
    /// Smoothing-rate experiment for singular data.
    Rates,
    /// Convergence against the exact `q = 2` solution.
    OracleQ2,
    /// Truncation sequence of the monotone approximation.
    ApproxMono,
    /// Dirac data of increasing mass against the very singular solution.
    VssLimit,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Check => "check",
            Command::ProfileVss => "profile-vss",
            Command::ProfileNonuniq => "profile-nonuniq",
            Command::Stationary => "stationary",
            Command::Supersolution => "supersolution",
            Command::Rates => "rates",
            Command::OracleQ2 => "oracle-q2",
            Command::ApproxMono => "approx-mono",
            Command::VssLimit => "vss-limit",
        }
    }
}

/// Parse arguments, with the configuration keys and defaults in `--help`.
pub fn parse_args<I, T>(args: I) -> std::result::Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let help = format!(
        "Exit codes: 0 all verdicts pass, 2 a verdict failed, 1 error.\n\n\
         Configuration keys and defaults (subcommands override some of them;\n\
         every run writes its effective settings to defaults.cfg):\n\n{}",
        Config::default().render()
    );
    let matches = Cli::command().after_long_help(help).try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

/// Effective configuration: subcommand defaults, then file, then flags.
pub fn build_config(cli: &Cli) -> Result<Config> {
    debug_assert!(SUBCOMMANDS.contains(&cli.command.name()));
    let mut cfg = Config::for_subcommand(cli.command.name())?;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.merge_text(&text)?;
    }
    if let Some(n) = cli.grid {
        cfg.set("grid.cells", &n.to_string())?;
    }
    if let Some(q) = cli.q {
        cfg.set("problem.q", &q.to_string())?;
    }
    if let Some(nu) = cli.nu {
        cfg.set("problem.nu", &nu.to_string())?;
    }
    if let Some(dim) = cli.dim {
        cfg.set("grid.dim", &dim.to_string())?;
        if dim > 1 {
            cfg.set("grid.kind", "radial")?;
        }
    }
    if let Some(e) = &cli.estimate {
        cfg.set("check.estimate", e)?;
    }
    Ok(cfg)
}

struct Session {
    out: OutputDir,
    quiet: bool,
}

impl Session {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "fail"
    }
}

/// Run the selected subcommand; `Ok(false)` means a verdict failed.
pub fn execute(cli: &Cli) -> Result<bool> {
    let cfg = build_config(cli)?;
    let mut s = Session { out: OutputDir::create(&cli.out)?, quiet: cli.quiet };
    let rendered = cfg.render();
    s.out.write("defaults.cfg", |w| Ok(w.write_all(rendered.as_bytes())?))?;
    let pass = match cli.command {
        Command::Solve => solve(&cfg, &mut s)?,
        Command::Check => check(&cfg, &mut s)?,
        Command::ProfileVss => profile_vss(&cfg, &mut s)?,
        Command::ProfileNonuniq => profile_nonuniq(&cfg, &mut s)?,
        Command::Stationary => stationary(&cfg, &mut s)?,
        Command::Supersolution => supersolution(&cfg, &mut s)?,
        Command::Rates => rates(&cfg, &mut s)?,
        Command::OracleQ2 => oracle(&cfg, &mut s)?,
        Command::ApproxMono => approx(&cfg, &mut s)?,
        Command::VssLimit => vss_limit(&cfg, &mut s)?,
    };
    s.out.finish()?;
    Ok(pass)
}

/// Exit code for a parsed command line; diagnostics go to standard error.
pub fn main_with(cli: &Cli) -> i32 {
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn solve(cfg: &Config, s: &mut Session) -> Result<bool> {
    let spec = cfg.problem()?;
    let traj = run(&spec)?;
    for (k, field) in traj.snapshots.iter().enumerate() {
        s.out.write(&format!("snapshot_{k:03}.csv"), |w| io::write_field(w, field, spec.q, spec.nu))?;
    }
    s.out.write("run_meta.csv", |w| io::write_run_meta(w, &traj))?;
    s.say(format!(
        "solve: {} snapshots, {} steps, final mass {}",
        traj.snapshots.len(),
        traj.stats.steps,
        traj.final_mass()
    ));
    Ok(true)
}

fn selected_checks(cfg: &Config) -> Result<Vec<CheckKind>> {
    let x0 = cfg.f64("check.x0")?;
    let r_exp = cfg.f64("check.R")?;
    let eta = cfg.f64("check.smoothing_eta")?;
    let all = [
        CheckKind::UniversalGradient,
        CheckKind::Growth { x0, eta: cfg.f64("check.eta")? },
        CheckKind::LocalMass { x0: cfg.f64("check.mass_x0")?, eta: cfg.f64("check.mass_eta")? },
        CheckKind::FirstSmoothing { r_exp, x0, eta },
        CheckKind::SecondSmoothing { r_exp, x0, eta, epsilon: cfg.f64("check.epsilon")? },
        CheckKind::LocalSup {
            r_exp,
            x0,
            rho: cfg.f64("check.rho")?,
            theta: cfg.f64("check.theta")?,
            t: cfg.f64("check.t")?,
        },
    ];
    let name = cfg.raw("check.estimate")?;
    Ok(all.into_iter().filter(|c| name == "all" || c.id() == name).collect())
}

fn check(cfg: &Config, s: &mut Session) -> Result<bool> {
    let spec = cfg.problem()?;
    let checks = selected_checks(cfg)?;
    let (reports, summary): (Vec<EstimateReport>, Vec<SummaryRow>) = if cfg.flag("check.stability")? {
        let study = stability_study(&spec, &checks)?;
        let summary = study
            .base
            .iter()
            .zip(&study.rows)
            .map(|(report, row)| match checks.iter().find(|c| c.id() == report.id) {
                Some(CheckKind::UniversalGradient) => SummaryRow::from(report),
                _ => SummaryRow::from(row),
            })
            .collect();
        (study.base, summary)
    } else {
        let traj = run(&spec)?;
        let reports = checks.iter().map(|c| c.apply(&traj)).collect::<Result<Vec<_>>>()?;
        let summary = reports.iter().map(SummaryRow::from).collect();
        (reports, summary)
    };
    s.out.write("report.csv", |w| io::write_estimate_rows(w, &reports))?;
    s.out.write("summary.csv", |w| io::write_summary(w, &summary))?;
    for row in &summary {
        s.say(format!("check: {} C_emp={} {}", row.id, row.c_emp, row.verdict.as_str()));
    }
    Ok(summary.iter().all(|r| r.verdict != Verdict::Fail))
}

fn shoot_options(cfg: &Config) -> Result<ShootOptions> {
    Ok(ShootOptions {
        band: cfg.f64("profile.band")?,
        span: cfg.f64("profile.span")?,
        decay_floor: cfg.f64("profile.decay_floor")?,
        ..ShootOptions::default()
    })
}

fn profile_vss(cfg: &Config, s: &mut Session) -> Result<bool> {
    let eta_max = cfg.opt_f64("profile.eta_max")?.unwrap_or(VSS_ETA_MAX);
    let profile = solve_vss_with(
        cfg.f64("problem.q")?,
        cfg.count("grid.dim")?,
        cfg.f64("profile.tol")?,
        eta_max,
        &shoot_options(cfg)?,
    )?;
    s.out.write("profile.csv", |w| io::write_profile(w, &profile))?;
    s.say(format!("profile-vss: f0={} class={}", profile.f0, profile.class.as_str()));
    Ok(true)
}

fn profile_nonuniq(cfg: &Config, s: &mut Session) -> Result<bool> {
    let (q, dim) = (cfg.f64("problem.q")?, cfg.count("grid.dim")?);
    let eta_max = cfg.opt_f64("profile.eta_max")?.unwrap_or(NONUNIQ_ETA_MAX);
    let profile = solve_nonuniq_with(
        q,
        dim,
        cfg.f64("profile.c_target")?,
        cfg.f64("profile.tol")?,
        eta_max,
        &shoot_options(cfg)?,
    )?;
    let t = cfg.f64("profile.t")?;
    let cells: Vec<usize> = cfg.floats("profile.residual_cells")?.iter().map(|&c| c as usize).collect();
    let order = residual_order(
        &profile,
        cfg.f64("profile.residual_length")?,
        &cells,
        t,
        cfg.f64("profile.r_lo")?,
        cfg.f64("profile.r_hi")?,
    )?;
    let report = nonuniqueness_experiment(&profile, &cfg.geometry()?, t)?;
    let curvature = profile.curvature_at_origin()?;
    let expected = curvature_limit(profile.f0, dim, profile.a);
    s.out.write("profile.csv", |w| io::write_profile(w, &profile))?;
    s.out.write("residual_order.csv", |w| {
        writeln!(w, "# t={t}")?;
        writeln!(w, "cells,residual,order")?;
        for (k, (n, r)) in order.cells.iter().zip(&order.residuals).enumerate() {
            let p = if k == 0 { String::new() } else { order.orders[k - 1].to_string() };
            writeln!(w, "{n},{r},{p}")?;
        }
        Ok(())
    })?;
    s.out.write("nonuniqueness.csv", |w| {
        writeln!(w, "t,witness,dist_stationary,dist_profile,curvature,curvature_expected")?;
        writeln!(
            w,
            "{},{},{},{},{curvature},{expected}",
            report.t, report.witness, report.dist_stationary, report.dist_profile
        )?;
        Ok(())
    })?;
    let pass = profile.is_strictly_increasing()
        && order.orders.iter().all(|&p| p >= 1.8)
        && (curvature - expected).abs() <= 1e-6
        && report.witness > 0.01;
    s.say(format!(
        "profile-nonuniq: f0={} c_inf={:?} orders={:?} witness={} {}",
        profile.f0,
        profile.c_inf,
        order.orders,
        report.witness,
        verdict(pass)
    ));
    Ok(pass)
}

fn stationary(cfg: &Config, s: &mut Session) -> Result<bool> {
    let (q, dim) = (cfg.f64("problem.q")?, cfg.count("grid.dim")?);
    let critical = DerivedConstants::new(q, dim)?.ctilde;
    let c = match (cfg.opt_f64("stationary.c")?, critical) {
        (Some(c), _) => c,
        (None, Some(c)) => c,
        (None, None) => return Err(Error::Regime(format!("no stationary solution for q = {q}, N = {dim}"))),
    };
    let rows = cfg
        .floats("stationary.r")?
        .into_iter()
        .map(|r| Ok((r, stationary_residual(c, q, dim, r)?)))
        .collect::<Result<Vec<_>>>()?;
    s.out.write("stationary.csv", |w| {
        writeln!(w, "# c={c}")?;
        writeln!(w, "r,residual")?;
        for (r, res) in &rows {
            writeln!(w, "{r},{res}")?;
        }
        Ok(())
    })?;
    let pass = Some(c) != critical || rows.iter().all(|(_, res)| res.abs() <= 1e-12);
    s.say(format!("stationary: c={c} max|residual|={} {}", rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max), verdict(pass)));
    Ok(pass)
}

fn supersolution(cfg: &Config, s: &mut Session) -> Result<bool> {
    let q = cfg.f64("problem.q")?;
    let (sigma0, gamma0) = default_branch(q);
    let spec = build_phi(
        cfg.count("grid.dim")?,
        q,
        cfg.f64("problem.nu")?,
        cfg.opt_f64("super.sigma")?.unwrap_or(sigma0),
        cfg.opt_f64("super.gamma")?.unwrap_or(gamma0),
        cfg.f64("super.spacing")?,
    )?;
    let report = supersolution_residual(&spec, &cfg.floats("super.times")?)?;
    s.out.write("supersolution.csv", |w| io::write_supersolution(w, &spec))?;
    s.out.write("supersolution_residual.csv", |w| {
        writeln!(w, "t,min_residual,tolerance")?;
        for (t, m) in report.times.iter().zip(&report.min_residual) {
            writeln!(w, "{t},{m},{}", report.tolerance)?;
        }
        Ok(())
    })?;
    s.say(format!(
        "supersolution: lambda1={} K={} m_K={} min residual={} {}",
        spec.lambda1,
        spec.k,
        spec.m_k,
        report.overall_min(),
        verdict(report.pass)
    ));
    Ok(report.pass)
}

fn rates(cfg: &Config, s: &mut Session) -> Result<bool> {
    let rc = RateExperimentConfig {
        radius: cfg.f64("grid.length")?,
        cells: cfg.count("grid.cells")?,
        t_end: cfg.f64("problem.t_end")?,
        t_min: cfg.f64("rates.t_min")?,
        t_max: cfg.f64("rates.t_max")?,
        samples: cfg.count("rates.samples")?,
        ..RateExperimentConfig::new(cfg.f64("problem.q")?, cfg.count("grid.dim")?, cfg.f64("rates.delta")?)
    };
    let report = smoothing_rate_experiment(&rc)?;
    s.out.write("rates.csv", |w| io::write_rates(w, std::slice::from_ref(&report)))?;
    s.out.write("rate_samples.csv", |w| io::write_rate_samples(w, &report))?;
    s.say(format!(
        "rates: slope={} (first {}, second {}) {}",
        report.fit.slope,
        report.slope_bound_first,
        report.slope_bound_second,
        verdict(report.pass)
    ));
    Ok(report.pass)
}

fn oracle(cfg: &Config, s: &mut Session) -> Result<bool> {
    let spec = cfg.problem()?;
    let finest = cfg.count("grid.cells")?;
    let levels = cfg.count("oracle.levels")?.max(2) as u32;
    let cells: Vec<usize> = (0..levels).rev().map(|k| finest >> k).collect();
    let report = hopf_cole_convergence(&spec, &cells)?;
    s.out.write("oracle.csv", |w| {
        writeln!(w, "# relative_error={}", report.relative_error)?;
        writeln!(w, "cells,error,order")?;
        for (k, (n, e)) in report.cells.iter().zip(&report.errors).enumerate() {
            let p = if k == 0 { String::new() } else { report.orders[k - 1].to_string() };
            writeln!(w, "{n},{e},{p}")?;
        }
        Ok(())
    })?;
    s.say(format!("oracle-q2: orders={:?} relative error={} {}", report.orders, report.relative_error, verdict(report.pass)));
    Ok(report.pass)
}

fn approx(cfg: &Config, s: &mut Session) -> Result<bool> {
    let spec = cfg.problem()?;
    let report = monotone_approximation_experiment(&spec, &cfg.floats("approx.levels")?)?;
    let decreasing = report.cauchy.windows(2).all(|w| w[1] <= w[0]);
    s.out.write("approx.csv", |w| {
        writeln!(w, "# max_violation={}", report.max_violation)?;
        writeln!(w, "level_low,level_high,sup_difference")?;
        for (pair, d) in report.levels.windows(2).zip(&report.cauchy) {
            writeln!(w, "{},{},{d}", pair[0], pair[1])?;
        }
        Ok(())
    })?;
    let pass = report.monotone && decreasing;
    s.say(format!("approx-mono: max violation={} cauchy={:?} {}", report.max_violation, report.cauchy, verdict(pass)));
    Ok(pass)
}

fn vss_limit(cfg: &Config, s: &mut Session) -> Result<bool> {
    let spec = cfg.problem()?;
    let report = vss_limit_experiment(&spec, &cfg.floats("vss.kappas")?, cfg.f64("vss.t_probe")?)?;
    s.out.write("vss_limit.csv", |w| {
        writeln!(w, "# t_probe={}", report.t_probe)?;
        writeln!(w, "# f0={}", report.profile_f0)?;
        writeln!(w, "kappa,distance")?;
        for (k, d) in report.kappas.iter().zip(&report.distances) {
            writeln!(w, "{k},{d}")?;
        }
        Ok(())
    })?;
    s.say(format!("vss-limit: distances={:?} {}", report.distances, verdict(report.nonincreasing)));
    Ok(report.nonincreasing)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subcommand_names_match_config() {
        for cmd in Cli::command().get_subcommands() {
            assert!(SUBCOMMANDS.contains(&cmd.get_name()), "{}", cmd.get_name());
        }
        assert_eq!(Cli::command().get_subcommands().count(), SUBCOMMANDS.len());
        Cli::command().debug_assert();
    }

    #[test]
    fn flags_override_config() {
        let cli = parse_args(["vhj", "solve", "--q", "2.5", "--dim", "3", "--grid", "64"]).unwrap();
        let cfg = build_config(&cli).unwrap();
        assert_eq!(cfg.f64("problem.q").unwrap(), 2.5);
        assert_eq!(cfg.raw("grid.kind").unwrap(), "radial");
        assert_eq!(cfg.count("grid.cells").unwrap(), 64);
        let cli = parse_args(["vhj", "check", "--estimate", "nonsense"]).unwrap();
        assert!(build_config(&cli).is_err());
    }
}
