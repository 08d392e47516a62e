//! Numerical checks of the a priori estimates.
//!
//! Each check turns one inequality into a table of `(time, ball, measured,
//! bound functional, ratio)` rows. The universal gradient bound has no
//! constant and gets a direct verdict; for the others the constant is
//! unknown, so the verdict is the stability of the empirical constant
//! `C_emp = max ratio` under grid refinement and domain doubling.

use crate::constants::DerivedConstants;
use crate::error::{Error, Result};
use crate::grid::{ball_norm, ball_power_integral, ball_sup, gradient_values, Field, Geometry, GridKind};
use crate::initial_data::{DatumKind, InitialDatum};
use crate::rates::fit_power_law;
use crate::selfsimilar::{assemble, solve_vss, ProfileSolution};
use crate::solver::{run_ensemble, Boundary, ProblemSpec, Trajectory};
use rayon::prelude::*;

/// Floor on `u` in the gradient ratio.
pub const GRADIENT_FLOOR: f64 = 1e-14;
/// Largest admissible relative drift of an empirical constant.
pub const MAX_DRIFT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Needs a stability study before a verdict.
    Pending,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Pending => "pending",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateRow {
    pub t: f64,
    pub ball: String,
    pub measured: f64,
    pub bound: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateReport {
    pub id: String,
    pub rows: Vec<EstimateRow>,
    pub c_emp: f64,
    /// Slope of `sup u` against `t` (second smoothing only).
    pub rate_slope: Option<f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl EstimateReport {
    fn new(id: &str, rows: Vec<EstimateRow>) -> Self {
        let c_emp = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        Self { id: id.into(), rows, c_emp, rate_slope: None, verdict: Verdict::Pending, notes: Vec::new() }
    }
}

fn ratio(measured: f64, bound: f64) -> f64 {
    if measured == 0.0 {
        0.0
    } else {
        measured / bound
    }
}

fn center_index(geometry: &Geometry, x0: f64) -> Result<usize> {
    match geometry.kind() {
        GridKind::Radial if x0 != 0.0 => {
            Err(Error::Precondition("balls on radial grids must be centered at the origin".into()))
        }
        GridKind::Radial => Ok(0),
        GridKind::Cartesian1d => {
            let i = geometry.nearest_index(x0);
            if (geometry.coord(i) - x0).abs() > 1e-9 * geometry.spacing().max(1.0) {
                return Err(Error::Precondition(format!("ball center {x0} is not a grid node")));
            }
            Ok(i)
        }
    }
}

fn ball_label(x0: f64, radius: f64) -> String {
    format!("B({x0};{radius})")
}

fn timed(traj: &Trajectory) -> (Vec<&Field>, Vec<String>) {
    let mut notes = Vec::new();
    let kept = traj
        .snapshots
        .iter()
        .filter(|f| {
            if f.t() > 0.0 {
                true
            } else {
                notes.push("t = 0 snapshot skipped".to_string());
                false
            }
        })
        .collect();
    (kept, notes)
}

/// `max |grad u|^q (q - 1) t / max(u, 1e-14)` over the inner half of the
/// grid, at every snapshot; passes when `<= 1 + 10 h^{1/2}`.
pub fn check_universal_gradient(traj: &Trajectory) -> Result<EstimateReport> {
    let geo = traj.spec.geometry;
    let q = traj.spec.q;
    let h = geo.spacing();
    let tol = gradient_tolerance(h);
    let (fields, notes) = timed(traj);
    let inner: Vec<usize> = geo.inner_half().collect();
    let mut rows = Vec::new();
    for f in fields {
        let grad = gradient_values(f.values(), h, geo.kind() == GridKind::Radial)?;
        let worst = inner
            .iter()
            .map(|&i| grad[i].abs().powf(q) * (q - 1.0) * f.t() / f.values()[i].max(GRADIENT_FLOOR))
            .fold(0.0, f64::max);
        rows.push(EstimateRow {
            t: f.t(),
            ball: format!("inner_half({})", 0.5 * geo.length()),
            measured: worst,
            bound: 1.0,
            ratio: worst,
        });
    }
    let mut report = EstimateReport::new("universal_gradient", rows);
    report.notes = notes;
    report.verdict = if report.c_emp <= 1.0 + tol { Verdict::Pass } else { Verdict::Fail };
    Ok(report)
}

/// Discretization slack of the gradient bound.
pub fn gradient_tolerance(h: f64) -> f64 {
    10.0 * h.sqrt()
}

/// `u(x, t) / (t^{-1/(q-1)} |x - x0|^{q'} + t^{-1/(q-1)} + t + int_{B(x0, eta)} u0)`.
pub fn check_growth_bound(traj: &Trajectory, x0: f64, eta: f64) -> Result<EstimateReport> {
    let geo = traj.spec.geometry;
    let c = DerivedConstants::new(traj.spec.q, geo.dim())?;
    let center = center_index(&geo, x0)?;
    let mass = ball_norm(&traj.initial, center, eta, 1.0)?;
    let (fields, notes) = timed(traj);
    let inner: Vec<usize> = geo.inner_half().collect();
    let mut rows = Vec::new();
    for f in fields {
        let t = f.t();
        let tp = t.powf(-1.0 / (traj.spec.q - 1.0));
        let mut best = EstimateRow { t, ball: String::new(), measured: 0.0, bound: 1.0, ratio: 0.0 };
        for &i in &inner {
            let d = (geo.coord(i) - geo.coord(center)).abs();
            let bound = tp * d.powf(c.qprime) + tp + t + mass;
            let r = ratio(f.values()[i], bound);
            if r >= best.ratio {
                best = EstimateRow { t, ball: format!("x={}", geo.coord(i)), measured: f.values()[i], bound, ratio: r };
            }
        }
        rows.push(best);
    }
    let mut report = EstimateReport::new("growth_bound", rows);
    report.notes = notes;
    report.notes.push("the constants C(q) and C(N,q,eta) are merged into one".into());
    Ok(report)
}

/// `int_{B(x0, eta)} u(t)` against `eta^{N - q'} t + int_{B(x0, 2 eta)} u0`;
/// the constant multiplies the `t`-term only.
pub fn check_local_mass(traj: &Trajectory, x0: f64, eta: f64) -> Result<EstimateReport> {
    let geo = traj.spec.geometry;
    let c = DerivedConstants::new(traj.spec.q, geo.dim())?;
    let center = center_index(&geo, x0)?;
    let mass0 = ball_norm(&traj.initial, center, 2.0 * eta, 1.0)?;
    let scale = eta.powf(geo.dim() as f64 - c.qprime);
    let (fields, notes) = timed(traj);
    let mut rows = Vec::new();
    for f in fields {
        let measured = ball_norm(f, center, eta, 1.0)?;
        let t_term = scale * f.t();
        rows.push(EstimateRow {
            t: f.t(),
            ball: ball_label(x0, eta),
            measured,
            bound: t_term + mass0,
            ratio: (measured - mass0).max(0.0) / t_term,
        });
    }
    let mut report = EstimateReport::new("local_mass", rows);
    report.notes = notes;
    Ok(report)
}

fn initial_norm(traj: &Trajectory, center: usize, eta: f64, r_exp: f64) -> Result<f64> {
    traj.spec.initial.ensure_locally_integrable(r_exp, traj.spec.geometry.dim())?;
    ball_norm(&traj.initial, center, eta, r_exp)
}

/// `sup_{B(x0, eta/2)} u(t)` against `t^{-N/(2R)} (t + ||u0||_{L^R(B(x0, eta))})`.
pub fn check_first_smoothing(traj: &Trajectory, r_exp: f64, x0: f64, eta: f64) -> Result<EstimateReport> {
    let geo = traj.spec.geometry;
    let n = geo.dim() as f64;
    let center = center_index(&geo, x0)?;
    let norm = initial_norm(traj, center, eta, r_exp)?;
    let (fields, notes) = timed(traj);
    let mut rows = Vec::new();
    for f in fields {
        let t = f.t();
        let measured = ball_sup(f, center, 0.5 * eta)?;
        let bound = t.powf(-n / (2.0 * r_exp)) * (t + norm);
        rows.push(EstimateRow { t, ball: ball_label(x0, 0.5 * eta), measured, bound, ratio: ratio(measured, bound) });
    }
    let mut report = EstimateReport::new("first_smoothing", rows);
    report.notes = notes;
    Ok(report)
}

/// `sup_{B(x0, eta/2)} u(t)` against the two-term bound of the second
/// regularizing effect with both constants set to 1.
pub fn check_second_smoothing(traj: &Trajectory, r_exp: f64, x0: f64, eta: f64, epsilon: f64) -> Result<EstimateReport> {
    let q = traj.spec.q;
    if !(r_exp >= 1.0 && r_exp > q - 1.0) {
        return Err(Error::ExponentDomain(format!("need R >= 1 and R > q - 1 = {}, got R = {r_exp}", q - 1.0)));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("epsilon must be > 0, got {epsilon}")));
    }
    let geo = traj.spec.geometry;
    let n = geo.dim() as f64;
    let center = center_index(&geo, x0)?;
    let norm = initial_norm(traj, center, eta, r_exp)?;
    let denom = q * r_exp + n * (q - 1.0);
    let (fields, notes) = timed(traj);
    let mut rows = Vec::new();
    for f in fields {
        let t = f.t();
        let measured = ball_sup(f, center, 0.5 * eta)?;
        let bound = t.powf(-n / denom) * (t + norm).powf(r_exp * q / denom)
            + t.powf((1.0 - epsilon) / (r_exp + 1.0 - q)) * norm.powf(r_exp / (r_exp + 1.0 - q));
        rows.push(EstimateRow { t, ball: ball_label(x0, 0.5 * eta), measured, bound, ratio: ratio(measured, bound) });
    }
    let samples: Vec<(f64, f64)> = rows.iter().filter(|r| r.measured > 0.0).map(|r| (r.t, r.measured)).collect();
    let rate_slope = fit_power_law(&samples, None).ok().map(|fit| fit.slope);
    let mut report = EstimateReport::new("second_smoothing", rows);
    report.rate_slope = rate_slope;
    report.notes = notes;
    Ok(report)
}

/// Minimum number of snapshots in `[t - theta, t]` for the local sup check.
pub const MIN_WINDOW_SNAPSHOTS: usize = 5;

/// Space-time sup over `B(x0, rho/2) x [t - theta, t]` against the three
/// terms of the local estimate, all built on `int int_{B(x0, rho)} u^R` over
/// `[t - 2 theta, t]` (trapezoid rule over stored snapshots).
pub fn check_local_sup(traj: &Trajectory, r_exp: f64, x0: f64, rho: f64, theta: f64, t: f64) -> Result<EstimateReport> {
    let q = traj.spec.q;
    if !(r_exp > q - 1.0 && r_exp >= 1.0) {
        return Err(Error::ExponentDomain(format!("need R >= 1 and R > q - 1 = {}, got R = {r_exp}", q - 1.0)));
    }
    if !(theta > 0.0 && t - 2.0 * theta > 0.0) {
        return Err(Error::Precondition(format!("need 0 < t - 2 theta (t={t}, theta={theta})")));
    }
    let geo = traj.spec.geometry;
    let n = geo.dim() as f64;
    let center = center_index(&geo, x0)?;
    let slack = 1e-9 * t;
    let in_window = |f: &&Field, lo: f64| f.t() >= lo - slack && f.t() <= t + slack;
    let near: Vec<&Field> = traj.snapshots.iter().filter(|f| in_window(f, t - theta)).collect();
    if near.len() < MIN_WINDOW_SNAPSHOTS {
        return Err(Error::InsufficientSchedule(format!(
            "{} snapshots in [{}, {t}], need {MIN_WINDOW_SNAPSHOTS}",
            near.len(),
            t - theta
        )));
    }
    let wide: Vec<&Field> = traj.snapshots.iter().filter(|f| in_window(f, t - 2.0 * theta)).collect();
    let measured = near
        .iter()
        .map(|f| ball_sup(f, center, 0.5 * rho))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let mut integral = 0.0;
    let values = wide
        .iter()
        .map(|f| ball_power_integral(f, center, rho, r_exp))
        .collect::<Result<Vec<_>>>()?;
    for k in 1..wide.len() {
        integral += 0.5 * (values[k] + values[k - 1]) * (wide[k].t() - wide[k - 1].t());
    }
    let d = q * r_exp + n * (q - 1.0);
    let bound = theta.powf(-(n + q) / d) * integral.powf(q / d)
        + rho.powf(-(n + q) / ((q - 1.0) * (r_exp + n + 1.0))) * integral.powf(1.0 / (r_exp + n + 1.0))
        + rho.powf(-(n + q) / (r_exp + 1.0 - q)) * integral.powf(1.0 / (r_exp + 1.0 - q));
    let row = EstimateRow { t, ball: ball_label(x0, 0.5 * rho), measured, bound, ratio: ratio(measured, bound) };
    Ok(EstimateReport::new("local_sup", vec![row]))
}

/// A check together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckKind {
    UniversalGradient,
    Growth { x0: f64, eta: f64 },
    LocalMass { x0: f64, eta: f64 },
    FirstSmoothing { r_exp: f64, x0: f64, eta: f64 },
    SecondSmoothing { r_exp: f64, x0: f64, eta: f64, epsilon: f64 },
    LocalSup { r_exp: f64, x0: f64, rho: f64, theta: f64, t: f64 },
}

impl CheckKind {
    pub fn id(&self) -> &'static str {
        match self {
            CheckKind::UniversalGradient => "universal_gradient",
            CheckKind::Growth { .. } => "growth_bound",
            CheckKind::LocalMass { .. } => "local_mass",
            CheckKind::FirstSmoothing { .. } => "first_smoothing",
            CheckKind::SecondSmoothing { .. } => "second_smoothing",
            CheckKind::LocalSup { .. } => "local_sup",
        }
    }

    pub fn apply(&self, traj: &Trajectory) -> Result<EstimateReport> {
        match *self {
            CheckKind::UniversalGradient => check_universal_gradient(traj),
            CheckKind::Growth { x0, eta } => check_growth_bound(traj, x0, eta),
            CheckKind::LocalMass { x0, eta } => check_local_mass(traj, x0, eta),
            CheckKind::FirstSmoothing { r_exp, x0, eta } => check_first_smoothing(traj, r_exp, x0, eta),
            CheckKind::SecondSmoothing { r_exp, x0, eta, epsilon } => {
                check_second_smoothing(traj, r_exp, x0, eta, epsilon)
            }
            CheckKind::LocalSup { r_exp, x0, rho, theta, t } => check_local_sup(traj, r_exp, x0, rho, theta, t),
        }
    }

    /// The five constant-carrying checks with the standard parameters.
    pub fn standard_set() -> Vec<CheckKind> {
        vec![
            CheckKind::Growth { x0: 0.0, eta: 0.5 },
            CheckKind::LocalMass { x0: 1.0, eta: 0.25 },
            CheckKind::FirstSmoothing { r_exp: 1.0, x0: 0.0, eta: 1.0 },
            CheckKind::SecondSmoothing { r_exp: 1.0, x0: 0.0, eta: 1.0, epsilon: 0.1 },
            CheckKind::LocalSup { r_exp: 1.0, x0: 0.0, rho: 1.0, theta: 0.05, t: 0.3 },
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityRow {
    pub id: String,
    pub c_base: f64,
    pub c_refined: f64,
    pub c_doubled: f64,
    pub drift: f64,
    pub verdict: Verdict,
}

/// `max(|C_r - C_b|, |C_d - C_b|) / C_b`, zero when all three vanish.
pub fn drift(c_base: f64, c_refined: f64, c_doubled: f64) -> f64 {
    let spread = (c_refined - c_base).abs().max((c_doubled - c_base).abs());
    if spread == 0.0 {
        0.0
    } else if c_base == 0.0 {
        f64::INFINITY
    } else {
        spread / c_base
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityStudy {
    pub base: Vec<EstimateReport>,
    pub rows: Vec<StabilityRow>,
}

/// Run `spec` on its grid, on the refined grid and on the doubled domain, and
/// compare the empirical constants of every check.
pub fn stability_study(spec: &ProblemSpec, checks: &[CheckKind]) -> Result<StabilityStudy> {
    let geo = spec.geometry;
    let variants = [geo, geo.refined(), geo.doubled()];
    let trajectories = variants
        .par_iter()
        .map(|g| run_ensemble(std::slice::from_ref(&spec.clone().with_geometry(*g))).map(|mut v| v.remove(0)))
        .collect::<Result<Vec<_>>>()?;
    let mut base = Vec::with_capacity(checks.len());
    let mut rows = Vec::with_capacity(checks.len());
    for check in checks {
        let reports = trajectories.iter().map(|t| check.apply(t)).collect::<Result<Vec<_>>>()?;
        let (cb, cr, cd) = (reports[0].c_emp, reports[1].c_emp, reports[2].c_emp);
        let d = drift(cb, cr, cd);
        let verdict = if d < MAX_DRIFT { Verdict::Pass } else { Verdict::Fail };
        let mut report = reports.into_iter().next().unwrap();
        if report.verdict == Verdict::Pending {
            report.verdict = verdict;
        }
        rows.push(StabilityRow { id: check.id().into(), c_base: cb, c_refined: cr, c_doubled: cd, drift: d, verdict });
        base.push(report);
    }
    Ok(StabilityStudy { base, rows })
}

/// Relative ordering violation tolerated by the structural checks.
pub const ORDER_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneApproximationReport {
    pub levels: Vec<f64>,
    /// Largest `u_n - u_m` over snapshots and nodes for `n < m`.
    pub max_violation: f64,
    pub monotone: bool,
    /// Sup distance at the final time between consecutive levels (on the
    /// nodes where ordering is checked).
    pub cauchy: Vec<f64>,
}

/// Solve from the truncations `min(u0, n)` for increasing `n` in lockstep and
/// check that the solutions increase with `n`.
pub fn monotone_approximation_experiment(spec: &ProblemSpec, levels: &[f64]) -> Result<MonotoneApproximationReport> {
    if levels.len() < 2 || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("levels must be at least two increasing values".into()));
    }
    let specs: Vec<ProblemSpec> = levels
        .iter()
        .map(|&n| spec.clone().with_initial(spec.initial.with_cap(n)))
        .collect();
    let runs = run_ensemble(&specs)?;
    // the extrapolated free boundary is not monotone, so only the inner half counts there
    let nodes: Vec<usize> = match spec.boundary {
        Boundary::DirichletZero => (0..spec.geometry.node_count()).collect(),
        Boundary::TruncatedFree => spec.geometry.inner_half().collect(),
    };
    let mut max_violation = f64::NEG_INFINITY;
    let mut monotone = true;
    let mut cauchy = Vec::new();
    for pair in runs.windows(2) {
        let mut scale: f64 = 0.0;
        let mut violation = f64::NEG_INFINITY;
        for (fu, fv) in pair[0].snapshots.iter().zip(&pair[1].snapshots) {
            for &i in &nodes {
                violation = violation.max(fu.values()[i] - fv.values()[i]);
                scale = scale.max(fv.values()[i]);
            }
        }
        max_violation = max_violation.max(violation);
        monotone &= violation <= ORDER_TOLERANCE * scale;
        let (a, b) = (pair[0].final_field(), pair[1].final_field());
        cauchy.push(nodes.iter().map(|&i| (a.values()[i] - b.values()[i]).abs()).fold(0.0, f64::max));
    }
    Ok(MonotoneApproximationReport { levels: levels.to_vec(), max_violation, monotone, cauchy })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VssLimitReport {
    pub kappas: Vec<f64>,
    pub t_probe: f64,
    /// Max over the inner half of `|u_kappa(t*) - Y(t*)|`.
    pub distances: Vec<f64>,
    pub nonincreasing: bool,
    pub profile_f0: f64,
}

/// Solve from `kappa` times a mollified Dirac mass for each `kappa` and
/// measure the distance to the very singular solution at `t_probe`.
pub fn vss_limit_experiment(spec: &ProblemSpec, kappas: &[f64], t_probe: f64) -> Result<VssLimitReport> {
    let c = DerivedConstants::new(spec.q, spec.geometry.dim())?;
    if !c.dirac_solvable() {
        return Err(Error::Regime(format!(
            "Dirac data are not admissible for q = {} >= q* = {}",
            spec.q, c.qstar
        )));
    }
    if spec.nu != 1.0 {
        return Err(Error::Regime("the self-similar profile assumes nu = 1".into()));
    }
    if kappas.is_empty() || kappas.iter().any(|&k| !(k > 0.0)) {
        return Err(Error::Precondition("kappas must be positive".into()));
    }
    let profile = solve_vss(spec.q, spec.geometry.dim(), 1e-10)?;
    vss_limit_with_profile(spec, kappas, t_probe, &profile)
}

pub fn vss_limit_with_profile(
    spec: &ProblemSpec,
    kappas: &[f64],
    t_probe: f64,
    profile: &ProfileSolution,
) -> Result<VssLimitReport> {
    let eps = match spec.initial.kind {
        DatumKind::Dirac { eps, .. } => eps,
        _ => None,
    };
    let mut times: Vec<f64> = spec.snapshots.iter().copied().filter(|&s| s < t_probe).collect();
    times.push(t_probe);
    let specs: Vec<ProblemSpec> = kappas
        .iter()
        .map(|&k| {
            let mut s = spec.clone().with_initial(InitialDatum::dirac(k, eps)).with_snapshots(times.clone());
            s.t_end = t_probe;
            s
        })
        .collect();
    let runs = run_ensemble(&specs)?;
    let geo = spec.geometry;
    let inner: Vec<usize> = geo.inner_half().collect();
    let distances = runs
        .iter()
        .map(|traj| {
            let u = traj.final_field();
            inner.iter().try_fold(0.0f64, |acc, &i| {
                Ok(acc.max((u.values()[i] - assemble(profile, geo.radius_of(i), t_probe)?).abs()))
            })
        })
        .collect::<Result<Vec<f64>>>()?;
    let nonincreasing = distances.windows(2).all(|w| w[1] <= w[0]);
    Ok(VssLimitReport { kappas: kappas.to_vec(), t_probe, distances, nonincreasing, profile_f0: profile.f0 })
}
