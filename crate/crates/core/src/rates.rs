//! Log-log power-law fits and the smoothing-rate experiment.

use crate::constants::DerivedConstants;
use crate::error::{Error, Result};
use crate::grid::{ball_sup, Geometry};
use crate::initial_data::InitialDatum;
use crate::solver::{run, Boundary, ProblemSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    /// Samples inside the fit window.
    pub samples: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination of the log-log regression.
    pub determination: f64,
    pub window: (f64, f64),
}

/// Least squares on `(ln t, ln m)` over samples with `t` in `window`
/// (all samples when `None`). Needs at least 4 samples spanning a decade.
pub fn fit_power_law(samples: &[(f64, f64)], window: Option<(f64, f64)>) -> Result<RateFit> {
    if let Some(&(t, m)) = samples.iter().find(|(t, m)| !(*t > 0.0 && *m > 0.0)) {
        return Err(Error::OutOfDomain(format!("power-law samples must be positive, got ({t}, {m})")));
    }
    let window = window.unwrap_or_else(|| {
        let lo = samples.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
        let hi = samples.iter().map(|s| s.0).fold(0.0, f64::max);
        (lo, hi)
    });
    let slack = 1e-12;
    let kept: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|&(t, _)| t >= window.0 * (1.0 - slack) && t <= window.1 * (1.0 + slack))
        .collect();
    if kept.len() < 4 {
        return Err(Error::Precondition(format!("need >= 4 samples in the fit window, got {}", kept.len())));
    }
    let t_lo = kept.iter().map(|s| s.0).fold(f64::INFINITY, f64::min);
    let t_hi = kept.iter().map(|s| s.0).fold(0.0, f64::max);
    if t_hi < 10.0 * t_lo * (1.0 - slack) {
        return Err(Error::Precondition(format!("fit window [{t_lo}, {t_hi}] spans less than a decade")));
    }
    let n = kept.len() as f64;
    let xs: Vec<f64> = kept.iter().map(|s| s.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|s| s.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let determination = if syy > 0.0 { (1.0 - sse / syy).max(0.0) } else { 1.0 };
    Ok(RateFit { samples: kept, slope, intercept, determination, window })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateExperimentConfig {
    pub q: f64,
    pub dim: usize,
    pub delta: f64,
    /// Initial datum; `None` means `|x|^{-a}`.
    pub datum: Option<InitialDatum>,
    pub radius: f64,
    pub cells: usize,
    pub t_end: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub samples: usize,
}

impl RateExperimentConfig {
    pub fn new(q: f64, dim: usize, delta: f64) -> Self {
        Self {
            q,
            dim,
            delta,
            datum: None,
            radius: 4.0,
            cells: 1000,
            t_end: 0.1,
            t_min: 1e-3,
            t_max: 1e-2,
            samples: 13,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub experiment: String,
    pub q: f64,
    pub dim: usize,
    /// Integrability exponent with `N / R = a (1 + delta)`.
    pub r_exp: f64,
    pub delta: f64,
    pub fit: RateFit,
    pub slope_bound_first: f64,
    pub slope_bound_second: f64,
    /// The measured slope is flat: the data are not singular.
    pub non_singular: bool,
    pub pass: bool,
}

/// Exponent `R` with `N / R = a (1 + delta)`.
pub fn sharpness_exponent(q: f64, dim: usize, delta: f64) -> Result<f64> {
    let c = DerivedConstants::new(q, dim)?;
    if !(c.a > 0.0) {
        return Err(Error::Regime(format!("the sharpness family needs q < 2, got q = {q}")));
    }
    Ok(dim as f64 / (c.a * (1.0 + delta)))
}

/// Fit `sup_{B_1} u(., t)` against `t` on an early-time window for the
/// self-similar datum `|x|^{-a}` and compare with both smoothing exponents.
pub fn smoothing_rate_experiment(cfg: &RateExperimentConfig) -> Result<RateReport> {
    let consts = DerivedConstants::new(cfg.q, cfg.dim)?;
    if !(cfg.q > consts.qstar && cfg.q < 2.0) {
        return Err(Error::Regime(format!(
            "rate experiment needs q* = {} < q < 2, got q = {}",
            consts.qstar, cfg.q
        )));
    }
    if !(cfg.delta >= 0.0) {
        return Err(Error::Precondition(format!("delta must be >= 0, got {}", cfg.delta)));
    }
    if !(cfg.t_min > 0.0 && cfg.t_max > cfg.t_min && cfg.t_max <= 0.1 * cfg.t_end * (1.0 + 1e-12)) {
        return Err(Error::Precondition("fit window must satisfy 0 < t_min < t_max <= T/10".into()));
    }
    let a = consts.a;
    let r_exp = sharpness_exponent(cfg.q, cfg.dim, cfg.delta)?;
    let geometry = Geometry::radial(cfg.dim, cfg.radius, cfg.cells)?;
    let datum = cfg.datum.unwrap_or_else(|| InitialDatum::power_singular(1.0, a));
    let n = cfg.samples.max(4);
    let mut times: Vec<f64> = (0..n)
        .map(|k| cfg.t_min * (cfg.t_max / cfg.t_min).powf(k as f64 / (n - 1) as f64))
        .collect();
    times.push(cfg.t_end);
    let spec = ProblemSpec::new(cfg.q, 1.0, geometry, Boundary::DirichletZero, datum, cfg.t_end).with_snapshots(times);
    let traj = run(&spec)?;
    let samples = traj
        .snapshots
        .iter()
        .map(|f| Ok((f.t(), ball_sup(f, 0, 1.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(&samples, Some((cfg.t_min, cfg.t_max)))?;
    let first = consts.first_effect_exponent(r_exp);
    let second = consts.second_effect_exponent(r_exp);
    let non_singular = fit.slope.abs() < 0.05;
    let gap = fit.slope - second;
    let pass = !non_singular
        && (fit.slope + 0.5 * a).abs() <= 0.05
        && gap >= -0.05
        && gap <= 0.5 * a * cfg.delta + 0.05
        && second > first;
    Ok(RateReport {
        experiment: "smoothing_rate".into(),
        q: cfg.q,
        dim: cfg.dim,
        r_exp,
        delta: cfg.delta,
        fit,
        slope_bound_first: first,
        slope_bound_second: second,
        non_singular,
        pass,
    })
}
