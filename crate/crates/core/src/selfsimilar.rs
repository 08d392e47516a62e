//! Self-similar profiles `u = t^{-a/2} f(|x| / sqrt t)` (with `nu = 1`).
//!
//! Both regimes share the signed profile equation
//!
//! ```text
//! f'' + ((N - 1)/eta + eta/2) f' + (a/2) f - |f'|^q = 0,   f'(0) = 0,
//! ```
//!
//! with `a = (2 - q)/(q - 1)`. For `1 < q < (N + 2)/(N + 1)` the very singular
//! profile is the separatrix between profiles that cross zero and profiles
//! with an algebraic tail `eta^{-a}`. For `q > 2` (`a < 0`) every positive
//! `f(0)` gives an increasing profile with tail `c eta^{|a|}`, and matching
//! `c` to the stationary constant yields a second solution with the same
//! initial trace as `C |x|^{|a|}`.

use crate::constants::DerivedConstants;
use crate::error::{Error, Result};
use crate::grid::{Field, Geometry};
use crate::initial_data::InitialDatum;
use crate::ode::{bracket, integrate, quintic_hermite, OdeOptions, Stop};
use crate::solver::{max_slope, run, spatial_operator, Boundary, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileMode {
    /// Very singular profile, `1 < q < q*`.
    Vss,
    /// Increasing profile with power tail, `q > 2` and `(N - 1) q > N`.
    Nonuniq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileClass {
    Decaying,
    Algebraic,
    CrossedZero,
    /// `f(0) = 0`: the zero profile.
    Degenerate,
    /// `|f'|` exploded before `eta_max`.
    Blowup,
}

impl ProfileClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProfileClass::Decaying => "decaying",
            ProfileClass::Algebraic => "algebraic",
            ProfileClass::CrossedZero => "crossed_zero",
            ProfileClass::Degenerate => "degenerate",
            ProfileClass::Blowup => "blowup",
        }
    }
}

/// Shooting parameters. The classification thresholds are heuristics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootOptions {
    /// Start of the integration (series start below).
    pub eta0: f64,
    pub rtol: f64,
    /// Relative band around `-a` for `eta f'/f` in the algebraic test.
    pub band: f64,
    /// Ratio `eta_end / eta_enter` the band must be held over (half a decade).
    pub span: f64,
    /// Relative level under which a vss profile counts as decayed.
    pub decay_floor: f64,
    /// `|f'|` above which a profile counts as blown up.
    pub blowup_slope: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            eta0: 1e-4,
            rtol: 1e-10,
            band: 0.05,
            span: 10f64.sqrt(),
            decay_floor: 1e-12,
            blowup_slope: 1e8,
        }
    }
}

/// Default integration range per mode.
pub const VSS_ETA_MAX: f64 = 24.0;
pub const NONUNIQ_ETA_MAX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSolution {
    pub q: f64,
    pub dim: usize,
    pub a: f64,
    pub mode: ProfileMode,
    pub f0: f64,
    /// `lim eta^{-|a|} f` for increasing profiles; `None` otherwise.
    pub c_inf: Option<f64>,
    pub class: ProfileClass,
    pub eta_max: f64,
    pub eta: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
}

impl ProfileSolution {
    /// Last `eta` covered by the integrated samples.
    pub fn eta_end(&self) -> f64 {
        *self.eta.last().unwrap_or(&0.0)
    }

    /// `(f, f')` at `eta` inside the integrated range (quintic Hermite).
    pub fn eval(&self, eta: f64) -> Result<(f64, f64)> {
        let k = bracket(&self.eta, eta)
            .ok_or_else(|| Error::OutOfDomain(format!("eta = {eta} outside [0, {}]", self.eta_end())))?;
        let h = self.eta[k + 1] - self.eta[k];
        let node = |i: usize| (self.f[i], self.fp[i], self.fpp[i]);
        Ok(quintic_hermite(h, node(k), node(k + 1), (eta - self.eta[k]) / h))
    }

    /// `(f, f')` at any `eta >= 0`, extending with the tail model.
    pub fn eval_extended(&self, eta: f64) -> Result<(f64, f64)> {
        if eta <= self.eta_end() {
            return self.eval(eta);
        }
        match (self.class, self.c_inf) {
            (ProfileClass::Decaying | ProfileClass::Degenerate, _) => Ok((0.0, 0.0)),
            (_, Some(c)) if self.a < 0.0 => {
                let b = -self.a;
                Ok((c * eta.powf(b), c * b * eta.powf(b - 1.0)))
            }
            _ => Err(Error::OutOfDomain(format!(
                "eta = {eta} beyond the profile range {} and no tail model",
                self.eta_end()
            ))),
        }
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.f.windows(2).all(|w| w[1] > w[0])
    }

    /// `f''(0)` by Richardson extrapolation of `f'(eta)/eta` at small `eta`.
    pub fn curvature_at_origin(&self) -> Result<f64> {
        let g = |eta: f64| self.eval(eta).map(|(_, fp)| fp / eta);
        Ok((4.0 * g(0.05)? - g(0.1)?) / 3.0)
    }
}

/// `f''` from the profile equation at `eta > 0`.
pub fn profile_rhs(eta: f64, f: f64, fp: f64, q: f64, dim: usize, a: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::OutOfDomain(format!("profile equation needs eta > 0, got {eta}")));
    }
    Ok(rhs(eta, f, fp, q, dim as f64, a))
}

fn rhs(eta: f64, f: f64, fp: f64, q: f64, n: f64, a: f64) -> f64 {
    -((n - 1.0) / eta + 0.5 * eta) * fp - 0.5 * a * f + fp.abs().powf(q)
}

/// `f''(0)` from the `eta -> 0` limit of the equation.
pub fn curvature_limit(f0: f64, dim: usize, a: f64) -> f64 {
    -a * f0 / (2.0 * dim as f64)
}

fn check_mode(q: f64, dim: usize, mode: ProfileMode) -> Result<DerivedConstants> {
    let c = DerivedConstants::new(q, dim)?;
    match mode {
        ProfileMode::Vss if q >= c.qstar => Err(Error::Precondition(format!(
            "very singular profiles need q < q* = {} (N = {dim}), got q = {q}",
            c.qstar
        ))),
        ProfileMode::Nonuniq if c.ctilde.is_none() => Err(Error::Precondition(format!(
            "power-tail profiles need q > 2 and (N - 1) q > N, got q = {q}, N = {dim}"
        ))),
        _ => Ok(c),
    }
}

/// Integrate the profile equation from `f(0) = f0`, `f'(0) = 0`.
pub fn shoot(q: f64, dim: usize, mode: ProfileMode, f0: f64, eta_max: f64) -> Result<ProfileSolution> {
    shoot_with(q, dim, mode, f0, eta_max, &ShootOptions::default())
}

pub fn shoot_with(
    q: f64,
    dim: usize,
    mode: ProfileMode,
    f0: f64,
    eta_max: f64,
    opts: &ShootOptions,
) -> Result<ProfileSolution> {
    let consts = check_mode(q, dim, mode)?;
    let a = consts.a;
    if !(f0.is_finite() && f0 >= 0.0) {
        return Err(Error::Precondition(format!("f(0) must be >= 0, got {f0}")));
    }
    if !(eta_max > opts.eta0) {
        return Err(Error::Precondition(format!("eta_max must exceed {}, got {eta_max}", opts.eta0)));
    }
    let mut sol = ProfileSolution {
        q,
        dim,
        a,
        mode,
        f0,
        c_inf: None,
        class: ProfileClass::Degenerate,
        eta_max,
        eta: vec![0.0, eta_max],
        f: vec![0.0; 2],
        fp: vec![0.0; 2],
        fpp: vec![0.0; 2],
    };
    if f0 == 0.0 {
        if mode == ProfileMode::Nonuniq {
            sol.c_inf = Some(0.0);
        }
        return Ok(sol);
    }

    let n = dim as f64;
    let fpp0 = curvature_limit(f0, dim, a);
    let eta0 = opts.eta0;
    let start = [f0 + 0.5 * fpp0 * eta0 * eta0, fpp0 * eta0];
    let ode_opts = OdeOptions { rtol: opts.rtol, h_init: eta0, h_max: 0.25, ..OdeOptions::default() };

    let mut tag = None;
    let mut rho_min = f64::INFINITY;
    let mut band_enter: Option<f64> = None;
    let field = |eta: f64, y: &[f64; 2]| [y[1], rhs(eta, y[0], y[1], q, n, a)];
    let stop = |eta: f64, y: &[f64; 2]| {
        let (f, fp) = (y[0], y[1]);
        if fp.abs() > opts.blowup_slope {
            tag = Some(ProfileClass::Blowup);
            return true;
        }
        if mode == ProfileMode::Nonuniq {
            return false;
        }
        if f <= 0.0 {
            tag = Some(ProfileClass::CrossedZero);
            return true;
        }
        let rho = eta * fp / f;
        rho_min = rho_min.min(rho);
        // eta f'/f decreases monotonically along a fast-decaying profile;
        // turning back towards -a means an algebraic tail took over.
        if rho_min < -a * (1.0 + opts.band) && rho >= 0.5 * (rho_min - a) {
            tag = Some(ProfileClass::Algebraic);
            return true;
        }
        if (rho + a).abs() <= opts.band * a {
            let enter = *band_enter.get_or_insert(eta);
            if eta >= opts.span * enter {
                tag = Some(ProfileClass::Algebraic);
                return true;
            }
        } else {
            band_enter = None;
        }
        false
    };
    let trace = integrate(field, eta0, start, eta_max, &ode_opts, stop)?;

    sol.eta = std::iter::once(0.0).chain(trace.t.iter().copied()).collect();
    sol.f = std::iter::once(f0).chain(trace.y.iter().map(|y| y[0])).collect();
    sol.fp = std::iter::once(0.0).chain(trace.y.iter().map(|y| y[1])).collect();
    sol.fpp = std::iter::once(fpp0).chain(trace.dy.iter().map(|d| d[1])).collect();

    sol.class = match (trace.stop, tag) {
        (Stop::Breakdown, _) => ProfileClass::Blowup,
        (Stop::Event, Some(t)) => t,
        (Stop::Event, None) => ProfileClass::Blowup,
        (Stop::End, _) => match mode {
            ProfileMode::Nonuniq => ProfileClass::Algebraic,
            ProfileMode::Vss => {
                let (f, fp) = (*sol.f.last().unwrap(), *sol.fp.last().unwrap());
                // still decaying no faster than eta^{-a}: absorption-dominated tail
                if eta_max * fp / f >= -a * (1.0 + opts.band) {
                    ProfileClass::Algebraic
                } else if f < opts.decay_floor * f0 && fp < 0.0 {
                    ProfileClass::Decaying
                } else {
                    return Err(Error::Inconclusive(format!(
                        "no classification event for f(0) = {f0} by eta = {eta_max}"
                    )));
                }
            }
        },
    };
    if mode == ProfileMode::Nonuniq {
        sol.c_inf = Some(match sol.class {
            ProfileClass::Algebraic => fit_tail_constant(&sol)?,
            _ => f64::INFINITY,
        });
    }
    Ok(sol)
}

/// Least-squares fit of `eta^{-|a|} f` against `{1, eta^-2, eta^-4}` over the
/// last decade of the profile; returns the constant term.
pub fn fit_tail_constant(profile: &ProfileSolution) -> Result<f64> {
    let b = profile.a.abs();
    let hi = profile.eta_end();
    let lo = hi / 10.0;
    if lo <= profile.eta[1] {
        return Err(Error::Precondition("profile too short for a tail fit".into()));
    }
    const SAMPLES: usize = 64;
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for k in 0..SAMPLES {
        let eta = lo * (hi / lo).powf(k as f64 / (SAMPLES - 1) as f64);
        let (f, _) = profile.eval(eta)?;
        let x = eta.powi(-2);
        let row = [1.0, x, x * x];
        let y = f * eta.powf(-b);
        for i in 0..3 {
            for j in 0..3 {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
    }
    Ok(solve3(ata, atb)[0])
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut m: [[f64; 3]; 3], mut v: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, piv);
        v.swap(col, piv);
        for row in col + 1..3 {
            let factor = m[row][col] / m[col][col];
            let pivot_row = m[col];
            for (dst, src) in m[row][col..].iter_mut().zip(&pivot_row[col..]) {
                *dst -= factor * src;
            }
            v[row] -= factor * v[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| m[row][k] * x[k]).sum();
        x[row] = (v[row] - s) / m[row][row];
    }
    x
}

/// Very singular profile by bisection on `f(0)` between the zero-crossing and
/// the algebraic-tail classes; `tol` is the relative bracket width.
pub fn solve_vss(q: f64, dim: usize, tol: f64) -> Result<ProfileSolution> {
    solve_vss_with(q, dim, tol, VSS_ETA_MAX, &ShootOptions::default())
}

pub fn solve_vss_with(q: f64, dim: usize, tol: f64, eta_max: f64, opts: &ShootOptions) -> Result<ProfileSolution> {
    check_mode(q, dim, ProfileMode::Vss)?;
    let classify = |f0: f64| shoot_with(q, dim, ProfileMode::Vss, f0, eta_max, opts);

    let scan: Vec<f64> = (0..=24).map(|k| 10f64.powf(-6.0 + 0.5 * k as f64)).collect();
    let mut lo = None;
    let mut prev: Option<(f64, ProfileClass)> = None;
    for &f0 in &scan {
        let class = classify(f0)?.class;
        if let Some((p, ProfileClass::CrossedZero)) = prev {
            if class == ProfileClass::Algebraic {
                lo = Some((p, f0));
                break;
            }
        }
        prev = Some((f0, class));
    }
    let (mut lo, mut hi) = lo.ok_or_else(|| {
        Error::NoSeparatrix(format!("no crossing/algebraic bracket in [1e-6, 1e6] for q = {q}, N = {dim}"))
    })?;

    let mut best = classify(lo)?;
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid) {
            Ok(s) if s.class == ProfileClass::CrossedZero => {
                lo = mid;
                best = s;
            }
            Ok(s) if s.class == ProfileClass::Algebraic => hi = mid,
            // decayed without a decision: the separatrix is resolved
            Ok(s) => {
                best = s;
                break;
            }
            Err(Error::Inconclusive(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(truncate_decayed(best, opts.decay_floor))
}

/// Keep the profile up to where it first drops below `floor * f(0)`; beyond
/// that it is treated as zero.
fn truncate_decayed(mut s: ProfileSolution, floor: f64) -> ProfileSolution {
    let level = floor * s.f0;
    if let Some(cut) = s.f.iter().position(|&f| f < level) {
        let keep = cut.max(2);
        s.eta.truncate(keep);
        s.f.truncate(keep);
        s.fp.truncate(keep);
        s.fpp.truncate(keep);
    }
    s.class = ProfileClass::Decaying;
    s
}

/// Profile with tail constant `c_target` (`q > 2`), by bisection on `f(0)`.
pub fn solve_nonuniq(q: f64, dim: usize, c_target: f64, tol: f64) -> Result<ProfileSolution> {
    solve_nonuniq_with(q, dim, c_target, tol, NONUNIQ_ETA_MAX, &ShootOptions::default())
}

pub fn solve_nonuniq_with(
    q: f64,
    dim: usize,
    c_target: f64,
    tol: f64,
    eta_max: f64,
    opts: &ShootOptions,
) -> Result<ProfileSolution> {
    check_mode(q, dim, ProfileMode::Nonuniq)?;
    if !(c_target.is_finite() && c_target > 0.0) {
        return Err(Error::Precondition(format!("target constant must be > 0, got {c_target}")));
    }
    let shoot_c = |f0: f64| shoot_with(q, dim, ProfileMode::Nonuniq, f0, eta_max, opts);

    let scan: Vec<f64> = (0..=28).map(|k| 10f64.powf(-4.0 + 0.25 * k as f64)).collect();
    let mut values = Vec::with_capacity(scan.len());
    for &f0 in &scan {
        values.push(shoot_c(f0)?.c_inf.unwrap());
    }
    if let Some(k) = values.windows(2).position(|w| !(w[1] > w[0] || (w[0].is_infinite() && w[1].is_infinite()))) {
        return Err(Error::MapStructure(format!(
            "f(0) -> c is not increasing between f(0) = {} and {}",
            scan[k],
            scan[k + 1]
        )));
    }
    let k = values.iter().position(|&c| c >= c_target).ok_or_else(|| {
        Error::MapStructure(format!("target {c_target} above the scanned range of tail constants"))
    })?;
    if k == 0 {
        return Err(Error::MapStructure(format!("target {c_target} below the scanned range")));
    }
    let (mut lo, mut hi) = (scan[k - 1], scan[k]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let s = shoot_c(mid)?;
        let c = s.c_inf.unwrap();
        if (c - c_target).abs() < tol * c_target {
            return Ok(s);
        }
        if c < c_target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    Err(Error::Inconclusive(format!("tail constant did not reach {c_target} within tolerance {tol}")))
}

/// `-Lap(u) + |u'|^q` for the stationary `u = C r^{|a|}` at radius `r`.
pub fn stationary_residual(c: f64, q: f64, dim: usize, r: f64) -> Result<f64> {
    if !(q > 2.0) {
        return Err(Error::Regime(format!("power stationary solutions need q > 2, got {q}")));
    }
    if !(r > 0.0) {
        return Err(Error::OutOfDomain(format!("need r > 0, got {r}")));
    }
    let beta = (q - 2.0) / (q - 1.0);
    let n = dim as f64;
    Ok(-c * beta * (n - 2.0 + beta) * r.powf(beta - 2.0) + (c * beta).powf(q) * r.powf((beta - 1.0) * q))
}

/// `t^{-a/2} f(r / sqrt t)`.
pub fn assemble(profile: &ProfileSolution, r: f64, t: f64) -> Result<f64> {
    Ok(assemble_with_derivatives(profile, r, t)?.0)
}

/// `(U, U_t)` of the assembled solution at `(r, t)`.
pub fn assemble_with_derivatives(profile: &ProfileSolution, r: f64, t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::OutOfDomain(format!("assembly needs t > 0, got {t}")));
    }
    let eta = r.abs() / t.sqrt();
    let (f, fp) = profile.eval_extended(eta)?;
    let scale = t.powf(-0.5 * profile.a);
    let u = scale * f;
    let ut = scale / t * (-0.5 * profile.a * f - 0.5 * eta * fp);
    Ok((u, ut))
}

/// Assembled solution sampled on a grid at time `t`.
pub fn assemble_field(profile: &ProfileSolution, geometry: &Geometry, t: f64) -> Result<Field> {
    let values = (0..geometry.node_count())
        .map(|i| assemble(profile, geometry.radius_of(i), t))
        .collect::<Result<Vec<_>>>()?;
    Field::new(*geometry, t, values)
}

/// Max of `|U_t - (Lap_h U - H_h(grad_h U))|` over nodes with radius in
/// `[r_lo, r_hi]`, with the solver's spatial operator (`nu = 1`).
pub fn discrete_residual(profile: &ProfileSolution, geometry: &Geometry, t: f64, r_lo: f64, r_hi: f64) -> Result<f64> {
    let field = assemble_field(profile, geometry, t)?;
    let spec = ProblemSpec::new(
        profile.q,
        1.0,
        *geometry,
        Boundary::DirichletZero,
        InitialDatum::constant(0.0),
        1.0,
    );
    let slope = max_slope(field.values(), geometry.spacing());
    let op = spatial_operator(field.values(), &spec, slope)?;
    let mut worst: f64 = 0.0;
    for (i, op_i) in op.iter().enumerate() {
        let r = geometry.radius_of(i);
        if r >= r_lo && r <= r_hi {
            let (_, ut) = assemble_with_derivatives(profile, r, t)?;
            worst = worst.max((ut - op_i).abs());
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualOrder {
    pub cells: Vec<usize>,
    pub residuals: Vec<f64>,
    /// Observed orders between consecutive refinements.
    pub orders: Vec<f64>,
}

/// Residual of the assembled profile on radial grids of radius `length`.
pub fn residual_order(
    profile: &ProfileSolution,
    length: f64,
    cells: &[usize],
    t: f64,
    r_lo: f64,
    r_hi: f64,
) -> Result<ResidualOrder> {
    let residuals = cells
        .iter()
        .map(|&n| discrete_residual(profile, &Geometry::radial(profile.dim, length, n)?, t, r_lo, r_hi))
        .collect::<Result<Vec<_>>>()?;
    let orders = residuals
        .windows(2)
        .zip(cells.windows(2))
        .map(|(r, n)| (r[0] / r[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect();
    Ok(ResidualOrder { cells: cells.to_vec(), residuals, orders })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonuniquenessReport {
    /// Max over the inner half of `|u_h(t) - C |x|^{|a|}|`.
    pub dist_stationary: f64,
    /// Max over the inner half of `|u_h(t) - U_C(t)|`.
    pub dist_profile: f64,
    /// `U_C(0, t) - 0`.
    pub witness: f64,
    pub t: f64,
}

/// Evolve the stationary data `C |x|^{|a|}` with the solver and measure the
/// distance of the result to both solutions sharing that trace.
pub fn nonuniqueness_experiment(profile: &ProfileSolution, geometry: &Geometry, t: f64) -> Result<NonuniquenessReport> {
    let c = profile
        .c_inf
        .ok_or_else(|| Error::Precondition("profile has no tail constant".into()))?;
    let beta = -profile.a;
    let datum = InitialDatum::power_growth(c, beta);
    let spec = ProblemSpec::new(profile.q, 1.0, *geometry, Boundary::TruncatedFree, datum, t);
    let traj = run(&spec)?;
    let u = traj.final_field();
    let (mut dist_stationary, mut dist_profile) = (0.0f64, 0.0f64);
    for i in geometry.inner_half() {
        let r = geometry.radius_of(i);
        let v = u.values()[i];
        dist_stationary = dist_stationary.max((v - c * r.powf(beta)).abs());
        dist_profile = dist_profile.max((v - assemble(profile, r, t)?).abs());
    }
    Ok(NonuniquenessReport { dist_stationary, dist_profile, witness: assemble(profile, 0.0, t)?, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rhs_examples() {
        assert_eq!(profile_rhs(1.0, 0.0, 0.0, 3.0, 2, -0.5).unwrap(), 0.0);
        assert_relative_eq!(curvature_limit(1.0, 2, -0.5), 0.125);
        assert!(profile_rhs(0.0, 1.0, 0.0, 3.0, 2, -0.5).is_err());
        // hand value: f'' = -(1 + 0.5) * 1 + 0.25 * 2 + 1
        assert_relative_eq!(profile_rhs(1.0, 2.0, 1.0, 3.0, 2, -0.5).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn stationary_residual_examples() {
        let c = 2f64.sqrt();
        for &r in &[0.5, 1.0, 2.0, 4.0] {
            assert!(stationary_residual(c, 3.0, 2, r).unwrap().abs() < 1e-12);
            assert!(stationary_residual(2.0 * c, 3.0, 2, r).unwrap() > 0.0);
        }
        let c4 = 1.5 * (2.0f64 / 3.0).powf(1.0 / 3.0);
        assert_relative_eq!(c4, DerivedConstants::new(4.0, 2).unwrap().ctilde.unwrap(), epsilon = 1e-14);
        assert!(stationary_residual(c4, 4.0, 2, 1.7).unwrap().abs() < 1e-12);
        assert!(matches!(stationary_residual(1.0, 2.0, 2, 1.0), Err(Error::Regime(_))));
    }

    #[test]
    fn preconditions() {
        assert!(matches!(shoot(1.4, 3, ProfileMode::Vss, 1.0, 10.0), Err(Error::Precondition(_))));
        assert!(matches!(shoot(2.5, 1, ProfileMode::Nonuniq, 1.0, 10.0), Err(Error::Precondition(_))));
        assert!(matches!(solve_vss(1.4, 3, 1e-6), Err(Error::Precondition(_))));
        assert!(matches!(solve_nonuniq(2.5, 1, 1.0, 1e-6), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_start_is_degenerate() {
        let s = shoot(3.0, 2, ProfileMode::Nonuniq, 0.0, 10.0).unwrap();
        assert_eq!(s.class, ProfileClass::Degenerate);
        assert_eq!(assemble(&s, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn vss_shooting_classes() {
        assert_eq!(shoot(1.2, 1, ProfileMode::Vss, 1e-3, VSS_ETA_MAX).unwrap().class, ProfileClass::CrossedZero);
        assert_eq!(shoot(1.2, 1, ProfileMode::Vss, 1e4, VSS_ETA_MAX).unwrap().class, ProfileClass::Algebraic);
    }

    #[test]
    fn nonuniq_profile_increases_and_has_power_tail() {
        let s = shoot(3.0, 2, ProfileMode::Nonuniq, 1.0, NONUNIQ_ETA_MAX).unwrap();
        assert_eq!(s.class, ProfileClass::Algebraic);
        assert!(s.is_strictly_increasing());
        assert!(s.fp[1..].iter().all(|&d| d > 0.0));
        let c = s.c_inf.unwrap();
        let (f, _) = s.eval(80.0).unwrap();
        assert_relative_eq!(f / 80f64.sqrt(), c, max_relative = 1e-3);
        assert_relative_eq!(s.curvature_at_origin().unwrap(), 0.125, epsilon = 1e-7);
    }

    #[test]
    fn tail_constant_is_monotone_in_f0() {
        let c: Vec<f64> = [0.1, 0.3, 1.0]
            .iter()
            .map(|&f0| shoot(3.0, 2, ProfileMode::Nonuniq, f0, NONUNIQ_ETA_MAX).unwrap().c_inf.unwrap())
            .collect();
        assert!(c[0] < c[1] && c[1] < c[2], "{c:?}");
    }

    #[test]
    fn assemble_is_self_similar() {
        let s = shoot(3.0, 2, ProfileMode::Nonuniq, 0.5, NONUNIQ_ETA_MAX).unwrap();
        let lambda: f64 = 2.0;
        for &(r, t) in &[(0.3, 0.5), (1.0, 1.0), (2.0, 0.7)] {
            let u = assemble(&s, r, t).unwrap();
            let v = assemble(&s, lambda * r, lambda * lambda * t).unwrap();
            assert_relative_eq!(v, lambda.powf(-s.a) * u, max_relative = 1e-10);
        }
        assert!(assemble(&s, 1.0, 0.0).is_err());
        // far field ~ c r^{|a|}, independent of t
        let c = s.c_inf.unwrap();
        let far = assemble(&s, 500.0, 1.0).unwrap();
        assert_relative_eq!(far, c * 500f64.sqrt(), max_relative = 1e-9);
    }
}
