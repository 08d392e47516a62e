//! Exact solutions for `q = 2` in one dimension via the Hopf-Cole transform
//! `w = exp(-u / nu)`, which turns the equation into the heat equation
//! `w_t = nu w_xx`.

use crate::error::{Error, Result};
use crate::grid::{Field, Geometry, GridKind};
use crate::initial_data::InitialDatum;
use super::{run, ProblemSpec};

const PANELS: usize = 4000;
/// Half-width of the integration window in units of `sqrt(nu t)`.
const WINDOW: f64 = 12.0;

/// `u(x, t) = -nu ln( int G(x - y) exp(-u0(y)/nu) dy / int G )` with the heat
/// kernel `G` of diffusivity `nu`. `h` only feeds grid-dependent defaults of
/// the datum (Dirac width).
pub fn hopf_cole_reference(datum: &InitialDatum, nu: f64, x: f64, t: f64, h: f64) -> Result<f64> {
    datum.validate()?;
    if !datum.is_bounded() {
        return Err(Error::Unsupported("the Hopf-Cole reference needs bounded data".into()));
    }
    if !(nu > 0.0) || t < 0.0 {
        return Err(Error::Precondition(format!("need nu > 0 and t >= 0 (nu={nu}, t={t})")));
    }
    let u0 = |y: f64| datum.eval(y.abs(), 1, h);
    if t == 0.0 {
        return Ok(u0(x));
    }
    let half = WINDOW * (nu * t).sqrt();
    let step = 2.0 * half / PANELS as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=PANELS {
        let w = if k == 0 || k == PANELS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        let s = -half + k as f64 * step;
        let kernel = (-(s * s) / (4.0 * nu * t)).exp();
        num += w * kernel * (-u0(x - s) / nu).exp();
        den += w * kernel;
    }
    Ok(-nu * (num / den).ln())
}

/// Reference values at every node of a Cartesian grid.
pub fn hopf_cole_field(datum: &InitialDatum, nu: f64, geometry: &Geometry, t: f64) -> Result<Field> {
    if geometry.kind() != GridKind::Cartesian1d {
        return Err(Error::Unsupported("the Hopf-Cole reference is one-dimensional".into()));
    }
    let h = geometry.spacing();
    let values = geometry
        .coords()
        .into_iter()
        .map(|x| hopf_cole_reference(datum, nu, x, t, h))
        .collect::<Result<Vec<_>>>()?;
    Field::new(*geometry, t, values)
}

/// Order tolerance and relative accuracy required of the solver against
/// the reference.
pub const MIN_ORDER: f64 = 1.8;
pub const MAX_RELATIVE_ERROR: f64 = 5e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub cells: Vec<usize>,
    /// Max-norm error at `t_end` on each grid.
    pub errors: Vec<f64>,
    /// Observed orders between consecutive grids.
    pub orders: Vec<f64>,
    /// Finest-grid error divided by `max u0`.
    pub relative_error: f64,
    pub pass: bool,
}

/// Run `spec` (with `q = 2`, 1-d) on each grid and measure the max-norm error
/// against the Hopf-Cole reference at `t_end`.
pub fn hopf_cole_convergence(spec: &ProblemSpec, cells: &[usize]) -> Result<OracleReport> {
    if spec.q != 2.0 || spec.geometry.kind() != GridKind::Cartesian1d {
        return Err(Error::Unsupported("the Hopf-Cole oracle needs q = 2 on a 1-d grid".into()));
    }
    if cells.len() < 2 || cells.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("need at least two increasing grid sizes".into()));
    }
    let t = spec.t_end;
    let mut errors = Vec::with_capacity(cells.len());
    let mut scale: f64 = 0.0;
    for &n in cells {
        let geometry = Geometry::cartesian(spec.geometry.length(), n)?;
        let run_spec = spec.clone().with_geometry(geometry).with_snapshots(vec![t]);
        let traj = run(&run_spec)?;
        let exact = hopf_cole_field(&spec.initial, spec.nu, &geometry, t)?;
        let err = traj
            .final_field()
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        errors.push(err);
        scale = traj.initial.max();
    }
    let orders: Vec<f64> = errors
        .windows(2)
        .zip(cells.windows(2))
        .map(|(e, n)| (e[0] / e[1]).ln() / (n[1] as f64 / n[0] as f64).ln())
        .collect();
    let relative_error = errors.last().copied().unwrap_or(0.0) / scale;
    let pass = orders.iter().all(|&p| p >= MIN_ORDER) && relative_error <= MAX_RELATIVE_ERROR;
    Ok(OracleReport { cells: cells.to_vec(), errors, orders, relative_error, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Plain trapezoid rule on a much finer and wider window, written
    /// against the unnormalized kernel.
    fn trapezoid_oracle(datum: &InitialDatum, nu: f64, x: f64, t: f64) -> f64 {
        let half = 20.0 * (nu * t).sqrt();
        let n = 10 * PANELS;
        let step = 2.0 * half / n as f64;
        let mut acc = 0.0;
        for k in 0..=n {
            let s = -half + k as f64 * step;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            let g = (4.0 * std::f64::consts::PI * nu * t).powf(-0.5) * (-(s * s) / (4.0 * nu * t)).exp();
            acc += w * g * (-datum.eval((x - s).abs(), 1, 0.01) / nu).exp();
        }
        -nu * (acc * step).ln()
    }

    #[test]
    fn constant_data_are_exact() {
        let d = InitialDatum::constant(3.0);
        for &x in &[-1.0, 0.0, 2.5] {
            assert_relative_eq!(hopf_cole_reference(&d, 0.5, x, 0.3, 0.01).unwrap(), 3.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn matches_independent_quadrature() {
        let d = InitialDatum::bump(1.0, 1.0);
        for &(x, t, nu) in &[(0.0, 0.1, 1.0), (0.7, 0.5, 1.0), (-1.3, 0.05, 0.3)] {
            let a = hopf_cole_reference(&d, nu, x, t, 0.01).unwrap();
            let b = trapezoid_oracle(&d, nu, x, t);
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
    }

    #[test]
    fn small_time_recovers_datum() {
        let d = InitialDatum::bump(1.0, 1.0);
        let u = hopf_cole_reference(&d, 1.0, 0.4, 1e-8, 0.01).unwrap();
        assert_relative_eq!(u, (-0.16f64).exp(), epsilon = 1e-6);
    }

    #[test]
    fn unsupported_inputs() {
        let d = InitialDatum::power_growth(1.0, 0.5);
        assert!(matches!(hopf_cole_reference(&d, 1.0, 0.0, 0.1, 0.01), Err(Error::Unsupported(_))));
        let radial = Geometry::radial(2, 1.0, 32).unwrap();
        assert!(hopf_cole_field(&InitialDatum::bump(1.0, 1.0), 1.0, &radial, 0.1).is_err());
    }

    #[test]
    fn solver_converges_at_second_order() {
        use crate::solver::Boundary;
        let geo = Geometry::cartesian(6.0, 64).unwrap();
        let spec = ProblemSpec::new(2.0, 1.0, geo, Boundary::DirichletZero, InitialDatum::bump(1.0, 1.0), 0.1);
        let report = hopf_cole_convergence(&spec, &[64, 128, 256]).unwrap();
        assert!(report.orders.iter().all(|&p| p > 1.8), "{report:?}");
        assert!(report.errors.windows(2).all(|e| e[1] < e[0]));
        let cubic = ProblemSpec { q: 3.0, ..spec.clone() };
        assert!(matches!(hopf_cole_convergence(&cubic, &[64, 128]), Err(Error::Unsupported(_))));
        assert!(hopf_cole_convergence(&spec, &[128, 64]).is_err());
    }
}
