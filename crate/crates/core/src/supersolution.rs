//! Explicit supersolutions on the annulus `B_3 \ B_1`.
//!
//! `Phi = gamma phi1^{-sigma} + K` with `phi1` the first radial Dirichlet
//! eigenfunction of `B_3` satisfies `-nu Lap(Phi) + Phi + |Phi'|^q >= 0`, and
//! `V = e^t Phi(|x|) psi_h(t)` with `psi_h = (1 - e^{-h(q-1)t})^{-1/(q-1)}` is a
//! supersolution of the evolution equation on the annulus for `h < m_K`.
//! Everything here is certified numerically on a radial grid that stops a
//! boundary layer short of `r = 3`, where `Phi` blows up.

use crate::constants::DerivedConstants;
use crate::error::{Error, Result};
use crate::grid::{gradient_values, laplacian_values, Geometry, GridKind};
use crate::ode::{bracket, integrate, quintic_hermite, OdeOptions, OdeTrace, Stop};

/// Radius of the ball carrying the eigenfunction.
pub const BALL_RADIUS: f64 = 3.0;
/// Inner radius of the certified annulus.
pub const INNER_RADIUS: f64 = 1.0;
/// Number of grid spacings cut off before `r = 3`.
pub const BOUNDARY_LAYER_CELLS: usize = 5;

/// First radial Dirichlet eigenpair of the Laplacian in a ball, `phi(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub dim: usize,
    pub radius: f64,
    pub lambda: f64,
    trace: OdeTrace<2>,
}

impl Eigenpair {
    /// `(phi, phi')` at `r` in `[0, radius]`.
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if r < 0.0 || r > self.radius * (1.0 + 1e-12) {
            return Err(Error::OutOfDomain(format!("r = {r} outside [0, {}]", self.radius)));
        }
        let r = r.min(self.radius);
        let k = bracket(&self.trace.t, r)
            .ok_or_else(|| Error::OutOfDomain(format!("r = {r} outside the eigenfunction trace")))?;
        let (t0, t1) = (self.trace.t[k], self.trace.t[k + 1]);
        let node = |i: usize| (self.trace.y[i][0], self.trace.y[i][1], self.trace.dy[i][1]);
        Ok(quintic_hermite(t1 - t0, node(k), node(k + 1), (r - t0) / (t1 - t0)))
    }

    /// `phi` on `n + 1` equispaced radii of `[0, radius]`.
    pub fn samples(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        (0..=n)
            .map(|i| {
                let r = self.radius * i as f64 / n as f64;
                Ok((r, self.eval(r)?.0.max(0.0)))
            })
            .collect()
    }
}

const EIGEN_R0: f64 = 1e-4;

/// Integrate the radial eigen-equation for `lambda`; returns the trace and the
/// first zero of `phi` (infinite when there is none before `r_end`).
fn eigen_shot(dim: usize, lambda: f64, r_end: f64, stop_at_zero: bool) -> Result<(OdeTrace<2>, f64)> {
    let n = dim as f64;
    let r0 = EIGEN_R0;
    let start = [1.0 - lambda * r0 * r0 / (2.0 * n), -lambda * r0 / n];
    let rhs = |r: f64, y: &[f64; 2]| [y[1], -(n - 1.0) / r * y[1] - lambda * y[0]];
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-14, h_init: r0, h_max: 0.05, ..OdeOptions::default() };
    let body = integrate(rhs, r0, start, r_end, &opts, |_, y| stop_at_zero && y[0] < 0.0)?;
    if body.stop == Stop::Breakdown {
        return Err(Error::Integration(format!("eigenfunction integration broke down for lambda = {lambda}")));
    }
    // prepend the origin node
    let mut trace = OdeTrace {
        t: vec![0.0],
        y: vec![[1.0, 0.0]],
        dy: vec![[0.0, -lambda / n]],
        stop: body.stop,
    };
    trace.t.extend(&body.t);
    trace.y.extend(&body.y);
    trace.dy.extend(&body.dy);
    let zero = match body.stop {
        Stop::Event => {
            let k = trace.t.len() - 2;
            let (t0, t1) = (trace.t[k], trace.t[k + 1]);
            let node = |i: usize| (trace.y[i][0], trace.y[i][1], trace.dy[i][1]);
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if quintic_hermite(t1 - t0, node(k), node(k + 1), mid).0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            t0 + 0.5 * (lo + hi) * (t1 - t0)
        }
        _ => f64::INFINITY,
    };
    Ok((trace, zero))
}

/// First eigenvalue by shooting on `lambda` until the first zero of `phi`
/// sits at `radius` (relative tolerance `tol` on the zero).
pub fn first_eigen(dim: usize, radius: f64, tol: f64) -> Result<Eigenpair> {
    if dim == 0 || !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Precondition(format!("need N >= 1 and radius > 0 (N={dim}, radius={radius})")));
    }
    let zero_of = |lambda: f64| eigen_shot(dim, lambda, 2.0 * radius, true).map(|(_, z)| z);
    let mut lo = (0.5 / radius).powi(2);
    let mut hi = lo;
    let mut found = false;
    for _ in 0..80 {
        if zero_of(hi)? < radius {
            found = true;
            break;
        }
        lo = hi;
        hi *= 2.0;
    }
    if !found || zero_of(lo)? < radius {
        return Err(Error::EigenBracket(format!("no eigenvalue bracket for N = {dim}, radius = {radius}")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let z = zero_of(mid)?;
        if (z - radius).abs() <= 1e-3 * tol * radius || hi - lo <= 1e-15 * hi {
            lo = mid;
            hi = mid;
            break;
        }
        if z > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let (trace, _) = eigen_shot(dim, lambda, radius, false)?;
    Ok(Eigenpair { dim, radius, lambda, trace })
}

/// `psi_h(t) = (1 - e^{-h(q-1)t})^{-1/(q-1)}`.
pub fn psi_h(t: f64, h: f64, q: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::OutOfDomain(format!("psi_h needs t > 0, got {t}")));
    }
    if !(h > 0.0) || !(q > 1.0) {
        return Err(Error::Precondition(format!("psi_h needs h > 0 and q > 1 (h={h}, q={q})")));
    }
    Ok((-(-h * (q - 1.0) * t).exp_m1()).powf(-1.0 / (q - 1.0)))
}

/// `psi_h'(t) = -h (psi^q - psi)`, evaluated without cancellation.
pub fn psi_h_derivative(t: f64, h: f64, q: f64) -> Result<f64> {
    psi_h(t, h, q)?;
    let x = h * (q - 1.0) * t;
    Ok(-h * (-x).exp() * (-(-x).exp_m1()).powf(-q / (q - 1.0)))
}

/// Lower and upper envelopes of `psi_h(t)`.
pub fn psi_h_bounds(t: f64, h: f64, q: f64) -> (f64, f64) {
    let base = ((q - 1.0) * h * t).powf(-1.0 / (q - 1.0));
    (base, 2f64.powf(1.0 / (q - 1.0)) * (1.0 + base))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionSpec {
    pub dim: usize,
    pub q: f64,
    pub nu: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub k: f64,
    /// Time-factor rate, `m_K / 2`.
    pub h: f64,
    pub m_k: f64,
    pub lambda1: f64,
    /// `min phi1` over the closed unit ball.
    pub m1: f64,
    /// `min |phi1'|` over `[1, 3]`.
    pub big_m1: f64,
    /// Grid on `[0, 3 - h_b]`.
    pub geometry: Geometry,
    pub phi1: Vec<f64>,
    pub phi: Vec<f64>,
    /// `-nu Lap_h Phi + Phi + |grad_h Phi|^q` at every node.
    pub static_residual: Vec<f64>,
    /// `|Phi'|^q / Phi` is nondecreasing over the annulus nodes.
    pub ratio_monotone: bool,
    eigen: Eigenpair,
}

impl SupersolutionSpec {
    pub fn spacing(&self) -> f64 {
        self.geometry.spacing()
    }

    pub fn residual_tolerance(&self) -> f64 {
        10.0 * self.spacing()
    }

    pub fn boundary_layer(&self) -> f64 {
        BALL_RADIUS - self.geometry.length()
    }

    /// `Phi(s)` for `0 <= s < 3`.
    pub fn phi_at(&self, s: f64) -> Result<f64> {
        let (p, _) = self.eigen.eval(s)?;
        if !(p > 0.0) {
            return Err(Error::OutOfDomain(format!("Phi is infinite at r = {s}")));
        }
        Ok(self.gamma * p.powf(-self.sigma) + self.k)
    }

    /// `V(s, tau) = e^tau Phi(s) psi_h(tau)`.
    pub fn v_at(&self, s: f64, tau: f64) -> Result<f64> {
        Ok(tau.exp() * self.phi_at(s)? * psi_h(tau, self.h, self.q)?)
    }

    fn annulus_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.geometry.node_count()).filter(|&i| self.geometry.radius_of(i) >= INNER_RADIUS - 1e-12)
    }
}

/// Default `(sigma, gamma)`: `sigma = a` for `q < 2` (gamma grown as needed),
/// `sigma = 1, gamma = 1` otherwise.
pub fn default_branch(q: f64) -> (f64, f64) {
    if q < 2.0 {
        ((2.0 - q) / (q - 1.0), 1.0)
    } else {
        (1.0, 1.0)
    }
}

/// `F(Phi_0)` in terms of `phi1`, `phi1'`.
#[allow(clippy::too_many_arguments)]
fn f_phi0(p: f64, dp: f64, q: f64, a: f64, nu: f64, sigma: f64, gamma: f64, lambda: f64) -> f64 {
    gamma
        * p.powf(-(sigma + 2.0))
        * (gamma.powf(q - 1.0) * sigma.powf(q) * p.powf((q - 1.0) * (a - sigma)) * dp.abs().powf(q)
            + (1.0 - nu * sigma * lambda) * p * p
            - nu * sigma * (sigma + 1.0) * dp * dp)
}

/// Build and certify `Phi` on a radial grid of the given spacing.
pub fn build_phi(dim: usize, q: f64, nu: f64, sigma: f64, gamma: f64, spacing: f64) -> Result<SupersolutionSpec> {
    let consts = DerivedConstants::new(q, dim)?;
    let a = consts.a;
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::Precondition(format!("nu must lie in (0, 1], got {nu}")));
    }
    if !(sigma > 0.0 && sigma >= a) {
        return Err(Error::Precondition(format!("need sigma > 0 and sigma >= a = {a}, got {sigma}")));
    }
    if sigma == a && q >= 2.0 {
        return Err(Error::Precondition("sigma = a is only admissible for q < 2".into()));
    }
    if !(gamma > 0.0) {
        return Err(Error::Precondition(format!("gamma must be > 0, got {gamma}")));
    }
    if !(spacing > 0.0 && spacing < 0.1) {
        return Err(Error::Precondition(format!("spacing must lie in (0, 0.1), got {spacing}")));
    }
    let cells = (BALL_RADIUS / spacing).round() as usize - BOUNDARY_LAYER_CELLS;
    let length = BALL_RADIUS * cells as f64 / (cells + BOUNDARY_LAYER_CELLS) as f64;
    let geometry = Geometry::new(GridKind::Radial, dim, length, cells)?;
    let eigen = first_eigen(dim, BALL_RADIUS, 1e-10)?;
    let lambda = eigen.lambda;

    let nodes: Vec<(f64, f64)> = (0..geometry.node_count())
        .map(|i| eigen.eval(geometry.radius_of(i)))
        .collect::<Result<_>>()?;
    let (p_end, dp_end) = *nodes.last().unwrap();

    let mut gamma = gamma;
    if sigma == a {
        // the gradient term must win at the edge of the covered ball
        let mut tries = 0;
        while f_phi0(p_end, dp_end, q, a, nu, sigma, gamma, lambda) <= 0.0 {
            gamma *= 2.0;
            tries += 1;
            if tries > 200 {
                return Err(Error::ConstructionFailed("gamma doubling did not make F positive at the edge".into()));
            }
        }
    }

    let f_min = nodes
        .iter()
        .map(|&(p, dp)| f_phi0(p, dp, q, a, nu, sigma, gamma, lambda))
        .fold(f64::INFINITY, f64::min);
    let k = (-f_min).max(0.0) + 1.0;

    let phi1: Vec<f64> = nodes.iter().map(|&(p, _)| p).collect();
    let phi: Vec<f64> = phi1.iter().map(|&p| gamma * p.powf(-sigma) + k).collect();
    let dphi: Vec<f64> = nodes.iter().map(|&(p, dp)| -gamma * sigma * p.powf(-sigma - 1.0) * dp).collect();

    let h_grid = geometry.spacing();
    let lap = laplacian_values(&phi, h_grid, GridKind::Radial, dim, nu)?;
    let grad = gradient_values(&phi, h_grid, true)?;
    let static_residual: Vec<f64> = (0..phi.len())
        .map(|i| -lap[i] + phi[i] + grad[i].abs().powf(q))
        .collect();
    if let Some(i) = static_residual.iter().position(|&v| v < 0.0) {
        return Err(Error::ConstructionFailed(format!(
            "stationary residual {} < 0 at r = {}",
            static_residual[i],
            geometry.radius_of(i)
        )));
    }

    let ratios: Vec<f64> = (0..phi.len())
        .filter(|&i| geometry.radius_of(i) >= INNER_RADIUS - 1e-12)
        .map(|i| dphi[i].abs().powf(q) / phi[i])
        .collect();
    let m_k = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio_monotone = ratios.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12));
    if !(m_k > 0.0) {
        return Err(Error::ConstructionFailed(format!("gradient margin m_K = {m_k} is not positive")));
    }

    let m1 = eigen.eval(INNER_RADIUS)?.0;
    let big_m1 = (0..=200)
        .map(|j| eigen.eval(INNER_RADIUS + (BALL_RADIUS - INNER_RADIUS) * j as f64 / 200.0).map(|(_, d)| d.abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);

    Ok(SupersolutionSpec {
        dim,
        q,
        nu,
        sigma,
        gamma,
        k,
        h: 0.5 * m_k,
        m_k,
        lambda1: lambda,
        m1,
        big_m1,
        geometry,
        phi1,
        phi,
        static_residual,
        ratio_monotone,
        eigen,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionReport {
    pub times: Vec<f64>,
    /// Minimum residual over the annulus at each time.
    pub min_residual: Vec<f64>,
    pub tolerance: f64,
    /// `V` nondecreasing in `r` on the annulus at every time.
    pub radially_monotone: bool,
    pub pass: bool,
}

impl SupersolutionReport {
    pub fn overall_min(&self) -> f64 {
        self.min_residual.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Discrete residual `V_t - nu Lap_h V + |grad_h V|^q` at the nodes of
/// `geometry`, for `V(r, t) = scale * v(r / rho, t / rho^2)`.
fn residual_on(spec: &SupersolutionSpec, geometry: &Geometry, rho: f64, t: f64) -> Result<Vec<f64>> {
    let a = (2.0 - spec.q) / (spec.q - 1.0);
    let scale = rho.powf(-a);
    let tau = t / (rho * rho);
    let psi = psi_h(tau, spec.h, spec.q)?;
    let dpsi = psi_h_derivative(tau, spec.h, spec.q)?;
    let phi: Vec<f64> = (0..geometry.node_count())
        .map(|i| spec.phi_at(geometry.radius_of(i) / rho))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = phi.iter().map(|p| scale * tau.exp() * p * psi).collect();
    let h = geometry.spacing();
    let lap = laplacian_values(&values, h, GridKind::Radial, spec.dim, spec.nu)?;
    let grad = gradient_values(&values, h, true)?;
    Ok((0..values.len())
        .map(|i| {
            // d/dt of scale * e^tau Phi psi(tau), tau = t / rho^2
            let vt = scale * tau.exp() * phi[i] * (psi + dpsi) / (rho * rho);
            vt - lap[i] + grad[i].abs().powf(spec.q)
        })
        .collect())
}

/// Certify `V` on the annulus `[1, 3 - h_b]` at the given times.
pub fn supersolution_residual(spec: &SupersolutionSpec, times: &[f64]) -> Result<SupersolutionReport> {
    scaled_residual(spec, 1.0, times)
}

/// Certify `V_rho(r, t) = rho^{-a} V(r / rho, t / rho^2)` on the scaled
/// annulus; the tolerance scales like the equation, by `rho^{-a-2}`.
pub fn scaled_residual(spec: &SupersolutionSpec, rho: f64, times: &[f64]) -> Result<SupersolutionReport> {
    if !(rho > 0.0) {
        return Err(Error::Precondition(format!("rho must be > 0, got {rho}")));
    }
    if times.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::OutOfDomain("residual times must be > 0".into()));
    }
    let a = (2.0 - spec.q) / (spec.q - 1.0);
    let g = &spec.geometry;
    let geometry = Geometry::new(GridKind::Radial, spec.dim, rho * g.length(), g.cells())?;
    let annulus: Vec<usize> = spec.annulus_nodes().collect();
    let mut min_residual = Vec::with_capacity(times.len());
    let mut radially_monotone = true;
    for &t in times {
        let res = residual_on(spec, &geometry, rho, t)?;
        min_residual.push(annulus.iter().map(|&i| res[i]).fold(f64::INFINITY, f64::min));
        let tau = t / (rho * rho);
        let v: Vec<f64> = annulus
            .iter()
            .map(|&i| spec.v_at(g.radius_of(i), tau))
            .collect::<Result<_>>()?;
        radially_monotone &= v.windows(2).all(|w| w[1] >= w[0]);
    }
    let tolerance = spec.residual_tolerance() * rho.powf(-a - 2.0);
    let pass = min_residual.iter().all(|&m| m >= -tolerance);
    Ok(SupersolutionReport { times: times.to_vec(), min_residual, tolerance, radially_monotone, pass })
}

/// `rho^{-a} V(r / rho, t / rho^2)`.
pub fn scaled_supersolution(spec: &SupersolutionSpec, rho: f64, r: f64, t: f64) -> Result<f64> {
    if !(rho > 0.0) || !(t > 0.0) {
        return Err(Error::OutOfDomain(format!("need rho > 0 and t > 0 (rho={rho}, t={t})")));
    }
    let s = r.abs() / rho;
    if s >= BALL_RADIUS {
        return Err(Error::OutOfDomain(format!("r / rho = {s} outside [0, 3)")));
    }
    let a = (2.0 - spec.q) / (spec.q - 1.0);
    Ok(rho.powf(-a) * spec.v_at(s, t / (rho * rho))?)
}

/// Smallest `C` with `sup_{B_2} V <= C e^t Phi(2) (1 + t^{-1/(q-1)})` over the
/// sampled times, together with the constant implied by the `psi_h` envelope.
pub fn ahh_constant(spec: &SupersolutionSpec, times: &[f64]) -> Result<(f64, f64)> {
    let e = 1.0 / (spec.q - 1.0);
    let phi2 = spec.phi_at(2.0)?;
    let mut fitted: f64 = 0.0;
    for &t in times {
        let sup = spec.v_at(2.0, t)?;
        fitted = fitted.max(sup / (t.exp() * phi2 * (1.0 + t.powf(-e))));
    }
    let implied = 2f64.powf(e) * ((spec.q - 1.0) * spec.h).powf(-e).max(1.0);
    Ok((fitted, implied))
}

/// Smallest `C` with `sup_{B_{2 rho}} V_rho <= C rho^{q'} e^{t/rho^2}
/// (rho^{-2/(q-1)} + t^{-1/(q-1)})` over the sampled `(rho, t)`.
pub fn alpa_constant(spec: &SupersolutionSpec, rhos: &[f64], times: &[f64]) -> Result<f64> {
    let q = spec.q;
    let qprime = q / (q - 1.0);
    let mut fitted: f64 = 0.0;
    for &rho in rhos {
        for &t in times {
            let sup = scaled_supersolution(spec, rho, 2.0 * rho, t)?;
            let envelope = rho.powf(qprime) * (t / (rho * rho)).exp() * (rho.powf(-2.0 / (q - 1.0)) + t.powf(-1.0 / (q - 1.0)));
            fitted = fitted.max(sup / envelope);
        }
    }
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    /// First zero of `J_0` from its power series, by bisection on [2, 3].
    fn bessel_j0_first_zero() -> f64 {
        let j0 = |x: f64| {
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..60 {
                term *= -(x * x / 4.0) / (k as f64 * k as f64);
                sum += term;
            }
            sum
        };
        let (mut lo, mut hi) = (2.0, 3.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if j0(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn eigenvalues_match_closed_forms() {
        assert_relative_eq!(first_eigen(1, 3.0, 1e-10).unwrap().lambda, (PI / 6.0).powi(2), epsilon = 1e-9);
        assert_relative_eq!(first_eigen(3, 3.0, 1e-10).unwrap().lambda, (PI / 3.0).powi(2), epsilon = 1e-9);
        let j = bessel_j0_first_zero();
        assert_relative_eq!(j, 2.404825557695773, epsilon = 1e-12);
        assert_relative_eq!(first_eigen(2, 3.0, 1e-10).unwrap().lambda, (j / 3.0).powi(2), epsilon = 1e-9);
    }

    #[test]
    fn eigenfunctions_match_closed_forms() {
        let e1 = first_eigen(1, 3.0, 1e-10).unwrap();
        let e3 = first_eigen(3, 3.0, 1e-10).unwrap();
        let k = PI / 3.0;
        for &r in &[0.0, 0.5, 1.7, 2.9, 3.0] {
            assert!((e1.eval(r).unwrap().0 - (PI * r / 6.0).cos()).abs() < 1e-8);
            let exact = if r == 0.0 { 1.0 } else { (k * r).sin() / (k * r) };
            assert!((e3.eval(r).unwrap().0 - exact).abs() < 1e-8);
        }
        let samples = e1.samples(30).unwrap();
        assert_eq!(samples[0], (0.0, 1.0));
        assert!(samples.windows(2).all(|w| w[1].1 <= w[0].1));
        assert!(first_eigen(0, 3.0, 1e-6).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_relative_eq!(psi_h(2f64.ln(), 1.0, 2.0).unwrap(), 2.0, epsilon = 1e-14);
        assert!(psi_h(0.0, 1.0, 2.0).is_err());
        assert_relative_eq!(psi_h(80.0, 1.0, 1.5).unwrap(), 1.0, epsilon = 1e-14);
        for k in 1..=100 {
            let t = 1e-3 * 1.1f64.powi(k);
            for &(h, q) in &[(0.3, 1.5), (2.0, 3.0), (0.05, 1.2)] {
                let p = psi_h(t, h, q).unwrap();
                let (lo, hi) = psi_h_bounds(t, h, q);
                assert!(lo <= p * (1.0 + 1e-12) && p <= hi, "t={t}");
                // ODE residual, relative to the size of its terms
                let ode = psi_h_derivative(t, h, q).unwrap();
                let residual = ode + h * (p.powf(q) - p);
                assert!(residual.abs() <= 1e-10 * h * p.powf(q), "t={t}");
                let d = 1e-6 * t;
                let fd = (psi_h(t + d, h, q).unwrap() - psi_h(t - d, h, q).unwrap()) / (2.0 * d);
                assert!((fd - ode).abs() <= 1e-5 * ode.abs() + 1e-9, "t={t}");
            }
        }
    }

    #[test]
    fn phi_construction_and_residual() {
        for &(dim, q, nu) in &[(1, 1.5, 1.0), (3, 3.0, 1.0), (2, 2.0, 0.5)] {
            let (sigma, gamma) = default_branch(q);
            let spec = build_phi(dim, q, nu, sigma, gamma, 0.01).unwrap();
            assert!(spec.k >= 1.0 && spec.h > 0.0 && spec.h < spec.m_k);
            assert!(spec.ratio_monotone);
            let phi1 = spec.eigen.eval(INNER_RADIUS).unwrap();
            let dphi = -spec.gamma * spec.sigma * phi1.0.powf(-spec.sigma - 1.0) * phi1.1;
            let phi = spec.phi_at(INNER_RADIUS).unwrap();
            assert_relative_eq!(spec.m_k, dphi.abs().powf(q) / phi, max_relative = 1e-9);
            let times: Vec<f64> = (0..12).map(|k| 1e-3 * 2f64.powi(k)).collect();
            let report = supersolution_residual(&spec, &times).unwrap();
            assert!(report.pass, "{dim} {q}: {report:?}");
            assert!(report.radially_monotone);
        }
    }

    #[test]
    fn scaling_covariance() {
        let spec = build_phi(3, 3.0, 1.0, 1.0, 1.0, 0.02).unwrap();
        let a = -0.5;
        assert_relative_eq!(scaled_supersolution(&spec, 1.0, 1.5, 0.3).unwrap(), spec.v_at(1.5, 0.3).unwrap());
        let times = [0.05, 0.5];
        let base = scaled_residual(&spec, 1.0, &times).unwrap();
        let scaled = scaled_residual(&spec, 2.0, &times.map(|t| 4.0 * t)).unwrap();
        for (b, s) in base.min_residual.iter().zip(&scaled.min_residual) {
            assert_relative_eq!(*s, 2f64.powf(-a - 2.0) * b, max_relative = 1e-9);
        }
        assert!(scaled.pass);
        assert!(scaled_supersolution(&spec, 1.0, 3.5, 1.0).is_err());
    }

    #[test]
    fn boundary_bounds() {
        let spec = build_phi(1, 1.5, 1.0, 1.0, 1.0, 0.01).unwrap();
        let times: Vec<f64> = (0..20).map(|k| 1e-3 * 1.5f64.powi(k)).collect();
        let (fitted, implied) = ahh_constant(&spec, &times).unwrap();
        assert!(fitted > 0.0 && fitted <= implied);
        let c2 = alpa_constant(&spec, &[0.5, 1.0, 2.0], &times).unwrap();
        assert!(c2.is_finite() && c2 > 0.0);
    }

    #[test]
    fn invalid_branches() {
        assert!(build_phi(3, 3.0, 1.0, -0.5, 1.0, 0.01).is_err());
        assert!(build_phi(1, 1.5, 1.0, 0.5, 1.0, 0.01).is_err());
        assert!(build_phi(1, 2.0, 1.0, 0.0, 1.0, 0.01).is_err());
    }
}
