//! Adaptive Dormand-Prince 5(4) integrator for small autonomous-size systems.
//!
//! Accepted steps are stored as nodes `(t, y, y')`; callers interpolate with
//! Hermite polynomials built from these nodes.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-300,
            h_init: 1e-4,
            h_min: 1e-14,
            h_max: 0.5,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    /// Reached the end of the interval.
    End,
    /// The caller's stop predicate fired after the last stored node.
    Event,
    /// Step size fell below `h_min`, or the state became nonfinite.
    Breakdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdeTrace<const D: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; D]>,
    pub dy: Vec<[f64; D]>,
    pub stop: Stop,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// error coefficients b - b*
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combo<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for j in 0..D {
            out[j] += h * c * k[j];
        }
    }
    out
}

/// Integrate `y' = f(t, y)` from `t0` to `t_end`; `stop(t, y)` is checked
/// after every accepted step and ends the integration when it returns true.
pub fn integrate<const D: usize>(
    mut f: impl FnMut(f64, &[f64; D]) -> [f64; D],
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    opts: &OdeOptions,
    mut stop: impl FnMut(f64, &[f64; D]) -> bool,
) -> Result<OdeTrace<D>> {
    if !(t_end > t0) {
        return Err(Error::Integration(format!("empty interval [{t0}, {t_end}]")));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::Integration("tolerances must be positive".into()));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    let mut trace = OdeTrace { t: vec![t], y: vec![y], dy: vec![k1], stop: Stop::End };
    let mut h = opts.h_init.min(t_end - t0);
    let mut steps = 0usize;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::Integration(format!("step budget exhausted at t = {t}")));
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        let k2 = f(t + C2 * h, &combo(&y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &combo(&y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &combo(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &combo(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &combo(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = combo(&y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y_new);

        let mut err: f64 = 0.0;
        let mut finite = true;
        for j in 0..D {
            let e = h * (E1 * k1[j] + E3 * k3[j] + E4 * k4[j] + E5 * k5[j] + E6 * k6[j] + E7 * k7[j]);
            let scale = opts.atol + opts.rtol * y[j].abs().max(y_new[j].abs());
            err = err.max((e / scale).abs());
            finite &= y_new[j].is_finite() && k7[j].is_finite();
        }
        if !finite {
            err = f64::INFINITY;
        }

        if err <= 1.0 {
            t = if last { t_end } else { t + h };
            y = y_new;
            k1 = k7;
            trace.t.push(t);
            trace.y.push(y);
            trace.dy.push(k1);
            if stop(t, &y) {
                trace.stop = Stop::Event;
                return Ok(trace);
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (h * factor).min(opts.h_max);
        } else {
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            h *= factor;
            if h < opts.h_min * t.abs().max(1.0) {
                trace.stop = Stop::Breakdown;
                return Ok(trace);
            }
        }
    }
    Ok(trace)
}

/// Quintic Hermite interpolant on `[t0, t0 + h]` from value, first and second
/// derivative at both ends; returns value and first derivative at `t0 + s h`.
pub fn quintic_hermite(h: f64, left: (f64, f64, f64), right: (f64, f64, f64), s: f64) -> (f64, f64) {
    let (p0, m0, a0) = left;
    let (p1, m1, a1) = right;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    let d00 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
    let d10 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
    let d20 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
    let d01 = 30.0 * s2 - 60.0 * s3 + 30.0 * s4;
    let d11 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
    let d21 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);
    let value = h00 * p0 + h * h10 * m0 + h * h * h20 * a0 + h01 * p1 + h * h11 * m1 + h * h * h21 * a1;
    let deriv = (d00 * p0 + h * d10 * m0 + h * h * d20 * a0 + d01 * p1 + h * d11 * m1 + h * h * d21 * a1) / h;
    (value, deriv)
}

/// Index `k` with `nodes[k] <= t <= nodes[k + 1]` for sorted nodes.
pub fn bracket(nodes: &[f64], t: f64) -> Option<usize> {
    if nodes.len() < 2 || t < nodes[0] || t > nodes[nodes.len() - 1] {
        return None;
    }
    let k = nodes.partition_point(|&x| x <= t);
    Some(k.saturating_sub(1).min(nodes.len() - 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let trace = integrate(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 5.0, &OdeOptions::default(), |_, _| false).unwrap();
        assert_eq!(trace.stop, Stop::End);
        assert_eq!(*trace.t.last().unwrap(), 5.0);
        assert_relative_eq!(trace.y.last().unwrap()[0], (-5.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn harmonic_oscillator_and_dense_output() {
        let opts = OdeOptions { h_max: 0.3, ..OdeOptions::default() };
        let trace = integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &opts, |_, _| false).unwrap();
        for (t, y) in trace.t.iter().zip(&trace.y) {
            assert!((y[0] - t.sin()).abs() < 1e-8);
        }
        for &t in &[0.123, 3.3, 7.77, 9.99] {
            let k = bracket(&trace.t, t).unwrap();
            let h = trace.t[k + 1] - trace.t[k];
            let node = |i: usize| (trace.y[i][0], trace.dy[i][0], trace.dy[i][1]);
            let (v, d) = quintic_hermite(h, node(k), node(k + 1), (t - trace.t[k]) / h);
            assert!((v - t.sin()).abs() < 1e-8, "t={t}");
            assert!((d - t.cos()).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn quintic_reproduces_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) + 0.25 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x + 1.25 * x.powi(4);
        let ddp = |x: f64| 3.0 * x + 5.0 * x.powi(3);
        let (a, b) = (0.5, 1.7);
        for &s in &[0.0, 0.2, 0.5, 0.9, 1.0] {
            let x = a + s * (b - a);
            let (v, d) = quintic_hermite(b - a, (p(a), dp(a), ddp(a)), (p(b), dp(b), ddp(b)), s);
            assert_relative_eq!(v, p(x), epsilon = 1e-12);
            assert_relative_eq!(d, dp(x), epsilon = 1e-11);
        }
    }

    #[test]
    fn events_and_breakdown() {
        let trace = integrate(|_, y: &[f64; 1]| [1.0 + 0.0 * y[0]], 0.0, [0.0], 10.0, &OdeOptions::default(), |_, y| y[0] > 1.0).unwrap();
        assert_eq!(trace.stop, Stop::Event);
        assert!(*trace.t.last().unwrap() < 10.0);
        // y' = y^2 blows up at t = 1
        let trace = integrate(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &OdeOptions::default(), |_, _| false).unwrap();
        assert_eq!(trace.stop, Stop::Breakdown);
        assert!((trace.t.last().unwrap() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn bracket_lookup() {
        let nodes = [0.0, 1.0, 2.5, 4.0];
        assert_eq!(bracket(&nodes, 0.0), Some(0));
        assert_eq!(bracket(&nodes, 1.0), Some(1));
        assert_eq!(bracket(&nodes, 3.0), Some(2));
        assert_eq!(bracket(&nodes, 4.0), Some(2));
        assert_eq!(bracket(&nodes, 4.1), None);
    }
}
