//! Exponents derived from `q` and the space dimension.

use crate::error::{Error, Result};

/// Constants attached to the pair `(q, N)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub q: f64,
    pub dim: usize,
    /// Dual exponent `q / (q - 1)`.
    pub qprime: f64,
    /// Similarity exponent `(2 - q) / (q - 1)`; negative for `q > 2`.
    pub a: f64,
    /// Critical exponent `(N + 2) / (N + 1)`.
    pub qstar: f64,
    /// Constant of the stationary solution `C |x|^{|a|}`, defined when
    /// `q > 2` and `(N - 1) q > N`.
    pub ctilde: Option<f64>,
}

impl DerivedConstants {
    pub fn new(q: f64, dim: usize) -> Result<Self> {
        if !(q.is_finite() && q > 1.0) {
            return Err(Error::Precondition(format!("q must be > 1, got {q}")));
        }
        if dim == 0 {
            return Err(Error::Precondition("dimension must be >= 1".into()));
        }
        let n = dim as f64;
        let ctilde = if q > 2.0 && (n - 1.0) * q > n {
            Some((q - 1.0) / (q - 2.0) * (((n - 1.0) * q - n) / (q - 1.0)).powf(1.0 / (q - 1.0)))
        } else {
            None
        };
        Ok(Self {
            q,
            dim,
            qprime: q / (q - 1.0),
            a: (2.0 - q) / (q - 1.0),
            qstar: (n + 2.0) / (n + 1.0),
            ctilde,
        })
    }

    /// Dirac initial data admit a solution only below the critical exponent.
    pub fn dirac_solvable(&self) -> bool {
        self.q < self.qstar
    }

    /// Exponent `-N/(2R)` of the heat-type smoothing `L^R -> L^inf`.
    pub fn first_effect_exponent(&self, r: f64) -> f64 {
        -(self.dim as f64) / (2.0 * r)
    }

    /// Exponent `-N/(qR + N(q-1))` of the absorption-driven smoothing.
    pub fn second_effect_exponent(&self, r: f64) -> f64 {
        let n = self.dim as f64;
        -n / (self.q * r + n * (self.q - 1.0))
    }
}

/// Surface area of the unit sphere in `R^N` (`2` for `N = 1`).
pub fn unit_sphere_area(dim: usize) -> f64 {
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_half_integer(dim)
}

/// `Gamma(n / 2)` for a positive integer `n`.
fn gamma_half_integer(n: usize) -> f64 {
    let (mut value, mut x) = if n.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (std::f64::consts::PI.sqrt(), 0.5)
    };
    let target = n as f64 / 2.0;
    while x < target - 1e-12 {
        value *= x;
        x += 1.0;
    }
    value
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn invariants_hold_over_a_range_of_q() {
        for &q in &[1.05, 1.2, 1.5, 2.0, 2.5, 3.0, 7.0] {
            let c = DerivedConstants::new(q, 3).unwrap();
            assert!((c.qprime * (q - 1.0) - q).abs() < 1e-12);
            assert!((c.a * (q - 1.0) - (2.0 - q)).abs() < 1e-12);
            assert_eq!(c.a == 0.0, q == 2.0);
        }
    }

    #[test]
    fn stationary_constant_for_q3_n2_is_sqrt2() {
        let c = DerivedConstants::new(3.0, 2).unwrap();
        assert_relative_eq!(c.ctilde.unwrap(), 2f64.sqrt(), epsilon = 1e-14);
        assert!(DerivedConstants::new(2.5, 1).unwrap().ctilde.is_none());
        assert!(DerivedConstants::new(1.5, 3).unwrap().ctilde.is_none());
    }

    #[test]
    fn critical_exponent() {
        assert_relative_eq!(DerivedConstants::new(1.2, 1).unwrap().qstar, 1.5);
        assert_relative_eq!(DerivedConstants::new(1.2, 3).unwrap().qstar, 1.25);
        assert!(DerivedConstants::new(1.2, 1).unwrap().dirac_solvable());
        assert!(!DerivedConstants::new(1.4, 3).unwrap().dirac_solvable());
    }

    #[test]
    fn rejects_q_at_most_one() {
        assert!(DerivedConstants::new(1.0, 1).is_err());
        assert!(DerivedConstants::new(f64::NAN, 1).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(unit_sphere_area(1), 2.0, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI, epsilon = 1e-14);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * PI * PI, epsilon = 1e-13);
    }
}
