//! Numerical Hamiltonians for `H(p) = |p|^q`.

/// Godunov flux for the convex even Hamiltonian `|p|^q`.
///
/// `p_minus` and `p_plus` are the backward and forward differences. For
/// `p_minus <= p_plus` this is the minimum of `|p|^q` over `[p_minus, p_plus]`,
/// otherwise the maximum over `[p_plus, p_minus]`.
pub fn godunov_hamiltonian(p_minus: f64, p_plus: f64, q: f64) -> f64 {
    if p_minus <= p_plus {
        if p_minus <= 0.0 && p_plus >= 0.0 {
            0.0
        } else {
            p_minus.abs().min(p_plus.abs()).powf(q)
        }
    } else {
        p_minus.abs().max(p_plus.abs()).powf(q)
    }
}

/// `|p|^q` at the centered difference `(p_minus + p_plus) / 2`.
pub fn central_hamiltonian(p_minus: f64, p_plus: f64, q: f64) -> f64 {
    (0.5 * (p_minus + p_plus)).abs().powf(q)
}

/// Cell Peclet number `h H'(G) / (2 nu)` for the largest one-sided slope `G`.
pub fn peclet(h: f64, nu: f64, q: f64, max_slope: f64) -> f64 {
    h * q * max_slope.powf(q - 1.0) / (2.0 * nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn godunov_examples() {
        assert_eq!(godunov_hamiltonian(0.0, 0.0, 1.7), 0.0);
        assert_eq!(godunov_hamiltonian(1.0, 2.0, 2.0), 1.0);
        assert_eq!(godunov_hamiltonian(2.0, -1.0, 2.0), 4.0);
        assert_eq!(godunov_hamiltonian(-2.0, 1.0, 3.0), 0.0);
        assert_eq!(godunov_hamiltonian(-3.0, -2.0, 2.0), 4.0);
    }

    #[test]
    fn consistency() {
        for &p in &[-3.0, -0.5, 0.0, 0.25, 4.0] {
            for &q in &[1.2, 2.0, 3.0] {
                let exact = f64::abs(p).powf(q);
                assert!((godunov_hamiltonian(p, p, q) - exact).abs() < 1e-12);
                assert!((central_hamiltonian(p, p, q) - exact).abs() < 1e-12);
            }
        }
    }

    proptest! {
        // Godunov is nonincreasing in p_plus and nondecreasing in p_minus.
        #[test]
        fn godunov_is_monotone(a in -5.0..5.0f64, b in -5.0..5.0f64, d in 0.0..1.0f64, q in 1.05..4.0f64) {
            prop_assert!(godunov_hamiltonian(a + d, b, q) >= godunov_hamiltonian(a, b, q) - 1e-12);
            prop_assert!(godunov_hamiltonian(a, b + d, q) <= godunov_hamiltonian(a, b, q) + 1e-12);
        }

        #[test]
        fn godunov_bracketed_by_endpoint_values(a in -5.0..5.0f64, b in -5.0..5.0f64, q in 1.05..4.0f64) {
            let h = godunov_hamiltonian(a, b, q);
            let hi = a.abs().max(b.abs()).powf(q);
            prop_assert!(h >= 0.0 && h <= hi + 1e-12);
        }
    }
}
