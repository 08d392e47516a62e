//! Nonnegative initial data: bounded profiles, power singularities, power
//! growth and mollified Dirac masses.

use crate::error::{Error, Result};
use crate::grid::{Field, Geometry, GridKind};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DatumKind {
    Constant { c: f64 },
    /// `amplitude * exp(-|x|^2 / width^2)`.
    Bump { amplitude: f64, width: f64 },
    /// `c |x|^{-gamma}`.
    PowerSingular { c: f64, gamma: f64 },
    /// `c |x|^{beta}`.
    PowerGrowth { c: f64, beta: f64 },
    /// `kappa` times a heat kernel of width `eps` (`None`: four grid spacings).
    Dirac { kappa: f64, eps: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialDatum {
    pub kind: DatumKind,
    /// Truncation height; for singular data the default is the value at `h/2`.
    pub cap: Option<f64>,
    /// Constant added after truncation.
    pub lift: f64,
}

impl From<DatumKind> for InitialDatum {
    fn from(kind: DatumKind) -> Self {
        Self { kind, cap: None, lift: 0.0 }
    }
}

impl InitialDatum {
    pub fn constant(c: f64) -> Self {
        DatumKind::Constant { c }.into()
    }

    pub fn bump(amplitude: f64, width: f64) -> Self {
        DatumKind::Bump { amplitude, width }.into()
    }

    pub fn power_singular(c: f64, gamma: f64) -> Self {
        DatumKind::PowerSingular { c, gamma }.into()
    }

    pub fn power_growth(c: f64, beta: f64) -> Self {
        DatumKind::PowerGrowth { c, beta }.into()
    }

    pub fn dirac(kappa: f64, eps: Option<f64>) -> Self {
        DatumKind::Dirac { kappa, eps }.into()
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    pub fn with_lift(mut self, lift: f64) -> Self {
        self.lift = lift;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Precondition(format!("{name} must be > 0, got {v}")))
            }
        };
        match self.kind {
            DatumKind::Constant { c } => {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::Precondition(format!("constant must be >= 0, got {c}")));
                }
            }
            DatumKind::Bump { amplitude, width } => {
                positive("bump amplitude", amplitude)?;
                positive("bump width", width)?;
            }
            DatumKind::PowerSingular { c, gamma } => {
                positive("singular coefficient", c)?;
                positive("singular exponent", gamma)?;
            }
            DatumKind::PowerGrowth { c, beta } => {
                positive("growth coefficient", c)?;
                positive("growth exponent", beta)?;
            }
            DatumKind::Dirac { kappa, eps } => {
                positive("dirac mass", kappa)?;
                if let Some(e) = eps {
                    positive("dirac width", e)?;
                }
            }
        }
        if let Some(cap) = self.cap {
            positive("cap", cap)?;
        }
        if !(self.lift.is_finite() && self.lift >= 0.0) {
            return Err(Error::Precondition(format!("lift must be >= 0, got {}", self.lift)));
        }
        Ok(())
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(
            self.kind,
            DatumKind::PowerSingular { .. } | DatumKind::PowerGrowth { .. }
        ) || self.cap.is_some()
    }

    /// Error when `|u0|^R` is not integrable near the origin in `R^dim`.
    pub fn ensure_locally_integrable(&self, r_exp: f64, dim: usize) -> Result<()> {
        if let DatumKind::PowerSingular { gamma, .. } = self.kind {
            if gamma * r_exp >= dim as f64 {
                return Err(Error::NotLocallyIntegrable(format!(
                    "|x|^-{gamma} is not in L^{r_exp}_loc(R^{dim})"
                )));
            }
        }
        Ok(())
    }

    /// Pointwise value at distance `r` from the origin, before truncation.
    pub fn eval_untruncated(&self, r: f64, dim: usize, h: f64) -> f64 {
        match self.kind {
            DatumKind::Constant { c } => c,
            DatumKind::Bump { amplitude, width } => amplitude * (-(r * r) / (width * width)).exp(),
            DatumKind::PowerSingular { c, gamma } => c * r.powf(-gamma),
            DatumKind::PowerGrowth { c, beta } => c * r.powf(beta),
            DatumKind::Dirac { kappa, eps } => {
                let e = eps.unwrap_or(4.0 * h);
                kappa * (4.0 * PI * e * e).powf(-(dim as f64) / 2.0) * (-(r * r) / (4.0 * e * e)).exp()
            }
        }
    }

    fn effective_cap(&self, dim: usize, h: f64) -> Option<f64> {
        match (self.cap, self.kind) {
            (Some(c), _) => Some(c),
            (None, DatumKind::PowerSingular { .. }) => Some(self.eval_untruncated(0.5 * h, dim, h)),
            _ => None,
        }
    }

    pub fn eval(&self, r: f64, dim: usize, h: f64) -> f64 {
        let v = self.eval_untruncated(r, dim, h);
        let v = match self.effective_cap(dim, h) {
            Some(cap) => v.min(cap),
            None => v,
        };
        v + self.lift
    }

    /// Sample on the grid nodes.
    pub fn sample(&self, geometry: &Geometry) -> Result<Field> {
        self.validate()?;
        let h = geometry.spacing();
        if matches!(self.kind, DatumKind::PowerSingular { .. })
            && geometry.kind() == GridKind::Cartesian1d
            && geometry.origin_index().is_none()
        {
            return Err(Error::Precondition(
                "singular data need a grid with a node at the origin".into(),
            ));
        }
        if let DatumKind::Dirac { eps: Some(e), .. } = self.kind {
            if e < 2.0 * h {
                return Err(Error::Precondition(format!(
                    "dirac width {e} is below two grid spacings ({})",
                    2.0 * h
                )));
            }
        }
        let dim = geometry.dim();
        let values = (0..geometry.node_count())
            .map(|i| self.eval(geometry.radius_of(i), dim, h))
            .collect();
        Field::new(*geometry, 0.0, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::ball_norm;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn constant_samples() {
        let geo = Geometry::radial(2, 1.0, 32).unwrap();
        let f = InitialDatum::constant(5.0).sample(&geo).unwrap();
        assert!(f.values().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn growth_value_matches_stationary_profile() {
        let geo = Geometry::radial(2, 8.0, 32).unwrap();
        let f = InitialDatum::power_growth(2f64.sqrt(), 0.5).sample(&geo).unwrap();
        let i = geo.nearest_index(4.0);
        assert_relative_eq!(f.values()[i], 2.0 * 2f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn dirac_mass_is_nearly_kappa() {
        for dim in [1, 2, 3] {
            let geo = Geometry::radial(dim, 1.0, 400).unwrap();
            let eps = 0.1;
            let f = InitialDatum::dirac(1.0, Some(eps)).sample(&geo).unwrap();
            let mass = ball_norm(&f, 0, 1.0, 1.0).unwrap();
            assert!((0.95..=1.0 + 1e-4).contains(&mass), "dim {dim}: mass {mass}");
        }
        let geo = Geometry::cartesian(1.0, 800).unwrap();
        let f = InitialDatum::dirac(1.0, None).sample(&geo).unwrap();
        let mass = ball_norm(&f, geo.origin_index().unwrap(), 1.0, 1.0).unwrap();
        assert!((0.95..=1.0 + 1e-4).contains(&mass), "mass {mass}");
    }

    #[test]
    fn narrow_dirac_is_rejected() {
        let geo = Geometry::cartesian(1.0, 100).unwrap();
        assert!(InitialDatum::dirac(1.0, Some(0.01)).sample(&geo).is_err());
    }

    #[test]
    fn singular_cap_defaults_to_half_cell_value() {
        let geo = Geometry::radial(3, 1.0, 100).unwrap();
        let f = InitialDatum::power_singular(1.0, 1.0).sample(&geo).unwrap();
        assert_relative_eq!(f.values()[0], 200.0, epsilon = 1e-9);
        assert_relative_eq!(f.values()[10], 10.0, epsilon = 1e-9);
    }

    #[test]
    fn integrability_check() {
        let d = InitialDatum::power_singular(1.0, 3.0);
        assert!(matches!(d.ensure_locally_integrable(1.0, 3), Err(Error::NotLocallyIntegrable(_))));
        assert!(InitialDatum::power_singular(1.0, 1.0).ensure_locally_integrable(2.5, 3).is_ok());
        assert!(InitialDatum::power_singular(1.0, 1.0).ensure_locally_integrable(3.0, 3).is_err());
    }

    #[test]
    fn invalid_parameters() {
        let geo = Geometry::radial(1, 1.0, 32).unwrap();
        assert!(InitialDatum::bump(-1.0, 1.0).sample(&geo).is_err());
        assert!(InitialDatum::constant(f64::NAN).sample(&geo).is_err());
        assert!(InitialDatum::power_growth(1.0, 0.5).with_cap(0.0).sample(&geo).is_err());
        let odd = Geometry::cartesian(1.0, 33).unwrap();
        assert!(InitialDatum::power_singular(1.0, 0.5).sample(&odd).is_err());
    }

    proptest! {
        #[test]
        fn sampling_is_monotone_in_amplitude(c1 in 0.1..5.0f64, dc in 0.0..5.0f64, gamma in 0.1..2.0f64) {
            let geo = Geometry::radial(3, 2.0, 64).unwrap();
            let lo = InitialDatum::power_singular(c1, gamma).with_cap(1e3).sample(&geo).unwrap();
            let hi = InitialDatum::power_singular(c1 + dc, gamma).with_cap(1e3).sample(&geo).unwrap();
            prop_assert!(lo.values().iter().zip(hi.values()).all(|(a, b)| a <= b));
            let lo = InitialDatum::bump(c1, 0.5).sample(&geo).unwrap();
            let hi = InitialDatum::bump(c1 + dc, 0.5).sample(&geo).unwrap();
            prop_assert!(lo.values().iter().zip(hi.values()).all(|(a, b)| a <= b));
        }

        #[test]
        fn truncations_increase_to_the_datum(levels in prop::collection::vec(0.5..50.0f64, 2..6)) {
            let geo = Geometry::radial(2, 30.0, 64).unwrap();
            let base = InitialDatum::power_growth(2f64.sqrt(), 0.5);
            let full = base.sample(&geo).unwrap();
            let mut sorted = levels.clone();
            sorted.sort_by(f64::total_cmp);
            let fields: Vec<_> = sorted.iter().map(|&n| base.with_cap(n).sample(&geo).unwrap()).collect();
            for w in fields.windows(2) {
                prop_assert!(w[0].values().iter().zip(w[1].values()).all(|(a, b)| a <= b));
            }
            let top = base.with_cap(1e6).sample(&geo).unwrap();
            prop_assert_eq!(top.values(), full.values());
        }
    }
}
