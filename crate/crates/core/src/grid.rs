//! Grids, grid functions and the discrete operators shared by the solver and
//! the estimate checkers.
//!
//! Two layouts are supported. A Cartesian 1-D grid has nodes
//! `-L, -L + h, ..., L` with `h = 2L / n`. A radial grid for radially
//! symmetric functions on `R^N` has nodes `r_i = i h`, `i = 0..=n`, with
//! `h = L / n`; the Laplacian carries the `(N - 1)/r` drift term and uses the
//! symmetry limit `N u_rr(0)` at the origin.

use crate::constants::unit_sphere_area;
use crate::error::{Error, Result};

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    Cartesian1d,
    Radial,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    kind: GridKind,
    dim: usize,
    length: f64,
    cells: usize,
}

impl Geometry {
    /// Symmetric interval `[-half_width, half_width]`.
    pub fn cartesian(half_width: f64, cells: usize) -> Result<Self> {
        Self::new(GridKind::Cartesian1d, 1, half_width, cells)
    }

    /// Radial grid on `[0, radius]` for radial functions on `R^dim`.
    pub fn radial(dim: usize, radius: f64, cells: usize) -> Result<Self> {
        Self::new(GridKind::Radial, dim, radius, cells)
    }

    pub fn new(kind: GridKind, dim: usize, length: f64, cells: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be > 0, got {length}")));
        }
        if cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_CELLS} cells, got {cells}"
            )));
        }
        let dim = match kind {
            GridKind::Cartesian1d => {
                if dim != 1 {
                    return Err(Error::InvalidGrid("cartesian-1d grids have N = 1".into()));
                }
                1
            }
            GridKind::Radial => {
                if dim == 0 {
                    return Err(Error::InvalidGrid("dimension must be >= 1".into()));
                }
                dim
            }
        };
        Ok(Self { kind, dim, length, cells })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half-width (Cartesian) or outer radius (radial).
    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn node_count(&self) -> usize {
        self.cells + 1
    }

    pub fn spacing(&self) -> f64 {
        match self.kind {
            GridKind::Cartesian1d => 2.0 * self.length / self.cells as f64,
            GridKind::Radial => self.length / self.cells as f64,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        let h = self.spacing();
        match self.kind {
            GridKind::Cartesian1d => -self.length + i as f64 * h,
            GridKind::Radial => i as f64 * h,
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.node_count()).map(|i| self.coord(i)).collect()
    }

    /// Distance of node `i` to the origin.
    pub fn radius_of(&self, i: usize) -> f64 {
        self.coord(i).abs()
    }

    /// Index of the node at the origin, when the grid has one.
    pub fn origin_index(&self) -> Option<usize> {
        match self.kind {
            GridKind::Radial => Some(0),
            GridKind::Cartesian1d => self.cells.is_multiple_of(2).then_some(self.cells / 2),
        }
    }

    /// Index of the node closest to the coordinate `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let h = self.spacing();
        let offset = match self.kind {
            GridKind::Cartesian1d => x + self.length,
            GridKind::Radial => x,
        };
        ((offset / h).round().max(0.0) as usize).min(self.cells)
    }

    /// Nodes within the inner half of the domain (`|x| <= L/2`).
    pub fn inner_half(&self) -> impl Iterator<Item = usize> + '_ {
        let limit = 0.5 * self.length * (1.0 + 1e-12);
        (0..self.node_count()).filter(move |&i| self.radius_of(i) <= limit)
    }

    /// Same domain, twice as many cells.
    pub fn refined(&self) -> Self {
        Self { cells: 2 * self.cells, ..*self }
    }

    /// Twice the domain at the same spacing.
    pub fn doubled(&self) -> Self {
        Self { length: 2.0 * self.length, cells: 2 * self.cells, ..*self }
    }

    fn radial_flag(&self) -> bool {
        self.kind == GridKind::Radial
    }
}

/// A grid function at a fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    geometry: Geometry,
    t: f64,
    values: Vec<f64>,
}

impl Field {
    pub fn new(geometry: Geometry, t: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.node_count() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                geometry.node_count(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                t,
                reason: format!("nonfinite value at node {i}"),
            });
        }
        Ok(Self { geometry, t, values })
    }

    pub fn from_fn(geometry: Geometry, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..geometry.node_count()).map(|i| f(geometry.coord(i))).collect();
        Self::new(geometry, t, values)
    }

    pub fn constant(geometry: Geometry, t: f64, c: f64) -> Result<Self> {
        Self::new(geometry, t, vec![c; geometry.node_count()])
    }

    pub(crate) fn from_parts_unchecked(geometry: Geometry, t: f64, values: Vec<f64>) -> Self {
        Self { geometry, t, values }
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Error unless every value is `>= -1e-12 * max`.
    pub fn ensure_nonnegative(&self) -> Result<()> {
        let floor = -1e-12 * self.max().abs().max(f64::MIN_POSITIVE);
        match self.values.iter().position(|&v| v < floor) {
            Some(i) => Err(Error::Precondition(format!(
                "field negative at node {i}: {}",
                self.values[i]
            ))),
            None => Ok(()),
        }
    }

    /// Linear interpolation at a coordinate inside the grid.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        interpolate_linear(&self.geometry, &self.values, x)
    }
}

fn interpolate_linear(geometry: &Geometry, values: &[f64], x: f64) -> Result<f64> {
    let h = geometry.spacing();
    let x0 = geometry.coord(0);
    let s = (x - x0) / h;
    let last = geometry.cells() as f64;
    if s < -1e-9 || s > last + 1e-9 {
        return Err(Error::OutOfDomain(format!("coordinate {x} outside grid")));
    }
    let s = s.clamp(0.0, last);
    let j = (s.floor() as usize).min(geometry.cells() - 1);
    let w = s - j as f64;
    Ok((1.0 - w) * values[j] + w * values[j + 1])
}

/// Discrete first derivative on a uniform grid.
///
/// Centered at interior nodes, one-sided second order at the ends. With
/// `symmetric_origin` the first node is a symmetry center and gets 0.
pub fn gradient_values(values: &[f64], h: f64, symmetric_origin: bool) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InvalidGrid(format!("gradient needs >= 3 nodes, got {n}")));
    }
    let mut g = vec![0.0; n];
    for i in 1..n - 1 {
        g[i] = (values[i + 1] - values[i - 1]) / (2.0 * h);
    }
    g[0] = if symmetric_origin {
        0.0
    } else {
        (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    };
    g[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
    Ok(g)
}

/// One-sided second derivative at the last node (exact on cubics when four
/// nodes are available, on quadratics otherwise).
fn one_sided_second(values: &[f64], h: f64, from_end: bool) -> f64 {
    let n = values.len();
    let at = |k: usize| if from_end { values[n - 1 - k] } else { values[k] };
    if n >= 4 {
        (2.0 * at(0) - 5.0 * at(1) + 4.0 * at(2) - at(3)) / (h * h)
    } else {
        (at(0) - 2.0 * at(1) + at(2)) / (h * h)
    }
}

/// `nu * Laplacian` on raw values.
pub fn laplacian_values(values: &[f64], h: f64, kind: GridKind, dim: usize, nu: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::InvalidGrid(format!("laplacian needs >= 3 nodes, got {n}")));
    }
    let h2 = h * h;
    let mut lap = vec![0.0; n];
    match kind {
        GridKind::Cartesian1d => {
            for i in 1..n - 1 {
                lap[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
            }
            lap[0] = one_sided_second(values, h, false);
            lap[n - 1] = one_sided_second(values, h, true);
        }
        GridKind::Radial => {
            let drift = dim as f64 - 1.0;
            lap[0] = dim as f64 * 2.0 * (values[1] - values[0]) / h2;
            for i in 1..n - 1 {
                let r = i as f64 * h;
                let urr = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
                let ur = (values[i + 1] - values[i - 1]) / (2.0 * h);
                lap[i] = urr + drift / r * ur;
            }
            let r = (n - 1) as f64 * h;
            let ur = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * h);
            lap[n - 1] = one_sided_second(values, h, true) + drift / r * ur;
        }
    }
    for v in &mut lap {
        *v *= nu;
    }
    Ok(lap)
}

/// Discrete gradient of a field (radial grids: `u_r`, zero at the origin).
pub fn gradient(field: &Field) -> Result<Field> {
    let geo = field.geometry;
    let g = gradient_values(&field.values, geo.spacing(), geo.radial_flag())?;
    Ok(Field::from_parts_unchecked(geo, field.t, g))
}

/// `nu * Laplacian` of a field; the dimension comes from the geometry.
pub fn laplacian(field: &Field, nu: f64) -> Result<Field> {
    let geo = field.geometry;
    let lap = laplacian_values(&field.values, geo.spacing(), geo.kind, geo.dim, nu)?;
    Ok(Field::from_parts_unchecked(geo, field.t, lap))
}

/// Exponent `R` of an `L^R` norm; `f64::INFINITY` selects the sup norm.
fn check_exponent(r_exp: f64) -> Result<()> {
    if r_exp.is_nan() || r_exp < 1.0 {
        return Err(Error::Precondition(format!("norm exponent must be in [1, inf], got {r_exp}")));
    }
    Ok(())
}

/// Interval `[lo, hi]` covered by the ball, in grid coordinates.
fn ball_interval(geo: &Geometry, center_index: usize, radius: f64) -> Result<(f64, f64)> {
    if center_index >= geo.node_count() {
        return Err(Error::OutOfDomain(format!("center index {center_index} outside grid")));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Precondition(format!("ball radius must be > 0, got {radius}")));
    }
    let slack = 1e-9 * geo.spacing();
    let (lo, hi) = match geo.kind {
        GridKind::Radial => {
            if center_index != 0 {
                return Err(Error::OutOfDomain(
                    "balls on radial grids are centered at the origin".into(),
                ));
            }
            (0.0, radius)
        }
        GridKind::Cartesian1d => {
            let c = geo.coord(center_index);
            (c - radius, c + radius)
        }
    };
    if lo < geo.coord(0) - slack || hi > geo.coord(geo.cells) + slack {
        return Err(Error::OutOfDomain(format!(
            "ball of radius {radius} around node {center_index} exceeds the grid"
        )));
    }
    Ok((lo.max(geo.coord(0)), hi.min(geo.coord(geo.cells))))
}

/// `int_B |u|^R dx` by the midpoint rule (radial weight `omega r^{N-1}`).
pub fn ball_power_integral(field: &Field, center_index: usize, radius: f64, r_exp: f64) -> Result<f64> {
    check_exponent(r_exp)?;
    if r_exp.is_infinite() {
        return Err(Error::Precondition("power integral needs a finite exponent".into()));
    }
    let geo = &field.geometry;
    let (lo, hi) = ball_interval(geo, center_index, radius)?;
    let h = geo.spacing();
    let omega = match geo.kind {
        GridKind::Radial => unit_sphere_area(geo.dim),
        GridKind::Cartesian1d => 1.0,
    };
    let mut total = 0.0;
    for j in 0..geo.cells {
        let a = geo.coord(j).max(lo);
        let b = (geo.coord(j) + h).min(hi);
        if b <= a {
            continue;
        }
        // Density sampled at the cell midpoint, so partial cells grow monotonically with the ball.
        let mid = geo.coord(j) + 0.5 * h;
        let u = 0.5 * (field.values[j] + field.values[j + 1]);
        let weight = match geo.kind {
            GridKind::Radial => omega * mid.powi(geo.dim as i32 - 1),
            GridKind::Cartesian1d => 1.0,
        };
        total += u.abs().powf(r_exp) * weight * (b - a);
    }
    Ok(total)
}

/// `||u||_{L^R(B)}`; `R = inf` gives the maximum over nodes in the ball.
pub fn ball_norm(field: &Field, center_index: usize, radius: f64, r_exp: f64) -> Result<f64> {
    check_exponent(r_exp)?;
    if r_exp.is_infinite() {
        return ball_sup(field, center_index, radius);
    }
    Ok(ball_power_integral(field, center_index, radius, r_exp)?.powf(1.0 / r_exp))
}

/// Midpoint-rule integral of `u` over the whole grid.
pub fn domain_integral(field: &Field) -> f64 {
    let geo = &field.geometry;
    let h = geo.spacing();
    let omega = match geo.kind {
        GridKind::Radial => unit_sphere_area(geo.dim),
        GridKind::Cartesian1d => 1.0,
    };
    (0..geo.cells)
        .map(|j| {
            let mid = geo.coord(j) + 0.5 * h;
            let weight = match geo.kind {
                GridKind::Radial => omega * mid.powi(geo.dim as i32 - 1),
                GridKind::Cartesian1d => 1.0,
            };
            0.5 * (field.values[j] + field.values[j + 1]) * weight * h
        })
        .sum()
}

/// `max_B |u|` over grid nodes in the closed ball.
pub fn ball_sup(field: &Field, center_index: usize, radius: f64) -> Result<f64> {
    let geo = &field.geometry;
    let (lo, hi) = ball_interval(geo, center_index, radius)?;
    let slack = 1e-9 * geo.spacing();
    Ok((0..geo.node_count())
        .filter(|&i| {
            let x = geo.coord(i);
            x >= lo - slack && x <= hi + slack
        })
        .map(|i| field.values[i].abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn geometry_validation() {
        assert!(Geometry::cartesian(1.0, 8).is_err());
        assert!(Geometry::cartesian(0.0, 32).is_err());
        assert!(Geometry::radial(0, 1.0, 32).is_err());
        assert!(Geometry::new(GridKind::Cartesian1d, 2, 1.0, 32).is_err());
        let g = Geometry::radial(3, 2.0, 20).unwrap();
        assert_eq!(g.coord(0), 0.0);
        assert_relative_eq!(g.coord(20), 2.0);
        let c = Geometry::cartesian(2.0, 20).unwrap();
        assert_relative_eq!(c.coord(0), -2.0);
        assert_relative_eq!(c.coord(20), 2.0);
        assert_eq!(c.origin_index(), Some(10));
        let xs = c.coords();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn gradient_on_constant_and_linear() {
        let geo = Geometry::cartesian(1.0, 32).unwrap();
        let f = Field::constant(geo, 0.0, 4.0).unwrap();
        assert!(gradient(&f).unwrap().values().iter().all(|&g| g == 0.0));
        let lin = Field::from_fn(geo, 0.0, |x| 3.0 * x).unwrap();
        for &g in gradient(&lin).unwrap().values() {
            assert_relative_eq!(g, 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gradient_of_square_on_three_nodes() {
        let g = gradient_values(&[1.0, 0.0, 1.0], 1.0, false).unwrap();
        assert_eq!(g, vec![-2.0, 0.0, 2.0]);
        assert!(gradient_values(&[1.0, 2.0], 1.0, false).is_err());
    }

    #[test]
    fn radial_gradient_vanishes_at_origin() {
        let geo = Geometry::radial(3, 1.0, 16).unwrap();
        let f = Field::from_fn(geo, 0.0, |r| 1.0 + r).unwrap();
        assert_eq!(gradient(&f).unwrap().values()[0], 0.0);
    }

    #[test]
    fn laplacian_of_r_squared_is_exact() {
        for (dim, nu, expected) in [(3, 1.0, 6.0), (2, 0.5, 2.0), (1, 1.0, 2.0)] {
            let geo = Geometry::radial(dim, 1.7, 40).unwrap();
            let f = Field::from_fn(geo, 0.0, |r| r * r).unwrap();
            for &v in laplacian(&f, nu).unwrap().values() {
                assert_relative_eq!(v, expected, epsilon = 1e-9);
            }
        }
        let geo = Geometry::cartesian(1.0, 20).unwrap();
        let f = Field::from_fn(geo, 0.0, |x| x * x).unwrap();
        for &v in laplacian(&f, 1.0).unwrap().values() {
            assert_relative_eq!(v, 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn laplacian_of_constant_vanishes() {
        let geo = Geometry::radial(2, 1.0, 16).unwrap();
        let f = Field::constant(geo, 0.0, 7.5).unwrap();
        assert!(laplacian(&f, 1.0).unwrap().values().iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn ball_norm_examples() {
        let geo = Geometry::cartesian(2.0, 400).unwrap();
        let one = Field::constant(geo, 0.0, 1.0).unwrap();
        let c = geo.origin_index().unwrap();
        assert_relative_eq!(ball_norm(&one, c, 1.0, 1.0).unwrap(), 2.0, epsilon = 1e-6);

        let geo3 = Geometry::radial(3, 2.0, 400).unwrap();
        let one3 = Field::constant(geo3, 0.0, 1.0).unwrap();
        assert_relative_eq!(ball_norm(&one3, 0, 1.0, 1.0).unwrap(), 4.0 * PI / 3.0, epsilon = 1e-4);

        let abs_x = Field::from_fn(geo, 0.0, f64::abs).unwrap();
        assert_relative_eq!(
            ball_norm(&abs_x, c, 1.0, 2.0).unwrap(),
            (2.0f64 / 3.0).sqrt(),
            epsilon = 1e-4
        );
        assert_relative_eq!(ball_norm(&abs_x, c, 1.0, f64::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn ball_quadrature_converges_under_refinement() {
        let exact = 4.0 * PI / 3.0;
        let err = |cells| {
            let geo = Geometry::radial(3, 2.0, cells).unwrap();
            let f = Field::constant(geo, 0.0, 1.0).unwrap();
            (ball_norm(&f, 0, 1.0, 1.0).unwrap() - exact).abs()
        };
        let (e1, e2) = (err(64), err(128));
        assert!(e2 < e1 / 3.5, "{e1} {e2}");
    }

    #[test]
    fn ball_outside_grid_is_rejected() {
        let geo = Geometry::cartesian(1.0, 32).unwrap();
        let f = Field::constant(geo, 0.0, 1.0).unwrap();
        let c = geo.origin_index().unwrap();
        assert!(matches!(ball_norm(&f, c, 1.5, 1.0), Err(Error::OutOfDomain(_))));
        let geo = Geometry::radial(2, 1.0, 32).unwrap();
        let f = Field::constant(geo, 0.0, 1.0).unwrap();
        assert!(ball_norm(&f, 3, 0.5, 1.0).is_err());
        assert!(ball_norm(&f, 0, 0.5, 0.5).is_err());
    }

    #[test]
    fn partial_cells_are_integrated() {
        let geo = Geometry::cartesian(1.0, 16).unwrap();
        let f = Field::constant(geo, 0.0, 1.0).unwrap();
        let c = geo.origin_index().unwrap();
        assert_relative_eq!(ball_norm(&f, c, 0.33, 1.0).unwrap(), 0.66, epsilon = 1e-12);
    }

    fn random_values(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0..10.0f64, n)
    }

    proptest! {
        #[test]
        fn operators_are_linear(u in random_values(33), v in random_values(33),
                                alpha in -3.0..3.0f64, beta in -3.0..3.0f64, radial in any::<bool>()) {
            let geo = if radial { Geometry::radial(3, 1.0, 32).unwrap() } else { Geometry::cartesian(1.0, 32).unwrap() };
            let combo: Vec<f64> = u.iter().zip(&v).map(|(a, b)| alpha * a + beta * b).collect();
            let fu = Field::new(geo, 0.0, u).unwrap();
            let fv = Field::new(geo, 0.0, v).unwrap();
            let fc = Field::new(geo, 0.0, combo).unwrap();
            let (gu, gv, gc) = (gradient(&fu).unwrap(), gradient(&fv).unwrap(), gradient(&fc).unwrap());
            let (lu, lv, lc) = (laplacian(&fu, 0.7).unwrap(), laplacian(&fv, 0.7).unwrap(), laplacian(&fc, 0.7).unwrap());
            for i in 0..33 {
                let (a, b, c) = (alpha * gu.values()[i], beta * gv.values()[i], gc.values()[i]);
                prop_assert!((a + b - c).abs() <= 1e-12 * (a.abs() + b.abs() + c.abs() + 1.0));
                let (a, b, c) = (alpha * lu.values()[i], beta * lv.values()[i], lc.values()[i]);
                prop_assert!((a + b - c).abs() <= 1e-12 * (a.abs() + b.abs() + c.abs() + 1.0));
            }
        }

        #[test]
        fn ball_norm_monotone_in_radius_and_holder(vals in prop::collection::vec(0.0..5.0f64, 33),
                                                   r1 in 0.1..0.5f64, r2 in 0.5..1.0f64, p in 1.0..4.0f64) {
            let geo = Geometry::radial(3, 1.0, 32).unwrap();
            let f = Field::new(geo, 0.0, vals).unwrap();
            let small = ball_norm(&f, 0, r1, p).unwrap();
            let large = ball_norm(&f, 0, r2, p).unwrap();
            prop_assert!(small <= large * (1.0 + 1e-12));
            let vol = ball_norm(&Field::constant(geo, 0.0, 1.0).unwrap(), 0, 1.0, 1.0).unwrap();
            let l1 = ball_norm(&f, 0, 1.0, 1.0).unwrap();
            let lp = ball_power_integral(&f, 0, 1.0, p).unwrap();
            prop_assert!(l1 / vol <= (lp / vol).powf(1.0 / p) * (1.0 + 1e-10) + 1e-12);
        }
    }
}
