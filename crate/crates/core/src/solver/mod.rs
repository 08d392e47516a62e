//! Explicit monotone finite-difference integrator for
//! `u_t - nu Lap(u) + |grad u|^q = 0`.
//!
//! Each step is forward Euler on `nu Lap_h(u) - Hhat(D^- u, D^+ u)`. The
//! numerical Hamiltonian `Hhat` is either the Godunov flux everywhere, or
//! ([`Flux::Adaptive`], the default) `|p|^q` at the centered difference on
//! every node where the diffusive stencil dominates the transport part
//! (cell Peclet number below the node's margin) and Godunov elsewhere. Both
//! choices give a monotone update under the CFL restriction; the centered
//! branch makes the scheme second order on resolved solutions.
//!
//! Runs that must be compared pointwise (ordered data, truncation sequences)
//! go through [`run_ensemble`], which advances all members with a common
//! time step and a common flux selection so that the discrete comparison
//! principle holds exactly.

mod hamiltonian;
mod hopf_cole;

pub use hamiltonian::{central_hamiltonian, godunov_hamiltonian, peclet};
pub use hopf_cole::{hopf_cole_convergence, hopf_cole_field, hopf_cole_reference, OracleReport};

use crate::constants::DerivedConstants;
use crate::error::{Error, Result};
use crate::grid::{domain_integral, laplacian_values, Field, Geometry, GridKind};
use crate::initial_data::InitialDatum;

/// Guard added to the slope in the transport CFL bound.
pub const SLOPE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Outermost node(s) held at zero.
    DirichletZero,
    /// Outermost node(s) extrapolated linearly from the interior, floored at 0.
    TruncatedFree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flux {
    Godunov,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub q: f64,
    pub nu: f64,
    pub geometry: Geometry,
    pub boundary: Boundary,
    pub initial: InitialDatum,
    pub t_end: f64,
    pub snapshots: Vec<f64>,
    pub cfl: f64,
    pub flux: Flux,
}

impl ProblemSpec {
    /// Spec with CFL safety 0.4, adaptive flux and a single snapshot at `t_end`.
    pub fn new(q: f64, nu: f64, geometry: Geometry, boundary: Boundary, initial: InitialDatum, t_end: f64) -> Self {
        Self {
            q,
            nu,
            geometry,
            boundary,
            initial,
            t_end,
            snapshots: vec![t_end],
            cfl: 0.4,
            flux: Flux::Adaptive,
        }
    }

    pub fn with_snapshots(mut self, times: Vec<f64>) -> Self {
        self.snapshots = times;
        self
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        self
    }

    pub fn with_initial(mut self, initial: InitialDatum) -> Self {
        self.initial = initial;
        self
    }

    pub fn with_flux(mut self, flux: Flux) -> Self {
        self.flux = flux;
        self
    }

    pub fn constants(&self) -> Result<DerivedConstants> {
        DerivedConstants::new(self.q, self.geometry.dim())
    }

    pub fn validate(&self) -> Result<()> {
        self.constants()?;
        if !(self.nu > 0.0 && self.nu <= 1.0) {
            return Err(Error::Precondition(format!("nu must lie in (0, 1], got {}", self.nu)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Precondition(format!("CFL safety must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::Precondition(format!("end time must be > 0, got {}", self.t_end)));
        }
        if self.snapshots.is_empty() {
            return Err(Error::Precondition("snapshot schedule is empty".into()));
        }
        if self.snapshots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Precondition("snapshot times must be strictly increasing".into()));
        }
        if self.snapshots[0] <= 0.0 || *self.snapshots.last().unwrap() > self.t_end {
            return Err(Error::Precondition("snapshot times must lie in (0, T]".into()));
        }
        self.initial.validate()
    }

    /// Specs that can be advanced in lockstep: everything but the initial datum agrees.
    fn compatible_with(&self, other: &ProblemSpec) -> bool {
        self.q == other.q
            && self.nu == other.nu
            && self.geometry == other.geometry
            && self.boundary == other.boundary
            && self.t_end == other.t_end
            && self.snapshots == other.snapshots
            && self.cfl == other.cfl
            && self.flux == other.flux
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub steps: usize,
    pub min_dt: f64,
    pub max_dt: f64,
    pub floor_events: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub spec: ProblemSpec,
    pub initial: Field,
    pub snapshots: Vec<Field>,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn final_field(&self) -> &Field {
        self.snapshots.last().unwrap_or(&self.initial)
    }

    pub fn final_mass(&self) -> f64 {
        domain_integral(self.final_field())
    }

    /// Snapshot recorded at time `t` (within a relative 1e-12).
    pub fn snapshot_at(&self, t: f64) -> Option<&Field> {
        self.snapshots.iter().find(|f| (f.t() - t).abs() <= 1e-12 * t.abs().max(1.0))
    }
}

/// Largest one-sided difference quotient over the grid.
pub fn max_slope(values: &[f64], h: f64) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max) / h
}

/// Stable time step for the given slope bound, before snapshot clipping.
fn raw_dt(spec: &ProblemSpec, slope: f64) -> f64 {
    let h = spec.geometry.spacing();
    let d_eff = match spec.geometry.kind() {
        GridKind::Radial => spec.geometry.dim() as f64,
        GridKind::Cartesian1d => 1.0,
    };
    let diffusive = h * h / (2.0 * spec.nu * d_eff);
    let transport = h / (spec.q * (slope + SLOPE_GUARD).powf(spec.q - 1.0));
    spec.cfl * diffusive.min(transport)
}

/// CFL time step for `field`, clipped to land on the next snapshot time.
pub fn cfl_dt(field: &Field, spec: &ProblemSpec) -> Result<f64> {
    if !(spec.cfl > 0.0 && spec.cfl < 1.0) {
        return Err(Error::Precondition(format!("CFL safety must lie in (0, 1), got {}", spec.cfl)));
    }
    if let Some(i) = field.values().iter().position(|v| !v.is_finite()) {
        return Err(Error::Diverged { t: field.t(), reason: format!("nonfinite value at node {i}") });
    }
    let dt = raw_dt(spec, max_slope(field.values(), field.geometry().spacing()));
    let next = spec.snapshots.iter().copied().find(|&s| s > field.t() * (1.0 + 1e-14));
    Ok(match next {
        Some(s) => dt.min(s - field.t()),
        None => dt,
    })
}

/// Margin a node needs for the centered flux to keep the update monotone.
fn central_margin(geometry: &Geometry, i: usize) -> f64 {
    match geometry.kind() {
        GridKind::Cartesian1d => 1.0,
        GridKind::Radial => 1.0 - (geometry.dim() as f64 - 1.0) / (2.0 * i as f64),
    }
}

/// `nu Lap_h(u) - Hhat` at every node, for a given shared slope bound used by
/// the adaptive flux selection. Boundary entries are left at zero.
pub fn spatial_operator(values: &[f64], spec: &ProblemSpec, slope_bound: f64) -> Result<Vec<f64>> {
    let geo = &spec.geometry;
    let h = geo.spacing();
    let n = values.len();
    let lap = laplacian_values(values, h, geo.kind(), geo.dim(), spec.nu)?;
    let pe = peclet(h, spec.nu, spec.q, slope_bound);
    let mut out = vec![0.0; n];
    let first = match geo.kind() {
        GridKind::Radial => 0,
        GridKind::Cartesian1d => 1,
    };
    for i in first..n - 1 {
        let (p_minus, p_plus) = if i == 0 {
            // mirror node u_{-1} = u_1
            let p = (values[1] - values[0]) / h;
            (-p, p)
        } else {
            ((values[i] - values[i - 1]) / h, (values[i + 1] - values[i]) / h)
        };
        let ham = match spec.flux {
            Flux::Godunov => godunov_hamiltonian(p_minus, p_plus, spec.q),
            Flux::Adaptive if i == 0 => 0.0,
            Flux::Adaptive => {
                if pe <= central_margin(geo, i) {
                    central_hamiltonian(p_minus, p_plus, spec.q)
                } else {
                    godunov_hamiltonian(p_minus, p_plus, spec.q)
                }
            }
        };
        out[i] = lap[i] - ham;
    }
    Ok(out)
}

fn apply_boundary(values: &mut [f64], spec: &ProblemSpec) {
    let n = values.len();
    let extrapolate = |inner: f64, next: f64| (2.0 * inner - next).max(0.0);
    match (spec.boundary, spec.geometry.kind()) {
        (Boundary::DirichletZero, GridKind::Radial) => values[n - 1] = 0.0,
        (Boundary::DirichletZero, GridKind::Cartesian1d) => {
            values[0] = 0.0;
            values[n - 1] = 0.0;
        }
        (Boundary::TruncatedFree, GridKind::Radial) => {
            values[n - 1] = extrapolate(values[n - 2], values[n - 3]);
        }
        (Boundary::TruncatedFree, GridKind::Cartesian1d) => {
            values[0] = extrapolate(values[1], values[2]);
            values[n - 1] = extrapolate(values[n - 2], values[n - 3]);
        }
    }
}

/// Advance `values` in place; returns the number of negative values floored to 0.
fn advance(values: &mut [f64], dt: f64, spec: &ProblemSpec, slope_bound: f64, t: f64) -> Result<usize> {
    let rhs = spatial_operator(values, spec, slope_bound)?;
    for (u, r) in values.iter_mut().zip(&rhs) {
        *u += dt * r;
    }
    apply_boundary(values, spec);
    let mut floors = 0;
    for (i, u) in values.iter_mut().enumerate() {
        if !u.is_finite() {
            return Err(Error::Diverged { t: t + dt, reason: format!("nonfinite value at node {i}") });
        }
        if *u < 0.0 {
            *u = 0.0;
            floors += 1;
        }
    }
    Ok(floors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub field: Field,
    pub floor_events: usize,
}

/// One forward Euler step of size `dt` (must satisfy the CFL bound).
pub fn step(field: &Field, dt: f64, spec: &ProblemSpec) -> Result<StepOutcome> {
    if field.geometry() != &spec.geometry {
        return Err(Error::Incompatible("field and spec use different grids".into()));
    }
    let h = spec.geometry.spacing();
    let slope = max_slope(field.values(), h);
    let limit = raw_dt(spec, slope);
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("time step {dt} violates the CFL bound {limit}")));
    }
    let mut values = field.values().to_vec();
    let floor_events = advance(&mut values, dt, spec, slope, field.t())?;
    Ok(StepOutcome {
        field: Field::new(spec.geometry, field.t() + dt, values)?,
        floor_events,
    })
}

/// Run one problem to its end time.
pub fn run(spec: &ProblemSpec) -> Result<Trajectory> {
    let mut out = run_ensemble(std::slice::from_ref(spec))?;
    Ok(out.remove(0))
}

/// Run several problems that differ only in their initial datum, in lockstep.
pub fn run_ensemble(specs: &[ProblemSpec]) -> Result<Vec<Trajectory>> {
    let initial = specs
        .iter()
        .map(|s| {
            s.validate()?;
            s.initial.sample(&s.geometry)
        })
        .collect::<Result<Vec<_>>>()?;
    run_ensemble_from(specs, initial)
}

/// As [`run_ensemble`], starting from explicit initial fields.
pub fn run_ensemble_from(specs: &[ProblemSpec], initial: Vec<Field>) -> Result<Vec<Trajectory>> {
    let Some(base) = specs.first() else {
        return Ok(Vec::new());
    };
    base.validate()?;
    if let Some(bad) = specs.iter().find(|s| !base.compatible_with(s)) {
        return Err(Error::Incompatible(format!(
            "ensemble members must share q, nu, grid, boundary, schedule and flux (q={} vs q={})",
            base.q, bad.q
        )));
    }
    if initial.len() != specs.len() {
        return Err(Error::Incompatible("one initial field per spec is required".into()));
    }
    for f in &initial {
        if f.geometry() != &base.geometry {
            return Err(Error::Incompatible("initial field on a different grid".into()));
        }
        f.ensure_nonnegative()?;
    }

    let h = base.geometry.spacing();
    let mut states: Vec<Vec<f64>> = initial.iter().map(|f| f.values().to_vec()).collect();
    let mut snapshots: Vec<Vec<Field>> = vec![Vec::with_capacity(base.snapshots.len()); specs.len()];
    let mut stats = RunStats { min_dt: f64::INFINITY, ..RunStats::default() };
    let mut floors = vec![0usize; specs.len()];
    let mut t = 0.0;

    for &target in &base.snapshots {
        while t < target {
            let slope = states.iter().map(|v| max_slope(v, h)).fold(0.0, f64::max);
            let mut dt = raw_dt(base, slope);
            let remaining = target - t;
            let landing = dt >= remaining * (1.0 - 1e-12);
            if landing {
                dt = remaining;
            }
            for (k, values) in states.iter_mut().enumerate() {
                floors[k] += advance(values, dt, base, slope, t)?;
            }
            t = if landing { target } else { t + dt };
            stats.steps += 1;
            stats.min_dt = stats.min_dt.min(dt);
            stats.max_dt = stats.max_dt.max(dt);
        }
        for (k, values) in states.iter().enumerate() {
            snapshots[k].push(Field::new(base.geometry, target, values.clone())?);
        }
    }

    Ok(specs
        .iter()
        .zip(initial)
        .zip(snapshots)
        .zip(floors)
        .map(|(((spec, initial), snapshots), floor_events)| Trajectory {
            spec: spec.clone(),
            initial,
            snapshots,
            stats: RunStats { floor_events, ..stats },
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    /// `max (u - v)` over all snapshots and nodes.
    pub max_violation: f64,
    /// `max v` over all snapshots.
    pub scale: f64,
    pub pass: bool,
}

/// Check the discrete comparison principle for ordered data `u0 <= v0`.
pub fn compare_runs(spec_u: &ProblemSpec, spec_v: &ProblemSpec) -> Result<ComparisonReport> {
    if !spec_u.compatible_with(spec_v) {
        return Err(Error::Incompatible("compared runs must share everything but the datum".into()));
    }
    let u0 = spec_u.initial.sample(&spec_u.geometry)?;
    let v0 = spec_v.initial.sample(&spec_v.geometry)?;
    if u0.values().iter().zip(v0.values()).any(|(a, b)| a > b) {
        return Err(Error::Precondition("initial data are not ordered (u0 <= v0)".into()));
    }
    let runs = run_ensemble_from(&[spec_u.clone(), spec_v.clone()], vec![u0, v0])?;
    Ok(ordering_report(&runs[0], &runs[1]))
}

/// `max (u - v)` over matching snapshots of two trajectories on the same grid.
pub fn ordering_report(u: &Trajectory, v: &Trajectory) -> ComparisonReport {
    let mut max_violation = f64::NEG_INFINITY;
    let mut scale: f64 = 0.0;
    for (fu, fv) in u.snapshots.iter().zip(&v.snapshots) {
        for (a, b) in fu.values().iter().zip(fv.values()) {
            max_violation = max_violation.max(a - b);
        }
        scale = scale.max(fv.max());
    }
    ComparisonReport {
        max_violation,
        scale,
        pass: max_violation <= 1e-10 * scale,
    }
}
