//! Line-based `section.key = value` configuration with `#` comments.
//!
//! Every key has a default; subcommands overlay their own defaults, then the
//! config file and finally command-line flags are applied. Unknown keys and
//! unparsable values are rejected when they are set, so a built `Config` is
//! always well-formed.

use crate::error::{Error, Result};
use crate::grid::{Geometry, GridKind};
use crate::initial_data::InitialDatum;
use crate::solver::{Boundary, Flux, ProblemSpec};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Float,
    /// A float or `none`.
    OptFloat,
    Count,
    Floats,
    Choice(&'static [&'static str]),
}

struct Key {
    name: &'static str,
    default: &'static str,
    kind: Kind,
    doc: &'static str,
}

const fn key(name: &'static str, default: &'static str, kind: Kind, doc: &'static str) -> Key {
    Key { name, default, kind, doc }
}

const DATA_KINDS: &[&str] = &["constant", "bump", "power_singular", "power_growth", "dirac"];
pub const ESTIMATES: &[&str] =
    &["all", "universal_gradient", "growth_bound", "local_mass", "first_smoothing", "second_smoothing", "local_sup"];

const KEYS: &[Key] = &[
    key("problem.q", "1.5", Kind::Float, "gradient exponent q > 1"),
    key("problem.nu", "1", Kind::Float, "viscosity in (0, 1]"),
    key("problem.t_end", "0.5", Kind::Float, "final time"),
    key("problem.snapshots", "0.02,0.1,0.5", Kind::Floats, "snapshot times (ignored when snapshot_every > 0)"),
    key("problem.snapshot_every", "0", Kind::Float, "uniform snapshot spacing; 0 uses problem.snapshots"),
    key("problem.cfl", "0.4", Kind::Float, "CFL safety factor in (0, 1)"),
    key("problem.boundary", "truncated_free", Kind::Choice(&["truncated_free", "dirichlet_zero"]), "outer boundary rule"),
    key("problem.flux", "adaptive", Kind::Choice(&["adaptive", "godunov"]), "numerical Hamiltonian"),
    key("grid.kind", "cartesian", Kind::Choice(&["cartesian", "radial"]), "1-d interval or radial reduction"),
    key("grid.dim", "1", Kind::Count, "space dimension N"),
    key("grid.length", "4", Kind::Float, "half-width (cartesian) or radius (radial)"),
    key("grid.cells", "400", Kind::Count, "number of cells"),
    key("init.kind", "bump", Kind::Choice(DATA_KINDS), "initial datum family"),
    key("init.c", "1", Kind::Float, "amplitude / constant / coefficient"),
    key("init.width", "0.5", Kind::Float, "bump width"),
    key("init.gamma", "0.5", Kind::Float, "singularity exponent of c|x|^-gamma"),
    key("init.beta", "0.5", Kind::Float, "growth exponent of c|x|^beta"),
    key("init.kappa", "1", Kind::Float, "Dirac mass"),
    key("init.eps", "none", Kind::OptFloat, "Dirac mollification width (none: four cells)"),
    key("init.cap", "none", Kind::OptFloat, "truncation height"),
    key("init.lift", "0", Kind::Float, "constant added after truncation"),
    key("check.estimate", "all", Kind::Choice(ESTIMATES), "estimate(s) to check"),
    key("check.stability", "true", Kind::Choice(&["true", "false"]), "rerun refined and doubled for C_emp drift"),
    key("check.x0", "0", Kind::Float, "ball center for growth, smoothing and local sup checks"),
    key("check.eta", "0.5", Kind::Float, "ball radius for the growth check"),
    key("check.mass_x0", "1", Kind::Float, "ball center for the local mass check"),
    key("check.mass_eta", "0.25", Kind::Float, "ball radius for the local mass check"),
    key("check.smoothing_eta", "1", Kind::Float, "ball radius for the smoothing checks"),
    key("check.R", "1", Kind::Float, "integrability exponent R"),
    key("check.epsilon", "0.1", Kind::Float, "epsilon of the second smoothing bound"),
    key("check.rho", "1", Kind::Float, "ball radius for the local sup check"),
    key("check.theta", "0.05", Kind::Float, "time window for the local sup check"),
    key("check.t", "0.3", Kind::Float, "probe time for the local sup check"),
    key("profile.c_target", "1.4142135623730951", Kind::Float, "target tail constant (nonuniqueness profile)"),
    key("profile.eta_max", "none", Kind::OptFloat, "integration end (none: 24 for vss, 100 otherwise)"),
    key("profile.tol", "1e-8", Kind::Float, "relative tolerance of the f(0) bisection"),
    key("profile.band", "0.05", Kind::Float, "relative band around -a for algebraic tails"),
    key("profile.span", "3.1622776601683795", Kind::Float, "ratio of eta over which the band must hold"),
    key("profile.decay_floor", "1e-12", Kind::Float, "relative level counted as decayed"),
    key("profile.t", "1", Kind::Float, "time for residual and nonuniqueness checks"),
    key("profile.residual_cells", "300,600,1200", Kind::Floats, "radial grids for the residual order"),
    key("profile.residual_length", "6", Kind::Float, "radius of the residual grids"),
    key("profile.r_lo", "0.2", Kind::Float, "residual window start"),
    key("profile.r_hi", "5", Kind::Float, "residual window end"),
    key("stationary.r", "0.5,1,2,4", Kind::Floats, "radii at which the residual is evaluated"),
    key("stationary.c", "none", Kind::OptFloat, "coefficient (none: the critical constant)"),
    key("rates.delta", "0.2", Kind::Float, "R = N / (a (1 + delta))"),
    key("rates.t_min", "1e-3", Kind::Float, "fit window start"),
    key("rates.t_max", "1e-2", Kind::Float, "fit window end"),
    key("rates.samples", "13", Kind::Count, "log-spaced samples in the fit window"),
    key("approx.levels", "2,4,8,16", Kind::Floats, "truncation levels"),
    key("vss.kappas", "1,2,4,8", Kind::Floats, "Dirac masses"),
    key("vss.t_probe", "0.25", Kind::Float, "probe time"),
    key("super.sigma", "none", Kind::OptFloat, "exponent sigma (none: default branch)"),
    key("super.gamma", "none", Kind::OptFloat, "coefficient gamma (none: default branch)"),
    key("super.spacing", "0.01", Kind::Float, "construction grid spacing"),
    key("super.times", "0.01,0.1,0.5,1,2,5", Kind::Floats, "times at which the residual is certified"),
    key("oracle.levels", "3", Kind::Count, "number of grids (finest = grid.cells, halved each level)"),
];

/// Per-subcommand defaults layered on top of [`KEYS`].
fn overlay(subcommand: &str) -> &'static [(&'static str, &'static str)] {
    match subcommand {
        "check" => &[("problem.snapshot_every", "0.01")],
        "profile-vss" => &[("problem.q", "1.2"), ("profile.tol", "1e-10")],
        "profile-nonuniq" | "stationary" => &[
            ("problem.q", "3"),
            ("grid.kind", "radial"),
            ("grid.dim", "2"),
            ("grid.length", "8"),
        ],
        "supersolution" => &[],
        "rates" => &[
            ("problem.q", "1.5"),
            ("grid.kind", "radial"),
            ("grid.dim", "3"),
            ("grid.cells", "1000"),
            ("problem.t_end", "0.1"),
            ("problem.snapshots", "0.1"),
            ("problem.boundary", "dirichlet_zero"),
        ],
        "oracle-q2" => &[
            ("problem.q", "2"),
            ("problem.t_end", "0.1"),
            ("problem.snapshots", "0.1"),
            ("problem.boundary", "dirichlet_zero"),
            ("grid.length", "6"),
            ("grid.cells", "512"),
            ("init.width", "1"),
        ],
        "approx-mono" => &[
            ("problem.q", "3"),
            ("problem.t_end", "1"),
            ("problem.snapshots", "0.1,0.25,0.5,1"),
            ("grid.kind", "radial"),
            ("grid.dim", "2"),
            ("grid.length", "8"),
            ("init.kind", "power_growth"),
            ("init.c", "1.4142135623730951"),
            ("init.beta", "0.5"),
        ],
        "vss-limit" => &[
            ("problem.q", "1.2"),
            ("problem.t_end", "0.25"),
            ("problem.snapshots", "0.25"),
            ("init.kind", "dirac"),
            ("init.eps", "0.1"),
        ],
        _ => &[],
    }
}

pub const SUBCOMMANDS: &[&str] = &[
    "solve",
    "check",
    "profile-vss",
    "profile-nonuniq",
    "stationary",
    "supersolution",
    "rates",
    "oracle-q2",
    "approx-mono",
    "vss-limit",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: BTreeMap<&'static str, String>,
}

fn lookup(name: &str) -> Result<&'static Key> {
    KEYS.iter()
        .find(|k| k.name == name)
        .ok_or_else(|| Error::Config(format!("unknown key `{name}`")))
}

fn parse_f64(name: &str, s: &str) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Config(format!("`{name}`: not a number: `{s}`")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("`{name}`: value must be finite, got `{s}`")));
    }
    Ok(v)
}

fn check_value(k: &Key, value: &str) -> Result<()> {
    match k.kind {
        Kind::Float => parse_f64(k.name, value).map(drop),
        Kind::OptFloat if value == "none" => Ok(()),
        Kind::OptFloat => parse_f64(k.name, value).map(drop),
        Kind::Count => value
            .parse::<usize>()
            .map(drop)
            .map_err(|_| Error::Config(format!("`{}`: not a nonnegative integer: `{value}`", k.name))),
        Kind::Floats => value.split(',').try_for_each(|v| parse_f64(k.name, v).map(drop)),
        Kind::Choice(options) if options.contains(&value) => Ok(()),
        Kind::Choice(options) => {
            Err(Error::Config(format!("`{}`: `{value}` is not one of {}", k.name, options.join(", "))))
        }
    }
}

impl Default for Config {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|k| (k.name, k.default.to_string())).collect() }
    }
}

impl Config {
    /// Defaults for `subcommand`.
    pub fn for_subcommand(subcommand: &str) -> Result<Self> {
        if !SUBCOMMANDS.contains(&subcommand) {
            return Err(Error::Config(format!("unknown subcommand `{subcommand}`")));
        }
        let mut cfg = Self::default();
        for (k, v) in overlay(subcommand) {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, name: &str, value: &str) -> Result<()> {
        let k = lookup(name)?;
        let value = value.trim();
        check_value(k, value)?;
        self.values.insert(k.name, value.to_string());
        Ok(())
    }

    /// Apply the settings of a config file; later lines win.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `section.key = value`", n + 1)))?;
            self.set(name.trim(), value).map_err(|e| match e {
                Error::Config(msg) => Error::Config(format!("line {}: {msg}", n + 1)),
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn raw(&self, name: &str) -> Result<&str> {
        lookup(name)?;
        Ok(&self.values[name])
    }

    pub fn f64(&self, name: &str) -> Result<f64> {
        parse_f64(name, self.raw(name)?)
    }

    pub fn opt_f64(&self, name: &str) -> Result<Option<f64>> {
        match self.raw(name)? {
            "none" => Ok(None),
            v => parse_f64(name, v).map(Some),
        }
    }

    pub fn count(&self, name: &str) -> Result<usize> {
        self.raw(name)?
            .parse()
            .map_err(|_| Error::Config(format!("`{name}`: not a nonnegative integer")))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        self.raw(name)?.split(',').map(|v| parse_f64(name, v)).collect()
    }

    pub fn flag(&self, name: &str) -> Result<bool> {
        Ok(self.raw(name)? == "true")
    }

    /// Every key with its value and documentation, in file format.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for k in KEYS {
            let this = k.name.split('.').next().unwrap_or("");
            if this != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = this;
            }
            let _ = writeln!(out, "# {}", k.doc);
            let _ = writeln!(out, "{} = {}", k.name, self.values[k.name]);
        }
        out
    }

    pub fn geometry(&self) -> Result<Geometry> {
        let kind = match self.raw("grid.kind")? {
            "radial" => GridKind::Radial,
            _ => GridKind::Cartesian1d,
        };
        Geometry::new(kind, self.count("grid.dim")?, self.f64("grid.length")?, self.count("grid.cells")?)
    }

    pub fn datum(&self) -> Result<InitialDatum> {
        let c = self.f64("init.c")?;
        let mut d = match self.raw("init.kind")? {
            "constant" => InitialDatum::constant(c),
            "bump" => InitialDatum::bump(c, self.f64("init.width")?),
            "power_singular" => InitialDatum::power_singular(c, self.f64("init.gamma")?),
            "power_growth" => InitialDatum::power_growth(c, self.f64("init.beta")?),
            _ => InitialDatum::dirac(self.f64("init.kappa")?, self.opt_f64("init.eps")?),
        };
        if let Some(cap) = self.opt_f64("init.cap")? {
            d = d.with_cap(cap);
        }
        d = d.with_lift(self.f64("init.lift")?);
        d.validate()?;
        Ok(d)
    }

    pub fn snapshots(&self) -> Result<Vec<f64>> {
        let t_end = self.f64("problem.t_end")?;
        let every = self.f64("problem.snapshot_every")?;
        if every < 0.0 {
            return Err(Error::Config("`problem.snapshot_every` must be >= 0".into()));
        }
        if every == 0.0 {
            return self.floats("problem.snapshots");
        }
        let n = (t_end / every).round().max(1.0) as usize;
        Ok((1..=n).map(|k| if k == n { t_end } else { k as f64 * every }).collect())
    }

    /// The solver problem described by the `problem`, `grid` and `init` keys.
    pub fn problem(&self) -> Result<ProblemSpec> {
        let boundary = match self.raw("problem.boundary")? {
            "dirichlet_zero" => Boundary::DirichletZero,
            _ => Boundary::TruncatedFree,
        };
        let flux = match self.raw("problem.flux")? {
            "godunov" => Flux::Godunov,
            _ => Flux::Adaptive,
        };
        let mut spec = ProblemSpec::new(
            self.f64("problem.q")?,
            self.f64("problem.nu")?,
            self.geometry()?,
            boundary,
            self.datum()?,
            self.f64("problem.t_end")?,
        )
        .with_snapshots(self.snapshots()?)
        .with_flux(flux);
        spec.cfl = self.f64("problem.cfl")?;
        spec.validate()?;
        Ok(spec)
    }
}
