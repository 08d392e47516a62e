//! CSV output (and the readers the tests and plotting scripts rely on).
//!
//! Every float is written with `{}`, i.e. the shortest representation that
//! round-trips, so identical runs give identical bytes on every platform.

use crate::error::{Error, Result};
use crate::estimates::{EstimateReport, StabilityRow, Verdict};
use crate::grid::{Field, Geometry, GridKind};
use crate::rates::RateReport;
use crate::selfsimilar::ProfileSolution;
use crate::solver::Trajectory;
use crate::supersolution::SupersolutionSpec;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const MANIFEST: &str = "manifest.csv";

/// Snapshot file with `# t=`, `# N=`, `# q=`, `# nu=` (and the domain size
/// `# L=`) comments and an `x,u` (Cartesian) or `r,u` (radial) table.
pub fn write_field(w: &mut impl Write, field: &Field, q: f64, nu: f64) -> Result<()> {
    let geo = field.geometry();
    writeln!(w, "# t={}", field.t())?;
    writeln!(w, "# N={}", geo.dim())?;
    writeln!(w, "# q={q}")?;
    writeln!(w, "# nu={nu}")?;
    writeln!(w, "# L={}", geo.length())?;
    let var = match geo.kind() {
        GridKind::Cartesian1d => "x",
        GridKind::Radial => "r",
    };
    writeln!(w, "{var},u")?;
    for (i, u) in field.values().iter().enumerate() {
        writeln!(w, "{},{u}", geo.coord(i))?;
    }
    Ok(())
}

/// Parsed CSV: `# key=value` comment lines, header and raw cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: BTreeMap<String, String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Io(format!("missing column `{name}`")))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.column(name)?;
        self.rows.iter().map(|row| parse_float(&row[k])).collect()
    }

    pub fn meta_float(&self, key: &str) -> Result<f64> {
        let v = self.meta.get(key).ok_or_else(|| Error::Io(format!("missing `# {key}=` line")))?;
        parse_float(v)
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Io(format!("not a number: `{s}`")))
}

pub fn read_table(r: impl BufRead) -> Result<Table> {
    let mut table = Table::default();
    for line in r.lines() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.split_once('=') {
                table.meta.insert(k.trim().to_string(), v.trim().to_string());
            }
            continue;
        }
        let cells: Vec<String> = line.split(',').map(str::to_string).collect();
        if table.header.is_empty() {
            table.header = cells;
        } else if cells.len() != table.header.len() {
            return Err(Error::Io(format!("row has {} cells, header has {}", cells.len(), table.header.len())));
        } else {
            table.rows.push(cells);
        }
    }
    if table.header.is_empty() {
        return Err(Error::Io("empty CSV".into()));
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub field: Field,
    pub dim: usize,
    pub q: f64,
    pub nu: f64,
}

/// Inverse of [`write_field`]; the grid is rebuilt from the node column.
pub fn read_field(r: impl BufRead) -> Result<FieldFile> {
    let table = read_table(r)?;
    let t = table.meta_float("t")?;
    let dim = table.meta_float("N")? as usize;
    let q = table.meta_float("q")?;
    let nu = table.meta_float("nu")?;
    let (kind, coords) = match table.header.first().map(String::as_str) {
        Some("x") => (GridKind::Cartesian1d, table.floats("x")?),
        Some("r") => (GridKind::Radial, table.floats("r")?),
        _ => return Err(Error::Io("snapshot header must start with `x` or `r`".into())),
    };
    let values = table.floats("u")?;
    let last = *coords.last().ok_or_else(|| Error::Io("snapshot has no rows".into()))?;
    let length = match table.meta.contains_key("L") {
        true => table.meta_float("L")?,
        false => last,
    };
    let geometry = Geometry::new(kind, dim, length, coords.len() - 1)?;
    Ok(FieldFile { field: Field::new(geometry, t, values)?, dim, q, nu })
}

pub fn write_run_meta(w: &mut impl Write, traj: &Trajectory) -> Result<()> {
    let s = &traj.stats;
    writeln!(w, "steps,min_dt,max_dt,floor_events,final_mass")?;
    writeln!(w, "{},{},{},{},{}", s.steps, s.min_dt, s.max_dt, s.floor_events, traj.final_mass())?;
    Ok(())
}

pub fn write_estimate_rows(w: &mut impl Write, reports: &[EstimateReport]) -> Result<()> {
    writeln!(w, "estimate_id,t,ball,measured,bound_functional,ratio")?;
    for report in reports {
        for row in &report.rows {
            writeln!(w, "{},{},{},{},{},{}", report.id, row.t, row.ball, row.measured, row.bound, row.ratio)?;
        }
    }
    Ok(())
}

/// One line of the summary CSV; the refinement columns are empty for
/// constant-free checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub id: String,
    pub c_emp: f64,
    pub c_refined: Option<f64>,
    pub drift: Option<f64>,
    pub verdict: Verdict,
}

impl From<&StabilityRow> for SummaryRow {
    fn from(row: &StabilityRow) -> Self {
        Self {
            id: row.id.clone(),
            c_emp: row.c_base,
            c_refined: Some(row.c_refined),
            drift: Some(row.drift),
            verdict: row.verdict,
        }
    }
}

impl From<&EstimateReport> for SummaryRow {
    fn from(report: &EstimateReport) -> Self {
        Self { id: report.id.clone(), c_emp: report.c_emp, c_refined: None, drift: None, verdict: report.verdict }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_summary(w: &mut impl Write, rows: &[SummaryRow]) -> Result<()> {
    writeln!(w, "estimate_id,C_emp,C_emp_refined,drift,verdict")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{}", r.id, r.c_emp, opt(r.c_refined), opt(r.drift), r.verdict.as_str())?;
    }
    Ok(())
}

pub fn write_profile(w: &mut impl Write, profile: &ProfileSolution) -> Result<()> {
    writeln!(w, "# q={}", profile.q)?;
    writeln!(w, "# N={}", profile.dim)?;
    writeln!(w, "# a={}", profile.a)?;
    writeln!(w, "# f0={}", profile.f0)?;
    writeln!(w, "# c_inf={}", opt(profile.c_inf))?;
    writeln!(w, "# class={}", profile.class.as_str())?;
    writeln!(w, "eta,f,fp")?;
    for ((eta, f), fp) in profile.eta.iter().zip(&profile.f).zip(&profile.fp) {
        writeln!(w, "{eta},{f},{fp}")?;
    }
    Ok(())
}

/// `r,phi1,Phi,residual` on the construction grid, headed by the summary.
pub fn write_supersolution(w: &mut impl Write, spec: &SupersolutionSpec) -> Result<()> {
    writeln!(w, "# N={}", spec.dim)?;
    writeln!(w, "# q={}", spec.q)?;
    writeln!(w, "# nu={}", spec.nu)?;
    writeln!(w, "# lambda1={}", spec.lambda1)?;
    writeln!(w, "# K={}", spec.k)?;
    writeln!(w, "# m_K={}", spec.m_k)?;
    writeln!(w, "# h={}", spec.h)?;
    writeln!(w, "# tol_res={}", spec.residual_tolerance())?;
    writeln!(w, "r,phi1,Phi,residual")?;
    for i in 0..spec.geometry.node_count() {
        writeln!(
            w,
            "{},{},{},{}",
            spec.geometry.coord(i),
            spec.phi1[i],
            spec.phi[i],
            spec.static_residual[i]
        )?;
    }
    Ok(())
}

pub fn write_rates(w: &mut impl Write, reports: &[RateReport]) -> Result<()> {
    writeln!(w, "experiment,q,N,R,delta,slope_measured,slope_bound_first,slope_bound_second,determination,verdict")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.q,
            r.dim,
            r.r_exp,
            r.delta,
            r.fit.slope,
            r.slope_bound_first,
            r.slope_bound_second,
            r.fit.determination,
            if r.pass { "pass" } else { "fail" }
        )?;
    }
    Ok(())
}

/// The fitted `(t, sup u)` samples, with the exponents needed for guide lines.
pub fn write_rate_samples(w: &mut impl Write, report: &RateReport) -> Result<()> {
    writeln!(w, "# q={}", report.q)?;
    writeln!(w, "# N={}", report.dim)?;
    writeln!(w, "# R={}", report.r_exp)?;
    writeln!(w, "# delta={}", report.delta)?;
    writeln!(w, "t,sup_u")?;
    for (t, m) in &report.fit.samples {
        writeln!(w, "{t},{m}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub file: String,
    pub digest: String,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that records every file it writes for the manifest.
pub struct OutputDir {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
    clock: Instant,
}

impl OutputDir {
    pub fn create(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        Ok(Self { root, entries: Vec::new(), clock: Instant::now() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Render a file into memory, write it, and record its digest together
    /// with the time spent since the previous file.
    pub fn write(&mut self, name: &str, render: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<PathBuf> {
        if name == MANIFEST {
            return Err(Error::Io(format!("`{MANIFEST}` is reserved")));
        }
        let mut bytes = Vec::new();
        render(&mut bytes)?;
        let path = self.root.join(name);
        fs::write(&path, &bytes)?;
        self.entries.push(ManifestEntry {
            file: name.to_string(),
            digest: sha256_hex(&bytes),
            wall_time_s: self.clock.elapsed().as_secs_f64(),
        });
        self.clock = Instant::now();
        Ok(path)
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Write `manifest.csv` and return the entries.
    pub fn finish(self) -> Result<Vec<ManifestEntry>> {
        let mut out = Vec::new();
        writeln!(out, "file,digest,wall_time_s")?;
        for e in &self.entries {
            writeln!(out, "{},{},{}", e.file, e.digest, e.wall_time_s)?;
        }
        fs::write(self.root.join(MANIFEST), out)?;
        Ok(self.entries)
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let table = read_table(std::io::BufReader::new(fs::File::open(path)?))?;
    let (f, d, w) = (table.column("file")?, table.column("digest")?, table.column("wall_time_s")?);
    table
        .rows
        .iter()
        .map(|row| Ok(ManifestEntry { file: row[f].clone(), digest: row[d].clone(), wall_time_s: parse_float(&row[w])? }))
        .collect()
}

/// `(file, digest)` pairs: what determinism is judged on (wall times vary).
pub fn manifest_digests(entries: &[ManifestEntry]) -> Vec<(String, String)> {
    entries.iter().map(|e| (e.file.clone(), e.digest.clone())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::EstimateRow;
    use crate::initial_data::InitialDatum;
    use crate::selfsimilar::solve_nonuniq;
    use crate::solver::{run, Boundary, ProblemSpec};
    use proptest::prelude::*;

    fn render(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> String {
        let mut buf = Vec::new();
        f(&mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn field_round_trip() {
        for geo in [Geometry::cartesian(2.0, 16).unwrap(), Geometry::radial(3, 1.7, 24).unwrap()] {
            let field = Field::from_fn(geo, 0.25, |r| (-r * r).exp() / 3.0).unwrap();
            let text = render(|w| write_field(w, &field, 1.5, 0.5));
            assert!(text.starts_with("# t=0.25\n# N="));
            let back = read_field(text.as_bytes()).unwrap();
            assert_eq!(back.field, field);
            assert_eq!((back.dim, back.q, back.nu), (geo.dim(), 1.5, 0.5));
        }
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn reports_have_the_documented_columns() {
        let report = EstimateReport {
            id: "local_mass".into(),
            rows: vec![EstimateRow { t: 0.1, ball: "B(0;1)".into(), measured: 0.5, bound: 2.0, ratio: 0.25 }],
            c_emp: 0.25,
            rate_slope: None,
            verdict: Verdict::Pending,
            notes: vec![],
        };
        let text = render(|w| write_estimate_rows(w, std::slice::from_ref(&report)));
        assert_eq!(text, "estimate_id,t,ball,measured,bound_functional,ratio\nlocal_mass,0.1,B(0;1),0.5,2,0.25\n");
        let text = render(|w| write_summary(w, &[SummaryRow::from(&report)]));
        assert_eq!(text, "estimate_id,C_emp,C_emp_refined,drift,verdict\nlocal_mass,0.25,,,pending\n");
    }

    #[test]
    fn run_meta_and_profile() {
        let geo = Geometry::radial(2, 1.0, 16).unwrap();
        let spec = ProblemSpec::new(2.0, 1.0, geo, Boundary::DirichletZero, InitialDatum::bump(1.0, 0.5), 0.01);
        let traj = run(&spec).unwrap();
        let table = read_table(render(|w| write_run_meta(w, &traj)).as_bytes()).unwrap();
        assert_eq!(table.header, ["steps", "min_dt", "max_dt", "floor_events", "final_mass"]);
        assert_eq!(table.floats("steps").unwrap()[0] as usize, traj.stats.steps);

        let profile = solve_nonuniq(3.0, 2, 2f64.sqrt(), 1e-6).unwrap();
        let table = read_table(render(|w| write_profile(w, &profile)).as_bytes()).unwrap();
        assert_eq!(table.header, ["eta", "f", "fp"]);
        assert_eq!(table.meta["class"], profile.class.as_str());
        assert_eq!(table.meta_float("f0").unwrap(), profile.f0);
        assert_eq!(table.floats("f").unwrap(), profile.f);
    }

    #[test]
    fn output_dir_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path().join("run")).unwrap();
        out.write("a.csv", |w| Ok(writeln!(w, "x\n1")?)).unwrap();
        assert!(out.write(MANIFEST, |_| Ok(())).is_err());
        let entries = out.finish().unwrap();
        let back = read_manifest(dir.path().join("run").join(MANIFEST)).unwrap();
        assert_eq!(manifest_digests(&back), manifest_digests(&entries));
        assert_eq!(back[0].digest, sha256_hex(b"x\n1\n"));
    }

    #[test]
    fn malformed_tables() {
        assert!(read_table("".as_bytes()).is_err());
        assert!(read_table("a,b\n1\n".as_bytes()).is_err());
        assert!(read_field("# t=1\nx,u\n0,1\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn floats_round_trip(values in proptest::collection::vec(0.0..1e6f64, 17..60), t in 1e-6..10.0f64) {
            let geo = Geometry::cartesian(1.3, values.len() - 1).unwrap();
            let field = Field::new(geo, t, values).unwrap();
            let back = read_field(render(|w| write_field(w, &field, 2.0, 1.0)).as_bytes()).unwrap();
            prop_assert_eq!(back.field.values(), field.values());
            prop_assert_eq!(back.field.t(), t);
        }
    }
}
