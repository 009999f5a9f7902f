use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::stats::Estimate;
use super::ExperimentKind;
use crate::config::RunConfig;
use crate::error::Result;
use crate::grid::SpectralField;
use crate::snapshot::write_snapshot;
use crate::solver::TrajectoryRecord;

pub const REPORT_HEADER: &str = "kind,name,parameter,value,std_error,samples,status,note";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowKind {
    Cell,
    Fit,
    Check,
}

impl RowKind {
    fn as_str(self) -> &'static str {
        match self {
            RowKind::Cell => "cell",
            RowKind::Fit => "fit",
            RowKind::Check => "check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Info,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Info => "",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub kind: RowKind,
    pub name: String,
    pub parameter: Option<f64>,
    pub value: f64,
    pub std_error: Option<f64>,
    pub samples: usize,
    pub status: Status,
    pub note: String,
}

impl ReportRow {
    pub fn cell(name: impl Into<String>, parameter: f64, estimate: Estimate) -> Self {
        ReportRow {
            kind: RowKind::Cell,
            name: name.into(),
            parameter: Some(parameter),
            value: estimate.mean,
            std_error: Some(estimate.std_error),
            samples: estimate.samples,
            status: Status::Info,
            note: String::new(),
        }
    }

    pub fn value(kind: RowKind, name: impl Into<String>, value: f64) -> Self {
        ReportRow {
            kind,
            name: name.into(),
            parameter: None,
            value,
            std_error: None,
            samples: 1,
            status: Status::Info,
            note: String::new(),
        }
    }

    pub fn check(name: impl Into<String>, passed: bool, measured: f64, note: impl Into<String>) -> Self {
        ReportRow {
            kind: RowKind::Check,
            name: name.into(),
            parameter: None,
            value: measured,
            std_error: None,
            samples: 1,
            status: Status::from_bool(passed),
            note: note.into(),
        }
    }

    pub fn with_parameter(mut self, parameter: f64) -> Self {
        self.parameter = Some(parameter);
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.kind.as_str(),
            sanitize(&self.name),
            opt(self.parameter),
            fmt_f64(self.value),
            opt(self.std_error),
            self.samples,
            self.status.as_str(),
            sanitize(&self.note)
        )
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn sanitize(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

/// Everything needed to regenerate a report.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub paths: usize,
    pub version: String,
}

impl Provenance {
    pub fn new(kind: ExperimentKind, config: &RunConfig, paths: usize) -> Self {
        Provenance {
            kind,
            config_hash: config.hash(),
            seed: config.noise.seed,
            paths,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// Diagnostics of one path, written as `paths/<name>.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathRecord {
    pub name: String,
    pub record: TrajectoryRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub provenance: Provenance,
    pub rows: Vec<ReportRow>,
    pub paths: Vec<PathRecord>,
}

impl ExperimentReport {
    pub fn new(provenance: Provenance) -> Self {
        ExperimentReport {
            provenance,
            rows: Vec::new(),
            paths: Vec::new(),
        }
    }

    pub fn push(&mut self, row: ReportRow) {
        self.rows.push(row);
    }

    pub fn checks(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(|r| r.kind == RowKind::Check)
    }

    pub fn find(&self, name: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    /// No check failed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }

    /// Provenance block followed by the full configuration echo.
    pub fn manifest(&self, config: &RunConfig) -> String {
        let p = &self.provenance;
        let mut out = String::new();
        writeln!(out, "# experiment = {}", p.kind.name()).unwrap();
        writeln!(out, "# version = {}", p.version).unwrap();
        writeln!(out, "# config_sha256 = {}", p.config_hash).unwrap();
        writeln!(out, "# seed = {}", p.seed).unwrap();
        writeln!(out, "# streams = 0..{}", p.paths).unwrap();
        writeln!(out, "# passed = {}", self.passed()).unwrap();
        out.push('\n');
        out.push_str(&config.to_toml());
        out
    }

    /// Writes `report.csv`, `manifest` and, if requested, `paths/*.csv` and
    /// `snapshots/<path>_<sample>.snap` for every kept field.
    pub fn write(&self, dir: &Path, config: &RunConfig) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.csv"), self.to_csv())?;
        fs::write(dir.join("manifest"), self.manifest(config))?;
        if config.output.path_csv && !self.paths.is_empty() {
            let paths = dir.join("paths");
            fs::create_dir_all(&paths)?;
            for p in &self.paths {
                let mut out = BufWriter::new(fs::File::create(paths.join(format!("{}.csv", p.name)))?);
                p.record.write_csv(&mut out)?;
                out.flush()?;
            }
        }
        if config.output.snapshots && self.paths.iter().any(|p| !p.record.fields.is_empty()) {
            let grid = config.grid()?;
            let snapshots = dir.join("snapshots");
            fs::create_dir_all(&snapshots)?;
            for p in &self.paths {
                for (i, (values, &t)) in p.record.fields.iter().zip(&p.record.times).enumerate() {
                    let field = SpectralField::from_values(&grid, values.clone())?;
                    let file = snapshots.join(format!("{}_{i:05}.snap", p.name));
                    let mut out = BufWriter::new(fs::File::create(file)?);
                    write_snapshot(&mut out, &field, "phi", t)?;
                    out.flush()?;
                }
            }
        }
        Ok(())
    }
}
