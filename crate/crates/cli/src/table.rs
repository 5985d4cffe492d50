//! CSV output.
//!
//! Every file starts with one comment line
//! `# ambc <version> seed=<seed> config_sha256=<hex>` followed by a header row.
//! Missing values are empty fields; undefined rates are `NaN`.

use std::path::{Path, PathBuf};

use ambc_core::montecarlo::{MetricRow, PointFailure, RocPoint};
use ambc_core::theory::PerformancePoint;
use ambc_core::tracy_widom::Tw2Table;

use crate::{CliError, CliResult};

pub const SWEEP_HEADER: [&str; 14] = [
    "axis",
    "axis_value",
    "detector",
    "ber",
    "ber_ci95",
    "pfa_emp",
    "pmd_emp",
    "trials",
    "seed",
    "ber_analytic",
    "pmd_analytic",
    "eta",
    "errors",
    "low_confidence",
];

pub const ROC_HEADER: [&str; 9] = [
    "axis",
    "axis_value",
    "pfa_target",
    "eta",
    "pmd_emp",
    "pmd_ci95",
    "misses",
    "trials",
    "pmd_analytic",
];

pub const THEORY_HEADER: [&str; 8] = ["gamma_db", "eta", "pfa", "pmd_avg", "ber", "ber_lower_bound", "axis", "axis_value"];

pub const SURFACE_HEADER: [&str; 4] = ["m", "n", "eta", "pfa"];

pub const FAILURE_HEADER: [&str; 3] = ["axis_value", "detector", "message"];

/// Identifies the run that produced a file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub seed: u64,
    pub config_sha256: String,
}

impl Provenance {
    pub fn comment(&self) -> String {
        format!(
            "# ambc {} seed={} config_sha256={}\n",
            env!("CARGO_PKG_VERSION"),
            self.seed,
            self.config_sha256
        )
    }
}

/// Shortest round-trip form; exponent notation outside `[1e-4, 1e6)`.
fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e6).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// One analytic row of `theory.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryRow {
    pub point: PerformancePoint,
    pub ber_lower_bound: f64,
    pub axis: String,
    pub axis_value: String,
}

/// Builds a CSV document in memory.
pub struct CsvDoc {
    writer: csv::Writer<Vec<u8>>,
}

impl CsvDoc {
    pub fn new(prov: &Provenance, header: &[&str]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(prov.comment().as_bytes());
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(buf);
        writer.write_record(header).expect("in-memory write");
        Self { writer }
    }

    pub fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).expect("in-memory write");
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.writer.into_inner().expect("in-memory flush")
    }
}

pub fn sweep_csv(prov: &Provenance, rows: &[MetricRow]) -> Vec<u8> {
    let mut doc = CsvDoc::new(prov, &SWEEP_HEADER);
    for r in rows {
        doc.row([
            r.axis.clone(),
            r.axis_value.clone(),
            r.detector.as_str().to_string(),
            num(r.ber),
            num(r.ber_ci95),
            num(r.pfa_emp),
            num(r.pmd_emp),
            r.trials.to_string(),
            r.seed.to_string(),
            opt(r.ber_analytic),
            opt(r.pmd_analytic),
            num(r.eta),
            r.errors.to_string(),
            r.low_confidence.to_string(),
        ]);
    }
    doc.into_bytes()
}

/// ROC points labelled by `(axis, axis_value)`.
pub fn roc_csv(prov: &Provenance, points: &[(String, String, RocPoint)]) -> Vec<u8> {
    let mut doc = CsvDoc::new(prov, &ROC_HEADER);
    for (axis, value, p) in points {
        doc.row([
            axis.clone(),
            value.clone(),
            num(p.pfa_target),
            num(p.eta),
            num(p.pmd_emp),
            num(p.pmd_ci95),
            p.misses.to_string(),
            p.trials.to_string(),
            opt(p.pmd_analytic),
        ]);
    }
    doc.into_bytes()
}

pub fn theory_csv(prov: &Provenance, rows: &[TheoryRow]) -> Vec<u8> {
    let mut doc = CsvDoc::new(prov, &THEORY_HEADER);
    for r in rows {
        doc.row([
            num(r.point.gamma_db),
            num(r.point.eta),
            num(r.point.pfa),
            num(r.point.pmd),
            num(r.point.ber),
            num(r.ber_lower_bound),
            r.axis.clone(),
            r.axis_value.clone(),
        ]);
    }
    doc.into_bytes()
}

/// `(m, n, eta, pfa)` rows.
pub fn surface_csv(prov: &Provenance, rows: &[(usize, usize, f64, f64)]) -> Vec<u8> {
    let mut doc = CsvDoc::new(prov, &SURFACE_HEADER);
    for &(m, n, eta, pfa) in rows {
        doc.row([m.to_string(), n.to_string(), num(eta), num(pfa)]);
    }
    doc.into_bytes()
}

pub fn failures_csv(prov: &Provenance, failures: &[PointFailure]) -> Vec<u8> {
    let mut doc = CsvDoc::new(prov, &FAILURE_HEADER);
    for f in failures {
        doc.row([
            f.axis_value.clone(),
            f.detector.map(|d| d.as_str().to_string()).unwrap_or_default(),
            f.message.clone(),
        ]);
    }
    doc.into_bytes()
}

pub fn tw2_csv(prov: &Provenance, table: &Tw2Table) -> Vec<u8> {
    let mut buf = prov.comment().into_bytes();
    table.write_csv(&mut buf).expect("in-memory write");
    buf
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> CliResult<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// A parsed CSV: header names and string records, comment lines skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(bytes: &[u8]) -> Result<Self, csv::Error> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
        let header = reader.headers()?.iter().map(str::to_string).collect();
        let rows = reader
            .records()
            .map(|r| r.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Values of a numeric column; empty or unparsable fields become `None`.
    pub fn numbers(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r.get(i).and_then(|s| s.parse().ok())).collect())
    }

    pub fn strings(&self, name: &str) -> Option<Vec<String>> {
        let i = self.column(name)?;
        Some(self.rows.iter().map(|r| r.get(i).cloned().unwrap_or_default()).collect())
    }
}
