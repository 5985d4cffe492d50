//! Subcommand bodies. Each returns the files it wrote or the report it printed.

use std::fmt;
use std::path::{Path, PathBuf};

use ambc_core::covariance::{eigen_spectrum, sample_covariance, sample_covariance_of};
use ambc_core::detectors::{se_outcome, threshold_for_pfa, Branch, NoiseEstimator};
use ambc_core::model::{generate_channels, synthesize_frame};
use ambc_core::montecarlo::{roc_curve, sweep, trial_rng, DetectorKind, PointFailure, StreamDomain};
use ambc_core::theory::{ber_lower_bound, pfa_analytic, performance_point};
use ambc_core::tracy_widom::Tw2Table;
use rand::Rng;

use crate::config::ResolvedConfig;
use crate::frame_io::read_frame;
use crate::plot::{roc_chart, surface_chart, sweep_charts, theory_chart, Chart};
use crate::table::{
    failures_csv, roc_csv, surface_csv, sweep_csv, theory_csv, tw2_csv, write_file, Provenance, Table, TheoryRow,
};
use crate::{CliError, CliResult};

/// Thresholds drawn on the analytic false-alarm surface.
pub const SURFACE_ETAS: [f64; 2] = [1.5524, 1.962];

fn provenance(cfg: &ResolvedConfig) -> Provenance {
    Provenance {
        seed: cfg.seed(),
        config_sha256: cfg.hash(),
    }
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_chart(dir: &Path, name: &str, chart: &Chart) -> CliResult<PathBuf> {
    write_file(dir, name, chart.render().as_bytes())
}

fn parse_table(bytes: &[u8]) -> Table {
    Table::parse(bytes).expect("tables written by this crate parse")
}

/// Where the threshold of `detect` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdChoice {
    Eta(f64),
    Pfa(f64),
}

impl ThresholdChoice {
    pub fn from_flags(eta: Option<f64>, pfa: Option<f64>) -> CliResult<Self> {
        match (eta, pfa) {
            (Some(e), None) => Ok(Self::Eta(e)),
            (None, Some(p)) => Ok(Self::Pfa(p)),
            (Some(_), Some(_)) => Err(CliError::Usage("give exactly one of --eta and --pfa, not both".into())),
            (None, None) => Err(CliError::Usage("give exactly one of --eta and --pfa".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectReport {
    pub antennas: usize,
    pub frame_len: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub branch: Branch,
    pub decision: bool,
    /// Bit that generated a synthesized frame; unknown for a frame file.
    pub truth: Option<bool>,
}

impl fmt::Display for DetectReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "M={} 2N={} statistic={} threshold={} branch={:?} decision={}",
            self.antennas,
            self.frame_len,
            self.statistic,
            self.threshold,
            self.branch,
            u8::from(self.decision)
        )?;
        if let Some(t) = self.truth {
            write!(f, " truth={}", u8::from(t))?;
        }
        Ok(())
    }
}

/// SE decision on one frame: trial 0 of the evaluation stream, or a frame file.
pub fn detect(cfg: &ResolvedConfig, choice: ThresholdChoice, frame: Option<&Path>) -> CliResult<DetectReport> {
    let system = &cfg.system;
    let (spectrum, antennas, frame_len, truth) = match frame {
        Some(path) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let (y, n) = read_frame(std::io::BufReader::new(file)).map_err(|e| CliError::io(path, e))??;
            let m = y.nrows();
            if system.m_index > m {
                return Err(ambc_core::Error::Config(format!(
                    "m_index {} exceeds the {m} antennas of the frame",
                    system.m_index
                ))
                .into());
            }
            (eigen_spectrum(&sample_covariance_of(&y))?, m, 2 * n, None)
        }
        None => {
            let mut rng = trial_rng(system.seed, StreamDomain::Evaluation, 0);
            let bit = rng.random::<f64>() < system.prior_c1;
            let channels = generate_channels(system, &mut rng)?;
            let f = synthesize_frame(system, &channels, bit, &mut rng)?;
            (eigen_spectrum(&sample_covariance(&f))?, system.antennas, system.frame_len(), Some(bit))
        }
    };
    let eta = match choice {
        ThresholdChoice::Eta(e) => {
            if !e.is_finite() {
                return Err(CliError::Usage(format!("--eta must be finite, got {e}")));
            }
            e
        }
        ThresholdChoice::Pfa(p) => threshold_for_pfa(p, antennas, frame_len)?,
    };
    let out = se_outcome(&spectrum, eta, system.m_index, NoiseEstimator::Adaptive)?;
    Ok(DetectReport {
        antennas,
        frame_len,
        statistic: out.statistic,
        threshold: out.threshold,
        branch: out.branch,
        decision: out.decided_bit,
        truth,
    })
}

fn write_failures(dir: &Path, prov: &Provenance, failures: &[PointFailure], written: &mut Vec<PathBuf>) -> CliResult<()> {
    if !failures.is_empty() {
        written.push(write_file(dir, "failures.csv", &failures_csv(prov, failures))?);
    }
    Ok(())
}

/// Runs the configured sweep. Writes `sweep_<detector>.csv` per detector,
/// `failures.csv` when points failed, and the BER / missed-detection charts.
pub fn run_sweep(cfg: &ResolvedConfig, out: &Path, workers: Option<usize>) -> CliResult<Vec<PathBuf>> {
    ensure_dir(out)?;
    let prov = provenance(cfg);
    let result = sweep(&cfg.sweep, workers)?;
    let mut written = Vec::new();
    let mut combined: Option<Table> = None;
    for &d in &cfg.sweep.detectors {
        let rows: Vec<_> = result.rows.iter().filter(|r| r.detector == d).cloned().collect();
        let bytes = sweep_csv(&prov, &rows);
        written.push(write_file(out, &sweep_file_name(d), &bytes)?);
        let t = parse_table(&bytes);
        match combined.as_mut() {
            Some(c) => c.rows.extend(t.rows),
            None => combined = Some(t),
        }
    }
    write_failures(out, &prov, &result.failures, &mut written)?;
    if let Some(t) = combined {
        for (name, chart) in sweep_charts(&t) {
            written.push(write_chart(out, &name, &chart)?);
        }
    }
    Ok(written)
}

pub fn sweep_file_name(d: DetectorKind) -> String {
    format!("sweep_{}.csv", d.as_str().to_ascii_lowercase())
}

/// SE complementary ROC over `pfa_grid` at every axis value.
pub fn run_roc(cfg: &ResolvedConfig, out: &Path, workers: Option<usize>) -> CliResult<Vec<PathBuf>> {
    ensure_dir(out)?;
    let prov = provenance(cfg);
    let spec = &cfg.sweep;
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for value in &spec.values {
        let label = value.to_string();
        let curve = spec
            .point(value)
            .and_then(|(c, _)| roc_curve(&c, &cfg.pfa_grid, spec.trials, workers));
        match curve {
            Ok(c) => points.extend(c.into_iter().map(|p| (spec.axis.as_str().to_string(), label.clone(), p))),
            Err(e) => failures.push(PointFailure {
                axis_value: label,
                detector: Some(DetectorKind::Se),
                message: e.to_string(),
            }),
        }
    }
    let bytes = roc_csv(&prov, &points);
    let mut written = vec![write_file(out, "roc.csv", &bytes)?];
    write_failures(out, &prov, &failures, &mut written)?;
    written.push(write_chart(out, "roc.svg", &roc_chart(&parse_table(&bytes)))?);
    Ok(written)
}

/// Analytic rows at each axis value, using the Tracy-Widom threshold for the point's target.
pub fn theory_rows(cfg: &ResolvedConfig) -> (Vec<TheoryRow>, Vec<PointFailure>) {
    let spec = &cfg.sweep;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for value in &spec.values {
        let label = value.to_string();
        let row = spec.point(value).and_then(|(c, pfa)| {
            let eta = threshold_for_pfa(pfa, c.antennas, c.frame_len())?;
            Ok(TheoryRow {
                point: performance_point(&c, eta)?,
                ber_lower_bound: ber_lower_bound(c.frame_len())?,
                axis: spec.axis.as_str().to_string(),
                axis_value: label.clone(),
            })
        });
        match row {
            Ok(r) => rows.push(r),
            Err(e) => failures.push(PointFailure {
                axis_value: label,
                detector: Some(DetectorKind::Se),
                message: e.to_string(),
            }),
        }
    }
    (rows, failures)
}

/// Analytic false-alarm probability for `M = 5..=30`, `N = 50, 60, ..., 300`
/// at each threshold in [`SURFACE_ETAS`].
pub fn pfa_surface() -> CliResult<Vec<(usize, usize, f64, f64)>> {
    let mut rows = Vec::new();
    for &eta in &SURFACE_ETAS {
        for m in 5..=30 {
            for n in (50..=300).step_by(10) {
                rows.push((m, n, eta, pfa_analytic(eta, m, 2 * n)?));
            }
        }
    }
    Ok(rows)
}

/// Writes `theory.csv`, `pfa_surface.csv`, `tw2_table.csv` and their charts.
pub fn run_theory(cfg: &ResolvedConfig, out: &Path) -> CliResult<Vec<PathBuf>> {
    ensure_dir(out)?;
    let prov = provenance(cfg);
    let (rows, failures) = theory_rows(cfg);
    let theory = theory_csv(&prov, &rows);
    let surface = surface_csv(&prov, &pfa_surface()?);
    let mut written = vec![
        write_file(out, "theory.csv", &theory)?,
        write_file(out, "pfa_surface.csv", &surface)?,
        write_file(out, "tw2_table.csv", &tw2_csv(&prov, Tw2Table::standard()))?,
    ];
    write_failures(out, &prov, &failures, &mut written)?;
    written.push(write_chart(out, "theory.svg", &theory_chart(&parse_table(&theory)))?);
    written.push(write_chart(out, "pfa_surface.svg", &surface_chart(&parse_table(&surface)))?);
    Ok(written)
}
