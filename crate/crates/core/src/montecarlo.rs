//! Seeded, parallel Monte Carlo engine for false-alarm, missed-detection and
//! BER estimates.
//!
//! Every trial draws from its own ChaCha8 stream selected by
//! `(master seed, domain, trial index)`, so results do not depend on the
//! number of workers or on scheduling. Per-trial draw order is: the bit, the
//! channels, the ambient samples, the noise.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{eigen_spectrum, partition_covariance, sample_covariance, EigenSpectrum, Hypothesis};
use crate::detectors::{
    energy_statistic, glrt_statistic, le_statistic, se_statistic_with, threshold_for_pfa, NoiseEstimator,
};
use crate::model::{generate_channels, synthesize_frame, IdaskRatio, Modulation, SystemConfig};
use crate::theory::{ber_analytic, pmd_average};
use crate::{Error, Result};

/// Trials handed to a worker at a time.
const CHUNK: u64 = 512;

/// Independent families of trial streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamDomain {
    Evaluation,
    Calibration,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Evaluation => 0,
            StreamDomain::Calibration => 1,
        }
    }
}

const MAX_TRIALS: u64 = 1 << 56;

/// The random stream of one trial.
pub fn trial_rng(seed: u64, domain: StreamDomain, trial_index: u64) -> ChaCha8Rng {
    debug_assert!(trial_index < MAX_TRIALS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain.tag() << 56) | trial_index);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "SE")]
    Se,
    /// SE statistic with the single-branch noise estimate.
    #[serde(rename = "SE_UNMODIFIED")]
    SeUnmodified,
    #[serde(rename = "GLRT")]
    Glrt,
    #[serde(rename = "LE")]
    Le,
    #[serde(rename = "ENERGY")]
    Energy,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 5] = [
        DetectorKind::Se,
        DetectorKind::SeUnmodified,
        DetectorKind::Glrt,
        DetectorKind::Le,
        DetectorKind::Energy,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorKind::Se => "SE",
            DetectorKind::SeUnmodified => "SE_UNMODIFIED",
            DetectorKind::Glrt => "GLRT",
            DetectorKind::Le => "LE",
            DetectorKind::Energy => "ENERGY",
        }
    }

    fn uses_spectrum(&self) -> bool {
        matches!(self, DetectorKind::Se | DetectorKind::SeUnmodified | DetectorKind::Le)
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        DetectorKind::ALL
            .into_iter()
            .find(|d| d.as_str() == upper)
            .ok_or_else(|| Error::Config(format!("unknown detector '{s}'")))
    }
}

/// How the transmitted bit of a trial is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthPolicy {
    /// Bernoulli with the configured prior.
    Prior,
    /// Always this bit. The prior draw is still consumed so the remaining
    /// stream matches the `Prior` policy.
    Fixed(bool),
}

/// Detector statistics of one trial, in the order of the requested detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialObservation {
    pub truth: bool,
    pub statistics: Vec<f64>,
}

fn detector_statistic(
    cfg: &SystemConfig,
    detector: DetectorKind,
    frame: &crate::model::ReceivedFrame,
    spectrum: Option<&EigenSpectrum>,
) -> Result<f64> {
    match detector {
        DetectorKind::Se => {
            se_statistic_with(spectrum.expect("spectrum computed"), cfg.m_index, NoiseEstimator::Adaptive)
                .map(|r| r.0)
        }
        DetectorKind::SeUnmodified => {
            se_statistic_with(spectrum.expect("spectrum computed"), cfg.m_index, NoiseEstimator::ExcludeTwo)
                .map(|r| r.0)
        }
        DetectorKind::Le => le_statistic(spectrum.expect("spectrum computed")),
        DetectorKind::Energy => energy_statistic(frame, cfg.reflected_len()),
        DetectorKind::Glrt => {
            let r0 = partition_covariance(cfg, &frame.channels, Hypothesis::H0)?;
            let r1 = partition_covariance(cfg, &frame.channels, Hypothesis::H1)?;
            glrt_statistic(frame, &r0, &r1, cfg.reflected_len())
        }
    }
}

/// Simulates one trial and evaluates every requested detector statistic.
pub fn observe_trial(
    cfg: &SystemConfig,
    detectors: &[DetectorKind],
    domain: StreamDomain,
    truth: TruthPolicy,
    trial_index: u64,
) -> Result<TrialObservation> {
    let mut rng = trial_rng(cfg.seed, domain, trial_index);
    let drawn = rng.random::<f64>() < cfg.prior_c1;
    let bit = match truth {
        TruthPolicy::Prior => drawn,
        TruthPolicy::Fixed(b) => b,
    };
    let channels = generate_channels(cfg, &mut rng)?;
    let frame = synthesize_frame(cfg, &channels, bit, &mut rng)?;
    let spectrum = if detectors.iter().any(DetectorKind::uses_spectrum) {
        Some(eigen_spectrum(&sample_covariance(&frame))?)
    } else {
        None
    };
    let statistics = detectors
        .iter()
        .map(|&d| detector_statistic(cfg, d, &frame, spectrum.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrialObservation { truth: bit, statistics })
}

/// Runs one trial with the configured prior; returns `(truth, decided)`.
pub fn run_trial(cfg: &SystemConfig, detector: DetectorKind, eta: f64, trial_index: u64) -> Result<(bool, bool)> {
    let obs = observe_trial(cfg, &[detector], StreamDomain::Evaluation, TruthPolicy::Prior, trial_index)?;
    Ok((obs.truth, obs.statistics[0] > eta))
}

/// Decision tallies for one detector at one threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Counts {
    pub h0_trials: u64,
    pub h1_trials: u64,
    pub false_alarms: u64,
    pub misses: u64,
}

impl Counts {
    fn record(&mut self, truth: bool, decided: bool) {
        if truth {
            self.h1_trials += 1;
            self.misses += (!decided) as u64;
        } else {
            self.h0_trials += 1;
            self.false_alarms += decided as u64;
        }
    }

    fn merge(&mut self, other: &Counts) {
        self.h0_trials += other.h0_trials;
        self.h1_trials += other.h1_trials;
        self.false_alarms += other.false_alarms;
        self.misses += other.misses;
    }

    pub fn trials(&self) -> u64 {
        self.h0_trials + self.h1_trials
    }

    pub fn errors(&self) -> u64 {
        self.false_alarms + self.misses
    }

    /// Error rate over all trials, NaN without trials.
    pub fn ber(&self) -> f64 {
        ratio(self.errors(), self.trials())
    }

    pub fn pfa(&self) -> f64 {
        ratio(self.false_alarms, self.h0_trials)
    }

    pub fn pmd(&self) -> f64 {
        ratio(self.misses, self.h1_trials)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        f64::NAN
    } else {
        num as f64 / den as f64
    }
}

/// Half-width of the 95% normal-approximation interval with a continuity
/// correction; the rate is kept at least half an event away from 0 and 1.
pub fn ci95_half_width(events: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let n = trials as f64;
    let p = (events as f64 / n).clamp(0.5 / n, 1.0 - 0.5 / n);
    1.959_963_984_540_054 * (p * (1.0 - p) / n).sqrt() + 0.5 / n
}

/// Points with fewer observed errors are flagged as low confidence.
pub const MIN_CONFIDENT_ERRORS: u64 = 20;

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::Config("worker count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Numerical(format!("cannot start worker pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

fn chunk_ranges(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(CHUNK))
        .map(|c| (c * CHUNK, ((c + 1) * CHUNK).min(trials)))
        .collect()
}

/// Decisions for several detectors, each at several thresholds, over one
/// shared set of trials. Returns `counts[detector][threshold]`.
pub fn count_decisions(
    cfg: &SystemConfig,
    detectors: &[DetectorKind],
    thresholds: &[Vec<f64>],
    trials: u64,
    truth: TruthPolicy,
    workers: Option<usize>,
) -> Result<Vec<Vec<Counts>>> {
    cfg.validate()?;
    if detectors.len() != thresholds.len() {
        return Err(Error::ContractViolation("one threshold list per detector is required".into()));
    }
    if trials > MAX_TRIALS {
        return Err(Error::Config(format!("at most 2^56 trials per run, got {trials}")));
    }
    let empty: Vec<Vec<Counts>> = thresholds.iter().map(|t| vec![Counts::default(); t.len()]).collect();
    let ranges = chunk_ranges(trials);
    let partials: Vec<Result<Vec<Vec<Counts>>>> = with_workers(workers, || {
        ranges
            .par_iter()
            .map(|&(start, end)| {
                let mut acc = empty.clone();
                for i in start..end {
                    let obs = observe_trial(cfg, detectors, StreamDomain::Evaluation, truth, i)?;
                    for (d, stat) in obs.statistics.iter().enumerate() {
                        for (t, &eta) in thresholds[d].iter().enumerate() {
                            acc[d][t].record(obs.truth, *stat > eta);
                        }
                    }
                }
                Ok(acc)
            })
            .collect()
    })?;
    let mut total = empty;
    for part in partials {
        let part = part?;
        for (d, row) in part.iter().enumerate() {
            for (t, c) in row.iter().enumerate() {
                total[d][t].merge(c);
            }
        }
    }
    Ok(total)
}

/// Empirical thresholds giving at most `pfa_targets[j]` false alarms on
/// `trials` bit-0 frames from the calibration streams. Returns
/// `thresholds[detector][target]`.
pub fn calibrate_thresholds(
    cfg: &SystemConfig,
    detectors: &[DetectorKind],
    pfa_targets: &[f64],
    trials: u64,
    workers: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if trials == 0 || trials > MAX_TRIALS {
        return Err(Error::Config(format!("calibration needs 1..2^56 trials, got {trials}")));
    }
    for &p in pfa_targets {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("false-alarm target {p} is not in (0, 1)")));
        }
    }
    let ranges = chunk_ranges(trials);
    let parts: Vec<Result<Vec<Vec<f64>>>> = with_workers(workers, || {
        ranges
            .par_iter()
            .map(|&(start, end)| {
                (start..end)
                    .map(|i| {
                        observe_trial(cfg, detectors, StreamDomain::Calibration, TruthPolicy::Fixed(false), i)
                            .map(|o| o.statistics)
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut per_detector: Vec<Vec<f64>> = vec![Vec::with_capacity(trials as usize); detectors.len()];
    for part in parts {
        for stats in part? {
            for (d, s) in stats.into_iter().enumerate() {
                per_detector[d].push(s);
            }
        }
    }
    Ok(per_detector
        .into_iter()
        .map(|mut v| {
            v.sort_by(f64::total_cmp);
            pfa_targets.iter().map(|&p| exceedance_threshold(&v, p)).collect()
        })
        .collect())
}

/// Smallest order statistic `t` with at most `floor(p n)` samples above it.
fn exceedance_threshold(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let allowed = ((p * n as f64).floor() as usize).min(n - 1);
    sorted[n - 1 - allowed]
}

/// Empirical performance of one detector at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub axis: String,
    pub axis_value: String,
    pub detector: DetectorKind,
    pub eta: f64,
    pub ber: f64,
    pub ber_ci95: f64,
    pub pfa_emp: f64,
    pub pmd_emp: f64,
    pub trials: u64,
    pub errors: u64,
    pub low_confidence: bool,
    pub seed: u64,
    pub ber_analytic: Option<f64>,
    pub pmd_analytic: Option<f64>,
}

impl MetricRow {
    fn from_counts(axis: &str, axis_value: &str, detector: DetectorKind, eta: f64, seed: u64, c: &Counts) -> Self {
        Self {
            axis: axis.to_string(),
            axis_value: axis_value.to_string(),
            detector,
            eta,
            ber: c.ber(),
            ber_ci95: ci95_half_width(c.errors(), c.trials()),
            pfa_emp: c.pfa(),
            pmd_emp: c.pmd(),
            trials: c.trials(),
            errors: c.errors(),
            low_confidence: c.errors() < MIN_CONFIDENT_ERRORS,
            seed,
            ber_analytic: None,
            pmd_analytic: None,
        }
    }
}

/// BER and conditional error rates of `detector` at threshold `eta`.
pub fn estimate_metrics(
    cfg: &SystemConfig,
    detector: DetectorKind,
    eta: f64,
    trials: u64,
    workers: Option<usize>,
) -> Result<MetricRow> {
    if trials < 100 {
        return Err(Error::Config(format!("at least 100 trials are required, got {trials}")));
    }
    let counts = count_decisions(cfg, &[detector], &[vec![eta]], trials, TruthPolicy::Prior, workers)?;
    Ok(MetricRow::from_counts("", "", detector, eta, cfg.seed, &counts[0][0]))
}

/// One point of a complementary ROC curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub pfa_target: f64,
    pub eta: f64,
    pub pmd_emp: f64,
    pub pmd_ci95: f64,
    pub misses: u64,
    pub trials: u64,
    pub pmd_analytic: Option<f64>,
}

/// SE missed-detection rate against the analytic threshold for each target,
/// from `trials` bit-1 frames that are shared across the grid.
pub fn roc_curve(cfg: &SystemConfig, pfa_grid: &[f64], trials: u64, workers: Option<usize>) -> Result<Vec<RocPoint>> {
    cfg.validate()?;
    if pfa_grid.is_empty() {
        return Err(Error::Config("the false-alarm grid is empty".into()));
    }
    let etas = pfa_grid
        .iter()
        .map(|&p| threshold_for_pfa(p, cfg.antennas, cfg.frame_len()))
        .collect::<Result<Vec<_>>>()?;
    let counts = count_decisions(
        cfg,
        &[DetectorKind::Se],
        std::slice::from_ref(&etas),
        trials,
        TruthPolicy::Fixed(true),
        workers,
    )?;
    pfa_grid
        .iter()
        .zip(&etas)
        .zip(&counts[0])
        .map(|((&p, &eta), c)| {
            Ok(RocPoint {
                pfa_target: p,
                eta,
                pmd_emp: c.pmd(),
                pmd_ci95: ci95_half_width(c.misses, c.h1_trials),
                misses: c.misses,
                trials: c.h1_trials,
                pmd_analytic: pmd_average(eta, cfg).ok(),
            })
        })
        .collect()
}

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    GammaDb,
    DeltaGammaDb,
    #[serde(rename = "m", alias = "M")]
    Antennas,
    #[serde(rename = "n", alias = "N")]
    HalfLen,
    #[serde(rename = "k")]
    Idask,
    PfaTarget,
    Modulation,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::GammaDb => "gamma_db",
            SweepAxis::DeltaGammaDb => "delta_gamma_db",
            SweepAxis::Antennas => "m",
            SweepAxis::HalfLen => "n",
            SweepAxis::Idask => "k",
            SweepAxis::PfaTarget => "pfa_target",
            SweepAxis::Modulation => "modulation",
        }
    }
}

/// A sweep value: a number, or text such as `"8/7"` or `"QPSK"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisValue {
    Number(f64),
    Text(String),
}

impl fmt::Display for AxisValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisValue::Number(x) => write!(f, "{x}"),
            AxisValue::Text(s) => f.write_str(s),
        }
    }
}

impl AxisValue {
    fn number(&self, axis: SweepAxis) -> Result<f64> {
        match self {
            AxisValue::Number(x) => Ok(*x),
            AxisValue::Text(s) => s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("axis {} expects a number, got '{s}'", axis.as_str()))),
        }
    }

    fn count(&self, axis: SweepAxis) -> Result<usize> {
        let x = self.number(axis)?;
        if x < 0.0 || x.fract() != 0.0 || x > u32::MAX as f64 {
            return Err(Error::Config(format!("axis {} expects a whole number, got {x}", axis.as_str())));
        }
        Ok(x as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// Tracy-Widom threshold for the SE statistics; baselines are still calibrated.
    #[default]
    Analytic,
    /// Empirical thresholds for every detector except the genie test.
    Calibrated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: SystemConfig,
    pub axis: SweepAxis,
    pub values: Vec<AxisValue>,
    pub trials: u64,
    pub detectors: Vec<DetectorKind>,
    pub threshold_mode: ThresholdMode,
    pub pfa_target: f64,
    /// When set, an antenna sweep keeps `N = n_per_m · M`.
    pub n_per_m: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep has no axis values".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("sweep has no detectors".into()));
        }
        if self.trials < 100 {
            return Err(Error::Config(format!("at least 100 trials per point are required, got {}", self.trials)));
        }
        if !(self.pfa_target > 0.0 && self.pfa_target < 1.0) {
            return Err(Error::Config(format!("pfa_target {} is not in (0, 1)", self.pfa_target)));
        }
        if self.n_per_m == Some(0) {
            return Err(Error::Config("n_per_m must be positive".into()));
        }
        self.base.validate()?;
        for v in &self.values {
            self.point(v)?;
        }
        Ok(())
    }

    /// Configuration and false-alarm target at one axis value.
    pub fn point(&self, value: &AxisValue) -> Result<(SystemConfig, f64)> {
        let mut cfg = self.base.clone();
        let mut pfa = self.pfa_target;
        match self.axis {
            SweepAxis::GammaDb => cfg.gamma_db = value.number(self.axis)?,
            SweepAxis::DeltaGammaDb => cfg.delta_gamma_db = value.number(self.axis)?,
            SweepAxis::Antennas => {
                cfg.antennas = value.count(self.axis)?;
                if let Some(r) = self.n_per_m {
                    cfg.half_len = r * cfg.antennas;
                }
            }
            SweepAxis::HalfLen => cfg.half_len = value.count(self.axis)?,
            SweepAxis::Idask => {
                cfg.idask = match value {
                    AxisValue::Number(x) => IdaskRatio::from_f64(*x)?,
                    AxisValue::Text(s) => s.parse()?,
                }
            }
            SweepAxis::PfaTarget => pfa = value.number(self.axis)?,
            SweepAxis::Modulation => {
                cfg.modulation = match value {
                    AxisValue::Text(s) => s.parse::<Modulation>()?,
                    AxisValue::Number(x) => {
                        return Err(Error::Config(format!("modulation axis expects a name, got {x}")))
                    }
                }
            }
        }
        cfg.validate()?;
        if !(pfa > 0.0 && pfa < 1.0) {
            return Err(Error::Config(format!("pfa_target {pfa} is not in (0, 1)")));
        }
        Ok((cfg, pfa))
    }
}

/// A sweep point that could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub axis_value: String,
    pub detector: Option<DetectorKind>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<MetricRow>,
    pub failures: Vec<PointFailure>,
}

/// Thresholds of each detector at one sweep point.
fn point_thresholds(
    spec: &SweepSpec,
    cfg: &SystemConfig,
    pfa: f64,
    detectors: &[DetectorKind],
    workers: Option<usize>,
) -> Result<Vec<f64>> {
    let needs_calibration: Vec<DetectorKind> = detectors
        .iter()
        .copied()
        .filter(|d| match d {
            DetectorKind::Glrt => false,
            DetectorKind::Se | DetectorKind::SeUnmodified => spec.threshold_mode == ThresholdMode::Calibrated,
            DetectorKind::Le | DetectorKind::Energy => true,
        })
        .collect();
    let calibrated = if needs_calibration.is_empty() {
        Vec::new()
    } else {
        calibrate_thresholds(cfg, &needs_calibration, &[pfa], spec.trials, workers)?
    };
    detectors
        .iter()
        .map(|d| {
            if let Some(pos) = needs_calibration.iter().position(|c| c == d) {
                Ok(calibrated[pos][0])
            } else if *d == DetectorKind::Glrt {
                Ok(0.0)
            } else {
                threshold_for_pfa(pfa, cfg.antennas, cfg.frame_len())
            }
        })
        .collect()
}

fn run_point(
    spec: &SweepSpec,
    value: &AxisValue,
    workers: Option<usize>,
    out: &mut SweepResult,
) {
    let label = value.to_string();
    let fail = |out: &mut SweepResult, detector: Option<DetectorKind>, e: Error| {
        out.failures.push(PointFailure {
            axis_value: label.clone(),
            detector,
            message: e.to_string(),
        })
    };
    let (cfg, pfa) = match spec.point(value) {
        Ok(p) => p,
        Err(e) => return fail(out, None, e),
    };
    // Detectors that cannot run here (for example the energy ratio at k = 1)
    // are reported individually; the rest share one simulation pass.
    let mut usable = Vec::new();
    let mut etas = Vec::new();
    for &d in &spec.detectors {
        match point_thresholds(spec, &cfg, pfa, &[d], workers) {
            Ok(t) => {
                usable.push(d);
                etas.push(t[0]);
            }
            Err(e) => fail(out, Some(d), e),
        }
    }
    if usable.is_empty() {
        return;
    }
    let thresholds: Vec<Vec<f64>> = etas.iter().map(|&e| vec![e]).collect();
    let counts = match count_decisions(&cfg, &usable, &thresholds, spec.trials, TruthPolicy::Prior, workers) {
        Ok(c) => c,
        Err(e) => return fail(out, None, e),
    };
    for (i, &d) in usable.iter().enumerate() {
        let mut row = MetricRow::from_counts(spec.axis.as_str(), &label, d, etas[i], cfg.seed, &counts[i][0]);
        if d == DetectorKind::Se {
            row.pmd_analytic = pmd_average(etas[i], &cfg).ok();
            row.ber_analytic = ber_analytic(etas[i], &cfg).ok();
        }
        out.rows.push(row);
    }
}

/// Runs every axis value for every detector. Points that fail are recorded
/// in [`SweepResult::failures`] and the sweep moves on.
pub fn sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult> {
    if spec.values.is_empty() {
        return Err(Error::Config("sweep has no axis values".into()));
    }
    if spec.detectors.is_empty() {
        return Err(Error::Config("sweep has no detectors".into()));
    }
    if spec.trials < 100 {
        return Err(Error::Config(format!("at least 100 trials per point are required, got {}", spec.trials)));
    }
    if !(spec.pfa_target > 0.0 && spec.pfa_target < 1.0) {
        return Err(Error::Config(format!("pfa_target {} is not in (0, 1)", spec.pfa_target)));
    }
    let mut out = SweepResult::default();
    for value in &spec.values {
        run_point(spec, value, workers, &mut out);
    }
    Ok(out)
}
