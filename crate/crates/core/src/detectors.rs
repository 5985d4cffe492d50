//! Second-eigenvalue (SE) blind detector, its threshold, and reference
//! detectors: a genie likelihood-ratio test, a largest-eigenvalue test and an
//! energy-ratio test.
//!
//! The largest-eigenvalue and energy-ratio detectors are simplified stand-ins
//! for published baselines, not reproductions of them.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::covariance::{eigen_spectrum, sample_covariance, EigenSpectrum, TheoreticalCovariance};
use crate::model::ReceivedFrame;
use crate::tracy_widom::{centering_constants, tw2_isf};
use crate::{Error, Result};

/// Which line of the two-branch noise estimate was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// The second eigenvalue looked like noise; it was pooled into the estimate.
    H0,
    /// The second eigenvalue stood out; it was excluded.
    H1,
}

/// Noise-variance estimator used by the SE statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum NoiseEstimator {
    /// Two-branch estimate switching on the gap `λ₂ - λ_m`.
    #[default]
    Adaptive,
    /// Always `(tr - λ₁ - λ₂)/(M - 2)`.
    ExcludeTwo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub decided_bit: bool,
    pub noise_var_est: f64,
    pub branch: Branch,
}

/// Decision rule shared by every detector: strictly above the threshold means 1.
#[inline]
pub fn decide(statistic: f64, threshold: f64) -> bool {
    statistic > threshold
}

fn check_spectrum(spec: &EigenSpectrum, m_index: usize) -> Result<usize> {
    let m = spec.len();
    if m < 3 {
        return Err(Error::Unsupported(format!(
            "the SE noise estimate needs at least 3 antennas, got {m}"
        )));
    }
    if m_index < 3 || m_index > m {
        return Err(Error::Config(format!("m_index = {m_index} must satisfy 3 <= m <= {m}")));
    }
    Ok(m)
}

/// Two-branch noise-variance estimate from a descending spectrum.
pub fn estimate_noise_variance(spec: &EigenSpectrum, m_index: usize) -> Result<(f64, Branch)> {
    estimate_noise_variance_with(spec, m_index, NoiseEstimator::Adaptive)
}

pub fn estimate_noise_variance_with(
    spec: &EigenSpectrum,
    m_index: usize,
    estimator: NoiseEstimator,
) -> Result<(f64, Branch)> {
    let m = check_spectrum(spec, m_index)? as f64;
    let l1 = spec.nth_largest(1);
    let l2 = spec.nth_largest(2);
    let rest = (spec.trace - l1 - l2) / (m - 2.0);
    let pooled = l2 - spec.nth_largest(m_index) < rest;
    if estimator == NoiseEstimator::Adaptive && pooled {
        Ok(((spec.trace - l1) / (m - 1.0), Branch::H0))
    } else {
        Ok((rest, Branch::H1))
    }
}

/// `λ₂ / σ̂²` with the adaptive noise estimate.
pub fn se_statistic(spec: &EigenSpectrum, m_index: usize) -> Result<f64> {
    se_statistic_with(spec, m_index, NoiseEstimator::Adaptive).map(|(t, _, _)| t)
}

/// Returns `(statistic, noise estimate, branch)`.
pub fn se_statistic_with(
    spec: &EigenSpectrum,
    m_index: usize,
    estimator: NoiseEstimator,
) -> Result<(f64, f64, Branch)> {
    let (noise, branch) = estimate_noise_variance_with(spec, m_index, estimator)?;
    if !(noise > 0.0) {
        return Err(Error::DegenerateInput(format!(
            "noise estimate {noise:e} is not positive; the spectrum is invalid"
        )));
    }
    Ok((spec.nth_largest(2) / noise, noise, branch))
}

pub fn se_detect(frame: &ReceivedFrame, eta: f64, m_index: usize) -> Result<DetectionOutcome> {
    se_detect_with(frame, eta, m_index, NoiseEstimator::Adaptive)
}

pub fn se_detect_with(
    frame: &ReceivedFrame,
    eta: f64,
    m_index: usize,
    estimator: NoiseEstimator,
) -> Result<DetectionOutcome> {
    let spec = eigen_spectrum(&sample_covariance(frame))?;
    se_outcome(&spec, eta, m_index, estimator)
}

/// Thresholds a precomputed spectrum.
pub fn se_outcome(
    spec: &EigenSpectrum,
    eta: f64,
    m_index: usize,
    estimator: NoiseEstimator,
) -> Result<DetectionOutcome> {
    let (statistic, noise_var_est, branch) = se_statistic_with(spec, m_index, estimator)?;
    Ok(DetectionOutcome {
        statistic,
        threshold: eta,
        decided_bit: decide(statistic, eta),
        noise_var_est,
        branch,
    })
}

/// SE threshold meeting a target false-alarm probability through the
/// Tracy-Widom law of the normalized second eigenvalue.
pub fn threshold_for_pfa(pfa: f64, antennas: usize, frame_len: usize) -> Result<f64> {
    if !(pfa > 0.0 && pfa < 1.0) {
        return Err(Error::Domain(format!("target false-alarm probability {pfa} is not in (0, 1)")));
    }
    let c = centering_constants(antennas, frame_len)?;
    Ok(c.mu + c.sigma * tw2_isf(pfa)?)
}

fn hermitian_inverse_logdet(r: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, f64)> {
    let chol = r
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateInput("covariance is singular or not positive definite".into()))?;
    let logdet = 2.0 * chol.l_dirty().diagonal().iter().map(|d| d.re.ln()).sum::<f64>();
    if !logdet.is_finite() {
        return Err(Error::DegenerateInput("covariance determinant is not finite".into()));
    }
    Ok((chol.inverse(), logdet))
}

/// Genie log-likelihood ratio on the last `reflected_len` columns, given the
/// per-column covariances of those columns under each bit.
pub fn glrt_statistic(
    frame: &ReceivedFrame,
    r0: &TheoreticalCovariance,
    r1: &TheoreticalCovariance,
    reflected_len: usize,
) -> Result<f64> {
    let m = frame.antennas();
    let len = frame.frame_len();
    if reflected_len == 0 || reflected_len > len {
        return Err(Error::Domain(format!("reflected length {reflected_len} outside 1..={len}")));
    }
    if r0.r.shape() != (m, m) || r1.r.shape() != (m, m) {
        return Err(Error::Config(format!("covariances must be {m}x{m}")));
    }
    let (inv0, logdet0) = hermitian_inverse_logdet(&r0.r)?;
    let (inv1, logdet1) = hermitian_inverse_logdet(&r1.r)?;
    let tail = frame.y.columns(len - reflected_len, reflected_len);
    let scatter = tail * tail.adjoint();
    let quad = (inv0 - inv1).component_mul(&scatter.transpose()).sum().re;
    Ok(quad + reflected_len as f64 * (logdet0 - logdet1))
}

pub fn glrt_detect(
    frame: &ReceivedFrame,
    r0: &TheoreticalCovariance,
    r1: &TheoreticalCovariance,
    reflected_len: usize,
) -> Result<bool> {
    Ok(decide(glrt_statistic(frame, r0, r1, reflected_len)?, 0.0))
}

/// `λ₁ / ((tr - λ₁)/(M - 1))`.
pub fn le_statistic(spec: &EigenSpectrum) -> Result<f64> {
    let m = spec.len();
    if m < 2 {
        return Err(Error::Unsupported("the largest-eigenvalue test needs at least 2 antennas".into()));
    }
    let l1 = spec.nth_largest(1);
    let noise = (spec.trace - l1) / (m - 1) as f64;
    if !(noise > 0.0) {
        return Err(Error::DegenerateInput(format!("noise estimate {noise:e} is not positive")));
    }
    Ok(l1 / noise)
}

pub fn le_detect(frame: &ReceivedFrame, eta_le: f64) -> Result<bool> {
    let spec = eigen_spectrum(&sample_covariance(frame))?;
    Ok(decide(le_statistic(&spec)?, eta_le))
}

/// Mean per-sample energy of the last `reflected_len` columns over that of the
/// leading columns.
pub fn energy_statistic(frame: &ReceivedFrame, reflected_len: usize) -> Result<f64> {
    let len = frame.frame_len();
    if reflected_len == 0 || reflected_len >= len {
        return Err(Error::Unsupported(format!(
            "energy ratio needs both partitions non-empty (reflected {reflected_len} of {len})"
        )));
    }
    let lead = len - reflected_len;
    let energy = |start: usize, count: usize| {
        frame.y.columns(start, count).iter().map(|z| z.norm_sqr()).sum::<f64>() / count as f64
    };
    let head = energy(0, lead);
    if !(head > 0.0) {
        return Err(Error::DegenerateInput("leading partition carries no energy".into()));
    }
    Ok(energy(lead, reflected_len) / head)
}

pub fn energy_detect(frame: &ReceivedFrame, eta_e: f64, reflected_len: usize) -> Result<bool> {
    Ok(decide(energy_statistic(frame, reflected_len)?, eta_e))
}
