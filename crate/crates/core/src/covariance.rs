//! Sample and theoretical covariances, Hermitian spectra and the determinant
//! split of the reflected-state covariance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::model::{ChannelRealization, ReceivedFrame, SystemConfig};
use crate::{Error, Result};

/// Relative tolerance on `‖R - Rᴴ‖_F / ‖R‖_F` accepted as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// Relative (to the trace) slack below zero tolerated for PSD spectra.
pub const PSD_TOL: f64 = 1e-10;

/// Which BD bit generated a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Hypothesis {
    /// `c = 0`, no reflection.
    H0,
    /// `c = 1`, IDASK reflection on the frame tail.
    H1,
}

impl Hypothesis {
    pub fn from_bit(c: bool) -> Self {
        if c {
            Hypothesis::H1
        } else {
            Hypothesis::H0
        }
    }
}

/// Real eigenvalues of a Hermitian matrix in descending order, plus its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    pub values: Vec<f64>,
    pub trace: f64,
}

impl EigenSpectrum {
    /// Builds a spectrum from raw eigenvalues; sorts them and takes their sum as trace.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateInput("eigenvalues must be finite".into()));
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let trace = values.iter().sum();
        Ok(Self { values, trace })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The `rank`-th largest eigenvalue, 1-based (`nth_largest(1)` is λ₁).
    pub fn nth_largest(&self, rank: usize) -> f64 {
        self.values[rank - 1]
    }

    pub fn is_psd(&self) -> bool {
        let floor = -PSD_TOL * self.trace.abs();
        self.values.iter().all(|&v| v >= floor)
    }
}

/// `R̂ = Y Yᴴ / 2N` for a received frame.
pub fn sample_covariance(frame: &ReceivedFrame) -> DMatrix<Complex64> {
    sample_covariance_of(&frame.y)
}

/// `Y Yᴴ / L` for an `M x L` sample matrix; Hermitian by construction.
pub fn sample_covariance_of(y: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let (m, len) = y.shape();
    let mut r = DMatrix::<Complex64>::zeros(m, m);
    if len == 0 {
        return r;
    }
    let data = y.as_slice();
    for col in data.chunks_exact(m) {
        for j in 0..m {
            let yj = col[j].conj();
            for i in j..m {
                r[(i, j)] += col[i] * yj;
            }
        }
    }
    let scale = 1.0 / len as f64;
    for j in 0..m {
        r[(j, j)] = Complex64::new(r[(j, j)].re * scale, 0.0);
        for i in (j + 1)..m {
            let v = r[(i, j)] * scale;
            r[(i, j)] = v;
            r[(j, i)] = v.conj();
        }
    }
    r
}

fn check_hermitian(r: &DMatrix<Complex64>) -> Result<()> {
    if !r.is_square() {
        return Err(Error::ContractViolation(format!(
            "expected a square matrix, got {}x{}",
            r.nrows(),
            r.ncols()
        )));
    }
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DegenerateInput("matrix has non-finite entries".into()));
    }
    let scale = r.norm();
    let skew = (r - r.adjoint()).norm();
    if skew > HERMITIAN_TOL * scale {
        return Err(Error::ContractViolation(format!(
            "matrix is not Hermitian: ‖R - Rᴴ‖ = {skew:e}, ‖R‖ = {scale:e}"
        )));
    }
    Ok(())
}

fn real_trace(r: &DMatrix<Complex64>) -> f64 {
    (0..r.nrows()).map(|i| r[(i, i)].re).sum()
}

/// Full real spectrum of a Hermitian matrix, in descending order.
pub fn eigen_spectrum(r: &DMatrix<Complex64>) -> Result<EigenSpectrum> {
    check_hermitian(r)?;
    if r.nrows() < 2 {
        return Err(Error::ContractViolation("spectrum needs at least a 2x2 matrix".into()));
    }
    let sym = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let mut values: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(EigenSpectrum {
        values,
        trace: real_trace(r),
    })
}

/// Spectrum together with unit eigenvectors (columns, matching the descending order).
pub fn eigen_decomposition(r: &DMatrix<Complex64>) -> Result<(EigenSpectrum, DMatrix<Complex64>)> {
    check_hermitian(r)?;
    let sym = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(r.nrows(), order.len(), |row, col| eig.eigenvectors[(row, order[col])]);
    Ok((
        EigenSpectrum {
            values,
            trace: real_trace(r),
        },
        vectors,
    ))
}

/// Model covariance of a whole frame under a hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoreticalCovariance {
    pub r: DMatrix<Complex64>,
    pub hypothesis: Hypothesis,
}

fn outer(v: &DVector<Complex64>) -> DMatrix<Complex64> {
    v * v.adjoint()
}

fn check_channels(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<()> {
    cfg.validate()?;
    if ch.antennas() != cfg.antennas {
        return Err(Error::Config(format!(
            "channel has {} antennas but configuration has M = {}",
            ch.antennas(),
            cfg.antennas
        )));
    }
    Ok(())
}

/// Frame-averaged covariance:
/// `R₀ = σ_s² h₁h₁ᴴ + σ_n² I` and
/// `R₁ = (1 - 1/k) σ_s² h₁h₁ᴴ + (1/k) σ_s² (h₁+h₂)(h₁+h₂)ᴴ + σ_n² I`.
pub fn theoretical_covariance(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    hypothesis: Hypothesis,
) -> Result<TheoreticalCovariance> {
    check_channels(cfg, ch)?;
    let m = cfg.antennas;
    let sig = cfg.signal_var();
    let noise = DMatrix::<Complex64>::identity(m, m) * Complex64::from(cfg.noise_var());
    let direct = outer(&ch.h1);
    let r = match hypothesis {
        Hypothesis::H0 => direct * Complex64::from(sig) + noise,
        Hypothesis::H1 => {
            let inv_k = 1.0 / cfg.idask.value();
            let reflected = outer(&(&ch.h1 + &ch.h2));
            direct * Complex64::from((1.0 - inv_k) * sig) + reflected * Complex64::from(inv_k * sig) + noise
        }
    };
    Ok(TheoreticalCovariance { r, hypothesis })
}

/// Per-column covariance of the reflected partition `Y₁` (the last `2N/k` columns).
///
/// Under H0 it equals the direct-only covariance; under H1 the columns carry
/// `h₁ + h₂`.
pub fn partition_covariance(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    hypothesis: Hypothesis,
) -> Result<TheoreticalCovariance> {
    check_channels(cfg, ch)?;
    let m = cfg.antennas;
    let gain = match hypothesis {
        Hypothesis::H0 => ch.h1.clone(),
        Hypothesis::H1 => &ch.h1 + &ch.h2,
    };
    let r = outer(&gain) * Complex64::from(cfg.signal_var())
        + DMatrix::<Complex64>::identity(m, m) * Complex64::from(cfg.noise_var());
    Ok(TheoreticalCovariance { r, hypothesis })
}

/// The two-term split of `det(R₁)` together with an independently computed determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetDecomposition {
    /// Product of the predicted eigenvalues; dominant when `Δγ → 0`.
    pub dominant: f64,
    /// Cross-coupling remainder between the direct and cascaded channels.
    pub remainder: f64,
    /// `det(R₁)` from an LU factorization.
    pub exact: f64,
}

/// Splits `det(R₁)` into the predicted-eigenvalue product and a remainder.
///
/// With `a = ‖h₁‖²`, `b = ‖h₂‖²`, `x = h₁ᴴh₂`, `K = 1/k - 1/k²`:
///
/// ```text
/// dominant  = (σ_s² a + σ_n²)(K σ_s² b + σ_n²) σ_n^{2(M-2)}
/// remainder = [σ_s² σ_n² b / k² + σ_s² σ_n² 2Re(x) / k - (k-1) σ_s⁴ |x|² / k²] σ_n^{2(M-2)}
/// ```
pub fn det_decomposition(cfg: &SystemConfig, ch: &ChannelRealization) -> Result<DetDecomposition> {
    check_channels(cfg, ch)?;
    let m = cfg.antennas as i32;
    let k = cfg.idask.value();
    let split = cfg.idask.energy_split();
    let sig = cfg.signal_var();
    let noise = cfg.noise_var();
    let a = ch.h1.norm_squared();
    let b = ch.h2.norm_squared();
    let cross = ch.h1.dotc(&ch.h2);
    let noise_pow = noise.powi(m - 2);
    let dominant = (sig * a + noise) * (split * sig * b + noise) * noise_pow;
    let remainder = (sig * noise * b / (k * k) + sig * noise * 2.0 * cross.re / k
        - (k - 1.0) * sig * sig * cross.norm_sqr() / (k * k))
        * noise_pow;
    let r1 = theoretical_covariance(cfg, ch, Hypothesis::H1)?;
    let exact = r1.r.lu().determinant().re;
    Ok(DetDecomposition {
        dominant,
        remainder,
        exact,
    })
}

/// Eigenvalues predicted by the small-`Δγ` approximation, descending.
///
/// H1: `[σ_s²‖h₁‖² + σ_n², K σ_s²‖h₂‖² + σ_n², σ_n², ...]`;
/// H0: `[σ_s²‖h₁‖² + σ_n², σ_n², ...]`.
pub fn predicted_eigenvalues(cfg: &SystemConfig, ch: &ChannelRealization, hypothesis: Hypothesis) -> Result<Vec<f64>> {
    check_channels(cfg, ch)?;
    let sig = cfg.signal_var();
    let noise = cfg.noise_var();
    let mut values = vec![noise; cfg.antennas];
    values[0] = sig * ch.h1.norm_squared() + noise;
    if hypothesis == Hypothesis::H1 {
        values[1] = sig * ch.h2.norm_squared() * cfg.idask.energy_split() + noise;
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_channels, synthesize_frame, IdaskRatio};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        let a = DMatrix::from_fn(m, m, |_, _| crate::model::complex_gaussian(rng, 1.0));
        (&a + a.adjoint()) * Complex64::from(0.5)
    }

    #[test]
    fn sample_covariance_basics() {
        let zero = DMatrix::<Complex64>::zeros(3, 4);
        assert_eq!(sample_covariance_of(&zero), DMatrix::zeros(3, 3));

        let y = DMatrix::from_column_slice(2, 1, &[Complex64::new(1.0, 2.0), Complex64::new(-0.5, 0.25)]);
        let r = sample_covariance_of(&y);
        let expect = &y * y.adjoint();
        assert!((r - expect).norm() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = DMatrix::from_fn(5, 37, |_, _| crate::model::complex_gaussian(&mut rng, 2.0));
        let r = sample_covariance_of(&y);
        let tr = real_trace(&r);
        let direct = y.norm_squared() / 37.0;
        assert!(((tr - direct) / direct).abs() < 1e-10);
        assert_eq!(r, r.adjoint());
    }

    #[test]
    fn spectrum_of_scaled_identity() {
        let r = DMatrix::<Complex64>::identity(4, 4) * Complex64::from(2.5);
        let spec = eigen_spectrum(&r).unwrap();
        assert!(spec.values.iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn spectrum_of_rank_one_plus_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = DVector::from_fn(5, |_, _| crate::model::complex_gaussian(&mut rng, 1.0));
        let (sig, noise) = (3.0, 0.2);
        let r = outer(&h) * Complex64::from(sig) + DMatrix::identity(5, 5) * Complex64::from(noise);
        let spec = eigen_spectrum(&r).unwrap();
        let top = sig * h.norm_squared() + noise;
        assert!((spec.values[0] - top).abs() < 1e-10 * top);
        for v in &spec.values[1..] {
            assert!((v - noise).abs() < 1e-10);
        }
    }

    #[test]
    fn random_hermitian_trace_and_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let r = random_hermitian(6, &mut rng);
            let (spec, v) = eigen_decomposition(&r).unwrap();
            let tr = real_trace(&r);
            let sum: f64 = spec.values.iter().sum();
            assert!((sum - tr).abs() <= 1e-9 * r.norm());
            assert!(spec.values.windows(2).all(|w| w[0] >= w[1]));
            let lambda = DMatrix::from_diagonal(&DVector::from_iterator(
                6,
                spec.values.iter().map(|&x| Complex64::from(x)),
            ));
            let resid = (&r - &v * lambda * v.adjoint()).norm();
            assert!(resid <= 1e-8 * r.norm(), "residual {resid}");
            let plain = eigen_spectrum(&r).unwrap();
            for (a, b) in plain.values.iter().zip(&spec.values) {
                assert!((a - b).abs() < 1e-10 * r.norm());
            }
        }
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let mut r = DMatrix::<Complex64>::identity(3, 3);
        r[(0, 1)] = Complex64::new(1.0, 0.0);
        assert!(matches!(eigen_spectrum(&r), Err(Error::ContractViolation(_))));
        let rect = DMatrix::<Complex64>::zeros(2, 3);
        assert!(eigen_spectrum(&rect).is_err());
    }

    fn cfg() -> SystemConfig {
        SystemConfig::default()
    }

    #[test]
    fn covariances_coincide_without_backscatter() {
        let mut c = cfg();
        c.delta_gamma_db = f64::NEG_INFINITY;
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ch = generate_channels(&c, &mut rng).unwrap();
        let r0 = theoretical_covariance(&c, &ch, Hypothesis::H0).unwrap();
        let r1 = theoretical_covariance(&c, &ch, Hypothesis::H1).unwrap();
        assert!((r0.r - r1.r).norm() < 1e-12);
    }

    #[test]
    fn ook_limit_matches_reflected_partition() {
        let mut c = cfg();
        c.idask = IdaskRatio::integer(1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let ch = generate_channels(&c, &mut rng).unwrap();
        let r1 = theoretical_covariance(&c, &ch, Hypothesis::H1).unwrap();
        let p1 = partition_covariance(&c, &ch, Hypothesis::H1).unwrap();
        assert!((r1.r - p1.r).norm() < 1e-12);
    }

    #[test]
    fn theoretical_matches_sample_average() {
        // Pooled sample covariance over many frames with fixed channels.
        let mut c = cfg();
        c.gamma_db = 10.0;
        c.delta_gamma_db = -3.0;
        c.noise_var_dbm = 0.0;
        c.half_len = 500;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let ch = generate_channels(&c, &mut rng).unwrap();
        for (bit, hyp) in [(false, Hypothesis::H0), (true, Hypothesis::H1)] {
            let frames = 1000;
            let mut acc = DMatrix::<Complex64>::zeros(5, 5);
            for _ in 0..frames {
                let f = synthesize_frame(&c, &ch, bit, &mut rng).unwrap();
                acc += sample_covariance(&f);
            }
            acc /= Complex64::from(frames as f64);
            let theory = theoretical_covariance(&c, &ch, hyp).unwrap();
            let rel = (&acc - &theory.r).norm() / theory.r.norm();
            assert!(rel < 0.01, "{hyp:?}: relative Frobenius error {rel}");
        }
    }

    #[test]
    fn determinant_split_without_backscatter() {
        let mut c = cfg();
        c.delta_gamma_db = f64::NEG_INFINITY;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ch = generate_channels(&c, &mut rng).unwrap();
        let d = det_decomposition(&c, &ch).unwrap();
        assert_eq!(d.remainder, 0.0);
        let noise = c.noise_var();
        let closed = (c.signal_var() * ch.h1.norm_squared() + noise) * noise.powi(c.antennas as i32 - 1);
        assert!((d.dominant - closed).abs() <= 1e-12 * closed);
        assert!((d.exact - closed).abs() <= 1e-9 * closed);
    }

    #[test]
    fn determinant_identity_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for trial in 0..200 {
            let mut c = cfg();
            c.antennas = 2 + trial % 7;
            c.m_index = 3;
            c.delta_gamma_db = -40.0 + (trial % 5) as f64 * 10.0;
            c.gamma_db = 5.0 + (trial % 4) as f64 * 10.0;
            c.idask = [IdaskRatio::integer(2), IdaskRatio::new(4, 3), IdaskRatio::integer(4)][trial % 3]
                .clone()
                .unwrap();
            c.half_len = 60;
            let ch = generate_channels(&c, &mut rng).unwrap();
            let d = det_decomposition(&c, &ch).unwrap();
            let rel = (d.dominant + d.remainder - d.exact).abs() / d.exact.abs();
            assert!(rel <= 1e-9, "trial {trial}: rel {rel}");
        }
    }

    #[test]
    fn predicted_eigenvalues_examples() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = generate_channels(&c, &mut rng).unwrap();
        let p = predicted_eigenvalues(&c, &ch, Hypothesis::H1).unwrap();
        let expect = c.signal_var() * ch.h2.norm_squared() / 4.0 + c.noise_var();
        assert!((p[1] - expect).abs() < 1e-15 * expect.max(1.0));
        let mut ook = c.clone();
        ook.idask = IdaskRatio::integer(1).unwrap();
        let p = predicted_eigenvalues(&ook, &ch, Hypothesis::H1).unwrap();
        assert_eq!(p[1], ook.noise_var());
        let p0 = predicted_eigenvalues(&c, &ch, Hypothesis::H0).unwrap();
        assert!(p0[1..].iter().all(|&v| v == c.noise_var()));
    }

    #[test]
    fn h0_spectrum_has_flat_noise_floor() {
        let c = cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ch = generate_channels(&c, &mut rng).unwrap();
        let r0 = theoretical_covariance(&c, &ch, Hypothesis::H0).unwrap();
        let spec = eigen_spectrum(&r0.r).unwrap();
        let noise = c.noise_var();
        for v in &spec.values[1..] {
            assert!((v - noise).abs() <= 1e-8 * noise, "{v} vs {noise}");
        }
    }

    #[test]
    fn energy_split_peaks_at_two() {
        let mut best = (IdaskRatio::integer(1).unwrap(), f64::MIN);
        for den in 1..=40 {
            for num in den..=16 * den {
                let k = IdaskRatio::new(num, den).unwrap();
                let split = k.energy_split();
                assert!(split <= 0.25 + 1e-15);
                if split > best.1 {
                    best = (k, split);
                }
            }
        }
        assert_eq!(best.0, IdaskRatio::integer(2).unwrap());
        assert_eq!(best.1, 0.25);
    }

    #[test]
    fn predicted_spectrum_tracks_exact_at_low_delta_gamma() {
        // Δγ = -30 dB, γ = 40 dB, M = 5. λ₁ and the noise floor follow the
        // prediction entrywise; λ₂ is governed by the part of h₂ orthogonal to h₁,
        // which the prediction replaces by ‖h₂‖².
        let mut c = cfg();
        c.gamma_db = 40.0;
        c.delta_gamma_db = -30.0;
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..100 {
            let ch = generate_channels(&c, &mut rng).unwrap();
            let r1 = theoretical_covariance(&c, &ch, Hypothesis::H1).unwrap();
            let exact = eigen_spectrum(&r1.r).unwrap();
            let pred = predicted_eigenvalues(&c, &ch, Hypothesis::H1).unwrap();
            for i in [0, 2, 3, 4] {
                let rel = (exact.values[i] - pred[i]).abs() / exact.values[i];
                assert!(rel < 0.05, "λ{} rel error {rel}", i + 1);
            }
            let along = ch.h1.dotc(&ch.h2) / ch.h1.norm_squared();
            let orth = &ch.h2 - &ch.h1 * along;
            let projected = c.signal_var() * c.idask.energy_split() * orth.norm_squared() + c.noise_var();
            let rel = (exact.values[1] - projected).abs() / exact.values[1];
            assert!(rel < 0.05, "λ₂ vs projected prediction: {rel}");
            assert!(exact.values[1] <= pred[1] * 1.05);
        }
    }
}
