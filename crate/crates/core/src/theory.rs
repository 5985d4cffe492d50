//! Closed-form performance predictions for the SE detector.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::model::SystemConfig;
use crate::quadrature::integrate;
use crate::tracy_widom::{centering_constants, tw2_sf, Tw2Table};
use crate::{Error, Result};

/// Beyond this magnitude the Gaussian tail is evaluated in the log domain.
const TAIL_SWITCH: f64 = 8.0;

/// Natural log of the Gaussian tail `Q(x)`.
pub fn log_q(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > TAIL_SWITCH {
        // Q(x) = φ(x)/x · (1 - 1/x² + 3/x⁴ - 15/x⁶ + ...)
        let inv2 = 1.0 / (x * x);
        let mut term = 1.0;
        let mut series = 1.0;
        for n in 1..40 {
            let next = -term * (2 * n - 1) as f64 * inv2;
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            series += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        -0.5 * x * x - (x * (2.0 * PI).sqrt()).ln() + series.ln()
    } else if x < -TAIL_SWITCH {
        (-q_function(-x)).ln_1p()
    } else {
        q_function(x).ln()
    }
}

/// Gaussian tail probability `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    if x > TAIL_SWITCH {
        log_q(x).exp()
    } else if x < -TAIL_SWITCH {
        1.0 - log_q(-x).exp()
    } else {
        0.5 * libm::erfc(x / SQRT_2)
    }
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    q_function(-x)
}

/// False-alarm probability of the SE detector at threshold `eta`.
pub fn pfa_analytic(eta: f64, antennas: usize, frame_len: usize) -> Result<f64> {
    let c = centering_constants(antennas, frame_len)?;
    Ok(tw2_sf((eta - c.mu) / c.sigma))
}

/// Gaussian approximation of `λ₂/σ_n²` when the reflected path carries
/// effective SNR `backscatter_snr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn second_eigenvalue_moments(backscatter_snr: f64, antennas: usize, frame_len: usize) -> Result<GaussianMoments> {
    if !(backscatter_snr > 0.0) || !backscatter_snr.is_finite() {
        return Err(Error::Domain(format!("backscatter SNR must be positive, got {backscatter_snr}")));
    }
    if antennas < 2 || frame_len == 0 {
        return Err(Error::Domain(format!("need M >= 2 and 2N >= 1 (got {antennas}, {frame_len})")));
    }
    Ok(moments_unchecked(backscatter_snr, antennas, frame_len))
}

fn moments_unchecked(g: f64, antennas: usize, frame_len: usize) -> GaussianMoments {
    let l = frame_len as f64;
    let extra = (antennas - 2) as f64;
    GaussianMoments {
        mean: (1.0 + g) * (1.0 + extra / (l * g)),
        variance: (1.0 + g).powi(2) / l,
    }
}

fn pmd_unchecked(eta: f64, g: f64, antennas: usize, frame_len: usize) -> f64 {
    let m = moments_unchecked(g, antennas, frame_len);
    phi((eta - m.mean) / m.variance.sqrt())
}

/// Missed-detection probability for a fixed backscatter SNR.
pub fn pmd_conditional(eta: f64, backscatter_snr: f64, antennas: usize, frame_len: usize) -> Result<f64> {
    second_eigenvalue_moments(backscatter_snr, antennas, frame_len)?;
    Ok(pmd_unchecked(eta, backscatter_snr, antennas, frame_len))
}

/// Gamma law of the backscatter SNR under Rayleigh fading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gamma1Model {
    pub shape: f64,
    pub scale: f64,
}

impl Gamma1Model {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::Domain(format!(
                "Gamma model needs positive finite shape and scale, got ({shape}, {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    /// Shape `M`, scale `Δγ·K·γ`.
    pub fn from_config(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.idask.value() <= 1.0 {
            return Err(Error::Domain("k = 1 puts no energy on the second eigenvalue".into()));
        }
        let scale = cfg.delta_gamma() * cfg.idask.energy_split() * cfg.gamma();
        Self::new(cfg.antennas as f64, scale)
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn std_dev(&self) -> f64 {
        self.shape.sqrt() * self.scale
    }
}

pub fn gamma1_pdf(model: &Gamma1Model, x: f64) -> f64 {
    if x < 0.0 || x.is_nan() {
        return 0.0;
    }
    let Gamma1Model { shape, scale } = *model;
    if x == 0.0 {
        return match shape.partial_cmp(&1.0) {
            Some(std::cmp::Ordering::Less) => f64::INFINITY,
            Some(std::cmp::Ordering::Equal) => 1.0 / scale,
            _ => 0.0,
        };
    }
    ((shape - 1.0) * x.ln() - x / scale - libm::lgamma(shape) - shape * scale.ln()).exp()
}

/// Average of the conditional missed-detection probability over an arbitrary
/// density supported on `[0, upper]`.
pub fn pmd_average_with<D: Fn(f64) -> f64>(
    eta: f64,
    antennas: usize,
    frame_len: usize,
    density: D,
    upper: f64,
) -> Result<f64> {
    if antennas < 2 || frame_len == 0 {
        return Err(Error::Domain(format!("need M >= 2 and 2N >= 1 (got {antennas}, {frame_len})")));
    }
    if !(upper > 0.0 && upper.is_finite()) {
        return Err(Error::Domain(format!("integration upper bound {upper} must be positive")));
    }
    let r = integrate(
        |x| {
            if x <= 0.0 {
                0.0
            } else {
                pmd_unchecked(eta, x, antennas, frame_len) * density(x)
            }
        },
        0.0,
        upper,
        1e-10,
        1e-6,
    )?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// Missed-detection probability averaged over the Gamma backscatter SNR.
pub fn pmd_average(eta: f64, cfg: &SystemConfig) -> Result<f64> {
    let model = Gamma1Model::from_config(cfg)?;
    pmd_average_model(eta, cfg.antennas, cfg.frame_len(), &model)
}

pub fn pmd_average_model(eta: f64, antennas: usize, frame_len: usize, model: &Gamma1Model) -> Result<f64> {
    let upper = model.mean() + 12.0 * model.std_dev();
    pmd_average_with(eta, antennas, frame_len, |x| gamma1_pdf(model, x), upper)
}

/// `(P_fa + P̄_md)/2`; defined for equal priors only.
pub fn ber_analytic(eta: f64, cfg: &SystemConfig) -> Result<f64> {
    if cfg.prior_c1 != 0.5 {
        return Err(Error::Unsupported(format!(
            "analytic BER assumes equal priors, got prior_c1 = {}",
            cfg.prior_c1
        )));
    }
    let pfa = pfa_analytic(eta, cfg.antennas, cfg.frame_len())?;
    let pmd = pmd_average(eta, cfg)?;
    Ok(0.5 * (pfa + pmd))
}

/// Total-variation lower bound on the BER of any detector working from the
/// sample covariance with `frame_len` samples.
pub fn ber_lower_bound(frame_len: usize) -> Result<f64> {
    if frame_len == 0 {
        return Err(Error::Domain("frame length must be at least 1".into()));
    }
    Ok(0.5 * q_function((frame_len as f64).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformancePoint {
    pub gamma_db: f64,
    pub eta: f64,
    pub pfa: f64,
    pub pmd: f64,
    pub ber: f64,
}

pub fn performance_point(cfg: &SystemConfig, eta: f64) -> Result<PerformancePoint> {
    let pfa = pfa_analytic(eta, cfg.antennas, cfg.frame_len())?;
    let pmd = pmd_average(eta, cfg)?;
    let ber = ber_analytic(eta, cfg)?;
    Ok(PerformancePoint {
        gamma_db: cfg.gamma_db,
        eta,
        pfa,
        pmd,
        ber,
    })
}

/// Overlap between the Gaussian law of the strongest direct-path eigenvalue
/// and the Tracy-Widom law of the strongest noise eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectOverlap {
    pub ovl: f64,
    /// `∫_a^∞ p_tw + ∫_{-∞}^a p_gauss`.
    pub bound: f64,
}

pub fn ovl_h0(a: f64, antennas: usize, frame_len: usize, direct_snr: f64) -> Result<DirectOverlap> {
    if !(a >= 0.0) {
        return Err(Error::Domain(format!("split point a = {a} must be non-negative")));
    }
    let c = centering_constants(antennas, frame_len)?;
    let g = second_eigenvalue_moments(direct_snr, antennas, frame_len)?;
    let sd = g.variance.sqrt();
    let table = Tw2Table::standard();
    let tw_pdf = |x: f64| table.density((x - c.mu) / c.sigma) / c.sigma;
    let gauss_pdf = |x: f64| (-0.5 * ((x - g.mean) / sd).powi(2)).exp() / (sd * (2.0 * PI).sqrt());
    let lo = c.mu - 12.0 * c.sigma;
    let hi = c.mu + 10.0 * c.sigma;
    let ovl = integrate(|x| tw_pdf(x).min(gauss_pdf(x)), lo, hi, 1e-12, 1e-8)?.value;
    let bound = table.sf((a - c.mu) / c.sigma) + phi((a - g.mean) / sd);
    Ok(DirectOverlap { ovl, bound })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectedOverlap {
    /// Closed form in the two channel energies.
    pub exact: f64,
    /// Small-`Δγ` simplification depending on the direct energy only.
    pub simplified: f64,
}

pub fn ovl_h1(
    antennas: usize,
    frame_len: usize,
    gamma: f64,
    direct_energy: f64,
    cascaded_energy: f64,
    energy_split: f64,
) -> Result<ReflectedOverlap> {
    for (name, v) in [
        ("gamma", gamma),
        ("direct energy", direct_energy),
        ("cascaded energy", cascaded_energy),
        ("energy split", energy_split),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} must be positive, got {v}")));
        }
    }
    if antennas < 2 || frame_len == 0 {
        return Err(Error::Domain(format!("need M >= 2 and 2N >= 1 (got {antennas}, {frame_len})")));
    }
    let root = (frame_len as f64).sqrt();
    let extra = (antennas - 2) as f64;
    let reflected = energy_split * cascaded_energy;
    let lead = root * gamma - extra / (root * gamma * direct_energy * reflected);
    let exact = q_function(lead * (direct_energy - reflected).abs() / ((direct_energy + reflected) * gamma + 2.0));
    let simplified = q_function(root * gamma / (gamma + 2.0 / direct_energy));
    Ok(ReflectedOverlap { exact, simplified })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IdaskRatio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Gamma};

    #[test]
    fn q_reference_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((q_function(-2.0) - 0.977_249_868_051_820_8).abs() < 1e-15);
        assert!((phi(-10.0) / 7.619_853_024_160_527e-24 - 1.0).abs() < 1e-12);
        assert!((q_function(20.0) / 2.753_624_118_606_233_7e-89 - 1.0).abs() < 1e-12);
        assert!(q_function(37.0) > 0.0);
        assert_eq!(q_function(-40.0), 1.0);
    }

    #[test]
    fn tail_formula_agrees_with_erfc() {
        let mut x = 8.0;
        while x < 26.0 {
            let direct = 0.5 * libm::erfc(x / SQRT_2);
            assert!((q_function(x) / direct - 1.0).abs() < 1e-12, "x={x}");
            assert!((log_q(x) - direct.ln()).abs() < 1e-12);
            x += 0.173;
        }
        let below = q_function(TAIL_SWITCH - 1e-12);
        let above = q_function(TAIL_SWITCH + 1e-12);
        assert!((below / above - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lower_bound_examples() {
        assert!((ber_lower_bound(4).unwrap() - 0.011_375_065_974_089_608).abs() < 1e-12);
        let b = ber_lower_bound(100).unwrap();
        assert!((b / (7.619_853_024_160_527e-24 / 2.0) - 1.0).abs() < 1e-10);
        let mut prev = 1.0;
        for len in [2, 10, 100, 1000] {
            let b = ber_lower_bound(len).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(ber_lower_bound(0).is_err());
    }

    #[test]
    fn pfa_centered_and_round_trip() {
        let c = centering_constants(5, 100).unwrap();
        let p = pfa_analytic(c.mu, 5, 100).unwrap();
        assert!((p - tw2_sf(0.0)).abs() < 1e-15);
        let mut p = 1e-4;
        while p < 1.0 - 1e-4 {
            let eta = crate::detectors::threshold_for_pfa(p, 5, 100).unwrap();
            assert!((pfa_analytic(eta, 5, 100).unwrap() - p).abs() < 1e-6, "p={p}");
            p *= 1.37;
        }
    }

    #[test]
    fn pfa_surface_trends() {
        for eta in [1.5524, 1.962] {
            for m in [5, 10, 20, 30] {
                let mut prev = 1.0;
                for n in [50, 100, 200, 300] {
                    let p = pfa_analytic(eta, m, 2 * n).unwrap();
                    assert!(p <= prev, "eta={eta} M={m} N={n}");
                    prev = p;
                }
            }
            let low = pfa_analytic(1.5524, 10, 200).unwrap();
            let high = pfa_analytic(1.962, 10, 200).unwrap();
            assert!(high < low);
        }
    }

    #[test]
    fn pmd_conditional_limits() {
        let big = pmd_conditional(1.7, 1e9, 5, 100).unwrap();
        assert!((big - phi(-10.0)).abs() < 1e-6);
        let m = second_eigenvalue_moments(10.0, 5, 100).unwrap();
        assert!((pmd_conditional(m.mean, 10.0, 5, 100).unwrap() - 0.5).abs() < 1e-15);
        assert!(pmd_conditional(1.7, 0.0, 5, 100).is_err());
        assert!(pmd_conditional(1.7, -1.0, 5, 100).is_err());
    }

    #[test]
    fn pmd_conditional_decreases_in_snr() {
        let mut eta = 1.2;
        while eta <= 3.0 {
            let mut prev = 1.0;
            let mut g = 0.5;
            while g <= 100.0 {
                let p = pmd_conditional(eta, g, 5, 100).unwrap();
                assert!(p <= prev + 1e-15, "eta={eta} g={g}");
                prev = p;
                g *= 1.1;
            }
            eta += 0.1;
        }
    }

    #[test]
    fn moments_examples() {
        let m = second_eigenvalue_moments(1.0, 2, 100).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.variance - 4.0 / 100.0).abs() < 1e-15);
        let far = second_eigenvalue_moments(3.0, 5, 1_000_000).unwrap();
        assert!(far.variance < 1e-4);
    }

    #[test]
    fn gamma_density_basics() {
        let model = Gamma1Model::new(5.0, 0.01 * 0.25 * 1000.0).unwrap();
        assert!((model.mean() - 12.5).abs() < 1e-12);
        let mass = integrate(|x| gamma1_pdf(&model, x), 0.0, 200.0, 1e-12, 1e-10).unwrap().value;
        assert!((mass - 1.0).abs() < 1e-6);
        let mean = integrate(|x| x * gamma1_pdf(&model, x), 0.0, 200.0, 1e-12, 1e-10).unwrap().value;
        assert!((mean - 12.5).abs() < 1e-6);
        assert_eq!(gamma1_pdf(&model, -1.0), 0.0);
        let exp = Gamma1Model::new(1.0, 2.0).unwrap();
        for x in [0.0, 0.3, 4.0] {
            assert!((gamma1_pdf(&exp, x) - (-x / 2.0).exp() / 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gamma_density_matches_samples() {
        let model = Gamma1Model::new(5.0, 2.5).unwrap();
        let sampler = Gamma::new(5.0, 2.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut xs: Vec<f64> = (0..100_000).map(|_| sampler.sample(&mut rng)).collect();
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate().step_by(97) {
            let cdf = integrate(|t| gamma1_pdf(&model, t), 0.0, x, 1e-13, 1e-11).unwrap().value;
            ks = ks.max((cdf - i as f64 / n).abs()).max((cdf - (i + 1) as f64 / n).abs());
        }
        assert!(ks <= 0.01, "KS {ks}");
    }

    fn fig5(gamma_db: f64) -> SystemConfig {
        SystemConfig {
            antennas: 5,
            half_len: 50,
            gamma_db,
            delta_gamma_db: -30.0,
            ..SystemConfig::default()
        }
    }

    #[test]
    fn average_reduces_to_point_mass() {
        let (eta, g) = (1.7, 10.0);
        let shape = 1e6;
        let model = Gamma1Model::new(shape, g / shape).unwrap();
        let avg = pmd_average_model(eta, 5, 100, &model).unwrap();
        let point = pmd_conditional(eta, g, 5, 100).unwrap();
        assert!((avg - point).abs() < 1e-3, "{avg} vs {point}");
    }

    #[test]
    fn average_matches_sampled_snr() {
        let cfg = fig5(30.0);
        let eta = crate::detectors::threshold_for_pfa(1e-2, 5, 100).unwrap();
        let model = Gamma1Model::from_config(&cfg).unwrap();
        let sampler = Gamma::new(model.shape, model.scale).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 1_000_000;
        let mc: f64 = (0..draws)
            .map(|_| pmd_unchecked(eta, sampler.sample(&mut rng), 5, 100))
            .sum::<f64>()
            / draws as f64;
        let quad = pmd_average(eta, &cfg).unwrap();
        assert!((quad - mc).abs() < 1e-3, "{quad} vs {mc}");
    }

    #[test]
    fn average_decreases_with_snr() {
        let eta = crate::detectors::threshold_for_pfa(1e-2, 5, 100).unwrap();
        let values: Vec<f64> = [25.0, 30.0, 35.0, 40.0]
            .iter()
            .map(|&g| pmd_average(eta, &fig5(g)).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    }

    #[test]
    fn average_minimal_at_two() {
        let eta = crate::detectors::threshold_for_pfa(1e-2, 5, 160).unwrap();
        let ks = [(8, 7), (4, 3), (2, 1), (4, 1), (8, 1), (16, 1)];
        let mut results = Vec::new();
        for (num, den) in ks {
            let cfg = SystemConfig {
                half_len: 80,
                gamma_db: 35.0,
                delta_gamma_db: -30.0,
                idask: IdaskRatio::new(num, den).unwrap(),
                ..SystemConfig::default()
            };
            results.push(pmd_average(eta, &cfg).unwrap());
        }
        let best = results.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(best, results[2], "{results:?}");
        assert!(Gamma1Model::from_config(&SystemConfig {
            idask: IdaskRatio::integer(1).unwrap(),
            ..SystemConfig::default()
        })
        .is_err());
    }

    #[test]
    fn ber_limits_and_priors() {
        let cfg = fig5(30.0);
        assert!((ber_analytic(1e6, &cfg).unwrap() - 0.5).abs() < 1e-9);
        assert!((ber_analytic(-1e6, &cfg).unwrap() - 0.5).abs() < 1e-9);
        let skew = SystemConfig { prior_c1: 0.3, ..cfg };
        assert!(matches!(ber_analytic(1.5, &skew), Err(Error::Unsupported(_))));
    }

    #[test]
    fn ber_floor_at_high_snr() {
        for pfa in [0.1, 0.01] {
            let m = 20;
            let cfg = SystemConfig {
                antennas: m,
                half_len: 5 * m,
                gamma_db: 50.0,
                delta_gamma_db: -20.0,
                ..SystemConfig::default()
            };
            let eta = crate::detectors::threshold_for_pfa(pfa, m, cfg.frame_len()).unwrap();
            let ber = ber_analytic(eta, &cfg).unwrap();
            assert!((ber / (pfa / 2.0) - 1.0).abs() < 0.05, "pfa={pfa}: {ber}");
        }
    }

    #[test]
    fn direct_overlap() {
        let o = ovl_h0(5.0, 5, 100, 1e4).unwrap();
        assert!(o.bound <= 1e-3);
        assert!(o.ovl <= o.bound);
        let mut prev = f64::INFINITY;
        for len in [100, 1000, 10_000] {
            let o = ovl_h0(5.0, 5, len, 1e6).unwrap();
            assert!(o.ovl <= prev + 1e-12 && o.ovl <= o.bound + 1e-12);
            prev = o.ovl;
        }
        for a in [0.0, 1.0, 2.0, 3.0, 5.0, 10.0] {
            let o = ovl_h0(a, 5, 100, 3.0).unwrap();
            assert!(o.ovl <= o.bound + 1e-9, "a={a}: {o:?}");
        }
        assert!(ovl_h0(-1.0, 5, 100, 3.0).is_err());
    }

    #[test]
    fn reflected_overlap() {
        let gamma = 10f64.powf(3.5);
        let r = ovl_h1(5, 100, gamma, 4.0, 4.0 * 1e-3, 0.25).unwrap();
        assert!((r.exact - r.simplified).abs() <= 0.05);
        let tie = ovl_h1(5, 100, gamma, 1.0, 4.0, 0.25).unwrap();
        assert_eq!(tie.exact, 0.5);
        let mut prev = (1.0, 1.0);
        for len in [10, 100, 1000, 10_000] {
            let r = ovl_h1(5, len, 2.0, 1.0, 0.5, 0.25).unwrap();
            assert!(r.exact <= prev.0 && r.simplified <= prev.1);
            prev = (r.exact, r.simplified);
        }
        assert!(prev.0 < 1e-6 && prev.1 < 1e-6);
        assert!(ovl_h1(5, 100, 0.0, 1.0, 1.0, 0.25).is_err());
    }
}
