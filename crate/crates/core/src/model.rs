//! Scenario configuration and signal generation.
//!
//! A backscatter device (BD) symbol spans `2N` ambient samples. For bit `c = 1`
//! the device reflects only the trailing `2N/k` samples (IDASK); for `c = 0`
//! it never reflects. The `M`-antenna receiver observes
//!
//! ```text
//! y_n = h1 * s_n + b_n * h2 * s_n + u_n,   n = 1..2N
//! ```
//!
//! where `h1` is the direct channel, `h2` the cascaded backscatter channel,
//! `s_n` the ambient sample and `u_n` white Gaussian noise.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

/// Converts a decibel quantity to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Ambient waveform family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Modulation {
    Gaussian,
    Bpsk,
    Qpsk,
    Qam16,
}

impl Modulation {
    pub const ALL: [Modulation; 4] = [
        Modulation::Gaussian,
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Qam16,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Modulation::Gaussian => "GAUSSIAN",
            Modulation::Bpsk => "BPSK",
            Modulation::Qpsk => "QPSK",
            Modulation::Qam16 => "QAM16",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "GAUSSIAN" => Ok(Modulation::Gaussian),
            "BPSK" => Ok(Modulation::Bpsk),
            "QPSK" => Ok(Modulation::Qpsk),
            "QAM16" | "16QAM" | "16-QAM" => Ok(Modulation::Qam16),
            other => Err(Error::Config(format!("unknown modulation tag {other:?}"))),
        }
    }
}

/// The IDASK ratio parameter `k`, a positive rational (`8/7`, `4/3`, `2`, ...).
///
/// For `c = 1` a fraction `1/k` of the BD symbol is reflected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IdaskRatio {
    num: u64,
    den: u64,
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl IdaskRatio {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(Error::Config(format!("IDASK ratio {num}/{den} must be positive")));
        }
        let g = gcd(num, den);
        Ok(Self { num: num / g, den: den / g })
    }

    pub fn integer(k: u64) -> Result<Self> {
        Self::new(k, 1)
    }

    /// Recovers a ratio from a float by continued fractions (denominator ≤ 1000).
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x <= 0.0 {
            return Err(Error::Config(format!("IDASK ratio {x} must be positive and finite")));
        }
        let (mut h0, mut h1) = (0u64, 1u64);
        let (mut k0, mut k1) = (1u64, 0u64);
        let mut r = x;
        for _ in 0..32 {
            let a = r.floor();
            if a > 1e12 {
                break;
            }
            let a = a as u64;
            let h2 = a * h1 + h0;
            let k2 = a * k1 + k0;
            if k2 > 1000 {
                break;
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            if ((h1 as f64) / (k1 as f64) - x).abs() <= 1e-9 * x {
                return Self::new(h1, k1);
            }
            let frac = r - a as f64;
            if frac < 1e-15 {
                break;
            }
            r = 1.0 / frac;
        }
        if k1 > 0 && ((h1 as f64) / (k1 as f64) - x).abs() <= 1e-9 * x {
            Self::new(h1, k1)
        } else {
            Err(Error::Config(format!("IDASK ratio {x} is not a simple rational")))
        }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `1/k - 1/k²`, the share of backscatter energy that lands on the second eigenvalue.
    pub fn energy_split(&self) -> f64 {
        let inv = self.den as f64 / self.num as f64;
        inv - inv * inv
    }

    /// Number of reflected samples `2N/k` for a frame of `frame_len = 2N`, if integral.
    pub fn reflected_len(&self, frame_len: usize) -> Option<usize> {
        let scaled = (frame_len as u64).checked_mul(self.den)?;
        (scaled % self.num == 0).then(|| (scaled / self.num) as usize)
    }
}

impl fmt::Display for IdaskRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for IdaskRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse::<u64>();
            let den = b.trim().parse::<u64>();
            match (num, den) {
                (Ok(n), Ok(d)) => Self::new(n, d),
                _ => Err(Error::Config(format!("cannot parse IDASK ratio {s:?}"))),
            }
        } else {
            let x = s
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("cannot parse IDASK ratio {s:?}")))?;
            Self::from_f64(x)
        }
    }
}

impl Serialize for IdaskRatio {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.den == 1 {
            serializer.serialize_u64(self.num)
        } else {
            serializer.collect_str(self)
        }
    }
}

impl<'de> Deserialize<'de> for IdaskRatio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(u64),
            Float(f64),
            Text(String),
        }
        let parsed = match Repr::deserialize(deserializer)? {
            Repr::Int(k) => IdaskRatio::integer(k),
            Repr::Float(x) => IdaskRatio::from_f64(x),
            Repr::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// All scenario parameters of one simulated link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Receive antennas `M`.
    #[serde(rename = "m")]
    pub antennas: usize,
    /// Half-symbol length `N`; a BD symbol spans `2N` ambient samples.
    #[serde(rename = "n")]
    pub half_len: usize,
    /// IDASK ratio `k`.
    #[serde(rename = "k")]
    pub idask: IdaskRatio,
    /// Transmit SNR `σ_s²/σ_n²` in dB. `-inf` disables the ambient source.
    pub gamma_db: f64,
    /// Cascaded-to-direct average channel energy ratio in dB. `-inf` disables backscatter.
    pub delta_gamma_db: f64,
    pub noise_var_dbm: f64,
    pub modulation: Modulation,
    pub prior_c1: f64,
    /// Reference eigenvalue index `m` of the adaptive noise estimator (1-based).
    pub m_index: usize,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            antennas: 5,
            half_len: 50,
            idask: IdaskRatio { num: 2, den: 1 },
            gamma_db: 30.0,
            delta_gamma_db: -30.0,
            noise_var_dbm: -20.0,
            modulation: Modulation::Gaussian,
            prior_c1: 0.5,
            m_index: 3,
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// Checks every structural constraint of the scenario.
    pub fn validate(&self) -> Result<()> {
        if self.antennas < 2 {
            return Err(Error::Config(format!("M = {} but at least 2 antennas are required", self.antennas)));
        }
        if self.half_len < 1 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        let frame_len = self.frame_len();
        if self.idask.value() < 1.0 || self.idask.value() > frame_len as f64 {
            return Err(Error::Config(format!("k = {} must lie in [1, 2N = {frame_len}]", self.idask)));
        }
        if self.idask.reflected_len(frame_len).is_none() {
            return Err(Error::Config(format!("2N/k = {frame_len}/({}) is not an integer", self.idask)));
        }
        if self.gamma_db.is_nan() || self.gamma_db == f64::INFINITY {
            return Err(Error::Config(format!("gamma_db = {} is not usable", self.gamma_db)));
        }
        if self.delta_gamma_db.is_nan() || self.delta_gamma_db == f64::INFINITY {
            return Err(Error::Config(format!("delta_gamma_db = {} is not usable", self.delta_gamma_db)));
        }
        if !self.noise_var_dbm.is_finite() {
            return Err(Error::Config("noise_var_dbm must be finite".into()));
        }
        if !(0.0..=1.0).contains(&self.prior_c1) {
            return Err(Error::Config(format!("prior_c1 = {} is not a probability", self.prior_c1)));
        }
        if self.m_index < 3 || self.m_index > self.antennas.max(3) {
            return Err(Error::Config(format!(
                "m_index = {} must satisfy 3 <= m <= M = {}",
                self.m_index, self.antennas
            )));
        }
        Ok(())
    }

    /// Frame length `2N`.
    pub fn frame_len(&self) -> usize {
        2 * self.half_len
    }

    /// Number of reflected samples `2N/k` for `c = 1`.
    pub fn reflected_len(&self) -> usize {
        self.idask
            .reflected_len(self.frame_len())
            .expect("validated configuration has integral 2N/k")
    }

    pub fn noise_var(&self) -> f64 {
        db_to_linear(self.noise_var_dbm)
    }

    pub fn gamma(&self) -> f64 {
        db_to_linear(self.gamma_db)
    }

    /// Ambient signal power `σ_s² = γ σ_n²`.
    pub fn signal_var(&self) -> f64 {
        self.gamma() * self.noise_var()
    }

    pub fn delta_gamma(&self) -> f64 {
        db_to_linear(self.delta_gamma_db)
    }
}

/// One quasi-static draw of the direct and cascaded channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h1: DVector<Complex64>,
    pub h2: DVector<Complex64>,
}

impl ChannelRealization {
    pub fn new(h1: DVector<Complex64>, h2: DVector<Complex64>) -> Result<Self> {
        if h1.len() != h2.len() {
            return Err(Error::Config(format!(
                "channel lengths differ: h1 has {}, h2 has {}",
                h1.len(),
                h2.len()
            )));
        }
        if h1.iter().chain(h2.iter()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("channel coefficients must be finite".into()));
        }
        Ok(Self { h1, h2 })
    }

    pub fn antennas(&self) -> usize {
        self.h1.len()
    }
}

/// The reflection pattern `b_1..b_2N` of one BD symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateSequence {
    pub bits: Vec<bool>,
}

impl GateSequence {
    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// The `M x 2N` complex sample matrix of one BD symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    pub y: DMatrix<Complex64>,
    pub truth_bit: bool,
    pub channels: ChannelRealization,
}

impl ReceivedFrame {
    pub fn antennas(&self) -> usize {
        self.y.nrows()
    }

    pub fn frame_len(&self) -> usize {
        self.y.ncols()
    }
}

/// Draws a circularly-symmetric complex Gaussian sample with the given variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let scale = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(scale * re, scale * im)
}

/// Draws `h1 ~ CN(0, I_M)` and `h2 ~ CN(0, Δγ I_M)` independently.
///
/// The per-entry variances make `E‖h2‖² / E‖h1‖² = Δγ` with a 0 dB direct gain.
pub fn generate_channels<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelRealization> {
    cfg.validate()?;
    let m = cfg.antennas;
    let dg = cfg.delta_gamma();
    let h1 = DVector::from_fn(m, |_, _| complex_gaussian(rng, 1.0));
    let h2 = DVector::from_fn(m, |_, _| complex_gaussian(rng, 1.0) * dg.sqrt());
    Ok(ChannelRealization { h1, h2 })
}

const FRAC_1_SQRT_10: f64 = 0.316_227_766_016_837_94;

/// Draws `length` i.i.d. ambient samples with zero mean and variance `σ_s²`.
pub fn generate_ambient<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R, length: usize) -> Result<Vec<Complex64>> {
    if length == 0 {
        return Err(Error::Domain("ambient sequence length must be at least 1".into()));
    }
    let var = cfg.signal_var();
    let amp = var.sqrt();
    let samples = match cfg.modulation {
        Modulation::Gaussian => (0..length).map(|_| complex_gaussian(rng, var)).collect(),
        Modulation::Bpsk => (0..length)
            .map(|_| Complex64::new(if rng.random::<bool>() { amp } else { -amp }, 0.0))
            .collect(),
        Modulation::Qpsk => {
            let a = amp * std::f64::consts::FRAC_1_SQRT_2;
            (0..length)
                .map(|_| {
                    let re = if rng.random::<bool>() { a } else { -a };
                    let im = if rng.random::<bool>() { a } else { -a };
                    Complex64::new(re, im)
                })
                .collect()
        }
        Modulation::Qam16 => {
            const LEVELS: [f64; 4] = [-3.0, -1.0, 1.0, 3.0];
            let a = amp * FRAC_1_SQRT_10;
            (0..length)
                .map(|_| {
                    let re = LEVELS[rng.random_range(0..4)];
                    let im = LEVELS[rng.random_range(0..4)];
                    Complex64::new(a * re, a * im)
                })
                .collect()
        }
    };
    Ok(samples)
}

/// Reflection pattern for bit `c`: zeros, then `2N/k` trailing ones when `c = 1`.
pub fn idask_gate_sequence(cfg: &SystemConfig, c: bool) -> Result<GateSequence> {
    let frame_len = cfg.frame_len();
    let reflected = cfg.idask.reflected_len(frame_len).ok_or_else(|| {
        Error::Config(format!("2N/k = {frame_len}/({}) is not an integer", cfg.idask))
    })?;
    if reflected > frame_len || reflected == 0 {
        return Err(Error::Config(format!("k = {} must lie in [1, 2N = {frame_len}]", cfg.idask)));
    }
    let quiet = if c { frame_len - reflected } else { frame_len };
    let bits = (0..frame_len).map(|n| n >= quiet).collect();
    Ok(GateSequence { bits })
}

/// Synthesizes `Y` column by column: `y_n = (h1 + b_n h2) s_n + u_n`.
///
/// Draw order on `rng`: the `2N` ambient samples, then the noise matrix in
/// column-major order.
pub fn synthesize_frame<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    ch: &ChannelRealization,
    c: bool,
    rng: &mut R,
) -> Result<ReceivedFrame> {
    cfg.validate()?;
    let m = cfg.antennas;
    if ch.antennas() != m {
        return Err(Error::Config(format!(
            "channel has {} antennas but configuration has M = {m}",
            ch.antennas()
        )));
    }
    let gate = idask_gate_sequence(cfg, c)?;
    let frame_len = cfg.frame_len();
    let ambient = generate_ambient(cfg, rng, frame_len)?;
    let noise_var = cfg.noise_var();
    let reflected: DVector<Complex64> = &ch.h1 + &ch.h2;
    let mut y = DMatrix::<Complex64>::zeros(m, frame_len);
    for (n, mut col) in y.column_iter_mut().enumerate() {
        let s = ambient[n];
        let gain = if gate.bits[n] { &reflected } else { &ch.h1 };
        for i in 0..m {
            col[i] = gain[i] * s + complex_gaussian(rng, noise_var);
        }
    }
    Ok(ReceivedFrame {
        y,
        truth_bit: c,
        channels: ch.clone(),
    })
}
