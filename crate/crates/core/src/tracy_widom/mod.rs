//! GUE Tracy-Widom distribution and the edge centering used by the
//! eigenvalue detector.
//!
//! The CDF is the Fredholm determinant of the Airy kernel, evaluated with
//! Gauss-Legendre quadrature on a fixed grid and interpolated by a monotone
//! cubic Hermite spline. Beyond the grid the leading-order tail asymptotics
//! take over, scaled to agree with the grid endpoints.

mod airy;

use std::io::{self, Write};
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::quadrature::{gauss_legendre, integrate};
use crate::{Error, Result};

pub use airy::airy_ai;

/// Upper end of the truncated integration range for the Airy kernel.
const KERNEL_CUTOFF: f64 = 16.0;
const DEFAULT_NODES: usize = 120;

pub const GRID_START: f64 = -8.0;
pub const GRID_END: f64 = 6.0;
pub const GRID_STEP: f64 = 0.02;

/// `F_2(s) = det(I - K_Ai)` on `L^2(s, inf)`, computed directly with `nodes`
/// quadrature points.
pub fn fredholm_cdf(s: f64, nodes: usize) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::Domain(format!("Fredholm evaluation point must be finite, got {s}")));
    }
    if nodes == 0 {
        return Err(Error::Domain("at least one quadrature node is required".into()));
    }
    if s >= KERNEL_CUTOFF {
        return Ok(1.0);
    }
    let (x, w) = gauss_legendre(nodes);
    let half = 0.5 * (KERNEL_CUTOFF - s);
    let mid = 0.5 * (KERNEL_CUTOFF + s);
    let pts: Vec<f64> = x.iter().map(|xi| mid + half * xi).collect();
    let sw: Vec<f64> = w.iter().map(|wi| (wi * half).sqrt()).collect();
    let ai: Vec<(f64, f64)> = pts.iter().map(|&p| airy_ai(p)).collect();
    let mut m = DMatrix::<f64>::zeros(nodes, nodes);
    for i in 0..nodes {
        for j in 0..nodes {
            let k = if i == j {
                ai[i].1 * ai[i].1 - pts[i] * ai[i].0 * ai[i].0
            } else {
                (ai[i].0 * ai[j].1 - ai[i].1 * ai[j].0) / (pts[i] - pts[j])
            };
            m[(i, j)] = -sw[i] * k * sw[j];
        }
        m[(i, i)] += 1.0;
    }
    let det = m.lu().determinant();
    if !det.is_finite() {
        return Err(Error::Numerical(format!("Fredholm determinant at s={s} is not finite")));
    }
    Ok(det.clamp(0.0, 1.0))
}

/// Tabulated GUE Tracy-Widom CDF.
#[derive(Debug, Clone)]
pub struct Tw2Table {
    start: f64,
    step: f64,
    cdf: Vec<f64>,
    slope: Vec<f64>,
    left_scale: f64,
    right_scale: f64,
}

impl Tw2Table {
    /// The shared table on `[GRID_START, GRID_END]`, built on first use.
    pub fn standard() -> &'static Tw2Table {
        static TABLE: OnceLock<Tw2Table> = OnceLock::new();
        TABLE.get_or_init(|| {
            Tw2Table::compute(GRID_START, GRID_END, GRID_STEP, DEFAULT_NODES)
                .expect("standard Tracy-Widom table parameters are valid")
        })
    }

    pub fn compute(start: f64, end: f64, step: f64, nodes: usize) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && step > 0.0 && end > start) {
            return Err(Error::Domain(format!("invalid table grid [{start}, {end}] step {step}")));
        }
        if start > -3.0 || end < 3.0 {
            return Err(Error::Domain("table grid must cover [-3, 3]".into()));
        }
        let count = ((end - start) / step).round() as usize + 1;
        let mut cdf = Vec::with_capacity(count);
        for i in 0..count {
            cdf.push(fredholm_cdf(start + i as f64 * step, nodes)?);
        }
        // Rounding can produce tiny non-monotone wiggles where F is flat.
        for i in 1..count {
            if cdf[i] < cdf[i - 1] {
                cdf[i] = cdf[i - 1];
            }
        }
        let slope = hermite_slopes(&cdf, step);
        let end = start + (count - 1) as f64 * step;
        let left_scale = cdf[0] / left_tail_shape(start);
        let right_scale = (1.0 - cdf[count - 1]) / right_tail_shape(end);
        Ok(Self {
            start,
            step,
            cdf,
            slope,
            left_scale,
            right_scale,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + (self.cdf.len() - 1) as f64 * self.step
    }

    /// Grid abscissae and CDF values.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.cdf
            .iter()
            .enumerate()
            .map(move |(i, &f)| (self.start + i as f64 * self.step, f))
    }

    pub fn cdf(&self, s: f64) -> f64 {
        if s.is_nan() {
            return f64::NAN;
        }
        if s <= self.start {
            return self.left_scale * left_tail_shape(s);
        }
        if s >= self.end() {
            return 1.0 - self.right_scale * right_tail_shape(s);
        }
        let (i, t) = self.locate(s);
        let h = self.step;
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * f0
            + (t3 - 2.0 * t2 + t) * d0
            + (-2.0 * t3 + 3.0 * t2) * f1
            + (t3 - t2) * d1;
        v.clamp(f0.min(f1), f0.max(f1))
    }

    /// Survival function `1 - F(s)`.
    pub fn sf(&self, s: f64) -> f64 {
        if s >= self.end() {
            return self.right_scale * right_tail_shape(s);
        }
        1.0 - self.cdf(s)
    }

    pub fn density(&self, s: f64) -> f64 {
        if s.is_nan() {
            return f64::NAN;
        }
        if s <= self.start {
            let a = -s;
            return self.cdf(s) * (a * a / 4.0 + 1.0 / (8.0 * a));
        }
        if s >= self.end() {
            return self.right_scale * right_tail_shape(s) * (2.0 * s.sqrt() + 1.5 / s);
        }
        let (i, t) = self.locate(s);
        let h = self.step;
        let (f0, f1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let v = (6.0 * t2 - 6.0 * t) * f0
            + (3.0 * t2 - 4.0 * t + 1.0) * d0
            + (-6.0 * t2 + 6.0 * t) * f1
            + (3.0 * t2 - 2.0 * t) * d1;
        (v / h).max(0.0)
    }

    /// Inverse CDF. `p` must lie strictly inside (0, 1).
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Domain(format!("quantile probability must be in (0, 1), got {p}")));
        }
        if p > 0.5 {
            self.solve(1.0 - p, true)
        } else {
            self.solve(p, false)
        }
    }

    /// Inverse survival function: the `s` with `1 - F(s) = q`.
    pub fn isf(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("tail probability must be in (0, 1), got {q}")));
        }
        if q < 0.5 {
            self.solve(q, true)
        } else {
            self.solve(1.0 - q, false)
        }
    }

    // Bisection on whichever tail keeps `target` at full resolution.
    fn solve(&self, target: f64, upper: bool) -> Result<f64> {
        let (mut lo, mut hi) = (-40.0_f64, 40.0_f64);
        let reachable = if upper { self.sf(hi) <= target } else { self.cdf(lo) <= target };
        if !reachable {
            return Err(Error::Numerical(format!(
                "tail probability {target:e} lies beyond the representable range"
            )));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let below = if upper { self.sf(mid) > target } else { self.cdf(mid) < target };
            if below {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * (1.0 + mid.abs()) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Mean and variance from the tabulated CDF.
    pub fn moments(&self) -> Result<(f64, f64)> {
        let (lo, hi) = (-14.0, 12.0);
        let neg = integrate(|s| self.cdf(s), lo, 0.0, 1e-12, 1e-12)?.value;
        let pos = integrate(|s| self.sf(s), 0.0, hi, 1e-12, 1e-12)?.value;
        let neg2 = integrate(|s| s * self.cdf(s), lo, 0.0, 1e-12, 1e-12)?.value;
        let pos2 = integrate(|s| s * self.sf(s), 0.0, hi, 1e-12, 1e-12)?.value;
        let mean = pos - neg;
        let second = 2.0 * pos2 - 2.0 * neg2;
        Ok((mean, second - mean * mean))
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "s,F")?;
        for (s, f) in self.points() {
            writeln!(out, "{s:.4},{f:.17e}")?;
        }
        Ok(())
    }

    fn locate(&self, s: f64) -> (usize, f64) {
        let pos = (s - self.start) / self.step;
        let i = (pos.floor() as usize).min(self.cdf.len() - 2);
        (i, pos - i as f64)
    }
}

fn left_tail_shape(s: f64) -> f64 {
    let a = -s;
    (-a * a * a / 12.0).exp() * a.powf(-0.125)
}

fn right_tail_shape(s: f64) -> f64 {
    let p = s.powf(1.5);
    (-4.0 / 3.0 * p).exp() / p
}

/// Fourth-order central-difference slopes, limited so the cubic Hermite
/// interpolant stays monotone.
fn hermite_slopes(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![0.0; n];
    for i in 0..n {
        d[i] = if i >= 2 && i + 2 < n {
            (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h)
        } else if i == 0 {
            (f[1] - f[0]) / h
        } else if i == n - 1 {
            (f[n - 1] - f[n - 2]) / h
        } else {
            (f[i + 1] - f[i - 1]) / (2.0 * h)
        };
        d[i] = d[i].max(0.0);
    }
    for i in 0..n - 1 {
        let delta = (f[i + 1] - f[i]) / h;
        if delta == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        let a = d[i] / delta;
        let b = d[i + 1] / delta;
        let r = a * a + b * b;
        if r > 9.0 {
            let tau = 3.0 / r.sqrt();
            d[i] = tau * a * delta;
            d[i + 1] = tau * b * delta;
        }
    }
    d
}

/// Shared table lookup for `F_2(s)`.
pub fn tw2_cdf(s: f64) -> f64 {
    Tw2Table::standard().cdf(s)
}

/// Shared table lookup for `1 - F_2(s)`.
pub fn tw2_sf(s: f64) -> f64 {
    Tw2Table::standard().sf(s)
}

pub fn tw2_quantile(p: f64) -> Result<f64> {
    Tw2Table::standard().quantile(p)
}

/// Inverse of [`tw2_sf`].
pub fn tw2_isf(q: f64) -> Result<f64> {
    Tw2Table::standard().isf(q)
}

/// Centering and scaling of the normalized largest sample eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Centering {
    pub mu: f64,
    pub sigma: f64,
}

/// Edge constants for `antennas` dimensions and `frame_len` samples.
pub fn centering_constants(antennas: usize, frame_len: usize) -> Result<Centering> {
    if antennas < 2 || frame_len == 0 {
        return Err(Error::Domain(format!(
            "centering needs at least two antennas and one sample (got M={antennas}, L={frame_len})"
        )));
    }
    let l = frame_len as f64;
    let m1 = (antennas - 1) as f64;
    let ratio = (m1 / l).sqrt();
    let mu = (1.0 + ratio).powi(2);
    let sigma = (1.0 + ratio) / l.sqrt() * (1.0 / l.sqrt() + 1.0 / m1.sqrt()).cbrt();
    Ok(Centering { mu, sigma })
}
