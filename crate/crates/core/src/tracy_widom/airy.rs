//! Airy function Ai and its derivative.
//!
//! Large positive arguments use the asymptotic expansion. Everything else is
//! obtained from a cached grid of Taylor steps taken downward from the
//! asymptotic region, where the recessive solution stays well conditioned.

use std::f64::consts::PI;
use std::sync::OnceLock;

const ASYMPTOTIC_FROM: f64 = 12.0;
const GRID_TO: f64 = -16.0;
const GRID_STEP: f64 = 0.125;

/// Returns `(Ai(x), Ai'(x))`.
pub fn airy_ai(x: f64) -> (f64, f64) {
    if x.is_nan() {
        return (f64::NAN, f64::NAN);
    }
    if x >= ASYMPTOTIC_FROM {
        return asymptotic(x);
    }
    let grid = grid();
    if x < GRID_TO {
        let (mut ai, mut dai) = *grid.last().expect("grid is non-empty");
        let mut x0 = GRID_TO;
        while x0 > x {
            let h = (x - x0).max(-GRID_STEP);
            (ai, dai) = taylor_step(x0, ai, dai, h);
            x0 += h;
        }
        return (ai, dai);
    }
    let idx = ((ASYMPTOTIC_FROM - x) / GRID_STEP).round() as usize;
    let idx = idx.min(grid.len() - 1);
    let x0 = ASYMPTOTIC_FROM - idx as f64 * GRID_STEP;
    let (ai, dai) = grid[idx];
    taylor_step(x0, ai, dai, x - x0)
}

fn grid() -> &'static [(f64, f64)] {
    static GRID: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    GRID.get_or_init(|| {
        let steps = ((ASYMPTOTIC_FROM - GRID_TO) / GRID_STEP).round() as usize;
        let mut out = Vec::with_capacity(steps + 1);
        let mut state = asymptotic(ASYMPTOTIC_FROM);
        out.push(state);
        for i in 0..steps {
            let x0 = ASYMPTOTIC_FROM - i as f64 * GRID_STEP;
            state = taylor_step(x0, state.0, state.1, -GRID_STEP);
            out.push(state);
        }
        out
    })
}

/// Advances a solution of `y'' = x y` from `x0` to `x0 + h` by its Taylor series.
fn taylor_step(x0: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    if h == 0.0 {
        return (y, dy);
    }
    // a[n] is the n-th Taylor coefficient at x0.
    let mut a_prev2 = y; // a[n-2]
    let mut a_prev1 = dy; // a[n-1]
    let mut a_prev3 = 0.0; // a[n-3]
    let mut value = y + dy * h;
    let mut deriv = dy;
    let mut hp = h; // h^(n-1)
    let scale = y.abs() + dy.abs();
    let mut small = 0;
    for n in 2..200 {
        let nf = n as f64;
        let a_n = (x0 * a_prev2 + a_prev3) / (nf * (nf - 1.0));
        let term_d = nf * a_n * hp;
        hp *= h;
        let term = a_n * hp;
        value += term;
        deriv += term_d;
        if term.abs().max(term_d.abs()) <= 1e-18 * (value.abs() + deriv.abs()).max(1e-300 * scale) {
            small += 1;
            if small >= 3 {
                break;
            }
        } else {
            small = 0;
        }
        a_prev3 = a_prev2;
        a_prev2 = a_prev1;
        a_prev1 = a_n;
    }
    (value, deriv)
}

fn asymptotic(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let mut u = 1.0;
    let mut sum_u = 1.0;
    let mut sum_v = 1.0;
    let mut zpow = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zpow *= -zeta;
        let tu = u / zpow;
        let tv = v / zpow;
        if tu.abs() > last {
            break;
        }
        last = tu.abs();
        sum_u += tu;
        sum_v += tv;
        if tu.abs() < 1e-17 && tv.abs() < 1e-17 {
            break;
        }
    }
    let e = (-zeta).exp() / (2.0 * PI.sqrt());
    let q = x.powf(0.25);
    (e / q * sum_u, -e * q * sum_v)
}
