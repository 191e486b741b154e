//! Adaptive Gauss-Kronrod quadrature of `exp(h(u))` for concave `h`.
//!
//! Integrals over `(0, inf)` are mapped to the real line with `t = e^u`. The
//! mode of `h` is located first, the range is cut where `h` has fallen by
//! [`TAIL_DROP`] below its peak, and each side of the mode is integrated
//! separately. Results are returned in the log domain.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Log-density drop at which the tails are truncated.
pub const TAIL_DROP: f64 = 60.0;

const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Target accuracy of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self { abs: 0.0, rel: 1e-12 }
    }
}

fn kronrod15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    (value, err)
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive G7-K15 integration of `f` over `[a, b]`, returning
/// `(estimate, error bound)`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: Tolerance) -> Result<(f64, f64)> {
    let (value, err) = kronrod15(&f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, err });
    let (mut total, mut total_err) = (value, err);
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { estimate: total, error_bound: total_err });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        let (lv, le) = kronrod15(&f, worst.a, mid);
        let (rv, re) = kronrod15(&f, mid, worst.b);
        total += lv + rv - worst.value;
        total_err += le + re - worst.err;
        heap.push(Piece { a: worst.a, b: mid, value: lv, err: le });
        heap.push(Piece { a: mid, b: worst.b, value: rv, err: re });
        // Guard against drift in the running sums.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    Ok((total, total_err))
}

/// Maximizer of a concave function on the real line.
fn concave_mode(h: &impl Fn(f64) -> f64) -> f64 {
    let mut step = 1.0;
    let (mut lo, mut hi) = (-step, step);
    let h0 = h(0.0);
    // Expand until the peak is bracketed by [lo, hi].
    if h(hi) > h0 {
        lo = 0.0;
        while h(hi + step) > h(hi) {
            lo = hi;
            hi += step;
            step *= 2.0;
        }
        hi += step;
    } else if h(lo) > h0 {
        hi = 0.0;
        while h(lo - step) > h(lo) {
            hi = lo;
            lo -= step;
            step *= 2.0;
        }
        lo -= step;
    }
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (h(a), h(b));
    while hi - lo > 1e-9 * (1.0 + lo.abs().max(hi.abs())) {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = h(b);
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = h(a);
        }
    }
    0.5 * (lo + hi)
}

/// Point on one side of the mode where `h` has dropped by [`TAIL_DROP`].
fn tail_cut(h: &impl Fn(f64) -> f64, mode: f64, peak: f64, direction: f64) -> f64 {
    let mut step = 1.0;
    let mut u = mode + direction * step;
    while h(u) > peak - TAIL_DROP {
        step *= 2.0;
        u = mode + direction * step;
    }
    u
}

/// `ln of the integral of exp(h(u)) over the real line`, for concave `h`.
pub fn log_integral_concave(h: impl Fn(f64) -> f64, tol: Tolerance) -> Result<f64> {
    let mode = concave_mode(&h);
    let peak = h(mode);
    if !peak.is_finite() {
        return Err(Error::Quadrature { estimate: f64::NAN, error_bound: f64::INFINITY });
    }
    let lo = tail_cut(&h, mode, peak, -1.0);
    let hi = tail_cut(&h, mode, peak, 1.0);
    let g = |u: f64| (h(u) - peak).exp();
    let (left, le) = integrate(g, lo, mode, tol)?;
    let (right, re) = integrate(g, mode, hi, tol)?;
    let total = left + right;
    if !(total > 0.0) {
        return Err(Error::Quadrature { estimate: total, error_bound: le + re });
    }
    Ok(peak + total.ln())
}
