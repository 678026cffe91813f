//! One-dimensional global optimization on closed intervals.
//!
//! Every interval is scanned on a uniform grid, then the best grid local
//! extrema are polished by golden-section search. The scheme is exhaustive
//! at grid resolution and exact to the refinement tolerance for extrema that
//! are unimodal within one grid cell.

use serde::{Deserialize, Serialize};

use super::function::ScalarFunction;
use crate::error::{Error, Result};

pub const GRID_POINTS: usize = 4097;
pub const X_TOL: f64 = 1e-10;
/// Intervals narrower than this are treated as a single point.
pub const DEGENERATE_WIDTH: f64 = 1e-12;
const REFINE_CANDIDATES: usize = 8;
const GOLDEN_MAX_ITER: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Max,
    Min,
}

/// Closed real interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidInput(format!("bad interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        x >= self.lo - slack && x <= self.hi + slack
    }

    pub fn contains_interval(&self, other: &Interval, slack: f64) -> bool {
        self.contains(other.lo, slack) && self.contains(other.hi, slack)
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }
}

/// Optimizing abscissa and value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub x: f64,
    pub value: f64,
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-14 * (1.0 + a.abs().max(b.abs()))
}

/// `true` if `cand` beats `best` when maximizing; ties go to the smaller abscissa.
fn better(cand: Optimum, best: Optimum) -> bool {
    if cand.value.is_nan() {
        return false;
    }
    if best.value.is_nan() {
        return true;
    }
    if tied(cand.value, best.value) {
        cand.x < best.x
    } else {
        cand.value > best.value
    }
}

fn golden_max(h: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> Optimum {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = h(c);
    let mut fd = h(d);
    let mut iters = 0;
    while (b - a).abs() > X_TOL * (1.0 + a.abs().max(b.abs())) && iters < GOLDEN_MAX_ITER {
        iters += 1;
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = h(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = h(d);
        }
    }
    let x = 0.5 * (a + b);
    Optimum { x, value: h(x) }
}

fn maximize_on(h: &dyn Fn(f64) -> f64, iv: Interval) -> Optimum {
    if iv.width() < DEGENERATE_WIDTH {
        return Optimum {
            x: iv.lo,
            value: h(iv.lo),
        };
    }
    let n = GRID_POINTS;
    let step = iv.width() / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                iv.hi
            } else {
                iv.lo + step * i as f64
            }
        })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| h(x)).collect();

    let mut best = Optimum {
        x: xs[0],
        value: ys[0],
    };
    let mut peaks: Vec<usize> = Vec::new();
    for i in 0..n {
        let cand = Optimum {
            x: xs[i],
            value: ys[i],
        };
        if better(cand, best) {
            best = cand;
        }
        let left = if i == 0 { f64::NEG_INFINITY } else { ys[i - 1] };
        let right = if i == n - 1 { f64::NEG_INFINITY } else { ys[i + 1] };
        if ys[i] >= left && ys[i] >= right {
            peaks.push(i);
        }
    }
    peaks.sort_by(|&a, &b| ys[b].total_cmp(&ys[a]).then(a.cmp(&b)));
    for &i in peaks.iter().take(REFINE_CANDIDATES) {
        let a = xs[i.saturating_sub(1)];
        let b = xs[(i + 1).min(n - 1)];
        let cand = golden_max(h, a, b);
        if better(cand, best) {
            best = cand;
        }
    }
    best
}

/// Optimizes an arbitrary closure over the union of `intervals`.
pub fn optimize_fn(h: impl Fn(f64) -> f64, intervals: &[Interval], mode: Mode) -> Result<Optimum> {
    if intervals.is_empty() {
        return Err(Error::InvalidInput("no intervals to optimize over".into()));
    }
    let sign = match mode {
        Mode::Max => 1.0,
        Mode::Min => -1.0,
    };
    let signed = |x: f64| sign * h(x);
    let mut best: Option<Optimum> = None;
    for iv in intervals {
        let cand = maximize_on(&signed, *iv);
        best = match best {
            Some(b) if !better(cand, b) => Some(b),
            _ => Some(cand),
        };
    }
    let best = best.unwrap();
    if !best.value.is_finite() {
        return Err(Error::DomainViolation(format!(
            "objective is not finite at x = {}",
            best.x
        )));
    }
    Ok(Optimum {
        x: best.x,
        value: sign * best.value,
    })
}

/// Optimizes a registry function over the union of `intervals`.
pub fn scalar_optimize(h: &ScalarFunction, intervals: &[Interval], mode: Mode) -> Result<Optimum> {
    for iv in intervals {
        h.check_interval(iv.lo, iv.hi)?;
    }
    optimize_fn(|x| h.eval(x), intervals, mode)
}

/// `[min, max]` of `f` over `[m, M]`.
pub fn function_range(f: &ScalarFunction, m: f64, big_m: f64) -> Result<Interval> {
    f.check_interval(m, big_m)?;
    closure_range(|x| f.eval(x), m, big_m)
}

pub fn closure_range(h: impl Fn(f64) -> f64, m: f64, big_m: f64) -> Result<Interval> {
    let iv = Interval::new(m, big_m)?;
    if iv.width() < DEGENERATE_WIDTH {
        let v = h(m);
        return Ok(Interval::point(v));
    }
    let lo = optimize_fn(&h, &[iv], Mode::Min)?;
    let hi = optimize_fn(&h, &[iv], Mode::Max)?;
    Interval::new(lo.value, hi.value)
}
