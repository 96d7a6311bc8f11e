//! Tri-state classification of `sup_x |g(x)|` from annulus maxima.
//!
//! Everything runs on `ln|g|`, so ratios such as `e^{8|x|}/(1+|x|)` at
//! `|x| = 16384` stay representable.

use serde::{Deserialize, Serialize};

use super::grid::{ln_tables, merged_errors, Grid, LnTable, Schedule};
use crate::expr::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub eps_b: f64,
    pub k0: usize,
    pub t: usize,
    pub rho: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { eps_b: 0.05, k0: 6, t: 4, rho: 1.3 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.eps_b > 0.0 && self.eps_b < 0.5) {
            return Err(format!("eps_b = {} outside (0, 0.5)", self.eps_b));
        }
        if !(self.rho > 1.0) {
            return Err(format!("rho = {} must exceed 1", self.rho));
        }
        if self.t == 0 {
            return Err("t must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GrowthTag {
    Bounded,
    Diverging,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessPoint {
    pub x: f64,
    /// `null` in JSON when the ratio overflows `f64`.
    pub ratio: f64,
    pub ln_ratio: f64,
}

impl WitnessPoint {
    fn new(x: f64, ln_ratio: f64) -> WitnessPoint {
        WitnessPoint { x, ratio: ln_ratio.exp(), ln_ratio }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthVerdict {
    pub tag: GrowthTag,
    pub sup_estimate: f64,
    pub ln_sup: f64,
    pub sup_at: f64,
    /// Diverging: the growth trail, one point per annulus, ratios increasing
    /// by at least `rho` per step. Otherwise the location of the sup.
    pub witness: Vec<WitnessPoint>,
    pub windows_used: usize,
    /// `ln` of the maximum on each window used.
    pub ln_maxima: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl GrowthVerdict {
    pub fn is_bounded(&self) -> bool {
        self.tag == GrowthTag::Bounded
    }

    pub fn is_diverging(&self) -> bool {
        self.tag == GrowthTag::Diverging
    }

    /// Smallest per-step ratio growth along the witness trail.
    pub fn witness_growth(&self) -> Option<f64> {
        self.witness.windows(2).map(|p| (p[1].ln_ratio - p[0].ln_ratio).exp()).min_by(f64::total_cmp)
    }

    /// Mean per-window growth of `ln` maxima over the last `t` windows used.
    pub fn terminal_slope(&self, t: usize) -> f64 {
        let n = self.ln_maxima.len();
        if n < 2 {
            return f64::NAN;
        }
        let t = t.min(n - 1);
        (self.ln_maxima[n - 1] - self.ln_maxima[n - 1 - t]) / t as f64
    }

    fn inconclusive(diagnostic: String) -> GrowthVerdict {
        GrowthVerdict {
            tag: GrowthTag::Inconclusive,
            sup_estimate: f64::NAN,
            ln_sup: f64::NAN,
            sup_at: f64::NAN,
            witness: Vec::new(),
            windows_used: 0,
            ln_maxima: Vec::new(),
            diagnostic: Some(diagnostic),
        }
    }
}

/// How far beyond a searched index range a divergence must be projected to
/// persist before an exhausted existential search counts as failed.
pub const PERSISTENCE_FACTOR: f64 = 4.0;

/// Decides whether divergence found at every index of an exhausted
/// existential search would survive a larger bound. `slopes` holds
/// `(index, terminal slope)` for the diverging cells in index order; the
/// last two are extrapolated linearly to the index where the slope would
/// fall below `ln rho`.
pub fn divergence_persists(slopes: &[(usize, f64)], rho: f64) -> bool {
    let [.., (a, sa), (b, sb)] = slopes else {
        return false;
    };
    if sa.is_nan() || sb.is_nan() {
        return false;
    }
    if *sb >= *sa - 1e-9 {
        return true;
    }
    let drop = (sa - sb) / (b - a) as f64;
    let projected = *b as f64 + (sb - rho.ln()) / drop;
    projected > PERSISTENCE_FACTOR * (*b).max(1) as f64
}

/// A window schedule, its grid and the thresholds, bundled.
#[derive(Clone, Debug)]
pub struct Classifier {
    pub schedule: Schedule,
    pub thresholds: Thresholds,
    pub grid: Grid,
}

impl Default for Classifier {
    fn default() -> Self {
        Classifier::new(Schedule::default(), Thresholds::default())
    }
}

// Orders candidate maxima: larger value, then smaller |x|, then positive x.
fn better(v: f64, x: f64, best_v: f64, best_x: f64) -> bool {
    if v != best_v {
        return v > best_v;
    }
    if x.abs() != best_x.abs() {
        return x.abs() < best_x.abs();
    }
    x > best_x
}

impl Classifier {
    pub fn new(schedule: Schedule, thresholds: Thresholds) -> Classifier {
        Classifier { grid: schedule.grid(), schedule, thresholds }
    }

    /// Classifies `sup |g|` for an expression `g`.
    pub fn classify_expr(&self, g: &Expr) -> GrowthVerdict {
        let t = ln_tables(std::slice::from_ref(g), &self.grid).pop().unwrap();
        self.classify_table(&t)
    }

    pub fn classify_table(&self, t: &LnTable) -> GrowthVerdict {
        self.classify(&t.errors, |w, i| t.get(w, i))
    }

    /// `ln(a/b)` for two tables.
    pub fn classify_ratio(&self, num: &LnTable, den: &LnTable) -> GrowthVerdict {
        let errors = merged_errors(&[num, den]);
        self.classify(&errors, |w, i| num.get(w, i) - den.get(w, i))
    }

    /// Classifies the function whose `ln|g|` at point `i` of window `w` is
    /// `ln_at(w, i)`. NaN or `+inf` marks a value lost to floating-point
    /// range and truncates the schedule before that window; `errors[w]`
    /// reports a domain error on window `w`.
    pub fn classify<F>(&self, errors: &[Option<String>], ln_at: F) -> GrowthVerdict
    where
        F: Fn(usize, usize) -> f64,
    {
        let mut maxima = Vec::new();
        let mut xs = Vec::new();
        let mut truncated = false;
        for (w, pts) in self.grid.windows.iter().enumerate() {
            if let Some(Some(e)) = errors.get(w) {
                return GrowthVerdict::inconclusive(e.clone());
            }
            let (mut bv, mut bx) = (f64::NEG_INFINITY, f64::NAN);
            let mut lost = false;
            for (i, &x) in pts.iter().enumerate() {
                let v = ln_at(w, i);
                if v.is_nan() || v == f64::INFINITY {
                    lost = true;
                    break;
                }
                if bx.is_nan() || better(v, x, bv, bx) {
                    bv = v;
                    bx = x;
                }
            }
            if lost {
                truncated = true;
                break;
            }
            maxima.push(bv);
            xs.push(bx);
        }
        if maxima.is_empty() {
            return GrowthVerdict::inconclusive("no window could be evaluated".into());
        }
        self.verdict(maxima, xs, truncated)
    }

    fn verdict(&self, l: Vec<f64>, xs: Vec<f64>, truncated: bool) -> GrowthVerdict {
        let th = &self.thresholds;
        let n = l.len();
        let mut sup = 0;
        for k in 1..n {
            if l[k] > l[sup] {
                sup = k;
            }
        }
        let mut out = GrowthVerdict {
            tag: GrowthTag::Inconclusive,
            sup_estimate: l[sup].exp(),
            ln_sup: l[sup],
            sup_at: xs[sup],
            witness: vec![WitnessPoint::new(xs[sup], l[sup])],
            windows_used: n,
            ln_maxima: l.clone(),
            diagnostic: truncated.then(|| format!("values beyond floating-point range after window {}", n - 1)),
        };
        let lr = th.rho.ln();
        let diverging = n > th.t && (n - th.t..n).all(|k| l[k] - l[k - 1] >= lr);
        if diverging {
            let mut start = n - 1;
            while start > 1 && l[start] - l[start - 1] >= lr {
                start -= 1;
            }
            out.tag = GrowthTag::Diverging;
            out.witness = (start..n).map(|k| WitnessPoint::new(xs[k], l[k])).collect();
            return out;
        }
        if truncated || n <= th.k0 + 1 {
            return out;
        }
        let head = l[..=th.k0].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cap = head + th.eps_b.ln_1p();
        if l[th.k0 + 1..].iter().all(|&v| v <= cap) || self.converging(&l) {
            out.tag = GrowthTag::Bounded;
        }
        out
    }

    // The running maximum's relative increments shrink geometrically over
    // the last t steps, so the tail adds at most a convergent series.
    fn converging(&self, l: &[f64]) -> bool {
        let t = self.thresholds.t;
        let n = l.len();
        if n < t + 2 {
            return false;
        }
        let mut run = Vec::with_capacity(n);
        let mut m = f64::NEG_INFINITY;
        for &v in l {
            m = m.max(v);
            run.push(m);
        }
        let excess = |k: usize| {
            let d = run[k] - run[k - 1];
            if d.is_nan() {
                0.0
            } else {
                d.exp_m1()
            }
        };
        (n - t..n).all(|k| excess(k) <= 0.75 * excess(k - 1))
    }
}
