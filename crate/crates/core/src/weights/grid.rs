//! Sampling grids and log-magnitude tables over them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::expr::tape::LnScratch;
use crate::expr::{Expr, LogNum, Scalar, Tape};

/// Core `[−1, 1]` plus dyadic annuli `2^{k−1} ≤ |x| ≤ 2^k`, `k = 1..=annuli`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub annuli: usize,
    /// Points per annulus, split evenly between the two halves.
    pub samples: usize,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { annuli: 14, samples: 4096 }
    }
}

impl Schedule {
    pub fn radius(&self) -> f64 {
        2f64.powi(self.annuli as i32)
    }

    pub fn grid(&self) -> Grid {
        let half = (self.samples / 2).max(2);
        let mut windows = Vec::with_capacity(self.annuli + 1);
        windows.push(linspace(-1.0, 1.0, 2 * half + 1));
        for k in 1..=self.annuli {
            let (lo, hi) = (2f64.powi(k as i32 - 1), 2f64.powi(k as i32));
            let pos = linspace(lo, hi, half);
            let mut w: Vec<f64> = pos.iter().map(|x| -x).collect();
            w.extend(pos);
            windows.push(w);
        }
        Grid { windows }
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
}

/// Sample points grouped by window; window 0 is the core.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub windows: Vec<Vec<f64>>,
}

impl Grid {
    /// Points with `|x| ≤ radius`, plus `±radius` themselves.
    pub fn truncated(&self, radius: f64) -> Grid {
        let mut windows: Vec<Vec<f64>> = Vec::new();
        for w in &self.windows {
            let kept: Vec<f64> = w.iter().copied().filter(|x| x.abs() <= radius).collect();
            if kept.is_empty() {
                break;
            }
            windows.push(kept);
        }
        match windows.last_mut() {
            Some(last) => last.extend([-radius, radius]),
            None => windows.push(vec![-radius, radius]),
        }
        Grid { windows }
    }

    pub fn len(&self) -> usize {
        self.windows.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-point numbers laid out like a [`Grid`], with the first domain
/// error of each window. Points whose value was lost to floating-point
/// range hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct LnTable {
    pub values: Vec<Vec<f64>>,
    pub errors: Vec<Option<String>>,
}

impl LnTable {
    pub fn constant(grid: &Grid, v: f64) -> LnTable {
        LnTable {
            values: grid.windows.iter().map(|w| vec![v; w.len()]).collect(),
            errors: vec![None; grid.windows.len()],
        }
    }

    pub fn get(&self, w: usize, i: usize) -> f64 {
        self.values[w][i]
    }
}

/// First error per window across several tables.
pub fn merged_errors(tables: &[&LnTable]) -> Vec<Option<String>> {
    let n = tables.iter().map(|t| t.errors.len()).max().unwrap_or(0);
    (0..n).map(|w| tables.iter().find_map(|t| t.errors.get(w).cloned().flatten())).collect()
}

/// `ln|e(x)|` over the grid for every expression, from one shared tape.
pub fn ln_tables(exprs: &[Expr], grid: &Grid) -> Vec<LnTable> {
    let tape = Tape::compile(exprs);
    tables_with(exprs.len(), grid, |w, cols, errors| {
        let mut scratch = LnScratch::default();
        for &x in w {
            tape.eval_ln_abs(x, &mut scratch);
            record(&tape, x, &scratch.ln, &scratch.status, cols, errors);
        }
    })
}

/// Signed values `e(x)`; values beyond `f64` range become `±inf`.
pub fn value_tables(exprs: &[Expr], grid: &Grid) -> Vec<LnTable> {
    let tape = Tape::compile(exprs);
    tables_with(exprs.len(), grid, |w, cols, errors| {
        let (mut slots, mut codes, mut out, mut status) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        let (mut lslots, mut lout) = (Vec::new(), Vec::new());
        for &x in w {
            tape.eval_lenient(x, &mut slots, &mut codes, &mut out, &mut status);
            if status.iter().any(|&c| c == 1) || out.iter().any(|v: &f64| v.is_infinite()) {
                tape.eval_lenient(LogNum::from_f64(x), &mut lslots, &mut codes, &mut lout, &mut status);
                out.clear();
                out.extend(lout.iter().map(|v: &LogNum| v.to_f64()));
            }
            record(&tape, x, &out, &status, cols, errors);
        }
    })
}

fn record(tape: &Tape, x: f64, vals: &[f64], status: &[u32], cols: &mut [Vec<f64>], errors: &mut [Option<String>]) {
    for (j, (&v, &c)) in vals.iter().zip(status).enumerate() {
        cols[j].push(if c == 0 { v } else { f64::NAN });
        if c >= 2 && errors[j].is_none() {
            errors[j] = tape.error_for(c, x).map(|e| e.to_string());
        }
    }
}

/// Runs `fill` on every window (in parallel); it pushes one value per
/// point into each output column and may note a domain error per output.
pub(crate) fn tables_with<F>(n_out: usize, grid: &Grid, fill: F) -> Vec<LnTable>
where
    F: Fn(&[f64], &mut [Vec<f64>], &mut [Option<String>]) + Sync,
{
    let per_window: Vec<(Vec<Vec<f64>>, Vec<Option<String>>)> = grid
        .windows
        .par_iter()
        .map(|w| {
            let mut cols = vec![Vec::with_capacity(w.len()); n_out];
            let mut errors = vec![None; n_out];
            fill(w, &mut cols, &mut errors);
            (cols, errors)
        })
        .collect();
    let mut tables: Vec<LnTable> = (0..n_out)
        .map(|_| LnTable { values: Vec::with_capacity(grid.windows.len()), errors: Vec::new() })
        .collect();
    for (cols, errors) in per_window {
        for ((t, c), e) in tables.iter_mut().zip(cols).zip(errors) {
            t.values.push(c);
            t.errors.push(e);
        }
    }
    tables
}
