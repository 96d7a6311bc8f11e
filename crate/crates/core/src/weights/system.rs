//! Weight systems `V = (v_N)` and their structural checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::grid::{ln_tables, tables_with, value_tables, Grid, LnTable};
use super::growth::{Classifier, GrowthVerdict};
use crate::expr::tape::LnScratch;
use crate::expr::{parse, BinaryOp, Expr, ParseError, Tape, UnaryOp};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WeightError {
    #[error("invalid weight expression: {0}")]
    Parse(#[from] ParseError),
    #[error("weight descriptor: {0}")]
    Descriptor(String),
    #[error("base weight drops below 1 at x = {x} (value {value})")]
    BelowOne { x: f64, value: f64 },
}

/// How `N ↦ v_N` is generated.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightKind {
    /// `v_N = v^N`.
    Power(Expr),
    /// `v_N = list[N]`, the last entry repeating beyond the list.
    Explicit(Vec<Expr>),
    /// `v_N = exp(N · rate)`.
    Exponential(Expr),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightSpec", into = "WeightSpec")]
pub struct WeightSystem {
    pub kind: WeightKind,
}

/// JSON form: `{"kind": "power"|"explicit"|"exponential", "base": .., "list": [..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightSpec {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    list: Option<Vec<String>>,
}

impl TryFrom<WeightSpec> for WeightSystem {
    type Error = WeightError;
    fn try_from(s: WeightSpec) -> Result<Self, WeightError> {
        let base = || -> Result<Expr, WeightError> {
            let b = s.base.as_deref().ok_or_else(|| WeightError::Descriptor(format!("kind {:?} needs \"base\"", s.kind)))?;
            Ok(parse(b)?)
        };
        let kind = match s.kind.as_str() {
            "power" => WeightKind::Power(base()?),
            "exponential" => WeightKind::Exponential(base()?),
            "explicit" => {
                let list = s.list.as_ref().filter(|l| !l.is_empty());
                let list = list.ok_or_else(|| WeightError::Descriptor("kind \"explicit\" needs a non-empty \"list\"".into()))?;
                WeightKind::Explicit(list.iter().map(|e| parse(e)).collect::<Result<_, _>>()?)
            }
            other => return Err(WeightError::Descriptor(format!("unknown kind {other:?}"))),
        };
        Ok(WeightSystem { kind })
    }
}

impl From<WeightSystem> for WeightSpec {
    fn from(w: WeightSystem) -> WeightSpec {
        match w.kind {
            WeightKind::Power(b) => WeightSpec { kind: "power".into(), base: Some(b.to_string()), list: None },
            WeightKind::Exponential(b) => WeightSpec { kind: "exponential".into(), base: Some(b.to_string()), list: None },
            WeightKind::Explicit(l) => {
                WeightSpec { kind: "explicit".into(), base: None, list: Some(l.iter().map(Expr::to_string).collect()) }
            }
        }
    }
}

/// `N ↦ v^N`, rejecting bases that drop below 1 on the grid.
pub fn power_system(v: Expr, grid: &Grid) -> Result<WeightSystem, WeightError> {
    let t = ln_tables(std::slice::from_ref(&v), grid).pop().unwrap();
    for (w, pts) in grid.windows.iter().enumerate() {
        for (i, &x) in pts.iter().enumerate() {
            let l = t.get(w, i);
            if !(l >= -1e-12) {
                return Err(WeightError::BelowOne { x, value: l.exp() });
            }
        }
    }
    Ok(WeightSystem::power(v))
}

/// Where a weight is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum Argument<'a> {
    /// `v_N(x)`.
    Identity,
    /// `v_N(φ(x))`.
    Composed(&'a Expr),
    /// `sup_{|t| ≤ 1} v_N(x + t)` over this many equispaced `t`.
    Shifted(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Mode {
    ScaledLn,
    ScaledValue,
    Indexed,
}

/// `ln v_N` over a grid for every `N`, from one or a few tables.
#[derive(Clone, Debug)]
pub struct WeightTable {
    mode: Mode,
    tables: Vec<LnTable>,
}

impl WeightTable {
    pub fn ln(&self, n: usize, w: usize, i: usize) -> f64 {
        match self.mode {
            Mode::ScaledLn | Mode::ScaledValue if n == 0 => 0.0,
            Mode::ScaledLn | Mode::ScaledValue => n as f64 * self.tables[0].get(w, i),
            Mode::Indexed => self.tables[n.min(self.tables.len() - 1)].get(w, i),
        }
    }

    pub fn errors(&self, n: usize) -> &[Option<String>] {
        match self.mode {
            Mode::Indexed => &self.tables[n.min(self.tables.len() - 1)].errors,
            _ => &self.tables[0].errors,
        }
    }

    /// Materialises `ln v_N`.
    pub fn table(&self, n: usize) -> LnTable {
        let src = &self.tables[if self.mode == Mode::Indexed { n.min(self.tables.len() - 1) } else { 0 }];
        LnTable {
            values: src
                .values
                .iter()
                .enumerate()
                .map(|(w, row)| (0..row.len()).map(|i| self.ln(n, w, i)).collect())
                .collect(),
            errors: src.errors.clone(),
        }
    }
}

impl WeightSystem {
    pub fn power(v: Expr) -> WeightSystem {
        WeightSystem { kind: WeightKind::Power(v) }
    }

    /// The system with every `v_N ≡ 1`.
    pub fn constant() -> WeightSystem {
        WeightSystem::power(Expr::Const(1.0))
    }

    pub fn is_constant_one(&self) -> bool {
        match &self.kind {
            WeightKind::Power(b) => b.as_const() == Some(1.0),
            WeightKind::Exponential(b) => b.as_const() == Some(0.0),
            WeightKind::Explicit(l) => l.iter().all(|e| e.as_const() == Some(1.0)),
        }
    }

    /// The expression for `v_N`.
    pub fn weight(&self, n: usize) -> Expr {
        match &self.kind {
            WeightKind::Power(b) => Expr::pow(b.clone(), Expr::Const(n as f64)),
            WeightKind::Exponential(r) => Expr::unary(
                UnaryOp::Exp,
                Expr::binary(BinaryOp::Mul, Expr::Const(n as f64), r.clone()),
            ),
            WeightKind::Explicit(l) => l[n.min(l.len() - 1)].clone(),
        }
    }

    /// Tables of `ln v_N(arg)` on the grid.
    pub fn tables(&self, grid: &Grid, arg: Argument) -> WeightTable {
        let (mode, gens) = match &self.kind {
            WeightKind::Power(b) => (Mode::ScaledLn, vec![b.clone()]),
            WeightKind::Exponential(r) => (Mode::ScaledValue, vec![r.clone()]),
            WeightKind::Explicit(l) => (Mode::Indexed, l.clone()),
        };
        let signed = mode == Mode::ScaledValue;
        let tables = match arg {
            Argument::Identity => eval(&gens, grid, signed),
            Argument::Composed(phi) => {
                let sub: Vec<Expr> = gens.iter().map(|g| g.substitute(phi)).collect();
                eval(&sub, grid, signed)
            }
            Argument::Shifted(n) => shifted(&gens, grid, n, signed),
        };
        WeightTable { mode, tables }
    }
}

fn eval(exprs: &[Expr], grid: &Grid, signed: bool) -> Vec<LnTable> {
    if signed {
        value_tables(exprs, grid)
    } else {
        ln_tables(exprs, grid)
    }
}

fn shifted(exprs: &[Expr], grid: &Grid, samples: usize, signed: bool) -> Vec<LnTable> {
    let tape = Tape::compile(exprs);
    let ts: Vec<f64> = (0..samples).map(|j| -1.0 + 2.0 * j as f64 / (samples.max(2) - 1) as f64).collect();
    tables_with(exprs.len(), grid, |w, cols, errors| {
        let mut scratch = LnScratch::default();
        let (mut slots, mut codes, mut out, mut status) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &x in w {
            let mut best = vec![f64::NEG_INFINITY; exprs.len()];
            for &t in &ts {
                let (vals, st): (&[f64], &[u32]) = if signed {
                    tape.eval_lenient(x + t, &mut slots, &mut codes, &mut out, &mut status);
                    (&out, &status)
                } else {
                    tape.eval_ln_abs(x + t, &mut scratch);
                    (&scratch.ln, &scratch.status)
                };
                for j in 0..exprs.len() {
                    if st[j] >= 2 && errors[j].is_none() {
                        errors[j] = tape.error_for(st[j], x + t).map(|e| e.to_string());
                    }
                    let v = if st[j] == 0 { vals[j] } else { f64::NAN };
                    if v.is_nan() || best[j].is_nan() {
                        best[j] = f64::NAN;
                    } else {
                        best[j] = best[j].max(v);
                    }
                }
            }
            for (c, b) in cols.iter_mut().zip(best) {
                c.push(b);
            }
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Pairing {
    pub n: usize,
    /// The index found, if any.
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<GrowthVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SystemReport {
    pub ok: bool,
    pub failures: Vec<String>,
    pub pairings: Vec<Pairing>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductEntry {
    pub n: usize,
    pub m: usize,
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CondMultReport {
    pub ok: bool,
    pub failures: Vec<String>,
    pub entries: Vec<ProductEntry>,
}

/// Checks `v_0 ≥ 1`, monotonicity in `N` and translation moderateness
/// `∀N ∃M ∈ [N, M_max]: sup_{x,|t|≤1} v_N(x+t)/v_M(x) < ∞`.
pub fn validate_weight_system(v: &WeightSystem, n_max: usize, m_max: usize, shift_samples: usize, c: &Classifier) -> SystemReport {
    let grid = &c.grid;
    let at = v.tables(grid, Argument::Identity);
    let mut failures = Vec::new();
    'outer: for (w, pts) in grid.windows.iter().enumerate() {
        for (i, &x) in pts.iter().enumerate() {
            let l0 = at.ln(0, w, i);
            if !(l0 >= -1e-12) {
                failures.push(format!("v_0({x}) = {} < 1", l0.exp()));
                break 'outer;
            }
        }
    }
    'mono: for n in 0..m_max.max(n_max) {
        for (w, pts) in grid.windows.iter().enumerate() {
            for (i, &x) in pts.iter().enumerate() {
                let (a, b) = (at.ln(n, w, i), at.ln(n + 1, w, i));
                if a > b + 1e-12 * a.abs().max(1.0) {
                    failures.push(format!("v_{n}({x}) > v_{}({x})", n + 1));
                    break 'mono;
                }
            }
        }
    }
    let shifted = v.tables(grid, Argument::Shifted(shift_samples));
    let mut pairings = Vec::new();
    for n in 0..=n_max {
        let mut found = None;
        for m in n..=m_max.max(n) {
            let errors = merged_errors_of(&[shifted.errors(n), at.errors(m)]);
            let g = c.classify(&errors, |w, i| shifted.ln(n, w, i) - at.ln(m, w, i));
            if g.is_bounded() {
                found = Some((m, g));
                break;
            }
        }
        match found {
            Some((m, g)) => pairings.push(Pairing { n, m: Some(m), verdict: Some(g) }),
            None => {
                failures.push(format!("no M in [{n}, {}] bounds v_{n}(x+t)/v_M(x)", m_max.max(n)));
                pairings.push(Pairing { n, m: None, verdict: None });
            }
        }
    }
    SystemReport { ok: failures.is_empty(), failures, pairings }
}

/// For each `N, M ≤ N_max`, the smallest `K ∈ [max(N,M), K_max]` with
/// `v_N·v_M/v_K` bounded.
pub fn check_cond_mult(v: &WeightSystem, n_max: usize, k_max: usize, c: &Classifier) -> CondMultReport {
    let at = v.tables(&c.grid, Argument::Identity);
    let mut failures = Vec::new();
    let mut entries = Vec::new();
    for n in 0..=n_max {
        for m in n..=n_max {
            let mut found = None;
            for k in n.max(m)..=k_max {
                let errors = merged_errors_of(&[at.errors(n), at.errors(m), at.errors(k)]);
                let g = c.classify(&errors, |w, i| at.ln(n, w, i) + at.ln(m, w, i) - at.ln(k, w, i));
                if g.is_bounded() {
                    found = Some(k);
                    break;
                }
            }
            if found.is_none() {
                failures.push(format!("no K ≤ {k_max} bounds v_{n}·v_{m}/v_K"));
            }
            entries.push(ProductEntry { n, m, k: found });
        }
    }
    CondMultReport { ok: failures.is_empty(), failures, entries }
}

fn merged_errors_of(lists: &[&[Option<String>]]) -> Vec<Option<String>> {
    let n = lists.iter().map(|l| l.len()).max().unwrap_or(0);
    (0..n).map(|w| lists.iter().find_map(|l| l.get(w).cloned().flatten())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Schedule, Thresholds};

    fn small() -> Classifier {
        Classifier::new(Schedule { annuli: 14, samples: 256 }, Thresholds::default())
    }

    fn sys(json: &str) -> WeightSystem {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn power_examples() {
        let g = small().grid;
        let v = power_system(parse("1+abs(x)").unwrap(), &g).unwrap();
        assert_eq!(v.weight(2).eval(3.0).unwrap(), 16.0);
        let e = power_system(parse("exp(abs(x))").unwrap(), &g).unwrap();
        assert!((e.weight(3).eval(1.0).unwrap() - 3f64.exp()).abs() < 1e-12);
        let one = power_system(parse("1").unwrap(), &g).unwrap();
        assert!(one.is_constant_one());
        assert_eq!(one.weight(5).eval(7.0).unwrap(), 1.0);
        assert!(matches!(power_system(parse("1+x").unwrap(), &g), Err(WeightError::BelowOne { .. })));
    }

    #[test]
    fn json_round_trip() {
        let v = sys(r#"{"kind": "explicit", "list": ["1", "1+abs(x)"]}"#);
        assert_eq!(v.weight(7).to_string(), "1+abs(x)");
        let back: WeightSystem = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<WeightSystem>(r#"{"kind": "power"}"#).is_err());
        assert!(serde_json::from_str::<WeightSystem>(r#"{"kind": "cubic", "base": "x"}"#).is_err());
        let e = sys(r#"{"kind": "exponential", "base": "abs(x)"}"#);
        assert!((e.weight(2).eval(-1.5).unwrap() - 3f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn validation_examples() {
        let c = small();
        for base in ["1+abs(x)", "exp(abs(x))"] {
            let r = validate_weight_system(&WeightSystem::power(parse(base).unwrap()), 4, 8, 65, &c);
            assert!(r.ok, "{base}: {:?}", r.failures);
            assert!(r.pairings.iter().all(|p| p.m == Some(p.n)));
        }
        let bad = sys(r#"{"kind": "explicit", "list": ["1", "1+abs(x)", "1"]}"#);
        let r = validate_weight_system(&bad, 2, 4, 65, &c);
        assert!(!r.ok);
        assert!(r.failures.iter().any(|f| f.contains("v_1") && f.contains("v_2")));
        // x² growth is not translation-moderate against exp(x²)/exp(x²)
        let fast = sys(r#"{"kind": "explicit", "list": ["exp(x^2)"]}"#);
        assert!(!validate_weight_system(&fast, 1, 2, 65, &c).ok);
    }

    #[test]
    fn cond_mult_examples() {
        let c = small();
        for base in ["1+abs(x)", "exp(abs(x))"] {
            let r = check_cond_mult(&WeightSystem::power(parse(base).unwrap()), 4, 8, &c);
            assert!(r.ok);
            assert!(r.entries.iter().all(|e| e.k == Some(e.n + e.m)));
        }
        let tight = sys(r#"{"kind": "explicit", "list": ["exp(x^2)", "exp(x^2)", "exp(2*x^2)"]}"#);
        let r = check_cond_mult(&tight, 2, 2, &c);
        assert!(!r.ok);
    }
}
