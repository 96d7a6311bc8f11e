//! Constructive harnesses: bump functions with prescribed jets at 0, the
//! translated family `f_x = f(· − φ(x))`, the three composition
//! inequalities, the Gorny inequality on `[−1, 1]`, and the crosscheck of
//! the criteria against memberships of composed functions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{faa_di_bruno_jet, CalculusError};
use crate::criteria::{check_part, hypothesis, symbol_tables, Bounds, CriteriaError, Overall, Part};
use crate::expr::{parse, BinaryOp, DiffError, Expr, LogNum, Scalar, Tape, UnaryOp};
use crate::spaces::{membership, membership_from_tables, Family, MembershipTag, SpaceError, SpaceSpec};
use crate::weights::grid::tables_with;
use crate::weights::{Argument, Classifier, Grid, GrowthTag, GrowthVerdict, LnTable, WeightSystem, WitnessPoint};

/// Largest prescribed jet order.
pub const MAX_JET_ORDER: usize = 12;
/// Largest derivative order a bump function evaluates.
pub const MAX_BUMP_DERIVATIVE: usize = 32;
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Relative tolerance of the jet identities at `s = x`.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Grid points of the Gorny sup-norms on `[−1, 1]`.
pub const GORNY_POINTS: usize = 4097;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmpiricalError {
    #[error("jet: {0}")]
    Jet(String),
    #[error("jet solve is ill-conditioned: relative residual {residual:e} at order {order}")]
    IllConditioned { order: usize, residual: f64 },
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Criteria(#[from] CriteriaError),
    #[error("{0}")]
    Eval(String),
    #[error("{0}")]
    Argument(String),
}

/// Target values `f^{(p)}(0)` for `p ≤ q`; unspecified orders are 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JetSpec {
    pub values: BTreeMap<usize, f64>,
    pub q: usize,
}

impl JetSpec {
    pub fn new(q: usize) -> JetSpec {
        JetSpec { values: BTreeMap::new(), q }
    }

    pub fn with(mut self, p: usize, v: f64) -> JetSpec {
        self.values.insert(p, v);
        self
    }

    pub fn value(&self, p: usize) -> f64 {
        self.values.get(&p).copied().unwrap_or(0.0)
    }

    /// `f(0) = 1`.
    pub fn unit_value() -> JetSpec {
        JetSpec::new(0).with(0, 1.0)
    }

    /// `f^{(j)}(0) = 0` for `j < p` and `f^{(p)}(0) = 1`.
    pub fn unit_order(p: usize) -> JetSpec {
        JetSpec::new(p).with(p, 1.0)
    }

    /// `f'(0) = 1` and `f^{(j)}(0) = 0` for `j = 0` and `2 ≤ j ≤ p`.
    pub fn unit_slope(p: usize) -> JetSpec {
        JetSpec::new(p.max(1)).with(1, 1.0)
    }

    fn validate(&self) -> Result<(), EmpiricalError> {
        if self.q > MAX_JET_ORDER {
            return Err(EmpiricalError::Jet(format!("order {} exceeds {MAX_JET_ORDER}", self.q)));
        }
        for (&p, &v) in &self.values {
            if p > self.q {
                return Err(EmpiricalError::Jet(format!("order {p} above q = {}", self.q)));
            }
            if !v.is_finite() {
                return Err(EmpiricalError::Jet(format!("value at order {p} is not finite")));
            }
        }
        Ok(())
    }
}

// ψ^{(k)} = ψ · Q_k(x) / (1 − x²)^{2k}
struct PsiJets {
    polys: Vec<Vec<f64>>,
    at_zero: Vec<BigInt>,
}

fn psi_jets() -> &'static PsiJets {
    static JETS: OnceLock<PsiJets> = OnceLock::new();
    JETS.get_or_init(|| {
        let mut q = vec![BigInt::one()];
        let mut polys = Vec::new();
        let mut at_zero = Vec::new();
        for k in 0..=MAX_BUMP_DERIVATIVE {
            polys.push(q.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect());
            at_zero.push(q[0].clone());
            q = next_psi_poly(&q, k);
        }
        PsiJets { polys, at_zero }
    })
}

// Q_{k+1} = −2x·Q + (1 − x²)²·Q' + 4k·x(1 − x²)·Q
fn next_psi_poly(q: &[BigInt], k: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); q.len() + 3];
    let k4 = BigInt::from(4 * k);
    for (i, c) in q.iter().enumerate() {
        out[i + 1] -= c * 2;
        out[i + 1] += c * &k4;
        out[i + 3] -= c * &k4;
        if i >= 1 {
            let d = c * i;
            out[i - 1] += &d;
            out[i + 1] -= &d * 2;
            out[i + 3] += d;
        }
    }
    while out.len() > 1 && out.last().is_some_and(Zero::is_zero) {
        out.pop();
    }
    out
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn psi_derivative(k: usize, x: f64) -> f64 {
    let s = (1.0 - x) * (1.0 + x);
    if !(s > 0.0) {
        return 0.0;
    }
    let q = horner(&psi_jets().polys[k], x);
    if q == 0.0 {
        return 0.0;
    }
    let ln = 1.0 - 1.0 / s + q.abs().ln() - 2.0 * k as f64 * s.ln();
    q.signum() * ln.exp()
}

// P^{(i)}(x)
fn poly_derivative(c: &[f64], i: usize, x: f64) -> f64 {
    let mut acc = 0.0;
    for k in (i..c.len()).rev() {
        let falling: f64 = ((k - i + 1)..=k).map(|t| t as f64).product();
        acc = acc * x + c[k] * falling;
    }
    acc
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut b = BigInt::one();
    for i in 0..k {
        b = b * (n - i) / (i + 1);
    }
    b
}

fn factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * i)
}

/// `f = P·ψ` with `ψ(x) = exp(1 − 1/(1 − x²))` on `(−1, 1)` and 0 outside.
#[derive(Clone, Debug, Serialize)]
pub struct BumpFunction {
    pub jet: JetSpec,
    /// Coefficients of `P`, lowest degree first.
    pub coefficients: Vec<f64>,
    /// Largest relative residual of the rounded coefficients in the jet system.
    pub residual: f64,
    #[serde(skip)]
    at_zero: Vec<f64>,
}

/// Solves `(P·ψ)^{(p)}(0) = jet(p)`, `p ≤ q`, exactly over the rationals.
pub fn bump_with_jet(jet: &JetSpec) -> Result<BumpFunction, EmpiricalError> {
    jet.validate()?;
    let psi = psi_jets();
    let term = |d: usize, i: usize, a: &BigRational| {
        BigRational::from_integer(binomial(d, i) * factorial(i) * &psi.at_zero[d - i]) * a
    };
    let target = |d: usize| BigRational::from_float(jet.value(d)).expect("validated finite");
    let mut a: Vec<BigRational> = Vec::with_capacity(jet.q + 1);
    for d in 0..=jet.q {
        let mut rest = target(d);
        for (i, ai) in a.iter().enumerate() {
            rest -= term(d, i, ai);
        }
        a.push(rest / BigRational::from_integer(factorial(d)));
    }
    let coefficients: Vec<f64> = a.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect();
    let mut residual = 0.0f64;
    let rounded: Vec<BigRational> = coefficients
        .iter()
        .map(|&c| BigRational::from_float(c).ok_or(EmpiricalError::IllConditioned { order: 0, residual: f64::INFINITY }))
        .collect::<Result<_, _>>()?;
    for d in 0..=jet.q {
        let terms: Vec<BigRational> = (0..=d).map(|i| term(d, i, &rounded[i])).collect();
        let sum: BigRational = terms.iter().cloned().sum();
        let scale: BigRational = terms.iter().map(|t| t.abs()).sum();
        let scale = scale.to_f64().unwrap_or(f64::INFINITY).max(1.0);
        let r = (sum - target(d)).abs().to_f64().unwrap_or(f64::INFINITY) / scale;
        if !(r <= RESIDUAL_TOL) {
            return Err(EmpiricalError::IllConditioned { order: d, residual: r });
        }
        residual = residual.max(r);
    }
    let at_zero = (0..=MAX_BUMP_DERIVATIVE)
        .map(|d| {
            let s: BigRational = (0..=d.min(jet.q)).map(|i| term(d, i, &a[i])).sum();
            s.to_f64().unwrap_or(f64::NAN)
        })
        .collect();
    Ok(BumpFunction { jet: jet.clone(), coefficients, residual, at_zero })
}

/// Offsets `u ∈ [−1, 1]` on which support norms are taken.
fn support_offsets() -> impl Iterator<Item = f64> {
    (0..=256).map(|i| -1.0 + i as f64 / 128.0)
}

impl BumpFunction {
    /// `f^{(d)}(x)`; exactly 0 for `|x| ≥ 1`, and the exact jet at 0.
    ///
    /// # Panics
    /// If `d > MAX_BUMP_DERIVATIVE`.
    pub fn derivative(&self, x: f64, d: usize) -> f64 {
        assert!(d <= MAX_BUMP_DERIVATIVE, "bump derivative order {d} above {MAX_BUMP_DERIVATIVE}");
        if !(x.abs() < 1.0) {
            return 0.0;
        }
        if x == 0.0 {
            return self.at_zero[d];
        }
        let mut sum = 0.0;
        for i in 0..=d.min(self.coefficients.len() - 1) {
            let pi = poly_derivative(&self.coefficients, i, x);
            if pi != 0.0 {
                sum += binomial(d, i).to_f64().unwrap_or(f64::NAN) * pi * psi_derivative(d - i, x);
            }
        }
        sum
    }

    pub fn value(&self, x: f64) -> f64 {
        self.derivative(x, 0)
    }

    /// `max_{j ≤ n} sup |f^{(j)}|`.
    pub fn norm(&self, n: usize) -> f64 {
        support_offsets().flat_map(|u| (0..=n).map(move |j| (u, j))).map(|(u, j)| self.derivative(u, j).abs()).fold(0.0, f64::max)
    }
}

/// `f_x(t) = f(t − φ(x))`.
#[derive(Clone, Debug)]
pub struct Translated<'a> {
    pub bump: &'a BumpFunction,
    pub center: f64,
}

pub fn translated_family<'a>(f: &'a BumpFunction, phi: &Expr, x: f64) -> Result<Translated<'a>, EmpiricalError> {
    let center = phi.eval(x).map_err(|e| EmpiricalError::Eval(e.to_string()))?;
    if !center.is_finite() {
        return Err(EmpiricalError::Eval(format!("φ({x}) is not finite")));
    }
    Ok(Translated { bump: f, center })
}

impl Translated<'_> {
    pub fn derivative(&self, t: f64, d: usize) -> f64 {
        self.bump.derivative(t - self.center, d)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - 1.0, self.center + 1.0)
    }

    /// `max_{j ≤ n} sup |f_x^{(j)}|`, taken on the same offsets as [`BumpFunction::norm`].
    pub fn norm(&self, n: usize) -> f64 {
        self.bump.norm(n)
    }

    /// `max_{j ≤ n} sup_t |f_x^{(j)}(t)| / v(t)`.
    pub fn seminorm(&self, v: &Expr, n: usize) -> f64 {
        let mut best = 0.0f64;
        for u in support_offsets() {
            let vt = v.eval(self.center + u).unwrap_or(f64::NAN);
            for j in 0..=n {
                let r = self.bump.derivative(u, j).abs() / vt;
                if r.is_nan() {
                    return f64::NAN;
                }
                best = best.max(r);
            }
        }
        best
    }

    /// `(f_x∘φ)^{(j)}(s)` for `j ≤ p`; `phi` holds `φ, φ', …, φ^{(p)}`.
    pub fn composed_jet(&self, phi: &Tape, s: f64, p: usize) -> Option<Vec<f64>> {
        let inner = phi.eval(s).ok()?;
        if inner.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let u = inner[0] - self.center;
        let outer: Vec<f64> = (0..=p).map(|j| self.bump.derivative(u, j)).collect();
        faa_di_bruno_jet(&outer, &inner, p).ok()
    }
}

/// The three jet patterns and the value of `C_φ(f_x)^{(q)}(x)` each fixes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum JetPattern {
    /// `f(0) = 1`: `C_φ(f_x)(x) = 1`.
    Value,
    /// `f^{(j)}(0) = δ_{jp}` for `j ≤ p`: `C_φ(f_x)^{(p)}(x) = φ'(x)^p`.
    Order,
    /// `f'(0) = 1`, other orders `≤ p` zero: `C_φ(f_x)^{(p)}(x) = φ^{(p)}(x)`.
    Slope,
}

impl JetPattern {
    pub const ALL: [JetPattern; 3] = [JetPattern::Value, JetPattern::Order, JetPattern::Slope];

    pub fn jet(self, p: usize) -> JetSpec {
        match self {
            JetPattern::Value => JetSpec::unit_value(),
            JetPattern::Order => JetSpec::unit_order(p),
            JetPattern::Slope => JetSpec::unit_slope(p),
        }
    }

    fn name(self) -> &'static str {
        match self {
            JetPattern::Value => "value",
            JetPattern::Order => "order",
            JetPattern::Slope => "slope",
        }
    }

    fn conclusion(self) -> &'static str {
        match self {
            JetPattern::Value => "ineq-0",
            JetPattern::Order => "ineq-1",
            JetPattern::Slope => "ineq-2",
        }
    }
}

/// `(computed, expected)` for the pattern's identity at `x`; `phi` holds
/// `φ, …, φ^{(p)}`.
pub fn jet_identity(pattern: JetPattern, bump: &BumpFunction, phi: &Tape, p: usize, x: f64) -> Option<(f64, f64)> {
    let inner = phi.eval(x).ok()?;
    let fx = Translated { bump, center: inner[0] };
    let jet = fx.composed_jet(phi, x, p)?;
    Some(match pattern {
        JetPattern::Value => (jet[0], 1.0),
        JetPattern::Order => (jet[p], inner[1].powi(p as i32)),
        JetPattern::Slope => (jet[p], inner[p]),
    })
}

fn relative_error(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}

/// Default sample points: 0, then 16 points per sign on each annulus `(2^{k−1}, 2^k]`.
pub fn lemma1_samples(annuli: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for i in 0..=32 {
        out.push(-1.0 + i as f64 / 16.0);
    }
    for k in 1..=annuli {
        let (lo, hi) = ((k as f64 - 1.0).exp2(), (k as f64).exp2());
        for i in 1..=16 {
            let x = lo + (hi - lo) * i as f64 / 16.0;
            out.push(-x);
            out.push(x);
        }
    }
    out
}

/// Groups sample points into classifier windows by annulus.
fn sample_grid(samples: &[f64]) -> Grid {
    let mut windows: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for &x in samples.iter().filter(|x| x.is_finite()) {
        let k = if x.abs() <= 1.0 { 0 } else { x.abs().log2().ceil() as usize };
        windows.entry(k).or_default().push(x);
    }
    Grid { windows: windows.into_values().collect() }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conclusion {
    pub name: &'static str,
    pub ratio: String,
    pub verdict: GrowthVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Sample {
    pub x: f64,
    pub pattern: JetPattern,
    pub composed_norm: f64,
    pub source_norm: f64,
    pub c1: f64,
    pub identity: f64,
    pub expected: f64,
    pub identity_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contrapositive {
    pub conclusion: &'static str,
    pub trail_x: Vec<f64>,
    pub c1: Vec<f64>,
    /// Geometric mean of the step growth of `c1` along the trail.
    pub mean_growth: f64,
    pub ok: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Implication {
    Consistent,
    Violated,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma1Report {
    pub p: usize,
    pub n: usize,
    pub c0: GrowthVerdict,
    pub conclusions: Vec<Conclusion>,
    pub c1_estimate: f64,
    pub c1_growth: GrowthVerdict,
    pub max_identity_error: f64,
    pub contrapositive: Vec<Contrapositive>,
    pub status: Implication,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
    /// `x,pattern,composed_norm,source_norm,c1,identity_error`
    pub samples_csv: String,
    #[serde(skip)]
    pub samples: Vec<Lemma1Sample>,
}

/// Weights `v, ṽ, w` and the orders `p, n` of one harness run.
#[derive(Clone, Debug)]
pub struct Lemma1Setup {
    pub v: Expr,
    pub v_tilde: Expr,
    pub w: Expr,
    pub phi: Expr,
    pub p: usize,
    pub n: usize,
}

impl Lemma1Setup {
    /// The weights a named preset uses.
    pub fn preset(name: &str, phi: Expr, p: usize, n: usize) -> Result<Lemma1Setup, EmpiricalError> {
        let e = |s: String| parse(&s).map_err(|e| EmpiricalError::Argument(e.to_string()));
        let (v, w) = match name {
            "S" => (e(format!("(1+abs(x))^(-{})", p + n))?, e("(1+abs(x))^(-1)".into())?),
            "OC" | "OM" => (e("1+abs(x)".into())?, e(format!("(1+abs(x))^{}", 2 * (p + 1)))?),
            "B" => (Expr::constant(1.0), Expr::constant(1.0)),
            "EXP" => (e(format!("exp(-{}*abs(x))", p + n))?, e("exp(-abs(x))".into())?),
            other => return Err(EmpiricalError::Argument(format!("unknown preset {other:?}"))),
        };
        Ok(Lemma1Setup { v_tilde: v.clone(), v, w, phi, p, n })
    }

    fn ratios(&self) -> Result<[Expr; 3], EmpiricalError> {
        let vphi = self.v.substitute(&self.phi);
        let d = self.phi.derivatives(self.p)?;
        let div = |num: Expr| Expr::binary(BinaryOp::Div, num, self.w.clone());
        let mul = |a: Expr, b: Expr| Expr::binary(BinaryOp::Mul, a, b);
        let abs = |e: Expr| Expr::unary(UnaryOp::Abs, e);
        Ok([
            div(vphi.clone()),
            div(mul(vphi.clone(), Expr::pow(abs(d[1].clone()), Expr::constant(self.p as f64)))),
            div(mul(vphi, abs(d[self.p].clone()))),
        ])
    }
}

/// Estimates `C₁` from bumps placed at the samples, classifies the three
/// conclusion ratios and checks the implication between them.
pub fn verify_lemma1(setup: &Lemma1Setup, samples: &[f64], c: &Classifier) -> Result<Lemma1Report, EmpiricalError> {
    let (p, n) = (setup.p, setup.n);
    if p == 0 || p > MAX_JET_ORDER || n > MAX_BUMP_DERIVATIVE {
        return Err(EmpiricalError::Argument(format!("need 1 ≤ p ≤ {MAX_JET_ORDER} and n ≤ {MAX_BUMP_DERIVATIVE}")));
    }
    let mut diagnostics = Vec::new();
    let v_sys = WeightSystem::power(setup.v.clone());
    let vt_sys = WeightSystem::power(setup.v_tilde.clone());
    let shifted = v_sys.tables(&c.grid, Argument::Shifted(65));
    let plain = vt_sys.tables(&c.grid, Argument::Identity);
    let errors: Vec<Option<String>> =
        shifted.errors(1).iter().zip(plain.errors(1)).map(|(a, b)| a.clone().or_else(|| b.clone())).collect();
    let c0 = c.classify(&errors, |w, i| shifted.ln(1, w, i) - plain.ln(1, w, i));
    if !c0.is_bounded() {
        diagnostics.push("C₀ = sup v(x+t)/ṽ(x) not confirmed finite".to_string());
    }

    let ratios = setup.ratios()?;
    let conclusions: Vec<Conclusion> = JetPattern::ALL
        .iter()
        .zip(&ratios)
        .map(|(pat, r)| Conclusion { name: pat.conclusion(), ratio: r.to_string(), verdict: c.classify_expr(r) })
        .collect();

    let bumps: Vec<BumpFunction> =
        JetPattern::ALL.iter().map(|pat| bump_with_jet(&pat.jet(p))).collect::<Result<_, _>>()?;
    let phi_tape = Tape::compile(&setup.phi.derivatives(p)?);
    let estimate = |pat: usize, x: f64| estimate_c1(setup, &bumps[pat], JetPattern::ALL[pat], &phi_tape, x);

    let rows: Vec<Lemma1Sample> = samples
        .par_iter()
        .flat_map_iter(|&x| (0..3).map(move |k| (k, x)))
        .map(|(k, x)| estimate(k, x))
        .collect();
    let c1_estimate = rows.iter().map(|r| r.c1).filter(|v| v.is_finite()).fold(0.0, f64::max);
    let max_identity_error = rows.iter().map(|r| r.identity_error).filter(|e| !e.is_nan()).fold(0.0, f64::max);

    let grid = sample_grid(samples);
    let sampled = Classifier { schedule: c.schedule, thresholds: c.thresholds, grid };
    let by_x: BTreeMap<u64, f64> = rows.iter().fold(BTreeMap::new(), |mut m, r| {
        let e = m.entry(r.x.to_bits()).or_insert(0.0f64);
        *e = if r.c1.is_nan() || e.is_nan() { f64::NAN } else { e.max(r.c1) };
        m
    });
    let no_errors = vec![None; sampled.grid.windows.len()];
    let c1_growth = sampled.classify(&no_errors, |w, i| by_x[&sampled.grid.windows[w][i].to_bits()].ln());

    let rho = c.thresholds.rho;
    let contrapositive: Vec<Contrapositive> = conclusions
        .iter()
        .enumerate()
        .filter(|(_, k)| k.verdict.is_diverging())
        .map(|(i, k)| {
            let trail_x: Vec<f64> = k.verdict.witness.iter().map(|w| w.x).collect();
            let c1: Vec<f64> = trail_x.iter().map(|&x| estimate(i, x).c1).collect();
            let mean_growth = match (c1.first(), c1.last()) {
                (Some(a), Some(b)) if c1.len() >= 2 => (b / a).powf(1.0 / (c1.len() - 1) as f64),
                _ => f64::NAN,
            };
            Contrapositive { conclusion: k.name, trail_x, c1, mean_growth, ok: mean_growth >= rho }
        })
        .collect();

    let status = if !c0.is_bounded() {
        Implication::Inconclusive
    } else if !(max_identity_error <= IDENTITY_TOL) {
        diagnostics.push(format!("jet identity error {max_identity_error:e} above {IDENTITY_TOL:e}"));
        Implication::Violated
    } else {
        match c1_growth.tag {
            GrowthTag::Bounded if conclusions.iter().all(|k| k.verdict.is_bounded()) => Implication::Consistent,
            GrowthTag::Bounded if conclusions.iter().any(|k| k.verdict.is_diverging()) => Implication::Violated,
            GrowthTag::Diverging if contrapositive.iter().all(|k| k.ok) => Implication::Consistent,
            GrowthTag::Diverging => Implication::Violated,
            _ => Implication::Inconclusive,
        }
    };

    let mut samples_csv = String::from("x,pattern,composed_norm,source_norm,c1,identity_error\n");
    for r in &rows {
        let _ = writeln!(
            samples_csv,
            "{},{},{:e},{:e},{:e},{:e}",
            r.x,
            r.pattern.name(),
            r.composed_norm,
            r.source_norm,
            r.c1,
            r.identity_error
        );
    }
    Ok(Lemma1Report {
        p,
        n,
        c0,
        conclusions,
        c1_estimate,
        c1_growth,
        max_identity_error,
        contrapositive,
        status,
        diagnostics,
        samples_csv,
        samples: rows,
    })
}

// ‖C_φ(f_x)‖_{w,p} on a window around x, over ‖f_x‖_{ṽ,n}
fn estimate_c1(setup: &Lemma1Setup, bump: &BumpFunction, pattern: JetPattern, phi: &Tape, x: f64) -> Lemma1Sample {
    let p = setup.p;
    let nan = Lemma1Sample {
        x,
        pattern,
        composed_norm: f64::NAN,
        source_norm: f64::NAN,
        c1: f64::NAN,
        identity: f64::NAN,
        expected: f64::NAN,
        identity_error: f64::NAN,
    };
    let Ok(inner) = phi.eval(x) else { return nan };
    if inner.iter().any(|v| !v.is_finite()) {
        return nan;
    }
    let fx = Translated { bump, center: inner[0] };
    let h = (1.0 / inner[1].abs()).min(1.0);
    let mut composed_norm = 0.0f64;
    for i in 0..=64 {
        let s = if i == 32 { x } else { x + h * (i as f64 / 32.0 - 1.0) };
        let (Some(jet), Ok(ws)) = (fx.composed_jet(phi, s, p), setup.w.eval(s)) else { continue };
        for v in jet {
            composed_norm = composed_norm.max(v.abs() / ws);
        }
    }
    let source_norm = fx.seminorm(&setup.v_tilde, setup.n);
    let (identity, expected) = jet_identity(pattern, bump, phi, p, x).unwrap_or((f64::NAN, f64::NAN));
    Lemma1Sample {
        x,
        pattern,
        composed_norm,
        source_norm,
        c1: composed_norm / source_norm,
        identity,
        expected,
        identity_error: relative_error(identity, expected),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GornyEntry {
    pub g: String,
    pub norm: f64,
    pub norm_j: f64,
    pub norm_m: f64,
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GornyReport {
    pub j: usize,
    pub m: usize,
    /// `Ĉ(j, m)`, the largest ratio over the corpus.
    pub constant: f64,
    /// The same over the first half of the corpus.
    pub half_constant: f64,
    /// False when doubling the corpus more than doubles `Ĉ`.
    pub stable: bool,
    pub violations: usize,
    pub excluded: usize,
    pub entries: Vec<GornyEntry>,
    /// `index,norm,norm_j,norm_m,ratio`
    pub csv: String,
}

/// `‖g^{(j)}‖ / (‖g‖^{1−j/m} · max(‖g‖, ‖g^{(m)}‖)^{j/m})` with sup-norms on `[−1, 1]`.
pub fn gorny_entry(g: &Expr, j: usize, m: usize) -> Result<GornyEntry, EmpiricalError> {
    let d = g.derivatives(m)?;
    let tape = Tape::compile(&[d[0].clone(), d[j].clone(), d[m].clone()]);
    let mut norms = [0.0f64; 3];
    for i in 0..GORNY_POINTS {
        let x = -1.0 + 2.0 * i as f64 / (GORNY_POINTS - 1) as f64;
        let vals = tape.eval(x).map_err(|e| EmpiricalError::Eval(e.to_string()))?;
        for (n, v) in norms.iter_mut().zip(&vals) {
            if !v.is_finite() {
                return Err(EmpiricalError::Eval(format!("{g} is not finite at {x}")));
            }
            *n = n.max(v.abs());
        }
    }
    let [norm, norm_j, norm_m] = norms;
    let mut e = GornyEntry { g: g.to_string(), norm, norm_j, norm_m, ratio: None, excluded: None };
    if norm < 1e-12 {
        e.excluded = Some(format!("degenerate: ‖g‖ = {norm:e} < 1e-12"));
        return Ok(e);
    }
    let t = j as f64 / m as f64;
    e.ratio = Some(norm_j / (norm.powf(1.0 - t) * norm.max(norm_m).powf(t)));
    Ok(e)
}

pub fn verify_gorny(corpus: &[Expr], j: usize, m: usize) -> Result<GornyReport, EmpiricalError> {
    if !(1 <= j && j <= m && m <= 8) {
        return Err(EmpiricalError::Argument(format!("need 1 ≤ j ≤ m ≤ 8, got j = {j}, m = {m}")));
    }
    let entries: Vec<GornyEntry> = corpus.par_iter().map(|g| gorny_entry(g, j, m)).collect::<Result<_, _>>()?;
    let max_of = |es: &[GornyEntry]| es.iter().filter_map(|e| e.ratio).fold(0.0, f64::max);
    let constant = max_of(&entries);
    let half_constant = max_of(&entries[..entries.len().div_ceil(2)]);
    let violations = entries.iter().filter_map(|e| e.ratio).filter(|&r| r > constant * (1.0 + 1e-12)).count();
    let mut csv = String::from("index,norm,norm_j,norm_m,ratio\n");
    for (i, e) in entries.iter().enumerate() {
        let r = e.ratio.map_or(String::new(), |r| format!("{r:e}"));
        let _ = writeln!(csv, "{i},{:e},{:e},{:e},{r}", e.norm, e.norm_j, e.norm_m);
    }
    Ok(GornyReport {
        j,
        m,
        constant,
        half_constant,
        stable: constant <= 2.0 * half_constant,
        violations,
        excluded: entries.iter().filter(|e| e.excluded.is_some()).count(),
        entries,
        csv,
    })
}

/// A deterministic corpus of smooth functions on `[−1, 1]`; a longer
/// corpus from the same seed extends a shorter one.
pub fn gorny_corpus(seed: u64, size: usize) -> Vec<Expr> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let num = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| format!("({:.3})", rng.gen_range(lo..hi));
    (0..size)
        .map(|_| {
            let text = match rng.gen_range(0..6) {
                0 => {
                    let deg = rng.gen_range(1..=6);
                    (0..=deg).map(|i| format!("{}*x^{i}", num(&mut rng, -1.0, 1.0))).collect::<Vec<_>>().join("+")
                }
                1 => {
                    let (k, l) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
                    let (a, b, c) = (num(&mut rng, -2.0, 2.0), num(&mut rng, 0.0, 3.0), num(&mut rng, -2.0, 2.0));
                    format!("{a}*sin({k}*x+{b})+{c}*cos({l}*x)")
                }
                2 => format!("exp(-{}*(x-{})^2)", num(&mut rng, 0.5, 4.0), num(&mut rng, -0.5, 0.5)),
                3 => format!("exp({}*x)+{}", num(&mut rng, -2.0, 2.0), num(&mut rng, -1.0, 1.0)),
                4 => format!("1/(1+{}*x^2)", num(&mut rng, 0.5, 4.0)),
                _ => {
                    let k = rng.gen_range(1..=4);
                    format!(
                        "({}+{}*x+{}*x^2)*sin({k}*x+{})",
                        num(&mut rng, -1.0, 1.0),
                        num(&mut rng, -1.0, 1.0),
                        num(&mut rng, -1.0, 1.0),
                        num(&mut rng, 0.0, 3.0)
                    )
                }
            };
            parse(&text).expect("generated corpus entries parse")
        })
        .collect()
}

#[derive(Default)]
struct ComposeScratch {
    slots: Vec<f64>,
    lslots: Vec<LogNum>,
    codes: Vec<u32>,
    status: Vec<u32>,
    inner: Vec<f64>,
    outer: Vec<f64>,
    linner: Vec<LogNum>,
    louter: Vec<LogNum>,
    ln: Vec<f64>,
}

fn needs_log(tape: &Tape, vals: &[f64], status: &[u32]) -> bool {
    vals.iter().zip(status).enumerate().any(|(j, (v, &c))| {
        c == 1 || (c == 0 && (!v.is_finite() || (v.abs() < 1e-290 && !(tape.is_constant_output(j) && *v == 0.0))))
    })
}

fn domain_error(tape: &Tape, status: &[u32], x: f64) -> Option<String> {
    status.iter().find(|&&c| c >= 2).and_then(|&c| tape.error_for(c, x)).map(|e| e.to_string())
}

// ln|(f∘φ)^{(q)}(x)| for q ≤ order into `s.ln`
fn compose_point(ft: &Tape, pt: &Tape, x: f64, order: usize, s: &mut ComposeScratch) -> Result<(), String> {
    pt.eval_lenient(x, &mut s.slots, &mut s.codes, &mut s.inner, &mut s.status);
    if let Some(e) = domain_error(pt, &s.status, x) {
        return Err(e);
    }
    if !needs_log(pt, &s.inner, &s.status) {
        let y = s.inner[0];
        ft.eval_lenient(y, &mut s.slots, &mut s.codes, &mut s.outer, &mut s.status);
        if let Some(e) = domain_error(ft, &s.status, y) {
            return Err(e);
        }
        if !needs_log(ft, &s.outer, &s.status) {
            let jet = faa_di_bruno_jet(&s.outer, &s.inner, order).map_err(|e| e.to_string())?;
            if jet.iter().all(|v| v.is_finite() && (*v == 0.0 || v.abs() >= 1e-290)) {
                s.ln.clear();
                s.ln.extend(jet.iter().map(|v| v.abs().ln()));
                return Ok(());
            }
        }
    }
    pt.eval_lenient(LogNum::from_f64(x), &mut s.lslots, &mut s.codes, &mut s.linner, &mut s.status);
    if let Some(e) = domain_error(pt, &s.status, x) {
        return Err(e);
    }
    let y = s.linner[0];
    ft.eval_lenient(y, &mut s.lslots, &mut s.codes, &mut s.louter, &mut s.status);
    if let Some(e) = domain_error(ft, &s.status, y.to_f64()) {
        return Err(e);
    }
    let jet = faa_di_bruno_jet(&s.louter, &s.linner, order).map_err(|e| e.to_string())?;
    s.ln.clear();
    s.ln.extend(jet.iter().map(|v| {
        let l = v.ln_abs();
        if l == f64::INFINITY {
            f64::NAN
        } else {
            l
        }
    }));
    Ok(())
}

/// `ln|(f∘φ)^{(q)}|`, `q ≤ order`, over the grid via the Faà di Bruno sum.
pub fn composed_tables(f: &Expr, phi: &Expr, order: usize, grid: &Grid) -> Result<Vec<LnTable>, EmpiricalError> {
    let ft = Tape::compile(&f.derivatives(order)?);
    let pt = Tape::compile(&phi.derivatives(order)?);
    Ok(tables_with(order + 1, grid, |w, cols, errors| {
        let mut s = ComposeScratch::default();
        for &x in w {
            match compose_point(&ft, &pt, x, order, &mut s) {
                Ok(()) => {
                    for (col, &l) in cols.iter_mut().zip(&s.ln) {
                        col.push(l);
                    }
                }
                Err(msg) => {
                    for (col, e) in cols.iter_mut().zip(errors.iter_mut()) {
                        col.push(f64::NAN);
                        e.get_or_insert_with(|| msg.clone());
                    }
                }
            }
        }
    }))
}

/// Space family of a theorem part.
pub fn family_of(part: Part) -> Family {
    match part {
        Part::I => Family::K,
        Part::II => Family::OC,
        Part::III => Family::OM,
    }
}

/// The target space of a crosscheck. `𝒪_M` allows `(n_max + 1)·N_max`
/// weight indices per order, since composing with a polynomially growing
/// symbol multiplies the index a function needs.
pub fn target_space(part: Part, w: &WeightSystem) -> SpaceSpec {
    let mut s = SpaceSpec::new(family_of(part), w.clone());
    if part == Part::III {
        s.bounds.n_max_weight *= s.bounds.n_max_order + 1;
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckEntry {
    pub f: String,
    pub source: MembershipTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composed: Option<MembershipTag>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub part: Part,
    pub phi: String,
    pub checker: Overall,
    pub entries: Vec<CrosscheckEntry>,
    pub agreements: usize,
    pub discrepancies: Vec<String>,
    /// `f,source,composed`
    pub csv: String,
}

/// Compares the checker verdict for `C_φ` with the membership of `f∘φ` in
/// the target space, over the `f` that hold in the source space.
///
/// A discrepancy is a Pass with some composed membership Failing, or a Fail
/// with every (and at least one) composed membership Holding.
#[allow(clippy::too_many_arguments)]
pub fn crosscheck(
    v: &WeightSystem,
    w: &WeightSystem,
    phi: &Expr,
    part: Part,
    f_corpus: &[Expr],
    bounds: &Bounds,
    c: &Classifier,
) -> Result<CrosscheckReport, EmpiricalError> {
    let source = SpaceSpec::new(family_of(part), v.clone());
    let tags: Vec<MembershipTag> =
        f_corpus.par_iter().map(|f| membership(f, &source, c).map(|m| m.tag)).collect::<Result<_, _>>()?;
    let order = target_space(part, w).max_order();
    let composed: Vec<Option<Vec<LnTable>>> = f_corpus
        .par_iter()
        .zip(&tags)
        .map(|(f, t)| (*t == MembershipTag::Holds).then(|| composed_tables(f, phi, order, &c.grid)).transpose())
        .collect::<Result<_, _>>()?;
    let d = symbol_tables(phi, bounds, c)?;
    let h = hypothesis(if part == Part::I { "V" } else { "W" }, if part == Part::I { v } else { w }, bounds, c);
    Ok(run_crosscheck(part, v, w, phi, &d, h, f_corpus, &tags, &composed, bounds, c))
}

#[allow(clippy::too_many_arguments)]
fn run_crosscheck(
    part: Part,
    v: &WeightSystem,
    w: &WeightSystem,
    phi: &Expr,
    d: &[LnTable],
    h: crate::criteria::Hypothesis,
    f_corpus: &[Expr],
    tags: &[MembershipTag],
    composed: &[Option<Vec<LnTable>>],
    bounds: &Bounds,
    c: &Classifier,
) -> CrosscheckReport {
    let checker = check_part(part, v, w, phi, d, bounds, c, h).overall;
    let target = target_space(part, w);
    let entries: Vec<CrosscheckEntry> = f_corpus
        .par_iter()
        .zip(tags)
        .zip(composed)
        .map(|((f, &source), tables)| CrosscheckEntry {
            f: f.to_string(),
            source,
            composed: tables.as_ref().filter(|_| source == MembershipTag::Holds).map(|t| membership_from_tables(t, &target, c).tag),
        })
        .collect();
    let included: Vec<&CrosscheckEntry> = entries.iter().filter(|e| e.composed.is_some()).collect();
    let mut discrepancies = Vec::new();
    let mut agreements = 0;
    match checker {
        Overall::Pass => {
            for e in &included {
                match e.composed {
                    Some(MembershipTag::Fails) => discrepancies.push(format!("checker Pass but f∘φ ∉ target for f = {}", e.f)),
                    Some(MembershipTag::Holds) => agreements += 1,
                    _ => {}
                }
            }
        }
        Overall::Fail => {
            agreements = included.iter().filter(|e| e.composed == Some(MembershipTag::Fails)).count();
            if !included.is_empty() && included.iter().all(|e| e.composed == Some(MembershipTag::Holds)) {
                discrepancies.push("checker Fail but every composed membership Holds".to_string());
            }
        }
        Overall::Inconclusive => {}
    }
    let mut csv = String::from("f,source,composed\n");
    for e in &entries {
        let comp = e.composed.map_or(String::new(), |t| format!("{t:?}"));
        let _ = writeln!(csv, "\"{}\",{:?},{comp}", e.f, e.source);
    }
    CrosscheckReport { part, phi: phi.to_string(), checker, entries, agreements, discrepancies, csv }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub runs: Vec<CrosscheckReport>,
    pub discrepancies: usize,
}

/// Crosschecks every `φ` against every system (as both `V` and `W`) and
/// part, sharing memberships and composed tables between runs.
pub fn crosscheck_suite(
    systems: &[WeightSystem],
    parts: &[Part],
    phis: &[Expr],
    f_corpus: &[Expr],
    bounds: &Bounds,
    c: &Classifier,
) -> Result<SuiteReport, EmpiricalError> {
    // sources[s][part][f]
    let mut sources = Vec::new();
    for sys in systems {
        let mut per_part = Vec::new();
        for &part in parts {
            let spec = SpaceSpec::new(family_of(part), sys.clone());
            let tags: Vec<MembershipTag> =
                f_corpus.par_iter().map(|f| membership(f, &spec, c).map(|m| m.tag)).collect::<Result<_, _>>()?;
            per_part.push(tags);
        }
        sources.push(per_part);
    }
    let needed: Vec<bool> =
        (0..f_corpus.len()).map(|i| sources.iter().flatten().any(|t| t[i] == MembershipTag::Holds)).collect();
    let order = systems
        .iter()
        .flat_map(|s| parts.iter().map(|&p| target_space(p, s).max_order()))
        .max()
        .unwrap_or(0);
    let hyps: Vec<_> = systems.iter().map(|s| hypothesis("V", s, bounds, c)).collect();

    let mut runs = Vec::new();
    for phi in phis {
        let d = symbol_tables(phi, bounds, c)?;
        let composed: Vec<Option<Vec<LnTable>>> = f_corpus
            .par_iter()
            .zip(&needed)
            .map(|(f, &need)| need.then(|| composed_tables(f, phi, order, &c.grid)).transpose())
            .collect::<Result<_, _>>()?;
        for (si, sys) in systems.iter().enumerate() {
            for (pi, &part) in parts.iter().enumerate() {
                let mut h = hyps[si].clone();
                if part != Part::I {
                    h.check = "cond-mult(W)".to_string();
                }
                runs.push(run_crosscheck(part, sys, sys, phi, &d, h, f_corpus, &sources[si][pi], &composed, bounds, c));
            }
        }
    }
    let discrepancies = runs.iter().map(|r| r.discrepancies.len()).sum();
    Ok(SuiteReport { runs, discrepancies })
}

/// `x,ratio,ln_ratio` rows of a witness trail.
pub fn trail_csv(trail: &[WitnessPoint]) -> String {
    let mut s = String::from("x,ratio,ln_ratio\n");
    for p in trail {
        let _ = writeln!(s, "{},{:e},{}", p.x, p.ratio, p.ln_ratio);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{Schedule, Thresholds};
    use proptest::prelude::*;

    fn small() -> Classifier {
        Classifier::new(Schedule { annuli: 14, samples: 256 }, Thresholds::default())
    }

    // ψ^{(k)}(0) from the Taylor series of exp(1 − 1/(1 − t)) at t = 0,
    // t = x², composed as a power series in exact rationals
    fn psi_taylor_oracle(k: usize) -> BigRational {
        let n = k / 2 + 1;
        // u(t) = 1 − 1/(1−t) = −t − t² − …
        let u: Vec<BigRational> =
            (0..=n).map(|i| if i == 0 { BigRational::zero() } else { -BigRational::one() }).collect();
        // exp(u) = Σ u^j / j!
        let mut result = vec![BigRational::zero(); n + 1];
        let mut power = vec![BigRational::zero(); n + 1];
        power[0] = BigRational::one();
        let mut fact = BigRational::one();
        for j in 0..=n {
            for i in 0..=n {
                result[i] += &power[i] / &fact;
            }
            let mut next = vec![BigRational::zero(); n + 1];
            for a in 0..=n {
                for b in 0..=(n - a) {
                    next[a + b] += &power[a] * &u[b];
                }
            }
            power = next;
            fact *= BigRational::from_integer(BigInt::from(j + 1));
        }
        if k % 2 == 1 {
            return BigRational::zero();
        }
        &result[k / 2] * BigRational::from_integer(factorial(k))
    }

    #[test]
    fn psi_jet_matches_taylor_oracle() {
        for k in 0..=16 {
            assert_eq!(BigRational::from_integer(psi_jets().at_zero[k].clone()), psi_taylor_oracle(k), "k = {k}");
        }
        assert_eq!(psi_jets().at_zero[2], BigInt::from(-2));
    }

    #[test]
    fn psi_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &x in &[0.1, -0.37, 0.6, 0.85] {
            for k in 0..5 {
                let fd = (psi_derivative(k, x + h) - psi_derivative(k, x - h)) / (2.0 * h);
                let exact = psi_derivative(k + 1, x);
                assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "k = {k}, x = {x}");
            }
        }
    }

    #[test]
    fn bump_examples() {
        let f = bump_with_jet(&JetSpec::unit_value()).unwrap();
        assert_eq!(f.value(0.0), 1.0);
        assert_eq!(f.value(1.0), 0.0);
        assert_eq!(f.value(-1.0), 0.0);
        assert_eq!(f.coefficients[0], 1.0);

        let mut jet = JetSpec::new(5).with(1, 1.0);
        for j in [0, 2, 3, 4, 5] {
            jet = jet.with(j, 0.0);
        }
        let g = bump_with_jet(&jet).unwrap();
        assert!((g.derivative(0.0, 1) - 1.0).abs() <= 1e-10);
        for j in [0, 2, 3, 4, 5] {
            assert!(g.derivative(0.0, j).abs() <= 1e-10);
        }

        let zero = bump_with_jet(&JetSpec::new(4)).unwrap();
        assert!([-0.5, 0.0, 0.3].iter().all(|&x| zero.value(x) == 0.0));
    }

    #[test]
    fn jet_errors() {
        assert!(matches!(bump_with_jet(&JetSpec::new(13)), Err(EmpiricalError::Jet(_))));
        assert!(matches!(bump_with_jet(&JetSpec::new(2).with(3, 1.0)), Err(EmpiricalError::Jet(_))));
    }

    #[test]
    fn generic_path_is_continuous_at_zero() {
        let f = bump_with_jet(&JetSpec::new(6).with(0, 1.0).with(3, -2.0)).unwrap();
        for d in 0..=6 {
            let taylor = f.derivative(0.0, d) + 1e-7 * f.derivative(0.0, d + 1);
            assert!((f.derivative(1e-7, d) - taylor).abs() <= 1e-6, "d = {d}");
        }
    }

    #[test]
    fn translated_examples() {
        let f = bump_with_jet(&JetSpec::unit_value()).unwrap();
        let fx = translated_family(&f, &parse("x").unwrap(), 2.0).unwrap();
        assert_eq!(fx.derivative(2.0, 0), 1.0);
        assert!(fx.derivative(1.9, 0) < 1.0 && fx.derivative(2.1, 0) < 1.0);
        assert_eq!(fx.support(), (1.0, 3.0));
        let sq = translated_family(&f, &parse("x^2+sin(x)").unwrap(), 1.3).unwrap();
        assert_eq!(sq.derivative(sq.center, 0), f.value(0.0));
    }

    #[test]
    fn seminorm_locality() {
        // ‖f_x‖_{ṽ,n} ≤ C₀ ‖f‖_n / v(φ(x)) with v = ṽ = 1+|x|, C₀ = 2
        let f = bump_with_jet(&JetSpec::unit_order(2)).unwrap();
        let v = parse("1+abs(x)").unwrap();
        let phi = parse("x^2").unwrap();
        for &x in &[0.0, 1.5, -7.0, 40.0] {
            let fx = translated_family(&f, &phi, x).unwrap();
            let bound = 2.0 * f.norm(3) / v.eval(phi.eval(x).unwrap()).unwrap();
            assert!(fx.seminorm(&v, 3) <= bound * (1.0 + 1e-12), "x = {x}");
        }
    }

    #[test]
    fn jet_identities_hold() {
        let phi = parse("x^3+sin(x)").unwrap();
        for p in 1..=4 {
            let tape = Tape::compile(&phi.derivatives(p).unwrap());
            for pat in JetPattern::ALL {
                let bump = bump_with_jet(&pat.jet(p)).unwrap();
                for &x in &[-2.5, 0.0, 0.7, 3.0] {
                    let (got, want) = jet_identity(pat, &bump, &tape, p, x).unwrap();
                    assert!(relative_error(got, want) <= 1e-8, "{pat:?} p = {p} x = {x}: {got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn lemma1_bounded_symbol() {
        let c = small();
        let one = Expr::constant(1.0);
        let setup = Lemma1Setup { v: one.clone(), v_tilde: one.clone(), w: one, phi: parse("sin(x)").unwrap(), p: 2, n: 2 };
        let r = verify_lemma1(&setup, &lemma1_samples(10), &c).unwrap();
        assert!(r.conclusions.iter().all(|k| k.verdict.is_bounded()));
        assert_eq!(r.status, Implication::Consistent);
    }

    #[test]
    fn lemma1_degree_counting() {
        let c = small();
        let v = parse("1+abs(x)").unwrap();
        let mk = |w: &str| Lemma1Setup {
            v: v.clone(),
            v_tilde: v.clone(),
            w: parse(w).unwrap(),
            phi: parse("x^2").unwrap(),
            p: 1,
            n: 1,
        };
        let r = verify_lemma1(&mk("(1+abs(x))^3"), &lemma1_samples(10), &c).unwrap();
        assert!(r.conclusions[1].verdict.is_bounded());

        let r = verify_lemma1(&mk("(1+abs(x))^2"), &lemma1_samples(10), &c).unwrap();
        assert!(r.conclusions[1].verdict.is_diverging());
        assert!(r.c1_growth.is_diverging());
        let contra = r.contrapositive.iter().find(|k| k.conclusion == "ineq-1").unwrap();
        assert!(contra.ok, "{contra:?}");
        assert_eq!(r.status, Implication::Consistent);
    }

    #[test]
    fn gorny_examples() {
        let e = gorny_entry(&parse("3").unwrap(), 1, 2).unwrap();
        assert_eq!(e.ratio, Some(0.0));
        for m in 1..=6 {
            // ‖x^m‖ = 1, ‖(x^m)^{(m)}‖ = m!
            let e = gorny_entry(&parse(&format!("x^{m}")).unwrap(), m, m).unwrap();
            assert!((e.ratio.unwrap() - 1.0).abs() < 1e-12);
        }
        let z = gorny_entry(&parse("0*x").unwrap(), 1, 2).unwrap();
        assert!(z.excluded.is_some() && z.ratio.is_none());
        assert!(verify_gorny(&[], 3, 2).is_err());
    }

    #[test]
    fn gorny_trigonometric_corpus() {
        // ‖sin kx‖ = sin(min(k,π/2)), ‖(sin kx)'‖ = k, ‖(sin kx)''‖ = k² ·‖sin kx‖
        let corpus: Vec<Expr> = (1..=10).map(|k| parse(&format!("sin({k}*x)")).unwrap()).collect();
        let r = verify_gorny(&corpus, 1, 2).unwrap();
        let oracle = |k: f64| {
            let s = k.min(std::f64::consts::FRAC_PI_2).sin();
            k / (s.sqrt() * (s.max(k * k * s)).sqrt())
        };
        for (k, e) in (1..=10).zip(&r.entries) {
            assert!((e.ratio.unwrap() - oracle(k as f64)).abs() < 1e-6, "k = {k}");
        }
        assert!(r.stable);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn corpus_is_prefix_stable() {
        let a = gorny_corpus(7, 10);
        let b = gorny_corpus(7, 20);
        assert_eq!(a[..], b[..10]);
        assert_ne!(gorny_corpus(8, 10), a);
    }

    #[test]
    fn composed_tables_match_direct_derivatives() {
        let c = small();
        let f = parse("sin(x)").unwrap();
        let phi = parse("x^2+x").unwrap();
        let comp = composed_tables(&f, &phi, 3, &c.grid).unwrap();
        let direct = crate::weights::grid::ln_tables(&f.substitute(&phi).derivatives(3).unwrap(), &c.grid);
        for q in 0..=3 {
            for w in 0..4 {
                for (a, b) in comp[q].values[w].iter().zip(&direct[q].values[w]) {
                    assert!((a - b).abs() < 1e-6 || (a.exp() - b.exp()).abs() < 1e-9, "q = {q}");
                }
            }
        }
    }

    #[test]
    fn crosscheck_examples() {
        let c = small();
        let b = Bounds::default();
        let poly = WeightSystem::power(parse("1+abs(x)").unwrap());
        let corpus: Vec<Expr> = ["sin(x)", "exp(-x^2)", "tanh(x)", "x^3"].iter().map(|s| parse(s).unwrap()).collect();
        let r = crosscheck(&poly, &poly, &parse("x^2").unwrap(), Part::III, &corpus, &b, &c).unwrap();
        assert_eq!(r.checker, Overall::Pass);
        assert!(r.entries.iter().all(|e| e.composed == Some(MembershipTag::Holds)), "{:?}", r.entries);
        assert!(r.discrepancies.is_empty());

        let r = crosscheck(&poly, &poly, &parse("x^2").unwrap(), Part::II, &corpus[..1], &b, &c).unwrap();
        assert_eq!(r.checker, Overall::Fail);
        assert_eq!(r.entries[0].composed, Some(MembershipTag::Fails));

        let gauss: Vec<Expr> = ["exp(-x^2)", "x*exp(-x^2)"].iter().map(|s| parse(s).unwrap()).collect();
        let r = crosscheck(&poly, &poly, &parse("x^3+x").unwrap(), Part::I, &gauss, &b, &c).unwrap();
        assert_eq!(r.checker, Overall::Pass);
        assert!(r.entries.iter().all(|e| e.composed == Some(MembershipTag::Holds)), "{:?}", r.entries);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn jet_residuals_and_support(q in 0usize..=12, vals in proptest::collection::vec(-3.0f64..3.0, 13), x in 1.0f64..5.0) {
            let mut jet = JetSpec::new(q);
            for (p, &v) in vals.iter().enumerate().take(q + 1) {
                jet = jet.with(p, v);
            }
            let f = bump_with_jet(&jet).unwrap();
            prop_assert!(f.residual <= RESIDUAL_TOL);
            for p in 0..=q {
                prop_assert!((f.derivative(0.0, p) - jet.value(p)).abs() <= 1e-10);
            }
            for d in 0..=q + 6 {
                prop_assert_eq!(f.derivative(x, d), 0.0);
                prop_assert_eq!(f.derivative(-x, d), 0.0);
            }
        }

        #[test]
        fn translation_preserves_norms(x in -3.0f64..3.0, n in 0usize..4) {
            let f = bump_with_jet(&JetSpec::new(3).with(0, 1.0).with(2, 0.5)).unwrap();
            let fx = translated_family(&f, &parse("x+sin(x)").unwrap(), x).unwrap();
            prop_assert_eq!(fx.norm(n), f.norm(n));
            let sampled = support_offsets()
                .flat_map(|u| (0..=n).map(move |j| (u, j)))
                .map(|(u, j)| fx.derivative(fx.center + u, j).abs())
                .fold(0.0, f64::max);
            prop_assert!((sampled - f.norm(n)).abs() <= 1e-12 * f.norm(n).max(1.0));
        }
    }
}
