//! Characterising conditions for `C_φ` between weighted spaces.
//!
//! | part | spaces          | (a)                            | (b)                                         |
//! |------|-----------------|--------------------------------|---------------------------------------------|
//! | I    | `𝒦_V → 𝒦_W`     | `∀M ∃N: w_M / v_N(φ)`          | `∀p ∃N: |φ^{(p)}| / v_N(φ)`                 |
//! | II   | `𝒪_{C,V} → 𝒪_{C,W}` | `∀N ∃M: v_N(φ) / w_M`      | `∃M ∀p,k: |φ^{(p)}| / w_M^{1/k}`            |
//! | III  | `𝒪_{M,V} → 𝒪_{M,W}` | `∀N ∃M: v_N(φ) / w_M`      | `∀p ∃M: |φ^{(p)}| / w_M`                    |
//!
//! Each ratio must be bounded on ℝ. A `∀X ∃Y` search ranges `Y` over
//! `0..=Y_max·max(X, 1)`; the `∃M ∀p,k` search ranges `k` over
//! `1..=k_max·max(M, 1)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{parse, DiffError, Expr};
use crate::spaces::{Family, MembershipTag, SpaceSpec};
use crate::weights::grid::ln_tables;
use crate::weights::{
    check_cond_mult, divergence_persists, Argument, Classifier, GrowthTag, GrowthVerdict, LnTable, WeightSystem,
    WeightTable, WitnessPoint,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CriteriaError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("unknown preset {0:?} (expected S, OC, OM, B or EXP)")]
    UnknownPreset(String),
    #[error("source and target spaces differ in family")]
    FamilyMismatch,
    #[error("no checker for this family")]
    UnsupportedFamily,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    #[serde(rename = "N_max")]
    pub n_max: usize,
    #[serde(rename = "M_max")]
    pub m_max: usize,
    pub p_max: usize,
    pub k_max: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds { n_max: 8, m_max: 8, p_max: 6, k_max: 8 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Overall {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Part {
    I,
    II,
    III,
}

/// Quantified indices of one cell; absent ones are omitted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Indices {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CondCell {
    #[serde(flatten)]
    pub at: Indices,
    pub verdict: GrowthVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Condition {
    pub pattern: &'static str,
    pub tag: MembershipTag,
    pub cells: Vec<CondCell>,
    #[serde(skip)]
    witness: Option<(Indices, Vec<WitnessPoint>)>,
}

impl Condition {
    fn trivial() -> Condition {
        Condition { pattern: "none", tag: MembershipTag::Holds, cells: Vec::new(), witness: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Conditions {
    pub a: Condition,
    pub b: Condition,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub condition: &'static str,
    pub indices: Indices,
    pub trail: Vec<WitnessPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Hypothesis {
    pub check: String,
    pub ok: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriteriaVerdict {
    pub overall: Overall,
    pub conditions: Conditions,
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<Hypothesis>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

/// The cond-mult hypothesis on `sys` with `K ≤ 2·N_max`.
pub fn hypothesis(name: &str, sys: &WeightSystem, bounds: &Bounds, c: &Classifier) -> Hypothesis {
    let r = check_cond_mult(sys, bounds.n_max, 2 * bounds.n_max, c);
    Hypothesis { check: format!("cond-mult({name})"), ok: r.ok, failures: r.failures }
}

/// `ln|φ^{(p)}|` tables for `p = 0..=p_max`.
pub fn symbol_tables(phi: &Expr, bounds: &Bounds, c: &Classifier) -> Result<Vec<LnTable>, CriteriaError> {
    Ok(ln_tables(&phi.derivatives(bounds.p_max)?, &c.grid))
}

pub fn check_k(v: &WeightSystem, w: &WeightSystem, phi: &Expr, bounds: &Bounds, c: &Classifier) -> Result<CriteriaVerdict, CriteriaError> {
    let h = hypothesis("V", v, bounds, c);
    let d = symbol_tables(phi, bounds, c)?;
    Ok(check_part(Part::I, v, w, phi, &d, bounds, c, h))
}

pub fn check_oc(v: &WeightSystem, w: &WeightSystem, phi: &Expr, bounds: &Bounds, c: &Classifier) -> Result<CriteriaVerdict, CriteriaError> {
    let h = hypothesis("W", w, bounds, c);
    let d = symbol_tables(phi, bounds, c)?;
    Ok(check_part(Part::II, v, w, phi, &d, bounds, c, h))
}

pub fn check_om(v: &WeightSystem, w: &WeightSystem, phi: &Expr, bounds: &Bounds, c: &Classifier) -> Result<CriteriaVerdict, CriteriaError> {
    let h = hypothesis("W", w, bounds, c);
    let d = symbol_tables(phi, bounds, c)?;
    Ok(check_part(Part::III, v, w, phi, &d, bounds, c, h))
}

/// Pass iff `φ^{(p)}` is bounded for `1 ≤ p ≤ p_max`.
pub fn check_b(phi: &Expr, bounds: &Bounds, c: &Classifier) -> Result<CriteriaVerdict, CriteriaError> {
    let d = symbol_tables(phi, bounds, c)?;
    let cells: Vec<CondCell> = (1..=bounds.p_max)
        .into_par_iter()
        .map(|p| CondCell { at: Indices { p: Some(p), ..Default::default() }, verdict: c.classify_table(&d[p]) })
        .collect();
    let b = forall("∀p", cells);
    Ok(assemble(Condition::trivial(), b, None))
}

/// Runs one theorem part given precomputed symbol tables and hypothesis.
#[allow(clippy::too_many_arguments)]
pub fn check_part(
    part: Part,
    v: &WeightSystem,
    w: &WeightSystem,
    phi: &Expr,
    d: &[LnTable],
    bounds: &Bounds,
    c: &Classifier,
    h: Hypothesis,
) -> CriteriaVerdict {
    let wx = w.tables(&c.grid, Argument::Identity);
    let vphi = v.tables(&c.grid, Argument::Composed(phi));
    let (rho, t) = (c.thresholds.rho, c.thresholds.t);
    let (a, b) = match part {
        Part::I => {
            let a = forall_exists("∀M ∃N", 0..=bounds.m_max, |m| 0..=bounds.n_max * m.max(1), (rho, t), |m, n| {
                let at = Indices { m: Some(m), n: Some(n), ..Default::default() };
                (at, ratio(c, &wx, m, &vphi, n))
            });
            let b = forall_exists("∀p ∃N", 1..=bounds.p_max, |p| 0..=bounds.n_max * p, (rho, t), |p, n| {
                let at = Indices { p: Some(p), n: Some(n), ..Default::default() };
                (at, derivative_ratio(c, &d[p], &vphi, n, 1.0))
            });
            (a, b)
        }
        Part::II | Part::III => {
            let a = forall_exists("∀N ∃M", 0..=bounds.n_max, |n| 0..=bounds.m_max * n.max(1), (rho, t), |n, m| {
                let at = Indices { n: Some(n), m: Some(m), ..Default::default() };
                (at, ratio(c, &vphi, n, &wx, m))
            });
            let b = if part == Part::II {
                exists_forall(bounds, (rho, t), |m, p, k| {
                    let at = Indices { m: Some(m), p: Some(p), k: Some(k), n: None };
                    (at, derivative_ratio(c, &d[p], &wx, m, 1.0 / k as f64))
                })
            } else {
                forall_exists("∀p ∃M", 1..=bounds.p_max, |p| 0..=bounds.m_max * p, (rho, t), |p, m| {
                    let at = Indices { p: Some(p), m: Some(m), ..Default::default() };
                    (at, derivative_ratio(c, &d[p], &wx, m, 1.0))
                })
            };
            (a, b)
        }
    };
    assemble(a, b, Some(h))
}

// ln(num_i / den_j) for two weight tables
fn ratio(c: &Classifier, num: &WeightTable, i: usize, den: &WeightTable, j: usize) -> GrowthVerdict {
    let errors = merge(num.errors(i), den.errors(j));
    c.classify(&errors, |w, x| num.ln(i, w, x) - den.ln(j, w, x))
}

// ln(|φ^{(p)}| / den_j^{scale})
fn derivative_ratio(c: &Classifier, dp: &LnTable, den: &WeightTable, j: usize, scale: f64) -> GrowthVerdict {
    let errors = merge(&dp.errors, den.errors(j));
    c.classify(&errors, |w, x| dp.get(w, x) - scale * den.ln(j, w, x))
}

fn merge(a: &[Option<String>], b: &[Option<String>]) -> Vec<Option<String>> {
    (0..a.len().max(b.len())).map(|w| a.get(w).cloned().flatten().or_else(|| b.get(w).cloned().flatten())).collect()
}

fn forall(pattern: &'static str, cells: Vec<CondCell>) -> Condition {
    let mut tag = MembershipTag::Holds;
    let mut witness = None;
    for c in &cells {
        match c.verdict.tag {
            GrowthTag::Diverging => {
                tag = MembershipTag::Fails;
                witness = Some((c.at, c.verdict.witness.clone()));
                break;
            }
            GrowthTag::Inconclusive => tag = MembershipTag::Inconclusive,
            GrowthTag::Bounded => {}
        }
    }
    Condition { pattern, tag, cells, witness }
}

fn forall_exists<X, Y, F>(pattern: &'static str, xs: X, ys: impl Fn(usize) -> Y + Sync, (rho, c_t): (f64, usize), cell: F) -> Condition
where
    X: Iterator<Item = usize>,
    Y: Iterator<Item = usize>,
    F: Fn(usize, usize) -> (Indices, GrowthVerdict) + Sync,
{
    let xs: Vec<usize> = xs.collect();
    let rows: Vec<(MembershipTag, Vec<CondCell>)> = xs
        .par_iter()
        .map(|&x| {
            let mut cells = Vec::new();
            let mut all_diverge = true;
            let mut slopes = Vec::new();
            for y in ys(x) {
                let (at, verdict) = cell(x, y);
                let tag = verdict.tag;
                slopes.push((y, verdict.terminal_slope(c_t)));
                cells.push(CondCell { at, verdict });
                match tag {
                    GrowthTag::Bounded => return (MembershipTag::Holds, cells),
                    GrowthTag::Inconclusive => all_diverge = false,
                    GrowthTag::Diverging => {}
                }
            }
            let tag = if all_diverge && divergence_persists(&slopes, rho) {
                MembershipTag::Fails
            } else {
                MembershipTag::Inconclusive
            };
            (tag, cells)
        })
        .collect();
    let mut tag = MembershipTag::Holds;
    let mut witness = None;
    let mut cells = Vec::new();
    for (t, row) in rows {
        match t {
            MembershipTag::Fails if witness.is_none() => {
                tag = MembershipTag::Fails;
                let last = row.last().expect("exhausted rows are non-empty");
                witness = Some((last.at, last.verdict.witness.clone()));
            }
            MembershipTag::Inconclusive if tag == MembershipTag::Holds => tag = MembershipTag::Inconclusive,
            _ => {}
        }
        cells.extend(row);
    }
    Condition { pattern, tag, cells, witness }
}

fn exists_forall<F>(bounds: &Bounds, (rho, c_t): (f64, usize), cell: F) -> Condition
where
    F: Fn(usize, usize, usize) -> (Indices, GrowthVerdict) + Sync,
{
    let ms: Vec<usize> = (0..=bounds.m_max).collect();
    let rows: Vec<(MembershipTag, f64, Vec<CondCell>)> = ms
        .par_iter()
        .map(|&m| {
            let mut cells = Vec::new();
            let mut tag = MembershipTag::Holds;
            let mut slope = f64::NEG_INFINITY;
            for p in 1..=bounds.p_max {
                for k in 1..=bounds.k_max * m.max(1) {
                    let (at, verdict) = cell(m, p, k);
                    match verdict.tag {
                        GrowthTag::Diverging => {
                            tag = MembershipTag::Fails;
                            slope = slope.max(verdict.terminal_slope(c_t));
                        }
                        GrowthTag::Inconclusive if tag == MembershipTag::Holds => tag = MembershipTag::Inconclusive,
                        _ => {}
                    }
                    cells.push(CondCell { at, verdict });
                }
            }
            (tag, slope, cells)
        })
        .collect();
    let mut cells = Vec::new();
    let mut found = None;
    let mut all_fail = true;
    let mut slopes = Vec::new();
    for (m, (t, slope, row)) in rows.into_iter().enumerate() {
        match t {
            MembershipTag::Holds if found.is_none() => found = Some(m),
            MembershipTag::Holds => {}
            MembershipTag::Inconclusive => all_fail = false,
            MembershipTag::Fails => slopes.push((m, slope)),
        }
        if found.is_none() || found == Some(m) {
            cells.extend(row);
        }
    }
    let pattern = "∃M ∀p,k";
    if found.is_some() {
        return Condition { pattern, tag: MembershipTag::Holds, cells, witness: None };
    }
    if all_fail && divergence_persists(&slopes, rho) {
        let last_m = bounds.m_max;
        let witness = cells
            .iter()
            .find(|c| c.at.m == Some(last_m) && c.verdict.is_diverging())
            .map(|c| (c.at, c.verdict.witness.clone()));
        return Condition { pattern, tag: MembershipTag::Fails, cells, witness };
    }
    Condition { pattern, tag: MembershipTag::Inconclusive, cells, witness: None }
}

fn assemble(a: Condition, b: Condition, h: Option<Hypothesis>) -> CriteriaVerdict {
    let mut diagnostics = Vec::new();
    let mut overall = match (a.tag, b.tag) {
        (MembershipTag::Holds, MembershipTag::Holds) => Overall::Pass,
        (MembershipTag::Fails, _) | (_, MembershipTag::Fails) => Overall::Fail,
        _ => Overall::Inconclusive,
    };
    if let Some(h) = &h {
        if !h.ok {
            diagnostics.push(format!("hypothesis {} not confirmed; the equivalence does not apply", h.check));
            overall = Overall::Inconclusive;
        }
    }
    let witness = [("a", &a), ("b", &b)]
        .into_iter()
        .find_map(|(name, cond)| {
            (cond.tag == MembershipTag::Fails).then(|| cond.witness.clone()).flatten().map(|(indices, trail)| Witness {
                condition: name,
                indices,
                trail,
            })
        })
        .filter(|_| overall == Overall::Fail);
    CriteriaVerdict { overall, conditions: Conditions { a, b }, witness, hypothesis: h, diagnostics }
}

/// Source and target spaces of a named classical setting.
pub fn preset(name: &str) -> Result<(SpaceSpec, SpaceSpec), CriteriaError> {
    let poly = || WeightSystem::power(parse("1+abs(x)").expect("valid literal"));
    let spec = match name {
        "S" => SpaceSpec::new(Family::K, poly()),
        "OC" => SpaceSpec::new(Family::OC, poly()),
        "OM" => SpaceSpec::new(Family::OM, poly()),
        "B" => SpaceSpec::new(Family::K, WeightSystem::constant()),
        "EXP" => SpaceSpec::new(Family::K, WeightSystem::power(parse("exp(abs(x))").expect("valid literal"))),
        other => return Err(CriteriaError::UnknownPreset(other.to_string())),
    };
    Ok((spec.clone(), spec))
}

/// Theorem part for a pair of spaces.
pub fn part_for(source: &SpaceSpec, target: &SpaceSpec) -> Result<Part, CriteriaError> {
    match (source.family, target.family) {
        (Family::K, Family::K) => Ok(Part::I),
        (Family::OC, Family::OC) => Ok(Part::II),
        (Family::OM, Family::OM) => Ok(Part::III),
        (a, b) if a != b => Err(CriteriaError::FamilyMismatch),
        _ => Err(CriteriaError::UnsupportedFamily),
    }
}

/// Dispatches to the checker for the spaces' family.
pub fn check(source: &SpaceSpec, target: &SpaceSpec, phi: &Expr, bounds: &Bounds, c: &Classifier) -> Result<(Part, CriteriaVerdict), CriteriaError> {
    let part = part_for(source, target)?;
    let (v, w) = (&source.system, &target.system);
    let verdict = match part {
        Part::I => check_k(v, w, phi, bounds, c)?,
        Part::II => check_oc(v, w, phi, bounds, c)?,
        Part::III => check_om(v, w, phi, bounds, c)?,
    };
    Ok((part, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{membership, REGRESSION_CORPUS};
    use crate::weights::{Schedule, Thresholds};
    use proptest::prelude::*;

    fn small() -> Classifier {
        Classifier::new(Schedule { annuli: 14, samples: 256 }, Thresholds::default())
    }

    fn poly() -> WeightSystem {
        WeightSystem::power(parse("1+abs(x)").unwrap())
    }

    fn run(part: Part, phi: &str) -> CriteriaVerdict {
        let (c, b, p) = (small(), Bounds::default(), parse(phi).unwrap());
        match part {
            Part::I => check_k(&poly(), &poly(), &p, &b, &c),
            Part::II => check_oc(&poly(), &poly(), &p, &b, &c),
            Part::III => check_om(&poly(), &poly(), &p, &b, &c),
        }
        .unwrap()
    }

    #[test]
    fn schwartz_examples() {
        assert_eq!(run(Part::I, "x^3+x").overall, Overall::Pass);
        for phi in ["sin(x)", "exp(x)"] {
            let v = run(Part::I, phi);
            assert_eq!(v.overall, Overall::Fail, "{phi}");
            let w = v.witness.unwrap();
            assert_eq!(w.condition, "a");
            assert!(v.conditions.a.cells.iter().any(|c| c.verdict.is_diverging()));
        }
        let v = run(Part::I, "exp(x)");
        assert!(v.witness.unwrap().trail.iter().all(|p| p.x < 0.0));
    }

    #[test]
    fn very_slowly_increasing_examples() {
        let v = run(Part::II, "x^2");
        assert_eq!(v.overall, Overall::Fail);
        let w = v.witness.unwrap();
        assert_eq!((w.condition, w.indices.p), ("b", Some(1)));
        assert_eq!(v.conditions.a.tag, MembershipTag::Holds);
        assert_eq!(run(Part::II, "x+sin(x)").overall, Overall::Pass);
        assert_eq!(run(Part::II, "2*x").overall, Overall::Pass);
    }

    #[test]
    fn slowly_increasing_examples() {
        assert_eq!(run(Part::III, "x^2").overall, Overall::Pass);
        assert_eq!(run(Part::III, "sin(x^2)").overall, Overall::Pass);
        let v = run(Part::III, "exp(x)");
        assert_eq!(v.overall, Overall::Fail);
        assert_eq!(v.conditions.b.tag, MembershipTag::Fails);
    }

    #[test]
    fn bounded_derivative_examples() {
        let (c, b) = (small(), Bounds::default());
        for (phi, want) in [("sin(x)", Overall::Pass), ("x", Overall::Pass), ("x^2", Overall::Fail)] {
            assert_eq!(check_b(&parse(phi).unwrap(), &b, &c).unwrap().overall, want, "{phi}");
        }
    }

    #[test]
    fn identity_passes_every_preset_part() {
        for part in [Part::I, Part::II, Part::III] {
            assert_eq!(run(part, "x").overall, Overall::Pass);
        }
    }

    #[test]
    fn hypothesis_failure_is_inconclusive() {
        let (c, b) = (small(), Bounds { n_max: 2, m_max: 2, p_max: 2, k_max: 2 });
        let bad: WeightSystem =
            serde_json::from_str(r#"{"kind": "explicit", "list": ["exp(x^2)", "exp(x^2)", "exp(3*x^2)"]}"#).unwrap();
        let v = check_oc(&bad, &bad, &parse("x").unwrap(), &b, &c).unwrap();
        assert_eq!(v.overall, Overall::Inconclusive);
        assert!(!v.hypothesis.unwrap().ok);
    }

    #[test]
    fn presets() {
        assert_eq!(preset("S").unwrap().0.family, Family::K);
        assert!(preset("B").unwrap().0.system.is_constant_one());
        assert!(preset("Q").is_err());
        let (s, t) = preset("OM").unwrap();
        assert_eq!(part_for(&s, &t).unwrap(), Part::III);
    }

    #[test]
    fn om_check_matches_symbol_membership() {
        let c = small();
        let b = Bounds::default();
        for phi in REGRESSION_CORPUS {
            let p = parse(phi).unwrap();
            let v = check_om(&poly(), &poly(), &p, &b, &c).unwrap();
            let m = membership(&p, &SpaceSpec::new(Family::OM, poly()), &c).unwrap();
            let a_ok = v.conditions.a.tag == MembershipTag::Holds;
            assert_eq!(v.overall == Overall::Pass, m.holds() && a_ok, "{phi}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10))]

        #[test]
        fn enlarging_bounds_never_flips(fi in 0usize..12, part in 0usize..3, n in 1usize..4) {
            let c = small();
            let phi = parse(REGRESSION_CORPUS[fi]).unwrap();
            let run = |b: Bounds| {
                let f = [check_k, check_oc, check_om][part];
                f(&poly(), &poly(), &phi, &b, &c).unwrap()
            };
            let small_b = Bounds { n_max: n, m_max: n, p_max: 3, k_max: n };
            let lo = run(small_b).overall;
            let hi = run(Bounds { n_max: n + 2, m_max: n + 2, p_max: 3, k_max: n + 2 });
            // a new failure may only come from a row beyond the smaller bounds
            if lo == Overall::Pass && hi.overall == Overall::Fail {
                let w = hi.witness.unwrap();
                let outside = match (w.condition, part) {
                    ("a", 0) => w.indices.m > Some(small_b.m_max),
                    ("a", _) => w.indices.n > Some(small_b.n_max),
                    (_, 1) => w.indices.m > Some(small_b.m_max),
                    _ => false,
                };
                prop_assert!(outside);
            }
            prop_assert!(!(lo == Overall::Fail && hi.overall == Overall::Pass));
        }
    }
}
