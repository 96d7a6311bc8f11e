//! Weighted seminorms and membership in the weighted function spaces.
//!
//! Quantifier patterns, with `‖f‖_{v,n} = max_{p≤n} sup |f^{(p)}|/v`:
//!
//! | family | condition                         |
//! |--------|-----------------------------------|
//! | `K`    | `∀N: ‖f‖_{1/v_N, N} < ∞`          |
//! | `OC`   | `∃N ∀n: ‖f‖_{v_N, n} < ∞`         |
//! | `OM`   | `∀n ∃N: ‖f‖_{v_N, n} < ∞`         |
//! | `B`    | `∀n: ‖f‖_{v_N, n} < ∞`, `N` fixed |
//! | `OMn`  | `∃N: ‖f‖_{v_N, n} < ∞`, `n` fixed |

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{DiffError, Expr};
use crate::weights::grid::{ln_tables, merged_errors};
use crate::weights::{divergence_persists, Argument, Classifier, GrowthTag, GrowthVerdict, LnTable, WeightSystem, WeightTable};

/// The regression corpus: symbols and test functions used by the crosschecks.
pub const REGRESSION_CORPUS: [&str; 12] = [
    "x",
    "2*x",
    "x^2",
    "x^3+x",
    "sin(x)",
    "sin(x^2)",
    "exp(-x^2)",
    "x*exp(-x^2)",
    "exp(x)",
    "tanh(x)",
    "1/(1+x^2)",
    "x+sin(x)",
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error(transparent)]
    Diff(#[from] DiffError),
    #[error("{0}")]
    Eval(String),
    #[error("space descriptor: {0}")]
    Descriptor(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    K,
    OC,
    OM,
    /// `ℬ_{v_N}` for a fixed `N`.
    B(usize),
    /// `𝒪ⁿ_{M,V}` for a fixed `n`.
    OMn(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceBounds {
    #[serde(rename = "N_max")]
    pub n_max_weight: usize,
    #[serde(rename = "n_max")]
    pub n_max_order: usize,
}

impl Default for SpaceBounds {
    fn default() -> Self {
        SpaceBounds { n_max_weight: 8, n_max_order: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceJson", into = "SpaceJson")]
pub struct SpaceSpec {
    pub family: Family,
    pub system: WeightSystem,
    pub bounds: SpaceBounds,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceJson {
    family: String,
    system: WeightSystem,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(default)]
    bounds: SpaceBounds,
}

impl TryFrom<SpaceJson> for SpaceSpec {
    type Error = SpaceError;
    fn try_from(j: SpaceJson) -> Result<Self, SpaceError> {
        let need_n = || j.n.ok_or_else(|| SpaceError::Descriptor(format!("family {:?} needs \"n\"", j.family)));
        let family = match j.family.as_str() {
            "K" => Family::K,
            "OC" => Family::OC,
            "OM" => Family::OM,
            "B" => Family::B(need_n()?),
            "OMn" => Family::OMn(need_n()?),
            other => return Err(SpaceError::Descriptor(format!("unknown family {other:?}"))),
        };
        if j.bounds.n_max_order == 0 && matches!(family, Family::OC | Family::OM | Family::B(_)) {
            return Err(SpaceError::Descriptor("n_max must be positive".into()));
        }
        Ok(SpaceSpec { family, system: j.system, bounds: j.bounds })
    }
}

impl From<SpaceSpec> for SpaceJson {
    fn from(s: SpaceSpec) -> SpaceJson {
        let (family, n) = match s.family {
            Family::K => ("K", None),
            Family::OC => ("OC", None),
            Family::OM => ("OM", None),
            Family::B(n) => ("B", Some(n)),
            Family::OMn(n) => ("OMn", Some(n)),
        };
        SpaceJson { family: family.into(), system: s.system, n, bounds: s.bounds }
    }
}

impl SpaceSpec {
    pub fn new(family: Family, system: WeightSystem) -> SpaceSpec {
        SpaceSpec { family, system, bounds: SpaceBounds::default() }
    }

    /// Highest derivative order membership looks at.
    pub fn max_order(&self) -> usize {
        let b = self.bounds;
        match self.family {
            Family::K => b.n_max_weight,
            Family::OC => b.n_max_order.max(b.n_max_weight + 1),
            Family::OM | Family::B(_) => b.n_max_order,
            Family::OMn(n) => n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MembershipTag {
    Holds,
    Fails,
    Inconclusive,
}

/// One seminorm finiteness test: `‖f‖` with weight index `N` and order `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cell {
    #[serde(rename = "N")]
    pub weight_index: usize,
    pub n: usize,
    pub tag: GrowthTag,
    /// The first derivative order that is not bounded, with its verdict.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    pub verdict: GrowthVerdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipVerdict {
    pub tag: MembershipTag,
    pub cells: Vec<Cell>,
    /// Indices `(N, n)` responsible for the verdict: the index found by an
    /// existential search, or the failing one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<String>,
}

impl MembershipVerdict {
    pub fn holds(&self) -> bool {
        self.tag == MembershipTag::Holds
    }

    pub fn fails(&self) -> bool {
        self.tag == MembershipTag::Fails
    }
}

/// `ln|f^{(p)}|` on the grid for `p = 0..=order`.
pub fn derivative_tables(f: &Expr, order: usize, c: &Classifier) -> Result<Vec<LnTable>, SpaceError> {
    Ok(ln_tables(&f.derivatives(order)?, &c.grid))
}

/// `max_{p≤n} sup_{|x|≤radius} |f^{(p)}(x)|/v(x)` on the truncated grid.
pub fn seminorm(f: &Expr, v: &Expr, n: usize, radius: f64, c: &Classifier) -> Result<f64, SpaceError> {
    let grid = c.grid.truncated(radius);
    let mut exprs = f.derivatives(n)?;
    exprs.push(v.clone());
    let t = ln_tables(&exprs, &grid);
    let vt = t.last().unwrap();
    let mut best = f64::NEG_INFINITY;
    for d in &t[..=n] {
        if let Some(e) = merged_errors(&[d, vt]).into_iter().flatten().next() {
            return Err(SpaceError::Eval(e));
        }
        for (w, row) in d.values.iter().enumerate() {
            for (i, &l) in row.iter().enumerate() {
                let r = l - vt.get(w, i);
                if r.is_nan() {
                    return Ok(f64::INFINITY);
                }
                best = best.max(r);
            }
        }
    }
    Ok(best.exp())
}

/// Membership of `f` in `space`.
pub fn membership(f: &Expr, space: &SpaceSpec, c: &Classifier) -> Result<MembershipVerdict, SpaceError> {
    let d = derivative_tables(f, space.max_order(), c)?;
    Ok(membership_from_tables(&d, space, c))
}

/// Membership given `ln|g^{(p)}|` tables for `p = 0..=space.max_order()`.
pub fn membership_from_tables(d: &[LnTable], space: &SpaceSpec, c: &Classifier) -> MembershipVerdict {
    let wt = space.system.tables(&c.grid, Argument::Identity);
    let mut m = Search { d, wt: &wt, c, decay: space.family == Family::K, cells: Vec::new() };
    let b = space.bounds;
    match space.family {
        Family::K => m.forall((0..=b.n_max_weight).map(|n| (n, n))),
        Family::B(nw) => m.forall((0..=b.n_max_order).map(|n| (nw, n))),
        Family::OMn(n) => m.exists((0..=b.n_max_weight * n.max(1)).map(|nw| (nw, n))),
        Family::OM => {
            let mut diagnostics = Vec::new();
            let mut pending = None;
            for n in 0..=b.n_max_order {
                let r = m.exists_tag((0..=b.n_max_weight * n.max(1)).map(|nw| (nw, n)));
                match r.0 {
                    MembershipTag::Fails => return m.finish(MembershipTag::Fails, Some((b.n_max_weight * n.max(1), n)), diagnostics),
                    MembershipTag::Inconclusive => {
                        diagnostics.push(format!("n = {n}: no bounded N and not every N diverges"));
                        pending.get_or_insert(n);
                    }
                    MembershipTag::Holds => {}
                }
            }
            let tag = if pending.is_some() { MembershipTag::Inconclusive } else { MembershipTag::Holds };
            m.finish(tag, None, diagnostics)
        }
        Family::OC => {
            let mut all_fail = true;
            let mut slopes = Vec::new();
            for nw in 0..=b.n_max_weight {
                let rows = (0..=b.n_max_order.max(nw + 1)).map(|n| (nw, n));
                let (tag, slope) = m.full_row(rows);
                match tag {
                    MembershipTag::Holds => return m.finish(MembershipTag::Holds, Some((nw, b.n_max_order.max(nw + 1))), vec![]),
                    MembershipTag::Inconclusive => all_fail = false,
                    MembershipTag::Fails => slopes.push((nw, slope)),
                }
            }
            let tag = m.exhausted(all_fail, &slopes);
            m.finish(tag, None, vec![])
        }
    }
}

struct Search<'a> {
    d: &'a [LnTable],
    wt: &'a WeightTable,
    c: &'a Classifier,
    decay: bool,
    cells: Vec<Cell>,
}

impl Search<'_> {
    // max over p ≤ n of |g^{(p)}|/v_N (or ·v_N for decay spaces)
    fn cell(&mut self, nw: usize, n: usize) -> GrowthTag {
        let sign = if self.decay { 1.0 } else { -1.0 };
        let mut worst: Option<(usize, GrowthVerdict)> = None;
        let mut last = None;
        for p in 0..=n {
            let t = &self.d[p];
            let errors = merged_errors_with(t, self.wt.errors(nw));
            let wt = self.wt;
            let g = self.c.classify(&errors, |w, i| t.get(w, i) + sign * wt.ln(nw, w, i));
            match g.tag {
                GrowthTag::Diverging => {
                    worst = Some((p, g));
                    break;
                }
                GrowthTag::Inconclusive if worst.is_none() => worst = Some((p, g)),
                _ => last = Some(g),
            }
        }
        let (tag, order, verdict) = match worst {
            Some((p, g)) => (g.tag, Some(p), g),
            None => (GrowthTag::Bounded, None, last.expect("order range is non-empty")),
        };
        self.cells.push(Cell { weight_index: nw, n, tag, order, verdict });
        tag
    }

    fn forall_tag(&mut self, idx: impl Iterator<Item = (usize, usize)>) -> (MembershipTag, Option<(usize, usize)>) {
        let mut tag = MembershipTag::Holds;
        for (nw, n) in idx {
            match self.cell(nw, n) {
                GrowthTag::Diverging => return (MembershipTag::Fails, Some((nw, n))),
                GrowthTag::Inconclusive => tag = MembershipTag::Inconclusive,
                GrowthTag::Bounded => {}
            }
        }
        (tag, None)
    }

    // Classifies every cell of a row; the slope is the steepest among the
    // diverging cells.
    fn full_row(&mut self, idx: impl Iterator<Item = (usize, usize)>) -> (MembershipTag, f64) {
        let mut tag = MembershipTag::Holds;
        let mut slope = f64::NEG_INFINITY;
        for (nw, n) in idx {
            match self.cell(nw, n) {
                GrowthTag::Diverging => {
                    tag = MembershipTag::Fails;
                    slope = slope.max(self.slope_of_last());
                }
                GrowthTag::Inconclusive if tag == MembershipTag::Holds => tag = MembershipTag::Inconclusive,
                _ => {}
            }
        }
        (tag, slope)
    }

    fn slope_of_last(&self) -> f64 {
        let c = self.cells.last().expect("a cell was classified");
        c.verdict.terminal_slope(self.c.thresholds.t)
    }

    fn exists_tag(&mut self, idx: impl Iterator<Item = (usize, usize)>) -> (MembershipTag, Option<(usize, usize)>) {
        let mut all_diverge = true;
        let mut slopes = Vec::new();
        for (nw, n) in idx {
            match self.cell(nw, n) {
                GrowthTag::Bounded => return (MembershipTag::Holds, Some((nw, n))),
                GrowthTag::Inconclusive => all_diverge = false,
                GrowthTag::Diverging => slopes.push((nw, self.slope_of_last())),
            }
        }
        (self.exhausted(all_diverge, &slopes), None)
    }

    fn exhausted(&self, all_diverge: bool, slopes: &[(usize, f64)]) -> MembershipTag {
        if all_diverge && divergence_persists(slopes, self.c.thresholds.rho) {
            MembershipTag::Fails
        } else {
            MembershipTag::Inconclusive
        }
    }

    fn forall(mut self, idx: impl Iterator<Item = (usize, usize)>) -> MembershipVerdict {
        let (tag, w) = self.forall_tag(idx);
        self.finish(tag, w, vec![])
    }

    fn exists(mut self, idx: impl Iterator<Item = (usize, usize)>) -> MembershipVerdict {
        let (tag, w) = self.exists_tag(idx);
        self.finish(tag, w, vec![])
    }

    fn finish(self, tag: MembershipTag, witness: Option<(usize, usize)>, diagnostics: Vec<String>) -> MembershipVerdict {
        MembershipVerdict { tag, cells: self.cells, witness, diagnostics }
    }
}

fn merged_errors_with(t: &LnTable, extra: &[Option<String>]) -> Vec<Option<String>> {
    (0..t.errors.len()).map(|w| t.errors[w].clone().or_else(|| extra.get(w).cloned().flatten())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InclusionReport {
    #[serde(rename = "K")]
    pub k: MembershipTag,
    #[serde(rename = "OC")]
    pub oc: MembershipTag,
    #[serde(rename = "OM")]
    pub om: MembershipTag,
    /// Soundness defects: a `Holds` to the left of a `Fails`.
    pub violations: Vec<String>,
}

/// Checks that verdicts respect `𝒦_V ⊆ 𝒪_{C,V} ⊆ 𝒪_{M,V}`.
pub fn inclusion_chain_check(f: &Expr, v: &WeightSystem, c: &Classifier) -> Result<InclusionReport, SpaceError> {
    let order = SpaceSpec::new(Family::OC, v.clone()).max_order();
    let d = derivative_tables(f, order, c)?;
    let tag = |family| membership_from_tables(&d, &SpaceSpec::new(family, v.clone()), c).tag;
    let chain = [("K", tag(Family::K)), ("OC", tag(Family::OC)), ("OM", tag(Family::OM))];
    let mut violations = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            if chain[i].1 == MembershipTag::Holds && chain[j].1 == MembershipTag::Fails {
                violations.push(format!("holds in {} but fails in {}", chain[i].0, chain[j].0));
            }
        }
    }
    Ok(InclusionReport { k: chain[0].1, oc: chain[1].1, om: chain[2].1, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::weights::{Schedule, Thresholds};
    use proptest::prelude::*;

    fn small() -> Classifier {
        Classifier::new(Schedule { annuli: 14, samples: 256 }, Thresholds::default())
    }

    fn poly() -> WeightSystem {
        WeightSystem::power(parse("1+abs(x)").unwrap())
    }

    #[test]
    fn seminorm_examples() {
        let c = small();
        let one = parse("1").unwrap();
        assert_eq!(seminorm(&one, &one, 3, 100.0, &c).unwrap(), 1.0);
        let s = seminorm(&parse("sin(x)").unwrap(), &one, 1, 16384.0, &Classifier::default()).unwrap();
        assert!((s - 1.0).abs() < 1e-6);
        let (x, v) = (parse("x").unwrap(), parse("1+abs(x)").unwrap());
        // order 0 peaks at the radius; order 1 adds 1/(1+|x|), which is 1 at x = 0
        assert!((seminorm(&x, &v, 0, 100.0, &c).unwrap() - 100.0 / 101.0).abs() < 1e-12);
        assert_eq!(seminorm(&x, &v, 1, 100.0, &c).unwrap(), 1.0);
    }

    #[test]
    fn membership_examples() {
        let c = small();
        let f = parse("sin(x^2)").unwrap();
        assert!(membership(&f, &SpaceSpec::new(Family::OM, poly()), &c).unwrap().holds());
        assert!(membership(&f, &SpaceSpec::new(Family::OC, poly()), &c).unwrap().fails());
        let b = SpaceSpec::new(Family::B(0), WeightSystem::constant());
        assert!(membership(&parse("1").unwrap(), &b, &c).unwrap().holds());
        assert!(membership(&parse("x").unwrap(), &b, &c).unwrap().fails());
        let omn = SpaceSpec::new(Family::OMn(2), poly());
        let v = membership(&parse("x^3").unwrap(), &omn, &c).unwrap();
        assert!(v.holds());
        assert_eq!(v.witness, Some((3, 2)));
    }

    #[test]
    fn inclusion_examples() {
        let c = small();
        let tags = |s: &str| {
            let r = inclusion_chain_check(&parse(s).unwrap(), &poly(), &c).unwrap();
            assert!(r.violations.is_empty());
            (r.k, r.oc, r.om)
        };
        use MembershipTag::*;
        assert_eq!(tags("exp(-x^2)"), (Holds, Holds, Holds));
        assert_eq!(tags("sin(x^2)"), (Fails, Fails, Holds));
        assert_eq!(tags("x^2"), (Fails, Holds, Holds));
    }

    #[test]
    fn json_descriptor() {
        let s: SpaceSpec = serde_json::from_str(
            r#"{"family": "OMn", "system": {"kind": "power", "base": "1+abs(x)"}, "n": 3, "bounds": {"N_max": 4, "n_max": 2}}"#,
        )
        .unwrap();
        assert_eq!(s.family, Family::OMn(3));
        assert_eq!(s.bounds.n_max_weight, 4);
        let back: SpaceSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<SpaceSpec>(r#"{"family": "B", "system": {"kind": "power", "base": "1"}}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn seminorm_monotone(fi in 0usize..12, n in 0usize..4, r in 1.0f64..500.0) {
            let c = small();
            let f = parse(REGRESSION_CORPUS[fi]).unwrap();
            let (v, big_v) = (parse("1+abs(x)").unwrap(), parse("(1+abs(x))^2").unwrap());
            let s = seminorm(&f, &v, n, r, &c).unwrap();
            prop_assert!(seminorm(&f, &v, n + 1, r, &c).unwrap() >= s);
            prop_assert!(seminorm(&f, &big_v, n, r, &c).unwrap() <= s);
            prop_assert!(seminorm(&f, &v, n, 2.0 * r, &c).unwrap() >= s);
        }

        #[test]
        fn enlarging_bounds_never_flips(fi in 0usize..12, fam in 0usize..3, nw in 1usize..4, no in 1usize..4) {
            let c = small();
            let f = parse(REGRESSION_CORPUS[fi]).unwrap();
            let family = [Family::K, Family::OC, Family::OM][fam];
            let mut s = SpaceSpec::new(family, poly());
            s.bounds = SpaceBounds { n_max_weight: nw, n_max_order: no };
            let a = membership(&f, &s, &c).unwrap().tag;
            s.bounds = SpaceBounds { n_max_weight: nw + 2, n_max_order: no + 2 };
            let big = membership(&f, &s, &c).unwrap();
            let b = big.tag;
            // a new failure may only come from cells beyond the smaller bounds
            if a == MembershipTag::Holds && b == MembershipTag::Fails {
                let (wn, on) = big.witness.unwrap();
                prop_assert!(wn > nw || on > no);
            }
            prop_assert!(!(a == MembershipTag::Fails && b == MembershipTag::Holds));
        }
    }
}
