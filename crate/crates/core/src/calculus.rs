//! Integer partitions, Faà di Bruno expansions and Gorny orders.
//!
//! A multi-index `k = (k_1, …, k_p)` with `Σ j·k_j = p` selects the term
//!
//! ```text
//! c(k) · f^{(|k|)}(φ(x)) · Π_j (φ^{(j)}(x))^{k_j},   c(k) = p! / Π_j (k_j! · (j!)^{k_j})
//! ```
//!
//! of `(f∘φ)^{(p)}(x)`.

use std::sync::OnceLock;

use thiserror::Error;

use crate::expr::{DiffError, EvalError, Expr, Scalar, Tape};

/// Largest order for which partition tables are provided.
pub const MAX_ORDER: usize = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("order {0} outside 1..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("multi-index {0:?} is empty or zero")]
    EmptyMultiIndex(Vec<u32>),
    #[error("coefficient for {0:?} exceeds 64 bits")]
    Overflow(Vec<u32>),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

/// One term of the Faà di Bruno sum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTerm {
    /// `k[j-1] = k_j`, length `p`.
    pub k: Vec<u32>,
    pub coefficient: u64,
}

impl PartitionTerm {
    /// The derivative order `p = Σ j·k_j`.
    pub fn order(&self) -> usize {
        weighted_sum(&self.k)
    }

    /// Order of the outer derivative, `Σ k_j`.
    pub fn outer_order(&self) -> usize {
        self.k.iter().map(|&c| c as usize).sum()
    }
}

fn weighted_sum(k: &[u32]) -> usize {
    k.iter().enumerate().map(|(i, &c)| (i + 1) * c as usize).sum()
}

fn table() -> &'static [Vec<PartitionTerm>] {
    static TABLE: OnceLock<Vec<Vec<PartitionTerm>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|p| {
                let mut out = Vec::new();
                let mut k = vec![0u32; p];
                if p > 0 {
                    enumerate(p, 1, &mut k, &mut out);
                }
                out
            })
            .collect()
    })
}

// Fills k_j, k_{j+1}, … largest first, which yields descending lexicographic order.
fn enumerate(remaining: usize, j: usize, k: &mut Vec<u32>, out: &mut Vec<PartitionTerm>) {
    let p = k.len();
    if j > p {
        if remaining == 0 {
            let coefficient = faa_coefficient(k).expect("p ≤ 20 fits in 64 bits");
            out.push(PartitionTerm { k: k.clone(), coefficient });
        }
        return;
    }
    for c in (0..=remaining / j).rev() {
        k[j - 1] = c as u32;
        enumerate(remaining - c * j, j + 1, k, out);
    }
    k[j - 1] = 0;
}

/// All multi-indices of order `p`, in descending lexicographic order.
///
/// ```
/// let ks: Vec<_> = compop::calculus::partitions(3).unwrap().iter().map(|t| t.k.clone()).collect();
/// assert_eq!(ks, vec![vec![3, 0, 0], vec![1, 1, 0], vec![0, 0, 1]]);
/// ```
pub fn partitions(p: usize) -> Result<&'static [PartitionTerm], CalculusError> {
    if p == 0 || p > MAX_ORDER {
        return Err(CalculusError::OrderOutOfRange(p));
    }
    Ok(&table()[p])
}

/// `p! / Π_j (k_j! · (j!)^{k_j})` with `p = Σ j·k_j`, in exact integers.
pub fn faa_coefficient(k: &[u32]) -> Result<u64, CalculusError> {
    let p = weighted_sum(k);
    if p == 0 {
        return Err(CalculusError::EmptyMultiIndex(k.to_vec()));
    }
    let overflow = || CalculusError::Overflow(k.to_vec());
    let fact = |n: usize| -> Option<u128> { (1..=n as u128).try_fold(1u128, |acc, i| acc.checked_mul(i)) };
    let num = fact(p).ok_or_else(overflow)?;
    let mut den = 1u128;
    for (i, &c) in k.iter().enumerate() {
        let jf = fact(i + 1).ok_or_else(overflow)?;
        let block = jf.checked_pow(c).and_then(|v| v.checked_mul(fact(c as usize)?)).ok_or_else(overflow)?;
        den = den.checked_mul(block).ok_or_else(overflow)?;
    }
    u64::try_from(num / den).map_err(|_| overflow())
}

/// `(f∘φ)^{(p)}` from derivative values.
///
/// `outer[q] = f^{(q)}(φ(x))` for `q ≤ p` and `inner[j] = φ^{(j)}(x)` for
/// `1 ≤ j ≤ p` (`inner[0]` is ignored). Each monomial is multiplied with its
/// factors in increasing magnitude.
pub fn faa_di_bruno<S: Scalar>(outer: &[S], inner: &[S], p: usize) -> Result<S, CalculusError> {
    let mut sum = S::from_f64(0.0);
    let mut factors: Vec<S> = Vec::with_capacity(p);
    for term in partitions(p)? {
        let q = term.outer_order();
        if outer[q].sign() == 0 && !outer[q].is_nan() {
            continue;
        }
        factors.clear();
        for (i, &c) in term.k.iter().enumerate() {
            factors.extend(std::iter::repeat(inner[i + 1]).take(c as usize));
        }
        factors.sort_by(|a, b| a.ln_abs().total_cmp(&b.ln_abs()));
        let mut prod = S::from_f64(term.coefficient as f64) * outer[q];
        for &v in &factors {
            prod = prod * v;
        }
        sum = sum + prod;
    }
    Ok(sum)
}

/// `(f∘φ)^{(q)}` for every `q` in `0..=n`.
pub fn faa_di_bruno_jet<S: Scalar>(outer: &[S], inner: &[S], n: usize) -> Result<Vec<S>, CalculusError> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(outer[0]);
    for p in 1..=n {
        out.push(faa_di_bruno(outer, inner, p)?);
    }
    Ok(out)
}

/// `(f∘φ)^{(p)}(x)` via the Faà di Bruno sum.
pub fn compose_derivative(f: &Expr, phi: &Expr, p: usize, x: f64) -> Result<f64, CalculusError> {
    if p == 0 || p > MAX_ORDER {
        return Err(CalculusError::OrderOutOfRange(p));
    }
    let inner = Tape::compile(&phi.derivatives(p)?).eval(x)?;
    let outer = Tape::compile(&f.derivatives(p)?).eval(inner[0])?;
    faa_di_bruno(&outer, &inner, p)
}

/// Smallest `m ≥ max(p, 1)` with `(1 − (p−1)/m)/m + (p−1)/m ≤ 1/k`.
///
/// Compared in integers as `k·(m − p + 1 + (p − 1)·m) ≤ m²`.
pub fn gorny_order(p: usize, k: usize) -> usize {
    assert!(p >= 1 && k >= 1, "gorny_order needs p, k ≥ 1");
    let mut m = p;
    while !gorny_holds(p, k, m) {
        m += 1;
    }
    m
}

fn gorny_holds(p: usize, k: usize, m: usize) -> bool {
    let (p, k, m) = (p as u128, k as u128, m as u128);
    k * (m + 1 + (p - 1) * m - p) <= m * m
}
