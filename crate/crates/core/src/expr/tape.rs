//! Flattened evaluation of several expressions at once.
//!
//! Compilation hash-conses structurally equal subtrees, so the repeated
//! factors that symbolic differentiation produces (`cos(x^2)`, `x^2`, ...)
//! are computed once per point across all outputs.

use std::collections::HashMap;

use super::eval::{apply_binary, apply_unary, EvalError, NOT_A_NUMBER};
use super::scalar::{LogNum, Scalar};
use super::{BinaryOp, Expr, UnaryOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Key {
    Const(u64),
    Var,
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize),
}

#[derive(Clone, Copy, Debug)]
enum Instr {
    Const(f64),
    Var,
    Unary(UnaryOp, usize),
    Binary(BinaryOp, usize, usize, Option<f64>),
}

/// A compiled batch of expressions.
#[derive(Clone, Debug)]
pub struct Tape {
    instrs: Vec<Instr>,
    nodes: Vec<Expr>,
    outputs: Vec<usize>,
    constant: Vec<bool>,
}

struct Builder {
    instrs: Vec<Instr>,
    nodes: Vec<Expr>,
    index: HashMap<Key, usize>,
}

impl Builder {
    fn intern(&mut self, e: &Expr) -> usize {
        let (key, instr) = match e {
            Expr::Const(c) => (Key::Const(c.to_bits()), Instr::Const(*c)),
            Expr::Var => (Key::Var, Instr::Var),
            Expr::Unary(op, a) => {
                let ia = self.intern(a);
                (Key::Unary(*op, ia), Instr::Unary(*op, ia))
            }
            Expr::Binary(op, a, b) => {
                let ia = self.intern(a);
                let ib = self.intern(b);
                (Key::Binary(*op, ia, ib), Instr::Binary(*op, ia, ib, b.as_const()))
            }
        };
        if let Some(&i) = self.index.get(&key) {
            return i;
        }
        let i = self.instrs.len();
        self.instrs.push(instr);
        self.nodes.push(e.clone());
        self.index.insert(key, i);
        i
    }
}

impl Tape {
    pub fn compile(exprs: &[Expr]) -> Tape {
        let mut b = Builder { instrs: Vec::new(), nodes: Vec::new(), index: HashMap::new() };
        let outputs = exprs.iter().map(|e| b.intern(e)).collect();
        let constant = exprs.iter().map(Expr::is_constant).collect();
        Tape { instrs: b.instrs, nodes: b.nodes, outputs, constant }
    }

    pub fn len(&self) -> usize {
        self.instrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instrs.is_empty()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Whether output `j` does not depend on `x`.
    pub fn is_constant_output(&self, j: usize) -> bool {
        self.constant[j]
    }

    /// Evaluates every output at `x`, writing into `out` (resized as needed).
    pub fn eval_into<S: Scalar>(&self, x: S, slots: &mut Vec<S>, out: &mut Vec<S>) -> Result<(), EvalError> {
        slots.clear();
        for (i, ins) in self.instrs.iter().enumerate() {
            let v = match *ins {
                Instr::Const(c) => S::from_f64(c),
                Instr::Var => x,
                Instr::Unary(op, a) => {
                    apply_unary(op, slots[a]).map_err(|r| EvalError::new(&self.nodes[i], x.to_f64(), r))?
                }
                Instr::Binary(op, a, b, c) => apply_binary(op, slots[a], slots[b], c)
                    .map_err(|r| EvalError::new(&self.nodes[i], x.to_f64(), r))?,
            };
            slots.push(v);
        }
        out.clear();
        out.extend(self.outputs.iter().map(|&o| slots[o]));
        Ok(())
    }

    pub fn eval<S: Scalar>(&self, x: S) -> Result<Vec<S>, EvalError> {
        let mut slots = Vec::with_capacity(self.instrs.len());
        let mut out = Vec::with_capacity(self.outputs.len());
        self.eval_into(x, &mut slots, &mut out)?;
        Ok(out)
    }

    /// Like [`Tape::eval_into`], but a failing instruction yields NaN and
    /// poisons only its dependents. `status` receives one code per output:
    /// 0 for a value, 1 for a precision loss, `2 + i` for a domain error
    /// raised by instruction `i`.
    pub fn eval_lenient<S: Scalar>(&self, x: S, slots: &mut Vec<S>, codes: &mut Vec<u32>, out: &mut Vec<S>, status: &mut Vec<u32>) {
        slots.clear();
        codes.clear();
        let nan = S::from_f64(f64::NAN);
        for (i, ins) in self.instrs.iter().enumerate() {
            let (v, c) = match *ins {
                Instr::Const(c) => (S::from_f64(c), 0),
                Instr::Var => (x, 0),
                Instr::Unary(op, a) => {
                    if codes[a] != 0 {
                        (nan, codes[a])
                    } else {
                        match apply_unary(op, slots[a]) {
                            Ok(v) => (v, 0),
                            Err(r) => (nan, failure_code(i, r)),
                        }
                    }
                }
                Instr::Binary(op, a, b, e) => {
                    let c = worst(codes[a], codes[b]);
                    if c != 0 {
                        (nan, c)
                    } else {
                        match apply_binary(op, slots[a], slots[b], e) {
                            Ok(v) => (v, 0),
                            Err(r) => (nan, failure_code(i, r)),
                        }
                    }
                }
            };
            slots.push(v);
            codes.push(c);
        }
        out.clear();
        status.clear();
        for &o in &self.outputs {
            out.push(slots[o]);
            status.push(codes[o]);
        }
    }

    /// The domain error behind a status code from [`Tape::eval_lenient`].
    pub fn error_for(&self, code: u32, x: f64) -> Option<EvalError> {
        if code < 2 {
            return None;
        }
        let i = (code - 2) as usize;
        let reason = match self.instrs[i] {
            Instr::Unary(UnaryOp::Log, _) => "log of a non-positive number",
            Instr::Unary(UnaryOp::Sqrt, _) => "sqrt of a negative number",
            Instr::Binary(BinaryOp::Div, ..) => "division by zero",
            Instr::Binary(BinaryOp::Pow, ..) => "power outside its domain",
            _ => "domain error",
        };
        Some(EvalError::new(&self.nodes[i], x, reason))
    }

    /// `ln|e_i(x)|` for every output into `scratch.ln`.
    ///
    /// Runs in `f64` first and falls back to [`LogNum`] when an output
    /// overflowed, underflowed or was lost on the way. Outputs that fail
    /// hold NaN; `scratch.status` tells precision loss from domain errors.
    pub fn eval_ln_abs(&self, x: f64, scratch: &mut LnScratch) {
        self.eval_lenient(x, &mut scratch.slots, &mut scratch.codes, &mut scratch.values, &mut scratch.status);
        let retry = scratch.values.iter().zip(&scratch.status).zip(&self.constant).any(|((v, &c), &k)| {
            c == 1 || (c == 0 && (!v.is_finite() || (v.abs() < 1e-290 && !(k && *v == 0.0))))
        });
        scratch.ln.clear();
        if !retry {
            scratch.ln.extend(scratch.values.iter().map(|v| v.abs().ln()));
            return;
        }
        self.eval_lenient(
            LogNum::from_f64(x),
            &mut scratch.log_slots,
            &mut scratch.codes,
            &mut scratch.log_values,
            &mut scratch.status,
        );
        scratch.ln.extend(scratch.log_values.iter().zip(&scratch.status).map(|(v, &c)| {
            let l = v.ln_abs();
            if c != 0 || l == f64::INFINITY {
                f64::NAN
            } else {
                l
            }
        }));
        for (c, l) in scratch.status.iter_mut().zip(&scratch.ln) {
            if *c == 0 && l.is_nan() {
                *c = 1;
            }
        }
    }
}

fn failure_code(i: usize, reason: &'static str) -> u32 {
    if reason == NOT_A_NUMBER {
        1
    } else {
        i as u32 + 2
    }
}

fn worst(a: u32, b: u32) -> u32 {
    if a >= 2 {
        a
    } else if b >= 2 {
        b
    } else {
        a.max(b)
    }
}

/// Reusable buffers for [`Tape::eval_ln_abs`].
#[derive(Default)]
pub struct LnScratch {
    slots: Vec<f64>,
    values: Vec<f64>,
    codes: Vec<u32>,
    log_slots: Vec<LogNum>,
    log_values: Vec<LogNum>,
    /// Result of the last call, one entry per output.
    pub ln: Vec<f64>,
    /// Status code per output, as in [`Tape::eval_lenient`].
    pub status: Vec<u32>,
}
