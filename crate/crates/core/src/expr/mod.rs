//! One-variable real expressions: parsing, printing, evaluation and
//! symbolic differentiation.
//!
//! Every other module consumes [`Expr`]: the symbol `φ`, the test functions
//! `f` and the weights `v`, `w` are all written in the same small grammar.
//! Trees are immutable and share subtrees through [`Arc`], so cloning is cheap
//! and expressions can be handed to worker threads freely.

mod derivative;
mod eval;
mod parser;
mod print;
pub mod scalar;
mod simplify;
pub mod tape;

use std::sync::Arc;

use thiserror::Error;

pub use eval::EvalError;
pub use parser::{parse, ParseError};
pub use scalar::{LogNum, Scalar};
pub use tape::Tape;

/// Unary operators of the expression grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
    Abs,
}

impl UnaryOp {
    /// Function-call spelling; `None` for prefix negation.
    pub fn name(self) -> Option<&'static str> {
        match self {
            UnaryOp::Neg => None,
            UnaryOp::Sin => Some("sin"),
            UnaryOp::Cos => Some("cos"),
            UnaryOp::Exp => Some("exp"),
            UnaryOp::Log => Some("log"),
            UnaryOp::Sqrt => Some("sqrt"),
            UnaryOp::Tanh => Some("tanh"),
            UnaryOp::Abs => Some("abs"),
        }
    }

    pub fn from_name(name: &str) -> Option<UnaryOp> {
        Some(match name {
            "sin" => UnaryOp::Sin,
            "cos" => UnaryOp::Cos,
            "exp" => UnaryOp::Exp,
            "log" => UnaryOp::Log,
            "sqrt" => UnaryOp::Sqrt,
            "tanh" => UnaryOp::Tanh,
            "abs" => UnaryOp::Abs,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Abstract syntax tree of a real function of the single variable `x`.
///
/// `Binary(Pow, ..)` always carries a constant exponent: a variable exponent
/// is rewritten to `exp(e·log(b))` by [`Expr::pow`].
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Unary(UnaryOp, Arc<Expr>),
    Binary(BinaryOp, Arc<Expr>, Arc<Expr>),
}

/// Whether an expression may be differentiated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum SmoothnessClass {
    Smooth,
    ContinuousOnly,
}

/// Conservative sign information used to decide smoothness of fractional
/// powers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Positivity {
    Positive,
    NonNegative,
    Unknown,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum DiffError {
    #[error("expression is not smooth at `{node}`: {reason}")]
    NonSmooth { node: String, reason: &'static str },
    #[error("derivative order must be at least 1")]
    ZeroOrder,
}

impl Expr {
    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn unary(op: UnaryOp, arg: Expr) -> Expr {
        Expr::Unary(op, Arc::new(arg))
    }

    pub fn binary(op: BinaryOp, lhs: Expr, rhs: Expr) -> Expr {
        if op == BinaryOp::Pow {
            return Expr::pow(lhs, rhs);
        }
        Expr::Binary(op, Arc::new(lhs), Arc::new(rhs))
    }

    /// Power node. Constant exponents are folded to a literal; anything else
    /// becomes `exp(exponent · log(base))`.
    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        if exponent.is_constant() {
            if let Ok(c) = exponent.eval(0.0) {
                if c.is_finite() {
                    return Expr::Binary(BinaryOp::Pow, Arc::new(base), Arc::new(Expr::Const(c)));
                }
            }
        }
        Expr::unary(
            UnaryOp::Exp,
            Expr::binary(BinaryOp::Mul, exponent, Expr::unary(UnaryOp::Log, base)),
        )
    }

    /// True when the tree does not mention `x`.
    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var => false,
            Expr::Unary(_, a) => a.is_constant(),
            Expr::Binary(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    /// Number of nodes in the tree (shared subtrees counted each time).
    pub fn size(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var => 1,
            Expr::Unary(_, a) => 1 + a.size(),
            Expr::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    /// Replaces every occurrence of `x` by `inner`, giving `self ∘ inner`.
    pub fn substitute(&self, inner: &Expr) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var => inner.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Arc::new(a.substitute(inner))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Arc::new(a.substitute(inner)), Arc::new(b.substitute(inner)))
            }
        }
    }

    pub fn positivity(&self) -> Positivity {
        use Positivity::*;
        match self {
            Expr::Const(c) if *c > 0.0 => Positive,
            Expr::Const(c) if *c == 0.0 => NonNegative,
            Expr::Const(_) | Expr::Var => Unknown,
            Expr::Unary(op, a) => match op {
                UnaryOp::Exp => Positive,
                UnaryOp::Abs => NonNegative,
                UnaryOp::Sqrt => match a.positivity() {
                    Positive => Positive,
                    _ => NonNegative,
                },
                _ => Unknown,
            },
            Expr::Binary(op, a, b) => {
                let (pa, pb) = (a.positivity(), b.positivity());
                match op {
                    BinaryOp::Add => match (pa, pb) {
                        (Positive, Positive | NonNegative) | (NonNegative, Positive) => Positive,
                        (NonNegative, NonNegative) => NonNegative,
                        _ => Unknown,
                    },
                    BinaryOp::Mul | BinaryOp::Div => match (pa, pb) {
                        (Positive, Positive) => Positive,
                        (Positive | NonNegative, Positive | NonNegative) if *op == BinaryOp::Mul => {
                            NonNegative
                        }
                        (NonNegative, Positive) => NonNegative,
                        _ => Unknown,
                    },
                    BinaryOp::Pow => {
                        let c = b.as_const().unwrap_or(f64::NAN);
                        if pa == Positive {
                            Positive
                        } else if c.fract() == 0.0 && (c as i64) % 2 == 0 {
                            NonNegative
                        } else if pa == NonNegative {
                            NonNegative
                        } else {
                            Unknown
                        }
                    }
                    BinaryOp::Sub => Unknown,
                }
            }
        }
    }

    /// `ContinuousOnly` when the tree contains `abs`, or a fractional power
    /// (including `sqrt`) of a subtree that is not provably positive.
    pub fn smoothness(&self) -> SmoothnessClass {
        match self.first_non_smooth() {
            Some(_) => SmoothnessClass::ContinuousOnly,
            None => SmoothnessClass::Smooth,
        }
    }

    pub(crate) fn first_non_smooth(&self) -> Option<(&Expr, &'static str)> {
        match self {
            Expr::Const(_) | Expr::Var => None,
            Expr::Unary(UnaryOp::Abs, _) => Some((self, "abs is only continuous")),
            Expr::Unary(UnaryOp::Sqrt, a) => {
                if a.positivity() != Positivity::Positive {
                    Some((self, "sqrt of a subtree that may vanish"))
                } else {
                    a.first_non_smooth()
                }
            }
            Expr::Unary(_, a) => a.first_non_smooth(),
            Expr::Binary(BinaryOp::Pow, a, b) => {
                let c = b.as_const().unwrap_or(f64::NAN);
                if c.fract() != 0.0 && a.positivity() != Positivity::Positive {
                    Some((self, "fractional power of a subtree that may vanish"))
                } else {
                    a.first_non_smooth()
                }
            }
            Expr::Binary(_, a, b) => a.first_non_smooth().or_else(|| b.first_non_smooth()),
        }
    }
}

/// Parses `text` and rejects expressions that cannot be differentiated.
pub fn parse_smooth(text: &str) -> Result<Expr, ExprError> {
    let e = parse(text)?;
    if let Some((node, reason)) = e.first_non_smooth() {
        return Err(DiffError::NonSmooth { node: node.to_string(), reason }.into());
    }
    Ok(e)
}

/// Any failure of the expression layer.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExprError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Diff(#[from] DiffError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smoothness_tags() {
        assert_eq!(parse("sin(x^2)").unwrap().smoothness(), SmoothnessClass::Smooth);
        assert_eq!(parse("1+abs(x)").unwrap().smoothness(), SmoothnessClass::ContinuousOnly);
        assert_eq!(parse("(1+x^2)^0.5").unwrap().smoothness(), SmoothnessClass::Smooth);
        assert_eq!(parse("x^0.5").unwrap().smoothness(), SmoothnessClass::ContinuousOnly);
        assert_eq!(parse("sqrt(x^2)").unwrap().smoothness(), SmoothnessClass::ContinuousOnly);
        assert_eq!(parse("sqrt(1+x^2)").unwrap().smoothness(), SmoothnessClass::Smooth);
    }

    #[test]
    fn variable_exponent_is_rewritten() {
        let e = parse("x^x").unwrap();
        assert!(matches!(e, Expr::Unary(UnaryOp::Exp, _)));
        let c = parse("x^(1/2)").unwrap();
        assert_eq!(c, Expr::binary(BinaryOp::Pow, Expr::Var, Expr::Const(0.5)));
    }

    #[test]
    fn substitution_composes() {
        let f = parse("sin(x)").unwrap();
        let phi = parse("x^2").unwrap();
        let g = f.substitute(&phi);
        assert_eq!(g, parse("sin(x^2)").unwrap());
    }
}
