use thiserror::Error;

use super::scalar::Scalar;
use super::{BinaryOp, Expr, UnaryOp};

/// Evaluation left the natural domain of the expression.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("domain error in `{node}` at x = {x}: {reason}")]
pub struct EvalError {
    /// Printed form of the offending subexpression.
    pub node: String,
    pub x: f64,
    pub reason: &'static str,
}

pub(crate) const NOT_A_NUMBER: &str = "result is not a number";

impl EvalError {
    /// True when the value was lost to floating-point range (for example
    /// `sin` of an overflowed argument) rather than a domain violation.
    pub fn is_precision_loss(&self) -> bool {
        self.reason == NOT_A_NUMBER
    }

    pub(crate) fn new(node: &Expr, x: f64, reason: &'static str) -> EvalError {
        EvalError { node: node.to_string(), x, reason }
    }
}

/// Applies a unary operator with domain checks.
pub(crate) fn apply_unary<S: Scalar>(op: UnaryOp, a: S) -> Result<S, &'static str> {
    let v = match op {
        UnaryOp::Neg => -a,
        UnaryOp::Sin => a.sin(),
        UnaryOp::Cos => a.cos(),
        UnaryOp::Exp => a.exp(),
        UnaryOp::Log => {
            if a.sign() <= 0 {
                return Err("log of a non-positive number");
            }
            a.ln()
        }
        UnaryOp::Sqrt => {
            if a.sign() < 0 {
                return Err("sqrt of a negative number");
            }
            a.sqrt()
        }
        UnaryOp::Tanh => a.tanh(),
        UnaryOp::Abs => a.abs(),
    };
    if v.is_nan() {
        return Err(NOT_A_NUMBER);
    }
    Ok(v)
}

pub(crate) fn apply_binary<S: Scalar>(op: BinaryOp, a: S, b: S, exponent: Option<f64>) -> Result<S, &'static str> {
    let v = match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => {
            if b.sign() == 0 {
                return Err("division by zero");
            }
            a / b
        }
        BinaryOp::Pow => {
            let c = exponent.unwrap_or_else(|| b.to_f64());
            if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
                if c < 0.0 && a.sign() == 0 {
                    return Err("division by zero");
                }
                a.powi(c as i32)
            } else {
                if a.sign() < 0 {
                    return Err("fractional power of a negative number");
                }
                a.powf(c)
            }
        }
    };
    if v.is_nan() {
        return Err(NOT_A_NUMBER);
    }
    Ok(v)
}

impl Expr {
    /// IEEE-double evaluation at `x`.
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.eval_with(x)
    }

    /// Evaluation over any [`Scalar`]; `x` is the argument already converted.
    pub fn eval_with<S: Scalar>(&self, x: S) -> Result<S, EvalError> {
        match self {
            Expr::Const(c) => Ok(S::from_f64(*c)),
            Expr::Var => Ok(x),
            Expr::Unary(op, a) => {
                let av = a.eval_with(x)?;
                apply_unary(*op, av).map_err(|r| EvalError::new(self, x.to_f64(), r))
            }
            Expr::Binary(op, a, b) => {
                let av = a.eval_with(x)?;
                let bv = b.eval_with(x)?;
                apply_binary(*op, av, bv, b.as_const()).map_err(|r| EvalError::new(self, x.to_f64(), r))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;
    use super::super::LogNum;
    use super::*;

    #[test]
    fn basic_values() {
        assert_eq!(parse("sin(x^2)").unwrap().eval(0.0).unwrap(), 0.0);
        assert_eq!(parse("1 + abs(x)").unwrap().eval(-2.0).unwrap(), 3.0);
        let e = parse("exp(x)").unwrap().eval(1.0).unwrap();
        assert!((e - 2.718281828459045).abs() < 1e-12);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let err = parse("1 + log(x)").unwrap().eval(-1.0).unwrap_err();
        assert_eq!(err.node, "log(x)");
        let err = parse("1/x").unwrap().eval(0.0).unwrap_err();
        assert_eq!(err.node, "1/x");
        assert_eq!(err.reason, "division by zero");
        assert!(parse("sqrt(x)").unwrap().eval(-4.0).is_err());
        assert!(parse("x^0.5").unwrap().eval(-4.0).is_err());
    }

    #[test]
    fn lognum_agrees_with_f64() {
        let e = parse("(1+x^2)^3*exp(-x)/(2+sin(x))").unwrap();
        for x in [-3.0, -0.5, 0.0, 0.25, 7.0] {
            let a = e.eval(x).unwrap();
            let b = e.eval_with(LogNum::from_f64(x)).unwrap().to_f64();
            assert!((a - b).abs() <= 1e-12 * a.abs());
        }
        // beyond f64 range the log form still answers
        let w = parse("exp(abs(x))^8").unwrap();
        let v = w.eval_with(LogNum::from_f64(16384.0)).unwrap();
        assert!((v.ln_abs() - 8.0 * 16384.0).abs() < 1e-9);
    }
}
