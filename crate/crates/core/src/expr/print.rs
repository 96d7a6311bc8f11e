use std::fmt;

use super::{BinaryOp, Expr, UnaryOp};

// Binding strength of the printed form; mirrors the parser levels.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const PREFIX: u8 = 3;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match e {
        Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => PREFIX,
        Expr::Const(_) | Expr::Var => ATOM,
        Expr::Unary(UnaryOp::Neg, _) => PREFIX,
        Expr::Unary(..) => ATOM,
        Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => SUM,
        Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => PRODUCT,
        Expr::Binary(BinaryOp::Pow, ..) => 4,
    }
}

fn write_at(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if level(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var => f.write_str("x"),
            Expr::Unary(UnaryOp::Neg, a) => {
                f.write_str("-")?;
                write_at(a, PREFIX, f)
            }
            Expr::Unary(op, a) => write!(f, "{}({a})", op.name().unwrap_or_default()),
            Expr::Binary(op, a, b) => {
                let (sym, lmin, rmin) = match op {
                    BinaryOp::Add => ("+", SUM, PRODUCT),
                    BinaryOp::Sub => ("-", SUM, PRODUCT),
                    BinaryOp::Mul => ("*", PRODUCT, PREFIX),
                    BinaryOp::Div => ("/", PRODUCT, PREFIX),
                    BinaryOp::Pow => ("^", ATOM, PREFIX),
                };
                write_at(a, lmin, f)?;
                f.write_str(sym)?;
                write_at(b, rmin, f)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    #[test]
    fn prints_minimal_parentheses() {
        for (src, printed) in [
            ("x^2", "x^2"),
            ("sin(x^2)", "sin(x^2)"),
            ("(1+x)*(2-x)", "(1+x)*(2-x)"),
            ("1-(2-x)", "1-(2-x)"),
            ("-(x*x)", "-(x*x)"),
            ("(-2)^x", "exp(x*log(-2))"),
            ("x^(-2)", "x^-2"),
            ("-x^2", "-x^2"),
            ("(x^2)^3", "(x^2)^3"),
        ] {
            assert_eq!(parse(src).unwrap().to_string(), printed, "{src}");
        }
    }
}
