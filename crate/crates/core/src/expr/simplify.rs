//! Simplifying constructors used while differentiating: constant folding,
//! 0/1 identities, sign pulling and merging of powers of a common base.

use std::sync::Arc;

use super::{BinaryOp, Expr, UnaryOp};

fn folded(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

fn is(e: &Expr, c: f64) -> bool {
    e.as_const() == Some(c)
}

/// Splits `e` into `(c, rest)` with `e = c · rest`.
fn coefficient(e: &Expr) -> (f64, Option<Expr>) {
    match e {
        Expr::Const(c) => (*c, None),
        Expr::Unary(UnaryOp::Neg, a) => {
            let (c, r) = coefficient(a);
            (-c, r)
        }
        Expr::Binary(BinaryOp::Mul, a, b) => match a.as_ref() {
            Expr::Const(c) => (*c, Some(b.as_ref().clone())),
            _ => (1.0, Some(e.clone())),
        },
        _ => (1.0, Some(e.clone())),
    }
}

/// Splits `e` into `(base, integer exponent)`.
fn power_parts(e: &Expr) -> (Expr, f64) {
    if let Expr::Binary(BinaryOp::Pow, a, b) = e {
        if let Some(c) = b.as_const() {
            if c.fract() == 0.0 {
                return (a.as_ref().clone(), c);
            }
        }
    }
    (e.clone(), 1.0)
}

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => inner.as_ref().clone(),
        Expr::Binary(BinaryOp::Mul, ref l, ref r) if l.as_const().is_some() => {
            mul(Expr::Const(-l.as_const().unwrap()), r.as_ref().clone())
        }
        other => Expr::Unary(UnaryOp::Neg, Arc::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(e) = folded(x + y) {
            return e;
        }
    }
    if is(&a, 0.0) {
        return b;
    }
    if is(&b, 0.0) {
        return a;
    }
    if let Expr::Unary(UnaryOp::Neg, nb) = &b {
        return sub(a, nb.as_ref().clone());
    }
    if let Expr::Const(c) = b {
        if c < 0.0 {
            return sub(a, Expr::Const(-c));
        }
    }
    let (ca, ra) = coefficient(&a);
    let (cb, rb) = coefficient(&b);
    if ra.is_some() && ra == rb {
        return mul(Expr::Const(ca + cb), ra.unwrap());
    }
    Expr::Binary(BinaryOp::Add, Arc::new(a), Arc::new(b))
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(e) = folded(x - y) {
            return e;
        }
    }
    if is(&b, 0.0) {
        return a;
    }
    if is(&a, 0.0) {
        return neg(b);
    }
    if let Expr::Unary(UnaryOp::Neg, nb) = &b {
        return add(a, nb.as_ref().clone());
    }
    let (ca, ra) = coefficient(&a);
    let (cb, rb) = coefficient(&b);
    if ra.is_some() && ra == rb {
        return mul(Expr::Const(ca - cb), ra.unwrap());
    }
    Expr::Binary(BinaryOp::Sub, Arc::new(a), Arc::new(b))
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if let Some(e) = folded(x * y) {
            return e;
        }
    }
    if is(&a, 0.0) || is(&b, 0.0) {
        return Expr::Const(0.0);
    }
    if is(&a, 1.0) {
        return b;
    }
    if is(&b, 1.0) {
        return a;
    }
    if is(&a, -1.0) {
        return neg(b);
    }
    if is(&b, -1.0) {
        return neg(a);
    }
    // constants move to the front and merge
    let (ca, ra) = coefficient(&a);
    let (cb, rb) = coefficient(&b);
    let c = ca * cb;
    if (ca != 1.0 || cb != 1.0) && c.is_finite() {
        let rest = match (ra, rb) {
            (Some(x), Some(y)) => mul_plain(x, y),
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => return Expr::Const(c),
        };
        return scale(c, rest);
    }
    mul_plain(a, b)
}

fn scale(c: f64, rest: Expr) -> Expr {
    if c == 0.0 {
        return Expr::Const(0.0);
    }
    if c == 1.0 {
        return rest;
    }
    if c == -1.0 {
        return neg(rest);
    }
    Expr::Binary(BinaryOp::Mul, Arc::new(Expr::Const(c)), Arc::new(rest))
}

fn mul_plain(a: Expr, b: Expr) -> Expr {
    let (ba, ea) = power_parts(&a);
    let (bb, eb) = power_parts(&b);
    if ba == bb && !ba.is_constant() {
        return pow(ba, ea + eb);
    }
    Expr::Binary(BinaryOp::Mul, Arc::new(a), Arc::new(b))
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
        if y != 0.0 {
            if let Some(e) = folded(x / y) {
                return e;
            }
        }
    }
    if is(&a, 0.0) && !is(&b, 0.0) {
        return Expr::Const(0.0);
    }
    if is(&b, 1.0) {
        return a;
    }
    if let Some(y) = b.as_const() {
        if y != 0.0 && (1.0 / y).is_finite() && (1.0 / y) * y == 1.0 {
            return mul(Expr::Const(1.0 / y), a);
        }
    }
    let (ba, ea) = power_parts(&a);
    let (bb, eb) = power_parts(&b);
    if ba == bb && !ba.is_constant() && ea > eb {
        return pow(ba, ea - eb);
    }
    Expr::Binary(BinaryOp::Div, Arc::new(a), Arc::new(b))
}

/// Power with a constant exponent.
pub(crate) fn pow(base: Expr, c: f64) -> Expr {
    if c == 0.0 {
        return Expr::Const(1.0);
    }
    if c == 1.0 {
        return base;
    }
    if let Some(b) = base.as_const() {
        if let Some(e) = folded(b.powf(c)) {
            if c.fract() == 0.0 || b > 0.0 {
                return e;
            }
        }
    }
    if let Expr::Binary(BinaryOp::Pow, inner, e) = &base {
        let k = e.as_const().unwrap_or(f64::NAN);
        if k.fract() == 0.0 && c.fract() == 0.0 {
            return pow(inner.as_ref().clone(), k * c);
        }
    }
    Expr::Binary(BinaryOp::Pow, Arc::new(base), Arc::new(Expr::Const(c)))
}

pub(crate) fn unary(op: UnaryOp, a: Expr) -> Expr {
    if op == UnaryOp::Neg {
        return neg(a);
    }
    if let Some(c) = a.as_const() {
        if let Ok(v) = super::eval::apply_unary(op, c) {
            if let Some(e) = folded(v) {
                return e;
            }
        }
    }
    Expr::Unary(op, Arc::new(a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identities() {
        let x = Expr::Var;
        assert_eq!(add(Expr::Const(0.0), x.clone()), x);
        assert_eq!(mul(Expr::Const(1.0), x.clone()), x);
        assert_eq!(mul(Expr::Const(0.0), x.clone()), Expr::Const(0.0));
        assert_eq!(mul(x.clone(), x.clone()), pow(x.clone(), 2.0));
        assert_eq!(mul(Expr::Const(2.0), mul(Expr::Const(3.0), x.clone())).to_string(), "6*x");
        assert_eq!(neg(neg(x.clone())), x);
        assert_eq!(sub(x.clone(), x.clone()), Expr::Const(0.0));
        assert_eq!(add(x.clone(), x.clone()).to_string(), "2*x");
        assert_eq!(div(pow(x.clone(), 3.0), x.clone()).to_string(), "x^2");
    }
}
