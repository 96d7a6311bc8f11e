use super::simplify::{add, div, mul, neg, pow, sub, unary};
use super::{BinaryOp, DiffError, Expr, UnaryOp};

impl Expr {
    /// Exact `p`-th derivative, simplified after every step.
    pub fn derivative(&self, p: usize) -> Result<Expr, DiffError> {
        if p == 0 {
            return Err(DiffError::ZeroOrder);
        }
        if let Some((node, reason)) = self.first_non_smooth() {
            return Err(DiffError::NonSmooth { node: node.to_string(), reason });
        }
        let mut d = self.d1();
        for _ in 1..p {
            d = d.d1();
        }
        Ok(d)
    }

    /// Derivatives of orders `0..=max_order`; index 0 is the expression itself.
    pub fn derivatives(&self, max_order: usize) -> Result<Vec<Expr>, DiffError> {
        if let Some((node, reason)) = self.first_non_smooth() {
            return Err(DiffError::NonSmooth { node: node.to_string(), reason });
        }
        let mut out = Vec::with_capacity(max_order + 1);
        out.push(self.clone());
        for k in 0..max_order {
            let next = out[k].d1();
            out.push(next);
        }
        Ok(out)
    }

    // Callers have checked smoothness, so every node here is differentiable.
    fn d1(&self) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::Var => Expr::Const(1.0),
            Expr::Unary(op, a) => {
                let u = a.as_ref();
                let du = u.d1();
                if du.as_const() == Some(0.0) {
                    return Expr::Const(0.0);
                }
                let outer = match op {
                    UnaryOp::Neg => return neg(du),
                    UnaryOp::Sin => unary(UnaryOp::Cos, u.clone()),
                    UnaryOp::Cos => neg(unary(UnaryOp::Sin, u.clone())),
                    UnaryOp::Exp => self.clone(),
                    UnaryOp::Log => return div(du, u.clone()),
                    UnaryOp::Sqrt => return div(du, mul(Expr::Const(2.0), self.clone())),
                    UnaryOp::Tanh => sub(Expr::Const(1.0), pow(self.clone(), 2.0)),
                    UnaryOp::Abs => unreachable!("abs rejected before differentiation"),
                };
                mul(outer, du)
            }
            Expr::Binary(op, a, b) => {
                let (u, v) = (a.as_ref(), b.as_ref());
                match op {
                    BinaryOp::Add => add(u.d1(), v.d1()),
                    BinaryOp::Sub => sub(u.d1(), v.d1()),
                    BinaryOp::Mul => add(mul(u.d1(), v.clone()), mul(u.clone(), v.d1())),
                    BinaryOp::Div => {
                        let (du, dv) = (u.d1(), v.d1());
                        if dv.as_const() == Some(0.0) {
                            return div(du, v.clone());
                        }
                        sub(div(du, v.clone()), div(mul(u.clone(), dv), pow(v.clone(), 2.0)))
                    }
                    BinaryOp::Pow => {
                        let c = v.as_const().expect("power exponents are constant");
                        let du = u.d1();
                        if du.as_const() == Some(0.0) {
                            return Expr::Const(0.0);
                        }
                        mul(mul(Expr::Const(c), pow(u.clone(), c - 1.0)), du)
                    }
                }
            }
        }
    }
}
