//! Symbolic partial derivatives.
//!
//! Only the folding needed to keep derivative trees small is applied
//! (multiplication by 0 or 1, addition of 0).

use super::expr::{BinOp, Expr, Func};

fn add(a: Expr, b: Expr) -> Expr {
    match (a.is_zero(), b.is_zero()) {
        (true, _) => b,
        (_, true) => a,
        _ => Expr::binary(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        a
    } else if a.is_zero() {
        neg(b)
    } else {
        Expr::binary(BinOp::Sub, a, b)
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        Expr::Const(0.0)
    } else if a.is_one() {
        b
    } else if b.is_one() {
        a
    } else {
        Expr::binary(BinOp::Mul, a, b)
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        Expr::Const(0.0)
    } else if b.is_one() {
        a
    } else {
        Expr::binary(BinOp::Div, a, b)
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        other => Expr::unary(Func::Neg, other),
    }
}

/// Exact partial derivative of `e` with respect to coordinate `var`.
pub fn differentiate(e: &Expr, var: usize) -> Expr {
    if e.independent_of(var) {
        return Expr::Const(0.0);
    }
    match e {
        Expr::Const(_) => Expr::Const(0.0),
        Expr::Var { index, .. } => Expr::Const(if *index == var { 1.0 } else { 0.0 }),
        Expr::Unary(func, u) => {
            let du = differentiate(u, var);
            let u = (**u).clone();
            let outer = match func {
                Func::Neg => return neg(du),
                Func::Exp => e.clone(),
                Func::Log => return div(du, u),
                Func::Sin => Expr::unary(Func::Cos, u),
                Func::Cos => neg(Expr::unary(Func::Sin, u)),
                Func::Sinh => Expr::unary(Func::Cosh, u),
                Func::Cosh => Expr::unary(Func::Sinh, u),
                Func::Sqrt => {
                    return div(du, mul(Expr::Const(2.0), Expr::unary(Func::Sqrt, u)));
                }
            };
            mul(du, outer)
        }
        Expr::Binary(op, a, b) => {
            let da = differentiate(a, var);
            let db = differentiate(b, var);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div => div(
                    sub(mul(da, b.clone()), mul(a, db)),
                    Expr::binary(BinOp::Pow, b, Expr::Const(2.0)),
                ),
                BinOp::Pow if b.independent_of(var) => {
                    // d(u^c) = c * u^(c - 1) * u'
                    let lowered = Expr::binary(
                        BinOp::Pow,
                        a,
                        Expr::binary(BinOp::Sub, b.clone(), Expr::Const(1.0)),
                    );
                    mul(mul(b, lowered), da)
                }
                BinOp::Pow => {
                    // d(u^v) = u^v * (v' ln u + v u' / u)
                    let ln_term = mul(db, Expr::unary(Func::Log, a.clone()));
                    let ratio = div(mul(b, da), a);
                    mul(e.clone(), add(ln_term, ratio))
                }
            }
        }
    }
}
