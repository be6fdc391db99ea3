//! Expression tree, evaluation and printing.

use std::fmt;

use thiserror::Error;

/// Single-argument functions understood by the language.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Neg,
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    /// Looks up a callable function by name. `Neg` is only reachable through `-`.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Neg => "-",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

/// Arithmetic expression over named coordinates.
///
/// Variables refer to coordinates by index into the coordinate list the
/// expression was parsed against; the name is kept for printing.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var { index: usize, name: String },
    Unary(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Evaluation failure at a specific node.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{reason} in `{node}` (node path {path})")]
    Domain {
        reason: &'static str,
        /// Printed form of the offending subexpression.
        node: String,
        /// Child indices from the root, e.g. `root.0.1`.
        path: String,
    },
    #[error("point has {got} coordinates but the expression uses index {index}")]
    MissingCoordinate { index: usize, got: usize },
}

impl Expr {
    pub fn constant(value: f64) -> Self {
        Expr::Const(value)
    }

    pub fn unary(func: Func, arg: Expr) -> Self {
        Expr::Unary(func, Box::new(arg))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 1.0)
    }

    /// True when no variable with this coordinate index occurs in the tree.
    pub fn independent_of(&self, index: usize) -> bool {
        match self {
            Expr::Const(_) => true,
            Expr::Var { index: i, .. } => *i != index,
            Expr::Unary(_, a) => a.independent_of(index),
            Expr::Binary(_, a, b) => a.independent_of(index) && b.independent_of(index),
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var_index(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var { index, .. } => Some(*index),
            Expr::Unary(_, a) => a.max_var_index(),
            Expr::Binary(_, a, b) => match (a.max_var_index(), b.max_var_index()) {
                (Some(x), Some(y)) => Some(x.max(y)),
                (x, y) => x.or(y),
            },
        }
    }

    /// Evaluates at a coordinate point. Non-finite results are reported as
    /// domain errors at the node that produced them.
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        let mut path = vec![];
        self.eval_at(point, &mut path)
    }

    fn eval_at(&self, point: &[f64], path: &mut Vec<usize>) -> Result<f64, EvalError> {
        match self {
            Expr::Const(c) => Ok(*c),
            Expr::Var { index, .. } => point
                .get(*index)
                .copied()
                .ok_or(EvalError::MissingCoordinate { index: *index, got: point.len() }),
            Expr::Unary(func, arg) => {
                path.push(0);
                let x = arg.eval_at(point, path)?;
                path.pop();
                let value = match func {
                    Func::Neg => -x,
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if x <= 0.0 {
                            return Err(self.domain("logarithm of a non-positive value", path));
                        }
                        x.ln()
                    }
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Sinh => x.sinh(),
                    Func::Cosh => x.cosh(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(self.domain("square root of a negative value", path));
                        }
                        x.sqrt()
                    }
                };
                self.finite(value, path)
            }
            Expr::Binary(op, lhs, rhs) => {
                path.push(0);
                let a = lhs.eval_at(point, path)?;
                path.pop();
                path.push(1);
                let b = rhs.eval_at(point, path)?;
                path.pop();
                let value = match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.domain("division by zero", path));
                        }
                        a / b
                    }
                    BinOp::Pow => {
                        if a == 0.0 && b < 0.0 {
                            return Err(self.domain("zero raised to a negative power", path));
                        }
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(
                                self.domain("negative base with a non-integer exponent", path)
                            );
                        }
                        a.powf(b)
                    }
                };
                self.finite(value, path)
            }
        }
    }

    fn finite(&self, value: f64, path: &[usize]) -> Result<f64, EvalError> {
        if value.is_finite() {
            Ok(value)
        } else {
            Err(self.domain("non-finite result", path))
        }
    }

    fn domain(&self, reason: &'static str, path: &[usize]) -> EvalError {
        let mut p = String::from("root");
        for i in path {
            p.push('.');
            p.push_str(&i.to_string());
        }
        EvalError::Domain { reason, node: self.to_string(), path: p }
    }
}

/// Fully parenthesized output that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => {
                write!(f, "(-{})", -c)
            }
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Unary(Func::Neg, a) => write!(f, "(-({a}))"),
            Expr::Unary(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
        }
    }
}
