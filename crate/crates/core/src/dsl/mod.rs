//! Scalar expression language for metric entries and phase-space functions.
//!
//! Expressions are parsed against a list of coordinate names, stay immutable
//! afterwards, and can be evaluated over any [`Scalar`] carrier: plain `f64`,
//! first-order [`Jet`](crate::dual::Jet)s, or second-order [`Dual2`]s.

mod parser;

use std::collections::BTreeSet;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::Arc;

use crate::dual::{Dual2, Scalar};

pub use parser::{parse_with_names, ParseError};

/// Built-in univariate functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Sin, Func::Cos, Func::Exp, Func::Log, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expression {
    Num(f64),
    Var { index: usize, name: Arc<str> },
    Neg(Box<Expression>),
    Add(Box<Expression>, Box<Expression>),
    Sub(Box<Expression>, Box<Expression>),
    Mul(Box<Expression>, Box<Expression>),
    Div(Box<Expression>, Box<Expression>),
    Pow(Box<Expression>, Box<Expression>),
    Call(Func, Box<Expression>),
}

/// Evaluation outside a function's real domain.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("domain error: {function} undefined at argument {argument}")]
pub struct EvalError {
    pub function: String,
    pub argument: f64,
}

impl EvalError {
    fn new(function: &str, argument: f64) -> Self {
        EvalError {
            function: function.to_string(),
            argument,
        }
    }
}

impl Expression {
    pub fn num(v: f64) -> Self {
        Expression::Num(v)
    }

    pub fn var(index: usize, name: &str) -> Self {
        Expression::Var {
            index,
            name: Arc::from(name),
        }
    }

    pub fn call(f: Func, arg: Expression) -> Self {
        Expression::Call(f, Box::new(arg))
    }

    pub fn pow(self, exponent: Expression) -> Self {
        Expression::Pow(Box::new(self), Box::new(exponent))
    }

    pub fn powi(self, n: i32) -> Self {
        self.pow(Expression::Num(n as f64))
    }

    /// Product of a list of factors; the empty product is `1`.
    pub fn product(factors: impl IntoIterator<Item = Expression>) -> Self {
        factors
            .into_iter()
            .reduce(|a, b| a * b)
            .unwrap_or(Expression::Num(1.0))
    }

    /// Sum of a list of terms; the empty sum is `0`.
    pub fn sum(terms: impl IntoIterator<Item = Expression>) -> Self {
        terms
            .into_iter()
            .reduce(|a, b| a + b)
            .unwrap_or(Expression::Num(0.0))
    }

    /// Indices of every coordinate referenced by the expression.
    pub fn variables(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<usize>) {
        match self {
            Expression::Num(_) => {}
            Expression::Var { index, .. } => {
                out.insert(*index);
            }
            Expression::Neg(a) | Expression::Call(_, a) => a.collect_vars(out),
            Expression::Add(a, b)
            | Expression::Sub(a, b)
            | Expression::Mul(a, b)
            | Expression::Div(a, b)
            | Expression::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        self.variables().is_empty()
    }

    /// Value of a variable-free expression.
    pub fn constant_value(&self) -> Option<f64> {
        if self.is_constant() {
            self.eval::<f64>(&[]).ok()
        } else {
            None
        }
    }

    /// Evaluate with arbitrary scalar carriers, one per chart coordinate.
    pub fn eval<T: Scalar>(&self, vars: &[T]) -> Result<T, EvalError> {
        Ok(match self {
            Expression::Num(v) => T::from_f64(*v),
            Expression::Var { index, .. } => vars[*index].clone(),
            Expression::Neg(a) => -a.eval(vars)?,
            Expression::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Expression::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Expression::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Expression::Div(a, b) => {
                let num = a.eval(vars)?;
                let den = b.eval(vars)?;
                if den.value() == 0.0 {
                    return Err(EvalError::new("/", 0.0));
                }
                num / den
            }
            Expression::Pow(a, b) => {
                let base = a.eval(vars)?;
                match b.constant_value() {
                    Some(p) if p.fract() == 0.0 && p.abs() <= i32::MAX as f64 => {
                        if p < 0.0 && base.value() == 0.0 {
                            return Err(EvalError::new("^", 0.0));
                        }
                        base.powi(p as i32)
                    }
                    Some(p) => {
                        if base.value() <= 0.0 {
                            return Err(EvalError::new("^", base.value()));
                        }
                        base.powf(p)
                    }
                    None => {
                        if base.value() <= 0.0 {
                            return Err(EvalError::new("^", base.value()));
                        }
                        let e = b.eval(vars)?;
                        (e * base.ln()).exp()
                    }
                }
            }
            Expression::Call(f, a) => {
                let x = a.eval(vars)?;
                let v = x.value();
                match f {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Exp => x.exp(),
                    Func::Log => {
                        if v <= 0.0 {
                            return Err(EvalError::new("log", v));
                        }
                        x.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::new("sqrt", v));
                        }
                        x.sqrt()
                    }
                    Func::Abs => x.abs(),
                }
            }
        })
    }

    pub fn eval_f64(&self, x: &[f64]) -> Result<f64, EvalError> {
        self.eval(x)
    }

    /// Value, gradient and Hessian at `x` in one forward pass.
    pub fn eval2(&self, x: &[f64]) -> Result<Dual2, EvalError> {
        let n = x.len();
        let vars: Vec<Dual2> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| Dual2::variable(v, i, n))
            .collect();
        self.eval(&vars).map(|d| d.widen_to(n))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expression::Add(..) | Expression::Sub(..) => 1,
            Expression::Mul(..) | Expression::Div(..) => 2,
            Expression::Neg(..) => 3,
            Expression::Pow(..) => 4,
            Expression::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expression::Num(v) if *v < 0.0 => write!(f, "-{}", -v),
            Expression::Num(v) => write!(f, "{v}"),
            Expression::Var { name, .. } => write!(f, "{name}"),
            Expression::Neg(a) => {
                write!(f, "-")?;
                a.fmt_at(f, 3)
            }
            Expression::Add(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " + ")?;
                b.fmt_at(f, 2)
            }
            Expression::Sub(a, b) => {
                a.fmt_at(f, 1)?;
                write!(f, " - ")?;
                b.fmt_at(f, 2)
            }
            Expression::Mul(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "*")?;
                b.fmt_at(f, 3)
            }
            Expression::Div(a, b) => {
                a.fmt_at(f, 2)?;
                write!(f, "/")?;
                b.fmt_at(f, 3)
            }
            Expression::Pow(a, b) => {
                a.fmt_at(f, 5)?;
                write!(f, "^")?;
                b.fmt_at(f, 3)
            }
            Expression::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.fmt_at(f, 0)?;
                write!(f, ")")
            }
        }
    }
}

impl Dual2 {
    fn widen_to(self, n: usize) -> Dual2 {
        if self.grad.len() == n {
            self
        } else {
            Dual2::constant(self.value, n)
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

macro_rules! expr_binop {
    ($tr:ident, $method:ident, $variant:ident) => {
        impl $tr for Expression {
            type Output = Expression;
            fn $method(self, rhs: Expression) -> Expression {
                Expression::$variant(Box::new(self), Box::new(rhs))
            }
        }
    };
}

expr_binop!(Add, add, Add);
expr_binop!(Sub, sub, Sub);
expr_binop!(Mul, mul, Mul);
expr_binop!(Div, div, Div);

impl Neg for Expression {
    type Output = Expression;
    fn neg(self) -> Expression {
        Expression::Neg(Box::new(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<&'static str> {
        vec!["x1", "x2", "x3"]
    }

    #[test]
    fn eval2_square() {
        let e = parse_with_names("x1^2", &["x1"]).unwrap();
        let d = e.eval2(&[3.0]).unwrap();
        assert_eq!(d.value, 9.0);
        assert_eq!(d.grad, vec![6.0]);
        assert_eq!(d.hess, vec![2.0]);
    }

    #[test]
    fn eval2_sin_at_zero() {
        let e = parse_with_names("sin(x1)", &["x1"]).unwrap();
        let d = e.eval2(&[0.0]).unwrap();
        assert_eq!(d.value, 0.0);
        assert_eq!(d.grad, vec![1.0]);
        assert_eq!(d.hess, vec![0.0]);
    }

    #[test]
    fn constant_expression_gets_full_dual() {
        let e = parse_with_names("2.5", &names()).unwrap();
        let d = e.eval2(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.grad, vec![0.0; 3]);
        assert_eq!(d.hess, vec![0.0; 9]);
    }

    #[test]
    fn domain_errors() {
        let e = parse_with_names("log(x1)", &names()).unwrap();
        let err = e.eval_f64(&[-1.0, 0.0, 0.0]).unwrap_err();
        assert_eq!(err.function, "log");
        assert_eq!(err.argument, -1.0);

        let e = parse_with_names("x1^0.5", &names()).unwrap();
        assert_eq!(e.eval_f64(&[-4.0, 0.0, 0.0]).unwrap_err().function, "^");
        assert_eq!(e.eval_f64(&[4.0, 0.0, 0.0]).unwrap(), 2.0);

        let e = parse_with_names("x1^3", &names()).unwrap();
        assert_eq!(e.eval_f64(&[-2.0, 0.0, 0.0]).unwrap(), -8.0);

        let e = parse_with_names("1/(x1 - x2)", &names()).unwrap();
        assert!(e.eval_f64(&[1.0, 1.0, 0.0]).is_err());

        let e = parse_with_names("sqrt(x2)", &names()).unwrap();
        assert_eq!(e.eval_f64(&[0.0, -0.5, 0.0]).unwrap_err().function, "sqrt");
    }

    #[test]
    fn negative_integer_exponent() {
        let e = parse_with_names("x1^-2", &names()).unwrap();
        let d = e.eval2(&[2.0, 0.0, 0.0]).unwrap();
        assert!((d.value - 0.25).abs() < 1e-15);
        assert!((d.grad[0] + 0.25).abs() < 1e-15);
        assert!((d.hess[0] - 6.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn variable_exponent() {
        let e = parse_with_names("x1^x2", &names()).unwrap();
        let d = e.eval2(&[2.0, 3.0, 0.0]).unwrap();
        assert!((d.value - 8.0).abs() < 1e-12);
        assert!((d.grad[0] - 12.0).abs() < 1e-12);
        assert!((d.grad[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn display_respects_structure() {
        for src in [
            "x1 - (x2 - x3)",
            "-x1^2",
            "(-x1)^2",
            "x1^x2^x3",
            "(x1^x2)^x3",
            "x1/(x2*x3)",
            "x1*-x2",
            "-(x1 + x2)*x3",
            "2^-1",
            "sin(x1 + 1)*cos(x2)^2",
        ] {
            let e = parse_with_names(src, &names()).unwrap();
            let printed = e.to_string();
            let again = parse_with_names(&printed, &names()).unwrap();
            assert_eq!(e, again, "{src} -> {printed}");
        }
    }

    #[test]
    fn builders_print_parseably() {
        let x = Expression::var(0, "x1");
        let e = Expression::num(-2.0) * x.clone().powi(2) - (x.clone() + Expression::num(1.0));
        let printed = e.to_string();
        let back = parse_with_names(&printed, &["x1"]).unwrap();
        let v = 1.7;
        assert!((e.eval_f64(&[v]).unwrap() - back.eval_f64(&[v]).unwrap()).abs() < 1e-15);
    }
}
