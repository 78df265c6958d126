//! Closed expression grammar for coefficient functions of `t`.
//!
//! Text form is a prefix (s-expression) notation:
//!
//! ```text
//! 1.5                      constant
//! t                        the energy density
//! (poly 1 0 2)             1 + 2t²
//! (rat (1) (1 2))          1 / (1 + 2t)
//! (+ a b ...) (* a b ...)  sums and products
//! (- a b) (- a) (/ a b)    difference, negation, quotient
//! (sqrt a) (pow a 1.5)     square root, real power
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Jet3;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum FamilySpec {
    Const(f64),
    T,
    /// Coefficients in increasing degree.
    Poly(Vec<f64>),
    Rational {
        num: Vec<f64>,
        den: Vec<f64>,
    },
    Add(Vec<FamilySpec>),
    Sub(Box<FamilySpec>, Box<FamilySpec>),
    Neg(Box<FamilySpec>),
    Mul(Vec<FamilySpec>),
    Div(Box<FamilySpec>, Box<FamilySpec>),
    Sqrt(Box<FamilySpec>),
    Pow(Box<FamilySpec>, f64),
}

fn poly_jet(coeffs: &[f64], t: Jet3) -> Jet3 {
    coeffs
        .iter()
        .rev()
        .fold(Jet3::ZERO, |acc, &c| acc * t + c)
}

impl FamilySpec {
    pub fn constant(value: f64) -> Self {
        FamilySpec::Const(value)
    }

    pub fn poly(coeffs: impl Into<Vec<f64>>) -> Self {
        FamilySpec::Poly(coeffs.into())
    }

    pub fn rational(num: impl Into<Vec<f64>>, den: impl Into<Vec<f64>>) -> Self {
        FamilySpec::Rational {
            num: num.into(),
            den: den.into(),
        }
    }

    /// Value and first three `t`-derivatives at `t`.
    pub fn eval(&self, t: f64) -> Result<Jet3> {
        self.eval_jet(Jet3::variable(t))
    }

    fn domain(&self, t: f64, reason: &'static str) -> Error {
        Error::Domain {
            expr: self.to_string(),
            t,
            reason,
        }
    }

    fn eval_jet(&self, t: Jet3) -> Result<Jet3> {
        use FamilySpec::*;
        Ok(match self {
            Const(c) => Jet3::constant(*c),
            T => t,
            Poly(c) => poly_jet(c, t),
            Rational { num, den } => {
                let d = poly_jet(den, t);
                if d.v0 == 0.0 {
                    return Err(self.domain(t.v0, "denominator vanishes"));
                }
                poly_jet(num, t) / d
            }
            Add(terms) => terms
                .iter()
                .try_fold(Jet3::ZERO, |acc, e| Ok::<_, Error>(acc + e.eval_jet(t)?))?,
            Sub(a, b) => a.eval_jet(t)? - b.eval_jet(t)?,
            Neg(a) => -a.eval_jet(t)?,
            Mul(terms) => terms
                .iter()
                .try_fold(Jet3::ONE, |acc, e| Ok::<_, Error>(acc * e.eval_jet(t)?))?,
            Div(a, b) => {
                let d = b.eval_jet(t)?;
                if d.v0 == 0.0 {
                    return Err(self.domain(t.v0, "denominator vanishes"));
                }
                a.eval_jet(t)? / d
            }
            Sqrt(a) => {
                let x = a.eval_jet(t)?;
                x.try_sqrt()
                    .map_err(|_| self.domain(t.v0, "non-positive radicand"))?
            }
            Pow(a, k) => {
                let x = a.eval_jet(t)?;
                if k.fract() == 0.0 && *k >= 0.0 && *k <= u32::MAX as f64 {
                    x.powi(*k as u32)
                } else if k.fract() == 0.0 && *k < 0.0 {
                    x.powi(k.abs() as u32)
                        .recip()
                        .map_err(|_| self.domain(t.v0, "zero base with negative exponent"))?
                } else {
                    x.try_powf(*k)
                        .map_err(|_| self.domain(t.v0, "non-positive base with real exponent"))?
                }
            }
        })
    }
}

fn write_list(f: &mut fmt::Formatter<'_>, values: &[f64]) -> fmt::Result {
    write!(f, "(")?;
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{v}")?;
    }
    write!(f, ")")
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use FamilySpec::*;
        let nary = |f: &mut fmt::Formatter<'_>, op: &str, terms: &[FamilySpec]| {
            write!(f, "({op}")?;
            for term in terms {
                write!(f, " {term}")?;
            }
            write!(f, ")")
        };
        match self {
            Const(c) => write!(f, "{c}"),
            T => write!(f, "t"),
            Poly(c) => {
                write!(f, "(poly")?;
                for v in c {
                    write!(f, " {v}")?;
                }
                write!(f, ")")
            }
            Rational { num, den } => {
                write!(f, "(rat ")?;
                write_list(f, num)?;
                write!(f, " ")?;
                write_list(f, den)?;
                write!(f, ")")
            }
            Add(terms) => nary(f, "+", terms),
            Mul(terms) => nary(f, "*", terms),
            Sub(a, b) => write!(f, "(- {a} {b})"),
            Neg(a) => write!(f, "(- {a})"),
            Div(a, b) => write!(f, "(/ {a} {b})"),
            Sqrt(a) => write!(f, "(sqrt {a})"),
            Pow(a, k) => write!(f, "(pow {a} {k})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn tokenize(input: &str) -> Vec<String> {
    input
        .replace('(', " ( ")
        .replace(')', " ) ")
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

fn read_sexp(tokens: &[String], pos: &mut usize) -> Result<Sexp> {
    let tok = tokens
        .get(*pos)
        .ok_or_else(|| Error::Parse("unexpected end of input".into()))?;
    *pos += 1;
    match tok.as_str() {
        "(" => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos).map(String::as_str) {
                    Some(")") => {
                        *pos += 1;
                        return Ok(Sexp::List(items));
                    }
                    Some(_) => items.push(read_sexp(tokens, pos)?),
                    None => return Err(Error::Parse("unbalanced parentheses".into())),
                }
            }
        }
        ")" => Err(Error::Parse("unexpected `)`".into())),
        atom => Ok(Sexp::Atom(atom.to_owned())),
    }
}

fn number(s: &Sexp) -> Result<f64> {
    match s {
        Sexp::Atom(a) => a
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("expected a number, found `{a}`"))),
        Sexp::List(_) => Err(Error::Parse("expected a number, found a list".into())),
    }
}

fn number_list(s: &Sexp) -> Result<Vec<f64>> {
    match s {
        Sexp::List(items) if !items.is_empty() => items.iter().map(number).collect(),
        _ => Err(Error::Parse("expected a non-empty coefficient list".into())),
    }
}

fn arity(op: &str, args: &[Sexp], expected: usize) -> Result<()> {
    if args.len() == expected {
        Ok(())
    } else {
        Err(Error::Parse(format!(
            "`{op}` takes {expected} argument(s), got {}",
            args.len()
        )))
    }
}

fn to_spec(s: &Sexp) -> Result<FamilySpec> {
    match s {
        Sexp::Atom(a) if a == "t" => Ok(FamilySpec::T),
        Sexp::Atom(_) => Ok(FamilySpec::Const(number(s)?)),
        Sexp::List(items) => {
            let (head, args) = items
                .split_first()
                .ok_or_else(|| Error::Parse("empty expression".into()))?;
            let op = match head {
                Sexp::Atom(op) => op.as_str(),
                Sexp::List(_) => return Err(Error::Parse("operator must be a symbol".into())),
            };
            let boxed = |i: usize| to_spec(&args[i]).map(Box::new);
            match op {
                "poly" => {
                    if args.is_empty() {
                        return Err(Error::Parse("`poly` needs coefficients".into()));
                    }
                    Ok(FamilySpec::Poly(args.iter().map(number).collect::<Result<_>>()?))
                }
                "rat" => {
                    arity(op, args, 2)?;
                    Ok(FamilySpec::Rational {
                        num: number_list(&args[0])?,
                        den: number_list(&args[1])?,
                    })
                }
                "+" | "*" => {
                    if args.is_empty() {
                        return Err(Error::Parse(format!("`{op}` needs arguments")));
                    }
                    let terms = args.iter().map(to_spec).collect::<Result<Vec<_>>>()?;
                    Ok(if op == "+" {
                        FamilySpec::Add(terms)
                    } else {
                        FamilySpec::Mul(terms)
                    })
                }
                "-" => match args.len() {
                    1 => Ok(FamilySpec::Neg(boxed(0)?)),
                    2 => Ok(FamilySpec::Sub(boxed(0)?, boxed(1)?)),
                    n => Err(Error::Parse(format!("`-` takes 1 or 2 arguments, got {n}"))),
                },
                "/" => {
                    arity(op, args, 2)?;
                    Ok(FamilySpec::Div(boxed(0)?, boxed(1)?))
                }
                "sqrt" => {
                    arity(op, args, 1)?;
                    Ok(FamilySpec::Sqrt(boxed(0)?))
                }
                "pow" => {
                    arity(op, args, 2)?;
                    Ok(FamilySpec::Pow(boxed(0)?, number(&args[1])?))
                }
                other => Err(Error::Parse(format!("unknown operator `{other}`"))),
            }
        }
    }
}

impl FromStr for FamilySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let tokens = tokenize(s);
        let mut pos = 0;
        let sexp = read_sexp(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!("trailing input after `{s}`")));
        }
        to_spec(&sexp)
    }
}

impl Serialize for FamilySpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FamilySpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(v) => Ok(FamilySpec::Const(v)),
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}
