//! Scalar coefficient machinery of the natural lift: closure of the almost
//! complex structure, integrability, the Kähler metric coefficients, and
//! the two Einstein families of the proportionality factor `λ`.
//!
//! Every function of `t` is carried as a [`Jet3`]. Coefficients that depend
//! on derivatives of the input families (`b_i`, `d_i`, `μ`) are exact up to
//! their second derivative; their third slot is NaN.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jets::{FamilySpec, Jet3};

/// Denominators closer to zero than this are treated as vanishing.
const DEGENERATE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Plus => "+",
            Branch::Minus => "-",
        })
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" | "plus" => Ok(Branch::Plus),
            "-" | "minus" => Ok(Branch::Minus),
            other => Err(Error::Config(format!("branch must be `+` or `-`, got `{other}`"))),
        }
    }
}

/// How the proportionality factor `λ(t)` is obtained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum LambdaRule {
    Explicit { spec: FamilySpec },
    /// Rational Einstein family, defined on the whole bundle.
    Case1 { rho: f64 },
    /// Square-root Einstein family, defined for `t > 0` only.
    Case2 { rho: f64, branch: Branch },
}

/// Deliberate mutations used by negative controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Perturbation {
    /// `b1 += δ` before the metric coefficients are formed.
    B1Shift(f64),
    /// `a2 += δ` after the integrability coefficients are formed.
    A2Shift(f64),
    /// `λ ← k λ` (jet-wise).
    LambdaScale(f64),
    /// `μ = λ' + δ`.
    MuShift(f64),
    /// `c1 ← k c1`, breaking the proportionality relations.
    C1Scale(f64),
    /// `d3 += δ`.
    D3Shift(f64),
}

/// All coefficient jets of the lifted structure at one value of `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointCoefficients {
    pub t: f64,
    pub a: [Jet3; 3],
    pub b: [Jet3; 3],
    pub lambda: Jet3,
    pub mu: Jet3,
    pub c: [Jet3; 3],
    pub d: [Jet3; 3],
    /// Value of the integrability denominator `a1 − 2ta1' − 2cta2 − 4ct²a2'`.
    pub integrability_denominator: f64,
}

/// Anything that yields coefficient jets as a function of `t`.
pub trait CoefficientSource: Sync {
    fn at(&self, t: f64) -> Result<PointCoefficients>;
}

/// `a2 = (1 + a3²)/a1`, the first closure relation.
pub fn close_a2(a1: Jet3, a3: Jet3) -> Result<Jet3> {
    if a1.v0.abs() < DEGENERATE {
        return Err(Error::DegenerateStructure(format!(
            "a1 = {} cannot be inverted",
            a1.v0
        )));
    }
    (1.0 + a3 * a3).try_div(a1)
}

/// The integrability coefficients `(b1, b2, b3)` for base curvature `c`,
/// together with their common denominator.
pub fn integrability_b(a: [Jet3; 3], c: f64, t: f64) -> Result<([Jet3; 3], Jet3)> {
    let [a1, a2, a3] = a;
    let (d1, d2, d3) = (a1.derivative(), a2.derivative(), a3.derivative());
    let tt = Jet3::variable(t);
    let den = a1 - 2.0 * tt * d1 - 2.0 * c * tt * a2 - 4.0 * c * tt * tt * d2;
    if den.v0.abs() < DEGENERATE {
        return Err(Error::IntegrabilityDegenerate { t, value: den.v0 });
    }
    let n1 = 2.0 * c * c * tt * a2 * a2 + 2.0 * c * tt * a1 * d2 + a1 * d1 - c
        + 3.0 * c * a3 * a3;
    let n2 = 2.0 * tt * d3 * d3 - 2.0 * tt * d1 * d2
        + c * a2 * a2
        + 2.0 * c * tt * a2 * d2
        + a1 * d2;
    let n3 = a1 * d3 + 2.0 * c * a2 * a3 + 4.0 * c * tt * d2 * a3 - 2.0 * c * tt * a2 * d3;
    Ok(([n1 / den, n2 / den, n3 / den], den))
}

/// Relative residuals of the equivalent form of the integrability
/// conditions, which reconstructs `a1'`, `a2'`, `a3'` from the `b_i`.
pub fn integrability_residuals(a: [Jet3; 3], b: [Jet3; 3], c: f64, t: f64) -> [f64; 3] {
    let [a1, a2, a3] = a.map(|j| j.v0);
    let [b1, b2, b3] = b.map(|j| j.v0);
    let _ = b2;
    let s = a1 + 2.0 * t * b1;
    let predicted = [
        (a1 * b1 + c - 3.0 * c * a3 * a3 - 4.0 * c * t * a3 * b3) / s,
        (2.0 * a3 * b3 - a2 * b1 - c * a2 * a2) / s,
        (a1 * b3 - 2.0 * c * a2 * a3 - 2.0 * c * t * a2 * b3) / s,
    ];
    let actual = a.map(|j| j.v1);
    [0, 1, 2].map(|i| (actual[i] - predicted[i]).abs() / actual[i].abs().max(1.0))
}

/// Residuals of both closure relations.
pub fn closure_residuals(a: [Jet3; 3], b: [Jet3; 3], t: f64) -> [f64; 2] {
    let [a1, a2, a3] = a.map(|j| j.v0);
    let [b1, b2, b3] = b.map(|j| j.v0);
    let first = a1 * a2 - (1.0 + a3 * a3);
    let h3 = a3 + 2.0 * t * b3;
    let second = (a1 + 2.0 * t * b1) * (a2 + 2.0 * t * b2) - (1.0 + h3 * h3);
    [first.abs(), second.abs()]
}

/// Metric coefficients from the proportionality relations with factor
/// `λ` and `μ`: `c_i = λa_i`, `d_i = λb_i + μa_i + 2tμb_i`.
///
/// The second form is the expansion of
/// `c_i + 2td_i = (λ + 2tμ)(a_i + 2tb_i)` with no division by `t`.
pub fn kahler_coeffs(
    a: [Jet3; 3],
    b: [Jet3; 3],
    lambda: Jet3,
    mu: Jet3,
    t: f64,
) -> Result<([Jet3; 3], [Jet3; 3])> {
    if !(lambda.v0 > 0.0) {
        return Err(Error::Inadmissible {
            t,
            reason: format!("λ = {} is not positive", lambda.v0),
        });
    }
    let outer = lambda.v0 + 2.0 * t * mu.v0;
    if !(outer > 0.0) {
        return Err(Error::Inadmissible {
            t,
            reason: format!("λ + 2tμ = {outer} is not positive"),
        });
    }
    let tt = Jet3::variable(t);
    let c = a.map(|ai| lambda * ai);
    let d = [0, 1, 2].map(|i| lambda * b[i] + mu * a[i] + 2.0 * tt * mu * b[i]);
    Ok((c, d))
}

/// Positivity margins of the lifted metric and related denominators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Admissibility {
    pub lambda: f64,
    pub lambda_plus_2t_mu: f64,
    pub horizontal: f64,
    pub vertical: f64,
    pub determinant: f64,
    pub integrability_denominator: f64,
}

impl Admissibility {
    pub fn passes(&self) -> bool {
        self.lambda > 0.0
            && self.lambda_plus_2t_mu > 0.0
            && self.horizontal > 0.0
            && self.vertical > 0.0
            && self.determinant > 0.0
            && self.integrability_denominator.abs() > DEGENERATE
    }

    /// Smallest of the sign-carrying margins.
    pub fn min_margin(&self) -> f64 {
        [
            self.lambda,
            self.lambda_plus_2t_mu,
            self.horizontal,
            self.vertical,
            self.determinant,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

pub fn positivity_check(pc: &PointCoefficients) -> Admissibility {
    let t = pc.t;
    let [c1, c2, c3] = pc.c.map(|j| j.v0);
    let [d1, d2, d3] = pc.d.map(|j| j.v0);
    let h = c1 + 2.0 * t * d1;
    let v = c2 + 2.0 * t * d2;
    let m = c3 + 2.0 * t * d3;
    Admissibility {
        lambda: pc.lambda.v0,
        lambda_plus_2t_mu: pc.lambda.v0 + 2.0 * t * pc.mu.v0,
        horizontal: h,
        vertical: v,
        determinant: h * v - m * m,
        integrability_denominator: pc.integrability_denominator,
    }
}

/// `λ = 2a1c(n+1) / (ρ(a1² + 2ct(1 + a3²)))`.
pub fn lambda_case1(a1: Jet3, a3: Jet3, c: f64, n: usize, rho: f64, t: f64) -> Result<Jet3> {
    if rho == 0.0 {
        return Err(Error::DegenerateStructure("ρ must be nonzero".into()));
    }
    let tt = Jet3::variable(t);
    let den = rho * (a1 * a1 + 2.0 * c * tt * (1.0 + a3 * a3));
    if den.v0.abs() < DEGENERATE {
        return Err(Error::DegenerateStructure(format!(
            "case-I denominator vanishes at t = {t}"
        )));
    }
    (2.0 * c * (n as f64 + 1.0) * a1).try_div(den)
}

/// Radicand shared by the case-II family and the positivity quadratic:
/// `a1⁴ − 4a1²ct + 4a1²a3²ct + 4c²t²(1 + a3²)²`.
pub fn case2_radicand(a1: Jet3, a3: Jet3, c: f64, t: Jet3) -> Jet3 {
    let a1sq = a1 * a1;
    let s = 1.0 + a3 * a3;
    a1sq * a1sq - 4.0 * c * a1sq * t + 4.0 * c * a1sq * a3 * a3 * t + 4.0 * c * c * t * t * s * s
}

/// `λ = n(a1² + 2ct + 2a3²ct ± √rad) / (4a1ρt)`, defined for `t > 0`.
pub fn lambda_case2(
    a1: Jet3,
    a3: Jet3,
    c: f64,
    n: usize,
    rho: f64,
    t: f64,
    branch: Branch,
) -> Result<Jet3> {
    if !(t > 0.0) {
        return Err(Error::ZeroCovector(t));
    }
    if rho == 0.0 {
        return Err(Error::DegenerateStructure("ρ must be nonzero".into()));
    }
    let tt = Jet3::variable(t);
    let root = case2_radicand(a1, a3, c, tt).try_sqrt()?;
    let num = (n as f64) * (a1 * a1 + 2.0 * c * tt * (1.0 + a3 * a3) + branch.sign() * root);
    num.try_div(4.0 * rho * a1 * tt)
}

/// `λ'` forced by the case-I linear relation:
/// `λ' = −λ[a1²a1' + 2a1c(1+a3²) − 2cta1'(1+a3²) + 4cta1a3a3'] / (a1[a1² + 2ct(1+a3²)])`.
pub fn lambda_prime_case1(a1: Jet3, a3: Jet3, lambda: f64, c: f64, t: f64) -> Result<f64> {
    let (x, xp, y, yp) = (a1.v0, a1.v1, a3.v0, a3.v1);
    let s = 1.0 + y * y;
    let den = x * (x * x + 2.0 * c * t * s);
    if den.abs() < DEGENERATE {
        return Err(Error::DegenerateStructure(format!(
            "case-I λ' denominator vanishes at t = {t}"
        )));
    }
    let num = x * x * xp + 2.0 * x * c * s - 2.0 * c * t * xp * s + 4.0 * c * t * x * y * yp;
    Ok(-lambda * num / den)
}

/// Values of the auxiliary scalar expressions `E`, `F` and the
/// positivity quadratic `Q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EfqValues {
    pub e: f64,
    /// `(1+a3²)u² + 2a3uv + v²` with `u = a1 − 2a1't`, `v = 2a1a3't`.
    pub e_quadratic_form: f64,
    pub u: f64,
    pub v: f64,
    pub f: f64,
    /// `F (a1 + 2tb1)/(a3 + 2tb3)`, when `b` is supplied and the divisor
    /// is nonzero.
    pub f_scaled: Option<f64>,
    pub q: f64,
}

pub fn e_f_expressions(a1: Jet3, a3: Jet3, b: Option<[Jet3; 3]>, c: f64, t: f64) -> EfqValues {
    let (x, xp, y, yp) = (a1.v0, a1.v1, a3.v0, a3.v1);
    let e = x * x + x * x * y * y - 4.0 * x * xp * t - 4.0 * x * xp * y * y * t
        + 4.0 * x * x * y * yp * t
        + 4.0 * xp * xp * t * t
        + 4.0 * xp * xp * y * y * t * t
        - 8.0 * x * xp * y * yp * t * t
        + 4.0 * x * x * yp * yp * t * t;
    let u = x - 2.0 * xp * t;
    let v = 2.0 * x * yp * t;
    let e_quadratic_form = (1.0 + y * y) * u * u + 2.0 * y * u * v + v * v;
    let f = x.powi(3) * y - 2.0 * x * x * xp * y * t + 2.0 * x.powi(3) * yp * t
        + 2.0 * x * y * c * t
        + 2.0 * x * y.powi(3) * c * t
        - 4.0 * xp * y * c * t * t
        - 4.0 * xp * y.powi(3) * c * t * t
        - 4.0 * x * yp * c * t * t
        + 4.0 * x * y * y * yp * c * t * t;
    let f_scaled = b.and_then(|b| {
        let divisor = y + 2.0 * t * b[2].v0;
        (divisor.abs() > DEGENERATE).then(|| f * (x + 2.0 * t * b[0].v0) / divisor)
    });
    let q = case2_radicand(a1, a3, c, Jet3::constant(t)).v0;
    EfqValues {
        e,
        e_quadratic_form,
        u,
        v,
        f,
        f_scaled,
        q,
    }
}

/// Relative residuals of the two scalar relations that split the Einstein
/// problem: the case-I linear relation in `(λ, λ')` and the case-II
/// homogeneous quadratic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CaseResiduals {
    pub case1: f64,
    pub case2: f64,
}

/// `|Σ terms| / scale`, or the plain magnitude when the scale vanishes.
fn relative(sum: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        sum.abs() / scale
    } else {
        sum.abs()
    }
}

fn abs_sum(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Residuals are normalized homogeneously: the linear relation by
/// `(Σ|coefficients|)·max(|λ|, |λ'|)`, the quadratic one by
/// `(Σ|coefficients|)·(λ² + λ'²)`. This keeps the measure meaningful when
/// most coefficients vanish identically (e.g. constant `a1`, `a3 = 0`).
pub fn case_equations_residual(a1: Jet3, a3: Jet3, lambda: Jet3, c: f64, t: f64) -> CaseResiduals {
    let (x, xp, y, yp) = (a1.v0, a1.v1, a3.v0, a3.v1);
    let (l, lp) = (lambda.v0, lambda.v1);
    let y2 = y * y;
    let lin_l = [
        x * x * xp,
        2.0 * x * c,
        2.0 * x * y2 * c,
        -2.0 * xp * c * t,
        -2.0 * xp * y2 * c * t,
        4.0 * x * y * yp * c * t,
    ];
    let lin_lp = [x.powi(3), 2.0 * x * c * t, 2.0 * x * y2 * c * t];
    let case1 = relative(
        lin_l.iter().sum::<f64>() * l + lin_lp.iter().sum::<f64>() * lp,
        (abs_sum(&lin_l) + abs_sum(&lin_lp)) * l.abs().max(lp.abs()),
    );
    let rad = case2_radicand(a1, a3, c, Jet3::constant(t)).v0;
    let (c2, t2, t3) = (c * c, t * t, t * t * t);
    let a0 = [
        x.powi(5) * xp,
        2.0 * x.powi(4) * y2 * c,
        -x.powi(4) * xp * xp * t,
        -4.0 * x.powi(3) * xp * c * t,
        -4.0 * x.powi(3) * xp * y2 * c * t,
        4.0 * x.powi(4) * y * yp * c * t,
        4.0 * x * x * xp * xp * c * t2,
        4.0 * x * x * xp * xp * y2 * c * t2,
        -8.0 * x.powi(3) * xp * y * yp * c * t2,
        4.0 * x * xp * c2 * t2,
        8.0 * x * xp * y2 * c2 * t2,
        4.0 * x * xp * y2 * y2 * c2 * t2,
        -8.0 * x * x * y * yp * c2 * t2,
        -8.0 * x * x * y2 * y * yp * c2 * t2,
        -4.0 * xp * xp * c2 * t3,
        -8.0 * xp * xp * y2 * c2 * t3,
        -4.0 * xp * xp * y2 * y2 * c2 * t3,
        16.0 * x * xp * y * yp * c2 * t3,
        16.0 * x * xp * y2 * y * yp * c2 * t3,
        -16.0 * x * x * y2 * yp * yp * c2 * t3,
    ];
    let quad_lp = x * x * t * rad;
    let mixed = x * x * rad;
    let case2 = relative(
        a0.iter().sum::<f64>() * l * l + quad_lp * lp * lp + mixed * lp * l,
        (abs_sum(&a0) + quad_lp.abs() + mixed.abs()) * (l * l + lp * lp),
    );
    CaseResiduals { case1, case2 }
}

/// Parameter functions `a1`, `a3`, `λ` of a general natural Kähler lift
/// over a space form of curvature `c` and dimension `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientFamily {
    pub a1: FamilySpec,
    pub a3: FamilySpec,
    pub lambda: LambdaRule,
    pub c: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<Perturbation>,
}

impl CoefficientFamily {
    pub fn new(a1: FamilySpec, a3: FamilySpec, lambda: LambdaRule, c: f64, n: usize) -> Self {
        Self {
            a1,
            a3,
            lambda,
            c,
            n,
            perturbations: Vec::new(),
        }
    }

    pub fn with_perturbation(mut self, p: Perturbation) -> Self {
        self.perturbations.push(p);
        self
    }

    pub fn lambda_at(&self, a1: Jet3, a3: Jet3, t: f64) -> Result<Jet3> {
        match &self.lambda {
            LambdaRule::Explicit { spec } => spec.eval(t),
            LambdaRule::Case1 { rho } => lambda_case1(a1, a3, self.c, self.n, *rho, t),
            LambdaRule::Case2 { rho, branch } => {
                lambda_case2(a1, a3, self.c, self.n, *rho, t, *branch)
            }
        }
    }

    /// The constant `ρ` the family is built for, if any.
    pub fn rho(&self) -> Option<f64> {
        match self.lambda {
            LambdaRule::Explicit { .. } => None,
            LambdaRule::Case1 { rho } | LambdaRule::Case2 { rho, .. } => Some(rho),
        }
    }
}

impl CoefficientSource for CoefficientFamily {
    fn at(&self, t: f64) -> Result<PointCoefficients> {
        let a1 = self.a1.eval(t)?;
        let a3 = self.a3.eval(t)?;
        let a2 = close_a2(a1, a3)?;
        let (mut b, den) = integrability_b([a1, a2, a3], self.c, t)?;
        let mut a = [a1, a2, a3];
        let mut lambda = self.lambda_at(a1, a3, t)?;
        for p in &self.perturbations {
            match *p {
                Perturbation::B1Shift(delta) => b[0] = b[0] + delta,
                Perturbation::A2Shift(delta) => a[1] = a[1] + delta,
                Perturbation::LambdaScale(k) => lambda = lambda.scale(k),
                _ => {}
            }
        }
        let mut mu = lambda.derivative();
        for p in &self.perturbations {
            if let Perturbation::MuShift(delta) = *p {
                mu = mu + delta;
            }
        }
        let (mut c, mut d) = kahler_coeffs(a, b, lambda, mu, t)?;
        for p in &self.perturbations {
            match *p {
                Perturbation::C1Scale(k) => c[0] = c[0].scale(k),
                Perturbation::D3Shift(delta) => d[2] = d[2] + delta,
                _ => {}
            }
        }
        Ok(PointCoefficients {
            t,
            a,
            b,
            lambda,
            mu,
            c,
            d,
            integrability_denominator: den.v0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(v: f64) -> Jet3 {
        Jet3::constant(v)
    }

    fn sphere(lambda: LambdaRule) -> CoefficientFamily {
        CoefficientFamily::new(FamilySpec::constant(1.0), FamilySpec::constant(0.0), lambda, 1.0, 2)
    }

    #[test]
    fn close_a2_examples() {
        assert_eq!(close_a2(k(1.0), k(0.0)).unwrap().v0, 1.0);
        assert_eq!(close_a2(k(2.0), k(1.0)).unwrap().v0, 1.0);
        let t = Jet3::variable(1.0);
        let a2 = close_a2(1.0 + t, t).unwrap();
        assert!((a2.v0 - 1.0).abs() < 1e-15);
        assert!((a2.v1 - 0.5).abs() < 1e-15);
        assert!(matches!(
            close_a2(k(0.0), k(1.0)),
            Err(Error::DegenerateStructure(_))
        ));
    }

    #[test]
    fn integrability_flat_constants_vanish() {
        let (b, _) = integrability_b([k(1.0), k(1.0), k(0.0)], 0.0, 0.3).unwrap();
        assert!(b.iter().all(|j| j.v0 == 0.0));
    }

    #[test]
    fn integrability_sphere_preset() {
        for t in [0.0, 0.1, 0.3, 0.45] {
            let (b, den) = integrability_b([k(1.0), k(1.0), k(0.0)], 1.0, t).unwrap();
            assert!((den.v0 - (1.0 - 2.0 * t)).abs() < 1e-15);
            assert!((b[0].v0 + 1.0).abs() < 1e-14);
            assert!((b[1].v0 - 1.0 / (1.0 - 2.0 * t)).abs() < 1e-13);
            assert_eq!(b[2].v0, 0.0);
            let closure = closure_residuals([k(1.0), k(1.0), k(0.0)], b, t);
            assert!(closure[1] < 1e-14);
        }
        assert!(matches!(
            integrability_b([k(1.0), k(1.0), k(0.0)], 1.0, 0.5),
            Err(Error::IntegrabilityDegenerate { .. })
        ));
    }

    #[test]
    fn integrability_equivalent_form() {
        let t = 0.2;
        let tt = Jet3::variable(t);
        let a1 = 1.0 + tt;
        let a3 = tt;
        let a2 = close_a2(a1, a3).unwrap();
        let (b, _) = integrability_b([a1, a2, a3], 1.0, t).unwrap();
        let res = integrability_residuals([a1, a2, a3], b, 1.0, t);
        assert!(res.iter().all(|r| *r < 1e-9), "{res:?}");
        let closure = closure_residuals([a1, a2, a3], b, t);
        assert!(closure.iter().all(|r| *r < 1e-12), "{closure:?}");
    }

    #[test]
    fn kahler_coeffs_examples() {
        let t = 0.3;
        let a = [k(1.0), k(1.0), k(0.0)];
        let b = [k(-1.0), k(1.0 / (1.0 - 2.0 * t)), k(0.0)];
        let (c, d) = kahler_coeffs(a, b, k(1.0), k(0.0), t).unwrap();
        assert_eq!(c.map(|j| j.v0), [1.0, 1.0, 0.0]);
        assert_eq!(d.map(|j| j.v0), b.map(|j| j.v0));

        let (_, d) = kahler_coeffs(a, [k(0.0); 3], k(2.0), k(0.0), t).unwrap();
        assert!(d.iter().all(|j| j.v0 == 0.0));

        // λ = 1/(1+2t) at t = 0: λ' = −2, b1 = −1 → d1 = −3
        let lambda = FamilySpec::rational([1.0], [1.0, 2.0]).eval(0.0).unwrap();
        let (b, _) = integrability_b(a, 1.0, 0.0).unwrap();
        let (_, d) = kahler_coeffs(a, b, lambda, lambda.derivative(), 0.0).unwrap();
        assert!((d[0].v0 + 3.0).abs() < 1e-14);

        assert!(matches!(
            kahler_coeffs(a, b, k(-1.0), k(0.0), t),
            Err(Error::Inadmissible { .. })
        ));
    }

    #[test]
    fn proportionality_relations_hold() {
        let fam = CoefficientFamily::new(
            FamilySpec::poly([1.0, 0.3]),
            FamilySpec::poly([0.2, 0.5]),
            LambdaRule::Explicit {
                spec: FamilySpec::rational([1.0], [1.0, 0.5]),
            },
            0.5,
            3,
        );
        for t in [0.0, 0.05, 0.2] {
            let pc = fam.at(t).unwrap();
            let outer = pc.lambda.v0 + 2.0 * t * pc.mu.v0;
            for i in 0..3 {
                assert!((pc.c[i].v0 - pc.lambda.v0 * pc.a[i].v0).abs() < 1e-14);
                let lhs = pc.c[i].v0 + 2.0 * t * pc.d[i].v0;
                let rhs = outer * (pc.a[i].v0 + 2.0 * t * pc.b[i].v0);
                assert!((lhs - rhs).abs() < 1e-13);
            }
            assert_eq!(pc.mu.v0, pc.lambda.v1);
        }
    }

    #[test]
    fn positivity_examples() {
        let flat = CoefficientFamily::new(
            FamilySpec::constant(1.0),
            FamilySpec::constant(0.0),
            LambdaRule::Explicit {
                spec: FamilySpec::constant(1.0),
            },
            0.0,
            2,
        );
        let adm = positivity_check(&flat.at(0.4).unwrap());
        assert!(adm.passes());
        assert_eq!(
            [adm.horizontal, adm.vertical, adm.determinant],
            [1.0, 1.0, 1.0]
        );

        let sphere = sphere(LambdaRule::Explicit {
            spec: FamilySpec::constant(1.0),
        });
        let bad = positivity_check(&sphere.at(0.6).unwrap());
        assert!(!bad.passes());
        assert!((bad.horizontal - (1.0 - 1.2)).abs() < 1e-14);
        let good = positivity_check(&sphere.at(0.25).unwrap());
        assert!(good.passes());
        assert!((good.horizontal - 0.5).abs() < 1e-14);
    }

    #[test]
    fn lambda_case1_examples() {
        let l0 = lambda_case1(k(1.0), k(0.0), 1.0, 2, 6.0, 0.0).unwrap();
        assert!((l0.v0 - 1.0).abs() < 1e-15);
        assert!((l0.v1 + 2.0).abs() < 1e-14);
        let l = lambda_case1(k(1.0), k(0.0), 1.0, 2, 6.0, 0.25).unwrap();
        assert!((l.v0 - 2.0 / 3.0).abs() < 1e-15);
        let flat = lambda_case1(k(1.0), k(0.0), 0.0, 2, 6.0, 0.25).unwrap();
        assert_eq!(flat.v0, 0.0);
        assert!(lambda_case1(k(1.0), k(0.0), 1.0, 2, 0.0, 0.25).is_err());
    }

    #[test]
    fn lambda_case2_examples() {
        let plus = lambda_case2(k(1.0), k(0.0), 1.0, 2, 2.0, 0.25, Branch::Plus).unwrap();
        let minus = lambda_case2(k(1.0), k(0.0), 1.0, 2, 2.0, 0.25, Branch::Minus).unwrap();
        assert!((plus.v0 - 2.0).abs() < 1e-14);
        assert!((minus.v0 - 1.0).abs() < 1e-14);

        for i in 0..=40 {
            let t = 0.05 + 0.4 * i as f64 / 40.0;
            let l = lambda_case2(k(1.0), k(0.0), 1.0, 2, 2.0, t, Branch::Minus).unwrap();
            assert!((l.v0 - 1.0).abs() < 1e-12, "t = {t}: {}", l.v0);
            assert!(l.v1.abs() < 1e-10);
        }

        let t = 0.3;
        let plus = lambda_case2(k(1.0), k(0.0), 0.0, 3, 2.0, t, Branch::Plus).unwrap();
        let minus = lambda_case2(k(1.0), k(0.0), 0.0, 3, 2.0, t, Branch::Minus).unwrap();
        assert!((plus.v0 - 3.0 / (2.0 * 2.0 * t)).abs() < 1e-14);
        assert!(minus.v0.abs() < 1e-15);

        assert_eq!(
            lambda_case2(k(1.0), k(0.0), 1.0, 2, 2.0, 0.0, Branch::Minus),
            Err(Error::ZeroCovector(0.0))
        );
    }

    #[test]
    fn lambda_prime_case1_examples() {
        let lp = lambda_prime_case1(k(1.0), k(0.0), 1.0, 1.0, 0.0).unwrap();
        assert!((lp + 2.0).abs() < 1e-15);
        assert_eq!(lambda_prime_case1(k(1.0), k(0.0), 0.7, 0.0, 0.4).unwrap(), 0.0);
        let l = lambda_case1(k(1.0), k(0.0), 1.0, 2, 6.0, 0.25).unwrap();
        let lp = lambda_prime_case1(k(1.0), k(0.0), l.v0, 1.0, 0.25).unwrap();
        assert!((lp - l.v1).abs() < 1e-9 * l.v1.abs());
    }

    #[test]
    fn efq_examples() {
        let r = e_f_expressions(k(1.0), k(0.0), None, 1.0, 0.37);
        assert!((r.e - 1.0).abs() < 1e-15);
        let t = 0.25;
        let r = e_f_expressions(k(1.0), k(0.0), None, 1.0, t);
        assert!((r.q - 0.25).abs() < 1e-15);

        let a1 = FamilySpec::poly([1.2, 0.4]).eval(0.0).unwrap();
        let a3 = FamilySpec::poly([0.5, -0.3]).eval(0.0).unwrap();
        let a2 = close_a2(a1, a3).unwrap();
        let (b, _) = integrability_b([a1, a2, a3], 1.0, 0.0).unwrap();
        let r = e_f_expressions(a1, a3, Some(b), 1.0, 0.0);
        assert!((r.e - 1.2f64.powi(2) * 1.25).abs() < 1e-14);
        assert!((r.f - 1.2f64.powi(3) * 0.5).abs() < 1e-14);
        assert!((r.f_scaled.unwrap() - 1.2f64.powi(4)).abs() < 1e-13);
    }

    #[test]
    fn case_equation_examples() {
        let t = 0.25;
        let case1 = sphere(LambdaRule::Case1 { rho: 6.0 });
        let pc = case1.at(t).unwrap();
        let r = case_equations_residual(pc.a[0], pc.a[2], pc.lambda, 1.0, t);
        assert!(r.case1 < 1e-12, "{r:?}");

        let case2 = sphere(LambdaRule::Case2 {
            rho: 2.0,
            branch: Branch::Minus,
        });
        let pc = case2.at(t).unwrap();
        let r = case_equations_residual(pc.a[0], pc.a[2], pc.lambda, 1.0, t);
        assert!(r.case2 < 1e-9, "{r:?}");

        let generic = sphere(LambdaRule::Explicit {
            spec: FamilySpec::poly([1.0, 1.0]),
        });
        let pc = generic.at(t).unwrap();
        let r = case_equations_residual(pc.a[0], pc.a[2], pc.lambda, 1.0, t);
        assert!(r.case1 > 0.1 && r.case2 > 0.1, "{r:?}");
    }

    #[test]
    fn perturbations_apply_at_their_stage() {
        let base = sphere(LambdaRule::Explicit {
            spec: FamilySpec::constant(1.0),
        });
        let t = 0.2;
        let pc = base.at(t).unwrap();
        let b1 = base
            .clone()
            .with_perturbation(Perturbation::B1Shift(0.1))
            .at(t)
            .unwrap();
        assert!((b1.b[0].v0 - pc.b[0].v0 - 0.1).abs() < 1e-15);
        assert!((b1.d[0].v0 - pc.d[0].v0 - 0.1).abs() < 1e-15);
        let a2 = base
            .clone()
            .with_perturbation(Perturbation::A2Shift(0.1))
            .at(t)
            .unwrap();
        assert_eq!(a2.b.map(|j| j.v0), pc.b.map(|j| j.v0));
        assert!(closure_residuals(a2.a, a2.b, t)[0] > 0.09);
        let mu = base
            .clone()
            .with_perturbation(Perturbation::MuShift(0.5))
            .at(t)
            .unwrap();
        assert_eq!(mu.mu.v0, 0.5);
        let d3 = base
            .with_perturbation(Perturbation::D3Shift(0.1))
            .at(t)
            .unwrap();
        assert_eq!(d3.d[2].v0, 0.1);
    }
}
