//! Scenario description, validation and the built-in preset registry.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coefficients::{Branch, CoefficientFamily, LambdaRule, Perturbation};
use crate::jets::FamilySpec;
use crate::{Error, Result};

/// Radius of the ball of base points that gets sampled.
pub const SAMPLE_RADIUS: f64 = 0.8;

/// How the `t` values of a scenario are chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TSampling {
    /// Independent uniform draws from `[t_min, t_max]`.
    #[default]
    Uniform,
    /// Evenly spaced values including both endpoints.
    Grid,
}

/// A complete, self-describing verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub n: usize,
    pub c: f64,
    pub a1: FamilySpec,
    pub a3: FamilySpec,
    pub lambda: LambdaRule,
    /// Einstein constant to test against. Defaults to the `ρ` of the
    /// λ-rule; with an explicit λ and no `rho` the Einstein checks are
    /// skipped.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Number of distinct `t` values.
    pub t_grid: usize,
    /// Base points sampled for each `t` value.
    pub points_per_t: usize,
    #[serde(default)]
    pub t_sampling: TSampling,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub perturbations: Vec<Perturbation>,
    /// Per-check tolerance overrides, keyed by check name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub tolerances: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Load a scenario from a TOML file, or look up a preset by name.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        let path = Path::new(name_or_path);
        if path.is_file() {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            return Self::from_toml(&text);
        }
        preset(name_or_path).ok_or_else(|| {
            Error::Config(format!(
                "`{name_or_path}` is neither a scenario file nor a preset (known: {})",
                preset_names().join(", ")
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(format!("scenario `{}`: {msg}", self.name)));
        if self.n < 2 {
            return bad(format!("n must be at least 2, got {}", self.n));
        }
        if self.n > 6 {
            return bad(format!("n = {} is beyond the supported range 2..=6", self.n));
        }
        for (label, v) in [("c", self.c), ("t_min", self.t_min), ("t_max", self.t_max)] {
            if !v.is_finite() {
                return bad(format!("{label} must be finite"));
            }
        }
        if self.t_min < 0.0 {
            return bad(format!("t_min must be non-negative, got {}", self.t_min));
        }
        if self.t_max < self.t_min {
            return bad(format!("t_max ({}) is below t_min ({})", self.t_max, self.t_min));
        }
        if matches!(self.lambda, LambdaRule::Case2 { .. }) && self.t_min <= 0.0 {
            return bad("the square-root λ family needs t_min > 0".into());
        }
        if let LambdaRule::Case1 { rho } | LambdaRule::Case2 { rho, .. } = self.lambda {
            if rho == 0.0 || !rho.is_finite() {
                return bad(format!("the λ-rule needs a finite nonzero ρ, got {rho}"));
            }
        }
        if self.t_grid == 0 || self.points_per_t == 0 {
            return bad("t_grid and points_per_t must be at least 1".into());
        }
        let factor = 1.0 + self.c * SAMPLE_RADIUS * SAMPLE_RADIUS / 4.0;
        if factor < 0.05 {
            return bad(format!(
                "c = {} is too negative for the sampling ball (conformal factor {factor:.3})",
                self.c
            ));
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v >= 0.0) {
                return bad(format!("tolerance `{k}` must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn family(&self) -> CoefficientFamily {
        let mut f = CoefficientFamily::new(
            self.a1.clone(),
            self.a3.clone(),
            self.lambda.clone(),
            self.c,
            self.n,
        );
        f.perturbations = self.perturbations.clone();
        f
    }

    /// The Einstein constant the scenario is checked against, if any.
    pub fn einstein_target(&self) -> Option<f64> {
        self.rho.or(match self.lambda {
            LambdaRule::Explicit { .. } => None,
            LambdaRule::Case1 { rho } | LambdaRule::Case2 { rho, .. } => Some(rho),
        })
    }

    /// Expected constant holomorphic sectional curvature `2ρ/(n+1)`, for
    /// the rational Einstein family and for explicitly Ricci-flat runs.
    pub fn holomorphic_target(&self) -> Option<f64> {
        let rho = self.einstein_target()?;
        let applies = matches!(self.lambda, LambdaRule::Case1 { .. }) || rho == 0.0;
        applies.then(|| 2.0 * rho / (self.n as f64 + 1.0))
    }

    pub fn total_points(&self) -> usize {
        self.t_grid * self.points_per_t
    }

    /// Override `ρ` both in the λ-rule and as the Einstein target.
    pub fn set_rho(&mut self, rho: f64) {
        match &mut self.lambda {
            LambdaRule::Case1 { rho: r } | LambdaRule::Case2 { rho: r, .. } => *r = rho,
            LambdaRule::Explicit { .. } => {}
        }
        self.rho = Some(rho);
    }

    pub fn set_branch(&mut self, branch: Branch) -> Result<()> {
        match &mut self.lambda {
            LambdaRule::Case2 { branch: b, .. } => {
                *b = branch;
                Ok(())
            }
            _ => Err(Error::Config(format!(
                "scenario `{}` has no square-root λ family; --branch does not apply",
                self.name
            ))),
        }
    }
}

fn base(name: &str, n: usize, c: f64, lambda: LambdaRule, t: (f64, f64)) -> Scenario {
    Scenario {
        name: name.into(),
        n,
        c,
        a1: FamilySpec::constant(1.0),
        a3: FamilySpec::constant(0.0),
        lambda,
        rho: None,
        t_min: t.0,
        t_max: t.1,
        t_grid: 20,
        points_per_t: 10,
        t_sampling: TSampling::Uniform,
        seed: 7,
        perturbations: Vec::new(),
        tolerances: BTreeMap::new(),
    }
}

fn explicit(spec: FamilySpec) -> LambdaRule {
    LambdaRule::Explicit { spec }
}

/// Names of the built-in scenarios, in registry order.
pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(name, _)| *name).collect()
}

/// Built-in scenarios with a one-line description each.
pub fn preset_catalog() -> Vec<(&'static str, &'static str)> {
    PRESETS.to_vec()
}

const PRESETS: &[(&str, &str)] = &[
    ("flat-sasaki", "flat base, Sasaki-type lift (λ = 1), Ricci-flat"),
    ("sphere", "unit sphere, a1 = 1, λ = 1; Kähler but not Einstein"),
    ("sphere-n3", "three-dimensional unit sphere, λ = 1"),
    ("hyperbolic", "c = -1, n = 3, λ = 1"),
    ("sphere-case1", "unit sphere, rational Einstein family with ρ = 6"),
    ("sphere-case1-n3", "three-sphere, rational Einstein family with ρ = 8"),
    ("hyperbolic-case1", "c = -1, rational Einstein family with ρ = -6"),
    ("twisted-case1", "unit sphere, a3 ≠ 0, rational Einstein family with ρ = 6"),
    ("sphere-case2-const", "unit sphere, square-root family, constant branch (ρ = 2)"),
    ("generic", "c = 0.5, n = 3, non-constant a1, a3 and λ"),
    ("sphere-case1-broken", "sphere-case1 with λ scaled by 1.1 (Einstein must fail)"),
];

pub fn preset(name: &str) -> Option<Scenario> {
    let s = match name {
        "flat-sasaki" => {
            let mut s = base(name, 2, 0.0, explicit(FamilySpec::constant(1.0)), (0.05, 1.0));
            s.rho = Some(0.0);
            s
        }
        "sphere" => base(name, 2, 1.0, explicit(FamilySpec::constant(1.0)), (0.05, 0.45)),
        "sphere-n3" => base(name, 3, 1.0, explicit(FamilySpec::constant(1.0)), (0.05, 0.45)),
        "hyperbolic" => base(name, 3, -1.0, explicit(FamilySpec::constant(1.0)), (0.05, 1.0)),
        "sphere-case1" => base(name, 2, 1.0, LambdaRule::Case1 { rho: 6.0 }, (0.05, 0.4)),
        "sphere-case1-n3" => base(name, 3, 1.0, LambdaRule::Case1 { rho: 8.0 }, (0.05, 0.4)),
        "hyperbolic-case1" => base(name, 2, -1.0, LambdaRule::Case1 { rho: -6.0 }, (0.05, 0.4)),
        "twisted-case1" => {
            let mut s = base(name, 2, 1.0, LambdaRule::Case1 { rho: 6.0 }, (0.05, 0.3));
            s.a3 = FamilySpec::poly([0.2, 0.3]);
            s
        }
        "sphere-case2-const" => base(
            name,
            2,
            1.0,
            LambdaRule::Case2 {
                rho: 2.0,
                branch: Branch::Minus,
            },
            (0.05, 0.45),
        ),
        "generic" => {
            let mut s = base(
                name,
                3,
                0.5,
                explicit(FamilySpec::rational([1.0], [1.0, 0.5])),
                (0.05, 0.3),
            );
            s.a1 = FamilySpec::poly([1.0, 0.3]);
            s.a3 = FamilySpec::poly([0.2, 0.5]);
            s
        }
        "sphere-case1-broken" => {
            let mut s = base(name, 2, 1.0, LambdaRule::Case1 { rho: 6.0 }, (0.05, 0.4));
            s.perturbations.push(Perturbation::LambdaScale(1.1));
            s
        }
        _ => return None,
    };
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in preset_names() {
            let s = preset(name).unwrap();
            assert_eq!(s.name, name);
            s.validate().unwrap();
        }
    }

    #[test]
    fn toml_roundtrip() {
        for name in preset_names() {
            let s = preset(name).unwrap();
            let text = s.to_toml().unwrap();
            assert_eq!(Scenario::from_toml(&text).unwrap(), s, "{text}");
        }
    }

    #[test]
    fn parses_handwritten_toml() {
        let text = r#"
            name = "custom"
            n = 3
            c = 1.0
            a1 = "(poly 1 0.2)"
            a3 = 0
            t_min = 0.1
            t_max = 0.2
            t_grid = 2
            points_per_t = 3
            seed = 11
            perturbations = [{ b1-shift = 0.1 }]
            [lambda]
            rule = "case2"
            rho = 3.0
            branch = "+"
            [tolerances]
            "curvature.oracle" = 1e-3
        "#;
        let s = Scenario::from_toml(text).unwrap();
        assert_eq!(s.a3, FamilySpec::constant(0.0));
        assert_eq!(s.einstein_target(), Some(3.0));
        assert_eq!(s.holomorphic_target(), None);
        assert_eq!(s.perturbations, vec![Perturbation::B1Shift(0.1)]);
        assert_eq!(s.tolerances["curvature.oracle"], 1e-3);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = preset("sphere-case2-const").unwrap();
        s.t_min = 0.0;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        let mut s = preset("sphere").unwrap();
        s.points_per_t = 0;
        assert!(s.validate().is_err());
        let mut s = preset("sphere").unwrap();
        s.n = 1;
        assert!(s.validate().is_err());
        let mut s = preset("sphere").unwrap();
        s.c = -8.0;
        assert!(s.validate().is_err());
        assert!(Scenario::from_toml("name = 'x'\nbogus = 1").is_err());
        assert!(Scenario::resolve("no-such-preset").is_err());
        assert!(preset("sphere").unwrap().set_branch(Branch::Plus).is_err());
    }

    #[test]
    fn holomorphic_targets() {
        assert_eq!(preset("sphere-case1").unwrap().holomorphic_target(), Some(4.0));
        assert_eq!(preset("flat-sasaki").unwrap().holomorphic_target(), Some(0.0));
        assert_eq!(preset("sphere").unwrap().holomorphic_target(), None);
        let mut s = preset("sphere-case1").unwrap();
        s.set_rho(3.0);
        assert_eq!(s.lambda, LambdaRule::Case1 { rho: 3.0 });
        assert_eq!(s.holomorphic_target(), Some(2.0));
    }
}
