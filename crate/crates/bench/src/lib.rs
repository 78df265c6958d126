//! Fixed sample points shared by the benchmarks.

use cotlift::bundle::CotangentPoint;
use cotlift::coefficients::{CoefficientFamily, CoefficientSource, PointCoefficients};
use cotlift::harness::{preset, Scenario};
use cotlift::space_form::SpaceForm;

pub struct Fixture {
    pub scenario: Scenario,
    pub space_form: SpaceForm,
    pub family: CoefficientFamily,
    pub point: CotangentPoint,
    pub coefficients: PointCoefficients,
}

impl Fixture {
    /// A point of preset `name` at `t = 0.2`, away from the origin.
    pub fn new(name: &str) -> Self {
        let scenario = preset(name).unwrap_or_else(|| panic!("unknown preset `{name}`"));
        let n = scenario.n;
        let space_form = SpaceForm::new(n, scenario.c).expect("valid space form");
        let family = scenario.family();
        let x: Vec<f64> = (0..n).map(|i| 0.3 - 0.2 * i as f64).collect();
        let dir: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * i as f64).collect();
        let t = 0.2;
        let point = CotangentPoint::with_energy(&space_form, &x, &dir, t).expect("valid point");
        let coefficients = family.at(t).expect("admissible t");
        Self {
            scenario,
            space_form,
            family,
            point,
            coefficients,
        }
    }

    /// Small copy of the scenario for end-to-end timing.
    pub fn small_scenario(&self, points: usize) -> Scenario {
        let mut s = self.scenario.clone();
        s.t_grid = 1;
        s.points_per_t = points;
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        for name in ["sphere-case1", "generic", "sphere-case2-const"] {
            let f = Fixture::new(name);
            assert_eq!(f.point.n(), f.scenario.n);
        }
    }
}
