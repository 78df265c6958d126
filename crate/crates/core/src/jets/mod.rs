//! Order-3 jets in the energy density and the expression grammar that
//! produces them.

mod family;
mod jet;

pub use family::FamilySpec;
pub use jet::Jet3;

use crate::error::Result;

/// Evaluates a family at `t`, returning its value and first three derivatives.
pub fn jet_eval(spec: &FamilySpec, t: f64) -> Result<Jet3> {
    spec.eval(t)
}
