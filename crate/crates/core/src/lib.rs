//! Natural lifted Kähler structures on the cotangent bundle of a space
//! form, with closed-form connection and curvature checked against
//! finite-difference oracles.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod coefficients;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod harness;
pub mod jets;
pub mod space_form;

pub use error::{Error, Result};
pub use bundle::{BlockTensor, CotangentPoint, LiftedField};
pub use coefficients::{
    Branch, CoefficientFamily, CoefficientSource, LambdaRule, Perturbation, PointCoefficients,
};
pub use connection::AdaptedConnection;
pub use curvature::CurvatureBlocks;
pub use harness::{run_scenario, Scenario, VerificationReport};
pub use jets::{FamilySpec, Jet3};
pub use space_form::SpaceForm;
