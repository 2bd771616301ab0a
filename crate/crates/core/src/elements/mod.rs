//! Reference-triangle polynomial machinery.
//!
//! Everything in here is geometry-free or refers to a single affine element:
//! quadrature rules, barycentric Lagrange bases with derivatives, the planar
//! Airy operator, the isotropic compliance/stiffness tensors, and the
//! closed-form manufactured solutions used by the convergence studies.

pub mod basis;
pub mod jet;
pub mod manufactured;
pub mod quadrature;
pub mod tensor;

pub use basis::{AffineMap, BasisValues, LagrangeBasis};
pub use jet::Jet3;
pub use manufactured::{BubbleVariant, CaseName, ManufacturedCase};
pub use quadrature::QuadratureRule;
pub use tensor::{airy, compliance_apply, stiffness_apply, MaterialParams, Sym2};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ElementError {
    #[error("quadrature degree {0} outside supported range 1..=20")]
    QuadratureDegree(usize),
    #[error("polynomial degree {0} outside supported range 1..=10")]
    BasisDegree(usize),
    #[error("shear modulus must be positive, got {0}")]
    NonPositiveMu(f64),
    #[error("first Lamé parameter must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("gradient length must be non-negative, got {0}")]
    NegativeIota(f64),
    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),
}
