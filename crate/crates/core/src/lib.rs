//! Mixed finite elements for planar linear stress gradient elasticity.
//!
//! The crate builds continuous symmetric-tensor stress spaces with extra
//! vertex smoothness (`Σ_k^r`, r = 0,1,2) paired with piecewise-polynomial
//! displacement spaces (`Q_{k-1}^s`, s = -1,0,1), assembles the perturbed
//! Hellinger-Reissner saddle system
//!
//! ```text
//!   ι²(∇𝒜σ, ∇τ) + (𝒜σ, τ) + (div τ, u) = 0
//!   (div σ, v)                          = (f, v)
//! ```
//!
//! and provides the analysis tooling around it: detection and classification
//! of criss-cross (Type I) and three-line (Type II) mesh singularities,
//! rank/cokernel studies of the discrete divergence operator, dimension and
//! complex audits, and manufactured-solution convergence studies.
//!
//! Modules:
//! - [`mesh`]: triangulations, structured generators, singularity-removing
//!   splits, vertex stars and the Θ-based vertex classifier.
//! - [`elements`]: reference-triangle polynomial machinery (quadrature,
//!   Lagrange bases with derivatives, Airy/compliance tensors, manufactured
//!   solutions).
//! - [`spaces`]: the constrained finite element spaces and their
//!   reduced-coordinate maps.
//! - [`system`]: form assembly, saddle solves, error norms, rank reports and
//!   inf-sup estimates.
//! - [`verify`]: the verification lab (rank-deficiency census, cokernel
//!   matching, bubble complex audits, convergence studies).

pub mod elements;
pub mod mesh;
pub mod sparse;
pub mod spaces;
pub mod system;
pub mod verify;

pub use elements::MaterialParams;
pub use mesh::Triangulation;
