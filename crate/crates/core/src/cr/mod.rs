//! Cauchy-Riemann operators on necks and half-cylinders, the filled
//! section, linear solves with their spectral diagnostics, the index
//! formula, contraction estimates and the transversal constraint.

mod structure;

pub mod constraint;
pub mod contraction;
pub mod index;
pub mod linear;
pub mod operators;

pub use constraint::{transversal_constraint, ConstraintPoint, DiskMap, PerturbedEmbedding};
pub use contraction::{contraction_modulus, ContractionEstimate, Germ};
pub use index::{fredholm_index, fredholm_index_local};
pub use linear::{kernel_diagnostic, linear_cr_solve, CrProblem, CrSolution, KernelReport};
pub use operators::{cr_pointwise, filled_section, CauchyRiemann};
pub use structure::ComplexStructureField;
