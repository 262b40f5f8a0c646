//! Center-manifold normal forms of scalar delay equations and their
//! realization: given a target radial field for a nonresonant multiple
//! Hopf (optionally with a zero root) singularity, construct a scalar delay
//! equation whose normal form is that field.

pub mod ddesim;
pub mod linsys;
pub mod nfengine;
pub mod polyring;
pub mod qsolver;
pub mod realizer;
pub mod symmetry;

pub use linsys::{adjoint_vector, design_linear, verify_spectrum, AdjointVector, DelayLinearOperator, SpectrumSpec};
pub use nfengine::{reduce_to_normal_form, DDEModel, NormalFormResult};
pub use polyring::{Monomial, Poly, VariableSpace, VectorPoly};
pub use realizer::{realize, realize_unfolding, scan_tau, RealizationProblem};

use thiserror::Error;

/// Error from any stage of the pipeline, tagged by module.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polyring: {0}")]
    Poly(#[from] polyring::PolyError),
    #[error("linsys: {0}")]
    Linsys(#[from] linsys::LinsysError),
    #[error("symmetry: {0}")]
    Symmetry(#[from] symmetry::SymmetryError),
    #[error("qsolver: {0}")]
    QSolve(#[from] qsolver::QSolveError),
    #[error("nfengine: {0}")]
    Nf(#[from] nfengine::NfError),
    #[error("realizer: {0}")]
    Realizer(#[from] realizer::RealizerError),
    #[error("ddesim: {0}")]
    Sim(#[from] ddesim::SimError),
}
