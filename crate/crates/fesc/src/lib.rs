//! Composite finite element de Rham complexes with enhanced continuity.
//!
//! The library builds piecewise polynomial spaces of differential forms on
//! simplicial splits (Clough-Tocher, Alfeld, Worsey-Farin, Worsey-Piper),
//! certifies the finite-element-system compatibility conditions in exact
//! rational arithmetic (dimensions, extensions, local exactness, commuting
//! interpolators), and assembles the resulting conforming Stokes pairs on
//! simplicial meshes.
//!
//! Everything that feeds a dimension or exactness claim is computed over the
//! rationals; floating point appears only in the Stokes/inf-sup solver
//! harness.

pub mod assemble;
pub mod elements;
pub mod fes;
pub mod linalg;
pub mod polyform;
pub mod simplicial;
pub mod splits;

pub use linalg::{Rat, RatMatrix};

/// Errors shared across the construction and verification pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate simplex: {0}")]
    DegenerateSimplex(String),
    #[error("mesh format error: {0}")]
    MeshFormat(String),
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("split construction failed: {0}")]
    Split(String),
    #[error("form operation failed: {0}")]
    Form(String),
    #[error("restriction is multi-valued on {face}: cells {cells:?} disagree")]
    MultiValued { face: String, cells: Vec<usize> },
    #[error("finite element system axiom violated: {0}")]
    FesAxiom(String),
    #[error("no extension exists: {0}")]
    NoExtension(String),
    #[error("degrees of freedom are not unisolvent: {0}")]
    Unisolvence(String),
    #[error("element spec invalid: {0}")]
    ElementSpec(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

pub type Result<T> = std::result::Result<T, Error>;
