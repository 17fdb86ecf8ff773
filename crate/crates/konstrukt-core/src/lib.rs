//! Exact-rational workbench for constraint (T/N/0) mathematics: finite
//! constraint sets and index sets, constraint linear algebra, algebras and
//! modules, Hochschild/deformation machinery and the flat polynomial
//! calculus on R^n.

pub mod algmod;
pub mod conset;
pub mod convec;
pub mod flatcase;
pub mod homalg;
pub mod linalg;
pub mod rat;

use thiserror::Error;

/// Errors shared across the workbench modules. Variants mirror the error
/// conditions of the individual operations.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum KError {
    #[error("SHAPE_MISMATCH: {0}")]
    ShapeMismatch(String),
    #[error("SIZE_LIMIT: {0}")]
    SizeLimit(String),
    #[error("NOT_EMBEDDED: {0}")]
    NotEmbedded(String),
    #[error("NOT_SUBMODULE: {0}")]
    NotSubmodule(String),
    #[error("INVALID_ALGEBRA: {0}")]
    InvalidAlgebra(String),
    #[error("ALGEBRA_MISMATCH: {0}")]
    AlgebraMismatch(String),
    #[error("NOT_STRONG: {0}")]
    NotStrong(String),
    #[error("NOT_IDEMPOTENT: {0}")]
    NotIdempotent(String),
    #[error("ORDER_MISMATCH: {0}")]
    OrderMismatch(String),
    #[error("LEVEL_T_ONLY: {0}")]
    LevelTOnly(String),
    #[error("NOT_CLOSED: {0}")]
    NotClosed(String),
    #[error("NOT_CONSTRAINT: {0}")]
    NotConstraint(String),
    #[error("VARIANT_UNSUPPORTED: {0}")]
    VariantUnsupported(String),
    #[error("BAD_PAIRING: {0}")]
    BadPairing(String),
    #[error("CONFIG_INVALID: {0}")]
    ConfigInvalid(String),
    #[error("SCHEMA_ERROR: {0}")]
    SchemaError(String),
    #[error("SUITE_MISMATCH: {0}")]
    SuiteMismatch(String),
}
