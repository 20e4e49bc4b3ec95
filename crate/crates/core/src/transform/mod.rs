//! Equivalence transformations (continuous and discrete), form-preserving
//! transformations, and the pushforward of generators.

mod et;
mod fpt;
mod point;

use thiserror::Error;

use crate::expr::ParseError;

pub use et::{discrete_et, et_apply, DiscreteEt, EtParams};
pub use fpt::{
    apply_with, coefficient_image, fpt_apply, fpt_catalog, fpt_entry, fpt_verify, load_catalog, EntryStatus, FptApplication,
    FptEntry, FptReport,
};
pub use point::{pushforward, PointTransformation, Shape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformError {
    #[error("template mismatch: {0}")]
    TemplateMismatch(String),
    #[error("not of the restricted shape: {0}")]
    ShapeViolation(String),
    #[error("no closed-form inverse for `{0}`")]
    InverseUnavailable(String),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("image does not match the target: {0}")]
    TargetMismatch(String),
    #[error("catalog: {0}")]
    Catalog(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}
