//! Missing-data imputation benchmark toolkit.
//!
//! The pipeline is: load a UCI file ([`data`]), split it, perturb the
//! training half ([`perturb`]), either one-hot encode it directly or impute
//! it first ([`impute`], [`encode`]), train a classifier ([`classify`]) and
//! measure test error ([`experiment`]).

pub mod classify;
pub mod data;
pub mod encode;
pub mod error;
pub mod experiment;
pub mod fetch;
pub mod impute;
pub mod perturb;
pub mod rng;

pub use error::{Error, Result};
