//! Visibility-based relative strength indicator (VGRSI) and a bar-level
//! trading harness around it.
//!
//! The indicator modules ([`visibility`], [`vgrsi`]) are generic over the
//! scalar type through [`num::Float`]; the trading harness ([`marketdata`],
//! [`signals`], [`broker`], [`walkforward`], [`metrics`]) works on [`Price`]
//! (`f64`) throughout.

// `!(x > 0.0)` in validations is deliberate: the negated form also rejects
// NaN, which a rewritten `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod broker;
pub mod error;
pub mod marketdata;
pub mod metrics;
pub mod num;
pub mod signals;
pub mod vgrsi;
pub mod visibility;
pub mod walkforward;

pub use error::{Error, Result};
pub use num::Float;

/// Concrete scalar used by the trading harness.
pub type Price = f64;

/// Timestamps are always UTC.
pub type Time = chrono::DateTime<chrono::Utc>;
