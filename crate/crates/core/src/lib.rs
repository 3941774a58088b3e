//! GARCH(1,1) volatility models with normal or rational (Padé) errors,
//! estimated by adaptive independence Metropolis-Hastings, and scored against
//! realized volatility built from intraday prices.

// `!(x > 0.0)` guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod data;
pub mod error;
pub mod garch;
pub mod mcmc;
pub mod quadrature;
pub mod rational;
pub mod realized;
pub mod selection;
pub mod simulate;

pub use error::{Error, Result};
