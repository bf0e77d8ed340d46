// `!(x > 0.0)` guards are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod data_io;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod par;
pub mod quadrature;
pub mod risk_core;
pub mod simulation;
pub mod special;

pub use error::{Error, Result};
