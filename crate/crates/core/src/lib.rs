//! Uniform distribution modulo one, measured and certified.
//!
//! The crate has three layers:
//! - measurement: counting functions, extreme/star discrepancy with a
//!   brute-force oracle ([`discrepancy`]), and Weyl sum profiles ([`weyl`]);
//! - certification: continued-fraction convergents of first differences
//!   ([`diophantine`]) drive a segment-by-segment equidistribution
//!   certificate ([`certify`]);
//! - verification: every quantitative inequality the certificate relies on
//!   has an executable checker with randomized suites ([`lemmas`]).

pub mod certify;
pub mod diophantine;
pub mod discrepancy;
pub mod error;
pub mod fixedpoint;
pub mod jsonfmt;
pub mod kahan;
pub mod lemmas;
pub mod seq;
pub mod weyl;

pub use error::{Error, Result};
