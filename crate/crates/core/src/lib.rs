//! Half-integral weight cusp eigenforms on Gamma0(4), their Shimura lifts, and
//! sign and equidistribution statistics over primes.

pub mod arith;
pub mod cli;
pub mod error;
pub mod expansion;
pub mod hecke;
pub mod linalg;
pub mod oracle;
pub mod pipeline;
pub mod qseries;
pub mod report;
pub mod shimura;
pub mod spaces;
pub mod stats;

pub use error::{Error, Result};
