//! Secrecy capacity computations for MIMO Gaussian wiretap channels and
//! two-receiver broadcast channels with a common message and two
//! confidential messages.
//!
//! All rates are in nats internally; conversion to bits happens only when
//! results are displayed.
//!
//! Module map:
//! - [`linalg`]: symmetric-matrix substrate (PSD tests, log-determinants,
//!   square roots, generalized eigenproblems).
//! - [`wiretap`]: point-to-point capacity, secrecy capacity and the
//!   capacity-equivocation / private-confidential regions.
//! - [`bcc`]: the three-message broadcast region, its canonical form, the
//!   weighted-sum program, KKT certificates and channel enhancement.
//! - [`dmc`]: a toy-scale binning code simulator for discrete memoryless
//!   wiretap channels with exact leakage computation.
//! - [`oracle`]: brute-force and closed-form validators.
//! - [`cli`]: the command-line driver.

pub mod bcc;
pub mod cli;
pub mod dmc;
pub mod error;
pub mod linalg;
pub mod optim;
pub mod oracle;
pub mod rng;
pub mod wiretap;

pub use error::{Error, Result};
pub use linalg::SymMatrix;
pub use optim::OptimizerConfig;
