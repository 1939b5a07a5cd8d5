//! Acceptance checks for the LAMP engine.
//!
//! [`oracle`] holds brute-force references that share no matching code
//! with the engine, [`gen`] the randomized inputs, and [`criteria`] one
//! evaluator per acceptance criterion.

pub mod criteria;
pub mod gen;
pub mod oracle;
