//! Location-aware multi-party photo privacy: policies, the DLP tree index,
//! face matching, and enforcement.

pub mod dlp;
pub mod enforce;
pub mod face;
pub mod policy;
pub mod taxonomy;
