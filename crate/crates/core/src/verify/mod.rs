//! Oracles and property checks.

pub mod checks;
pub mod opt;
pub mod report;
pub mod threshold;
