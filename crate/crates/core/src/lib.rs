pub mod adversary;
pub mod dist;
pub mod numeric;
pub mod teststat;
pub mod tsirelson;

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
