pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod harness;
pub mod interp;
pub mod quad;
pub mod replay;
pub mod riemann;
pub mod solver;

pub use error::{Error, Result};

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
