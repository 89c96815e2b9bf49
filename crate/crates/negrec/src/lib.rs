//! IO companion to `negrec-core`: versioned JSON/JSONL file formats with
//! content checksums, run manifests, parallel drivers, the verification
//! suite and the `negrec` command line.

pub mod cli;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod parallel;
pub mod verify;

pub use error::AppError;
