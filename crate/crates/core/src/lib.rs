//! Content-addressed archival store and time-travel search over Telegram
//! HTML exports.

pub mod analytics;
pub mod corpus;
pub mod diagnostics;
pub mod error;
pub mod exec;
pub mod ingest;
pub mod index;
pub mod media;
pub mod pipeline;
pub mod scoring;
pub mod store;
mod versioned;

pub use error::{Error, Result};
pub use exec::Exec;
