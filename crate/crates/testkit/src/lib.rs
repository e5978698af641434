//! Fixtures and slow reference implementations shared by the test suites.

pub mod export;
pub mod oracle;
pub mod synth;
