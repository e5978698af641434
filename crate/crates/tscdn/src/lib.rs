//! `tscdn` command line and HTTP service.

pub mod app;
pub mod cli;
pub mod params;
