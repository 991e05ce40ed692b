//! Command-line driver and review service.

pub mod cli;
pub mod commands;
pub mod review;
pub mod service;
