//! Library side of the `sustain` binary: configuration, commands and the
//! row types they emit.

pub mod commands;
pub mod config;
pub mod error;
