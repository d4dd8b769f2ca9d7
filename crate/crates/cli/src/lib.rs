//! Artifact writers and chart rendering behind the command-line binary.

pub mod output;
pub mod plot;
