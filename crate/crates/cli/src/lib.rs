//! Command-line front end: config ingestion, design/simulation orchestration,
//! comparison tables and plot data.

pub mod commands;
pub mod pipeline;
pub mod report;
