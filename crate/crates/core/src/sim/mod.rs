pub mod config;
pub mod counts;
pub mod plan;
pub mod run;

pub use config::{SimConfig, SourceMode};
pub use run::run;
