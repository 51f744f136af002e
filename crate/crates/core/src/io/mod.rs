//! Configuration, solution files, curve export and the pipeline commands.

pub mod commands;
pub mod config;
pub mod files;
pub mod hexfloat;
pub mod validate;

pub use commands::{cmd_continue, cmd_seed, cmd_separatrix, cmd_validate, CommandError, SeparatrixOutput};
pub use config::{ConfigError, RunConfig, SeedConfig, SeedKind, SeedSpec};
pub use files::{read_curves, write_curves, FileError, SeparatrixFile, SolutionFile};
pub use hexfloat::{from_hex, to_hex, Hf};
pub use validate::{validate_solution, Check, ValidationReport};
