//! Command-line driver for `loomp-core`, plus the text formats it reads
//! and writes: IR modules and execution traces.

pub mod cli;
pub mod ir_text;
pub mod pipeline;
pub mod trace_text;

pub use cli::{run_cli, CliOutput};
pub use ir_text::{parse_ir, print_ir, IrParseError};
