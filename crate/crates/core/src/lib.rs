//! Loop transformations for a small C-like language with OpenMP `unroll`,
//! `tile` and `for` directives.
//!
//! Two lowering paths share one front end. The shadow backend builds a
//! transformed syntax tree for every directive and keeps it in a side
//! table; the IR backend lowers loops to canonical skeletons and
//! transforms those through loop handles. Interpreters for both forms
//! record traces of `body(...)` calls, which the equivalence checker
//! compares against the untransformed program.
//!
//! ```
//! use loomp_core::{frontend, sema, shadow, exec};
//!
//! let src = "#pragma omp unroll full\n\
//!            #pragma omp unroll partial(2)\n\
//!            for (int i = 7; i < 17; i += 3) body(i);\n";
//! let program = frontend::parse_source(src, "stacked_unroll.c").unwrap();
//! sema::check_program(&program).unwrap();
//! let table = shadow::transform_program(&program, &shadow::ShadowOptions::default()).unwrap();
//! let trace = exec::interpret_ast(&program, Some(&table), &exec::Env::new(), exec::DEFAULT_STEP_LIMIT).unwrap();
//! assert_eq!(trace.to_string(), "body(7)\nbody(10)\nbody(13)\nbody(16)\n");
//! ```
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod ast;
pub mod diag;
pub mod eval;
pub mod exec;
pub mod frontend;
pub mod ir;
pub mod sema;
pub mod shadow;
pub mod types;

pub use diag::{render_diagnostic, Diagnostic, Severity, SourceLocation};
pub use types::{IntType, Value};
