//! Interpreters for programs and IR modules, the traces they record, and
//! the equivalence check between two traces.

mod ast_interp;
mod ir_interp;
mod oracle;

pub use ast_interp::{interpret_ast, interpret_ast_with_stats, AstRun};
pub use ir_interp::interpret_ir;
pub use oracle::{tiled_order, workshare_owner};

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::diag::SourceLocation;
use crate::eval::EvalError;
use crate::types::Value;

/// Interpreter step budget used unless the caller picks another.
pub const DEFAULT_STEP_LIMIT: u64 = 10_000_000;

/// Initial values for variables declared without an initializer, by name.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Env {
    bindings: BTreeMap<String, i128>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: i128) -> Env {
        self.bindings.insert(name.into(), value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: i128) {
        self.bindings.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<i128> {
        self.bindings.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i128)> {
        self.bindings.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExecError {
    StepLimit(u64),
    Eval { error: EvalError, loc: SourceLocation },
    /// A phi has no incoming value for the block control came from.
    MalformedPhi { block: String },
    /// The IR refers to something that does not exist.
    Malformed(String),
}

impl fmt::Display for ExecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExecError::StepLimit(n) => write!(f, "step limit of {n} exceeded"),
            ExecError::Eval { error, loc } => write!(f, "{loc}: {error}"),
            ExecError::MalformedPhi { block } => write!(f, "phi in block '{block}' has no value for its predecessor"),
            ExecError::Malformed(m) => write!(f, "malformed module: {m}"),
        }
    }
}

impl core::error::Error for ExecError {}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TraceEvent {
    pub callee: String,
    pub args: Vec<Value>,
    pub thread: Option<u32>,
}

impl TraceEvent {
    /// The event without its thread tag.
    fn key(&self) -> (&str, &[Value]) {
        (&self.callee, &self.args)
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.thread {
            write!(f, "(t{t}) ")?;
        }
        write!(f, "{}(", self.callee)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub events: Vec<TraceEvent>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// First argument of every event, as plain integers.
    pub fn first_args(&self) -> Vec<i128> {
        self.events.iter().filter_map(|e| e.args.first().map(|v| v.as_i128())).collect()
    }
}

/// One event per line.
impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.events {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

/// What a transformed trace must preserve of the reference trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OrderContract {
    ExactOrder,
    MultisetOnly,
    /// The reference is a row-major walk over a nest with trip counts
    /// `dims`; the candidate must follow the tiled order with `sizes`.
    TiledOrder { dims: Vec<u64>, sizes: Vec<u64> },
    /// Same events; each thread below `threads` runs its share in
    /// reference order. Untagged events keep their order among themselves.
    Partitioned { threads: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub pass: bool,
    /// Index of the first candidate event that does not match.
    pub divergence: Option<usize>,
    pub message: String,
}

impl Report {
    fn ok() -> Report {
        Report { pass: true, divergence: None, message: String::from("traces equivalent") }
    }

    fn fail(at: Option<usize>, message: impl Into<String>) -> Report {
        Report { pass: false, divergence: at, message: message.into() }
    }
}

fn exact(reference: &[TraceEvent], candidate: &[TraceEvent]) -> Report {
    let n = reference.len().min(candidate.len());
    if let Some(i) = (0..n).find(|&i| reference[i].key() != candidate[i].key()) {
        return Report::fail(Some(i), alloc::format!("event {i}: expected {}, found {}", reference[i], candidate[i]));
    }
    if reference.len() != candidate.len() {
        return Report::fail(
            Some(n),
            alloc::format!("length mismatch: expected {} events, found {}", reference.len(), candidate.len()),
        );
    }
    Report::ok()
}

fn multiset(reference: &[TraceEvent], candidate: &[TraceEvent]) -> Report {
    let mut counts: BTreeMap<(&str, &[Value]), i64> = BTreeMap::new();
    for e in reference {
        *counts.entry(e.key()).or_default() += 1;
    }
    for (i, e) in candidate.iter().enumerate() {
        match counts.get_mut(&e.key()) {
            Some(c) if *c > 0 => *c -= 1,
            _ => return Report::fail(Some(i), alloc::format!("event {i} ({e}) is not in the reference")),
        }
    }
    if counts.values().any(|c| *c != 0) {
        return Report::fail(Some(candidate.len()), "candidate is missing reference events");
    }
    Report::ok()
}

fn partitioned(reference: &[TraceEvent], candidate: &[TraceEvent], threads: u32) -> Report {
    let m = multiset(reference, candidate);
    if !m.pass {
        return m;
    }
    let mut positions: BTreeMap<(&str, &[Value]), alloc::collections::VecDeque<usize>> = BTreeMap::new();
    for (i, e) in reference.iter().enumerate() {
        positions.entry(e.key()).or_default().push_back(i);
    }
    let mut last: BTreeMap<Option<u32>, usize> = BTreeMap::new();
    for (i, e) in candidate.iter().enumerate() {
        if e.thread.is_some_and(|t| t >= threads) {
            return Report::fail(Some(i), alloc::format!("event {i} ({e}) names a thread outside 0..{threads}"));
        }
        let t = e.thread;
        let pos = positions.get_mut(&e.key()).and_then(|q| q.pop_front()).expect("multiset already matched");
        if last.get(&t).is_some_and(|p| *p > pos) {
            let who = t.map_or(String::from("untagged events"), |t| alloc::format!("thread {t}"));
            return Report::fail(Some(i), alloc::format!("event {i} ({e}) runs out of order within {who}"));
        }
        last.insert(t, pos);
    }
    Report::ok()
}

/// Compares `candidate` against `reference` under `contract`.
pub fn check_equivalence(reference: &Trace, candidate: &Trace, contract: &OrderContract) -> Report {
    let (r, c) = (&reference.events[..], &candidate.events[..]);
    match contract {
        OrderContract::ExactOrder => exact(r, c),
        OrderContract::MultisetOnly => multiset(r, c),
        OrderContract::Partitioned { threads } => partitioned(r, c, *threads),
        OrderContract::TiledOrder { dims, sizes } => match tiled_order(r, dims, sizes) {
            Some(expected) => exact(&expected, c),
            None => Report::fail(None, "reference length does not match the nest's trip counts"),
        },
    }
}

#[cfg(test)]
mod tests;
