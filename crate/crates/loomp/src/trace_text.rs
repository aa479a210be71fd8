//! Trace files: one event per line, `[(t<k>) ]<callee>(<v1>, <v2>, ...)`.

use loomp_core::exec::Trace;
use thiserror::Error;

/// One parsed trace line. Values are kept as plain integers since the
/// text does not record their types.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub thread: Option<u32>,
    pub callee: String,
    pub args: Vec<i128>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct TraceParseError {
    pub line: usize,
    pub message: String,
}

pub fn format_trace(t: &Trace) -> String {
    t.to_string()
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceLine>, TraceParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: &str| TraceParseError { line: i + 1, message: message.into() };
        let (thread, rest) = match line.strip_prefix("(t") {
            Some(r) => {
                let (n, rest) = r.split_once(')').ok_or_else(|| err("unclosed thread tag"))?;
                (Some(n.parse().map_err(|_| err("bad thread id"))?), rest.trim_start())
            }
            None => (None, line),
        };
        let (callee, args) = rest.split_once('(').ok_or_else(|| err("expected '<callee>(...)'"))?;
        let args = args.strip_suffix(')').ok_or_else(|| err("missing ')'"))?;
        let args = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|a| a.trim().parse().map_err(|_| err("bad argument"))).collect::<Result<_, _>>()?
        };
        out.push(TraceLine { thread, callee: callee.trim().into(), args });
    }
    Ok(out)
}

/// The lines of `t`, as [`parse_trace`] would read them back.
pub fn trace_lines(t: &Trace) -> Vec<TraceLine> {
    t.events
        .iter()
        .map(|e| TraceLine { thread: e.thread, callee: e.callee.clone(), args: e.args.iter().map(|a| a.as_i128()).collect() })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use loomp_core::exec::TraceEvent;
    use loomp_core::{IntType, Value};

    #[test]
    fn round_trip() {
        let t = Trace {
            events: vec![
                TraceEvent { callee: "body".into(), args: vec![Value::from_i128(IntType::INT, -3)], thread: None },
                TraceEvent { callee: "body".into(), args: vec![Value::from_i128(IntType::ULONG, 7), Value::from_i128(IntType::INT, 1)], thread: Some(2) },
            ],
        };
        let text = format_trace(&t);
        assert_eq!(text, "body(-3)\n(t2) body(7, 1)\n");
        assert_eq!(parse_trace(&text).unwrap(), trace_lines(&t));
    }

    #[test]
    fn rejects_garbage() {
        assert_eq!(parse_trace("body(1)\nbody(x)\n").unwrap_err().line, 2);
        assert!(parse_trace("(t1 body(1)").is_err());
    }
}
