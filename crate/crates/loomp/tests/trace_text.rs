use loomp::trace_text::{format_trace, parse_trace, trace_lines};
use loomp_core::exec::{Trace, TraceEvent};
use loomp_core::{IntType, Value};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = Value> {
    let ty = prop::sample::select(vec![IntType::INT, IntType::UINT, IntType::LONG, IntType::ULONG]);
    (ty, any::<i64>()).prop_map(|(ty, v)| Value::from_i128(ty, v as i128))
}

fn event() -> impl Strategy<Value = TraceEvent> {
    (prop::collection::vec(value(), 0..4), prop::option::of(0u32..64))
        .prop_map(|(args, thread)| TraceEvent { callee: "body".into(), args, thread })
}

proptest! {
    #[test]
    fn traces_read_back_as_written(events in prop::collection::vec(event(), 0..20)) {
        let t = Trace { events };
        let text = format_trace(&t);
        prop_assert_eq!(parse_trace(&text).unwrap(), trace_lines(&t));
    }
}

#[test]
fn malformed_lines_are_rejected() {
    for (text, line) in [("body(1)\n(t1 body(2)\n", 2), ("body(1\n", 1), ("body(x)\n", 1), ("(tz) body()\n", 1)] {
        assert_eq!(parse_trace(text).unwrap_err().line, line, "{text:?}");
    }
}
