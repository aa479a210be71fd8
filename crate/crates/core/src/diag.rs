//! Source locations and diagnostics with note chains.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SourceLocation {
    pub file: Arc<str>,
    /// 1-based.
    pub line: u32,
    /// 1-based.
    pub column: u32,
}

impl SourceLocation {
    pub fn new(file: Arc<str>, line: u32, column: u32) -> SourceLocation {
        debug_assert!(line >= 1 && column >= 1);
        SourceLocation { file, line, column }
    }

    /// Location used for nodes without a source position (tests, builders).
    pub fn unknown() -> SourceLocation {
        SourceLocation { file: Arc::from("<generated>"), line: 1, column: 1 }
    }
}

impl fmt::Display for SourceLocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Severity {
    Error,
    Warning,
    Note,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Note => "note",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
    pub loc: SourceLocation,
    /// Provenance chain; every entry has severity `Note`.
    pub notes: Vec<Diagnostic>,
}

impl Diagnostic {
    pub fn error(loc: SourceLocation, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Error, message: message.into(), loc, notes: Vec::new() }
    }

    pub fn warning(loc: SourceLocation, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Warning, message: message.into(), loc, notes: Vec::new() }
    }

    pub fn note(loc: SourceLocation, message: impl Into<String>) -> Diagnostic {
        Diagnostic { severity: Severity::Note, message: message.into(), loc, notes: Vec::new() }
    }

    pub fn with_note(mut self, loc: SourceLocation, message: impl Into<String>) -> Diagnostic {
        self.notes.push(Diagnostic::note(loc, message));
        self
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }

    /// Iterates over this diagnostic and its notes, depth first.
    pub fn walk(&self) -> impl Iterator<Item = &Diagnostic> {
        let mut stack = alloc::vec![self];
        core::iter::from_fn(move || {
            let d = stack.pop()?;
            stack.extend(d.notes.iter().rev());
            Some(d)
        })
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_diagnostic(self))
    }
}

impl core::error::Error for Diagnostic {}

/// `file:line:col: severity: message`, then each note on its own line,
/// indented two spaces per level.
pub fn render_diagnostic(d: &Diagnostic) -> String {
    let mut out = String::new();
    render_into(&mut out, d, 0);
    out
}

fn render_into(out: &mut String, d: &Diagnostic, depth: usize) {
    use core::fmt::Write;
    if depth > 0 {
        out.push('\n');
    }
    for _ in 0..depth {
        out.push_str("  ");
    }
    let _ = write!(out, "{}: {}: {}", d.loc, d.severity, d.message);
    for n in &d.notes {
        render_into(out, n, depth + 1);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn loc(line: u32, col: u32) -> SourceLocation {
        SourceLocation::new(Arc::from("t.c"), line, col)
    }

    #[test]
    fn error_with_one_note_renders_two_lines() {
        let d = Diagnostic::error(loc(3, 1), "bad").with_note(loc(1, 1), "because");
        let text = render_diagnostic(&d);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines, ["t.c:3:1: error: bad", "  t.c:1:1: note: because"]);
    }

    #[test]
    fn warning_without_notes_is_single_line() {
        let d = Diagnostic::warning(loc(2, 4), "hmm");
        assert_eq!(render_diagnostic(&d), "t.c:2:4: warning: hmm");
    }

    #[test]
    fn nested_notes_indent_further() {
        let inner = Diagnostic::note(loc(1, 1), "a").with_note(loc(1, 2), "b");
        let mut d = Diagnostic::error(loc(5, 5), "top");
        d.notes.push(inner);
        assert_eq!(render_diagnostic(&d).lines().nth(2), Some("    t.c:1:2: note: b"));
        assert_eq!(d.walk().count(), 3);
    }
}
