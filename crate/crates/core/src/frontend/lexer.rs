use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::diag::{Diagnostic, SourceLocation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Identifier,
    IntLiteral,
    Punct,
    Keyword,
    /// `#pragma` at the start of a line; switches to line-bounded mode.
    PragmaIntro,
    /// Newline (or end of input) terminating a pragma line.
    PragmaEnd,
    Eof,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    pub loc: SourceLocation,
}

impl Token {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == k
    }

    pub fn describe(&self) -> String {
        match self.kind {
            TokenKind::PragmaEnd => "end of pragma line".to_string(),
            TokenKind::Eof => "end of file".to_string(),
            _ => alloc::format!("'{}'", self.text),
        }
    }
}

pub const KEYWORDS: &[&str] = &["for", "if", "else", "int", "uint", "long", "ulong"];

const PUNCT2: &[&str] = &["&&", "||", "==", "!=", "<=", ">=", "+=", "-=", "++", "--"];
const PUNCT1: &[char] = &['(', ')', '{', '}', ';', ',', '=', '+', '-', '*', '/', '%', '<', '>', '!', '?', ':'];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    col: u32,
    file: Arc<str>,
    in_pragma: bool,
    /// Only whitespace seen since the last newline.
    at_line_start: bool,
    out: Vec<Token>,
}

/// Splits `source` into tokens. Comments and whitespace are dropped; each
/// pragma line ends with a `PragmaEnd` token; the stream ends with `Eof`.
pub fn tokenize(source: &str, filename: &str) -> Result<Vec<Token>, Diagnostic> {
    let mut lx = Lexer {
        src: source,
        pos: 0,
        line: 1,
        col: 1,
        file: Arc::from(filename),
        in_pragma: false,
        at_line_start: true,
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl Lexer<'_> {
    fn loc(&self) -> SourceLocation {
        SourceLocation::new(self.file.clone(), self.line, self.col)
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.src[self.pos..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, text: String, loc: SourceLocation) {
        self.out.push(Token { kind, text, loc });
        self.at_line_start = false;
    }

    fn run(&mut self) -> Result<(), Diagnostic> {
        while let Some(c) = self.peek() {
            if c == '\n' {
                if self.in_pragma {
                    let loc = self.loc();
                    self.push(TokenKind::PragmaEnd, "\n".to_string(), loc);
                    self.in_pragma = false;
                }
                self.bump();
                self.at_line_start = true;
                continue;
            }
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '/' && self.peek_at(1) == Some('/') {
                while self.peek().is_some_and(|c| c != '\n') {
                    self.bump();
                }
                continue;
            }
            if c == '/' && self.peek_at(1) == Some('*') {
                self.block_comment()?;
                continue;
            }
            let loc = self.loc();
            if c == '#' {
                self.pragma_intro(loc)?;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let text = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
                let kind = if KEYWORDS.contains(&text.as_str()) { TokenKind::Keyword } else { TokenKind::Identifier };
                self.push(kind, text, loc);
            } else if c.is_ascii_digit() {
                self.number(loc)?;
            } else {
                self.punct(loc)?;
            }
        }
        if self.in_pragma {
            let loc = self.loc();
            self.push(TokenKind::PragmaEnd, String::new(), loc);
        }
        let loc = self.loc();
        self.push(TokenKind::Eof, String::new(), loc);
        Ok(())
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&f) {
            self.bump();
        }
        self.src[start..self.pos].to_string()
    }

    fn block_comment(&mut self) -> Result<(), Diagnostic> {
        let loc = self.loc();
        self.bump();
        self.bump();
        loop {
            match self.bump() {
                None => return Err(Diagnostic::error(loc, "unterminated comment")),
                Some('*') if self.peek() == Some('/') => {
                    self.bump();
                    return Ok(());
                }
                Some('\n') if self.in_pragma => {
                    return Err(Diagnostic::error(loc, "comment spans the end of a pragma line"));
                }
                Some(_) => {}
            }
        }
    }

    fn pragma_intro(&mut self, loc: SourceLocation) -> Result<(), Diagnostic> {
        if !self.at_line_start || self.in_pragma {
            return Err(Diagnostic::error(loc, "'#' must start a line"));
        }
        self.bump();
        while self.peek().is_some_and(|c| c == ' ' || c == '\t') {
            self.bump();
        }
        let word = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if word != "pragma" {
            return Err(Diagnostic::error(loc, "expected 'pragma' after '#'; the preprocessor is not supported"));
        }
        self.push(TokenKind::PragmaIntro, "#pragma".to_string(), loc);
        self.in_pragma = true;
        Ok(())
    }

    fn number(&mut self, loc: SourceLocation) -> Result<(), Diagnostic> {
        let start = self.pos;
        let hex = self.peek() == Some('0') && matches!(self.peek_at(1), Some('x' | 'X'));
        let digits = if hex {
            self.bump();
            self.bump();
            let d = self.take_while(|c| c.is_ascii_hexdigit());
            if d.is_empty() {
                return Err(Diagnostic::error(loc, "hexadecimal literal has no digits"));
            }
            d
        } else {
            self.take_while(|c| c.is_ascii_digit())
        };
        let radix = if hex { 16 } else { 10 };
        if u64::from_str_radix(&digits, radix).is_err() {
            return Err(Diagnostic::error(loc, "integer literal is too large"));
        }
        let suffix = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if parse_suffix(&suffix).is_none() {
            return Err(Diagnostic::error(loc, alloc::format!("invalid suffix '{suffix}' on integer literal")));
        }
        let text = self.src[start..self.pos].to_string();
        self.push(TokenKind::IntLiteral, text, loc);
        Ok(())
    }

    fn punct(&mut self, loc: SourceLocation) -> Result<(), Diagnostic> {
        let rest = &self.src[self.pos..];
        if let Some(p) = PUNCT2.iter().find(|p| rest.starts_with(**p)) {
            self.bump();
            self.bump();
            self.push(TokenKind::Punct, p.to_string(), loc);
            return Ok(());
        }
        let c = self.peek().expect("non-empty");
        if PUNCT1.contains(&c) {
            self.bump();
            self.push(TokenKind::Punct, c.to_string(), loc);
            return Ok(());
        }
        Err(Diagnostic::error(loc, alloc::format!("illegal character '{}'", c.escape_default())))
    }
}

/// (unsigned, long) flags for a literal suffix.
fn parse_suffix(s: &str) -> Option<(bool, bool)> {
    Some(match s.to_ascii_lowercase().as_str() {
        "" => (false, false),
        "u" => (true, false),
        "l" => (false, true),
        "ul" | "lu" => (true, true),
        _ => return None,
    })
}

/// Splits a literal token into its value and suffix flags.
pub fn literal_value(text: &str) -> Option<(u64, bool, bool, bool)> {
    let (digits, radix, hex) = match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(rest) => (rest, 16, true),
        None => (text, 10, false),
    };
    let end = digits.find(|c: char| !c.is_ascii_hexdigit() || (radix == 10 && !c.is_ascii_digit())).unwrap_or(digits.len());
    let value = u64::from_str_radix(&digits[..end], radix).ok()?;
    let (unsigned, long) = parse_suffix(&digits[end..])?;
    Some((value, unsigned, long, hex))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src, "t.c").unwrap().into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn empty_input_is_just_eof() {
        assert_eq!(kinds(""), [(TokenKind::Eof, String::new())]);
    }

    #[test]
    fn pragma_line_is_bounded() {
        let toks = kinds("#pragma omp unroll partial(2)\n");
        let texts: Vec<&str> = toks.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(texts, ["#pragma", "omp", "unroll", "partial", "(", "2", ")", "\n", ""]);
        assert_eq!(toks[0].0, TokenKind::PragmaIntro);
        assert_eq!(toks[7].0, TokenKind::PragmaEnd);
        assert_eq!(toks[8].0, TokenKind::Eof);
    }

    #[test]
    fn for_header_has_fifteen_tokens() {
        let toks = tokenize("for (int i = 7; i < 17; i += 3)", "t.c").unwrap();
        assert_eq!(toks.len(), 16);
        assert_eq!(toks.last().unwrap().kind, TokenKind::Eof);
        assert!(toks[0].is_keyword("for"));
        assert!(toks[1].is_punct("("));
        assert!(toks[2].is_keyword("int"));
        assert_eq!((toks[3].kind, toks[3].text.as_str()), (TokenKind::Identifier, "i"));
        assert!(toks[12].is_punct("+="));
    }

    #[test]
    fn pragma_at_end_of_input_still_terminates() {
        let toks = kinds("#pragma omp unroll");
        assert_eq!(toks[toks.len() - 2].0, TokenKind::PragmaEnd);
    }

    #[test]
    fn interior_whitespace_in_pragma_intro() {
        let toks = kinds("  #   pragma   omp tile sizes(4)\n");
        assert_eq!(toks[0].0, TokenKind::PragmaIntro);
        assert_eq!(toks[1].1, "omp");
    }

    #[test]
    fn comments_are_discarded() {
        let toks = kinds("body(1); // x\n/* y\n z */ body(2);");
        assert_eq!(toks.len(), 11);
    }

    #[test]
    fn lexical_errors_carry_locations() {
        let e = tokenize("body(1);\n  @", "t.c").unwrap_err();
        assert_eq!((e.loc.line, e.loc.column), (2, 3));
        assert!(e.message.contains("illegal character"));
        let e = tokenize("/* open", "t.c").unwrap_err();
        assert!(e.message.contains("unterminated"));
        assert!(tokenize("x = 99999999999999999999;", "t.c").is_err());
        assert!(tokenize("x = 12abc;", "t.c").is_err());
        assert!(tokenize("x = 1; #pragma omp tile", "t.c").is_err());
    }

    #[test]
    fn literal_suffixes() {
        assert_eq!(literal_value("7"), Some((7, false, false, false)));
        assert_eq!(literal_value("7u"), Some((7, true, false, false)));
        assert_eq!(literal_value("0xffL"), Some((255, false, true, true)));
        assert_eq!(literal_value("3uL"), Some((3, true, true, false)));
    }

    #[test]
    fn identifiers_may_contain_dots() {
        let toks = kinds("unrolled.iv.i");
        assert_eq!(toks[0], (TokenKind::Identifier, "unrolled.iv.i".to_string()));
    }
}
