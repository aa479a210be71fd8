//! Lexer and recursive-descent parser.

mod lexer;
mod parser;

pub use lexer::{literal_value, tokenize, Token, TokenKind, KEYWORDS};
pub use parser::{parse_program, parse_source};
