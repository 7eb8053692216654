//! The Operator Specification Language: lexing, parsing and canonical printing.
//!
//! One `.osl` file describes one operator:
//!
//! ```text
//! def DepthToSpaceTest : Op<"op_depth_to_space"> {
//!   attributes = [
//!     Attr<attr_name = "blocksize", type_list = [i32], min_val_list = ["1"], max_val_list = ["4"]>
//!   ];
//!   inputs = [
//!     Tensor<index = 0, basic_type_list = [f16, f32], min_dim = 4, max_dim = 4>
//!   ];
//!   outputs = [
//!     Tensor<index = 0, basic_type_list = [f16, f32], min_dim = 4, max_dim = 4>
//!   ];
//! }
//! ```
//!
//! See `docs/osl-grammar.md` for the full grammar.

mod lexer;
mod parser;
mod printer;

use std::fmt;
use std::path::{Path, PathBuf};

pub use lexer::{lex, Token, TokenKind};
pub use parser::parse;
pub use printer::to_osl;

use crate::model::OperatorSpec;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub file: Option<PathBuf>,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize) -> SourceSpan {
        SourceSpan { file: None, line, column }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(p) => write!(f, "{}:{}:{}", p.display(), self.line, self.column),
            None => write!(f, "<input>:{}:{}", self.line, self.column),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: expected {expected}, found {found}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    pub fn new(span: SourceSpan, expected: impl Into<String>, found: impl Into<String>) -> ParseError {
        ParseError { span, expected: expected.into(), found: found.into() }
    }

    pub fn with_file(mut self, file: &Path) -> ParseError {
        self.span.file = Some(file.to_path_buf());
        self
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Lexes and parses one OSL document.
pub fn parse_osl(text: &str) -> Result<OperatorSpec, ParseError> {
    parse(&lex(text)?)
}

pub fn parse_file(path: &Path) -> Result<OperatorSpec, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    parse_osl(&text).map_err(|e| LoadError::Parse(e.with_file(path)))
}
