use crate::model::AttrType;

use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    Float(f64),
    Str(String),
    /// Element type keyword, optionally with the `_v1` vector suffix.
    Type(AttrType),
    Bool(bool),
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    LAngle,
    RAngle,
    Comma,
    Semi,
    Colon,
    Eq,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(i) => format!("integer {i}"),
            TokenKind::Float(x) => format!("number {x}"),
            TokenKind::Str(s) => format!("string {s:?}"),
            TokenKind::Type(t) => format!("type `{t}`"),
            TokenKind::Bool(b) => format!("`{b}`"),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LAngle => "`<`".into(),
            TokenKind::RAngle => "`>`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Semi => "`;`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Eq => "`=`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn span(&self) -> SourceSpan {
        SourceSpan::new(self.line, self.column)
    }

    fn take_while(&mut self, buf: &mut String, pred: impl Fn(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            buf.push(c);
            self.bump();
        }
    }
}

fn classify_word(word: String) -> TokenKind {
    match word.as_str() {
        "true" => TokenKind::Bool(true),
        "false" => TokenKind::Bool(false),
        _ => match word.parse::<AttrType>() {
            Ok(t) => TokenKind::Type(t),
            Err(_) => TokenKind::Ident(word),
        },
    }
}

/// Splits OSL source into tokens. `//` comments and whitespace are dropped.
pub fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor { chars: text.chars().peekable(), line: 1, column: 1 };
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        let span = cur.span();
        let punct = match c {
            '[' => Some(TokenKind::LBracket),
            ']' => Some(TokenKind::RBracket),
            '{' => Some(TokenKind::LBrace),
            '}' => Some(TokenKind::RBrace),
            '<' => Some(TokenKind::LAngle),
            '>' => Some(TokenKind::RAngle),
            ',' => Some(TokenKind::Comma),
            ';' => Some(TokenKind::Semi),
            ':' => Some(TokenKind::Colon),
            '=' => Some(TokenKind::Eq),
            _ => None,
        };
        if let Some(kind) = punct {
            cur.bump();
            tokens.push(Token { kind, span });
            continue;
        }

        if c.is_whitespace() {
            cur.bump();
        } else if c == '/' {
            cur.bump();
            if cur.peek() != Some('/') {
                return Err(ParseError::new(span, "`//` comment", "`/`"));
            }
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
            }
        } else if c == '"' {
            cur.bump();
            let mut s = String::new();
            loop {
                match cur.bump() {
                    None => return Err(ParseError::new(cur.span(), "closing `\"`", "end of input")),
                    Some('"') => break,
                    Some('\\') => {
                        let esc_span = cur.span();
                        match cur.bump() {
                            Some('"') => s.push('"'),
                            Some('\\') => s.push('\\'),
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(other) => {
                                return Err(ParseError::new(esc_span, "escape sequence", format!("`\\{other}`")))
                            }
                            None => return Err(ParseError::new(esc_span, "escape sequence", "end of input")),
                        }
                    }
                    Some(other) => s.push(other),
                }
            }
            tokens.push(Token { kind: TokenKind::Str(s), span });
        } else if c.is_ascii_digit() || c == '-' || c == '+' {
            let mut buf = String::new();
            if c == '-' || c == '+' {
                buf.push(c);
                cur.bump();
                if !cur.peek().is_some_and(|d| d.is_ascii_digit()) {
                    let found = cur.peek().map_or("end of input".to_string(), |d| format!("`{d}`"));
                    return Err(ParseError::new(cur.span(), "digit", found));
                }
            }
            cur.take_while(&mut buf, |d| d.is_ascii_digit());
            let mut is_float = false;
            if cur.peek() == Some('.') {
                is_float = true;
                buf.push('.');
                cur.bump();
                cur.take_while(&mut buf, |d| d.is_ascii_digit());
            }
            if matches!(cur.peek(), Some('e' | 'E')) {
                is_float = true;
                buf.push('e');
                cur.bump();
                if let Some(sign @ ('-' | '+')) = cur.peek() {
                    buf.push(sign);
                    cur.bump();
                }
                let before = buf.len();
                cur.take_while(&mut buf, |d| d.is_ascii_digit());
                if buf.len() == before {
                    return Err(ParseError::new(cur.span(), "exponent digits", format!("`{buf}`")));
                }
            }
            if cur.peek().is_some_and(|d| d.is_alphanumeric() || d == '_') {
                let found = cur.peek().unwrap();
                return Err(ParseError::new(cur.span(), "end of number", format!("`{found}`")));
            }
            let kind = if is_float {
                match buf.parse::<f64>() {
                    Ok(v) if v.is_finite() => TokenKind::Float(v),
                    _ => return Err(ParseError::new(span, "finite number", format!("`{buf}`"))),
                }
            } else {
                match buf.parse::<i64>() {
                    Ok(v) => TokenKind::Int(v),
                    Err(_) => return Err(ParseError::new(span, "64-bit integer", format!("`{buf}`"))),
                }
            };
            tokens.push(Token { kind, span });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            cur.take_while(&mut word, |d| d.is_ascii_alphanumeric() || d == '_');
            tokens.push(Token { kind: classify_word(word), span });
        } else {
            return Err(ParseError::new(span, "token", format!("`{}`", c.escape_default())));
        }
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DataType;

    fn kinds(text: &str) -> Vec<TokenKind> {
        lex(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn bracketed_pair() {
        assert_eq!(
            kinds("[1, 4]"),
            vec![TokenKind::LBracket, TokenKind::Int(1), TokenKind::Comma, TokenKind::Int(4), TokenKind::RBracket]
        );
    }

    #[test]
    fn vector_type_keyword() {
        assert_eq!(kinds("f32_v1"), vec![TokenKind::Type(AttrType::vector(DataType::F32))]);
        assert_eq!(kinds("complex128"), vec![TokenKind::Type(AttrType::scalar(DataType::Complex128))]);
        assert_eq!(kinds("f32x"), vec![TokenKind::Ident("f32x".into())]);
    }

    #[test]
    fn quoted_string() {
        assert_eq!(kinds("\"DepthToSpaceTest\""), vec![TokenKind::Str("DepthToSpaceTest".into())]);
        assert_eq!(kinds(r#""a\"b""#), vec![TokenKind::Str("a\"b".into())]);
    }

    #[test]
    fn numbers_and_comments() {
        assert_eq!(
            kinds("-1 2.5 1e-3 // trailing\n true"),
            vec![TokenKind::Int(-1), TokenKind::Float(2.5), TokenKind::Float(1e-3), TokenKind::Bool(true)]
        );
    }

    #[test]
    fn illegal_character_span() {
        let err = lex("def X\n  @").unwrap_err();
        assert_eq!((err.span.line, err.span.column), (2, 3));
        assert_eq!(err.found, "`@`");
    }

    #[test]
    fn malformed_literals() {
        assert!(lex("\"open").is_err());
        assert!(lex("99999999999999999999").is_err());
        assert!(lex("12abc").is_err());
        assert!(lex("- 1").is_err());
        assert!(lex("1e").is_err());
        assert!(lex("/ x").is_err());
    }
}
