use std::fmt;

use crate::ast::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Ident(String),
    Int(u64),
    Str(String),
    /// `--name`
    Flag(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Eq,
    Comma,
    Caret,
    Star,
    Plus,
    Minus,
    Arrow,
    Eof,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Ident(s) => write!(f, "`{s}`"),
            Token::Int(n) => write!(f, "`{n}`"),
            Token::Str(s) => write!(f, "\"{s}\""),
            Token::Flag(s) => write!(f, "`--{s}`"),
            Token::Eof => f.write_str("end of input"),
            other => write!(f, "`{}`", other.symbol()),
        }
    }
}

impl Token {
    pub(crate) fn symbol(&self) -> &'static str {
        match self {
            Token::LBrace => "{",
            Token::RBrace => "}",
            Token::LParen => "(",
            Token::RParen => ")",
            Token::LBracket => "[",
            Token::RBracket => "]",
            Token::Semi => ";",
            Token::Eq => "=",
            Token::Comma => ",",
            Token::Caret => "^",
            Token::Star => "*",
            Token::Plus => "+",
            Token::Minus => "-",
            Token::Arrow => "=>",
            Token::Ident(_) => "identifier",
            Token::Int(_) => "integer",
            Token::Str(_) => "string",
            Token::Flag(_) => "flag",
            Token::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct SyntaxError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub expected: Vec<String>,
}

impl SyntaxError {
    pub(crate) fn at(span: Span, message: impl Into<String>) -> Self {
        SyntaxError { line: span.line, col: span.col, message: message.into(), expected: Vec::new() }
    }
}

pub fn tokenize(src: &str) -> Result<Vec<(Token, Span)>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let (mut line, mut col) = (1u32, 1u32);
    let offset = |i: usize| chars.get(i).map_or(src.len(), |c| c.0);

    while i < chars.len() {
        let c = chars[i].1;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let (sl, sc) = (line, col);
        let next = chars.get(i + 1).map(|c| c.1);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            Token::Ident(src[offset(start)..offset(i)].to_string())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].1.is_ascii_digit() {
                i += 1;
            }
            let text = &src[offset(start)..offset(i)];
            let n = text.parse().map_err(|_| SyntaxError {
                line: sl,
                col: sc,
                message: format!("integer `{text}` is too large"),
                expected: Vec::new(),
            })?;
            Token::Int(n)
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i].1 != '"' {
                if chars[i].1 == '\n' {
                    break;
                }
                i += 1;
            }
            if i >= chars.len() || chars[i].1 != '"' {
                return Err(SyntaxError {
                    line: sl,
                    col: sc,
                    message: "unterminated string".into(),
                    expected: vec!["`\"`".into()],
                });
            }
            i += 1;
            Token::Str(src[offset(start + 1)..offset(i - 1)].to_string())
        } else if c == '-' && next == Some('-') {
            i += 2;
            let name_start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '-' || chars[i].1 == '_') {
                i += 1;
            }
            if i == name_start {
                return Err(SyntaxError {
                    line: sl,
                    col: sc,
                    message: "expected a flag name after `--`".into(),
                    expected: vec!["flag name".into()],
                });
            }
            Token::Flag(src[offset(name_start)..offset(i)].to_string())
        } else if c == '=' && next == Some('>') {
            i += 2;
            Token::Arrow
        } else {
            i += 1;
            match c {
                '{' => Token::LBrace,
                '}' => Token::RBrace,
                '(' => Token::LParen,
                ')' => Token::RParen,
                '[' => Token::LBracket,
                ']' => Token::RBracket,
                ';' => Token::Semi,
                '=' => Token::Eq,
                ',' => Token::Comma,
                '^' => Token::Caret,
                '*' => Token::Star,
                '+' => Token::Plus,
                '-' => Token::Minus,
                other => {
                    return Err(SyntaxError {
                        line: sl,
                        col: sc,
                        message: format!("unexpected character `{other}`"),
                        expected: Vec::new(),
                    })
                }
            }
        };
        col += (i - start) as u32;
        out.push((tok, Span { start: offset(start), end: offset(i), line: sl, col: sc }));
    }
    out.push((Token::Eof, Span { start: src.len(), end: src.len(), line, col }));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn positions_and_tokens() {
        let toks = tokenize("gen l deg=2;\n  rule l^3 = 0; # tail\n=> --max-degree \"Sq^2\"").unwrap();
        let kinds: Vec<&Token> = toks.iter().map(|t| &t.0).collect();
        assert_eq!(kinds[0], &Token::Ident("gen".into()));
        assert_eq!(kinds[3], &Token::Eq);
        assert_eq!(kinds[4], &Token::Int(2));
        let rule = &toks[6];
        assert_eq!(rule.0, Token::Ident("rule".into()));
        assert_eq!((rule.1.line, rule.1.col), (2, 3));
        assert!(kinds.contains(&&Token::Flag("max-degree".into())));
        assert!(kinds.contains(&&Token::Str("Sq^2".into())));
        assert!(kinds.contains(&&Token::Arrow));
        assert_eq!(kinds.last(), Some(&&Token::Eof));
    }

    #[test]
    fn bad_character_is_positioned() {
        let e = tokenize("ring A {\n  @").unwrap_err();
        assert_eq!((e.line, e.col), (2, 3));
    }
}
