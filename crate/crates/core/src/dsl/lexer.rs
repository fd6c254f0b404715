//! On-demand tokenizer shared by the diagram and query grammars.

use std::fmt;

use serde::Serialize;

/// Location of a token: 1-based line and column (in characters) and its
/// length in characters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    /// `->`
    Arrow,
    /// `<->`
    BiArrow,
    /// `!->`
    NoSignal,
    /// `_||_`
    Indep,
    /// `|`
    Bar,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) => format!("integer `{s}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Tok::Ident(_) => "identifier",
            Tok::Int(_) => "integer",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Arrow => "->",
            Tok::BiArrow => "<->",
            Tok::NoSignal => "!->",
            Tok::Indep => "_||_",
            Tok::Bar => "|",
            Tok::Eof => "end of input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// A lexical error: message plus the span of the offending characters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub span: SourceSpan,
    pub message: String,
}

pub struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    rest: &'a str,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        Self {
            chars: src.chars().peekable(),
            rest: src,
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn skip_trivia(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c == '#' {
                while let Some(&c) = self.chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else if c.is_whitespace() {
                self.bump();
            } else {
                break;
            }
        }
    }

    pub fn next_token(&mut self) -> Result<Token, LexError> {
        self.skip_trivia();
        let (line, column) = (self.line, self.column);
        let span = |length| SourceSpan {
            line,
            column,
            length,
        };
        let Some(&c) = self.chars.peek() else {
            return Ok(Token {
                tok: Tok::Eof,
                span: span(0),
            });
        };
        let fixed = [
            ("_||_", Tok::Indep),
            ("<->", Tok::BiArrow),
            ("!->", Tok::NoSignal),
            ("->", Tok::Arrow),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            (";", Tok::Semi),
            (",", Tok::Comma),
            ("|", Tok::Bar),
        ];
        for (text, tok) in fixed {
            if self.rest.starts_with(text) {
                for _ in 0..text.len() {
                    self.bump();
                }
                return Ok(Token {
                    tok,
                    span: span(text.len()),
                });
            }
        }
        if c.is_ascii_alphabetic() || c.is_ascii_digit() {
            let digits = c.is_ascii_digit();
            let mut text = String::new();
            while let Some(&c) = self.chars.peek() {
                let ok = if digits {
                    c.is_ascii_digit()
                } else {
                    c.is_ascii_alphanumeric() || c == '_'
                };
                if !ok {
                    break;
                }
                text.push(c);
                self.bump();
            }
            let len = text.chars().count();
            let tok = if digits {
                Tok::Int(text)
            } else {
                Tok::Ident(text)
            };
            return Ok(Token {
                tok,
                span: span(len),
            });
        }
        self.bump();
        let message = match c {
            '-' | '<' | '!' => format!("stray `{c}` (expected `->`, `<->` or `!->`)"),
            '_' => "identifiers must start with a letter".to_string(),
            c if c.is_control() => format!("unexpected control character U+{:04X}", c as u32),
            c => format!("unexpected character `{c}`"),
        };
        Err(LexError {
            span: span(1),
            message,
        })
    }
}
