use std::sync::Arc;

use crate::span::SourceSpan;
use crate::validate::{Diagnostic, RuleCode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u64),
    Str(String),
    LBrace,
    RBrace,
    Semi,
    Dot,
    Comma,
    At,
    Arrow,
    Squiggle,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Str(_) => "string".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Comma => "`,`".into(),
            Tok::At => "`@`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Squiggle => "`~>`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: u32,
    col: u32,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn pos(&self) -> (u32, u32) {
        (self.line, self.col)
    }
}

/// Splits `text` into tokens. Lexical errors are reported and the
/// offending characters skipped; the token stream always ends in `Eof`.
pub fn lex(text: &str, file: &Arc<str>) -> (Vec<Token>, Vec<Diagnostic>) {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        line: 1,
        col: 1,
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();
    // Span end columns are inclusive of the last character.
    let span = |start: (u32, u32), cur: &Cursor| {
        let end = (cur.line, cur.col.saturating_sub(1).max(1));
        SourceSpan::new(file.clone(), start, end.max(start))
    };
    let error = |message: String, s: SourceSpan| Diagnostic::error(RuleCode::LexError, message).with_span(Some(s));

    while let Some(c) = cur.peek() {
        let start = cur.pos();
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut word = String::new();
            while let Some(c) = cur.peek().filter(|c| c.is_ascii_alphanumeric() || *c == '_') {
                word.push(c);
                cur.bump();
            }
            let s = span(start, &cur);
            if word.starts_with('_') {
                diags.push(error(format!("identifier `{word}` must start with a letter"), s.clone()));
            }
            tokens.push(Token { tok: Tok::Ident(word), span: s });
            continue;
        }
        if c.is_ascii_digit() {
            let mut digits = String::new();
            while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
                digits.push(c);
                cur.bump();
            }
            let s = span(start, &cur);
            match digits.parse() {
                Ok(n) => tokens.push(Token { tok: Tok::Int(n), span: s }),
                Err(_) => diags.push(error(format!("integer literal {digits} is too large"), s)),
            }
            continue;
        }
        cur.bump();
        let simple = match c {
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ';' => Some(Tok::Semi),
            '.' => Some(Tok::Dot),
            ',' => Some(Tok::Comma),
            '@' => Some(Tok::At),
            '-' if cur.peek() == Some('>') => {
                cur.bump();
                Some(Tok::Arrow)
            }
            '~' if cur.peek() == Some('>') => {
                cur.bump();
                Some(Tok::Squiggle)
            }
            _ => None,
        };
        if let Some(tok) = simple {
            tokens.push(Token { tok, span: span(start, &cur) });
            continue;
        }
        match c {
            '/' if cur.peek() == Some('/') => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
            }
            '/' if cur.peek() == Some('*') => {
                cur.bump();
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    if c == '*' && cur.peek() == Some('/') {
                        cur.bump();
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    diags.push(error("unterminated block comment".into(), span(start, &cur)));
                }
            }
            '"' => {
                let mut value = String::new();
                let mut closed = false;
                while let Some(c) = cur.bump() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\n' => break,
                        '\\' => {
                            let esc_start = (cur.line, cur.col - 1);
                            match cur.bump() {
                                Some('n') => value.push('\n'),
                                Some('t') => value.push('\t'),
                                Some('"') => value.push('"'),
                                Some('\\') => value.push('\\'),
                                other => diags.push(error(
                                    format!("unknown escape `\\{}`", other.map(String::from).unwrap_or_default()),
                                    span(esc_start, &cur),
                                )),
                            }
                        }
                        c => value.push(c),
                    }
                }
                let s = span(start, &cur);
                if closed {
                    tokens.push(Token { tok: Tok::Str(value), span: s });
                } else {
                    diags.push(error("unterminated string literal".into(), s));
                }
            }
            other => diags.push(error(format!("unexpected character `{other}`"), span(start, &cur))),
        }
    }
    let end = cur.pos();
    tokens.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(file.clone(), end, end),
    });
    (tokens, diags)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<Tok> {
        let (toks, diags) = lex(text, &Arc::from("t.tm"));
        assert!(diags.is_empty(), "{diags:?}");
        toks.into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn punctuation_and_words() {
        assert_eq!(
            kinds("flow A.create -> B; trigger x ~> y @12 , \"s\\\"q\""),
            [
                Tok::Ident("flow".into()),
                Tok::Ident("A".into()),
                Tok::Dot,
                Tok::Ident("create".into()),
                Tok::Arrow,
                Tok::Ident("B".into()),
                Tok::Semi,
                Tok::Ident("trigger".into()),
                Tok::Ident("x".into()),
                Tok::Squiggle,
                Tok::Ident("y".into()),
                Tok::At,
                Tok::Int(12),
                Tok::Comma,
                Tok::Str("s\"q".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_are_skipped() {
        assert_eq!(kinds("// x\n/* y\n z */ a"), [Tok::Ident("a".into()), Tok::Eof]);
    }

    #[test]
    fn spans_are_one_based() {
        let (toks, _) = lex("\n  abc", &Arc::from("f"));
        let s = &toks[0].span;
        assert_eq!((s.start_line, s.start_col, s.end_line, s.end_col), (2, 3, 2, 5));
    }

    #[test]
    fn errors_recover() {
        let (toks, diags) = lex("a # b \"open", &Arc::from("f"));
        assert_eq!(diags.len(), 2);
        assert!(diags.iter().all(|d| d.code == RuleCode::LexError));
        assert_eq!(toks.len(), 3);
    }
}
