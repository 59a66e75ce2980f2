use crate::model::StageKind;
use crate::span::SourceSpan;
use crate::validate::{Diagnostic, RuleCode};

use super::lexer::{Tok, Token};

pub const KEYWORDS: [&str; 10] = [
    "thimac",
    "stage",
    "flow",
    "trigger",
    "event",
    "region",
    "repeat",
    "contains",
    "chronology",
    "memory",
];

fn is_reserved(word: &str) -> bool {
    KEYWORDS.contains(&word) || StageKind::from_keyword(word).is_some()
}

#[derive(Debug, Clone)]
pub struct Path {
    pub thimacs: Vec<String>,
    pub kind: Option<StageKind>,
    pub span: SourceSpan,
}

impl Path {
    pub fn text(&self) -> String {
        let mut s = self.thimacs.join(".");
        if let Some(k) = self.kind {
            s.push('.');
            s.push_str(k.as_str());
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct StageDecl {
    pub kind: StageKind,
    pub annotation: Option<u32>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct ThimacDecl {
    pub name: String,
    pub annotation: Option<u32>,
    pub stages: Vec<StageDecl>,
    pub children: Vec<ThimacDecl>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub struct EventDecl {
    pub id: String,
    pub label: Option<String>,
    pub region: Vec<Path>,
    pub repeat: Option<(u64, SourceSpan)>,
    pub contains: Vec<(String, SourceSpan)>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone)]
pub enum ChronoEntry {
    Node(String, SourceSpan),
    Edge(String, String, SourceSpan),
}

#[derive(Debug, Clone)]
pub enum Item {
    Thimac(ThimacDecl),
    Flow(Vec<Path>, SourceSpan),
    Trigger(Path, Path, SourceSpan),
    Event(EventDecl),
    Chronology(Vec<ChronoEntry>, SourceSpan),
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    diags: Vec<Diagnostic>,
}

type PResult<T> = Result<T, ()>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> SourceSpan {
        self.tokens[self.pos].span.clone()
    }

    fn prev_span(&self) -> SourceSpan {
        self.tokens[self.pos.saturating_sub(1)].span.clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&mut self, message: String) -> PResult<T> {
        let span = self.span();
        self.diags
            .push(Diagnostic::error(RuleCode::SyntaxError, message).with_span(Some(span)));
        Err(())
    }

    fn expected<T>(&mut self, what: &str) -> PResult<T> {
        let found = self.peek().describe();
        self.error(format!("expected {what}, found {found}"))
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> PResult<SourceSpan> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.expected(&tok.describe())
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(w) if w == kw)
    }

    fn keyword(&mut self, kw: &str) -> PResult<SourceSpan> {
        if self.at_keyword(kw) {
            Ok(self.bump().span)
        } else {
            self.expected(&format!("`{kw}`"))
        }
    }

    /// A user-chosen name: any identifier that is not reserved.
    fn name(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek().clone() {
            Tok::Ident(w) if !is_reserved(&w) => Ok((w, self.bump().span)),
            Tok::Ident(w) => self.error(format!("`{w}` is a reserved word and cannot name a {what}")),
            _ => self.expected(what),
        }
    }

    fn annotation(&mut self) -> PResult<Option<u32>> {
        if !self.eat(&Tok::At) {
            return Ok(None);
        }
        match *self.peek() {
            Tok::Int(n) => match u32::try_from(n) {
                Ok(v) => {
                    self.bump();
                    Ok(Some(v))
                }
                Err(_) => self.error(format!("annotation {n} is out of range")),
            },
            _ => self.expected("integer annotation"),
        }
    }

    /// Skips to just past the next `;`, or up to (not past) the next `}`.
    fn recover(&mut self) {
        loop {
            match self.peek() {
                Tok::Eof | Tok::RBrace => return,
                Tok::Semi => {
                    self.bump();
                    return;
                }
                _ => {
                    self.bump();
                }
            }
        }
    }

    fn path(&mut self) -> PResult<Path> {
        let start = self.span();
        let mut thimacs = Vec::new();
        let mut kind = None;
        loop {
            match self.peek().clone() {
                Tok::Ident(w) => {
                    if let Some(k) = StageKind::from_keyword(&w) {
                        if thimacs.is_empty() {
                            return self.error(format!("path must start with a thimac name, found stage kind `{w}`"));
                        }
                        self.bump();
                        kind = Some(k);
                        break;
                    }
                    if is_reserved(&w) {
                        return self.error(format!("reserved word `{w}` in path"));
                    }
                    self.bump();
                    thimacs.push(w);
                }
                _ => return self.expected("path segment"),
            }
            if !self.eat(&Tok::Dot) {
                break;
            }
        }
        Ok(Path {
            thimacs,
            kind,
            span: start.to(&self.prev_span()),
        })
    }

    fn thimac(&mut self) -> PResult<ThimacDecl> {
        let start = self.keyword("thimac")?;
        let (name, _) = self.name("thimac")?;
        let annotation = self.annotation()?;
        self.expect(Tok::LBrace)?;
        let mut decl = ThimacDecl {
            name,
            annotation,
            stages: Vec::new(),
            children: Vec::new(),
            span: start.clone(),
        };
        loop {
            match self.peek() {
                Tok::RBrace => break,
                Tok::Eof => return self.expected("`}`"),
                _ if self.at_keyword("thimac") => match self.thimac() {
                    Ok(child) => decl.children.push(child),
                    Err(()) => self.recover(),
                },
                _ if self.at_keyword("stage") => match self.stage() {
                    Ok(s) => decl.stages.push(s),
                    Err(()) => self.recover(),
                },
                _ => {
                    let _ = self.expected::<()>("`stage` or `thimac`");
                    self.bump();
                    self.recover();
                }
            }
        }
        let end = self.bump().span;
        decl.span = start.to(&end);
        Ok(decl)
    }

    fn stage(&mut self) -> PResult<StageDecl> {
        let start = self.keyword("stage")?;
        let kind = match self.peek().clone() {
            Tok::Ident(w) => match StageKind::from_keyword(&w) {
                Some(k) => {
                    self.bump();
                    k
                }
                None => return self.error(format!("unknown stage kind `{w}`")),
            },
            _ => return self.expected("stage kind"),
        };
        let annotation = self.annotation()?;
        let end = self.expect(Tok::Semi)?;
        Ok(StageDecl {
            kind,
            annotation,
            span: start.to(&end),
        })
    }

    fn flow(&mut self) -> PResult<Item> {
        let start = self.keyword("flow")?;
        let mut paths = vec![self.path()?];
        self.expect(Tok::Arrow)?;
        paths.push(self.path()?);
        while self.eat(&Tok::Arrow) {
            paths.push(self.path()?);
        }
        let end = self.expect(Tok::Semi)?;
        Ok(Item::Flow(paths, start.to(&end)))
    }

    fn trigger(&mut self) -> PResult<Item> {
        let start = self.keyword("trigger")?;
        let from = self.path()?;
        self.expect(Tok::Squiggle)?;
        let to = self.path()?;
        let end = self.expect(Tok::Semi)?;
        Ok(Item::Trigger(from, to, start.to(&end)))
    }

    fn event(&mut self) -> PResult<EventDecl> {
        let start = self.keyword("event")?;
        let (id, _) = self.name("event")?;
        let label = match self.peek().clone() {
            Tok::Str(s) => {
                self.bump();
                Some(s)
            }
            _ => None,
        };
        self.expect(Tok::LBrace)?;
        self.keyword("region")?;
        self.expect(Tok::LBrace)?;
        let mut region = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            match self.path().and_then(|p| self.expect(Tok::Semi).map(|_| p)) {
                Ok(p) => region.push(p),
                Err(()) => self.recover(),
            }
        }
        self.expect(Tok::RBrace)?;
        let mut repeat = None;
        if self.at_keyword("repeat") {
            let kw = self.bump().span;
            match *self.peek() {
                Tok::Int(n) => {
                    let s = kw.to(&self.bump().span);
                    repeat = Some((n, s));
                }
                _ => return self.expected("repeat count"),
            }
            self.expect(Tok::Semi)?;
        }
        let mut contains = Vec::new();
        if self.at_keyword("contains") {
            self.bump();
            contains.push(self.name("event")?);
            while self.eat(&Tok::Comma) {
                contains.push(self.name("event")?);
            }
            self.expect(Tok::Semi)?;
        }
        let end = self.expect(Tok::RBrace)?;
        Ok(EventDecl {
            id,
            label,
            region,
            repeat,
            contains,
            span: start.to(&end),
        })
    }

    fn chronology(&mut self) -> PResult<Item> {
        let start = self.keyword("chronology")?;
        self.expect(Tok::LBrace)?;
        let mut entries = Vec::new();
        while !matches!(self.peek(), Tok::RBrace | Tok::Eof) {
            let entry = (|| {
                let (a, sa) = self.name("event")?;
                if self.eat(&Tok::Arrow) {
                    let (b, _) = self.name("event")?;
                    let end = self.expect(Tok::Semi)?;
                    Ok(ChronoEntry::Edge(a, b, sa.to(&end)))
                } else {
                    let end = self.expect(Tok::Semi)?;
                    Ok(ChronoEntry::Node(a, sa.to(&end)))
                }
            })();
            match entry {
                Ok(e) => entries.push(e),
                Err(()) => self.recover(),
            }
        }
        let end = self.expect(Tok::RBrace)?;
        Ok(Item::Chronology(entries, start.to(&end)))
    }

    /// `memory` is reserved; the statement is consumed and rejected.
    fn memory(&mut self) {
        let start = self.bump().span;
        while !matches!(self.peek(), Tok::Semi | Tok::RBrace | Tok::Eof) {
            self.bump();
        }
        let end = if *self.peek() == Tok::Semi { self.bump().span } else { self.prev_span() };
        self.diags.push(
            Diagnostic::error(RuleCode::MemoryUnsupported, "memory relations are reserved and not supported")
                .with_span(Some(start.to(&end))),
        );
    }

    fn item(&mut self) -> PResult<Item> {
        let word = match self.peek() {
            Tok::Ident(w) => w.clone(),
            _ => return self.expected("`thimac`, `flow`, `trigger`, `event` or `chronology`"),
        };
        match word.as_str() {
            "thimac" => self.thimac().map(Item::Thimac),
            "flow" => self.flow(),
            "trigger" => self.trigger(),
            "event" => self.event().map(Item::Event),
            "chronology" => self.chronology(),
            _ => self.expected("`thimac`, `flow`, `trigger`, `event` or `chronology`"),
        }
    }
}

/// Parses a token stream into top-level items. After an error, parsing
/// resumes at the next statement boundary.
pub fn parse_items(tokens: Vec<Token>) -> (Vec<Item>, Vec<Diagnostic>) {
    let mut p = Parser {
        tokens,
        pos: 0,
        diags: Vec::new(),
    };
    let mut items = Vec::new();
    while *p.peek() != Tok::Eof {
        if p.at_keyword("memory") {
            p.memory();
            continue;
        }
        let before = p.pos;
        match p.item() {
            Ok(item) => items.push(item),
            Err(()) => {
                p.recover();
                if *p.peek() == Tok::RBrace || p.pos == before {
                    p.bump();
                }
            }
        }
    }
    (items, p.diags)
}
