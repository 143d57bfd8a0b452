//! Recursive-descent parser. Errors carry the position of the offending token and the
//! set of tokens that would have been accepted there.

use crate::ast::*;
use crate::lexer::{tokenize, SyntaxError, Token};

pub fn parse(src: &str) -> Result<File, SyntaxError> {
    let mut p = Parser::new(src)?;
    let mut items = Vec::new();
    while !p.at(&Token::Eof) {
        items.push(p.item()?);
    }
    Ok(File { items })
}

/// Parses a standalone polynomial expression.
pub fn parse_poly(src: &str) -> Result<Poly, SyntaxError> {
    let mut p = Parser::new(src)?;
    let poly = p.poly()?;
    p.expect(&Token::Eof)?;
    Ok(poly)
}

struct Parser {
    toks: Vec<(Token, Span)>,
    pos: usize,
    expected: Vec<String>,
}

/// Words that end a polynomial inside a query; they never start a juxtaposed factor.
const CONNECTIVES: [&str; 3] = ["in", "on", "to"];

const QUERY_KEYWORDS: [&str; 8] = ["apply", "normalize", "adem", "obstruct", "wu", "charclass", "check", "corpus"];

impl Parser {
    fn new(src: &str) -> Result<Self, SyntaxError> {
        Ok(Parser { toks: tokenize(src)?, pos: 0, expected: Vec::new() })
    }

    fn peek(&self) -> &Token {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].1
    }

    fn bump(&mut self) -> (Token, Span) {
        self.expected.clear();
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn at(&mut self, t: &Token) -> bool {
        if self.peek() == t {
            return true;
        }
        self.expected.push(format!("`{}`", t.symbol()));
        false
    }

    fn eat(&mut self, t: &Token) -> bool {
        let hit = self.at(t);
        if hit {
            self.bump();
        }
        hit
    }

    fn at_kw(&mut self, kw: &str) -> bool {
        if matches!(self.peek(), Token::Ident(s) if s == kw) {
            return true;
        }
        self.expected.push(format!("`{kw}`"));
        false
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.at_kw(kw);
        if hit {
            self.bump();
        }
        hit
    }

    fn error(&self) -> SyntaxError {
        let mut expected = self.expected.clone();
        expected.sort();
        expected.dedup();
        let found = self.peek();
        let message = match expected.len() {
            0 => format!("unexpected {found}"),
            1 => format!("unexpected {found}, expected {}", expected[0]),
            _ => format!("unexpected {found}, expected one of {}", expected.join(", ")),
        };
        let span = self.span();
        SyntaxError { line: span.line, col: span.col, message, expected }
    }

    fn expect(&mut self, t: &Token) -> Result<Span, SyntaxError> {
        if self.at(t) {
            Ok(self.bump().1)
        } else {
            Err(self.error())
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<Span, SyntaxError> {
        if self.at_kw(kw) {
            Ok(self.bump().1)
        } else {
            Err(self.error())
        }
    }

    fn ident(&mut self) -> Result<Ident, SyntaxError> {
        if let Token::Ident(name) = self.peek() {
            let name = name.clone();
            let span = self.bump().1;
            return Ok(Ident { name, span });
        }
        self.expected.push("identifier".into());
        Err(self.error())
    }

    fn int(&mut self) -> Result<u64, SyntaxError> {
        if let Token::Int(n) = *self.peek() {
            self.bump();
            return Ok(n);
        }
        self.expected.push("integer".into());
        Err(self.error())
    }

    fn signed_int(&mut self) -> Result<i64, SyntaxError> {
        let neg = self.eat(&Token::Minus);
        let span = self.span();
        let n = self.int()?;
        let n = i64::try_from(n).map_err(|_| SyntaxError::at(span, "integer out of range"))?;
        Ok(if neg { -n } else { n })
    }

    fn string(&mut self) -> Result<OpText, SyntaxError> {
        if let Token::Str(text) = self.peek() {
            let text = text.clone();
            let span = self.bump().1;
            return Ok(OpText { text, span });
        }
        self.expected.push("string".into());
        Err(self.error())
    }

    /// `= INT` after an attribute keyword.
    fn assigned_int(&mut self) -> Result<u64, SyntaxError> {
        self.expect(&Token::Eq)?;
        self.int()
    }

    fn assigned_signed(&mut self) -> Result<i64, SyntaxError> {
        self.expect(&Token::Eq)?;
        self.signed_int()
    }

    fn item(&mut self) -> Result<Item, SyntaxError> {
        if self.at_kw("ring") {
            return Ok(Item::Ring(self.ring()?));
        }
        if self.at_kw("bundle") {
            return Ok(Item::Bundle(self.bundle()?));
        }
        if self.at_kw("let") {
            return Ok(Item::Let(self.let_decl()?));
        }
        for kw in QUERY_KEYWORDS {
            if self.at_kw(kw) {
                return Ok(Item::Query(self.query()?));
            }
        }
        Err(self.error())
    }

    fn ring(&mut self) -> Result<RingBlock, SyntaxError> {
        let start = self.expect_kw("ring")?;
        let name = self.ident()?;
        self.expect(&Token::LBrace)?;
        self.expect_kw("prime")?;
        let prime = self.assigned_int()?;
        self.expect(&Token::Semi)?;
        let mut items = Vec::new();
        while !self.at(&Token::RBrace) {
            items.push(self.ring_item()?);
        }
        let end = self.bump().1;
        Ok(RingBlock { name, prime, items, span: start.to(end) })
    }

    fn ring_item(&mut self) -> Result<RingItem, SyntaxError> {
        let start = self.span();
        if self.eat_kw("gen") {
            let name = self.ident()?;
            self.expect_kw("deg")?;
            let degree = self.assigned_int()?;
            let mut g = GenDecl { name, degree, twist: None, odd: false, frob: None, filt: None, unstable: false, span: start };
            loop {
                if self.eat_kw("twist") {
                    g.twist = Some(self.assigned_signed()?);
                } else if self.eat_kw("odd") {
                    g.odd = true;
                } else if self.eat_kw("frob") {
                    g.frob = Some(self.assigned_signed()?);
                } else if self.eat_kw("filt") {
                    g.filt = Some(self.assigned_int()?);
                } else if self.eat_kw("unstable") {
                    g.unstable = true;
                } else {
                    break;
                }
            }
            g.span = start.to(self.expect(&Token::Semi)?);
            return Ok(RingItem::Gen(g));
        }
        if self.eat_kw("rule") {
            let generator = self.ident()?;
            self.expect(&Token::Caret)?;
            let exponent = self.int()?;
            self.expect(&Token::Eq)?;
            let rhs = self.poly()?;
            let end = self.expect(&Token::Semi)?;
            return Ok(RingItem::Rule(RuleDecl { generator, exponent, rhs, span: start.to(end) }));
        }
        if self.eat_kw("action") {
            let op = self.op_name()?;
            self.expect(&Token::LParen)?;
            let generator = self.ident()?;
            self.expect(&Token::RParen)?;
            self.expect(&Token::Eq)?;
            let value = self.poly()?;
            let end = self.expect(&Token::Semi)?;
            return Ok(RingItem::Action(ActionDecl { op, generator, value, span: start.to(end) }));
        }
        if self.eat_kw("omega") {
            self.expect(&Token::Eq)?;
            let w = self.ident()?;
            self.expect(&Token::Semi)?;
            return Ok(RingItem::Omega(w));
        }
        Err(self.error())
    }

    fn op_name(&mut self) -> Result<OpName, SyntaxError> {
        if self.eat_kw("Sq") {
            self.expect(&Token::Caret)?;
            return Ok(OpName::Sq(self.int()?));
        }
        if self.eat_kw("P") {
            self.expect(&Token::Caret)?;
            return Ok(OpName::P(self.int()?));
        }
        if self.eat_kw("b") || self.eat_kw("beta") {
            return Ok(OpName::Beta);
        }
        Err(self.error())
    }

    fn bundle(&mut self) -> Result<BundleDecl, SyntaxError> {
        let start = self.expect_kw("bundle")?;
        let name = self.ident()?;
        self.expect_kw("in")?;
        let ring = self.ident()?;
        self.expect_kw("rank")?;
        let rank = self.assigned_signed()?;
        self.expect_kw("c")?;
        self.expect(&Token::Eq)?;
        let chern = self.poly_list()?;
        let denom = if self.eat_kw("denom") {
            self.expect(&Token::Eq)?;
            self.poly_list()?
        } else {
            Vec::new()
        };
        self.expect_kw("trunc")?;
        let trunc = self.assigned_int()?;
        let end = self.expect(&Token::Semi)?;
        Ok(BundleDecl { name, ring, rank, chern, denom, trunc, span: start.to(end) })
    }

    fn poly_list(&mut self) -> Result<Vec<Poly>, SyntaxError> {
        self.expect(&Token::LBracket)?;
        let mut out = Vec::new();
        if self.eat(&Token::RBracket) {
            return Ok(out);
        }
        loop {
            out.push(self.poly()?);
            if self.eat(&Token::RBracket) {
                return Ok(out);
            }
            self.expect(&Token::Comma)?;
        }
    }

    fn let_decl(&mut self) -> Result<LetDecl, SyntaxError> {
        let start = self.expect_kw("let")?;
        let name = self.ident()?;
        self.expect(&Token::Eq)?;
        let value = self.poly()?;
        self.expect_kw("in")?;
        let ring = self.ident()?;
        let end = self.expect(&Token::Semi)?;
        Ok(LetDecl { name, value, ring, span: start.to(end) })
    }

    fn flags(&mut self) -> Result<Vec<Flag>, SyntaxError> {
        let mut out = Vec::new();
        loop {
            if let Token::Flag(name) = self.peek() {
                let name = name.clone();
                let span = self.bump().1;
                let value = self.signed_int()?;
                out.push(Flag { name, value, span: span.to(self.prev_span()) });
            } else {
                self.expected.push("flag".into());
                return Ok(out);
            }
        }
    }

    fn in_ring(&mut self) -> Result<Ident, SyntaxError> {
        self.expect_kw("in")?;
        self.ident()
    }

    fn query(&mut self) -> Result<Query, SyntaxError> {
        let start = self.span();
        let kind = if self.eat_kw("apply") {
            let op = self.string()?;
            self.expect_kw("to")?;
            let target = self.poly()?;
            let ring = self.in_ring()?;
            QueryKind::Apply { op, target, ring }
        } else if self.eat_kw("normalize") {
            let target = self.poly()?;
            let ring = self.in_ring()?;
            QueryKind::Normalize { target, ring }
        } else if self.eat_kw("adem") {
            let flags = self.flags()?;
            let op = self.string()?;
            QueryKind::Adem { flags, op }
        } else if self.eat_kw("obstruct") {
            let kind = self.keyword_of(&ObstructKind::ALL.map(|k| (k.keyword(), k)))?;
            let flags = self.flags()?;
            self.expect_kw("on")?;
            let target = self.poly()?;
            let ring = self.in_ring()?;
            QueryKind::Obstruct { kind, flags, target, ring }
        } else if self.eat_kw("wu") {
            self.expect(&Token::Minus)?;
            self.expect_kw("check")?;
            let flags = self.flags()?;
            let target = if self.eat_kw("on") { Some(self.poly()?) } else { None };
            let ring = self.in_ring()?;
            QueryKind::WuCheck { flags, target, ring }
        } else if self.eat_kw("charclass") {
            let kind = self.keyword_of(&ClassKind::ALL.map(|k| (k.keyword(), k)))?;
            let bundle = self.ident()?;
            QueryKind::CharClass { kind, bundle }
        } else if self.eat_kw("check") {
            let flags = self.flags()?;
            let ring = self.ident()?;
            QueryKind::Check { flags, ring }
        } else if self.eat_kw("corpus") {
            self.expect_kw("run")?;
            QueryKind::Corpus { scenario: self.ident()? }
        } else {
            return Err(self.error());
        };
        let mut expect = Vec::new();
        if self.eat(&Token::Arrow) {
            loop {
                expect.push(self.expectation()?);
                if !self.eat(&Token::Comma) {
                    break;
                }
            }
        }
        let end = self.expect(&Token::Semi)?;
        Ok(Query { kind, expect, span: start.to(end) })
    }

    fn keyword_of<T: Copy>(&mut self, options: &[(&str, T)]) -> Result<T, SyntaxError> {
        for (kw, v) in options {
            if self.eat_kw(kw) {
                return Ok(*v);
            }
        }
        Err(self.error())
    }

    fn expectation(&mut self) -> Result<Expectation, SyntaxError> {
        if self.eat_kw("verdict") {
            return Ok(Expectation::Verdict(self.ident()?));
        }
        if matches!(self.peek(), Token::Str(_)) && self.peek_at(1) != &Token::LParen {
            return Ok(Expectation::Op(self.string()?));
        }
        Ok(Expectation::Poly(self.poly()?))
    }

    fn poly(&mut self) -> Result<Poly, SyntaxError> {
        let start = self.span();
        let mut lhs = if self.eat(&Token::Minus) {
            let t = self.term()?;
            Poly::Neg(Box::new(t), start.to(self.prev_span()))
        } else {
            self.term()?
        };
        loop {
            let add = if self.eat(&Token::Plus) {
                true
            } else if self.eat(&Token::Minus) {
                false
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            let span = start.to(self.prev_span());
            lhs = if add {
                Poly::Add(Box::new(lhs), Box::new(rhs), span)
            } else {
                Poly::Sub(Box::new(lhs), Box::new(rhs), span)
            };
        }
    }

    fn starts_factor(&self) -> bool {
        match self.peek() {
            Token::Ident(s) => !CONNECTIVES.contains(&s.as_str()),
            Token::LParen | Token::Str(_) => true,
            _ => false,
        }
    }

    fn term(&mut self) -> Result<Poly, SyntaxError> {
        let start = self.span();
        let mut lhs = self.factor()?;
        // A leading integer may be juxtaposed with the next factor: `2 x`.
        if matches!(lhs, Poly::Int(..)) && self.starts_factor() {
            let rhs = self.factor()?;
            lhs = Poly::Mul(Box::new(lhs), Box::new(rhs), start.to(self.prev_span()));
        }
        while self.eat(&Token::Star) {
            let rhs = self.factor()?;
            lhs = Poly::Mul(Box::new(lhs), Box::new(rhs), start.to(self.prev_span()));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Poly, SyntaxError> {
        let start = self.span();
        let base = self.atom()?;
        if self.eat(&Token::Caret) {
            let k = self.int()?;
            return Ok(Poly::Pow(Box::new(base), k, start.to(self.prev_span())));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Poly, SyntaxError> {
        let start = self.span();
        match self.peek().clone() {
            Token::Int(n) => {
                self.bump();
                Ok(Poly::Int(n, start))
            }
            Token::Ident(_) => Ok(Poly::Var(self.ident()?)),
            Token::LParen => {
                self.bump();
                let inner = self.poly()?;
                self.expect(&Token::RParen)?;
                Ok(inner)
            }
            Token::Str(_) => {
                let op = self.string()?;
                self.expect(&Token::LParen)?;
                let arg = self.poly()?;
                let end = self.expect(&Token::RParen)?;
                Ok(Poly::Apply(op, Box::new(arg), start.to(end)))
            }
            _ => {
                self.expected.extend(["integer", "identifier", "`(`", "string"].map(String::from));
                Err(self.error())
            }
        }
    }
}
