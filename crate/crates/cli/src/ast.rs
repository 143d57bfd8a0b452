//! Syntax tree of the ring description language, and its canonical rendering.
//!
//! Spans never take part in equality, so a tree re-parsed from its rendering compares
//! equal to the original.

use std::fmt;

#[derive(Debug, Clone, Copy, Default, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Span {
    pub fn to(self, other: Span) -> Span {
        Span { end: other.end.max(self.end), ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct File {
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Ring(RingBlock),
    Bundle(BundleDecl),
    Let(LetDecl),
    Query(Query),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingBlock {
    pub name: Ident,
    pub prime: u64,
    pub items: Vec<RingItem>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingItem {
    Gen(GenDecl),
    Rule(RuleDecl),
    Action(ActionDecl),
    Omega(Ident),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenDecl {
    pub name: Ident,
    pub degree: u64,
    pub twist: Option<i64>,
    pub odd: bool,
    pub frob: Option<i64>,
    pub filt: Option<u64>,
    pub unstable: bool,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDecl {
    pub generator: Ident,
    pub exponent: u64,
    pub rhs: Poly,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpName {
    Sq(u64),
    P(u64),
    Beta,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionDecl {
    pub op: OpName,
    pub generator: Ident,
    pub value: Poly,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BundleDecl {
    pub name: Ident,
    pub ring: Ident,
    pub rank: i64,
    pub chern: Vec<Poly>,
    pub denom: Vec<Poly>,
    pub trunc: u64,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LetDecl {
    pub name: Ident,
    pub value: Poly,
    pub ring: Ident,
    pub span: Span,
}

/// A quoted Steenrod operation, kept as written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpText {
    pub text: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Poly {
    Int(u64, Span),
    Var(Ident),
    Neg(Box<Poly>, Span),
    Add(Box<Poly>, Box<Poly>, Span),
    Sub(Box<Poly>, Box<Poly>, Span),
    Mul(Box<Poly>, Box<Poly>, Span),
    Pow(Box<Poly>, u64, Span),
    Apply(OpText, Box<Poly>, Span),
}

impl Poly {
    pub fn span(&self) -> Span {
        match self {
            Poly::Int(_, s)
            | Poly::Neg(_, s)
            | Poly::Add(_, _, s)
            | Poly::Sub(_, _, s)
            | Poly::Mul(_, _, s)
            | Poly::Pow(_, _, s)
            | Poly::Apply(_, _, s) => *s,
            Poly::Var(id) => id.span,
        }
    }

    fn level(&self) -> u8 {
        match self {
            Poly::Add(..) | Poly::Sub(..) | Poly::Neg(..) => 1,
            Poly::Mul(..) => 2,
            Poly::Pow(..) => 3,
            Poly::Int(..) | Poly::Var(_) | Poly::Apply(..) => 4,
        }
    }

    /// `need` is the lowest level allowed without parentheses; `lead` marks the first
    /// operand of a sum, the only place a bare negation can appear.
    fn render_into(&self, out: &mut String, need: u8, lead: bool) {
        let bare = self.level() >= need && (!matches!(self, Poly::Neg(..)) || lead);
        if !bare {
            out.push('(');
            self.render_into(out, 0, true);
            out.push(')');
            return;
        }
        match self {
            Poly::Int(n, _) => out.push_str(&n.to_string()),
            Poly::Var(id) => out.push_str(&id.name),
            Poly::Neg(x, _) => {
                out.push('-');
                x.render_into(out, 2, false);
            }
            Poly::Add(a, b, _) | Poly::Sub(a, b, _) => {
                a.render_into(out, 1, lead);
                out.push_str(if matches!(self, Poly::Add(..)) { " + " } else { " - " });
                b.render_into(out, 2, false);
            }
            Poly::Mul(a, b, _) => {
                a.render_into(out, 2, false);
                out.push('*');
                b.render_into(out, 3, false);
            }
            Poly::Pow(b, k, _) => {
                b.render_into(out, 4, false);
                out.push_str(&format!("^{k}"));
            }
            Poly::Apply(op, x, _) => {
                out.push_str(&format!("\"{}\"(", op.text));
                x.render_into(out, 0, true);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render_into(&mut s, 0, true);
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Flag {
    pub name: String,
    pub value: i64,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstructKind {
    Odd,
    Weird,
    Frobenius,
    Hs,
}

impl ObstructKind {
    pub const ALL: [ObstructKind; 4] = [ObstructKind::Odd, ObstructKind::Weird, ObstructKind::Frobenius, ObstructKind::Hs];

    pub fn keyword(self) -> &'static str {
        match self {
            ObstructKind::Odd => "odd",
            ObstructKind::Weird => "weird",
            ObstructKind::Frobenius => "frobenius",
            ObstructKind::Hs => "hs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    W,
    Wet,
    WetChow,
}

impl ClassKind {
    pub const ALL: [ClassKind; 3] = [ClassKind::W, ClassKind::Wet, ClassKind::WetChow];

    pub fn keyword(self) -> &'static str {
        match self {
            ClassKind::W => "w",
            ClassKind::Wet => "wet",
            ClassKind::WetChow => "wetchow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryKind {
    Apply { op: OpText, target: Poly, ring: Ident },
    Normalize { target: Poly, ring: Ident },
    Adem { flags: Vec<Flag>, op: OpText },
    Obstruct { kind: ObstructKind, flags: Vec<Flag>, target: Poly, ring: Ident },
    WuCheck { flags: Vec<Flag>, target: Option<Poly>, ring: Ident },
    CharClass { kind: ClassKind, bundle: Ident },
    Check { flags: Vec<Flag>, ring: Ident },
    Corpus { scenario: Ident },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expectation {
    Poly(Poly),
    Op(OpText),
    Verdict(Ident),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub kind: QueryKind,
    pub expect: Vec<Expectation>,
    pub span: Span,
}

impl Query {
    pub fn ring(&self) -> Option<&str> {
        match &self.kind {
            QueryKind::Apply { ring, .. }
            | QueryKind::Normalize { ring, .. }
            | QueryKind::Obstruct { ring, .. }
            | QueryKind::WuCheck { ring, .. }
            | QueryKind::Check { ring, .. } => Some(&ring.name),
            _ => None,
        }
    }

    /// The query as written, without its expectations.
    pub fn head(&self) -> String {
        match &self.kind {
            QueryKind::Apply { op, target, ring } => {
                format!("apply \"{}\" to {target} in {}", op.text, ring.name)
            }
            QueryKind::Normalize { target, ring } => format!("normalize {target} in {}", ring.name),
            QueryKind::Adem { flags, op } => format!("adem{} \"{}\"", flags_text(flags), op.text),
            QueryKind::Obstruct { kind, flags, target, ring } => {
                format!("obstruct {}{} on {target} in {}", kind.keyword(), flags_text(flags), ring.name)
            }
            QueryKind::WuCheck { flags, target, ring } => {
                let on = target.as_ref().map(|t| format!(" on {t}")).unwrap_or_default();
                format!("wu-check{}{on} in {}", flags_text(flags), ring.name)
            }
            QueryKind::CharClass { kind, bundle } => format!("charclass {} {}", kind.keyword(), bundle.name),
            QueryKind::Check { flags, ring } => format!("check{} {}", flags_text(flags), ring.name),
            QueryKind::Corpus { scenario } => format!("corpus run {}", scenario.name),
        }
    }
}

fn flags_text(flags: &[Flag]) -> String {
    flags.iter().map(|f| format!(" --{} {}", f.name, f.value)).collect()
}

fn list_text(items: &[Poly]) -> String {
    items.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expectation::Poly(p) => write!(f, "{p}"),
            Expectation::Op(op) => write!(f, "\"{}\"", op.text),
            Expectation::Verdict(v) => write!(f, "verdict {}", v.name),
        }
    }
}

impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.head())?;
        if !self.expect.is_empty() {
            let e: Vec<String> = self.expect.iter().map(|e| e.to_string()).collect();
            write!(f, " => {}", e.join(", "))?;
        }
        f.write_str(";")
    }
}

impl fmt::Display for OpName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OpName::Sq(i) => write!(f, "Sq^{i}"),
            OpName::P(i) => write!(f, "P^{i}"),
            OpName::Beta => f.write_str("b"),
        }
    }
}

impl fmt::Display for GenDecl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gen {} deg={}", self.name.name, self.degree)?;
        if let Some(t) = self.twist {
            write!(f, " twist={t}")?;
        }
        if self.odd {
            f.write_str(" odd")?;
        }
        if let Some(e) = self.frob {
            write!(f, " frob={e}")?;
        }
        if let Some(l) = self.filt {
            write!(f, " filt={l}")?;
        }
        if self.unstable {
            f.write_str(" unstable")?;
        }
        f.write_str(";")
    }
}

impl fmt::Display for RingItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingItem::Gen(g) => write!(f, "{g}"),
            RingItem::Rule(r) => write!(f, "rule {}^{} = {};", r.generator.name, r.exponent, r.rhs),
            RingItem::Action(a) => write!(f, "action {}({}) = {};", a.op, a.generator.name, a.value),
            RingItem::Omega(w) => write!(f, "omega = {};", w.name),
        }
    }
}

impl fmt::Display for Item {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Item::Ring(r) => {
                writeln!(f, "ring {} {{", r.name.name)?;
                writeln!(f, "    prime={};", r.prime)?;
                for it in &r.items {
                    writeln!(f, "    {it}")?;
                }
                f.write_str("}")
            }
            Item::Bundle(b) => {
                write!(f, "bundle {} in {} rank={} c=[{}]", b.name.name, b.ring.name, b.rank, list_text(&b.chern))?;
                if !b.denom.is_empty() {
                    write!(f, " denom=[{}]", list_text(&b.denom))?;
                }
                write!(f, " trunc={};", b.trunc)
            }
            Item::Let(l) => write!(f, "let {} = {} in {};", l.name.name, l.value, l.ring.name),
            Item::Query(q) => write!(f, "{q}"),
        }
    }
}

impl fmt::Display for File {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 && (matches!(item, Item::Ring(_)) || matches!(self.items[i - 1], Item::Ring(_))) {
                writeln!(f)?;
            }
            writeln!(f, "{item}")?;
        }
        Ok(())
    }
}
