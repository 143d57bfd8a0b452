//! Evaluation of parsed files against the engine.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde_json::{json, Value};
use steenrod_core::char_classes::wet_chow_sides;
use steenrod_core::{
    adem_normalize, hs_scripted_check, in_image_f_minus_id, odd_vanishing_check, parse_element, w_bro, w_et,
    weird_obstruction, Expr, FrobeniusContext, GeneratorSpec, HsScenario, Letter, Monomial, ObstructionReport,
    PresentationBuilder, Prime, ProjectiveBundle, RingElement, RingPresentation, SteenrodElement, Verdict,
    VirtualBundle,
};

use crate::ast::*;
use crate::corpus;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{col}: {message}")]
pub struct EvalError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl EvalError {
    fn at(span: Span, message: impl ToString) -> Self {
        EvalError { line: span.line, col: span.col, message: message.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Unchecked,
    Met,
    Failed(String),
}

/// The result of one query.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub query: String,
    pub kind: &'static str,
    pub ring: Option<String>,
    pub result: String,
    pub details: Vec<String>,
    pub terms: Option<Value>,
    pub verdict: Option<String>,
    pub fired: bool,
    pub status: Status,
}

impl Outcome {
    /// Failed expectation, or an unasserted query whose check fired.
    pub fn is_failure(&self) -> bool {
        match &self.status {
            Status::Failed(_) => true,
            Status::Met => false,
            Status::Unchecked => self.fired,
        }
    }

    pub fn text(&self, with_query: bool) -> String {
        let mut s = if with_query { format!("{} -> {}", self.query, self.result) } else { self.result.clone() };
        match &self.status {
            Status::Unchecked => {}
            Status::Met => s.push_str("  [ok]"),
            Status::Failed(why) => s.push_str(&format!("  [FAILED: {why}]")),
        }
        for d in &self.details {
            s.push_str("\n  ");
            s.push_str(d);
        }
        s
    }

    pub fn to_json(&self) -> Value {
        let (status, reason) = match &self.status {
            Status::Unchecked => ("unchecked", None),
            Status::Met => ("met", None),
            Status::Failed(w) => ("failed", Some(w.clone())),
        };
        json!({
            "query": self.query,
            "kind": self.kind,
            "ring": self.ring,
            "result": self.result,
            "terms": self.terms,
            "verdict": self.verdict,
            "fired": self.fired,
            "expectation": status,
            "mismatch": reason,
            "details": self.details,
        })
    }
}

struct RingEntry {
    builder: PresentationBuilder,
    ring: RingPresentation,
    lets: HashMap<String, Expr>,
}

struct BundleEntry {
    ring: String,
    bundle: VirtualBundle,
}

/// Rings, bindings and bundles defined so far.
pub struct Session {
    rings: BTreeMap<String, RingEntry>,
    bundles: BTreeMap<String, BundleEntry>,
    pub default_max_degree: u32,
    pub default_prime: Prime,
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

const LAMBDA: &str = "lambda";

impl Session {
    pub fn new() -> Self {
        Session { rings: BTreeMap::new(), bundles: BTreeMap::new(), default_max_degree: 18, default_prime: Prime::TWO }
    }

    /// A session preloaded with every ring, binding and bundle of the shipped corpus.
    pub fn with_builtins() -> Result<Self, EvalError> {
        let mut s = Session::new();
        for sc in corpus::shipped().map_err(|e| EvalError { line: 0, col: 0, message: e.to_string() })? {
            for item in &sc.file.items {
                if !matches!(item, Item::Query(_)) {
                    s.define(item).map_err(|e| EvalError { message: format!("{}: {}", sc.name, e.message), ..e })?;
                }
            }
        }
        Ok(s)
    }

    pub fn ring(&self, name: &str) -> Option<&RingPresentation> {
        self.rings.get(name).map(|e| &e.ring)
    }

    pub fn builder(&self, name: &str) -> Option<&PresentationBuilder> {
        self.rings.get(name).map(|e| &e.builder)
    }

    pub fn ring_names(&self) -> impl Iterator<Item = &str> {
        self.rings.keys().map(String::as_str)
    }

    /// Evaluates every item in order, stopping at the first error.
    pub fn run(&mut self, file: &File) -> Result<Vec<Outcome>, EvalError> {
        let mut out = Vec::new();
        for item in &file.items {
            match item {
                Item::Query(q) => out.push(self.query(q)?),
                other => self.define(other)?,
            }
        }
        Ok(out)
    }

    fn define(&mut self, item: &Item) -> Result<(), EvalError> {
        match item {
            Item::Ring(r) => {
                let entry = build_ring(r)?;
                self.rings.insert(r.name.name.clone(), entry);
            }
            Item::Let(l) => {
                let entry = self.entry(&l.ring)?;
                let e = to_expr(&l.value, &entry.ring, &entry.lets)?;
                entry.ring.eval(&e).map_err(|err| EvalError::at(l.value.span(), err))?;
                let entry = self.rings.get_mut(&l.ring.name).expect("checked above");
                entry.lets.insert(l.name.name.clone(), e);
            }
            Item::Bundle(b) => {
                let entry = self.entry(&b.ring)?;
                let eval_list = |list: &[Poly]| -> Result<Vec<RingElement>, EvalError> {
                    list.iter().map(|p| eval_poly(entry, p)).collect()
                };
                let chern = eval_list(&b.chern)?;
                let denom = eval_list(&b.denom)?;
                let trunc = u32::try_from(b.trunc).map_err(|_| EvalError::at(b.span, "truncation too large"))?;
                let bundle = VirtualBundle::new(&entry.ring, b.rank, chern, denom, trunc)
                    .map_err(|e| EvalError::at(b.span, e))?;
                self.bundles.insert(b.name.name.clone(), BundleEntry { ring: b.ring.name.clone(), bundle });
            }
            Item::Query(_) => unreachable!("queries are not definitions"),
        }
        Ok(())
    }

    fn entry(&self, name: &Ident) -> Result<&RingEntry, EvalError> {
        self.rings
            .get(&name.name)
            .ok_or_else(|| EvalError::at(name.span, format!("unknown ring `{}`", name.name)))
    }

    pub fn query(&self, q: &Query) -> Result<Outcome, EvalError> {
        let mut out = Outcome {
            query: q.head(),
            kind: "",
            ring: q.ring().map(String::from),
            result: String::new(),
            details: Vec::new(),
            terms: None,
            verdict: None,
            fired: false,
            status: Status::Unchecked,
        };
        // The element compared against polynomial expectations, with its ring.
        let mut value: Option<(&RingEntry, RingElement)> = None;
        let mut op_value: Option<SteenrodElement> = None;

        match &q.kind {
            QueryKind::Apply { op, target, ring } => {
                out.kind = "apply";
                let entry = self.entry(ring)?;
                let a = parse_op(entry.ring.prime(), op)?;
                let x = eval_poly(entry, target)?;
                let y = entry.ring.apply_element(&a, &x).map_err(|e| EvalError::at(q.span, e))?;
                value = Some((entry, y));
            }
            QueryKind::Normalize { target, ring } => {
                out.kind = "normalize";
                let entry = self.entry(ring)?;
                let x = eval_poly(entry, target)?;
                entry.ring.shape_of(&x).map_err(|e| EvalError::at(target.span(), e))?;
                value = Some((entry, x));
            }
            QueryKind::Adem { flags, op } => {
                out.kind = "adem";
                let fl = Flags::new(flags, &["prime"])?;
                let prime = match fl.get("prime") {
                    Some((v, span)) => prime_from(v, span)?,
                    None => self.default_prime,
                };
                let a = parse_op(prime, op)?;
                let n = adem_normalize(&a).map_err(|e| EvalError::at(op.span, e))?;
                out.result = n.to_string();
                op_value = Some(n);
            }
            QueryKind::Obstruct { kind, flags, target, ring } => {
                out.kind = "obstruct";
                let entry = self.entry(ring)?;
                let rep = self.obstruct(entry, *kind, flags, target, q.span)?;
                out.result = format!("{} ({})", entry.ring.render(&rep.output), verdict_phrase(rep.verdict));
                out.details = rep.notes.clone();
                if !rep.witnesses.is_empty() && matches!(rep.verdict, Verdict::NotInImage) {
                    let w: Vec<String> = rep.witnesses.iter().map(|m| entry.ring.render_monomial(m)).collect();
                    out.details.insert(0, format!("eigenvalue-1 monomials: {}", w.join(", ")));
                }
                out.verdict = Some(rep.verdict.label().into());
                out.fired = rep.fires();
                out.terms = Some(terms_json(&entry.ring, &rep.output));
                value = Some((entry, rep.output));
            }
            QueryKind::WuCheck { flags, target, ring } => {
                out.kind = "wu-check";
                let entry = self.entry(ring)?;
                let (holds, result, details) = wu_check(entry, flags, target.as_ref(), q.span, self.default_max_degree)?;
                out.result = result;
                out.details = details;
                out.verdict = Some(if holds { "holds" } else { "fails" }.into());
                out.fired = !holds;
            }
            QueryKind::CharClass { kind, bundle } => {
                out.kind = "charclass";
                let b = self
                    .bundles
                    .get(&bundle.name)
                    .ok_or_else(|| EvalError::at(bundle.span, format!("unknown bundle `{}`", bundle.name)))?;
                let entry = &self.rings[&b.ring];
                out.ring = Some(b.ring.clone());
                let base = &entry.ring;
                let omega = base.omega().ok();
                let err = |e: steenrod_core::CharClassError| EvalError::at(q.span, e);
                match kind {
                    ClassKind::W => value = Some((entry, w_bro(base, &b.bundle).map_err(err)?)),
                    ClassKind::Wet => value = Some((entry, w_et(base, &b.bundle, omega.as_ref()).map_err(err)?)),
                    ClassKind::WetChow => {
                        let (lhs, rhs) = wet_chow_sides(base, &b.bundle, omega.as_ref()).map_err(err)?;
                        let holds = lhs == rhs;
                        out.result = format!("{} {} {}", base.render(&lhs), if holds { "=" } else { "!=" }, base.render(&rhs));
                        out.verdict = Some(if holds { "holds" } else { "fails" }.into());
                        out.fired = !holds;
                    }
                }
            }
            QueryKind::Check { flags, ring } => {
                out.kind = "check";
                let entry = self.entry(ring)?;
                let fl = Flags::new(flags, &["max-degree"])?;
                let d = fl.u32_or("max-degree", self.default_max_degree)?;
                let report = entry.ring.check_action_consistency(d);
                let ok = report.is_consistent();
                out.result = if ok { format!("consistent up to degree {d}") } else { format!("inconsistent up to degree {d}") };
                if !ok {
                    out.details = report.to_string().lines().map(String::from).collect();
                }
                out.verdict = Some(if ok { "consistent" } else { "inconsistent" }.into());
                out.fired = !ok;
            }
            QueryKind::Corpus { scenario } => {
                out.kind = "corpus";
                let all = corpus::shipped().map_err(|e| EvalError::at(scenario.span, e))?;
                let sc = all
                    .iter()
                    .find(|s| s.name == scenario.name)
                    .ok_or_else(|| EvalError::at(scenario.span, format!("unknown scenario `{}`", scenario.name)))?;
                let report = corpus::run_scenario(sc);
                out.result = report.summary();
                out.details = report.failures();
                let ok = report.passed();
                out.verdict = Some(if ok { "passed" } else { "failed" }.into());
                out.fired = !ok;
            }
        }

        if let Some((entry, v)) = &value {
            if out.result.is_empty() {
                out.result = entry.ring.render(v);
            }
            if out.terms.is_none() {
                out.terms = Some(terms_json(&entry.ring, v));
            }
        }

        let mut failures = Vec::new();
        for e in &q.expect {
            let miss = match e {
                Expectation::Poly(p) => {
                    let Some((entry, v)) = &value else {
                        return Err(EvalError::at(p.span(), "this query has no polynomial result to compare"));
                    };
                    let want = eval_poly(entry, p)?;
                    diff(&entry.ring, &want, v)
                }
                Expectation::Op(o) => {
                    let Some(have) = &op_value else {
                        return Err(EvalError::at(o.span, "this query has no operation result to compare"));
                    };
                    let want = adem_normalize(&parse_op(have.prime(), o)?).map_err(|err| EvalError::at(o.span, err))?;
                    (want != *have).then(|| format!("expected {want}"))
                }
                Expectation::Verdict(v) => match &out.verdict {
                    Some(have) if *have == v.name => None,
                    Some(have) => Some(format!("expected verdict {}, got {have}", v.name)),
                    None => return Err(EvalError::at(v.span, "this query produces no verdict")),
                },
            };
            failures.extend(miss);
        }
        if !q.expect.is_empty() {
            out.status = if failures.is_empty() { Status::Met } else { Status::Failed(failures.join("; ")) };
        }
        Ok(out)
    }

    fn obstruct(
        &self,
        entry: &RingEntry,
        kind: ObstructKind,
        flags: &[Flag],
        target: &Poly,
        span: Span,
    ) -> Result<ObstructionReport, EvalError> {
        let ring = &entry.ring;
        let err = |e: steenrod_core::ObstructionError| EvalError::at(span, e);
        let rerr = |e: steenrod_core::RingError| EvalError::at(target.span(), e);
        match kind {
            ObstructKind::Odd => {
                let fl = Flags::new(flags, &["codim", "max-degree"])?;
                let x = eval_poly(entry, target)?;
                let codim = fl.get("codim").map(|(v, s)| nonneg(v, s)).transpose()?;
                let class = ring.class(x, codim).map_err(rerr)?;
                let d = fl.u32_or("max-degree", self.default_max_degree)?;
                odd_vanishing_check(ring, &class, d).map_err(err)
            }
            ObstructKind::Weird => {
                let fl = Flags::new(flags, &["codim", "which"])?;
                let (c, cspan) = fl.require("codim", span)?;
                let which = fl.get("which").map_or(Ok(2), |(v, s)| match v {
                    1 | 2 => Ok(v as u8),
                    _ => Err(EvalError::at(s, "--which must be 1 or 2")),
                })?;
                let x = eval_poly(entry, target)?;
                let class = ring.class(x, Some(nonneg(c, cspan)?)).map_err(rerr)?;
                weird_obstruction(ring, &class, c, which).map_err(err)
            }
            ObstructKind::Frobenius => {
                let fl = Flags::new(flags, &["q", "twist"])?;
                let ctx = frobenius_ctx(&fl, ring.prime(), span)?;
                let x = eval_poly(entry, target)?;
                let shift = fl.get("twist").map_or(0, |(v, _)| v);
                let class = ring.class(x, None).map_err(rerr)?.twisted_by(shift);
                in_image_f_minus_id(ring, &class, &ctx).map_err(err)
            }
            ObstructKind::Hs => {
                let fl = Flags::new(flags, &["q", "twist"])?;
                let ctx = frobenius_ctx(&fl, ring.prime(), span)?;
                let shift = fl.get("twist").map_or(0, |(v, _)| v);
                let z = to_expr(target, ring, &entry.lets)?;
                let sc = HsScenario::new(&entry.builder, &z, shift, ctx).map_err(err)?;
                hs_scripted_check(&sc).map_err(err)
            }
        }
    }
}

fn verdict_phrase(v: Verdict) -> &'static str {
    match v {
        Verdict::Nonvanishing => "NONZERO: obstruction fires",
        Verdict::Vanishes => "zero: no obstruction",
        Verdict::NotInImage => "NOT IN IMAGE of F - Id: obstruction fires",
        Verdict::InImage => "in image of F - Id: no obstruction",
    }
}

fn wu_check(
    entry: &RingEntry,
    flags: &[Flag],
    target: Option<&Poly>,
    span: Span,
    default_degree: u32,
) -> Result<(bool, String, Vec<String>), EvalError> {
    let fl = Flags::new(flags, &["n", "m", "max-degree"])?;
    let (n, ns) = fl.require("n", span)?;
    let (m, ms) = fl.require("m", span)?;
    let (n, m) = (nonneg(n, ns)?, nonneg(m, ms)?);
    if entry.ring.gen_index(LAMBDA).is_ok() {
        return Err(EvalError::at(span, format!("the base ring already has a generator named `{LAMBDA}`")));
    }
    let pb = ProjectiveBundle::over(&entry.builder, LAMBDA, n).map_err(|e| EvalError::at(span, e))?;
    let r = pb.ring();
    let ys: Vec<RingElement> = match target {
        Some(p) => {
            let e = to_expr(p, &entry.ring, &entry.lets)?;
            vec![r.eval(&e).map_err(|err| EvalError::at(p.span(), err))?]
        }
        None => {
            let d = fl.u32_or("max-degree", default_degree.min(8))?;
            (0..=d)
                .flat_map(|k| entry.ring.monomials_of_degree(k))
                .map(|m| {
                    let mut ex = m.0;
                    ex.push(0);
                    RingElement::monomial(r.prime(), Monomial(ex), 1)
                })
                .collect()
        }
    };
    let mut details = Vec::new();
    for y in &ys {
        let (lhs, rhs) = pb.relative_wu_sides(y, m).map_err(|e| EvalError::at(span, e))?;
        if lhs != rhs {
            details.push(format!("y = {}: {} != {}", r.render(y), r.render(&lhs), r.render(&rhs)));
        }
    }
    let holds = details.is_empty();
    let result = if holds {
        format!("holds for {} base classes (n = {n}, m = {m})", ys.len())
    } else {
        format!("fails for {} of {} base classes (n = {n}, m = {m})", details.len(), ys.len())
    };
    Ok((holds, result, details))
}

fn frobenius_ctx(fl: &Flags, prime: Prime, span: Span) -> Result<FrobeniusContext, EvalError> {
    let (q, qs) = fl.require("q", span)?;
    let q = u64::try_from(q).map_err(|_| EvalError::at(qs, "--q must be positive"))?;
    FrobeniusContext::new(q, prime).map_err(|e| EvalError::at(qs, e))
}

fn nonneg(v: i64, span: Span) -> Result<u32, EvalError> {
    u32::try_from(v).map_err(|_| EvalError::at(span, "expected a non-negative value"))
}

fn prime_from(v: i64, span: Span) -> Result<Prime, EvalError> {
    let v = u32::try_from(v).map_err(|_| EvalError::at(span, "invalid prime"))?;
    Prime::new(v).map_err(|e| EvalError::at(span, e))
}

struct Flags {
    values: HashMap<String, (i64, Span)>,
}

impl Flags {
    fn new(flags: &[Flag], allowed: &[&str]) -> Result<Self, EvalError> {
        let mut values = HashMap::new();
        for f in flags {
            if !allowed.contains(&f.name.as_str()) {
                let list: Vec<String> = allowed.iter().map(|a| format!("--{a}")).collect();
                return Err(EvalError::at(f.span, format!("unknown flag `--{}` (allowed: {})", f.name, list.join(", "))));
            }
            if values.insert(f.name.clone(), (f.value, f.span)).is_some() {
                return Err(EvalError::at(f.span, format!("flag `--{}` given twice", f.name)));
            }
        }
        Ok(Flags { values })
    }

    fn get(&self, name: &str) -> Option<(i64, Span)> {
        self.values.get(name).copied()
    }

    fn require(&self, name: &str, span: Span) -> Result<(i64, Span), EvalError> {
        self.get(name).ok_or_else(|| EvalError::at(span, format!("missing flag `--{name}`")))
    }

    fn u32_or(&self, name: &str, default: u32) -> Result<u32, EvalError> {
        self.get(name).map_or(Ok(default), |(v, s)| nonneg(v, s))
    }
}

fn build_ring(r: &RingBlock) -> Result<RingEntry, EvalError> {
    let prime_val = u32::try_from(r.prime).map_err(|_| EvalError::at(r.span, "invalid prime"))?;
    let prime = Prime::new(prime_val).map_err(|e| EvalError::at(r.span, e))?;
    let mut b = PresentationBuilder::new(prime);
    let mut names = HashSet::new();
    for item in &r.items {
        if let RingItem::Gen(g) = item {
            if !names.insert(g.name.name.clone()) {
                return Err(EvalError::at(g.name.span, format!("generator `{}` declared twice", g.name.name)));
            }
        }
    }
    let known = |id: &Ident| -> Result<(), EvalError> {
        if names.contains(&id.name) {
            Ok(())
        } else {
            Err(EvalError::at(id.span, format!("unknown generator `{}`", id.name)))
        }
    };
    for item in &r.items {
        match item {
            RingItem::Gen(g) => {
                let degree = u32::try_from(g.degree).map_err(|_| EvalError::at(g.span, "degree too large"))?;
                let mut spec = GeneratorSpec::new(&g.name.name, degree);
                if let Some(t) = g.twist {
                    spec = spec.twist(t);
                }
                if g.odd {
                    spec = spec.odd();
                }
                if let Some(e) = g.frob {
                    spec = spec.frob(e);
                }
                if let Some(l) = g.filt {
                    spec = spec.filtration(u32::try_from(l).map_err(|_| EvalError::at(g.span, "filtration too large"))?);
                }
                if g.unstable {
                    spec = spec.unstable();
                }
                b.generator(spec);
            }
            RingItem::Rule(rule) => {
                known(&rule.generator)?;
                let k = u32::try_from(rule.exponent).map_err(|_| EvalError::at(rule.span, "exponent too large"))?;
                b.rule(&rule.generator.name, k, poly_expr(&rule.rhs, prime, &|id| known(id), &HashMap::new())?);
            }
            RingItem::Action(a) => {
                known(&a.generator)?;
                let idx = |i: u64| u32::try_from(i).map_err(|_| EvalError::at(a.span, "index too large"));
                let letter = match a.op {
                    OpName::Sq(i) => Letter::Sq(idx(i)?),
                    OpName::P(i) => Letter::P(idx(i)?),
                    OpName::Beta => Letter::Beta,
                };
                b.action(letter, &a.generator.name, poly_expr(&a.value, prime, &|id| known(id), &HashMap::new())?);
            }
            RingItem::Omega(w) => {
                known(w)?;
                b.omega(&w.name);
            }
        }
    }
    let ring = b.build().map_err(|e| EvalError::at(r.name.span, format!("ring `{}`: {e}", r.name.name)))?;
    Ok(RingEntry { builder: b, ring, lets: HashMap::new() })
}

fn parse_op(prime: Prime, op: &OpText) -> Result<SteenrodElement, EvalError> {
    parse_element(prime, &op.text).map_err(|e| EvalError::at(op.span, format!("in \"{}\": {e}", op.text)))
}

fn to_expr(p: &Poly, ring: &RingPresentation, lets: &HashMap<String, Expr>) -> Result<Expr, EvalError> {
    let known = |id: &Ident| {
        ring.gen_index(&id.name)
            .map(|_| ())
            .map_err(|_| EvalError::at(id.span, format!("unknown generator `{}`", id.name)))
    };
    poly_expr(p, ring.prime(), &known, lets)
}

fn poly_expr(
    p: &Poly,
    prime: Prime,
    known: &dyn Fn(&Ident) -> Result<(), EvalError>,
    lets: &HashMap<String, Expr>,
) -> Result<Expr, EvalError> {
    let rec = |q: &Poly| poly_expr(q, prime, known, lets);
    Ok(match p {
        Poly::Int(n, s) => Expr::Int(i64::try_from(*n).map_err(|_| EvalError::at(*s, "integer too large"))?),
        Poly::Var(id) => match lets.get(&id.name) {
            Some(e) => e.clone(),
            None => {
                known(id)?;
                Expr::gen(&id.name)
            }
        },
        Poly::Neg(x, _) => -rec(x)?,
        Poly::Add(a, b, _) => rec(a)? + rec(b)?,
        Poly::Sub(a, b, _) => rec(a)? - rec(b)?,
        Poly::Mul(a, b, _) => rec(a)? * rec(b)?,
        Poly::Pow(b, k, s) => rec(b)?.pow(u32::try_from(*k).map_err(|_| EvalError::at(*s, "exponent too large"))?),
        Poly::Apply(op, x, _) => Expr::apply(parse_op(prime, op)?, rec(x)?),
    })
}

fn eval_poly(entry: &RingEntry, p: &Poly) -> Result<RingElement, EvalError> {
    let e = to_expr(p, &entry.ring, &entry.lets)?;
    entry.ring.eval(&e).map_err(|err| EvalError::at(p.span(), err))
}

/// Structured form: one entry per monomial, as an exponent map and a coefficient.
pub fn terms_json(ring: &RingPresentation, x: &RingElement) -> Value {
    let terms: Vec<Value> = x
        .terms()
        .rev()
        .map(|(m, c)| {
            let mono: serde_json::Map<String, Value> = m
                .0
                .iter()
                .zip(ring.generators())
                .filter(|(e, _)| **e > 0)
                .map(|(e, g)| (g.name.clone(), json!(e)))
                .collect();
            json!({ "monomial": mono, "coefficient": ring.prime().signed_repr(c) })
        })
        .collect();
    Value::Array(terms)
}

/// Monomial-level difference between an expected and an actual element.
pub fn diff(ring: &RingPresentation, want: &RingElement, have: &RingElement) -> Option<String> {
    if want == have {
        return None;
    }
    let mut missing = RingElement::zero(ring.prime());
    let mut extra = RingElement::zero(ring.prime());
    let mut monos: Vec<&Monomial> = want.terms().chain(have.terms()).map(|(m, _)| m).collect();
    monos.sort();
    monos.dedup();
    for m in monos {
        let (w, h) = (want.coefficient(m), have.coefficient(m));
        if w == h {
            continue;
        }
        let d = ring.prime().sub(w, h);
        if h == 0 {
            missing.add_term(m.clone(), d);
        } else if w == 0 {
            extra.add_term(m.clone(), h);
        } else {
            missing.add_term(m.clone(), d);
        }
    }
    let mut parts = vec![format!("expected {}", ring.render(want))];
    if !missing.is_zero() {
        parts.push(format!("missing {}", ring.render(&missing)));
    }
    if !extra.is_zero() {
        parts.push(format!("unexpected {}", ring.render(&extra)));
    }
    Some(parts.join(", "))
}
