//! Finitely presented graded-commutative F_l-algebras with Tate twists.
//!
//! A presentation is a list of generators, one optional power rule `g^k = rhs`
//! per generator, and declared Steenrod actions on generators. Elements are kept
//! in normal form: no rule applies to any stored monomial, odd generators appear
//! at most once, and any monomial of total filtration at least 2 is zero.
//!
//! Operations act through the Cartan formula one letter at a time, right to left.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops;
use std::sync::Mutex;

use thiserror::Error;

use crate::field::Prime;
use crate::steenrod::{adem_normalize, Letter, SteenrodElement, SteenrodError, SteenrodMonomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RingError {
    #[error("generator `{0}` declared twice")]
    DuplicateGenerator(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("generator `{0}` must have positive degree")]
    ZeroDegree(String),
    #[error("generator `{0}`: odd generators only exist for odd l")]
    OddGeneratorAtTwo(String),
    #[error("generator `{0}`: parity flag disagrees with its degree")]
    ParityMismatch(String),
    #[error("non-homogeneous expression: {0}")]
    NonHomogeneous(String),
    #[error("invalid rule: {0}")]
    InvalidRule(String),
    #[error("invalid action: {0}")]
    InvalidAction(String),
    #[error("omega: {0}")]
    OmegaInvalid(String),
    #[error("the presentation has no distinguished omega")]
    OmegaUndeclared,
    #[error("no declared value for {op}({generator})")]
    MissingActionComponent { generator: String, op: String },
    #[error("rewrite rules do not terminate")]
    RuleNonTermination,
    #[error("class carries no codimension tag")]
    MissingCodim,
    #[error("operation prime {0} differs from ring prime {1}")]
    MixedPrimes(Prime, Prime),
    #[error(transparent)]
    Steenrod(#[from] SteenrodError),
}

/// Exponent vector over the generators of a presentation, in declaration order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn generator(n: usize, i: usize) -> Self {
        let mut v = vec![0; n];
        v[i] = 1;
        Monomial(v)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// An F_l-linear combination of monomials. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RingElement {
    prime: Prime,
    terms: BTreeMap<Monomial, u32>,
}

impl RingElement {
    pub fn zero(prime: Prime) -> Self {
        RingElement { prime, terms: BTreeMap::new() }
    }

    pub fn monomial(prime: Prime, m: Monomial, c: u32) -> Self {
        let mut e = Self::zero(prime);
        e.add_term(m, c);
        e
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending monomial order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, m: &Monomial) -> u32 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    pub fn add_term(&mut self, m: Monomial, c: u32) {
        let p = self.prime;
        let c = c % p.get();
        if c == 0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                let v = p.add(*o.get(), c);
                if v == 0 {
                    o.remove();
                } else {
                    *o.get_mut() = v;
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn add_scaled(&mut self, other: &RingElement, c: u32) {
        let p = self.prime;
        for (m, v) in other.terms() {
            self.add_term(m.clone(), p.mul(v, c));
        }
    }

    pub fn scale(&self, c: u32) -> Self {
        let mut out = Self::zero(self.prime);
        out.add_scaled(self, c);
        out
    }
}

impl ops::Add for &RingElement {
    type Output = RingElement;
    fn add(self, rhs: &RingElement) -> RingElement {
        let mut out = self.clone();
        out.add_scaled(rhs, 1);
        out
    }
}

impl ops::Sub for &RingElement {
    type Output = RingElement;
    fn sub(self, rhs: &RingElement) -> RingElement {
        let mut out = self.clone();
        out.add_scaled(rhs, self.prime.get() - 1);
        out
    }
}

impl ops::Neg for &RingElement {
    type Output = RingElement;
    fn neg(self) -> RingElement {
        self.scale(self.prime.get() - 1)
    }
}

/// Polynomial expressions over generator names, optionally containing operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Gen(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Apply(SteenrodElement, Box<Expr>),
}

impl Expr {
    pub fn gen(name: &str) -> Self {
        Expr::Gen(name.to_string())
    }

    pub fn pow(self, k: u32) -> Self {
        Expr::Pow(Box::new(self), k)
    }

    pub fn apply(op: SteenrodElement, x: Expr) -> Self {
        Expr::Apply(op, Box::new(x))
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(rhs))
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::Sub(Box::new(self), Box::new(rhs))
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(rhs))
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: u32,
    pub twist: i64,
    pub odd: bool,
    pub frobenius_exponent: Option<i64>,
    pub filtration: u32,
    pub unstable: bool,
}

impl GeneratorSpec {
    pub fn new(name: &str, degree: u32) -> Self {
        GeneratorSpec {
            name: name.to_string(),
            degree,
            twist: 0,
            odd: false,
            frobenius_exponent: None,
            filtration: 0,
            unstable: false,
        }
    }

    pub fn twist(mut self, t: i64) -> Self {
        self.twist = t;
        self
    }

    pub fn odd(mut self) -> Self {
        self.odd = true;
        self
    }

    pub fn frob(mut self, e: i64) -> Self {
        self.frobenius_exponent = Some(e);
        self
    }

    pub fn filtration(mut self, f: u32) -> Self {
        self.filtration = f;
        self
    }

    pub fn unstable(mut self) -> Self {
        self.unstable = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteRule {
    pub generator: usize,
    pub exponent: u32,
    pub rhs: RingElement,
}

/// Collects generators, rules and actions; `build` validates and freezes them.
#[derive(Debug, Clone)]
pub struct PresentationBuilder {
    prime: Prime,
    gens: Vec<GeneratorSpec>,
    rules: Vec<(String, u32, Expr)>,
    actions: Vec<(Letter, String, Expr)>,
    omega: Option<String>,
}

impl PresentationBuilder {
    pub fn new(prime: Prime) -> Self {
        PresentationBuilder { prime, gens: Vec::new(), rules: Vec::new(), actions: Vec::new(), omega: None }
    }

    pub fn generator(&mut self, spec: GeneratorSpec) -> &mut Self {
        self.gens.push(spec);
        self
    }

    pub fn rule(&mut self, gen: &str, k: u32, rhs: Expr) -> &mut Self {
        self.rules.push((gen.to_string(), k, rhs));
        self
    }

    pub fn action(&mut self, op: Letter, gen: &str, value: Expr) -> &mut Self {
        self.actions.push((op, gen.to_string(), value));
        self
    }

    pub fn omega(&mut self, gen: &str) -> &mut Self {
        self.omega = Some(gen.to_string());
        self
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn omega_name(&self) -> Option<&str> {
        self.omega.as_deref()
    }

    pub fn build(&self) -> Result<RingPresentation, RingError> {
        let p = self.prime;
        let mut index = HashMap::new();
        for (i, g) in self.gens.iter().enumerate() {
            if index.insert(g.name.clone(), i).is_some() {
                return Err(RingError::DuplicateGenerator(g.name.clone()));
            }
            if g.degree == 0 {
                return Err(RingError::ZeroDegree(g.name.clone()));
            }
            if p.is_two() && g.odd {
                return Err(RingError::OddGeneratorAtTwo(g.name.clone()));
            }
            if !p.is_two() && g.odd && g.degree % 2 == 0 {
                return Err(RingError::ParityMismatch(g.name.clone()));
            }
        }
        let mut gens = self.gens.clone();
        if !p.is_two() {
            for g in &mut gens {
                g.odd = g.degree % 2 == 1;
            }
        }
        let mut ring = RingPresentation {
            prime: p,
            gens,
            index,
            rules: Vec::new(),
            rule_of: vec![None; self.gens.len()],
            actions: vec![BTreeMap::new(); self.gens.len()],
            omega: None,
            nf_cache: Mutex::new(HashMap::new()),
            op_cache: Mutex::new(HashMap::new()),
        };

        if let Some(name) = &self.omega {
            let i = ring.gen_index(name)?;
            let g = &ring.gens[i];
            if g.degree != 1 || !p.twists_agree(g.twist, 0) {
                return Err(RingError::OmegaInvalid(format!("`{name}` must have degree 1 and twist 0")));
            }
            ring.omega = Some(i);
        }

        for (name, k, rhs) in &self.rules {
            let g = ring.gen_index(name)?;
            if *k < 2 {
                return Err(RingError::InvalidRule(format!("{name}^{k}: exponent must be at least 2")));
            }
            if ring.gens[g].odd {
                return Err(RingError::InvalidRule(format!("{name} is odd and already squares to zero")));
            }
            if ring.rule_of[g].is_some() {
                return Err(RingError::InvalidRule(format!("second rule for {name}")));
            }
            let lhs = ring.gen_power(g, *k);
            ring.check_shape(rhs, ring.degree_of(&lhs), ring.twist_of(&lhs), &format!("rule for {name}^{k}"))?;
            let rhs = ring.eval_raw(rhs)?;
            if rhs.terms().any(|(m, _)| m.0[g] >= *k) {
                return Err(RingError::InvalidRule(format!("right side of {name}^{k} is divisible by {name}^{k}")));
            }
            ring.rule_of[g] = Some(ring.rules.len());
            ring.rules.push(RewriteRule { generator: g, exponent: *k, rhs });
        }

        for (op, name, value) in &self.actions {
            let g = ring.gen_index(name)?;
            let spec = &ring.gens[g];
            let op_deg = match (*op, p.is_two()) {
                (Letter::Sq(i), true) if i >= 1 => i,
                (Letter::Beta, true) => 1,
                (Letter::P(i), false) if i >= 1 => 2 * i * (p.get() - 1),
                (Letter::Beta, false) => 1,
                _ => return Err(RingError::InvalidAction(format!("{op}({name}) is not a generator action at l = {p}"))),
            };
            let op = if p.is_two() && *op == Letter::Beta { Letter::Sq(1) } else { *op };
            let above = match op {
                Letter::Sq(i) => i > spec.degree,
                Letter::P(i) => 2 * i > spec.degree,
                Letter::Beta => false,
            };
            if above {
                return Err(RingError::InvalidAction(format!("{op}({name}) vanishes by instability")));
            }
            ring.check_shape(value, spec.degree + op_deg, spec.twist, &format!("{op}({name})"))?;
            let v = ring.eval(value)?;
            if ring.actions[g].insert(op, v).is_some() {
                return Err(RingError::InvalidAction(format!("{op}({name}) declared twice")));
            }
        }
        Ok(ring)
    }
}

type OpKey = (Monomial, Letter);

/// A validated presentation. Normal forms and letter actions on monomials are memoized.
#[derive(Debug)]
pub struct RingPresentation {
    prime: Prime,
    gens: Vec<GeneratorSpec>,
    index: HashMap<String, usize>,
    rules: Vec<RewriteRule>,
    rule_of: Vec<Option<usize>>,
    actions: Vec<BTreeMap<Letter, RingElement>>,
    omega: Option<usize>,
    nf_cache: Mutex<HashMap<Monomial, RingElement>>,
    op_cache: Mutex<HashMap<OpKey, RingElement>>,
}

impl Clone for RingPresentation {
    fn clone(&self) -> Self {
        RingPresentation {
            prime: self.prime,
            gens: self.gens.clone(),
            index: self.index.clone(),
            rules: self.rules.clone(),
            rule_of: self.rule_of.clone(),
            actions: self.actions.clone(),
            omega: self.omega,
            nf_cache: Mutex::new(HashMap::new()),
            op_cache: Mutex::new(HashMap::new()),
        }
    }
}

const REDUCTION_DEPTH: usize = 4096;

impl RingPresentation {
    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.gens
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn omega_index(&self) -> Option<usize> {
        self.omega
    }

    pub fn ngens(&self) -> usize {
        self.gens.len()
    }

    pub fn gen_index(&self, name: &str) -> Result<usize, RingError> {
        self.index.get(name).copied().ok_or_else(|| RingError::UnknownGenerator(name.to_string()))
    }

    /// Declared action values, keyed by letter.
    pub fn declared_actions(&self, g: usize) -> &BTreeMap<Letter, RingElement> {
        &self.actions[g]
    }

    pub fn one(&self) -> RingElement {
        RingElement::monomial(self.prime, Monomial::one(self.ngens()), 1)
    }

    pub fn zero(&self) -> RingElement {
        RingElement::zero(self.prime)
    }

    pub fn constant(&self, c: i64) -> RingElement {
        self.one().scale(self.prime.reduce(c))
    }

    /// The generator as an element (zero when its own filtration is at least 2).
    pub fn gen(&self, name: &str) -> Result<RingElement, RingError> {
        let i = self.gen_index(name)?;
        Ok(self.gen_element(i))
    }

    pub fn gen_element(&self, i: usize) -> RingElement {
        self.reduce(&Monomial::generator(self.ngens(), i)).expect("a generator reduces")
    }

    pub fn omega(&self) -> Result<RingElement, RingError> {
        self.omega.map(|i| self.gen_element(i)).ok_or(RingError::OmegaUndeclared)
    }

    fn gen_power(&self, g: usize, k: u32) -> Monomial {
        let mut m = Monomial::one(self.ngens());
        m.0[g] = k;
        m
    }

    pub fn degree_of(&self, m: &Monomial) -> u32 {
        m.0.iter().zip(&self.gens).map(|(e, g)| e * g.degree).sum()
    }

    pub fn twist_of(&self, m: &Monomial) -> i64 {
        m.0.iter().zip(&self.gens).map(|(&e, g)| e as i64 * g.twist).sum()
    }

    pub fn filtration_of(&self, m: &Monomial) -> u32 {
        m.0.iter().zip(&self.gens).map(|(e, g)| e * g.filtration).sum()
    }

    /// `(degree, twist)` shared by all terms, or `None` for zero.
    pub fn shape_of(&self, x: &RingElement) -> Result<Option<(u32, i64)>, RingError> {
        let mut out: Option<(u32, i64)> = None;
        for (m, _) in x.terms() {
            let s = (self.degree_of(m), self.twist_of(m));
            match out {
                None => out = Some(s),
                Some((d, t)) if d == s.0 && self.prime.twists_agree(t, s.1) => {}
                Some(_) => return Err(RingError::NonHomogeneous(self.render(x))),
            }
        }
        Ok(out)
    }

    /// Product of two monomials before any rule is applied: the reordering sign,
    /// or `None` when an odd generator would appear twice.
    fn raw_product(&self, a: &Monomial, b: &Monomial) -> Option<(Monomial, u32)> {
        let p = self.prime;
        let mut odd_after = 0u32;
        let mut swaps = 0u32;
        let n = self.ngens();
        let mut out = vec![0u32; n];
        for i in (0..n).rev() {
            let g = &self.gens[i];
            if g.odd {
                if a.0[i] + b.0[i] > 1 {
                    return None;
                }
                swaps += b.0[i] * odd_after;
                odd_after += a.0[i];
            }
            out[i] = a.0[i] + b.0[i];
        }
        let sign = if p.is_two() || swaps % 2 == 0 { 1 } else { p.get() - 1 };
        Some((Monomial(out), sign))
    }

    fn raw_mul(&self, a: &RingElement, b: &RingElement) -> RingElement {
        let p = self.prime;
        let mut out = RingElement::zero(p);
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                if let Some((m, s)) = self.raw_product(ma, mb) {
                    out.add_term(m, p.mul(p.mul(ca, cb), s));
                }
            }
        }
        out
    }

    /// Normal form of a single (possibly reducible) monomial.
    pub fn reduce(&self, m: &Monomial) -> Result<RingElement, RingError> {
        self.reduce_at(m, 0)
    }

    fn reduce_at(&self, m: &Monomial, depth: usize) -> Result<RingElement, RingError> {
        if depth > REDUCTION_DEPTH {
            return Err(RingError::RuleNonTermination);
        }
        if self.filtration_of(m) >= 2 {
            return Ok(self.zero());
        }
        if let Some(hit) = self.nf_cache.lock().expect("cache poisoned").get(m) {
            return Ok(hit.clone());
        }
        let applicable = self.rules.iter().find(|r| m.0[r.generator] >= r.exponent);
        let out = match applicable {
            None => RingElement::monomial(self.prime, m.clone(), 1),
            Some(rule) => self.rewrite_with(m, rule, depth)?,
        };
        self.nf_cache.lock().expect("cache poisoned").insert(m.clone(), out.clone());
        Ok(out)
    }

    fn rewrite_with(&self, m: &Monomial, rule: &RewriteRule, depth: usize) -> Result<RingElement, RingError> {
        let p = self.prime;
        let mut rest = m.clone();
        rest.0[rule.generator] -= rule.exponent;
        let mut out = self.zero();
        for (t, c) in rule.rhs.terms() {
            if let Some((prod, s)) = self.raw_product(t, &rest) {
                out.add_scaled(&self.reduce_at(&prod, depth + 1)?, p.mul(c, s));
            }
        }
        Ok(out)
    }

    /// Normal form of an arbitrary linear combination of monomials.
    pub fn normalize(&self, x: &RingElement) -> Result<RingElement, RingError> {
        let mut out = self.zero();
        for (m, c) in x.terms() {
            out.add_scaled(&self.reduce(m)?, c);
        }
        Ok(out)
    }

    pub fn mul(&self, a: &RingElement, b: &RingElement) -> Result<RingElement, RingError> {
        let p = self.prime;
        let mut out = self.zero();
        for (ma, ca) in a.terms() {
            for (mb, cb) in b.terms() {
                if let Some((m, s)) = self.raw_product(ma, mb) {
                    out.add_scaled(&self.reduce(&m)?, p.mul(p.mul(ca, cb), s));
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, a: &RingElement, k: u32) -> Result<RingElement, RingError> {
        let mut out = self.one();
        for _ in 0..k {
            out = self.mul(&out, a)?;
        }
        Ok(out)
    }

    /// Checks that `e` is homogeneous of the given shape (or identically zero).
    pub fn check_shape(&self, e: &Expr, degree: u32, twist: i64, what: &str) -> Result<(), RingError> {
        match self.expr_shape(e)? {
            None => Ok(()),
            Some((d, t)) if d == degree && self.prime.twists_agree(t, twist) => Ok(()),
            Some((d, t)) => Err(RingError::NonHomogeneous(format!(
                "{what}: expected degree {degree} twist {twist}, found degree {d} twist {t}"
            ))),
        }
    }

    /// Degree and twist of an expression, inferred structurally; `None` for expressions that are
    /// syntactically zero.
    pub fn expr_shape(&self, e: &Expr) -> Result<Option<(u32, i64)>, RingError> {
        let p = self.prime;
        Ok(match e {
            Expr::Int(n) => (p.reduce(*n) != 0).then_some((0, 0)),
            Expr::Gen(name) => {
                let g = &self.gens[self.gen_index(name)?];
                Some((g.degree, g.twist))
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => match (self.expr_shape(a)?, self.expr_shape(b)?) {
                (None, s) | (s, None) => s,
                (Some(x), Some(y)) if x.0 == y.0 && p.twists_agree(x.1, y.1) => Some(x),
                (Some(x), Some(y)) => {
                    return Err(RingError::NonHomogeneous(format!(
                        "sum of degree {} twist {} and degree {} twist {}",
                        x.0, x.1, y.0, y.1
                    )))
                }
            },
            Expr::Neg(a) => self.expr_shape(a)?,
            Expr::Mul(a, b) => match (self.expr_shape(a)?, self.expr_shape(b)?) {
                (Some(x), Some(y)) => Some((x.0 + y.0, x.1 + y.1)),
                _ => None,
            },
            Expr::Pow(a, k) => match self.expr_shape(a)? {
                Some((d, t)) => Some((d * k, t * *k as i64)),
                None if *k == 0 => Some((0, 0)),
                None => None,
            },
            Expr::Apply(op, a) => {
                if op.is_zero() {
                    return Ok(None);
                }
                let d = op
                    .homogeneous_degree()
                    .ok_or_else(|| RingError::NonHomogeneous(format!("operation {op}")))?;
                self.expr_shape(a)?.map(|(x, t)| (x + d, t))
            }
        })
    }

    /// Evaluates an expression to normal form.
    pub fn eval(&self, e: &Expr) -> Result<RingElement, RingError> {
        self.eval_with(e, true)
    }

    fn eval_raw(&self, e: &Expr) -> Result<RingElement, RingError> {
        self.eval_with(e, false)
    }

    fn eval_with(&self, e: &Expr, reduce: bool) -> Result<RingElement, RingError> {
        let mul = |a: &RingElement, b: &RingElement| -> Result<RingElement, RingError> {
            if reduce {
                self.mul(a, b)
            } else {
                Ok(self.raw_mul(a, b))
            }
        };
        Ok(match e {
            Expr::Int(n) => self.constant(*n),
            Expr::Gen(name) => {
                let i = self.gen_index(name)?;
                if reduce {
                    self.gen_element(i)
                } else {
                    RingElement::monomial(self.prime, Monomial::generator(self.ngens(), i), 1)
                }
            }
            Expr::Add(a, b) => &self.eval_with(a, reduce)? + &self.eval_with(b, reduce)?,
            Expr::Sub(a, b) => &self.eval_with(a, reduce)? - &self.eval_with(b, reduce)?,
            Expr::Neg(a) => -&self.eval_with(a, reduce)?,
            Expr::Mul(a, b) => mul(&self.eval_with(a, reduce)?, &self.eval_with(b, reduce)?)?,
            Expr::Pow(a, k) => {
                let base = self.eval_with(a, reduce)?;
                let mut out = self.one();
                for _ in 0..*k {
                    out = mul(&out, &base)?;
                }
                out
            }
            Expr::Apply(op, a) => {
                if !reduce {
                    return Err(RingError::InvalidRule("operations are not allowed here".into()));
                }
                self.apply_element(op, &self.eval(a)?)?
            }
        })
    }

    /// The component `op(g)` for a single letter, using declared data and instability.
    fn component(&self, g: usize, letter: Letter) -> Result<RingElement, RingError> {
        let spec = &self.gens[g];
        let (k, top) = match letter {
            Letter::Sq(i) => (i, spec.degree),
            Letter::P(i) => (2 * i, spec.degree),
            Letter::Beta => (1, u32::MAX),
        };
        if k == 0 {
            return Ok(self.gen_element(g));
        }
        if k > top {
            return Ok(self.zero());
        }
        if let Some(v) = self.actions[g].get(&letter) {
            return Ok(v.clone());
        }
        if k == top {
            return self.pow(&self.gen_element(g), self.prime.get());
        }
        Err(RingError::MissingActionComponent { generator: spec.name.clone(), op: letter.to_string() })
    }

    /// The largest index `i` with `Sq^i(g)` or `P^i(g)` possibly nonzero.
    fn top_index(&self, g: usize) -> u32 {
        if self.prime.is_two() {
            self.gens[g].degree
        } else {
            self.gens[g].degree / 2
        }
    }

    /// One letter applied to one (not necessarily reduced) monomial via the Cartan formula.
    fn apply_letter_monomial(&self, letter: Letter, m: &Monomial) -> Result<RingElement, RingError> {
        let key = (m.clone(), letter);
        if let Some(hit) = self.op_cache.lock().expect("cache poisoned").get(&key) {
            return Ok(hit.clone());
        }
        let out = match letter {
            Letter::Sq(0) | Letter::P(0) => self.reduce(m)?,
            Letter::Sq(i) | Letter::P(i) => self.cartan(letter, i, m)?,
            Letter::Beta => self.derivation(m)?,
        };
        self.op_cache.lock().expect("cache poisoned").insert(key, out.clone());
        Ok(out)
    }

    fn cartan(&self, letter: Letter, i: u32, m: &Monomial) -> Result<RingElement, RingError> {
        let reach: u32 = m.0.iter().enumerate().map(|(g, &e)| e * self.top_index(g)).sum();
        if i > reach {
            return Ok(self.zero());
        }
        let make = |k: u32| match letter {
            Letter::Sq(_) => Letter::Sq(k),
            _ => Letter::P(k),
        };
        let idx = i as usize;
        let mut acc = vec![self.zero(); idx + 1];
        acc[0] = self.one();
        let mut span = 0usize;
        // Operation index still reachable by the factors not yet multiplied in.
        let mut ahead = reach as usize;
        for (g, &e) in m.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            let top = (self.top_index(g) as usize).min(idx);
            let mut comps: Vec<Option<RingElement>> = vec![None; top + 1];
            for _ in 0..e {
                ahead -= self.top_index(g) as usize;
                let new_span = (span + top).min(idx);
                let mut next = vec![self.zero(); idx + 1];
                for (a, x) in acc.iter().enumerate().take(span + 1) {
                    if x.is_zero() {
                        continue;
                    }
                    for b in 0..=top {
                        if a + b > idx || a + b + ahead < idx {
                            continue;
                        }
                        if comps[b].is_none() {
                            comps[b] = Some(self.component(g, make(b as u32))?);
                        }
                        let c = comps[b].as_ref().expect("filled");
                        if c.is_zero() {
                            continue;
                        }
                        let prod = self.mul(x, c)?;
                        next[a + b].add_scaled(&prod, 1);
                    }
                }
                acc = next;
                span = new_span;
            }
        }
        Ok(acc.swap_remove(idx))
    }

    /// `b` on a monomial: a derivation with the Koszul sign.
    fn derivation(&self, m: &Monomial) -> Result<RingElement, RingError> {
        let p = self.prime;
        let n = self.ngens();
        let mut out = self.zero();
        let mut prefix_degree = 0u32;
        for g in 0..n {
            let e = m.0[g];
            if e == 0 {
                continue;
            }
            let beta_g = self.component(g, Letter::Beta)?;
            if !beta_g.is_zero() {
                let mut before = Monomial::one(n);
                before.0[..g].copy_from_slice(&m.0[..g]);
                let mut after = Monomial::one(n);
                after.0[g + 1..].copy_from_slice(&m.0[g + 1..]);
                let mut inner = Monomial::one(n);
                inner.0[g] = e - 1;
                // b(g^e) = e g^{e-1} b(g) for even g; odd g has e = 1.
                let coef = p.reduce(e as i64);
                let sign = p.sign(prefix_degree as i64);
                let left = RingElement::monomial(p, before, 1);
                let mid = self.mul(&RingElement::monomial(p, inner, 1), &beta_g)?;
                let term = self.mul(&self.mul(&left, &mid)?, &RingElement::monomial(p, after, 1))?;
                out.add_scaled(&term, p.mul(coef, sign));
            }
            prefix_degree += e * self.gens[g].degree;
        }
        Ok(out)
    }

    pub fn apply_letter(&self, letter: Letter, x: &RingElement) -> Result<RingElement, RingError> {
        let letter = match letter {
            Letter::Beta if self.prime.is_two() => Letter::Sq(1),
            l => l,
        };
        let mut out = self.zero();
        for (m, c) in x.terms() {
            out.add_scaled(&self.apply_letter_monomial(letter, m)?, c);
        }
        Ok(out)
    }

    /// Applies a Steenrod word letter by letter, rightmost first.
    pub fn apply_word(&self, word: &SteenrodMonomial, x: &RingElement) -> Result<RingElement, RingError> {
        let mut cur = x.clone();
        for l in word.letters().into_iter().rev() {
            if cur.is_zero() {
                break;
            }
            cur = self.apply_letter(l, &cur)?;
        }
        Ok(cur)
    }

    pub fn apply_element(&self, op: &SteenrodElement, x: &RingElement) -> Result<RingElement, RingError> {
        if op.prime() != self.prime {
            return Err(RingError::MixedPrimes(op.prime(), self.prime));
        }
        let mut out = self.zero();
        for (w, c) in op.terms() {
            out.add_scaled(&self.apply_word(w, x)?, c);
        }
        Ok(out)
    }

    /// Same as `apply_element` but first rewrites the operation in the admissible basis.
    pub fn apply_normalized(&self, op: &SteenrodElement, x: &RingElement) -> Result<RingElement, RingError> {
        self.apply_element(&adem_normalize(op)?, x)
    }

    pub fn apply_op(&self, op: &SteenrodElement, x: &TwistedClass) -> Result<TwistedClass, RingError> {
        let value = self.apply_element(op, &x.value)?;
        let d = op.homogeneous_degree().unwrap_or(0);
        Ok(TwistedClass { value, degree: x.degree + d, twist: x.twist, shift: x.shift, codim: None })
    }

    /// `Sq = Sq^0 + Sq^1 + ...` (or `P` at odd l), summed up to operation index `max_index`.
    pub fn total_op(&self, x: &RingElement, max_index: u32) -> Result<RingElement, RingError> {
        let mut out = self.zero();
        for i in 0..=max_index {
            let l = if self.prime.is_two() { Letter::Sq(i) } else { Letter::P(i) };
            out.add_scaled(&self.apply_letter(l, x)?, 1);
        }
        Ok(out)
    }

    /// The twisted Bockstein `d_r(x) = b(x) + r w x` with `r` the twist of `x`.
    pub fn bockstein_twisted(&self, x: &TwistedClass) -> Result<TwistedClass, RingError> {
        let omega = self.omega()?;
        let mut value = self.apply_letter(Letter::Beta, &x.value)?;
        let r = self.prime.reduce(x.twist);
        value.add_scaled(&self.mul(&omega, &x.value)?, r);
        Ok(TwistedClass { value, degree: x.degree + 1, twist: x.twist, shift: x.shift, codim: None })
    }

    /// All normal-form monomials of the given degree whose twist agrees mod `l - 1`.
    pub fn basis_of_degree(&self, degree: u32, twist: i64) -> Vec<Monomial> {
        let n = self.ngens();
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        self.enumerate(0, degree, &mut cur, &mut out);
        out.retain(|m| self.prime.twists_agree(self.twist_of(m), twist));
        out.sort();
        out
    }

    /// Normal-form monomials of the given degree, any twist.
    pub fn monomials_of_degree(&self, degree: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.ngens()];
        self.enumerate(0, degree, &mut cur, &mut out);
        out.sort();
        out
    }

    fn enumerate(&self, g: usize, rem: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
        if g == self.ngens() {
            if rem == 0 {
                let m = Monomial(cur.clone());
                if self.filtration_of(&m) < 2 {
                    out.push(m);
                }
            }
            return;
        }
        let spec = &self.gens[g];
        let mut max = rem / spec.degree;
        if spec.odd {
            max = max.min(1);
        }
        if let Some(r) = self.rule_of[g] {
            max = max.min(self.rules[r].exponent - 1);
        }
        for e in 0..=max {
            cur[g] = e;
            self.enumerate(g + 1, rem - e * spec.degree, cur, out);
        }
        cur[g] = 0;
    }

    pub fn class(&self, value: RingElement, codim: Option<u32>) -> Result<TwistedClass, RingError> {
        let (degree, twist) = self
            .shape_of(&value)?
            .ok_or_else(|| RingError::NonHomogeneous("the zero class needs an explicit degree".into()))?;
        Ok(TwistedClass { value, degree, twist, shift: 0, codim })
    }

    pub fn class_with_shape(
        &self,
        value: RingElement,
        degree: u32,
        twist: i64,
        codim: Option<u32>,
    ) -> Result<TwistedClass, RingError> {
        for (m, _) in value.terms() {
            if self.degree_of(m) != degree || !self.prime.twists_agree(self.twist_of(m), twist) {
                return Err(RingError::NonHomogeneous(self.render(&value)));
            }
        }
        Ok(TwistedClass { value, degree, twist, shift: 0, codim })
    }

    pub fn multiply(&self, a: &TwistedClass, b: &TwistedClass) -> Result<TwistedClass, RingError> {
        Ok(TwistedClass {
            value: self.mul(&a.value, &b.value)?,
            degree: a.degree + b.degree,
            twist: a.twist + b.twist,
            shift: a.shift + b.shift,
            codim: a.codim.zip(b.codim).map(|(x, y)| x + y),
        })
    }

    pub fn render_monomial(&self, m: &Monomial) -> String {
        let parts: Vec<String> = m
            .0
            .iter()
            .zip(&self.gens)
            .filter(|(e, _)| **e > 0)
            .map(|(&e, g)| if e == 1 { g.name.clone() } else { format!("{}^{e}", g.name) })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join("*")
        }
    }

    /// Text form with monomials in descending lexicographic order of exponent vectors.
    pub fn render(&self, x: &RingElement) -> String {
        if x.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, c)) in x.terms().rev().enumerate() {
            let c = self.prime.signed_repr(c);
            let (neg, a) = (c < 0, c.unsigned_abs());
            match (i, neg) {
                (0, true) => s.push('-'),
                (0, false) => {}
                (_, true) => s.push_str(" - "),
                (_, false) => s.push_str(" + "),
            }
            let mono = self.render_monomial(m);
            match (a, m.is_one()) {
                (1, _) => s.push_str(&mono),
                (a, true) => s.push_str(&a.to_string()),
                (a, false) => s.push_str(&format!("{a}*{mono}")),
            }
        }
        s
    }

    /// Checks declared data against rules, instability, Adem relations and rule overlaps.
    pub fn check_action_consistency(&self, max_degree: u32) -> ConsistencyReport {
        let mut report = ConsistencyReport::default();
        let p = self.prime;
        let letters = |room: u32| -> Vec<Letter> {
            let mut v = Vec::new();
            if p.is_two() {
                v.extend((1..=room).map(Letter::Sq));
            } else {
                if room >= 1 {
                    v.push(Letter::Beta);
                }
                let q = 2 * (p.get() - 1);
                v.extend((1..=room / q).map(Letter::P));
            }
            v
        };

        for rule in &self.rules {
            let lhs = self.gen_power(rule.generator, rule.exponent);
            let d = self.degree_of(&lhs);
            for l in letters(max_degree.saturating_sub(d)) {
                let left = self.apply_letter_monomial(l, &lhs);
                let right = self.apply_letter(l, &rule.rhs);
                let what = format!("{l}({} = {})", self.render_monomial(&lhs), self.render(&rule.rhs));
                match (left, right) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (Ok(a), Ok(b)) => report.rule_conflicts.push(format!(
                        "{what}: {} vs {}",
                        self.render(&a),
                        self.render(&b)
                    )),
                    (Err(e), _) | (_, Err(e)) => report.errors.push(format!("{what}: {e}")),
                }
            }
        }

        for (g, spec) in self.gens.iter().enumerate() {
            if !spec.unstable {
                continue;
            }
            let top = if p.is_two() {
                Some(Letter::Sq(spec.degree))
            } else {
                (spec.degree % 2 == 0).then_some(Letter::P(spec.degree / 2))
            };
            let Some(top) = top else { continue };
            let declared = self.component(g, top);
            let square = self.pow(&self.gen_element(g), p.get());
            match (declared, square) {
                (Ok(a), Ok(b)) if a == b => {}
                (Ok(a), Ok(b)) => report.instability.push(format!(
                    "{top}({}) = {} but {}^{} = {}",
                    spec.name,
                    self.render(&a),
                    spec.name,
                    p.get(),
                    self.render(&b)
                )),
                (Err(e), _) | (_, Err(e)) => report.errors.push(format!("{top}({}): {e}", spec.name)),
            }
        }

        for (g, spec) in self.gens.iter().enumerate() {
            let room = max_degree.saturating_sub(spec.degree);
            let x = self.gen_element(g);
            for word in inadmissible_pairs(p, room) {
                let lhs = self.apply_word(&word, &x);
                let rhs = adem_normalize(&SteenrodElement::from_monomial(word.clone()))
                    .map_err(RingError::from)
                    .and_then(|op| self.apply_element(&op, &x));
                match (lhs, rhs) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (Ok(a), Ok(b)) => report.adem_violations.push(format!(
                        "{word} on {}: {} vs {}",
                        spec.name,
                        self.render(&a),
                        self.render(&b)
                    )),
                    (Err(e), _) | (_, Err(e)) => report.errors.push(format!("{word} on {}: {e}", spec.name)),
                }
            }
            if !p.is_two() && room >= 2 {
                match self.apply_letter(Letter::Beta, &x).and_then(|y| self.apply_letter(Letter::Beta, &y)) {
                    Ok(v) if v.is_zero() => {}
                    Ok(v) => report.adem_violations.push(format!("b b on {}: {}", spec.name, self.render(&v))),
                    Err(e) => report.errors.push(format!("b b on {}: {e}", spec.name)),
                }
            }
        }

        for (i, r) in self.rules.iter().enumerate() {
            for s in &self.rules[i + 1..] {
                let mut m = Monomial::one(self.ngens());
                m.0[r.generator] = r.exponent;
                m.0[s.generator] = s.exponent;
                if self.degree_of(&m) > max_degree || self.filtration_of(&m) >= 2 {
                    continue;
                }
                match (self.rewrite_with(&m, r, 0), self.rewrite_with(&m, s, 0)) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (Ok(a), Ok(b)) => report.overlaps.push(format!(
                        "{}: {} vs {}",
                        self.render_monomial(&m),
                        self.render(&a),
                        self.render(&b)
                    )),
                    (Err(e), _) | (_, Err(e)) => report.errors.push(format!("{}: {e}", self.render_monomial(&m))),
                }
            }
        }
        report
    }
}

/// Inadmissible two-power words (`Sq^a Sq^b`, `P^a P^b`, `P^a b P^b`) of degree at most `room`.
fn inadmissible_pairs(p: Prime, room: u32) -> Vec<SteenrodMonomial> {
    let mut out = Vec::new();
    if p.is_two() {
        for b in 1..=room {
            for a in 1..(2 * b).min(room + 1) {
                if a + b <= room {
                    out.push(SteenrodMonomial::sq(&[a, b]));
                }
            }
        }
        return out;
    }
    let l = p.get();
    let q = 2 * (l - 1);
    for b in 1..=room / q {
        for a in 1..=l * b {
            for e in 0..=1u32 {
                let deg = q * (a + b) + e;
                let inadmissible = if e == 0 { a < l * b } else { a <= l * b };
                if deg <= room && inadmissible {
                    out.push(SteenrodMonomial::from_seq(p, vec![0, a, e, b, 0]).expect("valid word"));
                }
            }
        }
    }
    out
}

/// Findings of [`RingPresentation::check_action_consistency`]; each entry is a readable description.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsistencyReport {
    pub rule_conflicts: Vec<String>,
    pub instability: Vec<String>,
    pub adem_violations: Vec<String>,
    pub overlaps: Vec<String>,
    pub errors: Vec<String>,
}

impl ConsistencyReport {
    pub fn is_consistent(&self) -> bool {
        self.rule_conflicts.is_empty()
            && self.instability.is_empty()
            && self.adem_violations.is_empty()
            && self.overlaps.is_empty()
            && self.errors.is_empty()
    }
}

impl fmt::Display for ConsistencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_consistent() {
            return write!(f, "consistent");
        }
        let sections = [
            ("rule conflict", &self.rule_conflicts),
            ("instability", &self.instability),
            ("Adem relation", &self.adem_violations),
            ("rule overlap", &self.overlaps),
            ("error", &self.errors),
        ];
        for (label, items) in sections {
            for it in items {
                writeln!(f, "{label}: {it}")?;
            }
        }
        Ok(())
    }
}

/// A homogeneous class with its degree, Tate twist and optional codimension tag.
///
/// `shift` is the part of the twist carried by a degree-0 coefficient class (multiplication by a
/// generator of `H^0(mu^{(x) r})`), so the monomials of `value` have twist `twist - shift`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedClass {
    value: RingElement,
    degree: u32,
    twist: i64,
    shift: i64,
    codim: Option<u32>,
}

impl TwistedClass {
    pub fn value(&self) -> &RingElement {
        &self.value
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn twist(&self) -> i64 {
        self.twist
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn codim(&self) -> Option<u32> {
        self.codim
    }

    pub fn with_codim(mut self, c: Option<u32>) -> Self {
        self.codim = c;
        self
    }

    /// Multiplies by a degree-0 class of twist `r`: the value is unchanged, the twist moves by `r`.
    pub fn twisted_by(mut self, r: i64) -> Self {
        self.twist += r;
        self.shift += r;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }
}
