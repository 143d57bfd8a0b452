//! The mod-l Steenrod algebra in the admissible (Serre–Cartan) basis.
//!
//! A monomial is stored in the flat form used throughout this crate:
//!
//! * for `l = 2`, the sequence `(i_1, ..., i_k)` meaning `Sq^{i_1} ... Sq^{i_k}`;
//! * for odd `l`, the alternating sequence `(e_0, s_1, e_1, ..., s_k, e_k)`
//!   meaning `b^{e_0} P^{s_1} b^{e_1} ... P^{s_k} b^{e_k}`, with `b` the Bockstein.
//!
//! Composition is left to right as written, so the rightmost letter acts first.
//!
//! Excess follows the usual conventions. For `l = 2` it is
//! `i_1 - i_2 - ... - i_k`. For odd `l` it is `2 s_1 + e_0 - |b^{e_1} P^{s_2} ... b^{e_k}|`,
//! which is `e_0` when the word has no reduced power.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Mutex, OnceLock};

use thiserror::Error;

use crate::field::{binom_mod_ell, InvalidPrime, Prime};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SteenrodError {
    #[error("cannot combine operations at primes {0} and {1}")]
    MixedPrimes(Prime, Prime),
    #[error("monomial {0} is not admissible")]
    NotAdmissible(String),
    #[error("Adem normalization exceeded its step bound (implementation bug)")]
    InternalNonTermination,
    #[error("invalid operation word: {0}")]
    InvalidWord(String),
    #[error("parse error at column {col}: {msg}")]
    Parse { col: usize, msg: String },
    #[error(transparent)]
    Prime(#[from] InvalidPrime),
}

/// One letter of an operation word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Letter {
    Sq(u32),
    P(u32),
    Beta,
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Letter::Sq(i) => write!(f, "Sq^{i}"),
            Letter::P(i) => write!(f, "P^{i}"),
            Letter::Beta => write!(f, "b"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SteenrodMonomial {
    prime: Prime,
    seq: Vec<u32>,
}

impl SteenrodMonomial {
    pub fn identity(prime: Prime) -> Self {
        let seq = if prime.is_two() { Vec::new() } else { vec![0] };
        SteenrodMonomial { prime, seq }
    }

    /// `Sq^{i_1} ... Sq^{i_k}`; zero entries are dropped since `Sq^0 = 1`.
    pub fn sq(squares: &[u32]) -> Self {
        SteenrodMonomial {
            prime: Prime::TWO,
            seq: squares.iter().copied().filter(|&i| i > 0).collect(),
        }
    }

    /// Builds a monomial from the flat encoding, validating it.
    pub fn from_seq(prime: Prime, seq: Vec<u32>) -> Result<Self, SteenrodError> {
        if prime.is_two() {
            if seq.contains(&0) {
                return Err(SteenrodError::InvalidWord("squares must be positive".into()));
            }
        } else {
            if seq.len() % 2 == 0 {
                return Err(SteenrodError::InvalidWord(
                    "odd-prime words alternate Bocksteins and powers".into(),
                ));
            }
            for (i, &v) in seq.iter().enumerate() {
                if i % 2 == 0 && v > 1 {
                    return Err(SteenrodError::InvalidWord("Bockstein exponents are 0 or 1".into()));
                }
                if i % 2 == 1 && v == 0 {
                    return Err(SteenrodError::InvalidWord("powers must be positive".into()));
                }
            }
        }
        Ok(SteenrodMonomial { prime, seq })
    }

    /// Assembles a word from letters. Returns `Ok(None)` when the word is zero
    /// because two Bocksteins became adjacent.
    pub fn from_letters(prime: Prime, letters: &[Letter]) -> Result<Option<Self>, SteenrodError> {
        if prime.is_two() {
            let mut seq = Vec::with_capacity(letters.len());
            for l in letters {
                match *l {
                    Letter::Sq(0) => {}
                    Letter::Sq(i) => seq.push(i),
                    Letter::Beta => seq.push(1),
                    Letter::P(_) => {
                        return Err(SteenrodError::InvalidWord("P^i is not defined at l = 2".into()))
                    }
                }
            }
            return Ok(Some(SteenrodMonomial { prime, seq }));
        }
        let mut seq = vec![0u32];
        for l in letters {
            match *l {
                Letter::P(0) => {}
                Letter::P(i) => {
                    seq.push(i);
                    seq.push(0);
                }
                Letter::Beta => {
                    let last = seq.last_mut().expect("non-empty");
                    if *last == 1 {
                        return Ok(None);
                    }
                    *last = 1;
                }
                Letter::Sq(_) => {
                    return Err(SteenrodError::InvalidWord(format!(
                        "Sq^i is not defined at l = {prime}"
                    )))
                }
            }
        }
        Ok(Some(SteenrodMonomial { prime, seq }))
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn seq(&self) -> &[u32] {
        &self.seq
    }

    pub fn is_identity(&self) -> bool {
        self.seq.iter().all(|&v| v == 0)
    }

    /// Letters left to right. The identity has no letters.
    pub fn letters(&self) -> Vec<Letter> {
        letters_of(self.prime, &self.seq, 0)
    }

    /// Number of letters, counting each Bockstein.
    pub fn length(&self) -> usize {
        self.letters().len()
    }

    pub fn degree(&self) -> u32 {
        if self.prime.is_two() {
            return self.seq.iter().sum();
        }
        let q = 2 * (self.prime.get() - 1);
        self.seq
            .iter()
            .enumerate()
            .map(|(i, &v)| if i % 2 == 0 { v } else { q * v })
            .sum()
    }

    pub fn is_admissible(&self) -> bool {
        self.first_inadmissible().is_none()
    }

    /// Index in `seq` of the left entry of the leftmost inadmissible pair.
    fn first_inadmissible(&self) -> Option<usize> {
        let s = &self.seq;
        if self.prime.is_two() {
            return (0..s.len().saturating_sub(1)).find(|&j| s[j] < 2 * s[j + 1]);
        }
        let p = self.prime.get();
        (1..s.len().saturating_sub(2))
            .step_by(2)
            .find(|&j| s[j] < p * s[j + 2] + s[j + 1])
    }

    pub fn excess(&self) -> Result<u32, SteenrodError> {
        if !self.is_admissible() {
            return Err(SteenrodError::NotAdmissible(self.to_string()));
        }
        let s = &self.seq;
        if self.prime.is_two() {
            return Ok(match s.split_first() {
                None => 0,
                Some((first, rest)) => first - rest.iter().sum::<u32>(),
            });
        }
        if s.len() == 1 {
            return Ok(s[0]);
        }
        let tail = SteenrodMonomial { prime: self.prime, seq: s[2..].to_vec() };
        Ok(2 * s[1] + s[0] - tail.degree())
    }

    /// Whether the operation is nonzero on the fundamental class of an
    /// Eilenberg–MacLane space in degree `n`, i.e. `excess <= n`.
    pub fn acts_nontrivially_on_class_of_degree(&self, n: u32) -> Result<bool, SteenrodError> {
        Ok(self.excess()? <= n)
    }
}

fn letters_of(prime: Prime, seq: &[u32], start: usize) -> Vec<Letter> {
    let mut out = Vec::with_capacity(seq.len());
    for (i, &v) in seq.iter().enumerate() {
        if prime.is_two() {
            out.push(Letter::Sq(v));
        } else if (start + i) % 2 == 0 {
            if v == 1 {
                out.push(Letter::Beta);
            }
        } else {
            out.push(Letter::P(v));
        }
    }
    out
}

impl fmt::Display for SteenrodMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let letters = self.letters();
        if letters.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in letters.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// A formal F_l-linear combination of monomials. Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SteenrodElement {
    prime: Prime,
    terms: BTreeMap<SteenrodMonomial, u32>,
}

impl SteenrodElement {
    pub fn zero(prime: Prime) -> Self {
        SteenrodElement { prime, terms: BTreeMap::new() }
    }

    pub fn identity(prime: Prime) -> Self {
        Self::from_monomial(SteenrodMonomial::identity(prime))
    }

    pub fn from_monomial(m: SteenrodMonomial) -> Self {
        let prime = m.prime;
        let mut terms = BTreeMap::new();
        terms.insert(m, 1);
        SteenrodElement { prime, terms }
    }

    pub fn sq(i: u32) -> Self {
        Self::from_monomial(SteenrodMonomial::sq(&[i]))
    }

    pub fn from_letters(prime: Prime, letters: &[Letter]) -> Result<Self, SteenrodError> {
        Ok(match SteenrodMonomial::from_letters(prime, letters)? {
            Some(m) => Self::from_monomial(m),
            None => Self::zero(prime),
        })
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&SteenrodMonomial, u32)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &SteenrodMonomial) -> u32 {
        self.terms.get(m).copied().unwrap_or(0)
    }

    /// `Some(d)` when every term has degree `d`; the zero element is homogeneous of every degree
    /// and reports `None`.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut degs = self.terms.keys().map(SteenrodMonomial::degree);
        let d = degs.next()?;
        degs.all(|e| e == d).then_some(d)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.homogeneous_degree().is_some()
    }

    pub fn add_term(&mut self, m: SteenrodMonomial, c: u32) {
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

    pub fn add(&self, other: &Self) -> Result<Self, SteenrodError> {
        check_primes(self.prime, other.prime)?;
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        Ok(out)
    }

    pub fn scale(&self, c: u32) -> Self {
        let mut out = Self::zero(self.prime);
        for (m, v) in self.terms() {
            out.add_term(m.clone(), self.prime.mul(v, c));
        }
        out
    }

    pub fn is_admissible_sum(&self) -> bool {
        self.terms.keys().all(SteenrodMonomial::is_admissible)
    }
}

fn check_primes(a: Prime, b: Prime) -> Result<(), SteenrodError> {
    if a != b {
        return Err(SteenrodError::MixedPrimes(a, b));
    }
    Ok(())
}

// Pair rewrites performed by a single top-level normalization before giving up.
const STEP_BOUND: usize = 5_000_000;

type NormalForm = Vec<(SteenrodMonomial, u32)>;

fn cache() -> &'static Mutex<HashMap<SteenrodMonomial, NormalForm>> {
    static CACHE: OnceLock<Mutex<HashMap<SteenrodMonomial, NormalForm>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Rewrites `e` into a sum of admissible monomials using the Adem relations.
pub fn adem_normalize(e: &SteenrodElement) -> Result<SteenrodElement, SteenrodError> {
    let mut out = SteenrodElement::zero(e.prime);
    let mut steps = 0usize;
    for (m, c) in e.terms() {
        for (n, d) in normalize_monomial(m, &mut steps)? {
            out.add_term(n, e.prime.mul(c, d));
        }
    }
    Ok(out)
}

fn normalize_monomial(m: &SteenrodMonomial, steps: &mut usize) -> Result<NormalForm, SteenrodError> {
    if m.is_admissible() {
        return Ok(vec![(m.clone(), 1)]);
    }
    if let Some(hit) = cache().lock().expect("cache poisoned").get(m) {
        return Ok(hit.clone());
    }
    *steps += 1;
    if *steps > STEP_BOUND {
        return Err(SteenrodError::InternalNonTermination);
    }
    let p = m.prime;
    let j = m.first_inadmissible().expect("inadmissible");
    let (prefix, replacements, suffix) = if p.is_two() {
        (
            letters_of(p, &m.seq[..j], 0),
            adem_pair_two(m.seq[j], m.seq[j + 1]),
            letters_of(p, &m.seq[j + 2..], j + 2),
        )
    } else {
        (
            letters_of(p, &m.seq[..j], 0),
            adem_pair_odd(p, m.seq[j], m.seq[j + 1] == 1, m.seq[j + 2]),
            letters_of(p, &m.seq[j + 3..], j + 3),
        )
    };

    let mut acc: BTreeMap<SteenrodMonomial, u32> = BTreeMap::new();
    for (c, mid) in replacements {
        let mut word = prefix.clone();
        word.extend(mid);
        word.extend_from_slice(&suffix);
        let Some(next) = SteenrodMonomial::from_letters(p, &word)? else {
            continue;
        };
        for (n, d) in normalize_monomial(&next, steps)? {
            let e = acc.entry(n).or_insert(0);
            *e = p.add(*e, p.mul(c, d));
        }
    }
    let result: NormalForm = acc.into_iter().filter(|&(_, c)| c != 0).collect();
    cache().lock().expect("cache poisoned").insert(m.clone(), result.clone());
    Ok(result)
}

/// `Sq^a Sq^b` for `a < 2b`.
fn adem_pair_two(a: u32, b: u32) -> Vec<(u32, Vec<Letter>)> {
    let p = Prime::TWO;
    (0..=a / 2)
        .filter_map(|j| {
            let c = binom_mod_ell(b as i64 - 1 - j as i64, (a - 2 * j) as u64, p);
            (c != 0).then(|| (c, vec![Letter::Sq(a + b - j), Letter::Sq(j)]))
        })
        .collect()
}

/// `P^a P^b` for `a < lb`, or `P^a b P^b` for `a <= lb`.
fn adem_pair_odd(p: Prime, a: u32, beta: bool, b: u32) -> Vec<(u32, Vec<Letter>)> {
    let l = p.get() as i64;
    let (a, b) = (a as i64, b as i64);
    let mut out = Vec::new();
    if !beta {
        for j in 0..=a / l {
            let c = binom_mod_ell((l - 1) * (b - j) - 1, (a - l * j) as u64, p);
            let c = p.mul(p.sign(a + j), c);
            if c != 0 {
                out.push((c, vec![Letter::P((a + b - j) as u32), Letter::P(j as u32)]));
            }
        }
        return out;
    }
    for j in 0..=a / l {
        let c = binom_mod_ell((l - 1) * (b - j), (a - l * j) as u64, p);
        let c = p.mul(p.sign(a + j), c);
        if c != 0 {
            out.push((
                c,
                vec![Letter::Beta, Letter::P((a + b - j) as u32), Letter::P(j as u32)],
            ));
        }
    }
    if a >= 1 {
        for j in 0..=(a - 1) / l {
            let c = binom_mod_ell((l - 1) * (b - j) - 1, (a - l * j - 1) as u64, p);
            let c = p.mul(p.sign(a + j + 1), c);
            if c != 0 {
                out.push((
                    c,
                    vec![Letter::P((a + b - j) as u32), Letter::Beta, Letter::P(j as u32)],
                ));
            }
        }
    }
    out
}

/// Composition `a ∘ b`, normalized.
pub fn multiply(a: &SteenrodElement, b: &SteenrodElement) -> Result<SteenrodElement, SteenrodError> {
    check_primes(a.prime, b.prime)?;
    let p = a.prime;
    let mut raw = SteenrodElement::zero(p);
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            let mut word = ma.letters();
            word.extend(mb.letters());
            if let Some(m) = SteenrodMonomial::from_letters(p, &word)? {
                raw.add_term(m, p.mul(ca, cb));
            }
        }
    }
    adem_normalize(&raw)
}

/// All admissible monomials of the given degree, in lexicographic order of the flat encoding.
pub fn admissible_basis(prime: Prime, degree: u32) -> Vec<SteenrodMonomial> {
    let mut out = Vec::new();
    if prime.is_two() {
        fn rec(rem: u32, max: u32, seq: &mut Vec<u32>, out: &mut Vec<SteenrodMonomial>) {
            if rem == 0 {
                out.push(SteenrodMonomial { prime: Prime::TWO, seq: seq.clone() });
                return;
            }
            for i in 1..=rem.min(max) {
                seq.push(i);
                rec(rem - i, i / 2, seq, out);
                seq.pop();
            }
        }
        rec(degree, degree, &mut Vec::new(), &mut out);
    } else {
        fn rec(p: Prime, rem: u32, bound: Option<u32>, seq: &mut Vec<u32>, out: &mut Vec<SteenrodMonomial>) {
            if rem == 0 {
                out.push(SteenrodMonomial { prime: p, seq: seq.clone() });
            }
            let q = 2 * (p.get() - 1);
            let max_s = bound.unwrap_or(rem / q).min(rem / q);
            for s in 1..=max_s {
                for e in 0..=1u32 {
                    if q * s + e > rem || s < e {
                        continue;
                    }
                    seq.push(s);
                    seq.push(e);
                    rec(p, rem - q * s - e, Some((s - e) / p.get()), seq, out);
                    seq.pop();
                    seq.pop();
                }
            }
        }
        for e0 in 0..=1u32.min(degree) {
            rec(prime, degree - e0, None, &mut vec![e0], &mut out);
        }
    }
    out.sort();
    out
}

impl fmt::Display for SteenrodElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match (*c, m.is_identity()) {
                (1, _) => write!(f, "{m}")?,
                (c, true) => write!(f, "{c}")?,
                (c, false) => write!(f, "{c} {m}")?,
            }
        }
        Ok(())
    }
}

/// Parses words such as `Sq^3 Sq^1`, `b P^1 b`, `2 P^2 + P^1 b`.
///
/// Juxtaposition is composition, `+`/`-` form sums and a leading integer is a
/// coefficient. A bare integer is a multiple of the identity. At `l = 2` the
/// letter `b` is read as `Sq^1`.
pub fn parse_element(prime: Prime, src: &str) -> Result<SteenrodElement, SteenrodError> {
    let mut p = WordParser { src: src.as_bytes(), pos: 0 };
    let out = p.element(prime)?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(out)
}

struct WordParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl WordParser<'_> {
    fn err(&self, msg: &str) -> SteenrodError {
        SteenrodError::Parse { col: self.pos + 1, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn int(&mut self) -> Option<u64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()?.parse().ok()
    }

    fn element(&mut self, prime: Prime) -> Result<SteenrodElement, SteenrodError> {
        let mut acc = SteenrodElement::zero(prime);
        let mut negate = false;
        self.skip_ws();
        if self.peek() == Some(b'-') {
            negate = true;
            self.pos += 1;
        }
        loop {
            let t = self.term(prime)?;
            let t = if negate { t.scale(prime.get() - 1) } else { t };
            acc = acc.add(&t)?;
            self.skip_ws();
            match self.peek() {
                Some(b'+') => negate = false,
                Some(b'-') => negate = true,
                _ => break,
            }
            self.pos += 1;
        }
        Ok(acc)
    }

    fn term(&mut self, prime: Prime) -> Result<SteenrodElement, SteenrodError> {
        self.skip_ws();
        let explicit = self.int();
        let coef = match explicit {
            Some(n) => (n % prime.get() as u64) as u32,
            None => 1,
        };
        let mut letters = Vec::new();
        loop {
            self.skip_ws();
            let rest = &self.src[self.pos..];
            if rest.starts_with(b"Sq") {
                self.pos += 2;
                letters.push(Letter::Sq(self.exponent()?));
            } else if rest.starts_with(b"P") {
                self.pos += 1;
                letters.push(Letter::P(self.exponent()?));
            } else if rest.starts_with(b"b") && !rest.get(1).is_some_and(|c| c.is_ascii_alphanumeric()) {
                self.pos += 1;
                letters.push(if prime.is_two() { Letter::Sq(1) } else { Letter::Beta });
            } else if rest.starts_with("β".as_bytes()) {
                self.pos += "β".len();
                letters.push(if prime.is_two() { Letter::Sq(1) } else { Letter::Beta });
            } else {
                break;
            }
        }
        if letters.is_empty() && explicit.is_none() {
            return Err(self.err("expected an operation letter or coefficient"));
        }
        let word = SteenrodElement::from_letters(prime, &letters)
            .map_err(|e| self.err(&e.to_string()))?;
        Ok(word.scale(coef))
    }

    fn exponent(&mut self) -> Result<u32, SteenrodError> {
        if self.peek() == Some(b'^') {
            self.pos += 1;
        }
        let n = self.int().ok_or_else(|| self.err("expected an exponent"))?;
        u32::try_from(n).map_err(|_| self.err("exponent too large"))
    }
}
