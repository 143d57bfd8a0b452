//! Characteristic classes of virtual bundles through formal Chern roots.
//!
//! Total classes are inhomogeneous ring elements truncated above a fixed
//! cohomological degree. Products over Chern roots are expanded in an auxiliary
//! ring of formal roots and rewritten in elementary symmetric polynomials, which
//! are then replaced by the Chern classes of the bundle.

use thiserror::Error;

use crate::field::{binom_mod_ell, Prime};
use crate::ring::{Expr, GeneratorSpec, Monomial, PresentationBuilder, RingElement, RingError, RingPresentation, TwistedClass};
use crate::steenrod::Letter;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharClassError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("invalid bundle: {0}")]
    InvalidBundle(String),
    #[error("not a projective bundle scenario: {0}")]
    NotProjectiveBundleScenario(String),
    #[error("series with non-invertible constant term")]
    NotInvertible,
    #[error("omega is required at l = 2")]
    OmegaRequired,
    #[error("class carries no codimension tag")]
    MissingCodim,
    #[error("root expansion is not symmetric (internal error)")]
    NotSymmetric,
}

/// `[E] - [F]` over a base ring, described by the Chern classes `c_1, c_2, ...` of each side.
///
/// A side of rank larger than its list of Chern classes has trivial summands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualBundle {
    pub rank: i64,
    pub numerator: Vec<RingElement>,
    pub denominator: Vec<RingElement>,
    pub truncation: u32,
}

impl VirtualBundle {
    pub fn new(
        base: &RingPresentation,
        rank: i64,
        numerator: Vec<RingElement>,
        denominator: Vec<RingElement>,
        truncation: u32,
    ) -> Result<Self, CharClassError> {
        for (side, list) in [("c", &numerator), ("denom", &denominator)] {
            for (j, c) in list.iter().enumerate() {
                let j = j as u32 + 1;
                if let Some((d, t)) = base.shape_of(c)? {
                    if d != 2 * j || !base.prime().twists_agree(t, j as i64) {
                        return Err(CharClassError::InvalidBundle(format!(
                            "{side}_{j} has degree {d} twist {t}, expected degree {} twist {j}",
                            2 * j
                        )));
                    }
                }
            }
        }
        if rank + (denominator.len() as i64) < numerator.len() as i64 {
            return Err(CharClassError::InvalidBundle(format!(
                "rank {rank} is too small for {} Chern classes",
                numerator.len()
            )));
        }
        Ok(VirtualBundle { rank, numerator, denominator, truncation })
    }

    pub fn line(base: &RingPresentation, c1: RingElement, truncation: u32) -> Result<Self, CharClassError> {
        Self::new(base, 1, vec![c1], Vec::new(), truncation)
    }

    pub fn trivial(rank: i64, truncation: u32) -> Self {
        VirtualBundle { rank, numerator: Vec::new(), denominator: Vec::new(), truncation }
    }

    /// Total Chern class of the numerator, as a truncated series.
    pub fn total_chern(&self, base: &RingPresentation) -> RingElement {
        let mut out = base.one();
        for c in &self.numerator {
            out.add_scaled(c, 1);
        }
        truncate(base, &out, self.truncation)
    }

    fn numerator_rank(&self) -> i64 {
        self.rank + self.denominator.len() as i64
    }
}

/// Drops every term of degree above `d`.
pub fn truncate(ring: &RingPresentation, x: &RingElement, d: u32) -> RingElement {
    let mut out = ring.zero();
    for (m, c) in x.terms() {
        if ring.degree_of(m) <= d {
            out.add_term(m.clone(), c);
        }
    }
    out
}

/// The degree-`d` part of `x`.
pub fn component(ring: &RingPresentation, x: &RingElement, d: u32) -> RingElement {
    let mut out = ring.zero();
    for (m, c) in x.terms() {
        if ring.degree_of(m) == d {
            out.add_term(m.clone(), c);
        }
    }
    out
}

pub fn truncated_mul(ring: &RingPresentation, a: &RingElement, b: &RingElement, d: u32) -> Result<RingElement, RingError> {
    Ok(truncate(ring, &ring.mul(&truncate(ring, a, d), &truncate(ring, b, d))?, d))
}

/// Inverse of a series whose degree-0 part is a unit, modulo degrees above `d`.
pub fn series_inverse(ring: &RingPresentation, x: &RingElement, d: u32) -> Result<RingElement, CharClassError> {
    let p = ring.prime();
    let c0 = x.coefficient(&Monomial::one(ring.ngens()));
    let inv0 = p.inv(c0).ok_or(CharClassError::NotInvertible)?;
    // x = c0 (1 + n) with n of positive degree; 1/(1+n) = sum of (-n)^k.
    let mut minus_n = x.scale(p.neg(inv0));
    minus_n.add_term(Monomial::one(ring.ngens()), 1);
    let mut out = ring.one();
    let mut power = ring.one();
    for _ in 0..d {
        power = truncated_mul(ring, &power, &minus_n, d)?;
        if power.is_zero() {
            break;
        }
        out.add_scaled(&power, 1);
    }
    Ok(out.scale(inv0))
}

/// `x^e` for any integer `e`, negative powers through [`series_inverse`].
pub fn series_pow(ring: &RingPresentation, x: &RingElement, e: i64, d: u32) -> Result<RingElement, CharClassError> {
    let base = if e < 0 { series_inverse(ring, x, d)? } else { truncate(ring, x, d) };
    let mut out = ring.one();
    for _ in 0..e.unsigned_abs() {
        out = truncated_mul(ring, &out, &base, d)?;
    }
    Ok(out)
}

/// Auxiliary ring with an optional `o` (degree 1) followed by `n` formal roots (degree 2, twist 1).
struct RootRing {
    ring: RingPresentation,
    extras: usize,
    n: usize,
}

impl RootRing {
    fn new(prime: Prime, with_omega: bool, n: usize) -> Result<Self, RingError> {
        let mut b = PresentationBuilder::new(prime);
        if with_omega {
            b.generator(GeneratorSpec::new("o", 1));
        }
        for i in 1..=n {
            b.generator(GeneratorSpec::new(&format!("r{i}"), 2).twist(1));
        }
        Ok(RootRing { ring: b.build()?, extras: with_omega as usize, n })
    }

    fn root(&self, i: usize) -> RingElement {
        self.ring.gen_element(self.extras + i)
    }

    fn omega(&self) -> RingElement {
        self.ring.gen_element(0)
    }

    /// `e_1, ..., e_n` in the roots.
    fn elementary(&self) -> Result<Vec<RingElement>, RingError> {
        let mut total = self.ring.one();
        for i in 0..self.n {
            total = self.ring.mul(&total, &(&self.ring.one() + &self.root(i)))?;
        }
        Ok((1..=self.n as u32).map(|j| component(&self.ring, &total, 2 * j)).collect())
    }

    /// Rewrites a symmetric polynomial in the roots (coefficients may involve `o`) as
    /// `sum c * o^a * e_1^{b_1} ... e_n^{b_n}`.
    fn symmetric_reduce(&self, f: &RingElement) -> Result<Vec<(u32, Vec<u32>, u32)>, CharClassError> {
        let e = self.elementary()?;
        let r = &self.ring;
        let mut f = f.clone();
        let mut out = Vec::new();
        loop {
            let Some((m, c)) = f.terms().next_back().map(|(m, c)| (m.clone(), c)) else {
                break;
            };
            let lam = &m.0[self.extras..];
            if !lam.windows(2).all(|w| w[0] >= w[1]) {
                return Err(CharClassError::NotSymmetric);
            }
            let a = if self.extras > 0 { m.0[0] } else { 0 };
            let b: Vec<u32> = (0..self.n).map(|j| lam[j] - lam.get(j + 1).copied().unwrap_or(0)).collect();
            let mut prod = if self.extras > 0 { r.pow(&self.omega(), a)? } else { r.one() };
            for (j, &bj) in b.iter().enumerate() {
                prod = r.mul(&prod, &r.pow(&e[j], bj)?)?;
            }
            f.add_scaled(&prod, r.prime().neg(c));
            out.push((a, b, c));
        }
        Ok(out)
    }
}

/// Evaluates `sum c * omega^a * prod c_j^{b_j}` in the base, dropping terms above degree `d`.
fn substitute(
    base: &RingPresentation,
    terms: &[(u32, Vec<u32>, u32)],
    omega: Option<&RingElement>,
    chern: &[RingElement],
    d: u32,
) -> Result<RingElement, RingError> {
    let mut out = base.zero();
    for (a, b, c) in terms {
        let deg = a + b.iter().enumerate().map(|(j, bj)| 2 * (j as u32 + 1) * bj).sum::<u32>();
        if deg > d {
            continue;
        }
        let mut prod = match omega {
            Some(w) => base.pow(w, *a)?,
            None if *a == 0 => base.one(),
            None => base.zero(),
        };
        for (j, &bj) in b.iter().enumerate() {
            if bj > 0 {
                let cj = chern.get(j).cloned().unwrap_or_else(|| base.zero());
                prod = base.mul(&prod, &base.pow(&cj, bj)?)?;
            }
        }
        out.add_scaled(&prod, *c);
    }
    Ok(truncate(base, &out, d))
}

/// Roots needed to express a degree-`d` truncation faithfully for `k` listed Chern classes.
fn roots_needed(k: usize, d: u32) -> usize {
    k.min(d as usize / 2)
}

/// `prod (1 + r_i^{l-1})` over one side of a bundle.
fn brosnan_side(base: &RingPresentation, chern: &[RingElement], d: u32) -> Result<RingElement, CharClassError> {
    let p = base.prime();
    let n = roots_needed(chern.len(), d);
    let aux = RootRing::new(p, false, n)?;
    let r = &aux.ring;
    let mut prod = r.one();
    for i in 0..n {
        let factor = &r.one() + &r.pow(&aux.root(i), p.get() - 1)?;
        prod = truncated_mul(r, &prod, &factor, d)?;
    }
    let terms = aux.symmetric_reduce(&prod)?;
    Ok(substitute(base, &terms, None, chern, d)?)
}

/// `prod (1 + o + r_i)` over the listed roots, times `(1 + o)` per trivial summand.
fn etale_side_two(
    base: &RingPresentation,
    chern: &[RingElement],
    rank: i64,
    omega: &RingElement,
    d: u32,
) -> Result<RingElement, CharClassError> {
    let n = roots_needed(chern.len(), d);
    let aux = RootRing::new(base.prime(), true, n)?;
    let r = &aux.ring;
    let one_plus_o = &r.one() + &aux.omega();
    let mut prod = r.one();
    for i in 0..n {
        prod = truncated_mul(r, &prod, &(&one_plus_o + &aux.root(i)), d)?;
    }
    let terms = aux.symmetric_reduce(&prod)?;
    let listed = substitute(base, &terms, Some(omega), chern, d)?;
    let eta = &base.one() + omega;
    let trivial = series_pow(base, &eta, rank - n as i64, d)?;
    Ok(truncated_mul(base, &listed, &trivial, d)?)
}

/// Brosnan's total class `w = prod (1 + r_i^{l-1})`, extended to virtual bundles by division.
pub fn w_bro(base: &RingPresentation, v: &VirtualBundle) -> Result<RingElement, CharClassError> {
    let d = v.truncation;
    let num = brosnan_side(base, &v.numerator, d)?;
    let den = brosnan_side(base, &v.denominator, d)?;
    Ok(truncated_mul(base, &num, &series_inverse(base, &den, d)?, d)?)
}

/// The etale total class: `prod (1 + w + r_i)` at `l = 2`, `prod (1 + r_i^{l-1})` at odd `l`.
pub fn w_et(base: &RingPresentation, v: &VirtualBundle, omega: Option<&RingElement>) -> Result<RingElement, CharClassError> {
    if !base.prime().is_two() {
        return w_bro(base, v);
    }
    let omega = omega.ok_or(CharClassError::OmegaRequired)?;
    let d = v.truncation;
    let num = etale_side_two(base, &v.numerator, v.numerator_rank(), omega, d)?;
    let den = etale_side_two(base, &v.denominator, v.denominator.len() as i64, omega, d)?;
    Ok(truncated_mul(base, &num, &series_inverse(base, &den, d)?, d)?)
}

/// Both sides of the comparison between the etale class and Brosnan's class:
/// `w_et = sum_j (1 + w)^{c - j} w_{2j}` at `l = 2` (with `w_{2j}` the degree-`2j` part of
/// Brosnan's class and `c` the rank) and `w_et = w` at odd `l`.
pub fn wet_chow_sides(
    base: &RingPresentation,
    v: &VirtualBundle,
    omega: Option<&RingElement>,
) -> Result<(RingElement, RingElement), CharClassError> {
    let lhs = w_et(base, v, omega)?;
    let w = w_bro(base, v)?;
    if !base.prime().is_two() {
        return Ok((lhs, w));
    }
    let omega = omega.ok_or(CharClassError::OmegaRequired)?;
    let d = v.truncation;
    let eta = &base.one() + omega;
    let mut rhs = base.zero();
    for j in 0..=d / 2 {
        let wj = component(base, &w, 2 * j);
        if wj.is_zero() {
            continue;
        }
        let weight = series_pow(base, &eta, v.rank - j as i64, d)?;
        rhs.add_scaled(&truncated_mul(base, &weight, &wj, d)?, 1);
    }
    Ok((lhs, rhs))
}

pub fn verify_wet_chow(base: &RingPresentation, v: &VirtualBundle, omega: Option<&RingElement>) -> Result<bool, CharClassError> {
    let (a, b) = wet_chow_sides(base, v, omega)?;
    Ok(a == b)
}

/// For a class tagged with codimension `c`: `sum_i (1 + w)^{c - i} Sq^{2i}(x)` at `l = 2`,
/// and the total power `P(x)` at odd `l`. Terms above degree `d` are dropped.
pub fn twisted_total_on_cycle(ring: &RingPresentation, x: &TwistedClass, d: u32) -> Result<RingElement, CharClassError> {
    let c = x.codim().ok_or(CharClassError::MissingCodim)?;
    if !ring.prime().is_two() {
        return Ok(truncate(ring, &ring.total_op(x.value(), x.degree() / 2)?, d));
    }
    let eta = &ring.one() + &ring.omega()?;
    let mut out = ring.zero();
    for i in 0..=x.degree() / 2 {
        let sq = ring.apply_letter(Letter::Sq(2 * i), x.value())?;
        if sq.is_zero() {
            continue;
        }
        let weight = series_pow(ring, &eta, c as i64 - i as i64, d)?;
        out.add_scaled(&truncated_mul(ring, &weight, &sq, d)?, 1);
    }
    Ok(out)
}

/// A ring of the form `B[l]/l^{n+1}` presenting the cohomology of a projective bundle over `B`.
#[derive(Debug, Clone)]
pub struct ProjectiveBundle {
    ring: RingPresentation,
    lambda: usize,
    n: u32,
}

impl ProjectiveBundle {
    /// Adds `lambda` (degree 2, twist 1) with `lambda^{n+1} = 0` to a base presentation.
    /// At `l = 2` the base must carry omega and `Sq^1(lambda) = omega lambda`; at odd `l`,
    /// `b(lambda) = 0`.
    pub fn over(base: &PresentationBuilder, lambda: &str, n: u32) -> Result<Self, CharClassError> {
        if n == 0 {
            return Err(CharClassError::NotProjectiveBundleScenario("n must be positive".into()));
        }
        let mut b = base.clone();
        b.generator(GeneratorSpec::new(lambda, 2).twist(1));
        b.rule(lambda, n + 1, Expr::Int(0));
        if b.prime().is_two() {
            let omega = b.omega_name().ok_or(CharClassError::OmegaRequired)?.to_string();
            b.action(Letter::Sq(1), lambda, Expr::gen(&omega) * Expr::gen(lambda));
        } else {
            b.action(Letter::Beta, lambda, Expr::Int(0));
        }
        let ring = b.build()?;
        let lambda = ring.gen_index(lambda)?;
        Ok(ProjectiveBundle { ring, lambda, n })
    }

    /// Wraps an existing presentation that already has `lambda^{n+1} = 0`.
    pub fn from_presentation(ring: RingPresentation, lambda: &str, n: u32) -> Result<Self, CharClassError> {
        let idx = ring.gen_index(lambda)?;
        let spec = &ring.generators()[idx];
        if spec.degree != 2 {
            return Err(CharClassError::NotProjectiveBundleScenario(format!("{lambda} must have degree 2")));
        }
        let ok = ring
            .rules()
            .iter()
            .any(|r| r.generator == idx && r.exponent == n + 1 && r.rhs.is_zero());
        if !ok {
            return Err(CharClassError::NotProjectiveBundleScenario(format!("missing rule {lambda}^{} = 0", n + 1)));
        }
        Ok(ProjectiveBundle { ring, lambda: idx, n })
    }

    pub fn ring(&self) -> &RingPresentation {
        &self.ring
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn lambda(&self) -> RingElement {
        self.ring.gen_element(self.lambda)
    }

    /// Pushforward to the base: the coefficient of `lambda^n`.
    pub fn pushforward(&self, e: &RingElement) -> RingElement {
        let mut out = self.ring.zero();
        for (m, c) in e.terms() {
            if m.0[self.lambda] == self.n {
                let mut base = m.clone();
                base.0[self.lambda] = 0;
                out.add_term(base, c);
            }
        }
        out
    }

    /// The etale class of the relative normal bundle, truncated above degree `d`:
    /// `(1 + w)/(1 + w + lambda)^{n+1}` at `l = 2`, `(1 + lambda^{l-1})^{-(n+1)}` at odd `l`.
    pub fn normal_bundle_class(&self, d: u32) -> Result<RingElement, CharClassError> {
        let r = &self.ring;
        let p = r.prime();
        let lam = self.lambda();
        let np1 = self.n as i64 + 1;
        if p.is_two() {
            let eta = &r.one() + &r.omega()?;
            let denom = series_pow(r, &(&eta + &lam), -np1, d)?;
            Ok(truncated_mul(r, &eta, &denom, d)?)
        } else {
            let t = &r.one() + &r.pow(&lam, p.get() - 1)?;
            series_pow(r, &t, -np1, d)
        }
    }

    /// Both sides of the relative Wu identity `Sq(f_* x) = f_*(Sq(x) w_et(N_f))` (with `P` at odd
    /// `l`) for `x = y lambda^m`, `y` a homogeneous base class.
    pub fn relative_wu_sides(&self, y: &RingElement, m: u32) -> Result<(RingElement, RingElement), CharClassError> {
        let r = &self.ring;
        let p = r.prime();
        let dy = r.shape_of(y)?.map_or(0, |(d, _)| d);
        let top = if p.is_two() { dy + 2 * m } else { (dy + 2 * m) / 2 };
        // Total powers multiply degrees by at most l.
        let d = p.get() * dy + 2 * self.n + 2;

        let x = r.mul(y, &r.pow(&self.lambda(), m)?)?;
        let lhs = r.total_op(&self.pushforward(&x), top)?;
        let sq_x = r.total_op(&x, top)?;
        let rhs = self.pushforward(&truncated_mul(r, &sq_x, &self.normal_bundle_class(d)?, d)?);
        Ok((lhs, rhs))
    }

    pub fn verify_relative_wu(&self, y: &RingElement, m: u32) -> Result<bool, CharClassError> {
        let (a, b) = self.relative_wu_sides(y, m)?;
        Ok(a == b)
    }
}

pub fn projective_pushforward(pb: &ProjectiveBundle, e: &RingElement) -> RingElement {
    pb.pushforward(e)
}

pub fn verify_relative_wu_projective(pb: &ProjectiveBundle, y: &RingElement, m: u32) -> Result<bool, CharClassError> {
    pb.verify_relative_wu(y, m)
}

/// Coefficient of `T^k` in `(1 + T)^{-k-1}`, reduced mod `l`.
pub fn inverse_power_coefficient(k: u64, p: Prime) -> u32 {
    binom_mod_ell(-(k as i64) - 1, k, p)
}
