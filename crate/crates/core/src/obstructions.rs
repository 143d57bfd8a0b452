//! Checks that certify a class is not algebraic.
//!
//! Each check evaluates an operator that annihilates algebraic classes and reports
//! whether the result vanishes. Frobenius data is diagonal on monomials, so the
//! image of `F - Id` is the span of the monomials whose eigenvalue differs from 1.

use std::fmt;

use thiserror::Error;

use crate::field::{binom_mod_ell, Prime};
use crate::ring::{GeneratorSpec, Monomial, PresentationBuilder, RingElement, RingError, RingPresentation, TwistedClass};
use crate::steenrod::{admissible_basis, parse_element, Letter, SteenrodElement};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObstructionError {
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error("generator `{0}` has no Frobenius exponent")]
    MissingFrobeniusData(String),
    #[error("q = {q} is divisible by l = {prime}")]
    QDivisibleByPrime { q: u64, prime: Prime },
    #[error("this operator is only defined at l = 2")]
    RequiresTwo,
    #[error("incomplete scenario: {0}")]
    ScenarioIncomplete(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Vanishes,
    Nonvanishing,
    InImage,
    NotInImage,
}

impl Verdict {
    /// Whether the verdict certifies non-algebraicity.
    pub fn fires(self) -> bool {
        matches!(self, Verdict::Nonvanishing | Verdict::NotInImage)
    }

    pub fn label(self) -> &'static str {
        match self {
            Verdict::Vanishes => "vanishes",
            Verdict::Nonvanishing => "nonvanishing",
            Verdict::InImage => "in_image",
            Verdict::NotInImage => "not_in_image",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        [Verdict::Vanishes, Verdict::Nonvanishing, Verdict::InImage, Verdict::NotInImage]
            .into_iter()
            .find(|v| v.label() == s)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObstructionReport {
    pub operator: String,
    pub input: RingElement,
    pub output: RingElement,
    pub verdict: Verdict,
    pub witnesses: Vec<Monomial>,
    pub notes: Vec<String>,
}

impl ObstructionReport {
    pub fn fires(&self) -> bool {
        self.verdict.fires()
    }

    pub fn render(&self, ring: &RingPresentation) -> String {
        let mut s = format!(
            "{}: {} -> {} [{}]",
            self.operator,
            ring.render(&self.input),
            ring.render(&self.output),
            self.verdict
        );
        if !self.witnesses.is_empty() {
            let w: Vec<String> = self.witnesses.iter().map(|m| ring.render_monomial(m)).collect();
            s.push_str(&format!(" witnesses: {}", w.join(", ")));
        }
        for n in &self.notes {
            s.push_str(&format!("\n  {n}"));
        }
        s
    }
}

/// The residue of `q = |F|` mod `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrobeniusContext {
    prime: Prime,
    q: u32,
}

impl FrobeniusContext {
    pub fn new(q: u64, prime: Prime) -> Result<Self, ObstructionError> {
        let r = (q % prime.get() as u64) as u32;
        if r == 0 {
            return Err(ObstructionError::QDivisibleByPrime { q, prime });
        }
        Ok(FrobeniusContext { prime, q: r })
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn prime(&self) -> Prime {
        self.prime
    }
}

/// `prod q^{e_g * mult_g} * q^{-twist}` for the monomial `m`.
pub fn frobenius_eigenvalue(
    ring: &RingPresentation,
    m: &Monomial,
    twist: i64,
    ctx: &FrobeniusContext,
) -> Result<u32, ObstructionError> {
    let p = ctx.prime;
    let mut exp: i64 = -twist;
    for (g, &e) in m.exponents().iter().enumerate() {
        if e == 0 {
            continue;
        }
        let spec: &GeneratorSpec = &ring.generators()[g];
        let f = spec
            .frobenius_exponent
            .ok_or_else(|| ObstructionError::MissingFrobeniusData(spec.name.clone()))?;
        exp += f * e as i64;
    }
    Ok(p.pow_signed(ctx.q, exp).expect("q is a unit"))
}

/// Decides whether `x` lies in the image of `F - Id`. Eigenvalue-1 monomials with
/// nonzero coefficient are the witnesses that it does not. The coefficient twist of
/// `x` contributes to every eigenvalue.
pub fn in_image_f_minus_id(
    ring: &RingPresentation,
    x: &TwistedClass,
    ctx: &FrobeniusContext,
) -> Result<ObstructionReport, ObstructionError> {
    let mut witnesses = Vec::new();
    for (m, _) in x.value().terms() {
        if frobenius_eigenvalue(ring, m, x.shift(), ctx)? == 1 {
            witnesses.push(m.clone());
        }
    }
    let verdict = if witnesses.is_empty() { Verdict::InImage } else { Verdict::NotInImage };
    Ok(ObstructionReport {
        operator: "F - Id".into(),
        input: x.value().clone(),
        output: x.value().clone(),
        verdict,
        witnesses,
        notes: Vec::new(),
    })
}

/// Applies every admissible operation of odd degree at most `max_degree`.
pub fn odd_vanishing_check(
    ring: &RingPresentation,
    x: &TwistedClass,
    max_degree: u32,
) -> Result<ObstructionReport, ObstructionError> {
    let mut notes = Vec::new();
    let mut first: Option<RingElement> = None;
    for d in (1..=max_degree).step_by(2) {
        for word in admissible_basis(ring.prime(), d) {
            let out = ring.apply_word(&word, x.value())?;
            if !out.is_zero() {
                notes.push(format!("{word}: {}", ring.render(&out)));
                first.get_or_insert(out);
            }
        }
    }
    let verdict = if first.is_some() { Verdict::Nonvanishing } else { Verdict::Vanishes };
    let output = first.unwrap_or_else(|| ring.zero());
    let witnesses = output.terms().map(|(m, _)| m.clone()).collect();
    Ok(ObstructionReport {
        operator: format!("odd operations up to degree {max_degree}"),
        input: x.value().clone(),
        output,
        verdict,
        witnesses,
        notes,
    })
}

/// `C(c, 2)` and `c + 1` reduced mod 2.
fn weird_coefficients(c: i64) -> (u32, u32) {
    (binom_mod_ell(c, 2, Prime::TWO), Prime::TWO.reduce(c + 1))
}

/// Operator (1) is `Sq^2 + C(c,2) w^2`, operator (2) is `Sq^3 + (c+1) w Sq^2 + C(c,2) w^3`.
pub fn weird_operator(
    ring: &RingPresentation,
    x: &TwistedClass,
    c: i64,
    which: u8,
) -> Result<RingElement, ObstructionError> {
    if !ring.prime().is_two() {
        return Err(ObstructionError::RequiresTwo);
    }
    let w = ring.omega()?;
    let v = x.value();
    let (half, succ) = weird_coefficients(c);
    let sq2 = ring.apply_letter(Letter::Sq(2), v)?;
    match which {
        1 => {
            let mut out = sq2;
            out.add_scaled(&ring.mul(&ring.pow(&w, 2)?, v)?, half);
            Ok(out)
        }
        2 => {
            let mut out = ring.apply_letter(Letter::Sq(3), v)?;
            out.add_scaled(&ring.mul(&w, &sq2)?, succ);
            out.add_scaled(&ring.mul(&ring.pow(&w, 3)?, v)?, half);
            Ok(out)
        }
        _ => Err(ObstructionError::ScenarioIncomplete(format!("no operator number {which}"))),
    }
}

pub fn weird_obstruction(
    ring: &RingPresentation,
    x: &TwistedClass,
    c: i64,
    which: u8,
) -> Result<ObstructionReport, ObstructionError> {
    let output = weird_operator(ring, x, c, which)?;
    let verdict = if output.is_zero() { Verdict::Vanishes } else { Verdict::Nonvanishing };
    let (half, succ) = weird_coefficients(c);
    let operator = match which {
        1 => format!("Sq^2 + {half} w^2 (c = {c})"),
        _ => format!("Sq^3 + {succ} w Sq^2 + {half} w^3 (c = {c})"),
    };
    Ok(ObstructionReport {
        operator,
        input: x.value().clone(),
        witnesses: output.terms().map(|(m, _)| m.clone()).collect(),
        output,
        verdict,
        notes: Vec::new(),
    })
}

/// The geometric ring extended by a filtration-1 class `u` of degree 1, standing for the
/// generator of `H^1(G, -)`. Wrapping `b` as `b u` models the edge map into the
/// arithmetic cohomology; products of filtration 2 vanish.
#[derive(Debug, Clone)]
pub struct HsScenario {
    ring: RingPresentation,
    wrapper: usize,
    z: RingElement,
    shift: i64,
    ctx: FrobeniusContext,
}

impl HsScenario {
    /// `geometric` must carry Frobenius exponents on every generator; `z` has degree 2 and
    /// coefficient twist `shift`.
    pub fn new(
        geometric: &PresentationBuilder,
        z: &crate::ring::Expr,
        shift: i64,
        ctx: FrobeniusContext,
    ) -> Result<Self, ObstructionError> {
        let mut b = geometric.clone();
        let name = "u";
        b.generator(GeneratorSpec::new(name, 1).filtration(1).frob(0));
        if !b.prime().is_two() {
            b.action(Letter::Beta, name, crate::ring::Expr::Int(0));
        }
        if b.omega_name().is_none() {
            b.omega(name);
        }
        let ring = b.build()?;
        for g in ring.generators() {
            if g.frobenius_exponent.is_none() {
                return Err(ObstructionError::ScenarioIncomplete(format!("`{}` lacks Frobenius data", g.name)));
            }
        }
        if ring.omega_index() != Some(ring.gen_index(name)?) {
            return Err(ObstructionError::ScenarioIncomplete("omega must be the filtration-1 class".into()));
        }
        let z = ring.eval(z)?;
        if let Some((d, _)) = ring.shape_of(&z)? {
            if d != 2 {
                return Err(ObstructionError::ScenarioIncomplete(format!("z has degree {d}, expected 2")));
            }
        }
        let wrapper = ring.gen_index(name)?;
        Ok(HsScenario { ring, wrapper, z, shift, ctx })
    }

    pub fn ring(&self) -> &RingPresentation {
        &self.ring
    }

    pub fn z(&self) -> &RingElement {
        &self.z
    }

    /// `psi(b) = b u`.
    pub fn wrap(&self, b: &RingElement) -> Result<RingElement, RingError> {
        self.ring.mul(b, &self.ring.gen_element(self.wrapper))
    }
}

/// Runs the Hochschild–Serre argument on the model:
/// (a) the degree-8 (or degree `2l + 2`) class `Sq^3 Sq^1 z` (`b P^1 b z` at odd `l`) is not in
/// the image of `F - Id`; (b) hence `Sq^3 y` (`b P^1 y`) is nonzero for `y = psi(b z)`;
/// (c) `w Sq^2 y` and `w^3 y` have filtration 2 and vanish; (d) so the degree-3 operator
/// of the codimension-2 test does not kill `y`.
pub fn hs_scripted_check(s: &HsScenario) -> Result<ObstructionReport, ObstructionError> {
    let r = &s.ring;
    let p = r.prime();
    let mut notes = Vec::new();
    let (outer, inner_op) = if p.is_two() { ("Sq^3", "Sq^3 Sq^1") } else { ("b P^1", "b P^1 b") };
    let inner_op: SteenrodElement = parse_element(p, inner_op).map_err(RingError::from)?;
    let outer_op: SteenrodElement = parse_element(p, outer).map_err(RingError::from)?;

    let inner = r.apply_element(&inner_op, &s.z)?;
    let inner_class = r.class_with_shape(inner.clone(), 2 + inner_op.homogeneous_degree().unwrap_or(0), 0, None)?;
    let inner_class = inner_class.twisted_by(s.shift);
    let image = in_image_f_minus_id(r, &inner_class, &s.ctx)?;
    notes.push(format!("(a) {inner_op}(z) = {} [{}]", r.render(&inner), image.verdict));

    let bz = r.apply_letter(Letter::Beta, &s.z)?;
    let y = s.wrap(&bz)?;
    let top = r.apply_element(&outer_op, &y)?;
    let wrapped_inner = s.wrap(&inner)?;
    if top != wrapped_inner {
        return Err(ObstructionError::ScenarioIncomplete(format!(
            "{outer}(psi(x)) = {} differs from psi({outer}(x)) = {}",
            r.render(&top),
            r.render(&wrapped_inner)
        )));
    }
    // psi factors through the cokernel of F - Id, so the wrapped class is nonzero exactly when
    // the inner class survives there.
    let survives = image.verdict == Verdict::NotInImage;
    notes.push(format!(
        "(b) y = {}, {outer}(y) = {} ({})",
        r.render(&y),
        r.render(&top),
        if survives { "nonzero modulo F - Id" } else { "zero modulo F - Id" }
    ));

    let (output, verdict) = if p.is_two() {
        let w = r.omega()?;
        let w_sq2 = r.mul(&w, &r.apply_letter(Letter::Sq(2), &y)?)?;
        let w3 = r.mul(&r.pow(&w, 3)?, &y)?;
        notes.push(format!(
            "(c) w Sq^2(y) = {}, w^3 y = {}",
            r.render(&w_sq2),
            r.render(&w3)
        ));
        let y_class = r.class_with_shape(y.clone(), 4, 0, Some(2))?;
        let out = weird_operator(r, &y_class, 2, 2)?;
        let fires = survives && !out.is_zero();
        notes.push(format!("(d) (Sq^3 + w Sq^2 + w^3)(y) = {}", r.render(&out)));
        (out, if fires { Verdict::Nonvanishing } else { Verdict::Vanishes })
    } else {
        notes.push("(c) b P^1 kills algebraic classes of degree 4".into());
        let fires = survives && !top.is_zero();
        (top, if fires { Verdict::Nonvanishing } else { Verdict::Vanishes })
    };
    Ok(ObstructionReport {
        operator: format!("{outer} on psi(b z)"),
        input: s.z.clone(),
        witnesses: image.witnesses,
        output,
        verdict,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Expr;

    fn g(s: &str) -> Expr {
        Expr::gen(s)
    }

    fn classifying(l: u32) -> PresentationBuilder {
        let p = Prime::new(l).unwrap();
        let mut b = PresentationBuilder::new(p);
        if p.is_two() {
            b.generator(GeneratorSpec::new("x1", 1).frob(1))
                .generator(GeneratorSpec::new("x2", 1).frob(1))
                .generator(GeneratorSpec::new("t", 2).frob(1));
            b.action(Letter::Sq(1), "t", Expr::Int(0));
        } else {
            for i in 1..=2 {
                b.generator(GeneratorSpec::new(&format!("x{i}"), 1).frob(1))
                    .generator(GeneratorSpec::new(&format!("y{i}"), 2).frob(1));
                b.action(Letter::Beta, &format!("x{i}"), g(&format!("y{i}")))
                    .action(Letter::Beta, &format!("y{i}"), Expr::Int(0));
            }
            b.generator(GeneratorSpec::new("t", 2).frob(1));
            b.action(Letter::Beta, "t", Expr::Int(0));
        }
        b
    }

    #[test]
    fn eigenvalues() {
        let p3 = Prime::new(3).unwrap();
        let r = classifying(3).build().unwrap();
        let ctx = FrobeniusContext::new(2, p3).unwrap();
        let y1 = Monomial::generator(r.ngens(), 1);
        assert_eq!(frobenius_eigenvalue(&r, &y1, 0, &ctx).unwrap(), 2);
        let m = r.eval(&(g("y1").pow(3) * g("y2"))).unwrap();
        let (m, _) = m.terms().next().unwrap();
        assert_eq!(frobenius_eigenvalue(&r, m, 2, &ctx).unwrap(), 1);
        assert!(FrobeniusContext::new(9, p3).is_err());
    }

    #[test]
    fn image_membership() {
        let p3 = Prime::new(3).unwrap();
        let r = classifying(3).build().unwrap();
        let ctx = FrobeniusContext::new(2, p3).unwrap();
        let y1 = r.class(r.gen("y1").unwrap(), None).unwrap();
        assert_eq!(in_image_f_minus_id(&r, &y1, &ctx).unwrap().verdict, Verdict::InImage);
        let zero = r.class_with_shape(r.zero(), 2, 0, None).unwrap();
        assert_eq!(in_image_f_minus_id(&r, &zero, &ctx).unwrap().verdict, Verdict::InImage);
    }

    #[test]
    fn hs_fires_at_two_and_three() {
        for (l, q) in [(2u32, 3u64), (3, 2)] {
            let p = Prime::new(l).unwrap();
            let ctx = FrobeniusContext::new(q, p).unwrap();
            let s = HsScenario::new(&classifying(l), &(g("x1") * g("x2")), 2, ctx).unwrap();
            let rep = hs_scripted_check(&s).unwrap();
            assert!(rep.fires(), "{}", rep.render(s.ring()));
            let s0 = HsScenario::new(&classifying(l), &Expr::Int(0), 2, ctx).unwrap();
            assert!(!hs_scripted_check(&s0).unwrap().fires());
        }
    }

    #[test]
    fn weird_operator_on_plane() {
        let mut b = PresentationBuilder::new(Prime::TWO);
        b.generator(GeneratorSpec::new("w", 1))
            .generator(GeneratorSpec::new("l", 2).twist(1))
            .rule("l", 3, Expr::Int(0))
            .action(Letter::Sq(1), "l", g("w") * g("l"))
            .omega("w");
        let r = b.build().unwrap();
        let x = r.class(r.eval(&g("l").pow(2)).unwrap(), Some(2)).unwrap();
        assert!(weird_operator(&r, &x, 2, 1).unwrap().is_zero());
        assert!(weird_operator(&r, &x, 2, 2).unwrap().is_zero());
        let zero = r.class_with_shape(r.zero(), 4, 2, Some(2)).unwrap();
        assert!(weird_operator(&r, &zero, 2, 2).unwrap().is_zero());
    }
}
