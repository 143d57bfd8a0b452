use proptest::prelude::*;
use steenrod_core::{
    adem_normalize, Expr, GeneratorSpec, Letter, PresentationBuilder, Prime, RingElement, RingPresentation,
    SteenrodElement,
};

fn g(s: &str) -> Expr {
    Expr::gen(s)
}

fn plane() -> RingPresentation {
    let mut b = PresentationBuilder::new(Prime::TWO);
    b.generator(GeneratorSpec::new("w", 1))
        .generator(GeneratorSpec::new("l", 2).twist(1))
        .rule("l", 3, Expr::Int(0))
        .action(Letter::Sq(1), "l", g("w") * g("l"))
        .omega("w");
    b.build().unwrap()
}

fn torus_two() -> RingPresentation {
    let mut b = PresentationBuilder::new(Prime::TWO);
    b.generator(GeneratorSpec::new("x1", 1))
        .generator(GeneratorSpec::new("x2", 1))
        .generator(GeneratorSpec::new("t", 2))
        .action(Letter::Sq(1), "t", Expr::Int(0));
    b.build().unwrap()
}

fn torus_odd(l: u32) -> RingPresentation {
    let mut b = PresentationBuilder::new(Prime::new(l).unwrap());
    for i in 1..=2 {
        let (x, y) = (format!("x{i}"), format!("y{i}"));
        b.generator(GeneratorSpec::new(&x, 1))
            .generator(GeneratorSpec::new(&y, 2))
            .action(Letter::Beta, &x, g(&y))
            .action(Letter::Beta, &y, Expr::Int(0));
    }
    b.build().unwrap()
}

fn rings() -> Vec<RingPresentation> {
    vec![plane(), torus_two(), torus_odd(3), torus_odd(5)]
}

/// A homogeneous element: a random combination of the monomials of one degree.
fn homogeneous(r: &RingPresentation, degree: u32, seed: &[u32]) -> RingElement {
    let p = r.prime();
    let mut x = r.zero();
    for (m, s) in r.monomials_of_degree(degree).into_iter().zip(seed.iter().cycle()) {
        x.add_term(m, s % p.get());
    }
    x
}

fn pair() -> impl Strategy<Value = (usize, u32, u32, Vec<u32>, Vec<u32>)> {
    (
        0..4usize,
        0u32..=6,
        0u32..=6,
        prop::collection::vec(0u32..5, 1..8),
        prop::collection::vec(0u32..5, 1..8),
    )
}

fn sign(r: &RingPresentation, degree: u32) -> u32 {
    if degree % 2 == 1 {
        r.prime().get() - 1
    } else {
        1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cartan_formula((i, da, db, sa, sb) in pair()) {
        let r = &rings()[i];
        let a = homogeneous(r, da, &sa);
        let b = homogeneous(r, db, &sb);
        let top = da + db;
        let lhs = r.total_op(&r.mul(&a, &b).unwrap(), top).unwrap();
        let rhs = r.mul(&r.total_op(&a, top).unwrap(), &r.total_op(&b, top).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn bockstein_is_a_signed_derivation((i, da, db, sa, sb) in pair()) {
        let r = &rings()[i];
        let a = homogeneous(r, da, &sa);
        let b = homogeneous(r, db, &sb);
        let beta = |x: &RingElement| r.apply_letter(Letter::Beta, x).unwrap();
        let lhs = beta(&r.mul(&a, &b).unwrap());
        let mut rhs = r.mul(&beta(&a), &b).unwrap();
        rhs.add_scaled(&r.mul(&a, &beta(&b)).unwrap(), sign(r, da));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn normal_form_is_idempotent_and_multiplicative((i, da, db, sa, sb) in pair()) {
        let r = &rings()[i];
        let a = homogeneous(r, da, &sa);
        let b = homogeneous(r, db, &sb);
        prop_assert_eq!(r.normalize(&a).unwrap(), a.clone());
        let ab = r.mul(&a, &b).unwrap();
        prop_assert_eq!(r.normalize(&ab).unwrap(), ab.clone());
        let na = r.normalize(&a).unwrap();
        let nb = r.normalize(&b).unwrap();
        prop_assert_eq!(r.mul(&na, &nb).unwrap(), ab);
    }

    #[test]
    fn twists_add_under_products((i, da, db, sa, sb) in pair()) {
        let r = &rings()[i];
        let a = homogeneous(r, da, &sa);
        let b = homogeneous(r, db, &sb);
        let ab = r.mul(&a, &b).unwrap();
        for (m, _) in ab.terms() {
            prop_assert_eq!(r.degree_of(m), da + db);
        }
        if let (Some((_, ta)), Some((_, tb)), Some((_, tab))) =
            (r.shape_of(&a).unwrap(), r.shape_of(&b).unwrap(), r.shape_of(&ab).unwrap())
        {
            prop_assert!(r.prime().twists_agree(tab, ta + tb));
        }
    }

    #[test]
    fn operations_preserve_twist((i, da, sa, k) in (0..4usize, 0u32..=6, prop::collection::vec(0u32..5, 1..8), 0u32..=4)) {
        let r = &rings()[i];
        let a = homogeneous(r, da, &sa);
        let letter = if r.prime().is_two() { Letter::Sq(k) } else { Letter::P(k) };
        let out = r.apply_letter(letter, &a).unwrap();
        if let (Some((_, t)), Some((_, u))) = (r.shape_of(&a).unwrap(), r.shape_of(&out).unwrap()) {
            prop_assert!(r.prime().twists_agree(t, u));
        }
    }

    #[test]
    fn words_act_like_their_admissible_form(
        (i, da, sa, ls) in (0..4usize, 0u32..=4, prop::collection::vec(0u32..5, 1..8), prop::collection::vec(0u32..7, 1..=3))
    ) {
        let r = &rings()[i];
        let p = r.prime();
        let letters: Vec<Letter> = ls
            .iter()
            .map(|&k| match (p.is_two(), k) {
                (true, k) => Letter::Sq(k + 1),
                (false, 0) => Letter::Beta,
                (false, k) => Letter::P((k + 1) / 2),
            })
            .collect();
        let op = SteenrodElement::from_letters(p, &letters).unwrap();
        let a = homogeneous(r, da, &sa);
        let direct = r.apply_element(&op, &a).unwrap();
        let normal = r.apply_element(&adem_normalize(&op).unwrap(), &a).unwrap();
        prop_assert_eq!(direct, normal);
    }
}

#[test]
fn expressions_evaluate_to_normal_forms() {
    let r = plane();
    let e = (g("l") + g("w").pow(2)) * (g("l") - g("w").pow(2));
    let want = r.eval(&(g("l").pow(2) - g("w").pow(4))).unwrap();
    assert_eq!(r.eval(&e).unwrap(), want);
    assert_eq!(r.render(&r.eval(&g("l").pow(4)).unwrap()), "0");
}

#[test]
fn builtin_style_rings_are_consistent() {
    for r in rings() {
        assert!(r.check_action_consistency(18).is_consistent());
    }
}
