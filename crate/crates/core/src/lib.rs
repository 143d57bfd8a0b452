//! Steenrod operations on twisted mod-l cohomology rings.

pub mod char_classes;
pub mod field;
pub mod obstructions;
pub mod ring;
pub mod steenrod;

pub use field::{binom_mod_ell, InvalidPrime, Prime};
pub use steenrod::{
    adem_normalize, admissible_basis, multiply, parse_element, Letter, SteenrodElement, SteenrodError,
    SteenrodMonomial,
};
pub use ring::{
    ConsistencyReport, Expr, GeneratorSpec, Monomial, PresentationBuilder, RewriteRule, RingElement, RingError,
    RingPresentation, TwistedClass,
};
pub use char_classes::{
    projective_pushforward, twisted_total_on_cycle, verify_relative_wu_projective, verify_wet_chow, w_bro, w_et,
    CharClassError, ProjectiveBundle, VirtualBundle,
};
pub use obstructions::{
    frobenius_eigenvalue, hs_scripted_check, in_image_f_minus_id, odd_vanishing_check, weird_obstruction,
    weird_operator, FrobeniusContext, HsScenario, ObstructionError, ObstructionReport, Verdict,
};
