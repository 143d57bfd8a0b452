//! Built-in rings and golden scenarios.
//!
//! Each scenario is constructed here and also shipped as a `.stn` data file; the two are
//! kept identical by the test suite. At run time the data files are read from the
//! directory named by `STCALC_CORPUS_DIR` when it is set, and from the copies compiled
//! into the binary otherwise.

use std::fmt::Write as _;
use std::path::Path;

use steenrod_core::{binom_mod_ell, Prime};

use crate::ast::{File, Item};
use crate::eval::{Session, Status};
use crate::parser::parse;

pub const CORPUS_DIR_ENV: &str = "STCALC_CORPUS_DIR";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub file: File,
}

impl Scenario {
    fn from_source(name: &str, description: &str, src: &str) -> Self {
        let file = parse(src).unwrap_or_else(|e| panic!("built-in scenario {name}: {e}"));
        Scenario { name: name.into(), description: description.into(), file }
    }

    /// The data-file form: a description comment followed by the rendered items.
    pub fn source(&self) -> String {
        format!("# {}\n\n{}", self.description, self.file)
    }

    pub fn rings(&self) -> Vec<&str> {
        self.file
            .items
            .iter()
            .filter_map(|i| match i {
                Item::Ring(r) => Some(r.name.name.as_str()),
                _ => None,
            })
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{name}.stn:{source}")]
    Syntax { name: String, source: crate::lexer::SyntaxError },
}

fn sum(terms: &[String]) -> String {
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

/// `Sq^i(w_j)` by the Wu formula, with `w_0 = 1` and `w_k = 0` above `n`.
fn wu_formula(i: u32, j: u32, n: u32) -> String {
    let mut terms = Vec::new();
    for t in 0..=i {
        if j + t > n || binom_mod_ell(j as i64 + t as i64 - i as i64 - 1, t as u64, Prime::TWO) == 0 {
            continue;
        }
        terms.push(match i - t {
            0 => format!("w{}", j + t),
            k if k == j + t => format!("w{k}^2"),
            k => format!("w{k}*w{}", j + t),
        });
    }
    sum(&terms)
}

/// The Thom-class ring of the universal bundle over `BO(n)`: Stiefel-Whitney classes
/// `w1..wn` and the Thom class `s` with `s^2 = wn*s`.
pub fn bo_mo_ring(n: u32) -> String {
    let mut s = format!("ring MO{n} {{\n    prime=2;\n");
    for j in 1..=n {
        writeln!(s, "    gen w{j} deg={j} unstable;").unwrap();
    }
    writeln!(s, "    gen s deg={n} unstable;").unwrap();
    writeln!(s, "    rule s^2 = w{n}*s;").unwrap();
    for j in 1..=n {
        for i in 1..=j {
            writeln!(s, "    action Sq^{i}(w{j}) = {};", wu_formula(i, j, n)).unwrap();
        }
    }
    for i in 1..=n {
        writeln!(s, "    action Sq^{i}(s) = w{i}*s;").unwrap();
    }
    s.push_str("}\n");
    s
}

pub fn scenario_bo_mo(n: u32) -> Scenario {
    let r = format!("MO{n}");
    let mut src = bo_mo_ring(n);
    if n == 3 {
        src.push_str(&format!(
            "let x = w2*s in {r};
let y = (w1^2 + w2)*s in {r};
apply \"Sq^2\" to s in {r} => w2*s;
apply \"Sq^1\" to w1 in {r} => w1^2;
normalize s^2 in {r} => w3*s;
apply \"Sq^1\" to x in {r} => w3*s;
normalize \"Sq^2 Sq^1\"(x)*x^2 + \"Sq^1\"(x)^3 + \"Sq^1\"(x)*\"Sq^2\"(x)*x in {r} => w1*w2*w3^4*s + w3^5*s;
normalize \"Sq^2 Sq^1\"(y)*y^2 + \"Sq^1\"(y)^3 + \"Sq^1\"(y)*\"Sq^2\"(y)*y in {r} => w1^3*w2^3*w3^2*s + w1^2*w2^2*w3^3*s + w1*w2*w3^4*s + w3^5*s;
obstruct odd --max-degree 1 on x in {r} => w3*s, verdict nonvanishing;
check --max-degree 18 {r} => verdict consistent;
"
        ));
    } else if n == 5 {
        src.push_str(&format!(
            "normalize \"Sq^2 Sq^1\"(s)*s^2 in {r} => \"Sq^1\"(s)^3 + \"Sq^1\"(s)*\"Sq^2\"(s)*s;
check --max-degree 18 {r} => verdict consistent;
"
        ));
    } else {
        src.push_str(&format!(
            "apply \"Sq^{n}\" to s in {r} => s^2;\ncheck --max-degree 18 {r} => verdict consistent;\n"
        ));
    }
    Scenario::from_source(
        &format!("mo{n}"),
        &format!("Thom class and Stiefel-Whitney classes of the universal rank-{n} bundle"),
        &src,
    )
}

pub fn classifying_ring(l: u32) -> String {
    if l == 2 {
        return "ring CLASSIFYING2 {
    prime=2;
    gen x1 deg=1 frob=1 unstable;
    gen x2 deg=1 frob=1 unstable;
    gen t deg=2 frob=1 unstable;
    action Sq^1(t) = 0;
}
"
        .into();
    }
    format!(
        "ring CLASSIFYING{l} {{
    prime={l};
    gen x1 deg=1 frob=1;
    gen y1 deg=2 frob=1 unstable;
    gen x2 deg=1 frob=1;
    gen y2 deg=2 frob=1 unstable;
    gen t deg=2 frob=1 unstable;
    action b(x1) = y1;
    action b(y1) = 0;
    action b(x2) = y2;
    action b(y2) = 0;
    action b(t) = 0;
}}
"
    )
}

/// The cohomology of `B((Z/l)^2 x C*)` with its Frobenius weights.
pub fn scenario_classifying(l: u32) -> Scenario {
    let r = format!("CLASSIFYING{l}");
    let mut src = classifying_ring(l);
    // q = 3 at l = 2, q = 2 otherwise: a unit mod l.
    let q = if l == 2 { 3 } else { 2 };
    if l == 2 {
        src.push_str(&format!(
            "apply \"Sq^3 Sq^1\" to x1*x2 in {r} => x1^4*x2^2 + x1^2*x2^4;
apply \"Sq^1\" to x1*x2 in {r} => x1^2*x2 + x1*x2^2;
obstruct frobenius --q {q} --twist 2 on \"Sq^3 Sq^1\"(x1*x2) in {r} => verdict not_in_image;
obstruct hs --q {q} --twist 2 on x1*x2 in {r} => verdict nonvanishing;
obstruct hs --q {q} --twist 2 on 0 in {r} => verdict vanishes;
"
        ));
    } else {
        src.push_str(&format!(
            "apply \"b P^1 b\" to x1*x2 in {r} => y1^{l}*y2 - y1*y2^{l};
apply \"b\" to x1*x2 in {r} => -x1*y2 + y1*x2;
apply \"b\" to y1*x2 - x1*y2 in {r} => 0;
obstruct frobenius --q {q} --twist 2 on \"b P^1 b\"(x1*x2) in {r} => verdict not_in_image;
obstruct frobenius --q {q} on y1 in {r} => verdict in_image;
obstruct hs --q {q} --twist 2 on x1*x2 in {r} => verdict nonvanishing;
obstruct hs --q {q} --twist 2 on 0 in {r} => verdict vanishes;
"
        ));
    }
    src.push_str(&format!("check --max-degree 18 {r} => verdict consistent;\n"));
    Scenario::from_source(
        &format!("classifying{l}"),
        &format!("Classifying space of (Z/{l})^2 x C* with Frobenius weights"),
        &src,
    )
}

pub fn scenario_p2_real() -> Scenario {
    let src = "ring P2R {
    prime=2;
    gen w deg=1;
    gen l deg=2 twist=1;
    rule l^3 = 0;
    action Sq^1(l) = w*l;
    omega = w;
}
apply \"Sq^2\" to l^2 in P2R => w^2*l^2;
apply \"Sq^1\" to l in P2R => w*l;
apply \"1 + Sq^1 + Sq^2\" to l in P2R => w*l + l^2 + l;
obstruct weird --codim 2 --which 1 on l^2 in P2R => 0, verdict vanishes;
obstruct weird --codim 2 --which 2 on l^2 in P2R => verdict vanishes;
check --max-degree 18 P2R => verdict consistent;
";
    Scenario::from_source("p2_real", "Equivariant cohomology of the real projective plane", src)
}

pub fn projective_base_ring(l: u32) -> String {
    if l == 2 {
        return "ring PBASE2 {
    prime=2;
    gen w deg=1;
    gen c deg=2 twist=1;
    action Sq^1(c) = w*c;
    omega = w;
}
"
        .into();
    }
    format!(
        "ring PBASE{l} {{
    prime={l};
    gen x deg=1;
    gen y deg=2;
    action b(x) = y;
    action b(y) = 0;
}}
"
    )
}

/// Relative Wu identity for projective bundles `B[lambda]/lambda^{n+1}` over a base ring,
/// for every `m <= n <= n_max` and every base monomial of degree at most 8.
pub fn scenario_projective_bundle(n_max: u32, l: u32) -> Scenario {
    let r = format!("PBASE{l}");
    let mut src = projective_base_ring(l);
    for n in 1..=n_max {
        for m in 0..=n {
            writeln!(src, "wu-check --n {n} --m {m} --max-degree 8 in {r} => verdict holds;").unwrap();
        }
    }
    if l == 2 {
        src.push_str(&format!(
            "bundle E in {r} rank=2 c=[c] trunc=6;
charclass wet E => w^2 + w*c + c + 1;
charclass wetchow E => verdict holds;
"
        ));
    }
    writeln!(src, "check --max-degree 18 {r} => verdict consistent;").unwrap();
    Scenario::from_source(
        &format!("projective_bundle{l}"),
        &format!("Relative Wu formula for projective bundles at l = {l}"),
        &src,
    )
}

/// Witness ring for a product with an elliptic-curve class. Since `Sq^3 = Sq^1 Sq^2`, the
/// declared `Sq^3(sigma) = sigma^2` forces `Sq^2(sigma)` to be a class `v` with
/// `Sq^1(v) = sigma^2`; truncations keep the ring finite.
pub fn scenario_prop5() -> Scenario {
    let src = "ring PROP5 {
    prime=2;
    gen sigma deg=3 unstable;
    gen v deg=5 unstable;
    gen tau deg=1 unstable;
    rule sigma^4 = 0;
    rule v^2 = 0;
    rule tau^2 = 0;
    action Sq^1(sigma) = 0;
    action Sq^2(sigma) = v;
    action Sq^3(sigma) = sigma^2;
    action Sq^1(v) = sigma^2;
    action Sq^2(v) = 0;
    action Sq^3(v) = 0;
    action Sq^4(v) = 0;
    action Sq^1(tau) = 0;
}
apply \"Sq^3\" to sigma*tau in PROP5 => sigma^2*tau;
normalize sigma^2*tau in PROP5 => sigma^2*tau;
obstruct odd --codim 2 --max-degree 3 on sigma*tau in PROP5 => verdict nonvanishing;
check --max-degree 18 PROP5 => verdict consistent;
";
    Scenario::from_source("prop5", "Cube of a torsion class times an elliptic-curve class", src)
}

pub fn scenario_real_fourfold() -> Scenario {
    let src = "ring REALFOURFOLD {
    prime=2;
    gen b deg=1 unstable;
    gen w deg=1 unstable;
    rule b^2 = b*w;
    rule w^8 = 0;
    action Sq^1(b) = b*w;
    omega = w;
}
normalize w^6 in REALFOURFOLD => w^6;
apply \"Sq^1\" to w in REALFOURFOLD => w^2;
obstruct weird --codim 2 --which 2 on b*w^3 in REALFOURFOLD => b*w^6, verdict nonvanishing;
check --max-degree 18 REALFOURFOLD => verdict consistent;
";
    Scenario::from_source("real_fourfold", "Torsion class on a real fourfold with omega^6 nonzero", src)
}

/// `H^*((BZ/l)^4)`: exterior classes `x_i` and polynomial classes `y_i = b(x_i)` at odd
/// `l`, polynomial classes `x_i` at `l = 2`.
pub fn model_ring(l: u32) -> String {
    let mut s = format!("ring MODEL{l} {{\n    prime={l};\n");
    for i in 1..=4 {
        writeln!(s, "    gen x{i} deg=1 unstable;").unwrap();
        if l != 2 {
            writeln!(s, "    gen y{i} deg=2 unstable;").unwrap();
        }
    }
    if l != 2 {
        for i in 1..=4 {
            writeln!(s, "    action b(x{i}) = y{i};").unwrap();
            writeln!(s, "    action b(y{i}) = 0;").unwrap();
        }
    }
    s.push_str("}\n");
    s
}

pub fn scenario_model(l: u32) -> Scenario {
    let r = format!("MODEL{l}");
    let mut src = model_ring(l);
    if l == 2 {
        src.push_str(&format!(
            "apply \"Sq^2 Sq^2\" to x1*x2*x3*x4 in {r} => \"Sq^3 Sq^1\"(x1*x2*x3*x4);
apply \"Sq^1 Sq^2\" to x1*x2*x3 in {r} => \"Sq^3\"(x1*x2*x3);
apply \"Sq^4\" to x1*x2*x3*x4 in {r} => x1^2*x2^2*x3^2*x4^2;
adem \"Sq^2 Sq^2\" => \"Sq^3 Sq^1\";
"
        ));
    } else {
        src.push_str(&format!(
            "apply \"P^1 P^1\" to y1*y2 in {r} => 2*\"P^2\"(y1*y2);
apply \"P^1 b P^1\" to x1*y2 in {r} => \"b P^2\"(x1*y2) + \"P^2 b\"(x1*y2);
apply \"b b\" to x1*x2 in {r} => 0;
adem --prime {l} \"P^1 P^1\" => \"2 P^2\";
"
        ));
    }
    writeln!(src, "check --max-degree 18 {r} => verdict consistent;").unwrap();
    Scenario::from_source(&format!("model{l}"), &format!("Cohomology of (BZ/{l})^4"), &src)
}

/// Every built-in scenario, constructed in code.
pub fn builtin() -> Vec<Scenario> {
    vec![
        scenario_bo_mo(3),
        scenario_bo_mo(5),
        scenario_classifying(2),
        scenario_classifying(3),
        scenario_classifying(5),
        scenario_p2_real(),
        scenario_projective_bundle(4, 2),
        scenario_projective_bundle(4, 3),
        scenario_prop5(),
        scenario_real_fourfold(),
        scenario_model(2),
        scenario_model(3),
    ]
}

const EMBEDDED: [(&str, &str); 12] = [
    ("mo3", include_str!("../corpus/mo3.stn")),
    ("mo5", include_str!("../corpus/mo5.stn")),
    ("classifying2", include_str!("../corpus/classifying2.stn")),
    ("classifying3", include_str!("../corpus/classifying3.stn")),
    ("classifying5", include_str!("../corpus/classifying5.stn")),
    ("p2_real", include_str!("../corpus/p2_real.stn")),
    ("projective_bundle2", include_str!("../corpus/projective_bundle2.stn")),
    ("projective_bundle3", include_str!("../corpus/projective_bundle3.stn")),
    ("prop5", include_str!("../corpus/prop5.stn")),
    ("real_fourfold", include_str!("../corpus/real_fourfold.stn")),
    ("model2", include_str!("../corpus/model2.stn")),
    ("model3", include_str!("../corpus/model3.stn")),
];

fn from_data(name: &str, src: &str) -> Result<Scenario, CorpusError> {
    let description = src
        .lines()
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .map(|d| d.trim().to_string())
        .unwrap_or_default();
    let file = parse(src).map_err(|source| CorpusError::Syntax { name: name.into(), source })?;
    Ok(Scenario { name: name.into(), description, file })
}

/// Reads every `.stn` file of a directory, sorted by name.
pub fn load_dir(dir: &Path) -> Result<Vec<Scenario>, CorpusError> {
    let io = |source| CorpusError::Io { path: dir.display().to_string(), source };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "stn"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let src = std::fs::read_to_string(p)
                .map_err(|source| CorpusError::Io { path: p.display().to_string(), source })?;
            let name = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            from_data(&name, &src)
        })
        .collect()
}

/// The shipped data files, honouring the directory override.
pub fn shipped() -> Result<Vec<Scenario>, CorpusError> {
    match std::env::var_os(CORPUS_DIR_ENV) {
        Some(dir) => load_dir(Path::new(&dir)),
        None => EMBEDDED.iter().map(|(n, s)| from_data(n, s)).collect(),
    }
}

/// Writes the built-in scenarios as data files.
pub fn export(dir: &Path) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for s in builtin() {
        std::fs::write(dir.join(format!("{}.stn", s.name)), s.source())?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryStatus {
    Pass,
    Fail(String),
    Error(String),
}

#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub name: String,
    pub entries: Vec<(String, EntryStatus)>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        !self.entries.is_empty() && self.entries.iter().all(|(_, s)| *s == EntryStatus::Pass)
    }

    pub fn summary(&self) -> String {
        let ok = self.entries.iter().filter(|(_, s)| *s == EntryStatus::Pass).count();
        format!("{}: {ok}/{} passed", self.name, self.entries.len())
    }

    pub fn failures(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter_map(|(q, s)| match s {
                EntryStatus::Pass => None,
                EntryStatus::Fail(d) => Some(format!("FAIL {q}: {d}")),
                EntryStatus::Error(e) => Some(format!("ERROR {q}: {e}")),
            })
            .collect()
    }
}

/// Runs a scenario in a fresh session. A query without expectations passes unless its
/// check fires; an evaluation error ends the scenario.
pub fn run_scenario(s: &Scenario) -> ScenarioReport {
    let mut session = Session::new();
    let mut entries = Vec::new();
    for item in &s.file.items {
        let res = match item {
            Item::Query(q) => session.query(q).map(|o| {
                let status = match o.status {
                    Status::Failed(d) => EntryStatus::Fail(d),
                    Status::Met => EntryStatus::Pass,
                    Status::Unchecked if o.fired => EntryStatus::Fail(format!("check fired: {}", o.result)),
                    Status::Unchecked => EntryStatus::Pass,
                };
                entries.push((q.head(), status));
            }),
            other => session.run(&File { items: vec![other.clone()] }).map(|_| ()),
        };
        if let Err(e) = res {
            let what = match item {
                Item::Query(q) => q.head(),
                other => other.to_string(),
            };
            entries.push((what, EntryStatus::Error(e.to_string())));
            break;
        }
    }
    ScenarioReport { name: s.name.clone(), entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wu_formula_small_cases() {
        assert_eq!(wu_formula(1, 1, 3), "w1^2");
        assert_eq!(wu_formula(1, 2, 3), "w1*w2 + w3");
        assert_eq!(wu_formula(2, 2, 3), "w2^2");
        assert_eq!(wu_formula(1, 3, 3), "w1*w3");
        assert_eq!(wu_formula(2, 3, 3), "w2*w3");
    }
}
