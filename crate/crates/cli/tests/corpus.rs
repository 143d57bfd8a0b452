use std::collections::BTreeMap;

use steenrod_cli::ast::{Expectation, Item, Poly, QueryKind};
use steenrod_cli::corpus::{self, EntryStatus};
use steenrod_cli::{parse, Session, Status};

fn has_apply(p: &Poly) -> bool {
    match p {
        Poly::Apply(..) => true,
        Poly::Int(..) | Poly::Var(_) => false,
        Poly::Neg(x, _) | Poly::Pow(x, _, _) => has_apply(x),
        Poly::Add(a, b, _) | Poly::Sub(a, b, _) | Poly::Mul(a, b, _) => has_apply(a) || has_apply(b),
    }
}

#[test]
fn shipped_files_match_builtin_scenarios() {
    let shipped: BTreeMap<_, _> = corpus::shipped().unwrap().into_iter().map(|s| (s.name.clone(), s)).collect();
    let built: BTreeMap<_, _> = corpus::builtin().into_iter().map(|s| (s.name.clone(), s)).collect();
    assert_eq!(shipped.keys().collect::<Vec<_>>(), built.keys().collect::<Vec<_>>());
    for (name, s) in &built {
        assert_eq!(&shipped[name], s, "{name}.stn is stale; re-export the corpus");
        assert_eq!(shipped[name].source(), s.source());
    }
}

#[test]
fn data_files_parse_cleanly() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus");
    let from_disk = corpus::load_dir(&dir).unwrap();
    assert_eq!(from_disk.len(), corpus::builtin().len());
    for s in &from_disk {
        let src = std::fs::read_to_string(dir.join(format!("{}.stn", s.name))).unwrap();
        parse(&src).unwrap_or_else(|e| panic!("{}: {e}", s.name));
    }
}

#[test]
fn every_scenario_passes() {
    for s in corpus::shipped().unwrap() {
        let report = corpus::run_scenario(&s);
        assert!(report.passed(), "{}", report.failures().join("\n"));
    }
}

#[test]
fn every_query_is_asserted() {
    for s in corpus::builtin() {
        for item in &s.file.items {
            if let Item::Query(q) = item {
                assert!(!q.expect.is_empty(), "{}: `{}` has no expectation", s.name, q.head());
            }
        }
    }
}

#[test]
fn expectations_are_stored_in_normal_form() {
    for s in corpus::builtin() {
        let mut session = Session::new();
        for item in &s.file.items {
            let Item::Query(q) = item else {
                session.run(&steenrod_cli::File { items: vec![item.clone()] }).unwrap();
                continue;
            };
            if !matches!(q.kind, QueryKind::Apply { .. } | QueryKind::Normalize { .. }) {
                continue;
            }
            let out = session.query(q).unwrap();
            for e in &q.expect {
                if let Expectation::Poly(p) = e {
                    if !has_apply(p) {
                        assert_eq!(p.to_string(), out.result, "{}: {}", s.name, q.head());
                    }
                }
            }
        }
    }
}

#[test]
fn round_trip_through_rendering() {
    for s in corpus::builtin() {
        let text = s.file.to_string();
        assert_eq!(parse(&text).unwrap(), s.file, "{}", s.name);
        assert_eq!(parse(&text).unwrap().to_string(), text);
    }
}

#[test]
fn corrupted_expectation_reports_monomial_diff() {
    let mo3 = corpus::shipped().unwrap().into_iter().find(|s| s.name == "mo3").unwrap();
    let src = mo3.source().replace("normalize s^2 in MO3 => w3*s;", "normalize s^2 in MO3 => w3*s + w1*w2*s;");
    assert_ne!(src, mo3.source());
    let broken = corpus::Scenario { file: parse(&src).unwrap(), ..mo3 };
    let report = corpus::run_scenario(&broken);
    assert!(!report.passed());
    let fails: Vec<_> = report.entries.iter().filter(|(_, s)| *s != EntryStatus::Pass).collect();
    assert_eq!(fails.len(), 1);
    let EntryStatus::Fail(detail) = &fails[0].1 else { panic!("{:?}", fails[0]) };
    assert!(detail.contains("missing w1*w2*s"), "{detail}");
}

#[test]
fn verdict_expectations_are_checked() {
    let src = "ring R { prime=2; gen w deg=1; omega = w; }\n\
               obstruct odd on w in R => verdict vanishes;\n\
               normalize w^2 in R => verdict vanishes;\n";
    let file = parse(src).unwrap();
    let mut session = Session::new();
    session.run(&steenrod_cli::File { items: file.items[..1].to_vec() }).unwrap();
    let Item::Query(odd) = &file.items[1] else { unreachable!() };
    let out = session.query(odd).unwrap();
    assert!(out.fired);
    assert!(matches!(out.status, Status::Failed(_)), "{:?}", out.status);
    let Item::Query(norm) = &file.items[2] else { unreachable!() };
    let err = session.query(norm).unwrap_err();
    assert_eq!((err.line, err.col), (3, 31));
}

#[test]
fn reports_are_deterministic() {
    let run = || {
        corpus::shipped()
            .unwrap()
            .iter()
            .map(|s| {
                let mut session = Session::new();
                session.run(&s.file).unwrap().iter().map(|o| o.text(true)).collect::<Vec<_>>().join("\n")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(run(), run());
}

#[test]
fn builtin_rings_are_consistent_to_degree_18() {
    let session = Session::with_builtins().unwrap();
    for name in session.ring_names() {
        let report = session.ring(name).unwrap().check_action_consistency(18);
        assert!(report.is_consistent(), "{name}: {report}");
    }
}
