use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::counting::tests::random_example;
use crate::data::{language_atoms, marginal_distribution, parse_example, GlobalExample};
use crate::logic::{atom, isomorphic, parse_ground_atom, var, Literal, Predicate};

const FRIENDS: &str = "fr(alice,bob)\nfr(bob,alice)\nfr(bob,eve)\nfr(eve,bob)\nsm(alice)\n";

fn theory(text: &str, symbols: &mut Symbols) -> StratifiedTheory {
    parse_theory(text, symbols).unwrap()
}

fn ground(text: &str, symbols: &mut Symbols) -> Atom {
    parse_ground_atom(text, symbols).unwrap()
}

fn consts(n: usize) -> Vec<Constant> {
    (0..n as u32).map(Constant).collect()
}

/// Worlds over `atoms` consistent with `evidence` that maximize π.
fn maximal_worlds(
    th: &StratifiedTheory,
    atoms: &[Atom],
    evidence: &[Literal],
    constants: &[Constant],
) -> Vec<BTreeSet<Atom>> {
    let mut best = -1.0;
    let mut out = Vec::new();
    for mask in 0..1u32 << atoms.len() {
        let w: BTreeSet<Atom> = (0..atoms.len()).filter(|&i| mask >> i & 1 == 1).map(|i| atoms[i].clone()).collect();
        if !evidence.iter().all(|l| w.contains(&l.atom) == l.positive) {
            continue;
        }
        let p = world_possibility(th, &w, constants);
        if p > best + 1e-12 {
            best = p;
            out.clear();
        }
        if (p - best).abs() <= 1e-12 {
            out.push(w);
        }
    }
    out
}

fn cut_consistent(cut: &[Clause], atoms: &[Atom], evidence: &[Literal], constants: &[Constant]) -> bool {
    (0..1u32 << atoms.len()).any(|mask| {
        let w: BTreeSet<Atom> = (0..atoms.len()).filter(|&i| mask >> i & 1 == 1).map(|i| atoms[i].clone()).collect();
        evidence.iter().all(|l| w.contains(&l.atom) == l.positive) && cut.iter().all(|c| satisfies(&w, c, constants))
    })
}

fn random_clause(rng: &mut impl Rng) -> Clause {
    if rng.gen_bool(0.05) {
        return Clause::bottom();
    }
    let lits: Vec<Literal> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let a = match rng.gen_range(0..3) {
                0 => atom("p", &[var(rng.gen_range(0..2))]),
                1 => atom("q", &[var(rng.gen_range(0..2))]),
                _ => atom("r", &[var(rng.gen_range(0..2)), var(rng.gen_range(0..2))]),
            };
            Literal { atom: a, positive: rng.gen_bool(0.5) }
        })
        .collect();
    Clause::new(lits, rng.gen_bool(0.5))
}

fn random_theory(rng: &mut impl Rng, levels: usize) -> StratifiedTheory {
    let weights: Vec<f64> = (1..=levels).map(|i| i as f64 / levels as f64).collect();
    let mut formulas: Vec<(Clause, f64)> = (0..rng.gen_range(1..=8))
        .map(|_| (random_clause(rng), weights[rng.gen_range(0..levels)]))
        .filter(|(c, _)| !c.is_bottom())
        .collect();
    if rng.gen_bool(0.3) {
        let min = formulas.iter().map(|f| f.1).fold(1.0, f64::min);
        formulas.push((Clause::bottom(), min));
    }
    StratifiedTheory::new(formulas).unwrap()
}

fn small_language() -> Vec<Atom> {
    let sig: BTreeSet<Predicate> =
        [Predicate::new("p", 1), Predicate::new("q", 1), Predicate::new("r", 2)].into_iter().collect();
    language_atoms(&sig, 2)
}

fn random_evidence(rng: &mut impl Rng, atoms: &[Atom]) -> Vec<Literal> {
    let mut out = Vec::new();
    for a in atoms {
        if rng.gen_bool(0.25) {
            out.push(Literal { atom: a.clone(), positive: rng.gen_bool(0.5) });
        }
    }
    out
}

#[test]
fn theory_invariants() {
    let bot = Clause::bottom();
    let p = Clause::new([Literal::pos(atom("p", &[var(0)]))], true);
    let th = StratifiedTheory::new([(p.clone(), 0.8), (bot.clone(), 0.2), (p.clone(), 0.8)]).unwrap();
    assert_eq!(th.len(), 2);
    assert_eq!(th.levels(), vec![0.2, 0.8]);
    assert_eq!(th.bottom_weight(), Some(0.2));
    assert_eq!(th.strata().len(), 2);
    assert_eq!(th.cut(0.5), vec![p.clone()]);
    assert!(th.hard().is_empty());
    assert_eq!(StratifiedTheory::new([(p.clone(), 1.5)]), Err(TheoryError::Weight(1.5)));
    assert_eq!(StratifiedTheory::new([(p, 0.1), (bot, 0.5)]), Err(TheoryError::BottomNotLowest));
}

#[test]
fn theory_text_round_trips() {
    let mut s = Symbols::new();
    let text = "1.0 :: !fr(X,X) @nodiff\n1.0 :: !fr(X,Y) v fr(Y,X)\n0.6 :: !fr(X,Y) v !sm(X) v sm(Y)\n0.25 :: _bot_\n";
    let th = theory(text, &mut s);
    assert_eq!(th.to_text(&s), text);
    let again = theory(&th.to_text(&s), &mut s);
    assert_eq!(again, th);
    let shuffled = "# comment\n0.25 :: _bot_\n\n1.0 :: !fr(X,X) @nodiff\n0.6 :: !fr(X,Y) v !sm(X) v sm(Y)\n1.0 :: !fr(X,Y) v fr(Y,X)\n";
    assert_eq!(theory(shuffled, &mut s).to_text(&s), text);
    let err = parse_theory("0.5 :: p(X)\nnonsense\n", &mut s).unwrap_err();
    assert!(matches!(err, TheoryError::Parse(ParseError { line: Some(2), .. })), "{err}");
    let err = parse_theory("abc :: p(X)\n", &mut s).unwrap_err();
    assert!(matches!(err, TheoryError::Parse(_)));
}

#[test]
fn possibility_examples() {
    let mut s = Symbols::numbered(1);
    let th = theory("0.2 :: _bot_\n0.8 :: p(1)\n", &mut s);
    let p1 = ground("p(1)", &mut s);
    let w = LocalExample::new(1, [p1]).unwrap();
    assert!((possibility(&th, &w) - 0.8).abs() < 1e-12);
    let empty = LocalExample::new(1, []).unwrap();
    assert!((possibility(&th, &empty) - 0.2).abs() < 1e-12);
    assert_eq!(possibility(&StratifiedTheory::default(), &w), 1.0);
}

#[test]
fn friends_encoding_at_width_one() {
    let ex = parse_example(FRIENDS, None).unwrap();
    let th = exact_encoding(&ex, 1).unwrap();
    assert_eq!(th.len(), 4);
    let mut weights: Vec<f64> = th.formulas().iter().map(|f| f.weight).collect();
    weights.sort_by(f64::total_cmp);
    let expected = [1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0];
    for (w, e) in weights.iter().zip(expected) {
        assert!((w - e).abs() < 1e-12, "{weights:?}");
    }
    let sm_only = th.formulas().iter().find(|f| (f.weight - 2.0 / 3.0).abs() < 1e-12).unwrap();
    assert_eq!(sm_only.clause.to_string(), "fr(A,A) v !sm(A)");
}

#[test]
fn empty_data_encoding_drops_the_empty_class() {
    let mut symbols = Symbols::new();
    symbols.intern("a");
    symbols.intern("b");
    let ex = GlobalExample::new(symbols, [], [Predicate::new("p", 1)]).unwrap();
    let th = exact_encoding(&ex, 1).unwrap();
    assert_eq!(th.len(), 1);
    assert_eq!(th.formulas()[0].weight, 1.0);
    assert_eq!(th.formulas()[0].clause.to_string(), "!p(A)");
}

#[test]
fn class_cardinalities() {
    let ex = parse_example(FRIENDS, None).unwrap();
    let dist = marginal_distribution(&ex, 2).unwrap();
    let classes = marginal_classes(ex.signature(), 2, &dist).unwrap();
    let mut s = Symbols::numbered(2);
    let find = |atoms: &[&str], s: &mut Symbols| {
        let w = LocalExample { width: 2, atoms: atoms.iter().map(|a| ground(a, s)).collect() };
        classes.iter().find(|c| isomorphic(&w.structure(), &c.representative.structure())).unwrap().clone()
    };
    let c = find(&["fr(1,2)", "fr(2,1)", "sm(1)"], &mut s);
    assert_eq!(c.cardinality, 2);
    let c = find(&["fr(1,2)", "fr(2,1)"], &mut s);
    assert_eq!(c.cardinality, 1);
    let total: usize = classes.iter().map(|c| c.cardinality).sum();
    assert_eq!(total, 1 << language_atoms(ex.signature(), 2).len());
    let mass: f64 = classes.iter().map(|c| c.probability).sum();
    assert!((mass - 1.0).abs() < 1e-12);
}

fn check_exactness(ex: &GlobalExample, k: usize) {
    let th = exact_encoding(ex, k).unwrap();
    let dist = marginal_distribution(ex, k).unwrap();
    let language = language_atoms(ex.signature(), k);
    let mut total = 0.0;
    for mask in 0..1u32 << language.len() {
        let w = LocalExample {
            width: k,
            atoms: (0..language.len()).filter(|&i| mask >> i & 1 == 1).map(|i| language[i].clone()).collect(),
        };
        let pi = possibility(&th, &w);
        let p = dist.get(&w).copied().unwrap_or(0.0);
        assert!((pi - p).abs() < 1e-9, "k={k} {w}: π={pi} P={p}");
        total += pi;
    }
    assert!((total - 1.0).abs() < 1e-9);
}

#[test]
fn encoding_is_exact() {
    let ex = parse_example(FRIENDS, None).unwrap();
    check_exactness(&ex, 1);
    check_exactness(&ex, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..15 {
        let n = rng.gen_range(2..=4);
        let ex = random_example(&mut rng, n);
        check_exactness(&ex, rng.gen_range(1..=2));
    }
}

#[test]
fn encoding_rejects_large_languages() {
    let ex = parse_example("r(a,b)\nr(b,c)\ns(c,a)\n", None).unwrap();
    assert!(matches!(exact_encoding(&ex, 3), Err(TheoryError::Size(_))));
}

#[test]
fn cutoff_examples() {
    let mut s = Symbols::numbered(1);
    let th = theory("0.2 :: _bot_\n0.8 :: p(1)\n", &mut s);
    let p1 = ground("p(1)", &mut s);
    let q1 = ground("q(1)", &mut s);
    let c = map_cutoff(&th, &[], &consts(1)).unwrap();
    assert_eq!(c.level, Some(0.8));
    assert_eq!(c.cut.len(), 1);
    assert!(map_entails(&th, &[], &consts(1), &p1).unwrap());
    assert!(!map_entails(&th, &[], &consts(1), &q1).unwrap());
    let c = map_cutoff(&th, &[Literal::neg(p1.clone())], &consts(1)).unwrap();
    assert_eq!(c.level, None);
    assert!(c.cut.is_empty());
    let err = map_cutoff(&th, &[Literal::neg(p1.clone()), Literal::pos(p1)], &consts(1)).unwrap_err();
    assert!(matches!(err, TheoryError::ContradictoryEvidence(_)));
}

#[test]
fn symmetry_rule_prediction() {
    let mut s = Symbols::numbered(2);
    let th = theory("1.0 :: !fr(X,Y) v fr(Y,X)\n", &mut s);
    let f12 = ground("fr(1,2)", &mut s);
    let f21 = ground("fr(2,1)", &mut s);
    let e = [Literal::pos(f12.clone())];
    assert!(map_entails(&th, &e, &consts(2), &f21).unwrap());
    let pred = map_prediction(&th, &e, &consts(2)).unwrap();
    assert_eq!(pred, [f12, f21].into_iter().collect());
    let sm1 = ground("sm(1)", &mut s);
    let pred = map_prediction(&StratifiedTheory::default(), &[Literal::pos(sm1.clone())], &consts(2)).unwrap();
    assert_eq!(pred, [sm1].into_iter().collect());
    assert!(map_prediction(&StratifiedTheory::default(), &[], &consts(2)).unwrap().is_empty());
}

#[test]
fn map_agrees_with_maximal_worlds() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let atoms = small_language();
    let constants = consts(2);
    for _ in 0..60 {
        let levels = rng.gen_range(1..=6);
        let th = random_theory(&mut rng, levels);
        let e = random_evidence(&mut rng, &atoms);
        let state = MapState::new(&th, &e, &constants).unwrap();
        let n = th.levels().len();
        assert!(state.cutoff.sat_calls <= (n as f64 + 1.0).log2().ceil() as usize + 1);
        let linear = th.levels().into_iter().find(|&l| cut_consistent(&th.cut(l), &atoms, &e, &constants));
        assert_eq!(state.cutoff.level, linear);
        let best = maximal_worlds(&th, &atoms, &e, &constants);
        let mut state = state;
        for a in &atoms {
            let expected = best.iter().all(|w| w.contains(a));
            assert_eq!(state.entails(a), expected, "{a} under {}", th.to_text(&Symbols::numbered(2)));
        }
        let pred = map_prediction(&th, &e, &constants).unwrap();
        let expected: BTreeSet<Atom> = atoms.iter().filter(|a| best.iter().all(|w| w.contains(a))).cloned().collect();
        assert_eq!(pred, expected);
        for l in e.iter().filter(|l| l.positive) {
            assert!(pred.contains(&l.atom));
        }
    }
}
