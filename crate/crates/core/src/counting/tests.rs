use std::collections::BTreeSet;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::data::{binomial, parse_example, GlobalExample};
use crate::logic::{atom, parse_clause, var, Atom, Clause, Constant, Literal, Predicate, Symbols, Variable};
use crate::query::{ConjunctiveQuery, Constraint};

const FRIENDS: &str = "fr(alice,bob)\nfr(bob,alice)\nfr(bob,eve)\nfr(eve,bob)\nsm(alice)\n";

fn names(ex: &GlobalExample, sets: &BTreeSet<Subset>) -> BTreeSet<BTreeSet<String>> {
    sets.iter().map(|s| s.iter().map(|&c| ex.symbols().name(c).to_string()).collect()).collect()
}

fn set_of(names: &[&[&str]]) -> BTreeSet<BTreeSet<String>> {
    names.iter().map(|s| s.iter().map(|x| x.to_string()).collect()).collect()
}

fn q(lits: &[Literal]) -> ConjunctiveQuery {
    ConjunctiveQuery::new(lits.to_vec())
}

#[test]
fn k_extension_shapes() {
    let fr = q(&[Literal::pos(atom("fr", &[var(0), var(1)]))]);
    let ext = k_extension(&fr, 3).unwrap();
    assert_eq!(ext.variables.len(), 3);
    assert_eq!(ext.constraints, vec![Constraint::Card { k: 3, vars: ext.variables.clone() }]);
    let exact = k_extension(&fr, 2).unwrap();
    assert_eq!(exact.variables, fr.variables);
    let sm = k_extension(&q(&[Literal::pos(atom("sm", &[var(0)]))]), 1).unwrap();
    assert_eq!(sm.constraints, vec![Constraint::Card { k: 1, vars: vec![Variable(0)] }]);
    assert!(matches!(k_extension(&fr, 1), Err(CountError::TooManyVariables { vars: 2, k: 1 })));
}

#[test]
fn set_partitions_are_bell_numbers() {
    let counts: Vec<usize> = (0..6).map(|n| set_partitions(n).len()).collect();
    assert_eq!(counts, vec![1, 1, 2, 5, 15, 52]);
}

#[test]
fn friends_matching_subsets() {
    let ex = parse_example(FRIENDS, None).unwrap();
    let fr = SubsetTask::new(&q(&[Literal::pos(atom("fr", &[var(0), var(1)]))]), 2);
    let sm = SubsetTask::new(&q(&[Literal::pos(atom("sm", &[var(0)]))]), 2);
    let top = SubsetTask::new(&ConjunctiveQuery::default(), 2);
    for (task, expected) in [
        (&fr, set_of(&[&["alice", "bob"], &["bob", "eve"]])),
        (&sm, set_of(&[&["alice", "bob"], &["alice", "eve"]])),
        (&top, set_of(&[&["alice", "bob"], &["alice", "eve"], &["bob", "eve"]])),
    ] {
        assert_eq!(names(&ex, &matching_subsets_naive(&ex, task, None).unwrap()), expected);
        assert_eq!(names(&ex, &matching_subsets_alg1(&ex, task, &[], None).unwrap().0), expected);
    }
}

#[test]
fn zero_matches_empties_early() {
    let ex = parse_example(FRIENDS, None).unwrap();
    let task = SubsetTask::new(&q(&[Literal::pos(atom("ca", &[var(0)]))]), 2);
    let (sets, stats) = matching_subsets_alg1(&ex, &task, &[], None).unwrap();
    assert!(sets.is_empty());
    assert_eq!(stats.csp_calls, 1);
}

/// Subsets 𝒮 such that some assignment of the query's variables into 𝒮
/// satisfies it against Υ⟨𝒮⟩, by enumeration.
pub(crate) fn brute_matching(ex: &GlobalExample, query: &ConjunctiveQuery, k: usize) -> BTreeSet<Subset> {
    let vars = &query.variables;
    let mut out = BTreeSet::new();
    for s in (0..ex.n_constants() as u32).map(Constant).combinations(k) {
        let hit = (0..vars.len()).map(|_| s.iter().copied()).multi_cartesian_product().any(|vals| {
            let vals: Vec<Constant> = if vars.is_empty() { vec![] } else { vals };
            let val = |v: Variable| vals[vars.iter().position(|&w| w == v).unwrap()];
            let lits_ok = query.literals.iter().all(|l| {
                let args: Vec<Constant> =
                    l.atom.args.iter().map(|t| t.as_var().map(val).unwrap_or_else(|| t.as_const().unwrap())).collect();
                ex.contains(&Atom::ground(l.atom.predicate.clone(), &args)) == l.positive
            });
            let cons_ok = query.constraints.iter().all(|c| match c {
                Constraint::AllDiff(vs) => vs.iter().map(|&v| val(v)).all_unique(),
                _ => unreachable!(),
            });
            lits_ok && cons_ok
        });
        if hit || (vars.is_empty() && query.literals.is_empty()) {
            out.insert(s.into_iter().collect());
        }
    }
    out
}

pub(crate) fn random_example(rng: &mut impl Rng, n: usize) -> GlobalExample {
    let p = Predicate::new("p", 1);
    let r = Predicate::new("r", 2);
    let mut atoms = Vec::new();
    let dp = rng.gen_range(0.1..0.7);
    let dr = rng.gen_range(0.05..0.4);
    for a in 0..n as u32 {
        if rng.gen_bool(dp) {
            atoms.push(Atom::ground(p.clone(), &[Constant(a)]));
        }
        for b in 0..n as u32 {
            if rng.gen_bool(dr) {
                atoms.push(Atom::ground(r.clone(), &[Constant(a), Constant(b)]));
            }
        }
    }
    GlobalExample::new(Symbols::numbered(n), atoms, [p, r]).unwrap()
}

pub(crate) fn random_query(rng: &mut impl Rng, max_vars: u32) -> ConjunctiveQuery {
    let nv = rng.gen_range(1..=max_vars);
    let lits: Vec<Literal> = (0..rng.gen_range(1..=3))
        .map(|_| {
            let a = if rng.gen_bool(0.4) {
                atom("p", &[var(rng.gen_range(0..nv))])
            } else {
                atom("r", &[var(rng.gen_range(0..nv)), var(rng.gen_range(0..nv))])
            };
            Literal { atom: a, positive: rng.gen_bool(0.75) }
        })
        .collect();
    let mut query = ConjunctiveQuery::new(lits);
    if query.variables.len() > 1 && rng.gen_bool(0.5) {
        let vs = query.variables.clone();
        query.add_constraint(Constraint::AllDiff(vs));
    }
    query
}

#[test]
fn exact_methods_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..150 {
        let n = rng.gen_range(1..=7);
        let ex = random_example(&mut rng, n);
        let k = rng.gen_range(1..=n.min(4));
        let query = random_query(&mut rng, k.min(3) as u32);
        let task = SubsetTask::new(&query, k);
        let expected = brute_matching(&ex, &query, k);
        assert_eq!(matching_subsets_naive(&ex, &task, None).unwrap(), expected, "{query:?} k={k}");
        let (alg1, stats) = matching_subsets_alg1(&ex, &task, &[], None).unwrap();
        assert_eq!(alg1, expected);
        for t in &alg1 {
            assert!(stats.partials.iter().filter(|s| s.is_subset(t)).count() <= 1 << k);
        }
    }
}

#[test]
fn union_tasks_match_the_union_of_matches() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..60 {
        let n = rng.gen_range(2..=6);
        let ex = random_example(&mut rng, n);
        let k = rng.gen_range(1..=n.min(3));
        let qs: Vec<ConjunctiveQuery> = (0..3).map(|_| random_query(&mut rng, k as u32)).collect();
        let task = SubsetTask::union(k, &qs);
        let expected: BTreeSet<Subset> = qs.iter().flat_map(|q| brute_matching(&ex, q, k)).collect();
        assert_eq!(matching_subsets_alg1(&ex, &task, &[], None).unwrap().0, expected);
    }
}

#[test]
fn sampled_interval_covers_the_density() {
    let ex = parse_example(FRIENDS, None).unwrap();
    let task = SubsetTask::new(&q(&[Literal::pos(atom("fr", &[var(0), var(1)]))]), 2);
    let policy = CountingPolicy { sample_budget: 200, ..CountingPolicy::default() };
    let mut covered = 0;
    for seed in 0..100 {
        let (report, _) = count_sampled(&ex, &task, &policy, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (lo, hi) = report.ci.unwrap();
        if lo <= 2.0 && 2.0 <= hi {
            covered += 1;
        }
    }
    assert!(covered >= 90, "{covered}");
    let all = SubsetTask::new(&ConjunctiveQuery::default(), 2);
    let (report, usable) = count_sampled(&ex, &all, &policy, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(report.value, 3.0);
    assert!(usable);
    let none = SubsetTask::new(&q(&[Literal::pos(atom("ca", &[var(0)]))]), 2);
    let (report, usable) = count_sampled(&ex, &none, &policy, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    assert_eq!(report.value, 0.0);
    assert!(!usable);
}

/// 18 constants, p true on 3 of them: pairs touching p number 3·15 + 3 = 48.
fn forty_eight() -> (GlobalExample, SubsetTask) {
    let mut text = String::from("@constants");
    for i in 0..18 {
        text.push_str(&format!(" c{i}"));
    }
    text.push_str("\np(c0)\np(c1)\np(c2)\n");
    let ex = parse_example(&text, None).unwrap();
    (ex, SubsetTask::new(&q(&[Literal::pos(atom("p", &[var(0)]))]), 2))
}

#[test]
fn xor_counts_small_spaces_exactly() {
    let (ex, task) = forty_eight();
    assert_eq!(matching_subsets_alg1(&ex, &task, &[], None).unwrap().0.len(), 48);
    let policy = CountingPolicy::default();
    let mut within = 0;
    for seed in 0..100 {
        let r = count_xor_approx(&ex, &task, &policy, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        if r.value >= 48.0 / 1.8 && r.value <= 48.0 * 1.8 {
            within += 1;
        }
    }
    assert!(within >= 80);
    let ex1 = parse_example(FRIENDS, None).unwrap();
    let none = SubsetTask::new(&q(&[Literal::pos(atom("ca", &[var(0)]))]), 2);
    assert_eq!(count_xor_approx(&ex1, &none, &policy, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().value, 0.0);
    let one =
        SubsetTask::new(&q(&[Literal::pos(atom("sm", &[var(0)])), Literal::pos(atom("fr", &[var(0), var(1)]))]), 2);
    assert_eq!(count_xor_approx(&ex1, &one, &policy, &mut ChaCha8Rng::seed_from_u64(0)).unwrap().value, 1.0);
}

#[test]
fn xor_counts_large_spaces_within_tolerance() {
    // pairs over 40 constants touching one of 8 marked ones: 8·32 + 28 = 284
    let mut text = String::from("@constants");
    for i in 0..40 {
        text.push_str(&format!(" c{i}"));
    }
    text.push('\n');
    for i in 0..8 {
        text.push_str(&format!("p(c{i})\n"));
    }
    let ex = parse_example(&text, None).unwrap();
    let task = SubsetTask::new(&q(&[Literal::pos(atom("p", &[var(0)]))]), 2);
    assert_eq!(matching_subsets_alg1(&ex, &task, &[], None).unwrap().0.len(), 284);
    let policy = CountingPolicy::default();
    let mut within = 0;
    for seed in 0..10 {
        let r = count_xor_approx(&ex, &task, &policy, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        if r.value >= 284.0 / 1.8 && r.value <= 284.0 * 1.8 {
            within += 1;
        }
    }
    assert!(within >= 8, "{within}");
}

#[test]
fn approx_parameters() {
    assert_eq!(pivot(0.8), 72);
    assert_eq!(rounds(0.2), 67);
}

fn sig(preds: &[(&str, usize)]) -> BTreeSet<Predicate> {
    preds.iter().map(|&(n, a)| Predicate::new(n, a)).collect()
}

fn clause(text: &str) -> Clause {
    parse_clause(text, &mut Symbols::new()).unwrap()
}

fn brute_model_count(formulas: &[Clause], signature: &BTreeSet<Predicate>, k: usize) -> u128 {
    let atoms = crate::data::language_atoms(signature, k);
    let consts: Vec<Constant> = (0..k as u32).map(Constant).collect();
    let grounded: Vec<Clause> = formulas.iter().flat_map(|f| crate::logic::ground_clause(f, &consts)).collect();
    (0u64..1 << atoms.len())
        .filter(|m| {
            grounded.iter().all(|g| {
                g.literals().iter().any(|l| {
                    let i = atoms.iter().position(|a| *a == l.atom).unwrap();
                    (m >> i & 1 == 1) == l.positive
                })
            })
        })
        .count() as u128
}

#[test]
fn model_count_examples() {
    let fr = sig(&[("fr", 2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let p = CountingPolicy::default();
    let count =
        |fs: &[Clause], rng: &mut ChaCha8Rng| model_count(fs, &fr, 2, ModelCountMode::Ground, &p, rng).unwrap().value;
    assert_eq!(count(&[], &mut rng), 16.0);
    assert_eq!(count(&[clause("!fr(X,X)")], &mut rng), 4.0);
    assert_eq!(count(&[clause("!fr(X,Y) v fr(Y,X)"), clause("!fr(X,X)")], &mut rng), 2.0);
    assert_eq!(count(&[Clause::bottom()], &mut rng), 0.0);
}

#[test]
fn exact_model_count_matches_world_enumeration() {
    let signature = sig(&[("p", 1), ("r", 2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..60 {
        let k = rng.gen_range(1..=3);
        let formulas: Vec<Clause> = (0..rng.gen_range(0..3))
            .map(|_| {
                let query = random_query(&mut rng, 2);
                Clause::new(query.literals.iter().map(Literal::negated), rng.gen_bool(0.6))
            })
            .collect();
        assert_eq!(model_count_exact(&formulas, &signature, k), brute_model_count(&formulas, &signature, k));
    }
}

#[test]
fn ground_and_cutting_plane_agree() {
    let signature = sig(&[("sm", 1), ("fr", 2)]);
    let theories = [
        vec![],
        vec![clause("!fr(X,X) @nodiff")],
        vec![clause("!fr(X,Y) v fr(Y,X)"), clause("!fr(X,X) @nodiff")],
        vec![clause("!sm(X) v !fr(X,Y) v sm(Y)")],
    ];
    let policy = CountingPolicy::default();
    for fs in &theories {
        let exact = model_count_exact(fs, &signature, 3) as f64;
        let g = model_count_xor(fs, &signature, 3, ModelCountMode::Ground, &policy, &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        let c = model_count_xor(
            fs,
            &signature,
            3,
            ModelCountMode::CuttingPlane,
            &policy,
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        assert_eq!(g.value, c.value);
        assert!(g.value >= exact / 1.8 && g.value <= exact * 1.8, "{} vs {exact}", g.value);
    }
    let small = [clause("!fr(X,Y) v fr(Y,X)"), clause("!fr(X,X) @nodiff"), clause("!sm(X)"), clause("!fr(X,Y)")];
    let mut lazy = LazyCells::new(&small, &signature, 3);
    assert_eq!(lazy.bounded_count(&[], 100).unwrap(), 1);
    assert!(lazy.grounded() < 3 + 3 + 6 + 6 + 9);
}

#[test]
fn model_counts_shrink_along_nested_cuts() {
    let signature = sig(&[("p", 1), ("r", 2)]);
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..30 {
        let formulas: Vec<Clause> = (0..4)
            .map(|_| Clause::new(random_query(&mut rng, 2).literals.iter().map(Literal::negated), true))
            .collect();
        let counts: Vec<u128> = (0..=4).map(|i| model_count_exact(&formulas[i..], &signature, 2)).collect();
        assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
    }
}

#[test]
fn dispatch_tiers() {
    let ex1 = parse_example(FRIENDS, None).unwrap();
    let task = SubsetTask::new(&q(&[Literal::pos(atom("fr", &[var(0), var(1)]))]), 2);
    let policy = CountingPolicy::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let r = count_dispatch(&ex1, &task, &policy, &mut rng).unwrap();
    assert_eq!((r.method, r.value), (CountMethod::ExactAlg1, 2.0));

    let mut text = String::from("@constants");
    for i in 0..30 {
        text.push_str(&format!(" c{i}"));
    }
    text.push('\n');
    for i in 0..18 {
        text.push_str(&format!("p(c{i})\n"));
    }
    for i in 0..12 {
        text.push_str(&format!("r(c{i},c{})\n", i + 1));
    }
    let ex = parse_example(&text, None).unwrap();
    let dense = SubsetTask::new(&q(&[Literal::pos(atom("p", &[var(0)]))]), 4);
    let r = count_dispatch(&ex, &dense, &policy, &mut rng).unwrap();
    let exact = (binomial(30, 4) - binomial(12, 4)) as f64;
    assert_eq!(r.method, CountMethod::Sampled);
    let (lo, hi) = r.ci.unwrap();
    assert!(lo <= exact && exact <= hi);

    let path = |a: u32, b: u32| Literal::pos(atom("r", &[var(a), var(b)]));
    let sparse_q = q(&[path(0, 1), path(1, 2), path(2, 3)]).with(Constraint::AllDiff(vec![
        Variable(0),
        Variable(1),
        Variable(2),
        Variable(3),
    ]));
    let sparse = SubsetTask::new(&sparse_q, 4);
    let tight = CountingPolicy { exact_limit_small: 5, exact_limit_large: 20, ..CountingPolicy::default() };
    let r = count_dispatch(&ex, &sparse, &tight, &mut rng).unwrap();
    assert_eq!((r.method, r.value), (CountMethod::XorApprox, 10.0));
    assert_eq!(matching_subsets_alg1(&ex, &sparse, &[], None).unwrap().0.len(), 10);
}

#[test]
fn ordering_fresh_variables_keeps_the_used_sets() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let n = rng.gen_range(3..7);
        let ex = random_example(&mut rng, n);
        let query = random_query(&mut rng, 2);
        let k = rng.gen_range(2..=4);
        let task = SubsetTask::new(&query, k);
        for d in &task.disjuncts {
            let used = |q: &ConjunctiveQuery| {
                let mut out = BTreeSet::new();
                let mut budget = crate::query::Budget::unlimited();
                crate::query::for_each_solution(q, ex.index(), &[], &mut budget, |s| {
                    out.insert(s.used_constants());
                    std::ops::ControlFlow::Continue(())
                })
                .unwrap();
                out
            };
            assert_eq!(used(d), used(&break_fresh_symmetry(d)));
        }
    }
}
