use std::collections::BTreeSet;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::counting::tests::random_example;
use crate::counting::{CountMethod, CountingPolicy, ModelCountMode};
use crate::data::{binomial, language_atoms, parse_example, GlobalExample};
use crate::logic::{parse_clause, Atom, Clause, Constant, HornRule, Literal, Symbols};
use crate::possibilistic::{map_prediction, satisfies, StratifiedTheory};

const FRIENDS: &str = "fr(alice,bob)\nfr(bob,alice)\nfr(bob,eve)\nfr(eve,bob)\nsm(alice)\n";

fn clause(text: &str) -> Clause {
    parse_clause(text, &mut Symbols::new()).unwrap()
}

fn estimator<'a>(ex: &'a GlobalExample, delta: &[Clause], k: usize) -> ParamEstimator<'a> {
    ParamEstimator::new(ex, delta, k, CountingPolicy::default(), ModelCountMode::Ground, 1)
}

fn params(e: &[f64], m: &[f64]) -> StratumParams {
    let n = e.len() - 1;
    StratumParams {
        ordering: vec![Clause::bottom(); n],
        e_counts: e.to_vec(),
        m_counts: m.to_vec(),
        e_methods: vec![CountMethod::ExactNaive; n + 1],
        m_methods: vec![CountMethod::ExactNaive; n + 1],
    }
}

fn brute_e(ex: &GlobalExample, cut: &[Clause], k: usize) -> f64 {
    (0..ex.n_constants() as u32)
        .map(Constant)
        .combinations(k)
        .filter(|s| {
            let world: BTreeSet<Atom> =
                ex.atoms().iter().filter(|a| a.constants().all(|c| s.contains(&c))).cloned().collect();
            cut.iter().all(|c| satisfies(&world, c, s))
        })
        .count() as f64
}

fn brute_m(ex: &GlobalExample, cut: &[Clause], k: usize) -> f64 {
    let atoms = language_atoms(ex.signature(), k);
    let consts: Vec<Constant> = (0..k as u32).map(Constant).collect();
    (0..1u64 << atoms.len())
        .filter(|mask| {
            let w: BTreeSet<Atom> =
                (0..atoms.len()).filter(|&i| mask >> i & 1 == 1).map(|i| atoms[i].clone()).collect();
            cut.iter().all(|c| satisfies(&w, c, &consts))
        })
        .count() as f64
}

#[test]
fn bottom_only_params() {
    let ex = parse_example(FRIENDS, None).unwrap();
    let p = estimator(&ex, &[], 1).estimate(&[]).unwrap();
    assert_eq!(p.m_counts, vec![0.0, 4.0]);
    assert_eq!(p.e_counts, vec![0.0, 3.0]);
}

#[test]
fn irreflexive_cut_params() {
    let ex = parse_example("fr(a,b)\nfr(b,c)\n", None).unwrap();
    let p = estimator(&ex, &[], 2).estimate(&[clause("!fr(X,X)")]).unwrap();
    assert_eq!(p.m_counts, vec![0.0, 4.0, 16.0]);
    assert_eq!(p.e_counts, vec![0.0, 3.0, 3.0]);
}

fn random_horn(rng: &mut impl Rng) -> Clause {
    let preds = [("p", 1), ("r", 2)];
    let atom = |rng: &mut ChaCha8Rng| {
        let (name, arity) = preds[rng.gen_range(0..2)];
        let args: Vec<String> = (0..arity).map(|_| ["X", "Y"][rng.gen_range(0..2)].to_string()).collect();
        format!("{name}({})", args.join(","))
    };
    let mut r = ChaCha8Rng::seed_from_u64(rng.gen());
    let head = atom(&mut r);
    let body: Vec<String> = (0..r.gen_range(0..=2)).map(|_| format!("!{}", atom(&mut r))).collect();
    let text = std::iter::once(head).chain(body).join(" v ");
    clause(&text)
}

#[test]
fn params_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..25 {
        let n = rng.gen_range(2..=6);
        let ex = random_example(&mut rng, n);
        let k = rng.gen_range(1..=2);
        let soft: Vec<Clause> = (0..rng.gen_range(0..=3)).map(|_| random_horn(&mut rng)).collect();
        let p = estimator(&ex, &[], k).estimate(&soft).unwrap();
        assert_eq!(p.e_counts.len(), soft.len() + 2);
        assert_eq!((p.e_counts[0], p.m_counts[0]), (0.0, 0.0));
        for i in 1..=soft.len() + 1 {
            let cut = &soft[i - 1..];
            // clamping only ever lowers counts toward a smaller cut
            assert!(p.e_counts[i] <= brute_e(&ex, cut, k) + 1e-9);
            assert!(p.m_counts[i] <= brute_m(&ex, cut, k) + 1e-9);
            let exact = estimator(&ex, &[], k).cut_counts(cut).unwrap();
            assert_eq!(exact.e.value, brute_e(&ex, cut, k), "{cut:?}");
            assert_eq!(exact.m.value, brute_m(&ex, cut, k), "{cut:?}");
            assert!(p.e_counts[i - 1] <= p.e_counts[i]);
            assert!(p.m_counts[i - 1] <= p.m_counts[i]);
        }
        assert_eq!(p.e_counts[soft.len() + 1], binomial(n, k) as f64);
    }
}

#[test]
fn cache_replays_are_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let ex = random_example(&mut rng, 5);
    let soft: Vec<Clause> = (0..3).map(|_| random_horn(&mut rng)).collect();
    let mut a = estimator(&ex, &[], 2);
    let first = a.estimate(&soft).unwrap();
    let again = a.estimate(&soft).unwrap();
    assert_eq!(first, again);
    assert!(a.hits > soft.len());
    let fresh = estimator(&ex, &[], 2).estimate(&soft).unwrap();
    assert_eq!(first, fresh);
}

#[test]
fn gp_closed_forms() {
    let s = solve_gp(&params(&[0.0, 5.0], &[0.0, 4.0])).unwrap();
    assert!((s.lambdas[0] - 0.75).abs() < 1e-12);
    let p = params(&[0.0, 8.0, 10.0], &[0.0, 4.0, 16.0]);
    let s = solve_gp(&p).unwrap();
    assert!((s.lambdas[0] - 0.8).abs() < 1e-12);
    assert!((s.lambdas[1] - (1.0 - 1.0 / 60.0)).abs() < 1e-12);
    let (grid, ll) = grid_optimum(&p, 1000).unwrap();
    for (a, b) in s.lambdas.iter().zip(&grid) {
        assert!((a - b).abs() < 1e-3);
    }
    assert!(s.log_likelihood >= ll - 1e-9);
    assert!(solve_gp(&params(&[0.0, 1.0], &[0.0, 0.0])).is_err());
}

#[test]
fn gp_pools_order_violations() {
    // more evidence per world at the higher level forces equal weights
    let p = params(&[0.0, 1.0, 9.0], &[0.0, 10.0, 12.0]);
    let s = solve_gp(&p).unwrap();
    assert!((s.lambdas[0] - s.lambdas[1]).abs() < 1e-12);
    assert!((s.lambdas[0] - (1.0 - 1.0 / 12.0)).abs() < 1e-12);
    let (_, ll) = grid_optimum(&p, 2000).unwrap();
    assert!(s.log_likelihood >= ll - 1e-9);
    let flat = params(&[0.0, 4.0, 4.0], &[0.0, 2.0, 8.0]);
    let s = solve_gp(&flat).unwrap();
    let (_, ll) = grid_optimum(&flat, 2000).unwrap();
    assert!((s.log_likelihood - ll).abs() < 1e-3);
}

fn random_params(rng: &mut impl Rng, n: usize) -> StratumParams {
    let mut e = vec![0.0];
    let mut m = vec![0.0];
    for _ in 0..n {
        e.push(e.last().unwrap() + rng.gen_range(0..20) as f64);
        m.push(m.last().unwrap() + rng.gen_range(1..30) as f64);
    }
    params(&e, &m)
}

#[test]
fn gp_beats_grid_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..60 {
        let n = rng.gen_range(2..=3);
        let p = random_params(&mut rng, n);
        let s = solve_gp(&p).unwrap();
        assert!(s.converged);
        assert!(s.residuals.monotonicity <= 1e-9);
        assert!(s.residuals.normalization <= 1e-6);
        let mass: f64 = (0..n).map(|i| (1.0 - s.lambdas[i]) * (p.m_counts[i + 1] - p.m_counts[i])).sum();
        assert!((mass - 1.0).abs() < 1e-6);
        let (_, ll) = grid_optimum(&p, if n == 2 { 2000 } else { 300 }).unwrap();
        assert!(s.log_likelihood >= ll - 1e-4, "{p:?}: {} < {ll}", s.log_likelihood);
        let g = solve_gp_gradient(&p).unwrap();
        assert!((g.log_likelihood - s.log_likelihood).abs() < 1e-5, "{p:?}: {g:?} vs {s:?}");
    }
}

#[test]
fn greedy_without_candidates() {
    let ex = parse_example(FRIENDS, None).unwrap();
    let delta = vec![clause("!fr(X,X)"), clause("!fr(X,Y) v fr(Y,X)")];
    let mut est = estimator(&ex, &delta, 2);
    let out = greedy_build(&[], &mut est, &GreedyConfig::default()).unwrap();
    assert_eq!(out.theory.hard().len(), 2);
    assert_eq!(out.theory.len(), 3);
    // 2^6 worlds, of which irreflexivity and symmetry leave 2^2 · 2 = 8
    let bottom = out.theory.bottom_weight().unwrap();
    assert!((bottom - (1.0 - 1.0 / 8.0)).abs() < 1e-12);
}

#[test]
fn greedy_rejects_unsupported_rules() {
    let ex = parse_example("@predicates sm/1\nfr(a,b)\nfr(b,c)\n", None).unwrap();
    let mut est = estimator(&ex, &[], 1);
    let rule = HornRule::from_clause(&clause("sm(X)")).unwrap();
    let out = greedy_build(&[rule], &mut est, &GreedyConfig::default()).unwrap();
    assert_eq!(out.steps.len(), 1);
    assert!(!out.steps[0].accepted);
    assert!(out.ordering.is_empty());
}

fn smokers() -> GlobalExample {
    let mut text = String::new();
    for i in 0..6 {
        text.push_str(&format!("sm(s{i})\nfr(s{i},s{})\nfr(s{},s{i})\n", (i + 1) % 6, (i + 1) % 6));
        text.push_str(&format!("fr(n{i},n{})\nfr(n{},n{i})\n", (i + 1) % 6, (i + 1) % 6));
    }
    parse_example(&text, None).unwrap()
}

#[test]
fn greedy_accepts_supported_rules() {
    let ex = smokers();
    let mut est = estimator(&ex, &[], 2);
    let good = HornRule::from_clause(&clause("sm(X) v !fr(X,Y) v !sm(Y)")).unwrap();
    let sym = HornRule::from_clause(&clause("fr(X,Y) v !fr(Y,X)")).unwrap();
    let out = greedy_build(&[good, sym], &mut est, &GreedyConfig::default()).unwrap();
    assert!(out.steps.iter().all(|s| s.accepted), "{:?}", out.steps);
    assert_eq!(out.ordering.len(), 2);
    assert!(out.trace.windows(2).all(|w| w[1] > w[0]));
    assert!(out.steps[0].log_line().contains("accept"));
    assert!(out.solution.lambdas.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn simplify_examples() {
    let mut s = Symbols::new();
    let sym = parse_clause("fr(Y,X) v !fr(X,Y)", &mut s).unwrap();
    let rule = parse_clause("sm(X) v !fr(X,Y) v !fr(Y,X)", &mut s).unwrap();
    let th = StratifiedTheory::new([(sym.clone(), 1.0), (rule, 0.7), (Clause::bottom(), 0.1)]).unwrap();
    let out = simplify(&th, 2);
    let soft: Vec<&Clause> = out.formulas().iter().filter(|f| f.weight == 0.7).map(|f| &f.clause).collect();
    assert_eq!(soft.len(), 1);
    assert_eq!(soft[0].len(), 2);
    let dup = StratifiedTheory::new([(sym.clone(), 1.0), (sym.clone().with_all_diff(true), 0.5)]).unwrap();
    assert_eq!(simplify(&dup, 2).len(), 1);
    let a = parse_clause("sm(X) v !ca(X)", &mut s).unwrap();
    let b = parse_clause("fr(X,Y) v !co(X,Y)", &mut s).unwrap();
    let indep = StratifiedTheory::new([(a, 0.6), (b, 0.8), (Clause::bottom(), 0.2)]).unwrap();
    assert_eq!(simplify(&indep, 2), indep);
}

#[test]
fn simplify_preserves_map() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let consts: Vec<Constant> = vec![Constant(0), Constant(1)];
    let sig_ex = random_example(&mut rng, 2);
    let atoms = language_atoms(sig_ex.signature(), 2);
    for _ in 0..40 {
        let mut formulas: Vec<(Clause, f64)> =
            (0..rng.gen_range(1..=5)).map(|_| (random_horn(&mut rng), rng.gen_range(1..=4) as f64 / 4.0)).collect();
        formulas.push((Clause::bottom(), 0.1));
        let th = StratifiedTheory::new(formulas).unwrap();
        let simple = simplify(&th, 2);
        for _ in 0..20 {
            let mut e = Vec::new();
            for a in &atoms {
                if rng.gen_bool(0.3) {
                    e.push(Literal { atom: a.clone(), positive: rng.gen_bool(0.5) });
                }
            }
            assert_eq!(map_prediction(&th, &e, &consts).unwrap(), map_prediction(&simple, &e, &consts).unwrap());
        }
    }
}
