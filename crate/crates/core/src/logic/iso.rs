use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};

use super::ground::Assignments;
use super::{theta_subsumes, Atom, Clause, Constant, Substitution, Term, Variable};
use crate::query::{satisfiable, AtomIndex, ConjunctiveQuery, Constraint};

const WL_ROUNDS: usize = 3;

/// A set of ground atoms over an explicit constant set, which may contain
/// constants occurring in no atom.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Structure {
    pub constants: BTreeSet<Constant>,
    pub atoms: BTreeSet<Atom>,
}

impl Structure {
    pub fn new(constants: impl IntoIterator<Item = Constant>, atoms: impl IntoIterator<Item = Atom>) -> Self {
        let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
        let mut constants: BTreeSet<Constant> = constants.into_iter().collect();
        for a in &atoms {
            constants.extend(a.constants());
        }
        Structure { constants, atoms }
    }
}

/// Is there a bijection of constants mapping `a`'s atoms exactly onto `b`'s?
pub fn isomorphic(a: &Structure, b: &Structure) -> bool {
    if a.constants.len() != b.constants.len() || a.atoms.len() != b.atoms.len() {
        return false;
    }
    if wl_hash_structure(a) != wl_hash_structure(b) {
        return false;
    }
    // a's constants become variables, b is the data; an injective map between
    // equal-size sets is a bijection and, with equal atom counts, maps the
    // atoms onto b's atoms
    let dense_b: HashMap<Constant, u32> = b.constants.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
    let as_var: HashMap<Constant, Variable> =
        a.constants.iter().enumerate().map(|(i, &c)| (c, Variable(i as u32))).collect();
    let data: Vec<Atom> = b.atoms.iter().map(|x| x.map_constants(|c| Constant(dense_b[&c]))).collect();
    let index = AtomIndex::new(b.constants.len(), &data);
    let mut q = ConjunctiveQuery::from_atoms(a.atoms.iter().map(|x| Atom {
        predicate: x.predicate.clone(),
        args: x.args.iter().map(|t| Term::Var(as_var[&t.as_const().expect("ground atom")])).collect(),
    }));
    let vars: Vec<Variable> = as_var.values().copied().collect();
    q.add_constraint(Constraint::AllDiff(vars));
    satisfiable(&q, &index)
}

fn h<T: Hash>(x: T) -> u64 {
    let mut s = DefaultHasher::new();
    x.hash(&mut s);
    s.finish()
}

/// splitmix64 finalizer, so that summing labels behaves like a multiset hash.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn wl<'a>(
    literals: impl IntoIterator<Item = (bool, &'a Atom)>,
    extra_terms: impl IntoIterator<Item = Term>,
    term_label: impl Fn(Term) -> u64,
    salt: u64,
) -> u64 {
    let literals: Vec<(bool, &Atom)> = literals.into_iter().collect();
    let mut terms: Vec<Term> = Vec::new();
    let mut term_id: HashMap<Term, usize> = HashMap::new();
    let mut intern = |t: Term, terms: &mut Vec<Term>| -> usize {
        *term_id.entry(t).or_insert_with(|| {
            terms.push(t);
            terms.len() - 1
        })
    };
    let args: Vec<Vec<usize>> =
        literals.iter().map(|(_, a)| a.args.iter().map(|&t| intern(t, &mut terms)).collect()).collect();
    for t in extra_terms {
        intern(t, &mut terms);
    }
    let mut tl: Vec<u64> = terms.iter().map(|&t| term_label(t)).collect();
    let mut ll: Vec<u64> =
        literals.iter().map(|(sign, a)| h((sign, a.predicate.name(), a.predicate.arity()))).collect();
    for _ in 0..WL_ROUNDS {
        let new_l: Vec<u64> =
            ll.iter().zip(&args).map(|(&l, xs)| h((l, xs.iter().map(|&t| tl[t]).collect::<Vec<_>>()))).collect();
        let mut acc = vec![0u64; terms.len()];
        for (i, xs) in args.iter().enumerate() {
            for (pos, &t) in xs.iter().enumerate() {
                acc[t] = acc[t].wrapping_add(mix(h((ll[i], pos))));
            }
        }
        tl = tl.iter().zip(&acc).map(|(&l, &a)| h((l, a))).collect();
        ll = new_l;
    }
    let sum = |xs: &[u64]| xs.iter().fold(0u64, |s, &x| s.wrapping_add(mix(x)));
    h((salt, terms.len(), literals.len(), sum(&tl), sum(&ll)))
}

/// Weisfeiler-Lehman style hash of a clause, invariant under variable
/// renaming and literal order.
pub fn wl_hash(c: &Clause) -> u64 {
    wl(
        c.literals().iter().map(|l| (l.positive, &l.atom)),
        [],
        |t| match t {
            Term::Var(_) => h("var"),
            Term::Const(k) => h(("const", k.0)),
        },
        h(("clause", c.all_diff())),
    )
}

/// Hash of a ground structure, invariant under constant bijections.
pub fn wl_hash_structure(s: &Structure) -> u64 {
    wl(s.atoms.iter().map(|a| (true, a)), s.constants.iter().map(|&c| Term::Const(c)), |_| h("const"), h("structure"))
}

/// Are `a` and `b` equal up to a bijective renaming of variables?
pub fn clauses_isomorphic(a: &Clause, b: &Clause) -> bool {
    a.len() == b.len()
        && a.all_diff() == b.all_diff()
        && a.variables().len() == b.variables().len()
        && wl_hash(a) == wl_hash(b)
        && injective_subsumes(a, b)
}

fn injective_subsumes(a: &Clause, b: &Clause) -> bool {
    let forced = a.clone().with_all_diff(true);
    let target = b.clone().with_all_diff(true);
    theta_subsumes(&forced, &target)
}

const CANONICAL_MAX_VARS: usize = 8;

/// The least renaming of `c` (in clause order) over all variable
/// permutations; above eight variables, the first-occurrence renaming.
pub fn canonical_clause(c: &Clause) -> Clause {
    let vars = c.variables();
    if vars.len() > CANONICAL_MAX_VARS {
        return c.normalized();
    }
    let mut best: Option<Clause> = None;
    for perm in Assignments::new(vars.len(), vars.len(), true) {
        let theta = Substitution::from_pairs(vars.iter().zip(&perm).map(|(&v, &p)| (v, Term::Var(Variable(p as u32)))));
        let cand = c.substitute(&theta);
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    }
    best.unwrap_or_else(|| c.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{atom, cst, var, Literal};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(n: u32, atoms: Vec<Atom>) -> Structure {
        Structure::new((0..n).map(Constant), atoms)
    }

    #[test]
    fn friends_class_members_are_isomorphic() {
        let a = s(2, vec![atom("fr", &[cst(0), cst(1)]), atom("fr", &[cst(1), cst(0)]), atom("sm", &[cst(0)])]);
        let b = s(2, vec![atom("fr", &[cst(1), cst(0)]), atom("fr", &[cst(0), cst(1)]), atom("sm", &[cst(1)])]);
        assert!(isomorphic(&a, &b));
        assert!(isomorphic(&a, &a));
        let one = s(2, vec![atom("sm", &[cst(0)])]);
        let two = s(2, vec![atom("sm", &[cst(0)]), atom("sm", &[cst(1)])]);
        assert!(!isomorphic(&one, &two));
    }

    #[test]
    fn isolated_constants_matter() {
        let a = s(2, vec![atom("sm", &[cst(0)])]);
        let b = s(3, vec![atom("sm", &[cst(0)])]);
        assert!(!isomorphic(&a, &b));
    }

    fn pxy_qy(x: u32, y: u32, swap: bool) -> Clause {
        let p = Literal::pos(atom("p", &[var(x), var(y)]));
        let q = Literal::pos(atom("q", &[var(y)]));
        if swap {
            Clause::new([q, p], true)
        } else {
            Clause::new([p, q], true)
        }
    }

    #[test]
    fn wl_hash_ignores_renaming_and_order() {
        assert_eq!(wl_hash(&pxy_qy(23, 24, false)), wl_hash(&pxy_qy(0, 1, false)));
        assert_eq!(wl_hash(&pxy_qy(23, 24, false)), wl_hash(&pxy_qy(0, 1, true)));
        let pxy = Clause::new([Literal::pos(atom("p", &[var(0), var(1)]))], true);
        let pxx = Clause::new([Literal::pos(atom("p", &[var(0), var(0)]))], true);
        assert_ne!(wl_hash(&pxy), wl_hash(&pxx));
        assert!(!clauses_isomorphic(&pxy, &pxx));
    }

    #[test]
    fn canonical_form_identifies_isomorphic_clauses() {
        let a = Clause::new(
            [Literal::neg(atom("fr", &[var(0), var(1)])), Literal::pos(atom("fr", &[var(1), var(0)]))],
            true,
        );
        let b = Clause::new(
            [Literal::neg(atom("fr", &[var(5), var(2)])), Literal::pos(atom("fr", &[var(2), var(5)]))],
            true,
        );
        assert_eq!(canonical_clause(&a), canonical_clause(&b));
        assert!(clauses_isomorphic(&a, &b));
    }

    fn random_structure(rng: &mut ChaCha8Rng) -> Structure {
        let n = rng.gen_range(1..=4u32);
        let mut atoms = Vec::new();
        for _ in 0..rng.gen_range(0..8) {
            if rng.gen_bool(0.4) {
                atoms.push(atom("p", &[cst(rng.gen_range(0..n))]));
            } else {
                atoms.push(atom("r", &[cst(rng.gen_range(0..n)), cst(rng.gen_range(0..n))]));
            }
        }
        s(n, atoms)
    }

    fn permute(x: &Structure, rng: &mut ChaCha8Rng) -> Structure {
        let mut perm: Vec<u32> = (0..x.constants.len() as u32).collect();
        perm.shuffle(rng);
        Structure::new(
            x.constants.iter().map(|c| Constant(perm[c.index()])),
            x.atoms.iter().map(|a| a.map_constants(|c| Constant(perm[c.index()]))),
        )
    }

    /// Oracle: try every bijection.
    fn brute_isomorphic(a: &Structure, b: &Structure) -> bool {
        let n = a.constants.len();
        if n != b.constants.len() {
            return false;
        }
        let ac: Vec<Constant> = a.constants.iter().copied().collect();
        let bc: Vec<Constant> = b.constants.iter().copied().collect();
        Assignments::new(n, n, true).any(|p| {
            let map: HashMap<Constant, Constant> = (0..n).map(|i| (ac[i], bc[p[i]])).collect();
            let image: BTreeSet<Atom> = a.atoms.iter().map(|x| x.map_constants(|c| map[&c])).collect();
            image == b.atoms
        })
    }

    #[test]
    fn isomorphism_matches_bijection_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..400 {
            let a = random_structure(&mut rng);
            let b = if rng.gen_bool(0.5) { permute(&a, &mut rng) } else { random_structure(&mut rng) };
            let iso = isomorphic(&a, &b);
            assert_eq!(iso, brute_isomorphic(&a, &b));
            assert_eq!(iso, isomorphic(&b, &a));
            if iso {
                assert_eq!(wl_hash_structure(&a), wl_hash_structure(&b));
            }
        }
    }

    #[test]
    fn isomorphism_is_transitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let a = random_structure(&mut rng);
            let b = permute(&a, &mut rng);
            let c = permute(&b, &mut rng);
            assert!(isomorphic(&a, &b) && isomorphic(&b, &c) && isomorphic(&a, &c));
        }
    }
}
