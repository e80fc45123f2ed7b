//! Conjunctive-query CSP solver over a set of ground atoms.
//!
//! Search is backtracking with forward checking: the variable with the
//! smallest current domain is branched on first, values in ascending
//! constant order. Initial domains come from a per-predicate, per-position
//! index of the data. Parity constraints over "constant is used" indicators
//! live in a GF(2) system that is re-eliminated at every node.

pub mod gf2;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::ops::ControlFlow;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::logic::{Atom, Clause, Constant, Literal, Predicate, Term, Variable};
pub use gf2::{Gf2System, Inconsistent, XorConstraint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("variable {0} does not occur in the query")]
    UnknownVariable(Variable),
    #[error("search budget of {limit} nodes exhausted")]
    BudgetExhausted { limit: u64 },
}

#[derive(Clone, Debug, Default)]
struct Table {
    tuples: HashSet<Vec<u32>>,
    by_position: Vec<FixedBitSet>,
}

/// Ground atoms indexed by predicate and argument position. Constants are
/// the dense ids `0..universe`.
#[derive(Clone, Debug, Default)]
pub struct AtomIndex {
    universe: usize,
    tables: HashMap<Predicate, Table>,
    len: usize,
}

impl AtomIndex {
    pub fn new<'a>(universe: usize, atoms: impl IntoIterator<Item = &'a Atom>) -> Self {
        let mut index = AtomIndex { universe, tables: HashMap::new(), len: 0 };
        for a in atoms {
            index.insert(a);
        }
        index
    }

    pub fn insert(&mut self, a: &Atom) {
        let args: Vec<u32> = a.ground_args().iter().map(|c| c.0).collect();
        if let Some(&m) = args.iter().max() {
            assert!((m as usize) < self.universe, "constant {m} outside universe {}", self.universe);
        }
        let universe = self.universe;
        let table = self.tables.entry(a.predicate.clone()).or_insert_with(|| Table {
            tuples: HashSet::new(),
            by_position: vec![FixedBitSet::with_capacity(universe); a.predicate.arity()],
        });
        for (pos, &c) in args.iter().enumerate() {
            table.by_position[pos].insert(c as usize);
        }
        if table.tuples.insert(args) {
            self.len += 1;
        }
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn contains(&self, pred: &Predicate, args: &[u32]) -> bool {
        self.tables.get(pred).is_some_and(|t| t.tuples.contains(args))
    }

    pub fn contains_atom(&self, a: &Atom) -> bool {
        let args: Vec<u32> = a.ground_args().iter().map(|c| c.0).collect();
        self.contains(&a.predicate, &args)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// The listed variables take pairwise distinct values.
    AllDiff(Vec<Variable>),
    /// The set of values taken by the listed variables has exactly `k` elements.
    Card { k: usize, vars: Vec<Variable> },
    /// The variable takes a value from the set.
    In { var: Variable, set: BTreeSet<Constant> },
    /// Values strictly increase along the list.
    Ordered(Vec<Variable>),
}

/// An existentially quantified conjunction of literals plus side constraints.
/// Negative literals are read under the closed-world assumption.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ConjunctiveQuery {
    pub literals: Vec<Literal>,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl ConjunctiveQuery {
    pub fn new(literals: Vec<Literal>) -> Self {
        let mut variables = Vec::new();
        for l in &literals {
            for v in l.atom.variables() {
                if !variables.contains(&v) {
                    variables.push(v);
                }
            }
        }
        ConjunctiveQuery { literals, variables, constraints: Vec::new() }
    }

    pub fn from_atoms(atoms: impl IntoIterator<Item = Atom>) -> Self {
        Self::new(atoms.into_iter().map(Literal::pos).collect())
    }

    /// `∃vars: ¬clause`, i.e. a query whose solutions are the counterexamples
    /// of the clause.
    pub fn negation_of(clause: &Clause) -> Self {
        let mut q = Self::new(clause.literals().iter().map(Literal::negated).collect());
        if clause.all_diff() && q.variables.len() > 1 {
            q.constraints.push(Constraint::AllDiff(q.variables.clone()));
        }
        q
    }

    pub fn with(mut self, c: Constraint) -> Self {
        self.add_constraint(c);
        self
    }

    pub fn add_constraint(&mut self, c: Constraint) {
        let vars: Vec<Variable> = match &c {
            Constraint::AllDiff(vs) | Constraint::Card { vars: vs, .. } | Constraint::Ordered(vs) => vs.clone(),
            Constraint::In { var, .. } => vec![*var],
        };
        for v in vars {
            self.add_variable(v);
        }
        self.constraints.push(c);
    }

    pub fn add_variable(&mut self, v: Variable) {
        if !self.variables.contains(&v) {
            self.variables.push(v);
        }
    }

    /// A variable id not used by the query.
    pub fn fresh_variable(&self) -> Variable {
        Variable(self.variables.iter().map(|v| v.0 + 1).max().unwrap_or(0))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuerySolution {
    pub assignment: BTreeMap<Variable, Constant>,
}

impl QuerySolution {
    pub fn used_constants(&self) -> BTreeSet<Constant> {
        self.assignment.values().copied().collect()
    }
}

/// Node budget shared across solver calls.
#[derive(Clone, Debug, Default)]
pub struct Budget {
    limit: Option<u64>,
    used: u64,
}

impl Budget {
    pub fn unlimited() -> Self {
        Budget { limit: None, used: 0 }
    }

    pub fn limited(limit: u64) -> Self {
        Budget { limit: Some(limit), used: 0 }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    fn tick(&mut self) -> Result<(), QueryError> {
        self.used += 1;
        match self.limit {
            Some(limit) if self.used > limit => Err(QueryError::BudgetExhausted { limit }),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Var(usize),
    Const(u32),
}

struct CompiledLiteral<'a> {
    table: Option<&'a Table>,
    args: Vec<Slot>,
    positive: bool,
    vars: Vec<usize>,
}

impl CompiledLiteral<'_> {
    fn holds(&self, assign: &[Option<u32>], scratch: &mut Vec<u32>) -> bool {
        scratch.clear();
        for s in &self.args {
            scratch.push(match *s {
                Slot::Var(i) => assign[i].expect("literal checked before full assignment"),
                Slot::Const(c) => c,
            });
        }
        let present = self.table.is_some_and(|t| t.tuples.contains(scratch.as_slice()));
        present == self.positive
    }
}

struct Compiled<'a> {
    vars: Vec<Variable>,
    literals: Vec<CompiledLiteral<'a>>,
    var_literals: Vec<Vec<usize>>,
    all_diff: Vec<Vec<usize>>,
    var_all_diff: Vec<Vec<usize>>,
    cards: Vec<(usize, Vec<usize>)>,
    var_cards: Vec<Vec<usize>>,
    /// (chain, position) per variable.
    var_ordered: Vec<Vec<(usize, usize)>>,
    ordered: Vec<Vec<usize>>,
    root: Option<Vec<FixedBitSet>>,
    xor: Option<Gf2System>,
    universe: usize,
}

/// Outcome of a single search node's propagation.
type Domains = Vec<FixedBitSet>;

impl<'a> Compiled<'a> {
    fn new(q: &ConjunctiveQuery, index: &'a AtomIndex, xors: &[XorConstraint]) -> Self {
        let universe = index.universe;
        let vars = q.variables.clone();
        let pos: HashMap<Variable, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = vars.len();
        let mut domains: Domains = vec![full(universe); n];
        let mut feasible = true;

        let mut literals = Vec::new();
        let mut var_literals = vec![Vec::new(); n];
        for lit in &q.literals {
            let table = index.tables.get(&lit.atom.predicate);
            let args: Vec<Slot> = lit
                .atom
                .args
                .iter()
                .map(|t| match t {
                    Term::Var(v) => Slot::Var(pos[v]),
                    Term::Const(c) => Slot::Const(c.0),
                })
                .collect();
            let mut lvars: Vec<usize> =
                args.iter().filter_map(|s| if let Slot::Var(i) = s { Some(*i) } else { None }).collect();
            lvars.sort_unstable();
            lvars.dedup();
            if lit.positive {
                match table {
                    None => feasible = false,
                    Some(t) => {
                        for (p, s) in args.iter().enumerate() {
                            match *s {
                                Slot::Var(i) => domains[i].intersect_with(&t.by_position[p]),
                                Slot::Const(c) => {
                                    if !t.by_position[p].contains(c as usize) {
                                        feasible = false;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            let idx = literals.len();
            for &v in &lvars {
                var_literals[v].push(idx);
            }
            literals.push(CompiledLiteral { table, args, positive: lit.positive, vars: lvars });
        }

        let mut all_diff = Vec::new();
        let mut var_all_diff = vec![Vec::new(); n];
        let mut cards = Vec::new();
        let mut var_cards = vec![Vec::new(); n];
        let mut ordered = Vec::new();
        let mut var_ordered = vec![Vec::new(); n];
        for c in &q.constraints {
            match c {
                Constraint::AllDiff(vs) => {
                    let mut g: Vec<usize> = vs.iter().map(|v| pos[v]).collect();
                    g.sort_unstable();
                    g.dedup();
                    for &v in &g {
                        var_all_diff[v].push(all_diff.len());
                    }
                    all_diff.push(g);
                }
                Constraint::Card { k, vars: vs } => {
                    let g: Vec<usize> = vs.iter().map(|v| pos[v]).collect();
                    if g.is_empty() && *k > 0 {
                        feasible = false;
                    }
                    for &v in &g {
                        var_cards[v].push(cards.len());
                    }
                    cards.push((*k, g));
                }
                Constraint::In { var, set } => {
                    let mut s = FixedBitSet::with_capacity(universe);
                    for c in set {
                        if c.index() < universe {
                            s.insert(c.index());
                        }
                    }
                    domains[pos[var]].intersect_with(&s);
                }
                Constraint::Ordered(vs) => {
                    let g: Vec<usize> = vs.iter().map(|v| pos[v]).collect();
                    for (i, &v) in g.iter().enumerate() {
                        var_ordered[v].push((ordered.len(), i));
                    }
                    ordered.push(g);
                }
            }
        }
        // ground literals decide feasibility up front
        let mut scratch = Vec::new();
        for l in literals.iter().filter(|l| l.vars.is_empty()) {
            if !l.holds(&[], &mut scratch) {
                feasible = false;
            }
        }
        if domains.iter().any(|d| d.is_clear()) {
            feasible = false;
        }
        let xor = if xors.is_empty() { None } else { Some(Gf2System::new(universe, xors)) };
        Compiled {
            vars,
            literals,
            var_literals,
            all_diff,
            var_all_diff,
            cards,
            var_cards,
            var_ordered,
            ordered,
            root: feasible.then_some(domains),
            xor,
            universe,
        }
    }

    /// Forward checking after `v` has been assigned; false on a wipe-out.
    fn propagate(&self, d: &mut Domains, assign: &[Option<u32>], v: usize, scratch: &mut Vec<u32>) -> bool {
        let c = assign[v].unwrap();
        for &g in &self.var_all_diff[v] {
            for &w in &self.all_diff[g] {
                if w == v {
                    continue;
                }
                match assign[w] {
                    Some(x) if x == c => return false,
                    Some(_) => {}
                    None => {
                        d[w].set(c as usize, false);
                        if d[w].is_clear() {
                            return false;
                        }
                    }
                }
            }
        }
        for &g in &self.var_cards[v] {
            if !self.propagate_card(g, d, assign) {
                return false;
            }
        }
        for &(g, i) in &self.var_ordered[v] {
            for (j, &w) in self.ordered[g].iter().enumerate() {
                if j == i {
                    continue;
                }
                let keep = |x: usize| if j < i { x < c as usize } else { x > c as usize };
                match assign[w] {
                    Some(x) if !keep(x as usize) => return false,
                    Some(_) => {}
                    None => {
                        let drop: Vec<usize> = d[w].ones().filter(|&x| !keep(x)).collect();
                        for x in drop {
                            d[w].set(x, false);
                        }
                        if d[w].is_clear() {
                            return false;
                        }
                    }
                }
            }
        }
        for &li in &self.var_literals[v] {
            let lit = &self.literals[li];
            let mut open = lit.vars.iter().filter(|&&w| assign[w].is_none());
            match (open.next(), open.next()) {
                (None, _) => {
                    if !lit.holds(assign, scratch) {
                        return false;
                    }
                }
                (Some(&w), None) => {
                    let mut trial = assign.to_vec();
                    let candidates: Vec<usize> = d[w].ones().collect();
                    for x in candidates {
                        trial[w] = Some(x as u32);
                        if !lit.holds(&trial, scratch) {
                            d[w].set(x, false);
                        }
                    }
                    if d[w].is_clear() {
                        return false;
                    }
                }
                _ => {}
            }
        }
        if self.xor.is_some() && !self.propagate_xor(d, assign) {
            return false;
        }
        true
    }

    fn propagate_card(&self, g: usize, d: &mut Domains, assign: &[Option<u32>]) -> bool {
        let (k, ref vars) = self.cards[g];
        let mut used = FixedBitSet::with_capacity(self.universe);
        let mut open = Vec::new();
        for &w in vars {
            match assign[w] {
                Some(x) => used.insert(x as usize),
                None => open.push(w),
            }
        }
        let distinct = used.count_ones(..);
        if distinct > k || distinct + open.len() < k {
            return false;
        }
        if distinct == k {
            for &w in &open {
                d[w].intersect_with(&used);
                if d[w].is_clear() {
                    return false;
                }
            }
        } else if distinct + open.len() == k {
            for &w in &open {
                d[w].difference_with(&used);
                if d[w].is_clear() {
                    return false;
                }
            }
        }
        true
    }

    /// Used constants force their indicator to 1, constants outside every
    /// open domain force it to 0; indicators forced to 0 by elimination are
    /// removed from all domains.
    fn propagate_xor(&self, d: &mut Domains, assign: &[Option<u32>]) -> bool {
        let sys = self.xor.as_ref().unwrap();
        let mut ones = FixedBitSet::with_capacity(self.universe);
        let mut reachable = FixedBitSet::with_capacity(self.universe);
        for (w, a) in assign.iter().enumerate() {
            match a {
                Some(x) => ones.insert(*x as usize),
                None => reachable.union_with(&d[w]),
            }
        }
        let mut known = reachable.clone();
        known.toggle_range(..);
        known.union_with(&ones);
        let forced = match sys.propagate_masks(&known, &ones) {
            Ok(f) => f,
            Err(Inconsistent) => return false,
        };
        for (c, value) in forced {
            if !value {
                for (w, a) in assign.iter().enumerate() {
                    if a.is_none() {
                        d[w].set(c, false);
                        if d[w].is_clear() {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    fn leaf_ok(&self, assign: &[Option<u32>], scratch: &mut Vec<u32>) -> bool {
        if !self.literals.iter().all(|l| l.holds(assign, scratch)) {
            return false;
        }
        for g in &self.all_diff {
            let vals: HashSet<u32> = g.iter().map(|&w| assign[w].unwrap()).collect();
            if vals.len() != g.len() {
                return false;
            }
        }
        for (k, g) in &self.cards {
            let vals: HashSet<u32> = g.iter().map(|&w| assign[w].unwrap()).collect();
            if vals.len() != *k {
                return false;
            }
        }
        if !self.ordered.iter().all(|g| g.windows(2).all(|p| assign[p[0]].unwrap() < assign[p[1]].unwrap())) {
            return false;
        }
        if let Some(sys) = &self.xor {
            let mut used = FixedBitSet::with_capacity(self.universe);
            for a in assign {
                used.insert(a.unwrap() as usize);
            }
            if !sys.satisfied_by(&used) {
                return false;
            }
        }
        true
    }

    fn search(
        &self,
        d: Domains,
        assign: &mut Vec<Option<u32>>,
        budget: &mut Budget,
        scratch: &mut Vec<u32>,
        on_solution: &mut dyn FnMut(&[Option<u32>]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>, QueryError> {
        budget.tick()?;
        let next = (0..assign.len()).filter(|&w| assign[w].is_none()).min_by_key(|&w| d[w].count_ones(..));
        let Some(v) = next else {
            if self.leaf_ok(assign, scratch) {
                return Ok(on_solution(assign));
            }
            return Ok(ControlFlow::Continue(()));
        };
        let values: Vec<usize> = d[v].ones().collect();
        for x in values {
            let mut child = d.clone();
            assign[v] = Some(x as u32);
            child[v].clear();
            child[v].insert(x);
            if self.propagate(&mut child, assign, v, scratch) {
                if let ControlFlow::Break(()) = self.search(child, assign, budget, scratch, on_solution)? {
                    assign[v] = None;
                    return Ok(ControlFlow::Break(()));
                }
            }
            assign[v] = None;
        }
        Ok(ControlFlow::Continue(()))
    }

    /// Root domains after applying the XOR system once.
    fn start(&self) -> Option<Domains> {
        let mut d = self.root.clone()?;
        let assign = vec![None; self.vars.len()];
        if self.xor.is_some() && !self.propagate_xor(&mut d, &assign) {
            return None;
        }
        Some(d)
    }

    fn run(
        &self,
        fixed: Option<(usize, u32)>,
        budget: &mut Budget,
        on_solution: &mut dyn FnMut(&[Option<u32>]) -> ControlFlow<()>,
    ) -> Result<(), QueryError> {
        let Some(mut d) = self.start() else {
            return Ok(());
        };
        let mut assign = vec![None; self.vars.len()];
        let mut scratch = Vec::new();
        if let Some((v, x)) = fixed {
            if !d[v].contains(x as usize) {
                return Ok(());
            }
            assign[v] = Some(x);
            d[v].clear();
            d[v].insert(x as usize);
            if !self.propagate(&mut d, &assign, v, &mut scratch) {
                return Ok(());
            }
        }
        self.search(d, &mut assign, budget, &mut scratch, on_solution).map(|_| ())
    }

    fn to_solution(&self, assign: &[Option<u32>]) -> QuerySolution {
        QuerySolution { assignment: self.vars.iter().zip(assign).map(|(&v, a)| (v, Constant(a.unwrap()))).collect() }
    }
}

fn full(n: usize) -> FixedBitSet {
    let mut b = FixedBitSet::with_capacity(n);
    b.insert_range(..);
    b
}

/// Does some assignment satisfy every literal and constraint?
pub fn satisfiable(q: &ConjunctiveQuery, index: &AtomIndex) -> bool {
    find_solution(q, index, &[], &mut Budget::unlimited()).expect("unlimited budget").is_some()
}

pub fn find_solution(
    q: &ConjunctiveQuery,
    index: &AtomIndex,
    xors: &[XorConstraint],
    budget: &mut Budget,
) -> Result<Option<QuerySolution>, QueryError> {
    let compiled = Compiled::new(q, index, xors);
    let mut found = None;
    compiled.run(None, budget, &mut |a| {
        found = Some(compiled.to_solution(a));
        ControlFlow::Break(())
    })?;
    Ok(found)
}

/// Calls `f` on every solution until it breaks.
pub fn for_each_solution(
    q: &ConjunctiveQuery,
    index: &AtomIndex,
    xors: &[XorConstraint],
    budget: &mut Budget,
    mut f: impl FnMut(&QuerySolution) -> ControlFlow<()>,
) -> Result<(), QueryError> {
    let compiled = Compiled::new(q, index, xors);
    compiled.run(None, budget, &mut |a| f(&compiled.to_solution(a)))?;
    Ok(())
}

/// `{ c | q[V/c] is satisfiable }`.
pub fn csp_query(q: &ConjunctiveQuery, v: Variable, index: &AtomIndex) -> Result<BTreeSet<Constant>, QueryError> {
    csp_query_with(q, v, index, &[], &mut Budget::unlimited())
}

pub fn csp_query_with(
    q: &ConjunctiveQuery,
    v: Variable,
    index: &AtomIndex,
    xors: &[XorConstraint],
    budget: &mut Budget,
) -> Result<BTreeSet<Constant>, QueryError> {
    let compiled = Compiled::new(q, index, xors);
    let slot = compiled.vars.iter().position(|&w| w == v).ok_or(QueryError::UnknownVariable(v))?;
    let mut out = BTreeSet::new();
    let Some(d) = compiled.start() else {
        return Ok(out);
    };
    for x in d[slot].ones() {
        let mut hit = false;
        compiled.run(Some((slot, x as u32)), budget, &mut |_| {
            hit = true;
            ControlFlow::Break(())
        })?;
        if hit {
            out.insert(Constant(x as u32));
        }
    }
    Ok(out)
}

/// Result of a query solved under parity constraints on used constants.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct XorOutcome {
    pub satisfiable: bool,
    /// Constants used by the witness solution.
    pub witness: Option<BTreeSet<Constant>>,
}

/// Is there a solution whose set of used constants satisfies every parity
/// constraint (indicator `i` ↔ constant `i`)?
pub fn solve_with_xor(q: &ConjunctiveQuery, index: &AtomIndex, xors: &[XorConstraint]) -> XorOutcome {
    let sol = find_solution(q, index, xors, &mut Budget::unlimited()).expect("unlimited budget");
    XorOutcome { satisfiable: sol.is_some(), witness: sol.map(|s| s.used_constants()) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{atom, cst, var};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// fr(alice,bob), fr(bob,alice), fr(bob,eve), fr(eve,bob), sm(alice) with
    /// alice=0, bob=1, eve=2.
    fn friends() -> AtomIndex {
        let atoms = vec![
            atom("fr", &[cst(0), cst(1)]),
            atom("fr", &[cst(1), cst(0)]),
            atom("fr", &[cst(1), cst(2)]),
            atom("fr", &[cst(2), cst(1)]),
            atom("sm", &[cst(0)]),
        ];
        AtomIndex::new(3, &atoms)
    }

    fn consts(xs: &[u32]) -> BTreeSet<Constant> {
        xs.iter().map(|&x| Constant(x)).collect()
    }

    #[test]
    fn friends_queries() {
        let idx = friends();
        let q = ConjunctiveQuery::from_atoms([atom("sm", &[var(0)]), atom("fr", &[var(0), var(1)])]);
        assert!(satisfiable(&q, &idx));
        let sol = find_solution(&q, &idx, &[], &mut Budget::unlimited()).unwrap().unwrap();
        assert_eq!(sol.assignment[&Variable(0)], Constant(0));
        assert_eq!(sol.assignment[&Variable(1)], Constant(1));

        let two_smokers = ConjunctiveQuery::from_atoms([atom("sm", &[var(0)]), atom("sm", &[var(1)])])
            .with(Constraint::AllDiff(vec![Variable(0), Variable(1)]));
        assert!(!satisfiable(&two_smokers, &idx));

        assert!(satisfiable(&ConjunctiveQuery::default(), &idx));
    }

    #[test]
    fn friends_csp_queries() {
        let idx = friends();
        let fr = ConjunctiveQuery::from_atoms([atom("fr", &[var(0), var(1)])]);
        assert_eq!(csp_query(&fr, Variable(0), &idx).unwrap(), consts(&[0, 1, 2]));
        let q = ConjunctiveQuery::from_atoms([atom("sm", &[var(0)]), atom("fr", &[var(0), var(1)])]);
        assert_eq!(csp_query(&q, Variable(0), &idx).unwrap(), consts(&[0]));
        assert_eq!(csp_query(&fr, Variable(7), &idx), Err(QueryError::UnknownVariable(Variable(7))));
        let empty = AtomIndex::new(0, &[]);
        assert!(csp_query(&fr, Variable(0), &empty).unwrap().is_empty());
    }

    #[test]
    fn negative_literals_use_closed_world() {
        let idx = friends();
        // someone who is friends with a non-smoker
        let q = ConjunctiveQuery::new(vec![
            Literal::pos(atom("fr", &[var(0), var(1)])),
            Literal::neg(atom("sm", &[var(1)])),
        ]);
        assert_eq!(csp_query(&q, Variable(0), &idx).unwrap(), consts(&[0, 1, 2]));
        let q = ConjunctiveQuery::new(vec![
            Literal::pos(atom("fr", &[var(0), var(1)])),
            Literal::neg(atom("fr", &[var(1), var(0)])),
        ]);
        assert!(!satisfiable(&q, &idx));
    }

    #[test]
    fn xor_over_two_indicators_halves_single_constant_solutions() {
        let idx = AtomIndex::new(2, &[]);
        let q = ConjunctiveQuery::default().with(Constraint::Card { k: 1, vars: vec![Variable(0)] });
        let xors = [XorConstraint::new([0, 1], true)];
        let mut seen = Vec::new();
        for_each_solution(&q, &idx, &xors, &mut Budget::unlimited(), |s| {
            seen.push(s.used_constants());
            ControlFlow::Continue(())
        })
        .unwrap();
        assert_eq!(seen, vec![consts(&[0]), consts(&[1])]);
        let even = [XorConstraint::new([0, 1], false)];
        assert!(!solve_with_xor(&q, &idx, &even).satisfiable);
        assert_eq!(solve_with_xor(&q, &idx, &[]), XorOutcome { satisfiable: true, witness: Some(consts(&[0])) });
    }

    #[test]
    fn budget_is_enforced() {
        let idx = AtomIndex::new(6, &[]);
        let q = ConjunctiveQuery::default().with(Constraint::AllDiff((0..6).map(Variable).collect()));
        let err = for_each_solution(&q, &idx, &[], &mut Budget::limited(10), |_| ControlFlow::Continue(()));
        assert_eq!(err, Err(QueryError::BudgetExhausted { limit: 10 }));
    }

    // --- brute-force oracle -------------------------------------------------

    fn random_instance(rng: &mut ChaCha8Rng) -> (Vec<Atom>, usize) {
        let n = rng.gen_range(1..=6);
        let mut atoms = Vec::new();
        for _ in 0..rng.gen_range(0..12) {
            if rng.gen_bool(0.4) {
                atoms.push(atom("p", &[cst(rng.gen_range(0..n as u32))]));
            } else {
                atoms.push(atom("r", &[cst(rng.gen_range(0..n as u32)), cst(rng.gen_range(0..n as u32))]));
            }
        }
        (atoms, n)
    }

    fn random_query(rng: &mut ChaCha8Rng, n: usize) -> ConjunctiveQuery {
        let nv = rng.gen_range(1..=3u32);
        let mut lits = Vec::new();
        for _ in 0..rng.gen_range(1..=3) {
            let t = |rng: &mut ChaCha8Rng| {
                if rng.gen_bool(0.15) {
                    cst(rng.gen_range(0..n as u32))
                } else {
                    var(rng.gen_range(0..nv))
                }
            };
            let a = if rng.gen_bool(0.4) { atom("p", &[t(rng)]) } else { atom("r", &[t(rng), t(rng)]) };
            lits.push(Literal { atom: a, positive: rng.gen_bool(0.75) });
        }
        let mut q = ConjunctiveQuery::new(lits);
        for v in 0..nv {
            q.add_variable(Variable(v));
        }
        if rng.gen_bool(0.3) {
            q.add_constraint(Constraint::AllDiff(q.variables.clone()));
        }
        if rng.gen_bool(0.3) {
            let k = rng.gen_range(1..=q.variables.len());
            q.add_constraint(Constraint::Card { k, vars: q.variables.clone() });
        }
        q
    }

    fn brute_force(q: &ConjunctiveQuery, atoms: &[Atom], n: usize) -> Vec<BTreeMap<Variable, Constant>> {
        let set: HashSet<&Atom> = atoms.iter().collect();
        let mut out = Vec::new();
        for idx in crate::logic::ground::Assignments::new(q.variables.len(), n, false) {
            let theta: BTreeMap<Variable, Constant> =
                q.variables.iter().zip(&idx).map(|(&v, &i)| (v, Constant(i as u32))).collect();
            let subst = crate::logic::Substitution::from_pairs(theta.iter().map(|(&v, &c)| (v, Term::Const(c))));
            let lits_ok = q.literals.iter().all(|l| set.contains(&l.atom.substitute(&subst)) == l.positive);
            let cons_ok = q.constraints.iter().all(|c| match c {
                Constraint::AllDiff(vs) => vs.iter().map(|v| theta[v]).collect::<HashSet<_>>().len() == vs.len(),
                Constraint::Card { k, vars } => vars.iter().map(|v| theta[v]).collect::<HashSet<_>>().len() == *k,
                Constraint::In { var, set } => set.contains(&theta[var]),
                Constraint::Ordered(vs) => vs.windows(2).all(|p| theta[&p[0]] < theta[&p[1]]),
            });
            if lits_ok && cons_ok {
                out.push(theta);
            }
        }
        out
    }

    #[test]
    fn csp_query_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..400 {
            let (atoms, n) = random_instance(&mut rng);
            let idx = AtomIndex::new(n, &atoms);
            let q = random_query(&mut rng, n);
            let truth = brute_force(&q, &atoms, n);
            assert_eq!(satisfiable(&q, &idx), !truth.is_empty(), "{q:?}");
            for &v in &q.variables {
                let expected: BTreeSet<Constant> = truth.iter().map(|t| t[&v]).collect();
                assert_eq!(csp_query(&q, v, &idx).unwrap(), expected);
            }
            let mut all = Vec::new();
            for_each_solution(&q, &idx, &[], &mut Budget::unlimited(), |s| {
                all.push(s.assignment.clone());
                ControlFlow::Continue(())
            })
            .unwrap();
            assert_eq!(all.len(), truth.len());
        }
    }

    #[test]
    fn membership_constraints_only_restrict() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (atoms, n) = random_instance(&mut rng);
            let idx = AtomIndex::new(n, &atoms);
            let q = random_query(&mut rng, n);
            let v = q.variables[0];
            let before = csp_query(&q, v, &idx).unwrap();
            let set: BTreeSet<Constant> = (0..n as u32).filter(|_| rng.gen_bool(0.5)).map(Constant).collect();
            let restricted = q.clone().with(Constraint::In { var: v, set: set.clone() });
            let after = csp_query(&restricted, v, &idx).unwrap();
            assert!(after.is_subset(&before));
            assert!(after.is_subset(&set));
        }
    }

    #[test]
    fn xor_solutions_match_filtered_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..300 {
            let (atoms, n) = random_instance(&mut rng);
            let idx = AtomIndex::new(n, &atoms);
            let q = random_query(&mut rng, n);
            let xors: Vec<XorConstraint> = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let vars: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
                    XorConstraint::new(vars, rng.gen_bool(0.5))
                })
                .collect();
            let truth: Vec<_> = brute_force(&q, &atoms, n)
                .into_iter()
                .filter(|t| {
                    let used: HashSet<usize> = t.values().map(|c| c.index()).collect();
                    xors.iter().all(|x| x.holds(|i| used.contains(&i)))
                })
                .collect();
            let mut count = 0;
            for_each_solution(&q, &idx, &xors, &mut Budget::unlimited(), |_| {
                count += 1;
                ControlFlow::Continue(())
            })
            .unwrap();
            assert_eq!(count, truth.len());
            assert_eq!(solve_with_xor(&q, &idx, &xors).satisfiable, !truth.is_empty());
        }
    }

    #[test]
    fn card_constraint_holds_on_every_solution() {
        let idx = AtomIndex::new(4, &[]);
        let vars: Vec<Variable> = (0..3).map(Variable).collect();
        for k in 1..=3 {
            let q = ConjunctiveQuery::default().with(Constraint::Card { k, vars: vars.clone() });
            let mut count = 0;
            for_each_solution(&q, &idx, &[], &mut Budget::unlimited(), |s| {
                assert_eq!(s.used_constants().len(), k);
                count += 1;
                ControlFlow::Continue(())
            })
            .unwrap();
            // surjections onto k-subsets: C(4,k) * S(3,k) * k!
            let expected = [0, 4, 6 * 6, 4 * 6][k];
            assert_eq!(count, expected);
        }
    }
}
