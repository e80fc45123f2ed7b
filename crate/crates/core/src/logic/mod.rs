//! Function-free first-order syntax: predicates, terms, atoms, literals,
//! clauses and Horn rules, plus grounding, isomorphism, Weisfeiler-Lehman
//! hashing and θ-subsumption.
//!
//! Constants are interned as dense ids through [`Symbols`]; variables are
//! plain numbered slots whose names carry no meaning.

pub(crate) mod ground;
mod iso;
mod parse;
mod subsume;

pub use ground::{ground, ground_clause, substitutions, GroundFormula};
pub use iso::{canonical_clause, clauses_isomorphic, isomorphic, wl_hash, wl_hash_structure, Structure};
pub use parse::{parse_atom, parse_clause, parse_ground_atom, parse_literal, ParseError};
pub use subsume::theta_subsumes;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Constant(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(pub u32);

impl Constant {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Variable {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0 < 26 {
            write!(f, "{}", (b'A' + self.0 as u8) as char)
        } else {
            write!(f, "V{}", self.0)
        }
    }
}

/// A relation symbol together with its arity.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    name: Arc<str>,
    arity: usize,
}

impl Predicate {
    pub fn new(name: &str, arity: usize) -> Self {
        assert!(!name.is_empty(), "predicate name must be non-empty");
        Predicate { name: Arc::from(name), arity }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.name, self.arity)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Variable),
    Const(Constant),
}

impl Term {
    pub fn as_var(self) -> Option<Variable> {
        match self {
            Term::Var(v) => Some(v),
            Term::Const(_) => None,
        }
    }

    pub fn as_const(self) -> Option<Constant> {
        match self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }
}

/// Bidirectional table between constant names and dense ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Symbols {
    names: Vec<String>,
    index: HashMap<String, Constant>,
}

impl Symbols {
    pub fn new() -> Self {
        Self::default()
    }

    /// Constants named `1`, …, `k`, as used by local examples.
    pub fn numbered(k: usize) -> Self {
        let mut s = Symbols::new();
        for i in 1..=k {
            s.intern(&i.to_string());
        }
        s
    }

    pub fn intern(&mut self, name: &str) -> Constant {
        if let Some(&c) = self.index.get(name) {
            return c;
        }
        let c = Constant(self.names.len() as u32);
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), c);
        c
    }

    pub fn get(&self, name: &str) -> Option<Constant> {
        self.index.get(name).copied()
    }

    pub fn name(&self, c: Constant) -> &str {
        &self.names[c.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn constants(&self) -> impl Iterator<Item = Constant> + '_ {
        (0..self.names.len() as u32).map(Constant)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub predicate: Predicate,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: Predicate, args: Vec<Term>) -> Self {
        assert_eq!(predicate.arity(), args.len(), "argument count must equal arity of {predicate}");
        Atom { predicate, args }
    }

    pub fn ground(predicate: Predicate, args: &[Constant]) -> Self {
        Atom::new(predicate, args.iter().map(|&c| Term::Const(c)).collect())
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| matches!(t, Term::Const(_)))
    }

    pub fn variables(&self) -> impl Iterator<Item = Variable> + '_ {
        self.args.iter().filter_map(|t| t.as_var())
    }

    pub fn constants(&self) -> impl Iterator<Item = Constant> + '_ {
        self.args.iter().filter_map(|t| t.as_const())
    }

    /// Constant arguments of a ground atom, in order.
    pub fn ground_args(&self) -> Vec<Constant> {
        self.args.iter().map(|t| t.as_const().expect("atom is not ground")).collect()
    }

    pub fn substitute(&self, theta: &Substitution) -> Atom {
        Atom { predicate: self.predicate.clone(), args: self.args.iter().map(|&t| theta.apply(t)).collect() }
    }

    pub fn map_constants(&self, f: impl Fn(Constant) -> Constant) -> Atom {
        Atom {
            predicate: self.predicate.clone(),
            args: self
                .args
                .iter()
                .map(|&t| match t {
                    Term::Const(c) => Term::Const(f(c)),
                    v => v,
                })
                .collect(),
        }
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> AtomDisplay<'a> {
        AtomDisplay { atom: self, symbols: Some(symbols) }
    }
}

pub struct AtomDisplay<'a> {
    atom: &'a Atom,
    symbols: Option<&'a Symbols>,
}

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.atom.predicate.name())?;
        if self.atom.args.is_empty() {
            return Ok(());
        }
        write!(f, "(")?;
        for (i, t) in self.atom.args.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            match (t, self.symbols) {
                (Term::Var(v), _) => write!(f, "{v}")?,
                (Term::Const(c), Some(s)) if c.index() < s.len() => write!(f, "{}", s.name(*c))?,
                (Term::Const(c), _) => write!(f, "{}", c.0 + 1)?,
            }
        }
        write!(f, ")")
    }
}

/// Without a symbol table constants print 1-based, matching local examples.
impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        AtomDisplay { atom: self, symbols: None }.fmt(f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub atom: Atom,
    pub positive: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal { atom, positive: true }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal { atom, positive: false }
    }

    pub fn negated(&self) -> Literal {
        Literal { atom: self.atom.clone(), positive: !self.positive }
    }

    pub fn substitute(&self, theta: &Substitution) -> Literal {
        Literal { atom: self.atom.substitute(theta), positive: self.positive }
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Literal, &'a Symbols);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if !self.0.positive {
                    write!(f, "!")?;
                }
                write!(f, "{}", self.0.atom.display(self.1))
            }
        }
        D(self, symbols)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "!")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// A disjunction of literals, universally quantified. With `all_diff` set,
/// only groundings that map distinct variables to distinct constants count.
/// The empty clause is ⊥.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Clause {
    literals: Vec<Literal>,
    all_diff: bool,
}

impl Clause {
    pub fn new(literals: impl IntoIterator<Item = Literal>, all_diff: bool) -> Self {
        let mut literals: Vec<Literal> = literals.into_iter().collect();
        literals.sort();
        literals.dedup();
        Clause { literals, all_diff }
    }

    pub fn bottom() -> Self {
        Clause { literals: Vec::new(), all_diff: true }
    }

    pub fn is_bottom(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn all_diff(&self) -> bool {
        self.all_diff
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// Variables in order of first occurrence.
    pub fn variables(&self) -> Vec<Variable> {
        let mut seen = Vec::new();
        for l in &self.literals {
            for v in l.atom.variables() {
                if !seen.contains(&v) {
                    seen.push(v);
                }
            }
        }
        seen
    }

    pub fn constants(&self) -> BTreeSet<Constant> {
        self.literals.iter().flat_map(|l| l.atom.constants()).collect()
    }

    pub fn is_ground(&self) -> bool {
        self.literals.iter().all(|l| l.atom.is_ground())
    }

    pub fn is_tautology(&self) -> bool {
        // literals are sorted by atom first, so complements are adjacent
        self.literals.windows(2).any(|w| w[0].atom == w[1].atom && w[0].positive != w[1].positive)
    }

    pub fn substitute(&self, theta: &Substitution) -> Clause {
        Clause::new(self.literals.iter().map(|l| l.substitute(theta)), self.all_diff)
    }

    pub fn with_all_diff(mut self, all_diff: bool) -> Clause {
        self.all_diff = all_diff;
        self
    }

    /// Renames variables to `A, B, …` in order of first occurrence.
    pub fn normalized(&self) -> Clause {
        let theta = Substitution::from_pairs(
            self.variables().into_iter().enumerate().map(|(i, v)| (v, Term::Var(Variable(i as u32)))),
        );
        self.substitute(&theta)
    }

    pub fn display<'a>(&'a self, symbols: &'a Symbols) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Clause, &'a Symbols);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if self.0.is_bottom() {
                    return write!(f, "_bot_");
                }
                for (i, l) in self.0.literals.iter().enumerate() {
                    if i > 0 {
                        write!(f, " v ")?;
                    }
                    write!(f, "{}", l.display(self.1))?;
                }
                if !self.0.all_diff {
                    write!(f, " @nodiff")?;
                }
                Ok(())
            }
        }
        D(self, symbols)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&Symbols::new()))
    }
}

/// `head ← body₁ ∧ … ∧ bodyₙ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HornRule {
    pub head: Atom,
    pub body: Vec<Atom>,
    pub all_diff: bool,
}

impl HornRule {
    pub fn new(head: Atom, body: Vec<Atom>) -> Self {
        HornRule { head, body, all_diff: true }
    }

    /// `¬body ∨ head`.
    pub fn to_clause(&self) -> Clause {
        Clause::new(
            self.body.iter().cloned().map(Literal::neg).chain(std::iter::once(Literal::pos(self.head.clone()))),
            self.all_diff,
        )
    }

    /// Recovers a rule from a clause with exactly one positive literal.
    pub fn from_clause(c: &Clause) -> Option<HornRule> {
        let mut heads = c.literals().iter().filter(|l| l.positive);
        let head = heads.next()?;
        if heads.next().is_some() {
            return None;
        }
        Some(HornRule {
            head: head.atom.clone(),
            body: c.literals().iter().filter(|l| !l.positive).map(|l| l.atom.clone()).collect(),
            all_diff: c.all_diff(),
        })
    }

    pub fn variables(&self) -> Vec<Variable> {
        let mut seen = Vec::new();
        for v in self.head.variables().chain(self.body.iter().flat_map(|a| a.variables())) {
            if !seen.contains(&v) {
                seen.push(v);
            }
        }
        seen
    }
}

impl fmt::Display for HornRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} <- ", self.head)?;
        if self.body.is_empty() {
            return write!(f, "true");
        }
        for (i, a) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, " ^ ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

/// A finite map from variables to terms.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Substitution {
    map: BTreeMap<Variable, Term>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Variable, Term)>) -> Self {
        Substitution { map: pairs.into_iter().collect() }
    }

    pub fn bind(&mut self, v: Variable, t: Term) -> Option<Term> {
        self.map.insert(v, t)
    }

    pub fn get(&self, v: Variable) -> Option<Term> {
        self.map.get(&v).copied()
    }

    pub fn apply(&self, t: Term) -> Term {
        match t {
            Term::Var(v) => self.map.get(&v).copied().unwrap_or(t),
            c => c,
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Variable, Term)> + '_ {
        self.map.iter().map(|(&v, &t)| (v, t))
    }
}

/// Shorthand for building test and example formulas.
pub fn atom(pred: &str, args: &[Term]) -> Atom {
    Atom::new(Predicate::new(pred, args.len()), args.to_vec())
}

pub fn var(i: u32) -> Term {
    Term::Var(Variable(i))
}

pub fn cst(i: u32) -> Term {
    Term::Const(Constant(i))
}
