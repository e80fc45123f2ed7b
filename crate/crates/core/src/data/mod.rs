//! The global example Υ = (𝒜, 𝒞), fragments, local examples and the
//! relational marginal distribution P_{Υ,k}.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use itertools::Itertools;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use thiserror::Error;

use crate::logic::ground::Assignments;
use crate::logic::{parse_ground_atom, Atom, Constant, Literal, ParseError, Predicate, Structure, Symbols};
use crate::query::AtomIndex;

/// Width cap for enumerating all bijections of a subset.
pub const MAX_EXACT_WIDTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DataError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{}predicate `{name}` used with arity {first} and {second}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    ArityConflict { name: String, first: usize, second: usize, line: Option<usize> },
    #[error("{0}")]
    Domain(String),
}

/// Υ = (𝒜, 𝒞). Constants are the dense ids of the symbol table, so 𝒞 is
/// always `0..n`.
#[derive(Clone, Debug)]
pub struct GlobalExample {
    symbols: Symbols,
    atoms: BTreeSet<Atom>,
    signature: BTreeSet<Predicate>,
    index: AtomIndex,
}

impl PartialEq for GlobalExample {
    fn eq(&self, other: &Self) -> bool {
        self.symbols == other.symbols && self.atoms == other.atoms && self.signature == other.signature
    }
}

fn check_signature<'a>(
    preds: impl IntoIterator<Item = (&'a Predicate, Option<usize>)>,
) -> Result<BTreeSet<Predicate>, DataError> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut out = BTreeSet::new();
    for (p, line) in preds {
        match seen.get(p.name()) {
            Some(&a) if a != p.arity() => {
                return Err(DataError::ArityConflict { name: p.name().to_string(), first: a, second: p.arity(), line })
            }
            _ => {
                seen.insert(p.name(), p.arity());
                out.insert(p.clone());
            }
        }
    }
    Ok(out)
}

impl GlobalExample {
    /// The signature is inferred from the atoms plus `extra_predicates`.
    pub fn new(
        symbols: Symbols,
        atoms: impl IntoIterator<Item = Atom>,
        extra_predicates: impl IntoIterator<Item = Predicate>,
    ) -> Result<Self, DataError> {
        let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
        for a in &atoms {
            if !a.is_ground() {
                return Err(DataError::Domain(format!("atom {a} is not ground")));
            }
            if let Some(c) = a.constants().find(|c| c.index() >= symbols.len()) {
                return Err(DataError::Domain(format!("constant id {} outside the symbol table", c.0)));
            }
        }
        let extra: Vec<Predicate> = extra_predicates.into_iter().collect();
        let signature =
            check_signature(atoms.iter().map(|a| (&a.predicate, None)).chain(extra.iter().map(|p| (p, None))))?;
        let index = AtomIndex::new(symbols.len(), &atoms);
        Ok(GlobalExample { symbols, atoms, signature, index })
    }

    pub fn empty() -> Self {
        GlobalExample::new(Symbols::new(), [], []).expect("empty example is valid")
    }

    pub fn symbols(&self) -> &Symbols {
        &self.symbols
    }

    pub fn atoms(&self) -> &BTreeSet<Atom> {
        &self.atoms
    }

    pub fn signature(&self) -> &BTreeSet<Predicate> {
        &self.signature
    }

    pub fn n_constants(&self) -> usize {
        self.symbols.len()
    }

    pub fn constants(&self) -> impl Iterator<Item = Constant> + '_ {
        self.symbols.constants()
    }

    pub fn index(&self) -> &AtomIndex {
        &self.index
    }

    pub fn contains(&self, a: &Atom) -> bool {
        self.atoms.contains(a)
    }

    pub fn structure(&self) -> Structure {
        Structure::new(self.constants(), self.atoms.iter().cloned())
    }

    /// Atoms of predicate `p`.
    pub fn atoms_of<'a>(&'a self, p: &'a Predicate) -> impl Iterator<Item = &'a Atom> + 'a {
        self.atoms.iter().filter(move |a| &a.predicate == p)
    }

    /// Same example with the signature widened by `preds`.
    pub fn with_predicates(&self, preds: impl IntoIterator<Item = Predicate>) -> Result<Self, DataError> {
        GlobalExample::new(
            self.symbols.clone(),
            self.atoms.iter().cloned(),
            self.signature.iter().cloned().chain(preds),
        )
    }

    /// The data-file text of this example.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let used: BTreeSet<Constant> = self.atoms.iter().flat_map(|a| a.constants()).collect();
        let isolated: Vec<&str> =
            self.constants().filter(|c| !used.contains(c)).map(|c| self.symbols.name(c)).collect();
        if !isolated.is_empty() {
            out.push_str(&format!("@constants {}\n", isolated.join(" ")));
        }
        let mentioned: BTreeSet<&Predicate> = self.atoms.iter().map(|a| &a.predicate).collect();
        let silent: Vec<String> =
            self.signature.iter().filter(|p| !mentioned.contains(p)).map(|p| p.to_string()).collect();
        if !silent.is_empty() {
            out.push_str(&format!("@predicates {}\n", silent.join(" ")));
        }
        for a in &self.atoms {
            out.push_str(&format!("{}\n", a.display(&self.symbols)));
        }
        out
    }
}

fn parse_predicate_decl(tok: &str) -> Result<Predicate, ParseError> {
    let (name, arity) =
        tok.split_once('/').ok_or_else(|| ParseError::new(format!("expected name/arity, found `{tok}`")))?;
    let arity: usize = arity.parse().map_err(|_| ParseError::new(format!("bad arity in `{tok}`")))?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
        return Err(ParseError::new(format!("bad predicate name in `{tok}`")));
    }
    Ok(Predicate::new(name, arity))
}

/// Parses a data file: one ground atom per line, `#` comments, optional
/// `@constants c1 c2 …` and `@predicates p/1 q/2 …` header lines.
pub fn parse_example(text: &str, declared_constants: Option<&[&str]>) -> Result<GlobalExample, DataError> {
    let mut symbols = Symbols::new();
    let mut atoms = Vec::new();
    let mut preds: Vec<(Predicate, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("@constants") {
            for c in rest.split_whitespace() {
                if !c.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_') {
                    return Err(ParseError::new(format!("bad constant `{c}`")).at_line(line_no).into());
                }
                symbols.intern(c);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("@predicates") {
            for tok in rest.split_whitespace() {
                preds.push((parse_predicate_decl(tok).map_err(|e| e.at_line(line_no))?, line_no));
            }
            continue;
        }
        let a = parse_ground_atom(line, &mut symbols).map_err(|e| e.at_line(line_no))?;
        preds.push((a.predicate.clone(), line_no));
        atoms.push(a);
    }
    for c in declared_constants.unwrap_or(&[]) {
        symbols.intern(c);
    }
    check_signature(preds.iter().map(|(p, l)| (p, Some(*l))))?;
    GlobalExample::new(symbols, atoms, preds.into_iter().map(|(p, _)| p))
}

/// Parses evidence: one ground literal per line, `!` marks negation.
/// Constant names are resolved (and if new, interned) in `symbols`.
pub fn parse_evidence(text: &str, symbols: &mut Symbols) -> Result<Vec<Literal>, DataError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('@') {
            continue;
        }
        let (positive, body) = match line.strip_prefix('!') {
            Some(rest) => (false, rest),
            None => (true, line),
        };
        let a = parse_ground_atom(body, symbols).map_err(|e| e.at_line(i + 1))?;
        out.push(Literal { atom: a, positive });
    }
    Ok(out)
}

/// Υ⟨𝒮⟩: the atoms of Υ whose constants all lie in 𝒮.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fragment {
    pub atoms: BTreeSet<Atom>,
    pub subset: BTreeSet<Constant>,
}

fn check_subset(ex: &GlobalExample, s: &BTreeSet<Constant>) -> Result<(), DataError> {
    match s.iter().find(|c| c.index() >= ex.n_constants()) {
        Some(c) => Err(DataError::Domain(format!("constant id {} is not in the example", c.0))),
        None => Ok(()),
    }
}

pub fn fragment(ex: &GlobalExample, s: &BTreeSet<Constant>) -> Result<Fragment, DataError> {
    check_subset(ex, s)?;
    let atoms = ex.atoms.iter().filter(|a| a.constants().all(|c| s.contains(&c))).cloned().collect();
    Ok(Fragment { atoms, subset: s.clone() })
}

/// A possible world over the canonical constants 1..k (ids `0..k`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LocalExample {
    pub width: usize,
    pub atoms: BTreeSet<Atom>,
}

impl LocalExample {
    pub fn new(width: usize, atoms: impl IntoIterator<Item = Atom>) -> Result<Self, DataError> {
        let atoms: BTreeSet<Atom> = atoms.into_iter().collect();
        for a in &atoms {
            if !a.is_ground() || a.constants().any(|c| c.index() >= width) {
                return Err(DataError::Domain(format!("atom {a} is not over constants 1..{width}")));
            }
        }
        Ok(LocalExample { width, atoms })
    }

    pub fn structure(&self) -> Structure {
        Structure::new((0..self.width as u32).map(Constant), self.atoms.iter().cloned())
    }
}

impl fmt::Display for LocalExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({{{}}}, {{{}}})", self.atoms.iter().join(", "), (1..=self.width).join(","))
    }
}

fn standardize(frag: &Fragment, order: &[Constant], perm: &[usize]) -> LocalExample {
    let pos: HashMap<Constant, u32> = order.iter().enumerate().map(|(i, &c)| (c, perm[i] as u32)).collect();
    LocalExample {
        width: order.len(),
        atoms: frag.atoms.iter().map(|a| a.map_constants(|c| Constant(pos[&c]))).collect(),
    }
}

/// Υ[𝒮]: every width-|𝒮| local example isomorphic to Υ⟨𝒮⟩.
pub fn local_class(ex: &GlobalExample, s: &BTreeSet<Constant>) -> Result<BTreeSet<LocalExample>, DataError> {
    if s.len() > MAX_EXACT_WIDTH {
        return Err(DataError::Domain(format!("width {} above the exact limit {MAX_EXACT_WIDTH}", s.len())));
    }
    let frag = fragment(ex, s)?;
    let order: Vec<Constant> = s.iter().copied().collect();
    Ok(Assignments::new(order.len(), order.len(), true).map(|perm| standardize(&frag, &order, &perm)).collect())
}

fn check_width(ex: &GlobalExample, k: usize) -> Result<(), DataError> {
    if k == 0 || k > ex.n_constants() {
        return Err(DataError::Domain(format!("width {k} outside 1..={}", ex.n_constants())));
    }
    Ok(())
}

/// One draw from P_{Υ,k}: a uniform k-subset, then a uniform bijection onto
/// 1..k (which is uniform over the class, every member having |Aut|
/// preimages).
pub fn sample_marginal<R: Rng + ?Sized>(ex: &GlobalExample, k: usize, rng: &mut R) -> Result<LocalExample, DataError> {
    check_width(ex, k)?;
    let mut chosen: Vec<usize> = index::sample(rng, ex.n_constants(), k).into_vec();
    chosen.sort_unstable();
    let order: Vec<Constant> = chosen.iter().map(|&i| Constant(i as u32)).collect();
    let frag = fragment(ex, &order.iter().copied().collect())?;
    let mut perm: Vec<usize> = (0..k).collect();
    perm.shuffle(rng);
    Ok(standardize(&frag, &order, &perm))
}

/// P_{Υ,k} by enumerating every k-subset and its class.
pub fn marginal_distribution(ex: &GlobalExample, k: usize) -> Result<BTreeMap<LocalExample, f64>, DataError> {
    check_width(ex, k)?;
    let subsets = binomial(ex.n_constants(), k) as f64;
    let mut out: BTreeMap<LocalExample, f64> = BTreeMap::new();
    for s in ex.constants().combinations(k) {
        let class = local_class(ex, &s.into_iter().collect())?;
        let share = 1.0 / (subsets * class.len() as f64);
        for w in class {
            *out.entry(w).or_insert(0.0) += share;
        }
    }
    Ok(out)
}

/// Every ground atom of the signature over constants `0..k`, in predicate
/// then argument order.
pub fn language_atoms(signature: &BTreeSet<Predicate>, k: usize) -> Vec<Atom> {
    let consts: Vec<Constant> = (0..k as u32).map(Constant).collect();
    let mut out = Vec::new();
    for p in signature {
        for idx in Assignments::new(p.arity(), k, false) {
            let args: Vec<Constant> = idx.into_iter().map(|i| consts[i]).collect();
            out.push(Atom::ground(p.clone(), &args));
        }
    }
    out
}

/// C(n, k), saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(x) => x / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}
