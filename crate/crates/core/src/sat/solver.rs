//! A CDCL solver: two watched literals, first-UIP learning with local
//! minimization, VSIDS on a lazily cleaned binary heap, Luby restarts,
//! phase saving and activity-based learnt clause deletion. Clauses may be
//! added between calls (at decision level 0); calls may carry assumptions.

use std::collections::BinaryHeap;
use std::fmt;
use std::ops::Not;

use crate::query::{Gf2System, XorConstraint};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: usize, positive: bool) -> Lit {
        Lit((var as u32) << 1 | u32::from(!positive))
    }

    pub fn var(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn positive(self) -> bool {
        self.0 & 1 == 0
    }

    fn index(self) -> usize {
        self.0 as usize
    }

    /// DIMACS form: 1-based variable, negative when negated.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.positive() {
            v
        } else {
            -v
        }
    }

    pub fn from_dimacs(x: i64) -> Lit {
        assert!(x != 0, "0 is not a DIMACS literal");
        Lit::new((x.unsigned_abs() - 1) as usize, x > 0)
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat,
    Unsat,
    /// The conflict budget ran out.
    Unknown,
}

const UNDEF: i8 = 0;
const NO_REASON: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct ClauseData {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

#[derive(Clone, Copy, Debug)]
struct Watch {
    cref: u32,
    blocker: Lit,
}

#[derive(Clone, Debug, Default)]
pub struct Stats {
    pub solves: u64,
    pub decisions: u64,
    pub conflicts: u64,
    pub propagations: u64,
    pub restarts: u64,
}

#[derive(Clone, Debug)]
pub struct Solver {
    clauses: Vec<ClauseData>,
    watches: Vec<Vec<Watch>>,
    assign: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: BinaryHeap<(u64, u32)>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    ok: bool,
    model: Vec<bool>,
    n_learnts: usize,
    max_learnts: f64,
    conflict_budget: Option<u64>,
    pub stats: Stats,
}

impl Default for Solver {
    fn default() -> Self {
        Self::new()
    }
}

fn luby(mut x: u64) -> u64 {
    let (mut size, mut seq) = (1u64, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

impl Solver {
    pub fn new() -> Self {
        Solver {
            clauses: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: BinaryHeap::new(),
            phase: Vec::new(),
            seen: Vec::new(),
            ok: true,
            model: Vec::new(),
            n_learnts: 0,
            max_learnts: 0.0,
            conflict_budget: None,
            stats: Stats::default(),
        }
    }

    pub fn with_vars(n: usize) -> Self {
        let mut s = Solver::new();
        s.reserve_vars(n);
        s
    }

    pub fn new_var(&mut self) -> usize {
        let v = self.assign.len();
        self.assign.push(UNDEF);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.activity.push(0.0);
        self.phase.push(false);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.push((0, v as u32));
        v
    }

    /// Makes sure variables `0..n` exist.
    pub fn reserve_vars(&mut self, n: usize) {
        while self.assign.len() < n {
            self.new_var();
        }
    }

    pub fn num_vars(&self) -> usize {
        self.assign.len()
    }

    pub fn is_ok(&self) -> bool {
        self.ok
    }

    /// Caps the conflicts of each subsequent call; `None` removes the cap.
    pub fn set_conflict_budget(&mut self, budget: Option<u64>) {
        self.conflict_budget = budget;
    }

    fn value(&self, l: Lit) -> i8 {
        let a = self.assign[l.var()];
        if l.positive() {
            a
        } else {
            -a
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var();
        self.assign[v] = if l.positive() { 1 } else { -1 };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds a clause; returns false once the formula is known unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let mut ls: Vec<Lit> = lits.to_vec();
        if let Some(m) = ls.iter().map(|l| l.var()).max() {
            self.reserve_vars(m + 1);
        }
        ls.sort_unstable();
        ls.dedup();
        let mut out = Vec::with_capacity(ls.len());
        for (i, &l) in ls.iter().enumerate() {
            if i + 1 < ls.len() && ls[i + 1] == !l {
                return true;
            }
            match self.value(l) {
                1 => return true,
                -1 => {}
                _ => out.push(l),
            }
        }
        match out.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(out[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(out, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[lits[0].index()].push(Watch { cref, blocker: lits[1] });
        self.watches[lits[1].index()].push(Watch { cref, blocker: lits[0] });
        if learnt {
            self.n_learnts += 1;
        }
        self.clauses.push(ClauseData { lits, learnt, deleted: false, activity: 0.0 });
        cref
    }

    /// Adds `⊕ vars = parity` via a chain of auxiliary variables, three
    /// inputs per link.
    pub fn add_xor(&mut self, vars: &[usize], parity: bool) -> bool {
        let mut vs: Vec<usize> = vars.to_vec();
        if let Some(&m) = vs.iter().max() {
            self.reserve_vars(m + 1);
        }
        while vs.len() > 3 {
            let t = self.new_var();
            let chunk: Vec<usize> = vs.drain(..3).collect();
            if !self.add_small_xor(&[chunk[0], chunk[1], chunk[2], t], false) {
                return false;
            }
            vs.push(t);
        }
        self.add_small_xor(&vs, parity)
    }

    /// Adds a parity system. Rows are first rewritten over the variables
    /// left free at level 0, with literals that binary clauses force equal
    /// merged into one, then brought to reduced row echelon form so that
    /// every assignment of the non-pivot variables propagates to the pivots.
    pub fn add_xors(&mut self, xors: &[XorConstraint]) -> bool {
        if !self.ok {
            return false;
        }
        self.cancel_until(0);
        let reps = self.binary_equivalences();
        let rows: Vec<XorConstraint> = xors
            .iter()
            .map(|x| {
                let mut parity = x.parity;
                let mut vars = Vec::with_capacity(x.vars.len());
                for &v in &x.vars {
                    // x_v = x_r ⊕ flip
                    let r = if v < reps.len() { reps[v] } else { Lit::new(v, true) };
                    let flip = !r.positive();
                    match self.value_of_var(r.var()) {
                        UNDEF => {
                            vars.push(r.var());
                            parity ^= flip;
                        }
                        a => parity ^= (a == 1) ^ flip,
                    }
                }
                XorConstraint::new(vars, parity)
            })
            .collect();
        let width = rows.iter().flat_map(|x| x.vars.iter()).max().map_or(0, |&m| m + 1);
        let mut sys = Gf2System::new(width, &rows);
        if sys.eliminate().is_err() {
            self.ok = false;
            return false;
        }
        sys.constraints().iter().all(|x| self.add_xor(&x.vars, x.parity))
    }

    fn value_of_var(&self, v: usize) -> i8 {
        self.assign.get(v).copied().unwrap_or(UNDEF)
    }

    /// For each variable, a literal over a representative variable with the
    /// same value in every model, from pairs of binary clauses a ∨ b, ¬a ∨ ¬b.
    fn binary_equivalences(&self) -> Vec<Lit> {
        let n = self.num_vars();
        let binary: std::collections::HashSet<(Lit, Lit)> = self
            .clauses
            .iter()
            .filter(|c| !c.deleted && c.lits.len() == 2)
            .map(|c| (c.lits[0].min(c.lits[1]), c.lits[0].max(c.lits[1])))
            .collect();
        // union-find with parity: x_v = x_parent ⊕ flip
        let mut parent: Vec<usize> = (0..n).collect();
        let mut flip = vec![false; n];
        fn find(parent: &mut [usize], flip: &mut [bool], v: usize) -> (usize, bool) {
            let mut path = Vec::new();
            let mut u = v;
            while parent[u] != u {
                path.push(u);
                u = parent[u];
            }
            let mut acc = false;
            for &w in path.iter().rev() {
                acc ^= flip[w];
                flip[w] = acc;
                parent[w] = u;
            }
            (u, if path.is_empty() { false } else { flip[v] })
        }
        for &(a, b) in &binary {
            let (na, nb) = (!a, !b);
            if !binary.contains(&(na.min(nb), na.max(nb))) || a.var() == b.var() {
                continue;
            }
            // a ∨ b and ¬a ∨ ¬b: x_a ≠ x_b as literals
            let differ = a.positive() == b.positive();
            let (ra, fa) = find(&mut parent, &mut flip, a.var());
            let (rb, fb) = find(&mut parent, &mut flip, b.var());
            if ra != rb {
                let (lo, hi, f) = if ra < rb { (ra, rb, fa ^ fb ^ differ) } else { (rb, ra, fa ^ fb ^ differ) };
                parent[hi] = lo;
                flip[hi] = f;
            }
        }
        (0..n)
            .map(|v| {
                let (r, f) = find(&mut parent, &mut flip, v);
                Lit::new(r, !f)
            })
            .collect()
    }

    fn add_small_xor(&mut self, vars: &[usize], parity: bool) -> bool {
        let n = vars.len();
        if n == 0 {
            if parity {
                self.ok = false;
            }
            return self.ok;
        }
        for mask in 0u32..1 << n {
            // forbid every assignment of the wrong parity
            if (mask.count_ones() % 2 == 1) == parity {
                continue;
            }
            let clause: Vec<Lit> = (0..n).map(|i| Lit::new(vars[i], mask >> i & 1 == 0)).collect();
            if !self.add_clause(&clause) {
                return false;
            }
        }
        true
    }

    fn propagate(&mut self) -> Option<u32> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let (mut i, mut j) = (0, 0);
            let mut conflict = None;
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.value(first) == 1 {
                    ws[j] = Watch { cref: w.cref, blocker: first };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != -1 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l.index()].push(Watch { cref: w.cref, blocker: first });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch { cref: w.cref, blocker: first };
                j += 1;
                if self.value(first) == -1 {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit.index()] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
            self.rebuild_heap();
        } else if self.assign[v] == UNDEF {
            self.heap.push((self.activity[v].to_bits(), v as u32));
        }
    }

    fn bump_clause(&mut self, cref: usize) {
        self.clauses[cref].activity += self.cla_inc;
        if self.clauses[cref].activity > 1e20 {
            for c in self.clauses.iter_mut().filter(|c| c.learnt) {
                c.activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn rebuild_heap(&mut self) {
        self.heap = (0..self.assign.len())
            .filter(|&v| self.assign[v] == UNDEF)
            .map(|v| (self.activity[v].to_bits(), v as u32))
            .collect();
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        loop {
            let cref = confl as usize;
            if self.clauses[cref].learnt {
                self.bump_clause(cref);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = q.var();
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(v);
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var()] {
                    break;
                }
            }
            let lit = self.trail[idx];
            p = Some(lit);
            confl = self.reason[lit.var()];
            self.seen[lit.var()] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = !p.unwrap();
        // drop literals implied by other literals of the clause
        let mut kept = vec![learnt[0]];
        for &q in &learnt[1..] {
            let r = self.reason[q.var()];
            let redundant = r != NO_REASON
                && self.clauses[r as usize].lits[1..].iter().all(|l| self.seen[l.var()] || self.level[l.var()] == 0);
            if !redundant {
                kept.push(q);
            }
        }
        for &q in &learnt[1..] {
            self.seen[q.var()] = false;
        }
        let mut bt = 0;
        if kept.len() > 1 {
            let mut max_i = 1;
            for i in 2..kept.len() {
                if self.level[kept[i].var()] > self.level[kept[max_i].var()] {
                    max_i = i;
                }
            }
            kept.swap(1, max_i);
            bt = self.level[kept[1].var()];
        }
        (kept, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let start = self.trail_lim[lvl as usize];
        for i in (start..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var();
            self.phase[v] = l.positive();
            self.assign[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.push((self.activity[v].to_bits(), v as u32));
        }
        self.trail.truncate(start);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = start;
        if self.heap.len() > 8 * self.assign.len() + 1024 {
            self.rebuild_heap();
        }
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some((bits, v)) = self.heap.pop() {
            let v = v as usize;
            if self.assign[v] == UNDEF && self.activity[v].to_bits() == bits {
                self.stats.decisions += 1;
                return Some(Lit::new(v, self.phase[v]));
            }
        }
        // stale entries may hide unassigned variables
        let v = (0..self.assign.len()).find(|&v| self.assign[v] == UNDEF)?;
        self.rebuild_heap();
        self.stats.decisions += 1;
        Some(Lit::new(v, self.phase[v]))
    }

    fn locked(&self, cref: usize) -> bool {
        let l = self.clauses[cref].lits[0];
        self.reason[l.var()] == cref as u32 && self.value(l) == 1
    }

    fn reduce_db(&mut self) {
        let mut learnts: Vec<usize> = (0..self.clauses.len())
            .filter(|&i| self.clauses[i].learnt && !self.clauses[i].deleted && self.clauses[i].lits.len() > 2)
            .collect();
        learnts.sort_by(|&a, &b| self.clauses[a].activity.total_cmp(&self.clauses[b].activity));
        let half = learnts.len() / 2;
        for &i in &learnts[..half] {
            if !self.locked(i) {
                self.clauses[i].deleted = true;
                self.clauses[i].lits = Vec::new();
                self.n_learnts -= 1;
            }
        }
    }

    pub fn solve(&mut self) -> SolveResult {
        self.solve_with(&[])
    }

    /// Decides satisfiability with `assumptions` forced true for this call.
    pub fn solve_with(&mut self, assumptions: &[Lit]) -> SolveResult {
        self.stats.solves += 1;
        self.model.clear();
        if !self.ok {
            return SolveResult::Unsat;
        }
        if let Some(m) = assumptions.iter().map(|l| l.var()).max() {
            self.reserve_vars(m + 1);
        }
        self.cancel_until(0);
        if self.propagate().is_some() {
            self.ok = false;
            return SolveResult::Unsat;
        }
        let n_clauses = self.clauses.iter().filter(|c| !c.learnt && !c.deleted).count();
        self.max_learnts = self.max_learnts.max(n_clauses as f64 / 3.0 + 1000.0);
        let start_conflicts = self.stats.conflicts;
        let mut restart = 0u64;
        loop {
            let limit = 100 * luby(restart);
            match self.search(limit, assumptions, start_conflicts) {
                Some(r) => {
                    self.cancel_until(0);
                    return r;
                }
                None => {
                    restart += 1;
                    self.stats.restarts += 1;
                }
            }
        }
    }

    /// Runs until `limit` conflicts (None: restart) or a verdict.
    fn search(&mut self, limit: u64, assumptions: &[Lit], start_conflicts: u64) -> Option<SolveResult> {
        let mut conflicts = 0;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(SolveResult::Unsat);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref as usize);
                    self.enqueue(first, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                continue;
            }
            if let Some(b) = self.conflict_budget {
                if self.stats.conflicts - start_conflicts >= b {
                    return Some(SolveResult::Unknown);
                }
            }
            if conflicts >= limit {
                self.cancel_until(0);
                return None;
            }
            if self.n_learnts as f64 - self.trail.len() as f64 >= self.max_learnts {
                self.reduce_db();
                self.max_learnts *= 1.1;
            }
            let mut next = None;
            while (self.decision_level() as usize) < assumptions.len() {
                let a = assumptions[self.decision_level() as usize];
                match self.value(a) {
                    1 => self.trail_lim.push(self.trail.len()),
                    -1 => return Some(SolveResult::Unsat),
                    _ => {
                        next = Some(a);
                        break;
                    }
                }
            }
            let lit = match next {
                Some(a) => a,
                None => match self.pick_branch() {
                    Some(l) => l,
                    None => {
                        self.model = self.assign.iter().map(|&a| a == 1).collect();
                        return Some(SolveResult::Sat);
                    }
                },
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(lit, NO_REASON);
        }
    }

    /// The satisfying assignment of the last successful call, per variable.
    pub fn model(&self) -> &[bool] {
        &self.model
    }

    pub fn model_value(&self, var: usize) -> bool {
        self.model[var]
    }
}

/// Counts models over variables `0..n_vars` of a small CNF by DPLL with
/// unit propagation, multiplying in free variables at satisfied leaves.
pub fn count_models(n_vars: usize, clauses: &[Vec<Lit>]) -> u128 {
    let mut assign = vec![UNDEF; n_vars];
    if clauses.iter().any(|c| c.is_empty()) {
        return 0;
    }
    count_rec(&mut assign, clauses)
}

fn lit_value(assign: &[i8], l: Lit) -> i8 {
    let a = assign[l.var()];
    if l.positive() {
        a
    } else {
        -a
    }
}

fn count_rec(assign: &mut Vec<i8>, clauses: &[Vec<Lit>]) -> u128 {
    let mut trail: Vec<usize> = Vec::new();
    let result = 'node: {
        loop {
            let mut changed = false;
            for c in clauses {
                let mut open = None;
                let mut n_open = 0;
                let mut sat = false;
                for &l in c {
                    match lit_value(assign, l) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            n_open += 1;
                            open = Some(l);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match n_open {
                    0 => break 'node 0,
                    1 => {
                        let l = open.unwrap();
                        assign[l.var()] = if l.positive() { 1 } else { -1 };
                        trail.push(l.var());
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        let mut occurrences = vec![0u32; assign.len()];
        let mut any_open = false;
        for c in clauses {
            if c.iter().any(|&l| lit_value(assign, l) == 1) {
                continue;
            }
            any_open = true;
            for &l in c {
                if assign[l.var()] == UNDEF {
                    occurrences[l.var()] += 1;
                }
            }
        }
        let free = assign.iter().filter(|&&a| a == UNDEF).count() as u32;
        if !any_open {
            break 'node 1u128 << free;
        }
        let v = (0..assign.len()).max_by_key(|&v| (occurrences[v], std::cmp::Reverse(v))).unwrap();
        let mut total = 0;
        for value in [1i8, -1] {
            assign[v] = value;
            total += count_rec(assign, clauses);
        }
        assign[v] = UNDEF;
        total
    };
    for v in trail {
        assign[v] = UNDEF;
    }
    result
}
