//! Brute-force semantic oracle.
//!
//! Evaluates WS2S satisfaction directly on assignments, with quantifiers
//! ranging over finite sets of positions up to a depth bound. Nothing here
//! touches the automata code; it is the ground truth the engines are tested
//! against.
//!
//! Quantifier search is pruned by defining conjuncts: when the body of
//! `∃X.ψ` has a top-level conjunct such as `X = {p}`, `X = S1(Y)` with `Y`
//! already fixed, `X ⊆ Y` or `Sing(X)`, only the values that conjunct allows
//! are tried. This never loses a witness.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::formula::{Formula, Var};
use crate::trees::{Assignment, Position};

/// Default limit on the number of candidate valuations tried per call.
pub const DEFAULT_CAP: u64 = 20_000_000;

/// Bounded oracle: every quantified variable ranges over subsets of the
/// positions of length at most `depth` (or deeper, when the assignment
/// under evaluation is deeper).
#[derive(Clone, Copy, Debug)]
pub struct Oracle {
    pub depth: usize,
    pub cap: u64,
}

/// Outcome of an iterative-deepening search.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SearchOutcome {
    Witness { assignment: Assignment, depth: usize },
    /// No model with positions up to the given depth; not a proof of
    /// unsatisfiability.
    NoWitnessUpTo(usize),
}

impl Oracle {
    pub fn new(depth: usize) -> Oracle {
        Oracle { depth, cap: DEFAULT_CAP }
    }

    pub fn with_cap(mut self, cap: u64) -> Oracle {
        self.cap = cap;
        self
    }

    /// `alpha ⊨ f`, with quantifiers bounded by the oracle depth.
    pub fn satisfies(&self, alpha: &Assignment, f: &Formula) -> Result<bool> {
        let depth = self.depth.max(alpha.max_len().unwrap_or(0));
        let mut ev = Evaluator::new(depth, self.cap)?;
        for v in f.free_vars() {
            let set = ev.universe.encode(alpha.get(&v)).expect("universe covers the assignment");
            ev.env.insert(v.id(), set);
        }
        ev.eval(f)
    }

    /// Searches for a model of `f` whose positions all have length at most
    /// `depth` (quantifiers use the same bound).
    pub fn bounded_sat(&self, f: &Formula, depth: usize) -> Result<Option<Assignment>> {
        let mut ev = Evaluator::new(depth, self.cap)?;
        let free: Vec<Var> = f.free_vars().into_iter().collect();
        let mut witness = None;
        ev.exists(&free, f, &mut |ev| {
            let mut alpha = Assignment::new();
            for v in &free {
                alpha.set(v.clone(), ev.universe.decode(&ev.env[&v.id()]));
            }
            witness = Some(alpha);
        })?;
        Ok(witness)
    }

    /// Iterative deepening over `0..=max_depth`.
    pub fn search(&self, f: &Formula, max_depth: usize) -> Result<SearchOutcome> {
        for depth in 0..=max_depth {
            if let Some(assignment) = self.bounded_sat(f, depth)? {
                return Ok(SearchOutcome::Witness { assignment, depth });
            }
        }
        Ok(SearchOutcome::NoWitnessUpTo(max_depth))
    }
}

/// Convenience wrapper around [`Oracle::satisfies`].
pub fn satisfies(alpha: &Assignment, f: &Formula, depth: usize) -> Result<bool> {
    Oracle::new(depth).satisfies(alpha, f)
}

/// Convenience wrapper around [`Oracle::bounded_sat`].
pub fn bounded_sat(f: &Formula, depth: usize) -> Result<Option<Assignment>> {
    Oracle::new(depth).bounded_sat(f, depth)
}

/// Positions of length `<= depth`, heap-indexed: the root is 0 and the
/// children of `i` are `2i+1` and `2i+2`.
struct Universe {
    size: usize,
    words: usize,
}

type PosSet = Box<[u64]>;

impl Universe {
    fn new(depth: usize) -> Result<Universe> {
        if depth > 20 {
            return Err(Error::ResourceLimit(format!("oracle depth {depth} too large")));
        }
        let size = (1usize << (depth + 1)) - 1;
        Ok(Universe { size, words: size.div_ceil(64) })
    }

    fn empty(&self) -> PosSet {
        vec![0; self.words].into_boxed_slice()
    }

    fn index(&self, p: &Position) -> Option<usize> {
        let i = p.as_bytes().iter().fold(0usize, |i, &d| 2 * i + if d == b'L' { 1 } else { 2 });
        (i < self.size).then_some(i)
    }

    fn position(&self, mut i: usize) -> Position {
        let mut dirs = Vec::new();
        while i > 0 {
            dirs.push(if i % 2 == 1 { b'L' } else { b'R' });
            i = (i - 1) / 2;
        }
        dirs.reverse();
        String::from_utf8(dirs).expect("ascii").parse().unwrap_or_default()
    }

    fn encode(&self, ps: &BTreeSet<Position>) -> Option<PosSet> {
        let mut s = self.empty();
        for p in ps {
            let i = self.index(p)?;
            s[i / 64] |= 1 << (i % 64);
        }
        Some(s)
    }

    fn decode(&self, s: &PosSet) -> BTreeSet<Position> {
        members(s).map(|i| self.position(i)).collect()
    }

    fn singleton(&self, i: usize) -> PosSet {
        let mut s = self.empty();
        s[i / 64] |= 1 << (i % 64);
        s
    }

    /// `{ child(p) | p ∈ s }`, or `None` when a child leaves the universe.
    fn shift(&self, s: &PosSet, right: bool) -> Option<PosSet> {
        let mut out = self.empty();
        for i in members(s) {
            let c = 2 * i + if right { 2 } else { 1 };
            if c >= self.size {
                return None;
            }
            out[c / 64] |= 1 << (c % 64);
        }
        Some(out)
    }

    /// `{ p | child(p) ∈ s }` provided every member of `s` is such a child.
    fn unshift(&self, s: &PosSet, right: bool) -> Option<PosSet> {
        let mut out = self.empty();
        for i in members(s) {
            if i == 0 || (i % 2 == 0) != right {
                return None;
            }
            let p = (i - 1) / 2;
            out[p / 64] |= 1 << (p % 64);
        }
        Some(out)
    }
}

fn members(s: &[u64]) -> impl Iterator<Item = usize> + '_ {
    s.iter().enumerate().flat_map(|(w, &bits)| {
        (0..64).filter(move |b| bits >> b & 1 == 1).map(move |b| w * 64 + b)
    })
}

fn count(s: &[u64]) -> u32 {
    s.iter().map(|w| w.count_ones()).sum()
}

enum Candidates {
    Fixed(Vec<PosSet>),
    SubsetsOf(PosSet),
    Singletons,
}

struct Evaluator {
    universe: Universe,
    env: HashMap<u32, PosSet>,
    budget: u64,
}

impl Evaluator {
    fn new(depth: usize, cap: u64) -> Result<Evaluator> {
        Ok(Evaluator { universe: Universe::new(depth)?, env: HashMap::new(), budget: cap })
    }

    fn get(&self, v: &Var) -> &PosSet {
        self.env.get(&v.id()).unwrap_or_else(|| panic!("unbound variable {v:?}"))
    }

    fn eval(&mut self, f: &Formula) -> Result<bool> {
        use Formula::*;
        Ok(match f {
            Subseteq(x, y) => {
                let (a, b) = (self.get(x), self.get(y));
                a.iter().zip(b.iter()).all(|(a, b)| a & !b == 0)
            }
            SuccLeft(x, y) | SuccRight(x, y) => {
                let right = matches!(f, SuccRight(..));
                match self.universe.shift(self.get(y), right) {
                    Some(s) => &s == self.get(x),
                    None => false,
                }
            }
            Sing(x) => count(self.get(x)) == 1,
            EqEpsilon(x) => *self.get(x) == self.universe.singleton(0),
            EqPos(x, p) => match self.universe.index(p) {
                Some(i) => *self.get(x) == self.universe.singleton(i),
                None => false,
            },
            Not(a) => !self.eval(a)?,
            And(a, b) => self.eval(a)? && self.eval(b)?,
            Or(a, b) => self.eval(a)? || self.eval(b)?,
            Exists(vs, body) => {
                let vars: Vec<Var> = vs.iter().cloned().collect();
                let mut found = false;
                self.exists(&vars, body, &mut |_| found = true)?;
                found
            }
            Forall(vs, body) => {
                let vars: Vec<Var> = vs.iter().cloned().collect();
                let neg = Formula::not((**body).clone());
                let mut found = false;
                self.exists(&vars, &neg, &mut |_| found = true)?;
                !found
            }
            Implies(a, b) => !self.eval(a)? || self.eval(b)?,
            Iff(a, b) => self.eval(a)? == self.eval(b)?,
            SetEq(x, y) => self.get(x) == self.get(y),
            SetNeq(x, y) => self.get(x) != self.get(y),
            IsEmpty(x) => count(self.get(x)) == 0,
        })
    }

    /// Tries valuations of `vars` until `body` holds; calls `on_witness`
    /// with the satisfying environment and returns whether one was found.
    fn exists(
        &mut self,
        vars: &[Var],
        body: &Formula,
        on_witness: &mut dyn FnMut(&Evaluator),
    ) -> Result<bool> {
        let saved: Vec<(u32, Option<PosSet>)> =
            vars.iter().map(|v| (v.id(), self.env.remove(&v.id()))).collect();
        let mut conjuncts = Vec::new();
        top_conjuncts(body, &mut conjuncts);
        let mut pending: Vec<Var> = vars.to_vec();
        let found = self.search(&mut pending, &conjuncts, body, on_witness);
        for (id, old) in saved {
            match old {
                Some(s) => self.env.insert(id, s),
                None => self.env.remove(&id),
            };
        }
        found
    }

    fn search(
        &mut self,
        pending: &mut Vec<Var>,
        conjuncts: &[&Formula],
        body: &Formula,
        on_witness: &mut dyn FnMut(&Evaluator),
    ) -> Result<bool> {
        if pending.is_empty() {
            if self.budget == 0 {
                return Err(Error::ResourceLimit("oracle candidate cap exhausted".into()));
            }
            self.budget -= 1;
            if self.eval(body)? {
                on_witness(self);
                return Ok(true);
            }
            return Ok(false);
        }
        // most constrained variable first
        let (idx, cands) = pending
            .iter()
            .enumerate()
            .map(|(i, v)| (i, self.candidates(v, conjuncts)))
            .min_by_key(|(_, c)| self.candidate_count(c))
            .expect("non-empty");
        let v = pending.swap_remove(idx);
        let sets: Box<dyn Iterator<Item = PosSet>> = match cands {
            Candidates::Fixed(sets) => Box::new(sets.into_iter()),
            Candidates::Singletons => {
                let n = self.universe.size;
                let u = Universe { size: n, words: self.universe.words };
                Box::new((0..n).map(move |i| u.singleton(i)))
            }
            Candidates::SubsetsOf(base) => {
                let elems: Vec<usize> = members(&base).collect();
                if elems.len() >= 40 {
                    pending.push(v);
                    return Err(Error::ResourceLimit(format!(
                        "oracle would enumerate 2^{} sets",
                        elems.len()
                    )));
                }
                let words = self.universe.words;
                Box::new((0u64..1 << elems.len()).map(move |m| {
                    let mut s = vec![0u64; words].into_boxed_slice();
                    for (k, &i) in elems.iter().enumerate() {
                        if m >> k & 1 == 1 {
                            s[i / 64] |= 1 << (i % 64);
                        }
                    }
                    s
                }))
            }
        };
        let mut found = false;
        for s in sets {
            self.env.insert(v.id(), s);
            if self.search(pending, conjuncts, body, on_witness)? {
                found = true;
                break;
            }
        }
        self.env.remove(&v.id());
        pending.push(v);
        Ok(found)
    }

    fn candidate_count(&self, c: &Candidates) -> u128 {
        match c {
            Candidates::Fixed(v) => v.len() as u128,
            Candidates::Singletons => self.universe.size as u128,
            Candidates::SubsetsOf(s) => 1u128.checked_shl(count(s)).unwrap_or(u128::MAX),
        }
    }

    fn candidates(&self, x: &Var, conjuncts: &[&Formula]) -> Candidates {
        use Formula::*;
        let bound = |v: &Var| self.env.get(&v.id());
        let mut best = Candidates::SubsetsOf({
            let mut all = self.universe.empty();
            for i in 0..self.universe.size {
                all[i / 64] |= 1 << (i % 64);
            }
            all
        });
        let consider = |c: Candidates, best: &mut Candidates| {
            if self.candidate_count(&c) < self.candidate_count(best) {
                *best = c;
            }
        };
        for c in conjuncts {
            let cand = match c {
                EqEpsilon(y) if y == x => Candidates::Fixed(vec![self.universe.singleton(0)]),
                EqPos(y, p) if y == x => Candidates::Fixed(
                    self.universe.index(p).map(|i| self.universe.singleton(i)).into_iter().collect(),
                ),
                Sing(y) if y == x => Candidates::Singletons,
                SuccLeft(a, b) | SuccRight(a, b) if a != b => {
                    let right = matches!(c, SuccRight(..));
                    if a == x {
                        match bound(b) {
                            Some(s) => Candidates::Fixed(self.universe.shift(s, right).into_iter().collect()),
                            None => continue,
                        }
                    } else if b == x {
                        match bound(a) {
                            Some(s) => {
                                Candidates::Fixed(self.universe.unshift(s, right).into_iter().collect())
                            }
                            None => continue,
                        }
                    } else {
                        continue;
                    }
                }
                Subseteq(a, b) if a == x && b != x => match bound(b) {
                    Some(s) => Candidates::SubsetsOf(s.clone()),
                    None => continue,
                },
                _ => continue,
            };
            consider(cand, &mut best);
        }
        best
    }
}

fn top_conjuncts<'a>(f: &'a Formula, out: &mut Vec<&'a Formula>) {
    match f {
        Formula::And(a, b) => {
            top_conjuncts(a, out);
            top_conjuncts(b, out);
        }
        other => out.push(other),
    }
}
