//! Transition function, root predicate and interference on terms.
//!
//! Derivative terms are handed to a [`Saturator`], which decides how much of
//! the saturation to compute. [`FullSaturation`] always runs the fixpoint to
//! the end; the lazy engine supplies a resumable strategy.

use std::rc::Rc;
use std::time::Instant;

use rustc_hash::{FxHashMap, FxHashSet};

use super::{TermId, TermNode, TermStore};
use crate::error::{Error, Result};
use crate::trees::{subsets_of, Symbol};

/// Counters collected during a decision.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    /// Distinct hash-consed terms.
    pub term_nodes: usize,
    /// Transition evaluations not answered from the memo table.
    pub delta_evals: u64,
    /// Elements processed by fixpoint worklists (saturations and top level).
    pub fixpoint_iterations: u64,
    /// Times a paused saturation was continued.
    pub saturation_resumptions: u64,
    /// Saturations stopped early by a root witness.
    pub early_stops: u64,
    /// Terms dropped or rejected because a larger term subsumed them.
    pub subsumption_prunes: u64,
    /// Largest fixpoint frontier seen.
    pub max_frontier: usize,
    /// Sum of final frontier sizes over all fixpoints.
    pub total_frontier: u64,
    pub wall_ms: u128,
}

/// Shared evaluation state: the term store, memo tables and limits.
pub struct Core {
    pub store: TermStore,
    pub stats: Stats,
    /// Gate every transition by interference (`Δ′`).
    pub gate: bool,
    /// Short-circuit `rt` on `+`, `&` and sets.
    pub short_circuit: bool,
    pub max_terms: usize,
    pub deadline: Option<Instant>,
    delta_memo: FxHashMap<(TermId, TermId, u64), Rc<[TermId]>>,
    rt_memo: FxHashMap<TermId, bool>,
    interf_memo: FxHashMap<(TermId, TermId), bool>,
    sink: Rc<[TermId]>,
}

pub const DEFAULT_MAX_TERMS: usize = 5_000_000;

impl Core {
    pub fn new(store: TermStore) -> Core {
        let sink = Rc::from([store.empty()]);
        Core {
            store,
            stats: Stats::default(),
            gate: false,
            short_circuit: true,
            max_terms: DEFAULT_MAX_TERMS,
            deadline: None,
            delta_memo: FxHashMap::default(),
            rt_memo: FxHashMap::default(),
            interf_memo: FxHashMap::default(),
            sink,
        }
    }

    /// Enforces the term cap and the deadline.
    pub fn check(&self) -> Result<()> {
        if self.store.len() > self.max_terms {
            return Err(Error::ResourceLimit(format!("more than {} terms", self.max_terms)));
        }
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }

    pub fn memoized_rt(&self, t: TermId) -> Option<bool> {
        self.rt_memo.get(&t).copied()
    }
}

/// How derivative terms are saturated.
pub trait Saturator: Sized {
    /// The (possibly subsumption-pruned) full saturation of derivative `d`,
    /// as a set term.
    fn saturation(e: &mut Engine<Self>, d: TermId) -> Result<TermId>;

    /// `rt(d)` for a derivative `d`.
    fn rt_deriv(e: &mut Engine<Self>, d: TermId) -> Result<bool>;

    /// The saturation of `d` if it is already complete.
    fn known_saturation(&self, _d: TermId) -> Option<TermId> {
        None
    }
}

pub struct Engine<S> {
    pub core: Core,
    pub sat: S,
}

impl<S: Saturator> Engine<S> {
    pub fn new(store: TermStore, sat: S) -> Engine<S> {
        Engine { core: Core::new(store), sat }
    }

    pub fn store(&self) -> &TermStore {
        &self.core.store
    }

    pub fn store_mut(&mut self) -> &mut TermStore {
        &mut self.core.store
    }

    /// `Δ_a(t, u)`, memoized on the bits of `a` that either side reads.
    pub fn delta(&mut self, t: TermId, u: TermId, a: u64) -> Result<Rc<[TermId]>> {
        let a = a & (self.core.store.support(t) | self.core.store.support(u));
        if let Some(r) = self.core.delta_memo.get(&(t, u, a)) {
            return Ok(r.clone());
        }
        if self.core.stats.delta_evals.is_multiple_of(1024) {
            self.core.check()?;
        }
        let r = self.delta_uncached(t, u, a)?;
        self.core.stats.delta_evals += 1;
        self.core.delta_memo.insert((t, u, a), r.clone());
        Ok(r)
    }

    fn delta_uncached(&mut self, t: TermId, u: TermId, a: u64) -> Result<Rc<[TermId]>> {
        if self.core.gate && !self.interferes(t, u)? {
            return Ok(self.core.sink.clone());
        }
        let (nt, nu) = (self.core.store.node(t).clone(), self.core.store.node(u).clone());
        Ok(match (nt, nu) {
            (TermNode::Deriv(_), _) => {
                let s = S::saturation(self, t)?;
                return self.delta(s, u, a);
            }
            (_, TermNode::Deriv(_)) => {
                let s = S::saturation(self, u)?;
                return self.delta(t, s, a);
            }
            (TermNode::Plus(t1, t2), TermNode::Plus(u1, u2)) | (TermNode::And(t1, t2), TermNode::And(u1, u2)) => {
                let plus = matches!(self.core.store.node(t), TermNode::Plus(..));
                let left = self.delta(t1, u1, a)?;
                let right = self.delta(t2, u2, a)?;
                let mut out = Vec::with_capacity(left.len() * right.len());
                for &x in left.iter() {
                    for &y in right.iter() {
                        out.push(if plus { self.core.store.plus(x, y) } else { self.core.store.and(x, y) });
                    }
                }
                sorted(out)
            }
            (TermNode::Proj(m, t1), TermNode::Proj(m2, u1)) if m == m2 => {
                let free = (self.core.store.support(t1) | self.core.store.support(u1)) & m;
                let mut out = Vec::new();
                for ext in subsets_of(free) {
                    for &v in self.delta(t1, u1, (a & !m) | ext)?.iter() {
                        out.push(self.core.store.proj(m, v));
                    }
                }
                sorted(out)
            }
            (TermNode::Not(t1), TermNode::Not(u1)) => {
                let inner = self.delta(t1, u1, a)?;
                sorted(inner.iter().map(|&v| self.core.store.not(v)).collect())
            }
            (TermNode::Set(s1), TermNode::Set(s2)) => {
                let mut all = Vec::new();
                for &x in s1.iter() {
                    for &y in s2.iter() {
                        all.extend_from_slice(&self.delta(x, y, a)?);
                    }
                }
                Rc::from([self.core.store.set_raw(all)])
            }
            (TermNode::Atom { automaton: k1, state: q }, TermNode::Atom { automaton: k2, state: r }) if k1 == k2 => {
                let targets = self.core.store.automaton(k1).delta(q, r, Symbol(a)).to_vec();
                if targets.is_empty() {
                    return Ok(self.core.sink.clone());
                }
                sorted(targets.into_iter().map(|s| self.core.store.atom(k1, s)).collect())
            }
            _ => self.core.sink.clone(),
        })
    }

    /// The root predicate. With short-circuiting on, `+`, `&` and sets stop
    /// at the first operand that decides the result (left first).
    pub fn rt(&mut self, t: TermId) -> Result<bool> {
        if let Some(&b) = self.core.rt_memo.get(&t) {
            return Ok(b);
        }
        let sc = self.core.short_circuit;
        let b = match self.core.store.node(t).clone() {
            TermNode::Atom { automaton, state } => self.core.store.automaton(automaton).is_root(state),
            TermNode::Plus(x, y) => {
                let l = self.rt(x)?;
                if sc && l { true } else { self.rt(y)? || l }
            }
            TermNode::And(x, y) => {
                let l = self.rt(x)?;
                if sc && !l { false } else { self.rt(y)? && l }
            }
            TermNode::Proj(_, x) => self.rt(x)?,
            TermNode::Not(x) => !self.rt(x)?,
            TermNode::Set(s) => {
                let mut any = false;
                for &x in s.iter() {
                    any |= self.rt(x)?;
                    if sc && any {
                        break;
                    }
                }
                any
            }
            TermNode::Deriv(_) => S::rt_deriv(self, t)?,
        };
        self.core.rt_memo.insert(t, b);
        Ok(b)
    }

    /// Interference `t ⋈ u`: whether the two terms may share base-automaton
    /// states.
    pub fn interferes(&mut self, t: TermId, u: TermId) -> Result<bool> {
        if let Some(&b) = self.core.interf_memo.get(&(t, u)) {
            return Ok(b);
        }
        let (nt, nu) = (self.core.store.node(t).clone(), self.core.store.node(u).clone());
        let b = match (nt, nu) {
            (TermNode::Deriv(_), _) => {
                let s = S::saturation(self, t)?;
                self.interferes(s, u)?
            }
            (_, TermNode::Deriv(_)) => {
                let s = S::saturation(self, u)?;
                self.interferes(t, s)?
            }
            (TermNode::Set(s1), TermNode::Set(s2)) => {
                let mut any = t == u;
                'outer: for &x in s1.iter() {
                    for &y in s2.iter() {
                        if any {
                            break 'outer;
                        }
                        any = self.interferes(x, y)?;
                    }
                }
                any
            }
            (TermNode::Plus(t1, t2), TermNode::Plus(u1, u2)) | (TermNode::And(t1, t2), TermNode::And(u1, u2)) => {
                self.interferes(t1, u1)? || self.interferes(t2, u2)?
            }
            (TermNode::Not(x), TermNode::Not(y)) => self.interferes(x, y)?,
            (TermNode::Proj(m, x), TermNode::Proj(m2, y)) if m == m2 => self.interferes(x, y)?,
            (TermNode::Atom { automaton: k1, .. }, TermNode::Atom { automaton: k2, .. }) => k1 == k2,
            _ => false,
        };
        self.core.interf_memo.insert((t, u), b);
        Ok(b)
    }

    /// Least set containing `start` and closed under `Δ_a` for every `a` in
    /// `symbols`. Elements are returned in discovery order.
    pub fn reach(&mut self, start: &[TermId], symbols: &[u64]) -> Result<Vec<TermId>> {
        let mut items: Vec<TermId> = Vec::new();
        let mut seen = FxHashSet::default();
        for &t in start {
            if seen.insert(t) {
                items.push(t);
            }
        }
        let mut i = 0;
        while i < items.len() {
            self.core.check()?;
            self.core.stats.fixpoint_iterations += 1;
            for j in 0..=i {
                for (p, q) in pairs(i, j) {
                    for &a in symbols {
                        for &v in self.delta(items[p], items[q], a)?.iter() {
                            if seen.insert(v) {
                                items.push(v);
                            }
                        }
                    }
                }
            }
            i += 1;
        }
        self.core.stats.max_frontier = self.core.stats.max_frontier.max(items.len());
        self.core.stats.total_frontier += items.len() as u64;
        Ok(items)
    }

    /// All symbols over the support of `t`, as full alphabet masks in
    /// increasing order.
    pub fn symbols_of(&self, t: TermId) -> Vec<u64> {
        subsets_of(self.core.store.support(t)).collect()
    }

    pub fn stats(&self) -> Stats {
        Stats { term_nodes: self.core.store.len(), ..self.core.stats.clone() }
    }
}

/// Ordered pairs `(i, j)` and `(j, i)`, listed once when `i == j`.
pub(crate) fn pairs(i: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    std::iter::once((i, j)).chain((i != j).then_some((j, i)))
}

fn sorted(mut v: Vec<TermId>) -> Rc<[TermId]> {
    v.sort_unstable();
    v.dedup();
    v.into()
}

/// Saturates every derivative completely, once (memoized).
#[derive(Default)]
pub struct FullSaturation {
    memo: FxHashMap<TermId, TermId>,
}

impl Saturator for FullSaturation {
    fn saturation(e: &mut Engine<Self>, d: TermId) -> Result<TermId> {
        if let Some(&s) = e.sat.memo.get(&d) {
            return Ok(s);
        }
        let TermNode::Deriv(body) = *e.core.store.node(d) else {
            panic!("not a derivative term");
        };
        let elems = e.core.store.elems(body);
        let found = e.reach(&elems, &[0])?;
        let s = e.core.store.set_raw(found);
        e.sat.memo.insert(d, s);
        Ok(s)
    }

    fn rt_deriv(e: &mut Engine<Self>, d: TermId) -> Result<bool> {
        let s = Self::saturation(e, d)?;
        e.rt(s)
    }

    fn known_saturation(&self, d: TermId) -> Option<TermId> {
        self.memo.get(&d).copied()
    }
}
