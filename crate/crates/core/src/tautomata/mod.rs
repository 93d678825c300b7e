//! Explicit bottom-up binary tree automata.
//!
//! Transitions are stored densely. Each automaton carries a `support` mask:
//! the alphabet bits its transitions actually read. A symbol is reduced to
//! its support bits before lookup, so an automaton over a 10-variable
//! alphabet that only mentions two variables has a 4-symbol table.

mod base;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::Hash;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::trees::{Alphabet, Symbol, Tree};

pub use base::base_automaton;

pub type State = u32;

/// Size guards for automaton construction.
#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub max_transitions: usize,
    pub deadline: Option<Instant>,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits { max_states: 1_000_000, max_transitions: 16_000_000, deadline: None }
    }
}

impl Limits {
    fn check_time(&self) -> Result<()> {
        match self.deadline {
            Some(d) if Instant::now() >= d => Err(Error::Timeout),
            _ => Ok(()),
        }
    }
}

/// Extracts the bits of `a` selected by `mask` into the low bits.
pub fn pext(a: u64, mask: u64) -> u32 {
    let mut out = 0u32;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if a & low != 0 {
            out |= 1 << k;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

/// Inverse of [`pext`]: scatters the low bits of `local` over `mask`.
pub fn pdep(local: u32, mask: u64) -> u64 {
    let mut out = 0u64;
    let mut k = 0;
    let mut m = mask;
    while m != 0 {
        let low = m & m.wrapping_neg();
        if local >> k & 1 == 1 {
            out |= low;
        }
        k += 1;
        m &= m - 1;
    }
    out
}

#[derive(Clone, Debug)]
pub struct TreeAutomaton {
    alphabet: Alphabet,
    support: u64,
    num_states: usize,
    leaves: Vec<State>,
    roots: Vec<bool>,
    offsets: Vec<u32>,
    targets: Vec<State>,
    names: Option<Vec<String>>,
}

impl PartialEq for TreeAutomaton {
    fn eq(&self, other: &Self) -> bool {
        self.alphabet == other.alphabet
            && self.support == other.support
            && self.num_states == other.num_states
            && self.leaves == other.leaves
            && self.roots == other.roots
            && self.offsets == other.offsets
            && self.targets == other.targets
    }
}

/// Collects transitions for states discovered in arbitrary order and packs
/// them into the dense layout at the end.
struct TableBuilder {
    k: u32,
    limits: Limits,
    entries: Vec<(State, State, u32, u32, u32)>,
    buf: Vec<State>,
}

impl TableBuilder {
    fn new(k: u32, limits: Limits) -> TableBuilder {
        TableBuilder { k, limits, entries: Vec::new(), buf: Vec::new() }
    }

    fn push(&mut self, q: State, r: State, local: u32, targets: &[State]) -> Result<()> {
        if targets.is_empty() {
            return Ok(());
        }
        if self.buf.len() + targets.len() > self.limits.max_transitions {
            return Err(Error::ResourceLimit(format!(
                "more than {} transitions",
                self.limits.max_transitions
            )));
        }
        let start = self.buf.len() as u32;
        self.buf.extend_from_slice(targets);
        self.entries.push((q, r, local, start, targets.len() as u32));
        Ok(())
    }

    fn finish(self, n: usize) -> Result<(Vec<u32>, Vec<State>)> {
        let rows = (n * n) << self.k;
        if rows > 4 * self.limits.max_transitions.max(1) {
            return Err(Error::ResourceLimit(format!("transition table with {rows} rows")));
        }
        let index = |q: State, r: State, local: u32| ((q as usize * n + r as usize) << self.k) | local as usize;
        let mut offsets = vec![0u32; rows + 1];
        for &(q, r, l, _, len) in &self.entries {
            offsets[index(q, r, l) + 1] += len;
        }
        for i in 0..rows {
            offsets[i + 1] += offsets[i];
        }
        let mut targets = vec![0; self.buf.len()];
        let mut fill = offsets.clone();
        for &(q, r, l, start, len) in &self.entries {
            let i = index(q, r, l);
            let at = fill[i] as usize;
            targets[at..at + len as usize]
                .copy_from_slice(&self.buf[start as usize..(start + len) as usize]);
            fill[i] += len;
        }
        Ok((offsets, targets))
    }
}

/// Interns states discovered during a worklist construction.
struct Interner<K> {
    index: HashMap<K, State>,
    keys: Vec<K>,
    max: usize,
}

impl<K: Hash + Eq + Clone> Interner<K> {
    fn new(max: usize) -> Interner<K> {
        Interner { index: HashMap::new(), keys: Vec::new(), max }
    }

    fn intern(&mut self, k: K) -> Result<State> {
        if let Some(&s) = self.index.get(&k) {
            return Ok(s);
        }
        if self.keys.len() >= self.max {
            return Err(Error::ResourceLimit(format!("more than {} states", self.max)));
        }
        let s = self.keys.len() as State;
        self.index.insert(k.clone(), s);
        self.keys.push(k);
        Ok(s)
    }
}

/// Ordered pairs `(i, j)` and `(j, i)`, listed once when `i == j`.
fn pairs<T: Copy + PartialEq>(i: T, j: T) -> impl Iterator<Item = (T, T)> {
    std::iter::once((i, j)).chain((i != j).then_some((j, i)))
}

fn sorted_union(out: &mut Vec<State>) {
    out.sort_unstable();
    out.dedup();
}

impl TreeAutomaton {
    /// Builds an automaton from a transition function over the symbols of
    /// `support`. The function receives full alphabet masks restricted to
    /// `support`.
    pub fn from_fn<F>(
        alphabet: Alphabet,
        support: u64,
        num_states: usize,
        leaves: Vec<State>,
        roots: Vec<bool>,
        mut delta: F,
    ) -> Result<TreeAutomaton>
    where
        F: FnMut(State, State, u64) -> Vec<State>,
    {
        assert_eq!(roots.len(), num_states, "one root flag per state");
        let support = support & alphabet.full_mask();
        let k = support.count_ones();
        let mut tb = TableBuilder::new(k, Limits::default());
        for q in 0..num_states as State {
            for r in 0..num_states as State {
                for local in 0..1u32 << k {
                    let mut t = delta(q, r, pdep(local, support));
                    sorted_union(&mut t);
                    assert!(t.iter().all(|&s| (s as usize) < num_states), "unknown target state");
                    tb.push(q, r, local, &t)?;
                }
            }
        }
        let (offsets, targets) = tb.finish(num_states)?;
        let mut leaves = leaves;
        sorted_union(&mut leaves);
        Ok(TreeAutomaton { alphabet, support, num_states, leaves, roots, offsets, targets, names: None })
    }

    pub fn with_names(mut self, names: Vec<String>) -> TreeAutomaton {
        assert_eq!(names.len(), self.num_states);
        self.names = Some(names);
        self
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn support(&self) -> u64 {
        self.support
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_transitions(&self) -> usize {
        self.targets.len()
    }

    pub fn leaves(&self) -> &[State] {
        &self.leaves
    }

    pub fn is_root(&self, q: State) -> bool {
        self.roots[q as usize]
    }

    pub fn roots(&self) -> impl Iterator<Item = State> + '_ {
        (0..self.num_states as State).filter(|&q| self.roots[q as usize])
    }

    pub fn state_name(&self, q: State) -> String {
        match &self.names {
            Some(n) => n[q as usize].clone(),
            None => q.to_string(),
        }
    }

    pub fn state_by_name(&self, name: &str) -> Option<State> {
        self.names.as_ref()?.iter().position(|n| n == name).map(|i| i as State)
    }

    fn k(&self) -> u32 {
        self.support.count_ones()
    }

    fn row(&self, q: State, r: State, local: u32) -> &[State] {
        let i = ((q as usize * self.num_states + r as usize) << self.k()) | local as usize;
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    /// `δ_a(q, r)`.
    pub fn delta(&self, q: State, r: State, a: Symbol) -> &[State] {
        self.row(q, r, pext(a.0, self.support))
    }

    pub fn is_deterministic(&self) -> bool {
        self.leaves.len() == 1 && self.offsets.windows(2).all(|w| w[1] - w[0] <= 1)
    }

    pub fn is_complete(&self) -> bool {
        !self.leaves.is_empty() && self.offsets.windows(2).all(|w| w[1] - w[0] >= 1)
    }

    fn check_alphabet(&self, other: &TreeAutomaton) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        Ok(())
    }

    /// Full product over `Q × Q'`; state `(q, q')` is numbered `q·|Q'| + q'`.
    fn product(&self, other: &TreeAutomaton, conj: bool) -> Result<TreeAutomaton> {
        self.check_alphabet(other)?;
        let (n1, n2) = (self.num_states, other.num_states);
        let n = n1 * n2;
        if n > Limits::default().max_states {
            return Err(Error::ResourceLimit(format!("{n} product states")));
        }
        let support = self.support | other.support;
        let k = support.count_ones();
        let mut tb = TableBuilder::new(k, Limits::default());
        let mut t = Vec::new();
        for p in 0..n {
            for s in 0..n {
                let (q1, q2) = ((p / n2) as State, (p % n2) as State);
                let (r1, r2) = ((s / n2) as State, (s % n2) as State);
                for local in 0..1u32 << k {
                    let a = pdep(local, support);
                    t.clear();
                    for &x in self.row(q1, r1, pext(a, self.support)) {
                        for &y in other.row(q2, r2, pext(a, other.support)) {
                            t.push(x * n2 as State + y);
                        }
                    }
                    tb.push(p as State, s as State, local, &t)?;
                }
            }
        }
        let (offsets, targets) = tb.finish(n)?;
        let leaves = self
            .leaves
            .iter()
            .flat_map(|&x| other.leaves.iter().map(move |&y| x * n2 as State + y))
            .collect();
        let roots = (0..n)
            .map(|p| {
                let (a, b) = (self.roots[p / n2], other.roots[p % n2]);
                if conj { a && b } else { a || b }
            })
            .collect();
        Ok(TreeAutomaton {
            alphabet: self.alphabet.clone(),
            support,
            num_states: n,
            leaves,
            roots,
            offsets,
            targets,
            names: None,
        })
    }

    pub fn intersect(&self, other: &TreeAutomaton) -> Result<TreeAutomaton> {
        self.product(other, true)
    }

    pub fn union(&self, other: &TreeAutomaton) -> Result<TreeAutomaton> {
        self.product(other, false)
    }

    /// Product restricted to pairs reachable from the leaf pairs.
    pub fn product_reachable(&self, other: &TreeAutomaton, conj: bool, limits: Limits) -> Result<TreeAutomaton> {
        self.check_alphabet(other)?;
        let support = self.support | other.support;
        let k = support.count_ones();
        let mut states: Interner<(State, State)> = Interner::new(limits.max_states);
        let mut leaves = Vec::new();
        for &x in &self.leaves {
            for &y in &other.leaves {
                leaves.push(states.intern((x, y))?);
            }
        }
        let mut tb = TableBuilder::new(k, limits);
        let mut t = Vec::new();
        let mut i = 0;
        while i < states.keys.len() {
            limits.check_time()?;
            for j in 0..=i {
                for (p, s) in pairs(i, j) {
                    let (q1, q2) = states.keys[p];
                    let (r1, r2) = states.keys[s];
                    for local in 0..1u32 << k {
                        let a = pdep(local, support);
                        t.clear();
                        for &x in self.row(q1, r1, pext(a, self.support)) {
                            for &y in other.row(q2, r2, pext(a, other.support)) {
                                t.push(states.intern((x, y))?);
                            }
                        }
                        sorted_union(&mut t);
                        tb.push(p as State, s as State, local, &t)?;
                    }
                }
            }
            i += 1;
        }
        let n = states.keys.len();
        let (offsets, targets) = tb.finish(n)?;
        let roots = states
            .keys
            .iter()
            .map(|&(a, b)| {
                let (a, b) = (self.roots[a as usize], other.roots[b as usize]);
                if conj { a && b } else { a || b }
            })
            .collect();
        sorted_union(&mut leaves);
        Ok(TreeAutomaton {
            alphabet: self.alphabet.clone(),
            support,
            num_states: n,
            leaves,
            roots,
            offsets,
            targets,
            names: None,
        })
    }

    /// Swaps root and non-root states of a deterministic complete automaton.
    pub fn complement(&self) -> Result<TreeAutomaton> {
        if !self.is_deterministic() {
            return Err(Error::Precondition("deterministic"));
        }
        if !self.is_complete() {
            return Err(Error::Precondition("complete"));
        }
        let mut c = self.clone();
        for r in &mut c.roots {
            *r = !*r;
        }
        Ok(c)
    }

    /// Subset construction over reachable subsets.
    pub fn determinize(&self) -> Result<TreeAutomaton> {
        self.determinize_with(Limits::default())
    }

    pub fn determinize_with(&self, limits: Limits) -> Result<TreeAutomaton> {
        let k = self.k();
        let mut states: Interner<Box<[State]>> = Interner::new(limits.max_states);
        let leaf = states.intern(self.leaves.clone().into_boxed_slice())?;
        let mut tb = TableBuilder::new(k, limits);
        let mut t = Vec::new();
        let mut i = 0;
        while i < states.keys.len() {
            limits.check_time()?;
            for j in 0..=i {
                for (p, s) in pairs(i, j) {
                    for local in 0..1u32 << k {
                        t.clear();
                        for &q in states.keys[p].iter() {
                            for &r in states.keys[s].iter() {
                                t.extend_from_slice(self.row(q, r, local));
                            }
                        }
                        sorted_union(&mut t);
                        let target = states.intern(t.clone().into_boxed_slice())?;
                        tb.push(p as State, s as State, local, &[target])?;
                    }
                }
            }
            i += 1;
        }
        let n = states.keys.len();
        let (offsets, targets) = tb.finish(n)?;
        let roots = states.keys.iter().map(|s| s.iter().any(|&q| self.roots[q as usize])).collect();
        Ok(TreeAutomaton {
            alphabet: self.alphabet.clone(),
            support: self.support,
            num_states: n,
            leaves: vec![leaf],
            roots,
            offsets,
            targets,
            names: None,
        })
    }

    /// Every `(q, r, a)` has exactly one successor. Leaves may be several.
    pub fn is_functional(&self) -> bool {
        self.offsets.windows(2).all(|w| w[1] - w[0] == 1)
    }

    /// Merges states with the same accepted contexts (Moore-style
    /// refinement). Requires a functional transition table.
    pub fn minimize(&self) -> Result<TreeAutomaton> {
        if !self.is_functional() {
            return Err(Error::Precondition("functional transition table"));
        }
        let n = self.num_states;
        let syms = 1usize << self.k();
        let next = |q: usize, r: usize, l: usize| self.targets[self.offsets[(q * n + r) * syms + l] as usize] as usize;
        let mut class: Vec<u32> = self.roots.iter().map(|&b| b as u32).collect();
        let mut count = if n == 0 { 0 } else { 1 + class.iter().any(|&c| c != class[0]) as usize };
        let mut sig = Vec::with_capacity(1 + 2 * n * syms);
        loop {
            let mut ids: HashMap<Vec<u32>, u32> = HashMap::new();
            let mut refined = Vec::with_capacity(n);
            for q in 0..n {
                sig.clear();
                sig.push(class[q]);
                for r in 0..n {
                    for l in 0..syms {
                        sig.push(class[next(q, r, l)]);
                        sig.push(class[next(r, q, l)]);
                    }
                }
                let fresh = ids.len() as u32;
                refined.push(*ids.entry(sig.clone()).or_insert(fresh));
            }
            class = refined;
            if ids.len() == count {
                break;
            }
            count = ids.len();
        }
        let mut rep = vec![usize::MAX; count];
        for q in (0..n).rev() {
            rep[class[q] as usize] = q;
        }
        let mut leaves: Vec<State> = self.leaves.iter().map(|&q| class[q as usize]).collect();
        sorted_union(&mut leaves);
        let mut targets = Vec::with_capacity(count * count * syms);
        for &q in &rep {
            for &r in &rep {
                for l in 0..syms {
                    targets.push(class[next(q, r, l)]);
                }
            }
        }
        Ok(TreeAutomaton {
            alphabet: self.alphabet.clone(),
            support: self.support,
            num_states: count,
            leaves,
            roots: rep.iter().map(|&q| self.roots[q]).collect(),
            offsets: (0..=targets.len() as u32).collect(),
            targets,
            names: None,
        })
    }

    /// `π_Y(A)`: the bits in `mask` are ignored by the new transitions.
    pub fn project(&self, mask: u64) -> Result<TreeAutomaton> {
        let drop = self.support & mask;
        if drop == 0 {
            return Ok(self.clone());
        }
        let support = self.support & !mask;
        let k = support.count_ones();
        let n = self.num_states;
        let mut tb = TableBuilder::new(k, Limits::default());
        let mut t = Vec::new();
        for q in 0..n as State {
            for r in 0..n as State {
                for local in 0..1u32 << k {
                    let a = pdep(local, support);
                    t.clear();
                    for ext in crate::trees::subsets_of(drop) {
                        t.extend_from_slice(self.row(q, r, pext(a | ext, self.support)));
                    }
                    sorted_union(&mut t);
                    tb.push(q, r, local, &t)?;
                }
            }
        }
        let (offsets, targets) = tb.finish(n)?;
        Ok(TreeAutomaton { support, offsets, targets, ..self.clone() })
    }

    /// Replaces the leaf states by everything reachable from them through
    /// `0̄`-transitions.
    pub fn zero_derivative(&self) -> TreeAutomaton {
        let leaves = self.reach_by(&self.leaves, Some(0));
        TreeAutomaton { leaves, ..self.clone() }
    }

    /// Least fixpoint of `S ∪ { δ_a(q, r) | q, r ∈ S, a ∈ Σ }`.
    pub fn reach(&self, start: &[State]) -> Vec<State> {
        self.reach_by(start, None)
    }

    fn reach_by(&self, start: &[State], only_local: Option<u32>) -> Vec<State> {
        let mut seen = vec![false; self.num_states];
        let mut order: Vec<State> = Vec::new();
        for &q in start {
            if !seen[q as usize] {
                seen[q as usize] = true;
                order.push(q);
            }
        }
        let locals: Vec<u32> = match only_local {
            Some(l) => vec![l],
            None => (0..1u32 << self.k()).collect(),
        };
        let mut i = 0;
        while i < order.len() {
            for j in 0..=i {
                for (p, s) in pairs(order[i], order[j]) {
                    for &l in &locals {
                        for &x in self.row(p, s, l) {
                            if !seen[x as usize] {
                                seen[x as usize] = true;
                                order.push(x);
                            }
                        }
                    }
                }
            }
            i += 1;
        }
        order.sort_unstable();
        order
    }

    pub fn is_empty(&self) -> bool {
        !self.reach(&self.leaves).iter().any(|&q| self.roots[q as usize])
    }

    /// An accepted tree of least height, if the language is non-empty.
    pub fn accepted_tree(&self) -> Option<Tree> {
        let mut tree: Vec<Option<Tree>> = vec![None; self.num_states];
        let mut known: Vec<State> = Vec::new();
        for &q in &self.leaves {
            if tree[q as usize].is_none() {
                tree[q as usize] = Some(Tree::Leaf);
                known.push(q);
            }
        }
        loop {
            if let Some(&q) = known.iter().find(|&&q| self.roots[q as usize]) {
                return tree[q as usize].clone();
            }
            // one more level: pairs of states known so far
            let mut fresh = Vec::new();
            for &p in &known {
                for &s in &known {
                    for local in 0..1u32 << self.k() {
                        for &x in self.row(p, s, local) {
                            if tree[x as usize].is_none() {
                                let (l, r) = (tree[p as usize].clone()?, tree[s as usize].clone()?);
                                tree[x as usize] = Some(Tree::node(Symbol(pdep(local, self.support)), l, r));
                                fresh.push(x);
                            }
                        }
                    }
                }
            }
            if fresh.is_empty() {
                return None;
            }
            known.extend(fresh);
        }
    }

    /// States reachable by running on `t`.
    pub fn run(&self, t: &Tree) -> Vec<State> {
        match t {
            Tree::Leaf => self.leaves.clone(),
            Tree::Node(a, l, r) => {
                let (sl, sr) = (self.run(l), self.run(r));
                let local = pext(a.0, self.support);
                let mut out = Vec::new();
                for &q in &sl {
                    for &s in &sr {
                        out.extend_from_slice(self.row(q, s, local));
                    }
                }
                sorted_union(&mut out);
                out
            }
        }
    }

    pub fn membership(&self, t: &Tree) -> bool {
        self.run(t).iter().any(|&q| self.roots[q as usize])
    }

    /// Restricts the automaton to states reachable from its leaves.
    pub fn trim(&self) -> Result<TreeAutomaton> {
        let keep = self.reach(&self.leaves);
        if keep.len() == self.num_states {
            return Ok(self.clone());
        }
        let mut renum = vec![State::MAX; self.num_states];
        for (i, &q) in keep.iter().enumerate() {
            renum[q as usize] = i as State;
        }
        let k = self.k();
        let mut tb = TableBuilder::new(k, Limits::default());
        let mut t = Vec::new();
        for (i, &q) in keep.iter().enumerate() {
            for (j, &r) in keep.iter().enumerate() {
                for local in 0..1u32 << k {
                    t.clear();
                    t.extend(self.row(q, r, local).iter().map(|&x| renum[x as usize]));
                    tb.push(i as State, j as State, local, &t)?;
                }
            }
        }
        let n = keep.len();
        let (offsets, targets) = tb.finish(n)?;
        Ok(TreeAutomaton {
            alphabet: self.alphabet.clone(),
            support: self.support,
            num_states: n,
            leaves: self.leaves.iter().map(|&q| renum[q as usize]).collect(),
            roots: keep.iter().map(|&q| self.roots[q as usize]).collect(),
            offsets,
            targets,
            names: self.names.as_ref().map(|ns| keep.iter().map(|&q| ns[q as usize].clone()).collect()),
        })
    }

    /// Text dump: a header, then one transition per line as
    /// `q r bits -> targets`, where `bits` lists the support variables.
    pub fn dump(&self) -> String {
        let vars: Vec<&str> = self
            .alphabet
            .vars()
            .iter()
            .filter(|v| self.alphabet.bit(v) & self.support != 0)
            .map(|v| v.name())
            .collect();
        let names = |qs: &mut dyn Iterator<Item = State>| {
            qs.map(|q| self.state_name(q)).collect::<Vec<_>>().join(" ")
        };
        let mut out = String::new();
        let _ = writeln!(out, "support {}", vars.join(" "));
        let _ = writeln!(out, "states {}", names(&mut (0..self.num_states as State)));
        let _ = writeln!(out, "leaves {}", names(&mut self.leaves.iter().copied()));
        let _ = writeln!(out, "roots {}", names(&mut self.roots()));
        let k = self.k();
        for q in 0..self.num_states as State {
            for r in 0..self.num_states as State {
                for local in 0..1u32 << k {
                    let row = self.row(q, r, local);
                    let bits: String = (0..k).map(|b| if local >> b & 1 == 1 { '1' } else { '0' }).collect();
                    let _ = writeln!(
                        out,
                        "{} {} {} -> {}",
                        self.state_name(q),
                        self.state_name(r),
                        if bits.is_empty() { "-".to_string() } else { bits },
                        names(&mut row.iter().copied())
                    );
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests;
