//! Automata terms: a symbolic, hash-consed description of the automata built
//! by the classical construction.
//!
//! A term records the operations that produced a state (product, complement,
//! projection, subset construction, zero-derivative) instead of materializing
//! the automaton. [`eval`] gives terms their transition function and root
//! predicate; [`compile`] turns a term into an explicit automaton for tests.

mod compile;
mod eval;

use std::fmt;
use std::rc::Rc;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::tautomata::{base_automaton, State, TreeAutomaton};
use crate::trees::Alphabet;

pub use compile::compile;
pub use eval::{Core, Engine, FullSaturation, Saturator, Stats, DEFAULT_MAX_TERMS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Index of a base automaton registered in a [`TermStore`].
pub type AutomatonId = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermNode {
    /// A state of a base automaton.
    Atom { automaton: AutomatonId, state: State },
    Plus(TermId, TermId),
    And(TermId, TermId),
    Not(TermId),
    /// Projection of the variables in the mask.
    Proj(u64, TermId),
    /// Sorted, deduplicated elements. The empty set is the universal sink.
    Set(Rc<[TermId]>),
    /// `S − 0̄⧄`; the body is always a set term.
    Deriv(TermId),
}

/// Top-level constructor of a term. A transition rule applies to a pair of
/// terms only when their shapes agree (derivatives aside, which are replaced
/// by their saturations first).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TermShape {
    Atom,
    Plus,
    And,
    Not,
    Proj(u64),
    Set,
    Deriv,
}

/// Hash-consing table for terms plus the registry of base automata whose
/// states appear in atoms. Structurally equal terms get the same id.
pub struct TermStore {
    alphabet: Alphabet,
    automata: Vec<TreeAutomaton>,
    nodes: Vec<TermNode>,
    supports: Vec<u64>,
    index: FxHashMap<TermNode, TermId>,
    empty: TermId,
}

impl TermStore {
    pub fn new(alphabet: Alphabet) -> TermStore {
        let mut store = TermStore {
            alphabet,
            automata: Vec::new(),
            nodes: Vec::new(),
            supports: Vec::new(),
            index: FxHashMap::default(),
            empty: TermId(0),
        };
        store.empty = store.intern(TermNode::Set(Rc::from([])));
        store
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    /// Number of distinct terms created so far.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, t: TermId) -> &TermNode {
        &self.nodes[t.index()]
    }

    /// Alphabet bits that transitions from `t` may read.
    pub fn support(&self, t: TermId) -> u64 {
        self.supports[t.index()]
    }

    pub fn shape(&self, t: TermId) -> TermShape {
        match self.node(t) {
            TermNode::Atom { .. } => TermShape::Atom,
            TermNode::Plus(..) => TermShape::Plus,
            TermNode::And(..) => TermShape::And,
            TermNode::Not(_) => TermShape::Not,
            TermNode::Proj(m, _) => TermShape::Proj(*m),
            TermNode::Set(_) => TermShape::Set,
            TermNode::Deriv(_) => TermShape::Deriv,
        }
    }

    /// The empty set term, used as the sink state.
    pub fn empty(&self) -> TermId {
        self.empty
    }

    pub fn automaton(&self, k: AutomatonId) -> &TreeAutomaton {
        &self.automata[k as usize]
    }

    pub fn num_automata(&self) -> usize {
        self.automata.len()
    }

    pub fn add_automaton(&mut self, a: TreeAutomaton) -> Result<AutomatonId> {
        if a.alphabet() != &self.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        self.automata.push(a);
        Ok(self.automata.len() as AutomatonId - 1)
    }

    /// Elements of a set term; panics on other terms.
    pub fn elems(&self, t: TermId) -> Rc<[TermId]> {
        match self.node(t) {
            TermNode::Set(s) => s.clone(),
            other => panic!("not a set term: {other:?}"),
        }
    }

    fn intern(&mut self, node: TermNode) -> TermId {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let support = match &node {
            TermNode::Atom { automaton, .. } => self.automata[*automaton as usize].support(),
            TermNode::Plus(a, b) | TermNode::And(a, b) => self.support(*a) | self.support(*b),
            TermNode::Not(a) | TermNode::Deriv(a) => self.support(*a),
            TermNode::Proj(m, a) => self.support(*a) & !m,
            TermNode::Set(s) => s.iter().fold(0, |m, &x| m | self.support(x)),
        };
        let id = TermId(self.nodes.len() as u32);
        self.nodes.push(node.clone());
        self.supports.push(support);
        self.index.insert(node, id);
        id
    }

    pub fn atom(&mut self, automaton: AutomatonId, state: State) -> TermId {
        assert!((state as usize) < self.automata[automaton as usize].num_states());
        self.intern(TermNode::Atom { automaton, state })
    }

    pub fn plus(&mut self, a: TermId, b: TermId) -> TermId {
        self.intern(TermNode::Plus(a, b))
    }

    pub fn and(&mut self, a: TermId, b: TermId) -> TermId {
        self.intern(TermNode::And(a, b))
    }

    pub fn not(&mut self, a: TermId) -> TermId {
        self.intern(TermNode::Not(a))
    }

    pub fn proj(&mut self, mask: u64, a: TermId) -> TermId {
        self.intern(TermNode::Proj(mask, a))
    }

    /// A set term from arbitrary elements, without collapsing `{S}` to `S`.
    /// This is the form produced by the transition function, where every
    /// successor must keep the shape of its siblings.
    pub fn set_raw(&mut self, mut elems: Vec<TermId>) -> TermId {
        elems.sort_unstable();
        elems.dedup();
        self.intern(TermNode::Set(elems.into()))
    }

    /// A set term with `{S}` collapsed to `S` for a set term `S`.
    pub fn set(&mut self, elems: Vec<TermId>) -> TermId {
        if let [only] = elems[..] {
            if matches!(self.node(only), TermNode::Set(_)) {
                return only;
            }
        }
        self.set_raw(elems)
    }

    pub fn deriv(&mut self, body: TermId) -> TermId {
        assert!(matches!(self.node(body), TermNode::Set(_)), "derivative body must be a set term");
        self.intern(TermNode::Deriv(body))
    }

    /// Leaf states of `a` as a set of atoms.
    pub fn leaf_set(&mut self, k: AutomatonId) -> TermId {
        let leaves = self.automata[k as usize].leaves().to_vec();
        let atoms = leaves.into_iter().map(|q| self.atom(k, q)).collect();
        self.set_raw(atoms)
    }

    /// Renders `t` in the usual notation: `{..}`, `+`, `&`, `~`, `π_X(..)`
    /// and `S − 0̄⧄`.
    pub fn display(&self, t: TermId) -> String {
        let mut out = String::new();
        self.write(&mut out, t, false).expect("writing to a string");
        out
    }

    fn write(&self, out: &mut String, t: TermId, nested: bool) -> fmt::Result {
        use std::fmt::Write;
        match self.node(t) {
            TermNode::Atom { automaton, state } => {
                out.push_str(&self.automata[*automaton as usize].state_name(*state))
            }
            TermNode::Plus(a, b) | TermNode::And(a, b) => {
                let op = if matches!(self.node(t), TermNode::Plus(..)) { '+' } else { '&' };
                if nested {
                    out.push('(');
                }
                self.write(out, *a, true)?;
                write!(out, " {op} ")?;
                self.write(out, *b, true)?;
                if nested {
                    out.push(')');
                }
            }
            TermNode::Not(a) => {
                out.push('~');
                self.write(out, *a, true)?;
            }
            TermNode::Proj(m, a) => {
                let names: Vec<&str> = self
                    .alphabet
                    .vars()
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m >> i & 1 == 1)
                    .map(|(_, v)| v.name())
                    .collect();
                if names.len() == 1 {
                    write!(out, "π_{}(", names[0])?;
                } else {
                    write!(out, "π_{{{}}}(", names.join(","))?;
                }
                self.write(out, *a, false)?;
                out.push(')');
            }
            TermNode::Set(s) => {
                out.push('{');
                for (i, &x) in s.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.write(out, x, false)?;
                }
                out.push('}');
            }
            TermNode::Deriv(body) => {
                out.push('(');
                self.write(out, *body, false)?;
                out.push_str(" − 0̄⧄)");
            }
        }
        Ok(())
    }

    /// The state term `⟨φ⟩` of a desugared formula. Every atom occurrence
    /// gets its own copy of the base automaton.
    pub fn translate_state(&mut self, f: &Formula) -> Result<TermId> {
        use Formula::*;
        Ok(match f {
            _ if f.is_atom() => {
                let a = base_automaton(f, &self.alphabet)?;
                let k = self.add_automaton(a)?;
                self.leaf_set(k)
            }
            And(a, b) => {
                let (a, b) = (self.translate_state(a)?, self.translate_state(b)?);
                self.and(a, b)
            }
            Or(a, b) => {
                let (a, b) = (self.translate_state(a)?, self.translate_state(b)?);
                self.plus(a, b)
            }
            Not(a) => {
                let a = self.translate_state(a)?;
                self.not(a)
            }
            Exists(vs, g) => {
                let g = self.translate_state(g)?;
                let p = self.proj(self.alphabet.mask(vs), g);
                let body = self.set_raw(vec![p]);
                self.deriv(body)
            }
            _ => return Err(Error::InvalidArgument(format!("formula is not desugared: {f}"))),
        })
    }

    /// The automata term `t_φ = {⟨φ⟩}`, collapsed when `⟨φ⟩` is a set.
    pub fn translate(&mut self, f: &Formula) -> Result<TermId> {
        let s = self.translate_state(f)?;
        Ok(self.set(vec![s]))
    }
}

impl fmt::Debug for TermStore {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TermStore")
            .field("terms", &self.nodes.len())
            .field("automata", &self.automata.len())
            .finish()
    }
}
