//! Symbols, finite binary trees and the assignment encodings they carry.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formula::{Var, VarSet};

/// A tree position: a word over `{L, R}`. The empty word is the root.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Position(Vec<u8>);

impl Position {
    pub fn root() -> Position {
        Position(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn left(&self) -> Position {
        self.child(b'L')
    }

    pub fn right(&self) -> Position {
        self.child(b'R')
    }

    fn child(&self, dir: u8) -> Position {
        let mut p = self.0.clone();
        p.push(dir);
        Position(p)
    }

    /// All proper and improper prefixes, shortest first.
    pub fn prefixes(&self) -> impl Iterator<Item = Position> + '_ {
        (0..=self.0.len()).map(move |i| Position(self.0[..i].to_vec()))
    }

    /// Every position of length at most `depth`, in BFS order.
    pub fn all_up_to(depth: usize) -> Vec<Position> {
        let mut out = vec![Position::root()];
        let mut i = 0;
        while i < out.len() {
            if out[i].len() < depth {
                let p = out[i].clone();
                out.push(p.left());
                out.push(p.right());
            }
            i += 1;
        }
        out
    }

    /// BFS ordering: shorter positions first, then lexicographic (`L < R`).
    pub fn bfs_cmp(&self, other: &Position) -> std::cmp::Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> Result<Position> {
        if s == "e" || s == "ε" {
            return Ok(Position::root());
        }
        if s.is_empty() || !s.bytes().all(|b| b == b'L' || b == b'R') {
            return Err(Error::InvalidPosition(s.to_string()));
        }
        Ok(Position(s.as_bytes().to_vec()))
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            f.write_str("e")
        } else {
            f.write_str(std::str::from_utf8(&self.0).expect("ascii"))
        }
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The ordered variable set `𝕏` of a solver session. Bit `i` of a
/// [`Symbol`] belongs to `vars()[i]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Alphabet(Arc<[Var]>);

pub const MAX_VARS: usize = 64;

impl Alphabet {
    pub fn new<I: IntoIterator<Item = Var>>(vars: I) -> Result<Alphabet> {
        let set: VarSet = vars.into_iter().collect();
        if set.len() > MAX_VARS {
            return Err(Error::TooManyVariables(set.len()));
        }
        Ok(Alphabet(set.into_iter().collect()))
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn index_of(&self, v: &Var) -> Option<usize> {
        self.0.binary_search(v).ok()
    }

    pub fn bit(&self, v: &Var) -> u64 {
        1u64 << self.index_of(v).unwrap_or_else(|| panic!("{v:?} not in alphabet"))
    }

    /// Mask of the given variables; variables outside the alphabet are ignored.
    pub fn mask<'a, I: IntoIterator<Item = &'a Var>>(&self, vars: I) -> u64 {
        vars.into_iter()
            .filter_map(|v| self.index_of(v))
            .fold(0, |m, i| m | (1 << i))
    }

    pub fn full_mask(&self) -> u64 {
        if self.0.len() == 64 {
            u64::MAX
        } else {
            (1u64 << self.0.len()) - 1
        }
    }

    /// All symbols, in lexicographic order of their bit-vectors.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        subsets_of(self.full_mask()).map(Symbol)
    }
}

impl fmt::Debug for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// Enumerates all sub-masks of `mask` in increasing numeric order.
pub fn subsets_of(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(0u64);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == mask { None } else { Some(((cur | !mask).wrapping_add(1)) & mask) };
        Some(cur)
    })
}

/// A symbol over an [`Alphabet`]: a total map from its variables to `{0,1}`,
/// stored as a bit-vector.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Symbol(pub u64);

impl Symbol {
    pub const ZERO: Symbol = Symbol(0);

    pub fn get(self, index: usize) -> bool {
        self.0 >> index & 1 == 1
    }

    /// Renders the bits in alphabet order, e.g. `"10"`.
    pub fn bits(self, alphabet: &Alphabet) -> String {
        (0..alphabet.len()).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }
}

/// Projection of a tree label with respect to the variables in `mask`.
///
/// `None` stands for `⊥`, which projects to itself. For a proper symbol the
/// result has `2^|mask|` elements and always contains the symbol itself.
pub fn project_symbol(a: Option<Symbol>, mask: u64) -> Vec<Option<Symbol>> {
    match a {
        None => vec![None],
        Some(Symbol(bits)) => subsets_of(mask).map(|s| Some(Symbol(bits & !mask | s))).collect(),
    }
}

/// A finite binary tree whose inner nodes carry symbols and whose leaves are `⊥`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Tree {
    Leaf,
    Node(Symbol, Box<Tree>, Box<Tree>),
}

impl Tree {
    pub fn node(a: Symbol, l: Tree, r: Tree) -> Tree {
        Tree::Node(a, Box::new(l), Box::new(r))
    }

    /// Length of the longest position in the domain.
    pub fn depth(&self) -> usize {
        match self {
            Tree::Leaf => 0,
            Tree::Node(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// The label at `p`, `Some(None)` for `⊥`, `None` outside the domain.
    pub fn label(&self, p: &Position) -> Option<Option<Symbol>> {
        let mut t = self;
        for &d in p.as_bytes() {
            match t {
                Tree::Leaf => return None,
                Tree::Node(_, l, r) => t = if d == b'L' { l } else { r },
            }
        }
        Some(match t {
            Tree::Leaf => None,
            Tree::Node(a, _, _) => Some(*a),
        })
    }

    /// `(position, label)` pairs in BFS order.
    pub fn nodes(&self) -> Vec<(Position, Option<Symbol>)> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([(Position::root(), self)]);
        while let Some((p, t)) = queue.pop_front() {
            match t {
                Tree::Leaf => out.push((p, None)),
                Tree::Node(a, l, r) => {
                    out.push((p.clone(), Some(*a)));
                    queue.push_back((p.left(), l));
                    queue.push_back((p.right(), r));
                }
            }
        }
        out
    }

    /// One node per line: `<position> <bits|⊥>`, BFS order.
    pub fn to_debug_string(&self, alphabet: &Alphabet) -> String {
        let mut s = String::new();
        for (p, a) in self.nodes() {
            match a {
                None => s.push_str(&format!("{p} ⊥\n")),
                Some(a) => s.push_str(&format!("{p} {}\n", a.bits(alphabet))),
            }
        }
        s
    }

    /// Inverse of [`Tree::to_debug_string`].
    pub fn from_debug_string(text: &str) -> Result<Tree> {
        let mut labels: BTreeMap<Position, Option<Symbol>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::InvalidTree(format!("line {}: {line:?}", lineno + 1));
            let (p, label) = line.split_once(' ').ok_or_else(bad)?;
            let p: Position = p.parse()?;
            let label = match label.trim() {
                "⊥" => None,
                bits => {
                    let mut v = 0u64;
                    for (i, c) in bits.chars().enumerate() {
                        match c {
                            '0' => {}
                            '1' => v |= 1 << i,
                            _ => return Err(bad()),
                        }
                    }
                    Some(Symbol(v))
                }
            };
            labels.insert(p, label);
        }
        fn build(p: Position, labels: &BTreeMap<Position, Option<Symbol>>) -> Result<Tree> {
            match labels.get(&p) {
                None => Err(Error::InvalidTree(format!("missing position {p}"))),
                Some(None) => Ok(Tree::Leaf),
                Some(Some(a)) => Ok(Tree::node(*a, build(p.left(), labels)?, build(p.right(), labels)?)),
            }
        }
        let t = build(Position::root(), &labels)?;
        if t.nodes().len() != labels.len() {
            return Err(Error::InvalidTree("positions outside the tree".into()));
        }
        Ok(t)
    }
}

/// A map from variables to finite sets of positions. Missing variables are
/// mapped to `∅`.
#[derive(Clone, Default, PartialEq, Eq, Debug)]
pub struct Assignment(BTreeMap<Var, BTreeSet<Position>>);

impl Assignment {
    pub fn new() -> Assignment {
        Assignment::default()
    }

    pub fn with(mut self, v: &Var, positions: &[&str]) -> Assignment {
        let set = positions.iter().map(|p| p.parse().expect("valid position")).collect();
        self.set(v.clone(), set);
        self
    }

    pub fn set(&mut self, v: Var, positions: BTreeSet<Position>) {
        if positions.is_empty() {
            self.0.remove(&v);
        } else {
            self.0.insert(v, positions);
        }
    }

    pub fn get(&self, v: &Var) -> &BTreeSet<Position> {
        static EMPTY: BTreeSet<Position> = BTreeSet::new();
        self.0.get(v).unwrap_or(&EMPTY)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Var, &BTreeSet<Position>)> {
        self.0.iter()
    }

    /// Length of the longest assigned position, if any.
    pub fn max_len(&self) -> Option<usize> {
        self.0.values().flatten().map(Position::len).max()
    }
}

/// The minimum encoding of `alpha` as a tree over `alphabet`.
pub fn encode_min(alpha: &Assignment, alphabet: &Alphabet) -> Tree {
    let mut labels: BTreeMap<Position, u64> = BTreeMap::new();
    for (v, ps) in alpha.iter() {
        let Some(i) = alphabet.index_of(v) else { continue };
        for p in ps {
            for q in p.prefixes() {
                labels.entry(q).or_insert(0);
            }
            *labels.get_mut(p).expect("inserted") |= 1 << i;
        }
    }
    fn build(p: Position, labels: &BTreeMap<Position, u64>) -> Tree {
        match labels.get(&p) {
            None => Tree::Leaf,
            Some(&bits) => Tree::node(Symbol(bits), build(p.left(), labels), build(p.right(), labels)),
        }
    }
    build(Position::root(), &labels)
}

/// Reads the assignment off a tree: `X ↦ { p | t(p) ≠ ⊥ and t(p)(X) = 1 }`.
pub fn decode(t: &Tree, alphabet: &Alphabet) -> Assignment {
    let mut alpha = Assignment::new();
    for (i, v) in alphabet.vars().iter().enumerate() {
        let set: BTreeSet<Position> = t
            .nodes()
            .into_iter()
            .filter_map(|(p, a)| a.filter(|a| a.get(i)).map(|_| p))
            .collect();
        alpha.set(v.clone(), set);
    }
    alpha
}

/// Number of trees of depth at most `depth` over `symbols` labels.
pub fn count_trees(symbols: u128, depth: usize) -> u128 {
    (0..depth).fold(1u128, |t, _| 1u128.saturating_add(symbols.saturating_mul(t.saturating_mul(t))))
}

/// Every well-formed tree whose positions have length at most `depth`,
/// each exactly once. Fails when there would be more than `cap` trees.
pub fn enumerate_trees(alphabet: &Alphabet, depth: usize, cap: usize) -> Result<Vec<Tree>> {
    let symbols = 1u128 << alphabet.len();
    let count = count_trees(symbols, depth);
    if count > cap as u128 {
        return Err(Error::ResourceLimit(format!(
            "{count} trees of depth {depth} over {} variables exceed the cap of {cap}",
            alphabet.len()
        )));
    }
    let mut level = vec![Tree::Leaf];
    for _ in 0..depth {
        let mut next = vec![Tree::Leaf];
        for a in alphabet.symbols() {
            for l in &level {
                for r in &level {
                    next.push(Tree::node(a, l.clone(), r.clone()));
                }
            }
        }
        level = next;
    }
    Ok(level)
}
