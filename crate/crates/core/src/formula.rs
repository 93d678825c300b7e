//! WS2S abstract syntax, desugaring, renaming apart and antiprenexing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use crate::trees::Position;

static NEXT_VAR_ID: AtomicU32 = AtomicU32::new(0);

/// A second-order variable. Two variables are equal iff their ids are equal;
/// the name is only used for printing.
#[derive(Clone)]
pub struct Var {
    id: u32,
    name: Arc<str>,
}

impl Var {
    /// Mints a variable with a process-wide unique id.
    pub fn fresh(name: &str) -> Var {
        Var {
            id: NEXT_VAR_ID.fetch_add(1, Ordering::Relaxed),
            name: Arc::from(name),
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl PartialEq for Var {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl Eq for Var {}

impl Hash for Var {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.id.hash(state)
    }
}

impl PartialOrd for Var {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Var {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.id.cmp(&other.id)
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.name, self.id)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub type VarSet = BTreeSet<Var>;

/// A WS2S formula.
///
/// The first ten variants form the core language understood by the decision
/// procedures. The remaining variants are surface sugar that [`desugar`]
/// eliminates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    /// `X ⊆ Y`
    Subseteq(Var, Var),
    /// `X = S1(Y)`
    SuccLeft(Var, Var),
    /// `X = S2(Y)`
    SuccRight(Var, Var),
    Sing(Var),
    /// `X = {ε}`
    EqEpsilon(Var),
    /// `X = {p}` for a non-empty position `p`.
    EqPos(Var, Position),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Exists(VarSet, Box<Formula>),

    Forall(VarSet, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    /// `X = Y`
    SetEq(Var, Var),
    /// `X ~= Y`
    SetNeq(Var, Var),
    /// `X = empty`
    IsEmpty(Var),
}

use Formula::*;

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Iff(Box::new(a), Box::new(b))
    }

    pub fn exists<I: IntoIterator<Item = Var>>(vars: I, body: Formula) -> Formula {
        Exists(vars.into_iter().collect(), Box::new(body))
    }

    pub fn forall<I: IntoIterator<Item = Var>>(vars: I, body: Formula) -> Formula {
        Forall(vars.into_iter().collect(), Box::new(body))
    }

    /// Left-nested conjunction of `parts`; `None` when empty.
    pub fn conjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Option<Formula> {
        parts.into_iter().reduce(Formula::and)
    }

    pub fn disjunction<I: IntoIterator<Item = Formula>>(parts: I) -> Option<Formula> {
        parts.into_iter().reduce(Formula::or)
    }

    pub fn is_atom(&self) -> bool {
        matches!(
            self,
            Subseteq(..) | SuccLeft(..) | SuccRight(..) | Sing(_) | EqEpsilon(_) | EqPos(..)
        )
    }

    /// True when no sugar constructor occurs anywhere in the formula.
    pub fn is_core(&self) -> bool {
        match self {
            Subseteq(..) | SuccLeft(..) | SuccRight(..) | Sing(_) | EqEpsilon(_) | EqPos(..) => {
                true
            }
            Not(a) => a.is_core(),
            And(a, b) | Or(a, b) => a.is_core() && b.is_core(),
            Exists(_, a) => a.is_core(),
            Forall(..) | Implies(..) | Iff(..) | SetEq(..) | SetNeq(..) | IsEmpty(_) => false,
        }
    }

    /// Variables occurring in an atom, in argument order.
    pub fn atom_vars(&self) -> Vec<&Var> {
        match self {
            Subseteq(x, y) | SuccLeft(x, y) | SuccRight(x, y) | SetEq(x, y) | SetNeq(x, y) => {
                vec![x, y]
            }
            Sing(x) | EqEpsilon(x) | EqPos(x, _) | IsEmpty(x) => vec![x],
            _ => Vec::new(),
        }
    }

    pub fn free_vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free<'a>(&'a self, bound: &mut Vec<&'a VarSet>, out: &mut VarSet) {
        match self {
            Not(a) => a.collect_free(bound, out),
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            Exists(vs, a) | Forall(vs, a) => {
                bound.push(vs);
                a.collect_free(bound, out);
                bound.pop();
            }
            atom => {
                for v in atom.atom_vars() {
                    if !bound.iter().any(|vs| vs.contains(v)) {
                        out.insert(v.clone());
                    }
                }
            }
        }
    }

    /// All variables, free and bound.
    pub fn vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.visit(&mut |f| match f {
            Exists(vs, _) | Forall(vs, _) => out.extend(vs.iter().cloned()),
            atom => out.extend(atom.atom_vars().into_iter().cloned()),
        });
        out
    }

    pub fn bound_vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.visit(&mut |f| {
            if let Exists(vs, _) | Forall(vs, _) = f {
                out.extend(vs.iter().cloned());
            }
        });
        out
    }

    pub fn visit<F: FnMut(&Formula)>(&self, f: &mut F) {
        f(self);
        match self {
            Not(a) | Exists(_, a) | Forall(_, a) => a.visit(f),
            And(a, b) | Or(a, b) | Implies(a, b) | Iff(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Number of quantifier nodes.
    pub fn quantifier_count(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |f| {
            if matches!(f, Exists(..) | Forall(..)) {
                n += 1
            }
        });
        n
    }

    pub fn is_ground(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// Checks the renamed-apart discipline: no variable is bound twice and no
    /// variable is both free and bound.
    pub fn is_renamed_apart(&self) -> bool {
        let mut seen = VarSet::new();
        let mut ok = true;
        self.visit(&mut |f| {
            if let Exists(vs, _) | Forall(vs, _) = f {
                for v in vs {
                    ok &= seen.insert(v.clone());
                }
            }
        });
        ok && self.free_vars().is_disjoint(&seen)
    }

    /// Structural equality up to a consistent renaming of bound variables.
    pub fn alpha_eq(&self, other: &Formula) -> bool {
        fn go(a: &Formula, b: &Formula, map: &mut BTreeMap<Var, Var>) -> bool {
            let same = |x: &Var, y: &Var, map: &BTreeMap<Var, Var>| match map.get(x) {
                Some(m) => m == y,
                None => x == y,
            };
            match (a, b) {
                (Not(x), Not(y)) => go(x, y, map),
                (And(a1, a2), And(b1, b2))
                | (Or(a1, a2), Or(b1, b2))
                | (Implies(a1, a2), Implies(b1, b2))
                | (Iff(a1, a2), Iff(b1, b2)) => go(a1, b1, map) && go(a2, b2, map),
                (Exists(va, x), Exists(vb, y)) | (Forall(va, x), Forall(vb, y)) => {
                    if va.len() != vb.len() {
                        return false;
                    }
                    let saved: Vec<_> = va.iter().map(|v| (v.clone(), map.get(v).cloned())).collect();
                    // bound sets are unordered; pair them by name, then by position
                    let mut left: Vec<&Var> = va.iter().collect();
                    let mut right: Vec<&Var> = vb.iter().collect();
                    left.sort_by(|p, q| p.name().cmp(q.name()).then(p.cmp(q)));
                    right.sort_by(|p, q| p.name().cmp(q.name()).then(p.cmp(q)));
                    for (l, r) in left.iter().zip(&right) {
                        map.insert((*l).clone(), (*r).clone());
                    }
                    let ok = go(x, y, map);
                    for (v, old) in saved {
                        match old {
                            Some(o) => map.insert(v, o),
                            None => map.remove(&v),
                        };
                    }
                    ok
                }
                (Subseteq(a1, a2), Subseteq(b1, b2))
                | (SuccLeft(a1, a2), SuccLeft(b1, b2))
                | (SuccRight(a1, a2), SuccRight(b1, b2))
                | (SetEq(a1, a2), SetEq(b1, b2))
                | (SetNeq(a1, a2), SetNeq(b1, b2)) => same(a1, b1, map) && same(a2, b2, map),
                (Sing(x), Sing(y)) | (EqEpsilon(x), EqEpsilon(y)) | (IsEmpty(x), IsEmpty(y)) => {
                    same(x, y, map)
                }
                (EqPos(x, p), EqPos(y, q)) => p == q && same(x, y, map),
                _ => false,
            }
        }
        go(self, other, &mut BTreeMap::new())
    }

    /// Replaces free occurrences of variables according to `map`.
    pub fn substitute(&self, map: &BTreeMap<Var, Var>) -> Formula {
        let s = |v: &Var| map.get(v).cloned().unwrap_or_else(|| v.clone());
        match self {
            Subseteq(x, y) => Subseteq(s(x), s(y)),
            SuccLeft(x, y) => SuccLeft(s(x), s(y)),
            SuccRight(x, y) => SuccRight(s(x), s(y)),
            SetEq(x, y) => SetEq(s(x), s(y)),
            SetNeq(x, y) => SetNeq(s(x), s(y)),
            Sing(x) => Sing(s(x)),
            EqEpsilon(x) => EqEpsilon(s(x)),
            IsEmpty(x) => IsEmpty(s(x)),
            EqPos(x, p) => EqPos(s(x), p.clone()),
            Not(a) => Formula::not(a.substitute(map)),
            And(a, b) => Formula::and(a.substitute(map), b.substitute(map)),
            Or(a, b) => Formula::or(a.substitute(map), b.substitute(map)),
            Implies(a, b) => Formula::implies(a.substitute(map), b.substitute(map)),
            Iff(a, b) => Formula::iff(a.substitute(map), b.substitute(map)),
            Exists(vs, a) | Forall(vs, a) => {
                let mut inner = map.clone();
                for v in vs {
                    inner.remove(v);
                }
                let body = Box::new(a.substitute(&inner));
                match self {
                    Exists(..) => Exists(vs.clone(), body),
                    _ => Forall(vs.clone(), body),
                }
            }
        }
    }

    /// Gives every bound variable a fresh id (names are kept).
    pub fn rename_bound(&self) -> Formula {
        match self {
            Exists(vs, a) | Forall(vs, a) => {
                let map: BTreeMap<Var, Var> =
                    vs.iter().map(|v| (v.clone(), Var::fresh(v.name()))).collect();
                let body = Box::new(a.substitute(&map).rename_bound());
                let vs: VarSet = map.into_values().collect();
                match self {
                    Exists(..) => Exists(vs, body),
                    _ => Forall(vs, body),
                }
            }
            Not(a) => Formula::not(a.rename_bound()),
            And(a, b) => Formula::and(a.rename_bound(), b.rename_bound()),
            Or(a, b) => Formula::or(a.rename_bound(), b.rename_bound()),
            Implies(a, b) => Formula::implies(a.rename_bound(), b.rename_bound()),
            Iff(a, b) => Formula::iff(a.rename_bound(), b.rename_bound()),
            atom => atom.clone(),
        }
    }

    /// Renames bound variables so that the formula is renamed apart.
    pub fn rename_apart(&self) -> Formula {
        self.rename_bound()
    }
}

/// Eliminates derived connectives and predicates.
///
/// `Sing`, `X = {ε}` and `X = {p}` stay atomic.
pub fn desugar(f: &Formula) -> Formula {
    match f {
        Subseteq(..) | SuccLeft(..) | SuccRight(..) | Sing(_) | EqEpsilon(_) | EqPos(..) => {
            f.clone()
        }
        Not(a) => Formula::not(desugar(a)),
        And(a, b) => Formula::and(desugar(a), desugar(b)),
        Or(a, b) => Formula::or(desugar(a), desugar(b)),
        Exists(vs, a) => Exists(vs.clone(), Box::new(desugar(a))),
        Forall(vs, a) => Exists(vs.clone(), Box::new(Formula::not(desugar(a)))).negated(),
        Implies(a, b) => Formula::or(Formula::not(desugar(a)), desugar(b)),
        Iff(a, b) => {
            let (a, b) = (desugar(a), desugar(b));
            Formula::and(
                Formula::or(Formula::not(a.clone()), b.clone()),
                Formula::or(Formula::not(b.rename_bound()), a.rename_bound()),
            )
        }
        SetEq(x, y) => Formula::and(Subseteq(x.clone(), y.clone()), Subseteq(y.clone(), x.clone())),
        SetNeq(x, y) => Formula::not(desugar(&SetEq(x.clone(), y.clone()))),
        IsEmpty(x) => {
            let y = Var::fresh(&format!("{}_empty{}", x.name(), NEXT_VAR_ID.load(Ordering::Relaxed)));
            desugar(&Formula::forall([y.clone()], Subseteq(x.clone(), y)))
        }
    }
}

impl Formula {
    fn negated(self) -> Formula {
        Formula::not(self)
    }
}

/// Pushes quantifiers towards the leaves.
///
/// Expects a desugared, renamed-apart formula and returns a logically
/// equivalent one, again renamed apart. Double negations are removed,
/// nested existentials merged, unused bound variables dropped, existentials
/// distributed over disjunctions, and conjuncts not mentioning a bound
/// variable moved out of its scope.
pub fn antiprenex(f: &Formula) -> Formula {
    let mut cur = f.clone();
    loop {
        let next = ap(&cur);
        if next == cur {
            return next;
        }
        cur = next;
    }
}

fn ap(f: &Formula) -> Formula {
    match f {
        Not(a) => match a.as_ref() {
            Not(b) => ap(b),
            _ => Formula::not(ap(a)),
        },
        And(a, b) => Formula::and(ap(a), ap(b)),
        Or(a, b) => Formula::or(ap(a), ap(b)),
        Exists(vs, body) => push_exists(vs.clone(), ap(body)),
        Forall(..) | Implies(..) | Iff(..) | SetEq(..) | SetNeq(..) | IsEmpty(_) => {
            ap(&desugar(f))
        }
        atom => atom.clone(),
    }
}

fn push_exists(vs: VarSet, body: Formula) -> Formula {
    let fv = body.free_vars();
    let vs: VarSet = vs.intersection(&fv).cloned().collect();
    if vs.is_empty() {
        return body;
    }
    match body {
        Exists(inner, b) => {
            let mut all = vs;
            all.extend(inner);
            push_exists(all, *b)
        }
        Not(inner) => match *inner {
            Not(b) => push_exists(vs, *b),
            // ∃X.¬(a ∧ b) = ∃X.(¬a ∨ ¬b)
            And(a, b) => push_exists(vs, Formula::or(Formula::not(*a), Formula::not(*b))),
            other => Exists(vs, Box::new(Formula::not(other))),
        },
        Or(a, b) => {
            let left = push_exists(vs.clone(), *a);
            // the right copy gets its own bound variables to stay renamed apart
            let map: BTreeMap<Var, Var> =
                vs.iter().map(|v| (v.clone(), Var::fresh(v.name()))).collect();
            let right_vs: VarSet = map.values().cloned().collect();
            let right = push_exists(right_vs, b.substitute(&map));
            Formula::or(left, right)
        }
        And(..) => {
            let mut conjuncts = Vec::new();
            flatten_and(body, &mut conjuncts);
            miniscope(vs, conjuncts)
        }
        other => Exists(vs, Box::new(other)),
    }
}

fn flatten_and(f: Formula, out: &mut Vec<Formula>) {
    match f {
        And(a, b) => {
            flatten_and(*a, out);
            flatten_and(*b, out);
        }
        other => out.push(other),
    }
}

/// `∃vs. ⋀ conjuncts`, with the quantifier scope shrunk as far as possible.
fn miniscope(vs: VarSet, conjuncts: Vec<Formula>) -> Formula {
    let fvs: Vec<VarSet> = conjuncts.iter().map(|c| c.free_vars()).collect();
    let (mut outside, mut inside) = (Vec::new(), Vec::new());
    for (c, fv) in conjuncts.into_iter().zip(fvs) {
        if fv.is_disjoint(&vs) {
            outside.push(c);
        } else {
            inside.push((c, fv));
        }
    }

    // connected components of conjuncts linked by shared bound variables,
    // each kept in the original conjunct order
    let mut components: Vec<(VarSet, Vec<(usize, Formula, VarSet)>)> = Vec::new();
    for (k, (c, fv)) in inside.into_iter().enumerate() {
        let own: VarSet = fv.intersection(&vs).cloned().collect();
        let mut merged = (own, vec![(k, c, fv)]);
        let mut i = 0;
        while i < components.len() {
            if components[i].0.is_disjoint(&merged.0) {
                i += 1;
            } else {
                let (cvs, cs) = components.remove(i);
                merged.0.extend(cvs);
                merged.1.extend(cs);
            }
        }
        merged.1.sort_by_key(|(k, _, _)| *k);
        components.push(merged);
    }
    components.sort_by_key(|(_, cs)| cs[0].0);
    let components: Vec<(VarSet, Vec<(Formula, VarSet)>)> = components
        .into_iter()
        .map(|(cvs, cs)| (cvs, cs.into_iter().map(|(_, c, fv)| (c, fv)).collect()))
        .collect();

    let mut parts = outside;
    for (cvs, cs) in components {
        parts.push(scope_component(cvs, cs));
    }
    Formula::conjunction(parts).expect("non-empty conjunction")
}

/// A connected component: peel off the variable that occurs in the fewest
/// conjuncts when that actually narrows its scope.
fn scope_component(vs: VarSet, cs: Vec<(Formula, VarSet)>) -> Formula {
    if vs.len() > 1 && cs.len() > 1 {
        let occurrences = |v: &Var| cs.iter().filter(|(_, fv)| fv.contains(v)).count();
        let best = vs
            .iter()
            .min_by_key(|v| (occurrences(v), std::cmp::Reverse((*v).clone())))
            .cloned()
            .expect("non-empty");
        if occurrences(&best) < cs.len() {
            let (with, without): (Vec<_>, Vec<_>) =
                cs.into_iter().partition(|(_, fv)| fv.contains(&best));
            let inner = Exists(
                [best.clone()].into_iter().collect(),
                Box::new(Formula::conjunction(with.into_iter().map(|(c, _)| c)).unwrap()),
            );
            let mut rest: Vec<Formula> = without.into_iter().map(|(c, _)| c).collect();
            rest.push(inner);
            let mut outer = vs;
            outer.remove(&best);
            return Exists(outer, Box::new(Formula::conjunction(rest).unwrap()));
        }
    }
    Exists(vs, Box::new(Formula::conjunction(cs.into_iter().map(|(c, _)| c)).unwrap()))
}

impl fmt::Display for Formula {
    /// Prints in the concrete syntax accepted by [`crate::parser::parse`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn vars(vs: &VarSet) -> String {
            vs.iter().map(|v| v.name().to_string()).collect::<Vec<_>>().join(", ")
        }
        match self {
            Subseteq(x, y) => write!(f, "{x} sub {y}"),
            SuccLeft(x, y) => write!(f, "{x} = S1({y})"),
            SuccRight(x, y) => write!(f, "{x} = S2({y})"),
            Sing(x) => write!(f, "sing({x})"),
            EqEpsilon(x) => write!(f, "{x} = {{e}}"),
            EqPos(x, p) => write!(f, "{x} = {{{p}}}"),
            SetEq(x, y) => write!(f, "{x} = {y}"),
            SetNeq(x, y) => write!(f, "{x} ~= {y}"),
            IsEmpty(x) => write!(f, "{x} = empty"),
            Not(a) => write!(f, "~({a})"),
            And(a, b) => write!(f, "({a}) & ({b})"),
            Or(a, b) => write!(f, "({a}) | ({b})"),
            Implies(a, b) => write!(f, "({a}) => ({b})"),
            Iff(a, b) => write!(f, "({a}) <=> ({b})"),
            Exists(vs, a) => write!(f, "(ex2 {}: {a})", vars(vs)),
            Forall(vs, a) => write!(f, "(all2 {}: {a})", vars(vs)),
        }
    }
}
