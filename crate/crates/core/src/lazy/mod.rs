//! The lazy decision procedure: an on-the-fly top-level fixpoint over
//! automata terms with early termination, resumable saturations,
//! subsumption pruning, product flattening and nondeterministic union.


use std::time::{Duration, Instant};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::error::{Error, Result};
use crate::formula::{antiprenex, desugar, Formula};
use crate::terms::{Engine, Saturator, Stats, TermId, TermNode, TermStore};
use crate::trees::Alphabet;
use crate::{Validity, Verdict};

pub use crate::terms::DEFAULT_MAX_TERMS;

/// Entries kept in the subsumption memo before it is flushed.
const SUBSUMPTION_MEMO_LIMIT: usize = 1 << 22;

#[derive(Clone, Copy, Debug)]
pub struct EngineConfig {
    /// Short-circuit `rt` and stop saturations at the first root.
    pub lazy_rt: bool,
    pub subsumption: bool,
    /// Flatten products of sets and push projections into sets.
    pub flatten: bool,
    /// Rewrite non-interfering unions of sets into set unions. Turns on the
    /// interference gate on transitions.
    pub nondet_union: bool,
    pub antiprenex: bool,
    pub max_terms: usize,
    pub timeout: Option<Duration>,
    /// Record [`TraceEvent`]s.
    pub trace: bool,
}

impl Default for EngineConfig {
    fn default() -> EngineConfig {
        EngineConfig {
            lazy_rt: true,
            subsumption: true,
            flatten: false,
            nondet_union: false,
            antiprenex: true,
            max_terms: DEFAULT_MAX_TERMS,
            timeout: None,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TraceEvent {
    /// A saturation paused on a root after producing `produced` terms.
    EarlyStop { deriv: TermId, produced: usize, witness: TermId },
    /// A paused saturation continued with `produced` terms already known.
    Resumed { deriv: TermId, produced: usize },
    /// A saturation reached its fixpoint with `size` live terms.
    Exhausted { deriv: TermId, size: usize },
}

/// When a fixpoint run pauses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Never,
    /// At the first live term satisfying `rt`.
    Root,
}

/// A paused worklist fixpoint. Terms are produced in order; dead terms were
/// subsumed by later ones and no longer take part in transitions.
#[derive(Clone, Debug)]
pub struct Continuation {
    symbols: Vec<u64>,
    items: Vec<TermId>,
    alive: Vec<bool>,
    live: usize,
    seen: FxHashSet<TermId>,
    /// Next pair `(i, j)` with `j <= i` to expand.
    next: (usize, usize),
    rt_checked: usize,
    exhausted: bool,
    result: Option<TermId>,
    /// Number of terms seen after each completed outer step.
    growth: Vec<usize>,
}

impl Continuation {
    fn new(symbols: Vec<u64>) -> Continuation {
        Continuation {
            symbols,
            items: Vec::new(),
            alive: Vec::new(),
            live: 0,
            seen: FxHashSet::default(),
            next: (0, 0),
            rt_checked: 0,
            exhausted: false,
            result: None,
            growth: Vec::new(),
        }
    }

    /// Live terms in production order.
    pub fn frontier(&self) -> Vec<TermId> {
        self.items.iter().zip(&self.alive).filter(|(_, &a)| a).map(|(&t, _)| t).collect()
    }

    /// Every term ever produced, including pruned ones.
    pub fn produced(&self) -> &[TermId] {
        &self.items
    }

    pub fn is_exhausted(&self) -> bool {
        self.exhausted
    }

    /// Outer steps completed so far.
    pub fn steps(&self) -> usize {
        self.growth.len()
    }

    pub fn growth(&self) -> &[usize] {
        &self.growth
    }
}

/// Saturation strategy of the lazy engine: derivatives keep a
/// [`Continuation`] that is advanced only as far as the caller needs.
pub struct LazySaturation {
    lazy_rt: bool,
    subsumption: bool,
    trace_on: bool,
    conts: FxHashMap<TermId, Continuation>,
    running: FxHashSet<TermId>,
    sub_memo: FxHashMap<(TermId, TermId), bool>,
    trace: Vec<TraceEvent>,
}

impl LazySaturation {
    pub fn new(cfg: &EngineConfig) -> LazySaturation {
        LazySaturation {
            lazy_rt: cfg.lazy_rt,
            subsumption: cfg.subsumption,
            trace_on: cfg.trace,
            conts: FxHashMap::default(),
            running: FxHashSet::default(),
            sub_memo: FxHashMap::default(),
            trace: Vec::new(),
        }
    }

    pub fn continuation(&self, d: TermId) -> Option<&Continuation> {
        self.conts.get(&d)
    }

    pub fn trace(&self) -> &[TraceEvent] {
        &self.trace
    }

    fn event(&mut self, ev: TraceEvent) {
        if self.trace_on {
            self.trace.push(ev);
        }
    }
}

impl Saturator for LazySaturation {
    fn saturation(e: &mut Engine<Self>, d: TermId) -> Result<TermId> {
        if let Some(s) = e.sat.known_saturation(d) {
            return Ok(s);
        }
        lazy_saturate(e, d, Stop::Never)?;
        Ok(e.sat.known_saturation(d).expect("exhausted saturation"))
    }

    fn rt_deriv(e: &mut Engine<Self>, d: TermId) -> Result<bool> {
        if e.sat.lazy_rt {
            Ok(lazy_saturate(e, d, Stop::Root)?.is_some())
        } else {
            let s = Self::saturation(e, d)?;
            e.rt(s)
        }
    }

    fn known_saturation(&self, d: TermId) -> Option<TermId> {
        self.conts.get(&d).and_then(|c| c.result)
    }
}

/// Advances the saturation of derivative `d` until `stop` fires on a live
/// term (returned as the witness) or the fixpoint is reached. Work done by
/// earlier calls is never repeated.
pub fn lazy_saturate(e: &mut Engine<LazySaturation>, d: TermId, stop: Stop) -> Result<Option<TermId>> {
    let TermNode::Deriv(body) = *e.store().node(d) else {
        return Err(Error::InvalidArgument(format!("not a derivative term: {}", e.store().display(d))));
    };
    if !e.sat.running.insert(d) {
        return Err(Error::InvalidArgument("derivative depends on its own saturation".into()));
    }
    let mut c = match e.sat.conts.remove(&d) {
        Some(c) => {
            if !c.exhausted {
                e.core.stats.saturation_resumptions += 1;
                e.sat.event(TraceEvent::Resumed { deriv: d, produced: c.items.len() });
            }
            c
        }
        None => {
            let mut c = Continuation::new(vec![0]);
            for &t in e.store().elems(body).iter() {
                insert(e, &mut c, t)?;
            }
            c
        }
    };
    let was_exhausted = c.exhausted;
    let out = run(e, &mut c, stop);
    if let Ok(w) = &out {
        match *w {
            Some(witness) => {
                if !c.exhausted {
                    e.core.stats.early_stops += 1;
                    e.sat.event(TraceEvent::EarlyStop { deriv: d, produced: c.items.len(), witness });
                }
            }
            None if !was_exhausted => {
                e.sat.event(TraceEvent::Exhausted { deriv: d, size: c.live });
            }
            None => {}
        }
        if c.exhausted && c.result.is_none() {
            c.result = Some(e.store_mut().set_raw(c.frontier()));
        }
    }
    e.sat.running.remove(&d);
    e.sat.conts.insert(d, c);
    out
}

/// Adds `t` to the worklist unless it was seen before or is subsumed by a
/// live term; live terms subsumed by `t` die.
fn insert(e: &mut Engine<LazySaturation>, c: &mut Continuation, t: TermId) -> Result<()> {
    if !c.seen.insert(t) {
        return Ok(());
    }
    if e.sat.subsumption {
        e.core.check()?;
        for k in 0..c.items.len() {
            if c.alive[k] && subsumes(e, t, c.items[k])? {
                e.core.stats.subsumption_prunes += 1;
                return Ok(());
            }
        }
        for k in 0..c.items.len() {
            if c.alive[k] && subsumes(e, c.items[k], t)? {
                c.alive[k] = false;
                c.live -= 1;
                e.core.stats.subsumption_prunes += 1;
            }
        }
    }
    c.items.push(t);
    c.alive.push(true);
    c.live += 1;
    e.core.stats.max_frontier = e.core.stats.max_frontier.max(c.live);
    Ok(())
}

/// The worklist loop shared by saturations and the top-level fixpoint.
fn run(e: &mut Engine<LazySaturation>, c: &mut Continuation, stop: Stop) -> Result<Option<TermId>> {
    loop {
        if stop == Stop::Root {
            while c.rt_checked < c.items.len() {
                let k = c.rt_checked;
                c.rt_checked += 1;
                if c.alive[k] && e.rt(c.items[k])? {
                    // re-examine it on the next request
                    c.rt_checked = k;
                    return Ok(Some(c.items[k]));
                }
            }
        }
        if c.exhausted {
            return Ok(None);
        }
        let (i, j) = c.next;
        if i >= c.items.len() {
            c.exhausted = true;
            e.core.stats.total_frontier += c.live as u64;
            continue;
        }
        e.core.check()?;
        if c.alive[i] && c.alive[j] {
            let (ti, tj) = (c.items[i], c.items[j]);
            for (p, q) in [(ti, tj), (tj, ti)].into_iter().take(if i == j { 1 } else { 2 }) {
                for k in 0..c.symbols.len() {
                    for &v in e.delta(p, q, c.symbols[k])?.iter() {
                        insert(e, c, v)?;
                    }
                }
            }
        }
        c.next = if j < i { (i, j + 1) } else { (i + 1, 0) };
        if j >= i {
            e.core.stats.fixpoint_iterations += 1;
            c.growth.push(c.seen.len());
        }
    }
}

/// The subsumption preorder `t ⊑ u`. Atoms are related by identity, and
/// derivatives by identity or, when both are saturated, through their
/// saturations.
pub fn subsumes(e: &mut Engine<LazySaturation>, t: TermId, u: TermId) -> Result<bool> {
    if t == u {
        return Ok(true);
    }
    if let Some(&b) = e.sat.sub_memo.get(&(t, u)) {
        return Ok(b);
    }
    let (nt, nu) = (e.store().node(t).clone(), e.store().node(u).clone());
    let b = match (nt, nu) {
        (TermNode::Set(s1), TermNode::Set(s2)) => {
            if is_subset(&s1, &s2) {
                true
            } else {
                let mut all = true;
                for &x in s1.iter() {
                    let mut found = false;
                    for &y in s2.iter() {
                        if subsumes(e, x, y)? {
                            found = true;
                            break;
                        }
                    }
                    if !found {
                        all = false;
                        break;
                    }
                }
                all
            }
        }
        (TermNode::Plus(t1, t2), TermNode::Plus(u1, u2)) | (TermNode::And(t1, t2), TermNode::And(u1, u2)) => {
            subsumes(e, t1, u1)? && subsumes(e, t2, u2)?
        }
        (TermNode::Not(x), TermNode::Not(y)) => subsumes(e, y, x)?,
        (TermNode::Proj(m, x), TermNode::Proj(m2, y)) if m == m2 => subsumes(e, x, y)?,
        (TermNode::Deriv(_), TermNode::Deriv(_)) => {
            match (e.sat.known_saturation(t), e.sat.known_saturation(u)) {
                (Some(s1), Some(s2)) => subsumes(e, s1, s2)?,
                _ => false,
            }
        }
        _ => false,
    };
    if e.sat.sub_memo.len() >= SUBSUMPTION_MEMO_LIMIT {
        e.sat.sub_memo.clear();
    }
    e.sat.sub_memo.insert((t, u), b);
    Ok(b)
}

fn is_subset(a: &[TermId], b: &[TermId]) -> bool {
    // both sorted
    let mut k = 0;
    for x in a {
        while k < b.len() && b[k] < *x {
            k += 1;
        }
        if k == b.len() || b[k] != *x {
            return false;
        }
    }
    true
}

/// Removes every element subsumed by another one; of mutually subsuming
/// elements the first is kept.
pub fn prune(e: &mut Engine<LazySaturation>, elems: &[TermId]) -> Result<Vec<TermId>> {
    let mut keep: Vec<TermId> = Vec::new();
    for &t in elems {
        if keep.contains(&t) {
            continue;
        }
        let mut dominated = false;
        for &k in &keep {
            if subsumes(e, t, k)? {
                dominated = true;
                break;
            }
        }
        if dominated {
            continue;
        }
        let mut next = Vec::with_capacity(keep.len() + 1);
        for &k in &keep {
            if !subsumes(e, k, t)? {
                next.push(k);
            }
        }
        next.push(t);
        keep = next;
    }
    Ok(keep)
}

/// Which rewrites [`preprocess`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rewrites {
    pub flatten: bool,
    pub nondet_union: bool,
}

/// Rewrites `t` bottom-up: projections are pushed into sets, products of
/// non-empty sets are flattened, and unions of non-interfering sets become
/// set unions. `{S}` collapses to `S` wherever a set is rebuilt.
pub fn preprocess<S: Saturator>(e: &mut Engine<S>, t: TermId, rw: Rewrites) -> Result<TermId> {
    let mut memo = FxHashMap::default();
    rewrite(e, t, rw, &mut memo)
}

fn rewrite<S: Saturator>(
    e: &mut Engine<S>,
    t: TermId,
    rw: Rewrites,
    memo: &mut FxHashMap<TermId, TermId>,
) -> Result<TermId> {
    if let Some(&r) = memo.get(&t) {
        return Ok(r);
    }
    let push = rw.flatten || rw.nondet_union;
    let node = e.store().node(t).clone();
    let r = match node {
        TermNode::Atom { .. } => t,
        TermNode::Set(s) => {
            let mut elems = Vec::with_capacity(s.len());
            for &x in s.iter() {
                elems.push(rewrite(e, x, rw, memo)?);
            }
            e.store_mut().set(elems)
        }
        TermNode::Deriv(body) => {
            let body = rewrite(e, body, rw, memo)?;
            e.store_mut().deriv(body)
        }
        TermNode::Not(x) => {
            let x = rewrite(e, x, rw, memo)?;
            e.store_mut().not(x)
        }
        TermNode::Proj(m, x) => {
            let x = rewrite(e, x, rw, memo)?;
            match e.store().node(x).clone() {
                TermNode::Set(s) if push => {
                    let elems = s.iter().map(|&y| e.store_mut().proj(m, y)).collect();
                    e.store_mut().set_raw(elems)
                }
                _ => e.store_mut().proj(m, x),
            }
        }
        TermNode::Plus(x, y) | TermNode::And(x, y) => {
            let plus = matches!(node, TermNode::Plus(..));
            let (x, y) = (rewrite(e, x, rw, memo)?, rewrite(e, y, rw, memo)?);
            let sets = match (e.store().node(x), e.store().node(y)) {
                (TermNode::Set(a), TermNode::Set(b)) if !a.is_empty() && !b.is_empty() => Some((a.clone(), b.clone())),
                _ => None,
            };
            match sets {
                Some((a, b)) if plus && rw.nondet_union && !e.interferes(x, y)? => {
                    e.store_mut().set_raw(a.iter().chain(b.iter()).copied().collect())
                }
                Some((a, b)) if rw.flatten => {
                    let st = e.store_mut();
                    let mut elems = Vec::with_capacity(a.len() * b.len());
                    for &p in a.iter() {
                        for &q in b.iter() {
                            elems.push(if plus { st.plus(p, q) } else { st.and(p, q) });
                        }
                    }
                    st.set_raw(elems)
                }
                _ if plus => e.store_mut().plus(x, y),
                _ => e.store_mut().and(x, y),
            }
        }
    };
    memo.insert(t, r);
    Ok(r)
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: Verdict,
    pub stats: Stats,
    pub trace: Vec<TraceEvent>,
    /// Terms seen by the top-level fixpoint after each outer step (empty
    /// for ground formulae).
    pub growth: Vec<usize>,
}

/// A lazy engine set up for one formula.
pub struct LazyEngine {
    pub engine: Engine<LazySaturation>,
    /// The (pre-processed) automata term of the formula.
    pub term: TermId,
    ground: bool,
    start: Instant,
}

impl LazyEngine {
    pub fn new(f: &Formula, cfg: &EngineConfig) -> Result<LazyEngine> {
        let start = Instant::now();
        let f = desugar(f);
        let f = if cfg.antiprenex { antiprenex(&f) } else { f };
        let alphabet = Alphabet::new(f.vars())?;
        let mut store = TermStore::new(alphabet);
        let t = store.translate(&f)?;
        let mut engine = Engine::new(store, LazySaturation::new(cfg));
        engine.core.gate = cfg.nondet_union;
        engine.core.short_circuit = cfg.lazy_rt;
        engine.core.max_terms = cfg.max_terms;
        engine.core.deadline = cfg.timeout.map(|d| start + d);
        let term = if cfg.flatten || cfg.nondet_union {
            preprocess(&mut engine, t, Rewrites { flatten: cfg.flatten, nondet_union: cfg.nondet_union })?
        } else {
            t
        };
        Ok(LazyEngine { engine, term, ground: f.is_ground(), start })
    }

    pub fn run(mut self) -> Result<Decision> {
        let e = &mut self.engine;
        let (sat, growth) = if self.ground {
            (e.rt(self.term)?, Vec::new())
        } else {
            let mut c = Continuation::new(e.symbols_of(self.term));
            for &t in e.store().elems(self.term).iter() {
                insert(e, &mut c, t)?;
            }
            let found = run(e, &mut c, Stop::Root)?;
            if found.is_some() {
                e.core.stats.early_stops += 1;
            }
            (found.is_some(), c.growth)
        };
        let mut stats = e.stats();
        stats.wall_ms = self.start.elapsed().as_millis();
        Ok(Decision {
            verdict: if sat { Verdict::Sat } else { Verdict::Unsat },
            stats,
            trace: std::mem::take(&mut e.sat.trace),
            growth,
        })
    }
}

pub fn decide_sat_with(f: &Formula, cfg: &EngineConfig) -> Result<Decision> {
    LazyEngine::new(f, cfg)?.run()
}

pub fn decide_sat(f: &Formula) -> Result<Verdict> {
    decide_sat_with(f, &EngineConfig::default()).map(|d| d.verdict)
}

pub fn decide_valid_with(f: &Formula, cfg: &EngineConfig) -> Result<(Validity, Decision)> {
    let d = decide_sat_with(&Formula::not(f.clone()), cfg)?;
    Ok((d.verdict.negated_validity(), d))
}

pub fn decide_valid(f: &Formula) -> Result<Validity> {
    decide_valid_with(f, &EngineConfig::default()).map(|(v, _)| v)
}
