//! The classical bottom-up procedure: one explicit automaton per subformula.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::formula::{antiprenex, desugar, Formula};
use crate::tautomata::{base_automaton, Limits, TreeAutomaton};
use crate::trees::Alphabet;
use crate::{Validity, Verdict};

#[derive(Clone, Copy, Debug)]
pub struct ClassicalConfig {
    pub antiprenex: bool,
    /// Minimize every intermediate automaton whose transitions are functional.
    pub minimize: bool,
    pub limits: Limits,
    pub timeout: Option<Duration>,
}

impl Default for ClassicalConfig {
    fn default() -> ClassicalConfig {
        ClassicalConfig { antiprenex: false, minimize: true, limits: Limits::default(), timeout: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClassicalStats {
    /// Sum of state counts over every intermediate automaton.
    pub automaton_states: usize,
    /// Largest intermediate automaton.
    pub max_states: usize,
    pub wall_ms: u128,
}

struct Builder<'a> {
    alphabet: &'a Alphabet,
    limits: Limits,
    minimize: bool,
    stats: ClassicalStats,
}

impl Builder<'_> {
    fn record(&mut self, a: TreeAutomaton) -> Result<TreeAutomaton> {
        let a = if self.minimize && a.is_functional() { a.minimize()? } else { a };
        self.stats.automaton_states += a.num_states();
        self.stats.max_states = self.stats.max_states.max(a.num_states());
        if let Some(d) = self.limits.deadline {
            if Instant::now() >= d {
                return Err(Error::Timeout);
            }
        }
        Ok(a)
    }

    fn deterministic(&mut self, a: TreeAutomaton) -> Result<TreeAutomaton> {
        if a.is_deterministic() && a.is_complete() {
            Ok(a)
        } else {
            let d = a.determinize_with(self.limits)?;
            self.record(d)
        }
    }

    fn build(&mut self, f: &Formula) -> Result<TreeAutomaton> {
        use Formula::*;
        let a = match f {
            _ if f.is_atom() => base_automaton(f, self.alphabet)?,
            And(l, r) | Or(l, r) => {
                let (l, r) = (self.build(l)?, self.build(r)?);
                l.product_reachable(&r, matches!(f, And(..)), self.limits)?
            }
            Not(g) => {
                let g = self.build(g)?;
                self.deterministic(g)?.complement()?
            }
            Exists(vs, g) => {
                let g = self.build(g)?;
                let p = self.record(g.project(self.alphabet.mask(vs))?)?;
                if p.support() == 0 {
                    // Nothing left to read: every tree is accepted or none is.
                    constant(self.alphabet, !p.is_empty())?
                } else {
                    p.determinize_with(self.limits)?.zero_derivative()
                }
            }
            _ => return Err(Error::InvalidArgument(format!("formula is not desugared: {f}"))),
        };
        self.record(a)
    }
}

fn constant(alphabet: &Alphabet, accept: bool) -> Result<TreeAutomaton> {
    TreeAutomaton::from_fn(alphabet.clone(), 0, 1, vec![0], vec![accept], |_, _, _| vec![0])
}

/// The formula actually translated: desugared, and antiprenexed if enabled.
pub fn prepared(f: &Formula, cfg: &ClassicalConfig) -> Formula {
    let f = desugar(f);
    if cfg.antiprenex { antiprenex(&f) } else { f }
}

/// The automaton for `f` over the alphabet of all its variables.
pub fn build(f: &Formula) -> Result<TreeAutomaton> {
    let alphabet = Alphabet::new(f.vars())?;
    build_over(f, &alphabet, &ClassicalConfig::default()).map(|(a, _)| a)
}

/// Builds over a given alphabet, which must contain every variable of the
/// prepared formula. Antiprenexing may introduce fresh bound variables, so
/// callers that enable it should use the alphabet of [`prepared`].
pub fn build_over(f: &Formula, alphabet: &Alphabet, cfg: &ClassicalConfig) -> Result<(TreeAutomaton, ClassicalStats)> {
    build_prepared(&prepared(f, cfg), alphabet, cfg)
}

fn build_prepared(f: &Formula, alphabet: &Alphabet, cfg: &ClassicalConfig) -> Result<(TreeAutomaton, ClassicalStats)> {
    let start = Instant::now();
    if let Some(v) = f.vars().into_iter().find(|v| alphabet.index_of(v).is_none()) {
        return Err(Error::InvalidArgument(format!("variable {v} not in alphabet")));
    }
    let mut limits = cfg.limits;
    if let Some(t) = cfg.timeout {
        limits.deadline = Some(start + t);
    }
    let mut b = Builder { alphabet, limits, minimize: cfg.minimize, stats: ClassicalStats::default() };
    let a = b.build(f)?;
    b.stats.wall_ms = start.elapsed().as_millis();
    Ok((a, b.stats))
}

pub fn decide_sat_with(f: &Formula, cfg: &ClassicalConfig) -> Result<(Verdict, ClassicalStats)> {
    let start = Instant::now();
    let f = prepared(f, cfg);
    let alphabet = Alphabet::new(f.vars())?;
    let (a, mut stats) = build_prepared(&f, &alphabet, cfg)?;
    let verdict = if a.is_empty() { Verdict::Unsat } else { Verdict::Sat };
    stats.wall_ms = start.elapsed().as_millis();
    Ok((verdict, stats))
}

pub fn decide_sat(f: &Formula) -> Result<Verdict> {
    decide_sat_with(f, &ClassicalConfig::default()).map(|(v, _)| v)
}

pub fn decide_valid_with(f: &Formula, cfg: &ClassicalConfig) -> Result<(Validity, ClassicalStats)> {
    let (v, stats) = decide_sat_with(&Formula::not(f.clone()), cfg)?;
    Ok((v.negated_validity(), stats))
}

pub fn decide_valid(f: &Formula) -> Result<Validity> {
    decide_valid_with(f, &ClassicalConfig::default()).map(|(v, _)| v)
}
