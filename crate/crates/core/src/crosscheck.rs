//! Differential checks: lazy against classical, with SAT verdicts confirmed
//! by the bounded semantic oracle.

use std::time::Duration;

use rand::rngs::StdRng;
use rand::SeedableRng;

use crate::classical::{self, ClassicalConfig};
use crate::error::{Error, Result};
use crate::formula::Formula;
use crate::lazy::{self, EngineConfig};
use crate::random::{random_formula, RandomConfig};
use crate::semantics::Oracle;
use crate::trees::{decode, Alphabet, Assignment};
use crate::Verdict;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Confirmation {
    Witness(Assignment),
    /// No model found within the depth bound.
    Unconfirmed,
    /// The oracle ran out of budget.
    Skipped,
}

#[derive(Clone, Debug)]
pub struct Check {
    pub formula: Formula,
    pub lazy: Result<Verdict>,
    pub classical: Result<Verdict>,
    /// Present for SAT verdicts.
    pub confirmation: Option<Confirmation>,
}

impl Check {
    /// Both engines decided and their verdicts differ.
    pub fn disagrees(&self) -> bool {
        matches!((&self.lazy, &self.classical), (Ok(a), Ok(b)) if a != b)
    }

    pub fn unconfirmed(&self) -> bool {
        self.confirmation == Some(Confirmation::Unconfirmed)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckConfig {
    pub lazy: EngineConfig,
    pub classical: ClassicalConfig,
    /// Largest position length tried by the oracle.
    pub oracle_depth: usize,
    pub oracle_cap: u64,
}

impl Default for CheckConfig {
    fn default() -> CheckConfig {
        CheckConfig {
            lazy: EngineConfig { timeout: Some(Duration::from_secs(60)), ..EngineConfig::default() },
            classical: ClassicalConfig { timeout: Some(Duration::from_secs(60)), ..ClassicalConfig::default() },
            oracle_depth: 3,
            oracle_cap: 2_000_000,
        }
    }
}

/// A model of `f` with positions of length at most `depth`. The oracle's
/// own search is tried first, then the smallest tree accepted by the
/// classical automaton, checked by the oracle. In that check quantifiers
/// also range over positions as long as the constants in `f`.
pub fn confirm_sat(f: &Formula, depth: usize, cap: u64) -> Confirmation {
    let oracle = Oracle::new(depth).with_cap(cap);
    let mut skipped = false;
    for d in 0..=depth {
        match oracle.bounded_sat(f, d) {
            Ok(Some(alpha)) => return Confirmation::Witness(alpha),
            Ok(None) => {}
            Err(_) => {
                skipped = true;
                break;
            }
        }
    }
    let found = Alphabet::new(f.vars()).and_then(|alphabet| {
        let (a, _) = classical::build_over(f, &alphabet, &ClassicalConfig::default())?;
        let Some(tree) = a.accepted_tree() else { return Ok(None) };
        let alpha = decode(&tree, &alphabet);
        if alpha.max_len().unwrap_or(0) > depth {
            return Ok(None);
        }
        let bound = depth.max(constant_depth(f));
        Ok(Oracle::new(bound).with_cap(cap).satisfies(&alpha, f)?.then_some(alpha))
    });
    match found {
        Ok(Some(alpha)) => Confirmation::Witness(alpha),
        Ok(None) if !skipped => Confirmation::Unconfirmed,
        _ => Confirmation::Skipped,
    }
}

/// Length of the longest position constant in `f`.
fn constant_depth(f: &Formula) -> usize {
    let mut d = 0;
    f.visit(&mut |g| {
        if let Formula::EqPos(_, p) = g {
            d = d.max(p.len());
        }
    });
    d
}

/// Runs both engines on `f` and confirms a SAT verdict.
pub fn check(f: &Formula, cfg: &CheckConfig) -> Check {
    let lazy = lazy::decide_sat_with(f, &cfg.lazy).map(|d| d.verdict);
    let classical = classical::decide_sat_with(f, &cfg.classical).map(|(v, _)| v);
    let sat = matches!(lazy, Ok(Verdict::Sat)) || matches!(classical, Ok(Verdict::Sat));
    let confirmation = sat.then(|| confirm_sat(f, cfg.oracle_depth, cfg.oracle_cap));
    Check { formula: f.clone(), lazy, classical, confirmation }
}

/// The random corpus used by `difftest`: `count` formulae from `seed`.
pub fn corpus(count: usize, seed: u64, gen: RandomConfig) -> Vec<Formula> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count).map(|_| random_formula(&mut rng, gen)).collect()
}

/// Whether an engine error is a resource-out rather than a failure.
pub fn is_resource_out(e: &Error) -> bool {
    matches!(e, Error::Timeout | Error::ResourceLimit(_))
}
