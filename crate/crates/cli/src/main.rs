use std::io::Read;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use ws2s::classical::{self, ClassicalConfig};
use ws2s::crosscheck::{self, CheckConfig, Confirmation};
use ws2s::families::{gen_family, gen_text, Family};
use ws2s::lazy::{self, EngineConfig};
use ws2s::random::RandomConfig;
use ws2s::tautomata::Limits;
use ws2s::{Formula, Verdict};

const CSV_HEADER: &str = "family,n,engine,result,time_ms,term_nodes,fixpoint_iterations,subsumption_prunes,automaton_states";

/// Decide WS2S formulae with lazy automata terms or classical tree automata.
#[derive(Parser)]
#[command(name = "ws2s", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a formula read from a file or stdin (`-`).
    Decide {
        input: String,
        #[arg(long, value_enum, default_value_t = Mode::Sat)]
        mode: Mode,
        #[command(flatten)]
        opts: EngineOpts,
        /// Print statistics to stderr.
        #[arg(long)]
        stats: bool,
        /// Print a CSV row per engine instead of the verdict.
        #[arg(long)]
        csv: bool,
    },
    /// Decide members of a benchmark family.
    Bench {
        #[arg(long)]
        family: Family,
        #[arg(long, conflicts_with = "n_range")]
        n: Option<usize>,
        /// Inclusive range `a..b`.
        #[arg(long)]
        n_range: Option<String>,
        #[command(flatten)]
        opts: EngineOpts,
        #[arg(long)]
        csv: bool,
        /// Instances decided in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print a benchmark family member.
    Gen {
        #[arg(long)]
        family: Family,
        #[arg(long)]
        n: usize,
    },
    /// Compare the engines on random formulae, confirming SAT verdicts with
    /// the bounded oracle.
    Difftest {
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Oracle depth bound.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 3)]
        vars: usize,
        #[arg(long, default_value_t = 2)]
        quantifiers: usize,
        #[arg(long, default_value_t = 12)]
        size: usize,
        /// Per-engine timeout in seconds.
        #[arg(long, default_value_t = 60.0)]
        timeout: f64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sat,
    Valid,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EngineChoice {
    Lazy,
    Classical,
    Both,
}

#[derive(Args, Clone)]
struct EngineOpts {
    #[arg(long, value_enum, default_value_t = EngineChoice::Lazy)]
    engine: EngineChoice,
    #[arg(long)]
    no_lazy_rt: bool,
    #[arg(long)]
    no_subsumption: bool,
    #[arg(long)]
    flatten: bool,
    #[arg(long)]
    nondet_union: bool,
    #[arg(long)]
    no_antiprenex: bool,
    /// Timeout in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Term cap for the lazy engine, transition cap for the classical one.
    #[arg(long)]
    cap: Option<usize>,
}

impl EngineOpts {
    fn timeout(&self) -> Option<Duration> {
        self.timeout.map(Duration::from_secs_f64)
    }

    fn lazy(&self) -> EngineConfig {
        let d = EngineConfig::default();
        EngineConfig {
            lazy_rt: !self.no_lazy_rt,
            subsumption: !self.no_subsumption,
            flatten: self.flatten,
            nondet_union: self.nondet_union,
            antiprenex: !self.no_antiprenex,
            max_terms: self.cap.unwrap_or(d.max_terms),
            timeout: self.timeout(),
            trace: false,
        }
    }

    fn classical(&self) -> ClassicalConfig {
        let d = Limits::default();
        ClassicalConfig {
            antiprenex: !self.no_antiprenex,
            limits: Limits { max_transitions: self.cap.unwrap_or(d.max_transitions), ..d },
            timeout: self.timeout(),
            ..ClassicalConfig::default()
        }
    }

    fn engines(&self) -> Vec<Engine> {
        match self.engine {
            EngineChoice::Lazy => vec![Engine::Lazy],
            EngineChoice::Classical => vec![Engine::Classical],
            EngineChoice::Both => vec![Engine::Lazy, Engine::Classical],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Engine {
    Lazy,
    Classical,
}

impl Engine {
    fn name(self) -> &'static str {
        match self {
            Engine::Lazy => "lazy",
            Engine::Classical => "classical",
        }
    }
}

/// One engine run on one formula.
struct Run {
    engine: Engine,
    outcome: ws2s::Result<Verdict>,
    time_ms: u128,
    term_nodes: Option<usize>,
    fixpoint_iterations: Option<u64>,
    subsumption_prunes: Option<u64>,
    automaton_states: Option<usize>,
    stats: String,
}

fn run_engine(engine: Engine, f: &Formula, opts: &EngineOpts) -> Run {
    let start = Instant::now();
    let mut run = Run {
        engine,
        outcome: Ok(Verdict::Unsat),
        time_ms: 0,
        term_nodes: None,
        fixpoint_iterations: None,
        subsumption_prunes: None,
        automaton_states: None,
        stats: String::new(),
    };
    match engine {
        Engine::Lazy => match lazy::decide_sat_with(f, &opts.lazy()) {
            Ok(d) => {
                run.outcome = Ok(d.verdict);
                run.term_nodes = Some(d.stats.term_nodes);
                run.fixpoint_iterations = Some(d.stats.fixpoint_iterations);
                run.subsumption_prunes = Some(d.stats.subsumption_prunes);
                run.stats = format!("{:#?}", d.stats);
            }
            Err(e) => run.outcome = Err(e),
        },
        Engine::Classical => match classical::decide_sat_with(f, &opts.classical()) {
            Ok((v, s)) => {
                run.outcome = Ok(v);
                run.automaton_states = Some(s.automaton_states);
                run.stats = format!("{s:#?}");
            }
            Err(e) => run.outcome = Err(e),
        },
    }
    run.time_ms = start.elapsed().as_millis();
    run
}

fn result_label(outcome: &ws2s::Result<Verdict>, mode: Mode) -> String {
    match outcome {
        Ok(v) if mode == Mode::Valid => v.negated_validity().to_string(),
        Ok(v) => v.to_string(),
        Err(ws2s::Error::Timeout) => "TIMEOUT".into(),
        Err(ws2s::Error::ResourceLimit(_)) => "CAP".into(),
        Err(_) => "ERROR".into(),
    }
}

fn csv_row(family: &str, n: &str, run: &Run, mode: Mode) -> String {
    let opt = |x: Option<String>| x.unwrap_or_default();
    format!(
        "{family},{n},{},{},{},{},{},{},{}",
        run.engine.name(),
        result_label(&run.outcome, mode),
        run.time_ms,
        opt(run.term_nodes.map(|x| x.to_string())),
        opt(run.fixpoint_iterations.map(|x| x.to_string())),
        opt(run.subsumption_prunes.map(|x| x.to_string())),
        opt(run.automaton_states.map(|x| x.to_string())),
    )
}

/// Verdict agreed on by every run that finished; an error if runs differ
/// or none finished.
fn combined(runs: &[Run]) -> Result<Verdict> {
    let mut verdict = None;
    for run in runs {
        match &run.outcome {
            Ok(v) => match verdict {
                Some(w) if w != *v => bail!("engines disagree: lazy and classical return different verdicts"),
                _ => verdict = Some(*v),
            },
            Err(e) => bail!("{} engine: {e}", run.engine.name()),
        }
    }
    verdict.ok_or_else(|| anyhow!("no engine selected"))
}

fn read_input(input: &str) -> Result<String> {
    if input == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        Ok(s)
    } else {
        std::fs::read_to_string(input).with_context(|| format!("reading {input}"))
    }
}

fn decide(input: &str, mode: Mode, opts: &EngineOpts, stats: bool, csv: bool) -> Result<ExitCode> {
    let text = read_input(input)?;
    let f = ws2s::parser::parse(&text)?;
    let f = if mode == Mode::Valid { Formula::not(f) } else { f };
    let runs: Vec<Run> = opts.engines().into_iter().map(|e| run_engine(e, &f, opts)).collect();
    if stats {
        for run in &runs {
            eprintln!("{} ({} ms)\n{}", run.engine.name(), run.time_ms, run.stats);
        }
    }
    if csv {
        println!("{CSV_HEADER}");
        for run in &runs {
            println!("{}", csv_row("-", "-", run, mode));
        }
    }
    let verdict = combined(&runs)?;
    if !csv {
        println!("{}", result_label(&Ok(verdict), mode));
    }
    // ¬f is decided in valid mode, so SAT there means INVALID
    let positive = (verdict == Verdict::Sat) != (mode == Mode::Valid);
    Ok(if positive { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once("..").ok_or_else(|| anyhow!("expected a range a..b, got {s:?}"))?;
    let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
    if a > b {
        bail!("empty range {s}");
    }
    Ok((a, b))
}

fn bench(family: Family, ns: Vec<usize>, opts: &EngineOpts, csv: bool, jobs: usize) -> Result<ExitCode> {
    let instances: Vec<(usize, Formula)> =
        ns.into_iter().map(|n| Ok((n, gen_family(family, n)?))).collect::<ws2s::Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build()?;
    let rows: Vec<Vec<Run>> = pool.install(|| {
        instances
            .par_iter()
            .map(|(_, f)| opts.engines().into_iter().map(|e| run_engine(e, f, opts)).collect())
            .collect()
    });
    if csv {
        println!("{CSV_HEADER}");
    }
    let mut disagreement = false;
    for ((n, _), runs) in instances.iter().zip(&rows) {
        disagreement |= matches!(
            (runs.first().map(|r| &r.outcome), runs.get(1).map(|r| &r.outcome)),
            (Some(Ok(a)), Some(Ok(b))) if a != b
        );
        for run in runs {
            if csv {
                println!("{}", csv_row(&family.to_string(), &n.to_string(), run, Mode::Sat));
            } else {
                println!(
                    "{family} {n:>3} {:<9} {:<7} {:>8} ms",
                    run.engine.name(),
                    result_label(&run.outcome, Mode::Sat),
                    run.time_ms
                );
            }
        }
    }
    if disagreement {
        eprintln!("engines disagree on at least one instance");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

struct DifftestArgs {
    count: usize,
    seed: u64,
    depth: usize,
    gen: RandomConfig,
    timeout: Duration,
}

fn difftest(a: DifftestArgs) -> Result<ExitCode> {
    let cfg = CheckConfig {
        lazy: EngineConfig { timeout: Some(a.timeout), ..EngineConfig::default() },
        classical: ClassicalConfig { timeout: Some(a.timeout), ..ClassicalConfig::default() },
        oracle_depth: a.depth,
        ..CheckConfig::default()
    };
    let formulas = crosscheck::corpus(a.count, a.seed, a.gen);
    let checks: Vec<_> = formulas.par_iter().map(|f| crosscheck::check(f, &cfg)).collect();
    let (mut bad, mut confirmed, mut unconfirmed, mut skipped, mut outs) = (0, 0, 0, 0, 0);
    for c in &checks {
        if c.disagrees() {
            bad += 1;
            println!("DISAGREE lazy={:?} classical={:?}: {}", c.lazy, c.classical, c.formula);
        }
        for r in [&c.lazy, &c.classical] {
            match r {
                Err(e) if crosscheck::is_resource_out(e) => outs += 1,
                Err(e) => {
                    bad += 1;
                    println!("ERROR {e}: {}", c.formula);
                }
                Ok(_) => {}
            }
        }
        match &c.confirmation {
            Some(Confirmation::Witness(_)) => confirmed += 1,
            Some(Confirmation::Unconfirmed) => {
                unconfirmed += 1;
                bad += 1;
                println!("UNCONFIRMED SAT (no model up to depth {}): {}", a.depth, c.formula);
            }
            Some(Confirmation::Skipped) => skipped += 1,
            None => {}
        }
    }
    println!(
        "{} formulae: {bad} failures, {confirmed} SAT confirmed, {unconfirmed} unconfirmed, {skipped} oracle skipped, {outs} resource-outs",
        checks.len()
    );
    Ok(if bad == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Decide { input, mode, opts, stats, csv } => decide(&input, mode, &opts, stats, csv),
        Command::Bench { family, n, n_range, opts, csv, jobs } => {
            let ns = match (n, n_range) {
                (Some(n), None) => Ok(vec![n]),
                (None, Some(r)) => parse_range(&r).map(|(a, b)| (a..=b).collect()),
                _ => Err(anyhow!("give exactly one of --n and --n-range")),
            };
            ns.and_then(|ns| bench(family, ns, &opts, csv, jobs))
        }
        Command::Gen { family, n } => gen_text(family, n).map(|t| {
            println!("{t}");
            ExitCode::SUCCESS
        }).map_err(Into::into),
        Command::Difftest { count, seed, depth, vars, quantifiers, size, timeout } => difftest(DifftestArgs {
            count,
            seed,
            depth,
            gen: RandomConfig { vars, max_quantifiers: quantifiers, max_size: size, ..RandomConfig::default() },
            timeout: Duration::from_secs_f64(timeout),
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
