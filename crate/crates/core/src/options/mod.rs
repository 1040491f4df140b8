//! Programmatic options: sub-programs of existing programs, fingerprinted by
//! the first action they take on a fixed set of probe states and reduced to
//! one representative per behaviour.

mod corpus;
mod llm;
pub mod prompts;

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::{parse, Node, NonTerminal, Program};
use crate::exec::Exec;
use crate::interp::{first_action_counted, rollout, ExecLimits};
use crate::tasks::{init_instance, TaskId};
use crate::world::{Action, WorldState};

pub use corpus::{
    load_corpus, parse_any, perturbed_corpus, write_corpus, CorpusEntry, CorpusError, CorpusLine, Origin,
};
pub use llm::{extract_program, harvest, Endpoint, EndpointConfig, HarvestError, HarvestReport, API_KEY_ENV};

pub const MIN_STATES: usize = 300;
pub const MAX_STATES: usize = 700;

/// The first action an option takes in one probe state; `None` is "no action".
pub type Signature = Vec<Option<Action>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OptionRecord {
    pub node: Node,
    pub root_kind: NonTerminal,
    pub signature: Signature,
    pub signature_hash: String,
}

/// Hex SHA-256 of a signature: one byte per entry, the action code or 0xff.
pub fn signature_hash(sig: &[Option<Action>]) -> String {
    let bytes: Vec<u8> = sig.iter().map(|a| a.map_or(0xff, Action::code)).collect();
    hex::encode(Sha256::digest(&bytes))
}

/// All sub-programs of `programs`, structural duplicates collapsed, in
/// first-seen order.
pub fn extract_option_pool(programs: &[Program]) -> Vec<(NonTerminal, Node)> {
    let mut seen = HashSet::new();
    let mut pool = Vec::new();
    for p in programs {
        for (kind, node) in p.subprograms() {
            if seen.insert(node.clone()) {
                pool.push((kind, node));
            }
        }
    }
    pool
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub states: Vec<WorldState>,
    pub task: TaskId,
    pub rollouts: usize,
    /// Interpreter ticks spent producing the states.
    pub ticks: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CollectError {
    #[error("no option in the pool can issue actions")]
    NoActionCapable,
    #[error("{rollouts} rollouts produced only {states} states")]
    Starved { rollouts: usize, states: usize },
    #[error("bad bounds: min {min} max {max}")]
    Bounds { min: usize, max: usize },
}

/// Rolls out randomly chosen options from fresh initial states and keeps every
/// state in which the agent acted, until at least `min` are gathered.
pub fn collect_states<R: Rng + ?Sized>(
    pool: &[(NonTerminal, Node)],
    task: TaskId,
    rng: &mut R,
    min: usize,
    max: usize,
    lim: &ExecLimits,
) -> Result<StateVector, CollectError> {
    if min == 0 || min > max {
        return Err(CollectError::Bounds { min, max });
    }
    let capable: Vec<&Node> = pool
        .iter()
        .filter(|(k, _)| k.is_action_capable())
        .map(|(_, n)| n)
        .collect();
    if capable.is_empty() {
        return Err(CollectError::NoActionCapable);
    }
    let max_rollouts = 100 * min;
    let mut states = Vec::with_capacity(max);
    let mut rollouts = 0;
    let mut ticks = 0;
    while states.len() < min {
        if rollouts == max_rollouts {
            return Err(CollectError::Starved {
                rollouts,
                states: states.len(),
            });
        }
        let option = capable.choose(rng).unwrap();
        let t = init_instance(task, rng);
        let (r, _) = rollout(option, t, lim, |s, _| {
            if states.len() < max {
                states.push(s.clone());
            }
        });
        ticks += r.ticks;
        rollouts += 1;
    }
    Ok(StateVector {
        states,
        task,
        rollouts,
        ticks,
    })
}

/// First action of `node` on every probe state, with the ticks spent.
pub fn action_signature(node: &Node, states: &StateVector, lim: &ExecLimits) -> (Signature, u64) {
    let mut ticks = 0;
    let sig = states
        .states
        .iter()
        .map(|s| {
            let (a, t) = first_action_counted(node, s, lim);
            ticks += t;
            a
        })
        .collect();
    (sig, ticks)
}

/// The filtered option set Ω with an index by root kind.
#[derive(Clone, Debug, Default)]
pub struct Omega {
    records: Vec<OptionRecord>,
    seen: HashSet<Signature>,
    by_kind: HashMap<NonTerminal, Vec<usize>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub considered: usize,
    pub excluded_kinds: usize,
    pub duplicates: usize,
    pub kept: usize,
    pub ticks: u64,
}

impl Omega {
    pub fn new() -> Omega {
        Omega::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[OptionRecord] {
        &self.records
    }

    pub fn get(&self, i: usize) -> &OptionRecord {
        &self.records[i]
    }

    /// Indices of the options whose root kind is `kind`.
    pub fn of_kind(&self, kind: NonTerminal) -> &[usize] {
        self.by_kind.get(&kind).map_or(&[], Vec::as_slice)
    }

    /// Adds the options of `pool` whose behaviour on `states` is new. Options
    /// that cannot act on their own are skipped; among equal signatures the
    /// first one seen wins.
    pub fn extend(
        &mut self,
        pool: &[(NonTerminal, Node)],
        states: &StateVector,
        lim: &ExecLimits,
        exec: Exec,
    ) -> FilterStats {
        let capable: Vec<&(NonTerminal, Node)> = pool.iter().filter(|(k, _)| k.is_action_capable()).collect();
        let sigs = exec.map(&capable, |(_, n)| action_signature(n, states, lim));
        let mut stats = FilterStats {
            considered: pool.len(),
            excluded_kinds: pool.len() - capable.len(),
            ..FilterStats::default()
        };
        for ((kind, node), (sig, ticks)) in capable.into_iter().zip(sigs) {
            stats.ticks += ticks;
            if !self.seen.insert(sig.clone()) {
                stats.duplicates += 1;
                continue;
            }
            self.push(OptionRecord {
                node: node.clone(),
                root_kind: *kind,
                signature_hash: signature_hash(&sig),
                signature: sig,
            });
            stats.kept += 1;
        }
        stats
    }

    fn push(&mut self, rec: OptionRecord) {
        self.by_kind.entry(rec.root_kind).or_default().push(self.records.len());
        self.records.push(rec);
    }
}

pub fn filter_options(
    pool: &[(NonTerminal, Node)],
    states: &StateVector,
    lim: &ExecLimits,
    exec: Exec,
) -> (Omega, FilterStats) {
    let mut omega = Omega::new();
    let stats = omega.extend(pool, states, lim, exec);
    (omega, stats)
}

/// One line of an options file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptionLine {
    pub program: String,
    pub root_kind: NonTerminal,
    pub signature_hash: String,
}

#[derive(Debug, Error)]
pub enum OptionsFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Bad { line: usize, msg: String },
}

pub fn write_options(path: &Path, omega: &Omega) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for r in omega.records() {
        let line = OptionLine {
            program: r.node.to_string(),
            root_kind: r.root_kind,
            signature_hash: r.signature_hash.clone(),
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Parses the printed form of an action-capable subtree.
pub fn parse_subtree(text: &str, kind: NonTerminal) -> Result<Node, String> {
    match kind {
        NonTerminal::Rho => parse(text).map(Program::into_root).map_err(|e| e.to_string()),
        NonTerminal::Stmt => {
            let p = parse(&format!("DEF run m( {text} m)")).map_err(|e| e.to_string())?;
            Ok(p.body().clone())
        }
        NonTerminal::Action => Action::from_token(text.trim())
            .map(Node::Action)
            .ok_or_else(|| format!("not an action: {text:?}")),
        other => Err(format!("{other} subtrees are not options")),
    }
}

/// Reads an options file back as a pool, in file order.
pub fn read_options(path: &Path) -> Result<Vec<(NonTerminal, Node)>, OptionsFileError> {
    let file = io::BufReader::new(fs::File::open(path)?);
    let mut pool = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| OptionsFileError::Bad { line: i + 1, msg };
        let rec: OptionLine = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        let node = parse_subtree(&rec.program, rec.root_kind).map_err(bad)?;
        pool.push((rec.root_kind, node));
    }
    Ok(pool)
}
