//! Stochastic hill climbing over the syntax space, the option-induced semantic
//! space, or a per-draw mixture of the two.
//!
//! Every neighbour draw gets its own random streams derived from the run's
//! key path (seed, restart, iteration, draw), so a run is reproducible no
//! matter how the batch is scheduled.

mod report;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{sample_kind, sample_program, Node, NodeId, NonTerminal, Program, SamplerConfig};
use crate::exec::Exec;
use crate::interp::{rollout, ExecLimits};
use crate::options::{
    collect_states, extract_option_pool, CollectError, FilterStats, Omega, StateVector, MAX_STATES, MIN_STATES,
};
use crate::seed;
use crate::tasks::{eval_set, TaskId, TaskInstance, DEFAULT_EVAL_SIZE};

pub use report::{downsample, sig6, summarize, CurveRow, SummaryRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "IC")]
    Ic,
    #[serde(rename = "SHC")]
    Shc,
    #[serde(rename = "LISS-o")]
    LissO,
    #[serde(rename = "LISS-r")]
    LissR,
    #[serde(rename = "FM")]
    Fm,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Ic, Method::Shc, Method::LissO, Method::LissR, Method::Fm];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ic => "IC",
            Method::Shc => "SHC",
            Method::LissO => "LISS-o",
            Method::LissR => "LISS-r",
            Method::Fm => "FM",
        }
    }

    /// Whether the method consumes a program corpus.
    pub fn needs_corpus(self) -> bool {
        matches!(self, Method::Ic | Method::Fm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_'], "");
        Method::ALL
            .into_iter()
            .find(|m| m.name().to_ascii_lowercase().replace('-', "") == key)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub k: usize,
    pub epsilon: f64,
    pub episode_budget: u64,
    pub task: TaskId,
    pub eval_size: usize,
    #[serde(skip)]
    pub sampler: SamplerConfig,
    pub limits: ExecLimits,
    pub method: Method,
    pub master_seed: u64,
    #[serde(skip)]
    pub exec: Exec,
    /// Programs sampled for the random-options baseline.
    pub random_corpus_size: usize,
    pub crash_penalty: f64,
    /// Stop once the best value reaches the task's maximum return.
    pub stop_at_max: bool,
}

impl SearchConfig {
    pub fn new(task: TaskId, method: Method, master_seed: u64) -> SearchConfig {
        SearchConfig {
            k: 1000,
            epsilon: 0.4,
            episode_budget: 100_000,
            task,
            eval_size: DEFAULT_EVAL_SIZE,
            sampler: SamplerConfig::default(),
            limits: ExecLimits::default(),
            method,
            master_seed,
            exec: Exec::default(),
            random_corpus_size: 100,
            crash_penalty: 0.0,
            stop_at_max: true,
        }
    }

    pub fn eval_instances(&self) -> Vec<TaskInstance> {
        eval_set(self.task, self.master_seed, self.eval_size)
            .into_iter()
            .map(|t| t.with_crash_penalty(self.crash_penalty))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MoveKind {
    Syntax,
    /// Substitution of the option with this index in Ω.
    Semantic(usize),
    /// A semantic draw that hit a node kind with no matching option.
    Fallback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Neighbor {
    pub program: Program,
    pub at: NodeId,
    pub at_kind: NonTerminal,
    pub kind: MoveKind,
}

/// Regenerates the subtree at a uniformly chosen node with the sampler,
/// keeping the whole program within the sampler's depth limit.
pub fn syntax_neighbor<R: Rng + ?Sized>(n: &Program, cfg: &SamplerConfig, rng: &mut R) -> Neighbor {
    let at = n.random_nonterminal_node(rng);
    syntax_at(n, at, cfg, rng, MoveKind::Syntax)
}

fn syntax_at<R: Rng + ?Sized>(n: &Program, at: NodeId, cfg: &SamplerConfig, rng: &mut R, kind: MoveKind) -> Neighbor {
    let at_kind = n.node(at).expect("handle from this program").kind();
    let program = if at_kind == NonTerminal::Rho {
        sample_program(cfg, rng)
    } else {
        let level = n.root().depth_of(at.0).unwrap_or(1);
        let budget = (cfg.max_depth + 1).saturating_sub(level).max(1);
        let sub = sample_kind(cfg, at_kind, budget, rng);
        n.replace_subtree(at, sub).expect("sampled subtree has the node's kind")
    };
    Neighbor {
        program,
        at,
        at_kind,
        kind,
    }
}

/// Substitutes an option of matching root kind at a uniformly chosen node, or
/// falls back to a syntax move when Ω has no option of that kind.
pub fn semantic_neighbor<R: Rng + ?Sized>(n: &Program, omega: &Omega, cfg: &SamplerConfig, rng: &mut R) -> Neighbor {
    let at = n.random_nonterminal_node(rng);
    let at_kind = n.node(at).expect("handle from this program").kind();
    match omega.of_kind(at_kind).choose(rng) {
        None => syntax_at(n, at, cfg, rng, MoveKind::Fallback),
        Some(&i) => {
            let with = omega.get(i).node.clone();
            let program = n.replace_subtree(at, with).expect("option kind matches node kind");
            Neighbor {
                program,
                at,
                at_kind,
                kind: MoveKind::Semantic(i),
            }
        }
    }
}

/// Draw `i` of a neighbourhood keyed by `base`: the coin and the move use
/// separate streams, so ε only decides which move is made.
pub fn mixed_draw(
    n: &Program,
    omega: Option<&Omega>,
    cfg: &SamplerConfig,
    epsilon: f64,
    base: u64,
    i: u64,
) -> Neighbor {
    let mut moves = seed::rng(&[base, i, 1]);
    match omega {
        Some(om) if seed::rng(&[base, i, 0]).gen::<f64>() >= epsilon => semantic_neighbor(n, om, cfg, &mut moves),
        _ => syntax_neighbor(n, cfg, &mut moves),
    }
}

pub fn syntax_neighbors<R: Rng + ?Sized>(n: &Program, k: usize, cfg: &SamplerConfig, rng: &mut R) -> Vec<Program> {
    let base = rng.gen();
    (0..k as u64)
        .map(|i| mixed_draw(n, None, cfg, 1.0, base, i).program)
        .collect()
}

pub fn semantic_neighbors<R: Rng + ?Sized>(
    n: &Program,
    k: usize,
    omega: &Omega,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Vec<Program> {
    let base = rng.gen();
    (0..k as u64)
        .map(|i| mixed_draw(n, Some(omega), cfg, 0.0, base, i).program)
        .collect()
}

/// Each of the `k` draws is a syntax move with probability `epsilon`,
/// otherwise a semantic one.
pub fn mixed_neighbors<R: Rng + ?Sized>(
    n: &Program,
    k: usize,
    omega: &Omega,
    cfg: &SamplerConfig,
    epsilon: f64,
    rng: &mut R,
) -> Vec<Neighbor> {
    let base = rng.gen();
    (0..k as u64)
        .map(|i| mixed_draw(n, Some(omega), cfg, epsilon, base, i))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    pub episodes: u64,
    pub ticks: u64,
}

/// Mean episodic return over one rollout per instance.
pub fn evaluate(p: &Program, eval: &[TaskInstance], lim: &ExecLimits) -> Evaluation {
    assert!(!eval.is_empty(), "empty evaluation set");
    let mut sum = 0.0;
    let mut ticks = 0;
    for t in eval {
        let (r, _) = rollout(p.root(), t.clone(), lim, |_, _| {});
        sum += r.episodic_return;
        ticks += r.ticks;
    }
    Evaluation {
        value: sum / eval.len() as f64,
        episodes: eval.len() as u64,
        ticks,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episodes: u64,
    pub best: f64,
}

/// Things that happen during a search, for observers and tests.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Restart {
        restart: usize,
        value: f64,
    },
    /// `size` draws were considered, `evaluated` of them new to this restart.
    Batch {
        restart: usize,
        iteration: usize,
        size: usize,
        evaluated: usize,
        best_in_batch: f64,
        episodes: u64,
    },
    Accept {
        restart: usize,
        iteration: usize,
        value: f64,
        draw: usize,
        at_kind: NonTerminal,
        kind: MoveKind,
    },
    LocalOptimum {
        restart: usize,
        value: f64,
    },
    OptionsAdded {
        restart: usize,
        kept: usize,
        total: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRun {
    pub method: Method,
    pub task: TaskId,
    pub seed: u64,
    #[serde(with = "program_text")]
    pub best_program: Program,
    pub best_value: f64,
    pub curve: Vec<CurvePoint>,
    pub restarts: usize,
    pub episodes: u64,
    pub ticks: u64,
    /// Indices into Ω of the options appearing verbatim in the best program.
    pub options_used: Vec<usize>,
    pub omega_size: usize,
    pub option_stats: Option<OptionStats>,
}

/// Cost and size of the option pipeline feeding a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptionStats {
    pub programs: usize,
    pub pool: usize,
    pub states: usize,
    pub filter: FilterStats,
    pub collect_ticks: u64,
}

mod program_text {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::dsl::Program;

    pub fn serialize<S: Serializer>(p: &Program, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(p)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Program, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("budget of {budget} episodes cannot cover one evaluation of {needed}")]
    BudgetTooSmall { budget: u64, needed: u64 },
    #[error("{0} needs a program corpus")]
    MissingCorpus(Method),
    #[error("empty program corpus")]
    EmptyCorpus,
    #[error("option pipeline failed: {0}")]
    Options(#[from] CollectError),
}

/// Where a hill-climbing run draws semantic moves from.
pub enum OptionSource<'a> {
    /// Pure syntax search.
    None,
    Fixed(&'a Omega),
    /// Start empty and add the sub-programs of every restart's local optimum.
    Online,
}

/// Stochastic hill climbing with restarts until the episode budget runs out.
pub fn shc(
    cfg: &SearchConfig,
    source: OptionSource<'_>,
    observe: &mut dyn FnMut(&Event),
) -> Result<SearchRun, SearchError> {
    let eval = cfg.eval_instances();
    let cost = eval.len() as u64;
    if cfg.episode_budget < cost {
        return Err(SearchError::BudgetTooSmall {
            budget: cfg.episode_budget,
            needed: cost,
        });
    }
    let mut online = Omega::new();
    let mut online_states: Option<StateVector> = None;
    let fixed = match source {
        OptionSource::Fixed(om) => Some(om),
        _ => None,
    };
    let is_online = matches!(source, OptionSource::Online);
    let ceiling = 1.0;

    let mut episodes = 0u64;
    let mut ticks = 0u64;
    let mut curve = Vec::new();
    let mut best: Option<(Program, f64)> = None;
    let mut restart = 0usize;

    'search: while cfg.episode_budget - episodes >= cost {
        let mut rng = seed::rng(&[cfg.master_seed, 0x5ea7, restart as u64]);
        let mut incumbent = sample_program(&cfg.sampler, &mut rng);
        let e = evaluate(&incumbent, &eval, &cfg.limits);
        restart += 1;
        episodes += e.episodes;
        ticks += e.ticks;
        let mut value = e.value;
        let mut cache: HashMap<Program, f64> = HashMap::from([(incumbent.clone(), value)]);
        observe(&Event::Restart {
            restart: restart - 1,
            value,
        });
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((incumbent.clone(), value));
        }
        curve.push(CurvePoint {
            episodes,
            best: best.as_ref().unwrap().1,
        });
        if cfg.stop_at_max && value >= ceiling {
            break;
        }

        let mut iteration = 0usize;
        loop {
            let omega = if is_online { Some(&online) } else { fixed };
            let base = seed::derive(&[cfg.master_seed, restart as u64 - 1, iteration as u64]);
            let draws: Vec<Neighbor> = cfg.exec.map_range(cfg.k, |i| {
                mixed_draw(&incumbent, omega, &cfg.sampler, cfg.epsilon, base, i as u64)
            });

            // Programs already scored in this restart cost nothing; the batch
            // ends at the first new program the budget cannot pay for.
            let mut fresh: Vec<usize> = Vec::new();
            let mut pending: HashSet<&Program> = HashSet::new();
            let mut size = 0;
            let mut afford = (cfg.episode_budget - episodes) / cost;
            for (i, nb) in draws.iter().enumerate() {
                if !cache.contains_key(&nb.program) && !pending.contains(&nb.program) {
                    if afford == 0 {
                        break;
                    }
                    afford -= 1;
                    pending.insert(&nb.program);
                    fresh.push(i);
                }
                size = i + 1;
            }
            if size == 0 {
                break 'search;
            }
            let scored = cfg
                .exec
                .map(&fresh, |&i| evaluate(&draws[i].program, &eval, &cfg.limits));
            episodes += fresh.len() as u64 * cost;
            ticks += scored.iter().map(|e| e.ticks).sum::<u64>();
            for (&i, e) in fresh.iter().zip(&scored) {
                cache.insert(draws[i].program.clone(), e.value);
            }

            // Lowest draw index wins ties.
            let mut top = 0;
            let mut top_value = f64::NEG_INFINITY;
            for (i, nb) in draws[..size].iter().enumerate() {
                let v = cache[&nb.program];
                if v > top_value {
                    top = i;
                    top_value = v;
                }
            }
            if top_value > best.as_ref().unwrap().1 {
                best = Some((draws[top].program.clone(), top_value));
            }
            if curve.last().is_none_or(|c: &CurvePoint| c.episodes < episodes) {
                curve.push(CurvePoint {
                    episodes,
                    best: best.as_ref().unwrap().1,
                });
            }
            observe(&Event::Batch {
                restart: restart - 1,
                iteration,
                size,
                evaluated: fresh.len(),
                best_in_batch: top_value,
                episodes,
            });

            if top_value > value {
                let nb = draws.into_iter().nth(top).unwrap();
                observe(&Event::Accept {
                    restart: restart - 1,
                    iteration,
                    value: top_value,
                    draw: top,
                    at_kind: nb.at_kind,
                    kind: nb.kind,
                });
                incumbent = nb.program;
                value = top_value;
                iteration += 1;
                if cfg.stop_at_max && value >= ceiling {
                    break 'search;
                }
            } else {
                observe(&Event::LocalOptimum {
                    restart: restart - 1,
                    value,
                });
                if is_online {
                    let pool = extract_option_pool(std::slice::from_ref(&incumbent));
                    if online_states.is_none() {
                        let mut srng = seed::rng(&[cfg.master_seed, 0x0751, restart as u64 - 1]);
                        online_states =
                            collect_states(&pool, cfg.task, &mut srng, MIN_STATES, MAX_STATES, &cfg.limits).ok();
                    }
                    if let Some(states) = &online_states {
                        let stats = online.extend(&pool, states, &cfg.limits, cfg.exec);
                        observe(&Event::OptionsAdded {
                            restart: restart - 1,
                            kept: stats.kept,
                            total: online.len(),
                        });
                    }
                }
                break;
            }
        }
    }

    let (best_program, best_value) = best.expect("at least one evaluation fits the budget");
    let used_from = if is_online { Some(&online) } else { fixed };
    let options_used = used_from.map_or_else(Vec::new, |om| options_in(&best_program, om));
    Ok(SearchRun {
        method: cfg.method,
        task: cfg.task,
        seed: cfg.master_seed,
        best_program,
        best_value,
        curve,
        restarts: restart,
        episodes,
        ticks,
        options_used,
        omega_size: used_from.map_or(0, Omega::len),
        option_stats: None,
    })
}

fn options_in(p: &Program, omega: &Omega) -> Vec<usize> {
    let subtrees: HashSet<&Node> = p.root().preorder().into_iter().collect();
    omega
        .records()
        .iter()
        .enumerate()
        .filter(|(_, r)| subtrees.contains(&r.node))
        .map(|(i, _)| i)
        .collect()
}

/// Builds Ω from `programs` against states drawn from the task.
pub fn build_omega(cfg: &SearchConfig, programs: &[Program]) -> Result<(Omega, OptionStats), SearchError> {
    if programs.is_empty() {
        return Err(SearchError::EmptyCorpus);
    }
    let pool = extract_option_pool(programs);
    let mut rng = seed::rng(&[cfg.master_seed, 0x0975]);
    let states = collect_states(&pool, cfg.task, &mut rng, MIN_STATES, MAX_STATES, &cfg.limits)?;
    let (omega, filter) = crate::options::filter_options(&pool, &states, &cfg.limits, cfg.exec);
    let stats = OptionStats {
        programs: programs.len(),
        pool: pool.len(),
        states: states.states.len(),
        filter,
        collect_ticks: states.ticks,
    };
    Ok((omega, stats))
}

/// Programs drawn from the initial-candidate distribution.
pub fn random_corpus(cfg: &SearchConfig) -> Vec<Program> {
    let mut rng = seed::rng(&[cfg.master_seed, 0x1155]);
    (0..cfg.random_corpus_size)
        .map(|_| sample_program(&cfg.sampler, &mut rng))
        .collect()
}

pub fn run_method(cfg: &SearchConfig, corpus: Option<&[Program]>) -> Result<SearchRun, SearchError> {
    run_method_observed(cfg, corpus, &mut |_| {})
}

pub fn run_method_observed(
    cfg: &SearchConfig,
    corpus: Option<&[Program]>,
    observe: &mut dyn FnMut(&Event),
) -> Result<SearchRun, SearchError> {
    match cfg.method {
        Method::Shc => shc(cfg, OptionSource::None, observe),
        Method::LissO => shc(cfg, OptionSource::Online, observe),
        Method::Ic | Method::LissR => {
            let owned;
            let programs = if cfg.method == Method::LissR {
                owned = random_corpus(cfg);
                &owned[..]
            } else {
                corpus.ok_or(SearchError::MissingCorpus(cfg.method))?
            };
            let (omega, stats) = build_omega(cfg, programs)?;
            let mut run = shc(cfg, OptionSource::Fixed(&omega), observe)?;
            run.option_stats = Some(stats);
            Ok(run)
        }
        Method::Fm => {
            let programs = corpus.ok_or(SearchError::MissingCorpus(Method::Fm))?;
            foundation_model(cfg, programs)
        }
    }
}

/// Scores every corpus program and keeps the best one; no search.
fn foundation_model(cfg: &SearchConfig, programs: &[Program]) -> Result<SearchRun, SearchError> {
    if programs.is_empty() {
        return Err(SearchError::EmptyCorpus);
    }
    let eval = cfg.eval_instances();
    let scores = cfg.exec.map(programs, |p| evaluate(p, &eval, &cfg.limits));
    let mut top = 0;
    for (i, e) in scores.iter().enumerate() {
        if e.value > scores[top].value {
            top = i;
        }
    }
    let episodes = scores.iter().map(|e| e.episodes).sum();
    let best_value = scores[top].value;
    Ok(SearchRun {
        method: Method::Fm,
        task: cfg.task,
        seed: cfg.master_seed,
        best_program: programs[top].clone(),
        best_value,
        curve: vec![CurvePoint {
            episodes,
            best: best_value,
        }],
        restarts: 0,
        episodes,
        ticks: scores.iter().map(|e| e.ticks).sum(),
        options_used: Vec::new(),
        omega_size: 0,
        option_stats: None,
    })
}
