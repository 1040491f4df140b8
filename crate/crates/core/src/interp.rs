//! Executes programs as policies.
//!
//! A program drives a whole episode: control flow runs against the live world
//! and every action node steps the task. Perceptions and control steps cost
//! interpreter ticks, actions cost both a tick and an action.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dsl::{Count, Node, Program};
use crate::tasks::TaskInstance;
use crate::world::{Action, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExecLimits {
    pub max_actions: u32,
    pub max_ticks: u64,
}

impl Default for ExecLimits {
    fn default() -> Self {
        ExecLimits {
            max_actions: 250,
            max_ticks: 100_000,
        }
    }
}

impl ExecLimits {
    pub fn new(max_actions: u32, max_ticks: u64) -> Self {
        assert!(max_actions >= 1 && max_ticks >= 1, "limits must be positive");
        ExecLimits { max_actions, max_ticks }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TerminalCause {
    ProgramEnded,
    TaskDone,
    Crashed,
    ActionBudget,
    TickBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub episodic_return: f64,
    pub actions_taken: u32,
    pub ticks: u64,
    pub terminal_cause: TerminalCause,
    pub trace: Option<Vec<Action>>,
}

/// Where the interpreter's actions go.
trait Env {
    fn world(&self) -> &WorldState;
    /// Issues `a`; `Err` ends execution.
    fn act(&mut self, a: Action) -> Result<(), TerminalCause>;
}

struct Machine<'a, E> {
    env: E,
    lim: &'a ExecLimits,
    ticks: u64,
}

impl<E: Env> Machine<'_, E> {
    fn tick(&mut self) -> Result<(), TerminalCause> {
        self.ticks += 1;
        if self.ticks > self.lim.max_ticks {
            Err(TerminalCause::TickBudget)
        } else {
            Ok(())
        }
    }

    fn test(&mut self, b: &Node) -> Result<bool, TerminalCause> {
        self.tick()?;
        Ok(match b {
            Node::Cond(h) => self.env.world().perceive(percept(h)),
            Node::Not(h) => !self.env.world().perceive(percept(h)),
            other => unreachable!("condition expected, found {:?}", other.kind()),
        })
    }

    /// Runs `n`; returns whether any action was issued.
    fn exec(&mut self, n: &Node) -> Result<bool, TerminalCause> {
        match n {
            Node::Seq(a, b) => {
                let x = self.exec(a)?;
                Ok(self.exec(b)? || x)
            }
            Node::Program(s) => self.exec(s),
            Node::Act(a) => self.exec(a),
            Node::Action(a) => {
                self.tick()?;
                self.env.act(*a)?;
                Ok(true)
            }
            Node::If(b, s) => {
                if self.test(b)? {
                    self.exec(s)
                } else {
                    Ok(false)
                }
            }
            Node::IfElse(b, s, e) => {
                if self.test(b)? {
                    self.exec(s)
                } else {
                    self.exec(e)
                }
            }
            Node::While(b, s) => {
                let mut acted = false;
                while self.test(b)? {
                    // The world is deterministic: a pass that issues no action
                    // leaves it unchanged, so the loop would spin forever.
                    if !self.exec(s)? {
                        return Err(TerminalCause::TickBudget);
                    }
                    acted = true;
                }
                Ok(acted)
            }
            Node::Repeat(count, s) => {
                self.tick()?;
                match **count {
                    Node::Number(Count::Finite(k)) => {
                        let mut acted = false;
                        for _ in 0..k {
                            acted |= self.exec(s)?;
                        }
                        Ok(acted)
                    }
                    Node::Number(Count::Infinity) => loop {
                        if !self.exec(s)? {
                            return Err(TerminalCause::TickBudget);
                        }
                    },
                    _ => unreachable!("number expected"),
                }
            }
            Node::Cond(_) | Node::Not(_) | Node::Percept(_) | Node::Number(_) => {
                unreachable!("{:?} node cannot be executed", n.kind())
            }
        }
    }
}

fn percept(h: &Node) -> crate::world::Percept {
    match h {
        Node::Percept(p) => *p,
        other => unreachable!("percept expected, found {:?}", other.kind()),
    }
}

struct Episode<'a, F> {
    task: TaskInstance,
    lim: &'a ExecLimits,
    actions: u32,
    observe: F,
}

impl<F: FnMut(&WorldState, Action)> Env for Episode<'_, F> {
    fn world(&self) -> &WorldState {
        self.task.world()
    }

    fn act(&mut self, a: Action) -> Result<(), TerminalCause> {
        if self.actions >= self.lim.max_actions {
            return Err(TerminalCause::ActionBudget);
        }
        (self.observe)(self.task.world(), a);
        self.actions += 1;
        if self.task.step(a).done {
            return Err(if self.task.world().crashed() {
                TerminalCause::Crashed
            } else {
                TerminalCause::TaskDone
            });
        }
        Ok(())
    }
}

/// Runs an action-capable subtree for one episode, calling `observe` with the
/// pre-action state and the action every time the agent acts. Returns the
/// result and the final task instance.
pub fn rollout<F>(node: &Node, task: TaskInstance, lim: &ExecLimits, observe: F) -> (EpisodeResult, TaskInstance)
where
    F: FnMut(&WorldState, Action),
{
    assert!(
        node.kind().is_action_capable(),
        "{} subtrees cannot be executed",
        node.kind()
    );
    let mut m = Machine {
        env: Episode {
            task,
            lim,
            actions: 0,
            observe,
        },
        lim,
        ticks: 0,
    };
    let cause = if m.env.task.done() {
        TerminalCause::TaskDone
    } else {
        match m.exec(node) {
            Ok(_) => TerminalCause::ProgramEnded,
            Err(c) => c,
        }
    };
    let ep = m.env;
    let result = EpisodeResult {
        episodic_return: ep.task.return_so_far(),
        actions_taken: ep.actions,
        ticks: m.ticks.min(lim.max_ticks),
        terminal_cause: cause,
        trace: None,
    };
    (result, ep.task)
}

pub fn run_episode(p: &Program, task: TaskInstance, lim: &ExecLimits) -> EpisodeResult {
    rollout(p.root(), task, lim, |_, _| {}).0
}

/// [`run_episode`] that also records every action issued.
pub fn run_episode_traced(p: &Program, task: TaskInstance, lim: &ExecLimits) -> EpisodeResult {
    let mut trace = Vec::new();
    let (mut r, _) = rollout(p.root(), task, lim, |_, a| trace.push(a));
    r.trace = Some(trace);
    r
}

/// Writes a trace as JSON lines, one action per line.
pub fn write_trace<W: Write>(out: &mut W, trace: &[Action]) -> io::Result<()> {
    for (i, a) in trace.iter().enumerate() {
        serde_json::to_writer(&mut *out, &serde_json::json!({ "step": i, "action": a }))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

struct Probe<'a> {
    world: &'a WorldState,
    first: Option<Action>,
}

impl Env for Probe<'_> {
    fn world(&self) -> &WorldState {
        self.world
    }

    fn act(&mut self, a: Action) -> Result<(), TerminalCause> {
        self.first = Some(a);
        Err(TerminalCause::ProgramEnded)
    }
}

/// The first primitive action a fresh invocation of `node` issues from `s`,
/// or `None` if it ends (or runs out of ticks) without acting.
pub fn first_action(node: &Node, s: &WorldState, lim: &ExecLimits) -> Option<Action> {
    first_action_counted(node, s, lim).0
}

/// [`first_action`] plus the interpreter ticks it took.
pub fn first_action_counted(node: &Node, s: &WorldState, lim: &ExecLimits) -> (Option<Action>, u64) {
    assert!(
        node.kind().is_action_capable(),
        "{} subtrees cannot be executed",
        node.kind()
    );
    let mut m = Machine {
        env: Probe { world: s, first: None },
        lim,
        ticks: 0,
    };
    let _ = m.exec(node);
    (m.env.first, m.ticks.min(lim.max_ticks))
}
