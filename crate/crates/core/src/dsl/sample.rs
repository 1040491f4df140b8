//! The initial-candidate distribution: top-down expansion of non-terminals,
//! each step drawing one production according to per-rule weights.

use std::fmt;

use rand::Rng;
use thiserror::Error;

use super::{Count, Node, NonTerminal, Program, DEFAULT_NUMBER_CAP};
use crate::world::{Action, Percept};

/// A production rule with a configurable weight. `ρ` has a single production
/// and is not listed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    While,
    If,
    IfElse,
    Repeat,
    Seq,
    Act,
    CondPlain,
    CondNot,
    Percept(Percept),
    Action(Action),
    Number(u32),
}

const STMT_RULES: [Rule; 6] = [Rule::While, Rule::If, Rule::IfElse, Rule::Repeat, Rule::Seq, Rule::Act];

impl Rule {
    pub fn lhs(self) -> NonTerminal {
        match self {
            Rule::While | Rule::If | Rule::IfElse | Rule::Repeat | Rule::Seq | Rule::Act => NonTerminal::Stmt,
            Rule::CondPlain | Rule::CondNot => NonTerminal::Cond,
            Rule::Percept(_) => NonTerminal::Percept,
            Rule::Action(_) => NonTerminal::Action,
            Rule::Number(_) => NonTerminal::Number,
        }
    }

    /// Name used in configuration files, e.g. `stmt.while` or `number.3`.
    pub fn name(self) -> String {
        match self {
            Rule::While => "stmt.while".into(),
            Rule::If => "stmt.if".into(),
            Rule::IfElse => "stmt.ifelse".into(),
            Rule::Repeat => "stmt.repeat".into(),
            Rule::Seq => "stmt.seq".into(),
            Rule::Act => "stmt.action".into(),
            Rule::CondPlain => "cond.plain".into(),
            Rule::CondNot => "cond.not".into(),
            Rule::Percept(h) => format!("percept.{}", h.token()),
            Rule::Action(a) => format!("action.{}", a.token()),
            Rule::Number(n) => format!("number.{n}"),
        }
    }

    pub fn from_name(name: &str) -> Option<Rule> {
        let (group, item) = name.split_once('.')?;
        Some(match (group, item) {
            ("stmt", "while") => Rule::While,
            ("stmt", "if") => Rule::If,
            ("stmt", "ifelse") => Rule::IfElse,
            ("stmt", "repeat") => Rule::Repeat,
            ("stmt", "seq") => Rule::Seq,
            ("stmt", "action") => Rule::Act,
            ("cond", "plain") => Rule::CondPlain,
            ("cond", "not") => Rule::CondNot,
            ("percept", h) => Rule::Percept(Percept::from_token(h)?),
            ("action", a) => Rule::Action(Action::from_token(a)?),
            ("number", n) => Rule::Number(n.parse().ok().filter(|&n| n >= 1)?),
            _ => return None,
        })
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SamplerConfigError {
    #[error("max_depth must be at least 1")]
    ZeroDepth,
    #[error("number_cap must be at least 1")]
    ZeroNumberCap,
    #[error("weight for {0} must be finite and non-negative")]
    BadWeight(Rule),
    #[error("rule {0} is outside the configured number range")]
    NumberOutOfRange(Rule),
    #[error("every production of {0} has zero weight")]
    NoProduction(NonTerminal),
}

/// Sampler settings. Weights default to 1 (uniform per non-terminal).
#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub max_depth: usize,
    number_cap: u32,
    stmt: [f64; 6],
    cond: [f64; 2],
    percept: [f64; 5],
    action: [f64; 5],
    number: Vec<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig::new(6, DEFAULT_NUMBER_CAP)
    }
}

impl SamplerConfig {
    pub fn new(max_depth: usize, number_cap: u32) -> SamplerConfig {
        SamplerConfig {
            max_depth,
            number_cap,
            stmt: [1.0; 6],
            cond: [1.0; 2],
            percept: [1.0; 5],
            action: [1.0; 5],
            number: vec![1.0; number_cap as usize],
        }
    }

    pub fn number_cap(&self) -> u32 {
        self.number_cap
    }

    pub fn weight(&self, rule: Rule) -> f64 {
        match rule {
            Rule::Percept(h) => self.percept[h as usize],
            Rule::Action(a) => self.action[a as usize],
            Rule::CondPlain => self.cond[0],
            Rule::CondNot => self.cond[1],
            Rule::Number(n) => self.number.get(n as usize - 1).copied().unwrap_or(0.0),
            stmt => self.stmt[STMT_RULES.iter().position(|r| *r == stmt).expect("statement rule")],
        }
    }

    pub fn set_weight(&mut self, rule: Rule, w: f64) -> Result<(), SamplerConfigError> {
        if !w.is_finite() || w < 0.0 {
            return Err(SamplerConfigError::BadWeight(rule));
        }
        match rule {
            Rule::Percept(h) => self.percept[h as usize] = w,
            Rule::Action(a) => self.action[a as usize] = w,
            Rule::CondPlain => self.cond[0] = w,
            Rule::CondNot => self.cond[1] = w,
            Rule::Number(n) => {
                let slot = self
                    .number
                    .get_mut(n as usize - 1)
                    .ok_or(SamplerConfigError::NumberOutOfRange(rule))?;
                *slot = w;
            }
            stmt => {
                let i = STMT_RULES.iter().position(|r| *r == stmt).expect("statement rule");
                self.stmt[i] = w;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SamplerConfigError> {
        if self.max_depth == 0 {
            return Err(SamplerConfigError::ZeroDepth);
        }
        if self.number_cap == 0 {
            return Err(SamplerConfigError::ZeroNumberCap);
        }
        let groups: [(NonTerminal, &[f64]); 5] = [
            (NonTerminal::Stmt, &self.stmt),
            (NonTerminal::Cond, &self.cond),
            (NonTerminal::Percept, &self.percept),
            (NonTerminal::Action, &self.action),
            (NonTerminal::Number, &self.number),
        ];
        for (kind, ws) in groups {
            if !ws.iter().any(|&w| w > 0.0) {
                return Err(SamplerConfigError::NoProduction(kind));
            }
        }
        Ok(())
    }
}

/// Index drawn in proportion to `weights`; uniform when all are zero.
fn pick<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return rng.gen_range(0..weights.len());
    }
    let mut x = rng.gen::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if x < w {
            return i;
        }
        x -= w;
    }
    // rounding at the top end
    weights.iter().rposition(|&w| w > 0.0).expect("total > 0")
}

/// Samples a subtree rooted at `kind` whose statement depth (see
/// [`Node::stmt_depth`]) is at most `depth_budget`: on the last level only
/// `s → a` is expanded. `Rho` uses the config's `max_depth`. Sequences spend
/// one level of budget while sampling even though they do not add depth,
/// which keeps the expansion finite for any weights.
pub fn sample_kind<R: Rng + ?Sized>(cfg: &SamplerConfig, kind: NonTerminal, depth_budget: usize, rng: &mut R) -> Node {
    match kind {
        NonTerminal::Rho => Node::Program(Box::new(sample_stmt(cfg, cfg.max_depth.max(1), rng))),
        NonTerminal::Stmt => sample_stmt(cfg, depth_budget.max(1), rng),
        NonTerminal::Cond => {
            let h = Box::new(sample_kind(cfg, NonTerminal::Percept, 0, rng));
            if pick(&cfg.cond, rng) == 0 {
                Node::Cond(h)
            } else {
                Node::Not(h)
            }
        }
        NonTerminal::Percept => Node::Percept(Percept::ALL[pick(&cfg.percept, rng)]),
        NonTerminal::Action => Node::Action(Action::ALL[pick(&cfg.action, rng)]),
        NonTerminal::Number => Node::Number(Count::Finite(pick(&cfg.number, rng) as u32 + 1)),
    }
}

fn sample_stmt<R: Rng + ?Sized>(cfg: &SamplerConfig, budget: usize, rng: &mut R) -> Node {
    let rule = if budget <= 1 {
        Rule::Act
    } else {
        STMT_RULES[pick(&cfg.stmt, rng)]
    };
    let sub = budget - 1;
    let stmt = |rng: &mut R| Box::new(sample_stmt(cfg, sub, rng));
    let cond = |rng: &mut R| Box::new(sample_kind(cfg, NonTerminal::Cond, 0, rng));
    match rule {
        Rule::While => {
            let b = cond(rng);
            Node::While(b, stmt(rng))
        }
        Rule::If => {
            let b = cond(rng);
            Node::If(b, stmt(rng))
        }
        Rule::IfElse => {
            let b = cond(rng);
            let s1 = stmt(rng);
            Node::IfElse(b, s1, stmt(rng))
        }
        Rule::Repeat => {
            let n = Box::new(sample_kind(cfg, NonTerminal::Number, 0, rng));
            Node::Repeat(n, stmt(rng))
        }
        Rule::Seq => {
            let a = stmt(rng);
            Node::Seq(a, stmt(rng))
        }
        _ => Node::Act(Box::new(sample_kind(cfg, NonTerminal::Action, 0, rng))),
    }
}

/// Draws a program from the initial-candidate distribution.
pub fn sample_program<R: Rng + ?Sized>(cfg: &SamplerConfig, rng: &mut R) -> Program {
    Program::new(sample_kind(cfg, NonTerminal::Rho, cfg.max_depth, rng)).expect("sampler builds well-formed trees")
}
