//! The Karel DSL: grammar symbols, AST, concrete syntax and the random
//! program sampler.
//!
//! ```text
//! ρ := DEF run m( s m)
//! s := WHILE c( b c) w( s w) | IF c( b c) i( s i)
//!    | IFELSE c( b c) i( s i) ELSE e( s e) | REPEAT R=n r( s r) | s s | a
//! b := h | not( h )
//! n := 1 | 2 | ... | infinity
//! h := frontIsClear | leftIsClear | rightIsClear | markersPresent | noMarkersPresent
//! a := move | turnLeft | turnRight | putMarker | pickMarker
//! ```
//!
//! Every AST node is labelled with one of the six non-terminals above; the
//! terminal tokens live inside the `Percept`, `Action` and `Number` nodes.
//! Node handles ([`NodeId`]) are pre-order indices, root first.

mod parse;
mod print;
mod sample;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::world::{Action, Percept};

pub use parse::{parse, parse_prompt_syntax, parse_with, ParseError, ParseErrorKind};
pub use sample::{sample_kind, sample_program, Rule, SamplerConfig, SamplerConfigError};

/// Default upper bound for `REPEAT R=n`.
pub const DEFAULT_NUMBER_CAP: u32 = 19;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NonTerminal {
    Rho,
    Stmt,
    Cond,
    Percept,
    Action,
    Number,
}

impl NonTerminal {
    pub const ALL: [NonTerminal; 6] = [
        NonTerminal::Rho,
        NonTerminal::Stmt,
        NonTerminal::Cond,
        NonTerminal::Percept,
        NonTerminal::Action,
        NonTerminal::Number,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NonTerminal::Rho => "Rho",
            NonTerminal::Stmt => "Stmt",
            NonTerminal::Cond => "Cond",
            NonTerminal::Percept => "Percept",
            NonTerminal::Action => "Action",
            NonTerminal::Number => "Number",
        }
    }

    pub fn from_name(name: &str) -> Option<NonTerminal> {
        NonTerminal::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Kinds whose subtrees can issue actions when run on their own.
    pub fn is_action_capable(self) -> bool {
        matches!(self, NonTerminal::Rho | NonTerminal::Stmt | NonTerminal::Action)
    }
}

impl fmt::Display for NonTerminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Repetition count of a `REPEAT` statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Count {
    Finite(u32),
    Infinity,
}

/// One AST node. Each variant is one production of the grammar.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    /// ρ → `DEF run m( s m)`
    Program(Box<Node>),
    /// s → `WHILE c( b c) w( s w)`
    While(Box<Node>, Box<Node>),
    /// s → `IF c( b c) i( s i)`
    If(Box<Node>, Box<Node>),
    /// s → `IFELSE c( b c) i( s i) ELSE e( s e)`
    IfElse(Box<Node>, Box<Node>, Box<Node>),
    /// s → `REPEAT R=n r( s r)`
    Repeat(Box<Node>, Box<Node>),
    /// s → `s s`
    Seq(Box<Node>, Box<Node>),
    /// s → `a`
    Act(Box<Node>),
    /// b → `h`
    Cond(Box<Node>),
    /// b → `not( h )`
    Not(Box<Node>),
    Percept(Percept),
    Action(Action),
    Number(Count),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("cannot replace a {at} node with a {with} subtree")]
    TypeMismatch { at: NonTerminal, with: NonTerminal },
    #[error("node handle {0} is out of range")]
    BadHandle(usize),
    #[error("malformed tree: {0}")]
    Malformed(String),
}

impl Node {
    pub fn kind(&self) -> NonTerminal {
        match self {
            Node::Program(_) => NonTerminal::Rho,
            Node::While(..) | Node::If(..) | Node::IfElse(..) | Node::Repeat(..) | Node::Seq(..) | Node::Act(_) => {
                NonTerminal::Stmt
            }
            Node::Cond(_) | Node::Not(_) => NonTerminal::Cond,
            Node::Percept(_) => NonTerminal::Percept,
            Node::Action(_) => NonTerminal::Action,
            Node::Number(_) => NonTerminal::Number,
        }
    }

    pub fn action(a: Action) -> Node {
        Node::Act(Box::new(Node::Action(a)))
    }

    pub fn seq(a: Node, b: Node) -> Node {
        Node::Seq(Box::new(a), Box::new(b))
    }

    pub fn cond(h: Percept) -> Node {
        Node::Cond(Box::new(Node::Percept(h)))
    }

    pub fn not(h: Percept) -> Node {
        Node::Not(Box::new(Node::Percept(h)))
    }

    pub fn children(&self) -> Children<'_> {
        let mut out = Children {
            nodes: [None; 3],
            next: 0,
        };
        let slots: &[&Node] = match self {
            Node::Program(a) | Node::Act(a) | Node::Cond(a) | Node::Not(a) => &[a],
            Node::While(a, b) | Node::If(a, b) | Node::Repeat(a, b) | Node::Seq(a, b) => &[a, b],
            Node::IfElse(a, b, c) => &[a, b, c],
            Node::Percept(_) | Node::Action(_) | Node::Number(_) => &[],
        };
        for (slot, n) in out.nodes.iter_mut().zip(slots) {
            *slot = Some(*n);
        }
        out
    }

    fn children_mut(&mut self) -> Vec<&mut Node> {
        match self {
            Node::Program(a) | Node::Act(a) | Node::Cond(a) | Node::Not(a) => vec![a],
            Node::While(a, b) | Node::If(a, b) | Node::Repeat(a, b) | Node::Seq(a, b) => {
                vec![a, b]
            }
            Node::IfElse(a, b, c) => vec![a, b, c],
            Node::Percept(_) | Node::Action(_) | Node::Number(_) => Vec::new(),
        }
    }

    /// Number of nodes in this subtree (every node is a non-terminal node).
    pub fn size(&self) -> usize {
        1 + self.children().map(Node::size).sum::<usize>()
    }

    /// Deepest nesting level of statement nodes. The body of a program is
    /// level 1; the bodies of loops and branches are one level below their
    /// statement. Sequencing does not nest: the statements of `s s` sit at the
    /// level of the sequence itself, so re-associating sequences never changes
    /// the depth.
    pub fn stmt_depth(&self) -> usize {
        fn go(n: &Node, level: usize) -> usize {
            match n {
                Node::Program(body) => go(body, 1),
                Node::Seq(a, b) => go(a, level).max(go(b, level)),
                _ if n.kind() == NonTerminal::Stmt => {
                    n.children().map(|c| go(c, level + 1)).max().unwrap_or(0).max(level)
                }
                _ => n.children().map(|c| go(c, level)).max().unwrap_or(0),
            }
        }
        go(self, if self.kind() == NonTerminal::Rho { 0 } else { 1 })
    }

    /// Checks that every child has the kind its production requires.
    pub fn check(&self) -> Result<(), DslError> {
        use NonTerminal as K;
        let expect = |n: &Node, k: NonTerminal, what: &str| -> Result<(), DslError> {
            if n.kind() == k {
                n.check()
            } else {
                Err(DslError::Malformed(format!("{what} expects {k}, found {}", n.kind())))
            }
        };
        match self {
            Node::Program(s) => expect(s, K::Stmt, "program body"),
            Node::While(b, s) | Node::If(b, s) => {
                expect(b, K::Cond, "condition")?;
                expect(s, K::Stmt, "loop/branch body")
            }
            Node::IfElse(b, s1, s2) => {
                expect(b, K::Cond, "condition")?;
                expect(s1, K::Stmt, "then branch")?;
                expect(s2, K::Stmt, "else branch")
            }
            Node::Repeat(n, s) => {
                expect(n, K::Number, "repeat count")?;
                expect(s, K::Stmt, "repeat body")
            }
            Node::Seq(a, b) => {
                expect(a, K::Stmt, "sequence")?;
                expect(b, K::Stmt, "sequence")
            }
            Node::Act(a) => expect(a, K::Action, "action statement"),
            Node::Cond(h) | Node::Not(h) => expect(h, K::Percept, "condition"),
            Node::Number(Count::Finite(0)) => Err(DslError::Malformed("repeat count 0".into())),
            Node::Percept(_) | Node::Action(_) | Node::Number(_) => Ok(()),
        }
    }

    /// The node at pre-order position `idx` (0 is `self`).
    pub fn get(&self, idx: usize) -> Option<&Node> {
        if idx == 0 {
            return Some(self);
        }
        let mut offset = 1;
        for child in self.children() {
            let size = child.size();
            if idx < offset + size {
                return child.get(idx - offset);
            }
            offset += size;
        }
        None
    }

    fn get_mut(&mut self, idx: usize) -> Option<&mut Node> {
        if idx == 0 {
            return Some(self);
        }
        let mut offset = 1;
        for child in self.children_mut() {
            let size = child.size();
            if idx < offset + size {
                return child.get_mut(idx - offset);
            }
            offset += size;
        }
        None
    }

    /// Statement level of the node at `idx` (program body = 1, see
    /// [`Node::stmt_depth`]). Non-statement nodes report the level of their
    /// enclosing statement; the root reports 0 when it is `ρ`.
    pub fn depth_of(&self, idx: usize) -> Option<usize> {
        fn go(n: &Node, idx: usize, level: usize) -> Option<usize> {
            if idx == 0 {
                return Some(level);
            }
            let mut offset = 1;
            for child in n.children() {
                let size = child.size();
                if idx < offset + size {
                    let child_level = match n {
                        Node::Program(_) => 1,
                        Node::Seq(..) => level,
                        _ if child.kind() == NonTerminal::Stmt => level + 1,
                        _ => level,
                    };
                    return go(child, idx - offset, child_level);
                }
                offset += size;
            }
            None
        }
        go(self, idx, if self.kind() == NonTerminal::Rho { 0 } else { 1 })
    }

    /// All nodes in pre-order.
    pub fn preorder(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            let kids: Vec<&Node> = n.children().collect();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    /// Canonical form: chains of sequenced statements nest to the right, which
    /// is the shape the parser produces for juxtaposed statements.
    pub fn normalized(&self) -> Node {
        fn flatten(n: &Node, out: &mut Vec<Node>) {
            match n {
                Node::Seq(a, b) => {
                    flatten(a, out);
                    flatten(b, out);
                }
                other => out.push(other.normalized()),
            }
        }
        match self {
            Node::Seq(..) => {
                let mut items = Vec::new();
                flatten(self, &mut items);
                let mut it = items.into_iter().rev();
                let last = it.next().expect("a sequence has two statements");
                it.fold(last, |acc, s| Node::seq(s, acc))
            }
            Node::Program(a) => Node::Program(Box::new(a.normalized())),
            Node::While(a, b) => Node::While(Box::new(a.normalized()), Box::new(b.normalized())),
            Node::If(a, b) => Node::If(Box::new(a.normalized()), Box::new(b.normalized())),
            Node::IfElse(a, b, c) => Node::IfElse(
                Box::new(a.normalized()),
                Box::new(b.normalized()),
                Box::new(c.normalized()),
            ),
            Node::Repeat(a, b) => Node::Repeat(Box::new(a.normalized()), Box::new(b.normalized())),
            Node::Act(_) | Node::Cond(_) | Node::Not(_) => self.clone(),
            Node::Percept(_) | Node::Action(_) | Node::Number(_) => self.clone(),
        }
    }

    pub fn is_normalized(&self) -> bool {
        match self {
            Node::Seq(a, b) => !matches!(**a, Node::Seq(..)) && a.is_normalized() && b.is_normalized(),
            _ => self.children().all(Node::is_normalized),
        }
    }

    /// Copy of `self` with the subtree at `idx` swapped for `with`.
    pub fn replace(&self, idx: usize, with: Node) -> Result<Node, DslError> {
        let at = self.get(idx).ok_or(DslError::BadHandle(idx))?.kind();
        if at != with.kind() {
            return Err(DslError::TypeMismatch { at, with: with.kind() });
        }
        let mut out = self.clone();
        *out.get_mut(idx).expect("index checked above") = with;
        Ok(out)
    }
}

pub struct Children<'a> {
    nodes: [Option<&'a Node>; 3],
    next: usize,
}

impl<'a> Iterator for Children<'a> {
    type Item = &'a Node;

    fn next(&mut self) -> Option<&'a Node> {
        let n = self.nodes.get(self.next).copied().flatten()?;
        self.next += 1;
        Some(n)
    }
}

/// Handle to a node of a specific [`Program`]: its pre-order index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub usize);

/// A complete program: an AST whose root is the `ρ` production.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    root: Node,
}

impl Program {
    pub fn new(root: Node) -> Result<Program, DslError> {
        if root.kind() != NonTerminal::Rho {
            return Err(DslError::Malformed(format!(
                "program root must be Rho, found {}",
                root.kind()
            )));
        }
        root.check()?;
        Ok(Program {
            root: root.normalized(),
        })
    }

    /// Wraps an action-capable subtree so it can be run on its own:
    /// `Stmt` and `Action` subtrees become the body of a fresh program.
    pub fn from_subtree(node: &Node) -> Option<Program> {
        let root = match node.kind() {
            NonTerminal::Rho => node.normalized(),
            NonTerminal::Stmt => Node::Program(Box::new(node.normalized())),
            NonTerminal::Action => Node::Program(Box::new(Node::Act(Box::new(node.clone())))),
            _ => return None,
        };
        Some(Program { root })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn body(&self) -> &Node {
        match &self.root {
            Node::Program(s) => s,
            _ => unreachable!("program root is always Rho"),
        }
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    /// Number of non-terminal nodes, root included.
    pub fn node_count(&self) -> usize {
        self.root.size()
    }

    pub fn stmt_depth(&self) -> usize {
        self.root.stmt_depth()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.root.get(id.0)
    }

    /// One entry per non-terminal node: the node's kind and a detached copy
    /// of the subtree rooted there.
    ///
    /// Order: the body's subtrees in pre-order, then the whole program.
    /// Option filtering keeps the first member of each behaviour class, and
    /// listing the `Rho` root last lets the equivalent body statement (which
    /// can be substituted at any statement node) win that tie.
    pub fn subprograms(&self) -> Vec<(NonTerminal, Node)> {
        let mut out: Vec<(NonTerminal, Node)> = self
            .body()
            .preorder()
            .into_iter()
            .map(|n| (n.kind(), n.clone()))
            .collect();
        out.push((NonTerminal::Rho, self.root.clone()));
        out
    }

    /// A uniformly chosen non-terminal node, root included.
    pub fn random_nonterminal_node<R: Rng + ?Sized>(&self, rng: &mut R) -> NodeId {
        NodeId(rng.gen_range(0..self.node_count()))
    }

    /// New program with the subtree at `at` replaced by `with`. The kinds of
    /// the two roots must match. The result is re-normalized, so a sequence
    /// spliced into the left slot of another sequence is flattened.
    pub fn replace_subtree(&self, at: NodeId, with: Node) -> Result<Program, DslError> {
        let root = self.root.replace(at.0, with)?;
        root.check()?;
        Ok(Program {
            root: root.normalized(),
        })
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_node(f, &self.root)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print::write_node(f, self)
    }
}

impl std::str::FromStr for Program {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
