//! Parsers for program text.
//!
//! [`parse`] reads the canonical token syntax (`DEF run m( ... m)`).
//! [`parse_prompt_syntax`] reads the brace form used in the prompt grammar
//! (`run { WHILE (frontIsClear) { move } }`), which is what chat models tend
//! to answer with. Both produce the same AST.

use std::fmt;

use thiserror::Error;

use super::{Count, Node, Program, DEFAULT_NUMBER_CAP};
use crate::world::{Action, Percept};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownToken(String),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnbalancedDelimiter(String),
    NumberOutOfRange(String),
    EmptyStatement,
    TrailingInput(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub struct ParseError {
    /// Byte offset of the offending token.
    pub offset: usize,
    pub kind: ParseErrorKind,
    /// Tokens that would have been accepted at `offset`.
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ParseErrorKind::UnknownToken(t) => write!(f, "unknown token {t:?}")?,
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected token {t:?}")?,
            ParseErrorKind::UnexpectedEnd => f.write_str("unexpected end of input")?,
            ParseErrorKind::UnbalancedDelimiter(t) => write!(f, "unbalanced delimiter {t:?}")?,
            ParseErrorKind::NumberOutOfRange(t) => write!(f, "repeat count {t} out of range")?,
            ParseErrorKind::EmptyStatement => f.write_str("a statement is required here")?,
            ParseErrorKind::TrailingInput(t) => write!(f, "trailing input starting at {t:?}")?,
        }
        write!(f, " at byte {}", self.offset)?;
        if !self.expected.is_empty() {
            write!(f, " (expected one of: {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    /// Bare word: keywords, percepts, actions, `run`, `R`.
    Word(String),
    /// Delimiter glued to a parenthesis, e.g. `m(` or `w)`.
    Delim(String),
    /// `R=n` repeat count, text after the `=`.
    Count(String),
    Number(String),
    Sym(char),
}

impl Tok {
    fn text(&self) -> String {
        match self {
            Tok::Word(w) | Tok::Delim(w) | Tok::Number(w) => w.clone(),
            Tok::Count(n) => format!("R={n}"),
            Tok::Sym(c) => c.to_string(),
        }
    }
}

const DELIM_NAMES: [&str; 7] = ["m", "c", "w", "i", "e", "r", "not"];

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            if i < bytes.len() && (bytes[i] == b'(' || bytes[i] == b')') && DELIM_NAMES.contains(&word) {
                i += 1;
                out.push((start, Tok::Delim(text[start..i].to_string())));
                continue;
            }
            if word == "R" {
                let mut j = i;
                while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                    j += 1;
                }
                if j < bytes.len() && bytes[j] == b'=' {
                    j += 1;
                    while j < bytes.len() && bytes[j].is_ascii_whitespace() {
                        j += 1;
                    }
                    let n0 = j;
                    while j < bytes.len() && bytes[j].is_ascii_alphanumeric() {
                        j += 1;
                    }
                    out.push((start, Tok::Count(text[n0..j].to_string())));
                    i = j;
                    continue;
                }
            }
            out.push((start, Tok::Word(word.to_string())));
        } else if ch.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            out.push((start, Tok::Number(text[start..i].to_string())));
        } else if b"(){};!,".contains(&ch) {
            i += 1;
            out.push((start, Tok::Sym(ch as char)));
        } else {
            let c = text[start..].chars().next().expect("in bounds");
            return Err(ParseError {
                offset: start,
                kind: ParseErrorKind::UnknownToken(c.to_string()),
                expected: Vec::new(),
            });
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [(usize, Tok)],
    pos: usize,
    end: usize,
    number_cap: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(o, _)| *o)
    }

    fn err(&self, kind: ParseErrorKind, expected: &[&str]) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Error for the current token when one of `expected` was wanted.
    fn unexpected(&self, expected: &[&str]) -> ParseError {
        match self.peek() {
            None => self.err(ParseErrorKind::UnexpectedEnd, expected),
            Some(Tok::Delim(d)) if d.ends_with(')') => {
                self.err(ParseErrorKind::UnbalancedDelimiter(d.clone()), expected)
            }
            Some(Tok::Sym(c @ ('}' | ')'))) => self.err(ParseErrorKind::UnbalancedDelimiter(c.to_string()), expected),
            Some(Tok::Word(w)) if !is_known_word(w) => self.err(ParseErrorKind::UnknownToken(w.clone()), expected),
            Some(t) => self.err(ParseErrorKind::UnexpectedToken(t.text()), expected),
        }
    }

    fn expect_delim(&mut self, d: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Delim(x)) if x == d => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&[d])),
        }
    }

    fn expect_word(&mut self, w: &str) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Word(x)) if x == w => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&[w])),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Sym(x)) if *x == c => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.unexpected(&[&c.to_string()])),
        }
    }

    fn eat_sym(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some(Tok::Sym(x)) if *x == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn count(&self, text: &str) -> Result<Count, ParseError> {
        if text == "infinity" {
            return Ok(Count::Infinity);
        }
        match text.parse::<u64>() {
            Ok(n) if n >= 1 && n <= self.number_cap as u64 => Ok(Count::Finite(n as u32)),
            Ok(_) => Err(self.err(ParseErrorKind::NumberOutOfRange(text.to_string()), &[])),
            Err(_) if text.bytes().all(|b| b.is_ascii_digit()) && !text.is_empty() => {
                Err(self.err(ParseErrorKind::NumberOutOfRange(text.to_string()), &[]))
            }
            Err(_) => Err(self.err(ParseErrorKind::UnexpectedToken(format!("R={text}")), &["R=<n>"])),
        }
    }

    fn percept(&mut self) -> Result<Percept, ParseError> {
        if let Some(Tok::Word(w)) = self.peek() {
            if let Some(h) = Percept::from_token(w) {
                self.pos += 1;
                return Ok(h);
            }
        }
        Err(self.unexpected(&PERCEPT_NAMES))
    }
}

const PERCEPT_NAMES: [&str; 5] = [
    "frontIsClear",
    "leftIsClear",
    "rightIsClear",
    "markersPresent",
    "noMarkersPresent",
];
const STMT_START: [&str; 10] = [
    "WHILE",
    "IF",
    "IFELSE",
    "REPEAT",
    "move",
    "turnLeft",
    "turnRight",
    "putMarker",
    "pickMarker",
    "<statement>",
];

fn is_known_word(w: &str) -> bool {
    matches!(
        w,
        "DEF" | "run" | "WHILE" | "IF" | "IFELSE" | "ELSE" | "REPEAT" | "not" | "infinity"
    ) || Action::from_token(w).is_some()
        || Percept::from_token(w).is_some()
}

fn right_nest(mut stmts: Vec<Node>) -> Node {
    let last = stmts.pop().expect("at least one statement");
    stmts.into_iter().rev().fold(last, |acc, s| Node::seq(s, acc))
}

/// Parses canonical program text with the default repeat-count cap.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    parse_with(text, DEFAULT_NUMBER_CAP)
}

/// Parses canonical program text; `R=n` must satisfy `1 <= n <= number_cap`
/// unless it is the literal `infinity`.
pub fn parse_with(text: &str, number_cap: u32) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut cur = Cursor {
        toks: &toks,
        pos: 0,
        end: text.len(),
        number_cap,
    };
    cur.expect_word("DEF")?;
    cur.expect_word("run")?;
    cur.expect_delim("m(")?;
    let body = leaps_block(&mut cur, "m)")?;
    if let Some(t) = cur.peek() {
        return Err(cur.err(ParseErrorKind::TrailingInput(t.text()), &[]));
    }
    Ok(Program::new(Node::Program(Box::new(body))).expect("parser builds well-formed trees"))
}

/// One or more statements followed by the closing delimiter `close`.
fn leaps_block(cur: &mut Cursor<'_>, close: &str) -> Result<Node, ParseError> {
    let mut stmts = Vec::new();
    loop {
        match cur.peek() {
            Some(Tok::Delim(d)) if d == close => {
                if stmts.is_empty() {
                    return Err(cur.err(ParseErrorKind::EmptyStatement, &STMT_START));
                }
                cur.pos += 1;
                return Ok(right_nest(stmts));
            }
            None => {
                let mut expected: Vec<&str> = vec![close];
                expected.extend_from_slice(&STMT_START);
                return Err(cur.err(ParseErrorKind::UnexpectedEnd, &expected));
            }
            _ => stmts.push(leaps_stmt(cur, close)?),
        }
    }
}

fn leaps_stmt(cur: &mut Cursor<'_>, close: &str) -> Result<Node, ParseError> {
    let word = match cur.peek() {
        Some(Tok::Word(w)) => w.as_str(),
        _ => {
            let mut expected: Vec<&str> = vec![close];
            expected.extend_from_slice(&STMT_START);
            return Err(cur.unexpected(&expected));
        }
    };
    if let Some(a) = Action::from_token(word) {
        cur.pos += 1;
        return Ok(Node::action(a));
    }
    match word {
        "WHILE" => {
            cur.pos += 1;
            let b = leaps_cond(cur)?;
            cur.expect_delim("w(")?;
            let s = leaps_block(cur, "w)")?;
            Ok(Node::While(Box::new(b), Box::new(s)))
        }
        "IF" | "IFELSE" => {
            let has_else = word == "IFELSE";
            cur.pos += 1;
            let b = leaps_cond(cur)?;
            cur.expect_delim("i(")?;
            let s1 = leaps_block(cur, "i)")?;
            if has_else {
                cur.expect_word("ELSE")?;
                cur.expect_delim("e(")?;
                let s2 = leaps_block(cur, "e)")?;
                Ok(Node::IfElse(Box::new(b), Box::new(s1), Box::new(s2)))
            } else {
                Ok(Node::If(Box::new(b), Box::new(s1)))
            }
        }
        "REPEAT" => {
            cur.pos += 1;
            let n = match cur.peek() {
                Some(Tok::Count(t)) => {
                    let n = cur.count(t)?;
                    cur.pos += 1;
                    n
                }
                _ => return Err(cur.unexpected(&["R=<n>"])),
            };
            cur.expect_delim("r(")?;
            let s = leaps_block(cur, "r)")?;
            Ok(Node::Repeat(Box::new(Node::Number(n)), Box::new(s)))
        }
        _ => {
            let mut expected: Vec<&str> = vec![close];
            expected.extend_from_slice(&STMT_START);
            Err(cur.unexpected(&expected))
        }
    }
}

/// `c( b c)` where `b` is `h`, `not( h )`, `not ( h )` or `not c( h c)`.
fn leaps_cond(cur: &mut Cursor<'_>) -> Result<Node, ParseError> {
    cur.expect_delim("c(")?;
    let node = match cur.peek() {
        Some(Tok::Delim(d)) if d == "not(" => {
            cur.pos += 1;
            let h = cur.percept()?;
            cur.expect_sym(')')?;
            Node::not(h)
        }
        Some(Tok::Word(w)) if w == "not" => {
            cur.pos += 1;
            let h = match cur.peek() {
                Some(Tok::Sym('(')) => {
                    cur.pos += 1;
                    let h = cur.percept()?;
                    cur.expect_sym(')')?;
                    h
                }
                Some(Tok::Delim(d)) if d == "c(" => {
                    cur.pos += 1;
                    let h = cur.percept()?;
                    cur.expect_delim("c)")?;
                    h
                }
                _ => return Err(cur.unexpected(&["(", "c("])),
            };
            Node::not(h)
        }
        _ => Node::cond(cur.percept()?),
    };
    cur.expect_delim("c)")?;
    Ok(node)
}

/// Parses the brace syntax of the prompt grammar:
///
/// ```text
/// P -> run { S }
/// S -> WHILE (B) { S } | S S | A | REPEAT R=N { S } | IF (B) { S } | IF (B) { S } ELSE { S }
/// B -> H | not H
/// ```
///
/// A leading `DEF`, `()` after `run`, actions or percepts, and `;` or `,`
/// separators are tolerated.
pub fn parse_prompt_syntax(text: &str, number_cap: u32) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    let mut cur = Cursor {
        toks: &toks,
        pos: 0,
        end: text.len(),
        number_cap,
    };
    if matches!(cur.peek(), Some(Tok::Word(w)) if w == "DEF" || w == "def") {
        cur.pos += 1;
    }
    cur.expect_word("run")?;
    if cur.eat_sym('(') {
        cur.expect_sym(')')?;
    }
    let body = brace_block(&mut cur)?;
    while cur.eat_sym(';') {}
    if let Some(t) = cur.peek() {
        return Err(cur.err(ParseErrorKind::TrailingInput(t.text()), &[]));
    }
    Ok(Program::new(Node::Program(Box::new(body))).expect("parser builds well-formed trees"))
}

fn skip_separators(cur: &mut Cursor<'_>) {
    while cur.eat_sym(';') || cur.eat_sym(',') {}
}

fn brace_block(cur: &mut Cursor<'_>) -> Result<Node, ParseError> {
    cur.expect_sym('{')?;
    let mut stmts = Vec::new();
    loop {
        skip_separators(cur);
        match cur.peek() {
            Some(Tok::Sym('}')) => {
                if stmts.is_empty() {
                    return Err(cur.err(ParseErrorKind::EmptyStatement, &STMT_START));
                }
                cur.pos += 1;
                return Ok(right_nest(stmts));
            }
            None => return Err(cur.err(ParseErrorKind::UnexpectedEnd, &["}"])),
            _ => stmts.push(brace_stmt(cur)?),
        }
    }
}

fn brace_stmt(cur: &mut Cursor<'_>) -> Result<Node, ParseError> {
    let word = match cur.peek() {
        Some(Tok::Word(w)) => w.clone(),
        _ => return Err(cur.unexpected(&STMT_START)),
    };
    if let Some(a) = Action::from_token(&word) {
        cur.pos += 1;
        if cur.eat_sym('(') {
            cur.expect_sym(')')?;
        }
        return Ok(Node::action(a));
    }
    match word.as_str() {
        "WHILE" => {
            cur.pos += 1;
            let b = brace_cond(cur)?;
            let s = brace_block(cur)?;
            Ok(Node::While(Box::new(b), Box::new(s)))
        }
        "IF" | "IFELSE" => {
            cur.pos += 1;
            let b = brace_cond(cur)?;
            let s1 = brace_block(cur)?;
            if matches!(cur.peek(), Some(Tok::Word(w)) if w == "ELSE") {
                cur.pos += 1;
                let s2 = brace_block(cur)?;
                Ok(Node::IfElse(Box::new(b), Box::new(s1), Box::new(s2)))
            } else if word == "IFELSE" {
                Err(cur.unexpected(&["ELSE"]))
            } else {
                Ok(Node::If(Box::new(b), Box::new(s1)))
            }
        }
        "REPEAT" => {
            cur.pos += 1;
            let parened = cur.eat_sym('(');
            let n = match cur.peek() {
                Some(Tok::Count(t)) | Some(Tok::Number(t)) => {
                    let n = cur.count(t)?;
                    cur.pos += 1;
                    n
                }
                Some(Tok::Word(w)) if w == "infinity" => {
                    cur.pos += 1;
                    Count::Infinity
                }
                _ => return Err(cur.unexpected(&["R=<n>"])),
            };
            if parened {
                cur.expect_sym(')')?;
            }
            let s = brace_block(cur)?;
            Ok(Node::Repeat(Box::new(Node::Number(n)), Box::new(s)))
        }
        _ => Err(cur.unexpected(&STMT_START)),
    }
}

/// `(B)` where B is `H`, `not H`, `not (H)` or `!H`; `H()` is accepted.
fn brace_cond(cur: &mut Cursor<'_>) -> Result<Node, ParseError> {
    cur.expect_sym('(')?;
    let negated = if matches!(cur.peek(), Some(Tok::Word(w)) if w == "not") || cur.eat_sym('!') {
        if matches!(cur.peek(), Some(Tok::Word(w)) if w == "not") {
            cur.pos += 1;
        }
        true
    } else {
        false
    };
    // `not(` lexes as a glued delimiter
    let glued = matches!(cur.peek(), Some(Tok::Delim(d)) if d == "not(");
    if glued {
        cur.pos += 1;
    }
    let inner_paren = !glued && negated && cur.eat_sym('(');
    let h = cur.percept()?;
    if cur.eat_sym('(') {
        cur.expect_sym(')')?;
    }
    if glued || inner_paren {
        cur.expect_sym(')')?;
    }
    cur.expect_sym(')')?;
    Ok(if negated || glued { Node::not(h) } else { Node::cond(h) })
}
