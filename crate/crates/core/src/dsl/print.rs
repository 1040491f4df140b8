//! Concrete syntax printer. Tokens are separated by single spaces and
//! sequenced statements are juxtaposed.

use std::fmt::{self, Write};

use super::{Count, Node};

pub(super) fn write_node<W: Write>(f: &mut W, node: &Node) -> fmt::Result {
    match node {
        Node::Program(s) => {
            f.write_str("DEF run m( ")?;
            write_node(f, s)?;
            f.write_str(" m)")
        }
        Node::While(b, s) => {
            f.write_str("WHILE c( ")?;
            write_node(f, b)?;
            f.write_str(" c) w( ")?;
            write_node(f, s)?;
            f.write_str(" w)")
        }
        Node::If(b, s) => {
            f.write_str("IF c( ")?;
            write_node(f, b)?;
            f.write_str(" c) i( ")?;
            write_node(f, s)?;
            f.write_str(" i)")
        }
        Node::IfElse(b, s1, s2) => {
            f.write_str("IFELSE c( ")?;
            write_node(f, b)?;
            f.write_str(" c) i( ")?;
            write_node(f, s1)?;
            f.write_str(" i) ELSE e( ")?;
            write_node(f, s2)?;
            f.write_str(" e)")
        }
        Node::Repeat(n, s) => {
            f.write_str("REPEAT R=")?;
            write_node(f, n)?;
            f.write_str(" r( ")?;
            write_node(f, s)?;
            f.write_str(" r)")
        }
        Node::Seq(a, b) => {
            write_node(f, a)?;
            f.write_char(' ')?;
            write_node(f, b)
        }
        Node::Act(a) | Node::Cond(a) => write_node(f, a),
        Node::Not(h) => {
            f.write_str("not( ")?;
            write_node(f, h)?;
            f.write_str(" )")
        }
        Node::Percept(h) => f.write_str(h.token()),
        Node::Action(a) => f.write_str(a.token()),
        Node::Number(Count::Finite(n)) => write!(f, "{n}"),
        Node::Number(Count::Infinity) => f.write_str("infinity"),
    }
}

#[cfg(test)]
mod tests {
    use crate::dsl::{parse, Count, Node, Program};
    use crate::world::Action;

    #[test]
    fn prints_repeat() {
        let body = Node::Repeat(
            Box::new(Node::Number(Count::Finite(3))),
            Box::new(Node::action(Action::PutMarker)),
        );
        let prog = Program::new(Node::Program(Box::new(body))).unwrap();
        assert_eq!(prog.to_string(), "DEF run m( REPEAT R=3 r( putMarker r) m)");
    }

    #[test]
    fn prints_sequence_by_juxtaposition() {
        let prog = Program::new(Node::Program(Box::new(Node::seq(
            Node::action(Action::Move),
            Node::action(Action::Move),
        ))))
        .unwrap();
        let text = prog.to_string();
        assert_eq!(text, "DEF run m( move move m)");
        assert_eq!(parse(&text).unwrap(), prog);
    }

    #[test]
    fn turn_left_round_trips() {
        let text = "DEF run m( turnLeft m)";
        assert_eq!(parse(text).unwrap().to_string(), text);
    }

    #[test]
    fn every_construct_round_trips() {
        let text = "DEF run m( IFELSE c( not( markersPresent ) c) i( putMarker i) ELSE e( \
                    WHILE c( frontIsClear c) w( move w) e) IF c( leftIsClear c) i( turnLeft i) \
                    REPEAT R=infinity r( pickMarker turnRight r) m)";
        assert_eq!(parse(text).unwrap().to_string(), text);
    }
}
