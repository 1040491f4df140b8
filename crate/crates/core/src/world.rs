//! Deterministic Karel gridworld.
//!
//! Row 0 is the top of the grid and `North` decreases the row index. Moving
//! into a wall or off the grid is a crash: the pose stays put, `crashed` is set
//! and the state accepts no further actions.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Default per-cell marker capacity.
pub const MARKER_CAP: u8 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    #[serde(rename = "move")]
    Move,
    #[serde(rename = "turnLeft")]
    TurnLeft,
    #[serde(rename = "turnRight")]
    TurnRight,
    #[serde(rename = "putMarker")]
    PutMarker,
    #[serde(rename = "pickMarker")]
    PickMarker,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::Move,
        Action::TurnLeft,
        Action::TurnRight,
        Action::PutMarker,
        Action::PickMarker,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Action::Move => "move",
            Action::TurnLeft => "turnLeft",
            Action::TurnRight => "turnRight",
            Action::PutMarker => "putMarker",
            Action::PickMarker => "pickMarker",
        }
    }

    pub fn from_token(tok: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.token() == tok)
    }

    /// Stable small integer used in signatures and hashes.
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Percept {
    #[serde(rename = "frontIsClear")]
    FrontIsClear,
    #[serde(rename = "leftIsClear")]
    LeftIsClear,
    #[serde(rename = "rightIsClear")]
    RightIsClear,
    #[serde(rename = "markersPresent")]
    MarkersPresent,
    #[serde(rename = "noMarkersPresent")]
    NoMarkersPresent,
}

impl Percept {
    pub const ALL: [Percept; 5] = [
        Percept::FrontIsClear,
        Percept::LeftIsClear,
        Percept::RightIsClear,
        Percept::MarkersPresent,
        Percept::NoMarkersPresent,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Percept::FrontIsClear => "frontIsClear",
            Percept::LeftIsClear => "leftIsClear",
            Percept::RightIsClear => "rightIsClear",
            Percept::MarkersPresent => "markersPresent",
            Percept::NoMarkersPresent => "noMarkersPresent",
        }
    }

    pub fn from_token(tok: &str) -> Option<Percept> {
        Percept::ALL.into_iter().find(|p| p.token() == tok)
    }
}

impl fmt::Display for Percept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    N,
    E,
    S,
    W,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::N, Direction::E, Direction::S, Direction::W];

    pub fn left(self) -> Direction {
        match self {
            Direction::N => Direction::W,
            Direction::W => Direction::S,
            Direction::S => Direction::E,
            Direction::E => Direction::N,
        }
    }

    pub fn right(self) -> Direction {
        match self {
            Direction::N => Direction::E,
            Direction::E => Direction::S,
            Direction::S => Direction::W,
            Direction::W => Direction::N,
        }
    }

    /// (row, col) offset of one step in this direction.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Direction::N => (-1, 0),
            Direction::E => (0, 1),
            Direction::S => (1, 0),
            Direction::W => (0, -1),
        }
    }

    fn glyph(self) -> char {
        match self {
            Direction::N => '^',
            Direction::E => '>',
            Direction::S => 'v',
            Direction::W => '<',
        }
    }
}

/// Knobs of the transition function that are not part of the grid itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rules {
    pub marker_cap: u8,
    /// `pickMarker` on an empty cell crashes instead of being a no-op.
    pub strict_pick: bool,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            marker_cap: MARKER_CAP,
            strict_pick: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    markers: Vec<u8>,
    row: usize,
    col: usize,
    dir: Direction,
    crashed: bool,
    #[serde(default)]
    rules: Rules,
}

impl WorldState {
    /// An empty grid with the agent at `(row, col)` facing `dir`.
    pub fn empty(width: usize, height: usize, row: usize, col: usize, dir: Direction) -> Self {
        assert!(width > 0 && height > 0, "grid must be non-empty");
        assert!(row < height && col < width, "agent outside grid");
        WorldState {
            width,
            height,
            walls: vec![false; width * height],
            markers: vec![0; width * height],
            row,
            col,
            dir,
            crashed: false,
            rules: Rules::default(),
        }
    }

    pub fn with_rules(mut self, rules: Rules) -> Self {
        self.rules = rules;
        self
    }

    pub fn rules(&self) -> Rules {
        self.rules
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cells(&self) -> usize {
        self.width * self.height
    }

    pub fn agent(&self) -> (usize, usize) {
        (self.row, self.col)
    }

    pub fn dir(&self) -> Direction {
        self.dir
    }

    pub fn crashed(&self) -> bool {
        self.crashed
    }

    #[inline]
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.width + col
    }

    pub fn in_bounds(&self, row: i32, col: i32) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.height && (col as usize) < self.width
    }

    pub fn is_wall(&self, row: usize, col: usize) -> bool {
        self.walls[self.index(row, col)]
    }

    pub fn set_wall(&mut self, row: usize, col: usize, wall: bool) {
        let i = self.index(row, col);
        self.walls[i] = wall;
    }

    pub fn markers_at(&self, row: usize, col: usize) -> u8 {
        self.markers[self.index(row, col)]
    }

    pub fn set_markers(&mut self, row: usize, col: usize, count: u8) {
        let i = self.index(row, col);
        self.markers[i] = count.min(self.rules.marker_cap);
    }

    pub fn total_markers(&self) -> u32 {
        self.markers.iter().map(|&m| m as u32).sum()
    }

    pub fn wall_count(&self) -> usize {
        self.walls.iter().filter(|&&w| w).count()
    }

    /// Places the agent; used by task generators before an episode starts.
    pub fn place_agent(&mut self, row: usize, col: usize, dir: Direction) {
        assert!(row < self.height && col < self.width, "agent outside grid");
        self.row = row;
        self.col = col;
        self.dir = dir;
    }

    /// True when the cell one step from the agent in `dir` is inside the grid
    /// and not a wall.
    fn clear_towards(&self, dir: Direction) -> bool {
        let (dr, dc) = dir.delta();
        let (r, c) = (self.row as i32 + dr, self.col as i32 + dc);
        self.in_bounds(r, c) && !self.walls[self.index(r as usize, c as usize)]
    }

    pub fn perceive(&self, h: Percept) -> bool {
        match h {
            Percept::FrontIsClear => self.clear_towards(self.dir),
            Percept::LeftIsClear => self.clear_towards(self.dir.left()),
            Percept::RightIsClear => self.clear_towards(self.dir.right()),
            Percept::MarkersPresent => self.markers[self.index(self.row, self.col)] > 0,
            Percept::NoMarkersPresent => self.markers[self.index(self.row, self.col)] == 0,
        }
    }

    /// Applies `a` in place.
    ///
    /// Panics if the state has already crashed.
    pub fn step(&mut self, a: Action) {
        assert!(!self.crashed, "action applied to a crashed state");
        match a {
            Action::Move => {
                if self.clear_towards(self.dir) {
                    let (dr, dc) = self.dir.delta();
                    self.row = (self.row as i32 + dr) as usize;
                    self.col = (self.col as i32 + dc) as usize;
                } else {
                    self.crashed = true;
                }
            }
            Action::TurnLeft => self.dir = self.dir.left(),
            Action::TurnRight => self.dir = self.dir.right(),
            Action::PutMarker => {
                let i = self.index(self.row, self.col);
                if self.markers[i] < self.rules.marker_cap {
                    self.markers[i] += 1;
                }
            }
            Action::PickMarker => {
                let i = self.index(self.row, self.col);
                if self.markers[i] > 0 {
                    self.markers[i] -= 1;
                } else if self.rules.strict_pick {
                    self.crashed = true;
                }
            }
        }
    }

    /// Pure form of [`WorldState::step`].
    pub fn apply_action(&self, a: Action) -> WorldState {
        let mut next = self.clone();
        next.step(a);
        next
    }

    /// ASCII rendering: `#` wall, `.` empty, digits for marker counts (`X`
    /// for ten or more), `^>v<` for the agent, `*` for a crashed agent.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                let i = self.index(r, c);
                let ch = if (r, c) == (self.row, self.col) {
                    if self.crashed {
                        '*'
                    } else {
                        self.dir.glyph()
                    }
                } else if self.walls[i] {
                    '#'
                } else {
                    match self.markers[i] {
                        0 => '.',
                        m @ 1..=9 => (b'0' + m) as char,
                        _ => 'X',
                    }
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`WorldState::render`] for grids whose agent cell holds no
    /// markers. Intended for fixtures.
    pub fn from_ascii(text: &str) -> Result<WorldState, String> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = lines.len();
        if height == 0 {
            return Err("empty grid".into());
        }
        let width = lines[0].chars().count();
        let mut world = WorldState::empty(width, height, 0, 0, Direction::E);
        let mut agent = None;
        for (r, line) in lines.iter().enumerate() {
            if line.chars().count() != width {
                return Err(format!("row {r} has a different width"));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '#' => world.set_wall(r, c, true),
                    '.' => {}
                    '1'..='9' => world.set_markers(r, c, ch as u8 - b'0'),
                    'X' => world.set_markers(r, c, MARKER_CAP),
                    '^' | '>' | 'v' | '<' => {
                        let dir = match ch {
                            '^' => Direction::N,
                            '>' => Direction::E,
                            'v' => Direction::S,
                            _ => Direction::W,
                        };
                        if agent.replace((r, c, dir)).is_some() {
                            return Err("more than one agent".into());
                        }
                    }
                    other => return Err(format!("unexpected glyph {other:?}")),
                }
            }
        }
        let (r, c, d) = agent.ok_or("no agent")?;
        world.place_agent(r, c, d);
        Ok(world)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(w: usize, h: usize) -> WorldState {
        WorldState::empty(w, h, 1, 1, Direction::N)
    }

    #[test]
    fn four_left_turns_is_identity() {
        let s = open(4, 4);
        let mut t = s.clone();
        for _ in 0..4 {
            t.step(Action::TurnLeft);
        }
        assert_eq!(s, t);
    }

    #[test]
    fn move_into_wall_crashes_in_place() {
        let mut s = WorldState::from_ascii("....\n.#..\n.^..\n....").unwrap();
        s.step(Action::Move);
        assert!(s.crashed());
        assert_eq!(s.agent(), (2, 1));
    }

    #[test]
    fn move_off_grid_crashes() {
        let mut s = WorldState::empty(3, 3, 0, 0, Direction::N);
        assert!(!s.perceive(Percept::FrontIsClear));
        s.step(Action::Move);
        assert!(s.crashed());
        assert_eq!(s.agent(), (0, 0));
    }

    #[test]
    fn put_then_pick_restores_count() {
        let s = open(4, 4);
        let t = s.apply_action(Action::PutMarker).apply_action(Action::PickMarker);
        assert_eq!(s, t);
    }

    #[test]
    fn put_saturates_and_pick_floors() {
        let mut s = open(2, 2);
        for _ in 0..(MARKER_CAP as usize + 3) {
            s.step(Action::PutMarker);
        }
        assert_eq!(s.markers_at(1, 1), MARKER_CAP);
        let mut e = open(2, 2);
        e.step(Action::PickMarker);
        assert_eq!(e.markers_at(1, 1), 0);
        assert!(!e.crashed());
    }

    #[test]
    fn strict_pick_crashes_on_empty_cell() {
        let mut s = open(2, 2).with_rules(Rules {
            strict_pick: true,
            ..Rules::default()
        });
        s.step(Action::PickMarker);
        assert!(s.crashed());
    }

    #[test]
    #[should_panic(expected = "crashed")]
    fn stepping_a_crashed_state_panics() {
        let mut s = WorldState::empty(1, 1, 0, 0, Direction::N);
        s.step(Action::Move);
        s.step(Action::TurnLeft);
    }

    #[test]
    fn marker_percepts_are_complementary() {
        let mut s = open(3, 3);
        for _ in 0..3 {
            assert_ne!(
                s.perceive(Percept::MarkersPresent),
                s.perceive(Percept::NoMarkersPresent)
            );
            s.step(Action::PutMarker);
        }
    }

    #[test]
    fn render_round_trips() {
        let text = "#..2\n.>..\n..X.\n####\n";
        let s = WorldState::from_ascii(text).unwrap();
        assert_eq!(s.render(), text);
        assert_eq!(s.agent(), (1, 1));
        assert_eq!(s.dir(), Direction::E);
    }
}
