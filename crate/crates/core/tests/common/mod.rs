#![allow(dead_code)]

use std::collections::VecDeque;

use innatecoder::tasks::{stair_contour, Ctx, TaskId, TaskInstance};
use innatecoder::world::{Action, Direction, Percept, WorldState};
use rand::Rng;

/// Pose after a step as a table lookup: (row, col, heading 0..4 clockwise
/// from north, markers here, crashed).
pub type Outcome = (i32, i32, usize, u8, bool);

pub fn oracle(walls: &[(i32, i32)], n: i32, pose: (i32, i32, usize), markers: u8, a: Action) -> Outcome {
    const DR: [i32; 4] = [-1, 0, 1, 0];
    const DC: [i32; 4] = [0, 1, 0, -1];
    let (r, c, h) = pose;
    let blocked = |r: i32, c: i32| r < 0 || c < 0 || r >= n || c >= n || walls.contains(&(r, c));
    match a {
        Action::Move => {
            let (nr, nc) = (r + DR[h], c + DC[h]);
            if blocked(nr, nc) {
                (r, c, h, markers, true)
            } else {
                // Only the start cell holds markers.
                (nr, nc, h, 0, false)
            }
        }
        Action::TurnLeft => (r, c, (h + 3) % 4, markers, false),
        Action::TurnRight => (r, c, (h + 1) % 4, markers, false),
        Action::PutMarker => (r, c, h, (markers + 1).min(10), false),
        Action::PickMarker => (r, c, h, markers.saturating_sub(1), false),
    }
}

pub fn heading(d: Direction) -> usize {
    Direction::ALL.iter().position(|&x| x == d).unwrap()
}

/// Checks every 4x4 pose, neighbour wall pattern, heading, marker count and
/// action against `oracle`; returns the number of transitions checked.
pub fn check_four_by_four() -> usize {
    let n = 4;
    let mut rows = 0;
    for r in 0..n {
        for c in 0..n {
            // Every wall pattern over the four neighbours of the agent.
            let nbrs = [(r - 1, c), (r, c + 1), (r + 1, c), (r, c - 1)];
            for mask in 0..16u32 {
                let walls: Vec<(i32, i32)> = nbrs
                    .iter()
                    .enumerate()
                    .filter(|&(i, &(a, b))| mask >> i & 1 == 1 && a >= 0 && b >= 0 && a < n && b < n)
                    .map(|(_, &p)| p)
                    .collect();
                for dir in Direction::ALL {
                    for markers in [0u8, 1, 9, 10] {
                        let mut s = WorldState::empty(4, 4, r as usize, c as usize, dir);
                        for &(a, b) in &walls {
                            s.set_wall(a as usize, b as usize, true);
                        }
                        s.set_markers(r as usize, c as usize, markers);
                        for a in Action::ALL {
                            let t = s.apply_action(a);
                            let (er, ec, eh, em, ecrash) = oracle(&walls, n, (r, c, heading(dir)), markers, a);
                            let (tr, tc) = t.agent();
                            assert_eq!(
                                (
                                    tr as i32,
                                    tc as i32,
                                    heading(t.dir()),
                                    t.markers_at(tr, tc),
                                    t.crashed()
                                ),
                                (er, ec, eh, em, ecrash),
                                "{a} from ({r},{c},{dir:?}) walls {walls:?} markers {markers}"
                            );
                            rows += 1;
                        }
                        // Percepts against the same geometry.
                        let h = heading(dir);
                        let clear = |k: usize| {
                            let (dr, dc) = [(-1, 0), (0, 1), (1, 0), (0, -1)][k];
                            let (a, b) = (r + dr, c + dc);
                            a >= 0 && b >= 0 && a < n && b < n && !walls.contains(&(a, b))
                        };
                        assert_eq!(s.perceive(Percept::FrontIsClear), clear(h));
                        assert_eq!(s.perceive(Percept::LeftIsClear), clear((h + 3) % 4));
                        assert_eq!(s.perceive(Percept::RightIsClear), clear((h + 1) % 4));
                        assert_eq!(s.perceive(Percept::MarkersPresent), markers > 0);
                        assert_eq!(s.perceive(Percept::NoMarkersPresent), markers == 0);
                    }
                }
            }
        }
    }
    rows
}

pub fn reachable(w: &WorldState, from: (usize, usize)) -> Vec<bool> {
    let mut seen = vec![false; w.cells()];
    let mut q = VecDeque::from([from]);
    seen[w.index(from.0, from.1)] = true;
    while let Some((r, c)) = q.pop_front() {
        for (dr, dc) in [(-1i32, 0i32), (1, 0), (0, -1), (0, 1)] {
            let (nr, nc) = (r as i32 + dr, c as i32 + dc);
            if !w.in_bounds(nr, nc) {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            if !w.is_wall(nr, nc) && !seen[w.index(nr, nc)] {
                seen[w.index(nr, nc)] = true;
                q.push_back((nr, nc));
            }
        }
    }
    seen
}

/// Return recomputed from the final grid alone.
pub fn closed_form(t: &TaskInstance) -> f64 {
    let w = t.world();
    let cells = w.cells() as f64;
    let all = || (0..w.height()).flat_map(move |r| (0..w.width()).map(move |c| (r, c)));
    let base = match t.ctx() {
        Ctx::StairClimber { target, .. } => {
            if w.agent() == *target {
                1.0
            } else if !stair_contour().contains(&w.agent()) {
                -1.0
            } else {
                0.0
            }
        }
        Ctx::FourCorners { .. } => {
            let n = w.width() - 1;
            [(0, 0), (0, n), (n, 0), (n, n)]
                .iter()
                .filter(|&&(r, c)| w.markers_at(r, c) == 1)
                .count() as f64
                / 4.0
        }
        Ctx::TopOff { targets, .. } => {
            targets.iter().filter(|&&(r, c)| w.markers_at(r, c) == 2).count() as f64 / targets.len() as f64
        }
        Ctx::Maze { target, .. } => (w.agent() == *target) as u8 as f64,
        Ctx::Collect { .. } => {
            let start = if t.id() == TaskId::Harvester { 64.0 } else { 10.0 };
            (start - w.total_markers() as f64).max(0.0) / start
        }
        Ctx::DoorKey { right, .. } => {
            let open = !w.is_wall(3, 4);
            0.5 * open as u8 as f64 + 0.5 * (open && w.markers_at(right.0, right.1) == 0) as u8 as f64
        }
        Ctx::OneStroke { .. } => w.wall_count() as f64 / cells,
        Ctx::Seeder { .. } => all().filter(|&(r, c)| w.markers_at(r, c) == 1).count() as f64 / cells,
        Ctx::Snake { .. } => w.wall_count() as f64 / 20.0,
    };
    if w.crashed() && t.id() != TaskId::OneStroke {
        base - t.crash_penalty()
    } else {
        base
    }
}

/// Biased random walk: mostly moves, so episodes actually travel.
pub fn random_action<R: Rng>(rng: &mut R) -> Action {
    match rng.gen_range(0..10) {
        0..=3 => Action::Move,
        4 => Action::TurnLeft,
        5 => Action::TurnRight,
        6 | 7 => Action::PutMarker,
        _ => Action::PickMarker,
    }
}

/// Counts non-terminal nodes from the printed token stream alone.
///
/// `DEF` is the program, each control keyword one statement, every action
/// token an `Act` plus its `Action`, every percept a `Cond`/`Not` plus its
/// `Percept`, every `R=n` a `Number`; a body holding k statements adds k-1
/// sequence nodes.
pub fn count_from_tokens(text: &str) -> usize {
    let mut count = 0;
    let mut blocks: Vec<Option<usize>> = Vec::new();
    let stmt = |blocks: &mut Vec<Option<usize>>| {
        if let Some(Some(k)) = blocks.last_mut() {
            *k += 1;
        }
    };
    for tok in text.split_whitespace() {
        match tok {
            "DEF" => count += 1,
            "run" | "ELSE" => {}
            "WHILE" | "IF" | "IFELSE" | "REPEAT" => {
                count += 1;
                stmt(&mut blocks);
            }
            "m(" | "w(" | "i(" | "e(" | "r(" => blocks.push(Some(0)),
            "c(" | "not(" => blocks.push(None),
            "m)" | "w)" | "i)" | "e)" | "r)" => {
                let k = blocks.pop().flatten().expect("body block");
                assert!(k >= 1);
                count += k - 1;
            }
            "c)" | ")" => {
                blocks.pop();
            }
            t if t.starts_with("R=") => count += 1,
            t if Action::from_token(t).is_some() => {
                count += 2;
                stmt(&mut blocks);
            }
            t if Percept::from_token(t).is_some() => {
                // `not( h )` already opened a block; count the Not there.
                count += 2;
            }
            t => panic!("unexpected token {t}"),
        }
    }
    count
}
