use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Cell, Ctx, TaskId};
use crate::seed;
use crate::world::{Direction, WorldState};

/// Floor plan of the CleanHouse apartment, agent included.
pub const CLEAN_HOUSE_LAYOUT: &str = include_str!("../../fixtures/cleanhouse.txt");

/// Markers scattered through the apartment per episode.
pub const CLEAN_HOUSE_MARKERS: usize = 10;

const STAIR_SIZE: usize = 12;

pub(super) fn generate<R: Rng + ?Sized>(id: TaskId, rng: &mut R) -> (WorldState, Ctx) {
    match id {
        TaskId::StairClimber => stair_climber(rng),
        TaskId::FourCorners => four_corners(rng),
        TaskId::TopOff => top_off(rng),
        TaskId::Maze => maze(rng),
        TaskId::CleanHouse => clean_house(rng),
        TaskId::Harvester => harvester(rng),
        TaskId::DoorKey => door_key(rng),
        TaskId::OneStroke => {
            let w = open_grid(8, 8, rng);
            (w, Ctx::OneStroke { visited: 0 })
        }
        TaskId::Seeder => {
            let w = open_grid(8, 8, rng);
            (w, Ctx::Seeder { good: 0 })
        }
        TaskId::Snake => snake(rng),
    }
}

fn any_dir<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    *Direction::ALL.choose(rng).unwrap()
}

fn open_grid<R: Rng + ?Sized>(w: usize, h: usize, rng: &mut R) -> WorldState {
    let (r, c) = (rng.gen_range(0..h), rng.gen_range(0..w));
    WorldState::empty(w, h, r, c, any_dir(rng))
}

/// Walkable cells of the staircase, bottom-left to top-right: one step right,
/// one step up, repeated.
pub fn stair_contour() -> Vec<Cell> {
    let n = STAIR_SIZE - 1;
    (1..n - 1).flat_map(|k| [(n - k, k), (n - k, k + 1)]).collect()
}

fn stair_climber<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let n = STAIR_SIZE;
    let path = stair_contour();
    let mut w = WorldState::empty(n, n, 0, 0, Direction::E);
    for i in 0..n {
        for j in [0, n - 1] {
            w.set_wall(i, j, true);
            w.set_wall(j, i, true);
        }
    }
    // Solid masonry under each column's lowest stair cell.
    for c in 1..n - 1 {
        let lowest = path.iter().filter(|p| p.1 == c).map(|p| p.0).max().unwrap();
        for r in lowest + 1..n {
            w.set_wall(r, c, true);
        }
    }
    let mut contour = vec![false; n * n];
    for &(r, c) in &path {
        contour[w.index(r, c)] = true;
    }
    let (agent, target) = loop {
        let a = *path.choose(rng).unwrap();
        let t = *path.choose(rng).unwrap();
        if t.0 < a.0 {
            break (a, t);
        }
    };
    w.place_agent(agent.0, agent.1, Direction::E);
    w.set_markers(target.0, target.1, 1);
    (
        w,
        Ctx::StairClimber {
            target,
            contour,
            outcome: 0,
        },
    )
}

fn four_corners<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let n = 12;
    let corners = [(0, 0), (0, n - 1), (n - 1, 0), (n - 1, n - 1)];
    let edge: Vec<Cell> = (0..n)
        .flat_map(|i| [(0, i), (n - 1, i), (i, 0), (i, n - 1)])
        .filter(|p| !corners.contains(p))
        .collect();
    let (r, c) = *edge.choose(rng).unwrap();
    let w = WorldState::empty(n, n, r, c, any_dir(rng));
    (w, Ctx::FourCorners { corners, good: 0 })
}

fn top_off<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let n = 12;
    let mut w = WorldState::empty(n, n, n - 1, 0, Direction::E);
    let targets = loop {
        let t: Vec<Cell> = (1..n).filter(|_| rng.gen_bool(0.5)).map(|c| (n - 1, c)).collect();
        if !t.is_empty() {
            break t;
        }
    };
    for &(r, c) in &targets {
        w.set_markers(r, c, 1);
    }
    (w, Ctx::TopOff { targets, good: 0 })
}

fn maze<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let n = 12;
    let mut w = WorldState::empty(n, n, 0, 0, Direction::E);
    for r in 0..n {
        for c in 0..n {
            w.set_wall(r, c, true);
        }
    }
    // Depth-first carving over the even-coordinate rooms.
    let rooms = n / 2;
    let mut seen = vec![false; rooms * rooms];
    let mut stack = vec![(0usize, 0usize)];
    seen[0] = true;
    w.set_wall(0, 0, false);
    while let Some(&(r, c)) = stack.last() {
        let mut next: Vec<Cell> = Vec::with_capacity(4);
        if r > 0 {
            next.push((r - 1, c));
        }
        if r + 1 < rooms {
            next.push((r + 1, c));
        }
        if c > 0 {
            next.push((r, c - 1));
        }
        if c + 1 < rooms {
            next.push((r, c + 1));
        }
        next.retain(|&(a, b)| !seen[a * rooms + b]);
        match next.choose(rng) {
            None => {
                stack.pop();
            }
            Some(&(a, b)) => {
                seen[a * rooms + b] = true;
                w.set_wall(2 * a, 2 * b, false);
                w.set_wall(r + a, c + b, false);
                stack.push((a, b));
            }
        }
    }
    let open: Vec<Cell> = (0..n)
        .flat_map(|r| (0..n).map(move |c| (r, c)))
        .filter(|&(r, c)| !w.is_wall(r, c))
        .collect();
    let mut picks = open.choose_multiple(rng, 2);
    let agent = *picks.next().unwrap();
    let target = *picks.next().unwrap();
    w.place_agent(agent.0, agent.1, any_dir(rng));
    w.set_markers(target.0, target.1, 1);
    (w, Ctx::Maze { target, reached: false })
}

fn clean_house<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let mut w = WorldState::from_ascii(CLEAN_HOUSE_LAYOUT).expect("bundled layout is valid");
    let agent = w.agent();
    let free: Vec<Cell> = (0..w.height())
        .flat_map(|r| (0..w.width()).map(move |c| (r, c)))
        .filter(|&(r, c)| !w.is_wall(r, c) && (r, c) != agent)
        .collect();
    for &(r, c) in free.choose_multiple(rng, CLEAN_HOUSE_MARKERS) {
        w.set_markers(r, c, 1);
    }
    let k = CLEAN_HOUSE_MARKERS as u32;
    (
        w,
        Ctx::Collect {
            initial: k,
            remaining: k,
            denom: k,
        },
    )
}

fn harvester<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let n = 8;
    let mut w = WorldState::empty(n, n, n - 1, rng.gen_range(0..n), any_dir(rng));
    for r in 0..n {
        for c in 0..n {
            w.set_markers(r, c, 1);
        }
    }
    let k = (n * n) as u32;
    (
        w,
        Ctx::Collect {
            initial: k,
            remaining: k,
            denom: k,
        },
    )
}

/// Outer wall, a dividing wall in column 4 and a one-cell door that opens when
/// the left marker is picked up.
fn door_key<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let n = 8;
    let bar = 4;
    let door = (3, bar);
    let mut w = WorldState::empty(n, n, 1, 1, Direction::E);
    for i in 0..n {
        for j in [0, n - 1] {
            w.set_wall(i, j, true);
            w.set_wall(j, i, true);
        }
        w.set_wall(i, bar, true);
    }
    let left_cells: Vec<Cell> = (1..n - 1).flat_map(|r| (1..bar).map(move |c| (r, c))).collect();
    let right_cells: Vec<Cell> = (1..n - 1).flat_map(|r| (bar + 1..n - 1).map(move |c| (r, c))).collect();
    let mut picks = left_cells.choose_multiple(rng, 2);
    let agent = *picks.next().unwrap();
    let left = *picks.next().unwrap();
    let right = *right_cells.choose(rng).unwrap();
    w.place_agent(agent.0, agent.1, any_dir(rng));
    w.set_markers(left.0, left.1, 1);
    w.set_markers(right.0, right.1, 1);
    (
        w,
        Ctx::DoorKey {
            left,
            right,
            door,
            opened: false,
            finished: false,
        },
    )
}

fn snake<R: Rng + ?Sized>(rng: &mut R) -> (WorldState, Ctx) {
    let mut w = open_grid(8, 8, rng);
    let seed: u64 = rng.gen();
    let marker = snake_marker(&mut w, seed, 0);
    (
        w,
        Ctx::Snake {
            marker,
            body: VecDeque::new(),
            eaten: 0,
            seed,
        },
    )
}

/// Drops the next snake marker on a free cell. The choice depends only on the
/// episode seed, the number eaten so far and the current grid.
pub(super) fn snake_marker(w: &mut WorldState, seed: u64, eaten: u32) -> Cell {
    let agent = w.agent();
    let free: Vec<Cell> = (0..w.height())
        .flat_map(|r| (0..w.width()).map(move |c| (r, c)))
        .filter(|&(r, c)| !w.is_wall(r, c) && (r, c) != agent)
        .collect();
    let cell = *free
        .choose(&mut seed::rng(&[seed, eaten as u64]))
        .expect("snake filled the grid");
    w.set_markers(cell.0, cell.1, 1);
    cell
}
