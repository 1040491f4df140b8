//! The ten Karel tasks: initial-state distributions, rewards and termination.
//!
//! Rewards are paid as increments of the task's return so that the summed
//! reward of an episode equals the return computed from the final state.
//! Per-step bookkeeping is incremental (counters in [`Ctx`]) because tasks
//! are stepped hundreds of millions of times during a search.

mod gen;

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::world::{Action, WorldState};

pub use gen::{stair_contour, CLEAN_HOUSE_LAYOUT, CLEAN_HOUSE_MARKERS};

pub type Cell = (usize, usize);

/// Markers a snake has to eat before the episode ends.
pub const SNAKE_GOAL: u32 = 20;

/// Default number of initial states per evaluation set.
pub const DEFAULT_EVAL_SIZE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    StairClimber,
    FourCorners,
    TopOff,
    Maze,
    CleanHouse,
    Harvester,
    DoorKey,
    OneStroke,
    Seeder,
    Snake,
}

impl TaskId {
    pub const ALL: [TaskId; 10] = [
        TaskId::StairClimber,
        TaskId::FourCorners,
        TaskId::TopOff,
        TaskId::Maze,
        TaskId::CleanHouse,
        TaskId::Harvester,
        TaskId::DoorKey,
        TaskId::OneStroke,
        TaskId::Seeder,
        TaskId::Snake,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::StairClimber => "StairClimber",
            TaskId::FourCorners => "FourCorners",
            TaskId::TopOff => "TopOff",
            TaskId::Maze => "Maze",
            TaskId::CleanHouse => "CleanHouse",
            TaskId::Harvester => "Harvester",
            TaskId::DoorKey => "DoorKey",
            TaskId::OneStroke => "OneStroke",
            TaskId::Seeder => "Seeder",
            TaskId::Snake => "Snake",
        }
    }

    /// Lowest possible episodic return (with no crash penalty).
    pub fn min_return(self) -> f64 {
        if self == TaskId::StairClimber {
            -1.0
        } else {
            0.0
        }
    }

    fn index(self) -> u64 {
        TaskId::ALL.iter().position(|&t| t == self).unwrap() as u64
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', '_', ' '], "");
        TaskId::ALL
            .into_iter()
            .find(|t| t.name().to_ascii_lowercase() == key)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

/// Task-specific bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Ctx {
    StairClimber {
        target: Cell,
        /// Row-major mask of the cells the agent may stand on.
        contour: Vec<bool>,
        outcome: i8,
    },
    FourCorners {
        corners: [Cell; 4],
        good: u32,
    },
    TopOff {
        targets: Vec<Cell>,
        good: u32,
    },
    Maze {
        target: Cell,
        reached: bool,
    },
    /// CleanHouse and Harvester: pick up what was there at the start.
    Collect {
        initial: u32,
        remaining: u32,
        denom: u32,
    },
    DoorKey {
        left: Cell,
        right: Cell,
        door: Cell,
        opened: bool,
        finished: bool,
    },
    OneStroke {
        visited: u32,
    },
    Seeder {
        good: u32,
    },
    Snake {
        marker: Cell,
        body: VecDeque<Cell>,
        eaten: u32,
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub reward: f64,
    pub done: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskInstance {
    id: TaskId,
    world: WorldState,
    ctx: Ctx,
    return_so_far: f64,
    done: bool,
    #[serde(default)]
    crash_penalty: f64,
}

impl TaskInstance {
    pub fn id(&self) -> TaskId {
        self.id
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn ctx(&self) -> &Ctx {
        &self.ctx
    }

    pub fn return_so_far(&self) -> f64 {
        self.return_so_far
    }

    pub fn done(&self) -> bool {
        self.done
    }

    pub fn crash_penalty(&self) -> f64 {
        self.crash_penalty
    }

    /// Subtracts `penalty` from the return when the agent crashes. OneStroke
    /// is exempt: running into a wall is how its episodes end.
    pub fn with_crash_penalty(mut self, penalty: f64) -> Self {
        self.crash_penalty = penalty;
        self
    }

    /// Applies `a` and pays the change in return.
    ///
    /// Panics if the episode is already over.
    pub fn step(&mut self, a: Action) -> Transition {
        assert!(!self.done, "step on a finished episode");
        let prev = self.world.agent();
        let before = self.world.markers_at(prev.0, prev.1);
        self.world.step(a);
        let crashed = self.world.crashed();
        let here = self.world.agent();
        let after = self.world.markers_at(prev.0, prev.1);
        let moved = here != prev;

        let mut done = crashed;
        match &mut self.ctx {
            Ctx::StairClimber {
                target,
                contour,
                outcome,
            } => {
                if moved {
                    if here == *target {
                        *outcome = 1;
                        done = true;
                    } else if !contour[self.world.index(here.0, here.1)] {
                        *outcome = -1;
                        done = true;
                    }
                }
            }
            Ctx::FourCorners { corners, good } => {
                if before != after && corners.contains(&prev) {
                    *good = adjust(*good, before == 1, after == 1);
                }
                done |= *good == 4;
            }
            Ctx::TopOff { targets, good } => {
                if before != after && targets.contains(&prev) {
                    *good = adjust(*good, before == 2, after == 2);
                }
                done |= *good as usize == targets.len();
            }
            Ctx::Maze { target, reached } => {
                if here == *target {
                    *reached = true;
                    done = true;
                }
            }
            Ctx::Collect { remaining, .. } => {
                *remaining = *remaining + after as u32 - before as u32;
                done |= *remaining == 0;
            }
            Ctx::DoorKey {
                left,
                right,
                door,
                opened,
                finished,
            } => {
                if before == 1 && after == 0 {
                    if prev == *left && !*opened {
                        *opened = true;
                        self.world.set_wall(door.0, door.1, false);
                    } else if prev == *right && *opened {
                        *finished = true;
                        done = true;
                    }
                }
            }
            Ctx::OneStroke { visited } => {
                if moved {
                    *visited += 1;
                    self.world.set_wall(prev.0, prev.1, true);
                }
                done |= *visited as usize + 1 == self.world.cells();
            }
            Ctx::Seeder { good } => {
                if before != after {
                    *good = adjust(*good, before == 1, after == 1);
                }
                done |= *good as usize == self.world.cells();
            }
            Ctx::Snake {
                marker,
                body,
                eaten,
                seed,
            } => {
                if moved {
                    body.push_front(prev);
                    self.world.set_wall(prev.0, prev.1, true);
                    if here == *marker {
                        *eaten += 1;
                        let m = self.world.markers_at(here.0, here.1);
                        self.world.set_markers(here.0, here.1, m.saturating_sub(1));
                        if *eaten < SNAKE_GOAL {
                            *marker = gen::snake_marker(&mut self.world, *seed, *eaten);
                        }
                    } else if body.len() > *eaten as usize {
                        let tail = body.pop_back().unwrap();
                        self.world.set_wall(tail.0, tail.1, false);
                    }
                }
                done |= *eaten >= SNAKE_GOAL;
            }
        }

        let mut value = self.counter_return();
        if crashed && self.id != TaskId::OneStroke {
            value -= self.crash_penalty;
        }
        let reward = value - self.return_so_far;
        self.return_so_far = value;
        self.done = done;
        Transition { reward, done }
    }

    fn counter_return(&self) -> f64 {
        let cells = self.world.cells() as f64;
        match &self.ctx {
            Ctx::StairClimber { outcome, .. } => *outcome as f64,
            Ctx::FourCorners { good, .. } => *good as f64 / 4.0,
            Ctx::TopOff { targets, good } => *good as f64 / targets.len() as f64,
            Ctx::Maze { reached, .. } => *reached as u8 as f64,
            Ctx::Collect {
                initial,
                remaining,
                denom,
            } => initial.saturating_sub(*remaining) as f64 / *denom as f64,
            Ctx::DoorKey { opened, finished, .. } => 0.5 * (*opened as u8 as f64) + 0.5 * (*finished as u8 as f64),
            Ctx::OneStroke { visited } => *visited as f64 / cells,
            Ctx::Seeder { good } => *good as f64 / cells,
            Ctx::Snake { eaten, .. } => *eaten as f64 / SNAKE_GOAL as f64,
        }
    }
}

fn adjust(count: u32, was: bool, is: bool) -> u32 {
    match (was, is) {
        (true, false) => count - 1,
        (false, true) => count + 1,
        _ => count,
    }
}

/// Draws one initial state from the task's distribution.
pub fn init_instance<R: Rng + ?Sized>(id: TaskId, rng: &mut R) -> TaskInstance {
    let (world, ctx) = gen::generate(id, rng);
    TaskInstance {
        id,
        world,
        ctx,
        return_so_far: 0.0,
        done: false,
        crash_penalty: 0.0,
    }
}

/// The fixed initial states a program is scored on.
pub fn eval_set(id: TaskId, master_seed: u64, size: usize) -> Vec<TaskInstance> {
    assert!(size >= 1, "evaluation set must be non-empty");
    (0..size as u64)
        .map(|i| init_instance(id, &mut seed::rng(&[master_seed, 0xe7a1, id.index(), i])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(id: TaskId, s: u64) -> TaskInstance {
        init_instance(id, &mut seed::rng(&[s]))
    }

    #[test]
    fn names_round_trip() {
        for t in TaskId::ALL {
            assert_eq!(t.name().parse::<TaskId>().unwrap(), t);
        }
        assert_eq!("four_corners".parse::<TaskId>().unwrap(), TaskId::FourCorners);
        assert!("Pong".parse::<TaskId>().is_err());
    }

    #[test]
    fn grid_sizes() {
        for t in TaskId::ALL {
            let w = inst(t, 3).world;
            let dims = (w.width(), w.height());
            let want = match t {
                TaskId::StairClimber | TaskId::FourCorners | TaskId::TopOff | TaskId::Maze => (12, 12),
                TaskId::CleanHouse => (22, 14),
                _ => (8, 8),
            };
            assert_eq!(dims, want, "{t}");
        }
    }

    #[test]
    fn seeder_single_put() {
        let mut t = inst(TaskId::Seeder, 1);
        let tr = t.step(Action::PutMarker);
        assert_eq!(tr.reward, 1.0 / 64.0);
        let tr = t.step(Action::PutMarker);
        assert_eq!(tr.reward, -1.0 / 64.0);
        assert_eq!(t.return_so_far(), 0.0);
    }

    #[test]
    fn crash_ends_without_penalty_by_default() {
        let mut t = inst(TaskId::Seeder, 2);
        let mut last = None;
        for _ in 0..8 {
            let tr = t.step(Action::Move);
            if tr.done {
                last = Some(tr);
                break;
            }
        }
        let tr = last.expect("eight moves on an 8x8 grid must hit the edge");
        assert_eq!(tr.reward, 0.0);
        assert!(t.world().crashed());
    }

    #[test]
    fn crash_penalty_knob() {
        let mut t = inst(TaskId::Seeder, 2).with_crash_penalty(0.25);
        while !t.step(Action::Move).done {}
        assert_eq!(t.return_so_far(), -0.25);
    }

    #[test]
    fn eval_sets_are_reproducible() {
        assert_eq!(eval_set(TaskId::Maze, 5, 4), eval_set(TaskId::Maze, 5, 4));
        assert_ne!(eval_set(TaskId::Maze, 5, 4), eval_set(TaskId::Maze, 6, 4));
    }
}
