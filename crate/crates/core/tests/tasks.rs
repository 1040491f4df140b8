use std::collections::VecDeque;

use innatecoder::seed;
use innatecoder::tasks::{eval_set, init_instance, stair_contour, Ctx, TaskId, TaskInstance};
use innatecoder::world::Action;
use rand::Rng;

mod common;
use common::{closed_form, random_action, reachable};

#[test]
fn summed_rewards_match_closed_form() {
    for id in TaskId::ALL {
        let mut rng = seed::rng(&[11, id as u64]);
        for ep in 0..1000u64 {
            let mut t = init_instance(id, &mut rng);
            let mut total = 0.0;
            for _ in 0..rng.gen_range(1..300) {
                let tr = t.step(random_action(&mut rng));
                total += tr.reward;
                let lo = id.min_return() - 1e-9;
                assert!(t.return_so_far() >= lo && t.return_so_far() <= 1.0 + 1e-9);
                if tr.done {
                    break;
                }
            }
            let want = closed_form(&t);
            assert!(
                (total - want).abs() < 1e-9,
                "{id} episode {ep}: summed {total} vs closed form {want}"
            );
            assert!((t.return_so_far() - want).abs() < 1e-9);
        }
    }
}

#[test]
fn crash_penalty_is_in_the_closed_form() {
    let mut rng = seed::rng(&[12]);
    for id in [TaskId::Seeder, TaskId::Maze, TaskId::OneStroke] {
        let mut t = init_instance(id, &mut rng).with_crash_penalty(0.5);
        let mut total = 0.0;
        for _ in 0..100 {
            let tr = t.step(Action::Move);
            total += tr.reward;
            if tr.done {
                break;
            }
        }
        assert!((total - closed_form(&t)).abs() < 1e-12);
    }
}

#[test]
fn maze_instances_are_solvable() {
    let mut rng = seed::rng(&[13]);
    for _ in 0..2000 {
        let t = init_instance(TaskId::Maze, &mut rng);
        let Ctx::Maze { target, .. } = *t.ctx() else {
            unreachable!()
        };
        let w = t.world();
        assert_ne!(w.agent(), target);
        assert!(reachable(w, w.agent())[w.index(target.0, target.1)]);
        assert_eq!(w.markers_at(target.0, target.1), 1);
    }
}

#[test]
fn harvester_starts_full() {
    let mut rng = seed::rng(&[14]);
    for _ in 0..100 {
        let t = init_instance(TaskId::Harvester, &mut rng);
        let w = t.world();
        for r in 0..8 {
            for c in 0..8 {
                assert_eq!(w.markers_at(r, c), 1);
            }
        }
        assert_eq!(w.agent().0, 7);
    }
}

#[test]
fn door_key_chambers() {
    let mut rng = seed::rng(&[15]);
    for _ in 0..500 {
        let t = init_instance(TaskId::DoorKey, &mut rng);
        let Ctx::DoorKey { left, right, door, .. } = *t.ctx() else {
            unreachable!()
        };
        let w = t.world();
        assert_eq!(w.total_markers(), 2);
        assert_eq!(w.markers_at(left.0, left.1), 1);
        assert_eq!(w.markers_at(right.0, right.1), 1);
        let seen = reachable(w, w.agent());
        assert!(seen[w.index(left.0, left.1)]);
        assert!(
            !seen[w.index(right.0, right.1)],
            "right chamber reachable with the door shut"
        );
        let mut open = w.clone();
        open.set_wall(door.0, door.1, false);
        assert!(reachable(&open, w.agent())[open.index(right.0, right.1)]);
    }
}

#[test]
fn door_key_scripted() {
    // Walk the agent to the left marker by BFS, pick, then to the right one.
    let mut rng = seed::rng(&[16]);
    for _ in 0..50 {
        let mut t = init_instance(TaskId::DoorKey, &mut rng);
        let Ctx::DoorKey { left, right, .. } = *t.ctx() else {
            unreachable!()
        };
        walk_to(&mut t, left);
        let tr = t.step(Action::PickMarker);
        assert_eq!(tr.reward, 0.5);
        assert!(!tr.done);
        walk_to(&mut t, right);
        let tr = t.step(Action::PickMarker);
        assert_eq!(tr.reward, 0.5);
        assert!(tr.done);
        assert_eq!(t.return_so_far(), 1.0);
    }
}

fn walk_to(t: &mut TaskInstance, goal: (usize, usize)) {
    assert!(try_walk_to(t, goal), "goal unreachable");
}

fn try_walk_to(t: &mut TaskInstance, goal: (usize, usize)) -> bool {
    use innatecoder::world::Direction;
    while t.world().agent() != goal {
        let w = t.world();
        // BFS from the goal, then step to a neighbour with smaller distance.
        let mut dist = vec![usize::MAX; w.cells()];
        let mut q = VecDeque::from([goal]);
        dist[w.index(goal.0, goal.1)] = 0;
        while let Some((r, c)) = q.pop_front() {
            for d in Direction::ALL {
                let (dr, dc) = d.delta();
                let (nr, nc) = (r as i32 + dr, c as i32 + dc);
                if w.in_bounds(nr, nc) && !w.is_wall(nr as usize, nc as usize) {
                    let i = w.index(nr as usize, nc as usize);
                    if dist[i] == usize::MAX {
                        dist[i] = dist[w.index(r, c)] + 1;
                        q.push_back((nr as usize, nc as usize));
                    }
                }
            }
        }
        let (r, c) = w.agent();
        let here = dist[w.index(r, c)];
        if here == usize::MAX {
            return false;
        }
        let want = Direction::ALL
            .into_iter()
            .find(|d| {
                let (dr, dc) = d.delta();
                let (nr, nc) = (r as i32 + dr, c as i32 + dc);
                w.in_bounds(nr, nc) && dist[w.index(nr as usize, nc as usize)] == here - 1
            })
            .unwrap();
        while t.world().dir() != want {
            t.step(Action::TurnLeft);
        }
        t.step(Action::Move);
    }
    true
}

#[test]
fn stair_climber_geometry() {
    let mut rng = seed::rng(&[17]);
    let contour = stair_contour();
    for _ in 0..500 {
        let t = init_instance(TaskId::StairClimber, &mut rng);
        let Ctx::StairClimber { target, .. } = *t.ctx() else {
            unreachable!()
        };
        let w = t.world();
        assert!(contour.contains(&w.agent()) && contour.contains(&target));
        assert!(target.0 < w.agent().0, "marker must sit higher than the agent");
        // Every stair cell stands on or beside masonry.
        for &(r, c) in &contour {
            assert!(!w.is_wall(r, c));
            assert!(w.is_wall(r + 1, c) || w.is_wall(r + 1, c + 1));
        }
    }
}

#[test]
fn stair_climber_outcomes() {
    let mut rng = seed::rng(&[18]);
    let mut t = init_instance(TaskId::StairClimber, &mut rng);
    // Turning north and stepping off the stair is a -1.
    let mut off = t.clone();
    off.step(Action::TurnLeft);
    let (r, c) = off.world().agent();
    if !off.world().is_wall(r - 1, c) && !stair_contour().contains(&(r - 1, c)) {
        let tr = off.step(Action::Move);
        assert_eq!((tr.reward, tr.done), (-1.0, true));
    }
    // Climbing the stair reaches the marker: move, turn left, move, turn right.
    let Ctx::StairClimber { target, .. } = *t.ctx() else {
        unreachable!()
    };
    let mut last = None;
    for a in [Action::Move, Action::TurnLeft, Action::Move, Action::TurnRight]
        .iter()
        .cycle()
        .take(200)
    {
        if t.world().perceive(innatecoder::world::Percept::FrontIsClear) || *a != Action::Move {
            let tr = t.step(*a);
            if tr.done {
                last = Some(tr);
                break;
            }
        }
    }
    let tr = last.expect("climb never finished");
    assert_eq!(t.world().agent(), target);
    assert_eq!(tr.reward, 1.0);
}

#[test]
fn top_off_layout() {
    for t in eval_set(TaskId::TopOff, 3, 50) {
        let w = t.world();
        assert_eq!(w.agent(), (11, 0));
        let Ctx::TopOff { targets, .. } = t.ctx() else {
            unreachable!()
        };
        assert!(!targets.is_empty());
        assert!(targets
            .iter()
            .all(|&(r, c)| r == 11 && c > 0 && w.markers_at(r, c) == 1));
        assert_eq!(w.total_markers() as usize, targets.len());
    }
}

#[test]
fn four_corners_all_placed() {
    let mut rng = seed::rng(&[19]);
    let mut t = init_instance(TaskId::FourCorners, &mut rng);
    // Put a marker, then run the perimeter counterclockwise four times.
    let mut total = 0.0;
    'outer: for _ in 0..4 {
        for _ in 0..60 {
            if !t.world().perceive(innatecoder::world::Percept::FrontIsClear) {
                let at_corner = {
                    let (r, c) = t.world().agent();
                    (r == 0 || r == 11) && (c == 0 || c == 11)
                };
                if at_corner && t.world().markers_at(t.world().agent().0, t.world().agent().1) == 0 {
                    let tr = t.step(Action::PutMarker);
                    total += tr.reward;
                    if tr.done {
                        break 'outer;
                    }
                }
                total += t.step(Action::TurnLeft).reward;
            } else {
                total += t.step(Action::Move).reward;
            }
        }
    }
    assert_eq!(total, 1.0);
    assert!(t.done());
}

#[test]
fn seeder_half_full() {
    // 32 markered cells out of 64 is a return of one half.
    let mut t = init_instance(TaskId::Seeder, &mut seed::rng(&[20]));
    for r in 0..4 {
        for c in 0..8 {
            walk_to(&mut t, (r, c));
            t.step(Action::PutMarker);
        }
    }
    assert_eq!(t.return_so_far(), 0.5);
}

#[test]
fn snake_grows_and_finishes() {
    // Greedy shortest-path play can trap itself; some seeds must still finish.
    let mut finished = 0;
    for k in 0..20 {
        let mut t = init_instance(TaskId::Snake, &mut seed::rng(&[21, k]));
        let mut eaten = 0;
        while !t.done() {
            let Ctx::Snake { marker, .. } = t.ctx().clone() else {
                unreachable!()
            };
            if !try_walk_to(&mut t, marker) {
                break;
            }
            eaten += 1;
            let Ctx::Snake { body, eaten: e, .. } = t.ctx() else {
                unreachable!()
            };
            assert_eq!(*e, eaten);
            assert_eq!(body.len(), eaten as usize);
            assert_eq!(t.world().wall_count(), eaten as usize);
        }
        if eaten == 20 {
            assert!((t.return_so_far() - 1.0).abs() < 1e-12);
            finished += 1;
        }
    }
    assert!(finished > 0);
}

#[test]
fn one_stroke_walls_behind() {
    let mut t = init_instance(TaskId::OneStroke, &mut seed::rng(&[22]));
    let start = t.world().agent();
    let mut visited = 0;
    while t.world().perceive(innatecoder::world::Percept::FrontIsClear) {
        t.step(Action::Move);
        visited += 1;
        assert!(t.world().is_wall(start.0, start.1));
        assert_eq!(t.world().wall_count(), visited);
    }
    let tr = t.step(Action::Move);
    assert!(tr.done);
    assert_eq!(tr.reward, 0.0);
    assert_eq!(t.return_so_far(), visited as f64 / 64.0);
}

#[test]
fn clean_house_layout_is_connected() {
    let t = init_instance(TaskId::CleanHouse, &mut seed::rng(&[23]));
    let w = t.world();
    assert_eq!((w.width(), w.height()), (22, 14));
    let seen = reachable(w, w.agent());
    for r in 0..14 {
        for c in 0..22 {
            if !w.is_wall(r, c) {
                assert!(seen[w.index(r, c)], "({r},{c}) is cut off");
            }
        }
    }
    assert_eq!(w.total_markers(), 10);
    let again = init_instance(TaskId::CleanHouse, &mut seed::rng(&[24]));
    assert_eq!(again.world().agent(), w.agent(), "agent start is fixed");
}

#[test]
fn instances_serialize() {
    for id in TaskId::ALL {
        let t = &eval_set(id, 9, 1)[0];
        let text = serde_json::to_string(t).unwrap();
        let back: TaskInstance = serde_json::from_str(&text).unwrap();
        assert_eq!(&back, t);
    }
}
