use innatecoder::dsl::{sample_program, Node, NonTerminal, Program, SamplerConfig};
use innatecoder::exec::Exec;
use innatecoder::interp::{run_episode, ExecLimits};
use innatecoder::options::{collect_states, extract_option_pool, filter_options, Omega};
use innatecoder::search::{
    downsample, evaluate, mixed_neighbors, run_method, run_method_observed, semantic_neighbors, syntax_neighbor,
    syntax_neighbors, Event, Method, MoveKind, SearchConfig,
};
use innatecoder::seed;
use innatecoder::tasks::{eval_set, TaskId};
use proptest::prelude::*;

fn prog(s: &str) -> Program {
    s.parse().unwrap()
}

fn omega_from(programs: &[&str], task: TaskId) -> Omega {
    let programs: Vec<Program> = programs.iter().map(|s| prog(s)).collect();
    let pool = extract_option_pool(&programs);
    let lim = ExecLimits::default();
    let states = collect_states(&pool, task, &mut seed::rng(&[77]), 300, 700, &lim).unwrap();
    filter_options(&pool, &states, &lim, Exec::Sequential).0
}

fn small_cfg(task: TaskId, method: Method, seed: u64, budget: u64, exec: Exec) -> SearchConfig {
    let mut cfg = SearchConfig::new(task, method, seed);
    cfg.k = 20;
    cfg.episode_budget = budget;
    cfg.exec = exec;
    cfg
}

#[test]
fn epsilon_one_is_the_syntax_neighbourhood() {
    let omega = omega_from(
        &["DEF run m( WHILE c( frontIsClear c) w( move putMarker w) m)"],
        TaskId::Seeder,
    );
    let cfg = SamplerConfig::default();
    for s in 0..20 {
        let n = sample_program(&cfg, &mut seed::rng(&[s]));
        let a = syntax_neighbors(&n, 50, &cfg, &mut seed::rng(&[s, 1]));
        let b: Vec<Program> = mixed_neighbors(&n, 50, &omega, &cfg, 1.0, &mut seed::rng(&[s, 1]))
            .into_iter()
            .map(|x| x.program)
            .collect();
        assert_eq!(a, b);
    }
}

#[test]
fn epsilon_zero_is_the_semantic_neighbourhood() {
    let omega = omega_from(
        &["DEF run m( WHILE c( frontIsClear c) w( move putMarker w) m)"],
        TaskId::Seeder,
    );
    let cfg = SamplerConfig::default();
    let n = prog("DEF run m( IF c( markersPresent c) i( turnLeft i) move m)");
    let a = semantic_neighbors(&n, 200, &omega, &cfg, &mut seed::rng(&[5]));
    let b = mixed_neighbors(&n, 200, &omega, &cfg, 0.0, &mut seed::rng(&[5]));
    assert!(b.iter().all(|x| x.kind != MoveKind::Syntax));
    assert_eq!(a, b.into_iter().map(|x| x.program).collect::<Vec<_>>());
}

#[test]
fn mixture_frequency_matches_epsilon() {
    let omega = omega_from(&["DEF run m( move m)"], TaskId::Seeder);
    let cfg = SamplerConfig::default();
    let n = prog("DEF run m( move turnLeft m)");
    let draws = 10_000;
    let nb = mixed_neighbors(&n, draws, &omega, &cfg, 0.4, &mut seed::rng(&[9]));
    let syntax = nb.iter().filter(|x| x.kind == MoveKind::Syntax).count() as f64;
    // Binomial(10^4, 0.4): sd = 49.
    assert!((syntax - 4000.0).abs() < 4.0 * 49.0, "syntax draws {syntax}");
}

#[test]
fn semantic_choice_is_uniform_over_matching_options() {
    // Equal signatures keep the first-seen sub-program, which for a one-action
    // body is the statement, so Ω holds three statement-kind options.
    let omega = omega_from(
        &[
            "DEF run m( move m)",
            "DEF run m( turnLeft m)",
            "DEF run m( putMarker m)",
        ],
        TaskId::Seeder,
    );
    assert_eq!(omega.of_kind(NonTerminal::Stmt).len(), 3);
    let n = prog("DEF run m( pickMarker m)");
    let cfg = SamplerConfig::default();
    let nb = mixed_neighbors(&n, 30_000, &omega, &cfg, 0.0, &mut seed::rng(&[4]));
    let mut counts = std::collections::HashMap::new();
    for x in &nb {
        if let MoveKind::Semantic(i) = x.kind {
            assert_eq!(x.at_kind, NonTerminal::Stmt);
            *counts.entry(i).or_insert(0usize) += 1;
        }
    }
    let total: usize = counts.values().sum();
    assert_eq!(counts.len(), 3);
    // A third of the nodes are statements.
    assert!((total as f64 - 10_000.0).abs() < 4.0 * 81.7, "semantic draws {total}");
    let e = total as f64 / 3.0;
    let chi2: f64 = counts.values().map(|&c| (c as f64 - e).powi(2) / e).sum();
    // df = 2, p = 0.001.
    assert!(chi2 < 13.82, "chi2 {chi2}");
}

#[test]
fn episode_mean_is_the_evaluation() {
    let eval = eval_set(TaskId::Harvester, 3, 8);
    let lim = ExecLimits::default();
    let p = prog("DEF run m( WHILE c( frontIsClear c) w( pickMarker move w) m)");
    let oracle: f64 = eval
        .iter()
        .map(|t| run_episode(&p, t.clone(), &lim).episodic_return)
        .sum::<f64>()
        / 8.0;
    let e = evaluate(&p, &eval, &lim);
    assert_eq!(e.value, oracle);
    assert_eq!(e.episodes, 8);
}

#[test]
fn runs_are_schedule_invariant_and_deterministic() {
    for method in [Method::Shc, Method::LissO, Method::LissR] {
        let seq = run_method(&small_cfg(TaskId::TopOff, method, 11, 2000, Exec::Sequential), None).unwrap();
        let par = run_method(&small_cfg(TaskId::TopOff, method, 11, 2000, Exec::Parallel), None).unwrap();
        let again = run_method(&small_cfg(TaskId::TopOff, method, 11, 2000, Exec::Parallel), None).unwrap();
        assert_eq!(seq, par, "{method}");
        assert_eq!(par, again, "{method}");
    }
}

#[test]
fn budget_and_curve_invariants() {
    for (i, task) in TaskId::ALL.into_iter().enumerate() {
        let cfg = small_cfg(task, Method::Shc, i as u64, 1203, Exec::default());
        let run = run_method(&cfg, None).unwrap();
        assert!(run.episodes <= 1203);
        assert!(run.episodes.is_multiple_of(8));
        for w in run.curve.windows(2) {
            assert!(w[0].episodes < w[1].episodes);
            assert!(w[0].best <= w[1].best);
        }
        assert_eq!(run.curve.last().unwrap().best, run.best_value);
        assert_eq!(run.curve.last().unwrap().episodes, run.episodes);
        let oracle = evaluate(&run.best_program, &cfg.eval_instances(), &cfg.limits).value;
        assert_eq!(oracle, run.best_value);
        if run.best_value < 1.0 {
            // Without early stopping the whole affordable budget is spent.
            assert!(1203 - run.episodes < 8);
        }
        assert!(downsample(&run.curve, 1000).len() <= 1000);
    }
}

#[test]
fn incumbent_strictly_improves_within_a_restart() {
    let cfg = small_cfg(TaskId::Harvester, Method::LissO, 2, 4000, Exec::default());
    let mut events = Vec::new();
    run_method_observed(&cfg, None, &mut |e| events.push(e.clone())).unwrap();
    let mut current = None;
    let mut restarts = 0;
    for e in &events {
        match e {
            Event::Restart { value, .. } => {
                current = Some(*value);
                restarts += 1;
            }
            Event::Accept { value, .. } => {
                assert!(*value > current.unwrap());
                current = Some(*value);
            }
            _ => {}
        }
    }
    assert!(restarts >= 1);
}

#[test]
fn too_small_budget_is_rejected() {
    let cfg = small_cfg(TaskId::Maze, Method::Shc, 0, 7, Exec::default());
    assert!(run_method(&cfg, None).is_err());
    let cfg = small_cfg(TaskId::Maze, Method::Shc, 0, 8, Exec::default());
    let run = run_method(&cfg, None).unwrap();
    assert_eq!(run.episodes, 8);
    assert_eq!(run.curve.len(), 1);
}

#[test]
fn foundation_model_picks_the_best_corpus_program() {
    let corpus: Vec<Program> = [
        "DEF run m( move m)",
        "DEF run m( WHILE c( frontIsClear c) w( pickMarker move w) m)",
        "DEF run m( pickMarker m)",
    ]
    .iter()
    .map(|s| prog(s))
    .collect();
    let cfg = small_cfg(TaskId::Harvester, Method::Fm, 1, 1000, Exec::default());
    let run = run_method(&cfg, Some(&corpus)).unwrap();
    let eval = cfg.eval_instances();
    let scores: Vec<f64> = corpus.iter().map(|p| evaluate(p, &eval, &cfg.limits).value).collect();
    let best = scores.iter().cloned().fold(f64::MIN, f64::max);
    assert_eq!(run.best_value, best);
    assert_eq!(
        run.best_program,
        corpus[scores.iter().position(|&s| s == best).unwrap()]
    );
    assert_eq!(run.episodes, 24);
}

#[test]
fn used_options_are_subtrees_of_the_best_program() {
    let corpus = vec![prog(
        "DEF run m( WHILE c( frontIsClear c) w( pickMarker move w) turnLeft m)",
    )];
    let cfg = small_cfg(TaskId::Harvester, Method::Ic, 3, 3000, Exec::default());
    let run = run_method(&cfg, Some(&corpus)).unwrap();
    let stats = run.option_stats.unwrap();
    assert_eq!(stats.programs, 1);
    assert_eq!(run.omega_size, stats.filter.kept);
    let subtrees: Vec<&Node> = run.best_program.root().preorder();
    let pool = extract_option_pool(&corpus);
    let lim = ExecLimits::default();
    let states = collect_states(
        &pool,
        TaskId::Harvester,
        &mut seed::rng(&[cfg.master_seed, 0x0975]),
        300,
        700,
        &lim,
    )
    .unwrap();
    let (omega, _) = filter_options(&pool, &states, &lim, Exec::Sequential);
    for &i in &run.options_used {
        assert!(subtrees.contains(&&omega.get(i).node));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn syntax_moves_stay_well_formed_and_shallow(s in any::<u64>(), depth in 2usize..7) {
        let cfg = SamplerConfig::new(depth, 19);
        let n = sample_program(&cfg, &mut seed::rng(&[s]));
        let nb = syntax_neighbor(&n, &cfg, &mut seed::rng(&[s, 1]));
        prop_assert!(nb.program.root().check().is_ok());
        prop_assert!(nb.program.stmt_depth() <= depth);
        prop_assert_eq!(nb.program.node(nb.at).is_some(), nb.at.0 < n.node_count());
        prop_assert_eq!(nb.at_kind, n.node(nb.at).unwrap().kind());
    }
}
