use std::collections::HashSet;

use innatecoder::dsl::{parse, sample_kind, sample_program, NodeId, NonTerminal, Program, SamplerConfig};
use innatecoder::seed;
use proptest::prelude::*;

mod common;
use common::count_from_tokens;

#[test]
fn round_trip_ten_thousand_samples() {
    let cfg = SamplerConfig::default();
    let mut rng = seed::rng(&[41]);
    for _ in 0..10_000 {
        let p = sample_program(&cfg, &mut rng);
        let text = p.to_string();
        let back = parse(&text).unwrap_or_else(|e| panic!("{text}: {e}"));
        assert_eq!(back, p);
        assert_eq!(back.to_string(), text);
    }
}

#[test]
fn subprogram_count_matches_token_oracle() {
    let cfg = SamplerConfig::default();
    let mut rng = seed::rng(&[42]);
    for _ in 0..1000 {
        let p = sample_program(&cfg, &mut rng);
        let want = count_from_tokens(&p.to_string());
        assert_eq!(p.subprograms().len(), want, "{p}");
        assert_eq!(p.node_count(), want);
    }
}

#[test]
fn single_action_node_frequencies() {
    // Three nodes, 30,000 draws: each within 3 sigma of 10,000.
    let p: Program = "DEF run m( move m)".parse().unwrap();
    let mut rng = seed::rng(&[43]);
    let mut hits = [0u32; 3];
    for _ in 0..30_000 {
        hits[p.random_nonterminal_node(&mut rng).0] += 1;
    }
    let sigma = (30_000.0f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
    for h in hits {
        assert!((h as f64 - 10_000.0).abs() < 3.0 * sigma, "{hits:?}");
    }
}

#[test]
fn ten_node_chi_square() {
    let p: Program = "DEF run m( REPEAT R=3 r( IFELSE c( frontIsClear c) i( move i) ELSE e( turnLeft e) r) m)"
        .parse()
        .unwrap();
    let n = p.node_count();
    assert_eq!(n, 10);
    let draws = 100_000;
    let mut hits = vec![0u32; n];
    let mut rng = seed::rng(&[44]);
    for _ in 0..draws {
        hits[p.random_nonterminal_node(&mut rng).0] += 1;
    }
    let e = draws as f64 / n as f64;
    let chi2: f64 = hits.iter().map(|&h| (h as f64 - e).powi(2) / e).sum();
    // 99.9th percentile of chi-square with 9 degrees of freedom.
    assert!(chi2 < 27.88, "chi2 = {chi2}");
}

#[test]
fn sampler_respects_depth_on_every_node() {
    let mut rng = seed::rng(&[45]);
    for depth in 1..=6 {
        let cfg = SamplerConfig::new(depth, 19);
        for _ in 0..500 {
            let p = sample_program(&cfg, &mut rng);
            for i in 0..p.node_count() {
                assert!(p.root().depth_of(i).unwrap() <= depth);
            }
            assert!(p.stmt_depth() <= depth);
        }
    }
}

fn arb_program() -> impl Strategy<Value = Program> {
    (any::<u64>(), 1usize..7).prop_map(|(s, d)| sample_program(&SamplerConfig::new(d, 19), &mut seed::rng(&[s])))
}

proptest! {
    #[test]
    fn replace_subtree_stays_well_formed(p in arb_program(), s in any::<u64>()) {
        let mut rng = seed::rng(&[s]);
        let at = p.random_nonterminal_node(&mut rng);
        let kind = p.node(at).unwrap().kind();
        let with = sample_kind(&SamplerConfig::default(), kind, 4, &mut rng);
        let q = p.replace_subtree(at, with).unwrap();
        let back = parse(&q.to_string()).unwrap();
        prop_assert_eq!(&back, &q);
        // The original is untouched.
        prop_assert_eq!(parse(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn mismatched_kinds_are_rejected(p in arb_program(), s in any::<u64>()) {
        let mut rng = seed::rng(&[s]);
        let at = p.random_nonterminal_node(&mut rng);
        let kind = p.node(at).unwrap().kind();
        let other = NonTerminal::ALL.into_iter().find(|k| *k != kind && *k != NonTerminal::Rho).unwrap();
        let with = sample_kind(&SamplerConfig::default(), other, 2, &mut rng);
        prop_assert!(p.replace_subtree(at, with).is_err());
    }

    #[test]
    fn subtrees_print_and_reparse(p in arb_program()) {
        let mut seen = HashSet::new();
        for (kind, node) in p.subprograms() {
            prop_assert_eq!(node.kind(), kind);
            if let Some(q) = Program::from_subtree(&node) {
                prop_assert_eq!(parse(&q.to_string()).unwrap(), q);
            }
            seen.insert(node.to_string());
        }
        prop_assert!(!seen.is_empty());
        prop_assert!(p.node(NodeId(p.node_count())).is_none());
    }
}
