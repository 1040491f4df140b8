//! Regenerates the fixture corpora from the hand-written base programs:
//! `cargo run -p innatecoder-core --example gen_corpus`.
//!
//! The corpora stand in for foundation-model output, which is flawed: a
//! program scoring `STRONG` or more on a probe set of instances is rejected.

use std::fs;
use std::path::Path;

use innatecoder::interp::ExecLimits;
use innatecoder::options::{parse_any, perturbed_corpus, write_corpus, CorpusEntry, Origin};
use innatecoder::search::evaluate;
use innatecoder::tasks::{eval_set, TaskId};

const PROGRAMS: usize = 100;
const KEY: u64 = 0xc0de;
const PROBE_SEED: u64 = 0xfeed;
const PROBE_SIZE: usize = 200;
const STRONG: f64 = 0.9;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus");
    for (t, task) in TaskId::ALL.into_iter().enumerate() {
        let text = fs::read_to_string(dir.join("base").join(format!("{task}.txt"))).expect("base file");
        let bases: Vec<_> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| parse_any(l, 19).unwrap_or_else(|e| panic!("{task}: {l}: {e}")))
            .collect();
        let probe = eval_set(task, PROBE_SEED, PROBE_SIZE);
        let lim = ExecLimits::default();
        let weak = |p: &_| evaluate(p, &probe, &lim).value < STRONG;
        for b in &bases {
            assert!(weak(b), "{task}: base program too strong: {b}");
        }
        let entries: Vec<CorpusEntry> = perturbed_corpus(&bases, PROGRAMS, KEY + t as u64, weak)
            .into_iter()
            .enumerate()
            .map(|(i, p)| {
                let mut e = CorpusEntry::new(p, Origin::Manual);
                e.line.task = Some(task.name().to_string());
                e.line.seed = Some(i as u64);
                e
            })
            .collect();
        write_corpus(&dir.join(format!("{task}.jsonl")), &entries).expect("write corpus");
        println!("{task}: {} programs from {} bases", entries.len(), bases.len());
    }
}
