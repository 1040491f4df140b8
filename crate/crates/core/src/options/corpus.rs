use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{
    parse_prompt_syntax, parse_with, NonTerminal, ParseError, Program, SamplerConfig, DEFAULT_NUMBER_CAP,
};
use crate::search::syntax_neighbor;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Llm,
    Sampler,
    Manual,
}

/// One line of a corpus file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusLine {
    pub program: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<String>,
    pub origin: Origin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusEntry {
    pub line: CorpusLine,
    pub program: Program,
}

impl CorpusEntry {
    pub fn new(program: Program, origin: Origin) -> CorpusEntry {
        let line = CorpusLine {
            program: program.to_string(),
            task: None,
            origin,
            model: None,
            seed: None,
        };
        CorpusEntry { line, program }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}: no valid programs")]
    Empty(PathBuf),
}

/// Parses program text in either concrete syntax: the `DEF run m( ... m)`
/// token form or the brace form used in prompts.
pub fn parse_any(text: &str, number_cap: u32) -> Result<Program, ParseError> {
    parse_with(text, number_cap).or_else(|first| parse_prompt_syntax(text, number_cap).map_err(|_| first))
}

/// Loads a JSON-lines corpus. Lines that fail to decode or parse are logged
/// and skipped.
pub fn load_corpus(path: &Path) -> Result<Vec<CorpusEntry>, CorpusError> {
    let io_err = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = io::BufReader::new(fs::File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CorpusLine = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("{}:{}: skipped: {e}", path.display(), i + 1);
                continue;
            }
        };
        match parse_any(&rec.program, DEFAULT_NUMBER_CAP) {
            Ok(program) => out.push(CorpusEntry { line: rec, program }),
            Err(e) => log::warn!("{}:{}: skipped: {e}", path.display(), i + 1),
        }
    }
    if out.is_empty() {
        return Err(CorpusError::Empty(path.to_path_buf()));
    }
    Ok(out)
}

/// Writes entries one per line; program text is re-printed in token form.
pub fn write_corpus(path: &Path, entries: &[CorpusEntry]) -> io::Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    for e in entries {
        let mut line = e.line.clone();
        line.program = e.program.to_string();
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Expands `bases` to `n` programs: the bases verbatim, then copies with one
/// or two small sub-statement mutations each, cycling through the bases.
/// Mutants rejected by `keep` are redrawn.
pub fn perturbed_corpus(bases: &[Program], n: usize, key: u64, keep: impl Fn(&Program) -> bool) -> Vec<Program> {
    assert!(!bases.is_empty(), "no base programs");
    let cfg = SamplerConfig::new(3, DEFAULT_NUMBER_CAP);
    (0..n)
        .map(|i| {
            let base = &bases[i % bases.len()];
            if i < bases.len() {
                return base.clone();
            }
            let mutations = 1 + (i / bases.len()) % 2;
            let mut rng = seed::rng(&[key, i as u64]);
            for _ in 0..1000 {
                let mut p = base.clone();
                for _ in 0..mutations {
                    loop {
                        let nb = syntax_neighbor(&p, &cfg, &mut rng);
                        if nb.at_kind != NonTerminal::Rho {
                            p = nb.program;
                            break;
                        }
                    }
                }
                if keep(&p) {
                    return p;
                }
            }
            panic!("no acceptable mutant of {base}");
        })
        .collect()
}
