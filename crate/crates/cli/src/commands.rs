use std::collections::BTreeMap;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use innatecoder::dsl::{Program, DEFAULT_NUMBER_CAP};
use innatecoder::options::prompts::prompt;
use innatecoder::options::{
    harvest as harvest_programs, load_corpus, parse_any, write_corpus, write_options, CorpusEntry, CorpusLine,
    Endpoint, HarvestError, HarvestReport, Origin, API_KEY_ENV,
};
use innatecoder::search::{build_omega, run_method, summarize, CurveRow, Method, OptionStats, SearchRun, SummaryRow};
use innatecoder::tasks::TaskId;
use serde::Serialize;

use crate::config::Settings;

const MAX_CURVE_POINTS: usize = 1000;

pub fn harvest(task: TaskId, out: &Path, from_corpus: Option<&Path>, mock: Option<&Path>, s: &Settings) -> Result<()> {
    if let Some(src) = from_corpus {
        let report = copy_corpus(src, out)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    let n = s.requests.unwrap_or(100);
    let (endpoint, model) = match mock {
        Some(path) => (Endpoint::Mock(read_mock(path)?), "mock".to_string()),
        None => {
            let cfg = s.endpoint();
            if cfg.api_key.is_none() {
                log::warn!("{API_KEY_ENV} is not set; sending requests without a key");
            }
            let model = cfg.model.clone();
            (Endpoint::Http(cfg), model)
        }
    };
    let text = prompt(task, s.detail.unwrap_or_default());
    match harvest_programs(&endpoint, &text, n) {
        Ok((programs, report)) => {
            let entries: Vec<CorpusEntry> = programs
                .into_iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut e = CorpusEntry::new(p, Origin::Llm);
                    e.line.task = Some(task.name().to_string());
                    e.line.model = Some(model.clone());
                    e.line.seed = Some(i as u64);
                    e
                })
                .collect();
            write_corpus(out, &entries).with_context(|| format!("writing {}", out.display()))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Err(HarvestError::NothingParsed(report)) => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            bail!("no program could be parsed from {} requests", report.requested)
        }
        Err(e) => Err(e.into()),
    }
}

fn read_mock(path: &Path) -> Result<Vec<String>> {
    let file = io::BufReader::new(fs::File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut replies = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply: String = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}: expected a JSON string", path.display(), i + 1))?;
        replies.push(reply);
    }
    if replies.is_empty() {
        bail!("{}: no replies", path.display());
    }
    Ok(replies)
}

/// Keeps the lines of `src` that hold a parseable program, byte for byte.
fn copy_corpus(src: &Path, out: &Path) -> Result<HarvestReport> {
    let text = fs::read_to_string(src).with_context(|| format!("reading {}", src.display()))?;
    let mut report = HarvestReport::default();
    let mut kept = String::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        report.requested += 1;
        report.returned += 1;
        let ok = serde_json::from_str::<CorpusLine>(line)
            .map_err(|e| e.to_string())
            .and_then(|l| parse_any(&l.program, DEFAULT_NUMBER_CAP).map_err(|e| e.to_string()));
        match ok {
            Ok(_) => {
                report.parsed += 1;
                kept.push_str(line);
                kept.push('\n');
            }
            Err(e) => {
                report.discarded += 1;
                report.errors.push(format!("line {}: {e}", i + 1));
            }
        }
    }
    if report.parsed == 0 {
        println!("{}", serde_json::to_string_pretty(&report)?);
        bail!("{}: no valid programs", src.display());
    }
    fs::write(out, kept).with_context(|| format!("writing {}", out.display()))?;
    Ok(report)
}

fn corpus_programs(path: &Path) -> Result<Vec<Program>> {
    Ok(load_corpus(path)?.into_iter().map(|e| e.program).collect())
}

#[derive(Serialize)]
struct OptionsReport {
    task: TaskId,
    programs: usize,
    pool: usize,
    states: usize,
    excluded_kinds: usize,
    duplicates: usize,
    options: usize,
    pipeline_ticks: u64,
}

pub fn options(task: TaskId, corpus: Option<PathBuf>, out: &Path, seed: u64, s: &Settings) -> Result<()> {
    let path = corpus
        .or_else(|| s.corpus_path(task))
        .context("no corpus given (use --corpus or corpus_dir)")?;
    let programs = corpus_programs(&path)?;
    let cfg = s.search(task, Method::Ic, seed)?;
    let (omega, stats) = build_omega(&cfg, &programs)?;
    write_options(out, &omega).with_context(|| format!("writing {}", out.display()))?;
    let report = OptionsReport {
        task,
        programs: stats.programs,
        pool: stats.pool,
        states: stats.states,
        excluded_kinds: stats.filter.excluded_kinds,
        duplicates: stats.filter.duplicates,
        options: stats.filter.kept,
        pipeline_ticks: stats.collect_ticks + stats.filter.ticks,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

/// One line of `runs.jsonl`.
#[derive(Serialize)]
struct RunRecord<'a> {
    task: TaskId,
    method: Method,
    seed: u64,
    best_return: f64,
    episodes: u64,
    restarts: usize,
    ticks: u64,
    best_program: String,
    omega_size: usize,
    options_used: &'a [usize],
    option_stats: Option<OptionStats>,
}

impl<'a> RunRecord<'a> {
    fn new(r: &'a SearchRun) -> Self {
        RunRecord {
            task: r.task,
            method: r.method,
            seed: r.seed,
            best_return: r.best_value,
            episodes: r.episodes,
            restarts: r.restarts,
            ticks: r.ticks,
            best_program: r.best_program.to_string(),
            omega_size: r.omega_size,
            options_used: &r.options_used,
            option_stats: r.option_stats,
        }
    }
}

pub fn run(s: &Settings) -> Result<()> {
    let tasks = s.tasks();
    let methods = s.methods();
    let seeds = s.seeds()?;
    let mut corpora: BTreeMap<TaskId, Vec<Program>> = BTreeMap::new();
    if methods.iter().any(|m| m.needs_corpus()) {
        for &t in &tasks {
            let path = s
                .corpus_path(t)
                .with_context(|| format!("{t}: IC and FM need a corpus (set corpus_dir)"))?;
            corpora.insert(t, corpus_programs(&path)?);
        }
    }
    let mut jobs = Vec::new();
    for &t in &tasks {
        for &m in &methods {
            for &seed in &seeds {
                jobs.push(s.search(t, m, seed)?);
            }
        }
    }
    log::info!("{} runs", jobs.len());
    let results = s.exec().map(&jobs, |cfg| {
        let corpus = corpora.get(&cfg.task).map(Vec::as_slice);
        let r = run_method(cfg, corpus);
        if let Ok(r) = &r {
            log::info!("{} {} seed {}: {:.4}", r.task, r.method, r.seed, r.best_value);
        }
        r
    });
    let runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let dir = s.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut w = csv::Writer::from_path(dir.join("curves.csv"))?;
    for r in &runs {
        for row in CurveRow::from_run(r, MAX_CURVE_POINTS) {
            w.serialize(row)?;
        }
    }
    w.flush()?;
    let mut lines = io::BufWriter::new(fs::File::create(dir.join("runs.jsonl"))?);
    for r in &runs {
        serde_json::to_writer(&mut lines, &RunRecord::new(r))?;
        lines.write_all(b"\n")?;
    }
    lines.flush()?;
    let summary = summarize(runs.iter().map(SearchRun::final_entry));
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    print_table(&summary);
    Ok(())
}

fn print_table(rows: &[SummaryRow]) {
    println!(
        "{:<13} {:<7} {:>4} {:>8} {:>8}",
        "task", "method", "runs", "mean", "ci95"
    );
    for r in rows {
        println!(
            "{:<13} {:<7} {:>4} {:>8.4} {:>8.4}",
            r.task.name(),
            r.method.name(),
            r.runs,
            r.mean,
            r.ci95
        );
    }
}

pub fn read_curves(path: &Path) -> Result<Vec<CurveRow>> {
    let mut rd = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let rows = rd
        .deserialize()
        .collect::<Result<Vec<CurveRow>, _>>()
        .with_context(|| format!("reading {}", path.display()))?;
    if rows.is_empty() {
        bail!("{}: no rows", path.display());
    }
    Ok(rows)
}

/// The last row of every (task, method, seed) curve.
pub fn final_rows(rows: &[CurveRow]) -> Vec<&CurveRow> {
    let mut last: BTreeMap<(TaskId, Method, u64), &CurveRow> = BTreeMap::new();
    for r in rows {
        let e = last.entry((r.task, r.method, r.seed)).or_insert(r);
        if r.episodes >= e.episodes {
            *e = r;
        }
    }
    last.into_values().collect()
}

pub fn report(curves: &Path, out: Option<&Path>) -> Result<()> {
    let rows = read_curves(curves)?;
    let summary = summarize(
        final_rows(&rows)
            .into_iter()
            .map(|r| (r.task, r.method, r.best_return, r.episodes)),
    );
    let text = serde_json::to_string_pretty(&summary)? + "\n";
    match out {
        Some(p) => {
            fs::write(p, text).with_context(|| format!("writing {}", p.display()))?;
            print_table(&summary);
        }
        None => print!("{text}"),
    }
    Ok(())
}
