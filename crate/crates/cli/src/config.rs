//! Experiment settings: a flat TOML file overlaid by command-line flags.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use innatecoder::dsl::SamplerConfig;
use innatecoder::exec::Exec;
use innatecoder::interp::ExecLimits;
use innatecoder::options::prompts::Detail;
use innatecoder::options::{EndpointConfig, API_KEY_ENV};
use innatecoder::search::{Method, SearchConfig};
use innatecoder::tasks::TaskId;
use serde::Deserialize;

pub const DEFAULT_SEED_COUNT: u64 = 30;

/// Every setting is optional here; unset ones fall back to the config file,
/// then to the built-in default.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    /// Tasks, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub tasks: Option<Vec<TaskId>>,
    /// Methods (IC, SHC, LISS-o, LISS-r, FM), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Master seeds, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// Use seeds 0..N when no explicit list is given.
    #[arg(long)]
    pub seed_count: Option<u64>,
    /// Neighbours per hill-climbing iteration.
    #[arg(long)]
    pub k: Option<usize>,
    /// Probability of a syntax move per neighbour draw.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub episode_budget: Option<u64>,
    /// Initial states per evaluation.
    #[arg(long)]
    pub eval_size: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub number_cap: Option<u32>,
    #[arg(long)]
    pub max_actions: Option<u32>,
    #[arg(long)]
    pub max_ticks: Option<u64>,
    #[arg(long)]
    pub crash_penalty: Option<f64>,
    /// Programs sampled for LISS-r.
    #[arg(long)]
    pub random_corpus_size: Option<usize>,
    /// `parallel` or `sequential`.
    #[arg(long)]
    pub exec: Option<Exec>,
    /// Directory holding `<Task>.jsonl` corpora.
    #[arg(long)]
    pub corpus_dir: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Chat-completions base URL.
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    /// Programs requested per harvest.
    #[arg(long)]
    pub requests: Option<usize>,
    /// Prompt detail level: `more` or `less`.
    #[arg(long)]
    pub detail: Option<Detail>,
}

macro_rules! overlay {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        Settings { $($f: $hi.$f.or($lo.$f),)* }
    };
}

impl Settings {
    pub fn load(path: &Path) -> Result<Settings> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// `self` wins over `lower`.
    pub fn over(self, lower: Settings) -> Settings {
        overlay!(
            self,
            lower,
            tasks,
            methods,
            seeds,
            seed_count,
            k,
            epsilon,
            episode_budget,
            eval_size,
            max_depth,
            number_cap,
            max_actions,
            max_ticks,
            crash_penalty,
            random_corpus_size,
            exec,
            corpus_dir,
            out_dir,
            base_url,
            model,
            temperature,
            max_in_flight,
            timeout_secs,
            requests,
            detail
        )
    }

    pub fn tasks(&self) -> Vec<TaskId> {
        self.tasks.clone().unwrap_or_else(|| TaskId::ALL.to_vec())
    }

    pub fn methods(&self) -> Vec<Method> {
        self.methods.clone().unwrap_or_else(|| Method::ALL.to_vec())
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        let seeds = match &self.seeds {
            Some(s) => s.clone(),
            None => (0..self.seed_count.unwrap_or(DEFAULT_SEED_COUNT)).collect(),
        };
        if seeds.is_empty() {
            bail!("no seeds");
        }
        if seeds.iter().collect::<HashSet<_>>().len() != seeds.len() {
            bail!("seeds must be distinct");
        }
        Ok(seeds)
    }

    pub fn exec(&self) -> Exec {
        self.exec.unwrap_or_default()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from("runs"))
    }

    pub fn corpus_path(&self, task: TaskId) -> Option<PathBuf> {
        self.corpus_dir.as_ref().map(|d| d.join(format!("{task}.jsonl")))
    }

    pub fn search(&self, task: TaskId, method: Method, seed: u64) -> Result<SearchConfig> {
        let mut cfg = SearchConfig::new(task, method, seed);
        cfg.k = self.k.unwrap_or(cfg.k);
        cfg.epsilon = self.epsilon.unwrap_or(cfg.epsilon);
        cfg.episode_budget = self.episode_budget.unwrap_or(cfg.episode_budget);
        cfg.eval_size = self.eval_size.unwrap_or(cfg.eval_size);
        let depth = self.max_depth.unwrap_or(cfg.sampler.max_depth);
        cfg.sampler = SamplerConfig::new(depth, self.number_cap.unwrap_or(cfg.sampler.number_cap()));
        cfg.sampler.validate()?;
        let lim = ExecLimits::default();
        let (acts, ticks) = (
            self.max_actions.unwrap_or(lim.max_actions),
            self.max_ticks.unwrap_or(lim.max_ticks),
        );
        if acts == 0 || ticks == 0 {
            bail!("execution limits must be positive");
        }
        cfg.limits = ExecLimits::new(acts, ticks);
        cfg.crash_penalty = self.crash_penalty.unwrap_or(cfg.crash_penalty);
        cfg.random_corpus_size = self.random_corpus_size.unwrap_or(cfg.random_corpus_size);
        cfg.exec = self.exec();
        if cfg.k == 0 || cfg.eval_size == 0 || cfg.episode_budget == 0 {
            bail!("k, eval_size and episode_budget must be positive");
        }
        if !(0.0..=1.0).contains(&cfg.epsilon) {
            bail!("epsilon must lie in [0, 1]");
        }
        Ok(cfg)
    }

    /// Endpoint settings; the key comes from the environment only.
    pub fn endpoint(&self) -> EndpointConfig {
        let d = EndpointConfig::default();
        EndpointConfig {
            base_url: self.base_url.clone().unwrap_or(d.base_url),
            model: self.model.clone().unwrap_or(d.model),
            temperature: self.temperature.unwrap_or(d.temperature),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            max_in_flight: self.max_in_flight.unwrap_or(d.max_in_flight),
            timeout_secs: self.timeout_secs.unwrap_or(d.timeout_secs),
            number_cap: self.number_cap.unwrap_or(d.number_cap),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_file() {
        let file: Settings =
            toml::from_str("k = 10\nepsilon = 0.2\ntasks = [\"Maze\"]\nmethods = [\"LISS-o\"]").unwrap();
        let flags = Settings {
            k: Some(5),
            ..Settings::default()
        };
        let s = flags.over(file);
        assert_eq!(s.k, Some(5));
        assert_eq!(s.epsilon, Some(0.2));
        assert_eq!(s.tasks(), vec![TaskId::Maze]);
        assert_eq!(s.methods(), vec![Method::LissO]);
        assert_eq!(s.seeds().unwrap().len(), 30);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<Settings>("kk = 1").is_err());
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let s = Settings {
            seeds: Some(vec![1, 1]),
            ..Settings::default()
        };
        assert!(s.seeds().is_err());
    }
}
