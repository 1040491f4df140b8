use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CurvePoint, Method, SearchRun};
use crate::tasks::TaskId;

/// One line of a learning-curve file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub seed: u64,
    pub method: Method,
    pub task: TaskId,
    pub episodes: u64,
    #[serde(serialize_with = "ser_sig6")]
    pub best_return: f64,
}

fn ser_sig6<S: serde::Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&sig6(*x))
}

impl CurveRow {
    pub fn from_run(run: &SearchRun, max_points: usize) -> Vec<CurveRow> {
        downsample(&run.curve, max_points)
            .into_iter()
            .map(|p| CurveRow {
                seed: run.seed,
                method: run.method,
                task: run.task,
                episodes: p.episodes,
                best_return: p.best,
            })
            .collect()
    }
}

/// `x` rounded to six significant digits, printed in its shortest form.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", if x == 0.0 { 0.0 } else { x });
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("float formatting round-trips");
    format!("{rounded}")
}

/// At most `max` points, always keeping the first and the last, evenly spaced
/// by index in between.
pub fn downsample(curve: &[CurvePoint], max: usize) -> Vec<CurvePoint> {
    if curve.len() <= max || max == 0 {
        return if max == 0 { Vec::new() } else { curve.to_vec() };
    }
    if max == 1 {
        return vec![*curve.last().unwrap()];
    }
    let last = curve.len() - 1;
    let mut out: Vec<CurvePoint> = (0..max).map(|i| curve[i * last / (max - 1)]).collect();
    out.dedup_by_key(|p| p.episodes);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: TaskId,
    pub method: Method,
    pub runs: usize,
    pub mean: f64,
    /// Half-width of the normal-approximation 95% interval of the mean.
    pub ci95: f64,
    pub mean_episodes: f64,
}

/// Mean final best return per (task, method), with a 1.96·stderr interval.
pub fn summarize<I: IntoIterator<Item = (TaskId, Method, f64, u64)>>(finals: I) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(TaskId, Method), Vec<(f64, u64)>> = BTreeMap::new();
    for (task, method, best, episodes) in finals {
        groups.entry((task, method)).or_default().push((best, episodes));
    }
    groups
        .into_iter()
        .map(|((task, method), v)| {
            let n = v.len() as f64;
            let mean = v.iter().map(|x| x.0).sum::<f64>() / n;
            let ci95 = if v.len() < 2 {
                0.0
            } else {
                let var = v.iter().map(|x| (x.0 - mean).powi(2)).sum::<f64>() / (n - 1.0);
                1.96 * (var / n).sqrt()
            };
            let mean_episodes = v.iter().map(|x| x.1 as f64).sum::<f64>() / n;
            SummaryRow {
                task,
                method,
                runs: v.len(),
                mean,
                ci95,
                mean_episodes,
            }
        })
        .collect()
}

impl SearchRun {
    pub fn final_entry(&self) -> (TaskId, Method, f64, u64) {
        (self.task, self.method, self.best_value, self.episodes)
    }
}
