//! Chat-completions client for harvesting candidate programs.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use super::corpus::parse_any;
use crate::dsl::{Program, DEFAULT_NUMBER_CAP};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "INNATECODER_API_KEY";

const SYSTEM_MESSAGE: &str = "You write programs for Karel the Robot in the domain-specific language you are given.";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    /// Base URL; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    #[serde(skip)]
    pub api_key: Option<String>,
    pub max_in_flight: usize,
    pub timeout_secs: u64,
    pub number_cap: u32,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        EndpointConfig {
            base_url: "https://api.openai.com/v1".into(),
            model: "gpt-4o".into(),
            temperature: 1.0,
            api_key: None,
            max_in_flight: 4,
            timeout_secs: 120,
            number_cap: DEFAULT_NUMBER_CAP,
        }
    }
}

impl EndpointConfig {
    fn url(&self) -> String {
        format!("{}/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

#[derive(Clone, Debug)]
pub enum Endpoint {
    Http(EndpointConfig),
    /// Replays canned reply texts, request `i` getting reply `i mod len`.
    Mock(Vec<String>),
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HarvestReport {
    pub requested: usize,
    pub returned: usize,
    pub parsed: usize,
    pub discarded: usize,
    pub errors: Vec<String>,
}

#[derive(Debug, Error)]
pub enum HarvestError {
    #[error("no program could be parsed from {} requests", .0.requested)]
    NothingParsed(HarvestReport),
    #[error("request count must be at least 1")]
    NoRequests,
}

/// Text between the first `<program>` and the following `</program>`.
pub fn extract_program(reply: &str) -> Option<&str> {
    let start = reply.find("<program>")? + "<program>".len();
    let len = reply[start..].find("</program>")?;
    Some(reply[start..start + len].trim())
}

fn ask(agent: &ureq::Agent, cfg: &EndpointConfig, prompt: &str) -> Result<String, String> {
    let body = json!({
        "model": cfg.model,
        "temperature": cfg.temperature,
        "messages": [
            {"role": "system", "content": SYSTEM_MESSAGE},
            {"role": "user", "content": prompt},
        ],
    });
    let mut req = agent.post(&cfg.url());
    if let Some(key) = &cfg.api_key {
        req = req.header("Authorization", &format!("Bearer {key}"));
    }
    let mut resp = req.send_json(&body).map_err(|e| e.to_string())?;
    let status = resp.status();
    let text = resp.body_mut().read_to_string().map_err(|e| e.to_string())?;
    if !status.is_success() {
        let snippet: String = text.chars().take(200).collect();
        return Err(format!("HTTP {}: {snippet}", status.as_u16()));
    }
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("bad JSON: {e}"))?;
    v["choices"][0]["message"]["content"]
        .as_str()
        .map(str::to_owned)
        .ok_or_else(|| "reply has no choices[0].message.content".to_string())
}

/// Sends `n` independent requests with `prompt` and parses the program in each
/// reply. Failed requests and unparseable replies are counted in the report;
/// only a run with zero parsed programs is an error. Programs come back in
/// request order regardless of completion order.
pub fn harvest(endpoint: &Endpoint, prompt: &str, n: usize) -> Result<(Vec<Program>, HarvestReport), HarvestError> {
    if n == 0 {
        return Err(HarvestError::NoRequests);
    }
    let replies: Vec<Result<String, String>> = match endpoint {
        Endpoint::Mock(texts) => (0..n)
            .map(|i| {
                texts
                    .get(i % texts.len().max(1))
                    .cloned()
                    .ok_or_else(|| "mock has no replies".to_string())
            })
            .collect(),
        Endpoint::Http(cfg) => {
            let agent: ureq::Agent = ureq::Agent::config_builder()
                .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
                .http_status_as_error(false)
                .build()
                .into();
            let slots: Vec<Mutex<Option<Result<String, String>>>> = (0..n).map(|_| Mutex::new(None)).collect();
            let next = AtomicUsize::new(0);
            std::thread::scope(|s| {
                for _ in 0..cfg.max_in_flight.clamp(1, n) {
                    s.spawn(|| loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            break;
                        }
                        let r = ask(&agent, cfg, prompt);
                        *slots[i].lock().unwrap() = Some(r);
                    });
                }
            });
            slots
                .into_iter()
                .map(|m| m.into_inner().unwrap().expect("every slot filled"))
                .collect()
        }
    };

    let cap = match endpoint {
        Endpoint::Http(cfg) => cfg.number_cap,
        Endpoint::Mock(_) => DEFAULT_NUMBER_CAP,
    };
    let mut report = HarvestReport {
        requested: n,
        ..HarvestReport::default()
    };
    let mut programs = Vec::new();
    for (i, reply) in replies.into_iter().enumerate() {
        let text = match reply {
            Ok(t) => t,
            Err(e) => {
                log::warn!("request {i}: {e}");
                report.errors.push(e);
                continue;
            }
        };
        report.returned += 1;
        match extract_program(&text).map(|body| parse_any(body, cap)) {
            Some(Ok(p)) => {
                report.parsed += 1;
                programs.push(p);
            }
            Some(Err(e)) => {
                log::info!("request {i}: discarded unparseable program: {e}");
                report.discarded += 1;
            }
            None => {
                log::info!("request {i}: discarded reply without a <program> tag");
                report.discarded += 1;
            }
        }
    }
    if programs.is_empty() {
        return Err(HarvestError::NothingParsed(report));
    }
    Ok((programs, report))
}
