//! `--config <file>` handling and the run configuration embedded in outputs.

use std::collections::BTreeMap;
use std::fs;

use anyhow::{bail, Context, Result};
use serde::Serialize;

/// Version tag written into every output.
pub const FORMAT_VERSION: &str = "manakov-sr/1";

/// Splices `key=value` lines from `--config` files into the argument list
/// directly after the subcommand, so that explicit flags, which come later,
/// take precedence.
pub fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            match iter.next() {
                Some(p) => path = Some(p),
                None => bail!("--config needs a path"),
            }
        } else if let Some(p) = arg.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read config file {path}"))?;
    let mut injected = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{path}:{}: expected key=value", lineno + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key == "config" {
            bail!("{path}:{}: config files cannot include other config files", lineno + 1);
        }
        match value {
            "true" if is_switch(&key) => injected.push(format!("--{key}")),
            "false" if is_switch(&key) => {}
            _ => injected.push(format!("--{key}={value}")),
        }
    }
    // argv[0] and the subcommand stay in front
    let at = rest.len().min(2);
    rest.splice(at..at, injected);
    Ok(rest)
}

fn is_switch(key: &str) -> bool {
    key == "reconstruct"
}

/// Comma-separated list of floats.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("bad number {t:?}")))
        .collect()
}

/// Everything that determines a run, serialized into every output.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inertia: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mass: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m0: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub checks: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruct: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fail_drift: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub i3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub casimir: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    pub outputs: BTreeMap<String, String>,
    pub format: String,
    pub execution: String,
}

impl RunConfig {
    /// One-line JSON form used in CSV preambles.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// `# format: ...` and `# config: ...` comment lines.
    pub fn csv_preamble(&self) -> String {
        format!("# format: {FORMAT_VERSION}\n# config: {}\n", self.to_json_line())
    }
}
