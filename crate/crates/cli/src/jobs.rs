//! Fully resolved command configurations.
//!
//! A job is what a run executes and what its manifest records. It is built by
//! layering flags over a TOML key-value file over the defaults below.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use wordprune::selection::Derivation;
use wordprune::{AnnealConfig, Metric};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Job {
    BuildCodebook(BuildCodebookJob),
    Encode(EncodeJob),
    Select(SelectJob),
    Eval(EvalJob),
    Validate(ValidateJob),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Hard,
    Soft,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildCodebookJob {
    pub corpus: PathBuf,
    pub k: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub metric: Metric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeJob {
    pub corpus: PathBuf,
    pub codebook: PathBuf,
    pub scheme: Scheme,
    /// Soft-coding softness.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default)]
    pub retain_coding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectJob {
    pub scheme: Scheme,
    /// Representation CSV (hard) or coding file (soft) over the full codebook.
    pub input: PathBuf,
    pub neighbors: PathBuf,
    pub target_size: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Defaults to 100 for hard and 500 for soft coding.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmax: Option<usize>,
    #[serde(default = "default_move_size")]
    pub move_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub derivation: Derivation,
}

impl SelectJob {
    pub fn anneal_config(&self) -> AnnealConfig {
        let base = match self.scheme {
            Scheme::Hard => AnnealConfig::hard(self.target_size, self.seed),
            Scheme::Soft => AnnealConfig::soft(self.target_size, self.seed),
        };
        AnnealConfig {
            lambda: self.lambda,
            tmax: self.tmax.unwrap_or(base.tmax),
            move_size: self.move_size,
            derivation: self.derivation,
            ..base
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    Psi,
    ExactPsi,
    Discard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalJob {
    pub train: PathBuf,
    pub test: PathBuf,
    /// Without a subset both sets are used over the full codebook.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subset: Option<PathBuf>,
    #[serde(default = "default_method")]
    pub method: EvalMethod,
    /// Needed by `psi`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<PathBuf>,
    /// Needed by `exact-psi`, together with `sigma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codebook: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default = "default_eval_lambda_samples")]
    pub lambda_samples: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[serde(rename = "prop1")]
    TransferMean,
    Variance,
    #[serde(rename = "claim2")]
    SoftExactness,
    HeuristicGap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateJob {
    pub experiment: Experiment,
    /// Component means of the synthetic mixture; the codebook is these means.
    #[serde(default = "default_means")]
    pub means: Vec<Vec<f64>>,
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Pruned word, 0-based.
    #[serde(default = "default_word")]
    pub word: usize,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_lambda_samples")]
    pub lambda_samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Variance law: descriptors per trial inside the pruned cell.
    #[serde(default = "default_in_cell")]
    pub in_cell: usize,
    /// Soft exactness: number of random corpora and the range of `K`.
    #[serde(default = "default_instances")]
    pub instances: usize,
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Heuristic gap grid.
    #[serde(default = "default_sigmas")]
    pub sigmas: Vec<f64>,
    #[serde(default = "default_ms")]
    pub ms: Vec<usize>,
}

fn default_m() -> usize {
    5
}
fn default_max_iter() -> usize {
    100
}
fn default_tol() -> f64 {
    1e-6
}
fn default_lambda() -> f64 {
    AnnealConfig::DEFAULT_LAMBDA
}
fn default_move_size() -> usize {
    AnnealConfig::DEFAULT_MOVE_SIZE
}
fn default_method() -> EvalMethod {
    EvalMethod::Psi
}
fn default_eval_lambda_samples() -> usize {
    100_000
}
fn default_c() -> f64 {
    1.0
}
fn default_epochs() -> usize {
    50
}
fn default_means() -> Vec<Vec<f64>> {
    (0..5).map(|i| vec![i as f64]).collect()
}
fn default_sigma() -> f64 {
    0.5
}
fn default_word() -> usize {
    2
}
fn default_n() -> usize {
    10_000
}
fn default_trials() -> usize {
    200
}
fn default_lambda_samples() -> usize {
    1_000_000
}
fn default_in_cell() -> usize {
    2_000
}
fn default_instances() -> usize {
    50
}
fn default_k_min() -> usize {
    10
}
fn default_k_max() -> usize {
    100
}
fn default_sigmas() -> Vec<f64> {
    vec![0.1, 0.3, 1.0]
}
fn default_ms() -> Vec<usize> {
    vec![1, 2, 4]
}

impl Job {
    pub fn name(&self) -> &'static str {
        match self {
            Job::BuildCodebook(_) => "build-codebook",
            Job::Encode(_) => "encode",
            Job::Select(_) => "select",
            Job::Eval(_) => "eval",
            Job::Validate(_) => "validate",
        }
    }

    /// Layers `overrides` over the TOML file at `config` and resolves defaults.
    pub fn assemble(command: &str, config: Option<&Path>, overrides: Value) -> CliResult<Job> {
        let mut table = match config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(e.to_string()).at(path))?;
                let value: Value = toml::from_str(&text).map_err(|e| CliError::usage(e.to_string()).at(path))?;
                match value {
                    Value::Object(map) => map,
                    _ => return Err(CliError::usage("config must be a key-value table").at(path)),
                }
            }
            None => Map::new(),
        };
        if let Some(c) = table.get("command") {
            if c.as_str() != Some(command) {
                return Err(CliError::usage(format!("config is for command {c}, not {command:?}")));
            }
        }
        if let Value::Object(flags) = overrides {
            table.extend(flags.into_iter().filter(|(_, v)| !v.is_null()));
        }
        table.insert("command".into(), Value::String(command.into()));
        let mut job: Job = serde_json::from_value(Value::Object(table)).map_err(|e| CliError::usage(e.to_string()))?;
        job.fill_defaults();
        Ok(job)
    }

    /// Writes defaults that depend on other fields into the job, so the
    /// recorded configuration is complete.
    fn fill_defaults(&mut self) {
        if let Job::Select(s) = self {
            s.tmax = Some(s.anneal_config().tmax);
        }
    }

    /// Input files by role.
    pub fn inputs_mut(&mut self) -> Vec<(&'static str, &mut PathBuf)> {
        let mut v: Vec<(&'static str, &mut PathBuf)> = Vec::new();
        match self {
            Job::BuildCodebook(j) => v.push(("corpus", &mut j.corpus)),
            Job::Encode(j) => {
                v.push(("corpus", &mut j.corpus));
                v.push(("codebook", &mut j.codebook));
            }
            Job::Select(j) => {
                v.push(("input", &mut j.input));
                v.push(("neighbors", &mut j.neighbors));
            }
            Job::Eval(j) => {
                v.push(("train", &mut j.train));
                v.push(("test", &mut j.test));
                if let Some(p) = &mut j.subset {
                    v.push(("subset", p));
                }
                if let Some(p) = &mut j.neighbors {
                    v.push(("neighbors", p));
                }
                if let Some(p) = &mut j.codebook {
                    v.push(("codebook", p));
                }
            }
            Job::Validate(_) => {}
        }
        v
    }

    pub fn seeds(&self) -> Vec<(&'static str, u64)> {
        match self {
            Job::BuildCodebook(j) => vec![("kmeans", j.seed)],
            Job::Encode(_) => vec![],
            Job::Select(j) => vec![("anneal", j.seed)],
            Job::Eval(j) => match j.method {
                EvalMethod::ExactPsi => vec![("lambda", j.seed)],
                _ => vec![],
            },
            Job::Validate(j) => vec![("experiment", j.seed)],
        }
    }

    /// The configuration as a TOML key-value file.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("jobs serialize to TOML")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn defaults_are_prefilled() {
        let job = Job::assemble("select", None, json!({"scheme": "soft", "input": "h.json", "neighbors": "n.json", "target_size": 3}))
            .unwrap();
        let Job::Select(s) = &job else { panic!() };
        assert_eq!((s.lambda, s.tmax, s.move_size), (0.9, Some(500), 10));
        let text = job.to_toml();
        assert!(text.contains("tmax = 500") && text.contains("lambda = 0.9") && text.contains("move_size = 10"));
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "corpus = \"x\"\nk = 7\nseed = 3\n").unwrap();
        let job = Job::assemble("build-codebook", Some(&path), json!({"seed": 9, "k": null})).unwrap();
        let Job::BuildCodebook(b) = job else { panic!() };
        assert_eq!((b.k, b.seed, b.m), (7, 9, 5));
    }

    #[test]
    fn unknown_and_missing_keys_are_usage_errors() {
        let e = Job::assemble("build-codebook", None, json!({"corpus": "x", "k": 3, "kk": 1})).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e = Job::assemble("build-codebook", None, json!({"corpus": "x"})).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn toml_round_trip() {
        let job = Job::assemble("validate", None, json!({"experiment": "heuristic-gap"})).unwrap();
        let back: Job = toml::from_str(&job.to_toml()).unwrap();
        assert_eq!(back, job);
    }
}
