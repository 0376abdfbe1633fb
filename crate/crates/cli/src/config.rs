//! Experiment configuration.
//!
//! The file is TOML restricted to a fixed schema: a top-level `experiment`
//! key and the sections `[model]`, `[weights]`, `[run]` and `[output]`.
//! Which `[run]` keys are accepted depends on the experiment; anything else is
//! rejected with the line it appears on.

use std::fmt;
use std::str::FromStr;

use dlgibbs::annealing::{BackendKind, ProjectorMode};
use dlgibbs::hamiltonian::InstanceKind;
use dlgibbs::jumps::{CouplingKind, WeightKind, WeightProfile};
use dlgibbs::numerics::c;
use dlgibbs::sampler::FactorOrder;
use serde::Serialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{CliError, InModule, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Mix,
    Project,
    Parent,
    Anneal,
    Overlap,
    Estimate,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Mix,
        Experiment::Project,
        Experiment::Parent,
        Experiment::Anneal,
        Experiment::Overlap,
        Experiment::Estimate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Mix => "mix",
            Experiment::Project => "project",
            Experiment::Parent => "parent",
            Experiment::Anneal => "anneal",
            Experiment::Overlap => "overlap",
            Experiment::Estimate => "estimate",
        }
    }

    /// (required, optional) keys of the `[run]` section.
    fn run_keys(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Experiment::Mix => (&["beta", "k_max"], &["couplings", "order", "random_states", "trials"]),
            Experiment::Project => (&["ell_min", "ell_max"], &["planted_gammas", "planted_dim", "eps"]),
            Experiment::Parent => (&["beta"], &["couplings"]),
            Experiment::Anneal => (&["beta", "delta"], &["alpha", "couplings", "mode", "backend"]),
            Experiment::Overlap => (&["beta", "dbetas"], &[]),
            Experiment::Estimate => (
                &["beta", "eps"],
                &[
                    "delta",
                    "alpha",
                    "couplings",
                    "order",
                    "k_max",
                    "mode",
                    "sk_exponent",
                    "mix_constant",
                    "anneal_constant",
                ],
            ),
        }
    }

    /// Whether the experiment builds a thermal model, and so reads `[weights]`.
    fn uses_weights(self) -> bool {
        !matches!(self, Experiment::Project | Experiment::Overlap)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelBlock {
    pub kind: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WeightsBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tanh_scale: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tanh_beta_scaled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_cutoff: Option<f64>,
    /// Rows (ω, Re q, Im q).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<[f64; 3]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalize: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub couplings: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random_states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dbetas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted_gammas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub planted_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sk_exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mix_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub anneal_constant: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OutputBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: ModelBlock,
    #[serde(skip_serializing_if = "is_default")]
    pub weights: WeightsBlock,
    pub run: RunBlock,
    #[serde(skip_serializing_if = "is_default")]
    pub output: OutputBlock,
}

fn is_default<T: Default + PartialEq>(x: &T) -> bool {
    *x == T::default()
}

pub const DEFAULT_SEED: u64 = 0;

impl ExperimentConfig {
    /// Canonical TOML text; parsing it gives back the same config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| CliError::Serialize(e.to_string()))
    }

    /// sha256 of the canonical text.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(self.to_toml()?.as_bytes())))
    }

    pub fn seed(&self) -> u64 {
        self.model.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn instance_kind(&self) -> Result<InstanceKind> {
        self.model.kind.parse().in_module("config")
    }

    pub fn couplings(&self) -> Result<CouplingKind> {
        self.run.couplings.as_deref().unwrap_or("xz").parse().in_module("config")
    }

    pub fn order(&self) -> Result<FactorOrder> {
        self.run.order.as_deref().unwrap_or("index").parse().in_module("config")
    }

    pub fn mode(&self) -> Result<ProjectorMode> {
        self.run.mode.as_deref().unwrap_or("exact").parse().in_module("config")
    }

    pub fn backend(&self) -> Result<BackendKind> {
        self.run.backend.as_deref().unwrap_or("polynomial").parse().in_module("config")
    }

    pub fn beta(&self) -> f64 {
        self.run.beta.unwrap_or(0.0)
    }

    /// Weight profile at `run.beta`; unset fields keep the preset values.
    pub fn weights(&self) -> Result<WeightProfile> {
        let w = &self.weights;
        let kind: WeightKind = w.kind.as_deref().unwrap_or("davies_kms").parse().in_module("config")?;
        let base = match kind {
            WeightKind::PaperF => WeightProfile::paper_f(self.beta()),
            _ => WeightProfile { kind, ..WeightProfile::davies_kms(self.beta()) },
        };
        let profile = WeightProfile {
            weight_exponent: w.weight_exponent.unwrap_or(base.weight_exponent),
            tanh_scale: w.tanh_scale.unwrap_or(base.tanh_scale),
            tanh_beta_scaled: w.tanh_beta_scaled.unwrap_or(base.tanh_beta_scaled),
            kappa_cutoff: w.kappa_cutoff.or(base.kappa_cutoff),
            q: w.q.as_ref().map(|rows| rows.iter().map(|r| (r[0], c(r[1], r[2]))).collect()).unwrap_or_default(),
            normalize: w.normalize.unwrap_or(base.normalize),
            ..base
        };
        profile.validate().in_module("config")?;
        Ok(profile)
    }
}

/// Line lookup for error messages.
struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn line_of_offset(&self, offset: usize) -> usize {
        self.text[..offset.min(self.text.len())].matches('\n').count() + 1
    }

    /// Line of `key` inside `section` ("" for the top level), or of the
    /// section header itself when `key` is `None`.
    fn line_of(&self, section: &str, key: Option<&str>) -> usize {
        let mut current = "";
        for (i, raw) in self.text.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix('[').and_then(|r| r.split(']').next()) {
                current = name.trim();
                if key.is_none() && current == section {
                    return i + 1;
                }
                continue;
            }
            if let Some(k) = key {
                if current == section {
                    let lhs = line.split('=').next().unwrap_or("").trim().trim_matches('"');
                    if line.contains('=') && lhs == k {
                        return i + 1;
                    }
                }
            }
        }
        0
    }
}

struct Reader<'a> {
    src: Source<'a>,
}

fn qualified(section: &str, key: &str) -> String {
    if section.is_empty() {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

impl Reader<'_> {
    fn bad(&self, section: &str, key: &str, message: impl Into<String>) -> CliError {
        CliError::BadValue {
            key: qualified(section, key),
            line: self.src.line_of(section, Some(key)),
            message: message.into(),
        }
    }

    fn reject_unknown(&self, table: &Table, section: &str, allowed: &[&str]) -> Result<()> {
        // Report the earliest offending key so the message is stable.
        let mut unknown: Vec<(usize, String)> = table
            .keys()
            .filter(|k| !allowed.contains(&k.as_str()))
            .map(|k| {
                let line = if section.is_empty() && table[k].is_table() {
                    self.src.line_of(k, None)
                } else {
                    self.src.line_of(section, Some(k))
                };
                (line, qualified(section, k))
            })
            .collect();
        unknown.sort();
        match unknown.into_iter().next() {
            Some((line, key)) => Err(CliError::UnknownKey { key, line }),
            None => Ok(()),
        }
    }

    fn float(&self, table: &Table, section: &str, key: &str) -> Result<Option<f64>> {
        match table.get(key) {
            None => Ok(None),
            Some(v) => as_float(v).map(Some).ok_or_else(|| self.bad(section, key, "expected a number")),
        }
    }

    fn count(&self, table: &Table, section: &str, key: &str) -> Result<Option<u64>> {
        match table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(self.bad(section, key, "expected a nonnegative integer")),
        }
    }

    fn size(&self, table: &Table, section: &str, key: &str) -> Result<Option<usize>> {
        self.count(table, section, key)?
            .map(|v| usize::try_from(v).map_err(|_| self.bad(section, key, "integer too large")))
            .transpose()
    }

    fn boolean(&self, table: &Table, section: &str, key: &str) -> Result<Option<bool>> {
        match table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(_) => Err(self.bad(section, key, "expected true or false")),
        }
    }

    fn string(&self, table: &Table, section: &str, key: &str) -> Result<Option<String>> {
        match table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(self.bad(section, key, "expected a string")),
        }
    }

    fn floats(&self, table: &Table, section: &str, key: &str) -> Result<Option<Vec<f64>>> {
        match table.get(key) {
            None => Ok(None),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| as_float(v).ok_or_else(|| self.bad(section, key, "expected a list of numbers")))
                .collect::<Result<Vec<_>>>()
                .map(Some),
            Some(_) => Err(self.bad(section, key, "expected a list of numbers")),
        }
    }

    fn q_table(&self, table: &Table, section: &str, key: &str) -> Result<Option<Vec<[f64; 3]>>> {
        let Some(value) = table.get(key) else { return Ok(None) };
        let msg = "expected a list of [omega, re, im] triples";
        let rows = value.as_array().ok_or_else(|| self.bad(section, key, msg))?;
        rows.iter()
            .map(|row| {
                let r = row.as_array().filter(|r| r.len() == 3).ok_or_else(|| self.bad(section, key, msg))?;
                let mut out = [0.0; 3];
                for (o, v) in out.iter_mut().zip(r) {
                    *o = as_float(v).ok_or_else(|| self.bad(section, key, msg))?;
                }
                Ok(out)
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn section<'t>(&self, root: &'t Table, name: &str) -> Result<Option<&'t Table>> {
        match root.get(name) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(t)),
            Some(_) => Err(self.bad("", name, "expected a section")),
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

/// Parses and validates a config. `fallback` supplies the experiment when
/// the file has no `experiment` key (the CLI passes its subcommand).
pub fn parse_config_for(text: &str, fallback: Option<Experiment>) -> Result<ExperimentConfig> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| {
        let src = Source { text };
        CliError::Parse {
            line: e.span().map(|s| src.line_of_offset(s.start)).unwrap_or(0),
            message: e.message().trim().to_string(),
        }
    })?;
    let rd = Reader { src: Source { text } };
    rd.reject_unknown(&root, "", &["experiment", "model", "weights", "run", "output"])?;

    let experiment = match rd.string(&root, "", "experiment")? {
        Some(s) => s.parse::<Experiment>().map_err(|m| rd.bad("", "experiment", m))?,
        None => fallback.ok_or_else(|| CliError::MissingKey("experiment".into()))?,
    };

    let empty = Table::new();
    let model_t = rd.section(&root, "model")?.ok_or_else(|| CliError::MissingKey("model.kind".into()))?;
    rd.reject_unknown(model_t, "model", &["kind", "n", "seed"])?;
    let model = ModelBlock {
        kind: rd.string(model_t, "model", "kind")?.ok_or_else(|| CliError::MissingKey("model.kind".into()))?,
        n: rd.size(model_t, "model", "n")?.ok_or_else(|| CliError::MissingKey("model.n".into()))?,
        seed: rd.count(model_t, "model", "seed")?,
    };
    if model.kind.parse::<InstanceKind>().is_err() {
        return Err(rd.bad("model", "kind", format!("unknown instance kind `{}`", model.kind)));
    }

    let weights_t = rd.section(&root, "weights")?;
    if weights_t.is_some() && !experiment.uses_weights() {
        return Err(CliError::UnknownKey { key: "weights".into(), line: rd.src.line_of("weights", None) });
    }
    let weights_t = weights_t.unwrap_or(&empty);
    rd.reject_unknown(
        weights_t,
        "weights",
        &["kind", "weight_exponent", "tanh_scale", "tanh_beta_scaled", "kappa_cutoff", "q", "normalize"],
    )?;
    let weights = WeightsBlock {
        kind: rd.string(weights_t, "weights", "kind")?,
        weight_exponent: rd.float(weights_t, "weights", "weight_exponent")?,
        tanh_scale: rd.float(weights_t, "weights", "tanh_scale")?,
        tanh_beta_scaled: rd.boolean(weights_t, "weights", "tanh_beta_scaled")?,
        kappa_cutoff: rd.float(weights_t, "weights", "kappa_cutoff")?,
        q: rd.q_table(weights_t, "weights", "q")?,
        normalize: rd.boolean(weights_t, "weights", "normalize")?,
    };

    let run_t = rd.section(&root, "run")?.unwrap_or(&empty);
    let (required, optional) = experiment.run_keys();
    let allowed: Vec<&str> = required.iter().chain(optional).copied().collect();
    rd.reject_unknown(run_t, "run", &allowed)?;
    if let Some(key) = required.iter().find(|k| !run_t.contains_key(**k)) {
        return Err(CliError::MissingKey(format!("run.{key}")));
    }
    let run = RunBlock {
        beta: rd.float(run_t, "run", "beta")?,
        delta: rd.float(run_t, "run", "delta")?,
        eps: rd.float(run_t, "run", "eps")?,
        k_max: rd.size(run_t, "run", "k_max")?,
        ell_min: rd.size(run_t, "run", "ell_min")?,
        ell_max: rd.size(run_t, "run", "ell_max")?,
        alpha: rd.float(run_t, "run", "alpha")?,
        couplings: rd.string(run_t, "run", "couplings")?,
        order: rd.string(run_t, "run", "order")?,
        mode: rd.string(run_t, "run", "mode")?,
        backend: rd.string(run_t, "run", "backend")?,
        random_states: rd.size(run_t, "run", "random_states")?,
        trials: rd.size(run_t, "run", "trials")?,
        dbetas: rd.floats(run_t, "run", "dbetas")?,
        planted_gammas: rd.floats(run_t, "run", "planted_gammas")?,
        planted_dim: rd.size(run_t, "run", "planted_dim")?,
        sk_exponent: rd.float(run_t, "run", "sk_exponent")?,
        mix_constant: rd.float(run_t, "run", "mix_constant")?,
        anneal_constant: rd.float(run_t, "run", "anneal_constant")?,
    };

    let output_t = rd.section(&root, "output")?.unwrap_or(&empty);
    rd.reject_unknown(output_t, "output", &["csv", "summary"])?;
    let output = OutputBlock { csv: rd.string(output_t, "output", "csv")?, summary: rd.string(output_t, "output", "summary")? };

    let cfg = ExperimentConfig { experiment, model, weights, run, output };
    validate(&cfg, &rd)?;
    Ok(cfg)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    parse_config_for(text, None)
}

fn validate(cfg: &ExperimentConfig, rd: &Reader<'_>) -> Result<()> {
    let r = &cfg.run;
    let check = |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(rd.bad("run", key, msg)) };
    if let Some(b) = r.beta {
        check(b.is_finite() && b >= 0.0, "beta", "must be finite and nonnegative")?;
    }
    if let Some(d) = r.delta {
        check(d > 0.0 && d < 1.0, "delta", "must lie in (0, 1)")?;
    }
    if let Some(e) = r.eps {
        check(e > 0.0 && e < 1.0, "eps", "must lie in (0, 1)")?;
    }
    if let Some(a) = r.alpha {
        check(a > 1.0 && a.is_finite(), "alpha", "must exceed 1")?;
    }
    if let (Some(lo), Some(hi)) = (r.ell_min, r.ell_max) {
        check(lo >= 1, "ell_min", "must be at least 1")?;
        check(hi >= lo, "ell_max", "must be at least ell_min")?;
    }
    if let Some(ds) = &r.dbetas {
        check(!ds.is_empty() && ds.iter().all(|d| *d > 0.0 && d.is_finite()), "dbetas", "must be a nonempty list of positive numbers")?;
    }
    if let Some(gs) = &r.planted_gammas {
        check(gs.iter().all(|g| *g > 0.0 && *g < 1.0), "planted_gammas", "entries must lie in (0, 1)")?;
    }
    if let Some(c) = r.sk_exponent {
        check(c >= 0.0 && c.is_finite(), "sk_exponent", "must be finite and nonnegative")?;
    }
    for (key, v) in [("mix_constant", r.mix_constant), ("anneal_constant", r.anneal_constant)] {
        if let Some(v) = v {
            check(v > 0.0 && v.is_finite(), key, "must be positive")?;
        }
    }
    if let Some(s) = &r.couplings {
        check(s.parse::<CouplingKind>().is_ok(), "couplings", "must be `x` or `xz`")?;
    }
    if let Some(s) = &r.order {
        check(s.parse::<FactorOrder>().is_ok(), "order", "must be `index` or `seed:N`")?;
    }
    if let Some(s) = &r.mode {
        check(s.parse::<ProjectorMode>().is_ok(), "mode", "must be `exact` or `dl_qsvt`")?;
    }
    if let Some(s) = &r.backend {
        check(s.parse::<BackendKind>().is_ok(), "backend", "must be `oracle` or `polynomial`")?;
    }
    if cfg.experiment.uses_weights() {
        cfg.weights().map_err(|e| CliError::BadValue { key: "weights".into(), line: rd.src.line_of("weights", None), message: e.to_string() })?;
    }
    Ok(())
}
