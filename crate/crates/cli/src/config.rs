//! Experiment configuration: flat key/value files (or JSON objects) plus
//! command-line overrides.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use epqed::{Emitter, Mode, Params};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Ldos,
    Fit,
    Dynamics,
    Spectrum,
    Eigen,
    Concurrence,
    Blockade,
    Trapping,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(v.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Amplitude,
    Master,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Initial {
    Emitter,
    Left,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    Gamma0,
    Ev,
}

/// Every key is optional in a config file; unset keys keep these defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    // model
    pub omega_c: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub g: f64,
    pub r_abs: f64,
    pub delta_phi: f64,
    /// Emitter-cavity detuning ω0 − ωc.
    pub delta_0c: f64,
    pub phi: f64,
    pub n_qubits: usize,
    /// Azimuthal offset of the second emitter.
    pub phi_offset: f64,
    // drive (blockade)
    /// Drive detuning ω_d − ωc.
    pub detuning: f64,
    pub drive_amplitude: f64,
    pub drive_target: Mode,
    pub measure: Mode,
    // numerics
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: usize,
    pub t_max: Option<f64>,
    pub t_points: usize,
    pub step: Option<f64>,
    pub cutoff: usize,
    pub method: Method,
    pub initial: Initial,
    pub ldos_numerical: bool,
    pub tau_window: f64,
    pub tau_step: f64,
    // io
    pub input: Option<String>,
    pub units: Units,
    pub mu_debye: f64,
    pub omega0_ev: f64,
    pub n_b: f64,
    pub sweep: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            omega_c: 0.0,
            gamma: 1.0,
            kappa: 20.0,
            g: 10.0,
            r_abs: 1.0,
            delta_phi: PI,
            delta_0c: 0.0,
            phi: 0.0,
            n_qubits: 1,
            phi_offset: 0.0,
            detuning: 0.0,
            drive_amplitude: 0.2,
            drive_target: Mode::R,
            measure: Mode::L,
            omega_min: None,
            omega_max: None,
            omega_points: 2001,
            t_max: None,
            t_points: 1001,
            step: None,
            cutoff: 4,
            method: Method::Amplitude,
            initial: Initial::Emitter,
            ldos_numerical: false,
            tau_window: 48.0,
            tau_step: 0.002,
            input: None,
            units: Units::Gamma0,
            mu_debye: 10.0,
            omega0_ev: 1.5,
            n_b: 1.0,
            sweep: None,
        }
    }
}

/// Keys a config file may carry that are not parameters.
const META_KEYS: [&str; 3] = ["experiment", "epqed_version", "outputs"];

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.start + (self.stop - self.start) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

impl Config {
    fn to_map(&self) -> Map<String, Value> {
        match serde_json::to_value(self) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("config serializes to an object"),
        }
    }

    pub fn is_key(name: &str) -> bool {
        Config::default().to_map().contains_key(name)
    }

    /// Sets `key` from its textual form. Numbers, booleans and `null` are read
    /// as JSON; anything else is taken as a string.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), String> {
        let raw = raw.trim();
        let parsed = serde_json::from_str::<Value>(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        self.set_value(key, parsed.clone()).or_else(|e| match parsed {
            Value::String(_) => Err(e),
            _ => self.set_value(key, Value::String(raw.to_string())).map_err(|_| e),
        })
    }

    pub fn set_value(&mut self, key: &str, value: Value) -> Result<(), String> {
        let mut map = self.to_map();
        if !map.contains_key(key) {
            return Err(format!("unknown key '{key}'"));
        }
        map.insert(key.to_string(), value.clone());
        *self = serde_json::from_value(Value::Object(map))
            .map_err(|e| format!("invalid value {value} for '{key}': {e}"))?;
        Ok(())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.to_map().get(key).and_then(Value::as_f64)
    }

    pub fn sweep(&self) -> Result<Option<Sweep>, String> {
        self.sweep.as_deref().map(parse_sweep).transpose()
    }

    pub fn validate(&self) -> Result<(), String> {
        if let Some(s) = self.sweep()? {
            if s.name == "sweep" || !Config::is_key(&s.name) {
                return Err(format!("sweep axis '{}' is not a parameter", s.name));
            }
            let mut probe = self.clone();
            probe
                .set_value(&s.name, sweep_value(s.start))
                .map_err(|e| format!("sweep axis '{}': {e}", s.name))?;
        }
        self.params().validate().map_err(|e| e.to_string())?;
        if self.omega_points < 2 || self.t_points < 2 {
            return Err("omega_points and t_points must be >= 2".into());
        }
        Ok(())
    }

    pub fn params(&self) -> Params {
        let mut p = Params::ep(self.g, self.kappa, self.gamma, self.delta_phi)
            .with_omega_c(self.omega_c)
            .with_r(self.r_abs);
        p.emitters = (0..self.n_qubits)
            .map(|i| Emitter {
                omega0: self.omega_c + self.delta_0c,
                phi_azim: self.phi + if i == 0 { 0.0 } else { self.phi_offset },
            })
            .collect();
        p.with_delta_phi(self.delta_phi)
    }

    /// The resolved configuration as a flat JSON object, keys sorted.
    pub fn resolved(&self, experiment: Experiment) -> Value {
        let mut map: Map<String, Value> = self.to_map();
        map.insert("experiment".into(), Value::String(experiment.to_string()));
        map.insert("epqed_version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        // serde_json's default map is ordered by key.
        Value::Object(map)
    }
}

/// JSON form of a sweep value; integral values stay integers so that count
/// keys can be swept too.
pub fn sweep_value(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        Value::from(v as i64)
    } else {
        Value::from(v)
    }
}

pub fn parse_sweep(text: &str) -> Result<Sweep, String> {
    let bad = || format!("sweep '{text}' is not of the form name=start:stop:count");
    let (name, range) = text.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count < 2 {
        return Err(format!("sweep count must be >= 2, got {count}"));
    }
    Ok(Sweep {
        name: name.trim().to_string(),
        start: num(parts[0])?,
        stop: num(parts[1])?,
        count,
    })
}

/// A config error located in a source file.
#[derive(Debug)]
pub struct ConfigError {
    pub source: String,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "{}:{}: {}", self.source, l, self.message),
            None => write!(f, "{}: {}", self.source, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Applies a config file's entries to `cfg`, returning the experiment named
/// in the file, if any.
pub fn apply_file(cfg: &mut Config, path: &Path) -> Result<Option<Experiment>, ConfigError> {
    let source = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        source: source.clone(),
        line: None,
        message: e.to_string(),
    })?;
    if text.trim_start().starts_with('{') {
        apply_json(cfg, &text, &source)
    } else {
        apply_lines(cfg, &text, &source)
    }
}

fn apply_lines(cfg: &mut Config, text: &str, source: &str) -> Result<Option<Experiment>, ConfigError> {
    let mut experiment = None;
    for (k, line) in text.lines().enumerate() {
        let err = |message: String| ConfigError {
            source: source.to_string(),
            line: Some(k + 1),
            message,
        };
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim().trim_matches('"'));
        apply_entry(cfg, key, Entry::Text(value), &mut experiment).map_err(err)?;
    }
    Ok(experiment)
}

fn apply_json(cfg: &mut Config, text: &str, source: &str) -> Result<Option<Experiment>, ConfigError> {
    let value: Value = serde_json::from_str(text).map_err(|e| ConfigError {
        source: source.to_string(),
        line: Some(e.line()),
        message: e.to_string(),
    })?;
    let Value::Object(map) = value else {
        return Err(ConfigError {
            source: source.to_string(),
            line: Some(1),
            message: "expected a JSON object".into(),
        });
    };
    let mut experiment = None;
    for (key, v) in map {
        apply_entry(cfg, &key, Entry::Json(v), &mut experiment).map_err(|message| ConfigError {
            source: source.to_string(),
            line: line_of_key(text, &key),
            message,
        })?;
    }
    Ok(experiment)
}

fn line_of_key(text: &str, key: &str) -> Option<usize> {
    let quoted = format!("\"{key}\"");
    text.lines().position(|l| l.contains(&quoted)).map(|i| i + 1)
}

enum Entry<'a> {
    Text(&'a str),
    Json(Value),
}

fn apply_entry(cfg: &mut Config, key: &str, v: Entry, experiment: &mut Option<Experiment>) -> Result<(), String> {
    if META_KEYS.contains(&key) {
        if key == "experiment" {
            let name = match &v {
                Entry::Text(s) => s.to_string(),
                Entry::Json(j) => j.as_str().unwrap_or_default().to_string(),
            };
            *experiment = Some(Experiment::from_str(&name, true).map_err(|_| format!("unknown experiment '{name}'"))?);
        }
        return Ok(());
    }
    match v {
        Entry::Text(s) => cfg.set(key, s),
        Entry::Json(j) => cfg.set_value(key, j),
    }
}
