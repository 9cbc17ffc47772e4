//! Run configuration: one JSON document plus `--key=value` overrides.
//!
//! ```json
//! {
//!   "command": "levels",
//!   "order": 3,
//!   "coeffs": {"2": 0.5, "3": -0.02},
//!   "n_max": 5,
//!   "output_format": "csv"
//! }
//! ```
//!
//! Dotted override keys reach into blocks (`--sweep.steps=41`). Unknown keys
//! anywhere are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde_json::{Map, Value};

use crate::error::Error;
use crate::model::{build_spec, OscillatorSpec, SpecDocument};
use crate::perturbation::DEFAULT_AMPLIFICATION;

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted key path of the offending entry.
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }

    fn missing(path: impl Into<String>) -> Self {
        Self::new(path, "missing")
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.message.starts_with(&self.path) {
            f.write_str(&self.message)
        } else {
            write!(f, "{} {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Levels,
    Sweep,
    Perturb,
    OracleCheck,
}

impl Command {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "solve" => Self::Solve,
            "levels" => Self::Levels,
            "sweep" => Self::Sweep,
            "perturb" => Self::Perturb,
            "oracle-check" => Self::OracleCheck,
            _ => return None,
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Levels => "levels",
            Self::Sweep => "sweep",
            Self::Perturb => "perturb",
            Self::OracleCheck => "oracle-check",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepBlock {
    pub coeff_index: u32,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub amplification: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbBlock {
    pub delta: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OracleBlock {
    pub dp_lo: Option<f64>,
    pub dp_hi: Option<f64>,
    pub step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub spec: OscillatorSpec,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub sweep: Option<SweepBlock>,
    pub perturb: Option<PerturbBlock>,
    pub oracle: Option<OracleBlock>,
}

const SPEC_KEYS: &[&str] =
    &["order", "units", "hbar", "mass", "omega_har", "coeffs", "perturbation", "n_ref", "n_max", "eta"];
const RUN_KEYS: &[&str] = &["command", "output_format", "output_path", "sweep", "perturb", "oracle"];
const SWEEP_KEYS: &[&str] = &["coeff_index", "lo", "hi", "steps", "amplification"];
const PERTURB_KEYS: &[&str] = &["delta"];
const ORACLE_KEYS: &[&str] = &["dp_lo", "dp_hi", "step"];

fn set_path(root: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), ConfigError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts.pop().expect("split yields one part");
    let mut node = root;
    let mut walked = String::new();
    for p in parts {
        if !walked.is_empty() {
            walked.push('.');
        }
        walked.push_str(p);
        node = node
            .entry(p)
            .or_insert_with(|| Value::Object(Map::new()))
            .as_object_mut()
            .ok_or_else(|| ConfigError::new(walked.clone(), "is not a block"))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}

fn check_keys(obj: &Map<String, Value>, allowed: &[&str], prefix: &str) -> Result<(), ConfigError> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
            return Err(ConfigError::new(path, "unknown key"));
        }
    }
    Ok(())
}

fn block<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<Option<&'a Map<String, Value>>, ConfigError> {
    match obj.get(key) {
        None => Ok(None),
        Some(Value::Object(m)) => Ok(Some(m)),
        Some(_) => Err(ConfigError::new(key, "must be a block")),
    }
}

fn get_f64(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<f64>, ConfigError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| ConfigError::new(path, format!("must be a number, got {v}"))),
    }
}

fn get_u32(obj: &Map<String, Value>, key: &str, path: &str) -> Result<Option<u32>, ConfigError> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .and_then(|x| u32::try_from(x).ok())
            .map(Some)
            .ok_or_else(|| ConfigError::new(path, format!("must be a non-negative integer, got {v}"))),
    }
}

fn get_str<'a>(obj: &'a Map<String, Value>, key: &str) -> Result<Option<&'a str>, ConfigError> {
    match obj.get(key) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s)),
        Some(v) => Err(ConfigError::new(key, format!("must be a string, got {v}"))),
    }
}

fn number_map(obj: &Map<String, Value>, key: &str, path: &str) -> Result<BTreeMap<String, f64>, ConfigError> {
    let Some(m) = obj.get(key) else { return Ok(BTreeMap::new()) };
    let m = m.as_object().ok_or_else(|| ConfigError::new(path, "must be a block"))?;
    m.iter()
        .map(|(k, v)| {
            let x = v
                .as_f64()
                .ok_or_else(|| ConfigError::new(format!("{path}.{k}"), format!("must be a number, got {v}")))?;
            Ok((k.clone(), x))
        })
        .collect()
}

fn spec_document(obj: &Map<String, Value>) -> Result<SpecDocument, ConfigError> {
    Ok(SpecDocument {
        order: get_u32(obj, "order", "order")?,
        units: get_str(obj, "units")?.map(str::to_string),
        hbar: get_f64(obj, "hbar", "hbar")?,
        mass: get_f64(obj, "mass", "mass")?,
        omega_har: get_f64(obj, "omega_har", "omega_har")?,
        coeffs: number_map(obj, "coeffs", "coeffs")?,
        perturbation: number_map(obj, "perturbation", "perturbation")?,
        n_ref: get_u32(obj, "n_ref", "n_ref")?,
        n_max: get_u32(obj, "n_max", "n_max")?,
        eta: get_f64(obj, "eta", "eta")?,
    })
}

fn spec_error(doc: &SpecDocument, err: Error) -> ConfigError {
    let path = match &err {
        Error::OrderBelowQuadratic(_) => "order".to_string(),
        Error::NonPositiveQuadratic(_) => "coeffs.2".to_string(),
        Error::CoefficientIndex { index, .. } => {
            let in_coeffs = doc.coeffs.keys().any(|k| k.trim().parse::<u32>().ok() == Some(*index));
            format!("{}.{index}", if in_coeffs { "coeffs" } else { "perturbation" })
        }
        Error::InvalidParameter { name, .. } => (*name).to_string(),
        _ => "<spec>".to_string(),
    };
    ConfigError::new(path, err.to_string())
}

/// Parses a config document and applies `(key, value)` overrides on top of it.
///
/// Override values are read as JSON when they parse as JSON and as plain
/// strings otherwise, so `--n_max=5` is a number and `--command=levels` a string.
pub fn parse_config(document: &str, overrides: &[(String, String)]) -> Result<RunConfig, ConfigError> {
    let mut root = if document.trim().is_empty() {
        Map::new()
    } else {
        match serde_json::from_str::<Value>(document) {
            Ok(Value::Object(m)) => m,
            Ok(_) => return Err(ConfigError::new("<document>", "top level must be an object")),
            Err(e) => return Err(ConfigError::new("<document>", format!("malformed: {e}"))),
        }
    };
    for (key, raw) in overrides {
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
        set_path(&mut root, key, value)?;
    }

    let allowed: Vec<&str> = SPEC_KEYS.iter().chain(RUN_KEYS).copied().collect();
    check_keys(&root, &allowed, "")?;

    let command = get_str(&root, "command")?.ok_or_else(|| ConfigError::missing("command"))?;
    let command = Command::parse(command)
        .ok_or_else(|| ConfigError::new("command", format!("unknown command `{command}`")))?;
    let output_format = match get_str(&root, "output_format")? {
        None | Some("csv") => OutputFormat::Csv,
        Some("json") => OutputFormat::Json,
        Some(other) => return Err(ConfigError::new("output_format", format!("expected csv or json, got `{other}`"))),
    };
    let output_path = get_str(&root, "output_path")?.map(PathBuf::from);

    let doc = spec_document(&root)?;
    if doc.order.is_none() {
        return Err(ConfigError::missing("order"));
    }
    let spec = build_spec(&doc).map_err(|e| spec_error(&doc, e))?;

    let only_for = |key: &str, cmd: Command| -> Result<(), ConfigError> {
        if root.contains_key(key) && command != cmd {
            return Err(ConfigError::new(key, format!("block not allowed for command {}", command.as_str())));
        }
        Ok(())
    };
    only_for("sweep", Command::Sweep)?;
    only_for("perturb", Command::Perturb)?;
    only_for("oracle", Command::OracleCheck)?;

    let sweep = if command == Command::Sweep {
        let empty = Map::new();
        let b = block(&root, "sweep")?.unwrap_or(&empty);
        check_keys(b, SWEEP_KEYS, "sweep")?;
        let coeff_index =
            get_u32(b, "coeff_index", "sweep.coeff_index")?.ok_or_else(|| ConfigError::missing("sweep.coeff_index"))?;
        if !(2..=spec.order()).contains(&coeff_index) {
            return Err(ConfigError::new("sweep.coeff_index", format!("outside 2..={}", spec.order())));
        }
        let lo = get_f64(b, "lo", "sweep.lo")?.ok_or_else(|| ConfigError::missing("sweep.lo"))?;
        let hi = get_f64(b, "hi", "sweep.hi")?.ok_or_else(|| ConfigError::missing("sweep.hi"))?;
        let steps = get_u32(b, "steps", "sweep.steps")?.ok_or_else(|| ConfigError::missing("sweep.steps"))?;
        if steps < 2 {
            return Err(ConfigError::new("sweep.steps", "must be at least 2"));
        }
        let amplification = get_f64(b, "amplification", "sweep.amplification")?.unwrap_or(DEFAULT_AMPLIFICATION);
        if amplification.is_nan() || amplification <= 0.0 {
            return Err(ConfigError::new("sweep.amplification", "must be positive"));
        }
        Some(SweepBlock { coeff_index, lo, hi, steps: steps as usize, amplification })
    } else {
        None
    };

    let perturb = if command == Command::Perturb {
        let b = block(&root, "perturb")?.ok_or_else(|| ConfigError::missing("perturb.delta"))?;
        check_keys(b, PERTURB_KEYS, "perturb")?;
        if !b.contains_key("delta") {
            return Err(ConfigError::missing("perturb.delta"));
        }
        let raw = number_map(b, "delta", "perturb.delta")?;
        let delta = raw
            .into_iter()
            .map(|(k, v)| {
                let path = format!("perturb.delta.{k}");
                let i: u32 = k.trim().parse().map_err(|_| ConfigError::new(path.clone(), "not a coefficient index"))?;
                if !(2..=spec.order()).contains(&i) {
                    return Err(ConfigError::new(path, format!("outside 2..={}", spec.order())));
                }
                Ok((i, v))
            })
            .collect::<Result<BTreeMap<_, _>, _>>()?;
        Some(PerturbBlock { delta })
    } else {
        None
    };

    let oracle = if command == Command::OracleCheck {
        let empty = Map::new();
        let b = block(&root, "oracle")?.unwrap_or(&empty);
        check_keys(b, ORACLE_KEYS, "oracle")?;
        Some(OracleBlock {
            dp_lo: get_f64(b, "dp_lo", "oracle.dp_lo")?,
            dp_hi: get_f64(b, "dp_hi", "oracle.dp_hi")?,
            step: get_f64(b, "step", "oracle.step")?,
        })
    } else {
        None
    };

    Ok(RunConfig { command, spec, output_format, output_path, sweep, perturb, oracle })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(k: &str, v: &str) -> (String, String) {
        (k.to_string(), v.to_string())
    }

    #[test]
    fn minimal_levels_config() {
        let c = parse_config(r#"{"command":"levels","order":2,"omega_har":1,"n_max":3}"#, &[]).unwrap();
        assert_eq!(c.command, Command::Levels);
        assert_eq!(c.spec.n_max(), 3);
        assert_eq!(c.spec.effective(2), 0.5);
        assert_eq!(c.output_format, OutputFormat::Csv);
    }

    #[test]
    fn flag_overrides_document() {
        let doc = r#"{"command":"levels","order":2,"omega_har":1,"n_max":3}"#;
        let c = parse_config(doc, &[ov("n_max", "5")]).unwrap();
        assert_eq!(c.spec.n_max(), 5);
        let c = parse_config(doc, &[ov("coeffs.2", "0.7"), ov("output_format", "json")]).unwrap();
        assert_eq!(c.spec.effective(2), 0.7);
        assert_eq!(c.output_format, OutputFormat::Json);
    }

    #[test]
    fn sweep_without_block() {
        let e = parse_config(r#"{"command":"sweep","order":2,"omega_har":1}"#, &[]).unwrap_err();
        assert_eq!(e.to_string(), "sweep.coeff_index missing");
    }

    #[test]
    fn unknown_keys_are_errors() {
        let e = parse_config(r#"{"command":"solve","order":2,"omega_har":1,"n_maxx":3}"#, &[]).unwrap_err();
        assert_eq!(e.path, "n_maxx");
        let e = parse_config(
            r#"{"command":"sweep","order":2,"omega_har":1,"sweep":{"coeff_index":2,"lo":0.4,"hi":0.6,"steps":3,"stpes":4}}"#,
            &[],
        )
        .unwrap_err();
        assert_eq!(e.path, "sweep.stpes");
    }

    #[test]
    fn malformed_document() {
        let e = parse_config("{not json", &[]).unwrap_err();
        assert_eq!(e.path, "<document>");
    }

    #[test]
    fn spec_errors_carry_paths() {
        let e = parse_config(r#"{"command":"solve","order":1,"omega_har":1}"#, &[]).unwrap_err();
        assert_eq!(e.path, "order");
        assert!(e.message.contains("order below quadratic"));
        let e = parse_config(r#"{"command":"solve","order":3,"coeffs":{"2":0.5,"7":1}}"#, &[]).unwrap_err();
        assert_eq!(e.path, "coeffs.7");
    }

    #[test]
    fn blocks_only_for_their_command() {
        let e = parse_config(r#"{"command":"solve","order":2,"omega_har":1,"perturb":{"delta":{}}}"#, &[])
            .unwrap_err();
        assert_eq!(e.path, "perturb");
        let c = parse_config(
            r#"{"command":"perturb","order":3,"coeffs":{"2":0.5,"3":-0.02},"perturb":{"delta":{"3":-0.01}}}"#,
            &[],
        )
        .unwrap();
        assert_eq!(c.perturb.unwrap().delta, BTreeMap::from([(3, -0.01)]));
    }
}
