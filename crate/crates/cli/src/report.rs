//! Report envelope, config merging and error classification.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Reporting units used by every flag and report field.
pub fn units_block() -> Value {
    json!({
        "frequency": "MHz",
        "time": "us",
        "length": "um",
        "rate": "1/s",
        "angle": "rad"
    })
}

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Validation { code: String, message: String },
    /// Numerical failure: exit code 3.
    Numerical { code: String, message: String },
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError::Validation { code: "validation".into(), message: message.into() }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation { code, message } | CliError::Numerical { code, message } => {
                write!(f, "error[{code}]: {message}")
            }
        }
    }
}

impl From<rydgate::Error> for CliError {
    fn from(e: rydgate::Error) -> Self {
        let (code, message) = (e.code().to_string(), e.to_string());
        if e.is_numerical() {
            CliError::Numerical { code, message }
        } else {
            CliError::Validation { code, message }
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation { code: "io".into(), message: e.to_string() }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation { code: "json".into(), message: e.to_string() }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Validation { code: "csv".into(), message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Options shared by all subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// JSON config file: `{"units": {...}, "params": {...}}`; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Write plot-ready CSV data here (where the subcommand has any).
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

impl Common {
    pub fn validate_paths(&self) -> CliResult<()> {
        if let Some(c) = &self.config {
            require_file(c)?;
        }
        for p in [&self.out, &self.csv].into_iter().flatten() {
            require_parent(p)?;
        }
        Ok(())
    }
}

pub fn require_file(p: &Path) -> CliResult<()> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::validation(format!("input file `{}` does not exist", p.display())))
    }
}

pub fn require_parent(p: &Path) -> CliResult<()> {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() && !d.is_dir() => {
            Err(CliError::validation(format!("output directory `{}` does not exist", d.display())))
        }
        _ => Ok(()),
    }
}

fn has_numbers(v: &Value) -> bool {
    match v {
        Value::Number(_) => true,
        Value::Array(a) => a.iter().any(has_numbers),
        Value::Object(m) => m.values().any(has_numbers),
        _ => false,
    }
}

/// Merges flag values over the config file's `params` and deserializes the result.
/// Numeric parameters in a config file require a `units` block that matches the
/// reporting units.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&Path>) -> CliResult<(T, Value)> {
    let mut merged = Map::new();
    if let Some(path) = config {
        let file: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let params = file.get("params").cloned().unwrap_or(Value::Object(Map::new()));
        let Value::Object(params) = params else {
            return Err(CliError::validation("config `params` must be an object"));
        };
        if has_numbers(&Value::Object(params.clone())) {
            let units = file
                .get("units")
                .and_then(Value::as_object)
                .ok_or_else(|| CliError::validation("config with numeric params needs a `units` block"))?;
            let expected = units_block();
            for (k, v) in units {
                if expected.get(k) != Some(v) {
                    return Err(CliError::validation(format!(
                        "unsupported unit `{k}` = {v}; expected {}",
                        expected.get(k).unwrap_or(&Value::Null)
                    )));
                }
            }
        }
        merged = params;
    }
    if let Value::Object(f) = serde_json::to_value(flags)? {
        for (k, v) in f {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    let value = Value::Object(merged);
    let resolved: T = serde_json::from_value(value.clone())
        .map_err(|e| CliError::validation(format!("invalid parameters: {e}")))?;
    let echo = serde_json::to_value(&resolved)?;
    Ok((resolved, echo))
}

/// Writes the JSON report to `--out` or stdout.
pub fn emit(common: &Common, command: &str, config: Value, seed: Option<u64>, result: Value) -> CliResult<()> {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": timestamp,
        "seed": seed,
        "config": config,
        "units": units_block(),
        "result": result,
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &common.out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Writes CSV rows (a header plus records) to `--csv` when given.
pub fn emit_csv(common: &Common, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    if let Some(p) = &common.csv {
        let mut w = csv::Writer::from_path(p)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    Ok(())
}

pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Flag parser for finite numbers; JSON cannot carry infinities or NaN.
pub fn finite(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(x) => Err(format!("{x} is not a finite number")),
        Err(e) => Err(e.to_string()),
    }
}

/// Flag parser for non-negative numbers that also accepts `inf`.
pub fn non_negative_or_inf(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 => Ok(x),
        Ok(x) => Err(format!("{x} must be non-negative or `inf`")),
        Err(e) => Err(e.to_string()),
    }
}

/// Serde adapter writing `+∞` as the string `"inf"`.
pub mod maybe_inf {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) if x.is_infinite() => s.serialize_str("inf"),
            Some(x) => s.serialize_f64(*x),
            None => s.serialize_none(),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Option::<Repr>::deserialize(d)? {
            None => Ok(None),
            Some(Repr::Num(x)) => Ok(Some(x)),
            Some(Repr::Text(t)) if t == "inf" => Ok(Some(f64::INFINITY)),
            Some(Repr::Text(t)) => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got `{t}`"))),
        }
    }
}
