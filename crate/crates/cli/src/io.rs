use std::fs;
use std::path::Path;

use asai_core::padic::max_digits;
use asai_core::Error;
use serde_json::Value;
use thiserror::Error;

/// Default digit budget for contexts built from the command line.
pub const PRECISION_ENV: &str = "ASAI_PRECISION";

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error("invalid arguments: {0}")]
    Usage(String),
}

impl CliError {
    /// 3 for precision and truncation exhaustion, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if is_precision(e) => 3,
            _ => 2,
        }
    }
}

pub fn is_precision(e: &Error) -> bool {
    matches!(e, Error::PrecisionExhausted(_) | Error::InsufficientTruncation | Error::TruncationOverflow { .. })
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// What a command hands back: a JSON document and whether every checked
/// property held.
#[derive(Debug)]
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

impl Outcome {
    pub fn new(report: Value, pass: bool) -> Self {
        Outcome { report, pass }
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// The explicit budget if given, else the most digits p allows.
pub fn precision(p: u32, explicit: Option<u32>) -> u32 {
    explicit.unwrap_or_else(|| max_digits(p))
}

pub fn read_json(path: &Path) -> CliResult<Value> {
    let text = fs::read_to_string(path).map_err(|e| file_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| file_err(path, e))
}

pub fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_value(read_json(path)?).map_err(|e| file_err(path, e))
}

/// Pretty JSON with a trailing newline, so reruns are byte-identical.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    fs::write(path, render(v)).map_err(|e| file_err(path, e))
}

fn file_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::File { path: path.display().to_string(), msg: e.to_string() }
}
