//! Output plumbing: exit codes, log filtering via `CRITMASS_LOG`, and the
//! JSON/CSV writers shared by the subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_MISSING_CONSTANTS: i32 = 4;
pub const EXIT_OVERFLOW: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum LogLevel {
    Quiet,
    Info,
    Debug,
}

/// Level from `CRITMASS_LOG`; unknown values fall back to `info`.
pub fn log_level() -> LogLevel {
    match std::env::var("CRITMASS_LOG").as_deref() {
        Ok("quiet") | Ok("error") => LogLevel::Quiet,
        Ok("debug") | Ok("trace") => LogLevel::Debug,
        _ => LogLevel::Info,
    }
}

pub fn info(msg: &str) {
    if log_level() >= LogLevel::Info {
        eprintln!("{msg}");
    }
}

pub fn debug(msg: &str) {
    if log_level() >= LogLevel::Debug {
        eprintln!("{msg}");
    }
}

/// Wrap a payload with the schema version and command tag.
pub fn envelope(command: &str, payload: Value) -> Value {
    let mut map = Map::new();
    map.insert("schema".into(), Value::from(1));
    map.insert("command".into(), Value::from(command));
    map.insert("result".into(), payload);
    Value::Object(map)
}

/// Print to stdout and, when an output directory is set, persist there too.
pub fn emit_json(out_dir: Option<&Path>, name: &str, doc: &Value) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("JSON value serializes");
    println!("{text}");
    if let Some(dir) = out_dir {
        write_file(dir, name, &text)?;
    }
    Ok(())
}

pub fn write_file(dir: &Path, name: &str, text: &str) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, text)?;
    Ok(path)
}

/// 17-significant-digit CSV cell, locale-independent.
pub fn csv_num(x: f64) -> String {
    format!("{x:.16e}")
}
