use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

/// Record of one invocation. `argv` re-runs it; every random choice derives
/// from `params.seed`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub argv: Vec<String>,
    pub params: Map<String, Value>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub elapsed_ms: f64,
    pub stats: Map<String, Value>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, argv: Vec<String>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            argv,
            params: Map::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            elapsed_ms: 0.0,
            stats: Map::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Serialize) {
        self.params.insert(key.to_owned(), to_value(value));
    }

    pub fn stat(&mut self, key: &str, value: impl Serialize) {
        self.stats.insert(key.to_owned(), to_value(value));
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// One JSON line on `w`.
    pub fn write_line<W: Write + ?Sized>(&self, w: &mut W) -> io::Result<()> {
        serde_json::to_writer(&mut *w, self).map_err(io::Error::other)?;
        writeln!(w)
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        fs::write(path, text + "\n")
    }
}

fn to_value(value: impl Serialize) -> Value {
    serde_json::to_value(value).unwrap_or(Value::Null)
}
