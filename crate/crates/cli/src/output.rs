//! Files of one run: CSV tables with provenance headers and a JSON sidecar.

use std::path::PathBuf;

use serde::Serialize;
use serde_json::{Map, Value};
use windstat::report::CsvTable;

use crate::config::RunConfig;
use crate::CliError;

pub const BUILD: &str = env!("WINDSTAT_GIT_DESCRIBE");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Tables, checks and summary values collected by a command.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub tables: Vec<(String, CsvTable)>,
    pub checks: Vec<Check>,
    pub summary: Map<String, Value>,
}

impl RunOutput {
    pub fn table(&mut self, file: impl Into<String>, table: CsvTable) {
        self.tables.push((file.into(), table));
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), pass, detail: detail.into() });
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.summary.insert(key.into(), serde_json::to_value(value).expect("summary value serializes"));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn provenance_lines(cfg: &RunConfig, hash: &str, table: &mut CsvTable) {
    table.prepend_meta([
        ("windstat", VERSION.to_string()),
        ("build", BUILD.to_string()),
        ("command", cfg.command.name().to_string()),
        ("config_hash", hash.to_string()),
        ("class", cfg.class.to_string()),
        ("seed", cfg.seed.to_string()),
        ("streams", cfg.streams.to_string()),
        ("trials", cfg.trials.to_string()),
    ]);
}

/// Writes every table and `<command>.json`; returns the written paths.
pub fn write_run(cfg: &RunConfig, out: &mut RunOutput) -> Result<Vec<PathBuf>, CliError> {
    let io = |p: &PathBuf, e: std::io::Error| CliError::Io(format!("{}: {e}", p.display()));
    std::fs::create_dir_all(&cfg.out_dir).map_err(|e| io(&cfg.out_dir, e))?;
    let hash = cfg.hash();
    let mut written = Vec::new();
    for (file, table) in &mut out.tables {
        provenance_lines(cfg, &hash, table);
        let path = cfg.out_dir.join(file.as_str());
        std::fs::write(&path, table.to_string()).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    let sidecar = serde_json::json!({
        "windstat": VERSION,
        "build": BUILD,
        "command": cfg.command.name(),
        "config_hash": hash,
        "config": cfg.provenance(),
        "files": out.tables.iter().map(|(f, _)| f.clone()).collect::<Vec<_>>(),
        "summary": Value::Object(out.summary.clone()),
        "verdict": {
            "pass": out.passed(),
            "checks": out.checks,
        },
    });
    let path = cfg.out_dir.join(format!("{}.json", cfg.command.name()));
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes") + "\n";
    std::fs::write(&path, text).map_err(|e| io(&path, e))?;
    written.push(path);
    Ok(written)
}
