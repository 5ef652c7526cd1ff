//! Output emission. Every file carries the resolved config and the tool
//! version so a result can be traced without the shell history.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
}

impl Formats {
    pub fn from_flag(flag: Option<crate::FormatArg>) -> Formats {
        match flag {
            None => Formats { json: true, csv: true },
            Some(crate::FormatArg::Json) => Formats { json: true, csv: false },
            Some(crate::FormatArg::Csv) => Formats { json: false, csv: true },
        }
    }
}

pub struct Reporter {
    out_dir: PathBuf,
    formats: Formats,
    command: String,
    config: serde_json::Value,
}

impl Reporter {
    pub fn new<C: Serialize>(
        out_dir: &Path,
        formats: Formats,
        command: &str,
        resolved_config: &C,
    ) -> CliResult<Reporter> {
        std::fs::create_dir_all(out_dir).map_err(|e| {
            CliError::Config(format!("cannot create output dir {}: {e}", out_dir.display()))
        })?;
        let config = serde_json::to_value(resolved_config)
            .map_err(|e| CliError::Compute(format!("config serialization failed: {e}")))?;
        Ok(Reporter {
            out_dir: out_dir.to_path_buf(),
            formats,
            command: command.to_string(),
            config,
        })
    }

    /// Write `{stem}.json` with the payload under `key`. Returns the path
    /// when the JSON format is enabled.
    pub fn write_json<T: Serialize>(
        &self,
        stem: &str,
        key: &str,
        payload: &T,
    ) -> CliResult<Option<PathBuf>> {
        if !self.formats.json {
            return Ok(None);
        }
        let body = serde_json::json!({
            "tool": "corrkit",
            "version": VERSION,
            "command": self.command,
            "config": self.config,
            key: payload,
        });
        let path = self.out_dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&body)
            .map_err(|e| CliError::Compute(format!("JSON serialization failed: {e}")))?;
        write_file(&path, &(text + "\n"))?;
        Ok(Some(path))
    }

    /// Write `{stem}.csv`: provenance comment lines, a header, data rows.
    pub fn write_csv(
        &self,
        stem: &str,
        header: &str,
        rows: &[String],
    ) -> CliResult<Option<PathBuf>> {
        if !self.formats.csv {
            return Ok(None);
        }
        let config_line = serde_json::to_string(&self.config)
            .map_err(|e| CliError::Compute(format!("config serialization failed: {e}")))?;
        let mut text = String::new();
        text.push_str(&format!("# corrkit {} {}\n", VERSION, self.command));
        text.push_str(&format!("# config: {config_line}\n"));
        text.push_str(header);
        text.push('\n');
        for row in rows {
            text.push_str(row);
            text.push('\n');
        }
        let path = self.out_dir.join(format!("{stem}.csv"));
        write_file(&path, &text)?;
        Ok(Some(path))
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Compute(format!("cannot write {}: {e}", path.display())))
}

/// Standalone JSON document for commands that print to stdout.
pub fn stdout_document<T: Serialize>(command: &str, inputs: serde_json::Value, result: &T) -> CliResult<String> {
    let body = serde_json::json!({
        "tool": "corrkit",
        "version": VERSION,
        "command": command,
        "inputs": inputs,
        "result": result,
    });
    serde_json::to_string_pretty(&body)
        .map_err(|e| CliError::Compute(format!("JSON serialization failed: {e}")))
}
