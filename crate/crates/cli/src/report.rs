//! Output envelope shared by all subcommands.

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const TOOL: &str = "efd";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Table,
    Csv,
    Json,
}

/// Results of one run in all three renderings. Only the data parts enter
/// the content hash, so reruns with equal inputs hash identically.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub data: Value,
    pub csv_header: String,
    pub csv_rows: Vec<String>,
    pub table: String,
}

#[derive(Serialize)]
struct Envelope<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: &'a Value,
    seed: Option<u64>,
    wall_clock_seconds: f64,
    content_sha256: String,
    data: &'a Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Report {
    fn csv_body(&self) -> String {
        let mut body = self.csv_header.clone();
        body.push('\n');
        for row in &self.csv_rows {
            body.push_str(row);
            body.push('\n');
        }
        body
    }

    fn header_lines(&self, seconds: f64, hash: &str) -> String {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        format!(
            "# tool: {TOOL} {VERSION}\n# command: {}\n# config: {}\n# seed: {seed}\n# wall_clock_seconds: {seconds:.3}\n# content_sha256: {hash}\n",
            self.command, self.config
        )
    }

    pub fn render(&self, format: Format, seconds: f64) -> String {
        match format {
            Format::Json => {
                let compact = serde_json::to_string(&self.data).expect("JSON values serialize");
                let envelope = Envelope {
                    tool: TOOL,
                    version: VERSION,
                    command: self.command,
                    config: &self.config,
                    seed: self.seed,
                    wall_clock_seconds: (seconds * 1e3).round() / 1e3,
                    content_sha256: sha256_hex(compact.as_bytes()),
                    data: &self.data,
                };
                let mut out = serde_json::to_string_pretty(&envelope).expect("JSON values serialize");
                out.push('\n');
                out
            }
            Format::Csv => {
                let body = self.csv_body();
                self.header_lines(seconds, &sha256_hex(body.as_bytes())) + &body
            }
            Format::Table => self.header_lines(seconds, &sha256_hex(self.table.as_bytes())) + &self.table,
        }
    }
}

#[cfg(test)]
/// Strips the `#` metadata lines of a CSV or table rendering.
pub fn data_section(rendered: &str) -> String {
    rendered.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect()
}

/// `x` rounded to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x.is_finite() {
        format!("{x:.11e}").parse().expect("formatted float parses")
    } else {
        x
    }
}
