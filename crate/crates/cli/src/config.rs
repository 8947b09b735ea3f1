//! Line-oriented `key = value` files with `[section]` headers.
//!
//! Keys before any header, or under `[global]`, set top-level flags. A
//! `[classify]`, `[threshold]`, ... section sets flags of that subcommand and
//! is ignored by the others. Keys are flag names without the leading dashes.

use crate::error::CliError;
use clap::parser::ValueSource;
use clap::{ArgAction, ArgMatches, Command};
use std::path::Path;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub section: Option<String>,
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub entries: Vec<Entry>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut section = None;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| CliError::Input(format!("config line {}: unterminated section header", i + 1)))?
                    .trim();
                section = if name == "global" { None } else { Some(name.to_string()) };
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Input(format!("config line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().replace('_', "-");
            if key.is_empty() {
                return Err(CliError::Input(format!("config line {}: empty key", i + 1)));
            }
            let value = value.trim();
            let value = value.strip_prefix('"').and_then(|v| v.strip_suffix('"')).unwrap_or(value);
            entries.push(Entry { section: section.clone(), key, value: value.to_string(), line: i + 1 });
        }
        Ok(ConfigFile { entries })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Extra command-line tokens for the entries that apply to `subcommand`
    /// and were not already given on the command line.
    pub fn overrides(
        &self,
        root: &Command,
        matches: &ArgMatches,
        subcommand: &str,
        sub_matches: &ArgMatches,
    ) -> Result<Vec<String>, CliError> {
        let known: Vec<&str> = root.get_subcommands().map(|c| c.get_name()).collect();
        let sub = root
            .find_subcommand(subcommand)
            .ok_or_else(|| CliError::Input(format!("unknown subcommand `{subcommand}`")))?;
        let mut tokens = Vec::new();
        for e in &self.entries {
            let (cmd, m) = match e.section.as_deref() {
                None => (root, matches),
                Some(s) if s == subcommand => (sub, sub_matches),
                Some(s) if known.contains(&s) => continue,
                Some(s) => return Err(CliError::Input(format!("config line {}: unknown section [{s}]", e.line))),
            };
            let arg = cmd
                .get_arguments()
                .find(|a| a.get_long() == Some(e.key.as_str()) && a.get_id() != "config")
                .ok_or_else(|| CliError::Input(format!("config line {}: unknown key `{}`", e.line, e.key)))?;
            if m.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
                continue;
            }
            if matches!(arg.get_action(), ArgAction::SetTrue) {
                match e.value.as_str() {
                    "true" => tokens.push(format!("--{}", e.key)),
                    "false" => {}
                    v => {
                        return Err(CliError::Input(format!(
                            "config line {}: `{}` expects true or false, got `{v}`",
                            e.line, e.key
                        )))
                    }
                }
            } else {
                tokens.push(format!("--{}={}", e.key, e.value));
            }
        }
        Ok(tokens)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let f = ConfigFile::parse("# c\nthreads = 2\n[threshold]\nls = 8,16\nrefine=\"3\"\n[global]\nformat = json\n")
            .unwrap();
        let keys: Vec<_> = f.entries.iter().map(|e| (e.section.as_deref(), e.key.as_str(), e.value.as_str())).collect();
        assert_eq!(
            keys,
            vec![
                (None, "threads", "2"),
                (Some("threshold"), "ls", "8,16"),
                (Some("threshold"), "refine", "3"),
                (None, "format", "json")
            ]
        );
    }

    #[test]
    fn malformed_lines_are_input_errors() {
        assert!(ConfigFile::parse("[oops\n").is_err());
        assert!(ConfigFile::parse("novalue\n").is_err());
        assert!(ConfigFile::parse(" = 3\n").is_err());
    }
}
