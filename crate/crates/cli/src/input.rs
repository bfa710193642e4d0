//! Graph and parameter-vector inputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use reinforce_core::Network;

#[derive(Debug, Clone, Args)]
pub struct GraphArg {
    /// Graph file: `{"n": 3, "edges": [[0, 1, 1.0], ...]}`.
    #[arg(long, value_name = "FILE")]
    pub graph: PathBuf,
}

impl GraphArg {
    pub fn load(&self) -> Result<Network> {
        Network::from_file(&self.graph)
            .with_context(|| format!("reading graph {}", self.graph.display()))
    }
}

/// A real vector given inline (`1,2,3`) or read from a file.
#[derive(Debug, Clone, Default)]
pub struct VectorSource {
    pub inline: Option<String>,
    pub file: Option<PathBuf>,
}

impl VectorSource {
    pub fn new(inline: Option<String>, file: Option<PathBuf>) -> Self {
        Self { inline, file }
    }

    /// Parse the vector and check it has `len` entries.
    pub fn resolve(&self, name: &str, len: usize) -> Result<Vec<f64>> {
        let v = match (&self.inline, &self.file) {
            (Some(_), Some(_)) => bail!("--{name} and --{name}-file are both given"),
            (Some(s), None) => parse_reals(s).with_context(|| format!("parsing --{name}"))?,
            (None, Some(p)) => read_reals(p).with_context(|| format!("reading --{name}-file"))?,
            (None, None) => bail!("--{name} or --{name}-file is required"),
        };
        if v.len() != len {
            bail!("--{name} has {} entries, expected {len}", v.len());
        }
        Ok(v)
    }
}

/// Comma- or whitespace-separated reals.
pub fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("invalid number '{t}'")))
        .collect()
}

pub fn parse_indices(s: &str) -> Result<Vec<usize>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().with_context(|| format!("invalid index '{t}'")))
        .collect()
}

/// A JSON array or a plain list of reals.
fn read_reals(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    if text.trim_start().starts_with('[') {
        Ok(serde_json::from_str(&text)?)
    } else {
        parse_reals(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lists() {
        assert_eq!(parse_reals("1, 2.5\n3").unwrap(), vec![1.0, 2.5, 3.0]);
        assert_eq!(parse_indices("0,1,0").unwrap(), vec![0, 1, 0]);
        assert!(parse_reals("1,x").is_err());
    }

    #[test]
    fn inline_and_file_conflict() {
        let src = VectorSource::new(Some("1".into()), Some("f".into()));
        assert!(src.resolve("theta", 1).is_err());
        let src = VectorSource::new(Some("1,2".into()), None);
        assert!(src.resolve("theta", 3).is_err());
        assert_eq!(src.resolve("theta", 2).unwrap(), vec![1.0, 2.0]);
    }
}
