//! CSV outputs and their metadata sidecars.

use std::env;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// Overrides the directory used when `--out` is not given.
pub const OUTPUT_DIR_VAR: &str = "REINFORCE_OUTPUT_DIR";
const DEFAULT_OUTPUT_DIR: &str = "reinforce-out";

pub enum Target {
    Stdout,
    File(PathBuf),
}

impl Target {
    /// `--out -` is stdout; no `--out` means `<output dir>/<command>.csv`.
    pub fn resolve(out: Option<&Path>, command: &str) -> Self {
        match out {
            Some(p) if p == Path::new("-") => Target::Stdout,
            Some(p) => Target::File(p.to_path_buf()),
            None => {
                let dir = env::var_os(OUTPUT_DIR_VAR)
                    .map(PathBuf::from)
                    .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
                Target::File(dir.join(format!("{command}.csv")))
            }
        }
    }

    pub fn sidecar(&self) -> Option<PathBuf> {
        match self {
            Target::Stdout => None,
            Target::File(p) => {
                let mut name = p.file_name().unwrap_or_default().to_os_string();
                name.push(".meta.json");
                Some(p.with_file_name(name))
            }
        }
    }
}

pub struct CsvOut {
    target: Target,
    writer: csv::Writer<Box<dyn Write>>,
}

impl CsvOut {
    pub fn create(target: Target, header: &[String]) -> Result<Self> {
        let sink: Box<dyn Write> = match &target {
            Target::Stdout => Box::new(BufWriter::new(io::stdout().lock())),
            Target::File(p) => {
                if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                    fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
                }
                Box::new(BufWriter::new(
                    File::create(p).with_context(|| p.display().to_string())?,
                ))
            }
        };
        let mut writer = csv::Writer::from_writer(sink);
        writer.write_record(header)?;
        Ok(Self { target, writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        Ok(())
    }

    /// Flush the CSV and write `meta` next to it.
    pub fn finish(mut self, meta: &impl Serialize) -> Result<()> {
        self.writer.flush()?;
        if let Some(path) = self.target.sidecar() {
            let text = serde_json::to_string_pretty(meta)?;
            fs::write(&path, text + "\n").with_context(|| path.display().to_string())?;
        }
        if let Target::File(p) = &self.target {
            eprintln!("wrote {}", p.display());
        }
        Ok(())
    }
}

/// Columns `prefix_0, ..., prefix_{n-1}`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i}")).collect()
}

/// Shortest round-trip decimal form, so output bytes depend only on values.
pub fn real(x: f64) -> String {
    format!("{x}")
}
