//! Output files. Every CSV and data file opens with `#` comment lines naming
//! the tool version, command, config hash and seeds.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

use crate::failure::Failure;

pub struct Output {
    pub dir: PathBuf,
    pub command: String,
    pub config_hash: String,
    pub seeds: String,
}

impl Output {
    pub fn new(
        dir: &Path,
        command: &str,
        config_hash: String,
        seeds: &[u64],
    ) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| {
            Failure::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config_hash,
            seeds: seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        })
    }

    fn create(&self, rel: &str) -> Result<(PathBuf, BufWriter<File>), Failure> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok((path, BufWriter::new(file)))
    }

    fn preamble<W: Write>(&self, w: &mut W, extra: &[(&str, String)]) -> std::io::Result<()> {
        writeln!(w, "# ocn {} {}", env!("CARGO_PKG_VERSION"), self.command)?;
        writeln!(w, "# config_hash: {}", self.config_hash)?;
        writeln!(w, "# seeds: {}", self.seeds)?;
        for (k, v) in extra {
            writeln!(w, "# {k}: {v}")?;
        }
        Ok(())
    }

    /// Writes a CSV file; `rows` are already stringified.
    pub fn csv(
        &self,
        rel: &str,
        extra: &[(&str, String)],
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<String>>,
    ) -> Result<PathBuf, Failure> {
        let (path, mut w) = self.create(rel)?;
        self.preamble(&mut w, extra)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for row in rows {
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(path)
    }

    /// Whitespace-separated columns for gnuplot.
    pub fn dat(
        &self,
        rel: &str,
        extra: &[(&str, String)],
        columns: &[&str],
        rows: impl IntoIterator<Item = Vec<f64>>,
    ) -> Result<PathBuf, Failure> {
        let (path, mut w) = self.create(rel)?;
        self.preamble(&mut w, extra)?;
        writeln!(w, "# {}", columns.join(" "))?;
        for row in rows {
            let line: Vec<String> = row.iter().map(f64::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        w.flush()?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, rel: &str, value: &T) -> Result<PathBuf, Failure> {
        let (path, mut w) = self.create(rel)?;
        serde_json::to_writer_pretty(&mut w, value).context("serializing JSON")?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    pub fn text(&self, rel: &str, body: &str) -> Result<PathBuf, Failure> {
        let (path, mut w) = self.create(rel)?;
        w.write_all(body.as_bytes())?;
        w.flush()?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    v.to_string()
}
