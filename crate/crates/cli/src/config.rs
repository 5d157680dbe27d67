//! Run configuration and the writers that embed it in every output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub version: String,
    pub out_dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub parameters: Value,
}

/// Output sink rooted at `--out-dir`.
pub struct Output {
    pub dir: PathBuf,
    pub config: RunConfig,
}

impl Output {
    pub fn new(dir: PathBuf, config: RunConfig) -> Self {
        Output { dir, config }
    }

    /// Resolves a user path against the output directory.
    pub fn path(&self, p: &Path) -> PathBuf {
        self.dir.join(p)
    }

    fn create(&self, p: &Path) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.path(p);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok((path, BufWriter::new(file)))
    }

    /// Writes `body` as pretty JSON with an added `config` field.
    pub fn write_json<T: Serialize>(&self, p: &Path, body: &T) -> Result<PathBuf> {
        let mut value = serde_json::to_value(body)?;
        match &mut value {
            Value::Object(map) => {
                map.insert("config".into(), serde_json::to_value(&self.config)?);
            }
            _ => bail!("JSON outputs must be objects"),
        }
        reject_nulls(&value, "$")?;
        let (path, mut w) = self.create(p)?;
        serde_json::to_writer_pretty(&mut w, &value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(path)
    }

    /// Writes a numeric table after a `# config:` comment line.
    pub fn write_csv<I>(&self, p: &Path, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let (path, mut w) = self.create(p)?;
        writeln!(w, "# config: {}", serde_json::to_string(&self.config)?)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header)?;
        for (k, row) in rows.into_iter().enumerate() {
            if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                bail!("{}: row {k} holds the non-finite value {bad}", path.display());
            }
            csv.write_record(row.iter().map(|v| v.to_string()))?;
        }
        csv.flush()?;
        Ok(path)
    }

    pub fn write_text(&self, p: &Path, text: &str) -> Result<PathBuf> {
        let (path, mut w) = self.create(p)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(path)
    }
}

/// Non-finite floats serialize as `null`; no output field is optional, so
/// any `null` means a NaN or infinity reached the writer.
fn reject_nulls(v: &Value, at: &str) -> Result<()> {
    match v {
        Value::Null => bail!("non-finite value at {at}"),
        Value::Array(a) => a.iter().enumerate().try_for_each(|(i, x)| reject_nulls(x, &format!("{at}[{i}]"))),
        Value::Object(m) => m.iter().try_for_each(|(k, x)| reject_nulls(x, &format!("{at}.{k}"))),
        _ => Ok(()),
    }
}

/// Reads the `# config:` line of a CSV written by [`Output::write_csv`].
pub fn read_csv_config(text: &str) -> Option<Value> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# config: "))
        .and_then(|c| serde_json::from_str(c).ok())
}
