use std::fmt::Display;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use microcluster::Partition;
use serde::Serialize;

/// Reads one token per line; blank lines are skipped and tokens are relabelled
/// by order of first appearance.
pub fn read_partition(path: &Path) -> Result<Partition> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let tokens = text.lines().map(str::trim).filter(|t| !t.is_empty());
    Partition::canonicalize(tokens).with_context(|| format!("{} holds no tokens", path.display()))
}

pub fn partition_text(p: &Partition) -> String {
    let mut out = String::with_capacity(p.len() * 4);
    for c in p.labels() {
        out.push_str(&c.to_string());
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn out_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.to_path_buf())
}

/// Minimal CSV builder. Floats go through `Display`, which prints the
/// shortest string that parses back to the same value.
#[derive(Default)]
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new<T: Display>(header: &[T]) -> Self {
        let mut c = Self::default();
        c.row(header);
        c
    }

    pub fn row<T: Display>(&mut self, fields: &[T]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            let s = f.to_string();
            if s.contains([',', '"', '\n']) {
                self.buf.push('"');
                self.buf.push_str(&s.replace('"', "\"\""));
                self.buf.push('"');
            } else {
                self.buf.push_str(&s);
            }
        }
        self.buf.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.buf.as_bytes())
    }
}

/// Comma-separated list of floats.
pub fn parse_list(s: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().with_context(|| format!("not a number: {x:?}")))
        .collect::<Result<_>>()?;
    if v.is_empty() {
        bail!("empty list");
    }
    Ok(v)
}

pub fn parse_range(s: &str) -> Result<(f64, f64)> {
    match parse_list(s)?.as_slice() {
        [lo, hi] => Ok((*lo, *hi)),
        _ => bail!("expected two comma-separated numbers, got {s:?}"),
    }
}
