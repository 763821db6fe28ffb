//! The output directory of one run.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

pub const FAILURE_MARKER: &str = "FAILED";

pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// Creates the directory and clears a failure marker left by an earlier run.
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let marker = root.join(FAILURE_MARKER);
        if marker.exists() {
            fs::remove_file(&marker).with_context(|| format!("removing {}", marker.display()))?;
        }
        Ok(Self { root: root.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn writer(&self, name: &str) -> Result<BufWriter<fs::File>> {
        let path = self.path(name);
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(BufWriter::new(file))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<()> {
        let mut w = self.writer(name)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    /// Records the command and its fully resolved arguments.
    pub fn write_manifest<T: Serialize>(&self, command: &str, args: &T) -> Result<()> {
        self.write_json(
            "manifest.json",
            &serde_json::json!({
                "command": command,
                "version": env!("CARGO_PKG_VERSION"),
                "args": args,
            }),
        )
    }
}

/// Leaves a marker describing why the run at `root` did not finish.
pub fn mark_failed(root: &Path, err: &anyhow::Error) {
    if fs::create_dir_all(root).is_ok() {
        let _ = fs::write(root.join(FAILURE_MARKER), format!("{err:#}\n"));
    }
}

/// Writes one JSON value per line.
pub fn write_jsonl<W: Write, T: Serialize>(out: &mut W, items: impl IntoIterator<Item = T>) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut *out, &item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
