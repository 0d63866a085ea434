//! Run manifests: inputs, seeds, code version, and output hashes.
//! Deliberately timestamp-free so identical runs produce identical bytes.

use anyhow::Result;
use maskforge_core::io::write_atomic;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// 64-bit FNV-1a over a byte stream.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

pub struct Manifest {
    command: String,
    entries: Vec<(String, String)>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        Manifest {
            command: command.to_string(),
            entries: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, key: &str, value: impl std::fmt::Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Register an output file to be hashed when the manifest is written.
    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = String::new();
        writeln!(text, "command = {}", self.command)?;
        writeln!(text, "version = {}", env!("CARGO_PKG_VERSION"))?;
        for (k, v) in &self.entries {
            writeln!(text, "{k} = {v}")?;
        }
        let mut outputs = self.outputs.clone();
        outputs.sort();
        for path in &outputs {
            let bytes = std::fs::read(path)?;
            let name = path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
            writeln!(text, "output.{name} = fnv1a64:{:016x}", fnv1a64(&bytes))?;
        }
        write_atomic(&dir.join("manifest.txt"), text.as_bytes())?;
        Ok(())
    }
}

/// Assemble CSV text and write it atomically (write-then-rename), so reruns
/// overwrite rather than append.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Csv {
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, fields: std::fmt::Arguments<'_>) {
        self.text.push_str(&fields.to_string());
        self.text.push('\n');
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())?;
        Ok(())
    }
}

#[macro_export]
macro_rules! csv_row {
    ($csv:expr, $($arg:tt)*) => {
        $csv.row(format_args!($($arg)*))
    };
}
