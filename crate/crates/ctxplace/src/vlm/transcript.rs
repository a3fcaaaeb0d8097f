//! Append-only request log, one JSON object per line.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Role, VlmError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    /// Request index, increasing by one per request within a run.
    pub index: u64,
    pub role: Role,
    /// 0 for the first try, then one per repair prompt.
    #[serde(default)]
    pub attempt: u32,
    /// Prompt text, verbatim.
    #[serde(default)]
    pub prompt: String,
    /// Byte length of each attached image.
    #[serde(default)]
    pub image_bytes: Vec<usize>,
    #[serde(default)]
    pub response: Option<String>,
    #[serde(default)]
    pub error: Option<String>,
}

impl Entry {
    pub fn new(index: u64, role: Role, attempt: u32, prompt: &str, images: &[Vec<u8>]) -> Self {
        Entry {
            index,
            role,
            attempt,
            prompt: prompt.into(),
            image_bytes: images.iter().map(Vec::len).collect(),
            response: None,
            error: None,
        }
    }
}

/// In-memory log, optionally mirrored line by line to a file.
#[derive(Debug, Default)]
pub struct Transcript {
    entries: Vec<Entry>,
    file: Option<(File, String)>,
}

impl Transcript {
    pub fn in_memory() -> Self {
        Transcript::default()
    }

    /// Appends to `path`, creating it if needed. Existing lines are kept;
    /// indices continue from the number of lines already there.
    pub fn to_file(path: &Path) -> Result<Self, VlmError> {
        let err = |e: std::io::Error| VlmError::Transcript {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let existing = if path.exists() { read_entries(path)? } else { Vec::new() };
        let f = OpenOptions::new().create(true).append(true).open(path).map_err(err)?;
        Ok(Transcript {
            entries: existing,
            file: Some((f, path.display().to_string())),
        })
    }

    pub fn next_index(&self) -> u64 {
        self.entries.len() as u64
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn append(&mut self, e: Entry) -> Result<(), VlmError> {
        if let Some((f, path)) = &mut self.file {
            let line = serde_json::to_string(&e).expect("entry serializes");
            writeln!(f, "{line}")
                .and_then(|_| f.flush())
                .map_err(|err| VlmError::Transcript {
                    path: path.clone(),
                    message: err.to_string(),
                })?;
        }
        self.entries.push(e);
        Ok(())
    }
}

pub fn parse_entries(text: &str, origin: &str) -> Result<Vec<Entry>, VlmError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let e: Entry = serde_json::from_str(line).map_err(|e| VlmError::Transcript {
            path: origin.into(),
            message: format!("line {}: {e}", n + 1),
        })?;
        out.push(e);
    }
    Ok(out)
}

pub fn read_entries(path: &Path) -> Result<Vec<Entry>, VlmError> {
    let f = File::open(path).map_err(|e| VlmError::Transcript {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let mut text = String::new();
    for line in BufReader::new(f).lines() {
        let line = line.map_err(|e| VlmError::Transcript {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        text.push_str(&line);
        text.push('\n');
    }
    parse_entries(&text, &path.display().to_string())
}
