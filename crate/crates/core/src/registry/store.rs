//! Event log persistence.
//!
//! The file store keeps one canonical JSON record per line after a schema
//! header line. A writer holds an exclusive advisory lock on the file for as
//! long as the store is open; readers parse the file without locking.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde_json::Value;

use super::events::{LogHeader, RegistryEvent, LOG_SCHEMA, LOG_SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("registry I/O on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("registry {0} is locked by another writer")]
    Locked(String),
    #[error("registry {0} already exists")]
    Exists(String),
    #[error("registry {0} does not exist; run init first")]
    Missing(String),
    #[error("registry header: {0}")]
    Header(String),
    #[error("registry {0} was opened read-only")]
    ReadOnly(String),
}

/// A line of the log that could not be read as an event.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("corrupt event{} at line {line}: {reason}", .event_id.map(|i| format!(" {i}")).unwrap_or_default())]
pub struct CorruptLine {
    pub line: usize,
    pub event_id: Option<u64>,
    pub reason: String,
}

/// Parse log text. Line 1 must be the header; blank lines are ignored.
pub fn parse_log(text: &str) -> Result<Vec<Result<RegistryEvent, CorruptLine>>, StoreError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        None => return Err(StoreError::Header("empty log file".into())),
        Some((_, first)) => check_header(first)?,
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(i + 1, l))
        .collect())
}

fn check_header(line: &str) -> Result<(), StoreError> {
    let h: LogHeader =
        serde_json::from_str(line).map_err(|e| StoreError::Header(format!("unreadable header: {e}")))?;
    if h.schema != LOG_SCHEMA || h.schema_version != LOG_SCHEMA_VERSION {
        return Err(StoreError::Header(format!(
            "unsupported schema {} v{}",
            h.schema, h.schema_version
        )));
    }
    Ok(())
}

fn parse_line(line: usize, text: &str) -> Result<RegistryEvent, CorruptLine> {
    serde_json::from_str(text).map_err(|e| {
        let event_id = serde_json::from_str::<Value>(text)
            .ok()
            .and_then(|v| v.get("event_id").and_then(Value::as_u64));
        CorruptLine {
            line,
            event_id,
            reason: e.to_string(),
        }
    })
}

pub fn header_line() -> String {
    serde_json::to_string(&LogHeader::default()).expect("header serializes")
}

/// Durable sink for appended events.
pub trait EventStore: Send + Sync {
    /// Persist one event. Must be durable before returning `Ok`.
    fn append(&mut self, event: &RegistryEvent) -> Result<(), StoreError>;

    /// Raw log contents, header first.
    fn read_all(&self) -> Result<String, StoreError>;
}

/// In-memory store for tests, simulation and embedding.
#[derive(Debug, Default)]
pub struct MemoryStore {
    text: String,
}

impl MemoryStore {
    pub fn new() -> Self {
        Self {
            text: header_line() + "\n",
        }
    }

    pub fn from_text(text: impl Into<String>) -> Self {
        Self { text: text.into() }
    }
}

impl EventStore for MemoryStore {
    fn append(&mut self, event: &RegistryEvent) -> Result<(), StoreError> {
        if self.text.is_empty() {
            self.text = header_line() + "\n";
        }
        self.text.push_str(&event.to_line());
        self.text.push('\n');
        Ok(())
    }

    fn read_all(&self) -> Result<String, StoreError> {
        if self.text.is_empty() {
            Ok(header_line() + "\n")
        } else {
            Ok(self.text.clone())
        }
    }
}

/// A log read once without the writer lock. Appends are refused.
#[derive(Debug)]
pub struct ReadOnlyStore {
    path: PathBuf,
    text: String,
}

impl ReadOnlyStore {
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        Ok(Self {
            text: read_log_text(path)?,
            path: path.to_path_buf(),
        })
    }
}

impl EventStore for ReadOnlyStore {
    fn append(&mut self, _event: &RegistryEvent) -> Result<(), StoreError> {
        Err(StoreError::ReadOnly(self.path.display().to_string()))
    }

    fn read_all(&self) -> Result<String, StoreError> {
        Ok(self.text.clone())
    }
}

/// JSON Lines file holding the writer lock for its lifetime.
#[derive(Debug)]
pub struct FileStore {
    path: PathBuf,
    file: File,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl FileStore {
    /// Create a new log with just the header line.
    pub fn create(path: &Path) -> Result<Self, StoreError> {
        if path.exists() {
            return Err(StoreError::Exists(path.display().to_string()));
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io_err(path))?;
        }
        let mut file = OpenOptions::new()
            .create_new(true)
            .read(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        Self::lock(&file, path)?;
        writeln!(file, "{}", header_line()).map_err(io_err(path))?;
        file.sync_all().map_err(io_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    /// Open an existing log for writing.
    pub fn open(path: &Path) -> Result<Self, StoreError> {
        if !path.exists() {
            return Err(StoreError::Missing(path.display().to_string()));
        }
        let file = OpenOptions::new()
            .read(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        Self::lock(&file, path)?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    fn lock(file: &File, path: &Path) -> Result<(), StoreError> {
        match file.try_lock() {
            Ok(()) => Ok(()),
            Err(std::fs::TryLockError::WouldBlock) => {
                Err(StoreError::Locked(path.display().to_string()))
            }
            Err(std::fs::TryLockError::Error(e)) => Err(io_err(path)(e)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventStore for FileStore {
    fn append(&mut self, event: &RegistryEvent) -> Result<(), StoreError> {
        let mut line = event.to_line();
        line.push('\n');
        self.file.write_all(line.as_bytes()).map_err(io_err(&self.path))?;
        self.file.sync_data().map_err(io_err(&self.path))
    }

    fn read_all(&self) -> Result<String, StoreError> {
        read_log_text(&self.path)
    }
}

/// Read a log without taking the writer lock.
pub fn read_log_text(path: &Path) -> Result<String, StoreError> {
    if !path.exists() {
        return Err(StoreError::Missing(path.display().to_string()));
    }
    let f = File::open(path).map_err(io_err(path))?;
    let mut text = String::new();
    for line in BufReader::new(f).lines() {
        text.push_str(&line.map_err(io_err(path))?);
        text.push('\n');
    }
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::events::{EventBody, ViolationNoted};

    fn ev(id: u64) -> RegistryEvent {
        RegistryEvent {
            event_id: id,
            timestamp: "2026-03-02T10:00:00Z".parse().unwrap(),
            actor: "sam".into(),
            body: EventBody::ViolationNoted(ViolationNoted {
                description: "x".into(),
                person: None,
                task_type_id: None,
                item_id: None,
            }),
        }
    }

    #[test]
    fn file_store_round_trip_and_lock() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("reg/registry.jsonl");
        let mut s = FileStore::create(&path).unwrap();
        s.append(&ev(1)).unwrap();
        assert!(matches!(FileStore::open(&path), Err(StoreError::Locked(_))));
        let parsed = parse_log(&read_log_text(&path).unwrap()).unwrap();
        assert_eq!(parsed, vec![Ok(ev(1))]);
        drop(s);
        FileStore::open(&path).unwrap();
    }

    #[test]
    fn corrupt_line_reports_event_id() {
        let text = format!("{}\n{}\n{{\"event_id\":2,\"kind\":\"bogus\"}}\n", header_line(), ev(1).to_line());
        let parsed = parse_log(&text).unwrap();
        assert!(parsed[0].is_ok());
        let err = parsed[1].clone().unwrap_err();
        assert_eq!(err.event_id, Some(2));
        assert_eq!(err.line, 3);
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(parse_log("{\"schema\":\"other\",\"schema_version\":1}\n"), Err(StoreError::Header(_))));
        assert!(matches!(parse_log(""), Err(StoreError::Header(_))));
    }
}
