//! Single-writer persistence: an append-only mutation log, periodic
//! snapshots, and package files named by content id.
//!
//! Layout of a store directory:
//!
//! ```text
//! snapshot.json       {"seq": n, "state": {...}}
//! log.jsonl           one {"seq": n, "mutation": {...}} per line
//! packages/<id>.h5p   imported packages
//! ```
//!
//! Readers take an `Arc` of the current state and never block the writer.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use modcanvas_core::h5p::{read_package, H5pPackage};
use modcanvas_core::model::ContentId;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::state::{Effect, Mutation, State};

const SNAPSHOT: &str = "snapshot.json";
const LOG: &str = "log.jsonl";
const PACKAGES: &str = "packages";

#[derive(Serialize, Deserialize)]
struct LogLine {
    seq: u64,
    mutation: Mutation,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    seq: u64,
    state: State,
}

struct Writer {
    seq: u64,
    since_snapshot: u64,
    log: Option<File>,
}

pub struct Store {
    dir: Option<PathBuf>,
    current: RwLock<Arc<State>>,
    writer: Mutex<Writer>,
    snapshot_every: u64,
}

fn storage(context: &str, err: impl std::fmt::Display) -> ServiceError {
    ServiceError::Storage(format!("{context}: {err}"))
}

impl Store {
    /// A store that keeps nothing on disk.
    pub fn in_memory() -> Store {
        Store {
            dir: None,
            current: RwLock::new(Arc::new(State::default())),
            writer: Mutex::new(Writer {
                seq: 0,
                since_snapshot: 0,
                log: None,
            }),
            snapshot_every: u64::MAX,
        }
    }

    /// Opens or creates the store in `dir`, replaying the log over the last
    /// snapshot. A final line without its newline is a torn write and is
    /// discarded.
    pub fn open(dir: &Path, snapshot_every: u64) -> Result<Store, ServiceError> {
        fs::create_dir_all(dir.join(PACKAGES)).map_err(|e| storage("create store", e))?;
        let (mut seq, mut state) = match fs::read(dir.join(SNAPSHOT)) {
            Ok(bytes) => {
                let snapshot: Snapshot =
                    serde_json::from_slice(&bytes).map_err(|e| storage("read snapshot", e))?;
                (snapshot.seq, snapshot.state)
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => (0, State::default()),
            Err(e) => return Err(storage("read snapshot", e)),
        };
        load_packages(&dir.join(PACKAGES), &mut state)?;

        let log_path = dir.join(LOG);
        let mut since_snapshot = 0;
        let bytes = match fs::read(&log_path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(storage("read log", e)),
        };
        let mut kept = 0;
        let mut rest = &bytes[..];
        while !rest.is_empty() {
            let (line, complete) = match rest.iter().position(|&b| b == b'\n') {
                Some(end) => (&rest[..end], true),
                None => (rest, false),
            };
            let entry: LogLine = match serde_json::from_slice(line) {
                Ok(entry) if complete => entry,
                Err(e) if complete => return Err(storage("corrupt log", e)),
                _ => break,
            };
            kept += line.len() + 1;
            rest = &rest[line.len() + 1..];
            if entry.seq <= seq {
                continue;
            }
            state
                .apply(entry.mutation)
                .map_err(|e| storage(&format!("replay of entry {}", entry.seq), e))?;
            seq = entry.seq;
            since_snapshot += 1;
        }
        let log = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&log_path)
            .map_err(|e| storage("open log", e))?;
        log.set_len(kept as u64).map_err(|e| storage("trim log", e))?;

        Ok(Store {
            dir: Some(dir.to_owned()),
            current: RwLock::new(Arc::new(state)),
            writer: Mutex::new(Writer {
                seq,
                since_snapshot,
                log: Some(log),
            }),
            snapshot_every: snapshot_every.max(1),
        })
    }

    pub fn state(&self) -> Arc<State> {
        self.current.read().expect("state lock poisoned").clone()
    }

    /// Applies `mutation`, makes it durable, then publishes the new state.
    pub fn commit(&self, mutation: Mutation) -> Result<Effect, ServiceError> {
        self.commit_with(mutation, |_| Ok(()))
    }

    /// Stores `bytes` as the package for `content_id` and commits
    /// `mutation` with the package available.
    pub fn commit_with_package(
        &self,
        content_id: &ContentId,
        package: H5pPackage,
        bytes: &[u8],
        mutation: Mutation,
    ) -> Result<Effect, ServiceError> {
        self.commit_with(mutation, |state| {
            if let Some(dir) = &self.dir {
                let path = dir.join(PACKAGES).join(format!("{content_id}.h5p"));
                write_atomically(&path, bytes)?;
            }
            state.catalog.insert_package(content_id.clone(), package);
            Ok(())
        })
    }

    fn commit_with(
        &self,
        mutation: Mutation,
        prepare: impl FnOnce(&mut State) -> Result<(), ServiceError>,
    ) -> Result<Effect, ServiceError> {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        let mut next = State::clone(&self.state());
        prepare(&mut next)?;
        let effect = next.apply(mutation.clone())?;
        let seq = writer.seq + 1;
        if let Some(log) = writer.log.as_mut() {
            let mut line = serde_json::to_vec(&LogLine { seq, mutation }).map_err(|e| storage("encode", e))?;
            line.push(b'\n');
            log.write_all(&line).map_err(|e| storage("append log", e))?;
            log.sync_data().map_err(|e| storage("sync log", e))?;
        }
        writer.seq = seq;
        writer.since_snapshot += 1;
        let next = Arc::new(next);
        *self.current.write().expect("state lock poisoned") = next.clone();
        if writer.since_snapshot >= self.snapshot_every {
            // The mutation is already durable in the log; a failed snapshot
            // is retried on the next commit.
            if let Err(e) = self.snapshot(&mut writer, &next) {
                eprintln!("modcanvas: {e}");
            }
        }
        Ok(effect)
    }

    /// Writes a snapshot now and empties the log.
    pub fn compact(&self) -> Result<(), ServiceError> {
        let mut writer = self.writer.lock().expect("writer lock poisoned");
        let state = self.state();
        self.snapshot(&mut writer, &state)
    }

    fn snapshot(&self, writer: &mut Writer, state: &State) -> Result<(), ServiceError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        #[derive(Serialize)]
        struct SnapshotRef<'a> {
            seq: u64,
            state: &'a State,
        }
        let bytes = serde_json::to_vec(&SnapshotRef { seq: writer.seq, state })
            .map_err(|e| storage("encode snapshot", e))?;
        write_atomically(&dir.join(SNAPSHOT), &bytes)?;
        if let Some(log) = writer.log.as_mut() {
            log.set_len(0).map_err(|e| storage("truncate log", e))?;
            log.sync_data().map_err(|e| storage("sync log", e))?;
        }
        writer.since_snapshot = 0;
        Ok(())
    }
}

fn load_packages(dir: &Path, state: &mut State) -> Result<(), ServiceError> {
    let entries = fs::read_dir(dir).map_err(|e| storage("list packages", e))?;
    for entry in entries {
        let path = entry.map_err(|e| storage("list packages", e))?.path();
        let (Some(stem), Some("h5p")) = (
            path.file_stem().and_then(|s| s.to_str()),
            path.extension().and_then(|s| s.to_str()),
        ) else {
            continue;
        };
        let bytes = fs::read(&path).map_err(|e| storage("read package", e))?;
        let package = read_package(&bytes).map_err(|e| storage(&format!("package {stem}"), e))?;
        state.catalog.insert_package(ContentId::new(stem), package);
    }
    Ok(())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("tmp");
    let mut file = File::create(&tmp).map_err(|e| storage("write", e))?;
    file.write_all(bytes).map_err(|e| storage("write", e))?;
    file.sync_all().map_err(|e| storage("sync", e))?;
    fs::rename(&tmp, path).map_err(|e| storage("rename", e))
}
