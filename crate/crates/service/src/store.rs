//! In-memory session store backed by a directory of `<id>.json` files.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use cartometry::session::{load_session, save_session, Session};
use cartometry::{Error, Result};
use tokio::sync::RwLock;

type Slot = Arc<RwLock<Option<Session>>>;

/// Sessions are loaded lazily and written back atomically after every
/// mutation. Writers to one id are serialized; other ids proceed in parallel.
#[derive(Debug)]
pub struct SessionStore {
    dir: PathBuf,
    slots: Mutex<HashMap<String, Slot>>,
}

/// Session ids double as file names, so they are restricted to a safe set.
pub fn validate_id(id: &str) -> Result<()> {
    let ok = !id.is_empty()
        && id.len() <= 128
        && !id.starts_with('.')
        && id.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'));
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("invalid session id {id:?}")))
    }
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        let meta = std::fs::metadata(&dir).map_err(|source| Error::Io {
            path: dir.clone(),
            source,
        })?;
        if !meta.is_dir() {
            return Err(Error::Io {
                path: dir,
                source: std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
            });
        }
        Ok(Self {
            dir,
            slots: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_of(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.json"))
    }

    fn slot(&self, id: &str) -> Slot {
        let mut slots = self.slots.lock().expect("store mutex poisoned");
        slots.entry(id.to_string()).or_default().clone()
    }

    fn not_found(id: &str) -> Error {
        Error::NotFound(format!("session not found: {id:?}"))
    }

    fn load_into(&self, id: &str, slot: &mut Option<Session>) -> Result<()> {
        if slot.is_none() {
            let path = self.path_of(id);
            if !path.is_file() {
                return Err(Self::not_found(id));
            }
            *slot = Some(load_session(&path)?);
        }
        Ok(())
    }

    /// Ids of every session on disk or in memory, sorted.
    pub fn list(&self) -> Result<Vec<String>> {
        let entries = std::fs::read_dir(&self.dir).map_err(|source| Error::Io {
            path: self.dir.clone(),
            source,
        })?;
        let mut ids: Vec<String> = entries
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                let id = name.strip_suffix(".json")?.to_string();
                validate_id(&id).ok().map(|_| id)
            })
            .collect();
        ids.sort();
        ids.dedup();
        Ok(ids)
    }

    pub async fn get(&self, id: &str) -> Result<Session> {
        validate_id(id)?;
        let slot = self.slot(id);
        {
            let guard = slot.read().await;
            if let Some(s) = guard.as_ref() {
                return Ok(s.clone());
            }
        }
        let mut guard = slot.write().await;
        self.load_into(id, &mut guard)?;
        Ok(guard.clone().expect("loaded above"))
    }

    /// Replaces (or creates) a session.
    pub async fn put(&self, id: &str, session: Session) -> Result<()> {
        validate_id(id)?;
        let slot = self.slot(id);
        let mut guard = slot.write().await;
        save_session(&session, &self.path_of(id))?;
        *guard = Some(session);
        tracing::info!(session = id, "session replaced");
        Ok(())
    }

    /// Applies `op` under the session's write lock, persisting the new value
    /// before it becomes visible. On any error the stored session is untouched.
    pub async fn update<T>(&self, id: &str, op: impl FnOnce(&Session) -> Result<(Session, T)>) -> Result<T> {
        validate_id(id)?;
        let slot = self.slot(id);
        let mut guard = slot.write().await;
        self.load_into(id, &mut guard)?;
        let (next, out) = op(guard.as_ref().expect("loaded above"))?;
        save_session(&next, &self.path_of(id))?;
        *guard = Some(next);
        tracing::debug!(session = id, "session updated");
        Ok(out)
    }
}
