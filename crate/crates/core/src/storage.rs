// SPDX-License-Identifier: Apache-2.0

//! Snapshot-isolated tables over a pluggable durability backend.
//!
//! A [`Table`] keeps its current contents as an immutable `Arc<BTreeMap>`.
//! Readers clone the `Arc` and keep a consistent snapshot for as long as they
//! hold it. Writers are serialized per table: they copy the map, apply their
//! change, hand the new state to the backend, and only then publish it. A
//! failed commit leaves the published state untouched.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::SystemTime;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("storage I/O on {partition}: {source}")]
    Io {
        partition: String,
        #[source]
        source: io::Error,
    },
    #[error("corrupt partition {partition}: {source}")]
    Corrupt {
        partition: String,
        #[source]
        source: serde_json::Error,
    },
}

/// Where committed partitions live.
pub trait Backend: Send + Sync + fmt::Debug {
    /// Last committed bytes of `partition`, if it was ever committed.
    fn load(&self, partition: &str) -> io::Result<Option<Vec<u8>>>;
    /// Durably replaces `partition` with `bytes`, all or nothing.
    fn commit(&self, partition: &str, bytes: &[u8]) -> io::Result<()>;
    /// Cheap fingerprint of the committed state, if the backend can tell
    /// when another process changed it.
    fn stamp(&self, _partition: &str) -> io::Result<Option<Stamp>> {
        Ok(None)
    }
}

/// Modification time and length of a committed partition.
pub type Stamp = (SystemTime, u64);

/// Keeps nothing; tables live only in memory.
#[derive(Debug, Default, Clone, Copy)]
pub struct MemoryBackend;

impl Backend for MemoryBackend {
    fn load(&self, _partition: &str) -> io::Result<Option<Vec<u8>>> {
        Ok(None)
    }

    fn commit(&self, _partition: &str, _bytes: &[u8]) -> io::Result<()> {
        Ok(())
    }
}

/// One JSON file per partition in a directory, replaced atomically by
/// write-to-temp, fsync, rename.
#[derive(Debug, Clone)]
pub struct FileBackend {
    dir: PathBuf,
}

impl FileBackend {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, partition: &str) -> PathBuf {
        self.dir.join(format!("{partition}.json"))
    }
}

impl Backend for FileBackend {
    fn load(&self, partition: &str) -> io::Result<Option<Vec<u8>>> {
        match fs::read(self.path(partition)) {
            Ok(bytes) => Ok(Some(bytes)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    fn commit(&self, partition: &str, bytes: &[u8]) -> io::Result<()> {
        let target = self.path(partition);
        let tmp = self.dir.join(format!(".{partition}.json.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &target)?;
        if let Ok(d) = fs::File::open(&self.dir) {
            let _ = d.sync_all();
        }
        Ok(())
    }

    fn stamp(&self, partition: &str) -> io::Result<Option<Stamp>> {
        match fs::metadata(self.path(partition)) {
            Ok(m) => Ok(Some((m.modified()?, m.len()))),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }
}

/// An ordered key-value table with snapshot reads and serialized writes.
pub struct Table<K, V> {
    name: String,
    backend: Arc<dyn Backend>,
    current: RwLock<Arc<BTreeMap<K, V>>>,
    writer: Mutex<Option<Stamp>>,
}

impl<K, V> fmt::Debug for Table<K, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Table").field("name", &self.name).finish_non_exhaustive()
    }
}

impl<K, V> Table<K, V>
where
    K: Ord + Clone + Serialize + DeserializeOwned,
    V: Clone + Serialize + DeserializeOwned,
{
    /// Opens `name`, loading its last committed state from `backend`.
    pub fn open(name: &str, backend: Arc<dyn Backend>) -> Result<Self, StoreError> {
        let stamp = Self::stamp_of(name, backend.as_ref())?;
        let map = Self::load_map(name, backend.as_ref())?;
        Ok(Self {
            name: name.to_string(),
            backend,
            current: RwLock::new(Arc::new(map)),
            writer: Mutex::new(stamp),
        })
    }

    fn stamp_of(name: &str, backend: &dyn Backend) -> Result<Option<Stamp>, StoreError> {
        backend.stamp(name).map_err(|source| StoreError::Io {
            partition: name.to_string(),
            source,
        })
    }

    fn load_map(name: &str, backend: &dyn Backend) -> Result<BTreeMap<K, V>, StoreError> {
        let bytes = backend.load(name).map_err(|source| StoreError::Io {
            partition: name.to_string(),
            source,
        })?;
        match bytes {
            None => Ok(BTreeMap::new()),
            Some(bytes) => {
                let pairs: Vec<(K, V)> =
                    serde_json::from_slice(&bytes).map_err(|source| StoreError::Corrupt {
                        partition: name.to_string(),
                        source,
                    })?;
                Ok(pairs.into_iter().collect())
            }
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// The current committed state. Unaffected by later writes.
    pub fn snapshot(&self) -> Arc<BTreeMap<K, V>> {
        self.current.read().expect("table lock poisoned").clone()
    }

    /// Applies `f` to a private copy and commits the result atomically.
    /// Picks up changes committed by another process first.
    pub fn update<T>(&self, f: impl FnOnce(&mut BTreeMap<K, V>) -> T) -> Result<T, StoreError> {
        let mut stamp = self.writer.lock().expect("writer lock poisoned");
        if Self::stamp_of(&self.name, self.backend.as_ref())? != *stamp {
            self.reload_locked(&mut stamp)?;
        }
        let mut next = (*self.snapshot()).clone();
        let out = f(&mut next);
        let pairs: Vec<(&K, &V)> = next.iter().collect();
        let bytes = serde_json::to_vec(&pairs).expect("table contents serialize");
        self.backend
            .commit(&self.name, &bytes)
            .map_err(|source| StoreError::Io {
                partition: self.name.clone(),
                source,
            })?;
        *self.current.write().expect("table lock poisoned") = Arc::new(next);
        *stamp = Self::stamp_of(&self.name, self.backend.as_ref())?;
        Ok(out)
    }

    /// Re-reads the committed state, picking up writes made by another
    /// process sharing the backend.
    pub fn reload(&self) -> Result<(), StoreError> {
        let mut stamp = self.writer.lock().expect("writer lock poisoned");
        self.reload_locked(&mut stamp)
    }

    fn reload_locked(&self, stamp: &mut Option<Stamp>) -> Result<(), StoreError> {
        let fresh = Self::stamp_of(&self.name, self.backend.as_ref())?;
        let map = Self::load_map(&self.name, self.backend.as_ref())?;
        *self.current.write().expect("table lock poisoned") = Arc::new(map);
        *stamp = fresh;
        Ok(())
    }

    /// Reloads only when the backend reports a change since the last load
    /// or commit. Returns whether it reloaded.
    pub fn refresh(&self) -> Result<bool, StoreError> {
        let mut stamp = self.writer.lock().expect("writer lock poisoned");
        let fresh = Self::stamp_of(&self.name, self.backend.as_ref())?;
        if fresh.is_none() || fresh == *stamp {
            return Ok(false);
        }
        self.reload_locked(&mut stamp)?;
        Ok(true)
    }
}
