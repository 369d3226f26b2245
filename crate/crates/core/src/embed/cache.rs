//! Content-addressed on-disk feature cache.
//!
//! Single append-only file. Header: magic `EMBC`, version u16, float width
//! u8. Records are length-prefixed: `record_len: u32`, `key: [u8; 32]`
//! (SHA-256 of provider id and preprocessed text), `dim: u32`, `payload:
//! dim × f32 little-endian`, `crc32: u32` over key, dim and payload. A
//! record whose checksum no longer matches is treated as absent: the vector
//! is recomputed and appended, and the index moves to the fresh copy.
//!
//! Readers proceed concurrently (positioned reads under a shared lock);
//! writers are serialized.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::PreprocessedText;

use super::{checked_embed, EmbeddingProvider};

const MAGIC: &[u8; 4] = b"EMBC";
const VERSION: u16 = 1;
const FLOAT_WIDTH: u8 = 4;
const HEADER_LEN: u64 = 7;
/// key + dim + crc32
const RECORD_OVERHEAD: u32 = 32 + 4 + 4;

type CacheKey = [u8; 32];

#[derive(Clone, Copy)]
struct IndexEntry {
    /// Offset of the record's length prefix.
    offset: u64,
    dim: u32,
}

struct Inner {
    file: File,
    index: HashMap<CacheKey, IndexEntry>,
    end: u64,
}

/// Persistent (provider, text) → vector store.
pub struct FeatureCache {
    path: PathBuf,
    inner: RwLock<Inner>,
}

/// SHA-256 over the provider id (length-prefixed) and the preprocessed text.
pub fn cache_key(provider_id: &str, text: &PreprocessedText) -> CacheKey {
    let mut hasher = Sha256::new();
    hasher.update((provider_id.len() as u32).to_le_bytes());
    hasher.update(provider_id.as_bytes());
    hasher.update(text.text.as_bytes());
    hasher.finalize().into()
}

fn crc_of(key: &CacheKey, dim: u32, payload: &[u8]) -> u32 {
    let mut h = crc32fast::Hasher::new();
    h.update(key);
    h.update(&dim.to_le_bytes());
    h.update(payload);
    h.finalize()
}

impl FeatureCache {
    /// Open or create the cache file and index its records. A truncated or
    /// structurally implausible tail is discarded so later appends stay
    /// consistent.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(&path, e))?;
            }
        }
        let mut file = OpenOptions::new()
            .read(true)
            .write(true)
            .create(true)
            .truncate(false)
            .open(&path)
            .map_err(|e| Error::io(&path, e))?;

        let file_len = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        if file_len == 0 {
            file.write_all(MAGIC).map_err(|e| Error::io(&path, e))?;
            file.write_all(&VERSION.to_le_bytes())
                .map_err(|e| Error::io(&path, e))?;
            file.write_all(&[FLOAT_WIDTH]).map_err(|e| Error::io(&path, e))?;
            file.flush().map_err(|e| Error::io(&path, e))?;
            return Ok(FeatureCache {
                path,
                inner: RwLock::new(Inner {
                    file,
                    index: HashMap::new(),
                    end: HEADER_LEN,
                }),
            });
        }

        let mut header = [0u8; HEADER_LEN as usize];
        file.seek(SeekFrom::Start(0)).map_err(|e| Error::io(&path, e))?;
        file.read_exact(&mut header).map_err(|e| Error::io(&path, e))?;
        if &header[0..4] != MAGIC {
            return Err(Error::BadMagic {
                path,
                expected: "EMBC",
            });
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(Error::VersionMismatch {
                path,
                found: version,
            });
        }
        if header[6] != FLOAT_WIDTH {
            return Err(Error::Data(format!(
                "{}: unsupported float width {}",
                path.display(),
                header[6]
            )));
        }

        let mut index = HashMap::new();
        let mut offset = HEADER_LEN;
        let mut end = HEADER_LEN;
        loop {
            let mut len_buf = [0u8; 4];
            if offset + 4 > file_len {
                break;
            }
            file.read_exact_at(&mut len_buf, offset)
                .map_err(|e| Error::io(&path, e))?;
            let record_len = u32::from_le_bytes(len_buf);
            if record_len < RECORD_OVERHEAD || offset + 4 + record_len as u64 > file_len {
                break; // truncated or mangled tail
            }
            let mut head = [0u8; 36];
            file.read_exact_at(&mut head, offset + 4)
                .map_err(|e| Error::io(&path, e))?;
            let key: CacheKey = head[..32].try_into().unwrap();
            let dim = u32::from_le_bytes(head[32..36].try_into().unwrap());
            if record_len != RECORD_OVERHEAD + dim * 4 {
                break;
            }
            index.insert(key, IndexEntry { offset, dim });
            offset += 4 + record_len as u64;
            end = offset;
        }
        if end < file_len {
            file.set_len(end).map_err(|e| Error::io(&path, e))?;
        }

        Ok(FeatureCache {
            path,
            inner: RwLock::new(Inner { file, index, end }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Number of distinct cached keys.
    pub fn entries(&self) -> usize {
        self.inner.read().unwrap().index.len()
    }

    /// Read and checksum-verify one record. `None` means absent or corrupt.
    fn read_entry(&self, inner: &Inner, key: &CacheKey) -> Result<Option<Vec<f32>>> {
        let Some(entry) = inner.index.get(key) else {
            return Ok(None);
        };
        let body_len = 36 + entry.dim as usize * 4 + 4;
        let mut body = vec![0u8; body_len];
        inner
            .file
            .read_exact_at(&mut body, entry.offset + 4)
            .map_err(|e| Error::io(&self.path, e))?;
        let stored_key = &body[..32];
        let dim = u32::from_le_bytes(body[32..36].try_into().unwrap());
        let payload = &body[36..36 + entry.dim as usize * 4];
        let crc = u32::from_le_bytes(body[body_len - 4..].try_into().unwrap());
        if stored_key != key || dim != entry.dim || crc_of(key, dim, payload) != crc {
            return Ok(None);
        }
        Ok(Some(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ))
    }

    fn append(&self, inner: &mut Inner, key: CacheKey, vector: &[f32]) -> Result<()> {
        let dim = vector.len() as u32;
        let mut payload = Vec::with_capacity(vector.len() * 4);
        for x in vector {
            payload.extend_from_slice(&x.to_le_bytes());
        }
        let crc = crc_of(&key, dim, &payload);
        let record_len = RECORD_OVERHEAD + dim * 4;

        let mut record = Vec::with_capacity(4 + record_len as usize);
        record.extend_from_slice(&record_len.to_le_bytes());
        record.extend_from_slice(&key);
        record.extend_from_slice(&dim.to_le_bytes());
        record.extend_from_slice(&payload);
        record.extend_from_slice(&crc.to_le_bytes());

        let offset = inner.end;
        inner
            .file
            .write_all_at(&record, offset)
            .map_err(|e| Error::io(&self.path, e))?;
        inner.file.flush().map_err(|e| Error::io(&self.path, e))?;
        inner.end += record.len() as u64;
        inner.index.insert(key, IndexEntry { offset, dim });
        Ok(())
    }

    /// On a hit, return the stored vector bit-identically; on a miss (or a
    /// checksum failure), compute through the provider, persist, and return
    /// what was persisted.
    pub fn get_or_compute(
        &self,
        provider: &dyn EmbeddingProvider,
        text: &PreprocessedText,
    ) -> Result<Vec<f32>> {
        let key = cache_key(provider.provider_id(), text);
        {
            let inner = self.inner.read().unwrap();
            if let Some(v) = self.read_entry(&inner, &key)? {
                return Ok(v);
            }
        }
        // Compute outside any lock so providers can run in parallel.
        let vector = checked_embed(provider, text)?;
        let mut inner = self.inner.write().unwrap();
        // Another thread may have filled the slot meanwhile.
        if let Some(v) = self.read_entry(&inner, &key)? {
            return Ok(v);
        }
        self.append(&mut inner, key, &vector)?;
        Ok(vector)
    }
}
