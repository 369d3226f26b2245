//! Versioned model container: magic `HMDL`, format version, canonical JSON
//! metadata, the opaque ensemble payload, and a trailing CRC32 over
//! everything before it. Cascade files embed one task-model container per
//! member. Writes go to a sibling temp file and rename into place, so a
//! failed save never leaves a partial artifact.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::corpus::{Language, Task};
use crate::error::{Error, Result};

use super::gbdt::{Booster, GbdtConfig};
use super::{CascadeModel, TrainedTaskModel};

const MAGIC: &[u8; 4] = b"HMDL";
const VERSION: u16 = 1;

#[derive(serde::Serialize, serde::Deserialize)]
struct TaskMeta {
    kind: String,
    language: Language,
    task: Task,
    class_list: Vec<String>,
    seed: u64,
    config: GbdtConfig,
    feature_dim: usize,
    created_unix: u64,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct CascadeMeta {
    kind: String,
    language: Language,
    members: usize,
    created_unix: u64,
}

/// A loaded model file: either one task model or a full cascade.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelArtifact {
    Task(TrainedTaskModel),
    Cascade(CascadeModel),
}

impl ModelArtifact {
    pub fn into_cascade(self) -> Result<CascadeModel> {
        match self {
            ModelArtifact::Cascade(c) => Ok(c),
            ModelArtifact::Task(m) => Err(Error::Data(format!(
                "expected a cascade model file, found a single task {} model",
                m.task()
            ))),
        }
    }

    pub fn into_task(self) -> Result<TrainedTaskModel> {
        match self {
            ModelArtifact::Task(m) => Ok(m),
            ModelArtifact::Cascade(_) => Err(Error::Data(
                "expected a task model file, found a cascade".into(),
            )),
        }
    }
}

/// Borrowed view for saving without cloning.
#[derive(Clone, Copy)]
pub enum ModelRef<'a> {
    Task(&'a TrainedTaskModel),
    Cascade(&'a CascadeModel),
}

impl<'a> From<&'a TrainedTaskModel> for ModelRef<'a> {
    fn from(m: &'a TrainedTaskModel) -> Self {
        ModelRef::Task(m)
    }
}

impl<'a> From<&'a CascadeModel> for ModelRef<'a> {
    fn from(m: &'a CascadeModel) -> Self {
        ModelRef::Cascade(m)
    }
}

impl<'a> From<&'a ModelArtifact> for ModelRef<'a> {
    fn from(m: &'a ModelArtifact) -> Self {
        match m {
            ModelArtifact::Task(t) => ModelRef::Task(t),
            ModelArtifact::Cascade(c) => ModelRef::Cascade(c),
        }
    }
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn container(meta: &[u8], payload: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(14 + meta.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
    out.extend_from_slice(meta);
    out.extend_from_slice(&(payload.len() as u32).to_le_bytes());
    out.extend_from_slice(payload);
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn task_model_bytes(model: &TrainedTaskModel) -> Vec<u8> {
    let meta = TaskMeta {
        kind: "task".to_string(),
        language: model.language(),
        task: model.task(),
        class_list: model.class_list().to_vec(),
        seed: model.seed(),
        config: model.train_config().clone(),
        feature_dim: model.feature_dim(),
        created_unix: now_unix(),
    };
    let meta_json = serde_json::to_vec(&meta).expect("metadata serializes");
    container(&meta_json, &model.booster().to_bytes())
}

fn cascade_bytes(model: &CascadeModel) -> Vec<u8> {
    let mut members: Vec<Vec<u8>> = vec![
        task_model_bytes(model.model_a()),
        task_model_bytes(model.model_b()),
    ];
    if let Some(c) = model.model_c() {
        members.push(task_model_bytes(c));
    }
    let meta = CascadeMeta {
        kind: "cascade".to_string(),
        language: model.language(),
        members: members.len(),
        created_unix: now_unix(),
    };
    let meta_json = serde_json::to_vec(&meta).expect("metadata serializes");
    let mut payload = Vec::new();
    payload.extend_from_slice(&(members.len() as u32).to_le_bytes());
    for m in &members {
        payload.extend_from_slice(&(m.len() as u32).to_le_bytes());
        payload.extend_from_slice(m);
    }
    container(&meta_json, &payload)
}

pub(crate) fn model_to_bytes(model: ModelRef<'_>) -> Vec<u8> {
    match model {
        ModelRef::Task(m) => task_model_bytes(m),
        ModelRef::Cascade(c) => cascade_bytes(c),
    }
}

/// Save a model file atomically (write then rename).
pub fn save_model<'a>(model: impl Into<ModelRef<'a>>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = model_to_bytes(model.into());
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(path, e))?;
        }
    }
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

/// Split a verified container into metadata and payload.
fn open_container<'a>(bytes: &'a [u8], path: &Path) -> Result<(&'a [u8], &'a [u8])> {
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected: "HMDL",
        });
    }
    let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
    if version != VERSION {
        return Err(Error::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
        });
    }
    let corrupt = || Error::ChecksumMismatch {
        path: path.to_path_buf(),
    };
    if bytes.len() < 14 {
        return Err(corrupt());
    }
    let body = &bytes[..bytes.len() - 4];
    let stored_crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
    if crc32fast::hash(body) != stored_crc {
        return Err(corrupt());
    }
    let meta_len = u32::from_le_bytes(body[6..10].try_into().unwrap()) as usize;
    if 10 + meta_len + 4 > body.len() {
        return Err(corrupt());
    }
    let meta = &body[10..10 + meta_len];
    let payload_len =
        u32::from_le_bytes(body[10 + meta_len..14 + meta_len].try_into().unwrap()) as usize;
    if 14 + meta_len + payload_len != body.len() {
        return Err(corrupt());
    }
    Ok((meta, &body[14 + meta_len..]))
}

#[derive(serde::Deserialize)]
struct KindProbe {
    kind: String,
}

fn task_model_from_bytes(bytes: &[u8], path: &Path) -> Result<TrainedTaskModel> {
    let (meta_json, payload) = open_container(bytes, path)?;
    let meta: TaskMeta = serde_json::from_slice(meta_json)
        .map_err(|e| Error::Data(format!("{}: malformed metadata: {e}", path.display())))?;
    if meta.kind != "task" {
        return Err(Error::Data(format!(
            "{}: embedded member is not a task model",
            path.display()
        )));
    }
    if meta.class_list.as_slice()
        != meta
            .task
            .train_classes()
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .as_slice()
    {
        return Err(Error::Data(format!(
            "{}: class list does not match task {}",
            path.display(),
            meta.task
        )));
    }
    let booster = Booster::from_bytes(payload)?;
    if booster.n_classes() != meta.class_list.len() || booster.feature_dim() != meta.feature_dim {
        return Err(Error::Data(format!(
            "{}: ensemble shape disagrees with metadata",
            path.display()
        )));
    }
    Ok(TrainedTaskModel::from_parts(
        meta.language,
        meta.task,
        meta.class_list,
        booster,
        meta.config,
        meta.feature_dim,
        meta.seed,
    ))
}

pub(crate) fn model_from_bytes(bytes: &[u8], path: &Path) -> Result<ModelArtifact> {
    let (meta_json, payload) = open_container(bytes, path)?;
    let probe: KindProbe = serde_json::from_slice(meta_json)
        .map_err(|e| Error::Data(format!("{}: malformed metadata: {e}", path.display())))?;
    match probe.kind.as_str() {
        "task" => Ok(ModelArtifact::Task(task_model_from_bytes(bytes, path)?)),
        "cascade" => {
            let meta: CascadeMeta = serde_json::from_slice(meta_json)
                .map_err(|e| Error::Data(format!("{}: malformed metadata: {e}", path.display())))?;
            let mut at = 0usize;
            let take = |at: &mut usize, n: usize| -> Result<&[u8]> {
                if *at + n > payload.len() {
                    return Err(Error::ChecksumMismatch {
                        path: path.to_path_buf(),
                    });
                }
                let s = &payload[*at..*at + n];
                *at += n;
                Ok(s)
            };
            let count = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
            if count != meta.members || !(2..=3).contains(&count) {
                return Err(Error::Data(format!(
                    "{}: cascade member count {} disagrees with metadata",
                    path.display(),
                    count
                )));
            }
            let mut members = Vec::with_capacity(count);
            for _ in 0..count {
                let len = u32::from_le_bytes(take(&mut at, 4)?.try_into().unwrap()) as usize;
                let bytes = take(&mut at, len)?;
                members.push(task_model_from_bytes(bytes, path)?);
            }
            if at != payload.len() {
                return Err(Error::Data(format!(
                    "{}: cascade payload has trailing bytes",
                    path.display()
                )));
            }
            let mut members = members.into_iter();
            let model_a = members.next().expect("count checked");
            let model_b = members.next().expect("count checked");
            let model_c = members.next();
            let cascade = CascadeModel::new(model_a, model_b, model_c)?;
            if cascade.language() != meta.language {
                return Err(Error::Data(format!(
                    "{}: cascade language disagrees with members",
                    path.display()
                )));
            }
            Ok(ModelArtifact::Cascade(cascade))
        }
        other => Err(Error::Data(format!(
            "{}: unknown model kind {other:?}",
            path.display()
        ))),
    }
}

/// Load and validate a model file written by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile {
            path: path.to_path_buf(),
        });
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes, path)
}
