//! Embedding backends reached over a local channel: a child process speaking
//! line-delimited JSON on stdin/stdout.
//!
//! Request:  `{"text": "..."}`
//! Response: `{"vector": [..]}` for providers that emit a sentence vector
//! directly, `{"layers": [[[..]]]}` for transformer runners that hand back
//! per-layer token embeddings for local pooling, or `{"error": "..."}`.
//!
//! The process is spawned on first use and kept alive for the run, one
//! request per line; truncation limits and model paths are the runner's own
//! configuration.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::preprocess::PreprocessedText;

use super::pooling::EncoderBackend;
use super::EmbeddingProvider;

#[derive(serde::Serialize)]
struct Request<'a> {
    text: &'a str,
}

#[derive(serde::Deserialize)]
struct Response {
    #[serde(default)]
    vector: Option<Vec<f32>>,
    #[serde(default)]
    layers: Option<Vec<Vec<Vec<f32>>>>,
    #[serde(default)]
    error: Option<String>,
}

struct Runner {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

/// A lazily spawned JSONL child process.
pub struct ExternalBackend {
    command: Vec<String>,
    id: String,
    runner: Mutex<Option<Runner>>,
}

impl ExternalBackend {
    pub fn new(command: Vec<String>, id: impl Into<String>) -> Self {
        ExternalBackend {
            command,
            id: id.into(),
            runner: Mutex::new(None),
        }
    }

    fn unavailable(&self, detail: impl std::fmt::Display) -> Error {
        Error::Provider {
            provider_id: self.id.clone(),
            detail: format!("backend unavailable: {detail}"),
        }
    }

    fn spawn(&self) -> Result<Runner> {
        let program = self
            .command
            .first()
            .ok_or_else(|| Error::Config(format!("provider {:?}: empty backend command", self.id)))?;
        let mut child = Command::new(program)
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| self.unavailable(format_args!("cannot spawn {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Runner {
            child,
            stdin,
            stdout,
        })
    }

    fn request(&self, text: &str) -> Result<Response> {
        let mut guard = self.runner.lock().unwrap();
        if guard.is_none() {
            *guard = Some(self.spawn()?);
        }
        let result = (|| {
            let runner = guard.as_mut().unwrap();
            let mut line = serde_json::to_string(&Request { text })
                .map_err(|e| self.unavailable(format_args!("request encoding failed: {e}")))?;
            line.push('\n');
            runner
                .stdin
                .write_all(line.as_bytes())
                .and_then(|_| runner.stdin.flush())
                .map_err(|e| self.unavailable(format_args!("write failed: {e}")))?;
            let mut reply = String::new();
            let n = runner
                .stdout
                .read_line(&mut reply)
                .map_err(|e| self.unavailable(format_args!("read failed: {e}")))?;
            if n == 0 {
                return Err(self.unavailable("backend closed the channel"));
            }
            serde_json::from_str::<Response>(&reply)
                .map_err(|e| self.unavailable(format_args!("malformed reply: {e}")))
        })();
        if result.is_err() {
            // Drop the broken runner; the next call respawns.
            if let Some(mut r) = guard.take() {
                let _ = r.child.kill();
                let _ = r.child.wait();
            }
        }
        let response = result?;
        if let Some(message) = response.error {
            return Err(Error::Provider {
                provider_id: self.id.clone(),
                detail: message,
            });
        }
        Ok(response)
    }
}

impl Drop for ExternalBackend {
    fn drop(&mut self) {
        if let Some(mut r) = self.runner.lock().unwrap().take() {
            let _ = r.child.kill();
            let _ = r.child.wait();
        }
    }
}

impl EncoderBackend for ExternalBackend {
    fn encode_layers(&self, text: &str) -> Result<Vec<Vec<Vec<f32>>>> {
        self.request(text)?.layers.ok_or_else(|| Error::Provider {
            provider_id: self.id.clone(),
            detail: "reply carries no \"layers\" field".to_string(),
        })
    }
}

/// An [`EmbeddingProvider`] whose backend replies with finished vectors.
pub struct ExternalProvider {
    backend: ExternalBackend,
    provider_id: String,
    output_dim: usize,
}

impl ExternalProvider {
    pub fn new(command: Vec<String>, provider_id: impl Into<String>, output_dim: usize) -> Self {
        let provider_id = provider_id.into();
        ExternalProvider {
            backend: ExternalBackend::new(command, provider_id.clone()),
            provider_id,
            output_dim,
        }
    }
}

impl EmbeddingProvider for ExternalProvider {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn embed(&self, text: &PreprocessedText) -> Result<Vec<f32>> {
        self.backend
            .request(&text.text)?
            .vector
            .ok_or_else(|| Error::Provider {
                provider_id: self.provider_id.clone(),
                detail: "reply carries no \"vector\" field".to_string(),
            })
    }
}
