//! Layer pooling for transformer encoders.
//!
//! The sentence vector is the mean over token positions within each encoder
//! layer, then the mean of those per-layer vectors across the last N layers
//! (N = 11 of 12 by default). A CLS-token variant is available for backends
//! whose first position is a classification token.

use crate::error::{Error, Result};
use crate::preprocess::PreprocessedText;

use super::EmbeddingProvider;

/// How to reduce token positions inside one layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenPooling {
    /// Arithmetic mean over all token positions.
    Mean,
    /// First token position only.
    Cls,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoolingSpec {
    pub token: TokenPooling,
    /// How many trailing encoder layers to average.
    pub last_layers: usize,
}

impl Default for PoolingSpec {
    fn default() -> Self {
        PoolingSpec {
            token: TokenPooling::Mean,
            last_layers: 11,
        }
    }
}

/// Pool per-layer token embeddings (`layers[layer][token][component]`) into
/// one sentence vector.
pub fn pool_layers(layers: &[Vec<Vec<f32>>], spec: PoolingSpec) -> Result<Vec<f32>> {
    if spec.last_layers == 0 {
        return Err(Error::Config("pooling.last_layers must be positive".into()));
    }
    if layers.len() < spec.last_layers {
        return Err(Error::DimensionMismatch(format!(
            "pooling wants the last {} layers but the encoder returned {}",
            spec.last_layers,
            layers.len()
        )));
    }
    let selected = &layers[layers.len() - spec.last_layers..];
    let hidden = selected
        .first()
        .and_then(|l| l.first())
        .map(Vec::len)
        .ok_or_else(|| Error::DimensionMismatch("encoder returned no token positions".into()))?;

    let mut acc = vec![0f64; hidden];
    for layer in selected {
        if layer.is_empty() {
            return Err(Error::DimensionMismatch(
                "encoder layer has no token positions".into(),
            ));
        }
        let mut layer_acc = vec![0f64; hidden];
        let tokens: &[Vec<f32>] = match spec.token {
            TokenPooling::Mean => layer,
            TokenPooling::Cls => &layer[..1],
        };
        for token in tokens {
            if token.len() != hidden {
                return Err(Error::DimensionMismatch(format!(
                    "token embedding has {} components, expected {hidden}",
                    token.len()
                )));
            }
            for (a, &x) in layer_acc.iter_mut().zip(token) {
                *a += x as f64;
            }
        }
        let n = tokens.len() as f64;
        for (a, l) in acc.iter_mut().zip(&layer_acc) {
            *a += l / n;
        }
    }
    let n_layers = spec.last_layers as f64;
    Ok(acc.iter().map(|&x| (x / n_layers) as f32).collect())
}

/// Anything that can produce per-layer token embeddings for a text.
pub trait EncoderBackend: Send + Sync {
    /// `layers[layer][token][component]`, embedding layer excluded.
    fn encode_layers(&self, text: &str) -> Result<Vec<Vec<Vec<f32>>>>;
}

/// An [`EmbeddingProvider`] that pools an [`EncoderBackend`]'s layers.
pub struct PooledTransformerProvider {
    backend: Box<dyn EncoderBackend>,
    spec: PoolingSpec,
    provider_id: String,
    output_dim: usize,
}

impl PooledTransformerProvider {
    pub fn new(
        backend: Box<dyn EncoderBackend>,
        spec: PoolingSpec,
        provider_id: impl Into<String>,
        output_dim: usize,
    ) -> Self {
        PooledTransformerProvider {
            backend,
            spec,
            provider_id: provider_id.into(),
            output_dim,
        }
    }
}

impl EmbeddingProvider for PooledTransformerProvider {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn output_dim(&self) -> usize {
        self.output_dim
    }

    fn embed(&self, text: &PreprocessedText) -> Result<Vec<f32>> {
        let layers = self.backend.encode_layers(&text.text)?;
        let pooled = pool_layers(&layers, self.spec)?;
        if pooled.len() != self.output_dim {
            return Err(Error::Provider {
                provider_id: self.provider_id.clone(),
                detail: format!(
                    "backend hidden size {} does not match configured output_dim {}",
                    pooled.len(),
                    self.output_dim
                ),
            });
        }
        Ok(pooled)
    }
}
