//! Sentence-embedding providers and the concatenated 1792-d feature vector.
//!
//! Two providers feed the classifier: a multilingual masked-LM encoder
//! pooled to 768 dimensions and a language-agnostic encoder producing 1024.
//! Their outputs are concatenated, transformer part first. Providers are
//! frozen: equal `(provider_id, text)` always yields the same vector, which
//! is what makes the on-disk feature cache sound.

mod cache;
mod external;
mod pooling;
mod test_provider;

pub use cache::FeatureCache;
pub use external::{ExternalBackend, ExternalProvider};
pub use pooling::{pool_layers, EncoderBackend, PooledTransformerProvider, PoolingSpec, TokenPooling};
pub use test_provider::HashEmbedder;

use crate::error::{Error, Result};
use crate::preprocess::PreprocessedText;

/// Output width of the transformer provider.
pub const TRANSFORMER_DIM: usize = 768;
/// Output width of the language-agnostic provider.
pub const LASER_DIM: usize = 1024;
/// Width of the concatenated feature vector.
pub const FEATURE_DIM: usize = TRANSFORMER_DIM + LASER_DIM;

/// A frozen sentence-embedding backend.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identifier, including model name/version. Part of the cache key.
    fn provider_id(&self) -> &str;

    /// Exact length of every vector this provider returns.
    fn output_dim(&self) -> usize;

    fn embed(&self, text: &PreprocessedText) -> Result<Vec<f32>>;
}

/// Run a provider and enforce its contract: exact dimension, finite entries.
pub fn checked_embed(provider: &dyn EmbeddingProvider, text: &PreprocessedText) -> Result<Vec<f32>> {
    let v = provider.embed(text)?;
    if v.len() != provider.output_dim() {
        return Err(Error::Provider {
            provider_id: provider.provider_id().to_string(),
            detail: format!(
                "returned {} components, contract says {}",
                v.len(),
                provider.output_dim()
            ),
        });
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::Provider {
            provider_id: provider.provider_id().to_string(),
            detail: format!("returned a non-finite component {bad}"),
        });
    }
    Ok(v)
}

/// The concatenated feature vector: 768 transformer components followed by
/// 1024 language-agnostic components, 1792 in total.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    combined: Vec<f32>,
}

impl FeatureVector {
    pub fn new(transformer_part: Vec<f32>, laser_part: Vec<f32>) -> Result<Self> {
        if transformer_part.len() != TRANSFORMER_DIM || laser_part.len() != LASER_DIM {
            return Err(Error::DimensionMismatch(format!(
                "feature parts must be {TRANSFORMER_DIM}+{LASER_DIM}, got {}+{}",
                transformer_part.len(),
                laser_part.len()
            )));
        }
        let mut combined = transformer_part;
        combined.extend_from_slice(&laser_part);
        if let Some(bad) = combined.iter().find(|x| !x.is_finite()) {
            return Err(Error::DimensionMismatch(format!(
                "feature vector contains a non-finite component {bad}"
            )));
        }
        Ok(FeatureVector { combined })
    }

    pub fn transformer_part(&self) -> &[f32] {
        &self.combined[..TRANSFORMER_DIM]
    }

    pub fn laser_part(&self) -> &[f32] {
        &self.combined[TRANSFORMER_DIM..]
    }

    pub fn combined(&self) -> &[f32] {
        &self.combined
    }

    /// Always [`FEATURE_DIM`]; kept for call-site readability.
    pub fn len(&self) -> usize {
        self.combined.len()
    }
}

fn check_provider_dims(
    transformer: &dyn EmbeddingProvider,
    laser: &dyn EmbeddingProvider,
) -> Result<()> {
    if transformer.output_dim() != TRANSFORMER_DIM || laser.output_dim() != LASER_DIM {
        return Err(Error::Config(format!(
            "provider dimensions must be {TRANSFORMER_DIM} and {LASER_DIM}, configured {} and {}",
            transformer.output_dim(),
            laser.output_dim()
        )));
    }
    Ok(())
}

/// Embed with both providers and concatenate, transformer part first.
pub fn embed_concat(
    text: &PreprocessedText,
    transformer: &dyn EmbeddingProvider,
    laser: &dyn EmbeddingProvider,
) -> Result<FeatureVector> {
    check_provider_dims(transformer, laser)?;
    FeatureVector::new(checked_embed(transformer, text)?, checked_embed(laser, text)?)
}

/// [`embed_concat`] with both provider calls routed through the feature cache.
pub fn embed_concat_cached(
    text: &PreprocessedText,
    transformer: &dyn EmbeddingProvider,
    laser: &dyn EmbeddingProvider,
    cache: &FeatureCache,
) -> Result<FeatureVector> {
    check_provider_dims(transformer, laser)?;
    FeatureVector::new(
        cache.get_or_compute(transformer, text)?,
        cache.get_or_compute(laser, text)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Language;
    use crate::preprocess::normalize;

    #[test]
    fn concat_puts_transformer_part_first() {
        let fv = FeatureVector::new(vec![0.0; TRANSFORMER_DIM], vec![1.0; LASER_DIM]).unwrap();
        assert_eq!(fv.len(), FEATURE_DIM);
        assert!(fv.combined()[..TRANSFORMER_DIM].iter().all(|&x| x == 0.0));
        assert!(fv.combined()[TRANSFORMER_DIM..].iter().all(|&x| x == 1.0));
    }

    #[test]
    fn wrong_part_lengths_are_rejected() {
        let err = FeatureVector::new(vec![0.0; 512], vec![0.0; LASER_DIM]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn non_finite_components_are_rejected() {
        let mut part = vec![0.0f32; TRANSFORMER_DIM];
        part[7] = f32::NAN;
        assert!(FeatureVector::new(part, vec![0.0; LASER_DIM]).is_err());
    }

    #[test]
    fn embed_concat_rejects_misconfigured_provider_dims() {
        let t = HashEmbedder::new(512, 7);
        let l = HashEmbedder::new(LASER_DIM, 8);
        let text = normalize("hello", Language::En);
        let err = embed_concat(&text, &t, &l).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn embed_concat_produces_full_width_vectors() {
        let t = HashEmbedder::new(TRANSFORMER_DIM, 7);
        let l = HashEmbedder::new(LASER_DIM, 8);
        let text = normalize("hello world", Language::En);
        let fv = embed_concat(&text, &t, &l).unwrap();
        assert_eq!(fv.len(), FEATURE_DIM);
        assert_eq!(fv.transformer_part(), checked_embed(&t, &text).unwrap().as_slice());
        assert_eq!(fv.laser_part(), checked_embed(&l, &text).unwrap().as_slice());
    }

    #[test]
    fn texts_equal_after_normalization_embed_identically() {
        let t = HashEmbedder::new(TRANSFORMER_DIM, 7);
        let a = normalize("Check THIS https://t.co/abc out", Language::En);
        let b = normalize("check this https://other.example/url out", Language::En);
        assert_eq!(a.text, b.text);
        assert_eq!(t.embed(&a).unwrap(), t.embed(&b).unwrap());
    }
}
