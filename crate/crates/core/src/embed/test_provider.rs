//! Deterministic stand-in provider so the whole pipeline runs and tests
//! without any model weights.

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::preprocess::PreprocessedText;

use super::EmbeddingProvider;

/// Hash-derived pseudo-random embedder.
///
/// The vector for a text is a sparse sign pattern: `k` positions (the
/// largest power of four not exceeding `dim`) carry `±2^-m` with `k = 4^m`,
/// everything else is zero. `k · (2^-m)² = 1`, and every partial sum of the
/// squared components is exactly representable, so the vector has unit norm
/// *exactly*, not just within rounding. Positions and signs come from a
/// SHA-256 stream over `(dim, seed, text)`, so equal texts map to equal
/// vectors and distinct texts collide only with negligible probability.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    seed: u64,
    provider_id: String,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        assert!(dim > 0, "embedding dimension must be positive");
        HashEmbedder {
            dim,
            seed,
            provider_id: format!("test-hash-v1:dim{dim}:seed{seed}"),
        }
    }

    /// Same embedder under a caller-chosen provider id.
    pub fn with_provider_id(dim: usize, seed: u64, provider_id: impl Into<String>) -> Self {
        HashEmbedder {
            dim,
            seed,
            provider_id: provider_id.into(),
        }
    }

    /// Number of non-zero components: the largest power of four ≤ dim.
    fn active_count(dim: usize) -> (usize, i32) {
        let mut count = 1usize;
        let mut exponent = 0i32;
        while count * 4 <= dim {
            count *= 4;
            exponent += 1;
        }
        (count, exponent)
    }
}

/// Counter-mode SHA-256 byte stream.
struct HashStream {
    base: [u8; 32],
    counter: u32,
    buf: [u8; 32],
    pos: usize,
}

impl HashStream {
    fn new(base: [u8; 32]) -> Self {
        HashStream {
            base,
            counter: 0,
            buf: [0; 32],
            pos: 32,
        }
    }

    fn next_u32(&mut self) -> u32 {
        if self.pos + 4 > 32 {
            let mut hasher = Sha256::new();
            hasher.update(self.base);
            hasher.update(self.counter.to_le_bytes());
            self.buf = hasher.finalize().into();
            self.counter += 1;
            self.pos = 0;
        }
        let v = u32::from_le_bytes(self.buf[self.pos..self.pos + 4].try_into().unwrap());
        self.pos += 4;
        v
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &PreprocessedText) -> Result<Vec<f32>> {
        let mut hasher = Sha256::new();
        hasher.update(b"offlang-test-embedder-v1");
        hasher.update((self.dim as u32).to_le_bytes());
        hasher.update(self.seed.to_le_bytes());
        hasher.update(text.text.as_bytes());
        let mut stream = HashStream::new(hasher.finalize().into());

        let (count, exponent) = Self::active_count(self.dim);
        let magnitude = (2f32).powi(-exponent);

        // Partial Fisher-Yates: the first `count` slots end up holding a
        // pseudo-random `count`-subset of 0..dim.
        let mut slots: Vec<u32> = (0..self.dim as u32).collect();
        let mut vector = vec![0f32; self.dim];
        for i in 0..count {
            let j = i + (stream.next_u32() as usize) % (self.dim - i);
            slots.swap(i, j);
            let sign = if stream.next_u32() & 1 == 0 { 1f32 } else { -1f32 };
            vector[slots[i] as usize] = sign * magnitude;
        }
        Ok(vector)
    }
}
