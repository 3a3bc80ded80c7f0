//! Term embeddings.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EmbedError {
    #[error("provider {provider} returned {got} dims for {term:?}, expected {expected}")]
    DimMismatch {
        provider: String,
        term: String,
        expected: usize,
        got: usize,
    },
}

/// Maps a canonical term to a fixed-size vector.
pub trait EmbeddingProvider: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn embed(&self, term: &str) -> Vec<f64>;
}

pub const DEFAULT_DIM: usize = 384;

/// Character n-gram feature hashing, L2-normalised.
///
/// The term is padded with a space on each side so word boundaries
/// contribute their own n-grams. Each n-gram is hashed with 64-bit FNV-1a;
/// the low bits pick the bucket and the top bit picks the sign.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    dim: usize,
    n: usize,
}

impl Default for HashEmbedder {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM, n: 3 }
    }
}

impl HashEmbedder {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!(dim > 0 && n > 0, "dim and n must be positive");
        Self { dim, n }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl EmbeddingProvider for HashEmbedder {
    fn name(&self) -> &str {
        "char-ngram-hash"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, term: &str) -> Vec<f64> {
        let padded: Vec<char> = format!(" {} ", term.trim()).chars().collect();
        let mut v = vec![0.0f64; self.dim];
        let mut buf = String::new();
        for gram in padded.windows(self.n.min(padded.len())) {
            buf.clear();
            buf.extend(gram);
            let h = fnv1a(buf.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
            v[bucket] += sign;
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }
}

/// One row per term, in input order.
pub fn embed_terms(
    terms: &[String],
    provider: &dyn EmbeddingProvider,
) -> Result<Vec<Vec<f64>>, EmbedError> {
    terms
        .iter()
        .map(|t| {
            let row = provider.embed(t);
            if row.len() != provider.dim() {
                return Err(EmbedError::DimMismatch {
                    provider: provider.name().to_string(),
                    term: t.clone(),
                    expected: provider.dim(),
                    got: row.len(),
                });
            }
            Ok(row)
        })
        .collect()
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
