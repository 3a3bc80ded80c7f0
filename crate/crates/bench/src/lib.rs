//! Inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use odcl_core::{pipeline, KnowledgeIndex};

/// `k` well-separated blobs of `per_blob` points in `dim` dimensions.
pub fn blobs(k: usize, per_blob: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .flat_map(|b| (0..per_blob).map(move |_| b))
        .map(|b| {
            let mut p: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            p[b % dim] += 10.0;
            p
        })
        .collect()
}

/// Runs the bundled demo in a temporary directory and loads its index.
pub fn demo_index() -> (tempfile::TempDir, KnowledgeIndex) {
    let dir = tempfile::tempdir().expect("temp dir");
    let (cfg, _) = pipeline::demo(dir.path()).expect("demo pipeline");
    let index = pipeline::load_index(&cfg.paths).expect("demo index");
    (dir, index)
}
