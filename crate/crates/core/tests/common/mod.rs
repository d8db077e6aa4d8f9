//! Graph generators and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use bpnorm::cli::GraphFile;
use bpnorm::factor_graph::{graph_from_indices, FactorGraph};
use bpnorm::Model;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random factor tree on `n` variables: factors of arity 2 or 3 grow the
/// tree from an existing variable, plus occasional unary factors.
pub fn random_tree(rng: &mut ChaCha8Rng, q: usize, n: usize) -> FactorGraph {
    let mut factors: Vec<Vec<usize>> = Vec::new();
    let mut count = 1;
    while count < n {
        let anchor = rng.random_range(0..count);
        let fresh = if count + 2 <= n && rng.random_bool(0.3) { 2 } else { 1 };
        let mut f = vec![anchor];
        for _ in 0..fresh {
            f.push(count);
            count += 1;
        }
        f.shuffle(rng);
        factors.push(f);
    }
    for i in 0..n {
        if rng.random_bool(0.2) {
            factors.push(vec![i]);
        }
    }
    if factors.is_empty() {
        factors.push(vec![0]);
    }
    graph_from_indices(q, n, &factors).expect("generated tree is valid")
}

/// Random tree plus `extra` pairwise factors; exactly `extra` independent cycles.
pub fn random_loopy(rng: &mut ChaCha8Rng, q: usize, n: usize, extra: usize) -> FactorGraph {
    let tree = random_tree(rng, q, n);
    let mut factors: Vec<Vec<usize>> = tree.factors().iter().map(|f| f.members.clone()).collect();
    for _ in 0..extra {
        let u = rng.random_range(0..n);
        let v = (u + rng.random_range(1..n)) % n;
        factors.push(vec![u, v]);
    }
    graph_from_indices(q, n, &factors).expect("generated graph is valid")
}

/// Cycle through all `n >= 3` variables plus `chords` pairwise factors: no
/// leaves, `1 + chords` independent cycles.
pub fn random_core(rng: &mut ChaCha8Rng, q: usize, n: usize, chords: usize) -> FactorGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut factors: Vec<Vec<usize>> = (0..n).map(|k| vec![order[k], order[(k + 1) % n]]).collect();
    for _ in 0..chords {
        let u = rng.random_range(0..n);
        let v = (u + rng.random_range(1..n)) % n;
        factors.push(vec![u, v]);
    }
    graph_from_indices(q, n, &factors).expect("generated graph is valid")
}

pub fn square_with_chord(q: usize) -> FactorGraph {
    graph_from_indices(q, 4, &[vec![0, 1], vec![1, 2], vec![2, 3], vec![0, 3], vec![0, 2]]).unwrap()
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_model(name: &str) -> Model {
    let bytes = std::fs::read(fixture_path(name)).expect("fixture exists");
    let file: GraphFile = serde_json::from_slice(&bytes).expect("fixture parses");
    file.to_model().expect("fixture is a valid model")
}
