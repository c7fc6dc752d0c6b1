//! Shared helpers for the integration suites: independent oracles, random
//! instance generators, and the pass/fail line printer.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use circlaw_lab::graph::BipartiteDigraph;

/// Independent from-scratch layer classifier: every round recomputes the
/// covered in-neighborhood with plain set operations, no incremental state.
pub fn oracle_classify(g: &BipartiteDigraph, k: f64) -> Vec<Vec<usize>> {
    let m = g.n_right();
    let mut layers: Vec<Vec<usize>> = Vec::new();
    let mut assigned: BTreeSet<usize> = BTreeSet::new();
    loop {
        let mut covered: BTreeSet<usize> = BTreeSet::new();
        for &j in &assigned {
            for &i in g.in_of_right(j) {
                covered.insert(i);
            }
        }
        let mut round = Vec::new();
        for j in 0..m {
            if assigned.contains(&j) {
                continue;
            }
            let residual = g.out_of_right(j).iter().filter(|i| !covered.contains(i)).count();
            if residual as f64 <= k {
                round.push(j);
            }
        }
        if round.is_empty() {
            return layers;
        }
        for &j in &round {
            assigned.insert(j);
        }
        layers.push(round);
    }
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn ci(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Random complex matrix with entries in `{0, small, large}`; `with_diag`
/// plants a large diagonal so the graph has all horizontal edges.
pub fn random_pattern_matrix(
    rows: usize,
    cols: usize,
    density: f64,
    large_prob: f64,
    with_diag: bool,
    rng: &mut impl Rng,
) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            if with_diag && i == j {
                m[(i, j)] = c(1.0);
            } else if rng.random::<f64>() < density {
                m[(i, j)] = if rng.random::<f64>() < large_prob { c(1.0) } else { c(0.3) };
            }
        }
    }
    m
}

/// Dense complex Gaussian matrix.
pub fn random_gaussian_complex(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    use rand_distr::{Distribution, StandardNormal};
    DMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-ish matrix with orthonormal rows (QR of a Ginibre draw, transposed).
pub fn random_orthonormal_rows(k: usize, n: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let g = random_gaussian_complex(n, k, rng);
    g.qr().q().transpose()
}

/// Maximal witness-closure shell over an empty excluded set. `None` when an
/// obligation has no candidate witness.
pub fn closure_shell_layers(
    g: &BipartiteDigraph,
    m_set: &[usize],
    center: &[usize],
    depth: usize,
) -> Option<Vec<Vec<usize>>> {
    let m_sorted: Vec<usize> = {
        let mut v = m_set.to_vec();
        v.sort_unstable();
        v
    };
    let mut layers = vec![center.to_vec()];
    for _ in 0..depth {
        let current = layers.last().unwrap();
        let mut next = Vec::new();
        for &j in current {
            for &i in g.out_of_right(j) {
                if m_sorted.binary_search(&i).is_ok() {
                    continue;
                }
                let mut found = false;
                for &h in g.out_of_left(i) {
                    if h != j {
                        next.push(h);
                        found = true;
                    }
                }
                if !found {
                    return None;
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        layers.push(next);
    }
    Some(layers)
}

/// Harness for one acceptance criterion: runs the body, prints the
/// pass/fail line, and panics on failure so `cargo test` reports it.
pub fn criterion(number: usize, name: &str, body: impl FnOnce() -> Result<String, String>) {
    let start = Instant::now();
    match body() {
        Ok(detail) => {
            println!(
                "PASS criterion {number:2} {name}: {detail} [{:.2}s]",
                start.elapsed().as_secs_f64()
            );
        }
        Err(msg) => {
            println!(
                "FAIL criterion {number:2} {name}: {msg} [{:.2}s]",
                start.elapsed().as_secs_f64()
            );
            panic!("criterion {number} ({name}) failed: {msg}");
        }
    }
}
