//! Deterministic random-instance generation for the test suites.
#![allow(dead_code)]

use catfair_core::arith::Rational;
use catfair_core::model::{normalize, Category, Instance, NormalizedInstance};
use num_bigint::BigInt;
use rand::Rng;

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub agents: (usize, usize),
    pub items: (usize, usize),
    pub categories: (usize, usize),
    pub utility_range: (i64, i64),
    /// Chance (out of 100) that a category gets one unit of slack capacity,
    /// forcing dummy padding.
    pub slack_percent: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            agents: (2, 3),
            items: (1, 6),
            categories: (1, 2),
            utility_range: (-5, 5),
            slack_percent: 30,
        }
    }
}

/// A random valid instance: items split into nonempty categories, capacity
/// `ceil(|S_h|/n)` plus occasional slack so padding paths are exercised.
pub fn random_instance<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Instance {
    let n = rng.gen_range(cfg.agents.0..=cfg.agents.1);
    let m = rng.gen_range(cfg.items.0..=cfg.items.1);
    let k = rng
        .gen_range(cfg.categories.0..=cfg.categories.1)
        .min(m)
        .max(1);

    let utilities: Vec<Vec<i64>> = (0..n)
        .map(|_| {
            (0..m)
                .map(|_| rng.gen_range(cfg.utility_range.0..=cfg.utility_range.1))
                .collect()
        })
        .collect();

    // split 0..m into k contiguous nonempty chunks at random cut points
    let mut pool: Vec<usize> = (1..m).collect();
    for i in (1..pool.len()).rev() {
        let j = rng.gen_range(0..=i);
        pool.swap(i, j);
    }
    let mut cuts: Vec<usize> = pool.into_iter().take(k - 1).collect();
    cuts.sort_unstable();
    cuts.push(m);
    // Padded category size is n*s_h; keep slack from inflating the cycle
    // arrangement beyond desk scale (K_{3,9} alone has 612 hyperplanes).
    let padded_limit = match n {
        1 => 12,
        2 => 8,
        _ => 6,
    };
    let mut categories = Vec::with_capacity(k);
    let mut start = 0;
    for end in cuts {
        let size = end - start;
        let min_cap = size.div_ceil(n);
        let capacity =
            if rng.gen_range(0..100) < cfg.slack_percent && n * (min_cap + 1) <= padded_limit {
                min_cap + 1
            } else {
                min_cap
            };
        categories.push(Category {
            items: (start..end).collect(),
            capacity,
        });
        start = end;
    }
    Instance::new(utilities, categories).expect("generator output is valid")
}

pub fn random_normalized<R: Rng>(rng: &mut R, cfg: &GenConfig) -> NormalizedInstance {
    normalize(random_instance(rng, cfg))
}

/// A random exact simplex point with denominator at most `max_denominator`.
pub fn random_simplex_point<R: Rng>(rng: &mut R, n: usize, max_denominator: u64) -> Vec<Rational> {
    let den = rng.gen_range(1..=max_denominator);
    let mut parts = vec![0u64; n];
    let mut left = den;
    for part in parts.iter_mut().take(n - 1) {
        let v = rng.gen_range(0..=left);
        *part = v;
        left -= v;
    }
    parts[n - 1] = left;
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        parts.swap(i, j);
    }
    parts
        .into_iter()
        .map(|p| Rational::new(BigInt::from(p), BigInt::from(den)))
        .collect()
}

/// A random strictly interior simplex point.
pub fn random_interior_point<R: Rng>(rng: &mut R, n: usize, max_denominator: u64) -> Vec<Rational> {
    loop {
        let t = random_simplex_point(rng, n, max_denominator);
        if t.iter()
            .all(|x| x > &Rational::new(BigInt::from(0), BigInt::from(1)))
        {
            return t;
        }
    }
}

use catfair_cli::formats::InstanceFile;
use std::path::Path;

/// Serialize an instance to a JSON file in the external schema.
pub fn write_instance(inst: &Instance, path: &Path) {
    let file = InstanceFile::from_instance(inst);
    let mut text = serde_json::to_string_pretty(&file).unwrap();
    text.push('\n');
    std::fs::write(path, text).unwrap();
}
