//! Reference computations written from the definitions, sharing no code with
//! the library beyond the vertex encoding (bit `i - 1` is coordinate `i`).
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn mass(p: &[f64], bits: u64) -> f64 {
    p.iter()
        .enumerate()
        .map(|(j, &q)| if bits >> j & 1 == 1 { q } else { 1.0 - q })
        .product()
}

/// All edges as `(lower endpoint, upper endpoint, dimension)`, dimension
/// 1-based, together with their `D_E` mass.
pub fn edge_law(p: &[f64]) -> Vec<(u64, u64, usize, f64)> {
    let d = p.len();
    let mut out = Vec::new();
    for i in 1..=d {
        for x in 0..1u64 << d {
            if x >> (i - 1) & 1 == 0 {
                let y = x | 1 << (i - 1);
                out.push((x, y, i, (mass(p, x) + mass(p, y)) / d as f64));
            }
        }
    }
    out
}

pub fn gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

pub fn hamming(x: u64, y: u64) -> u32 {
    (x ^ y).count_ones()
}

/// Least mass of a vertex set whose complement is `c`-Lipschitz pairwise,
/// by trying every subset.
pub fn naive_distance(values: &[f64], p: &[f64], c: f64) -> f64 {
    let n = values.len();
    let mut best = f64::INFINITY;
    for removed in 0..1u64 << n {
        let kept: Vec<usize> = (0..n).filter(|&v| removed >> v & 1 == 0).collect();
        let ok = kept.iter().all(|&x| {
            kept.iter()
                .all(|&y| gap(values[x], values[y]) <= c * hamming(x as u64, y as u64) as f64 + 1e-9)
        });
        if ok {
            let m: f64 = (0..n)
                .filter(|&v| removed >> v & 1 == 1)
                .map(|v| mass(p, v as u64))
                .sum();
            best = best.min(m);
        }
    }
    best
}

pub fn random_p<R: Rng>(d: usize, rng: &mut R) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(0.05..0.95)).collect()
}

pub fn random_grid_values<R: Rng>(d: usize, delta: f64, top: i64, rng: &mut R) -> Vec<f64> {
    (0..1usize << d)
        .map(|_| rng.random_range(0..=top) as f64 * delta)
        .collect()
}

/// `min_k (c_k + d_H(x, a_k))` with grid offsets: 1-Lipschitz by construction.
pub fn lipschitz_by_cones<R: Rng>(d: usize, delta: f64, rng: &mut R) -> Vec<f64> {
    let cones: Vec<(u64, f64)> = (0..rng.random_range(1..=4))
        .map(|_| {
            let apex = rng.random_range(0..1u64 << d);
            let offset = rng.random_range(0..=(d as f64 / delta) as i64) as f64 * delta;
            (apex, offset)
        })
        .collect();
    (0..1u64 << d)
        .map(|x| {
            cones
                .iter()
                .map(|&(a, c)| c + hamming(x, a) as f64)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Largest `|ln P(x, o) - ln P(y, o)|` over neighbours and outputs; pairs
/// where both vanish are skipped.
pub fn naive_max_log_ratio(rows: &[Vec<f64>], d: usize) -> f64 {
    let mut best: f64 = 0.0;
    for x in 0..1usize << d {
        for i in 0..d {
            let y = x ^ (1 << i);
            for o in 0..rows[x].len() {
                let (a, b) = (rows[x][o], rows[y][o]);
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                let lr = if a == 0.0 || b == 0.0 {
                    f64::INFINITY
                } else {
                    (a.ln() - b.ln()).abs()
                };
                best = best.max(lr);
            }
        }
    }
    best
}
