//! Seeded random instances for property suites, examples and the
//! `random-lipschitz` builtin.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::distribution::ProductDistribution;
use crate::error::Result;
use crate::function::{check_delta, DenseFunction};
use crate::hypercube::{self, Vertex};
use crate::mechanism::TableMechanism;
use crate::oracle;

/// At most this many vertices are drawn explicitly; the rest come from the
/// McShane extension of the drawn ones.
const LIPSCHITZ_ANCHORS: usize = 64;

/// Product distribution with every `p_i` uniform in `[lo, hi]`.
pub fn random_distribution<R: Rng + ?Sized>(
    d: usize,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<ProductDistribution> {
    ProductDistribution::new((0..d).map(|_| rng.random_range(lo..=hi)).collect())
}

fn random_grid_between<R: Rng + ?Sized>(lo: f64, hi: f64, delta: f64, rng: &mut R) -> f64 {
    let a = (lo / delta - 1e-9).ceil() as i64;
    let b = (hi / delta + 1e-9).floor() as i64;
    rng.random_range(a..=b.max(a)) as f64 * delta
}

/// A `delta * Z`-valued 1-Lipschitz function. Anchors are visited in random
/// order, each taking a random grid value consistent with those already set;
/// the McShane extension fills the remaining vertices.
pub fn random_lipschitz<R: Rng + ?Sized>(d: usize, delta: f64, rng: &mut R) -> Result<DenseFunction> {
    check_delta(delta)?;
    hypercube::check_exhaustive(d, "random Lipschitz function")?;
    let mut order: Vec<Vertex> = hypercube::vertices(d)?.collect();
    order.shuffle(rng);
    order.truncate(LIPSCHITZ_ANCHORS);

    let mut anchors: BTreeMap<Vertex, f64> = BTreeMap::new();
    for x in order {
        let (mut lo, mut hi) = (0.0f64, d as f64);
        if !anchors.is_empty() {
            lo = f64::NEG_INFINITY;
            hi = f64::INFINITY;
            for (&y, &v) in &anchors {
                let dist = hypercube::hamming_distance(x, y)? as f64;
                lo = lo.max(v - dist);
                hi = hi.min(v + dist);
            }
        }
        anchors.insert(x, random_grid_between(lo, hi, delta, rng));
    }
    let ext = oracle::mcshane_extend(&anchors, d)?;
    DenseFunction::on_grid(d, ext.into_values(), delta)
}

/// A `delta * Z`-valued function with independent values in `[0, scale]`.
pub fn random_grid_function<R: Rng + ?Sized>(
    d: usize,
    delta: f64,
    scale: f64,
    rng: &mut R,
) -> Result<DenseFunction> {
    check_delta(delta)?;
    let steps = (scale / delta).round() as i64;
    let values = (0..1usize << d)
        .map(|_| rng.random_range(0..=steps) as f64 * delta)
        .collect();
    DenseFunction::on_grid(d, values, delta)
}

/// A random output table on `{0,1}^d` with `outputs` outputs. With
/// probability 1/2 the rows are multiplicative perturbations of one base row
/// by factors in `[e^{-spread}, e^{spread}]` before normalization; otherwise
/// each row is independent. Some entries may be zeroed.
pub fn random_mechanism<R: Rng + ?Sized>(
    d: usize,
    outputs: usize,
    spread: f64,
    rng: &mut R,
) -> Result<TableMechanism> {
    let labels = (0..outputs).map(|o| format!("o{o}")).collect();
    let base: Vec<f64> = (0..outputs).map(|_| rng.random_range(0.05..1.0)).collect();
    let correlated = rng.random_bool(0.5);
    let zero_prob = if rng.random_bool(0.2) { 0.1 } else { 0.0 };
    let rows = (0..1usize << d)
        .map(|_| {
            let mut row: Vec<f64> = (0..outputs)
                .map(|o| {
                    if correlated {
                        base[o] * rng.random_range(-spread..=spread).exp()
                    } else {
                        rng.random_range(0.0..1.0)
                    }
                })
                .collect();
            for v in row.iter_mut() {
                if rng.random_bool(zero_prob) {
                    *v = 0.0;
                }
            }
            if row.iter().all(|&v| v == 0.0) {
                row[0] = 1.0;
            }
            let total: f64 = row.iter().sum();
            row.iter().map(|v| v / total).collect()
        })
        .collect();
    TableMechanism::new(d, labels, rows)
}
