//! Exact ground truth for small dimensions.
//!
//! The distance of `f` to the `c`-Lipschitz functions is the least Π-mass of
//! a vertex set `W` such that `f` restricted to the complement of `W` is
//! `c`-Lipschitz for every pair, not just every edge. Any such restriction
//! extends to the whole cube (McShane), and conversely the agreement set of
//! `f` with any Lipschitz `g` is such a complement. So the distance is a
//! minimum-weight vertex cover of the graph of violated pairs.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distribution::ProductDistribution;
use crate::error::{Error, Result};
use crate::function::{value_gap, DenseFunction};
use crate::hypercube::{self, Vertex};
use crate::repair;
use crate::tester::VIOLATION_GUARD;

/// Largest dimension for which the distance oracle runs.
pub const MAX_DISTANCE_DIM: usize = 12;

/// Up to this dimension the distance oracle enumerates all subsets.
pub const ENUMERATION_DIM: usize = 4;

/// Every edge has gap at most `c` (up to the shared violation guard). On the
/// hypercube this is equivalent to the pairwise condition by path composition.
pub fn is_lipschitz_exhaustive(f: &DenseFunction, c: f64) -> Result<bool> {
    hypercube::check_exhaustive(f.dim(), "exhaustive Lipschitz check")?;
    Ok(hypercube::edges(f.dim())?.all(|e| f.edge_gap(e) <= c + VIOLATION_GUARD))
}

/// `max f - min f` over the table; 0 for a constant (or all `-inf`) table and
/// `+inf` when `-inf` meets a finite value.
pub fn image_diameter_exact(f: &DenseFunction) -> f64 {
    let vals = f.values();
    let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    value_gap(max, min)
}

/// McShane extension `g(x) = min_{y in S} (f(y) + d_H(x, y))`.
pub fn mcshane_extend(partial: &BTreeMap<Vertex, f64>, d: usize) -> Result<DenseFunction> {
    mcshane_extend_with(partial, d, 1.0)
}

/// McShane extension with Lipschitz constant `c`.
pub fn mcshane_extend_with(
    partial: &BTreeMap<Vertex, f64>,
    d: usize,
    c: f64,
) -> Result<DenseFunction> {
    hypercube::check_exhaustive(d, "McShane extension")?;
    if partial.is_empty() {
        return Err(Error::PartialNotLipschitz("empty support".into()));
    }
    let support: Vec<(Vertex, f64)> = partial.iter().map(|(&x, &v)| (x, v)).collect();
    for &(x, _) in &support {
        if x.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: x.dim(),
            });
        }
    }
    for (k, &(x, a)) in support.iter().enumerate() {
        for &(y, b) in &support[k + 1..] {
            let dist = hypercube::hamming_distance(x, y)? as f64;
            if value_gap(a, b) > c * dist + VIOLATION_GUARD {
                return Err(Error::PartialNotLipschitz(format!(
                    "|f({x}) - f({y})| = {} > {c} * {dist}",
                    value_gap(a, b)
                )));
            }
        }
    }
    DenseFunction::from_fn(d, |x| {
        support
            .iter()
            .map(|&(y, v)| v + c * ((x.bits() ^ y.bits()).count_ones() as f64))
            .fold(f64::INFINITY, f64::min)
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceCertificate {
    pub distance: f64,
    pub witness_set: Vec<Vertex>,
    #[serde(serialize_with = "serialize_table")]
    pub lipschitz_completion: DenseFunction,
}

fn serialize_table<S: serde::Serializer>(
    f: &DenseFunction,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    crate::ext_real::vec::serialize(f.values(), s)
}

impl DistanceCertificate {
    /// Confirms the certificate against `f`: the completion is Lipschitz,
    /// agrees with `f` off the witness set, and the distance equals the mass
    /// of the witness set.
    pub fn verify(&self, f: &DenseFunction, dist: &ProductDistribution, c: f64) -> Result<bool> {
        let mass: f64 = self
            .witness_set
            .iter()
            .map(|&x| dist.vertex_mass(x))
            .sum::<Result<f64>>()?;
        let removed: std::collections::HashSet<Vertex> = self.witness_set.iter().copied().collect();
        let agrees = hypercube::vertices(f.dim())?.all(|x| {
            removed.contains(&x) || value_gap(f.get(x), self.lipschitz_completion.get(x)) == 0.0
        });
        Ok((mass - self.distance).abs() < 1e-12
            && agrees
            && is_lipschitz_exhaustive(&self.lipschitz_completion, c)?)
    }
}

/// Violated pairs as adjacency lists over vertex indices.
fn conflict_graph(f: &DenseFunction, c: f64) -> Vec<Vec<u32>> {
    let n = f.values().len();
    let vals = f.values();
    let mut adj = vec![Vec::new(); n];
    for u in 0..n {
        for w in u + 1..n {
            let dh = (u ^ w).count_ones() as f64;
            if value_gap(vals[u], vals[w]) > c * dh + VIOLATION_GUARD {
                adj[u].push(w as u32);
                adj[w].push(u as u32);
            }
        }
    }
    adj
}

/// Minimum-mass cover by enumerating every subset, for `n <= 16` vertices.
fn cover_by_enumeration(adj: &[Vec<u32>], mass: &[f64]) -> Vec<usize> {
    let n = adj.len();
    debug_assert!(n <= 16);
    let conflict: Vec<u32> = adj
        .iter()
        .map(|ns| ns.iter().fold(0u32, |m, &w| m | 1 << w))
        .collect();
    let full: u32 = (1u32 << n) - 1;
    let mut best_mask = full;
    let mut best_mass = f64::INFINITY;
    for w in 0..=full {
        let kept = !w & full;
        let feasible = (0..n).all(|u| w >> u & 1 == 1 || conflict[u] & kept == 0);
        if !feasible {
            continue;
        }
        let m: f64 = (0..n).filter(|&u| w >> u & 1 == 1).map(|u| mass[u]).sum();
        if m < best_mass {
            best_mass = m;
            best_mask = w;
        }
    }
    (0..n).filter(|&u| best_mask >> u & 1 == 1).collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Open,
    In,
    Out,
}

struct CoverSearch<'a> {
    adj: &'a [Vec<u32>],
    mass: &'a [f64],
    /// Vertices with conflicts, by decreasing incident violated-pair mass.
    order: Vec<usize>,
    status: Vec<Status>,
    best: Vec<usize>,
    best_mass: f64,
}

impl CoverSearch<'_> {
    /// Greedy dual bound: each uncovered edge pays `min` of its endpoints'
    /// residual masses. The total never exceeds the optimum cover weight.
    fn lower_bound(&self) -> f64 {
        let mut residual: Vec<f64> = self.mass.to_vec();
        let mut bound = 0.0;
        for &u in &self.order {
            if self.status[u] != Status::Open {
                continue;
            }
            for &w in &self.adj[u] {
                let w = w as usize;
                if w < u || self.status[w] != Status::Open {
                    continue;
                }
                let pay = residual[u].min(residual[w]);
                residual[u] -= pay;
                residual[w] -= pay;
                bound += pay;
            }
        }
        bound
    }

    fn search(&mut self, cost: f64) {
        if cost >= self.best_mass - 1e-15 {
            return;
        }
        if cost + self.lower_bound() >= self.best_mass - 1e-15 {
            return;
        }
        // Branch on the heaviest open vertex that still has an open neighbour.
        let pick = self.order.iter().copied().find(|&u| {
            self.status[u] == Status::Open
                && self.adj[u]
                    .iter()
                    .any(|&w| self.status[w as usize] == Status::Open)
        });
        let Some(u) = pick else {
            // Every remaining conflict has an endpoint in the cover.
            self.best_mass = cost;
            self.best = (0..self.status.len())
                .filter(|&x| self.status[x] == Status::In)
                .collect();
            return;
        };

        self.status[u] = Status::In;
        self.search(cost + self.mass[u]);

        // u stays: every open neighbour must go.
        self.status[u] = Status::Out;
        let forced: Vec<usize> = self.adj[u]
            .iter()
            .map(|&w| w as usize)
            .filter(|&w| self.status[w] == Status::Open)
            .collect();
        let extra: f64 = forced.iter().map(|&w| self.mass[w]).sum();
        for &w in &forced {
            self.status[w] = Status::In;
        }
        self.search(cost + extra);
        for &w in &forced {
            self.status[w] = Status::Open;
        }
        self.status[u] = Status::Open;
    }
}

fn cover_by_branch_and_bound(adj: &[Vec<u32>], mass: &[f64], upper: Option<Vec<usize>>) -> Vec<usize> {
    let n = adj.len();
    let incidence: Vec<f64> = (0..n)
        .map(|u| adj[u].iter().map(|&w| mass[u] + mass[w as usize]).sum())
        .collect();
    let mut order: Vec<usize> = (0..n).filter(|&u| !adj[u].is_empty()).collect();
    order.sort_by(|&a, &b| incidence[b].total_cmp(&incidence[a]).then(a.cmp(&b)));

    // Start from the better of the supplied cover and the greedy 2-approximation.
    let greedy = {
        let mut residual = mass.to_vec();
        for &u in &order {
            for &w in &adj[u] {
                let w = w as usize;
                if w < u {
                    continue;
                }
                let pay = residual[u].min(residual[w]);
                residual[u] -= pay;
                residual[w] -= pay;
            }
        }
        order
            .iter()
            .copied()
            .filter(|&u| residual[u] <= 1e-15 * mass[u].max(1e-300))
            .collect::<Vec<_>>()
    };
    let is_cover = |set: &[usize]| {
        let mut inset = vec![false; n];
        for &u in set {
            inset[u] = true;
        }
        (0..n).all(|u| inset[u] || adj[u].iter().all(|&w| inset[w as usize]))
    };
    let weight = |set: &[usize]| set.iter().map(|&u| mass[u]).sum::<f64>();
    let mut best: Vec<usize> = if is_cover(&greedy) {
        greedy
    } else {
        order.clone()
    };
    if let Some(up) = upper.filter(|s| is_cover(s)) {
        if weight(&up) < weight(&best) {
            best = up;
        }
    }
    let mut search = CoverSearch {
        adj,
        mass,
        order,
        status: vec![Status::Open; n],
        best_mass: weight(&best) + 1e-12,
        best,
    };
    search.search(0.0);
    let mut best = search.best;
    best.sort_unstable();
    best
}

/// Exact Π-distance from `f` to the `c`-Lipschitz functions, with the removed
/// set and a Lipschitz completion that agrees with `f` elsewhere.
pub fn exact_distance_to_lipschitz(
    f: &DenseFunction,
    dist: &ProductDistribution,
    c: f64,
) -> Result<DistanceCertificate> {
    let d = f.dim();
    if d > MAX_DISTANCE_DIM {
        return Err(Error::DimensionCap {
            d,
            cap: MAX_DISTANCE_DIM,
            what: "exact distance oracle",
        });
    }
    if d != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            actual: d,
        });
    }
    if !(c > 0.0) {
        return Err(Error::param("c", c, "must be positive"));
    }
    let mass: Vec<f64> = hypercube::vertices(d)?
        .map(|x| dist.vertex_mass(x))
        .collect::<Result<_>>()?;
    let adj = conflict_graph(f, c);

    let cover = if d <= ENUMERATION_DIM {
        cover_by_enumeration(&adj, &mass)
    } else {
        let repaired = if c == 1.0 && f.delta().is_some() && f.values().iter().all(|v| v.is_finite())
        {
            repair::full_repair(f, dist)
                .ok()
                .map(|r| r.modified_vertices().iter().map(|x| x.index()).collect())
        } else {
            None
        };
        cover_by_branch_and_bound(&adj, &mass, repaired)
    };

    let removed: std::collections::HashSet<usize> = cover.iter().copied().collect();
    let kept: BTreeMap<Vertex, f64> = hypercube::vertices(d)?
        .filter(|x| !removed.contains(&x.index()))
        .map(|x| (x, f.get(x)))
        .collect();
    let completion = mcshane_extend_with(&kept, d, c)?;
    let completion = match f.delta() {
        Some(delta) if c.fract() == 0.0 && completion.values().iter().all(|v| v.is_finite()) => {
            DenseFunction::on_grid(d, completion.into_values(), delta)
                .expect("McShane extension of grid values with integer c stays on the grid")
        }
        _ => completion,
    };
    Ok(DistanceCertificate {
        distance: cover.iter().map(|&u| mass[u]).sum(),
        witness_set: cover
            .iter()
            .map(|&u| Vertex::from_raw(d, u as u64))
            .collect(),
        lipschitz_completion: completion,
    })
}

/// `sum (p_x + p_y) / d` over the edges violated at threshold 1.
pub fn violated_edge_mass(f: &DenseFunction, dist: &ProductDistribution) -> Result<f64> {
    if f.dim() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            actual: f.dim(),
        });
    }
    hypercube::edges(f.dim())?
        .filter(|&e| f.edge_gap(e) > 1.0 + VIOLATION_GUARD)
        .map(|e| dist.edge_mass(e))
        .sum()
}

/// `delta (eps - d^2 delta) / (d ImD)`; non-positive values make the bound vacuous.
pub fn lemma1_rhs(epsilon: f64, d: usize, delta: f64, imd: f64) -> Result<f64> {
    if !(imd > 0.0) {
        return Err(Error::param("imd", imd, "image diameter must be positive"));
    }
    let d = d as f64;
    Ok(delta * (epsilon - d * d * delta) / (d * imd))
}
