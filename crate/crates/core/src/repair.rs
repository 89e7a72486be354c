//! Dimension-by-dimension repair of a `delta * Z`-valued function.
//!
//! The asymmetric basic operator shrinks one violated edge along dimension `i`
//! by exactly `delta`, moving the endpoint with coordinate `i` = 0 by
//! `p_i * delta` and the other endpoint by `(1 - p_i) * delta`, towards each
//! other. Both endpoints therefore shift by the same mass-weighted amount. The
//! repair operator `A_i` applies it until dimension `i` is clean and then
//! rounds every value to the nearest grid point. Chaining `A_1, ..., A_d`
//! turns any grid function into a Lipschitz one.
//!
//! This is a verification companion for the tester's analysis, not a
//! production path: it works on dense tables only.

use serde::Serialize;

use crate::distribution::ProductDistribution;
use crate::error::{Error, Result};
use crate::function::{value_gap, DenseFunction, GRID_TOLERANCE};
use crate::hypercube::{self, Edge, Vertex};
use crate::tester::VIOLATION_GUARD;

/// Rounds to the nearest multiple of `delta`; exact midpoints go down.
pub fn round_to_grid(v: f64, delta: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    let q = v / delta;
    let lower = q.floor();
    let k = if q - lower <= 0.5 + GRID_TOLERANCE {
        lower
    } else {
        lower + 1.0
    };
    k * delta
}

fn is_violated(gap: f64) -> bool {
    gap > 1.0 + VIOLATION_GUARD
}

fn require_grid(f: &DenseFunction) -> Result<f64> {
    let delta = f.delta().ok_or_else(|| {
        Error::InvalidFunction("repair needs a delta-grid valued function".into())
    })?;
    if f.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidFunction(
            "repair needs finite values everywhere".into(),
        ));
    }
    Ok(delta)
}

fn check_dims(f: &DenseFunction, dist: &ProductDistribution) -> Result<()> {
    if f.dim() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            actual: f.dim(),
        });
    }
    Ok(())
}

/// One application of the basic operator on `values`, which must be violated
/// along `e`.
fn basic_step_in_place(values: &mut [f64], e: Edge, p_i: f64, delta: f64) {
    let (zero, one) = e.endpoints();
    let (a, b) = (values[zero.index()], values[one.index()]);
    if a < b {
        values[zero.index()] = a + p_i * delta;
        values[one.index()] = b - (1.0 - p_i) * delta;
    } else {
        values[zero.index()] = a - p_i * delta;
        values[one.index()] = b + (1.0 - p_i) * delta;
    }
}

/// Applies the asymmetric basic operator once to the violated edge `e`.
pub fn basic_operator_step(
    f: &DenseFunction,
    e: Edge,
    p_i: f64,
    delta: f64,
) -> Result<DenseFunction> {
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            actual: e.dim(),
        });
    }
    if !is_violated(f.edge_gap(e)) {
        return Err(Error::NotViolated(e.to_string()));
    }
    let mut values = f.values().to_vec();
    basic_step_in_place(&mut values, e, p_i, delta);
    Ok(f.with_values_unchecked(values))
}

pub fn violation_score_edge(
    f: &DenseFunction,
    e: Edge,
    dist: &ProductDistribution,
) -> Result<f64> {
    let gap = f.edge_gap(e);
    let m = dist.endpoint_mass(e)?;
    Ok((m * (gap - 1.0)).max(0.0))
}

/// `VS^i(f)`: the violation scores of the dimension-`i` matching, summed.
pub fn violation_score_dimension(
    f: &DenseFunction,
    i: usize,
    dist: &ProductDistribution,
) -> Result<f64> {
    check_dims(f, dist)?;
    hypercube::dimension_edges(f.dim(), i)?
        .map(|e| violation_score_edge(f, e, dist))
        .sum()
}

#[derive(Clone, Debug)]
pub struct DimensionRepair {
    /// Fixpoint of the basic operator, before rounding.
    pub unrounded: DenseFunction,
    /// `A_i[f]`.
    pub repaired: DenseFunction,
    pub basic_steps: usize,
    pub passes: usize,
}

/// Sweeps the dimension-`i` matching in lexicographic base order, applying
/// the basic operator once per violated edge per sweep, until a sweep finds
/// nothing; then rounds.
pub fn repair_dimension_detailed(
    f: &DenseFunction,
    i: usize,
    dist: &ProductDistribution,
) -> Result<DimensionRepair> {
    let delta = require_grid(f)?;
    check_dims(f, dist)?;
    let d = f.dim();
    let p_i = dist.p(i.clamp(1, d));
    let matching: Vec<Edge> = hypercube::dimension_edges(d, i)?.collect();

    let imd = crate::oracle::image_diameter_exact(f);
    // Each step shrinks one gap by delta and gaps start below ImD(f).
    let max_passes = (imd / delta).ceil() as usize + 1;

    let mut values = f.values().to_vec();
    let mut basic_steps = 0;
    let mut passes = 0;
    loop {
        let mut touched = false;
        for &e in &matching {
            let (x, y) = e.endpoints();
            if is_violated(value_gap(values[x.index()], values[y.index()])) {
                basic_step_in_place(&mut values, e, p_i, delta);
                basic_steps += 1;
                touched = true;
            }
        }
        if !touched {
            break;
        }
        passes += 1;
        if passes > max_passes {
            return Err(Error::NonTermination { passes });
        }
    }
    let unrounded = f.with_values_unchecked(values.clone());
    let rounded: Vec<f64> = values.iter().map(|&v| round_to_grid(v, delta)).collect();
    let repaired = DenseFunction::on_grid(d, rounded, delta)?;
    Ok(DimensionRepair {
        unrounded,
        repaired,
        basic_steps,
        passes,
    })
}

/// `A_i[f]`.
pub fn repair_dimension(
    f: &DenseFunction,
    i: usize,
    dist: &ProductDistribution,
) -> Result<DenseFunction> {
    repair_dimension_detailed(f, i, dist).map(|r| r.repaired)
}

/// Π-mass of the vertices where `f` and `g` differ.
pub fn distance(f: &DenseFunction, g: &DenseFunction, dist: &ProductDistribution) -> Result<f64> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            actual: g.dim(),
        });
    }
    check_dims(f, dist)?;
    let mut total = 0.0;
    for x in hypercube::vertices(f.dim())? {
        if value_gap(f.get(x), g.get(x)) > GRID_TOLERANCE {
            total += dist.vertex_mass(x)?;
        }
    }
    Ok(total)
}

#[derive(Clone, Debug, Serialize)]
pub struct StepAccount {
    pub dimension: usize,
    /// `Dist(f_{i-1}, f_i)`.
    pub distance: f64,
    /// `sum (p_x + p_y)` over the edges of dimension `i` violated by `f_{i-1}`.
    pub violated_endpoint_mass: f64,
    pub basic_steps: usize,
}

#[derive(Clone, Debug)]
pub struct FullRepair {
    /// `f_0 = f, f_1, ..., f_d`.
    pub chain: Vec<DenseFunction>,
    pub steps: Vec<StepAccount>,
    /// `Dist(f, f_d)`.
    pub total_distance: f64,
}

impl FullRepair {
    pub fn result(&self) -> &DenseFunction {
        self.chain.last().expect("chain holds f_0")
    }

    /// Vertices whose value changed between `f_0` and `f_d`.
    pub fn modified_vertices(&self) -> Vec<Vertex> {
        let (f, g) = (&self.chain[0], self.result());
        hypercube::vertices(f.dim())
            .expect("dense functions respect the cap")
            .filter(|&x| value_gap(f.get(x), g.get(x)) > GRID_TOLERANCE)
            .collect()
    }
}

/// Runs `f_0 -> f_1 -> ... -> f_d` with `f_i = A_i[f_{i-1}]`.
pub fn full_repair(f: &DenseFunction, dist: &ProductDistribution) -> Result<FullRepair> {
    require_grid(f)?;
    check_dims(f, dist)?;
    let d = f.dim();
    let mut chain = vec![f.clone()];
    let mut steps = Vec::with_capacity(d);
    for i in 1..=d {
        let prev = chain.last().expect("non-empty");
        let violated_endpoint_mass = hypercube::dimension_edges(d, i)?
            .filter(|&e| is_violated(prev.edge_gap(e)))
            .map(|e| dist.endpoint_mass(e))
            .sum::<Result<f64>>()?;
        let step = repair_dimension_detailed(prev, i, dist)?;
        steps.push(StepAccount {
            dimension: i,
            distance: distance(prev, &step.repaired, dist)?,
            violated_endpoint_mass,
            basic_steps: step.basic_steps,
        });
        chain.push(step.repaired);
    }
    let total_distance = distance(f, chain.last().expect("non-empty"), dist)?;
    Ok(FullRepair {
        chain,
        steps,
        total_distance,
    })
}
