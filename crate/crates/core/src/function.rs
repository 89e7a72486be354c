//! Point-query access to functions on the hypercube.
//!
//! Values are extended reals: finite, or `-inf` (the log of a zero
//! probability). `+inf` and NaN never appear.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{self, Edge, Vertex};

/// Tolerance for "is a multiple of delta".
pub const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueRange {
    /// Values in `delta * Z`.
    DeltaGrid { delta: f64 },
    Real,
}

pub trait FunctionOracle: Sync {
    fn dim(&self) -> usize;

    fn evaluate(&self, x: Vertex) -> f64;

    fn range(&self) -> ValueRange {
        ValueRange::Real
    }
}

impl<F: FunctionOracle + ?Sized> FunctionOracle for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: Vertex) -> f64 {
        (**self).evaluate(x)
    }
    fn range(&self) -> ValueRange {
        (**self).range()
    }
}

/// `|a - b|` with `-inf` handling: two `-inf` values are equal, `-inf`
/// against a finite value is an infinite gap.
pub fn value_gap(a: f64, b: f64) -> f64 {
    match (a == f64::NEG_INFINITY, b == f64::NEG_INFINITY) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        (false, false) => (a - b).abs(),
    }
}

pub fn is_grid_multiple(value: f64, delta: f64) -> bool {
    if !value.is_finite() {
        return true;
    }
    let q = value / delta;
    (q - q.round()).abs() <= GRID_TOLERANCE
}

/// Checks that `1/delta` is a positive integer and `delta` lies in `(0, 1]`.
pub fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", delta, "must lie in (0, 1]"));
    }
    let inv = 1.0 / delta;
    if (inv - inv.round()).abs() > GRID_TOLERANCE * inv.max(1.0) {
        return Err(Error::param("delta", delta, "1/delta must be an integer"));
    }
    Ok(())
}

fn check_value(v: f64) -> Result<()> {
    if v.is_nan() || v == f64::INFINITY {
        return Err(Error::InvalidFunction(format!(
            "value {v} is not a finite real or -inf"
        )));
    }
    Ok(())
}

/// A full table of `2^d` values, indexed by [`Vertex::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct DenseFunction {
    d: usize,
    values: Vec<f64>,
    delta: Option<f64>,
}

impl DenseFunction {
    /// A real-valued table.
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        hypercube::check_exhaustive(d, "dense function")?;
        if values.len() != 1usize << d {
            return Err(Error::InvalidFunction(format!(
                "expected {} values for d = {d}, got {}",
                1usize << d,
                values.len()
            )));
        }
        for &v in &values {
            check_value(v)?;
        }
        Ok(Self {
            d,
            values,
            delta: None,
        })
    }

    /// A `delta * Z`-valued table. Finite values are snapped onto the grid
    /// once verified to be within tolerance of it.
    pub fn on_grid(d: usize, values: Vec<f64>, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let mut f = Self::new(d, values)?;
        for (idx, v) in f.values.iter_mut().enumerate() {
            if !is_grid_multiple(*v, delta) {
                return Err(Error::OffGrid {
                    vertex: Vertex::from_raw(d, idx as u64).to_bitstring(),
                    value: *v,
                    delta,
                });
            }
            if v.is_finite() {
                *v = (*v / delta).round() * delta;
            }
        }
        f.delta = Some(delta);
        Ok(f)
    }

    pub fn from_fn(d: usize, f: impl Fn(Vertex) -> f64) -> Result<Self> {
        hypercube::check_exhaustive(d, "dense function")?;
        let values = hypercube::vertices(d)?.map(f).collect();
        Self::new(d, values)
    }

    pub fn from_oracle<F: FunctionOracle + ?Sized>(f: &F) -> Result<Self> {
        let d = f.dim();
        let table = Self::from_fn(d, |x| f.evaluate(x))?;
        match f.range() {
            ValueRange::DeltaGrid { delta } => Self::on_grid(d, table.values, delta),
            ValueRange::Real => Ok(table),
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: Vertex) -> f64 {
        self.values[x.index()]
    }

    /// Same values, but declared real-valued.
    pub fn as_real(&self) -> Self {
        Self {
            delta: None,
            ..self.clone()
        }
    }

    /// Builds a table whose values need not lie on the grid but keeps the
    /// grid annotation; used for the pre-rounding repair fixpoint.
    pub(crate) fn with_values_unchecked(&self, values: Vec<f64>) -> Self {
        Self {
            d: self.d,
            values,
            delta: self.delta,
        }
    }

    pub fn edge_gap(&self, e: Edge) -> f64 {
        let (x, y) = e.endpoints();
        value_gap(self.get(x), self.get(y))
    }
}

impl FunctionOracle for DenseFunction {
    fn dim(&self) -> usize {
        self.d
    }

    fn evaluate(&self, x: Vertex) -> f64 {
        self.get(x)
    }

    fn range(&self) -> ValueRange {
        match self.delta {
            Some(delta) => ValueRange::DeltaGrid { delta },
            None => ValueRange::Real,
        }
    }
}

/// `f(x) = H(x)`. Lipschitz, image diameter `d`, any dimension up to 62.
#[derive(Clone, Copy, Debug)]
pub struct HammingWeight {
    pub d: usize,
}

impl FunctionOracle for HammingWeight {
    fn dim(&self) -> usize {
        self.d
    }
    fn evaluate(&self, x: Vertex) -> f64 {
        hypercube::hamming_weight(x) as f64
    }
    fn range(&self) -> ValueRange {
        ValueRange::DeltaGrid { delta: 1.0 }
    }
}

/// `f(x) = k * x_1`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledDictator {
    pub d: usize,
    pub k: f64,
}

impl FunctionOracle for ScaledDictator {
    fn dim(&self) -> usize {
        self.d
    }
    fn evaluate(&self, x: Vertex) -> f64 {
        self.k * f64::from(x.coord(1))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Constant {
    pub d: usize,
    pub c: f64,
}

impl FunctionOracle for Constant {
    fn dim(&self) -> usize {
        self.d
    }
    fn evaluate(&self, _x: Vertex) -> f64 {
        self.c
    }
}

/// Counts evaluations and optionally records the queried vertices.
pub struct QueryLog<F> {
    inner: F,
    log: std::sync::Mutex<Vec<Vertex>>,
    count: std::sync::atomic::AtomicUsize,
}

impl<F: FunctionOracle> QueryLog<F> {
    pub fn new(inner: F) -> Self {
        Self {
            inner,
            log: std::sync::Mutex::new(Vec::new()),
            count: std::sync::atomic::AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(std::sync::atomic::Ordering::SeqCst)
    }

    pub fn queries(&self) -> Vec<Vertex> {
        self.log.lock().expect("query log poisoned").clone()
    }
}

impl<F: FunctionOracle> FunctionOracle for QueryLog<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn evaluate(&self, x: Vertex) -> f64 {
        self.count.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
        self.log.lock().expect("query log poisoned").push(x);
        self.inner.evaluate(x)
    }
    fn range(&self) -> ValueRange {
        self.inner.range()
    }
}
