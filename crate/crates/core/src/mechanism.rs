//! Randomized mechanisms with exact output probabilities.
//!
//! Datasets are hypercube vertices and the output set is finite. Every
//! mechanism here answers `prob(D, o)` exactly, in constant time.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{self, Vertex, MAX_EXHAUSTIVE_DIM, MAX_SAMPLING_DIM};

/// Per-dataset probability rows must sum to one within this tolerance.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

pub trait MechanismOracle: Sync {
    fn dim(&self) -> usize;

    /// Output labels, in a fixed order; outputs are addressed by index.
    fn outputs(&self) -> &[String];

    fn prob(&self, dataset: Vertex, output: usize) -> f64;

    fn output_index(&self, label: &str) -> Result<usize> {
        self.outputs()
            .iter()
            .position(|o| o == label)
            .ok_or_else(|| Error::UnknownOutput(label.to_string()))
    }
}

impl<M: MechanismOracle + ?Sized> MechanismOracle for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn outputs(&self) -> &[String] {
        (**self).outputs()
    }
    fn prob(&self, dataset: Vertex, output: usize) -> f64 {
        (**self).prob(dataset, output)
    }
}

/// Checks every row of a mechanism with `d <= 20`.
pub fn validate_normalization<M: MechanismOracle + ?Sized>(mech: &M) -> Result<()> {
    for x in hypercube::vertices(mech.dim())? {
        let mut total = 0.0;
        for o in 0..mech.outputs().len() {
            let p = mech.prob(x, o);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidMechanism(format!(
                    "prob({x}, {}) = {p} is outside [0, 1]",
                    mech.outputs()[o]
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidMechanism(format!(
                "probabilities for dataset {x} sum to {total}"
            )));
        }
    }
    Ok(())
}

fn check_dim(d: usize, cap: usize) -> Result<()> {
    if d == 0 || d > cap {
        return Err(Error::DimensionCap {
            d,
            cap,
            what: "mechanism datasets (must also be positive)",
        });
    }
    Ok(())
}

/// An explicit table: one row of `|Γ|` probabilities per dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct TableMechanism {
    d: usize,
    outputs: Vec<String>,
    probs: Vec<f64>,
}

impl TableMechanism {
    /// `rows[x.index()]` holds the distribution of outputs on dataset `x`.
    pub fn new(d: usize, outputs: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(d, MAX_EXHAUSTIVE_DIM)?;
        if outputs.is_empty() {
            return Err(Error::InvalidMechanism("output set is empty".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for o in &outputs {
            if !seen.insert(o) {
                return Err(Error::InvalidMechanism(format!("duplicate output {o:?}")));
            }
        }
        if rows.len() != 1 << d {
            return Err(Error::InvalidMechanism(format!(
                "expected {} dataset rows, got {}",
                1usize << d,
                rows.len()
            )));
        }
        let k = outputs.len();
        let mut probs = Vec::with_capacity(rows.len() * k);
        for (idx, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidMechanism(format!(
                    "row for dataset {} has {} entries, expected {k}",
                    Vertex::from_raw(d, idx as u64),
                    row.len()
                )));
            }
            probs.extend(row);
        }
        let mech = Self { d, outputs, probs };
        validate_normalization(&mech)?;
        Ok(mech)
    }

    /// Materializes any mechanism with `d <= 20`.
    pub fn from_oracle<M: MechanismOracle + ?Sized>(mech: &M) -> Result<Self> {
        let d = mech.dim();
        let k = mech.outputs().len();
        let rows = hypercube::vertices(d)?
            .map(|x| (0..k).map(|o| mech.prob(x, o)).collect())
            .collect();
        Self::new(d, mech.outputs().to_vec(), rows)
    }

    pub fn row(&self, x: Vertex) -> &[f64] {
        let k = self.outputs.len();
        &self.probs[x.index() * k..(x.index() + 1) * k]
    }
}

impl MechanismOracle for TableMechanism {
    fn dim(&self) -> usize {
        self.d
    }
    fn outputs(&self) -> &[String] {
        &self.outputs
    }
    fn prob(&self, dataset: Vertex, output: usize) -> f64 {
        self.probs[dataset.index() * self.outputs.len() + output]
    }
}

/// Wire form of a table mechanism: output labels plus one probability row per
/// dataset bitstring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismFile {
    pub outputs: Vec<String>,
    pub table: BTreeMap<String, Vec<f64>>,
}

impl MechanismFile {
    pub fn from_table(mech: &TableMechanism) -> Self {
        let table = hypercube::vertices(mech.d)
            .expect("table dimension within cap")
            .map(|x| (x.to_bitstring(), mech.row(x).to_vec()))
            .collect();
        Self {
            outputs: mech.outputs.clone(),
            table,
        }
    }

    pub fn into_mechanism(self) -> Result<TableMechanism> {
        let d = self
            .table
            .keys()
            .next()
            .map(String::len)
            .ok_or_else(|| Error::InvalidMechanism("table is empty".into()))?;
        check_dim(d, MAX_EXHAUSTIVE_DIM)?;
        let mut rows: Vec<Option<Vec<f64>>> = vec![None; 1 << d];
        for (key, row) in self.table {
            let x = Vertex::parse(&key)?;
            if x.dim() != d {
                return Err(Error::InvalidMechanism(format!(
                    "dataset {key:?} has length {}, expected {d}",
                    x.dim()
                )));
            }
            rows[x.index()] = Some(row);
        }
        let rows = rows
            .into_iter()
            .enumerate()
            .map(|(idx, r)| {
                r.ok_or_else(|| {
                    Error::InvalidMechanism(format!(
                        "missing row for dataset {}",
                        Vertex::from_raw(d, idx as u64)
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TableMechanism::new(d, self.outputs, rows)
    }
}

/// Flips every bit independently with probability `q` and releases the result.
#[derive(Clone, Debug)]
pub struct RandomizedResponse {
    d: usize,
    q: f64,
    outputs: Vec<String>,
}

impl RandomizedResponse {
    pub fn new(d: usize, q: f64) -> Result<Self> {
        // The output set has 2^d elements.
        check_dim(d, MAX_EXHAUSTIVE_DIM)?;
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::param("q", q, "must lie in [0, 1]"));
        }
        let outputs = hypercube::vertices(d)?.map(|x| x.to_bitstring()).collect();
        Ok(Self { d, q, outputs })
    }
}

impl MechanismOracle for RandomizedResponse {
    fn dim(&self) -> usize {
        self.d
    }
    fn outputs(&self) -> &[String] {
        &self.outputs
    }
    fn prob(&self, dataset: Vertex, output: usize) -> f64 {
        let flips = (dataset.bits() ^ output as u64).count_ones() as i32;
        self.q.powi(flips) * (1.0 - self.q).powi(self.d as i32 - flips)
    }
}

/// Truncated geometric noise on the count `s = sum x_i` over `Γ = {0..d}`.
///
/// With `t = e^{-alpha0}`: interior outputs get `(1-t)/(1+t) t^{|o-s|}`, and
/// the two ends absorb the tails, `t^s/(1+t)` at 0 and `t^{d-s}/(1+t)` at `d`.
#[derive(Clone, Debug)]
pub struct TruncatedGeometric {
    d: usize,
    alpha0: f64,
    outputs: Vec<String>,
    /// `t^k` for `k` in `0..=d`.
    powers: Vec<f64>,
}

impl TruncatedGeometric {
    pub fn new(d: usize, alpha0: f64) -> Result<Self> {
        check_dim(d, MAX_SAMPLING_DIM)?;
        if !(alpha0 > 0.0 && alpha0.is_finite()) {
            return Err(Error::param("alpha0", alpha0, "must be positive and finite"));
        }
        let t = (-alpha0).exp();
        let powers = (0..=d as i32).map(|k| t.powi(k)).collect();
        Ok(Self {
            d,
            alpha0,
            outputs: (0..=d).map(|o| o.to_string()).collect(),
            powers,
        })
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }
}

impl MechanismOracle for TruncatedGeometric {
    fn dim(&self) -> usize {
        self.d
    }
    fn outputs(&self) -> &[String] {
        &self.outputs
    }
    fn prob(&self, dataset: Vertex, output: usize) -> f64 {
        let s = hypercube::hamming_weight(dataset);
        let t = self.powers[1];
        if output == 0 {
            self.powers[s] / (1.0 + t)
        } else if output == self.d {
            self.powers[self.d - s] / (1.0 + t)
        } else {
            (1.0 - t) / (1.0 + t) * self.powers[output.abs_diff(s)]
        }
    }
}

/// Releases coordinate `i` exactly.
#[derive(Clone, Debug)]
pub struct DeterministicProjection {
    d: usize,
    i: usize,
    outputs: Vec<String>,
}

impl DeterministicProjection {
    pub fn new(d: usize, i: usize) -> Result<Self> {
        check_dim(d, MAX_SAMPLING_DIM)?;
        if i == 0 || i > d {
            return Err(Error::param("i", i as f64, format!("must lie in 1..={d}")));
        }
        Ok(Self {
            d,
            i,
            outputs: vec!["0".into(), "1".into()],
        })
    }
}

impl MechanismOracle for DeterministicProjection {
    fn dim(&self) -> usize {
        self.d
    }
    fn outputs(&self) -> &[String] {
        &self.outputs
    }
    fn prob(&self, dataset: Vertex, output: usize) -> f64 {
        if usize::from(dataset.coord(self.i)) == output {
            1.0
        } else {
            0.0
        }
    }
}

/// Named built-in mechanisms, written `name?key=value&...` on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinMechanism {
    RandomizedResponse { q: f64 },
    TruncatedGeometric { alpha0: f64 },
    DeterministicProjection { i: usize },
}

pub(crate) fn parse_query(s: &str) -> Result<(String, BTreeMap<String, String>)> {
    let (name, query) = s.split_once('?').unwrap_or((s, ""));
    let mut params = BTreeMap::new();
    for pair in query.split('&').filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("malformed parameter {pair:?} in {s:?}")))?;
        params.insert(k.to_string(), v.to_string());
    }
    Ok((name.to_string(), params))
}

pub(crate) fn take_param<T: FromStr>(
    params: &mut BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    params
        .remove(key)
        .map(|v| {
            v.parse::<T>()
                .map_err(|_| Error::Config(format!("cannot parse {key}={v:?}")))
        })
        .transpose()
}

impl BuiltinMechanism {
    /// Parses `randomized_response?q=0.25`, `truncated_geometric?alpha0=0.69`,
    /// `deterministic_projection?i=1`. A `d=` parameter, if present, is
    /// returned separately.
    pub fn parse(s: &str) -> Result<(Self, Option<usize>)> {
        let (name, mut params) = parse_query(s)?;
        let d = take_param::<usize>(&mut params, "d")?;
        let kind = match name.replace('-', "_").as_str() {
            "randomized_response" => BuiltinMechanism::RandomizedResponse {
                q: take_param(&mut params, "q")?.unwrap_or(0.25),
            },
            "truncated_geometric" => BuiltinMechanism::TruncatedGeometric {
                alpha0: take_param(&mut params, "alpha0")?
                    .ok_or_else(|| Error::Config("truncated_geometric needs alpha0".into()))?,
            },
            "deterministic_projection" => BuiltinMechanism::DeterministicProjection {
                i: take_param(&mut params, "i")?.unwrap_or(1),
            },
            other => return Err(Error::Config(format!("unknown builtin mechanism {other:?}"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(Error::Config(format!("unknown parameter {extra:?} for {name}")));
        }
        Ok((kind, d))
    }
}

pub fn builtin_mechanism(kind: &BuiltinMechanism, d: usize) -> Result<Box<dyn MechanismOracle>> {
    Ok(match *kind {
        BuiltinMechanism::RandomizedResponse { q } => Box::new(RandomizedResponse::new(d, q)?),
        BuiltinMechanism::TruncatedGeometric { alpha0 } => {
            Box::new(TruncatedGeometric::new(d, alpha0)?)
        }
        BuiltinMechanism::DeterministicProjection { i } => {
            Box::new(DeterministicProjection::new(d, i)?)
        }
    })
}
