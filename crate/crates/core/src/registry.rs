//! Named functions and the JSON table format, so that runs can be described
//! by a string and replayed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{
    is_grid_multiple, Constant, DenseFunction, FunctionOracle, HammingWeight, ScaledDictator,
    ValueRange,
};
use crate::hypercube::Vertex;
use crate::instances;
use crate::mechanism::{parse_query, take_param};

/// `hamming-weight`, `scaled-dictator?k=K`, `constant?c=C`,
/// `random-lipschitz?seed=S`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BuiltinFunction {
    HammingWeight,
    ScaledDictator { k: f64 },
    Constant { c: f64 },
    RandomLipschitz { seed: u64 },
}

impl BuiltinFunction {
    pub fn parse(s: &str) -> Result<Self> {
        let (name, mut params) = parse_query(s)?;
        let kind = match name.replace('_', "-").as_str() {
            "hamming-weight" => Self::HammingWeight,
            "scaled-dictator" => Self::ScaledDictator {
                k: take_param(&mut params, "k")?.unwrap_or(1.0),
            },
            "constant" => Self::Constant {
                c: take_param(&mut params, "c")?.unwrap_or(0.0),
            },
            "random-lipschitz" => Self::RandomLipschitz {
                seed: take_param(&mut params, "seed")?.unwrap_or(0),
            },
            other => return Err(Error::Config(format!("unknown builtin function {other:?}"))),
        };
        if let Some(extra) = params.keys().next() {
            return Err(Error::Config(format!("unknown parameter {extra:?} for {name}")));
        }
        Ok(kind)
    }

    /// Instantiates the function at dimension `d`. `delta` is the grid the
    /// caller intends to test on: scalar builtins report a grid range when
    /// their values are multiples of it, and `random-lipschitz` is drawn on it.
    pub fn instantiate(&self, d: usize, delta: f64) -> Result<NamedFunction> {
        let grid_if = |ok: bool| {
            if ok {
                ValueRange::DeltaGrid { delta }
            } else {
                ValueRange::Real
            }
        };
        Ok(match *self {
            Self::HammingWeight => NamedFunction::Hamming(HammingWeight { d }),
            Self::ScaledDictator { k } => {
                NamedFunction::Scalar(ScaledDictator { d, k }.into(), grid_if(is_grid_multiple(k, delta)))
            }
            Self::Constant { c } => {
                NamedFunction::Scalar(Constant { d, c }.into(), grid_if(is_grid_multiple(c, delta)))
            }
            Self::RandomLipschitz { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                NamedFunction::Dense(instances::random_lipschitz(d, delta, &mut rng)?)
            }
        })
    }
}

#[derive(Clone, Debug)]
pub enum Scalar {
    Dictator(ScaledDictator),
    Constant(Constant),
}

impl From<ScaledDictator> for Scalar {
    fn from(f: ScaledDictator) -> Self {
        Scalar::Dictator(f)
    }
}

impl From<Constant> for Scalar {
    fn from(f: Constant) -> Self {
        Scalar::Constant(f)
    }
}

/// Any function the command line can name.
#[derive(Clone, Debug)]
pub enum NamedFunction {
    Hamming(HammingWeight),
    Scalar(Scalar, ValueRange),
    Dense(DenseFunction),
}

impl FunctionOracle for NamedFunction {
    fn dim(&self) -> usize {
        match self {
            NamedFunction::Hamming(f) => f.d,
            NamedFunction::Scalar(Scalar::Dictator(f), _) => f.d,
            NamedFunction::Scalar(Scalar::Constant(f), _) => f.d,
            NamedFunction::Dense(f) => f.dim(),
        }
    }

    fn evaluate(&self, x: Vertex) -> f64 {
        match self {
            NamedFunction::Hamming(f) => f.evaluate(x),
            NamedFunction::Scalar(Scalar::Dictator(f), _) => f.evaluate(x),
            NamedFunction::Scalar(Scalar::Constant(f), _) => f.evaluate(x),
            NamedFunction::Dense(f) => f.evaluate(x),
        }
    }

    fn range(&self) -> ValueRange {
        match self {
            NamedFunction::Hamming(f) => f.range(),
            NamedFunction::Scalar(_, r) => *r,
            NamedFunction::Dense(f) => f.range(),
        }
    }
}

/// Wire form of a dense table: values in vertex index order (bit `i - 1` of
/// the index is coordinate `i`), `"-inf"` allowed. With `delta` present the
/// values must be multiples of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionFile {
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(with = "crate::ext_real::vec")]
    pub values: Vec<f64>,
}

impl FunctionFile {
    pub fn from_function(f: &DenseFunction) -> Self {
        Self {
            d: f.dim(),
            delta: f.delta(),
            values: f.values().to_vec(),
        }
    }

    pub fn into_function(self) -> Result<DenseFunction> {
        match self.delta {
            Some(delta) => DenseFunction::on_grid(self.d, self.values, delta),
            None => DenseFunction::new(self.d, self.values),
        }
    }
}
