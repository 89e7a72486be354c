//! Product distributions `Ber(p_1) x ... x Ber(p_d)` on the hypercube, the
//! induced edge distribution, and the seeded generator used for sampling.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{Edge, Vertex, MAX_SAMPLING_DIM};

/// Below this coordinate probability vertex masses are accumulated in log space.
const LOG_SPACE_THRESHOLD: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct ProductDistribution {
    p: Vec<f64>,
    log_space: bool,
}

impl Serialize for ProductDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.p.serialize(s)
    }
}

impl ProductDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() > MAX_SAMPLING_DIM {
            return Err(Error::DimensionCap {
                d: p.len(),
                cap: MAX_SAMPLING_DIM,
                what: "product distribution (must also be non-empty)",
            });
        }
        for (index, &value) in p.iter().enumerate() {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidProbability {
                    index: index + 1,
                    value,
                });
            }
        }
        let log_space = p
            .iter()
            .any(|&q| q < LOG_SPACE_THRESHOLD || 1.0 - q < LOG_SPACE_THRESHOLD);
        Ok(Self { p, log_space })
    }

    pub fn uniform(d: usize) -> Result<Self> {
        Self::new(vec![0.5; d])
    }

    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.p
    }

    /// `p_i` for dimension `i` in `1..=d`.
    pub fn p(&self, i: usize) -> f64 {
        self.p[i - 1]
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: d,
            });
        }
        Ok(())
    }

    /// Mass of `x` with coordinate `skip` (1-based) left out of the product.
    fn partial_mass(&self, x: Vertex, skip: Option<usize>) -> f64 {
        let factors = self.p.iter().enumerate().filter_map(|(j, &q)| {
            if skip == Some(j + 1) {
                None
            } else if x.bits() >> j & 1 == 1 {
                Some(q)
            } else {
                Some(1.0 - q)
            }
        });
        if self.log_space {
            factors.map(f64::ln).sum::<f64>().exp()
        } else {
            factors.product()
        }
    }

    /// `p_x`: product of `p_i` over set coordinates and `1 - p_i` over the rest.
    pub fn vertex_mass(&self, x: Vertex) -> Result<f64> {
        self.check_dim(x.dim())?;
        Ok(self.partial_mass(x, None))
    }

    /// `(p_x + p_y) / d`. The two endpoints share every factor except
    /// coordinate `i`, whose factors sum to one.
    pub fn edge_mass(&self, e: Edge) -> Result<f64> {
        self.check_dim(e.dim())?;
        Ok(self.partial_mass(e.base(), Some(e.dimension())) / self.dim() as f64)
    }

    /// `p_x + p_y` for an edge, without the `1/d` factor.
    pub fn endpoint_mass(&self, e: Edge) -> Result<f64> {
        self.check_dim(e.dim())?;
        Ok(self.partial_mass(e.base(), Some(e.dimension())))
    }

    pub fn sample_vertex<R: Rng + ?Sized>(&self, rng: &mut R) -> Vertex {
        let mut bits = 0u64;
        for (j, &q) in self.p.iter().enumerate() {
            if rng.random::<f64>() < q {
                bits |= 1 << j;
            }
        }
        Vertex::from_raw(self.dim(), bits)
    }

    /// Draws from the edge distribution `D_E`: a uniform dimension, then the
    /// remaining coordinates from their Bernoulli marginals.
    pub fn sample_edge<R: Rng + ?Sized>(&self, rng: &mut R) -> Edge {
        let d = self.dim();
        let dimension = rng.random_range(1..=d);
        let mut bits = 0u64;
        for (j, &q) in self.p.iter().enumerate() {
            if j + 1 == dimension {
                continue;
            }
            if rng.random::<f64>() < q {
                bits |= 1 << j;
            }
        }
        Edge::from_raw(Vertex::from_raw(d, bits), dimension)
    }
}

/// Wire form of a distribution: the string `"uniform"` or an array of `p_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DistributionSpec {
    Named(String),
    Explicit(Vec<f64>),
}

impl DistributionSpec {
    pub fn resolve(&self, d: usize) -> Result<ProductDistribution> {
        match self {
            DistributionSpec::Named(name) if name == "uniform" => ProductDistribution::uniform(d),
            DistributionSpec::Named(other) => Err(Error::Config(format!(
                "unknown distribution {other:?}; expected \"uniform\" or an array"
            ))),
            DistributionSpec::Explicit(p) => {
                let dist = ProductDistribution::new(p.clone())?;
                dist.check_dim(d)?;
                Ok(dist)
            }
        }
    }
}

/// Name and version of the generator behind [`SeededRng`], echoed in reports.
pub const GENERATOR: &str = "ChaCha8Rng/rand_chacha-0.9";

/// A seeded ChaCha8 stream.
///
/// Independent sub-streams come from [`SeededRng::split`]: the child uses the
/// same 64-bit seed with ChaCha stream id `splitmix64(parent_stream) ^
/// splitmix64(child + 1)`. Every consumer in the crate draws from its own
/// split, so results never depend on scheduling.
#[derive(Clone, Debug)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self {
            seed,
            stream,
            inner,
        }
    }

    pub fn split(&self, child: u64) -> SeededRng {
        let stream = splitmix64(self.stream) ^ splitmix64(child.wrapping_add(1));
        Self::with_stream(self.seed, stream)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
