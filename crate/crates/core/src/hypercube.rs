//! Vertices and edges of the hypercube `{0,1}^d`.
//!
//! A vertex is packed into a `u64`; coordinate `i` (1-based, `1..=d`) lives
//! in bit `i - 1`. Bitstrings are written `x_1 x_2 ... x_d` left to right, so
//! `"100"` is the vertex with only the first coordinate set.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest dimension accepted by the sampling tester.
pub const MAX_SAMPLING_DIM: usize = 62;

/// Largest dimension accepted by anything that walks the whole cube.
pub const MAX_EXHAUSTIVE_DIM: usize = 20;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    bits: u64,
    dim: u8,
}

impl Vertex {
    pub fn new(dim: usize, bits: u64) -> Result<Self> {
        if dim == 0 || dim > MAX_SAMPLING_DIM {
            return Err(Error::InvalidVertex(format!(
                "dimension must be in 1..={MAX_SAMPLING_DIM}, got {dim}"
            )));
        }
        if bits >> dim != 0 {
            return Err(Error::InvalidVertex(format!(
                "bits {bits:#x} do not fit in {dim} coordinates"
            )));
        }
        Ok(Self {
            bits,
            dim: dim as u8,
        })
    }

    /// Callers guarantee `1 <= dim <= 62` and `bits < 2^dim`.
    pub(crate) fn from_raw(dim: usize, bits: u64) -> Self {
        debug_assert!(dim >= 1 && dim <= MAX_SAMPLING_DIM && bits >> dim == 0);
        Self {
            bits,
            dim: dim as u8,
        }
    }

    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, 0)
    }

    pub fn ones(dim: usize) -> Result<Self> {
        Self::new(dim, 0)?;
        Self::new(dim, low_mask(dim))
    }

    pub fn from_coords(coords: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for (j, &c) in coords.iter().enumerate() {
            match c {
                0 => {}
                1 => bits |= 1 << j,
                other => {
                    return Err(Error::InvalidVertex(format!(
                        "coordinate {} is {other}, expected 0 or 1",
                        j + 1
                    )))
                }
            }
        }
        Self::new(coords.len(), bits)
    }

    /// Parses a bitstring such as `"0110"`.
    pub fn parse(s: &str) -> Result<Self> {
        let coords = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(Error::InvalidVertex(format!(
                    "unexpected character {other:?} in bitstring {s:?}"
                ))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_coords(&coords)
    }

    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    /// Position of this vertex in a dense table of length `2^d`.
    pub fn index(&self) -> usize {
        self.bits as usize
    }

    /// Coordinate `i` in `1..=d`.
    pub fn coord(&self, i: usize) -> u8 {
        assert!(i >= 1 && i <= self.dim(), "coordinate {i} out of range");
        ((self.bits >> (i - 1)) & 1) as u8
    }

    pub fn flip(&self, i: usize) -> Vertex {
        assert!(i >= 1 && i <= self.dim(), "coordinate {i} out of range");
        Self::from_raw(self.dim(), self.bits ^ (1 << (i - 1)))
    }

    pub fn coords(&self) -> Vec<u8> {
        (1..=self.dim()).map(|i| self.coord(i)).collect()
    }

    pub fn to_bitstring(&self) -> String {
        (1..=self.dim())
            .map(|i| if self.coord(i) == 1 { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Vertex({})", self.to_bitstring())
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl Serialize for Vertex {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for Vertex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Vertex::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub(crate) fn low_mask(dim: usize) -> u64 {
    if dim >= 64 {
        u64::MAX
    } else {
        (1u64 << dim) - 1
    }
}

pub fn hamming_weight(x: Vertex) -> usize {
    x.bits.count_ones() as usize
}

pub fn hamming_distance(x: Vertex, y: Vertex) -> Result<usize> {
    if x.dim != y.dim {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            actual: y.dim(),
        });
    }
    Ok((x.bits ^ y.bits).count_ones() as usize)
}

/// An edge `{base, base + e_i}` where `base` has coordinate `i` equal to 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    base: Vertex,
    dimension: usize,
}

impl Edge {
    pub fn new(base: Vertex, dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > base.dim() {
            return Err(Error::InvalidEdge(format!(
                "dimension {dimension} outside 1..={}",
                base.dim()
            )));
        }
        if base.coord(dimension) != 0 {
            return Err(Error::InvalidEdge(format!(
                "base vertex {base} has coordinate {dimension} set"
            )));
        }
        Ok(Self { base, dimension })
    }

    /// The dimension-`i` edge through `v`, whichever endpoint `v` is.
    pub fn through(v: Vertex, dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > v.dim() {
            return Err(Error::InvalidEdge(format!(
                "dimension {dimension} outside 1..={}",
                v.dim()
            )));
        }
        let base = if v.coord(dimension) == 1 {
            v.flip(dimension)
        } else {
            v
        };
        Ok(Self { base, dimension })
    }

    /// The edge joining two vertices at Hamming distance 1.
    pub fn between(x: Vertex, y: Vertex) -> Result<Self> {
        let dist = hamming_distance(x, y)?;
        if dist != 1 {
            return Err(Error::InvalidEdge(format!(
                "{x} and {y} are at Hamming distance {dist}"
            )));
        }
        let dimension = (x.bits ^ y.bits).trailing_zeros() as usize + 1;
        Edge::through(x, dimension)
    }

    pub(crate) fn from_raw(base: Vertex, dimension: usize) -> Self {
        debug_assert!(base.coord(dimension) == 0);
        Self { base, dimension }
    }

    pub fn base(&self) -> Vertex {
        self.base
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// Endpoint with coordinate `i` = 0 first, coordinate `i` = 1 second.
    pub fn endpoints(&self) -> (Vertex, Vertex) {
        (self.base, self.base.flip(self.dimension))
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (x, y) = self.endpoints();
        write!(f, "{{{x},{y}}}@{}", self.dimension)
    }
}

impl Serialize for Edge {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let (x, y) = self.endpoints();
        let mut st = s.serialize_struct("Edge", 2)?;
        st.serialize_field("dimension", &self.dimension)?;
        st.serialize_field("endpoints", &[x, y])?;
        st.end()
    }
}

pub fn edge_endpoints(e: Edge) -> (Vertex, Vertex) {
    e.endpoints()
}

pub(crate) fn check_exhaustive(d: usize, what: &'static str) -> Result<()> {
    if d == 0 {
        return Err(Error::InvalidVertex("dimension must be positive".into()));
    }
    if d > MAX_EXHAUSTIVE_DIM {
        return Err(Error::DimensionCap {
            d,
            cap: MAX_EXHAUSTIVE_DIM,
            what,
        });
    }
    Ok(())
}

/// All `2^d` vertices in index order.
pub fn vertices(d: usize) -> Result<impl Iterator<Item = Vertex>> {
    check_exhaustive(d, "vertex enumeration")?;
    Ok((0..1u64 << d).map(move |b| Vertex::from_raw(d, b)))
}

/// The `2^(d-1)` edges along one dimension, in lexicographic base order.
pub fn dimension_edges(d: usize, dimension: usize) -> Result<impl Iterator<Item = Edge>> {
    check_exhaustive(d, "edge enumeration")?;
    if dimension == 0 || dimension > d {
        return Err(Error::InvalidEdge(format!(
            "dimension {dimension} outside 1..={d}"
        )));
    }
    let bit = 1u64 << (dimension - 1);
    Ok((0..1u64 << d)
        .filter(move |b| b & bit == 0)
        .map(move |b| Edge::from_raw(Vertex::from_raw(d, b), dimension)))
}

/// All `d * 2^(d-1)` edges, grouped by dimension.
pub fn edges(d: usize) -> Result<impl Iterator<Item = Edge>> {
    check_exhaustive(d, "edge enumeration")?;
    Ok((1..=d).flat_map(move |i| dimension_edges(d, i).expect("checked above")))
}

/// A shortest monotone path from `x` to `y`, flipping differing coordinates in
/// increasing order. Returned as the list of traversed edges.
pub fn shortest_path(x: Vertex, y: Vertex) -> Result<Vec<(Vertex, Vertex)>> {
    hamming_distance(x, y)?;
    let mut cur = x;
    let mut steps = Vec::new();
    for i in 1..=x.dim() {
        if cur.coord(i) != y.coord(i) {
            let next = cur.flip(i);
            steps.push((cur, next));
            cur = next;
        }
    }
    Ok(steps)
}
