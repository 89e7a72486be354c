//! One-sided, non-adaptive Lipschitz tester under a product distribution.
//!
//! The run has two phases. First `t = ceil((2/eps) ln(2/omega))` vertices are
//! drawn from the product distribution and their value spread `r` is taken as
//! the sample diameter; `r > d` already proves a violation. Otherwise
//! `ceil((d r / (delta eps)) ln(2/omega))` edges are drawn from the edge
//! distribution and every one is queried. Here `eps = eps' - d^2 delta`.
//!
//! In grid mode the function takes values in `delta * Z` and an edge is
//! violated when its gap exceeds 1. In real mode the threshold is `1 + delta`,
//! which gives a `(1 + delta)`-approximate tester for real-valued functions.
//! Either way a rejection comes with a witness that proves the function is
//! not Lipschitz, so a Lipschitz function is accepted with probability 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{ProductDistribution, SeededRng, GENERATOR};
use crate::error::{Error, Result};
use crate::function::{check_delta, is_grid_multiple, value_gap, FunctionOracle, ValueRange};
use crate::hypercube::{self, Edge, Vertex, MAX_SAMPLING_DIM};

/// Additive guard in every violation comparison.
pub const VIOLATION_GUARD: f64 = 1e-9;

/// Edges are sampled and evaluated in blocks of this size.
const EDGE_BLOCK: usize = 1 << 15;

const VERTEX_STREAM: u64 = 0;
const EDGE_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

impl Verdict {
    pub fn is_yes(self) -> bool {
        self == Verdict::Yes
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum TestMode {
    /// `delta * Z`-valued functions, threshold 1.
    Grid,
    /// Real-valued functions, threshold `1 + delta`.
    Real,
}

/// How a gap is compared against the threshold. Only the strict form is
/// sound; the other exists so the verification suites can be mutation-tested.
#[doc(hidden)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    #[default]
    Strict,
    NonStrict,
}

impl Comparison {
    pub(crate) fn exceeds(self, gap: f64, threshold: f64) -> bool {
        match self {
            Comparison::Strict => gap > threshold + VIOLATION_GUARD,
            Comparison::NonStrict => gap >= threshold - VIOLATION_GUARD,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterConfig {
    pub epsilon_prime: f64,
    pub omega: f64,
    pub delta: f64,
    pub mode: TestMode,
    #[doc(hidden)]
    #[serde(default, skip_serializing_if = "is_strict")]
    pub comparison: Comparison,
}

fn is_strict(c: &Comparison) -> bool {
    *c == Comparison::Strict
}

impl TesterConfig {
    pub fn new(epsilon_prime: f64, omega: f64, delta: f64, mode: TestMode) -> Result<Self> {
        if !(epsilon_prime > 0.0 && epsilon_prime <= 1.0) {
            return Err(Error::param("epsilon_prime", epsilon_prime, "must lie in (0, 1]"));
        }
        if !(omega > 0.0 && omega < 1.0) {
            return Err(Error::param("omega", omega, "must lie in (0, 1)"));
        }
        check_delta(delta)?;
        Ok(Self {
            epsilon_prime,
            omega,
            delta,
            mode,
            comparison: Comparison::Strict,
        })
    }

    /// `eps = eps' - d^2 delta`, which must be positive.
    pub fn effective_epsilon(&self, d: usize) -> Result<f64> {
        let penalty = (d * d) as f64 * self.delta;
        let epsilon = self.epsilon_prime - penalty;
        if epsilon <= 0.0 {
            return Err(Error::Precondition(format!(
                "epsilon_prime <= d^2 * delta ({} <= {d}^2 * {} = {penalty})",
                self.epsilon_prime, self.delta
            )));
        }
        Ok(epsilon)
    }

    pub fn threshold(&self) -> f64 {
        match self.mode {
            TestMode::Grid => 1.0,
            TestMode::Real => 1.0 + self.delta,
        }
    }
}

pub fn required_vertex_samples(epsilon: f64, omega: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param("epsilon", epsilon, "must lie in (0, 1]"));
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::param("omega", omega, "must lie in (0, 1)"));
    }
    Ok(((2.0 / epsilon) * (2.0 / omega).ln()).ceil() as usize)
}

pub fn required_edge_samples(
    d: usize,
    r: f64,
    delta: f64,
    epsilon: f64,
    omega: f64,
) -> Result<usize> {
    if d == 0 {
        return Err(Error::param("d", 0.0, "must be positive"));
    }
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::param("r", r, "must be finite and non-negative"));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param("delta", delta, "must lie in (0, 1]"));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::param("epsilon", epsilon, "must lie in (0, 1]"));
    }
    if !(omega > 0.0 && omega < 1.0) {
        return Err(Error::param("omega", omega, "must lie in (0, 1)"));
    }
    if r == 0.0 {
        return Ok(0);
    }
    Ok(((d as f64 * r / (delta * epsilon)) * (2.0 / omega).ln()).ceil() as usize)
}

/// Sampled values and their spread.
#[derive(Clone, Debug)]
pub struct DiameterSample {
    pub samples: Vec<(Vertex, f64)>,
    /// `max - min`; `+inf` when both `-inf` and a finite value were seen,
    /// 0 when every sample is `-inf`.
    pub r: f64,
    pub argmin: usize,
    pub argmax: usize,
}

pub fn estimate_sample_diameter<F: FunctionOracle + ?Sized>(
    f: &F,
    dist: &ProductDistribution,
    t: usize,
    rng: &mut SeededRng,
) -> Result<DiameterSample> {
    if t == 0 {
        return Err(Error::param("t", 0.0, "need at least one vertex sample"));
    }
    if f.dim() != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            actual: f.dim(),
        });
    }
    let samples: Vec<(Vertex, f64)> = (0..t)
        .map(|_| {
            let x = dist.sample_vertex(rng);
            (x, f.evaluate(x))
        })
        .collect();
    let mut argmin = 0;
    let mut argmax = 0;
    for (k, &(_, v)) in samples.iter().enumerate() {
        if v < samples[argmin].1 {
            argmin = k;
        }
        if v > samples[argmax].1 {
            argmax = k;
        }
    }
    let r = value_gap(samples[argmax].1, samples[argmin].1);
    Ok(DiameterSample {
        samples,
        r,
        argmin,
        argmax,
    })
}

pub fn edge_is_violated<F: FunctionOracle + ?Sized>(f: &F, e: Edge, threshold: f64) -> bool {
    edge_violated_with(f, e, threshold, Comparison::Strict).0
}

fn edge_violated_with<F: FunctionOracle + ?Sized>(
    f: &F,
    e: Edge,
    threshold: f64,
    comparison: Comparison,
) -> (bool, f64, f64) {
    let (x, y) = e.endpoints();
    let (a, b) = (f.evaluate(x), f.evaluate(y));
    (comparison.exceeds(value_gap(a, b), threshold), a, b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// Two sampled vertices whose values differ by more than `d`.
    Diameter,
    /// A sampled edge whose gap exceeds the threshold.
    Edge,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeEvidence {
    pub edge: Edge,
    #[serde(with = "crate::ext_real::pair")]
    pub values: (f64, f64),
    #[serde(with = "crate::ext_real")]
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ViolationWitness {
    pub kind: WitnessKind,
    pub pair: (Vertex, Vertex),
    #[serde(with = "crate::ext_real::pair")]
    pub values: (f64, f64),
    #[serde(with = "crate::ext_real")]
    pub gap: f64,
    pub threshold: f64,
    /// For a diameter witness: the largest-gap edge on a shortest path
    /// between the pair. For an edge witness: the edge itself.
    pub edge: EdgeEvidence,
}

impl ViolationWitness {
    /// Re-queries `f` and confirms the recorded evidence.
    pub fn recheck<F: FunctionOracle + ?Sized>(&self, f: &F) -> bool {
        let (x, y) = self.pair;
        let (a, b) = (f.evaluate(x), f.evaluate(y));
        let gap = value_gap(a, b);
        let pair_ok = same(a, self.values.0)
            && same(b, self.values.1)
            && gap > self.threshold + VIOLATION_GUARD;
        let (u, v) = self.edge.edge.endpoints();
        let edge_gap = value_gap(f.evaluate(u), f.evaluate(v));
        let edge_threshold = match self.kind {
            WitnessKind::Edge => self.threshold,
            WitnessKind::Diameter => 1.0,
        };
        let edge_ok = edge_gap > edge_threshold;
        let shape_ok = match self.kind {
            WitnessKind::Edge => hypercube::hamming_distance(x, y).ok() == Some(1),
            WitnessKind::Diameter => true,
        };
        pair_ok && edge_ok && shape_ok
    }
}

fn same(a: f64, b: f64) -> bool {
    a == b || (a.is_nan() && b.is_nan())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct QueryCounts {
    /// Queries made by the sampling phases: `t + 2 * edge_samples`.
    pub sampling: usize,
    /// Extra queries spent building a diameter witness.
    pub witness: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TesterReport {
    pub verdict: Verdict,
    pub mode: TestMode,
    pub threshold: f64,
    pub epsilon: f64,
    pub vertex_samples: usize,
    pub edge_samples: usize,
    #[serde(with = "crate::ext_real")]
    pub sample_diameter: f64,
    pub queries: QueryCounts,
    pub witness: Option<ViolationWitness>,
    pub seed: u64,
    pub stream: u64,
    pub generator: &'static str,
}

fn check_range<F: FunctionOracle + ?Sized>(f: &F, cfg: &TesterConfig) -> Result<()> {
    if cfg.mode == TestMode::Real {
        return Ok(());
    }
    match f.range() {
        ValueRange::Real => Err(Error::RangeMismatch(
            "grid mode needs a delta-grid valued function; use real mode".into(),
        )),
        ValueRange::DeltaGrid { delta } => {
            let ratio = delta / cfg.delta;
            if (ratio - ratio.round()).abs() > 1e-9 || ratio.round() < 1.0 {
                Err(Error::RangeMismatch(format!(
                    "function grid {delta} is not a multiple of tester delta {}",
                    cfg.delta
                )))
            } else {
                Ok(())
            }
        }
    }
}

fn check_on_grid(x: Vertex, v: f64, cfg: &TesterConfig) -> Result<()> {
    if cfg.mode == TestMode::Grid && !is_grid_multiple(v, cfg.delta) {
        return Err(Error::OffGrid {
            vertex: x.to_bitstring(),
            value: v,
            delta: cfg.delta,
        });
    }
    Ok(())
}

/// Runs the tester. `rng` names the stream family: vertices are drawn from
/// `rng.split(0)` and edges from `rng.split(1)`, so the queried vertices
/// depend only on the seed, the configuration and the sample diameter.
pub fn test_lipschitz<F: FunctionOracle + ?Sized>(
    f: &F,
    dist: &ProductDistribution,
    cfg: &TesterConfig,
    rng: &SeededRng,
) -> Result<TesterReport> {
    let d = f.dim();
    if d > MAX_SAMPLING_DIM {
        return Err(Error::DimensionCap {
            d,
            cap: MAX_SAMPLING_DIM,
            what: "sampling tester",
        });
    }
    if d != dist.dim() {
        return Err(Error::DimensionMismatch {
            expected: dist.dim(),
            actual: d,
        });
    }
    check_range(f, cfg)?;
    let epsilon = cfg.effective_epsilon(d)?;
    let threshold = cfg.threshold();
    let t = required_vertex_samples(epsilon, cfg.omega)?;

    let mut vertex_rng = rng.split(VERTEX_STREAM);
    let diameter = estimate_sample_diameter(f, dist, t, &mut vertex_rng)?;
    for &(x, v) in &diameter.samples {
        check_on_grid(x, v, cfg)?;
    }
    let r = diameter.r;

    let mut report = TesterReport {
        verdict: Verdict::Yes,
        mode: cfg.mode,
        threshold,
        epsilon,
        vertex_samples: t,
        edge_samples: 0,
        sample_diameter: r,
        queries: QueryCounts {
            sampling: t,
            witness: 0,
        },
        witness: None,
        seed: rng.seed(),
        stream: rng.stream(),
        generator: GENERATOR,
    };

    if cfg.comparison.exceeds(r, d as f64) {
        let (witness, extra) = diameter_witness(f, &diameter, d);
        report.verdict = Verdict::No;
        report.witness = Some(witness);
        report.queries.witness = extra;
        return Ok(report);
    }

    let m = required_edge_samples(d, r, cfg.delta, epsilon, cfg.omega)?;
    report.edge_samples = m;
    report.queries.sampling += 2 * m;

    let mut edge_rng = rng.split(EDGE_STREAM);
    let mut first: Option<(Edge, f64, f64)> = None;
    let mut grid_error: Option<Error> = None;
    let mut remaining = m;
    let mut block = Vec::with_capacity(EDGE_BLOCK.min(m));
    while remaining > 0 {
        let n = remaining.min(EDGE_BLOCK);
        block.clear();
        block.extend((0..n).map(|_| dist.sample_edge(&mut edge_rng)));
        let outcomes: Vec<(bool, f64, f64)> = block
            .par_iter()
            .map(|&e| edge_violated_with(f, e, threshold, cfg.comparison))
            .collect();
        for (&e, &(violated, a, b)) in block.iter().zip(&outcomes) {
            if grid_error.is_none() {
                let (x, y) = e.endpoints();
                if let Err(err) = check_on_grid(x, a, cfg).and(check_on_grid(y, b, cfg)) {
                    grid_error = Some(err);
                }
            }
            if violated && first.is_none() {
                first = Some((e, a, b));
            }
        }
        remaining -= n;
    }
    if let Some(err) = grid_error {
        return Err(err);
    }

    if let Some((e, a, b)) = first {
        let gap = value_gap(a, b);
        report.verdict = Verdict::No;
        report.witness = Some(ViolationWitness {
            kind: WitnessKind::Edge,
            pair: e.endpoints(),
            values: (a, b),
            gap,
            threshold,
            edge: EdgeEvidence {
                edge: e,
                values: (a, b),
                gap,
            },
        });
    }
    Ok(report)
}

/// Walks a shortest path from the lowest to the highest sampled vertex and
/// keeps the largest-gap edge. The path has at most `d` edges and its gaps sum
/// to more than `d`, so that edge has gap above 1.
fn diameter_witness<F: FunctionOracle + ?Sized>(
    f: &F,
    sample: &DiameterSample,
    d: usize,
) -> (ViolationWitness, usize) {
    let (lo, lo_val) = sample.samples[sample.argmin];
    let (hi, hi_val) = sample.samples[sample.argmax];
    let path = hypercube::shortest_path(lo, hi).expect("same dimension");
    let mut queries = 0;
    let mut prev_val = lo_val;
    let mut best: Option<EdgeEvidence> = None;
    for (k, &(a, b)) in path.iter().enumerate() {
        let b_val = if k + 1 == path.len() {
            hi_val
        } else {
            queries += 1;
            f.evaluate(b)
        };
        let gap = value_gap(prev_val, b_val);
        if best.as_ref().is_none_or(|ev| gap > ev.gap) {
            best = Some(EdgeEvidence {
                edge: Edge::between(a, b).expect("path steps are edges"),
                values: (prev_val, b_val),
                gap,
            });
        }
        prev_val = b_val;
    }
    let witness = ViolationWitness {
        kind: WitnessKind::Diameter,
        pair: (lo, hi),
        values: (lo_val, hi_val),
        gap: sample.r,
        threshold: d as f64,
        edge: best.expect("r > d implies distinct endpoints"),
    };
    (witness, queries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{DenseFunction, HammingWeight, ScaledDictator};

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn vertex_sample_counts() {
        assert_eq!(required_vertex_samples(0.5, 0.5).unwrap(), 6);
        assert_eq!(required_vertex_samples(1.0, 0.9).unwrap(), 2);
        assert_eq!(required_vertex_samples(0.1, 0.1).unwrap(), 60);
        assert!(required_vertex_samples(1.0, 1.0).is_err());
        assert!(required_vertex_samples(0.0, 0.5).is_err());
    }

    #[test]
    fn edge_sample_counts() {
        assert_eq!(required_edge_samples(1, 1.0, 0.5, 0.5, 0.5).unwrap(), 6);
        assert_eq!(required_edge_samples(3, 0.0, 0.5, 0.5, 0.5).unwrap(), 0);
        assert_eq!(required_edge_samples(10, 10.0, 0.1, 0.1, 0.1).unwrap(), 29958);
        assert!(required_edge_samples(3, -1.0, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn violation_checks() {
        let hw = HammingWeight { d: 3 };
        for e in hypercube::edges(3).unwrap() {
            assert!(!edge_is_violated(&hw, e, 1.0));
        }
        let f = ScaledDictator { d: 2, k: 2.0 };
        assert!(edge_is_violated(&f, Edge::new(v("00"), 1).unwrap(), 1.0));
        let g = ScaledDictator { d: 2, k: 1.0 };
        assert!(!edge_is_violated(&g, Edge::new(v("00"), 1).unwrap(), 1.0));
    }

    #[test]
    fn infinite_values() {
        let f = DenseFunction::new(2, vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 0.0, -0.5])
            .unwrap();
        assert!(!edge_is_violated(&f, Edge::new(v("00"), 1).unwrap(), 1.0));
        assert!(edge_is_violated(&f, Edge::new(v("00"), 2).unwrap(), 1.0));
    }

    #[test]
    fn constant_has_zero_diameter() {
        let f = crate::function::Constant { d: 4, c: 2.5 };
        let dist = ProductDistribution::uniform(4).unwrap();
        let s = estimate_sample_diameter(&f, &dist, 10, &mut SeededRng::new(1)).unwrap();
        assert_eq!(s.r, 0.0);
    }

    #[test]
    fn dictator_diameter_with_both_levels() {
        let f = ScaledDictator { d: 2, k: 2.0 };
        let dist = ProductDistribution::uniform(2).unwrap();
        let mut found = false;
        for seed in 0..20 {
            let s = estimate_sample_diameter(&f, &dist, 6, &mut SeededRng::new(seed)).unwrap();
            let levels: std::collections::BTreeSet<u8> =
                s.samples.iter().map(|(x, _)| x.coord(1)).collect();
            if levels.len() == 2 {
                assert_eq!(s.r, 2.0);
                found = true;
            } else {
                assert_eq!(s.r, 0.0);
            }
        }
        assert!(found);
    }

    #[test]
    fn mixed_infinite_samples_have_infinite_diameter() {
        let f = DenseFunction::new(1, vec![f64::NEG_INFINITY, 0.0]).unwrap();
        let dist = ProductDistribution::uniform(1).unwrap();
        let s = estimate_sample_diameter(&f, &dist, 40, &mut SeededRng::new(2)).unwrap();
        assert_eq!(s.r, f64::INFINITY);
    }

    #[test]
    fn precondition_names_inequality() {
        let cfg = TesterConfig::new(0.1, 0.1, 0.05, TestMode::Grid).unwrap();
        let f = HammingWeight { d: 2 };
        let dist = ProductDistribution::uniform(2).unwrap();
        let err = test_lipschitz(&f, &dist, &cfg, &SeededRng::new(0)).unwrap_err();
        assert!(err.to_string().contains("epsilon_prime <= d^2 * delta"), "{err}");
        assert!(TesterConfig::new(0.5, 0.1, 0.3, TestMode::Grid).is_err());
    }

    #[test]
    fn hamming_weight_accepted() {
        let f = HammingWeight { d: 4 };
        let dist = ProductDistribution::new(vec![0.1, 0.5, 0.7, 0.95]).unwrap();
        let cfg = TesterConfig::new(0.3, 0.1, 0.01, TestMode::Grid).unwrap();
        for seed in 0..5 {
            let rep = test_lipschitz(&f, &dist, &cfg, &SeededRng::new(seed)).unwrap();
            assert_eq!(rep.verdict, Verdict::Yes);
            assert!(rep.witness.is_none());
        }
    }

    #[test]
    fn single_edge_violation_rejected() {
        let f = DenseFunction::on_grid(1, vec![0.0, 2.0], 0.5).unwrap();
        let dist = ProductDistribution::uniform(1).unwrap();
        let cfg = TesterConfig::new(0.6, 0.25, 0.5, TestMode::Grid).unwrap();
        for seed in 0..20 {
            let rep = test_lipschitz(&f, &dist, &cfg, &SeededRng::new(seed)).unwrap();
            assert_eq!(rep.verdict, Verdict::No);
            let w = rep.witness.unwrap();
            assert!(w.recheck(&f));
            assert_eq!(w.edge.edge, Edge::new(v("0"), 1).unwrap());
        }
    }

    #[test]
    fn grid_mode_rejects_real_functions() {
        let f = ScaledDictator { d: 2, k: 0.5 };
        let dist = ProductDistribution::uniform(2).unwrap();
        let cfg = TesterConfig::new(0.5, 0.1, 0.1, TestMode::Grid).unwrap();
        assert!(matches!(
            test_lipschitz(&f, &dist, &cfg, &SeededRng::new(0)),
            Err(Error::RangeMismatch(_))
        ));
    }

    #[test]
    fn diameter_rejection_produces_path_witness() {
        let d = 3;
        let f = DenseFunction::from_fn(d, |x| 2.0 * hypercube::hamming_weight(x) as f64).unwrap();
        let f = DenseFunction::on_grid(d, f.into_values(), 1.0).unwrap();
        let dist = ProductDistribution::uniform(d).unwrap();
        let cfg = TesterConfig::new(1.0, 0.01, 0.1, TestMode::Grid).unwrap();
        let mut saw_diameter = false;
        for seed in 0..50 {
            let rep = test_lipschitz(&f, &dist, &cfg, &SeededRng::new(seed)).unwrap();
            assert_eq!(rep.verdict, Verdict::No);
            let w = rep.witness.as_ref().unwrap();
            assert!(w.recheck(&f));
            if w.kind == WitnessKind::Diameter {
                saw_diameter = true;
                assert!(w.gap > 3.0);
                assert!(w.edge.gap > 1.0);
                assert_eq!(rep.edge_samples, 0);
            }
        }
        assert!(saw_diameter);
    }

    #[test]
    fn nonstrict_comparison_flags_unit_gaps() {
        let f = HammingWeight { d: 2 };
        let e = Edge::new(v("00"), 1).unwrap();
        assert!(!edge_violated_with(&f, e, 1.0, Comparison::Strict).0);
        assert!(edge_violated_with(&f, e, 1.0, Comparison::NonStrict).0);
    }
}
