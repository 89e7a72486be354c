//! Auditing generalized differential privacy through Lipschitz testing.
//!
//! A mechanism is `alpha`-DP exactly when, for every output `o`, the function
//! `lambda_o(D) = ln(prob(D, o)) / alpha` is 1-Lipschitz in Hamming distance.
//! [`gdp_test`] runs the real-valued tester on every `lambda_o` with proximity
//! `beta/|Γ|` and failure probability `gamma/|Γ|`:
//!
//! * a NO comes with two neighbouring datasets whose output probabilities
//!   differ by more than `e^alpha`, so the mechanism is not `alpha`-DP;
//! * a YES means that, with probability at least `1 - gamma`, the mechanism is
//!   `(alpha (1 + delta), 0, beta)`-GDP.
//!
//! [`priv_gen`] wraps a candidate mechanism: it releases `A(D)` only when the
//! audit says YES, and `FAILURE` otherwise.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::{ProductDistribution, SeededRng};
use crate::error::{Error, Result};
use crate::function::{DenseFunction, FunctionOracle, ValueRange};
use crate::hypercube::{self, Edge, Vertex};
use crate::mechanism::MechanismOracle;
use crate::tester::{self, TestMode, TesterConfig, TesterReport, Verdict};

/// Tolerance used when comparing exact log-ratios against `alpha`.
pub const LOG_RATIO_TOLERANCE: f64 = 1e-9;

/// Stream id reserved for the output draw in [`priv_gen`]; per-output tester
/// streams use the output index.
const RELEASE_STREAM: u64 = u64::MAX;

/// `D -> ln(prob(D, o)) / alpha`, evaluated on demand.
pub struct LambdaFunction<'a, M: ?Sized> {
    mech: &'a M,
    output: usize,
    alpha: f64,
}

impl<'a, M: MechanismOracle + ?Sized> LambdaFunction<'a, M> {
    pub fn new(mech: &'a M, output: usize, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::param("alpha", alpha, "must be positive and finite"));
        }
        if output >= mech.outputs().len() {
            return Err(Error::UnknownOutput(format!("#{output}")));
        }
        Ok(Self { mech, output, alpha })
    }
}

fn lambda_value(p: f64, alpha: f64) -> f64 {
    if p <= 0.0 {
        f64::NEG_INFINITY
    } else {
        p.ln() / alpha
    }
}

impl<M: MechanismOracle + ?Sized> FunctionOracle for LambdaFunction<'_, M> {
    fn dim(&self) -> usize {
        self.mech.dim()
    }
    fn evaluate(&self, x: Vertex) -> f64 {
        lambda_value(self.mech.prob(x, self.output), self.alpha)
    }
    fn range(&self) -> ValueRange {
        ValueRange::Real
    }
}

/// `lambda_o` materialized over the whole cube.
#[derive(Clone, Debug)]
pub struct LambdaTable {
    pub output: String,
    pub alpha: f64,
    pub values: DenseFunction,
}

pub fn build_lambda<M: MechanismOracle + ?Sized>(
    mech: &M,
    output: &str,
    alpha: f64,
) -> Result<LambdaTable> {
    let o = mech.output_index(output)?;
    let lambda = LambdaFunction::new(mech, o, alpha)?;
    Ok(LambdaTable {
        output: output.to_string(),
        alpha,
        values: DenseFunction::from_oracle(&lambda)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GdpParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// `None` picks the default `min(0.05, beta / (2 |Γ| d^2))`, with `1/delta`
    /// rounded up to an integer.
    pub delta: Option<f64>,
}

/// Parameters after defaults are filled in, as handed to the tester.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ResolvedGdpParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub epsilon_prime: f64,
    pub omega: f64,
    pub outputs: usize,
}

pub fn default_delta(beta: f64, outputs: usize, d: usize) -> f64 {
    let target = 0.05f64.min(beta / (2.0 * outputs as f64 * (d * d) as f64));
    1.0 / (1.0 / target).ceil()
}

impl GdpParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta: None,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn resolve(&self, d: usize, outputs: usize) -> Result<ResolvedGdpParams> {
        if outputs == 0 {
            return Err(Error::InvalidMechanism("output set is empty".into()));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::param("alpha", self.alpha, "must be positive and finite"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::param("beta", self.beta, "must lie in (0, 1]"));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::param("gamma", self.gamma, "must lie in (0, 1]"));
        }
        let delta = self
            .delta
            .unwrap_or_else(|| default_delta(self.beta, outputs, d));
        let k = outputs as f64;
        let epsilon_prime = self.beta / k;
        let omega = self.gamma / k;
        let penalty = (d * d) as f64 * delta;
        if epsilon_prime - penalty <= 0.0 {
            return Err(Error::Precondition(format!(
                "beta/|Γ| <= d^2 * delta ({} / {outputs} <= {d}^2 * {delta} = {penalty})",
                self.beta
            )));
        }
        Ok(ResolvedGdpParams {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            delta,
            epsilon_prime,
            omega,
            outputs,
        })
    }
}

impl ResolvedGdpParams {
    pub fn tester_config(&self) -> Result<TesterConfig> {
        TesterConfig::new(self.epsilon_prime, self.omega, self.delta, TestMode::Real)
    }
}

/// Two neighbouring datasets and an output whose probabilities differ by more
/// than the audited factor. `dataset` is the side with the larger probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrivacyWitness {
    pub dataset: Vertex,
    pub neighbor: Vertex,
    pub output: String,
    pub probabilities: (f64, f64),
    #[serde(with = "crate::ext_real")]
    pub ratio: f64,
    #[serde(with = "crate::ext_real")]
    pub log_ratio: f64,
}

impl PrivacyWitness {
    fn from_pair<M: MechanismOracle + ?Sized>(mech: &M, edge: Edge, output: usize) -> Self {
        let (x, y) = edge.endpoints();
        let (px, py) = (mech.prob(x, output), mech.prob(y, output));
        let ((dataset, hi), (neighbor, lo)) = if px >= py {
            ((x, px), (y, py))
        } else {
            ((y, py), (x, px))
        };
        let ratio = if lo == 0.0 { f64::INFINITY } else { hi / lo };
        let log_ratio = if lo == 0.0 {
            f64::INFINITY
        } else {
            hi.ln() - lo.ln()
        };
        Self {
            dataset,
            neighbor,
            output: mech.outputs()[output].clone(),
            probabilities: (hi, lo),
            ratio,
            log_ratio,
        }
    }

    /// Re-queries the mechanism: the pair are neighbours and
    /// `prob(D, o) > e^alpha prob(D', o)`.
    pub fn recheck<M: MechanismOracle + ?Sized>(&self, mech: &M, alpha: f64) -> bool {
        let Ok(o) = mech.output_index(&self.output) else {
            return false;
        };
        let neighbours = hypercube::hamming_distance(self.dataset, self.neighbor).ok() == Some(1);
        let (hi, lo) = (mech.prob(self.dataset, o), mech.prob(self.neighbor, o));
        neighbours && hi > alpha.exp() * lo
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GdpGuarantee {
    /// Privacy loss `alpha (1 + delta)`.
    pub alpha: f64,
    /// Additive slack; always 0 for the audited mechanism itself.
    pub gamma: f64,
    /// Mass bound of the excluded dataset set.
    pub beta: f64,
    /// Probability over the tester's coins that the guarantee holds.
    pub confidence: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputReport {
    pub output: String,
    pub report: TesterReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrivacyVerdict {
    pub verdict: Verdict,
    pub params: ResolvedGdpParams,
    pub per_output_reports: Vec<OutputReport>,
    pub witness: Option<PrivacyWitness>,
    pub guarantee: Option<GdpGuarantee>,
}

/// Audits `mech` against `(alpha, beta, gamma)`. Output `k` is tested with
/// the stream family `rng.split(k)`; outputs may be tested in parallel and the
/// result does not depend on scheduling.
pub fn gdp_test<M: MechanismOracle + ?Sized>(
    mech: &M,
    dist: &ProductDistribution,
    params: &GdpParams,
    rng: &SeededRng,
) -> Result<PrivacyVerdict> {
    let d = mech.dim();
    if dist.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: dist.dim(),
        });
    }
    let outputs = mech.outputs().len();
    let resolved = params.resolve(d, outputs)?;
    let cfg = resolved.tester_config()?;

    let reports = (0..outputs)
        .into_par_iter()
        .map(|o| {
            let lambda = LambdaFunction::new(mech, o, resolved.alpha)?;
            tester::test_lipschitz(&lambda, dist, &cfg, &rng.split(o as u64))
        })
        .collect::<Result<Vec<TesterReport>>>()?;

    let witness = reports.iter().enumerate().find_map(|(o, rep)| {
        rep.witness
            .as_ref()
            .map(|w| PrivacyWitness::from_pair(mech, w.edge.edge, o))
    });
    let verdict = if witness.is_some() {
        Verdict::No
    } else {
        Verdict::Yes
    };
    let guarantee = verdict.is_yes().then(|| GdpGuarantee {
        alpha: resolved.alpha * (1.0 + resolved.delta),
        gamma: 0.0,
        beta: resolved.beta,
        confidence: 1.0 - resolved.gamma,
    });
    Ok(PrivacyVerdict {
        verdict,
        params: resolved,
        per_output_reports: reports
            .into_iter()
            .enumerate()
            .map(|(o, report)| OutputReport {
                output: mech.outputs()[o].clone(),
                report,
            })
            .collect(),
        witness,
        guarantee,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Release {
    Output(String),
    Failure,
}

#[derive(Clone, Debug, Serialize)]
pub struct PrivGenOutcome {
    pub release: Release,
    pub audit: PrivacyVerdict,
}

/// Draws one output of `mech` on `dataset` using inverse-CDF sampling.
pub fn sample_output<M: MechanismOracle + ?Sized, R: Rng + ?Sized>(
    mech: &M,
    dataset: Vertex,
    rng: &mut R,
) -> usize {
    let u: f64 = rng.random();
    let k = mech.outputs().len();
    let mut acc = 0.0;
    for o in 0..k {
        acc += mech.prob(dataset, o);
        if u < acc {
            return o;
        }
    }
    // Rounding left a sliver above the last cumulative sum.
    (0..k).rev().find(|&o| mech.prob(dataset, o) > 0.0).unwrap_or(k - 1)
}

/// Releases `A(dataset)` when the audit accepts and `FAILURE` otherwise. The
/// audit never looks at `dataset`, so the failure event is data-independent.
pub fn priv_gen<M: MechanismOracle + ?Sized>(
    mech: &M,
    dataset: Vertex,
    dist: &ProductDistribution,
    params: &GdpParams,
    rng: &SeededRng,
) -> Result<PrivGenOutcome> {
    if dataset.dim() != mech.dim() {
        return Err(Error::DimensionMismatch {
            expected: mech.dim(),
            actual: dataset.dim(),
        });
    }
    let audit = gdp_test(mech, dist, params, rng)?;
    let release = if audit.verdict.is_yes() {
        let o = sample_output(mech, dataset, &mut rng.split(RELEASE_STREAM));
        Release::Output(mech.outputs()[o].clone())
    } else {
        Release::Failure
    };
    Ok(PrivGenOutcome { release, audit })
}

#[derive(Clone, Debug, Serialize)]
pub struct DpCheck {
    pub private: bool,
    pub alpha: f64,
    /// Largest `|ln prob(D, o) - ln prob(D', o)|` over neighbours and outputs.
    #[serde(with = "crate::ext_real")]
    pub max_log_ratio: f64,
    #[serde(with = "crate::ext_real")]
    pub max_ratio: f64,
    /// The arg-max pair, when some pair has a positive log-ratio.
    pub witness: Option<PrivacyWitness>,
}

/// Checks `prob(D, o) <= e^alpha prob(D', o)` for every neighbouring pair and
/// output, `d <= 20`. Pairs where both probabilities vanish are ignored.
pub fn dp_check_exhaustive<M: MechanismOracle + ?Sized>(mech: &M, alpha: f64) -> Result<DpCheck> {
    if !(alpha >= 0.0) {
        return Err(Error::param("alpha", alpha, "must be non-negative"));
    }
    let d = mech.dim();
    hypercube::check_exhaustive(d, "exhaustive DP check")?;
    let k = mech.outputs().len();
    let mut best: Option<(f64, Edge, usize)> = None;
    for e in hypercube::edges(d)? {
        let (x, y) = e.endpoints();
        for o in 0..k {
            let (px, py) = (mech.prob(x, o), mech.prob(y, o));
            let (hi, lo) = if px >= py { (px, py) } else { (py, px) };
            if hi == 0.0 {
                continue;
            }
            let lr = if lo == 0.0 {
                f64::INFINITY
            } else {
                hi.ln() - lo.ln()
            };
            if best.is_none_or(|(b, _, _)| lr > b) {
                best = Some((lr, e, o));
            }
        }
    }
    let (max_log_ratio, witness) = match best {
        Some((lr, e, o)) if lr > 0.0 => (lr, Some(PrivacyWitness::from_pair(mech, e, o))),
        _ => (0.0, None),
    };
    Ok(DpCheck {
        private: max_log_ratio <= alpha + LOG_RATIO_TOLERANCE,
        alpha,
        max_log_ratio,
        max_ratio: max_log_ratio.exp(),
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{DeterministicProjection, RandomizedResponse, TableMechanism};

    fn v(s: &str) -> Vertex {
        Vertex::parse(s).unwrap()
    }

    #[test]
    fn lambda_of_constant_mechanism() {
        let m = TableMechanism::new(
            2,
            vec!["a".into(), "b".into()],
            vec![vec![0.3, 0.7]; 4],
        )
        .unwrap();
        let t = build_lambda(&m, "a", 2.0).unwrap();
        for x in hypercube::vertices(2).unwrap() {
            assert!((t.values.get(x) - 0.3f64.ln() / 2.0).abs() < 1e-15);
        }
        assert!(build_lambda(&m, "c", 2.0).is_err());
        assert!(build_lambda(&m, "a", 0.0).is_err());
    }

    #[test]
    fn lambda_of_randomized_response() {
        let m = RandomizedResponse::new(1, 0.25).unwrap();
        let t = build_lambda(&m, "0", 1.2).unwrap();
        assert!((t.values.get(v("0")) - (-0.2397)).abs() < 5e-5);
        assert!((t.values.get(v("1")) - (-1.1552)).abs() < 5e-5);
    }

    #[test]
    fn lambda_of_zero_probability() {
        let m = DeterministicProjection::new(2, 1).unwrap();
        let t = build_lambda(&m, "1", 1.0).unwrap();
        assert_eq!(t.values.get(v("00")), f64::NEG_INFINITY);
        assert_eq!(t.values.get(v("10")), 0.0);
    }

    #[test]
    fn default_delta_has_integer_reciprocal() {
        let delta = default_delta(0.5, 3, 2);
        assert!(delta <= 0.5 / 24.0);
        assert!(((1.0 / delta) - (1.0 / delta).round()).abs() < 1e-9);
        assert_eq!(default_delta(1.0, 1, 1), 0.05);
    }

    #[test]
    fn resolve_rejects_tight_budgets() {
        let err = GdpParams::new(1.0, 0.1, 0.1)
            .with_delta(0.05)
            .resolve(2, 2)
            .unwrap_err();
        assert!(err.to_string().contains("beta/|Γ| <= d^2 * delta"), "{err}");
        assert!(GdpParams::new(1.0, 0.5, 0.1).resolve(2, 0).is_err());
        assert!(GdpParams::new(-1.0, 0.5, 0.1).resolve(2, 2).is_err());
    }

    #[test]
    fn randomized_response_audit() {
        let m = RandomizedResponse::new(1, 0.25).unwrap();
        let dist = ProductDistribution::uniform(1).unwrap();
        let yes = gdp_test(
            &m,
            &dist,
            &GdpParams::new(1.2, 0.5, 0.1).with_delta(0.05),
            &SeededRng::new(7),
        )
        .unwrap();
        assert_eq!(yes.verdict, Verdict::Yes);
        let g = yes.guarantee.unwrap();
        assert!((g.alpha - 1.26).abs() < 1e-12);

        let no = gdp_test(
            &m,
            &dist,
            &GdpParams::new(1.0, 0.5, 0.1).with_delta(0.05),
            &SeededRng::new(7),
        )
        .unwrap();
        assert_eq!(no.verdict, Verdict::No);
        let w = no.witness.unwrap();
        assert!((w.ratio - 3.0).abs() < 1e-9);
        assert!(w.recheck(&m, 1.0));
        assert!(no.guarantee.is_none());
    }

    #[test]
    fn projection_audit_finds_infinite_ratio() {
        let m = DeterministicProjection::new(2, 1).unwrap();
        let dist = ProductDistribution::uniform(2).unwrap();
        let out = gdp_test(&m, &dist, &GdpParams::new(1.0, 0.5, 0.1), &SeededRng::new(1)).unwrap();
        assert_eq!(out.verdict, Verdict::No);
        let w = out.witness.unwrap();
        assert_eq!(w.ratio, f64::INFINITY);
        assert!(w.recheck(&m, 1.0));
        assert!(!dp_check_exhaustive(&m, 5.0).unwrap().private);
    }

    #[test]
    fn exhaustive_check_examples() {
        let c = TableMechanism::new(1, vec!["a".into()], vec![vec![1.0]; 2]).unwrap();
        let chk = dp_check_exhaustive(&c, 0.0).unwrap();
        assert!(chk.private);
        assert_eq!(chk.max_ratio, 1.0);

        let rr = RandomizedResponse::new(1, 0.25).unwrap();
        let chk = dp_check_exhaustive(&rr, 1.0).unwrap();
        assert!(!chk.private);
        assert!((chk.max_ratio - 3.0).abs() < 1e-12);
        assert!(dp_check_exhaustive(&rr, 3f64.ln()).unwrap().private);
        assert!(dp_check_exhaustive(&rr, 1.2 * 1.05).unwrap().private);
    }

    #[test]
    fn failure_is_data_independent() {
        let m = RandomizedResponse::new(1, 0.25).unwrap();
        let dist = ProductDistribution::uniform(1).unwrap();
        let params = GdpParams::new(1.0, 0.5, 0.1).with_delta(0.05);
        let a = priv_gen(&m, v("0"), &dist, &params, &SeededRng::new(3)).unwrap();
        let b = priv_gen(&m, v("1"), &dist, &params, &SeededRng::new(3)).unwrap();
        assert_eq!(a.release, Release::Failure);
        assert_eq!(b.release, Release::Failure);
        assert_eq!(a.audit.verdict, b.audit.verdict);
    }

    #[test]
    fn sampling_follows_row() {
        let m = RandomizedResponse::new(1, 0.25).unwrap();
        let mut rng = SeededRng::new(8);
        let n = 40_000;
        let zeros = (0..n).filter(|_| sample_output(&m, v("0"), &mut rng) == 0).count();
        assert!((zeros as f64 / n as f64 - 0.75).abs() < 0.01);
    }
}
