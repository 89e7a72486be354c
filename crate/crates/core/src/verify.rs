//! Property suites behind `verify-repair` and `verify-all`.
//!
//! Every suite draws its instances from a seeded generator, counts the
//! checks it performs and the ones that fail, and keeps the first failure as
//! a human-readable note. Results contain no timings, so a summary is a pure
//! function of its options.

use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::distribution::{ProductDistribution, SeededRng};
use crate::error::Result;
use crate::function::{DenseFunction, ScaledDictator};
use crate::hypercube::{self, Vertex};
use crate::instances;
use crate::mechanism::TruncatedGeometric;
use crate::oracle;
use crate::privacy::{self, GdpParams, Release};
use crate::repair;
use crate::tester::{self, Comparison, TestMode, TesterConfig, Verdict};

/// Slack for comparisons between scores computed in floating point.
const SCORE_TOLERANCE: f64 = 1e-9;

/// Deliberate bugs, used to check that the suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Fault {
    /// Treat a gap equal to the threshold as a violation.
    FlipStrictness,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Multiplies every suite's trial count; 1.0 is the documented scale.
    pub scale: f64,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            scale: 1.0,
            fault: None,
        }
    }
}

impl VerifyOptions {
    fn trials(&self, base: usize) -> usize {
        ((base as f64 * self.scale).ceil() as usize).max(1)
    }

    fn comparison(&self) -> Comparison {
        match self.fault {
            Some(Fault::FlipStrictness) => Comparison::NonStrict,
            None => Comparison::Strict,
        }
    }

    /// `gap` breaks the bound `limit`, honouring the injected fault.
    fn exceeds(&self, gap: f64, limit: f64) -> bool {
        self.comparison().exceeds(gap, limit)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub description: &'static str,
    pub trials: usize,
    pub checks: usize,
    pub violations: usize,
    pub passed: bool,
    pub first_failure: Option<String>,
}

#[derive(Default)]
struct Tally {
    trials: usize,
    checks: usize,
    violations: usize,
    first_failure: Option<String>,
}

impl Tally {
    fn check(&mut self, ok: bool, note: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(note());
            }
        }
    }

    fn error(&mut self, err: crate::error::Error) {
        self.check(false, || format!("error: {err}"));
    }
}

type SuiteFn = fn(&VerifyOptions, &mut SeededRng, &mut Tally) -> Result<()>;

pub struct Suite {
    pub name: &'static str,
    pub description: &'static str,
    /// Part of `verify-repair`.
    pub repair: bool,
    run: SuiteFn,
}

/// Every registered suite, in run order.
pub static SUITES: &[Suite] = &[
    Suite {
        name: "rounding-safety",
        description: "rounding two values at distance at most 1 keeps them within 1",
        repair: true,
        run: rounding_safety,
    },
    Suite {
        name: "repair-progress",
        description: "A_i leaves a clean dimension j != i clean",
        repair: true,
        run: repair_progress,
    },
    Suite {
        name: "repair-accounting",
        description: "A_i raises VS_j by at most delta for j != i",
        repair: true,
        run: repair_accounting,
    },
    Suite {
        name: "pre-rounding-preservation",
        description: "the unrounded fixpoint of B_i does not raise VS_j",
        repair: true,
        run: pre_rounding,
    },
    Suite {
        name: "repair-correctness",
        description: "full_repair returns a Lipschitz function within the pass bound",
        repair: true,
        run: repair_correctness,
    },
    Suite {
        name: "violated-mass-bound",
        description: "violated edge mass >= delta (eps - d^2 delta) / (d ImD) at the exact distance",
        repair: true,
        run: violated_mass_bound,
    },
    Suite {
        name: "distance-oracle",
        description: "branch and bound matches enumeration and certificates re-verify",
        repair: false,
        run: distance_oracle,
    },
    Suite {
        name: "tester-one-sided",
        description: "Lipschitz functions are always accepted",
        repair: false,
        run: tester_one_sided,
    },
    Suite {
        name: "tester-far-rejection",
        description: "4 x_1 on d = 4 is rejected in at least 90% of runs",
        repair: false,
        run: tester_far_rejection,
    },
    Suite {
        name: "edge-sampler",
        description: "empirical edge law is within 0.005 TV of the exact one",
        repair: false,
        run: edge_sampler,
    },
    Suite {
        name: "privacy-soundness",
        description: "every NO is confirmed by the exhaustive DP check",
        repair: false,
        run: privacy_soundness,
    },
    Suite {
        name: "privacy-completeness",
        description: "the truncated geometric mechanism is accepted and released",
        repair: false,
        run: privacy_completeness,
    },
];

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub options: VerifyOptions,
    pub suites_registered: usize,
    pub suites_run: usize,
    pub passed: usize,
    pub failed: usize,
    pub all_passed: bool,
    pub results: Vec<SuiteResult>,
}

/// Runs the selected suites. Each suite gets its own stream, so adding or
/// skipping one does not change the others. Progress goes to `progress`.
pub fn run_suites(
    filter: impl Fn(&Suite) -> bool,
    opts: &VerifyOptions,
    mut progress: impl FnMut(&SuiteResult, f64),
) -> VerifySummary {
    let mut results = Vec::new();
    for (k, suite) in SUITES.iter().enumerate() {
        if !filter(suite) {
            continue;
        }
        let start = Instant::now();
        let mut rng = SeededRng::new(opts.seed).split(k as u64);
        let mut tally = Tally::default();
        if let Err(err) = (suite.run)(opts, &mut rng, &mut tally) {
            tally.error(err);
        }
        let result = SuiteResult {
            name: suite.name,
            description: suite.description,
            trials: tally.trials,
            checks: tally.checks,
            violations: tally.violations,
            passed: tally.violations == 0 && tally.checks > 0,
            first_failure: tally.first_failure,
        };
        progress(&result, start.elapsed().as_secs_f64());
        results.push(result);
    }
    let passed = results.iter().filter(|r| r.passed).count();
    VerifySummary {
        options: *opts,
        suites_registered: SUITES.len(),
        suites_run: results.len(),
        passed,
        failed: results.len() - passed,
        all_passed: passed == results.len(),
        results,
    }
}

pub fn verify_repair(opts: &VerifyOptions, progress: impl FnMut(&SuiteResult, f64)) -> VerifySummary {
    run_suites(|s| s.repair, opts, progress)
}

pub fn verify_all(opts: &VerifyOptions, progress: impl FnMut(&SuiteResult, f64)) -> VerifySummary {
    run_suites(|_| true, opts, progress)
}

fn pick_delta(rng: &mut SeededRng) -> f64 {
    [0.5, 0.25, 0.2, 0.1, 0.05][rng.random_range(0..5)]
}

/// Grid functions for the repair suites. Half are a Lipschitz function plus
/// `c_i x_i` on a random set of dimensions, which leaves the other
/// dimensions clean; the rest have independent values.
fn repair_instance(rng: &mut SeededRng) -> Result<(DenseFunction, ProductDistribution)> {
    let d = rng.random_range(1..=4);
    let delta = pick_delta(rng);
    let dist = instances::random_distribution(d, 0.05, 0.95, rng)?;
    let f = if rng.random_bool(0.5) {
        let g = instances::random_lipschitz(d, delta, rng)?;
        let lifts: Vec<f64> = (0..d)
            .map(|_| {
                if rng.random_bool(0.5) {
                    rng.random_range(0..=(3.0 / delta) as i64) as f64 * delta
                } else {
                    0.0
                }
            })
            .collect();
        let values = hypercube::vertices(d)?
            .map(|x| {
                g.get(x)
                    + (1..=d)
                        .map(|i| lifts[i - 1] * f64::from(x.coord(i)))
                        .sum::<f64>()
            })
            .collect();
        DenseFunction::on_grid(d, values, delta)?
    } else {
        let scale = rng.random_range(1.0..=(2 * d + 1) as f64);
        instances::random_grid_function(d, delta, scale, rng)?
    };
    Ok((f, dist))
}

fn rounding_safety(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    let mut pairs: Vec<(f64, f64, f64)> = Vec::new();
    for delta in [1.0, 0.5, 0.25, 0.1, 0.05, 0.01] {
        pairs.push((0.0, 1.0, delta));
        pairs.push((0.5 * delta, 1.0 + 0.5 * delta, delta));
        pairs.push((-0.5 * delta, 0.5 - 0.5 * delta, delta));
    }
    for _ in 0..opts.trials(10_000) {
        let delta = pick_delta(rng);
        let a = rng.random_range(-5.0..5.0);
        let b = if rng.random_bool(0.2) {
            // The two ends of a unit gap, on or off the grid.
            a + 1.0
        } else {
            a + rng.random_range(-1.0..=1.0)
        };
        pairs.push((a, b, delta));
    }
    for (a, b, delta) in pairs {
        if (a - b).abs() > 1.0 {
            continue;
        }
        t.trials += 1;
        let (ra, rb) = (repair::round_to_grid(a, delta), repair::round_to_grid(b, delta));
        t.check(
            (ra - a).abs() <= delta / 2.0 + SCORE_TOLERANCE,
            || format!("round({a}) = {ra} is more than delta/2 away (delta = {delta})"),
        );
        t.check(!opts.exceeds((ra - rb).abs(), 1.0), || {
            format!("|round({a}) - round({b})| = {} > 1 (delta = {delta})", (ra - rb).abs())
        });
    }
    Ok(())
}

fn repair_progress(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for _ in 0..opts.trials(1000) {
        t.trials += 1;
        let (f, dist) = repair_instance(rng)?;
        let d = f.dim();
        let before: Vec<f64> = (1..=d)
            .map(|j| repair::violation_score_dimension(&f, j, &dist))
            .collect::<Result<_>>()?;
        for i in 1..=d {
            let g = repair::repair_dimension(&f, i, &dist)?;
            for j in (1..=d).filter(|&j| j != i && before[j - 1] == 0.0) {
                let after = repair::violation_score_dimension(&g, j, &dist)?;
                t.check(after <= SCORE_TOLERANCE, || {
                    format!("d = {d}: A_{i} made clean dimension {j} dirty (VS = {after})")
                });
            }
        }
    }
    Ok(())
}

fn repair_accounting(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for _ in 0..opts.trials(1000) {
        t.trials += 1;
        let (f, dist) = repair_instance(rng)?;
        let (d, delta) = (f.dim(), f.delta().unwrap_or(1.0));
        for i in 1..=d {
            let g = repair::repair_dimension(&f, i, &dist)?;
            for j in (1..=d).filter(|&j| j != i) {
                let before = repair::violation_score_dimension(&f, j, &dist)?;
                let after = repair::violation_score_dimension(&g, j, &dist)?;
                t.check(after <= before + delta + SCORE_TOLERANCE, || {
                    format!("d = {d}, delta = {delta}: VS_{j} went {before} -> {after} under A_{i}")
                });
            }
        }
    }
    Ok(())
}

fn pre_rounding(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for _ in 0..opts.trials(1000) {
        t.trials += 1;
        let (f, dist) = repair_instance(rng)?;
        let d = f.dim();
        for i in 1..=d {
            let fix = repair::repair_dimension_detailed(&f, i, &dist)?.unrounded;
            for j in (1..=d).filter(|&j| j != i) {
                let before = repair::violation_score_dimension(&f, j, &dist)?;
                let after = repair::violation_score_dimension(&fix, j, &dist)?;
                t.check(after <= before + 1e-12, || {
                    format!("d = {d}: unrounded B_{i} fixpoint raised VS_{j} {before} -> {after}")
                });
            }
        }
    }
    Ok(())
}

fn repair_correctness(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for _ in 0..opts.trials(500) {
        t.trials += 1;
        let (f, dist) = repair_instance(rng)?;
        match repair::full_repair(&f, &dist) {
            Ok(rep) => {
                let ok = oracle::is_lipschitz_exhaustive(rep.result(), 1.0)?;
                t.check(ok, || format!("full_repair output not Lipschitz for {:?}", f.values()));
                let bound: f64 = rep.steps.iter().map(|s| s.distance).sum();
                t.check(rep.total_distance <= bound + SCORE_TOLERANCE, || {
                    format!("Dist(f, f_d) = {} exceeds the chain sum {bound}", rep.total_distance)
                });
            }
            Err(err) => t.error(err),
        }
    }
    Ok(())
}

fn violated_mass_bound(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for _ in 0..opts.trials(1000) {
        t.trials += 1;
        let d = rng.random_range(2..=4);
        let delta = if rng.random_bool(0.5) { 0.1 } else { 0.05 };
        let dist = instances::random_distribution(d, 0.05, 0.95, rng)?;
        let scale = rng.random_range(1.0..=(3 * d) as f64);
        let f = instances::random_grid_function(d, delta, scale, rng)?;
        let eps = oracle::exact_distance_to_lipschitz(&f, &dist, 1.0)?.distance;
        let imd = oracle::image_diameter_exact(&f);
        let rhs = oracle::lemma1_rhs(eps, d, delta, imd)?;
        if rhs > 0.0 {
            let lhs = oracle::violated_edge_mass(&f, &dist)?;
            t.check(lhs >= rhs - SCORE_TOLERANCE, || {
                format!("d = {d}, delta = {delta}: violated mass {lhs} < bound {rhs} (eps = {eps})")
            });
        }
    }
    if t.checks == 0 {
        t.check(false, || "no instance had a positive bound".into());
    }
    Ok(())
}

fn distance_oracle(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for _ in 0..opts.trials(200) {
        t.trials += 1;
        let d = rng.random_range(1..=6);
        let delta = pick_delta(rng);
        let dist = instances::random_distribution(d, 0.05, 0.95, rng)?;
        let f = instances::random_grid_function(d, delta, rng.random_range(0.5..=4.0), rng)?;
        let cert = oracle::exact_distance_to_lipschitz(&f, &dist, 1.0)?;
        t.check(cert.verify(&f, &dist, 1.0)?, || format!("certificate rejected at d = {d}"));
        let rep = repair::full_repair(&f, &dist)?;
        t.check(cert.distance <= rep.total_distance + SCORE_TOLERANCE, || {
            format!("oracle distance {} above repair distance {}", cert.distance, rep.total_distance)
        });
    }
    Ok(())
}

fn tester_one_sided(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for trial in 0..opts.trials(500) {
        t.trials += 1;
        let d = rng.random_range(2..=10);
        let eps_prime = rng.random_range(0.5..=1.0);
        let delta = 1.0 / (2.0 * (d * d) as f64 / eps_prime).ceil();
        let omega = rng.random_range(0.05..=0.3);
        let mode = if rng.random_bool(0.5) {
            TestMode::Grid
        } else {
            TestMode::Real
        };
        let dist = instances::random_distribution(d, 0.1, 0.9, rng)?;
        let f = instances::random_lipschitz(d, delta, rng)?;
        let f = if mode == TestMode::Real { f.as_real() } else { f };
        let mut cfg = TesterConfig::new(eps_prime, omega, delta, mode)?;
        cfg.comparison = opts.comparison();
        let report = tester::test_lipschitz(&f, &dist, &cfg, &SeededRng::new(trial as u64))?;
        t.check(report.verdict == Verdict::Yes, || {
            format!("Lipschitz function rejected: d = {d}, mode = {mode:?}, witness = {:?}", report.witness)
        });
    }
    Ok(())
}

fn tester_far_rejection(opts: &VerifyOptions, _rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    let d = 4;
    let f = ScaledDictator { d, k: 4.0 };
    let dense = DenseFunction::from_fn(d, |x| 4.0 * f64::from(x.coord(1)))?;
    let dist = ProductDistribution::uniform(d)?;
    let cert = oracle::exact_distance_to_lipschitz(&dense, &dist, 1.0)?;
    t.check((cert.distance - 0.5).abs() < 1e-12, || {
        format!("exact distance of 4 x_1 is {}, expected 0.5", cert.distance)
    });
    let cfg = TesterConfig::new(0.3, 0.1, 0.01, TestMode::Real)?;
    let trials = opts.trials(200);
    let mut rejected = 0;
    for seed in 0..trials {
        t.trials += 1;
        let report = tester::test_lipschitz(&f, &dist, &cfg, &SeededRng::new(seed as u64))?;
        if report.verdict == Verdict::No {
            rejected += 1;
            let w = report.witness.expect("NO carries a witness");
            t.check(w.recheck(&f), || format!("witness does not recheck: {w:?}"));
        }
    }
    let rate = rejected as f64 / trials as f64;
    t.check(rate >= 0.9, || format!("rejection rate {rate} < 0.9"));
    Ok(())
}

fn edge_sampler(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    let dist = ProductDistribution::new(vec![0.9, 0.2, 0.5])?;
    let d = dist.dim();
    let draws = opts.trials(1_000_000);
    let edges: Vec<_> = hypercube::edges(d)?.collect();
    let slot = |e: hypercube::Edge| (e.dimension() - 1) * (1 << d) + e.base().index();
    let mut counts = vec![0usize; d << d];
    for _ in 0..draws {
        counts[slot(dist.sample_edge(rng))] += 1;
    }
    t.trials = draws;
    let mut tv = 0.0;
    for &e in &edges {
        tv += (counts[slot(e)] as f64 / draws as f64 - dist.edge_mass(e)?).abs();
    }
    tv /= 2.0;
    t.check(tv < 0.005, || format!("TV distance {tv} >= 0.005"));
    Ok(())
}

fn privacy_soundness(opts: &VerifyOptions, rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    for trial in 0..opts.trials(50) {
        t.trials += 1;
        let d = rng.random_range(1..=6);
        let k = rng.random_range(2..=8);
        let spread = rng.random_range(0.05..=1.0);
        let mech = instances::random_mechanism(d, k, spread, rng)?;
        let alpha = rng.random_range(0.2..=2.0);
        let dist = instances::random_distribution(d, 0.1, 0.9, rng)?;
        let params = GdpParams::new(alpha, rng.random_range(0.5..=1.0), rng.random_range(0.05..=0.2));
        let cfg_rng = SeededRng::new(opts.seed ^ trial as u64);
        let verdict = privacy::gdp_test(&mech, &dist, &params, &cfg_rng)?;
        if verdict.verdict == Verdict::No {
            let w = verdict.witness.as_ref().expect("NO carries a witness");
            let exact = privacy::dp_check_exhaustive(&mech, alpha)?;
            t.check(!exact.private && w.recheck(&mech, alpha), || {
                format!("NO at d = {d}, alpha = {alpha} but max log-ratio is {}", exact.max_log_ratio)
            });
        }
    }
    Ok(())
}

fn privacy_completeness(opts: &VerifyOptions, _rng: &mut SeededRng, t: &mut Tally) -> Result<()> {
    let alpha0 = std::f64::consts::LN_2;
    let params = GdpParams::new(alpha0, PRIVACY_BETA, PRIVACY_GAMMA);
    for trial in 0..opts.trials(200) {
        t.trials += 1;
        let d = 1 + trial % 6;
        let mech = TruncatedGeometric::new(d, alpha0)?;
        let dist = ProductDistribution::uniform(d)?;
        let dataset = Vertex::new(d, (trial as u64).wrapping_mul(0x9e37_79b9) & hypercube::low_mask(d))?;
        let out = privacy::priv_gen(&mech, dataset, &dist, &params, &SeededRng::new(trial as u64))?;
        t.check(out.audit.verdict == Verdict::Yes, || format!("audit said NO at d = {d}"));
        t.check(out.release != Release::Failure, || format!("FAILURE released at d = {d}"));
    }
    for d in 1..=6 {
        let exact = privacy::dp_check_exhaustive(&TruncatedGeometric::new(d, alpha0)?, alpha0)?;
        t.check(exact.private, || {
            format!("truncated geometric at d = {d} has log-ratio {}", exact.max_log_ratio)
        });
    }
    Ok(())
}

/// Audit budget for the completeness suite.
pub const PRIVACY_BETA: f64 = 0.9;
pub const PRIVACY_GAMMA: f64 = 0.1;
