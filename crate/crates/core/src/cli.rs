//! Command-line front end. Every subcommand prints one JSON document on
//! stdout: the schema version, the subcommand, the fully resolved
//! configuration (seed included) and the report. Progress and errors go to
//! stderr. Exit status: 0 for YES or pass, 1 for NO or fail, 2 for usage
//! and configuration errors.

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::distribution::{DistributionSpec, ProductDistribution, SeededRng};
use crate::error::{Error, Result};
use crate::function::{check_delta, DenseFunction};
use crate::hypercube::Vertex;
use crate::mechanism::{builtin_mechanism, BuiltinMechanism, MechanismFile, MechanismOracle};
use crate::oracle;
use crate::privacy::{self, GdpParams, Release};
use crate::registry::{BuiltinFunction, FunctionFile};
use crate::tester::{self, TestMode, TesterConfig, Verdict};
use crate::verify::{self, Fault, VerifyOptions};

/// Bumped on any change to the fields of a report.
pub const SCHEMA_VERSION: u32 = 1;

const BUILTIN_PREFIX: &str = "builtin:";

#[derive(Parser, Debug)]
#[command(name = "liptest", version, about = "Lipschitz testing and privacy auditing on the hypercube")]
pub struct Cli {
    /// Worker threads for sampling and auditing (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the sampling tester on one function.
    TestLipschitz(TestLipschitzArgs),
    /// Audit a mechanism for generalized differential privacy.
    TestPrivacy(PrivacyArgs),
    /// Audit a mechanism and, if it passes, release one output on a dataset.
    Privgen(PrivgenArgs),
    /// Exact distance to the Lipschitz functions, with a certificate.
    OracleDistance(OracleArgs),
    /// Run the repair property suites.
    VerifyRepair(VerifyArgs),
    /// Run every property suite.
    VerifyAll(VerifyArgs),
}

#[derive(Args, Debug)]
pub struct TestLipschitzArgs {
    /// Dimension; required for builtins, checked against table files.
    #[arg(long)]
    pub dim: Option<usize>,
    /// `uniform`, a JSON array of p_i, or a file holding either.
    #[arg(long, default_value = "uniform")]
    pub dist: String,
    /// `builtin:NAME[?k=v]` or a function table file.
    #[arg(long)]
    pub function: String,
    /// Proximity parameter epsilon'.
    #[arg(long)]
    pub epsilon: f64,
    /// Failure probability.
    #[arg(long)]
    pub omega: f64,
    /// Grid spacing, or the slack on the edge threshold in real mode.
    #[arg(long)]
    pub delta: f64,
    /// Defaults to grid for grid-valued functions, real otherwise.
    #[arg(long, value_enum)]
    pub mode: Option<TestMode>,
    /// Random seed (default: drawn from the OS and echoed in the output).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct PrivacyArgs {
    /// `builtin:NAME[?k=v&d=N]` or a mechanism table file.
    #[arg(long)]
    pub mech: String,
    /// Dimension for builtin mechanisms (default 1).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Distribution over datasets, as for `test-lipschitz`.
    #[arg(long, default_value = "uniform")]
    pub dist: String,
    /// Privacy budget to certify.
    #[arg(long)]
    pub alpha: f64,
    /// Probability mass of datasets the guarantee may exclude.
    #[arg(long)]
    pub beta: f64,
    /// Allowed failure probability of the audit.
    #[arg(long)]
    pub gamma: f64,
    /// Grid spacing for the audit (default derived from beta, |outputs| and d).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Random seed (default: drawn from the OS).
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct PrivgenArgs {
    #[command(flatten)]
    pub audit: PrivacyArgs,
    /// The dataset as a bitstring x_1 x_2 ... x_d.
    #[arg(long)]
    pub dataset: String,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    /// A function table file, or `builtin:NAME` together with `--dim`.
    #[arg(long)]
    pub function: String,
    /// Dimension for builtins.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Grid for builtin functions.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Distribution, as for `test-lipschitz`.
    #[arg(long, default_value = "uniform")]
    pub dist: String,
    /// Lipschitz constant.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Base seed for every suite (default: drawn from the OS).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplier on every suite's trial count.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_enum, hide = true)]
    pub fault: Option<Fault>,
}

/// What a run prints and how it exits.
#[derive(Debug)]
pub struct Outcome {
    pub document: Value,
    pub success: bool,
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: C,
    report: R,
}

fn envelope(command: &str, config: impl Serialize, report: impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(Envelope {
        schema_version: SCHEMA_VERSION,
        command,
        config,
        report,
    })?)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T> {
    let text = std::fs::read_to_string(Path::new(path))
        .map_err(|e| Error::Config(format!("cannot read {path:?}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("cannot parse {path:?}: {e}")))
}

fn resolve_dist(arg: &str, d: usize) -> Result<ProductDistribution> {
    let spec: DistributionSpec = if arg == "uniform" {
        DistributionSpec::Named(arg.into())
    } else if arg.trim_start().starts_with('[') {
        serde_json::from_str(arg)?
    } else {
        read_json(arg)?
    };
    spec.resolve(d)
}

fn function_source(arg: &str) -> Result<FunctionSource> {
    match arg.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => Ok(FunctionSource::Builtin(BuiltinFunction::parse(name)?)),
        None => Ok(FunctionSource::Table(read_json::<FunctionFile>(arg)?.into_function()?)),
    }
}

enum FunctionSource {
    Builtin(BuiltinFunction),
    Table(DenseFunction),
}

#[derive(Serialize)]
struct TestLipschitzConfig<'a> {
    dim: usize,
    dist: &'a ProductDistribution,
    function: &'a str,
    epsilon: f64,
    omega: f64,
    delta: f64,
    mode: TestMode,
    seed: u64,
    threads: Option<usize>,
}

fn run_test_lipschitz(a: &TestLipschitzArgs, threads: Option<usize>) -> Result<Outcome> {
    let seed = resolve_seed(a.seed);
    check_delta(a.delta)?;
    let f = match function_source(&a.function)? {
        FunctionSource::Builtin(b) => {
            let d = a.dim.ok_or_else(|| Error::Config("--dim is required for builtin functions".into()))?;
            b.instantiate(d, a.delta)?
        }
        FunctionSource::Table(t) => {
            if let Some(d) = a.dim.filter(|&d| d != t.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: t.dim(),
                });
            }
            crate::registry::NamedFunction::Dense(t)
        }
    };
    use crate::function::{FunctionOracle, ValueRange};
    let d = f.dim();
    let mode = a.mode.unwrap_or(match f.range() {
        ValueRange::DeltaGrid { .. } => TestMode::Grid,
        ValueRange::Real => TestMode::Real,
    });
    let dist = resolve_dist(&a.dist, d)?;
    let cfg = TesterConfig::new(a.epsilon, a.omega, a.delta, mode)?;
    eprintln!("testing {} at d = {d}, {mode:?} mode, seed {seed}", a.function);
    let report = tester::test_lipschitz(&f, &dist, &cfg, &SeededRng::new(seed))?;
    let config = TestLipschitzConfig {
        dim: d,
        dist: &dist,
        function: &a.function,
        epsilon: a.epsilon,
        omega: a.omega,
        delta: a.delta,
        mode,
        seed,
        threads,
    };
    Ok(Outcome {
        success: report.verdict == Verdict::Yes,
        document: envelope("test-lipschitz", config, &report)?,
    })
}

fn load_mechanism(arg: &str, dim: Option<usize>) -> Result<Box<dyn MechanismOracle>> {
    match arg.strip_prefix(BUILTIN_PREFIX) {
        Some(name) => {
            let (kind, d_param) = BuiltinMechanism::parse(name)?;
            let d = match (d_param, dim) {
                (Some(a), Some(b)) if a != b => {
                    return Err(Error::Config(format!("d={a} in the name but --dim {b}")))
                }
                (Some(a), _) | (None, Some(a)) => a,
                (None, None) => 1,
            };
            builtin_mechanism(&kind, d)
        }
        None => {
            let mech = read_json::<MechanismFile>(arg)?.into_mechanism()?;
            if let Some(d) = dim.filter(|&d| d != mech.dim()) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: mech.dim(),
                });
            }
            Ok(Box::new(mech))
        }
    }
}

#[derive(Serialize)]
struct PrivacyConfig<'a> {
    mech: &'a str,
    dim: usize,
    outputs: &'a [String],
    dist: &'a ProductDistribution,
    alpha: f64,
    beta: f64,
    gamma: f64,
    delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dataset: Option<Vertex>,
    seed: u64,
    threads: Option<usize>,
}

struct PrivacySetup {
    mech: Box<dyn MechanismOracle>,
    dist: ProductDistribution,
    params: GdpParams,
    delta: f64,
    seed: u64,
}

fn privacy_setup(a: &PrivacyArgs, dim_hint: Option<usize>) -> Result<PrivacySetup> {
    let seed = resolve_seed(a.seed);
    let mech = load_mechanism(&a.mech, a.dim.or(dim_hint))?;
    let d = mech.dim();
    let dist = resolve_dist(&a.dist, d)?;
    let mut params = GdpParams::new(a.alpha, a.beta, a.gamma);
    params.delta = a.delta;
    let delta = params.resolve(d, mech.outputs().len())?.delta;
    // Pin the resolved delta so the echoed config replays exactly.
    params.delta = Some(delta);
    Ok(PrivacySetup {
        mech,
        dist,
        params,
        delta,
        seed,
    })
}

fn privacy_config<'a>(
    a: &'a PrivacyArgs,
    s: &'a PrivacySetup,
    dataset: Option<Vertex>,
    threads: Option<usize>,
) -> PrivacyConfig<'a> {
    PrivacyConfig {
        mech: &a.mech,
        dim: s.mech.dim(),
        outputs: s.mech.outputs(),
        dist: &s.dist,
        alpha: a.alpha,
        beta: a.beta,
        gamma: a.gamma,
        delta: s.delta,
        dataset,
        seed: s.seed,
        threads,
    }
}

fn run_test_privacy(a: &PrivacyArgs, threads: Option<usize>) -> Result<Outcome> {
    let s = privacy_setup(a, None)?;
    eprintln!(
        "auditing {} over {} outputs at d = {}, seed {}",
        a.mech,
        s.mech.outputs().len(),
        s.mech.dim(),
        s.seed
    );
    let verdict = privacy::gdp_test(&*s.mech, &s.dist, &s.params, &SeededRng::new(s.seed))?;
    Ok(Outcome {
        success: verdict.verdict == Verdict::Yes,
        document: envelope("test-privacy", privacy_config(a, &s, None, threads), &verdict)?,
    })
}

fn run_privgen(a: &PrivgenArgs, threads: Option<usize>) -> Result<Outcome> {
    let dataset = Vertex::parse(&a.dataset)?;
    let s = privacy_setup(&a.audit, Some(dataset.dim()))?;
    let out = privacy::priv_gen(&*s.mech, dataset, &s.dist, &s.params, &SeededRng::new(s.seed))?;
    Ok(Outcome {
        success: out.release != Release::Failure,
        document: envelope(
            "privgen",
            privacy_config(&a.audit, &s, Some(dataset), threads),
            &out,
        )?,
    })
}

#[derive(Serialize)]
struct OracleConfig<'a> {
    function: &'a str,
    dim: usize,
    delta: Option<f64>,
    dist: &'a ProductDistribution,
    c: f64,
}

fn run_oracle_distance(a: &OracleArgs) -> Result<Outcome> {
    let f = match function_source(&a.function)? {
        FunctionSource::Table(t) => t,
        FunctionSource::Builtin(b) => {
            let d = a.dim.ok_or_else(|| Error::Config("--dim is required for builtin functions".into()))?;
            let delta = a.delta.unwrap_or(1.0);
            DenseFunction::from_oracle(&b.instantiate(d, delta)?)?
        }
    };
    let dist = resolve_dist(&a.dist, f.dim())?;
    if !(a.c > 0.0 && a.c.is_finite()) {
        return Err(Error::param("c", a.c, "must be positive and finite"));
    }
    let cert = oracle::exact_distance_to_lipschitz(&f, &dist, a.c)?;
    let verified = cert.verify(&f, &dist, a.c)?;
    let config = OracleConfig {
        function: &a.function,
        dim: f.dim(),
        delta: f.delta(),
        dist: &dist,
        c: a.c,
    };
    let report = json!({ "certificate": cert, "verified": verified });
    Ok(Outcome {
        success: verified,
        document: envelope("oracle-distance", config, report)?,
    })
}

fn run_verify(a: &VerifyArgs, all: bool, threads: Option<usize>) -> Result<Outcome> {
    if !(a.scale > 0.0 && a.scale.is_finite()) {
        return Err(Error::param("scale", a.scale, "must be positive and finite"));
    }
    let opts = VerifyOptions {
        seed: resolve_seed(a.seed),
        scale: a.scale,
        fault: a.fault,
    };
    let progress = |r: &verify::SuiteResult, secs: f64| {
        let status = if r.passed { "pass" } else { "FAIL" };
        eprintln!("{status} {} ({} checks, {secs:.2}s)", r.name, r.checks);
    };
    let summary = if all {
        verify::verify_all(&opts, progress)
    } else {
        verify::verify_repair(&opts, progress)
    };
    let command = if all { "verify-all" } else { "verify-repair" };
    Ok(Outcome {
        success: summary.all_passed,
        document: envelope(command, json!({ "options": opts, "threads": threads }), &summary)?,
    })
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::TestLipschitz(_) => "test-lipschitz",
        Command::TestPrivacy(_) => "test-privacy",
        Command::Privgen(_) => "privgen",
        Command::OracleDistance(_) => "oracle-distance",
        Command::VerifyRepair(_) => "verify-repair",
        Command::VerifyAll(_) => "verify-all",
    }
}

/// Runs a parsed command line without touching the thread pool.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let threads = cli.threads;
    match &cli.command {
        Command::TestLipschitz(a) => run_test_lipschitz(a, threads),
        Command::TestPrivacy(a) => run_test_privacy(a, threads),
        Command::Privgen(a) => run_privgen(a, threads),
        Command::OracleDistance(a) => run_oracle_distance(a),
        Command::VerifyRepair(a) => run_verify(a, false, threads),
        Command::VerifyAll(a) => run_verify(a, true, threads),
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(2),
            };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(out) => {
            match serde_json::to_string_pretty(&out.document) {
                Ok(text) => println!("{text}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            }
            if out.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            let doc = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command_name(&cli.command),
                "error": e.to_string(),
            });
            println!("{doc}");
            ExitCode::from(2)
        }
    }
}
