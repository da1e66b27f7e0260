//! fqlab: analyze the structure of bounded-degree polynomials over small
//! prime fields from the command line.
//!
//! Every command emits one JSON report on stdout (and to --out when given)
//! that embeds its run manifest; identical manifests produce byte-identical
//! reports. Wall-clock timing goes to stderr only. Exit codes: 0 success,
//! 1 usage or infeasibility, 2 a check that computed to false.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use fqlab::analysis;
use fqlab::error::Error as CoreError;
use fqlab::nonclassical::{self, NonclassicalPoly};
use fqlab::poly::{self, Poly};
use fqlab::structure::{
    self, Decomposition, QuadKind, SearchBudget, SearchOutcome,
};
use fqlab::subspace::{self, PointSet};

const EXIT_CHECK_FAILED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "fqlab",
    version,
    about = "workbench for polynomial structure over small prime fields"
)]
struct Cli {
    /// Worker threads (0 uses the runtime default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact or Monte Carlo bias of a polynomial.
    Bias(BiasArgs),
    /// Gowers uniformity norm of a polynomial phase.
    Gowers(GowersArgs),
    /// Additive derivative along a direction.
    Derive(DeriveArgs),
    /// Survey of derivative biases over all directions.
    DerivSurvey(DerivSurveyArgs),
    /// Quadratic normal form and closed-form bias.
    Quadform(QuadformArgs),
    /// Search for a product-plus-remainder decomposition.
    Decompose(DecomposeArgs),
    /// Verify a decomposition file against a polynomial.
    VerifyDecomp(VerifyDecompArgs),
    /// Decompose a hyperplane restriction and lift the result.
    Lift(LiftArgs),
    /// Find an affine subspace on which the polynomial is constant.
    ConstantSubspace(ConstantSubspaceArgs),
    /// Regularize a polynomial factor to unbiasedness.
    Regularize(RegularizeArgs),
    /// Find a subspace inside an iterated sum-difference set.
    SumsetSubspace(SumsetSubspaceArgs),
    /// Evaluate a normal-form torus polynomial at a point.
    NcEval(NcEvalArgs),
    /// Check the degree of a normal-form torus polynomial.
    NcDegree(NcDegreeArgs),
    /// Emit a seeded random polynomial.
    Sample(SampleArgs),
    /// Run a sweep experiment and write CSV plus a summary.
    Experiment(ExperimentArgs),
}

/// Polynomial source shared by most commands: inline text or a file with an
/// optional `q=.. n=..` header; explicit flags win.
#[derive(Args, Serialize, Clone)]
struct PolyInput {
    #[arg(long)]
    q: Option<u8>,
    #[arg(long)]
    n: Option<usize>,
    /// Polynomial in grammar text, e.g. "x1*x2 + x3".
    #[arg(long)]
    poly: Option<String>,
    /// File holding the polynomial, optionally with a header line.
    #[arg(long)]
    poly_file: Option<PathBuf>,
    /// Accept coefficients at or above q and reduce them.
    #[arg(long, default_value_t = false)]
    reduce: bool,
}

impl PolyInput {
    fn load(&self, inputs: &mut BTreeMap<String, String>) -> Result<Poly, CliError> {
        let f = match (&self.poly, &self.poly_file) {
            (Some(text), None) => {
                inputs.insert("poly".into(), digest(text.as_bytes()));
                let q = self.q.ok_or_else(|| usage("--q is required with --poly"))?;
                let n = self.n.ok_or_else(|| usage("--n is required with --poly"))?;
                poly::parse(text, q, n, self.reduce)?
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                inputs.insert("poly_file".into(), digest(text.as_bytes()));
                poly::parse_poly_file(&text, self.q, self.n, self.reduce)?
            }
            _ => return Err(usage("give exactly one of --poly or --poly-file")),
        };
        Ok(f)
    }
}

#[derive(Args, Serialize)]
struct BiasArgs {
    #[command(flatten)]
    input: PolyInput,
    /// Monte Carlo estimate instead of exact enumeration.
    #[arg(long, default_value_t = false)]
    mc: bool,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct GowersArgs {
    #[command(flatten)]
    input: PolyInput,
    /// Norm order.
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = false)]
    mc: bool,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct DeriveArgs {
    #[command(flatten)]
    input: PolyInput,
    /// Direction as comma-separated field elements, e.g. "1,0,1".
    #[arg(long)]
    y: String,
}

#[derive(Args, Serialize)]
struct DerivSurveyArgs {
    #[command(flatten)]
    input: PolyInput,
    #[arg(long)]
    threshold: f64,
    #[arg(long, default_value_t = false)]
    mc: bool,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct QuadformArgs {
    #[command(flatten)]
    input: PolyInput,
}

#[derive(Args, Serialize)]
struct DecomposeArgs {
    #[command(flatten)]
    input: PolyInput,
    /// Degree budget; defaults to the degree of the polynomial.
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, default_value_t = 4)]
    c_max: usize,
    /// Candidate tuples tried per degree shape.
    #[arg(long, default_value_t = 512)]
    attempts: usize,
    /// Time budget in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Args, Serialize)]
struct VerifyDecompArgs {
    #[command(flatten)]
    input: PolyInput,
    /// Decomposition JSON file.
    #[arg(long)]
    decomp: PathBuf,
}

#[derive(Args, Serialize)]
struct LiftArgs {
    #[command(flatten)]
    input: PolyInput,
    /// Hyperplane normal as comma-separated field elements.
    #[arg(long)]
    w: String,
    /// Hyperplane constant.
    #[arg(long, default_value_t = 0)]
    a: u8,
    #[arg(long, default_value_t = 4)]
    c_max: usize,
    #[arg(long, default_value_t = 512)]
    attempts: usize,
    #[arg(long)]
    time_budget: Option<f64>,
}

#[derive(Args, Serialize)]
struct ConstantSubspaceArgs {
    #[command(flatten)]
    input: PolyInput,
    /// "greedy" or "exhaustive".
    #[arg(long, default_value = "greedy")]
    mode: String,
    /// Target dimension (exhaustive mode).
    #[arg(long)]
    target_dim: Option<usize>,
    /// Restart rounds (greedy mode).
    #[arg(long, default_value_t = 4)]
    rounds: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct RegularizeArgs {
    /// File with a `q=.. n=..` header and one polynomial per line.
    #[arg(long)]
    polys_file: PathBuf,
    #[arg(long)]
    q: Option<u8>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 20)]
    max_rounds: u32,
    /// Derivative directions per replacement.
    #[arg(long, default_value_t = 2)]
    directions: u32,
    #[arg(long, default_value_t = 4)]
    retry_cap: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct SumsetSubspaceArgs {
    /// Point-set file: `q=.. n=..` header plus a hex bitmap.
    #[arg(long)]
    set: PathBuf,
    #[arg(long, default_value_t = 2)]
    k: u32,
    #[arg(long, default_value_t = 1)]
    min_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct NcEvalArgs {
    /// Normal form file: lines of `c d1 .. dn k`.
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    q: u8,
    #[arg(long)]
    n: usize,
    /// Evaluation point as comma-separated field elements.
    #[arg(long)]
    x: String,
}

#[derive(Args, Serialize)]
struct NcDegreeArgs {
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    q: u8,
    #[arg(long)]
    n: usize,
    /// Degree bound to check.
    #[arg(long)]
    d: u32,
    /// Sample tuples instead of exhausting them.
    #[arg(long, default_value_t = false)]
    sample: bool,
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    q: u8,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Force total degree exactly d.
    #[arg(long, default_value_t = false)]
    exact_degree: bool,
}

#[derive(Args, Serialize)]
struct ExperimentArgs {
    /// "random", "s4", or "planted".
    #[arg(long)]
    generator: String,
    #[arg(long, default_value_t = 2)]
    q: u8,
    #[arg(long)]
    n_min: usize,
    #[arg(long)]
    n_max: usize,
    /// Instances per dimension.
    #[arg(long, default_value_t = 5)]
    count: u32,
    #[arg(long, default_value_t = 5)]
    d: u32,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Time budget in seconds; partial results flush with a truncated flag.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Directory for results.csv and summary.json.
    #[arg(long)]
    out_dir: PathBuf,
}

// ---------------------------------------------------------------------------
// reports

#[derive(Serialize)]
struct Caps {
    table: u64,
    bias: u128,
    gowers: u128,
    combos: u128,
    point_scan: u128,
    sumset: u128,
}

impl Caps {
    fn current() -> Self {
        Caps {
            table: fqlab::table::TABLE_CAP,
            bias: analysis::EXACT_BIAS_CAP,
            gowers: analysis::EXACT_GOWERS_CAP,
            combos: fqlab::factors::COMBO_CAP,
            point_scan: fqlab::factors::POINT_SCAN_CAP,
            sumset: subspace::SUMSET_CAP,
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    params: Value,
    inputs: BTreeMap<String, String>,
    caps: Caps,
    version: String,
}

fn digest(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

struct CliError {
    code: u8,
    message: String,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError {
        code: 1,
        message: msg.into(),
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError {
            code: 1,
            message: e.to_string(),
        }
    }
}

fn parse_vector(text: &str, q: u8, n: usize) -> Result<Vec<u8>, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(usage(format!(
            "vector '{text}' has {} entries, expected {n}",
            parts.len()
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<u8>()
                .map_err(|_| usage(format!("bad field element '{p}'")))
                .map(|v| v % q)
        })
        .collect()
}

/// A command's outcome: the result payload plus the exit code.
struct Outcome {
    result: Value,
    code: u8,
}

impl Outcome {
    fn ok(result: Value) -> Self {
        Outcome { result, code: 0 }
    }

    fn negative(result: Value) -> Self {
        Outcome {
            result,
            code: EXIT_CHECK_FAILED,
        }
    }

    fn infeasible(result: Value) -> Self {
        Outcome { result, code: 1 }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap would exit 2; the contract reserves 2 for checks that
            // computed false, so usage errors map to 1
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if cli.threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }
    let start = Instant::now();
    let mut inputs = BTreeMap::new();
    let (name, params, run): (&str, Value, Result<Outcome, CliError>) = match &cli.cmd {
        Cmd::Bias(a) => ("bias", to_params(a), run_bias(a, &mut inputs)),
        Cmd::Gowers(a) => ("gowers", to_params(a), run_gowers(a, &mut inputs)),
        Cmd::Derive(a) => ("derive", to_params(a), run_derive(a, &mut inputs)),
        Cmd::DerivSurvey(a) => ("deriv-survey", to_params(a), run_survey(a, &mut inputs)),
        Cmd::Quadform(a) => ("quadform", to_params(a), run_quadform(a, &mut inputs)),
        Cmd::Decompose(a) => ("decompose", to_params(a), run_decompose(a, &mut inputs)),
        Cmd::VerifyDecomp(a) => ("verify-decomp", to_params(a), run_verify(a, &mut inputs)),
        Cmd::Lift(a) => ("lift", to_params(a), run_lift(a, &mut inputs)),
        Cmd::ConstantSubspace(a) => (
            "constant-subspace",
            to_params(a),
            run_constant_subspace(a, &mut inputs),
        ),
        Cmd::Regularize(a) => ("regularize", to_params(a), run_regularize(a, &mut inputs)),
        Cmd::SumsetSubspace(a) => (
            "sumset-subspace",
            to_params(a),
            run_sumset_subspace(a, &mut inputs),
        ),
        Cmd::NcEval(a) => ("nc-eval", to_params(a), run_nc_eval(a, &mut inputs)),
        Cmd::NcDegree(a) => ("nc-degree", to_params(a), run_nc_degree(a, &mut inputs)),
        Cmd::Sample(a) => ("sample", to_params(a), run_sample(a)),
        Cmd::Experiment(a) => ("experiment", to_params(a), run_experiment(a)),
    };
    let outcome = match run {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("fqlab {name}: {}", e.message);
            return ExitCode::from(e.code);
        }
    };
    let manifest = Manifest {
        command: name.to_string(),
        params,
        inputs,
        caps: Caps::current(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let report = json!({ "manifest": manifest, "result": outcome.result });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    print!("{text}");
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, &text) {
            eprintln!("fqlab {name}: cannot write {}: {e}", path.display());
            return ExitCode::from(1);
        }
    }
    eprintln!(
        "fqlab {name}: exit {} in {:?}",
        outcome.code,
        start.elapsed()
    );
    ExitCode::from(outcome.code)
}

fn to_params<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).expect("args serialize")
}

// ---------------------------------------------------------------------------
// command bodies

fn run_bias(a: &BiasArgs, inputs: &mut BTreeMap<String, String>) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let report = if a.mc {
        analysis::bias_mc(&f, a.samples, a.seed)?
    } else {
        analysis::bias(&f)?
    };
    Ok(Outcome::ok(json!({ "bias": report })))
}

fn run_gowers(a: &GowersArgs, inputs: &mut BTreeMap<String, String>) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let report = if a.mc {
        analysis::gowers_mc(&f, a.d, a.samples, a.seed)?
    } else {
        analysis::gowers_norm(&f, a.d)?
    };
    Ok(Outcome::ok(json!({ "gowers": report })))
}

fn run_derive(a: &DeriveArgs, inputs: &mut BTreeMap<String, String>) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let y = parse_vector(&a.y, f.q(), f.n())?;
    let d = analysis::derivative(&f, &y)?;
    Ok(Outcome::ok(json!({
        "derivative": d.print(),
        "degree": d.degree(),
    })))
}

fn run_survey(
    a: &DerivSurveyArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let survey = if a.mc {
        analysis::derivative_survey_mc(&f, a.threshold, a.samples, a.seed)?
    } else {
        analysis::derivative_survey(&f, a.threshold)?
    };
    Ok(Outcome::ok(json!({ "survey": survey })))
}

fn run_quadform(
    a: &QuadformArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let nf = structure::quad_normal_form(&f)?;
    let verified = nf.verify(&f);
    let exact = analysis::bias(&f)?.value;
    let closed = structure::quad_bias_closed_form(&nf);
    let kind = match &nf.kind {
        QuadKind::Char2 { alphas } => json!({ "form": "hyperbolic", "alphas": alphas }),
        QuadKind::Odd { diag } => json!({ "form": "diagonal", "diag": diag }),
    };
    Ok(Outcome::ok(json!({
        "kind": kind,
        "rank_terms": nf.rank_terms(),
        "linear": nf.linear.print(),
        "matrix": nf.map.matrix(),
        "closed_form_bias": closed,
        "exact_bias": exact,
        "verified": verified,
    })))
}

fn search_budget(c_max: usize, attempts: usize, time_budget: Option<f64>) -> SearchBudget {
    SearchBudget {
        c_max,
        attempts_per_shape: attempts,
        time_limit: time_budget.map(std::time::Duration::from_secs_f64),
    }
}

fn run_decompose(
    a: &DecomposeArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let d = match a.d.or_else(|| f.degree()) {
        Some(d) if d >= 1 => d,
        _ => return Err(usage("degree budget must be at least 1")),
    };
    let budget = search_budget(a.c_max, a.attempts, a.time_budget);
    match structure::decompose_search(&f, d, &budget)? {
        SearchOutcome::Found(dec) => {
            let check = structure::verify_decomposition(&f, &dec);
            Ok(Outcome::ok(json!({
                "found": true,
                "decomposition": dec.doc(),
                "verified": check.valid,
            })))
        }
        SearchOutcome::NotFound(log) => Ok(Outcome::infeasible(json!({
            "found": false,
            "reason": "budget exhausted",
            "log": { "shapes_tried": log.shapes_tried,
                      "tuples_tried": log.tuples_tried,
                      "solves": log.solves,
                      "timed_out": log.timed_out },
        }))),
    }
}

#[derive(Deserialize)]
struct DecompositionFile {
    budget: u32,
    q: u8,
    pairs: Vec<PairFile>,
    remainder: String,
}

#[derive(Deserialize)]
struct PairFile {
    g: String,
    h: String,
}

fn load_decomposition(path: &PathBuf, n: usize) -> Result<(Decomposition, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let parsed: DecompositionFile = serde_json::from_str(&text)
        .map_err(|e| usage(format!("bad decomposition JSON: {e}")))?;
    let q = parsed.q;
    let pairs = parsed
        .pairs
        .iter()
        .map(|p| {
            Ok((
                poly::parse(&p.g, q, n, false)?,
                poly::parse(&p.h, q, n, false)?,
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let remainder = poly::parse(&parsed.remainder, q, n, false)?;
    Ok((
        Decomposition {
            budget: parsed.budget,
            pairs,
            remainder,
        },
        digest(text.as_bytes()),
    ))
}

fn run_verify(
    a: &VerifyDecompArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let (dec, dgst) = load_decomposition(&a.decomp, f.n())?;
    inputs.insert("decomp".into(), dgst);
    let check = structure::verify_decomposition(&f, &dec);
    let result = json!({
        "valid": check.valid,
        "reason": check.failure.as_ref().map(|r| r.reason()),
    });
    if check.valid {
        Ok(Outcome::ok(result))
    } else {
        Ok(Outcome::negative(result))
    }
}

fn run_lift(a: &LiftArgs, inputs: &mut BTreeMap<String, String>) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    let w = parse_vector(&a.w, f.q(), f.n())?;
    let d = f
        .degree()
        .ok_or_else(|| usage("cannot lift the zero polynomial"))?;
    let v = fqlab::poly::AffineSubspace::hyperplane(f.q(), &w, a.a)?;
    let restricted = f.restrict(&v)?;
    let dec = if restricted.degree() < Some(d) {
        Decomposition::trivial(&restricted, d)
    } else {
        let budget = search_budget(a.c_max, a.attempts, a.time_budget);
        match structure::decompose_search(&restricted, d, &budget)? {
            SearchOutcome::Found(dec) => dec,
            SearchOutcome::NotFound(_) => {
                return Ok(Outcome::infeasible(json!({
                    "found": false,
                    "reason": "no decomposition of the restriction within budget",
                })))
            }
        }
    };
    let lifted = structure::lift_decomposition(&f, &w, a.a, &dec)?;
    let check = structure::verify_decomposition(&f, &lifted);
    Ok(Outcome::ok(json!({
        "found": true,
        "restricted": { "poly": restricted.print(), "pairs": dec.pairs.len() },
        "decomposition": lifted.doc(),
        "extra_pairs": lifted.pairs.len().saturating_sub(dec.pairs.len()),
        "verified": check.valid,
    })))
}

fn run_constant_subspace(
    a: &ConstantSubspaceArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let f = a.input.load(inputs)?;
    match a.mode.as_str() {
        "greedy" => {
            let cert = subspace::constant_subspace_greedy(&f, a.rounds, a.seed)?;
            Ok(Outcome::ok(json!({
                "found": true,
                "certificate": cert.doc(),
            })))
        }
        "exhaustive" => {
            let target = a
                .target_dim
                .ok_or_else(|| usage("--target-dim is required in exhaustive mode"))?;
            match subspace::constant_subspace_exhaustive(&f, target)? {
                Some(cert) => Ok(Outcome::ok(json!({
                    "found": true,
                    "certificate": cert.doc(),
                }))),
                // exhaustive none is a nonexistence certificate
                None => Ok(Outcome::negative(json!({
                    "found": false,
                    "target_dim": target,
                }))),
            }
        }
        other => Err(usage(format!("unknown mode '{other}'"))),
    }
}

fn run_regularize(
    a: &RegularizeArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&a.polys_file)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.polys_file.display())))?;
    inputs.insert("polys_file".into(), digest(text.as_bytes()));
    let (header, body) = fqlab::poly::split_header(&text);
    let (hq, hn) = match header {
        Some(h) => {
            let (q, n) = fqlab::poly::parse_header(h)?;
            (Some(q), Some(n))
        }
        None => (None, None),
    };
    let q = a.q.or(hq).ok_or_else(|| usage("no modulus: pass --q or add a header"))?;
    let n = a.n.or(hn).ok_or_else(|| usage("no arity: pass --n or add a header"))?;
    let polys = body
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| poly::parse(l, q, n, false))
        .collect::<Result<Vec<_>, _>>()?;
    let factor = fqlab::factors::PolynomialFactor::new(q, n, polys)?;
    let policy = fqlab::factors::RegularityPolicy {
        epsilon: fqlab::factors::EpsilonPolicy::Fixed(a.epsilon),
        max_rounds: a.max_rounds,
        directions: a.directions,
        retry_cap: a.retry_cap,
        seed: a.seed,
    };
    let (out, cert) = fqlab::factors::regularize(&factor, &policy)?;
    let result = json!({
        "factor": out.polys().iter().map(|p| p.print()).collect::<Vec<_>>(),
        "certificate": cert,
    });
    if cert.unbiased && !cert.refinement_failed {
        Ok(Outcome::ok(result))
    } else {
        Ok(Outcome::negative(result))
    }
}

fn run_sumset_subspace(
    a: &SumsetSubspaceArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&a.set)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.set.display())))?;
    inputs.insert("set".into(), digest(text.as_bytes()));
    let set = PointSet::from_text(&text)?;
    let s = subspace::sumset(&set, a.k)?;
    match subspace::subspace_in_sumset(&set, a.k, a.min_dim, a.seed)? {
        Some(cert) => Ok(Outcome::ok(json!({
            "found": true,
            "density": set.density(),
            "sumset_density": s.density(),
            "certificate": cert.doc(),
        }))),
        None => Ok(Outcome::negative(json!({
            "found": false,
            "density": set.density(),
            "sumset_density": s.density(),
            "min_dim": a.min_dim,
        }))),
    }
}

fn run_nc_eval(a: &NcEvalArgs, inputs: &mut BTreeMap<String, String>) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&a.file)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.file.display())))?;
    inputs.insert("file".into(), digest(text.as_bytes()));
    let p = NonclassicalPoly::parse(&text, a.q, a.n)?;
    let x = parse_vector(&a.x, a.q, a.n)?;
    let v = p.eval(&x)?;
    Ok(Outcome::ok(json!({
        "numerator": v.numerator(),
        "denominator": v.denominator(),
        "depth": p.depth(),
        "degree": p.degree(),
    })))
}

fn run_nc_degree(
    a: &NcDegreeArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Outcome, CliError> {
    let text = std::fs::read_to_string(&a.file)
        .map_err(|e| usage(format!("cannot read {}: {e}", a.file.display())))?;
    inputs.insert("file".into(), digest(text.as_bytes()));
    let p = NonclassicalPoly::parse(&text, a.q, a.n)?;
    let check = if a.sample {
        nonclassical::degree_check_sampled(&p, a.d, a.samples, a.seed)?
    } else {
        nonclassical::degree_check(&p, a.d)?
    };
    let mode = match check.mode {
        nonclassical::CheckMode::Exhaustive => json!("exhaustive"),
        nonclassical::CheckMode::Sampled { samples, seed } => {
            json!({ "sampled": { "samples": samples, "seed": seed } })
        }
    };
    let result = json!({
        "holds": check.holds,
        "d": a.d,
        "normal_form_degree": p.degree(),
        "mode": mode,
        "witness": check.witness.map(|(dirs, x)| json!({ "directions": dirs, "x": x })),
    });
    if check.holds {
        Ok(Outcome::ok(result))
    } else {
        Ok(Outcome::negative(result))
    }
}

fn run_sample(a: &SampleArgs) -> Result<Outcome, CliError> {
    let f = if a.exact_degree {
        poly::random_poly_exact_degree(a.q, a.n, a.d, a.seed)?
    } else {
        poly::random_poly(a.q, a.n, a.d, a.seed)?
    };
    let file = format!("q={} n={}\n{}\n", a.q, a.n, f.print());
    Ok(Outcome::ok(json!({
        "poly": f.print(),
        "degree": f.degree(),
        "terms": f.term_count(),
        "file": file,
    })))
}

// ---------------------------------------------------------------------------
// experiments

#[derive(Default, Clone, Serialize)]
struct ColumnStats {
    count: u64,
    mean: f64,
    min: f64,
    max: f64,
}

fn summarize(values: &[f64]) -> ColumnStats {
    if values.is_empty() {
        return ColumnStats::default();
    }
    let sum: f64 = values.iter().sum();
    ColumnStats {
        count: values.len() as u64,
        mean: sum / values.len() as f64,
        min: values.iter().cloned().fold(f64::INFINITY, f64::min),
        max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn run_experiment(a: &ExperimentArgs) -> Result<Outcome, CliError> {
    if a.n_min > a.n_max {
        return Err(usage("--n-min must not exceed --n-max"));
    }
    let start = Instant::now();
    let deadline = a.time_budget.map(std::time::Duration::from_secs_f64);
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| usage(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let mut csv = String::from("generator,q,n,d,seed,bias,gowers_order,gowers_value,gowers_raw,subspace_dim,success\n");
    let mut biases = Vec::new();
    let mut gowers_vals = Vec::new();
    let mut gowers_raws = Vec::new();
    let mut dims = Vec::new();
    let mut successes = Vec::new();
    let mut truncated = false;

    'outer: for n in a.n_min..=a.n_max {
        for i in 0..a.count {
            if let Some(limit) = deadline {
                if start.elapsed() > limit {
                    truncated = true;
                    break 'outer;
                }
            }
            let seed = a.seed ^ ((n as u64) << 24) ^ i as u64;
            let row = match a.generator.as_str() {
                "random" => {
                    let f = poly::random_poly(a.q, n, a.d, seed)?;
                    let b = analysis::bias_mc(&f, a.samples, seed)?;
                    let cert = subspace::constant_subspace_greedy(&f, 4, seed)?;
                    biases.push(b.value);
                    dims.push(cert.dim() as f64);
                    format!(
                        "random,{},{n},{},{seed},{:.6},,,,{},\n",
                        a.q,
                        a.d,
                        b.value,
                        cert.dim()
                    )
                }
                "s4" => {
                    if a.q != 2 {
                        return Err(usage("the s4 generator needs q = 2"));
                    }
                    let f = poly::s4_generator(n)?;
                    let b = analysis::bias_mc(&f, a.samples, seed)?;
                    let g = analysis::gowers_mc(&f, 4, a.samples, seed)?;
                    biases.push(b.value);
                    gowers_vals.push(g.value);
                    gowers_raws.push(g.raw);
                    format!(
                        "s4,2,{n},4,{seed},{:.6},4,{:.6},{:.6},,\n",
                        b.value, g.value, g.raw
                    )
                }
                "planted" => {
                    let ga = a.d / 2;
                    let hb = a.d - ga;
                    let g = poly::random_poly_exact_degree(a.q, n, ga, seed ^ 0x1)?;
                    let h = poly::random_poly_exact_degree(a.q, n, hb, seed ^ 0x2)?;
                    let q_rem = poly::random_poly(a.q, n, a.d.saturating_sub(1), seed ^ 0x3)?;
                    let f = g.mul(&h)?.add(&q_rem)?;
                    let b = analysis::bias_mc(&f, a.samples, seed)?;
                    let budget = SearchBudget::default();
                    let success = match structure::decompose_search(&f, a.d, &budget)? {
                        SearchOutcome::Found(dec) => {
                            structure::verify_decomposition(&f, &dec).valid
                        }
                        SearchOutcome::NotFound(_) => false,
                    };
                    biases.push(b.value);
                    successes.push(if success { 1.0 } else { 0.0 });
                    format!(
                        "planted,{},{n},{},{seed},{:.6},,,,,{}\n",
                        a.q,
                        a.d,
                        b.value,
                        u8::from(success)
                    )
                }
                other => return Err(usage(format!("unknown generator '{other}'"))),
            };
            csv.push_str(&row);
        }
    }

    let summary = json!({
        "generator": a.generator,
        "q": a.q,
        "n_min": a.n_min,
        "n_max": a.n_max,
        "count_per_n": a.count,
        "d": a.d,
        "samples": a.samples,
        "seed": a.seed,
        "rows": csv.lines().count() - 1,
        "truncated": truncated,
        "bias": summarize(&biases),
        "gowers_value": summarize(&gowers_vals),
        "gowers_raw": summarize(&gowers_raws),
        "subspace_dim": summarize(&dims),
        "success_rate": summarize(&successes),
    });
    let csv_path = a.out_dir.join("results.csv");
    std::fs::write(&csv_path, &csv)
        .map_err(|e| usage(format!("cannot write {}: {e}", csv_path.display())))?;
    let summary_path = a.out_dir.join("summary.json");
    let mut summary_text =
        serde_json::to_string_pretty(&summary).expect("summary serializes");
    summary_text.push('\n');
    std::fs::write(&summary_path, &summary_text)
        .map_err(|e| usage(format!("cannot write {}: {e}", summary_path.display())))?;
    let mut stderr = std::io::stderr();
    let _ = writeln!(stderr, "fqlab experiment: {} rows in {:?}", csv.lines().count() - 1, start.elapsed());
    Ok(Outcome::ok(summary))
}
