//! Command-line surface: sampling, coefficient inspection, expectation
//! values, correlation studies, the verification suite, and the scaling
//! benchmark.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or validation
//! error, 3 guarantee void (`beta >= beta_star` under `--beta-policy error`).

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use clustergibbs::expansion::{BetaPolicy, ClusterExpansion, ExpansionError, LocalOperator};
use clustergibbs::model::{DegreeMode, HamiltonianSpec};
use clustergibbs::pauli::{parse_pauli, ProjectorProduct};
use clustergibbs::sampler::{sample_many, Basis, SamplerError, Schedule};
use clustergibbs::verify;

/// Output schema version stamped into `--schema` listings.
const SCHEMA_VERSION: &str = "1";

const ENV_SEED: &str = "CLUSTERGIBBS_SEED";

#[derive(Parser)]
#[command(
    name = "clustergibbs",
    version,
    about = "Classical sampling of high-temperature quantum Gibbs states by cluster expansion"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample measurement outcome strings (JSON lines).
    Sample(SampleArgs),
    /// Emit marginal series coefficients and their per-order bounds.
    Gamma(GammaArgs),
    /// Compute one conditional marginal with its tail bound.
    Marginal(MarginalArgs),
    /// Estimate a local observable's thermal expectation.
    Expect(ExpectArgs),
    /// Estimate a conditional two-point correlation.
    Correlate(CorrelateArgs),
    /// Run the acceptance criteria against bundled desk-scale models.
    Verify(VerifyArgs),
    /// Time sampling across a chain family and fit the runtime exponent.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DdModeArg {
    Strict,
    Empirical,
}

impl From<DdModeArg> for DegreeMode {
    fn from(v: DdModeArg) -> Self {
        match v {
            DdModeArg::Strict => DegreeMode::Strict,
            DdModeArg::Empirical => DegreeMode::Empirical,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Error,
    Warn,
}

impl From<PolicyArg> for BetaPolicy {
    fn from(v: PolicyArg) -> Self {
        match v {
            PolicyArg::Error => BetaPolicy::Error,
            PolicyArg::Warn => BetaPolicy::Warn,
        }
    }
}

/// Basis argument: `Z`, `X`, `Y`, or `x,y,z` components of a unit vector.
#[derive(Clone)]
struct BasisArg(Basis);

impl FromStr for BasisArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Z" | "z" => return Ok(BasisArg(Basis::Z)),
            "X" | "x" => return Ok(BasisArg(Basis::X)),
            "Y" | "y" => return Ok(BasisArg(Basis::Y)),
            _ => {}
        }
        let parts: Vec<&str> = s.split(',').collect();
        if parts.len() != 3 {
            return Err(format!("expected Z|X|Y or x,y,z components, got \"{s}\""));
        }
        let mut v = [0.0f64; 3];
        for (slot, part) in v.iter_mut().zip(&parts) {
            *slot = part
                .trim()
                .parse()
                .map_err(|_| format!("bad axis component \"{part}\""))?;
        }
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(format!("axis {v:?} has norm {norm}, expected 1"));
        }
        Ok(BasisArg(Basis::Axis(v)))
    }
}

#[derive(Args)]
struct ModelArgs {
    /// Model file (JSON).
    #[arg(long)]
    model: PathBuf,
    /// Overlap-degree counting mode; strict also makes model validation hard-fail.
    #[arg(long, value_enum, default_value_t = DdModeArg::Strict)]
    dd_mode: DdModeArg,
    /// Behavior when beta >= beta_star.
    #[arg(long, value_enum, default_value_t = PolicyArg::Error)]
    beta_policy: PolicyArg,
    /// Measurement record conditioning the computation: "q:B=o,..." with
    /// B in {Z,X,Y} and o in {0,1}, e.g. "0:Z=0,3:X=1".
    #[arg(long, default_value = "")]
    given: String,
}

#[derive(Args)]
struct OrderArgs {
    /// Fixed truncation order M.
    #[arg(long, conflicts_with = "alpha")]
    order: Option<usize>,
    /// Accuracy exponent: picks the smallest M with tail <= N^-alpha.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Schedule file (JSON); defaults to all qubits in index order, Z basis.
    #[arg(long)]
    schedule: Option<PathBuf>,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    order: OrderArgs,
    /// Base seed; falls back to CLUSTERGIBBS_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of samples.
    #[arg(long, default_value_t = 1)]
    count: u64,
    /// Sample-level parallelism.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output path (JSON lines); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the output schema and exit.
    #[arg(long)]
    schema: bool,
}

#[derive(Args)]
struct GammaArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Target qubit.
    #[arg(long)]
    j: u32,
    /// Emit coefficients for orders 1..=max-order.
    #[arg(long, default_value_t = 4)]
    max_order: usize,
    /// Marginal basis on the target qubit.
    #[arg(long, default_value = "Z")]
    basis: BasisArg,
    /// Also emit the contributing clusters as [term_index, multiplicity] pairs.
    #[arg(long)]
    dump_clusters: bool,
    #[arg(long)]
    schema: bool,
}

#[derive(Args)]
struct MarginalArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    order: OrderArgs,
    /// Target qubit.
    #[arg(long)]
    j: u32,
    /// Basis on the target qubit; the reported p0 is for outcome 0.
    #[arg(long, default_value = "Z")]
    basis: BasisArg,
    #[arg(long)]
    schema: bool,
}

#[derive(Args)]
struct ExpectArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    order: OrderArgs,
    /// Observable as JSON: [{"pauli": "Z0 Z1", "coeff": 1.0}, ...].
    #[arg(long)]
    observable: String,
    #[arg(long)]
    schema: bool,
}

#[derive(Args)]
struct CorrelateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    beta: f64,
    #[command(flatten)]
    order: OrderArgs,
    #[arg(long)]
    i: u32,
    #[arg(long)]
    j: u32,
    /// Single-site insertion axis on qubit i.
    #[arg(long, default_value = "Z")]
    op_i: BasisArg,
    /// Single-site insertion axis on qubit j.
    #[arg(long, default_value = "Z")]
    op_j: BasisArg,
    #[arg(long)]
    schema: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite seed (fixed default for reproducible reports).
    #[arg(long, default_value_t = verify::SUITE_SEED)]
    seed: u64,
    #[arg(long)]
    schema: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Chain sizes to time.
    #[arg(long, value_delimiter = ',', default_values_t = [25u32, 50, 100, 200])]
    sizes: Vec<u32>,
    /// Truncation order.
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Samples per size.
    #[arg(long, default_value_t = 8)]
    count: u64,
    /// Output path (CSV); stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    schema: bool,
}

enum Failure {
    Usage(String),
    GuaranteeVoid(String),
    VerifyFailed,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::GuaranteeVoid(_) => 3,
            Failure::VerifyFailed => 1,
        }
    }
}

impl From<ExpansionError> for Failure {
    fn from(e: ExpansionError) -> Self {
        match e {
            ExpansionError::GuaranteeVoid { .. } => Failure::GuaranteeVoid(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<SamplerError> for Failure {
    fn from(e: SamplerError) -> Self {
        match e {
            SamplerError::Expansion(ExpansionError::GuaranteeVoid { .. }) => {
                Failure::GuaranteeVoid(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::GuaranteeVoid(msg) => eprintln!("error (guarantee void): {msg}"),
                Failure::VerifyFailed => eprintln!("verification failed"),
            }
            ExitCode::from(failure.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Sample(args) => cmd_sample(args),
        Command::Gamma(args) => cmd_gamma(args),
        Command::Marginal(args) => cmd_marginal(args),
        Command::Expect(args) => cmd_expect(args),
        Command::Correlate(args) => cmd_correlate(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn load_engine(args: &ModelArgs) -> Result<(ClusterExpansion, ProjectorProduct), Failure> {
    let strict = matches!(args.dd_mode, DdModeArg::Strict);
    let report = HamiltonianSpec::load(&args.model, strict)
        .map_err(|e| Failure::Usage(e.to_string()))?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    let exp = ClusterExpansion::new(report.spec, args.dd_mode.into());
    let given = parse_given(&args.given, exp.spec().num_qubits())?;
    Ok((exp, given))
}

/// Parse "q:B=o,..." measurement records.
fn parse_given(text: &str, num_qubits: u32) -> Result<ProjectorProduct, Failure> {
    let mut e = ProjectorProduct::empty();
    for item in text.split(',').filter(|s| !s.trim().is_empty()) {
        let bad = || Failure::Usage(format!("bad --given entry \"{item}\", expected q:B=o"));
        let (qubit, rest) = item.trim().split_once(':').ok_or_else(bad)?;
        let (basis, outcome) = rest.split_once('=').ok_or_else(bad)?;
        let qubit: u32 = qubit.trim().parse().map_err(|_| bad())?;
        if qubit >= num_qubits {
            return Err(Failure::Usage(format!(
                "--given qubit {qubit} out of range for {num_qubits} qubits"
            )));
        }
        let basis: BasisArg = basis.trim().parse().map_err(Failure::Usage)?;
        let sign = match outcome.trim() {
            "0" => 1.0,
            "1" => -1.0,
            other => {
                return Err(Failure::Usage(format!(
                    "bad outcome \"{other}\" in --given (want 0 or 1)"
                )))
            }
        };
        let axis = basis.0.axis();
        e.insert(qubit, [sign * axis[0], sign * axis[1], sign * axis[2]])
            .map_err(|err| Failure::Usage(err.to_string()))?;
    }
    Ok(e)
}

fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.or_else(|| {
        std::env::var(ENV_SEED)
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .unwrap_or(0)
}

fn resolve_order(
    args: &OrderArgs,
    exp: &ClusterExpansion,
    beta: f64,
) -> Result<usize, Failure> {
    match (args.order, args.alpha) {
        (Some(order), None) => {
            if order == 0 {
                return Err(Failure::Usage("--order must be at least 1".into()));
            }
            Ok(order)
        }
        (None, Some(alpha)) => Ok(exp.choose_order(beta, exp.spec().num_qubits(), alpha)?),
        (None, None) => Ok(4),
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    }
}

fn open_sink(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(
            std::fs::File::create(p).map_err(|e| Failure::Usage(e.to_string()))?,
        )),
        None => Ok(Box::new(std::io::stdout())),
    }
}

fn emit(sink: &mut dyn Write, value: &serde_json::Value) -> Result<(), Failure> {
    writeln!(sink, "{value}").map_err(|e| Failure::Usage(e.to_string()))
}

fn cmd_sample(args: SampleArgs) -> Result<(), Failure> {
    if args.schema {
        println!(
            "clustergibbs sample output v{SCHEMA_VERSION}: JSON lines, one per sample:\n\
             {{\"bits\": string, \"seed\": uint64, \"index\": uint64, \"order\": uint,\n \
              \"steps\": [{{\"qubit\": uint, \"basis\": \"Z\"|\"X\"|\"Y\"|[x,y,z],\n \
                          \"p0\": number, \"tail\": number|null}}]}}\n\
             (tail is null when beta >= beta_star voids the bound)\n\
             stderr summary: {{\"summary\": {{\"count\", \"max_tail\", \"beta_ok\", \"beta_star\"}}}}"
        );
        return Ok(());
    }
    let (exp, _) = load_engine(&args.model)?;
    if args.beta <= 0.0 {
        return Err(Failure::Usage(format!("--beta must be positive, got {}", args.beta)));
    }
    let schedule = match &args.schedule {
        Some(path) => Schedule::load(path).map_err(|e| Failure::Usage(e.to_string()))?,
        None => Schedule::static_z(exp.spec().num_qubits()),
    };
    schedule
        .validate(exp.spec().num_qubits())
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let order = resolve_order(&args.order, &exp, args.beta)?;
    let seed = resolve_seed(args.seed);
    let samples = sample_many(
        &exp,
        args.beta,
        &schedule,
        order,
        args.model.beta_policy.into(),
        seed,
        args.count,
        args.jobs.max(1),
    )?;
    let mut sink = open_sink(&args.out)?;
    let mut max_tail = 0.0f64;
    for sample in &samples {
        for step in &sample.steps {
            max_tail = max_tail.max(step.tail);
        }
        emit(sink.as_mut(), &serde_json::to_value(sample).unwrap())?;
    }
    let beta_star = exp.constants().beta_star;
    eprintln!(
        "{}",
        serde_json::json!({"summary": {
            "count": samples.len(),
            "order": order,
            "max_tail": if max_tail.is_finite() { Some(max_tail) } else { None },
            "beta_ok": args.beta < beta_star,
            "beta_star": beta_star,
        }})
    );
    Ok(())
}

fn cmd_gamma(args: GammaArgs) -> Result<(), Failure> {
    if args.schema {
        println!(
            "clustergibbs gamma output v{SCHEMA_VERSION}: JSON lines, one per order m:\n\
             {{\"j\": uint, \"m\": uint, \"gamma\": number, \"bound\": number,\n \
              \"clusters\"?: [[[term_index, multiplicity], ...], ...]}}\n\
             (bound is the per-order coefficient bound m*beta_star^-m;\n \
              clusters appear under --dump-clusters)"
        );
        return Ok(());
    }
    let (exp, given) = load_engine(&args.model)?;
    if args.j >= exp.spec().num_qubits() {
        return Err(Failure::Usage(format!("--j {} out of range", args.j)));
    }
    if args.max_order == 0 {
        return Err(Failure::Usage("--max-order must be at least 1".into()));
    }
    let mut sink = open_sink(&None)?;
    for m in 1..=args.max_order {
        let gamma = exp.gamma(args.j, &given, args.basis.0.axis(), m)?;
        let mut line = serde_json::json!({
            "j": args.j,
            "m": m,
            "gamma": gamma,
            "bound": exp.gamma_bound(m),
        });
        if args.dump_clusters {
            let clusters: Vec<Vec<(usize, u32)>> = exp
                .connected_clusters(args.j, m)
                .map_err(|e| Failure::Usage(e.to_string()))?
                .iter()
                .map(|c| c.entries().to_vec())
                .collect();
            line["clusters"] = serde_json::to_value(clusters).unwrap();
        }
        emit(sink.as_mut(), &line)?;
    }
    Ok(())
}

fn cmd_marginal(args: MarginalArgs) -> Result<(), Failure> {
    if args.schema {
        println!(
            "clustergibbs marginal output v{SCHEMA_VERSION}: one JSON line:\n\
             {{\"j\": uint, \"basis\": \"Z\"|\"X\"|\"Y\"|[x,y,z], \"p0\": number,\n \
              \"tail\": number|null, \"order\": uint, \"gammas\": [number],\n \
              \"clamped\": bool, \"beta_ok\": bool}}"
        );
        return Ok(());
    }
    let (exp, given) = load_engine(&args.model)?;
    let order = resolve_order(&args.order, &exp, args.beta)?;
    let est = exp.marginal(
        &given,
        args.j,
        args.basis.0.axis(),
        args.beta,
        order,
        args.model.beta_policy.into(),
    )?;
    let mut sink = open_sink(&None)?;
    emit(
        sink.as_mut(),
        &serde_json::json!({
            "j": args.j,
            "basis": args.basis.0,
            "p0": est.p_prime,
            "tail": if est.tail.is_finite() { Some(est.tail) } else { None },
            "order": est.order,
            "gammas": est.gammas,
            "clamped": est.clamped,
            "beta_ok": est.beta_ok,
        }),
    )
}

fn cmd_expect(args: ExpectArgs) -> Result<(), Failure> {
    if args.schema {
        println!(
            "clustergibbs expect output v{SCHEMA_VERSION}: one JSON line:\n\
             {{\"observable\": [{{\"pauli\": string, \"coeff\": number}}],\n \
              \"value\": number, \"tail\": number|null, \"order\": uint}}"
        );
        return Ok(());
    }
    let (exp, given) = load_engine(&args.model)?;
    let order = resolve_order(&args.order, &exp, args.beta)?;
    #[derive(serde::Deserialize)]
    struct ObsTerm {
        pauli: String,
        coeff: f64,
    }
    let terms: Vec<ObsTerm> = serde_json::from_str(&args.observable)
        .map_err(|e| Failure::Usage(format!("bad --observable JSON: {e}")))?;
    let mut weighted = Vec::with_capacity(terms.len());
    for t in &terms {
        let pauli = parse_pauli(&t.pauli)
            .map_err(|e| Failure::Usage(format!("bad observable pauli \"{}\": {e}", t.pauli)))?;
        weighted.push((t.coeff, pauli));
    }
    let observable = LocalOperator::from_terms(weighted)?;
    let est = exp.observable_expectation(
        &observable,
        &given,
        args.beta,
        order,
        args.model.beta_policy.into(),
    )?;
    let mut sink = open_sink(&None)?;
    emit(
        sink.as_mut(),
        &serde_json::json!({
            "observable": terms.iter().map(|t| serde_json::json!({
                "pauli": t.pauli, "coeff": t.coeff,
            })).collect::<Vec<_>>(),
            "value": est.value,
            "tail": if est.tail.is_finite() { Some(est.tail) } else { None },
            "order": est.order,
        }),
    )
}

fn cmd_correlate(args: CorrelateArgs) -> Result<(), Failure> {
    if args.schema {
        println!(
            "clustergibbs correlate output v{SCHEMA_VERSION}: one JSON line:\n\
             {{\"i\": uint, \"j\": uint, \"value\": number, \"tail\": number|null,\n \
              \"order\": uint}}"
        );
        return Ok(());
    }
    let (exp, given) = load_engine(&args.model)?;
    let order = resolve_order(&args.order, &exp, args.beta)?;
    let op_i = LocalOperator::from_axis(args.i, args.op_i.0.axis());
    let op_j = LocalOperator::from_axis(args.j, args.op_j.0.axis());
    let est = exp.correlation(
        &given,
        args.i,
        args.j,
        &op_i,
        &op_j,
        args.beta,
        order,
        args.model.beta_policy.into(),
    )?;
    let mut sink = open_sink(&None)?;
    emit(
        sink.as_mut(),
        &serde_json::json!({
            "i": args.i,
            "j": args.j,
            "value": est.value,
            "tail": if est.tail.is_finite() { Some(est.tail) } else { None },
            "order": est.order,
        }),
    )
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    if args.schema {
        println!(
            "clustergibbs verify output v{SCHEMA_VERSION}: JSON lines, one per criterion:\n\
             {{\"index\": uint, \"name\": string, \"passed\": bool, \"seconds\": number,\n \
              \"details\": [string]}}\n\
             final line: {{\"passed\": bool, \"criteria\": uint}}; exit 1 on any failure"
        );
        return Ok(());
    }
    let reports = verify::run_all(args.seed);
    let mut sink = open_sink(&None)?;
    let mut all_passed = true;
    for report in &reports {
        all_passed &= report.passed;
        emit(sink.as_mut(), &serde_json::to_value(report).unwrap())?;
    }
    emit(
        sink.as_mut(),
        &serde_json::json!({"passed": all_passed, "criteria": reports.len()}),
    )?;
    if all_passed {
        Ok(())
    } else {
        Err(Failure::VerifyFailed)
    }
}

fn cmd_bench(args: BenchArgs) -> Result<(), Failure> {
    if args.schema {
        println!(
            "clustergibbs bench output v{SCHEMA_VERSION}: CSV with header\n\
             n,mean_seconds,fitted_exponent\n\
             (fitted_exponent repeats the least-squares slope of ln t vs ln N)"
        );
        return Ok(());
    }
    if args.sizes.len() < 2 {
        return Err(Failure::Usage("--sizes needs at least two sizes".into()));
    }
    if args.order == 0 || args.count == 0 {
        return Err(Failure::Usage("--order and --count must be positive".into()));
    }
    let table = verify::bench_chain_scaling(&args.sizes, args.order, args.count);
    let mut sink = open_sink(&args.out)?;
    writeln!(sink, "n,mean_seconds,fitted_exponent").map_err(|e| Failure::Usage(e.to_string()))?;
    for row in &table.rows {
        writeln!(
            sink,
            "{},{:.9},{:.4}",
            row.n, row.mean_seconds, table.fitted_exponent
        )
        .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    Ok(())
}
