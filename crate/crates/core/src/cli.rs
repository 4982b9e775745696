//! Command-line front end.
//!
//! Exit codes: 0 ok, 1 I/O failure, 2 invalid input, 3 space mismatch,
//! 4 carrier too large, 5 hypothesis failure, 6 tolerance miss.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::Error;
use crate::exec::Execution;
use crate::io::{self, IoError, SpaceDesc};
use crate::kernel::{sequence_difference_kernel, TransitionKernel};
use crate::measure::{SignedMeasure, DEFAULT_TAU_SUPP};
use crate::operator::{
    cb_invariance_check, weak_continuity_check, BlackBoxOperator, CbInvarianceReport,
    MeasureOperator, DEFAULT_N_ORACLE,
};
use crate::semigroup::{
    doob_convergence, doob_hypothesis_report, ConvergenceTrace, DoobReport, SemigroupModel,
};
use crate::space::{BoundedFunction, SpaceRef, DEFAULT_TAU_CONT};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_SCHEMA: u8 = 2;
pub const EXIT_MISMATCH: u8 = 3;
pub const EXIT_SIZE: u8 = 4;
pub const EXIT_HYPOTHESIS: u8 = 5;
pub const EXIT_TOLERANCE: u8 = 6;

/// Deviation allowed between the oracle and the kernel positive part.
pub const POSPART_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(
    name = "kernel-lattice",
    version,
    about = "Lattice operations on transition kernels and Doob stability analysis"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for randomized sweeps.
    #[arg(long, global = true, env = "KERNEL_LATTICE_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Weights at or below this count as zero in support tests.
    #[arg(long, global = true, default_value_t = DEFAULT_TAU_SUPP)]
    pub tau_supp: f64,
    /// Tail-oscillation threshold of the continuity test.
    #[arg(long, global = true, default_value_t = DEFAULT_TAU_CONT)]
    pub tau_cont: f64,
    /// Largest carrier accepted by the brute-force oracle.
    #[arg(long, global = true, default_value_t = DEFAULT_N_ORACLE)]
    pub n_oracle: usize,
    /// Convergence tolerance for Doob traces.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub tol: f64,
    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Format of measure-valued results.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Run without the thread pool.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Kernel algebra.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Measure algebra.
    #[command(subcommand)]
    Measure(MeasureCmd),
    /// Operators induced by kernels.
    #[command(subcommand)]
    Operator(OperatorCmd),
    /// Oracle comparisons.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Built-in fixtures.
    #[command(subcommand)]
    Demo(DemoCmd),
    /// Stability analysis of a Markov chain or semigroup.
    #[command(subcommand)]
    Doob(DoobCmd),
}

#[derive(Debug, Subcommand)]
pub enum KernelCmd {
    /// |k|
    Modulus {
        kernel: PathBuf,
    },
    /// k⁺
    Pospart {
        kernel: PathBuf,
    },
    Meet {
        a: PathBuf,
        b: PathBuf,
    },
    Join {
        a: PathBuf,
        b: PathBuf,
    },
    /// Row x of the result is ∫ b(y, ·) a(x, dy).
    Compose {
        a: PathBuf,
        b: PathBuf,
    },
    /// sup_x |k|(x, Ω)
    Bound {
        kernel: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum MeasureCmd {
    /// Jordan parts and Hahn sets.
    Jordan {
        measure: PathBuf,
    },
    /// Total variation of one measure, or the distance between two.
    Tv {
        a: PathBuf,
        b: Option<PathBuf>,
    },
    Sup {
        a: PathBuf,
        b: PathBuf,
    },
    Inf {
        a: PathBuf,
        b: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum OperatorCmd {
    /// Tμ
    Apply { kernel: PathBuf, measure: PathBuf },
    /// T*f
    Adjoint { kernel: PathBuf, function: PathBuf },
    /// T⁺μ for positive μ.
    Pospart {
        kernel: PathBuf,
        measure: PathBuf,
        /// Brute-force supremum over indicator test functions.
        #[arg(long, conflicts_with = "kernel_route")]
        oracle: bool,
        /// Operator of the kernel positive part (the default).
        #[arg(long = "kernel")]
        kernel_route: bool,
    },
    /// Compare an operator with the operator of its reconstructed kernel.
    CheckWeakContinuity {
        /// Kernel whose operator is checked.
        #[arg(required_unless_present = "ac_rank_one")]
        kernel: Option<PathBuf>,
        /// Check μ ↦ μ_ac(Ω)·ν instead, for the measure ν in this file.
        #[arg(long, value_name = "NU")]
        ac_rank_one: Option<PathBuf>,
        /// Additional test measures.
        #[arg(long = "test", value_name = "MEASURE")]
        tests: Vec<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    /// Oracle positive part against the kernel positive part on random μ ≥ 0.
    Pospart {
        kernel: PathBuf,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum DemoCmd {
    /// Rows δ_n - δ_{n+1} on the two-sided sequence space.
    SequenceExample {
        #[arg(long = "n", short = 'n', default_value_t = 16)]
        truncation: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum DoobCmd {
    /// Hypothesis report.
    Check {
        model: PathBuf,
        #[arg(long)]
        t0: Option<f64>,
    },
    /// Hypothesis report plus convergence traces.
    Run {
        model: PathBuf,
        #[arg(long)]
        t0: Option<f64>,
        /// Start measure; default is every point mass.
        #[arg(long)]
        nu: Option<PathBuf>,
        #[arg(long, default_value_t = 128.0)]
        t_max: f64,
        /// Write traces as CSV; with several starts the start index is
        /// inserted before the extension.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: String,
    pub inputs: Vec<PathBuf>,
    pub output: Option<PathBuf>,
    pub tau_supp: f64,
    pub tau_cont: f64,
    pub n_oracle: usize,
    pub tol: f64,
    pub seed: u64,
    pub format: Format,
    pub exec: Execution,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            inputs: Vec::new(),
            output: None,
            tau_supp: DEFAULT_TAU_SUPP,
            tau_cont: DEFAULT_TAU_CONT,
            n_oracle: DEFAULT_N_ORACLE,
            tol: 1e-8,
            seed: 0,
            format: Format::Json,
            exec: Execution::default(),
        }
    }
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, CliError> {
        let g = &cli.global;
        let (command, inputs) = describe(&cli.command);
        for (name, v) in [
            ("tau-supp", g.tau_supp),
            ("tau-cont", g.tau_cont),
            ("tol", g.tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::new(
                    EXIT_SCHEMA,
                    format!("--{name} must be positive, got {v}"),
                ));
            }
        }
        if g.n_oracle == 0 {
            return Err(CliError::new(EXIT_SCHEMA, "--n-oracle must be positive"));
        }
        Ok(RunConfig {
            command,
            inputs,
            output: g.output.clone(),
            tau_supp: g.tau_supp,
            tau_cont: g.tau_cont,
            n_oracle: g.n_oracle,
            tol: g.tol,
            seed: g.seed,
            format: g.format,
            exec: if g.sequential {
                Execution::Sequential
            } else {
                Execution::Parallel
            },
        })
    }
}

fn describe(cmd: &Command) -> (String, Vec<PathBuf>) {
    let p = |v: &[&PathBuf]| v.iter().map(|p| (*p).clone()).collect::<Vec<_>>();
    match cmd {
        Command::Kernel(k) => match k {
            KernelCmd::Modulus { kernel } => ("kernel modulus".into(), p(&[kernel])),
            KernelCmd::Pospart { kernel } => ("kernel pospart".into(), p(&[kernel])),
            KernelCmd::Meet { a, b } => ("kernel meet".into(), p(&[a, b])),
            KernelCmd::Join { a, b } => ("kernel join".into(), p(&[a, b])),
            KernelCmd::Compose { a, b } => ("kernel compose".into(), p(&[a, b])),
            KernelCmd::Bound { kernel } => ("kernel bound".into(), p(&[kernel])),
        },
        Command::Measure(m) => match m {
            MeasureCmd::Jordan { measure } => ("measure jordan".into(), p(&[measure])),
            MeasureCmd::Tv { a, b } => {
                let mut v = p(&[a]);
                v.extend(b.clone());
                ("measure tv".into(), v)
            }
            MeasureCmd::Sup { a, b } => ("measure sup".into(), p(&[a, b])),
            MeasureCmd::Inf { a, b } => ("measure inf".into(), p(&[a, b])),
        },
        Command::Operator(o) => match o {
            OperatorCmd::Apply { kernel, measure } => {
                ("operator apply".into(), p(&[kernel, measure]))
            }
            OperatorCmd::Adjoint { kernel, function } => {
                ("operator adjoint".into(), p(&[kernel, function]))
            }
            OperatorCmd::Pospart {
                kernel, measure, ..
            } => ("operator pospart".into(), p(&[kernel, measure])),
            OperatorCmd::CheckWeakContinuity {
                kernel,
                ac_rank_one,
                tests,
            } => {
                let mut v: Vec<PathBuf> = kernel.iter().chain(ac_rank_one).cloned().collect();
                v.extend(tests.iter().cloned());
                ("operator check-weak-continuity".into(), v)
            }
        },
        Command::Verify(VerifyCmd::Pospart { kernel, .. }) => {
            ("verify pospart".into(), p(&[kernel]))
        }
        Command::Demo(DemoCmd::SequenceExample { .. }) => ("demo sequence-example".into(), vec![]),
        Command::Doob(DoobCmd::Check { model, .. }) => ("doob check".into(), p(&[model])),
        Command::Doob(DoobCmd::Run { model, nu, .. }) => {
            let mut v = p(&[model]);
            v.extend(nu.clone());
            ("doob run".into(), v)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

pub fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::SpaceMismatch => EXIT_MISMATCH,
        Error::CarrierTooLarge { .. } | Error::BasisTooLarge(_) => EXIT_SIZE,
        Error::NoConvergence { .. } | Error::Divergence { .. } => EXIT_TOLERANCE,
        _ => EXIT_SCHEMA,
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(exit_code_for(&e), e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Read { .. } | IoError::Write { .. } => EXIT_IO,
            IoError::Schema { .. } => EXIT_SCHEMA,
            IoError::Core(inner) => exit_code_for(inner),
        };
        CliError::new(code, e.to_string())
    }
}

/// Whatever a command produces: the text to write and the exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub text: String,
    pub code: u8,
    /// Printed to stderr; set when the code is nonzero.
    pub message: Option<String>,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Outcome {
            text,
            code: EXIT_OK,
            message: None,
        }
    }

    fn fail(text: String, code: u8, message: String) -> Self {
        Outcome {
            text,
            code,
            message: Some(message),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn kernel_json(k: &TransitionKernel) -> String {
    io::to_json(&io::kernel_to_doc(k))
}

fn measure_out(mu: &SignedMeasure, cfg: &RunConfig) -> String {
    match cfg.format {
        Format::Json => io::to_json(&io::measure_to_doc(mu)),
        Format::Csv => io::measure_csv(mu),
    }
}

fn two_kernels(a: &Path, b: &Path) -> CliResult<(TransitionKernel, TransitionKernel)> {
    Ok((io::load_kernel(a)?, io::load_kernel(b)?))
}

fn two_measures(a: &Path, b: &Path) -> CliResult<(SignedMeasure, SignedMeasure)> {
    Ok((io::load_measure(a)?, io::load_measure(b)?))
}

fn run_kernel(cmd: &KernelCmd, cfg: &RunConfig) -> CliResult<Outcome> {
    let text = match cmd {
        KernelCmd::Modulus { kernel } => kernel_json(&io::load_kernel(kernel)?.modulus()),
        KernelCmd::Pospart { kernel } => kernel_json(&io::load_kernel(kernel)?.positive_part()),
        KernelCmd::Meet { a, b } => {
            let (a, b) = two_kernels(a, b)?;
            kernel_json(&a.meet(&b)?)
        }
        KernelCmd::Join { a, b } => {
            let (a, b) = two_kernels(a, b)?;
            kernel_json(&a.join(&b)?)
        }
        KernelCmd::Compose { a, b } => {
            let (a, b) = two_kernels(a, b)?;
            kernel_json(&a.compose_with(&b, cfg.exec)?)
        }
        KernelCmd::Bound { kernel } => {
            io::to_json(&json!({ "bound": io::load_kernel(kernel)?.bound() }))
        }
    };
    Ok(Outcome::ok(text))
}

fn run_measure(cmd: &MeasureCmd, cfg: &RunConfig) -> CliResult<Outcome> {
    let text = match cmd {
        MeasureCmd::Jordan { measure } => {
            let mu = io::load_measure(measure)?;
            let (pos, neg) = mu.jordan_decomposition();
            let (plus, minus) = mu.hahn_sets();
            io::to_json(&json!({
                "positive": io::measure_to_doc(&pos),
                "negative": io::measure_to_doc(&neg),
                "hahn_positive": plus.members(),
                "hahn_negative": minus.members(),
                "total_variation": mu.total_variation(),
            }))
        }
        MeasureCmd::Tv { a, b: None } => {
            io::to_json(&json!({ "total_variation": io::load_measure(a)?.total_variation() }))
        }
        MeasureCmd::Tv { a, b: Some(b) } => {
            let (a, b) = two_measures(a, b)?;
            io::to_json(&json!({ "tv_distance": a.tv_distance(&b)? }))
        }
        MeasureCmd::Sup { a, b } => {
            let (a, b) = two_measures(a, b)?;
            measure_out(&a.sup(&b)?, cfg)
        }
        MeasureCmd::Inf { a, b } => {
            let (a, b) = two_measures(a, b)?;
            measure_out(&a.inf(&b)?, cfg)
        }
    };
    Ok(Outcome::ok(text))
}

/// Point masses, the uniform measure and, if nonzero, the reference
/// (cell-width) measure.
fn default_tests(space: &SpaceRef) -> Vec<SignedMeasure> {
    let mut tests: Vec<SignedMeasure> = space
        .states()
        .map(|x| SignedMeasure::dirac(space, x).expect("state in range"))
        .collect();
    tests.push(SignedMeasure::uniform(space));
    let reference = SignedMeasure::reference(space);
    if reference.total_variation() > 0.0 {
        tests.push(reference);
    }
    tests
}

#[derive(Serialize)]
struct CbVerdict {
    invariant: bool,
    failing: Vec<String>,
}

impl From<CbInvarianceReport> for CbVerdict {
    fn from(r: CbInvarianceReport) -> Self {
        CbVerdict {
            invariant: r.invariant,
            failing: r.failing,
        }
    }
}

fn run_operator(cmd: &OperatorCmd, cfg: &RunConfig) -> CliResult<Outcome> {
    let text = match cmd {
        OperatorCmd::Apply { kernel, measure } => {
            let op = MeasureOperator::new(io::load_kernel(kernel)?);
            measure_out(&op.apply(&io::load_measure(measure)?)?, cfg)
        }
        OperatorCmd::Adjoint { kernel, function } => {
            let op = MeasureOperator::new(io::load_kernel(kernel)?);
            io::to_json(&io::function_to_doc(
                &op.adjoint_apply(&io::load_function(function)?)?,
            ))
        }
        OperatorCmd::Pospart {
            kernel,
            measure,
            oracle,
            ..
        } => {
            let k = io::load_kernel(kernel)?;
            let mu = io::load_measure(measure)?;
            if !mu.is_positive() {
                return Err(CliError::new(
                    EXIT_SCHEMA,
                    "`weights`: measure must be positive",
                ));
            }
            let result = if *oracle {
                MeasureOperator::new(k).positive_part_oracle_with(&mu, cfg.n_oracle, cfg.exec)?
            } else {
                MeasureOperator::new(k.positive_part()).apply(&mu)?
            };
            measure_out(&result, cfg)
        }
        OperatorCmd::CheckWeakContinuity {
            kernel,
            ac_rank_one,
            tests,
        } => {
            let (op, cb) = match (ac_rank_one, kernel) {
                (Some(nu), _) => (BlackBoxOperator::ac_rank_one(&io::load_measure(nu)?), None),
                (None, Some(path)) => {
                    let k = io::load_kernel(path)?;
                    let cb = if k.space().sequence_truncation().is_some() {
                        Some(CbVerdict::from(cb_invariance_check(
                            &MeasureOperator::new(k.clone()),
                            cfg.tau_cont,
                        )?))
                    } else {
                        None
                    };
                    (BlackBoxOperator::from_kernel(&k), cb)
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            let mut probes = default_tests(op.space());
            for path in tests {
                let mu = io::load_measure(path)?;
                crate::space::StateSpace::ensure_same(mu.space(), op.space())?;
                probes.push(mu);
            }
            let report = weak_continuity_check(&op, &probes)?;
            let mut out = json!({
                "operator": op.label(),
                "continuous": report.continuous,
                "max_deviation": report.max_deviation,
            });
            if let (Some(i), Some(w)) = (report.witness_index, &report.witness) {
                out["witness_index"] = json!(i);
                out["witness"] = serde_json::to_value(io::measure_to_doc(w)).expect("json");
            }
            if let Some(cb) = cb {
                out["cb_invariance"] = serde_json::to_value(cb).expect("json");
            }
            io::to_json(&out)
        }
    };
    Ok(Outcome::ok(text))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PospartVerification {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub max_deviation: f64,
    pub worst_trial: Option<usize>,
    pub tol: f64,
    pub pass: bool,
}

/// Oracle versus kernel positive part on `trials` random positive measures
/// drawn from a seeded generator.
pub fn verify_pospart(
    k: &TransitionKernel,
    trials: usize,
    seed: u64,
    n_oracle: usize,
    exec: Execution,
) -> crate::error::Result<PospartVerification> {
    let n = k.len();
    if n > n_oracle {
        return Err(Error::CarrierTooLarge { n, cap: n_oracle });
    }
    let space = k.space().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let measures = (0..trials)
        .map(|_| SignedMeasure::new(&space, (0..n).map(|_| rng.random::<f64>()).collect()))
        .collect::<crate::error::Result<Vec<_>>>()?;
    let op = MeasureOperator::new(k.clone());
    let via_kernel = MeasureOperator::new(k.positive_part());
    let deviations = exec
        .map_range(trials, |i| {
            let oracle =
                op.positive_part_oracle_with(&measures[i], n_oracle, Execution::Sequential)?;
            oracle.max_abs_diff(&via_kernel.apply(&measures[i])?)
        })
        .into_iter()
        .collect::<crate::error::Result<Vec<f64>>>()?;
    let (worst_trial, max_deviation) =
        deviations
            .iter()
            .copied()
            .enumerate()
            .fold(
                (None, 0.0),
                |best, (i, d)| if d > best.1 { (Some(i), d) } else { best },
            );
    Ok(PospartVerification {
        n,
        trials,
        seed,
        max_deviation,
        worst_trial,
        tol: POSPART_TOL,
        pass: max_deviation <= POSPART_TOL,
    })
}

fn run_verify(cmd: &VerifyCmd, cfg: &RunConfig) -> CliResult<Outcome> {
    let VerifyCmd::Pospart { kernel, trials } = cmd;
    let k = io::load_kernel(kernel)?;
    let report = verify_pospart(&k, *trials, cfg.seed, cfg.n_oracle, cfg.exec)?;
    let text = io::to_json(&report);
    if report.pass {
        Ok(Outcome::ok(text))
    } else {
        let msg = format!(
            "oracle deviates from the kernel positive part by {:e} (tolerance {:e})",
            report.max_deviation, POSPART_TOL
        );
        Ok(Outcome::fail(text, EXIT_TOLERANCE, msg))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct LabelledRow {
    from: String,
    entries: Vec<(String, f64)>,
}

fn labelled_rows(k: &TransitionKernel, labels: &[String]) -> Vec<LabelledRow> {
    (0..k.len())
        .filter_map(|x| {
            let entries: Vec<(String, f64)> = k
                .row(x)
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(y, w)| (labels[y].clone(), *w))
                .collect();
            (!entries.is_empty()).then(|| LabelledRow {
                from: labels[x].clone(),
                entries,
            })
        })
        .collect()
}

/// Report for the sequence-space fixture at truncation `n`.
pub fn sequence_example(n: usize, tau_cont: f64) -> CliResult<serde_json::Value> {
    if n < 8 {
        return Err(CliError::new(
            EXIT_SCHEMA,
            format!("`n`: truncation must be at least 8, got {n}"),
        ));
    }
    let k = sequence_difference_kernel(n)?;
    let space = k.space().clone();
    let labels: Vec<String> = space
        .states()
        .map(|x| space.seq_point(x).expect("sequence state").to_string())
        .collect();
    let u = k.modulus();
    let t_op = MeasureOperator::new(k.clone());
    let u_op = MeasureOperator::new(u.clone());
    let one = BoundedFunction::one(&space);
    let t_one = t_op.adjoint_apply(&one)?;
    let u_one = u_op.adjoint_apply(&one)?;
    let expected: Vec<f64> = space
        .states()
        .map(|x| match space.seq_point(x) {
            Some(crate::space::SeqPoint::Pos(_)) => 2.0,
            _ => 0.0,
        })
        .collect();
    let t_cb = cb_invariance_check(&t_op, tau_cont)?;
    let u_cb = cb_invariance_check(&u_op, tau_cont)?;
    Ok(json!({
        "N": n,
        "space": SpaceDesc::of(&space),
        "states": labels,
        "k": labelled_rows(&k, &labels),
        "modulus": labelled_rows(&u, &labels),
        "bound": k.bound(),
        "T_star_one": t_one.values(),
        "U_star_one": u_one.values(),
        "U_star_one_is_twice_positive_indicator": u_one.values() == expected.as_slice(),
        "cb_invariance": {
            "T": CbVerdict::from(t_cb),
            "U": CbVerdict::from(u_cb),
        },
    }))
}

fn run_demo(cmd: &DemoCmd, cfg: &RunConfig) -> CliResult<Outcome> {
    let DemoCmd::SequenceExample { truncation } = cmd;
    Ok(Outcome::ok(io::to_json(&sequence_example(
        *truncation,
        cfg.tau_cont,
    )?)))
}

/// One step for discrete models, unit time for continuous ones.
fn default_t0(_model: &SemigroupModel, t0: Option<f64>) -> f64 {
    t0.unwrap_or(1.0)
}

#[derive(Debug, Serialize)]
struct TraceSummary {
    start: String,
    rate: Option<f64>,
    terminal: f64,
    converged: bool,
    points: Vec<(f64, f64)>,
}

fn trace_path(base: &Path, index: usize) -> PathBuf {
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    let name = match base.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}.{index}.{ext}"),
        None => format!("{stem}.{index}"),
    };
    base.with_file_name(name)
}

fn hypothesis_failure(report: &DoobReport) -> String {
    format!("hypotheses failed: {}", report.failures().join(", "))
}

fn run_doob(cmd: &DoobCmd, cfg: &RunConfig) -> CliResult<Outcome> {
    match cmd {
        DoobCmd::Check { model, t0 } => {
            let model = io::load_model(model)?.with_tau_supp(cfg.tau_supp);
            let report = doob_hypothesis_report(&model, default_t0(&model, *t0));
            let text = io::to_json(&report);
            if report.all_pass {
                Ok(Outcome::ok(text))
            } else {
                Ok(Outcome::fail(
                    text,
                    EXIT_HYPOTHESIS,
                    hypothesis_failure(&report),
                ))
            }
        }
        DoobCmd::Run {
            model,
            t0,
            nu,
            t_max,
            trace,
        } => {
            let model = io::load_model(model)?.with_tau_supp(cfg.tau_supp);
            let report = doob_hypothesis_report(&model, default_t0(&model, *t0));
            if !report.all_pass {
                let text = io::to_json(&json!({ "report": report, "traces": [] }));
                return Ok(Outcome::fail(
                    text,
                    EXIT_HYPOTHESIS,
                    hypothesis_failure(&report),
                ));
            }
            let space = model.space().clone();
            let starts: Vec<(String, SignedMeasure)> = match nu {
                Some(path) => {
                    let m = io::load_measure(path)?;
                    crate::space::StateSpace::ensure_same(m.space(), &space)?;
                    vec![(path.display().to_string(), m)]
                }
                None => space
                    .states()
                    .map(|x| {
                        (
                            format!("delta({x})"),
                            SignedMeasure::dirac(&space, x).expect("state"),
                        )
                    })
                    .collect(),
            };
            let traces: Vec<ConvergenceTrace> = cfg
                .exec
                .map_range(starts.len(), |i| {
                    match doob_convergence(&model, &starts[i].1, *t_max, cfg.tol) {
                        Err(Error::Divergence { trace, .. }) => Ok(*trace),
                        other => other,
                    }
                })
                .into_iter()
                .collect::<crate::error::Result<_>>()?;
            if let Some(base) = trace {
                if traces.len() == 1 {
                    io::write_text(base, &traces[0].to_csv())?;
                } else {
                    for (i, t) in traces.iter().enumerate() {
                        io::write_text(&trace_path(base, i), &t.to_csv())?;
                    }
                }
            }
            let summaries: Vec<TraceSummary> = starts
                .iter()
                .zip(&traces)
                .map(|((name, _), t)| TraceSummary {
                    start: name.clone(),
                    rate: t.rate,
                    terminal: t.terminal,
                    converged: t.converged,
                    points: t.points.clone(),
                })
                .collect();
            let text = io::to_json(&json!({ "report": report, "traces": summaries }));
            let missed: Vec<&str> = summaries
                .iter()
                .filter(|s| !s.converged)
                .map(|s| s.start.as_str())
                .collect();
            if missed.is_empty() {
                Ok(Outcome::ok(text))
            } else {
                let msg = format!(
                    "distance stayed above tol {:e} for {}",
                    cfg.tol,
                    missed.join(", ")
                );
                Ok(Outcome::fail(text, EXIT_TOLERANCE, msg))
            }
        }
    }
}

/// Runs one parsed command and returns its output text and exit code.
pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let cfg = RunConfig::from_cli(cli)?;
    match &cli.command {
        Command::Kernel(c) => run_kernel(c, &cfg),
        Command::Measure(c) => run_measure(c, &cfg),
        Command::Operator(c) => run_operator(c, &cfg),
        Command::Verify(c) => run_verify(c, &cfg),
        Command::Demo(c) => run_demo(c, &cfg),
        Command::Doob(c) => run_doob(c, &cfg),
    }
}

/// Parses arguments, runs the command, writes the output and maps the exit
/// code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            if let Err(e) = emit(&cli.global.output, &outcome.text) {
                eprintln!("error: {}", e.message);
                return ExitCode::from(e.code);
            }
            if let Some(msg) = &outcome.message {
                eprintln!("error: {msg}");
            }
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn emit(output: &Option<PathBuf>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => Ok(io::write_text(path, text)?),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::new(EXIT_IO, e.to_string()))
        }
    }
}
