//! The `flowtab` command line.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use flowtab_core::brunnmink::{
    certify_factor_bound, certify_main_inequality, count_instance, explore_uncorrected, FactorBound,
};
use flowtab_core::flows::{
    count_flows_bruteforce, expand_capacities, kostant_phi, reduce_to_tables, DEFAULT_FLOW_BUDGET,
};
use flowtab_core::montecarlo::{Estimator, EstimatorConfig};
use flowtab_core::permanent::{
    factorize_doubly_stochastic, permanent_exact, permanent_rational, SquareMatrix, DEFAULT_PERMANENT_CAP,
    RATIONAL_PERMANENT_CAP,
};
use flowtab_core::scaling::{minimize_f, ScalingOptions, DEFAULT_TOLERANCE};
use flowtab_core::special::rational_to_f64;
use flowtab_core::tables::{
    count_bruteforce, count_exact, enumerate_tables, CountLimits, DEFAULT_MEMO_BUDGET,
    DEFAULT_ORACLE_TOTAL,
};
use flowtab_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{error_json, CliError, EXIT_CERTIFICATION, EXIT_INPUT, EXIT_OK};
use crate::io::*;
use crate::parallel;

/// Largest tolerance accepted by `--tolerance`.
pub const MAX_TOLERANCE: f64 = 1e-3;
/// Relative standard error above which `estimate` warns.
pub const WARN_RELATIVE_STDERR: f64 = 0.5;

#[derive(Debug, Parser)]
#[command(
    name = "flowtab",
    version,
    about = "Exact, estimated and certified weighted counts of contingency tables and network flows"
)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Options {
    /// Monte Carlo sample count
    #[arg(long, global = true, default_value_t = 10_000)]
    samples: u64,
    /// Seed for the Monte Carlo streams
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Largest permanent order N
    #[arg(long = "cap-permanent", visible_alias = "cap", global = true, default_value_t = DEFAULT_PERMANENT_CAP)]
    cap_permanent: usize,
    /// Largest table total N for exhaustive enumeration
    #[arg(long = "cap-oracle", global = true, default_value_t = DEFAULT_ORACLE_TOTAL)]
    cap_oracle: u64,
    /// Largest number of dynamic-programming states
    #[arg(long = "memo-budget", global = true, default_value_t = DEFAULT_MEMO_BUDGET)]
    memo_budget: usize,
    /// Margin tolerance for matrix scaling, in (0, 1e-3]
    #[arg(long, global = true, default_value_t = DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Also record evidence on the uncorrected inequality (never fails)
    #[arg(long = "explore-23", global = true)]
    explore_23: bool,
    /// Write the report here instead of stdout
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
}

impl Options {
    fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 || self.cap_permanent == 0 || self.cap_oracle == 0 || self.memo_budget == 0 {
            return Err(CliError::Input("samples and caps must be positive".into()));
        }
        if !(self.tolerance > 0.0 && self.tolerance <= MAX_TOLERANCE) {
            return Err(CliError::Input(format!(
                "tolerance must lie in (0, {MAX_TOLERANCE}], got {}",
                self.tolerance
            )));
        }
        Ok(())
    }

    fn limits(&self) -> CountLimits {
        CountLimits {
            memo_budget: self.memo_budget,
            oracle_total: self.cap_oracle,
        }
    }

    fn scaling(&self) -> ScalingOptions {
        ScalingOptions {
            tolerance: self.tolerance,
            ..ScalingOptions::default()
        }
    }
}

#[derive(Debug, Args)]
struct Input {
    /// Input JSON file; stdin when absent or `-`
    input: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact weighted count T(R, C; W) by dynamic programming
    Count(Input),
    /// Exact weighted count by exhaustive enumeration
    CountOracle(Input),
    /// Every table of an instance as JSON lines
    Enumerate(Input),
    /// Scale a positive matrix to real margins
    Scale(Input),
    /// Permanent of a square matrix
    Permanent(Input),
    /// Doubly stochastic factorization of the block matrix with its bounds
    Factorize(Input),
    /// Monte Carlo estimate of T(R, C; W)
    Estimate(Input),
    /// Certify the Brunn-Minkowski inequalities on a list of instances
    VerifyBm(Input),
    /// Kostant partition function of an integer vector
    Kostant {
        #[arg(required = true, allow_negative_numbers = true)]
        a: Vec<i64>,
    },
    /// Integer feasible flows of a network, counted through tables
    FlowCount {
        #[command(flatten)]
        input: Input,
        /// Cross-check against exhaustive flow enumeration
        #[arg(long)]
        oracle: bool,
    },
    /// Table instance of a network
    Reduce(Input),
}

/// Runs the command line on the process streams and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(
        args,
        &mut std::io::stdin().lock(),
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}

pub fn run_with<I, T>(args: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", error_json("InvalidArguments", e.to_string().trim()));
            return EXIT_INPUT;
        }
    };
    let result = cli.opts.validate().and_then(|()| match &cli.opts.output {
        Some(path) => {
            let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
            let r = execute(&cli, stdin, &mut file, stderr);
            file.flush()?;
            r
        }
        None => execute(&cli, stdin, stdout, stderr),
    });
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            let _ = writeln!(
                stderr,
                "{}",
                error_json("CertificationFailed", "a normative check did not hold")
            );
            EXIT_CERTIFICATION
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.to_json());
            e.exit_code()
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(input: &Input, stdin: &mut dyn Read) -> Result<T, CliError> {
    let text = match &input.input {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p)?,
        _ => {
            let mut s = String::new();
            stdin.read_to_string(&mut s)?;
            s
        }
    };
    Ok(serde_json::from_str(&text)?)
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<(), CliError> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Runs the subcommand; `Ok(false)` marks a failed normative check.
fn execute(cli: &Cli, stdin: &mut dyn Read, out: &mut dyn Write, err: &mut dyn Write) -> Result<bool, CliError> {
    let opts = &cli.opts;
    match &cli.command {
        Command::Count(input) => {
            let (margins, weights) = read_json::<InstanceJson>(input, stdin)?.instance()?;
            let r = count_exact(&margins, &weights, &opts.limits())?;
            emit(out, &CountOutput {
                count: count_string(&r.count),
                tables_visited: r.tables_visited,
            })?;
        }
        Command::CountOracle(input) => {
            let (margins, weights) = read_json::<InstanceJson>(input, stdin)?.instance()?;
            let r = count_bruteforce(&margins, &weights, &opts.limits())?;
            emit(out, &CountOutput {
                count: count_string(&r.count),
                tables_visited: r.tables_visited,
            })?;
        }
        Command::Enumerate(input) => {
            let (margins, weights) = read_json::<InstanceJson>(input, stdin)?.instance()?;
            for table in enumerate_tables(&margins, &weights, &opts.limits())? {
                emit(out, &TableLine {
                    weight: count_string(&table.weight(&weights)),
                    table: table.into_rows(),
                })?;
            }
        }
        Command::Scale(input) => {
            let inst: InstanceJson = read_json(input, stdin)?;
            let g = inst.positive_matrix()?;
            let (rows, cols) = inst.real_margins()?;
            let d = minimize_f(&g, &rows, &cols, &opts.scaling())?;
            emit(out, &ScaleOutput::from(&d))?;
        }
        Command::Permanent(input) => {
            let a = read_json::<MatrixJson>(input, stdin)?.to_rational()?;
            if a.rows() != a.cols() {
                return Err(Error::DimensionMismatch(format!("{}x{} is not square", a.rows(), a.cols())).into());
            }
            if a.rows() > opts.cap_permanent {
                return Err(Error::SizeCapExceeded {
                    order: a.rows(),
                    cap: opts.cap_permanent,
                }
                .into());
            }
            let report = if a.rows() <= RATIONAL_PERMANENT_CAP {
                let exact = permanent_rational(&a)?;
                PermanentOutput {
                    permanent: rational_to_f64(&exact),
                    exact: Some(count_string(&exact)),
                }
            } else {
                let m = SquareMatrix::new(a.map(rational_to_f64))?;
                PermanentOutput {
                    permanent: permanent_exact(&m, opts.cap_permanent)?,
                    exact: None,
                }
            };
            emit(out, &report)?;
        }
        Command::Factorize(input) => {
            let inst: InstanceJson = read_json(input, stdin)?;
            let margins = inst.margins()?;
            let g = inst.positive_matrix()?;
            let cert = factorize_doubly_stochastic(&g, &margins, &opts.scaling(), opts.cap_permanent)?;
            emit(out, &FactorizeOutput::from(&cert))?;
            return Ok(cert.checks.all());
        }
        Command::Estimate(input) => {
            let (margins, weights) = read_json::<InstanceJson>(input, stdin)?.instance()?;
            let cfg = EstimatorConfig {
                samples: opts.samples,
                seed: opts.seed,
                permanent_cap: opts.cap_permanent,
            };
            let est = Estimator::new(&margins, &weights, cfg)?;
            let blocks = parallel::pool()?.install(|| {
                (0..est.block_count())
                    .into_par_iter()
                    .map(|b| est.run_block(b))
                    .collect::<flowtab_core::Result<Vec<_>>>()
            })?;
            let r = est.finish(blocks);
            if r.relative_stderr() > WARN_RELATIVE_STDERR {
                writeln!(
                    err,
                    "{}",
                    serde_json::json!({"warning": {
                        "code": "HighRelativeStderr",
                        "relative_stderr": r.relative_stderr(),
                    }})
                )?;
            }
            emit(out, &EstimateOutput {
                mean: r.mean,
                stderr: r.stderr,
                samples: r.samples_used,
            })?;
        }
        Command::VerifyBm(input) => {
            let list = read_json::<BmListJson>(input, stdin)?.into_vec();
            let lines = parallel::pool()?.install(|| {
                list.par_iter()
                    .enumerate()
                    .map(|(index, inst)| verify_one(index, inst, opts))
                    .collect::<Vec<_>>()
            });
            let mut all = true;
            for line in lines {
                let line = line?;
                all &= line.holds;
                emit(out, &line)?;
            }
            return Ok(all);
        }
        Command::Kostant { a } => {
            let phi = kostant_phi(a, &opts.limits())?;
            emit(out, &KostantOutput { phi: count_string(&phi) })?;
        }
        Command::FlowCount { input, oracle } => {
            let net = read_json::<NetworkJson>(input, stdin)?.network()?;
            let count = reduce_to_tables(&expand_capacities(&net))?.count(&opts.limits())?;
            let oracle = if *oracle {
                Some(count_flows_bruteforce(&net, DEFAULT_FLOW_BUDGET)?)
            } else {
                None
            };
            let agrees = oracle.as_ref().is_none_or(|o| *o == count);
            emit(out, &FlowCountOutput {
                count: count_string(&count),
                oracle: oracle.as_ref().map(count_string),
            })?;
            return Ok(agrees);
        }
        Command::Reduce(input) => {
            let net = read_json::<NetworkJson>(input, stdin)?.network()?;
            let expanded = net.has_capacities().then(|| expand_capacities(&net));
            let red = reduce_to_tables(expanded.as_ref().unwrap_or(&net))?;
            emit(out, &ReduceOutput {
                instance: red.instance.as_ref().map(|(m, w)| InstanceJson::from_core(m, w)),
                z: red.z.clone(),
                row_map: red.row_map.clone(),
                col_map: red.col_map.clone(),
                expanded: expanded.as_ref().map(NetworkJson::from_core),
            })?;
        }
    }
    Ok(true)
}

fn verify_one(index: usize, json: &BmInstanceJson, opts: &Options) -> Result<VerifyLine, CliError> {
    let inst = json.instance()?;
    let counts = count_instance(&inst, &opts.limits())?;
    let main = certify_main_inequality(&inst, &counts);
    let factorials = certify_factor_bound(&inst, &counts, FactorBound::Factorials)?;
    let gamma = certify_factor_bound(&inst, &counts, FactorBound::Gamma)?;
    let kappa = match certify_factor_bound(&inst, &counts, FactorBound::Kappa) {
        Ok(r) => Some(ReportJson::from(&r)),
        Err(Error::KappaUndefined) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(VerifyLine {
        index,
        holds: main.holds && factorials.holds && gamma.holds,
        main: ReportJson::from(&main),
        factor_bounds: FactorBoundsJson {
            factorials: ReportJson::from(&factorials),
            gamma: ReportJson::from(&gamma),
            kappa,
        },
        explore: opts
            .explore_23
            .then(|| ExploreJson::from(&explore_uncorrected(&inst, &counts))),
    })
}
