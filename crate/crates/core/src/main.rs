//! `runstat` command-line interface.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 data error,
//! 3 numerical or capability error.

use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use runstat::exact::{ExactConfig, ExactDistribution, DEFAULT_MAX_EXACT_N};
use runstat::mc::{self, critical_value_scaling, simulate_null_side, NullSampleSet, SidePolicy};
use runstat::partitions::{
    count_partitions, count_partitions_exact_parts, count_partitions_max_part,
    hardy_ramanujan_estimate, inequivalent_sequence_count_both,
};
use runstat::power::{fit_study, power_study, Design, FitStudyConfig, PeakAlternative, PeakShape, PowerConfig};
use runstat::report::{run_test, MethodChoice, TestOptions};
use runstat::{input, rng, Error, Side};

#[derive(Parser)]
#[command(name = "runstat", version, about = "Weighted-runs test statistic for ordered Gaussian data")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Test an observation table (CSV: x,observed,mean,sigma).
    Test(TestArgs),
    /// Critical value of T for one (N, alpha), or the standard table.
    Critical(CriticalArgs),
    /// Monte Carlo critical values over a grid of N with a line fit in ln N.
    Scaling(ScalingArgs),
    /// Power of T versus chi-square under a localized peak.
    Power(PowerArgs),
    /// Integer partition counts.
    Partitions(PartitionArgs),
    /// Distribution of T after a straight-line least-squares fit.
    FitStudy(FitStudyArgs),
    /// Export or import cached Monte Carlo null samples.
    McTable {
        #[command(subcommand)]
        action: McTableAction,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Auto,
    Exact,
    Mc,
}

#[derive(Clone, Copy, ValueEnum)]
enum SideArg {
    Success,
    Failure,
    Both,
}

impl From<SideArg> for SidePolicy {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Success => SidePolicy::Success,
            SideArg::Failure => SidePolicy::Failure,
            SideArg::Both => SidePolicy::Both,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SingleSideArg {
    Success,
    Failure,
}

impl From<SingleSideArg> for Side {
    fn from(s: SingleSideArg) -> Self {
        match s {
            SingleSideArg::Success => Side::Success,
            SingleSideArg::Failure => Side::Failure,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PeakArg {
    Cauchy,
    Gauss,
}

#[derive(Args)]
struct Common {
    /// Random seed; drawn from system entropy and reported when omitted.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TestArgs {
    input: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long, value_enum, default_value = "both")]
    side: SideArg,
    #[arg(long = "mc-samples", default_value_t = mc::QUICK_EXPERIMENTS, value_parser = positive)]
    mc_samples: usize,
    #[arg(long, default_value_t = 0.05, value_parser = unit_interval)]
    alpha: f64,
    /// Largest N handled by the exact method.
    #[arg(long, default_value_t = DEFAULT_MAX_EXACT_N, value_parser = positive)]
    cutover: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CriticalArgs {
    #[arg(long, required_unless_present = "table")]
    n: Option<usize>,
    #[arg(long, default_value_t = 0.05, value_parser = unit_interval)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "auto")]
    method: MethodArg,
    #[arg(long = "mc-samples", default_value_t = mc::TABLE_EXPERIMENTS, value_parser = positive)]
    mc_samples: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_EXACT_N, value_parser = positive)]
    cutover: usize,
    /// Emit the full grid N in {5,10,25,50,100,500,1000} x alpha in {0.05,0.01,0.001} as CSV.
    #[arg(long)]
    table: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [5usize, 10, 25, 50, 100, 500, 1000])]
    ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.05, 0.01, 0.001], value_parser = unit_interval)]
    alphas: Vec<f64>,
    #[arg(long, default_value_t = mc::TABLE_EXPERIMENTS, value_parser = positive)]
    k: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PowerArgs {
    #[arg(long, default_value_t = 10, value_parser = positive)]
    n: usize,
    /// Comma-separated peak amplitudes.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    amplitudes: Vec<f64>,
    #[arg(long, default_value_t = 5.5)]
    beta: f64,
    #[arg(long, default_value_t = 2.0)]
    gamma: f64,
    #[arg(long, default_value_t = 10_000)]
    k: usize,
    #[arg(long, default_value_t = 0.05, value_parser = unit_interval)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "cauchy")]
    peak: PeakArg,
    #[arg(long, value_enum, default_value = "success")]
    side: SingleSideArg,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct PartitionArgs {
    #[arg(long)]
    n: usize,
    #[arg(long = "exact-parts")]
    exact_parts: Option<usize>,
    #[arg(long = "max-part")]
    max_part: Option<usize>,
    /// Number of inequivalent sequences of length n, computed two ways.
    #[arg(long)]
    nu: bool,
    /// Add the asymptotic estimate of nu(n).
    #[arg(long)]
    estimate: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitStudyArgs {
    #[arg(long, default_value_t = 10)]
    n: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    slope: f64,
    #[arg(long, default_value_t = 0.0)]
    intercept: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Write the fitted-T tail probabilities as CSV to this path.
    #[arg(long = "ecdf-out")]
    ecdf_out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum McTableAction {
    /// Simulate null samples and write them as CSV.
    Export {
        #[arg(long, value_parser = positive)]
        n: usize,
        #[arg(long, default_value_t = mc::TABLE_EXPERIMENTS, value_parser = positive)]
        k: usize,
        #[arg(long, value_enum, default_value = "success")]
        side: SingleSideArg,
        #[command(flatten)]
        common: Common,
    },
    /// Load a sample file and evaluate p-values or critical values from it.
    Import {
        file: PathBuf,
        #[arg(long = "t-obs")]
        t_obs: Option<f64>,
        #[arg(long, value_parser = unit_interval)]
        alpha: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("expected a positive integer, got '{s}'")),
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("expected a number strictly between 0 and 1, got '{s}'")),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::Data { .. } | Error::Io(_) | Error::Csv(_) => 2,
        Error::Numerical(_) | Error::Capability(_) | Error::EmptySample(_) | Error::InsufficientTail(_) => 3,
    }
}

fn seed_or_entropy(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rng::entropy_seed)
}

fn emit(out: Option<&Path>, body: &[u8]) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, value: &impl serde::Serialize) -> Result<(), Error> {
    let mut body = serde_json::to_vec_pretty(value).expect("report serializes");
    body.push(b'\n');
    emit(out, &body)
}

fn exact_config(cutover: usize) -> ExactConfig {
    ExactConfig {
        max_exact_n: cutover,
        ..Default::default()
    }
}

fn cmd_test(args: TestArgs) -> Result<(), Error> {
    let series = input::read_series_file(&args.input)?;
    let opts = TestOptions {
        method: match args.method {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Exact => MethodChoice::Exact,
            MethodArg::Mc => MethodChoice::Mc,
        },
        sides: args.side.into(),
        mc_experiments: args.mc_samples,
        seed: seed_or_entropy(args.common.seed),
        alpha: args.alpha,
        exact: exact_config(args.cutover),
    };
    let report = run_test(&series, &opts)?;
    emit_json(args.common.out.as_deref(), &report)
}

/// Critical value and the method used to obtain it.
fn critical_value(
    n: usize,
    alpha: f64,
    method: MethodArg,
    cutover: usize,
    k: usize,
    seed: u64,
) -> Result<(f64, &'static str), Error> {
    let use_exact = match method {
        MethodArg::Exact => true,
        MethodArg::Mc => false,
        MethodArg::Auto => n <= cutover,
    };
    if use_exact {
        let d = ExactDistribution::new(n, exact_config(cutover))?;
        Ok((d.critical_value(alpha)?, "exact"))
    } else {
        let samples = simulate_null_side(n, k, seed, Side::Success)?;
        Ok((samples.critical_value(alpha)?, "mc"))
    }
}

const TABLE_NS: [usize; 7] = [5, 10, 25, 50, 100, 500, 1000];
const TABLE_ALPHAS: [f64; 3] = [0.05, 0.01, 0.001];

fn cmd_critical(args: CriticalArgs) -> Result<(), Error> {
    let seed = seed_or_entropy(args.common.seed);
    if args.table {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["n", "method", "alpha_0.05", "alpha_0.01", "alpha_0.001"])?;
        for n in TABLE_NS {
            let mut row = vec![n.to_string(), String::new()];
            let use_exact = match args.method {
                MethodArg::Exact => true,
                MethodArg::Mc => false,
                MethodArg::Auto => n <= args.cutover,
            };
            if use_exact {
                let d = ExactDistribution::new(n, exact_config(args.cutover))?;
                row[1] = "exact".into();
                for a in TABLE_ALPHAS {
                    row.push(format!("{:.1}", d.critical_value(a)?));
                }
            } else {
                let samples = simulate_null_side(n, args.mc_samples, seed, Side::Success)?;
                row[1] = "mc".into();
                for a in TABLE_ALPHAS {
                    row.push(format!("{:.1}", samples.critical_value(a)?));
                }
            }
            w.write_record(&row)?;
        }
        let mut body = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        body.extend_from_slice(format!("# seed={seed} mc_samples={}\n", args.mc_samples).as_bytes());
        return emit(args.common.out.as_deref(), &body);
    }
    let n = args.n.expect("clap enforces --n without --table");
    if n == 0 {
        return Err(Error::InvalidArgument("--n must be at least 1".into()));
    }
    let (t, method) = critical_value(n, args.alpha, args.method, args.cutover, args.mc_samples, seed)?;
    let mut value = json!({
        "n": n,
        "alpha": args.alpha,
        "method": method,
        "critical_value": t,
        "rounded": format!("{t:.1}"),
    });
    if method == "mc" {
        value["seed"] = json!(seed);
        value["mc_samples"] = json!(args.mc_samples);
    }
    emit_json(args.common.out.as_deref(), &value)
}

fn cmd_scaling(args: ScalingArgs) -> Result<(), Error> {
    let seed = seed_or_entropy(args.common.seed);
    let result = critical_value_scaling(&args.alphas, &args.ns, args.k, seed)?;
    emit_json(
        args.common.out.as_deref(),
        &json!({ "seed": seed, "k": args.k, "scaling": result }),
    )
}

fn cmd_power(args: PowerArgs) -> Result<(), Error> {
    let seed = seed_or_entropy(args.common.seed);
    let shape = match args.peak {
        PeakArg::Cauchy => PeakShape::Cauchy,
        PeakArg::Gauss => PeakShape::Gauss,
    };
    let alternatives: Vec<PeakAlternative> = args
        .amplitudes
        .iter()
        .map(|&amplitude| PeakAlternative {
            amplitude,
            location: args.beta,
            scale: args.gamma,
            shape,
        })
        .collect();
    let mut config = PowerConfig::new(Design::unit(args.n), args.k, args.alpha, seed);
    config.side = args.side.into();
    let curve = power_study(&alternatives, &config)?;
    let mut body = Vec::new();
    curve.write_csv(&mut body)?;
    body.extend_from_slice(
        format!(
            "# seed={seed} k={} alpha={} t_critical={} threshold={:?}\n",
            curve.experiments, curve.alpha, curve.t_critical, curve.threshold_method
        )
        .as_bytes(),
    );
    emit(args.common.out.as_deref(), &body)
}

fn cmd_partitions(args: PartitionArgs) -> Result<(), Error> {
    let n = args.n;
    let mut value = json!({ "n": n, "p": count_partitions(n).to_string() });
    if let Some(k) = args.exact_parts {
        value["exact_parts"] = json!({ "k": k, "count": count_partitions_exact_parts(n, k).to_string() });
    }
    if let Some(i) = args.max_part {
        value["max_part"] = json!({ "i": i, "count": count_partitions_max_part(n, i).to_string() });
    }
    if (args.nu || args.estimate) && n == 0 {
        return Err(Error::InvalidArgument("nu(n) needs n >= 1".into()));
    }
    let mut nu_value = None;
    if args.nu {
        let both = inequivalent_sequence_count_both(n);
        if both.double_sum != both.from_partition_number {
            return Err(Error::Numerical(format!("partition identity violated at n = {n}")));
        }
        value["nu"] = json!({
            "double_sum": both.double_sum.to_string(),
            "p_n_plus_1_minus_1": both.from_partition_number.to_string(),
            "equal": true,
        });
        nu_value = Some(both.double_sum);
    }
    if args.estimate {
        let est = hardy_ramanujan_estimate(n);
        let exact = nu_value.unwrap_or_else(|| count_partitions(n + 1) - 1u32);
        let exact_f: f64 = exact.to_string().parse().unwrap_or(f64::INFINITY);
        value["estimate"] = json!({
            "hardy_ramanujan": est,
            "formatted": format!("{est:.2e}"),
            "ratio_to_nu": est / exact_f,
        });
    }
    emit_json(args.out.as_deref(), &value)
}

fn cmd_fit_study(args: FitStudyArgs) -> Result<(), Error> {
    let seed = seed_or_entropy(args.common.seed);
    let config = FitStudyConfig {
        n: args.n,
        experiments: args.k,
        slope: args.slope,
        intercept: args.intercept,
        sigma: args.sigma,
        seed,
        x: None,
    };
    let result = fit_study(&config)?;
    if let Some(path) = &args.ecdf_out {
        let file = std::fs::File::create(path)?;
        result.write_ecdf_csv(file)?;
    }
    emit_json(
        args.common.out.as_deref(),
        &json!({ "config": config, "critical_values": result.critical_values }),
    )
}

fn cmd_mc_table(action: McTableAction) -> Result<(), Error> {
    match action {
        McTableAction::Export { n, k, side, common } => {
            let seed = seed_or_entropy(common.seed);
            let samples = simulate_null_side(n, k, seed, side.into())?;
            let mut body = Vec::new();
            samples.write_csv(&mut body)?;
            emit(common.out.as_deref(), &body)
        }
        McTableAction::Import { file, t_obs, alpha, out } => {
            let f = std::fs::File::open(&file)
                .map_err(|e| Error::Data { row: None, message: format!("cannot open {}: {e}", file.display()) })?;
            let samples = NullSampleSet::read_csv(BufReader::new(f))?;
            let mut value = json!({
                "side": samples.side,
                "n": samples.n,
                "experiments": samples.experiments,
                "retained": samples.retained(),
                "discarded": samples.discarded,
                "seed": samples.seed,
            });
            if let Some(t) = t_obs {
                value["p_value"] = serde_json::to_value(samples.pvalue(t)).expect("serializable");
            }
            if let Some(a) = alpha {
                value["critical_value"] = json!({ "alpha": a, "value": samples.critical_value(a)? });
            }
            emit_json(out.as_deref(), &value)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(1);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("global thread pool is configured once");
    }
    let result = match cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Power(a) => cmd_power(a),
        Command::Partitions(a) => cmd_partitions(a),
        Command::FitStudy(a) => cmd_fit_study(a),
        Command::McTable { action } => cmd_mc_table(action),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
