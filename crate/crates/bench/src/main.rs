use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mpomps::io::{self as tnc, Network};
use mpomps::{Mps, Truncation};
use mpomps_bench::config::{parse_chi_bar, parse_methods, parse_tolerances, DEFAULT_REFERENCE_CAP};
use mpomps_bench::output::{emit_plotdata, summarize, write_csv, write_json, write_summary_csv};
use mpomps_bench::{acceptance, run_bench, BenchConfig, BenchError, Format, Instance, Reference, Sweep};

/// Compressed MPO-MPS products: benchmarks, acceptance checks and file
/// conversion.
///
/// Dense oracles refuse to materialize more than 2^20 entries unless the
/// TN_DENSE_CAP environment variable sets another limit.
#[derive(Parser)]
#[command(name = "mpomps", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run methods over a bond or tolerance sweep and tabulate the results.
    Bench(BenchArgs),
    /// Run the acceptance checks; exits with status 3 if any fails.
    Verify(VerifyArgs),
    /// Convert between TNC1 chains and dense TNC1 dumps.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Bond dimension of the input state.
    #[arg(long, default_value_t = 20)]
    chi: usize,
    /// Bond dimension of the operator.
    #[arg(long = "D", default_value_t = 20)]
    bond_d: usize,
    /// Entries are drawn uniformly from [alpha, 1].
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    alpha: f64,
    /// Comma list of src, src-os, rctc, ctc, zipup, density, fitting.
    #[arg(long, default_value = "src-os,ctc,zipup")]
    methods: String,
    /// Output bond dimensions: start:stop:step or a comma list.
    #[arg(long = "chi-bar", conflicts_with = "tol")]
    chi_bar: Option<String>,
    /// Relative tolerances, comma separated.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output file; records go to stdout when absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Directory for per-method plot series.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    /// Operator file (TNC1), used with --mps instead of a synthetic ensemble.
    #[arg(long, requires = "mps")]
    mpo: Option<PathBuf>,
    /// State file (TNC1), used with --mpo.
    #[arg(long, requires = "mpo")]
    mps: Option<PathBuf>,
    /// ctc (rounded exact product) or exact (environment contractions).
    #[arg(long, default_value = "ctc")]
    reference: String,
    /// Largest exact product, in entries, used for the ctc reference.
    #[arg(long, default_value_t = DEFAULT_REFERENCE_CAP)]
    reference_cap: usize,
    #[arg(long, default_value_t = 10)]
    fitting_sweeps: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma list of criterion numbers; all when absent.
    #[arg(long)]
    criteria: Option<String>,
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
    /// Target kind: dense, or mps (from a dense dump). Defaults to the other
    /// representation of the input.
    #[arg(long)]
    to: Option<String>,
    /// Relative truncation tolerance when building an mps.
    #[arg(long)]
    tol: Option<f64>,
}

fn bench_config(a: &BenchArgs) -> Result<(BenchConfig, Format), BenchError> {
    let sweep = match (&a.chi_bar, &a.tol) {
        (Some(c), None) => Sweep::ChiBar(parse_chi_bar(c)?),
        (None, Some(t)) => Sweep::Tolerance(parse_tolerances(t)?),
        (None, None) => Sweep::ChiBar(vec![a.chi]),
        (Some(_), Some(_)) => unreachable!("clap rejects both"),
    };
    let instance = match (&a.mpo, &a.mps) {
        (Some(mpo), Some(mps)) => Instance::Files {
            mpo: mpo.clone(),
            mps: mps.clone(),
        },
        _ => Instance::Synthetic {
            n: a.n,
            d: a.d,
            chi: a.chi,
            bond_d: a.bond_d,
            alpha: a.alpha,
        },
    };
    let config = BenchConfig {
        instance,
        methods: parse_methods(&a.methods)?,
        sweep,
        trials: a.trials,
        seed: a.seed,
        reference: a.reference.parse::<Reference>()?,
        reference_cap: a.reference_cap,
        fitting_sweeps: a.fitting_sweeps,
    };
    config.validate()?;
    Ok((config, a.format.parse()?))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn bench(a: &BenchArgs) -> Result<(), BenchError> {
    let (config, format) = bench_config(a)?;
    let run = run_bench(&config)?;
    for w in &run.warnings {
        eprintln!("warning: {w}");
    }
    let out: Box<dyn Write> = match &a.output {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    match format {
        Format::Csv => {
            write_csv(&run.records, out)?;
            if let Some(p) = &a.output {
                write_summary_csv(&summarize(&run.records), File::create(sibling(p, "summary.csv"))?)?;
            }
        }
        Format::Json => write_json(&config, &run, out)?,
    }
    if let Some(dir) = &a.plot_dir {
        emit_plotdata(&run.records, dir)?;
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<bool, BenchError> {
    let ids: Vec<u8> = match &a.criteria {
        Some(list) => list
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| BenchError::Usage(format!("bad criterion `{s}`")))
            })
            .collect::<Result<_, _>>()?,
        None => (1..=acceptance::COUNT).collect(),
    };
    let mut all = true;
    for id in ids {
        let outcome = acceptance::run(id)?;
        println!("{outcome}");
        all &= outcome.passed;
    }
    Ok(all)
}

fn convert(a: &ConvertArgs) -> Result<(), BenchError> {
    let net = tnc::load(&a.input)?;
    let to = a.to.clone().unwrap_or_else(|| match net {
        Network::Dense(_) => "mps".into(),
        _ => "dense".into(),
    });
    let out = match (to.as_str(), net) {
        ("dense", Network::Mps(psi)) => Network::Dense(psi.to_dense()?),
        ("dense", Network::Mpo(h)) => Network::Dense(h.to_dense_matrix()?),
        ("mps", Network::Dense(t)) => {
            let psi = Mps::from_dense(&t)?;
            Network::Mps(match a.tol {
                Some(tol) => psi.truncate(Truncation::Tolerance(tol))?,
                None => psi,
            })
        }
        (to, net) => {
            return Err(BenchError::Usage(format!("cannot convert {} to {to}", net.kind())));
        }
    };
    tnc::save(&out, &a.output)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.cmd {
        Cmd::Bench(a) => bench(a).map(|_| true),
        Cmd::Verify(a) => verify(a),
        Cmd::Convert(a) => convert(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, BenchError::Usage(_)) { 2 } else { 1 })
        }
    }
}
