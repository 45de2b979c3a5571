use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netcode_core::design::{code_for_requirements, greedy_code, systematic_form, DesignError, NetworkCode};
use netcode_core::harness::{
    estimate_diversity_slope, read_csv, read_json_lines, run_sweep, snr_at_ber, trace_rounds, tradeoff_by_length,
    tradeoff_by_sources, write_csv, write_json_lines, write_tradeoff_csv, BerRecord, HarnessError, SimConfig,
    DEFAULT_SLOPE_WINDOW,
};

#[derive(Parser)]
#[command(name = "netcode", version, about = "Network code design and Monte Carlo BER sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit a greedy code as JSON, from (k, d) or (n, d).
    Design(DesignArgs),
    /// Separation vector, rate and schedule check of a code file.
    Analyze(AnalyzeArgs),
    /// Run a BER sweep from a config file and emit CSV.
    Simulate(SimulateArgs),
    /// Rate / diversity tables of greedy codes against repetition.
    Tradeoff(TradeoffArgs),
    /// Diversity slopes (and optional SNR gaps) from sweep output.
    Slope(SlopeArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Number of sources.
    #[arg(long, conflicts_with = "n", required_unless_present = "n")]
    k: Option<usize>,
    /// Code length; emits the full greedy code of this length.
    #[arg(long)]
    n: Option<usize>,
    /// Required separation for every source.
    #[arg(long)]
    d: usize,
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    code: PathBuf,
    /// Print a JSON object instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct SimulateArgs {
    config: PathBuf,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// JSON lines instead of CSV.
    #[arg(long)]
    json: bool,
    /// Dump round traces (JSON lines) to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Rounds traced per SNR point.
    #[arg(long, default_value_t = 10)]
    trace_rounds: u64,
}

#[derive(Args)]
struct TradeoffArgs {
    /// Fixed number of sources; sweeps the length up to --n-max.
    #[arg(long, requires = "n_max", conflicts_with = "d")]
    k: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    /// Fixed separation; sweeps the number of sources up to --k-max.
    #[arg(long, requires = "k_max", required_unless_present = "k")]
    d: Option<usize>,
    #[arg(long, default_value_t = 3)]
    k_min: usize,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SlopeArgs {
    /// Sweep output (CSV, or JSON lines with --json).
    input: PathBuf,
    #[arg(long)]
    json: bool,
    /// 1-based source index; all sources when omitted.
    #[arg(long)]
    source: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_SLOPE_WINDOW)]
    window: usize,
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    /// Second sweep; prints the SNR gap (input minus this) at --target-ber.
    #[arg(long, requires = "target_ber")]
    against: Option<PathBuf>,
    #[arg(long)]
    target_ber: Option<f64>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, HarnessError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| HarnessError::Output(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn io_err(e: io::Error) -> HarnessError {
    HarnessError::Output(e.to_string())
}

fn read_code(path: &Path) -> Result<NetworkCode, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(NetworkCode::from_json(&text)?)
}

fn design(args: DesignArgs) -> Result<(), HarnessError> {
    let code = match (args.k, args.n) {
        (Some(k), _) => code_for_requirements(k, args.d)?,
        (None, Some(n)) => {
            let g = greedy_code(n, args.d)?;
            // Leading coordinates of a lexicode can be identically zero.
            let used: Vec<usize> = (0..g.cols()).filter(|&j| (0..g.rows()).any(|i| g.get(i, j))).collect();
            if used.len() < n {
                eprintln!("note: dropped {} unused positions of the length-{n} lexicode", n - used.len());
            }
            let g = g.column_select(&used).map_err(DesignError::from)?;
            NetworkCode::with_default_schedule(systematic_form(&g)?)?
        }
        (None, None) => unreachable!("clap requires k or n"),
    };
    let mut out = output(args.out.as_deref())?;
    writeln!(out, "{}", code.to_json()).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn analyze(args: AnalyzeArgs) -> Result<(), HarnessError> {
    let code = read_code(&args.code)?;
    let report = code.validate_schedule();
    let mut out = output(None)?;
    if args.json {
        let value = serde_json::json!({
            "k": code.k(),
            "n": code.n(),
            "rate": code.rate(),
            "sep": code.separation().as_slice(),
            "schedule": code.schedule_one_based(),
            "schedule_valid": report.is_valid(),
            "relay_pairs_distinct": code.relay_pairs_distinct(),
        });
        writeln!(out, "{value}").map_err(io_err)?;
    } else {
        writeln!(out, "k = {}", code.k()).map_err(io_err)?;
        writeln!(out, "n = {}", code.n()).map_err(io_err)?;
        writeln!(out, "rate = {}/{} ({:.4})", code.k(), code.n(), code.rate()).map_err(io_err)?;
        writeln!(out, "sep = {:?}", code.separation().as_slice()).map_err(io_err)?;
        writeln!(out, "schedule = {:?}", code.schedule_one_based()).map_err(io_err)?;
        if report.is_valid() {
            writeln!(out, "schedule valid").map_err(io_err)?;
        } else {
            for v in &report.violations {
                writeln!(out, "violation: {v:?}").map_err(io_err)?;
            }
        }
        if !code.relay_pairs_distinct() {
            writeln!(out, "warning: a node relays the same source more than once").map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

fn simulate(args: SimulateArgs) -> Result<(), HarnessError> {
    let cfg = SimConfig::from_path(&args.config)?;
    cfg.validate()?;
    if let Some(path) = &args.trace {
        let mut w = output(Some(path))?;
        for &snr in &cfg.snr_grid_db {
            for t in trace_rounds(&cfg, snr, args.trace_rounds)? {
                let line = serde_json::to_string(&t).map_err(|e| HarnessError::Output(e.to_string()))?;
                writeln!(w, "{line}").map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)?;
    }
    let records = run_sweep(&cfg)?;
    let capped = records.iter().filter(|r| r.flags.capped).count();
    if capped > 0 {
        eprintln!("note: {capped} rows hit max_trials before min_errors_per_bit");
    }
    let mut out = output(args.out.as_deref())?;
    if args.json {
        write_json_lines(&records, &mut out)?;
    } else {
        write_csv(&records, &mut out)?;
    }
    out.flush().map_err(io_err)
}

fn tradeoff(args: TradeoffArgs) -> Result<(), HarnessError> {
    let rows = match (args.k, args.d) {
        (Some(k), _) => {
            let n_max = args.n_max.expect("clap requires n_max with k");
            tradeoff_by_length(k, args.n_min.unwrap_or(k)..=n_max)?
        }
        (None, Some(d)) => tradeoff_by_sources(args.k_min..=args.k_max.expect("clap requires k_max with d"), d)?,
        (None, None) => unreachable!("clap requires k or d"),
    };
    let mut out = output(args.out.as_deref())?;
    write_tradeoff_csv(&rows, &mut out)?;
    out.flush().map_err(io_err)
}

fn load_records(path: &Path, json: bool) -> Result<Vec<BerRecord>, HarnessError> {
    let file = File::open(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    if json {
        read_json_lines(BufReader::new(file))
    } else {
        read_csv(file)
    }
}

fn slope(args: SlopeArgs) -> Result<(), HarnessError> {
    let records = load_records(&args.input, args.json)?;
    let k = records.iter().map(|r| r.source + 1).max().unwrap_or(0);
    let sources: Vec<usize> = match args.source {
        Some(0) => return Err(HarnessError::Config("sources are numbered from 1".into())),
        Some(s) => vec![s - 1],
        None => (0..k).collect(),
    };
    let other = args.against.as_deref().map(|p| load_records(p, args.json)).transpose()?;
    let mut out = output(None)?;
    for i in sources {
        let s = estimate_diversity_slope(&records, i, args.window, args.min_errors)?;
        write!(out, "u{}: slope {s:.4}", i + 1).map_err(io_err)?;
        if let (Some(b), Some(target)) = (&other, args.target_ber) {
            let gap = snr_at_ber(&records, i, target)? - snr_at_ber(b, i, target)?;
            write!(out, ", gap {gap:.4} dB at BER {target:e}").map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Design(a) => design(a),
        Command::Analyze(a) => analyze(a),
        Command::Simulate(a) => simulate(a),
        Command::Tradeoff(a) => tradeoff(a),
        Command::Slope(a) => slope(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
