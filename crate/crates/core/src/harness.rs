//! Monte Carlo sweeps, stopping rules and post-processing of BER curves.
//!
//! Round `t` at SNR `s` always draws from `ChaCha8Rng::seed_from_u64(round_seed(master, s, t))`,
//! and trials are grouped into fixed batches and waves, so results depend on
//! nothing but the configuration.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{
    ChannelError, FadingMode, FadingModel, RelayModel, RoundSimulator, RoundTrace, SncPolicy, NOISE_POWER,
};
use crate::decode::{DecodeError, DecodeMode, DecoderKind, NetworkDecoder, DEFAULT_SP_ITERATIONS, MAP_SIZE_LIMIT};
use crate::design::{
    code_for_requirements, greedy_code, repetition_baseline, required_length, separation_vector, systematic_form, CodeFile, DesignError,
    NetworkCode, TradeoffPoint,
};

/// Trials per batch; the unit of parallel work.
pub const BATCH_TRIALS: u64 = 2048;
/// Upper bound on batches per wave (waves double from 1).
pub const MAX_WAVE_BATCHES: u64 = 32;
/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "NETCODE_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed input at record {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Design(#[from] DesignError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("need at least 2 usable points for source {source_index}, found {found}")]
    InsufficientPoints { source_index: usize, found: usize },
    #[error("source {source_index} has a zero-error record at {snr_db} dB in the slope window")]
    ZeroErrors { source_index: usize, snr_db: f64 },
    #[error("target BER {target} is not bracketed for source {source_index}")]
    NotBracketed { source_index: usize, target: f64 },
    #[error("output error: {0}")]
    Output(String),
}

impl HarnessError {
    /// Process exit code: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Read { .. } | Self::Parse { .. } | Self::Design(_) => 2,
            _ => 1,
        }
    }
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

/// Greedy design request used in place of an explicit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignRequest {
    pub k: usize,
    pub d: usize,
}

/// Where a simulation gets its network code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodeSource {
    /// `{"design": {"k": 3, "d": 3}}`
    Design { design: DesignRequest },
    /// `{"path": "code.json"}`, relative to the config file.
    File { path: PathBuf },
    /// A code object as written by `design`.
    Inline(CodeFile),
}

impl CodeSource {
    pub fn inline(code: &NetworkCode) -> Self {
        Self::Inline(code.to_file())
    }

    pub fn resolve(&self) -> Result<NetworkCode, HarnessError> {
        match self {
            Self::Design { design } => Ok(code_for_requirements(design.k, design.d)?),
            Self::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
                    path: path.clone(),
                    source,
                })?;
                Ok(NetworkCode::from_json(&text)?)
            }
            Self::Inline(file) => Ok(NetworkCode::try_from(file.clone())?),
        }
    }
}

fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| 2.0 * i as f64).collect()
}
fn default_sp_iters() -> usize {
    DEFAULT_SP_ITERATIONS
}
fn default_min_errors() -> u64 {
    100
}
fn default_max_trials() -> u64 {
    100_000_000
}

/// Sweep configuration; everything except `code` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub code: CodeSource,
    #[serde(default = "default_grid")]
    pub snr_grid_db: Vec<f64>,
    #[serde(default)]
    pub fading: FadingMode,
    #[serde(default)]
    pub snc: bool,
    #[serde(default)]
    pub decoder: DecoderKind,
    #[serde(default)]
    pub mode: DecodeMode,
    #[serde(default = "default_sp_iters")]
    pub sp_iters: usize,
    #[serde(default = "default_min_errors")]
    pub min_errors_per_bit: u64,
    #[serde(default = "default_max_trials")]
    pub max_trials: u64,
    #[serde(default)]
    pub master_seed: u64,
    /// Accept codes where one node relays the same source twice (their
    /// relay errors are then correlated, which the decoders ignore).
    #[serde(default)]
    pub allow_repeated_relaying: bool,
}

impl SimConfig {
    pub fn new(code: CodeSource) -> Self {
        Self {
            code,
            snr_grid_db: default_grid(),
            fading: FadingMode::default(),
            snc: false,
            decoder: DecoderKind::default(),
            mode: DecodeMode::default(),
            sp_iters: DEFAULT_SP_ITERATIONS,
            min_errors_per_bit: default_min_errors(),
            max_trials: default_max_trials(),
            master_seed: 0,
            allow_repeated_relaying: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| config_err(e.to_string()))
    }

    /// Loads a config file; a relative code `path` is taken relative to it.
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg = Self::from_json(&text)?;
        if let CodeSource::File { path: code_path } = &mut cfg.code {
            if code_path.is_relative() {
                if let Some(dir) = path.parent() {
                    *code_path = dir.join(&*code_path);
                }
            }
        }
        Ok(cfg)
    }

    /// Checks the config and returns the code it describes.
    pub fn validate(&self) -> Result<NetworkCode, HarnessError> {
        if self.snr_grid_db.is_empty() {
            return Err(config_err("snr_grid_db is empty"));
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return Err(config_err("snr_grid_db has a non-finite entry"));
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err("snr_grid_db must be strictly increasing"));
        }
        if self.min_errors_per_bit == 0 {
            return Err(config_err("min_errors_per_bit must be at least 1"));
        }
        if self.decoder == DecoderKind::Sp && self.sp_iters == 0 {
            return Err(config_err("sp_iters must be at least 1"));
        }
        let code = self.code.resolve()?;
        if self.decoder == DecoderKind::Map && code.k() + code.n() > MAP_SIZE_LIMIT {
            return Err(config_err(format!(
                "MAP decoding needs k + n <= {MAP_SIZE_LIMIT}, code has {}",
                code.k() + code.n()
            )));
        }
        if !self.allow_repeated_relaying && !code.relay_pairs_distinct() {
            return Err(config_err(
                "a node relays the same source more than once; set allow_repeated_relaying to accept",
            ));
        }
        let report = code.validate_schedule();
        if !report.is_valid() {
            return Err(config_err(format!("schedule violations: {:?}", report.violations)));
        }
        Ok(code)
    }

    fn relay_model(&self) -> RelayModel {
        match self.mode {
            DecodeMode::Genie => RelayModel::Genie,
            DecodeMode::Optimal | DecodeMode::Naive => RelayModel::Noisy,
        }
    }

    fn snc_policy(&self) -> SncPolicy {
        SncPolicy { enabled: self.snc }
    }
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one round. Keyed on the SNR value (not its grid position), so
/// sweeps over different grids share rounds at common SNR points.
pub fn round_seed(master: u64, snr_db: f64, trial: u64) -> u64 {
    let h = splitmix64(master);
    let h = splitmix64(h ^ snr_db.to_bits());
    splitmix64(h ^ trial)
}

/// Row status flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RecordFlags {
    /// `max_trials` reached before this source collected enough errors.
    pub capped: bool,
    /// No trials were run.
    pub empty: bool,
}

impl std::fmt::Display for RecordFlags {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts = Vec::new();
        if self.capped {
            parts.push("capped");
        }
        if self.empty {
            parts.push("empty");
        }
        f.write_str(&parts.join(";"))
    }
}

impl std::str::FromStr for RecordFlags {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut flags = Self::default();
        for part in s.split(';').filter(|p| !p.is_empty()) {
            match part {
                "capped" => flags.capped = true,
                "empty" => flags.empty = true,
                other => return Err(format!("unknown flag {other:?}")),
            }
        }
        Ok(flags)
    }
}

/// BER estimate for one source at one SNR point. `source` is 0-based here
/// and 1-based in CSV / JSON output.
#[derive(Debug, Clone, PartialEq)]
pub struct BerRecord {
    pub snr_db: f64,
    pub source: usize,
    pub trials: u64,
    pub errors: u64,
    pub ber: f64,
    pub stderr: f64,
    pub flags: RecordFlags,
    /// Wall time of the whole SNR point; not part of the emitted rows.
    pub wall_time_s: f64,
}

impl BerRecord {
    pub fn new(snr_db: f64, source: usize, trials: u64, errors: u64, min_errors: u64) -> Self {
        let (ber, stderr) = if trials == 0 {
            (0.0, 0.0)
        } else {
            let ber = errors as f64 / trials as f64;
            (ber, (ber * (1.0 - ber) / trials as f64).sqrt())
        };
        Self {
            snr_db,
            source,
            trials,
            errors,
            ber,
            stderr,
            flags: RecordFlags {
                capped: errors < min_errors,
                empty: trials == 0,
            },
            wall_time_s: 0.0,
        }
    }
}

/// Worker count: `NETCODE_THREADS` if set and positive, else rayon's default.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(rayon::current_num_threads)
}

struct PointRunner<'a> {
    cfg: &'a SimConfig,
    sim: RoundSimulator,
    snr_db: f64,
}

impl PointRunner<'_> {
    fn batch(&self, start: u64, end: u64) -> Result<Vec<u64>, HarnessError> {
        let mut sim = self.sim.clone();
        let mut obs = sim.new_observation();
        let mut decoder = NetworkDecoder::new(self.cfg.decoder, self.cfg.mode, NOISE_POWER, self.cfg.sp_iters);
        let k = sim.k();
        let mask = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
        let mut errors = vec![0u64; k];
        for trial in start..end {
            let mut rng = ChaCha8Rng::seed_from_u64(round_seed(self.cfg.master_seed, self.snr_db, trial));
            let message = rng.random::<u64>() & mask;
            sim.run_into(message, &mut rng, &mut obs);
            let mut wrong = decoder.decide(&obs)? ^ message;
            while wrong != 0 {
                errors[wrong.trailing_zeros() as usize] += 1;
                wrong &= wrong - 1;
            }
        }
        Ok(errors)
    }
}

fn run_point(
    cfg: &SimConfig,
    code: &NetworkCode,
    snr_db: f64,
    pool: &rayon::ThreadPool,
) -> Result<Vec<BerRecord>, HarnessError> {
    let clock = Instant::now();
    let fading = FadingModel::from_db(cfg.fading, snr_db)?;
    let runner = PointRunner {
        cfg,
        sim: RoundSimulator::new(code, fading, cfg.snc_policy(), cfg.relay_model())?,
        snr_db,
    };
    let k = code.k();
    let mut errors = vec![0u64; k];
    let mut trials = 0u64;
    let mut wave = 0u32;
    while trials < cfg.max_trials && errors.iter().any(|&e| e < cfg.min_errors_per_bit) {
        let batches = (1u64 << wave.min(20)).min(MAX_WAVE_BATCHES);
        let ranges: Vec<(u64, u64)> = (0..batches)
            .map(|b| trials.saturating_add(b * BATCH_TRIALS))
            .filter(|&s| s < cfg.max_trials)
            .map(|s| (s, s.saturating_add(BATCH_TRIALS).min(cfg.max_trials)))
            .collect();
        let results: Vec<Vec<u64>> =
            pool.install(|| ranges.par_iter().map(|&(s, e)| runner.batch(s, e)).collect::<Result<_, _>>())?;
        for part in results {
            for (acc, e) in errors.iter_mut().zip(part) {
                *acc += e;
            }
        }
        trials = ranges.last().map_or(trials, |r| r.1);
        wave += 1;
    }
    let wall = clock.elapsed().as_secs_f64();
    Ok((0..k)
        .map(|i| {
            let mut r = BerRecord::new(snr_db, i, trials, errors[i], cfg.min_errors_per_bit);
            r.wall_time_s = wall;
            r
        })
        .collect())
}

/// Runs every SNR point with the default worker count.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<BerRecord>, HarnessError> {
    run_sweep_with_threads(cfg, worker_count())
}

/// Runs every SNR point on `threads` workers. Output does not depend on
/// `threads`.
pub fn run_sweep_with_threads(cfg: &SimConfig, threads: usize) -> Result<Vec<BerRecord>, HarnessError> {
    let code = cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| HarnessError::Output(e.to_string()))?;
    let mut out = Vec::with_capacity(cfg.snr_grid_db.len() * code.k());
    for &snr in &cfg.snr_grid_db {
        out.extend(run_point(cfg, &code, snr, &pool)?);
    }
    Ok(out)
}

/// Traces of the first `rounds` trials at `snr_db`, exactly as the sweep
/// simulates them.
pub fn trace_rounds(cfg: &SimConfig, snr_db: f64, rounds: u64) -> Result<Vec<RoundTrace>, HarnessError> {
    let code = cfg.validate()?;
    let fading = FadingModel::from_db(cfg.fading, snr_db)?;
    let mut sim = RoundSimulator::new(&code, fading, cfg.snc_policy(), cfg.relay_model())?;
    let mut obs = sim.new_observation();
    let mask = if code.k() == 64 { u64::MAX } else { (1u64 << code.k()) - 1 };
    Ok((0..rounds)
        .map(|t| {
            let seed = round_seed(cfg.master_seed, snr_db, t);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let message = rng.random::<u64>() & mask;
            sim.run_into(message, &mut rng, &mut obs);
            obs.trace(seed)
        })
        .collect())
}

pub const CSV_HEADER: [&str; 7] = ["snr_db", "source", "trials", "errors", "ber", "stderr", "flags"];

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Output(e.to_string())
}

/// Writes records as CSV (floats with 17 significant digits).
pub fn write_csv<W: Write>(records: &[BerRecord], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            fmt_f64(r.snr_db),
            (r.source + 1).to_string(),
            r.trials.to_string(),
            r.errors.to_string(),
            fmt_f64(r.ber),
            fmt_f64(r.stderr),
            r.flags.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Output(e.to_string()))
}

pub fn to_csv_string(records: &[BerRecord]) -> String {
    let mut buf = Vec::new();
    write_csv(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is ASCII")
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Row {
    snr_db: f64,
    source: usize,
    trials: u64,
    errors: u64,
    ber: f64,
    stderr: f64,
    flags: String,
}

impl Row {
    fn from_record(r: &BerRecord) -> Self {
        Self {
            snr_db: r.snr_db,
            source: r.source + 1,
            trials: r.trials,
            errors: r.errors,
            ber: r.ber,
            stderr: r.stderr,
            flags: r.flags.to_string(),
        }
    }

    fn into_record(self, line: usize) -> Result<BerRecord, HarnessError> {
        let parse_err = |message: String| HarnessError::Parse { line, message };
        if self.source == 0 {
            return Err(parse_err("source indices start at 1".into()));
        }
        Ok(BerRecord {
            snr_db: self.snr_db,
            source: self.source - 1,
            trials: self.trials,
            errors: self.errors,
            ber: self.ber,
            stderr: self.stderr,
            flags: self.flags.parse().map_err(parse_err)?,
            wall_time_s: 0.0,
        })
    }
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<BerRecord>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers().map_err(|e| HarnessError::Parse {
        line: 0,
        message: e.to_string(),
    })?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(HarnessError::Parse {
            line: 0,
            message: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let parse_err = |message: String| HarnessError::Parse { line, message };
        let rec = rec.map_err(|e| parse_err(e.to_string()))?;
        let field = |idx: usize| rec.get(idx).unwrap_or("");
        // std parsing; csv's own float path is not always correctly rounded.
        let float = |idx: usize| {
            field(idx)
                .parse::<f64>()
                .map_err(|e| parse_err(format!("{}: {e}", CSV_HEADER[idx])))
        };
        let int = |idx: usize| {
            field(idx)
                .parse::<u64>()
                .map_err(|e| parse_err(format!("{}: {e}", CSV_HEADER[idx])))
        };
        let row = Row {
            snr_db: float(0)?,
            source: int(1)? as usize,
            trials: int(2)?,
            errors: int(3)?,
            ber: float(4)?,
            stderr: float(5)?,
            flags: field(6).to_string(),
        };
        out.push(row.into_record(line)?);
    }
    Ok(out)
}

/// One JSON object per record, same fields as the CSV.
pub fn write_json_lines<W: Write>(records: &[BerRecord], mut out: W) -> Result<(), HarnessError> {
    for r in records {
        let line = serde_json::to_string(&Row::from_record(r)).map_err(|e| HarnessError::Output(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| HarnessError::Output(e.to_string()))?;
    }
    Ok(())
}

pub fn read_json_lines<R: BufRead>(input: R) -> Result<Vec<BerRecord>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| HarnessError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(&line).map_err(|e| HarnessError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(row.into_record(i + 1)?);
    }
    Ok(out)
}

/// Slope-window default: top 3 SNR points.
pub const DEFAULT_SLOPE_WINDOW: usize = 3;

/// Empirical diversity order of `source`: least-squares slope of
/// `-log10(BER)` against `SNR_dB / 10` over the `window` highest-SNR records
/// having at least `min_errors` errors.
pub fn estimate_diversity_slope(
    records: &[BerRecord],
    source: usize,
    window: usize,
    min_errors: u64,
) -> Result<f64, HarnessError> {
    let mut pts: Vec<&BerRecord> = records
        .iter()
        .filter(|r| r.source == source && r.trials > 0 && r.errors >= min_errors)
        .collect();
    pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let pts = &pts[pts.len().saturating_sub(window)..];
    if pts.len() < 2 {
        return Err(HarnessError::InsufficientPoints {
            source_index: source,
            found: pts.len(),
        });
    }
    if let Some(r) = pts.iter().find(|r| r.ber <= 0.0) {
        return Err(HarnessError::ZeroErrors {
            source_index: source,
            snr_db: r.snr_db,
        });
    }
    let xs: Vec<f64> = pts.iter().map(|r| r.snr_db / 10.0).collect();
    let ys: Vec<f64> = pts.iter().map(|r| -r.ber.log10()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// SNR (dB) at which `source` reaches `target` BER, interpolating
/// `log10(BER)` linearly in dB between the bracketing points.
pub fn snr_at_ber(records: &[BerRecord], source: usize, target: f64) -> Result<f64, HarnessError> {
    let mut pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.source == source && r.trials > 0 && r.errors > 0)
        .map(|r| (r.snr_db, r.ber))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lt = target.log10();
    for w in pts.windows(2) {
        let ((s0, b0), (s1, b1)) = (w[0], w[1]);
        if b0 >= target && target >= b1 {
            if b0 == b1 {
                return Ok(s0);
            }
            let (l0, l1) = (b0.log10(), b1.log10());
            return Ok(s0 + (s1 - s0) * (l0 - lt) / (l0 - l1));
        }
    }
    Err(HarnessError::NotBracketed {
        source_index: source,
        target,
    })
}

/// Per-source SNR gap `snr_a - snr_b` (dB) at the target BER; positive when
/// sweep `a` needs more power.
pub fn compare_sweeps(a: &[BerRecord], b: &[BerRecord], target: f64) -> Result<Vec<f64>, HarnessError> {
    let k = a.iter().chain(b).map(|r| r.source + 1).max().unwrap_or(0);
    (0..k)
        .map(|i| Ok(snr_at_ber(a, i, target)? - snr_at_ber(b, i, target)?))
        .collect()
}

/// Greedy network code against round-robin repetition at the same length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub greedy: TradeoffPoint,
    pub repetition: TradeoffPoint,
    /// Greedy rate over the rate of repetition with the greedy minimum
    /// diversity (`1/d_min`).
    pub advantage: f64,
}

impl TradeoffRow {
    fn new(greedy: TradeoffPoint) -> Result<Self, HarnessError> {
        let repetition = repetition_baseline(greedy.k, greedy.n)?;
        Ok(Self {
            greedy,
            repetition,
            advantage: greedy.rate() * greedy.d_min as f64,
        })
    }
}

/// Fixed `k`, growing number of transmissions: at each `n` the greedy code
/// uses the largest distance whose lexicode reaches dimension `k` by `n`.
pub fn tradeoff_by_length(k: usize, n_range: std::ops::RangeInclusive<usize>) -> Result<Vec<TradeoffRow>, HarnessError> {
    if n_range.is_empty() {
        return Err(config_err("empty n range"));
    }
    n_range
        .map(|n| {
            if n < k {
                return Err(config_err(format!("n = {n} is below k = {k}")));
            }
            let mut d = 1;
            while required_length(k, d + 1).is_ok_and(|len| len <= n) {
                d += 1;
            }
            let full = greedy_code(n, d)?;
            let rows: Vec<usize> = (0..k).collect();
            // Only the diversity statistics are needed, so an unused slot
            // (zero column) is allowed here.
            let g = systematic_form(&full.transpose().column_select(&rows).map_err(DesignError::from)?.transpose())?;
            TradeoffRow::new(TradeoffPoint::from_separation(k, n, &separation_vector(&g)?))
        })
        .collect()
}

/// Fixed target distance, growing network size.
pub fn tradeoff_by_sources(k_range: std::ops::RangeInclusive<usize>, d: usize) -> Result<Vec<TradeoffRow>, HarnessError> {
    if k_range.is_empty() {
        return Err(config_err("empty k range"));
    }
    k_range
        .map(|k| {
            let code = code_for_requirements(k, d)?;
            TradeoffRow::new(TradeoffPoint::from_separation(k, code.n(), code.separation()))
        })
        .collect()
}

pub const TRADEOFF_HEADER: [&str; 11] = [
    "k", "n", "rate", "greedy_min", "greedy_max", "greedy_avg", "rep_min", "rep_max", "rep_avg", "advantage", "rep_rate",
];

pub fn write_tradeoff_csv<W: Write>(rows: &[TradeoffRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRADEOFF_HEADER).map_err(csv_err)?;
    for r in rows {
        let g = &r.greedy;
        let p = &r.repetition;
        w.write_record([
            g.k.to_string(),
            g.n.to_string(),
            fmt_f64(g.rate()),
            g.d_min.to_string(),
            g.d_max.to_string(),
            fmt_f64(g.d_avg),
            p.d_min.to_string(),
            p.d_max.to_string(),
            fmt_f64(p.d_avg),
            fmt_f64(r.advantage),
            fmt_f64(1.0 / g.d_min as f64),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Output(e.to_string()))
}
