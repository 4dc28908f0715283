//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::codec::{
    decode_block, encode_block, estimate_mismatch_error, round_trip_trials, universal_compress,
    universal_decompress, universal_models, wilson_interval,
};
use crate::compound::{compound_csv, compound_report, counterexample_pair};
use crate::error::{invalid, Error, Result};
use crate::export::{fmt12, Csv};
use crate::measures::{dom_region_grid, eta, Dist, RegionMode};
use crate::polar_core::SymbolBlock;
use crate::sketch::{
    brut_univ_sketching, build_sketch_spec, load_spec, recover, save_spec, sketch, BrutParams,
    BrutVariant, SketchMethod, SketchSpec,
};
use crate::storage::{
    encode_storage_set, sample_iid, storage_csv, storage_set, substream, Reader, StorageMethod,
};

#[derive(Debug, Parser)]
#[command(name = "unipolar", version, about = "Universal polar compression and sparse sketching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a file with the universal binary compressor.
    Compress(CompressArgs),
    /// Reconstruct a file written by `compress`.
    Decompress(DecompressArgs),
    /// Build a sketching spec and optionally sketch a signal.
    Sketch(SketchArgs),
    /// Recover a signal from measurements.
    Recover(RecoverArgs),
    /// Compute a storage set.
    StorageSet(StorageSetArgs),
    /// `epsilon,eta` curve of the spike projection.
    EtaCurve(EtaCurveArgs),
    /// `epsilon,eta,eta_star` curve of the brute-force search.
    EtaStarCurve(EtaStarCurveArgs),
    /// Domination region on the ternary simplex.
    DomRegion(DomRegionArgs),
    /// Compound storage-rate bounds for two sources.
    Compound(CompoundArgs),
    /// Monte-Carlo trial harnesses.
    Trials(TrialsArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageKind {
    Exact,
    Mc,
    Bec,
    Auto,
}

#[derive(Debug, Args, Serialize)]
pub struct StorageOpts {
    /// Storage-set construction.
    #[arg(long, value_enum, default_value = "auto")]
    pub storage: StorageKind,
    /// Monte-Carlo samples.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    /// Guard band in standard errors.
    #[arg(long, default_value_t = 2.0)]
    pub guard: f64,
}

impl StorageOpts {
    fn method(&self, seed: u64) -> StorageMethod {
        let (samples, guard) = (self.samples, self.guard);
        match self.storage {
            StorageKind::Exact => StorageMethod::Exact,
            StorageKind::Bec => StorageMethod::Bec,
            StorageKind::Mc => StorageMethod::MonteCarlo { samples, seed, guard },
            StorageKind::Auto => StorageMethod::Auto { samples, seed, guard },
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct CompressArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    /// Entropy `R` of the design models, in bits.
    #[arg(long, default_value_t = 0.5)]
    pub rate: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    pub storage: StorageOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct DecompressArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Seed of the tie-breaking generator.
    #[arg(long)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum MethodArg {
    #[value(name = "known")]
    Known,
    #[value(name = "pcp")]
    Pcp,
    #[value(name = "brutA")]
    BrutA,
    #[value(name = "brutB")]
    BrutB,
}

impl From<MethodArg> for SketchMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Known => SketchMethod::KnownDist,
            MethodArg::Pcp => SketchMethod::Pcp,
            MethodArg::BrutA => SketchMethod::BrutA,
            MethodArg::BrutB => SketchMethod::BrutB,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
pub enum VariantArg {
    A,
    B,
}

impl From<VariantArg> for BrutVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::A => BrutVariant::A,
            VariantArg::B => BrutVariant::B,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct BrutOpts {
    #[arg(long, default_value_t = 0.005)]
    pub eta_step: f64,
    /// Hull discretization resolution (Variant A).
    #[arg(long, default_value_t = 4)]
    pub hull_grid: usize,
    /// Bisect over the eta grid instead of scanning upward.
    #[arg(long)]
    pub dichotomic: bool,
}

impl BrutOpts {
    fn params(&self) -> BrutParams {
        BrutParams {
            eta_step: self.eta_step,
            hull_grid: self.hull_grid,
            dichotomic: self.dichotomic,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct SketchArgs {
    #[arg(long)]
    pub a: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, value_enum, default_value = "pcp")]
    pub method: MethodArg,
    #[arg(long)]
    pub seed: u64,
    /// Writes `<spec>.pset` and `<spec>.json`.
    #[arg(long)]
    pub spec: PathBuf,
    /// Signal to sketch: whitespace-separated symbols.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Measurement output (one symbol per line); required with `--in`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub storage: StorageOpts,
    #[command(flatten)]
    pub brut: BrutOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct RecoverArgs {
    /// Spec prefix written by `sketch`.
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct StorageSetArgs {
    /// Source distribution, comma separated.
    #[arg(long, value_parser = parse_dist)]
    #[serde(serialize_with = "ser_dist")]
    pub p: Dist,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// PSET output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// `index,entropy,stderr` CSV output.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[command(flatten)]
    pub storage: StorageOpts,
}

#[derive(Debug, Args, Serialize)]
pub struct EtaCurveArgs {
    #[arg(long, default_value_t = 3)]
    pub a: usize,
    /// Number of epsilon points in (0, (a-1)/a).
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EtaStarCurveArgs {
    #[arg(long, default_value_t = 3)]
    pub a: usize,
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Comma-separated epsilon values.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2")]
    pub epsilon: Vec<f64>,
    #[arg(long, value_enum, default_value = "B")]
    pub variant: VariantArg,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub storage: StorageOpts,
    #[command(flatten)]
    pub brut: BrutOpts,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    DominatedByC,
    DominatesC,
    DominatedByH,
    DominatesH,
}

impl From<ModeArg> for RegionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::DominatedByC => RegionMode::DominatedByC,
            ModeArg::DominatesC => RegionMode::DominatesC,
            ModeArg::DominatedByH => RegionMode::DominatedByH,
            ModeArg::DominatesH => RegionMode::DominatesH,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DomRegionArgs {
    #[arg(long, value_parser = parse_dist)]
    #[serde(serialize_with = "ser_dist")]
    pub p: Dist,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 60)]
    pub grid: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CompoundArgs {
    /// First source; defaults to (0.08, 0.36, 0.56).
    #[arg(long, value_parser = parse_dist)]
    #[serde(serialize_with = "ser_opt_dist")]
    pub p: Option<Dist>,
    /// Second source; defaults to (0.11, 0.62, 0.27).
    #[arg(long, value_parser = parse_dist)]
    #[serde(serialize_with = "ser_opt_dist")]
    pub q: Option<Dist>,
    #[arg(long, default_value_t = 1)]
    pub level: u32,
    /// Writes the report CSV here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes the per-sigma CSV here.
    #[arg(long)]
    pub tree: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialKind {
    /// Universal compression round trips of a Bernoulli source.
    Roundtrip,
    /// Sketch-and-recover of a sparse source.
    Sketch,
    /// Mismatched decoding, `P_e(p1 | p2)`.
    Mismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    /// `(1 - eps, eps, 0, ..., 0)`.
    Extreme,
    /// The spike of mass `eps`.
    Spike,
}

#[derive(Debug, Args, Serialize)]
pub struct TrialsArgs {
    #[arg(long, value_enum)]
    pub kind: TrialKind,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 4096)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Bernoulli parameter of the round-trip source.
    #[arg(long, default_value_t = 0.11)]
    pub theta: f64,
    #[arg(long, default_value_t = 0.5)]
    pub rate: f64,
    #[arg(long, default_value_t = 2)]
    pub a: usize,
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value = "pcp")]
    pub method: MethodArg,
    #[arg(long, value_enum, default_value = "extreme")]
    pub source: SourceKind,
    #[arg(long, value_parser = parse_dist)]
    #[serde(serialize_with = "ser_opt_dist")]
    pub p1: Option<Dist>,
    #[arg(long, value_parser = parse_dist)]
    #[serde(serialize_with = "ser_opt_dist")]
    pub p2: Option<Dist>,
    #[command(flatten)]
    pub storage: StorageOpts,
    #[command(flatten)]
    pub brut: BrutOpts,
}

fn parse_dist(s: &str) -> std::result::Result<Dist, String> {
    let probs = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Dist::new(probs).map_err(|e| e.to_string())
}

fn ser_dist<S: serde::Serializer>(d: &Dist, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(d.probs())
}

fn ser_opt_dist<S: serde::Serializer>(d: &Option<Dist>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match d {
        Some(d) => s.collect_seq(d.probs()),
        None => s.serialize_none(),
    }
}

/// Exit status for an error class.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) | Error::UnsupportedAlphabet { .. } => 2,
        Error::Format { .. } => 3,
        Error::ResourceLimit { .. } => 4,
        Error::Io(_) => 5,
        _ => 1,
    }
}

/// Parses `args` and runs the command; returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            print!("{out}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn params<T: Serialize>(args: &T) -> String {
    serde_json::to_string(args).unwrap_or_default()
}

fn emit(out: &Option<PathBuf>, content: String) -> Result<String> {
    match out {
        Some(path) => {
            fs::write(path, content)?;
            Ok(String::new())
        }
        None => Ok(content),
    }
}

/// Runs a parsed command and returns what it prints on stdout.
pub fn execute(cmd: &Command) -> Result<String> {
    match cmd {
        Command::Compress(a) => cmd_compress(a),
        Command::Decompress(a) => cmd_decompress(a),
        Command::Sketch(a) => cmd_sketch(a),
        Command::Recover(a) => cmd_recover(a),
        Command::StorageSet(a) => cmd_storage_set(a),
        Command::EtaCurve(a) => cmd_eta_curve(a),
        Command::EtaStarCurve(a) => cmd_eta_star_curve(a),
        Command::DomRegion(a) => cmd_dom_region(a),
        Command::Compound(a) => cmd_compound(a),
        Command::Trials(a) => cmd_trials(a),
    }
}

const STREAM_MAGIC: &[u8; 4] = b"PLRS";
const STREAM_VERSION: u8 = 1;

/// Wraps PLRC blocks with the original bit length: "PLRS", version, u64 bit
/// length, u32 block count, then `u32 length + block` per block.
pub fn encode_stream(bit_len: u64, blocks: &[Vec<u8>]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(STREAM_MAGIC);
    out.push(STREAM_VERSION);
    out.extend_from_slice(&bit_len.to_le_bytes());
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for b in blocks {
        out.extend_from_slice(&(b.len() as u32).to_le_bytes());
        out.extend_from_slice(b);
    }
    out
}

pub fn decode_stream(bytes: &[u8]) -> Result<(u64, Vec<&[u8]>)> {
    let mut r = Reader::new(bytes);
    r.expect_magic(STREAM_MAGIC, STREAM_VERSION)?;
    let bit_len = r.u64("bit length")?;
    let count = r.u32("block count")? as usize;
    let mut blocks = Vec::with_capacity(count.min(r.remaining() / 4));
    for _ in 0..count {
        let len = r.u32("block length")? as usize;
        blocks.push(r.take(len, "block")?);
    }
    if r.remaining() != 0 {
        return r.fail(r.pos, "trailing bytes");
    }
    Ok((bit_len, blocks))
}

fn bytes_to_bits(bytes: &[u8]) -> Vec<u32> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).map(move |j| u32::from((b >> j) & 1)))
        .collect()
}

fn bits_to_bytes(bits: &[u32]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (j, &b)| acc | ((b as u8) << j)))
        .collect()
}

fn cmd_compress(args: &CompressArgs) -> Result<String> {
    let data = fs::read(&args.input)?;
    let n = args.n;
    crate::polar_core::check_block_len(n)?;
    let models = universal_models(args.rate)?;
    let s = storage_set(&models.models()[0], n, args.delta, args.storage.method(args.seed))?;
    let mut bits = bytes_to_bits(&data);
    let bit_len = bits.len() as u64;
    bits.resize(bits.len().div_ceil(n).max(1) * n, 0);
    let mut blocks = Vec::new();
    let mut symbols = 0usize;
    for chunk in bits.chunks(n) {
        let b = universal_compress(&SymbolBlock::new(2, chunk.to_vec())?, args.rate, &s)?;
        symbols += b.stored_symbols.len() + b.checker_symbols.len();
        blocks.push(encode_block(&b)?);
    }
    fs::write(&args.out, encode_stream(bit_len, &blocks))?;
    Ok(format!(
        "seed {}\nblocks {}\nstorage_set {}\nrate {}\n",
        args.seed,
        blocks.len(),
        s.len(),
        fmt12(symbols as f64 / bits.len() as f64)
    ))
}

fn cmd_decompress(args: &DecompressArgs) -> Result<String> {
    let data = fs::read(&args.input)?;
    let (bit_len, blocks) = decode_stream(&data)?;
    let mut bits = Vec::new();
    let mut chosen = Vec::new();
    for (k, raw) in blocks.iter().enumerate() {
        let b = decode_block(raw)?;
        let out = universal_decompress(&b, args.seed.wrapping_add(k as u64))?;
        chosen.push(out.model.to_string());
        bits.extend_from_slice(out.x.symbols());
    }
    if (bits.len() as u64) < bit_len {
        return Err(Error::Format {
            offset: 5,
            reason: format!("stream declares {bit_len} bits but carries {}", bits.len()),
        });
    }
    bits.truncate(bit_len as usize);
    fs::write(&args.out, bits_to_bytes(&bits))?;
    Ok(format!("seed {}\nblocks {}\nmodels {}\n", args.seed, blocks.len(), chosen.join(",")))
}

fn read_symbols(path: &Path) -> Result<Vec<u32>> {
    fs::read_to_string(path)?
        .split_whitespace()
        .map(|t| {
            t.parse::<u32>()
                .map_err(|e| Error::InvalidArgument(format!("symbol {t:?}: {e}")))
        })
        .collect()
}

fn write_symbols(path: &Path, symbols: &[u32]) -> Result<()> {
    let mut s = String::with_capacity(symbols.len() * 2);
    for v in symbols {
        s.push_str(&v.to_string());
        s.push('\n');
    }
    Ok(fs::write(path, s)?)
}

fn spec_paths(prefix: &Path) -> (PathBuf, PathBuf) {
    let mut pset = prefix.as_os_str().to_owned();
    pset.push(".pset");
    let mut json = prefix.as_os_str().to_owned();
    json.push(".json");
    (pset.into(), json.into())
}

fn cmd_sketch(args: &SketchArgs) -> Result<String> {
    let spec = build_sketch_spec(
        args.a,
        args.epsilon,
        args.n,
        args.delta,
        args.method.into(),
        args.storage.method(args.seed),
        args.brut.params(),
    )?;
    let (pset, json) = save_spec(&spec)?;
    let (pset_path, json_path) = spec_paths(&args.spec);
    fs::write(pset_path, pset)?;
    fs::write(json_path, json)?;
    if let Some(input) = &args.input {
        let Some(out) = &args.out else {
            return invalid("--out is required with --in");
        };
        let x = SymbolBlock::new(args.a, read_symbols(input)?)?;
        write_symbols(out, &sketch(&spec, &x)?)?;
    }
    Ok(format!(
        "seed {}\neta {}\nm {}\nm_over_n {}\n",
        args.seed,
        fmt12(spec.eta),
        spec.m(),
        fmt12(spec.m() as f64 / spec.n as f64)
    ))
}

fn cmd_recover(args: &RecoverArgs) -> Result<String> {
    let (pset_path, json_path) = spec_paths(&args.spec);
    let spec = load_spec(&fs::read(pset_path)?, &fs::read_to_string(json_path)?)?;
    let x = recover(&spec, &read_symbols(&args.input)?)?;
    write_symbols(&args.out, x.symbols())?;
    Ok(String::new())
}

fn cmd_storage_set(args: &StorageSetArgs) -> Result<String> {
    let s = storage_set(&args.p, args.n, args.delta, args.storage.method(args.seed))?;
    if let Some(out) = &args.out {
        fs::write(out, encode_storage_set(&s))?;
    }
    if let Some(csv) = &args.csv {
        fs::write(csv, storage_csv(&s, &params(args)))?;
    }
    Ok(format!(
        "seed {}\nprovenance {}\nsize {}\nrate {}\n",
        args.seed,
        s.provenance().name(),
        s.len(),
        fmt12(s.rate())
    ))
}

/// `count` points spread over the open interval `(0, (a-1)/a)`.
pub fn epsilon_grid(a: usize, count: usize) -> Vec<f64> {
    let top = (a - 1) as f64 / a as f64;
    (1..=count).map(|k| top * k as f64 / (count + 1) as f64).collect()
}

fn cmd_eta_curve(args: &EtaCurveArgs) -> Result<String> {
    crate::measures::check_prime(args.a)?;
    let mut csv = Csv::new(&params(args), "epsilon,eta");
    for e in epsilon_grid(args.a, args.grid) {
        csv.row(&[fmt12(e), fmt12(eta(args.a, e)?)]);
    }
    emit(&args.out, csv.finish())
}

fn cmd_eta_star_curve(args: &EtaStarCurveArgs) -> Result<String> {
    let mut csv = Csv::new(&params(args), "epsilon,eta,eta_star");
    for &e in &args.epsilon {
        let r = brut_univ_sketching(
            args.a,
            e,
            args.n,
            args.delta,
            args.variant.into(),
            args.brut.params(),
            args.storage.method(args.seed),
        )?;
        csv.row(&[fmt12(e), fmt12(r.eta_cp), fmt12(r.eta_star)]);
    }
    emit(&args.out, csv.finish())
}

fn cmd_dom_region(args: &DomRegionArgs) -> Result<String> {
    let grid = dom_region_grid(&args.p, args.mode.into(), args.grid)?;
    let mut csv = Csv::new(&params(args), "x,y,flag");
    for g in grid {
        csv.row(&[
            fmt12(g.point[0]),
            fmt12(g.point[1]),
            u8::from(g.member).to_string(),
        ]);
    }
    emit(&args.out, csv.finish())
}

fn cmd_compound(args: &CompoundArgs) -> Result<String> {
    let (dp, dq) = counterexample_pair();
    let p = args.p.clone().unwrap_or(dp);
    let q = args.q.clone().unwrap_or(dq);
    let report = compound_report(&p, &q, args.level)?;
    if let Some(out) = &args.out {
        fs::write(out, report.to_csv(&params(args)))?;
    }
    if let Some(tree) = &args.tree {
        fs::write(tree, compound_csv(&p, &q, args.level, &params(args))?)?;
    }
    Ok(report.to_text())
}

fn rate_line(successes: usize, trials: usize) -> String {
    let (lo, hi) = wilson_interval(successes, trials);
    format!(
        "successes {successes}/{trials}\nsuccess_rate {}\nci95 [{}, {}]\n",
        fmt12(successes as f64 / trials.max(1) as f64),
        fmt12(lo),
        fmt12(hi)
    )
}

fn sketch_trials(args: &TrialsArgs, spec: &SketchSpec) -> Result<usize> {
    let source = match args.source {
        SourceKind::Extreme => crate::measures::sparse_extreme(args.a, args.epsilon)?,
        SourceKind::Spike => crate::measures::make_spike(args.a, 0, args.epsilon)?,
    };
    let mut ok = 0;
    for t in 0..args.trials {
        let mut rng = substream(args.seed, t as u64);
        let x = SymbolBlock::new(args.a, sample_iid(&source, args.n, &mut rng))?;
        if recover(spec, &sketch(spec, &x)?)? == x {
            ok += 1;
        }
    }
    Ok(ok)
}

fn cmd_trials(args: &TrialsArgs) -> Result<String> {
    let method = args.storage.method(args.seed);
    let header = format!("# params: {}\n", params(args));
    let body = match args.kind {
        TrialKind::Roundtrip => {
            let models = universal_models(args.rate)?;
            let s = storage_set(&models.models()[0], args.n, args.delta, method)?;
            let r = round_trip_trials(args.theta, args.rate, &s, args.trials, args.seed)?;
            format!(
                "{}correct_side {}\nrate {}\n",
                rate_line(r.successes, r.trials),
                r.correct_side,
                fmt12(r.rate)
            )
        }
        TrialKind::Sketch => {
            let spec = build_sketch_spec(
                args.a,
                args.epsilon,
                args.n,
                args.delta,
                args.method.into(),
                method,
                args.brut.params(),
            )?;
            let ok = sketch_trials(args, &spec)?;
            format!(
                "{}m_over_n {}\neta {}\n",
                rate_line(ok, args.trials),
                fmt12(spec.m() as f64 / spec.n as f64),
                fmt12(spec.eta)
            )
        }
        TrialKind::Mismatch => {
            let (Some(p1), Some(p2)) = (&args.p1, &args.p2) else {
                return invalid("--p1 and --p2 are required for mismatch trials");
            };
            let s = storage_set(p1, args.n, args.delta, method)?;
            let r = estimate_mismatch_error(p1, p2, &s, args.trials, args.seed)?;
            format!(
                "errors {}/{}\nerror_rate {}\nci95 [{}, {}]\n",
                r.errors,
                r.trials,
                fmt12(r.rate),
                fmt12(r.ci.0),
                fmt12(r.ci.1)
            )
        }
    };
    Ok(format!("{header}seed {}\n{body}", args.seed))
}
