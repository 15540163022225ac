//! `brr` — privatize text on the command line.
//!
//! Subcommands cover the whole pipeline: `binarize` turns a text embedding
//! file into packed binary codes, `privatize` rewrites a token stream under
//! a chosen mechanism, `ratio` calibrates budgets across metrics, `audit`
//! brute-force-verifies the privacy inequality on small instances, and
//! `bench` measures storage and latency for both mechanisms.
//!
//! Conventions: every run echoes its effective configuration to standard
//! error; machine-readable reports go to standard error as JSON (or to
//! `--report <path>`); primary data (tokens, tables) goes to standard
//! output. Exit codes: 0 success, 1 data error, 2 usage error, 3 audit
//! failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use brr::audit::{audit_brr, audit_rr};
use brr::bench::{run_bench, BenchConfig, BenchReport};
use brr::embeddings::{
    binarize_hyperplane, binarize_median, load_text_embeddings, read_bemb, write_bemb,
    BinaryCodeMatrix, Code, RealEmbeddingMatrix, Vocabulary, BEMB_MAGIC,
};
use brr::mechanisms::{
    BrrMechanism, MadlibMechanism, Mechanism, MechanismConfig, MechanismKind, OovPolicy,
    PrivacyParams,
};
use brr::nn::Acceleration;
use brr::ratio::{
    aggregate_distances_euclid_with, aggregate_distances_hamming_with, transfer_epsilon,
    AggregateKind, AggregateOptions, DistanceAggregate,
};
use brr::rng::RngStream;

#[derive(Parser)]
#[command(name = "brr", version, about = "On-device metric-DP text privatization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a text embedding file into packed binary codes (BEMB).
    Binarize(BinarizeArgs),
    /// Privatize a whitespace-delimited token stream.
    Privatize(PrivatizeArgs),
    /// Compare two embedding spaces and transfer an epsilon between them.
    Ratio(RatioArgs),
    /// Exhaustively verify the privacy inequality on a small instance.
    Audit(AuditArgs),
    /// Measure storage and per-word latency for both mechanisms.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    /// One bit per input dimension, thresholded at the column median.
    Median,
    /// Signs of seeded random unit projections; any target width.
    Hyperplane,
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Brr,
    Madlib,
}

#[derive(Clone, Copy, ValueEnum)]
enum AggregateArg {
    Max,
    Avg,
}

impl From<AggregateArg> for AggregateKind {
    fn from(a: AggregateArg) -> Self {
        match a {
            AggregateArg::Max => AggregateKind::Max,
            AggregateArg::Avg => AggregateKind::Avg,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OovArg {
    /// Copy out-of-vocabulary tokens through unchanged (no privacy for them).
    Pass,
    /// Omit out-of-vocabulary tokens from the output.
    Drop,
}

impl From<OovArg> for OovPolicy {
    fn from(o: OovArg) -> Self {
        match o {
            OovArg::Pass => OovPolicy::PassThrough,
            OovArg::Drop => OovPolicy::Drop,
        }
    }
}

#[derive(Args)]
struct BinarizeArgs {
    /// Text embedding file: one `word v1 v2 …` line per word.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    method: Method,
    /// Code width; required for hyperplane, must equal the embedding
    /// dimension for median when given.
    #[arg(long)]
    bits: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output BEMB file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PrivatizeArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismArg,
    /// Privacy budget, denominated in the mechanism's own metric unless
    /// --epsilon-from-madlib is given.
    #[arg(long)]
    epsilon: f64,
    /// BEMB file for brr, text embedding file for madlib.
    #[arg(long)]
    embeddings: PathBuf,
    /// Token file (whitespace-delimited); standard input when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output token file (newline-delimited); standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pass")]
    oov: OovArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Interpret --epsilon as a Madlib (Euclidean) budget and transfer it to
    /// the binary space via the privacy ratio before privatizing (brr only).
    #[arg(long, requires = "madlib_embeddings")]
    epsilon_from_madlib: bool,
    /// Text embedding file defining the Euclidean space the budget came from.
    #[arg(long)]
    madlib_embeddings: Option<PathBuf>,
    /// Aggregate used by the transfer.
    #[arg(long, value_enum, default_value = "avg")]
    aggregate: AggregateArg,
    /// Write the privatization report here instead of standard error.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct RatioArgs {
    /// Source space: text embeddings or BEMB (detected by content).
    #[arg(long)]
    embeddings_a: PathBuf,
    /// Target space: text embeddings or BEMB (detected by content).
    #[arg(long)]
    embeddings_b: PathBuf,
    #[arg(long, value_enum, default_value = "avg")]
    aggregate: AggregateArg,
    /// Budget in space A to transfer into space B.
    #[arg(long)]
    epsilon_a: f64,
    /// Vocabulary size above which pairwise aggregates are sampled.
    #[arg(long, default_value_t = 20_000)]
    exact_threshold: usize,
    #[arg(long, default_value_t = 1_000_000)]
    sample_pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    /// Code width (max 10).
    #[arg(long, default_value_t = 4)]
    bits: usize,
    /// Distinct random codes audited as a vocabulary (max 32).
    #[arg(long, default_value_t = 8)]
    vocab_size: usize,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 10_000)]
    vocab_size: usize,
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 256)]
    bits: usize,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Words timed per repetition.
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    repetitions: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also append one CSV row (with header if the file is new).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Binarize(args) => cmd_binarize(args),
        Command::Privatize(args) => cmd_privatize(args),
        Command::Ratio(args) => cmd_ratio(args),
        Command::Audit(args) => cmd_audit(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn cmd_binarize(args: BinarizeArgs) -> brr::Result<ExitCode> {
    let (vocab, real) = load_text(&args.input)?;
    echo_config(&serde_json::json!({
        "command": "binarize",
        "input": args.input,
        "method": match args.method { Method::Median => "median", Method::Hyperplane => "hyperplane" },
        "bits": args.bits,
        "seed": args.seed,
        "output": args.output,
        "words": vocab.len(),
        "dim": real.dim(),
    }));

    let codes = match args.method {
        Method::Median => {
            if let Some(bits) = args.bits {
                if bits != real.dim() {
                    return Err(brr::Error::BitWidthMismatch {
                        left: bits,
                        right: real.dim(),
                    });
                }
            }
            binarize_median(&real)?
        }
        Method::Hyperplane => {
            let bits = args.bits.ok_or_else(|| {
                brr::Error::Format("--bits is required for the hyperplane method".into())
            })?;
            binarize_hyperplane(&real, bits, args.seed)?
        }
    };

    let mut out = BufWriter::new(File::create(&args.output)?);
    write_bemb(&mut out, &vocab, &codes)?;
    out.flush()?;
    eprintln!(
        "wrote {} codes of {} bits to {}",
        codes.len(),
        codes.bits(),
        args.output.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_privatize(args: PrivatizeArgs) -> brr::Result<ExitCode> {
    let (mechanism, kind) = match args.mechanism {
        MechanismArg::Brr => {
            let (vocab, codes) = load_bemb(&args.embeddings)?;
            let m = BrrMechanism::new(vocab, codes, Acceleration::LinearScan)?;
            (Mechanism::Brr(m), MechanismKind::Brr)
        }
        MechanismArg::Madlib => {
            let (vocab, real) = load_text(&args.embeddings)?;
            (
                Mechanism::Madlib(MadlibMechanism::new(vocab, real)?),
                MechanismKind::Madlib,
            )
        }
    };

    // resolve the effective budget, possibly transferring from the
    // Euclidean space the caller's epsilon was calibrated in
    let epsilon = if args.epsilon_from_madlib {
        if !matches!(args.mechanism, MechanismArg::Brr) {
            return Err(brr::Error::Format(
                "--epsilon-from-madlib only applies to --mechanism brr".into(),
            ));
        }
        let source = args.madlib_embeddings.as_ref().expect("required by clap");
        let (_, real) = load_text(source)?;
        let opts = AggregateOptions {
            seed: args.seed,
            ..Default::default()
        };
        let agg_a = aggregate_distances_euclid_with(&real, &opts)?;
        let agg_b = match &mechanism {
            Mechanism::Brr(m) => {
                aggregate_distances_hamming_with(m.codes(), &opts)?
            }
            Mechanism::Madlib(_) => unreachable!("checked above"),
        };
        let transfer = transfer_epsilon(args.epsilon, &agg_a, &agg_b, args.aggregate.into())?;
        eprintln!("transfer: {}", json_compact(&transfer)?);
        transfer.epsilon_b
    } else {
        args.epsilon
    };

    echo_config(&serde_json::json!({
        "command": "privatize",
        "mechanism": kind,
        "epsilon": args.epsilon,
        "effective_epsilon": epsilon,
        "epsilon_from_madlib": args.epsilon_from_madlib,
        "embeddings": args.embeddings,
        "oov": match args.oov { OovArg::Pass => "pass", OovArg::Drop => "drop" },
        "seed": args.seed,
    }));

    let tokens = read_tokens(args.input.as_deref())?;
    let config = MechanismConfig {
        kind,
        params: PrivacyParams {
            epsilon,
            metric: match kind {
                MechanismKind::Brr => brr::ratio::Metric::Hamming,
                MechanismKind::Madlib => brr::ratio::Metric::Euclidean,
            },
        },
        oov_policy: args.oov.into(),
    };
    let (output, report) =
        mechanism.privatize_stream(&tokens, &config, RngStream::new(args.seed, 0))?;

    write_tokens(args.output.as_deref(), &output)?;
    emit_report(&report, args.report.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_ratio(args: RatioArgs) -> brr::Result<ExitCode> {
    echo_config(&serde_json::json!({
        "command": "ratio",
        "embeddings_a": args.embeddings_a,
        "embeddings_b": args.embeddings_b,
        "aggregate": match args.aggregate { AggregateArg::Max => "max", AggregateArg::Avg => "avg" },
        "epsilon_a": args.epsilon_a,
        "exact_threshold": args.exact_threshold,
        "sample_pairs": args.sample_pairs,
        "seed": args.seed,
    }));
    let opts = AggregateOptions {
        exact_threshold: args.exact_threshold,
        sample_pairs: args.sample_pairs,
        seed: args.seed,
        ..Default::default()
    };
    let agg_a = load_aggregate(&args.embeddings_a, &opts)?;
    let agg_b = load_aggregate(&args.embeddings_b, &opts)?;
    let report = transfer_epsilon(args.epsilon_a, &agg_a, &agg_b, args.aggregate.into())?;
    println!("{}", json_pretty(&report)?);
    emit_report(&report, args.report.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct AuditReport {
    rr: brr::audit::AuditResult,
    brr: brr::audit::AuditResult,
    pass: bool,
}

fn cmd_audit(args: AuditArgs) -> brr::Result<ExitCode> {
    echo_config(&serde_json::json!({
        "command": "audit",
        "bits": args.bits,
        "vocab_size": args.vocab_size,
        "epsilon": args.epsilon,
        "seed": args.seed,
    }));

    let codes = random_distinct_codes(args.bits, args.vocab_size, args.seed)?;
    let rr = audit_rr(args.bits, args.epsilon)?;
    let word_level = audit_brr(&codes, args.epsilon)?;
    let pass = rr.pass && word_level.pass;
    let report = AuditReport {
        rr,
        brr: word_level,
        pass,
    };
    println!("{}", json_pretty(&report)?);
    emit_report(&report, args.report.as_deref())?;
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

fn cmd_bench(args: BenchArgs) -> brr::Result<ExitCode> {
    echo_config(&serde_json::json!({
        "command": "bench",
        "vocab_size": args.vocab_size,
        "dim": args.dim,
        "bits": args.bits,
        "epsilon": args.epsilon,
        "samples": args.samples,
        "repetitions": args.repetitions,
        "seed": args.seed,
    }));
    let report = run_bench(&BenchConfig {
        vocab_size: args.vocab_size,
        dim: args.dim,
        bits: args.bits,
        epsilon: args.epsilon,
        samples: args.samples,
        repetitions: args.repetitions,
        seed: args.seed,
    })?;

    print!("{}", render_table(&report));
    if let Some(path) = &args.csv {
        append_csv(path, &report)?;
    }
    emit_report(&report, args.report.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn render_table(r: &BenchReport) -> String {
    let rows = [
        ("vocab size".to_string(), r.vocab_size.to_string()),
        ("real dim / binary bits".into(), format!("{} / {}", r.real_dim, r.binary_bits)),
        ("real bytes".into(), r.real_bytes.to_string()),
        ("binary bytes".into(), r.binary_bytes.to_string()),
        ("compression".into(), format!("{:.2}%", r.compression_pct)),
        ("payload compression".into(), format!("{:.2}%", r.payload_compression_pct)),
        ("brr ns/word (median)".into(), format!("{:.0}", r.brr_ns_per_word)),
        ("madlib ns/word (median)".into(), format!("{:.0}", r.madlib_ns_per_word)),
        ("speedup".into(), format!("{:.2}%", r.speedup_pct)),
        ("brr index build".into(), format!("{:.3} ms", r.brr_index_build_ms)),
        ("madlib index build".into(), format!("{:.3} ms", r.madlib_index_build_ms)),
        ("harness ns/word".into(), format!("{:.0}", r.harness_ns_per_word)),
        ("nn mode".into(), r.nn_mode.to_string()),
    ];
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter()
        .map(|(k, v)| format!("{k:<width$}  {v}\n"))
        .collect()
}

fn append_csv(path: &Path, r: &BenchReport) -> brr::Result<()> {
    let new = !path.exists();
    let mut f = BufWriter::new(File::options().create(true).append(true).open(path)?);
    if new {
        writeln!(
            f,
            "vocab_size,real_dim,binary_bits,real_bytes,binary_bytes,compression_pct,\
             brr_ns_per_word,madlib_ns_per_word,speedup_pct,samples,repetitions,epsilon,seed"
        )?;
    }
    writeln!(
        f,
        "{},{},{},{},{},{:.4},{:.0},{:.0},{:.4},{},{},{},{}",
        r.vocab_size,
        r.real_dim,
        r.binary_bits,
        r.real_bytes,
        r.binary_bytes,
        r.compression_pct,
        r.brr_ns_per_word,
        r.madlib_ns_per_word,
        r.speedup_pct,
        r.samples,
        r.repetitions,
        r.epsilon,
        r.seed
    )?;
    f.flush()?;
    Ok(())
}

/// `vocab_size` distinct codes of `bits` bits, uniformly sampled by seed.
fn random_distinct_codes(bits: usize, vocab_size: usize, seed: u64) -> brr::Result<BinaryCodeMatrix> {
    if bits == 0 || bits > 10 {
        return Err(brr::Error::CodeSpaceTooLarge { bits, max_bits: 10 });
    }
    let space = 1usize << bits;
    if vocab_size == 0 || vocab_size > space.min(32) {
        return Err(brr::Error::VocabTooLarge {
            words: vocab_size,
            max_words: space.min(32),
        });
    }
    let mut rng = RngStream::new(seed, 0).rng();
    let picks = rand::seq::index::sample(&mut rng, space, vocab_size);
    let codes: Vec<Code> = picks
        .into_iter()
        .map(|v| Code::from_value(bits, v as u64))
        .collect();
    BinaryCodeMatrix::from_codes(&codes)
}

fn load_text(path: &Path) -> brr::Result<(Vocabulary, RealEmbeddingMatrix)> {
    if sniff_bemb(path)? {
        return Err(brr::Error::Format(format!(
            "{} is a binary embedding file; this operation needs the text format",
            path.display()
        )));
    }
    load_text_embeddings(BufReader::new(File::open(path)?))
}

fn load_bemb(path: &Path) -> brr::Result<(Vocabulary, BinaryCodeMatrix)> {
    if !sniff_bemb(path)? {
        return Err(brr::Error::Format(format!(
            "{} is not a binary embedding file; run `brr binarize` first",
            path.display()
        )));
    }
    read_bemb(&mut BufReader::new(File::open(path)?))
}

fn sniff_bemb(path: &Path) -> io::Result<bool> {
    let mut magic = [0u8; 4];
    match File::open(path)?.read_exact(&mut magic) {
        Ok(()) => Ok(magic == BEMB_MAGIC),
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Ok(false),
        Err(e) => Err(e),
    }
}

fn load_aggregate(path: &Path, opts: &AggregateOptions) -> brr::Result<DistanceAggregate> {
    if sniff_bemb(path)? {
        let (_, codes) = load_bemb(path)?;
        aggregate_distances_hamming_with(&codes, opts)
    } else {
        let (_, real) = load_text(path)?;
        aggregate_distances_euclid_with(&real, opts)
    }
}

fn read_tokens(path: Option<&Path>) -> brr::Result<Vec<String>> {
    let mut text = String::new();
    match path {
        Some(p) => {
            BufReader::new(File::open(p)?).read_to_string(&mut text)?;
        }
        None => {
            io::stdin().lock().read_to_string(&mut text)?;
        }
    }
    Ok(text.split_whitespace().map(str::to_owned).collect())
}

fn write_tokens(path: Option<&Path>, tokens: &[String]) -> brr::Result<()> {
    match path {
        Some(p) => {
            let mut out = BufWriter::new(File::create(p)?);
            for t in tokens {
                writeln!(out, "{t}")?;
            }
            out.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            for t in tokens {
                writeln!(out, "{t}")?;
            }
        }
    }
    Ok(())
}

fn echo_config(config: &serde_json::Value) {
    eprintln!("config: {config}");
}

fn emit_report<T: Serialize>(report: &T, path: Option<&Path>) -> brr::Result<()> {
    match path {
        Some(p) => {
            let mut f = BufWriter::new(File::create(p)?);
            writeln!(f, "{}", json_pretty(report)?)?;
            f.flush()?;
        }
        None => eprintln!("report: {}", json_compact(report)?),
    }
    Ok(())
}

fn json_pretty<T: Serialize>(value: &T) -> brr::Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| brr::Error::Format(e.to_string()))
}

fn json_compact<T: Serialize>(value: &T) -> brr::Result<String> {
    serde_json::to_string(value).map_err(|e| brr::Error::Format(e.to_string()))
}
