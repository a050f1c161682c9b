use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use sepeval::harness::{
    aggregate_ratings, correlate, evaluate, load_manifest, load_ratings, parse_pool_list, read_metrics_csv,
    run_extract, write_failures_csv, write_manifest, write_metrics_csv, write_report, EvalOptions, ExtractOptions,
    MetricKind, DEFAULT_MAX_VIOLATIONS,
};

#[derive(Parser)]
#[command(name = "sepeval", version, about = "Source separation metric evaluation and rating correlation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute metrics for every manifest entry.
    Eval(EvalArgs),
    /// Correlate metric values with aggregated listening-test scores.
    Correlate(CorrelateArgs),
    /// Run the embedding extractor over every clip in a manifest.
    Extract(ExtractArgs),
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated metric names, or `all`.
    #[arg(long, default_value = "all")]
    metrics: String,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
    /// Failure list; defaults to `<out stem>.failures.csv`.
    #[arg(long)]
    failures: Option<PathBuf>,
    #[arg(long, default_value_t = sepeval::bss::DEFAULT_SDR_TAPS)]
    sdr_taps: usize,
    #[arg(long)]
    allow_partial: bool,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Metrics CSV written by `eval`.
    #[arg(long)]
    metrics: PathBuf,
    #[arg(long)]
    ratings: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_VIOLATIONS)]
    max_violations: u32,
    /// Comma-separated pool specs, e.g. `stem,overall,stem=vocals&model_type=generative`.
    #[arg(long, default_value = "stem,overall")]
    pools: String,
    /// Restrict to these metrics (default: every metric in the CSV).
    #[arg(long)]
    select: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    allow_partial: bool,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Extractor command, split on whitespace.
    #[arg(long)]
    bridge_cmd: String,
    /// Defaults to `embeddings/` next to the manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Manifest with embedding columns filled in; defaults to `<out-dir>/manifest.csv`.
    #[arg(long)]
    out_manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 12)]
    layer: u32,
    #[arg(long, default_value_t = 24_000)]
    sample_rate: u32,
    #[arg(long, default_value_t = 5)]
    chunk_seconds: u32,
    #[arg(long)]
    allow_partial: bool,
}

fn exit_for(failures: usize, allow_partial: bool) -> ExitCode {
    if failures == 0 || allow_partial {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn run_eval(args: EvalArgs) -> Result<ExitCode> {
    let entries = load_manifest(&args.manifest)?;
    let options = EvalOptions {
        metrics: MetricKind::parse_list(&args.metrics)?,
        workers: args.workers.max(1),
        sdr_taps: args.sdr_taps,
        ..EvalOptions::default()
    };
    let outcome = evaluate(&entries, &options)?;
    write_metrics_csv(&args.out, &outcome.records)?;
    let failures_path = args.failures.unwrap_or_else(|| args.out.with_extension("failures.csv"));
    write_failures_csv(&failures_path, &outcome.failures)?;
    eprintln!(
        "{} entries, {} metric values, {} failures",
        entries.len(),
        outcome.records.len(),
        outcome.failures.len()
    );
    for f in outcome.failures.iter().take(20) {
        let metric = f.metric.map(|m| m.name()).unwrap_or("-");
        eprintln!("  {}/{}/{} {metric}: {}", f.song_id, f.model_id, f.stem, f.message);
    }
    Ok(exit_for(outcome.failures.len(), args.allow_partial))
}

fn run_correlate(args: CorrelateArgs) -> Result<ExitCode> {
    let mut records = read_metrics_csv(&args.metrics)?;
    if let Some(select) = &args.select {
        let keep = MetricKind::parse_list(select)?;
        records.retain(|r| keep.contains(&r.metric));
    }
    let ratings = load_ratings(&args.ratings)?;
    let aggregation = aggregate_ratings(&ratings, args.max_violations)?;
    if !aggregation.screened_raters.is_empty() {
        eprintln!("screened raters: {}", aggregation.screened_raters.iter().cloned().collect::<Vec<_>>().join(","));
    }
    let pools = parse_pool_list(&args.pools)?;
    let outcome = correlate(&records, &aggregation.scores, &pools);
    let summary = write_report(&outcome, &args.out_dir)
        .with_context(|| format!("writing report to {}", args.out_dir.display()))?;
    print!("{}", sepeval::harness::render_table(&outcome));
    for f in &outcome.failures {
        let metric = f.metric.map(|m| m.name()).unwrap_or("-");
        eprintln!("pool {} / {metric}: {}", f.pool, f.reason);
    }
    eprintln!("wrote {} files to {}", summary.files.len(), args.out_dir.display());
    Ok(exit_for(outcome.failures.len(), args.allow_partial))
}

fn run_extract_cmd(args: ExtractArgs) -> Result<ExitCode> {
    let entries = load_manifest(&args.manifest)?;
    let options = ExtractOptions {
        layer: args.layer,
        sample_rate: args.sample_rate,
        chunk_seconds: args.chunk_seconds,
    };
    let out_dir = args.out_dir.unwrap_or_else(|| {
        args.manifest.parent().unwrap_or(Path::new(".")).join("embeddings")
    });
    let outcome = run_extract(&entries, &args.bridge_cmd, &out_dir, &options)?;
    let out_manifest = args.out_manifest.unwrap_or_else(|| out_dir.join("manifest.csv"));
    write_manifest(&out_manifest, &outcome.entries)?;
    for f in &outcome.failures {
        eprintln!("{}/{}/{}: {}", f.song_id, f.model_id, f.stem, f.message);
    }
    eprintln!("wrote {}", out_manifest.display());
    Ok(exit_for(outcome.failures.len(), args.allow_partial))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => run_eval(a),
        Command::Correlate(a) => run_correlate(a),
        Command::Extract(a) => run_extract_cmd(a),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
