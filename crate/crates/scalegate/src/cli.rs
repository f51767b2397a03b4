//! Command-line entry point.
//!
//! Exit codes: 0 success (or clean verdict), 1 invalid arguments,
//! 2 I/O failure, 3 embed plan violation, 4 attack detected. Machine-readable
//! JSON goes to stdout; human diagnostics go to stderr.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use scalegate::attack::{generate_attack, EmbedPlan};
use scalegate::detect::{detect, spectrum, Verdict, DEFAULT_THRESHOLD};
use scalegate::harness::{
    render_summary, run_experiment, ExperimentConfig, MeasurementRecord, SkipRecord,
};
use scalegate::io::{load_image, save_image};
use scalegate::metrics::compare;
use scalegate::resize::{contribution_map, multi_step_plan, resize};
use scalegate::{Error, Image, PixelCoord, ResizePolicy, ScaleSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_PLAN: i32 = 3;
pub const EXIT_ATTACKED: i32 = 4;

#[derive(Parser)]
#[command(
    name = "scalegate",
    version,
    about = "Generate, detect, and neutralize image-downscaling attacks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Embed one or more small images into a carrier (in order; later embeds
    /// overwrite earlier ones where their lattices collide)
    Attack(AttackArgs),
    /// Resize an image under a chosen policy
    Resize(ResizeArgs),
    /// Score an image for embedding lattices (exit 4 when attacked)
    Detect(DetectArgs),
    /// Render the per-source-pixel contribution field of one output pixel
    Probe(ProbeArgs),
    /// Check that a combined image reveals a small image exactly
    Verify(VerifyArgs),
    /// Run the corpus experiment harness
    Bench(BenchArgs),
}

#[derive(Args)]
struct AttackArgs {
    /// Carrier (big) image
    #[arg(long)]
    carrier: PathBuf,
    /// Embed as PATH:WxH; repeat for multi-scale embedding
    #[arg(long = "embed", required = true)]
    embeds: Vec<String>,
    /// Output path for the combined image
    #[arg(long)]
    out: PathBuf,
    /// Also write the embed report JSON here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ResizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Target size as WxH
    #[arg(long)]
    size: String,
    /// vulnerable | antialias | multistep
    #[arg(long, default_value = "vulnerable")]
    policy: String,
    /// Max shrink factor per pass (multistep only)
    #[arg(long, default_value_t = ResizePolicy::DEFAULT_STEP_SHRINK_LIMIT)]
    step_limit: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Peak-energy score above which the verdict is "attacked"
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Write the log-magnitude spectrum rendering here
    #[arg(long)]
    spectrum_out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbeArgs {
    /// Source dimensions as WxH
    #[arg(long)]
    size: String,
    /// Target dimensions as WxH
    #[arg(long)]
    target: String,
    /// Output pixel to probe, as col,row
    #[arg(long)]
    pixel: String,
    #[arg(long, default_value = "vulnerable")]
    policy: String,
    #[arg(long, default_value_t = ResizePolicy::DEFAULT_STEP_SHRINK_LIMIT)]
    step_limit: f64,
    /// Rendered contribution map output path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    combined: PathBuf,
    #[arg(long)]
    small: PathBuf,
    /// Reveal scale as WxH
    #[arg(long)]
    size: String,
}

#[derive(Args)]
struct BenchArgs {
    /// Flat TOML config file (CLI flags below override it)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    corpus_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    carrier_scale: Option<String>,
    #[arg(long)]
    attack_scale: Option<String>,
    #[arg(long)]
    off_scale: Option<String>,
    /// Write record lines here instead of stdout
    #[arg(long)]
    records: Option<PathBuf>,
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. }
            | Error::UnsupportedFormat { .. }
            | Error::CorruptHeader { .. }
            | Error::UnsupportedExtension { .. } => EXIT_IO,
            Error::PlanInvariant(_) => EXIT_PLAN,
            _ => EXIT_USAGE,
        };
        Self { code, message: e.to_string() }
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    EXIT_OK
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Attack(args) => cmd_attack(args),
        Command::Resize(args) => cmd_resize(args),
        Command::Detect(args) => cmd_detect(args),
        Command::Probe(args) => cmd_probe(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn parse_scale(s: &str) -> Result<ScaleSpec, Failure> {
    s.parse::<ScaleSpec>().map_err(|e| Failure::usage(e.to_string()))
}

fn parse_policy(name: &str, step_limit: f64) -> Result<ResizePolicy, Failure> {
    let policy: ResizePolicy =
        name.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    match policy {
        ResizePolicy::MultiStep { .. } => ResizePolicy::multi_step(step_limit)
            .map_err(|e| Failure::usage(e.to_string())),
        other => Ok(other),
    }
}

fn cmd_attack(args: AttackArgs) -> Result<i32, Failure> {
    let carrier = load_image(&args.carrier)?;
    let mut embeds: Vec<(Image, ScaleSpec)> = Vec::with_capacity(args.embeds.len());
    for spec in &args.embeds {
        let (path, size) = spec
            .rsplit_once(':')
            .ok_or_else(|| Failure::usage(format!("--embed wants PATH:WxH, got {spec:?}")))?;
        let scale = parse_scale(size)?;
        embeds.push((load_image(path)?, scale));
    }
    let plan = EmbedPlan::new(carrier, embeds)?;
    let (combined, report) = generate_attack(&plan);
    save_image(&combined, &args.out)?;

    let json = serde_json::to_string(&report).expect("report serializes");
    println!("{json}");
    if let Some(report_path) = &args.report {
        std::fs::write(report_path, format!("{json}\n"))
            .map_err(|source| Error::Io { path: report_path.clone(), source })?;
    }
    Ok(EXIT_OK)
}

fn cmd_resize(args: ResizeArgs) -> Result<i32, Failure> {
    let img = load_image(&args.input)?;
    let spec = parse_scale(&args.size)?;
    let policy = parse_policy(&args.policy, args.step_limit)?;
    let passes = match policy {
        ResizePolicy::MultiStep { step_shrink_limit } => {
            multi_step_plan(img.width(), img.height(), spec, step_shrink_limit).len()
        }
        _ => 1,
    };
    let out = resize(&img, spec, policy);
    save_image(&out, &args.out)?;
    println!(
        "{}",
        serde_json::json!({
            "out": args.out.display().to_string(),
            "width": out.width(),
            "height": out.height(),
            "policy": policy.to_string(),
            "passes": passes,
        })
    );
    Ok(EXIT_OK)
}

fn cmd_detect(args: DetectArgs) -> Result<i32, Failure> {
    let img = load_image(&args.input)?;
    let report = detect(&img, args.threshold)?;
    if let Some(spectrum_out) = &args.spectrum_out {
        save_image(&spectrum(&img).to_log_image(), spectrum_out)?;
    }

    #[derive(Serialize)]
    struct DetectionRecord<'a> {
        path: String,
        #[serde(flatten)]
        report: &'a scalegate::detect::DetectionReport,
    }
    let record =
        DetectionRecord { path: args.input.display().to_string(), report: &report };
    println!("{}", serde_json::to_string(&record).expect("record serializes"));
    Ok(match report.verdict {
        Verdict::Attacked => EXIT_ATTACKED,
        Verdict::Clean => EXIT_OK,
    })
}

fn cmd_probe(args: ProbeArgs) -> Result<i32, Failure> {
    let src = parse_scale(&args.size)?;
    let target = parse_scale(&args.target)?;
    let policy = parse_policy(&args.policy, args.step_limit)?;
    let (col, row) = args
        .pixel
        .split_once(',')
        .and_then(|(c, r)| Some((c.trim().parse().ok()?, r.trim().parse().ok()?)))
        .ok_or_else(|| Failure::usage(format!("--pixel wants col,row, got {:?}", args.pixel)))?;
    let probe = PixelCoord::new(col, row, target.width(), target.height())
        .map_err(|e| Failure::usage(e.to_string()))?;

    let map = contribution_map(src.width(), src.height(), target, probe, policy);
    save_image(&map.to_image(), &args.out)?;
    println!(
        "{}",
        serde_json::json!({
            "out": args.out.display().to_string(),
            "support": map.support(),
            "max_weight": map.max_weight(),
            "weight_total": map.total(),
        })
    );
    Ok(EXIT_OK)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32, Failure> {
    let combined = load_image(&args.combined)?;
    let small = load_image(&args.small)?;
    let spec = parse_scale(&args.size)?;
    let revealed = resize(&combined, spec, ResizePolicy::VulnerableBilinear);
    let report = compare(&revealed, &small).map_err(|e| Failure::usage(e.to_string()))?;
    println!("{}", serde_json::to_string(&report).expect("report serializes"));
    if report.exact {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "verification failed: resize at {spec} differs from {} (max diff {})",
            args.small.display(),
            report.max_abs_diff
        );
        Ok(EXIT_USAGE)
    }
}

fn cmd_bench(args: BenchArgs) -> Result<i32, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_toml_file(path)?,
        None => ExperimentConfig::new(""),
    };
    if let Some(dir) = args.corpus_dir {
        cfg.corpus_dir = dir;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(s) = &args.carrier_scale {
        cfg.carrier_scale = parse_scale(s)?;
    }
    if let Some(s) = &args.attack_scale {
        cfg.attack_scale = parse_scale(s)?;
    }
    if let Some(s) = &args.off_scale {
        cfg.off_scale = parse_scale(s)?;
    }
    cfg.validate()?;
    let outcome = run_experiment(&cfg)?;

    #[derive(Serialize)]
    #[serde(tag = "type")]
    enum RecordLine<'a> {
        #[serde(rename = "measurement")]
        Measurement(&'a MeasurementRecord),
        #[serde(rename = "skip")]
        Skip(&'a SkipRecord),
        #[serde(rename = "condition")]
        Condition(&'a scalegate::harness::ConditionResult),
    }
    let mut lines = String::new();
    for record in &outcome.records {
        lines.push_str(&serde_json::to_string(&RecordLine::Measurement(record)).unwrap());
        lines.push('\n');
    }
    for skip in &outcome.skipped {
        lines.push_str(&serde_json::to_string(&RecordLine::Skip(skip)).unwrap());
        lines.push('\n');
    }
    for condition in &outcome.conditions {
        lines.push_str(&serde_json::to_string(&RecordLine::Condition(condition)).unwrap());
        lines.push('\n');
    }
    match &args.records {
        Some(path) => std::fs::write(path, lines)
            .map_err(|source| Failure::from(Error::Io { path: path.clone(), source }))?,
        None => print!("{lines}"),
    }
    eprint!("{}", render_summary(&outcome.conditions));
    Ok(EXIT_OK)
}
