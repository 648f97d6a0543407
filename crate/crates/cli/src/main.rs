use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{Context, Result};
use canarylift::emit::{write_report, Outcome};
use canarylift::forge::{corrupt, generate, ForgeManifest, ForgeVariant, GroundTruth};
use canarylift::lift::{classify, harness, lift};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use walkdir::WalkDir;

const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(
    name = "canarylift",
    version,
    about = "Lift string-array canaries out of obfuscated JavaScript"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify scripts as canaried, emotet-style or clean
    Scan(Batch),
    /// Solve the canary and write <name>.lifted.js with decoder calls inlined
    Lift(Batch),
    /// Write a standalone <name>.harness.js for each script
    Harness(Batch),
    /// Generate forged samples with ground truth
    Forge(ForgeArgs),
    /// Tamper one canary of a forged sample so the checksum never holds
    Corrupt(CorruptArgs),
}

#[derive(Args)]
struct Batch {
    /// Files or directories; a directory contributes its *.js files
    paths: Vec<PathBuf>,
    /// Output directory (default: next to each input)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Aggregate JSON report
    #[arg(long)]
    report: Option<PathBuf>,
    #[command(flatten)]
    jobs: Jobs,
    /// Descend into subdirectories
    #[arg(long)]
    recursive: bool,
    /// Stop at the first file that does not succeed
    #[arg(long)]
    fail_fast: bool,
}

#[derive(Args)]
struct Jobs {
    /// Worker threads
    #[arg(long = "jobs", id = "jobs", value_name = "N", env = "CANARYLIFT_JOBS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Args)]
struct ForgeArgs {
    /// Directory receiving forged_NNNN.js and forged_NNNN.truth.json
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of samples
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Table length (default: drawn per sample)
    #[arg(long)]
    len: Option<usize>,
    /// Canary strings per table (default: drawn per sample)
    #[arg(long)]
    canaries: Option<usize>,
    #[arg(long, value_enum, default_value_t = VariantArg::Checksum)]
    variant: VariantArg,
    #[command(flatten)]
    jobs: Jobs,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Checksum,
    FixedCount,
}

#[derive(Args)]
struct CorruptArgs {
    /// A forged sample
    input: PathBuf,
    /// Canary slot to tamper, in decoder order
    #[arg(long)]
    slot: usize,
    /// Ground truth (default: <name>.truth.json beside the input)
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: beside the input)
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Per-file status. Later variants win when a batch is summarized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok,
    Unsatisfiable,
    Unrecognized,
    Io,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Unsatisfiable => 3,
            Status::Unrecognized => 4,
            Status::Io => 2,
        }
    }

    fn of(outcome: Outcome) -> Self {
        match outcome {
            Outcome::Solved => Status::Ok,
            Outcome::Unsatisfiable => Status::Unsatisfiable,
            Outcome::UnrecognizedIife | Outcome::ParseError => Status::Unrecognized,
        }
    }
}

struct Input {
    path: PathBuf,
    /// Where outputs go relative to `--out`.
    rel: PathBuf,
}

struct Processed {
    status: Status,
    line: String,
    report: Value,
    writes: Vec<(PathBuf, String)>,
}

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Scan,
    Lift,
    Harness,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Scan(b) => batch(Mode::Scan, &b),
        Command::Lift(b) => batch(Mode::Lift, &b),
        Command::Harness(b) => batch(Mode::Harness, &b),
        Command::Forge(f) => forge(&f),
        Command::Corrupt(c) => corrupt_one(&c),
    };
    match code {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("canarylift: {e:#}");
            ExitCode::from(Status::Io.code())
        }
    }
}

fn pool(jobs: &Jobs) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs.threads {
        builder = builder.num_threads(n as usize);
    }
    Ok(builder.build()?)
}

fn is_own_output(path: &Path) -> bool {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
    name.ends_with(".lifted.js") || name.ends_with(".harness.js")
}

fn collect_inputs(paths: &[PathBuf], recursive: bool) -> (Vec<Input>, Vec<(PathBuf, String)>) {
    let mut inputs = Vec::new();
    let mut errors = Vec::new();
    for root in paths {
        match fs::metadata(root) {
            Ok(meta) if meta.is_dir() => {
                let depth = if recursive { usize::MAX } else { 1 };
                for entry in WalkDir::new(root).min_depth(1).max_depth(depth) {
                    match entry {
                        Ok(entry) => {
                            let path = entry.path();
                            if entry.file_type().is_file()
                                && path.extension().is_some_and(|e| e == "js")
                                && !is_own_output(path)
                            {
                                inputs.push(Input {
                                    path: path.to_path_buf(),
                                    rel: path.strip_prefix(root).unwrap_or(path).to_path_buf(),
                                });
                            }
                        }
                        Err(e) => errors.push((root.clone(), e.to_string())),
                    }
                }
            }
            Ok(_) => inputs.push(Input {
                path: root.clone(),
                rel: root
                    .file_name()
                    .map(PathBuf::from)
                    .unwrap_or_else(|| root.clone()),
            }),
            Err(e) => errors.push((root.clone(), e.to_string())),
        }
    }
    inputs.sort_by(|a, b| a.path.cmp(&b.path));
    inputs.dedup_by(|a, b| a.path == b.path);
    (inputs, errors)
}

fn output_path(out: Option<&Path>, input: &Input, suffix: &str) -> PathBuf {
    let at = match out {
        Some(dir) => dir.join(&input.rel),
        None => input.path.clone(),
    };
    let stem = at
        .file_stem()
        .unwrap_or_default()
        .to_string_lossy()
        .into_owned();
    at.with_file_name(format!("{stem}{suffix}"))
}

fn process(mode: Mode, input: &Input, out: Option<&Path>) -> Processed {
    let shown = input.path.display().to_string();
    let bytes = match fs::read(&input.path) {
        Ok(b) => b,
        Err(e) => {
            return Processed {
                status: Status::Io,
                line: format!("{shown}\tio-error: {e}"),
                report: json!({ "input": shown, "detail": e.to_string() }),
                writes: vec![],
            }
        }
    };
    let source = String::from_utf8_lossy(&bytes);
    match mode {
        Mode::Scan => match classify(&source) {
            Ok(c) => Processed {
                status: Status::Ok,
                line: format!("{shown}\t{}", c.as_str()),
                report: json!({ "input": shown, "classification": c.as_str() }),
                writes: vec![],
            },
            Err(e) => Processed {
                status: Status::Ok,
                line: format!("{shown}\tparse-error: {e}"),
                report: json!({ "input": shown, "classification": null, "detail": e.to_string() }),
                writes: vec![],
            },
        },
        Mode::Lift => {
            let lifted = lift(&shown, &source);
            let r = &lifted.report;
            let line = match r.rotation {
                Some(rotation) => format!(
                    "{shown}\t{:?} rotation={rotation} edits={} skipped={}",
                    r.outcome, r.edits, r.skipped
                ),
                None => format!(
                    "{shown}\t{:?}: {}",
                    r.outcome,
                    r.detail.as_deref().unwrap_or("")
                ),
            };
            let mut writes = vec![(output_path(out, input, ".report.json"), write_report(r))];
            if let Some(text) = lifted.output {
                writes.push((output_path(out, input, ".lifted.js"), text));
            }
            Processed {
                status: Status::of(r.outcome),
                line,
                report: serde_json::to_value(r).expect("report serializes"),
                writes,
            }
        }
        Mode::Harness => match harness(&source) {
            Ok(h) => {
                let target = output_path(out, input, ".harness.js");
                Processed {
                    status: Status::Ok,
                    line: format!("{shown}\t{}", target.display()),
                    report: json!({ "input": shown, "outcome": Outcome::Solved, "harness": target }),
                    writes: vec![(target, h.text())],
                }
            }
            Err(e) => Processed {
                status: Status::of(e.outcome()),
                line: format!("{shown}\t{:?}: {e}", e.outcome()),
                report: json!({ "input": shown, "outcome": e.outcome(), "detail": e.to_string() }),
                writes: vec![],
            },
        },
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn batch(mode: Mode, args: &Batch) -> Result<u8> {
    let (inputs, errors) = collect_inputs(&args.paths, args.recursive);
    let mut status = Status::Ok;
    for (path, e) in &errors {
        eprintln!("canarylift: {}: {e}", path.display());
        status = Status::Io;
    }
    let first_failure = AtomicUsize::new(usize::MAX);
    let out = args.out.as_deref();
    let results: Vec<Option<Processed>> = pool(&args.jobs)?.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, input)| {
                if args.fail_fast && i > first_failure.load(Ordering::Relaxed) {
                    return None;
                }
                let p = process(mode, input, out);
                if p.status != Status::Ok {
                    first_failure.fetch_min(i, Ordering::Relaxed);
                }
                Some(p)
            })
            .collect()
    });
    let stop = if args.fail_fast {
        first_failure.into_inner()
    } else {
        usize::MAX
    };

    let mut reports = Vec::new();
    for p in results.into_iter().take(stop.saturating_add(1)).flatten() {
        let mut file_status = p.status;
        for (path, text) in &p.writes {
            if let Err(e) = write_file(path, text) {
                eprintln!("canarylift: {e:#}");
                file_status = Status::Io;
            }
        }
        println!("{}", p.line);
        reports.push(p.report);
        status = status.max(file_status);
    }
    if let Some(path) = &args.report {
        let command = match mode {
            Mode::Scan => "scan",
            Mode::Lift => "lift",
            Mode::Harness => "harness",
        };
        let aggregate = json!({
            "command": command,
            "files": reports,
            "errors": errors
                .iter()
                .map(|(p, e)| json!({ "input": p.display().to_string(), "detail": e }))
                .collect::<Vec<_>>(),
            "exit_code": status.code(),
        });
        let text = serde_json::to_string_pretty(&aggregate)? + "\n";
        if let Err(e) = write_file(path, &text) {
            eprintln!("canarylift: {e:#}");
            status = Status::Io;
        }
    }
    Ok(status.code())
}

fn manifest_for(args: &ForgeArgs, seed: u64) -> ForgeManifest {
    let variant = match args.variant {
        VariantArg::Checksum => ForgeVariant::Checksum,
        VariantArg::FixedCount => ForgeVariant::FixedCount,
    };
    let drawn = ForgeManifest::sample(seed, variant);
    if args.len.is_none() && args.canaries.is_none() {
        return drawn;
    }
    let len = args.len.unwrap_or_else(|| drawn.table_len());
    let canaries = args
        .canaries
        .unwrap_or_else(|| (len / 2).clamp(1, drawn.canary_count));
    let rotation = drawn.rotation % len.max(1);
    let mut m =
        ForgeManifest::synthetic(len, canaries, rotation, drawn.base.0, drawn.seed, variant);
    m.alias_functions = drawn.alias_functions;
    m
}

fn forge(args: &ForgeArgs) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let seeds: Vec<u64> = (0..args.count).map(|_| rng.gen()).collect();
    let forged: Vec<_> = pool(&args.jobs)?.install(|| {
        seeds
            .par_iter()
            .map(|&seed| generate(&manifest_for(args, seed)))
            .collect()
    });
    let mut samples = Vec::with_capacity(forged.len());
    for (i, result) in forged.into_iter().enumerate() {
        match result {
            Ok(sample) => samples.push(sample),
            Err(e) => {
                eprintln!("canarylift: sample {i}: {e}");
                return Ok(EXIT_DATA);
            }
        }
    }
    for (i, (source, truth)) in samples.iter().enumerate() {
        let js = args.out.join(format!("forged_{i:04}.js"));
        write_file(&js, source)?;
        write_file(
            &args.out.join(format!("forged_{i:04}.truth.json")),
            &truth.to_json(),
        )?;
        println!(
            "{}\trotation={} len={}",
            js.display(),
            truth.rotation,
            truth.len()
        );
    }
    Ok(0)
}

fn corrupt_one(args: &CorruptArgs) -> Result<u8> {
    let input = Input {
        path: args.input.clone(),
        rel: args
            .input
            .file_name()
            .map(PathBuf::from)
            .unwrap_or_default(),
    };
    let truth_path = args
        .truth
        .clone()
        .unwrap_or_else(|| output_path(None, &input, ".truth.json"));
    let source = fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let truth_text = fs::read_to_string(&truth_path)
        .with_context(|| format!("reading {}", truth_path.display()))?;
    let truth = match GroundTruth::from_json(&truth_text) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("canarylift: {}: {e}", truth_path.display());
            return Ok(EXIT_DATA);
        }
    };
    match corrupt(&source, &truth, args.slot, args.seed) {
        Ok(tampered) => {
            let target = output_path(args.out.as_deref(), &input, ".corrupt.js");
            write_file(&target, &tampered)?;
            println!("{}", target.display());
            Ok(0)
        }
        Err(e) => {
            eprintln!("canarylift: {}: {e}", args.input.display());
            Ok(EXIT_DATA)
        }
    }
}
