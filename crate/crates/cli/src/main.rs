use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use beliefdrive::active::{run_seeds, ALData, Experiment, ExperimentLog};
use beliefdrive::beliefs::FrameMode;
use beliefdrive::config::Config;
use beliefdrive::controller::{validate_policy, TierPolicy};
use beliefdrive::eval::{aggregate_seeds, evaluate, EvalInput, EvalReport};
use beliefdrive::net::{train_with_validation, Checkpoint, Model, ModelKind};
use beliefdrive::pipeline::{compare_traces, run_course, Corruption, Segment, SimTrace, TrackCourse};
use beliefdrive::svg;
use beliefdrive::track::{build_dataset, Dataset, Split};
use beliefdrive::Error;

#[derive(Parser)]
#[command(name = "beliefdrive", version, about = "Belief-based curvature classification and entropy-gated speed control")]
struct Cli {
    /// Global TOML configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Run seed; drawn from the OS entropy source when omitted.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    #[value(name = "7")]
    Seven,
    #[value(name = "3")]
    Three,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Rsnn,
    Softmax,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Rsnn => ModelKind::Rsnn,
            KindArg::Softmax => ModelKind::Softmax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CourseKind {
    Clean,
    Corrupted,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic dataset into a directory.
    Gen {
        #[arg(long)]
        out: PathBuf,
        /// Frame size; defaults to the config's dataset mode.
        #[arg(long = "classes", value_enum)]
        mode: Option<ModeArg>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Train a model on the train split, selecting on the validation split.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "model-kind", value_enum, default_value = "rsnn")]
        kind: KindArg,
        /// Checkpoint path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch CSV log.
        #[arg(long)]
        log: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Evaluate one or more checkpoints on the test and uncertain splits.
    Eval {
        /// Repeat to aggregate over several training seeds.
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        #[arg(long)]
        data: PathBuf,
        /// Report JSON; confusion and misclassification CSVs land beside it.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Write a demo course file.
    Course {
        #[arg(long, value_enum, default_value = "clean")]
        kind: CourseKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Drive a course in closed loop and record the trace.
    Simulate {
        #[arg(long)]
        course: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// TOML tier policy (`final_scale` plus `[[tiers]]`); config policy when omitted.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Trace CSV.
        #[arg(long)]
        out: PathBuf,
        /// Optional JSON summary.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Render a trace CSV as SVG.
    PlotTrace {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an active-learning experiment over several seeds.
    Al {
        #[arg(long, value_parser = ["1", "2", "3"])]
        exp: String,
        #[arg(long = "model", value_enum, default_value = "rsnn")]
        kind: KindArg,
        /// Number of seeds, counted up from the base seed.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        /// Dataset directory; generated from the config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Render active-learning logs (JSON files written by `al`) as SVG.
    PlotAl {
        #[arg(long = "log", required = true)]
        logs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render misclassification and entropy-histogram SVGs from a report.
    PlotEval {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 3 } else { 2 })
        }
    }
}

fn resolve_seed(arg: &SeedArg) -> u64 {
    let seed = arg.seed.unwrap_or_else(rand::random);
    eprintln!("seed: {seed}");
    seed
}

fn write(path: &Path, text: &str) -> CliResult {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    write(path, &(text + "\n"))
}

fn load_model(path: &Path) -> CliResult<Model> {
    Ok(Checkpoint::load(path)?.into_model()?)
}

fn run(cli: Cli) -> CliResult {
    let mut cfg = Config::load_or_default(cli.config.as_deref())?;
    match cli.command {
        Command::Gen { out, mode, seed } => {
            cfg.dataset.seed = resolve_seed(&seed);
            if let Some(m) = mode {
                cfg.dataset.mode = match m {
                    ModeArg::Seven => FrameMode::Seven,
                    ModeArg::Three => FrameMode::Three,
                };
            }
            let ds = build_dataset(&cfg.dataset)?;
            let manifest = ds.write(&out, &cfg.raster, &cfg.hash())?;
            eprintln!(
                "wrote {} samples ({} train / {} val / {} test / {} uncertain) to {}",
                manifest.counts.total(),
                manifest.counts.train,
                manifest.counts.val,
                manifest.counts.test,
                manifest.counts.uncertain,
                out.display()
            );
        }
        Command::Train {
            data,
            kind,
            out,
            log,
            seed,
        } => {
            cfg.train.seed = resolve_seed(&seed);
            let ds = load_dataset(&data, &mut cfg)?;
            let budget = cfg.budget()?;
            let (trx, tr_y) = ds.labeled(Split::Train, &cfg.raster);
            let (vax, va_y) = ds.labeled(Split::Val, &cfg.raster);
            let train: Vec<_> = trx.iter().zip(tr_y.iter().copied()).collect();
            let val: Vec<_> = vax.iter().zip(va_y.iter().copied()).collect();
            let trained = train_with_validation(kind.into(), &ds.frame, &budget, &train, &val, &cfg.train)?;
            for w in &trained.log.warnings {
                eprintln!("warning: {w}");
            }
            let hash = cfg.hash();
            Checkpoint::from_model(&trained.model, &cfg.train, &hash).save(&out)?;
            if let Some(path) = log {
                let header = format!("# seed={} config_hash={hash}\n", cfg.train.seed);
                write(&path, &(header + &trained.log.to_csv()))?;
            }
            let best = &trained.log.epochs[trained.log.best_epoch - 1];
            eprintln!("best epoch {} val_acc {:.4}", best.epoch, best.val_acc);
        }
        Command::Eval { models, data, out, seed } => {
            let seed = resolve_seed(&seed);
            let ds = load_dataset(&data, &mut cfg)?;
            let ids: Vec<String> = ds.split(Split::Test).map(|s| s.id.clone()).collect();
            let (tex, tey) = ds.labeled(Split::Test, &cfg.raster);
            let unc = ds.uncertain_features(&cfg.raster);
            let input = EvalInput {
                test_ids: &ids,
                test_x: &tex,
                test_y: &tey,
                uncertain_x: &unc,
            };
            let hash = cfg.hash();
            let mut reports = Vec::new();
            for path in &models {
                let model = load_model(path)?;
                if model.frame.mode() != ds.frame.mode() {
                    return Err(Error::ModelMismatch(format!("{} was trained on another frame", path.display())).into());
                }
                reports.push(evaluate(&model, &input, seed, &hash)?);
            }
            write_report(&out, &reports)?;
        }
        Command::Course { kind, out } => {
            demo_course(kind).save(&out)?;
        }
        Command::Simulate {
            course,
            model,
            policy,
            out,
            summary,
            seed,
        } => {
            let seed = resolve_seed(&seed);
            if let Some(p) = policy {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                cfg.policy = toml::from_str::<TierPolicy>(&text).map_err(|e| Error::Format {
                    path: p.clone(),
                    message: e.to_string(),
                })?;
                validate_policy(&cfg.policy)?;
            }
            let course = TrackCourse::load(&course)?;
            let model = load_model(&model)?;
            let run = run_course(&course, &model, &cfg.sim_setup(), seed)?;
            write(&out, &run.trace.to_csv())?;
            if let Some(path) = summary {
                write_json(&path, &compare_traces(&run.trace, cfg.sim.tick_s)?)?;
            }
            eprintln!("{} ticks, {} stall releases", run.trace.rows.len(), run.trace.stall_releases);
        }
        Command::PlotTrace { trace, out } => {
            let text = fs::read_to_string(&trace).map_err(|e| Error::io(&trace, e))?;
            write(&out, &svg::trace_svg(&SimTrace::from_csv(&text)?))?;
        }
        Command::Al {
            exp,
            kind,
            seeds,
            data,
            out,
            seed,
        } => {
            if seeds == 0 {
                return Err(CliError::Usage("--seeds must be at least 1".into()));
            }
            let base = resolve_seed(&seed);
            let ds = match data {
                Some(dir) => load_dataset(&dir, &mut cfg)?,
                None => build_dataset(&cfg.dataset)?,
            };
            let mut al = cfg.active_learning();
            al.experiment = exp.parse::<Experiment>()?;
            al.kind = kind.into();
            let data = ALData::from_dataset(&ds, cfg.budget()?, &cfg.raster);
            let seed_list: Vec<u64> = (0..seeds).map(|i| base.wrapping_add(i)).collect();
            let logs = run_seeds(&data, &al, &seed_list)?;
            let hash = cfg.hash();
            for log in &logs {
                for r in log.rounds.iter().filter(|r| !r.shortfalls.is_empty() || r.failure.is_some()) {
                    for s in &r.shortfalls {
                        eprintln!("warning: seed {}: {s}", log.seed);
                    }
                    if let Some(f) = &r.failure {
                        eprintln!("warning: seed {} round {}: training failed: {f}", log.seed, r.round);
                    }
                }
                let stem = format!("exp{}_{}_seed{}", log.experiment, log.kind, log.seed);
                write(&out.join(format!("{stem}.csv")), &log.to_csv(&hash))?;
                write_json(&out.join(format!("{stem}.json")), log)?;
            }
        }
        Command::PlotAl { logs, out } => {
            let mut parsed: Vec<ExperimentLog> = Vec::new();
            for path in &logs {
                let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                parsed.push(serde_json::from_str(&text).map_err(|e| Error::json(path, e))?);
            }
            if parsed.iter().any(|l| l.experiment != parsed[0].experiment) {
                return Err(CliError::Usage("all logs must come from the same experiment".into()));
            }
            write(&out, &svg::al_svg(&parsed))?;
        }
        Command::PlotEval { report, out_dir } => {
            let text = fs::read_to_string(&report).map_err(|e| Error::io(&report, e))?;
            let report: EvalReport = serde_json::from_str(&text).map_err(|e| Error::json(&report, e))?;
            write(&out_dir.join("misclassifications.svg"), &svg::misclassification_svg(&report))?;
            write(&out_dir.join("entropy_histogram.svg"), &svg::entropy_histogram_svg(&report))?;
        }
    }
    Ok(())
}

/// Loads a dataset directory and aligns the config's frame mode with it.
fn load_dataset(dir: &Path, cfg: &mut Config) -> CliResult<Dataset> {
    let (ds, _) = Dataset::load(dir)?;
    cfg.dataset.mode = ds.frame.mode();
    Ok(ds)
}

fn write_report(out: &Path, reports: &[EvalReport]) -> CliResult {
    let first = &reports[0];
    if reports.len() == 1 {
        write_json(out, first)?;
    } else {
        #[derive(Serialize)]
        struct Multi<'a> {
            aggregate: beliefdrive::eval::SeedAggregate,
            reports: &'a [EvalReport],
        }
        let aggregate = aggregate_seeds(reports)?;
        eprintln!("accuracy {} over {} models", aggregate.accuracy, reports.len());
        write_json(out, &Multi { aggregate, reports })?;
    }
    let stem = out.with_extension("");
    let sibling = |suffix: &str| PathBuf::from(format!("{}{suffix}", stem.display()));
    write(&sibling("_confusion.csv"), &first.confusion_csv())?;
    write(&sibling("_misclassifications.csv"), &first.misclassification_csv())?;
    eprintln!("accuracy {:.4} ({} misclassified)", first.accuracy, first.misclassifications.len());
    Ok(())
}

fn demo_course(kind: CourseKind) -> TrackCourse {
    let angles = [0.0, -20.0, 0.0, 45.0, 5.0, -70.0, 0.0, 25.0, -45.0, 0.0, 70.0, -5.0];
    let segments = angles
        .iter()
        .enumerate()
        .map(|(i, &a)| match kind {
            CourseKind::Corrupted if i % 3 == 1 => {
                Segment::corrupted(a, 40.0, if i % 2 == 0 { Corruption::Fallen } else { Corruption::Random })
            }
            _ => Segment::clean(a, 40.0),
        })
        .collect();
    TrackCourse { segments }
}
