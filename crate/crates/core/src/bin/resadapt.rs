use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use resadapt::dataset::{export_dir, ingest_dir, Dataset, HeaderAliases, Ladder, Study};
use resadapt::energy::{compare_policies, load_calibration, PlaybackTrace};
use resadapt::json::to_canonical_json;
use resadapt::predictor::{
    feature_rows, loocv_by_viewer, per_personality_eval, train_forest, FeatureSchema, FeatureSet,
    ForestBuilder, ForestParams, MeanBuilder, MeanRegressor, ModelBuilder, SavedModel,
};
use resadapt::simulator::{
    replay_study, run_session, ReplayPolicy, SessionScript, DEFAULT_MIN_DWELL_S, DEFAULT_SESSION_S,
};
use resadapt::video::{
    parse_raw_planar, parse_y4m, siti_report, Aggregation, ChromaFormat, SiTiThresholds,
};
use resadapt::{presets, report, Error, Result};

#[derive(Parser)]
#[command(
    name = "resadapt",
    version,
    about = "Context-aware video resolution toolkit"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SI/TI of a Y4M (or raw planar) video.
    Siti(SitiArgs),
    /// Validate a study directory and write it in canonical form.
    Ingest(IngestArgs),
    /// Run a named statistics preset.
    Stats(StatsArgs),
    /// Train a resolution model on a whole study.
    Train(TrainArgs),
    /// Leave-one-viewer-out evaluation.
    Eval(EvalArgs),
    /// Scripted session or study replay with energy estimates.
    Simulate(SimulateArgs),
    /// Compare playback traces under a calibration.
    Energy(EnergyArgs),
    /// Tidy CSV for a figure family.
    Report(ReportArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory.
    #[arg(long, env = "RESADAPT_DATA")]
    data: PathBuf,
    /// Header alias file ("alias=canonical" per line).
    #[arg(long)]
    aliases: Option<PathBuf>,
}

impl DataArgs {
    fn load(&self) -> Result<Dataset> {
        let aliases = match &self.aliases {
            Some(p) => HeaderAliases::parse(&std::fs::read_to_string(p)?)?,
            None => HeaderAliases::new(),
        };
        ingest_dir(&self.data, &aliases)
    }
}

#[derive(Args)]
struct SitiArgs {
    video: PathBuf,
    #[arg(long, default_value = "mean")]
    agg: Aggregation,
    /// Treat input as raw planar frames of this size, e.g. 1920x1080.
    #[arg(long)]
    raw: Option<String>,
    /// Chroma layout of raw input (420, 422, 444, mono).
    #[arg(long, default_value = "420")]
    chroma: String,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 40.0)]
    si_low: f64,
    #[arg(long, default_value_t = 110.0)]
    si_high: f64,
    #[arg(long, default_value_t = 10.0)]
    ti_low: f64,
    #[arg(long, default_value_t = 25.0)]
    ti_high: f64,
    /// Include per-frame values.
    #[arg(long)]
    frames: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct IngestArgs {
    /// Directory with participants, videos, sessions (and optional events) CSVs.
    source: PathBuf,
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Directory for the canonical copy.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, required_unless_present = "list")]
    preset: Option<String>,
    /// List presets and exit.
    #[arg(long)]
    list: bool,
    #[arg(long, env = "RESADAPT_DATA")]
    data: Option<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
    /// Override the preset's study.
    #[arg(long)]
    study: Option<u8>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Forest,
    Mean,
}

#[derive(Args)]
struct ModelArgs {
    /// Master seed for all randomness.
    #[arg(long, required = true)]
    seed: u64,
    #[arg(long, default_value = "2")]
    study: u8,
    #[arg(long, value_enum, default_value = "forest")]
    model: ModelKind,
    #[arg(long, default_value_t = 100)]
    n_trees: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 2)]
    min_leaf: usize,
    /// Features tried per split (default: ceil(sqrt(#features))).
    #[arg(long)]
    max_features: Option<usize>,
    #[arg(long)]
    no_bootstrap: bool,
    #[arg(long)]
    no_ti: bool,
    #[arg(long)]
    no_demographics: bool,
    #[arg(long)]
    no_personality: bool,
}

impl ModelArgs {
    fn study(&self) -> Result<Study> {
        parse_study(self.study)
    }

    fn params(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            max_depth: self.max_depth,
            min_leaf: self.min_leaf,
            max_features: self.max_features,
            bootstrap: !self.no_bootstrap,
        }
    }

    fn feature_set(&self) -> Result<FeatureSet> {
        let default = FeatureSet::for_study(self.study()?);
        Ok(FeatureSet {
            ti: !self.no_ti,
            demographics: !self.no_demographics,
            personality: default.personality && !self.no_personality,
        })
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    /// Leave-one-viewer-out folds (the only evaluation mode).
    #[arg(long, default_value_t = true)]
    loocv: bool,
    /// Separate models per dominant trait.
    #[arg(long)]
    per_personality: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    calibration: PathBuf,
    /// Session script JSON.
    #[arg(long, conflicts_with = "replay")]
    script: Option<PathBuf>,
    /// Trained model JSON.
    #[arg(long)]
    model_file: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_DWELL_S)]
    min_dwell: f64,
    /// Decision log CSV for script mode.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Replay the recorded sessions of a dataset.
    #[arg(long)]
    replay: bool,
    #[arg(long, env = "RESADAPT_DATA")]
    data: Option<PathBuf>,
    #[arg(long)]
    aliases: Option<PathBuf>,
    #[arg(long, default_value = "2")]
    study: u8,
    /// observed, observed-events, model, or fixed:<lines>.
    #[arg(long, default_value = "observed")]
    policy: String,
    /// Fixed baseline resolution (default: ladder maximum).
    #[arg(long)]
    baseline: Option<u32>,
    #[arg(long, default_value_t = DEFAULT_SESSION_S)]
    duration: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct EnergyArgs {
    #[arg(long)]
    calibration: PathBuf,
    /// name=path of a resolution,duration_s CSV; repeatable.
    #[arg(long = "trace", required = true)]
    traces: Vec<String>,
    /// Name of the baseline trace.
    #[arg(long)]
    baseline: String,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct ReportArgs {
    /// fig3, fig4 or fig9-11.
    figure: String,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "1")]
    study: u8,
    #[command(flatten)]
    out: OutputArgs,
}

fn parse_study(n: u8) -> Result<Study> {
    match n {
        1 => Ok(Study::One),
        2 => Ok(Study::Two),
        other => Err(Error::Invalid(format!("study must be 1 or 2, got {other}"))),
    }
}

fn check_writable(path: &Path, force: bool) -> Result<()> {
    if path.exists() && !force {
        return Err(Error::Invalid(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn emit(out: &OutputArgs, content: &str) -> Result<()> {
    match &out.output {
        Some(path) => {
            check_writable(path, out.force)?;
            std::fs::write(path, content)?;
        }
        None => std::io::stdout().write_all(content.as_bytes())?,
    }
    Ok(())
}

fn optional_dataset(data: &Option<PathBuf>, aliases: &Option<PathBuf>) -> Result<Option<Dataset>> {
    data.as_ref()
        .map(|d| {
            DataArgs {
                data: d.clone(),
                aliases: aliases.clone(),
            }
            .load()
        })
        .transpose()
}

fn run_siti(a: &SitiArgs) -> Result<()> {
    let thresholds = SiTiThresholds {
        si_low: a.si_low,
        si_high: a.si_high,
        ti_low: a.ti_low,
        ti_high: a.ti_high,
    };
    let reader = BufReader::new(File::open(&a.video)?);
    let seq = match &a.raw {
        None => parse_y4m(reader)?,
        Some(size) => {
            let (w, h) = size
                .split_once(['x', 'X'])
                .and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)))
                .ok_or_else(|| {
                    Error::Invalid(format!("--raw expects WIDTHxHEIGHT, got {size:?}"))
                })?;
            let chroma = ChromaFormat::from_tag(&a.chroma)
                .ok_or_else(|| Error::Invalid(format!("unknown chroma format {:?}", a.chroma)))?;
            parse_raw_planar(reader, w, h, chroma, a.fps)?
        }
    };
    emit(
        &a.out,
        &to_canonical_json(&siti_report(&seq, &thresholds, a.agg, a.frames)?)?,
    )
}

fn run_ingest(a: &IngestArgs) -> Result<()> {
    let aliases = match &a.aliases {
        Some(p) => HeaderAliases::parse(&std::fs::read_to_string(p)?)?,
        None => HeaderAliases::new(),
    };
    let ds = ingest_dir(&a.source, &aliases)?;
    if a.out.exists() && std::fs::read_dir(&a.out)?.next().is_some() && !a.force {
        return Err(Error::Invalid(format!(
            "{} is not empty; pass --force to overwrite",
            a.out.display()
        )));
    }
    std::fs::create_dir_all(&a.out)?;
    export_dir(&ds, &a.out)?;
    let summary = serde_json::json!({
        "participants": ds.participants().len(),
        "videos": ds.videos().len(),
        "sessions": ds.sessions().len(),
        "output": a.out.display().to_string(),
    });
    print!("{}", to_canonical_json(&summary)?);
    Ok(())
}

fn run_stats(a: &StatsArgs) -> Result<()> {
    if a.list {
        let list: Vec<_> = presets::PRESETS
            .iter()
            .map(|p| serde_json::json!({"name": p.name, "description": p.description, "needs_dataset": p.default_study.is_some()}))
            .collect();
        return emit(&a.out, &to_canonical_json(&list)?);
    }
    let name = a.preset.as_deref().expect("clap enforces --preset");
    let preset = presets::find(name)?;
    let ds = if preset.default_study.is_some() {
        optional_dataset(&a.data, &a.aliases)?
    } else {
        None
    };
    let study = a.study.map(parse_study).transpose()?;
    emit(
        &a.out,
        &to_canonical_json(&presets::run_preset(name, ds.as_ref(), study)?)?,
    )
}

fn run_train(a: &TrainArgs) -> Result<()> {
    let ds = a.data.load()?;
    let study = a.model.study()?;
    let schema = FeatureSchema::new(a.model.feature_set()?);
    let samples = schema.encode_rows(&feature_rows(&ds, study))?;
    let saved = match a.model.model {
        ModelKind::Forest => SavedModel::forest(
            schema,
            train_forest(&samples, &a.model.params(), a.model.seed)?,
        ),
        ModelKind::Mean => SavedModel::mean(schema, MeanRegressor::fit(&samples)?),
    };
    emit(&a.out, &saved.to_json()?)
}

fn run_eval(a: &EvalArgs) -> Result<()> {
    let ds = a.data.load()?;
    let study = a.model.study()?;
    let set = a.model.feature_set()?;
    let json = if a.per_personality {
        to_canonical_json(&per_personality_eval(
            &ds,
            study,
            set,
            &a.model.params(),
            a.model.seed,
        )?)?
    } else {
        let builder: Box<dyn ModelBuilder> = match a.model.model {
            ModelKind::Forest => Box::new(ForestBuilder {
                params: a.model.params(),
                seed: a.model.seed,
            }),
            ModelKind::Mean => Box::new(MeanBuilder),
        };
        to_canonical_json(&loocv_by_viewer(&ds, study, set, builder.as_ref())?)?
    };
    emit(&a.out, &json)
}

fn load_model(path: &Option<PathBuf>) -> Result<SavedModel> {
    let path = path
        .as_ref()
        .ok_or_else(|| Error::Invalid("--model-file is required for this mode".into()))?;
    SavedModel::from_json(&std::fs::read_to_string(path)?)
}

fn run_simulate(a: &SimulateArgs) -> Result<()> {
    let cal = load_calibration(&a.calibration)?;
    if let Some(script_path) = &a.script {
        let script = SessionScript::from_json(&std::fs::read_to_string(script_path)?)?;
        let model = load_model(&a.model_file)?;
        let run = run_session(&script, &model, a.min_dwell)?;
        let baseline = a
            .baseline
            .unwrap_or_else(|| *script.ladder.iter().max().expect("validated ladder"));
        let mut traces = BTreeMap::new();
        traces.insert("model".to_string(), run.trace());
        let base_name = ReplayPolicy::Fixed(baseline).name();
        traces.insert(
            base_name.clone(),
            PlaybackTrace::constant(baseline, script.video.duration_s)?,
        );
        let energy = compare_policies(&traces, &base_name, &cal)?;
        if let Some(log) = &a.log {
            check_writable(log, a.out.force)?;
            run.write_decisions_csv(File::create(log)?)?;
        }
        let out = serde_json::json!({
            "note": "per-context-event adaptation is an extrapolation of per-session predictions",
            "segments": run.segments,
            "decisions": run.decisions,
            "energy": energy,
        });
        return emit(&a.out, &to_canonical_json(&out)?);
    }
    if !a.replay {
        return Err(Error::Invalid("pass --script <file> or --replay".into()));
    }
    let ds = optional_dataset(&a.data, &a.aliases)?
        .ok_or_else(|| Error::Invalid("--replay needs --data or RESADAPT_DATA".into()))?;
    let study = parse_study(a.study)?;
    let baseline = a.baseline.unwrap_or_else(|| Ladder::for_study(study).max());
    let model;
    let policy = match a.policy.as_str() {
        "observed" => ReplayPolicy::Observed,
        "observed-events" | "observed_events" => ReplayPolicy::ObservedEvents,
        "model" => {
            model = load_model(&a.model_file)?;
            ReplayPolicy::Model(&model)
        }
        other => match other.strip_prefix("fixed:").map(str::parse::<u32>) {
            Some(Ok(r)) => ReplayPolicy::Fixed(r),
            _ => return Err(Error::Invalid(format!("unknown policy {other:?}"))),
        },
    };
    let rep = replay_study(&ds, study, policy, &cal, baseline, a.duration)?;
    emit(&a.out, &to_canonical_json(&rep)?)
}

fn run_energy(a: &EnergyArgs) -> Result<()> {
    let cal = load_calibration(&a.calibration)?;
    let mut traces = BTreeMap::new();
    for spec in &a.traces {
        let (name, path) = spec
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("--trace expects name=path, got {spec:?}")))?;
        traces.insert(
            name.to_string(),
            PlaybackTrace::from_csv_reader(File::open(path)?)?,
        );
    }
    let rep = compare_policies(&traces, &a.baseline, &cal)?;
    let out = serde_json::json!({
        "calibration_monotone": cal.is_monotone(),
        "report": rep,
    });
    emit(&a.out, &to_canonical_json(&out)?)
}

fn run_report(a: &ReportArgs) -> Result<()> {
    let ds = a.data.load()?;
    let mut buf = Vec::new();
    report::write_figure(&ds, parse_study(a.study)?, &a.figure, &mut buf)?;
    emit(
        &a.out,
        &String::from_utf8(buf).expect("csv output is UTF-8"),
    )
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Invalid(format!("cannot configure {n} threads: {e}")))?;
    }
    match &cli.command {
        Command::Siti(a) => run_siti(a),
        Command::Ingest(a) => run_ingest(a),
        Command::Stats(a) => run_stats(a),
        Command::Train(a) => run_train(a),
        Command::Eval(a) => run_eval(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Energy(a) => run_energy(a),
        Command::Report(a) => run_report(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
