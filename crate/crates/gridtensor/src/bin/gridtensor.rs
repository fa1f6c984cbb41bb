use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gridtensor::artifacts::{self, BaselinesArtifact};
use gridtensor::config::{PipelineConfig, OUT_DIR_ENV};
use gridtensor::experiment::{format_table, run_replication, ReplicationSettings};
use gridtensor::logs::{read_log_file, write_log_file};
use gridtensor::pipeline::{self, BaselineSettings, RankChoice, ScoreSummary};
use gridtensor::{Error, Result};
use gridtensor_core::simulator::{
    simulate, synthetic_history, PlantConfig, Scenario, ScenarioConfig, SystemProfile,
};
use gridtensor_core::FitOptions;

/// Poisson tensor anomaly detection for SCADA message logs.
#[derive(Parser)]
#[command(name = "gridtensor", version)]
struct Cli {
    /// TOML config with per-command sections; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory [default: $GRIDTENSOR_OUT, then ./gridtensor-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for fitting and simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the training tensor from a message log.
    Build(BuildArgs),
    /// Fit the fused model at a fixed rank or the best rank of a sweep.
    Train(TrainArgs),
    /// Score candidate ranks on labeled validation logs.
    Sweep(SweepArgs),
    /// Generate labeled test streams from a traffic profile.
    Simulate(SimulateArgs),
    /// Score a log; labeled logs are evaluated as well.
    Score(ScoreArgs),
    /// Compute ROC/PR curves and metrics for a labeled score table.
    Evaluate(EvaluateArgs),
    /// Summarize metrics in the output directory, or run the synthetic replication.
    Report(ReportArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Training log (.csv or .jsonl).
    #[arg(long)]
    input: Option<PathBuf>,
    /// IPT, IPCT or IPC.
    #[arg(long)]
    schema: Option<String>,
    /// Quantile bins requested for the inter-arrival time mode.
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated candidate ranks [default: 1..=50 then 55..=100 by 5].
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Labeled validation logs.
    #[arg(long = "validation", num_args = 1..)]
    validation: Vec<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Fixed CP rank; omit to sweep
    #[arg(long, conflicts_with = "grid")]
    rank: Option<usize>,
    #[command(flatten)]
    sweep: SweepArgs,
    /// Also fit the NMF and PCA baselines.
    #[arg(long)]
    baselines: bool,
    /// Training log for the baselines [default: the build input].
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Learn the profile from this log.
    #[arg(long, conflicts_with_all = ["profile", "plant"])]
    history: Option<PathBuf>,
    /// Load a saved profile.
    #[arg(long, conflicts_with = "plant")]
    profile: Option<PathBuf>,
    /// Generate the history from the synthetic 24-RTU plant.
    #[arg(long)]
    plant: bool,
    /// blackbox, greybox1, greybox2 or all; repeatable.
    #[arg(long = "scenario", value_delimiter = ',')]
    scenarios: Vec<String>,
    /// Benign messages per stream
    #[arg(long)]
    benign: Option<usize>,
    /// Anomalous messages per stream
    #[arg(long)]
    anomalies: Option<usize>,
}

#[derive(Args)]
struct ScoreArgs {
    /// Log to score.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Model artifact [default: <out>/model.json].
    #[arg(long)]
    model: Option<PathBuf>,
    /// Also score with the baselines in <out>/baselines.json.
    #[arg(long)]
    baselines: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Labeled score table written by `score`.
    #[arg(long)]
    scores: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Run the synthetic replication over seeds 0..N.
    #[arg(long)]
    replicate: Option<u64>,
}

struct Context {
    config: PipelineConfig,
    out: PathBuf,
    seed: u64,
}

impl Context {
    fn fit_options(&self) -> FitOptions {
        let mut options = self.config.train.fit.clone().unwrap_or_default();
        options.seed = self.seed;
        options
    }
}

fn required<T>(value: Option<T>, what: &str) -> Result<T> {
    value.ok_or_else(|| Error::Usage(format!("missing {what}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let ctx = Context {
        out: config.out_dir(cli.out.as_deref()),
        seed: cli.seed.or(config.seed).unwrap_or(0),
        config,
    };
    match cli.command {
        Command::Build(args) => build(&ctx, args),
        Command::Train(args) => train(&ctx, args),
        Command::Sweep(args) => sweep(&ctx, args),
        Command::Simulate(args) => simulate_cmd(&ctx, args),
        Command::Score(args) => score(&ctx, args),
        Command::Evaluate(args) => evaluate(&ctx, args),
        Command::Report(args) => report(&ctx, args),
    }
}

fn build(ctx: &Context, args: BuildArgs) -> Result<()> {
    let section = &ctx.config.build;
    let input = required(
        args.input.or_else(|| section.input.clone()),
        "--input (or [build] input)",
    )?;
    let schema = pipeline::parse_schema(&required(
        args.schema.or_else(|| section.schema.clone()),
        "--schema",
    )?)?;
    let bins = args
        .bins
        .or(section.target_bins)
        .unwrap_or(pipeline::DEFAULT_TARGET_BINS);
    let manifest = pipeline::build(&input, &schema, bins, &ctx.out)?;
    eprintln!(
        "skip report: {} first-occurrence records excluded, {} out-of-vocabulary records",
        manifest.skipped_first_occurrence, manifest.out_of_vocabulary
    );
    let shape = schema.shape(&manifest.encoders, manifest.binning.as_ref())?;
    println!(
        "built {} tensor {:?} from {} records",
        schema.name(),
        shape,
        manifest.ingested
    );
    Ok(())
}

fn rank_choice(ctx: &Context, rank: Option<usize>, sweep: SweepArgs) -> Result<RankChoice> {
    let section = &ctx.config.train;
    let validation = if sweep.validation.is_empty() {
        section.validation.clone()
    } else {
        sweep.validation
    };
    if let Some(rank) = rank {
        return Ok(RankChoice::Fixed(rank));
    }
    if let Some(grid) = sweep.grid.or_else(|| section.grid.clone()) {
        return Ok(RankChoice::Sweep { grid, validation });
    }
    match section.rank {
        Some(rank) => Ok(RankChoice::Fixed(rank)),
        None => Err(Error::Usage(
            "give --rank or --grid with --validation".into(),
        )),
    }
}

fn train(ctx: &Context, args: TrainArgs) -> Result<()> {
    let choice = rank_choice(ctx, args.rank, args.sweep)?;
    let (manifest, tensor) = pipeline::load_build(&ctx.out)?;
    let options = ctx.fit_options();
    let model = pipeline::train(&manifest, &tensor, &choice, &options)?;
    artifacts::save(&ctx.out.join(pipeline::MODEL_FILE), &model)?;
    if let Some(sweep) = &model.sweep {
        artifacts::save(&ctx.out.join(pipeline::SWEEP_FILE), sweep)?;
    }
    println!("chosen rank {}", model.rank);
    println!("final objective {}", model.objective);

    let section = &ctx.config.train;
    if args.baselines || section.baselines.unwrap_or(false) {
        let history = args
            .history
            .or_else(|| section.history.clone())
            .unwrap_or_else(|| manifest.input.clone());
        let records = read_log_file(&history)?;
        let defaults = BaselineSettings::default();
        let settings = BaselineSettings {
            points_rank: section.nmf_points_rank.unwrap_or(defaults.points_rank),
            channel_rank: section.nmf_channel_rank.unwrap_or(defaults.channel_rank),
            pca_variance: section.pca_variance.unwrap_or(defaults.pca_variance),
            target_bins: manifest.target_bins,
            options,
        };
        let baselines = pipeline::fit_baselines(&records, &settings)?;
        artifacts::save(&ctx.out.join(pipeline::BASELINES_FILE), &baselines)?;
        println!(
            "baselines: NMF ranks {} and {}, PCA keeps {} components",
            settings.points_rank,
            settings.channel_rank,
            baselines.pca.model.k()
        );
    }
    Ok(())
}

fn sweep(ctx: &Context, args: SweepArgs) -> Result<()> {
    let section = &ctx.config.train;
    let grid = args
        .grid
        .or_else(|| section.grid.clone())
        .unwrap_or_else(gridtensor_core::eval::default_rank_grid);
    let validation = if args.validation.is_empty() {
        section.validation.clone()
    } else {
        args.validation
    };
    let (manifest, tensor) = pipeline::load_build(&ctx.out)?;
    let result = pipeline::sweep(&manifest, &tensor, &grid, &validation, &ctx.fit_options())?;
    artifacts::save(&ctx.out.join(pipeline::SWEEP_FILE), &result)?;
    println!("rank,pr_auc,objective");
    for (rank, auc, objective) in &result.per_rank {
        println!("{rank},{auc},{objective}");
    }
    println!(
        "chosen rank {} (validation PR AUC {:.4})",
        result.best_rank, result.best_pr_auc
    );
    Ok(())
}

fn simulate_cmd(ctx: &Context, args: SimulateArgs) -> Result<()> {
    let section = &ctx.config.simulate;
    pipeline::ensure_dir(&ctx.out)?;
    let profile = if args.plant
        || (args.history.is_none() && args.profile.is_none() && section.plant.is_some())
    {
        let plant = PlantConfig {
            seed: ctx.seed,
            ..section.plant.clone().unwrap_or_default()
        };
        let history = synthetic_history(&plant)?;
        let path = ctx.out.join(pipeline::HISTORY_FILE);
        write_log_file(&path, &history)?;
        println!("wrote {} ({} messages)", path.display(), history.len());
        SystemProfile::learn(&history)?
    } else if let Some(path) = args.profile.or_else(|| section.profile.clone()) {
        artifacts::load(&path)?
    } else {
        let path = required(
            args.history.or_else(|| section.history.clone()),
            "profile source (--history, --profile or --plant)",
        )?;
        SystemProfile::learn(&read_log_file(&path)?)?
    };
    artifacts::save(&ctx.out.join(pipeline::PROFILE_FILE), &profile)?;

    let names = if args.scenarios.is_empty() {
        section
            .scenarios
            .iter()
            .map(|s| s.name().to_string())
            .collect()
    } else {
        args.scenarios
    };
    let scenarios = parse_scenarios(&names)?;
    let defaults = ScenarioConfig::default();
    for scenario in scenarios {
        let config = ScenarioConfig {
            scenario,
            benign_messages: args
                .benign
                .or(section.benign_messages)
                .unwrap_or(defaults.benign_messages),
            anomalies: args
                .anomalies
                .or(section.anomalies)
                .unwrap_or(defaults.anomalies),
            rtu_range: section.rtu_range.unwrap_or(defaults.rtu_range),
            points_range: section.points_range.unwrap_or(defaults.points_range),
            start_ms: section.start_ms.unwrap_or(defaults.start_ms),
            seed: section.seed.unwrap_or(ctx.seed),
        };
        let records = simulate(&profile, &config)?;
        let path = ctx.out.join(format!("{}.csv", scenario.name()));
        write_log_file(&path, &records)?;
        println!(
            "wrote {} ({} benign, {} anomalous)",
            path.display(),
            config.benign_messages,
            config.anomalies
        );
    }
    Ok(())
}

fn parse_scenarios(names: &[String]) -> Result<Vec<Scenario>> {
    if names.is_empty() {
        return Err(Error::Usage("give at least one --scenario".into()));
    }
    let mut out = Vec::new();
    for name in names {
        if name == "all" {
            out.extend(Scenario::ALL);
        } else {
            out.push(
                Scenario::parse(name)
                    .ok_or_else(|| Error::Usage(format!("unknown scenario `{name}`")))?,
            );
        }
    }
    out.dedup();
    Ok(out)
}

fn print_summary(name: &str, summary: &ScoreSummary) {
    eprintln!(
        "{name}: {} messages, {} out-of-vocabulary, {} left unscored",
        summary.messages, summary.out_of_vocabulary, summary.unscored
    );
    match &summary.metrics {
        Some(m) => println!("{name}: ROC AUC {:.4}, PR AUC {:.4}", m.roc_auc, m.pr_auc),
        None => eprintln!("{name}: input is not fully labeled, evaluation skipped"),
    }
}

fn score(ctx: &Context, args: ScoreArgs) -> Result<()> {
    let section = &ctx.config.score;
    let input = required(
        args.input.or_else(|| section.input.clone()),
        "--input (or [score] input)",
    )?;
    let model_path = args
        .model
        .or_else(|| section.model.clone())
        .unwrap_or_else(|| ctx.out.join(pipeline::MODEL_FILE));
    let model = pipeline::load_model(&model_path)?;
    let records = read_log_file(&input)?;
    let name = model.detector.schema.name();
    let summary = pipeline::score_stream(
        &model.detector,
        name,
        None,
        Some(model.rank),
        &records,
        &ctx.out,
    )?;
    print_summary(name, &summary);

    if args.baselines || section.baselines.unwrap_or(false) {
        let baselines: BaselinesArtifact =
            artifacts::load(&ctx.out.join(pipeline::BASELINES_FILE))?;
        let nmf_ixp = baselines.nmf_ixp.name();
        let nmf_ixc = baselines.nmf_ixc.name();
        let runs: [(&str, &dyn gridtensor_core::scoring::Scorer, Option<usize>); 3] = [
            (
                nmf_ixp,
                &baselines.nmf_ixp,
                Some(baselines.nmf_ixp.model.rank()),
            ),
            (
                nmf_ixc,
                &baselines.nmf_ixc,
                Some(baselines.nmf_ixc.model.rank()),
            ),
            ("pca", &baselines.pca, Some(baselines.pca.model.k())),
        ];
        for (name, scorer, rank) in runs {
            let summary =
                pipeline::score_stream(scorer, name, Some(name), rank, &records, &ctx.out)?;
            print_summary(name, &summary);
        }
    }
    Ok(())
}

fn evaluate(ctx: &Context, args: EvaluateArgs) -> Result<()> {
    let path = required(
        args.scores.or_else(|| ctx.config.evaluate.scores.clone()),
        "--scores",
    )?;
    let metrics = pipeline::evaluate_scores(&path, &ctx.out)?;
    println!(
        "{}: ROC AUC {:.4}, PR AUC {:.4}",
        metrics.model, metrics.roc_auc, metrics.pr_auc
    );
    Ok(())
}

fn report(ctx: &Context, args: ReportArgs) -> Result<()> {
    if let Some(n) = args.replicate.or(ctx.config.report.replicate) {
        let results = run_replication(0..n, &ReplicationSettings::default())?;
        print!("{}", format_table(&results));
        pipeline::ensure_dir(&ctx.out)?;
        let path = ctx.out.join("replication.json");
        let text =
            serde_json::to_string_pretty(&results).map_err(|e| Error::Data(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        return Ok(());
    }
    let metrics = collect_metrics(&ctx.out)?;
    if metrics.is_empty() {
        return Err(Error::Data(format!(
            "no metrics files in {} (set --out or {OUT_DIR_ENV})",
            ctx.out.display()
        )));
    }
    println!(
        "{:<10} {:>5} {:>8} {:>8} {:>9} {:>7}",
        "model", "rank", "roc_auc", "pr_auc", "anomalies", "benign"
    );
    for m in metrics {
        let rank = m.rank.map_or("-".to_string(), |r| r.to_string());
        println!(
            "{:<10} {:>5} {:>8.4} {:>8.4} {:>9} {:>7}",
            m.model, rank, m.roc_auc, m.pr_auc, m.anomalies, m.benign
        );
    }
    Ok(())
}

fn collect_metrics(dir: &Path) -> Result<Vec<gridtensor::output::Metrics>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            name.starts_with("metrics") && name.ends_with(".json")
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::Artifact {
                path: p.clone(),
                message: e.to_string(),
            })
        })
        .collect()
}
