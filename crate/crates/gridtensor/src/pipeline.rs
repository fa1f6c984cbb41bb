//! The steps behind each command, operating on files in an output
//! directory.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use gridtensor_core::baselines::nmf::{nmf_fit, RTU_CHANNEL_RANK, RTU_POINTS_RANK};
use gridtensor_core::baselines::pca::{pca_fit, DEFAULT_VARIANCE_TARGET};
use gridtensor_core::baselines::NmfDetector;
use gridtensor_core::cpapr::fit_smoothed;
use gridtensor_core::eval::{rank_sweep, roc_pr, validation_items, SweepResult, ValidationItem};
use gridtensor_core::schema::build_tensor;
use gridtensor_core::scoring::{labeled_scores, score_batch, Scorer, TensorDetector};
use gridtensor_core::{FitOptions, MessageRecord, SchemaKind, SparseTensor, TensorSchema};

use crate::artifacts::{self, BaselinesArtifact, BuildManifest, ModelArtifact};
use crate::coo;
use crate::logs::read_log_file;
use crate::output::{self, Metrics};
use crate::{Error, Result};

pub const TENSOR_FILE: &str = "tensor.coo";
pub const BUILD_FILE: &str = "build.json";
pub const MODEL_FILE: &str = "model.json";
pub const BASELINES_FILE: &str = "baselines.json";
pub const SWEEP_FILE: &str = "sweep.json";
pub const PROFILE_FILE: &str = "profile.json";
pub const HISTORY_FILE: &str = "history.csv";

/// Quantile bins requested for the inter-arrival time mode.
pub const DEFAULT_TARGET_BINS: usize = 100;

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn parse_schema(name: &str) -> Result<TensorSchema> {
    match SchemaKind::parse(name) {
        Some(kind @ (SchemaKind::Ipt | SchemaKind::Ipct | SchemaKind::Ipc)) => {
            Ok(TensorSchema::new(kind))
        }
        _ => Err(Error::Usage(format!(
            "unknown schema `{name}` (expected IPT, IPCT or IPC)"
        ))),
    }
}

/// Builds the training tensor from `input` and writes it with its
/// manifest into `out_dir`.
pub fn build(
    input: &Path,
    schema: &TensorSchema,
    target_bins: usize,
    out_dir: &Path,
) -> Result<BuildManifest> {
    let records = read_log_file(input)?;
    let built = build_tensor(&records, schema, None, None, target_bins)?;
    if built.tensor.nnz() == 0 {
        return Err(Error::Data(format!(
            "{}: no records entered the tensor",
            input.display()
        )));
    }
    ensure_dir(out_dir)?;
    let tensor_path = out_dir.join(TENSOR_FILE);
    let file = File::create(&tensor_path).map_err(|e| Error::io(&tensor_path, e))?;
    coo::write_tensor(std::io::BufWriter::new(file), &built.tensor)
        .map_err(|e| Error::io(&tensor_path, e))?;
    let manifest = BuildManifest {
        schema: schema.clone(),
        encoders: built.encoders,
        binning: built.binning,
        target_bins,
        tensor_file: PathBuf::from(TENSOR_FILE),
        input: input.to_path_buf(),
        ingested: built.ingested,
        skipped_first_occurrence: built.skipped_first_occurrence,
        out_of_vocabulary: built.out_of_vocabulary.len(),
    };
    artifacts::save(&out_dir.join(BUILD_FILE), &manifest)?;
    Ok(manifest)
}

/// Loads a build and checks the tensor against the schema, encoders and
/// binning recorded with it.
pub fn load_build(out_dir: &Path) -> Result<(BuildManifest, SparseTensor)> {
    let manifest: BuildManifest = artifacts::load(&out_dir.join(BUILD_FILE))?;
    let path = out_dir.join(&manifest.tensor_file);
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let tensor = coo::read_tensor(BufReader::new(file), &path.display().to_string())?;
    let expected = manifest
        .schema
        .shape(&manifest.encoders, manifest.binning.as_ref())?;
    if tensor.shape() != expected.as_slice() {
        return Err(Error::Artifact {
            path,
            message: format!(
                "tensor shape {:?} does not match the build manifest {:?}",
                tensor.shape(),
                expected
            ),
        });
    }
    Ok((manifest, tensor))
}

/// Loads a model artifact and re-checks its model against the schema,
/// encoders and binning stored with it.
pub fn load_model(path: &Path) -> Result<ModelArtifact> {
    let artifact: ModelArtifact = artifacts::load(path)?;
    let d = &artifact.detector;
    TensorDetector::new(
        d.schema.clone(),
        d.model.clone(),
        d.encoders.clone(),
        d.binning.clone(),
    )
    .map_err(|e| Error::Artifact {
        path: path.to_path_buf(),
        message: format!("inconsistent model: {e}"),
    })?;
    Ok(artifact)
}

/// Encodes labeled validation logs with the build's vocabulary.
pub fn validation_set(manifest: &BuildManifest, paths: &[PathBuf]) -> Result<Vec<ValidationItem>> {
    if paths.is_empty() {
        return Err(Error::Usage(
            "a rank sweep needs at least one labeled validation log".into(),
        ));
    }
    let mut items = Vec::new();
    for path in paths {
        let records = read_log_file(path)?;
        let encoded = validation_items(
            &manifest.schema,
            &manifest.encoders,
            manifest.binning.as_ref(),
            &records,
        )
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        items.extend(encoded);
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RankChoice {
    Fixed(usize),
    Sweep {
        grid: Vec<usize>,
        validation: Vec<PathBuf>,
    },
}

pub fn sweep(
    manifest: &BuildManifest,
    tensor: &SparseTensor,
    grid: &[usize],
    validation: &[PathBuf],
    options: &FitOptions,
) -> Result<SweepResult> {
    let items = validation_set(manifest, validation)?;
    Ok(rank_sweep(tensor, &items, grid, options)?)
}

/// Fits and fuses the rank-1 and rank-R models, sweeping for R first when
/// asked to.
pub fn train(
    manifest: &BuildManifest,
    tensor: &SparseTensor,
    choice: &RankChoice,
    options: &FitOptions,
) -> Result<ModelArtifact> {
    let (rank, sweep) = match choice {
        RankChoice::Fixed(rank) => (*rank, None),
        RankChoice::Sweep { grid, validation } => {
            let result = self::sweep(manifest, tensor, grid, validation, options)?;
            (result.best_rank, Some(result))
        }
    };
    let (model, report) = fit_smoothed(tensor, rank, options)?;
    let detector = TensorDetector::new(
        manifest.schema.clone(),
        model,
        manifest.encoders.clone(),
        manifest.binning.clone(),
    )?;
    Ok(ModelArtifact {
        detector,
        rank,
        objective: report.final_objective(),
        fit_options: options.clone(),
        sweep,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineSettings {
    pub points_rank: usize,
    pub channel_rank: usize,
    pub pca_variance: f64,
    pub target_bins: usize,
    pub options: FitOptions,
}

impl Default for BaselineSettings {
    fn default() -> Self {
        Self {
            points_rank: RTU_POINTS_RANK,
            channel_rank: RTU_CHANNEL_RANK,
            pca_variance: DEFAULT_VARIANCE_TARGET,
            target_bins: DEFAULT_TARGET_BINS,
            options: FitOptions::default(),
        }
    }
}

fn nmf_detector(
    history: &[MessageRecord],
    kind: SchemaKind,
    rank: usize,
    options: &FitOptions,
) -> Result<NmfDetector> {
    let schema = TensorSchema::new(kind);
    let built = build_tensor(history, &schema, None, None, 1)?;
    let model = nmf_fit(&built.tensor, rank, options)?;
    Ok(NmfDetector {
        schema,
        model,
        encoders: built.encoders,
    })
}

/// NMF over the RTU×points and RTU×channel matrices, and PCA over one-hot
/// features of every field plus the inter-arrival bin.
pub fn fit_baselines(
    history: &[MessageRecord],
    settings: &BaselineSettings,
) -> Result<BaselinesArtifact> {
    let nmf_ixp = nmf_detector(
        history,
        SchemaKind::RtuPoints,
        settings.points_rank,
        &settings.options,
    )?;
    let nmf_ixc = nmf_detector(
        history,
        SchemaKind::RtuChannel,
        settings.channel_rank,
        &settings.options,
    )?;
    let features = build_tensor(
        history,
        &TensorSchema::ipct(),
        None,
        None,
        settings.target_bins,
    )?;
    let binning = features
        .binning
        .expect("time-bearing schema always has a binning");
    let pca = pca_fit(history, &features.encoders, &binning, settings.pca_variance)?;
    Ok(BaselinesArtifact {
        nmf_ixp,
        nmf_ixc,
        pca,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSummary {
    pub scores_file: PathBuf,
    pub messages: usize,
    pub out_of_vocabulary: usize,
    pub unscored: usize,
    /// Present when every input record is labeled.
    pub metrics: Option<Metrics>,
}

/// Scores `records`, writes the score table and, for a fully labeled
/// stream, the curves and metrics. `file_model` names baseline outputs.
pub fn score_stream<S: Scorer + ?Sized>(
    scorer: &S,
    model_name: &str,
    file_model: Option<&str>,
    rank: Option<usize>,
    records: &[MessageRecord],
    out_dir: &Path,
) -> Result<ScoreSummary> {
    let scored = score_batch(scorer, records)?;
    ensure_dir(out_dir)?;
    let scores_file = output::output_path(out_dir, "scores", file_model, "csv");
    output::write_scores_file(&scores_file, &scored, file_model)?;
    let out_of_vocabulary = scored.iter().filter(|s| s.outcome.is_oov()).count();
    let unscored = scored.iter().filter(|s| s.p_value().is_none()).count();
    let metrics = if !records.is_empty() && records.iter().all(|r| r.label.is_some()) {
        let report = roc_pr(&labeled_scores(&scored))?;
        let metrics = Metrics {
            model: model_name.to_string(),
            roc_auc: report.roc_auc,
            pr_auc: report.pr_auc,
            anomalies: report.anomalies,
            benign: report.benign,
            unscored,
            out_of_vocabulary,
            rank,
        };
        output::write_evaluation(out_dir, file_model, &report, &metrics)?;
        Some(metrics)
    } else {
        None
    };
    Ok(ScoreSummary {
        scores_file,
        messages: scored.len(),
        out_of_vocabulary,
        unscored,
        metrics,
    })
}

/// Evaluates an existing score table.
pub fn evaluate_scores(path: &Path, out_dir: &Path) -> Result<Metrics> {
    let rows = output::read_scores_file(path)?;
    let mut models: Vec<&str> = rows.iter().filter_map(|r| r.model.as_deref()).collect();
    models.sort_unstable();
    models.dedup();
    if models.len() > 1 {
        return Err(Error::Data(format!(
            "{}: mixes models {models:?}",
            path.display()
        )));
    }
    let model = models.first().map(|m| m.to_string());
    let pairs = output::labeled_pairs(&rows).ok_or_else(|| {
        Error::Data(format!(
            "{}: every row needs a label to evaluate",
            path.display()
        ))
    })?;
    let report = roc_pr(&pairs)?;
    let metrics = Metrics {
        model: model.clone().unwrap_or_else(|| "scores".into()),
        roc_auc: report.roc_auc,
        pr_auc: report.pr_auc,
        anomalies: report.anomalies,
        benign: report.benign,
        unscored: rows.iter().filter(|r| r.p_value.is_none()).count(),
        out_of_vocabulary: rows.iter().filter(|r| r.oov).count(),
        rank: None,
    };
    ensure_dir(out_dir)?;
    output::write_evaluation(out_dir, model.as_deref(), &report, &metrics)?;
    Ok(metrics)
}
