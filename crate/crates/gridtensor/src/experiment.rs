//! Scaled replication of the detection experiment on a synthetic plant.
//!
//! Per seed: generate a 24-RTU plant history, learn its profile, train the
//! IPC model with a rank sweep over an independent labeled validation set
//! (one stream per scenario), train IPT and IPCT at a fixed rank, fit the
//! baselines, then score one fresh labeled test stream per scenario.

use std::time::{Duration, Instant};

use gridtensor_core::baselines::pca::DEFAULT_VARIANCE_TARGET;
use gridtensor_core::cpapr::fit_smoothed;
use gridtensor_core::eval::{
    default_rank_grid, rank_sweep, roc_pr, validation_items, ValidationItem,
};
use gridtensor_core::schema::build_tensor;
use gridtensor_core::scoring::{labeled_scores, score_batch, Scorer, TensorDetector};
use gridtensor_core::simulator::{
    generate_benign, simulate, synthetic_history, PlantConfig, Scenario, ScenarioConfig,
    SystemProfile, DEFAULT_START_MS,
};
use gridtensor_core::{FitOptions, MessageRecord, TensorSchema};
use serde::Serialize;

use crate::pipeline::{fit_baselines, BaselineSettings, DEFAULT_TARGET_BINS};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationSettings {
    pub plant: PlantConfig,
    pub target_bins: usize,
    /// Rank of the IPT and IPCT models.
    pub time_model_rank: usize,
    /// Candidate ranks for the IPC sweep.
    pub grid: Vec<usize>,
    pub validation_benign: usize,
    pub validation_anomalies: usize,
    pub test_benign: usize,
    pub test_anomalies: usize,
    /// Length of the benign replay used for the sanity check.
    pub replay_messages: usize,
}

impl Default for ReplicationSettings {
    fn default() -> Self {
        Self {
            plant: PlantConfig::default(),
            target_bins: DEFAULT_TARGET_BINS,
            time_model_rank: 5,
            grid: default_rank_grid(),
            validation_benign: 6_500,
            validation_anomalies: 50,
            test_benign: 13_000,
            test_anomalies: 100,
            replay_messages: 13_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioScores {
    pub scenario: Scenario,
    pub ipc: f64,
    pub ipct: f64,
    pub ipt: f64,
    pub nmf_ixp: f64,
    pub nmf_ixc: f64,
    pub pca: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedResult {
    pub seed: u64,
    pub ipc_rank: usize,
    pub ipc_validation_pr_auc: f64,
    pub ipc_shape: Vec<usize>,
    /// Mean IPC p-value over fresh benign traffic from the learned profile.
    pub ipc_benign_mean: f64,
    /// PR AUC per model and scenario.
    pub scenarios: Vec<ScenarioScores>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SeedResult {
    pub fn scenario(&self, scenario: Scenario) -> &ScenarioScores {
        self.scenarios
            .iter()
            .find(|s| s.scenario == scenario)
            .expect("every scenario is evaluated")
    }
}

fn pr_auc<S: Scorer + ?Sized>(scorer: &S, records: &[MessageRecord]) -> Result<f64> {
    let scored = score_batch(scorer, records)?;
    Ok(roc_pr(&labeled_scores(&scored))?.pr_auc)
}

fn detector(
    history: &[MessageRecord],
    schema: TensorSchema,
    rank_from: impl FnOnce(&gridtensor_core::schema::BuildOutput) -> Result<usize>,
    target_bins: usize,
    options: &FitOptions,
) -> Result<(TensorDetector, usize)> {
    let built = build_tensor(history, &schema, None, None, target_bins)?;
    let rank = rank_from(&built)?;
    let (model, _) = fit_smoothed(&built.tensor, rank, options)?;
    Ok((
        TensorDetector::new(schema, model, built.encoders, built.binning)?,
        rank,
    ))
}

pub fn run_seed(seed: u64, settings: &ReplicationSettings) -> Result<SeedResult> {
    let started = Instant::now();
    let history = synthetic_history(&PlantConfig {
        seed,
        ..settings.plant.clone()
    })?;
    let profile = SystemProfile::learn(&history)?;
    let options = FitOptions::default().with_seed(seed);

    let validation: Vec<Vec<MessageRecord>> = Scenario::ALL
        .iter()
        .enumerate()
        .map(|(k, &scenario)| {
            let config = ScenarioConfig::new(
                scenario,
                settings.validation_benign,
                settings.validation_anomalies,
                seed + 1000 + k as u64,
            );
            simulate(&profile, &config)
        })
        .collect::<gridtensor_core::Result<_>>()?;

    let mut sweep_auc = 0.0;
    let mut shape = Vec::new();
    let (ipc, ipc_rank) = detector(
        &history,
        TensorSchema::ipc(),
        |built| {
            let mut items: Vec<ValidationItem> = Vec::new();
            for stream in &validation {
                items.extend(validation_items(
                    &TensorSchema::ipc(),
                    &built.encoders,
                    None,
                    stream,
                )?);
            }
            let sweep = rank_sweep(&built.tensor, &items, &settings.grid, &options)?;
            sweep_auc = sweep.best_pr_auc;
            shape = built.tensor.shape().to_vec();
            Ok(sweep.best_rank)
        },
        settings.target_bins,
        &options,
    )?;
    let fixed = |_: &_| Ok(settings.time_model_rank);
    let (ipt, _) = detector(
        &history,
        TensorSchema::ipt(),
        fixed,
        settings.target_bins,
        &options,
    )?;
    let (ipct, _) = detector(
        &history,
        TensorSchema::ipct(),
        fixed,
        settings.target_bins,
        &options,
    )?;
    let baselines = fit_baselines(
        &history,
        &BaselineSettings {
            pca_variance: DEFAULT_VARIANCE_TARGET,
            target_bins: settings.target_bins,
            options: options.clone(),
            ..BaselineSettings::default()
        },
    )?;

    let replay = generate_benign(
        &profile,
        settings.replay_messages,
        DEFAULT_START_MS,
        seed + 2000,
    )?;
    let p: Vec<f64> = score_batch(&ipc, &replay)?
        .iter()
        .filter_map(|s| s.p_value())
        .collect();
    let ipc_benign_mean = p.iter().sum::<f64>() / p.len() as f64;

    let mut scenarios = Vec::new();
    for scenario in Scenario::ALL {
        let config = ScenarioConfig::new(
            scenario,
            settings.test_benign,
            settings.test_anomalies,
            seed * 10 + 7,
        );
        let test = simulate(&profile, &config)?;
        scenarios.push(ScenarioScores {
            scenario,
            ipc: pr_auc(&ipc, &test)?,
            ipct: pr_auc(&ipct, &test)?,
            ipt: pr_auc(&ipt, &test)?,
            nmf_ixp: pr_auc(&baselines.nmf_ixp, &test)?,
            nmf_ixc: pr_auc(&baselines.nmf_ixc, &test)?,
            pca: pr_auc(&baselines.pca, &test)?,
        });
    }
    Ok(SeedResult {
        seed,
        ipc_rank,
        ipc_validation_pr_auc: sweep_auc,
        ipc_shape: shape,
        ipc_benign_mean,
        scenarios,
        elapsed: started.elapsed(),
    })
}

pub fn run_replication(
    seeds: impl IntoIterator<Item = u64>,
    settings: &ReplicationSettings,
) -> Result<Vec<SeedResult>> {
    seeds
        .into_iter()
        .map(|seed| run_seed(seed, settings))
        .collect()
}

/// Fixed-width table of PR AUCs, one line per seed and scenario.
pub fn format_table(results: &[SeedResult]) -> String {
    let mut out = String::from("seed  scenario   rank  ipc    ipct   ipt    nmf_ixp nmf_ixc pca\n");
    for r in results {
        for s in &r.scenarios {
            out.push_str(&format!(
                "{:<5} {:<10} {:<5} {:.3}  {:.3}  {:.3}  {:.3}   {:.3}   {:.3}\n",
                r.seed,
                s.scenario.name(),
                r.ipc_rank,
                s.ipc,
                s.ipct,
                s.ipt,
                s.nmf_ixp,
                s.nmf_ixc,
                s.pca
            ));
        }
    }
    out
}
