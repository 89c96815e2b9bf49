//! Counterfactual responsiveness measurement.
//!
//! Each simulation rolls a fresh user forward k-1 consumption steps, then
//! forks: on the model's own top recommendation for step k, the user either
//! just watches it fully (positive baseline) or additionally dislikes it.
//! Both branches share the identical prefix, fork item and random state; the
//! only difference is the action. The retrieved slate at step k+1 is then
//! compared branch against branch by how much of it stays in the fork item's
//! content cluster or creator. Responsiveness is the per-simulation relative
//! change of that similarity, averaged over simulations where the baseline
//! similarity is positive (zero-baseline simulations are counted and
//! excluded, never imputed).

use alloc::vec::Vec;

use crate::catalog::{Corpus, ItemId};
use crate::error::CoreError;
use crate::model::{encode_state, retrieve_top_k, ModelParams, ModelPolicy};
use crate::rng::{derive_seed, DetRng};
use crate::simenv::{
    generate_trajectory, sample_user, BehaviorConfig, Event, RandomPolicy, UserProfile,
};
use crate::stats;

/// Which grouping axis similarity is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "lowercase")
)]
pub enum SimilarityMode {
    Content,
    Creator,
}

/// The action taken on the fork item, applied on top of a full watch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CounterfactualAction {
    /// Long dwell, no negative feedback.
    PositiveBaseline,
    /// Long dwell plus an explicit dislike.
    DislikeOnPositive,
}

impl CounterfactualAction {
    /// Materializes the action as the step-k event.
    pub fn as_event(self, item: ItemId, step: u32) -> Event {
        Event {
            item_id: item,
            dwell: 1.0,
            skipped: false,
            disliked: matches!(self, CounterfactualAction::DislikeOnPositive),
            liked: false,
            step,
        }
    }
}

/// Which policy generates the pre-fork trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum PreForkPolicy {
    /// On-policy: the model under test serves the prefix (default).
    #[default]
    ModelUnderTest,
    /// A fixed random policy, for cross-model comparability.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeasureConfig {
    pub num_simulations: usize,
    /// Fork position: the user consumes k-1 items, acts on the k-th.
    pub k: usize,
    pub slate_size: usize,
    pub seed: u64,
    pub prefork_policy: PreForkPolicy,
    pub bootstrap_resamples: usize,
    pub behavior: BehaviorConfig,
}

impl MeasureConfig {
    pub fn new(num_simulations: usize, k: usize, slate_size: usize, seed: u64) -> Self {
        MeasureConfig {
            num_simulations,
            k,
            slate_size,
            seed,
            prefork_policy: PreForkPolicy::ModelUnderTest,
            bootstrap_resamples: 1000,
            behavior: BehaviorConfig::default(),
        }
    }
}

/// Fraction of the slate sharing the anchor's cluster (content mode) or
/// creator. The anchor itself counts when present.
pub fn similarity_score(
    slate: &[ItemId],
    anchor: ItemId,
    mode: SimilarityMode,
    corpus: &Corpus,
) -> Result<f64, CoreError> {
    if slate.is_empty() {
        return Err(CoreError::InvalidArgument(
            "similarity of an empty slate is undefined".into(),
        ));
    }
    let anchor = corpus.item(anchor)?;
    let mut matches = 0usize;
    for &id in slate {
        let item = corpus.item(id)?;
        let same = match mode {
            SimilarityMode::Content => item.cluster_id == anchor.cluster_id,
            SimilarityMode::Creator => item.creator_id == anchor.creator_id,
        };
        if same {
            matches += 1;
        }
    }
    Ok(matches as f64 / slate.len() as f64)
}

/// Slates retrieved for each counterfactual branch, plus the shared fork item.
#[derive(Debug, Clone, PartialEq)]
pub struct ForkOutcome {
    pub fork_item: ItemId,
    /// One slate per requested action, in order.
    pub slates: Vec<Vec<ItemId>>,
}

/// Runs one counterfactual fork for `user`: a k-1 step prefix, the model's
/// top-1 pick as the fork item, then one retrieval per action over the
/// identical history. Branches introduce no extra randomness, so any
/// difference between slates is caused by the action alone.
#[allow(clippy::too_many_arguments)]
pub fn run_fork(
    params: &ModelParams,
    corpus: &Corpus,
    user: &UserProfile,
    k: usize,
    actions: &[CounterfactualAction],
    slate_size: usize,
    behavior: &BehaviorConfig,
    prefork_policy: PreForkPolicy,
    rng: &mut DetRng,
) -> Result<ForkOutcome, CoreError> {
    if k < 2 {
        return Err(CoreError::InvalidArgument("fork position k must be >= 2".into()));
    }
    if slate_size == 0 || slate_size > params.num_items {
        return Err(CoreError::InvalidArgument(alloc::format!(
            "slate_size {slate_size} out of range for {} items",
            params.num_items
        )));
    }

    let prefix = match prefork_policy {
        PreForkPolicy::ModelUnderTest => {
            let policy = ModelPolicy {
                params,
                slate_size,
            };
            generate_trajectory(user, corpus, &policy, k - 1, behavior, rng)?
        }
        PreForkPolicy::Random => {
            let policy = RandomPolicy {
                num_items: corpus.len(),
                slate_size,
            };
            generate_trajectory(user, corpus, &policy, k - 1, behavior, rng)?
        }
    };

    let state = encode_state(&prefix.events, params)?;
    let fork_item = retrieve_top_k(&state, params, 1)?[0];

    let mut slates = Vec::with_capacity(actions.len());
    for action in actions {
        let mut branch = prefix.events.clone();
        branch.push(action.as_event(fork_item, (k - 1) as u32));
        let branch_state = encode_state(&branch, params)?;
        slates.push(retrieve_top_k(&branch_state, params, slate_size)?);
    }
    Ok(ForkOutcome { fork_item, slates })
}

/// Everything one simulation contributes to the aggregate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimOutcome {
    pub sim_index: usize,
    pub fork_item: ItemId,
    pub branch_identical: bool,
    /// Baseline-branch similarity, [content, creator].
    pub baseline: [f64; 2],
    /// Dislike-branch similarity, [content, creator].
    pub counterfactual: [f64; 2],
}

const STREAM_SIM_PROFILE: u64 = 0;
const STREAM_SIM_TRAJECTORY: u64 = 1;
const STREAM_BOOTSTRAP: u64 = 0xb0;

/// Runs simulation `index` of a measurement. Pure function of the arguments;
/// simulations can run on any worker in any order.
pub fn run_single_simulation(
    params: &ModelParams,
    corpus: &Corpus,
    config: &MeasureConfig,
    index: usize,
) -> Result<SimOutcome, CoreError> {
    let sim_seed = derive_seed(config.seed, index as u64);
    let user = sample_user(
        derive_seed(sim_seed, STREAM_SIM_PROFILE),
        corpus.topic_dim(),
        &config.behavior,
    );
    let mut rng = DetRng::new(derive_seed(sim_seed, STREAM_SIM_TRAJECTORY));
    let fork = run_fork(
        params,
        corpus,
        &user,
        config.k,
        &[
            CounterfactualAction::PositiveBaseline,
            CounterfactualAction::DislikeOnPositive,
        ],
        config.slate_size,
        &config.behavior,
        config.prefork_policy,
        &mut rng,
    )
    .map_err(|e| e.for_user(index))?;

    let similarity_pair = |slate: &[ItemId]| -> Result<[f64; 2], CoreError> {
        Ok([
            similarity_score(slate, fork.fork_item, SimilarityMode::Content, corpus)?,
            similarity_score(slate, fork.fork_item, SimilarityMode::Creator, corpus)?,
        ])
    };
    Ok(SimOutcome {
        sim_index: index,
        fork_item: fork.fork_item,
        branch_identical: fork.slates[0] == fork.slates[1],
        baseline: similarity_pair(&fork.slates[0])?,
        counterfactual: similarity_pair(&fork.slates[1])?,
    })
}

/// Per-mode aggregate of a measurement run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeReport {
    pub mean_similarity_baseline: f64,
    pub mean_similarity_counterfactual: f64,
    /// Mean per-simulation relative change; `None` if every simulation had
    /// zero baseline similarity.
    pub responsiveness: Option<f64>,
    pub ci_lower: Option<f64>,
    pub ci_upper: Option<f64>,
    /// Simulations excluded because their baseline similarity was zero.
    pub excluded_simulations: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResponsivenessReport {
    pub num_simulations: usize,
    pub k: usize,
    pub slate_size: usize,
    pub seed: u64,
    /// Simulations whose two branch slates were bitwise identical.
    pub branch_identical_count: usize,
    pub content: ModeReport,
    pub creator: ModeReport,
}

impl ResponsivenessReport {
    pub fn mode(&self, mode: SimilarityMode) -> &ModeReport {
        match mode {
            SimilarityMode::Content => &self.content,
            SimilarityMode::Creator => &self.creator,
        }
    }
}

/// Folds simulation outcomes into a report. Outcomes are keyed by their
/// simulation index and reduced in index order, so the aggregate does not
/// depend on arrival order.
pub fn aggregate_outcomes(
    outcomes: &[SimOutcome],
    config: &MeasureConfig,
) -> ResponsivenessReport {
    let mut ordered: Vec<&SimOutcome> = outcomes.iter().collect();
    ordered.sort_by_key(|o| o.sim_index);

    let mode_report = |axis: usize, boot_stream: u64| -> ModeReport {
        let baselines: Vec<f64> = ordered.iter().map(|o| o.baseline[axis]).collect();
        let counterfactuals: Vec<f64> =
            ordered.iter().map(|o| o.counterfactual[axis]).collect();
        let mut ratios = Vec::with_capacity(ordered.len());
        let mut excluded = 0usize;
        for o in &ordered {
            let base = o.baseline[axis];
            if base > 0.0 {
                ratios.push((o.counterfactual[axis] - base) / base);
            } else {
                excluded += 1;
            }
        }
        let ci = stats::bootstrap_mean_ci(
            &ratios,
            config.bootstrap_resamples,
            0.95,
            derive_seed(config.seed, STREAM_BOOTSTRAP + boot_stream),
        );
        ModeReport {
            mean_similarity_baseline: stats::mean(&baselines),
            mean_similarity_counterfactual: stats::mean(&counterfactuals),
            responsiveness: (!ratios.is_empty()).then(|| stats::mean(&ratios)),
            ci_lower: ci.map(|c| c.0),
            ci_upper: ci.map(|c| c.1),
            excluded_simulations: excluded,
        }
    };

    ResponsivenessReport {
        num_simulations: ordered.len(),
        k: config.k,
        slate_size: config.slate_size,
        seed: config.seed,
        branch_identical_count: ordered.iter().filter(|o| o.branch_identical).count(),
        content: mode_report(0, 0),
        creator: mode_report(1, 1),
    }
}

/// Runs the full measurement sequentially. Parallel drivers get identical
/// results by mapping [`run_single_simulation`] over `0..num_simulations` and
/// feeding the outcomes to [`aggregate_outcomes`].
pub fn measure_responsiveness(
    params: &ModelParams,
    corpus: &Corpus,
    config: &MeasureConfig,
) -> Result<ResponsivenessReport, CoreError> {
    if config.num_simulations == 0 {
        return Err(CoreError::InvalidArgument(
            "num_simulations must be >= 1".into(),
        ));
    }
    let outcomes: Vec<SimOutcome> = (0..config.num_simulations)
        .map(|i| run_single_simulation(params, corpus, config, i))
        .collect::<Result<_, _>>()?;
    Ok(aggregate_outcomes(&outcomes, config))
}
