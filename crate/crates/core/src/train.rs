//! Label extraction and minibatch SGD over the joint objective.
//!
//! A variant fixes, jointly, which feedback features the encoder sees and
//! which events become negative training labels. Training itself is plain
//! seeded SGD with a fixed learning rate: deterministic end to end, so two
//! runs with the same config produce bitwise-identical parameters.

use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use crate::error::CoreError;
use crate::model::{FeatureConfig, ModelParams};
use crate::objective::{batch_gradients, LabeledExample, Sign, SoftmaxMode};
use crate::rng::{derive_seed, DetRng};
use crate::simenv::{Event, Trajectory};

/// Model variants under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "SCREAMING_SNAKE_CASE")
)]
pub enum Variant {
    /// No dislike signals anywhere; positives only.
    Baseline,
    /// Dislike as an input feature, not as training labels.
    FeatureOnly,
    /// Dislike as both input feature and negative training labels.
    FeatureAndLabel,
    /// Disliked items removed from the input sequence; positives only.
    ExcludeHeuristic,
    /// Skipped items as negative training labels.
    SkipLabels,
}

pub const ALL_VARIANTS: [Variant; 5] = [
    Variant::Baseline,
    Variant::FeatureOnly,
    Variant::FeatureAndLabel,
    Variant::ExcludeHeuristic,
    Variant::SkipLabels,
];

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Baseline => "baseline",
            Variant::FeatureOnly => "feature_only",
            Variant::FeatureAndLabel => "feature_and_label",
            Variant::ExcludeHeuristic => "exclude_heuristic",
            Variant::SkipLabels => "skip_labels",
        }
    }

    pub fn feature_config(self) -> FeatureConfig {
        match self {
            Variant::Baseline | Variant::SkipLabels => FeatureConfig {
                use_dislike_feature: false,
                use_dwell_feature: true,
                exclude_disliked_from_input: false,
            },
            Variant::FeatureOnly | Variant::FeatureAndLabel => FeatureConfig {
                use_dislike_feature: true,
                use_dwell_feature: true,
                exclude_disliked_from_input: false,
            },
            Variant::ExcludeHeuristic => FeatureConfig {
                use_dislike_feature: false,
                use_dwell_feature: true,
                exclude_disliked_from_input: true,
            },
        }
    }
}

impl FromStr for Variant {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut key = String::new();
        for c in s.chars() {
            key.push(match c {
                '-' => '_',
                c => c.to_ascii_lowercase(),
            });
        }
        match key.as_str() {
            "baseline" => Ok(Variant::Baseline),
            "feature_only" => Ok(Variant::FeatureOnly),
            "feature_and_label" => Ok(Variant::FeatureAndLabel),
            "exclude_heuristic" => Ok(Variant::ExcludeHeuristic),
            "skip_labels" => Ok(Variant::SkipLabels),
            _ => Err(CoreError::InvalidArgument(alloc::format!(
                "unknown variant `{s}`"
            ))),
        }
    }
}

/// Full training configuration. `dislike_labels` / `skip_labels` default to
/// the variant's own setting but are independently switchable, so both label
/// kinds can be combined in one model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub variant: Variant,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub embed_dim: usize,
    pub max_history: usize,
    /// Weight r of every positive label.
    pub positive_weight: f64,
    /// Weight w of dislike labels.
    pub dislike_weight: f64,
    /// Weight w of skip labels.
    pub skip_weight: f64,
    /// Events with dwell at or above this (or an explicit like) are positives.
    pub positive_dwell_cutoff: f64,
    /// `None` trains with the exact full softmax; `Some(n)` uses n sampled
    /// negatives per example.
    pub sampled_negatives: Option<usize>,
    /// Divide each loss branch by its own label count.
    pub normalize_per_sign: bool,
    pub dislike_labels: bool,
    pub skip_labels: bool,
}

impl TrainConfig {
    pub fn new(variant: Variant, seed: u64) -> Self {
        TrainConfig {
            variant,
            learning_rate: 0.1,
            batch_size: 32,
            epochs: 5,
            seed,
            embed_dim: 32,
            max_history: 50,
            positive_weight: 1.0,
            dislike_weight: 1.0,
            skip_weight: 0.3,
            positive_dwell_cutoff: 0.6,
            sampled_negatives: None,
            normalize_per_sign: false,
            dislike_labels: variant == Variant::FeatureAndLabel,
            skip_labels: variant == Variant::SkipLabels,
        }
    }

    pub fn feature_config(&self) -> FeatureConfig {
        self.variant.feature_config()
    }
}

/// Per-epoch loss totals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EpochLoss {
    pub total: f64,
    pub positive: f64,
    pub negative: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainReport {
    pub variant: Variant,
    pub epoch_losses: Vec<EpochLoss>,
    pub num_positive_examples: usize,
    pub num_negative_examples: usize,
    pub steps: usize,
}

/// Turns raw logs into labeled examples.
///
/// Per event, in precedence order: a disliked event becomes a negative label
/// (when the config trains on dislikes) and is never a positive; otherwise a
/// like or sufficient dwell makes a positive; otherwise a skip becomes a
/// negative label (when the config trains on skips). Events yielding no
/// label still appear in subsequent histories — except disliked events under
/// the exclusion heuristic, which vanish from histories entirely.
pub fn build_examples(logs: &[Trajectory], config: &TrainConfig) -> Vec<LabeledExample> {
    let exclude_disliked = config.feature_config().exclude_disliked_from_input;
    let mut examples = Vec::new();
    for trajectory in logs {
        let events: Vec<&Event> = trajectory
            .events
            .iter()
            .filter(|e| !(exclude_disliked && e.disliked))
            .collect();
        for (t, event) in events.iter().enumerate() {
            let label = if event.disliked {
                config
                    .dislike_labels
                    .then_some((Sign::Negative, config.dislike_weight))
            } else if event.liked || event.dwell >= config.positive_dwell_cutoff {
                Some((Sign::Positive, config.positive_weight))
            } else if event.skipped {
                config
                    .skip_labels
                    .then_some((Sign::Negative, config.skip_weight))
            } else {
                None
            };
            if let Some((sign, weight)) = label {
                examples.push(LabeledExample {
                    history: events[..t].iter().map(|e| (*e).clone()).collect(),
                    label_item: event.item_id,
                    sign,
                    weight,
                });
            }
        }
    }
    examples
}

/// Splits trajectories into train and holdout sets by user, seeded.
pub fn split_by_user(
    logs: &[Trajectory],
    holdout_fraction: f64,
    seed: u64,
) -> (Vec<Trajectory>, Vec<Trajectory>) {
    let n = logs.len();
    let holdout = ((n as f64) * holdout_fraction) as usize;
    let mut order: Vec<usize> = (0..n).collect();
    DetRng::from_seed_stream(seed, 0x5b17).shuffle(&mut order);
    let holdout_set: Vec<usize> = order[..holdout].to_vec();
    let mut is_holdout = alloc::vec![false; n];
    for i in holdout_set {
        is_holdout[i] = true;
    }
    let mut train = Vec::with_capacity(n - holdout);
    let mut held = Vec::with_capacity(holdout);
    for (i, t) in logs.iter().enumerate() {
        if is_holdout[i] {
            held.push(t.clone());
        } else {
            train.push(t.clone());
        }
    }
    (train, held)
}

const STREAM_INIT: u64 = 0x01;
const STREAM_SHUFFLE: u64 = 0x02;
const STREAM_SAMPLER: u64 = 0x03;

/// Trains a model variant on the given logs over a corpus of `num_items`.
///
/// Parameters start at seeded uniform(-0.05, 0.05); minibatches are a seeded
/// shuffle per epoch; updates are plain SGD. Aborts with the step index if
/// the loss ever goes non-finite.
pub fn train(
    logs: &[Trajectory],
    config: &TrainConfig,
    num_items: usize,
) -> Result<(ModelParams, TrainReport), CoreError> {
    let examples = build_examples(logs, config);
    let num_positive = examples.iter().filter(|e| e.sign == Sign::Positive).count();
    let num_negative = examples.len() - num_positive;
    if num_positive == 0 {
        return Err(CoreError::InvalidArgument(
            "training requires at least one positive example".into(),
        ));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(CoreError::InvalidArgument(
            "batch_size and epochs must be >= 1".into(),
        ));
    }

    let mut params = ModelParams::init(
        num_items,
        config.embed_dim,
        config.max_history,
        config.feature_config(),
        derive_seed(config.seed, STREAM_INIT),
    );

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        let shuffle_seed = derive_seed(derive_seed(config.seed, STREAM_SHUFFLE), epoch as u64);
        DetRng::new(shuffle_seed).shuffle(&mut order);

        let mut totals = EpochLoss {
            total: 0.0,
            positive: 0.0,
            negative: 0.0,
        };
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<LabeledExample> =
                chunk.iter().map(|&i| examples[i].clone()).collect();
            let mode = match config.sampled_negatives {
                None => SoftmaxMode::Full,
                Some(n) => SoftmaxMode::Sampled {
                    num_negatives: n,
                    seed: derive_seed(derive_seed(config.seed, STREAM_SAMPLER), step as u64),
                },
            };
            let (loss, grads) =
                batch_gradients(&batch, &params, mode, config.normalize_per_sign)?;
            if !loss.total.is_finite() {
                return Err(CoreError::NonFiniteLoss { step });
            }
            grads.apply_to(&mut params, -config.learning_rate);
            totals.total += loss.total;
            totals.positive += loss.positive;
            totals.negative += loss.negative;
            step += 1;
        }
        epoch_losses.push(totals);
    }

    Ok((
        params,
        TrainReport {
            variant: config.variant,
            epoch_losses,
            num_positive_examples: num_positive,
            num_negative_examples: num_negative,
            steps: step,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generate_corpus, CorpusSpec};
    use crate::simenv::{generate_logs, BehaviorConfig, RandomPolicy};

    fn world() -> (crate::catalog::Corpus, Vec<Trajectory>) {
        let corpus = generate_corpus(&CorpusSpec::new(60, 6, 5, 8, 0)).unwrap();
        let policy = RandomPolicy {
            num_items: corpus.len(),
            slate_size: 10,
        };
        let logs =
            generate_logs(&corpus, &policy, &BehaviorConfig::default(), 30, 25, 4).unwrap();
        (corpus, logs)
    }

    fn quick_config(variant: Variant) -> TrainConfig {
        TrainConfig {
            embed_dim: 8,
            epochs: 2,
            learning_rate: 0.05,
            ..TrainConfig::new(variant, 0)
        }
    }

    #[test]
    fn variant_names_round_trip() {
        for v in ALL_VARIANTS {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!(
            "FEATURE_AND_LABEL".parse::<Variant>().unwrap(),
            Variant::FeatureAndLabel
        );
        assert_eq!(
            "exclude-heuristic".parse::<Variant>().unwrap(),
            Variant::ExcludeHeuristic
        );
        assert!("bogus".parse::<Variant>().is_err());
    }

    #[test]
    fn baseline_extracts_no_negatives() {
        let (_, logs) = world();
        assert!(logs.iter().flat_map(|t| &t.events).any(|e| e.disliked));
        let examples = build_examples(&logs, &quick_config(Variant::Baseline));
        assert!(examples.iter().all(|e| e.sign == Sign::Positive));
    }

    #[test]
    fn dislike_examples_count_matches_dislike_events() {
        let (_, logs) = world();
        let dislikes = logs
            .iter()
            .flat_map(|t| &t.events)
            .filter(|e| e.disliked)
            .count();
        assert!(dislikes > 0);
        let examples = build_examples(&logs, &quick_config(Variant::FeatureAndLabel));
        let negatives: Vec<_> = examples
            .iter()
            .filter(|e| e.sign == Sign::Negative)
            .collect();
        assert_eq!(negatives.len(), dislikes);
        assert!(negatives.iter().all(|e| e.weight == 1.0));
    }

    #[test]
    fn skip_variant_labels_skips() {
        let (_, logs) = world();
        let skips = logs
            .iter()
            .flat_map(|t| &t.events)
            .filter(|e| e.skipped && !e.disliked && !e.liked)
            .count();
        let examples = build_examples(&logs, &quick_config(Variant::SkipLabels));
        let negatives = examples.iter().filter(|e| e.sign == Sign::Negative).count();
        assert_eq!(negatives, skips);
        assert!(examples
            .iter()
            .filter(|e| e.sign == Sign::Negative)
            .all(|e| (e.weight - 0.3).abs() < 1e-15));
    }

    #[test]
    fn histories_are_strict_prefixes() {
        fn ev(item: u32, step: u32) -> crate::simenv::Event {
            crate::simenv::Event {
                item_id: item,
                dwell: 0.5,
                skipped: false,
                disliked: false,
                liked: false,
                step,
            }
        }
        let mut e0 = ev(3, 0);
        e0.liked = true;
        let mut e1 = ev(7, 1);
        e1.disliked = true;
        let mut e2 = ev(9, 2);
        e2.dwell = 0.9;
        let log = [Trajectory {
            user: crate::simenv::sample_user(0, 4, &BehaviorConfig::default()),
            events: alloc::vec![e0.clone(), e1.clone(), e2.clone()],
        }];

        let examples = build_examples(&log, &quick_config(Variant::FeatureAndLabel));
        assert_eq!(examples.len(), 3);

        // step-0 label carries an empty history
        assert_eq!(examples[0].label_item, 3);
        assert_eq!(examples[0].sign, Sign::Positive);
        assert!(examples[0].history.is_empty());

        // the dislike is a negative label whose history excludes itself
        assert_eq!(examples[1].label_item, 7);
        assert_eq!(examples[1].sign, Sign::Negative);
        assert_eq!(examples[1].history, alloc::vec![e0.clone()]);

        // the unlabeled-or-not middle event still shows up in later histories
        assert_eq!(examples[2].label_item, 9);
        assert_eq!(examples[2].history, alloc::vec![e0, e1]);
    }

    #[test]
    fn exclusion_heuristic_removes_dislikes_from_histories() {
        let (_, logs) = world();
        let examples = build_examples(&logs, &quick_config(Variant::ExcludeHeuristic));
        assert!(examples
            .iter()
            .all(|ex| ex.history.iter().all(|e| !e.disliked)));
    }

    #[test]
    fn zero_learning_rate_keeps_initial_params() {
        let (corpus, logs) = world();
        let mut config = quick_config(Variant::Baseline);
        config.learning_rate = 0.0;
        config.epochs = 1;
        let (params, _) = train(&logs, &config, corpus.len()).unwrap();
        let fresh = ModelParams::init(
            corpus.len(),
            config.embed_dim,
            config.max_history,
            config.feature_config(),
            derive_seed(config.seed, STREAM_INIT),
        );
        assert_eq!(params, fresh);
    }

    #[test]
    fn training_is_bitwise_deterministic() {
        let (corpus, logs) = world();
        let config = quick_config(Variant::FeatureAndLabel);
        let (a, ra) = train(&logs, &config, corpus.len()).unwrap();
        let (b, rb) = train(&logs, &config, corpus.len()).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn loss_decreases_for_every_variant() {
        let (corpus, logs) = world();
        for seed in 0..3u64 {
            for variant in ALL_VARIANTS {
                let mut config = quick_config(variant);
                config.seed = seed;
                config.epochs = 3;
                let (_, report) = train(&logs, &config, corpus.len()).unwrap();
                let first = report.epoch_losses.first().unwrap().total;
                let last = report.epoch_losses.last().unwrap().total;
                assert!(
                    last < first,
                    "{} seed {seed}: {first} -> {last}",
                    variant.name()
                );
            }
        }
    }

    #[test]
    fn variants_without_negative_labels_have_zero_negative_loss() {
        let (corpus, logs) = world();
        for variant in [Variant::Baseline, Variant::FeatureOnly, Variant::ExcludeHeuristic] {
            let (_, report) = train(&logs, &quick_config(variant), corpus.len()).unwrap();
            assert_eq!(report.num_negative_examples, 0);
            for e in &report.epoch_losses {
                assert_eq!(e.negative, 0.0, "{}", variant.name());
            }
        }
    }

    #[test]
    fn split_by_user_partitions_logs() {
        let (_, logs) = world();
        let (train_logs, held) = split_by_user(&logs, 0.1, 7);
        assert_eq!(train_logs.len() + held.len(), logs.len());
        assert_eq!(held.len(), 3);
        // same seed → same split
        let (t2, h2) = split_by_user(&logs, 0.1, 7);
        assert_eq!(train_logs, t2);
        assert_eq!(held, h2);
    }
}
