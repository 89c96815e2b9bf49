//! Simulated-user environment.
//!
//! Users carry a hidden unit-norm preference vector; an item's appeal is the
//! inner product between that preference and the item's topic. Reactions are
//! intentionally transparent — dwell is a noisy squash of the appeal, skips
//! fire below a per-user threshold, dislikes and likes are Bernoulli draws
//! whose rates scale with how misaligned or aligned the item is — so every
//! downstream measurement can state its expected value in closed form.
//!
//! Per-user randomness is a stream derived from `(seed, user_index)`;
//! generated logs do not depend on execution order.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::catalog::{Corpus, ItemId};
use crate::error::CoreError;
use crate::math;
use crate::rng::{derive_seed, DetRng};

/// Tunables for the reaction model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BehaviorConfig {
    /// Gain of the dwell squash: dwell ≈ sigmoid(gain · appeal).
    pub gain: f64,
    /// Std-dev of additive dwell noise.
    pub dwell_noise_sigma: f64,
    /// Skipped events get dwell resampled uniformly below this cutoff.
    pub skip_dwell_cutoff: f64,
    /// Like rate is `like_propensity · max(0, appeal)`.
    pub like_propensity: f64,
    /// Per-user dislike propensity is drawn uniformly from this range.
    pub dislike_propensity_range: (f64, f64),
    /// Per-user skip threshold is drawn uniformly from this range.
    pub skip_threshold_range: (f64, f64),
    /// Consumption picks uniformly among this many top slate positions.
    pub slate_sample_size: usize,
    /// Forces skipped/disliked to false; used for clean counterfactual
    /// prefixes where no organic negative feedback should occur.
    pub suppress_negative_feedback: bool,
    /// Interests are session-local: a positively consumed topic pulls the
    /// preference vector by this rate. Zero freezes preferences.
    pub drift_positive_rate: f64,
    /// A disliked topic pushes the preference vector away by this rate.
    pub drift_dislike_rate: f64,
    /// Dwell at or above this counts as positive consumption for drift.
    pub drift_positive_dwell: f64,
}

impl Default for BehaviorConfig {
    fn default() -> Self {
        BehaviorConfig {
            gain: 4.0,
            dwell_noise_sigma: 0.05,
            skip_dwell_cutoff: 0.2,
            like_propensity: 0.3,
            dislike_propensity_range: (0.2, 0.6),
            skip_threshold_range: (-0.2, 0.2),
            slate_sample_size: 10,
            suppress_negative_feedback: false,
            drift_positive_rate: 0.3,
            drift_dislike_rate: 0.6,
            drift_positive_dwell: 0.6,
        }
    }
}

/// Applies the post-event preference update in place: positively consumed
/// topics attract the preference, disliked topics repel it. No-op when the
/// update would degenerate to the zero vector.
pub fn drift_preference(
    preference: &mut [f64],
    event: &Event,
    topic: &[f64],
    config: &BehaviorConfig,
) {
    let rate = if event.disliked {
        -config.drift_dislike_rate
    } else if event.liked || event.dwell >= config.drift_positive_dwell {
        config.drift_positive_rate
    } else {
        return;
    };
    if rate == 0.0 {
        return;
    }
    let mut updated: Vec<f64> = preference
        .iter()
        .zip(topic)
        .map(|(p, t)| p + rate * t)
        .collect();
    if math::normalize(&mut updated) {
        preference.copy_from_slice(&updated);
    }
}

/// Hidden state of one simulated user.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UserProfile {
    pub preference: Vec<f64>,
    pub dislike_propensity: f64,
    pub skip_threshold: f64,
    pub seed: u64,
}

/// One user–item interaction.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Event {
    pub item_id: ItemId,
    /// Normalized dwell fraction in [0, 1].
    pub dwell: f64,
    pub skipped: bool,
    pub disliked: bool,
    pub liked: bool,
    pub step: u32,
}

/// An ordered interaction history for one user.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub user: UserProfile,
    pub events: Vec<Event>,
}

/// A recommender under simulation: maps an event history to a ranked slate.
///
/// Implementations must be deterministic given the history and the supplied
/// generator; stateful policies would break log reproducibility.
pub trait Policy {
    fn recommend(&self, history: &[Event], rng: &mut DetRng) -> Vec<ItemId>;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn recommend(&self, history: &[Event], rng: &mut DetRng) -> Vec<ItemId> {
        (**self).recommend(history, rng)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn recommend(&self, history: &[Event], rng: &mut DetRng) -> Vec<ItemId> {
        (**self).recommend(history, rng)
    }
}

/// Uniform random slates without replacement; the exploration policy used to
/// produce training logs.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    pub num_items: usize,
    pub slate_size: usize,
}

impl Policy for RandomPolicy {
    fn recommend(&self, _history: &[Event], rng: &mut DetRng) -> Vec<ItemId> {
        let count = self.slate_size.min(self.num_items);
        rng.sample_distinct(self.num_items, count)
            .into_iter()
            .map(|i| i as ItemId)
            .collect()
    }
}

/// Draws a user: preference uniform on the unit sphere, propensities uniform
/// in their configured ranges. Deterministic per seed.
pub fn sample_user(seed: u64, topic_dim: usize, config: &BehaviorConfig) -> UserProfile {
    let mut rng = DetRng::new(seed);
    let preference = rng.unit_vector(topic_dim);
    let (dlo, dhi) = config.dislike_propensity_range;
    let dislike_propensity = rng.uniform(dlo, dhi);
    let (slo, shi) = config.skip_threshold_range;
    let skip_threshold = rng.uniform(slo, shi);
    UserProfile {
        preference,
        dislike_propensity,
        skip_threshold,
        seed,
    }
}

/// Simulates one reaction. Draw order is fixed (dwell noise, skip resample,
/// dislike, like) so streams stay aligned across configurations.
pub fn react(
    user: &UserProfile,
    corpus: &Corpus,
    item_id: ItemId,
    step: u32,
    config: &BehaviorConfig,
    rng: &mut DetRng,
) -> Result<Event, CoreError> {
    let item = corpus.item(item_id)?;
    let appeal = math::dot(&user.preference, &item.topic);

    let noise = rng.normal() * config.dwell_noise_sigma;
    let mut dwell = math::clamp(math::sigmoid(config.gain * appeal) + noise, 0.0, 1.0);
    let resampled = rng.uniform(0.0, config.skip_dwell_cutoff);

    let skipped = !config.suppress_negative_feedback && appeal < user.skip_threshold;
    if skipped {
        dwell = resampled;
    }

    let dislike_rate = user.dislike_propensity * math::clamp(-appeal, 0.0, 1.0);
    let disliked = rng.bernoulli(dislike_rate) && !config.suppress_negative_feedback;

    let like_rate = config.like_propensity * math::clamp(appeal, 0.0, 1.0);
    let liked = rng.bernoulli(like_rate) && !disliked;

    Ok(Event {
        item_id,
        dwell,
        skipped,
        disliked,
        liked,
        step,
    })
}

/// Rolls out `length` consumption steps of `user` against `policy`. The user
/// consumes one item per step, picked uniformly among the top
/// `slate_sample_size` slate positions; the preference vector drifts after
/// each event per [`drift_preference`]. The returned trajectory carries the
/// user's initial profile.
pub fn generate_trajectory<P: Policy + ?Sized>(
    user: &UserProfile,
    corpus: &Corpus,
    policy: &P,
    length: usize,
    config: &BehaviorConfig,
    rng: &mut DetRng,
) -> Result<Trajectory, CoreError> {
    if length == 0 {
        return Err(CoreError::InvalidArgument(
            "trajectory length must be >= 1".into(),
        ));
    }
    let mut current = user.clone();
    let mut events: Vec<Event> = Vec::with_capacity(length);
    for step in 0..length {
        let slate = policy.recommend(&events, rng);
        if slate.is_empty() {
            return Err(CoreError::PolicyProtocol {
                step: step as u32,
                reason: "empty slate".into(),
            });
        }
        let window = config.slate_sample_size.max(1).min(slate.len());
        let picked = slate[rng.below(window)];
        let event = react(&current, corpus, picked, step as u32, config, rng)?;
        drift_preference(
            &mut current.preference,
            &event,
            &corpus.item(picked)?.topic,
            config,
        );
        events.push(event);
    }
    Ok(Trajectory {
        user: user.clone(),
        events,
    })
}

/// The preference vector in force before each event of a trajectory,
/// obtained by replaying the drift rule. Index t holds the preference that
/// produced event t.
pub fn preference_trace(
    user: &UserProfile,
    events: &[Event],
    corpus: &Corpus,
    config: &BehaviorConfig,
) -> Result<Vec<Vec<f64>>, CoreError> {
    let mut current = user.preference.clone();
    let mut trace = Vec::with_capacity(events.len());
    for event in events {
        trace.push(current.clone());
        drift_preference(
            &mut current,
            event,
            &corpus.item(event.item_id)?.topic,
            config,
        );
    }
    Ok(trace)
}

// Stream ids under each user's derived seed.
const STREAM_PROFILE: u64 = 0;
const STREAM_TRAJECTORY: u64 = 1;

/// Simulates user `user_index` of the log identified by `seed`. The result
/// depends only on the arguments, never on which other users ran before.
pub fn simulate_user<P: Policy + ?Sized>(
    corpus: &Corpus,
    policy: &P,
    config: &BehaviorConfig,
    seed: u64,
    user_index: usize,
    length: usize,
) -> Result<Trajectory, CoreError> {
    let user_seed = derive_seed(seed, user_index as u64);
    let user = sample_user(
        derive_seed(user_seed, STREAM_PROFILE),
        corpus.topic_dim(),
        config,
    );
    let mut rng = DetRng::new(derive_seed(user_seed, STREAM_TRAJECTORY));
    generate_trajectory(&user, corpus, policy, length, config, &mut rng)
        .map_err(|e| e.for_user(user_index))
}

/// Generates `num_users` independent trajectories.
pub fn generate_logs<P: Policy + ?Sized>(
    corpus: &Corpus,
    policy: &P,
    config: &BehaviorConfig,
    num_users: usize,
    length: usize,
    seed: u64,
) -> Result<Vec<Trajectory>, CoreError> {
    if num_users == 0 {
        return Err(CoreError::InvalidArgument(format!(
            "num_users must be >= 1, got {num_users}"
        )));
    }
    (0..num_users)
        .map(|u| simulate_user(corpus, policy, config, seed, u, length))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{generate_corpus, CorpusSpec, Item};
    use alloc::vec;

    fn two_item_corpus(topic_a: Vec<f64>, topic_b: Vec<f64>) -> Corpus {
        Corpus {
            items: vec![
                Item {
                    item_id: 0,
                    cluster_id: 0,
                    creator_id: 0,
                    topic: topic_a,
                },
                Item {
                    item_id: 1,
                    cluster_id: 0,
                    creator_id: 1,
                    topic: topic_b,
                },
            ],
            num_clusters: 1,
            num_creators: 2,
        }
    }

    #[test]
    fn sample_user_deterministic() {
        let cfg = BehaviorConfig::default();
        assert_eq!(sample_user(0, 8, &cfg), sample_user(0, 8, &cfg));
        assert!(math::abs(math::norm(&sample_user(5, 8, &cfg).preference) - 1.0) < 1e-9);
    }

    #[test]
    fn degenerate_propensity_range() {
        let cfg = BehaviorConfig {
            dislike_propensity_range: (0.1, 0.1),
            ..BehaviorConfig::default()
        };
        for seed in 0..20 {
            assert_eq!(sample_user(seed, 4, &cfg).dislike_propensity, 0.1);
        }
    }

    #[test]
    fn mean_preference_is_near_zero() {
        // Monte Carlo: uniform-sphere draws average to the origin.
        let cfg = BehaviorConfig::default();
        let dim = 8;
        let mut mean = vec![0.0; dim];
        let n = 10_000;
        for seed in 0..n {
            let u = sample_user(seed, dim, &cfg);
            for (m, p) in mean.iter_mut().zip(&u.preference) {
                *m += p / n as f64;
            }
        }
        assert!(math::norm(&mean) < 0.05, "norm {}", math::norm(&mean));
    }

    #[test]
    fn aligned_item_never_disliked() {
        let pref = vec![1.0, 0.0];
        let corpus = two_item_corpus(vec![1.0, 0.0], vec![-1.0, 0.0]);
        let user = UserProfile {
            preference: pref,
            dislike_propensity: 1.0,
            skip_threshold: -1.0,
            seed: 0,
        };
        let cfg = BehaviorConfig::default();
        let mut rng = DetRng::new(0);
        for step in 0..200 {
            let e = react(&user, &corpus, 0, step, &cfg, &mut rng).unwrap();
            assert!(!e.disliked);
        }
    }

    #[test]
    fn opposed_item_with_full_propensity_always_disliked() {
        let corpus = two_item_corpus(vec![1.0, 0.0], vec![-1.0, 0.0]);
        let user = UserProfile {
            preference: vec![1.0, 0.0],
            dislike_propensity: 1.0,
            skip_threshold: -1.0,
            seed: 0,
        };
        let cfg = BehaviorConfig::default();
        let mut rng = DetRng::new(1);
        for step in 0..200 {
            let e = react(&user, &corpus, 1, step, &cfg, &mut rng).unwrap();
            assert!(e.disliked);
            assert!(!e.liked);
        }
    }

    #[test]
    fn dislike_frequency_matches_rate() {
        // appeal = -0.5, propensity 0.4 → Bernoulli rate 0.2.
        let corpus = two_item_corpus(vec![1.0, 0.0], vec![-0.5, 0.75f64.sqrt()]);
        let user = UserProfile {
            preference: vec![1.0, 0.0],
            dislike_propensity: 0.4,
            skip_threshold: -1.0,
            seed: 0,
        };
        let cfg = BehaviorConfig::default();
        let mut rng = DetRng::new(0);
        let n = 10_000;
        let mut dislikes = 0;
        for step in 0..n {
            if react(&user, &corpus, 1, step, &cfg, &mut rng).unwrap().disliked {
                dislikes += 1;
            }
        }
        let freq = dislikes as f64 / n as f64;
        assert!(math::abs(freq - 0.2) < 0.01, "freq {freq}");
    }

    #[test]
    fn unknown_item_is_a_membership_error() {
        let corpus = two_item_corpus(vec![1.0, 0.0], vec![0.0, 1.0]);
        let user = sample_user(0, 2, &BehaviorConfig::default());
        let mut rng = DetRng::new(0);
        let err = react(&user, &corpus, 99, 0, &BehaviorConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, CoreError::CorpusMembership { item_id: 99, .. }));
    }

    struct ConstantPolicy(ItemId);
    impl Policy for ConstantPolicy {
        fn recommend(&self, _history: &[Event], _rng: &mut DetRng) -> Vec<ItemId> {
            vec![self.0]
        }
    }

    struct EmptyPolicy;
    impl Policy for EmptyPolicy {
        fn recommend(&self, _history: &[Event], _rng: &mut DetRng) -> Vec<ItemId> {
            Vec::new()
        }
    }

    #[test]
    fn constant_policy_single_step() {
        let corpus = two_item_corpus(vec![1.0, 0.0], vec![0.0, 1.0]);
        let user = sample_user(3, 2, &BehaviorConfig::default());
        let mut rng = DetRng::new(3);
        let t = generate_trajectory(
            &user,
            &corpus,
            &ConstantPolicy(1),
            1,
            &BehaviorConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(t.events.len(), 1);
        assert_eq!(t.events[0].item_id, 1);
    }

    #[test]
    fn trajectory_steps_are_contiguous() {
        let corpus = generate_corpus(&CorpusSpec::new(20, 2, 2, 4, 0)).unwrap();
        let policy = RandomPolicy {
            num_items: corpus.len(),
            slate_size: 5,
        };
        let user = sample_user(7, 4, &BehaviorConfig::default());
        let mut rng = DetRng::new(7);
        let t = generate_trajectory(
            &user,
            &corpus,
            &policy,
            50,
            &BehaviorConfig::default(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(t.events.len(), 50);
        for (i, e) in t.events.iter().enumerate() {
            assert_eq!(e.step, i as u32);
        }
    }

    #[test]
    fn empty_slate_is_protocol_error() {
        let corpus = two_item_corpus(vec![1.0, 0.0], vec![0.0, 1.0]);
        let user = sample_user(0, 2, &BehaviorConfig::default());
        let mut rng = DetRng::new(0);
        let err = generate_trajectory(
            &user,
            &corpus,
            &EmptyPolicy,
            3,
            &BehaviorConfig::default(),
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, CoreError::PolicyProtocol { step: 0, .. }));
    }

    #[test]
    fn logs_shape_and_determinism() {
        let corpus = generate_corpus(&CorpusSpec::new(30, 3, 3, 4, 1)).unwrap();
        let policy = RandomPolicy {
            num_items: corpus.len(),
            slate_size: 10,
        };
        let cfg = BehaviorConfig::default();
        let logs = generate_logs(&corpus, &policy, &cfg, 100, 50, 9).unwrap();
        assert_eq!(logs.len(), 100);
        let total: usize = logs.iter().map(|t| t.events.len()).sum();
        assert_eq!(total, 5000);

        // order independence: regenerating a single user matches its slot
        let solo = simulate_user(&corpus, &policy, &cfg, 9, 57, 50).unwrap();
        assert_eq!(solo, logs[57]);

        assert!(matches!(
            generate_logs(&corpus, &policy, &cfg, 0, 5, 0),
            Err(CoreError::InvalidArgument(_))
        ));
    }

    #[test]
    fn disliked_implies_negative_appeal() {
        let corpus = generate_corpus(&CorpusSpec::new(40, 4, 4, 8, 2)).unwrap();
        let policy = RandomPolicy {
            num_items: corpus.len(),
            slate_size: 10,
        };
        let cfg = BehaviorConfig::default();
        let logs = generate_logs(&corpus, &policy, &cfg, 40, 30, 11).unwrap();
        let mut saw_dislike = false;
        for t in &logs {
            let prefs = preference_trace(&t.user, &t.events, &corpus, &cfg).unwrap();
            for (e, pref) in t.events.iter().zip(&prefs) {
                if e.disliked {
                    saw_dislike = true;
                    let item = corpus.item(e.item_id).unwrap();
                    assert!(math::dot(pref, &item.topic) < 0.0);
                }
                assert!(!(e.disliked && e.liked));
                if e.skipped {
                    assert!(e.dwell < cfg.skip_dwell_cutoff);
                }
            }
        }
        assert!(saw_dislike, "world too benign for the test to bite");
    }

    #[test]
    fn drift_pulls_and_pushes() {
        let corpus = two_item_corpus(vec![1.0, 0.0], vec![0.0, 1.0]);
        let cfg = BehaviorConfig::default();
        let start = vec![0.6, 0.8];

        let mut pref = start.clone();
        let mut liked = Event {
            item_id: 0,
            dwell: 0.9,
            skipped: false,
            disliked: false,
            liked: true,
            step: 0,
        };
        drift_preference(&mut pref, &liked, &corpus.items[0].topic, &cfg);
        assert!(math::abs(math::norm(&pref) - 1.0) < 1e-9);
        assert!(pref[0] > start[0], "positive consumption must attract");

        let mut pref = start.clone();
        liked.disliked = true;
        liked.liked = false;
        drift_preference(&mut pref, &liked, &corpus.items[0].topic, &cfg);
        assert!(pref[0] < start[0], "dislike must repel");

        // neutral events and zero rates leave the preference alone
        let mut pref = start.clone();
        let neutral = Event {
            item_id: 1,
            dwell: 0.3,
            skipped: false,
            disliked: false,
            liked: false,
            step: 0,
        };
        drift_preference(&mut pref, &neutral, &corpus.items[1].topic, &cfg);
        assert_eq!(pref, start);

        let frozen = BehaviorConfig {
            drift_positive_rate: 0.0,
            drift_dislike_rate: 0.0,
            ..BehaviorConfig::default()
        };
        let mut pref = start.clone();
        let mut positive = neutral.clone();
        positive.dwell = 0.95;
        drift_preference(&mut pref, &positive, &corpus.items[1].topic, &frozen);
        assert_eq!(pref, start);
    }

    #[test]
    fn skipped_events_dwell_lower_on_average() {
        let corpus = generate_corpus(&CorpusSpec::new(40, 4, 4, 8, 2)).unwrap();
        let policy = RandomPolicy {
            num_items: corpus.len(),
            slate_size: 10,
        };
        let cfg = BehaviorConfig::default();
        let logs = generate_logs(&corpus, &policy, &cfg, 50, 40, 13).unwrap();
        let (mut skip_sum, mut skip_n, mut rest_sum, mut rest_n) = (0.0, 0, 0.0, 0);
        for e in logs.iter().flat_map(|t| &t.events) {
            if e.skipped {
                skip_sum += e.dwell;
                skip_n += 1;
            } else {
                rest_sum += e.dwell;
                rest_n += 1;
            }
        }
        assert!(skip_n > 0 && rest_n > 0);
        assert!(skip_sum / (skip_n as f64) < rest_sum / rest_n as f64);
    }

    #[test]
    fn suppressed_mode_emits_no_negative_feedback() {
        let corpus = generate_corpus(&CorpusSpec::new(40, 4, 4, 8, 2)).unwrap();
        let policy = RandomPolicy {
            num_items: corpus.len(),
            slate_size: 10,
        };
        let cfg = BehaviorConfig {
            suppress_negative_feedback: true,
            ..BehaviorConfig::default()
        };
        let logs = generate_logs(&corpus, &policy, &cfg, 20, 30, 3).unwrap();
        for e in logs.iter().flat_map(|t| &t.events) {
            assert!(!e.disliked && !e.skipped);
        }
    }
}
