//! Offline evaluation helpers: held-out dislike probabilities and the skip
//! rate of served top-1 recommendations.

use alloc::vec::Vec;

use crate::catalog::{Corpus, ItemId};
use crate::error::CoreError;
use crate::model::{encode_state, score, softmax_prob, ModelParams, ModelPolicy};
use crate::simenv::{simulate_user, BehaviorConfig, Event, Trajectory};

/// Every (history prefix, disliked item) pair in the logs. Histories are the
/// raw event prefixes; each model applies its own feature view when scoring.
pub fn disliked_pairs(logs: &[Trajectory]) -> Vec<(Vec<Event>, ItemId)> {
    let mut pairs = Vec::new();
    for trajectory in logs {
        for (t, event) in trajectory.events.iter().enumerate() {
            if event.disliked {
                pairs.push((trajectory.events[..t].to_vec(), event.item_id));
            }
        }
    }
    pairs
}

/// Mean full-softmax probability the model assigns to each (history, item)
/// pair.
pub fn mean_label_probability(
    params: &ModelParams,
    pairs: &[(Vec<Event>, ItemId)],
) -> Result<f64, CoreError> {
    if pairs.is_empty() {
        return Err(CoreError::InvalidArgument(
            "no evaluation pairs supplied".into(),
        ));
    }
    let mut acc = 0.0;
    for (history, item) in pairs {
        let state = encode_state(history, params)?;
        let logits = score(&state, params);
        acc += softmax_prob(&logits, *item as usize);
    }
    Ok(acc / pairs.len() as f64)
}

/// Serves fresh simulated users their top-1 recommendation at every step and
/// returns the fraction of served items they skip.
pub fn top1_skip_rate(
    params: &ModelParams,
    corpus: &Corpus,
    behavior: &BehaviorConfig,
    num_users: usize,
    length: usize,
    seed: u64,
) -> Result<f64, CoreError> {
    let policy = ModelPolicy {
        params,
        slate_size: 1,
    };
    let mut skipped = 0usize;
    let mut total = 0usize;
    for u in 0..num_users {
        let trajectory = simulate_user(corpus, &policy, behavior, seed, u, length)?;
        for event in &trajectory.events {
            total += 1;
            if event.skipped {
                skipped += 1;
            }
        }
    }
    Ok(skipped as f64 / total.max(1) as f64)
}
