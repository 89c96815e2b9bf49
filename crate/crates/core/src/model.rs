//! Sequential retrieval model.
//!
//! Interaction histories are encoded event by event: the consumed item's
//! embedding concatenated with two feedback features (dwell fraction and a
//! binary dislike flag). A single gated recurrent cell folds the encoded
//! sequence left to right into a user state vector; candidate items are
//! scored by the inner product between that state and their embedding, and
//! serving is an exact brute-force top-K over the whole corpus.
//!
//! The embedding table is shared between the input encoding and the output
//! scoring, and the hidden size equals the embedding dimension so the two
//! sides compose.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::catalog::ItemId;
use crate::error::CoreError;
use crate::math;
use crate::rng::DetRng;
use crate::simenv::{Event, Policy};

/// Number of per-event feedback features appended to the item embedding.
pub const FEEDBACK_FEATURES: usize = 2;

/// Which feedback signals the encoder is allowed to see.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureConfig {
    pub use_dislike_feature: bool,
    pub use_dwell_feature: bool,
    /// Drop disliked events from the input sequence before encoding.
    pub exclude_disliked_from_input: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            use_dislike_feature: false,
            use_dwell_feature: true,
            exclude_disliked_from_input: false,
        }
    }
}

/// Gated recurrent cell weights, row-major. Input size is
/// `embed_dim + FEEDBACK_FEATURES`, hidden size is `embed_dim`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GruWeights {
    pub w_update: Vec<f64>,
    pub u_update: Vec<f64>,
    pub b_update: Vec<f64>,
    pub w_reset: Vec<f64>,
    pub u_reset: Vec<f64>,
    pub b_reset: Vec<f64>,
    pub w_cand: Vec<f64>,
    pub u_cand: Vec<f64>,
    pub b_cand: Vec<f64>,
}

impl GruWeights {
    pub fn zeros(hidden: usize, input: usize) -> Self {
        GruWeights {
            w_update: vec![0.0; hidden * input],
            u_update: vec![0.0; hidden * hidden],
            b_update: vec![0.0; hidden],
            w_reset: vec![0.0; hidden * input],
            u_reset: vec![0.0; hidden * hidden],
            b_reset: vec![0.0; hidden],
            w_cand: vec![0.0; hidden * input],
            u_cand: vec![0.0; hidden * hidden],
            b_cand: vec![0.0; hidden],
        }
    }
}

/// All learnable arrays plus the feature switches that define a model variant.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelParams {
    pub num_items: usize,
    pub embed_dim: usize,
    /// Histories longer than this are truncated to their most recent events.
    pub max_history: usize,
    pub features: FeatureConfig,
    /// num_items × embed_dim, row-major; row y is the embedding of item y.
    pub embeddings: Vec<f64>,
    pub cell: GruWeights,
}

pub const PARAM_BLOCK_NAMES: [&str; 10] = [
    "embeddings",
    "w_update",
    "u_update",
    "b_update",
    "w_reset",
    "u_reset",
    "b_reset",
    "w_cand",
    "u_cand",
    "b_cand",
];

impl ModelParams {
    /// Fresh parameters, every coordinate uniform in (-0.05, 0.05).
    pub fn init(
        num_items: usize,
        embed_dim: usize,
        max_history: usize,
        features: FeatureConfig,
        seed: u64,
    ) -> Self {
        let mut params = ModelParams {
            num_items,
            embed_dim,
            max_history,
            features,
            embeddings: vec![0.0; num_items * embed_dim],
            cell: GruWeights::zeros(embed_dim, embed_dim + FEEDBACK_FEATURES),
        };
        let mut rng = DetRng::from_seed_stream(seed, 0x1217);
        for (_, block) in params.blocks_mut() {
            for w in block.iter_mut() {
                *w = rng.uniform(-0.05, 0.05);
            }
        }
        params
    }

    pub fn input_dim(&self) -> usize {
        self.embed_dim + FEEDBACK_FEATURES
    }

    pub fn embedding(&self, item: ItemId) -> &[f64] {
        let d = self.embed_dim;
        &self.embeddings[item as usize * d..(item as usize + 1) * d]
    }

    pub fn blocks(&self) -> [(&'static str, &[f64]); 10] {
        [
            ("embeddings", &self.embeddings),
            ("w_update", &self.cell.w_update),
            ("u_update", &self.cell.u_update),
            ("b_update", &self.cell.b_update),
            ("w_reset", &self.cell.w_reset),
            ("u_reset", &self.cell.u_reset),
            ("b_reset", &self.cell.b_reset),
            ("w_cand", &self.cell.w_cand),
            ("u_cand", &self.cell.u_cand),
            ("b_cand", &self.cell.b_cand),
        ]
    }

    pub fn blocks_mut(&mut self) -> [(&'static str, &mut [f64]); 10] {
        [
            ("embeddings", &mut self.embeddings),
            ("w_update", &mut self.cell.w_update),
            ("u_update", &mut self.cell.u_update),
            ("b_update", &mut self.cell.b_update),
            ("w_reset", &mut self.cell.w_reset),
            ("u_reset", &mut self.cell.u_reset),
            ("b_reset", &mut self.cell.b_reset),
            ("w_cand", &mut self.cell.w_cand),
            ("u_cand", &mut self.cell.u_cand),
            ("b_cand", &mut self.cell.b_cand),
        ]
    }

    /// Shape consistency check; loaders call this before trusting a document.
    pub fn validate(&self) -> Result<(), CoreError> {
        let d = self.embed_dim;
        let m = self.input_dim();
        if self.num_items == 0 || d == 0 {
            return Err(CoreError::InvalidArgument(
                "model dimensions must be positive".into(),
            ));
        }
        let expect = [
            ("embeddings", self.embeddings.len(), self.num_items * d),
            ("w_update", self.cell.w_update.len(), d * m),
            ("u_update", self.cell.u_update.len(), d * d),
            ("b_update", self.cell.b_update.len(), d),
            ("w_reset", self.cell.w_reset.len(), d * m),
            ("u_reset", self.cell.u_reset.len(), d * d),
            ("b_reset", self.cell.b_reset.len(), d),
            ("w_cand", self.cell.w_cand.len(), d * m),
            ("u_cand", self.cell.u_cand.len(), d * d),
            ("b_cand", self.cell.b_cand.len(), d),
        ];
        for (name, got, want) in expect {
            if got != want {
                return Err(CoreError::InvalidArgument(format!(
                    "block `{name}` has {got} entries, expected {want}"
                )));
            }
        }
        Ok(())
    }
}

/// Per-event encoder input: embedding followed by [dwell, dislike_flag].
/// Features the config disables are identically zero.
pub fn encode_event(event: &Event, params: &ModelParams) -> Result<Vec<f64>, CoreError> {
    if event.item_id as usize >= params.num_items {
        return Err(CoreError::CorpusMembership {
            item_id: event.item_id,
            corpus_size: params.num_items,
        });
    }
    let mut x = Vec::with_capacity(params.input_dim());
    x.extend_from_slice(params.embedding(event.item_id));
    x.push(if params.features.use_dwell_feature {
        event.dwell
    } else {
        0.0
    });
    x.push(if params.features.use_dislike_feature && event.disliked {
        1.0
    } else {
        0.0
    });
    Ok(x)
}

/// Applies the exclusion heuristic and the recency truncation, in that order,
/// returning the events the encoder will actually see.
pub fn prepare_history<'a>(history: &'a [Event], params: &ModelParams) -> Vec<&'a Event> {
    let kept: Vec<&Event> = history
        .iter()
        .filter(|e| !(params.features.exclude_disliked_from_input && e.disliked))
        .collect();
    let start = kept.len().saturating_sub(self_max(params.max_history));
    kept[start..].to_vec()
}

fn self_max(max_history: usize) -> usize {
    // max_history = 0 would encode nothing; treat it as "no limit is nonsense"
    // and keep at least one event slot.
    max_history.max(1)
}

/// Everything the forward pass computed, kept for backpropagation. All
/// per-step vectors live in flat step-major matrices.
pub(crate) struct GruTrace {
    pub steps: usize,
    /// Encoded inputs, steps × input_dim.
    pub inputs: Vec<f64>,
    /// Hidden state after each step (row t holds h_{t+1}), steps × d.
    pub states: Vec<f64>,
    pub updates: Vec<f64>,
    pub resets: Vec<f64>,
    pub cands: Vec<f64>,
}

impl GruTrace {
    pub fn input(&self, t: usize, m: usize) -> &[f64] {
        &self.inputs[t * m..(t + 1) * m]
    }

    pub fn state(&self, t: usize, d: usize) -> &[f64] {
        &self.states[t * d..(t + 1) * d]
    }

    pub fn final_state(&self, hidden: usize) -> Vec<f64> {
        if self.steps == 0 {
            vec![0.0; hidden]
        } else {
            self.state(self.steps - 1, hidden).to_vec()
        }
    }
}

/// Encodes the prepared events into a flat steps × input_dim matrix.
pub(crate) fn encode_inputs_flat(
    events: &[&Event],
    params: &ModelParams,
) -> Result<Vec<f64>, CoreError> {
    let mut inputs = Vec::with_capacity(events.len() * params.input_dim());
    for event in events {
        if event.item_id as usize >= params.num_items {
            return Err(CoreError::CorpusMembership {
                item_id: event.item_id,
                corpus_size: params.num_items,
            });
        }
        inputs.extend_from_slice(params.embedding(event.item_id));
        inputs.push(if params.features.use_dwell_feature {
            event.dwell
        } else {
            0.0
        });
        inputs.push(
            if params.features.use_dislike_feature && event.disliked {
                1.0
            } else {
                0.0
            },
        );
    }
    Ok(inputs)
}

/// Runs the cell over the encoded inputs starting from the zero state.
pub(crate) fn gru_forward(params: &ModelParams, inputs: Vec<f64>, steps: usize) -> GruTrace {
    let d = params.embed_dim;
    let m = params.input_dim();
    let cell = &params.cell;

    let mut trace = GruTrace {
        steps,
        inputs,
        states: vec![0.0; steps * d],
        updates: vec![0.0; steps * d],
        resets: vec![0.0; steps * d],
        cands: vec![0.0; steps * d],
    };

    let zero = vec![0.0; d];
    let mut gate = vec![0.0; d];
    let mut tmp = vec![0.0; d];
    let mut rh = vec![0.0; d];

    for t in 0..steps {
        let x = &trace.inputs[t * m..(t + 1) * m];
        let (done, rest) = trace.states.split_at_mut(t * d);
        let h_prev: &[f64] = if t == 0 { &zero } else { &done[(t - 1) * d..] };
        let h = &mut rest[..d];
        let z = &mut trace.updates[t * d..(t + 1) * d];
        let r = &mut trace.resets[t * d..(t + 1) * d];
        let c = &mut trace.cands[t * d..(t + 1) * d];

        // update gate
        math::matvec(&cell.w_update, d, m, x, &mut gate);
        math::matvec(&cell.u_update, d, d, h_prev, &mut tmp);
        for i in 0..d {
            z[i] = math::sigmoid(gate[i] + tmp[i] + cell.b_update[i]);
        }

        // reset gate
        math::matvec(&cell.w_reset, d, m, x, &mut gate);
        math::matvec(&cell.u_reset, d, d, h_prev, &mut tmp);
        for i in 0..d {
            r[i] = math::sigmoid(gate[i] + tmp[i] + cell.b_reset[i]);
        }

        // candidate state on the reset-gated history
        for i in 0..d {
            rh[i] = r[i] * h_prev[i];
        }
        math::matvec(&cell.w_cand, d, m, x, &mut gate);
        math::matvec(&cell.u_cand, d, d, &rh, &mut tmp);
        for i in 0..d {
            c[i] = math::tanh(gate[i] + tmp[i] + cell.b_cand[i]);
        }

        for i in 0..d {
            h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * c[i];
        }
    }
    trace
}

/// Encodes an interaction history into the user state vector. The empty
/// history maps to the zero vector.
pub fn encode_state(history: &[Event], params: &ModelParams) -> Result<Vec<f64>, CoreError> {
    let prepared = prepare_history(history, params);
    let inputs = encode_inputs_flat(&prepared, params)?;
    Ok(gru_forward(params, inputs, prepared.len()).final_state(params.embed_dim))
}

/// Logit of every corpus item: `logit_y = state · embedding_y`.
pub fn score(state: &[f64], params: &ModelParams) -> Vec<f64> {
    (0..params.num_items)
        .map(|y| math::dot(state, params.embedding(y as ItemId)))
        .collect()
}

/// Stabilized softmax probability of `index` under the full logit vector.
pub fn softmax_prob(logits: &[f64], index: usize) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for &l in logits {
        if l > max {
            max = l;
        }
    }
    let denom = math::kahan_sum(logits.iter().map(|&l| math::exp(l - max)));
    math::exp(logits[index] - max) / denom
}

#[derive(Clone, Copy)]
struct Ranked {
    logit: f64,
    id: ItemId,
}

impl Ranked {
    /// Better = higher logit, then lower id.
    fn beats(&self, other: &Ranked) -> bool {
        match self.logit.total_cmp(&other.logit) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.id < other.id,
        }
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.logit.total_cmp(&other.logit) == Ordering::Equal && self.id == other.id
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    // Max-heap order by "badness": the heap top is the worst kept candidate.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .logit
            .total_cmp(&self.logit)
            .then_with(|| self.id.cmp(&other.id))
    }
}

/// The `k` items with the highest logits, best first; ties broken by
/// ascending item id. Heap-based selection, deterministic across calls.
pub fn retrieve_top_k(
    state: &[f64],
    params: &ModelParams,
    k: usize,
) -> Result<Vec<ItemId>, CoreError> {
    if k == 0 || k > params.num_items {
        return Err(CoreError::InvalidArgument(format!(
            "k = {k} must be in 1..={}",
            params.num_items
        )));
    }
    let mut heap = alloc::collections::BinaryHeap::with_capacity(k + 1);
    for y in 0..params.num_items {
        let entry = Ranked {
            logit: math::dot(state, params.embedding(y as ItemId)),
            id: y as ItemId,
        };
        if heap.len() < k {
            heap.push(entry);
        } else if entry.beats(heap.peek().expect("heap is non-empty")) {
            heap.pop();
            heap.push(entry);
        }
    }
    let mut kept = heap.into_vec();
    kept.sort_unstable_by(|a, b| {
        b.logit
            .total_cmp(&a.logit)
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(kept.into_iter().map(|e| e.id).collect())
}

/// Serves the model as a simulation policy: encode the history, return the
/// top-`slate_size` items.
#[derive(Clone, Copy)]
pub struct ModelPolicy<'a> {
    pub params: &'a ModelParams,
    pub slate_size: usize,
}

impl Policy for ModelPolicy<'_> {
    fn recommend(&self, history: &[Event], _rng: &mut DetRng) -> Vec<ItemId> {
        let state = match encode_state(history, self.params) {
            Ok(s) => s,
            Err(_) => return Vec::new(),
        };
        retrieve_top_k(&state, self.params, self.slate_size.min(self.params.num_items))
            .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    fn event(item_id: ItemId, dwell: f64, disliked: bool) -> Event {
        Event {
            item_id,
            dwell,
            skipped: false,
            disliked,
            liked: false,
            step: 0,
        }
    }

    fn small_params(seed: u64) -> ModelParams {
        ModelParams::init(6, 3, 50, FeatureConfig::default(), seed)
    }

    #[test]
    fn encode_event_feature_coordinates() {
        let mut params = small_params(0);
        params.features.use_dislike_feature = true;
        let x = encode_event(&event(2, 0.7, true), &params).unwrap();
        assert_eq!(x.len(), params.input_dim());
        assert_eq!(x[3], 0.7);
        assert_eq!(x[4], 1.0);

        params.features.use_dislike_feature = false;
        let x = encode_event(&event(2, 0.7, true), &params).unwrap();
        assert_eq!(x[4], 0.0);

        let err = encode_event(&event(6, 0.5, false), &params).unwrap_err();
        assert!(matches!(err, CoreError::CorpusMembership { .. }));
    }

    #[test]
    fn empty_history_is_zero_state() {
        let params = small_params(1);
        let s = encode_state(&[], &params).unwrap();
        assert_eq!(s, alloc::vec![0.0; 3]);
    }

    #[test]
    fn zero_cell_keeps_zero_state() {
        let mut params = small_params(2);
        params.cell = GruWeights::zeros(3, params.input_dim());
        let history = [event(0, 0.9, false), event(3, 0.1, true), event(5, 0.4, false)];
        let s = encode_state(&history, &params).unwrap();
        assert_eq!(s, alloc::vec![0.0; 3]);
    }

    /// Independent scalar re-derivation of one cell application.
    fn hand_step(params: &ModelParams, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
        let d = params.embed_dim;
        let m = params.input_dim();
        let mut h = alloc::vec![0.0; d];
        for i in 0..d {
            let mut az = params.cell.b_update[i];
            let mut ar = params.cell.b_reset[i];
            for j in 0..m {
                az += params.cell.w_update[i * m + j] * x[j];
                ar += params.cell.w_reset[i * m + j] * x[j];
            }
            for j in 0..d {
                az += params.cell.u_update[i * d + j] * h_prev[j];
                ar += params.cell.u_reset[i * d + j] * h_prev[j];
            }
            let z = 1.0 / (1.0 + math::exp(-az));
            let r = 1.0 / (1.0 + math::exp(-ar));
            let mut ac = params.cell.b_cand[i];
            for j in 0..m {
                ac += params.cell.w_cand[i * m + j] * x[j];
            }
            for j in 0..d {
                // reset gate of coordinate j gates h_prev[j]
                let mut arj = params.cell.b_reset[j];
                for jj in 0..m {
                    arj += params.cell.w_reset[j * m + jj] * x[jj];
                }
                for jj in 0..d {
                    arj += params.cell.u_reset[j * d + jj] * h_prev[jj];
                }
                let rj = 1.0 / (1.0 + math::exp(-arj));
                ac += params.cell.u_cand[i * d + j] * (rj * h_prev[j]);
            }
            let c = math::tanh(ac);
            h[i] = (1.0 - z) * h_prev[i] + z * c;
            let _ = r;
        }
        h
    }

    #[test]
    fn single_event_matches_hand_evaluation() {
        let mut params = small_params(3);
        params.features.use_dislike_feature = true;
        let e = event(4, 0.35, true);
        let x = encode_event(&e, &params).unwrap();
        let expected = hand_step(&params, &x, &alloc::vec![0.0; 3]);
        let got = encode_state(&[e], &params).unwrap();
        for (g, w) in got.iter().zip(&expected) {
            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn two_events_match_chained_hand_evaluation() {
        let params = small_params(4);
        let e0 = event(1, 0.8, false);
        let e1 = event(5, 0.2, false);
        let x0 = encode_event(&e0, &params).unwrap();
        let x1 = encode_event(&e1, &params).unwrap();
        let h1 = hand_step(&params, &x0, &alloc::vec![0.0; 3]);
        let h2 = hand_step(&params, &x1, &h1);
        let got = encode_state(&[e0, e1], &params).unwrap();
        for (g, w) in got.iter().zip(&h2) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn score_matches_naive_loop() {
        let params = ModelParams::init(5, 4, 50, FeatureConfig::default(), 9);
        let mut rng = DetRng::new(42);
        let s: alloc::vec::Vec<f64> = (0..4).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let logits = score(&s, &params);
        for y in 0..5 {
            let mut acc = 0.0;
            for j in 0..4 {
                acc += s[j] * params.embeddings[y * 4 + j];
            }
            assert!((logits[y] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn score_zero_state_and_orthonormal_rows() {
        let mut params = ModelParams::init(4, 4, 50, FeatureConfig::default(), 0);
        let logits = score(&alloc::vec![0.0; 4], &params);
        assert!(logits.iter().all(|&l| l == 0.0));

        params.embeddings = alloc::vec![
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ];
        let s = params.embedding(3).to_vec();
        let logits = score(&s, &params);
        assert_eq!(logits, alloc::vec![0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn softmax_examples() {
        assert!((softmax_prob(&[0.0, 0.0, 0.0, 0.0], 2) - 0.25).abs() < 1e-15);
        let p = softmax_prob(&[math::ln(2.0), 0.0, 0.0], 0);
        assert!((p - 0.5).abs() < 1e-12);

        let logits = [0.3, -1.2, 2.0, 0.0];
        let shifted: alloc::vec::Vec<f64> = logits.iter().map(|l| l + 1000.0).collect();
        for i in 0..4 {
            assert!((softmax_prob(&logits, i) - softmax_prob(&shifted, i)).abs() < 1e-12);
        }
        let total: f64 = (0..4).map(|i| softmax_prob(&logits, i)).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn top_k_tie_break_and_full_permutation() {
        let params = ModelParams::init(7, 3, 50, FeatureConfig::default(), 5);
        let zero = alloc::vec![0.0; 3];
        // all logits tie at 0 → ascending ids
        assert_eq!(retrieve_top_k(&zero, &params, 4).unwrap(), alloc::vec![0, 1, 2, 3]);

        let mut rng = DetRng::new(8);
        let s: alloc::vec::Vec<f64> = (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut all = retrieve_top_k(&s, &params, 7).unwrap();
        all.sort_unstable();
        assert_eq!(all, alloc::vec![0, 1, 2, 3, 4, 5, 6]);

        assert!(retrieve_top_k(&s, &params, 0).is_err());
        assert!(retrieve_top_k(&s, &params, 8).is_err());
    }

    #[test]
    fn top_k_matches_full_sort_oracle() {
        let params = ModelParams::init(100, 6, 50, FeatureConfig::default(), 11);
        let mut rng = DetRng::new(21);
        for _ in 0..10 {
            let s: alloc::vec::Vec<f64> = (0..6).map(|_| rng.uniform(-1.0, 1.0)).collect();
            let got = retrieve_top_k(&s, &params, 10).unwrap();

            let logits = score(&s, &params);
            let mut order: alloc::vec::Vec<usize> = (0..100).collect();
            order.sort_by(|&a, &b| logits[b].total_cmp(&logits[a]).then(a.cmp(&b)));
            let expect: alloc::vec::Vec<ItemId> =
                order[..10].iter().map(|&i| i as ItemId).collect();
            assert_eq!(got, expect);

            // stability across repeated calls
            assert_eq!(got, retrieve_top_k(&s, &params, 10).unwrap());
        }
    }

    #[test]
    fn dislike_blind_model_ignores_dislike_flags() {
        let params = ModelParams::init(10, 4, 50, FeatureConfig::default(), 13);
        assert!(!params.features.use_dislike_feature);
        let plain = [event(1, 0.9, false), event(4, 0.3, false), event(7, 0.5, false)];
        let flipped = [event(1, 0.9, true), event(4, 0.3, true), event(7, 0.5, false)];
        let s_a = encode_state(&plain, &params).unwrap();
        let s_b = encode_state(&flipped, &params).unwrap();
        assert_eq!(s_a, s_b);
        assert_eq!(score(&s_a, &params), score(&s_b, &params));
        assert_eq!(
            retrieve_top_k(&s_a, &params, 5).unwrap(),
            retrieve_top_k(&s_b, &params, 5).unwrap()
        );
    }

    #[test]
    fn long_history_truncates_to_most_recent() {
        let params = ModelParams::init(10, 4, 5, FeatureConfig::default(), 17);
        let long: alloc::vec::Vec<Event> =
            (0..12).map(|i| event((i % 10) as ItemId, 0.5, false)).collect();
        let tail = long[7..].to_vec();
        assert_eq!(
            encode_state(&long, &params).unwrap(),
            encode_state(&tail, &params).unwrap()
        );
    }

    #[test]
    fn exclusion_drops_disliked_before_encoding() {
        let mut params = ModelParams::init(10, 4, 50, FeatureConfig::default(), 19);
        params.features.exclude_disliked_from_input = true;
        let with = [event(1, 0.9, false), event(4, 0.3, true), event(7, 0.5, false)];
        let without = [event(1, 0.9, false), event(7, 0.5, false)];
        assert_eq!(
            encode_state(&with, &params).unwrap(),
            encode_state(&without, &params).unwrap()
        );
    }
}
