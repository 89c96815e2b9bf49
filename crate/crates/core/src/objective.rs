//! Training objective: weighted positive cross-entropy plus a
//! "not-to-recommend" term for negative labels.
//!
//! A positive label contributes `-r · log p(y|s)`; a negative label
//! contributes `-w · log(1 - p(y|s))`, which vanishes as the model stops
//! recommending the item and whose gradient stays finite as `p → 0`. The
//! rejected alternative — cross-entropy with a negative weight — is kept
//! around (`negative_weight_ce_term`) purely to demonstrate its divergence.
//!
//! Probabilities are exact softmax over the whole corpus, or a sampled
//! softmax over the label plus uniformly drawn negatives with the standard
//! log correction. Gradients are exact analytic backpropagation through the
//! softmax, the inner-product scoring and the recurrent cell, verified by
//! central finite differences.

use alloc::vec;
use alloc::vec::Vec;

use crate::catalog::ItemId;
use crate::error::CoreError;
use crate::math;
use crate::model::{
    encode_inputs_flat, gru_forward, prepare_history, GruTrace, GruWeights, ModelParams,
};
use crate::rng::{derive_seed, DetRng};
use crate::simenv::Event;

/// Probabilities entering logs are clamped to [PROB_FLOOR, 1 - PROB_FLOOR].
pub const PROB_FLOOR: f64 = 1e-12;

/// Which loss branch a label selects. Weights are positive for both.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Positive,
    Negative,
}

/// One summand of the joint loss: a history prefix, the label item that
/// followed it, and the branch/weight it contributes.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledExample {
    /// Events strictly before the label event.
    pub history: Vec<Event>,
    pub label_item: ItemId,
    pub sign: Sign,
    pub weight: f64,
}

/// How the softmax denominator is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SoftmaxMode {
    /// Exact softmax over the full corpus.
    Full,
    /// Softmax over the label plus `num_negatives` corpus items drawn
    /// uniformly without replacement; non-label logits get the correction
    /// `-log(n / (A - 1))`. Draws are a pure function of `seed` and the
    /// example's position in the batch. Falls back to `Full` when
    /// `num_negatives >= A`.
    Sampled { num_negatives: usize, seed: u64 },
}

/// Gradient arrays, shape-congruent with [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub embeddings: Vec<f64>,
    pub cell: GruWeights,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            embeddings: vec![0.0; params.embeddings.len()],
            cell: GruWeights::zeros(params.embed_dim, params.input_dim()),
        }
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

    pub fn check_finite(&self) -> Result<(), CoreError> {
        for (name, block) in self.blocks() {
            if block.iter().any(|v| !v.is_finite()) {
                return Err(CoreError::NonFiniteGradient { block: name });
            }
        }
        Ok(())
    }

    /// In-place `params += scale * self`; SGD uses `scale = -learning_rate`.
    pub fn apply_to(&self, params: &mut ModelParams, scale: f64) {
        for ((_, dst), (_, src)) in params.blocks_mut().into_iter().zip(self.blocks()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }
}

/// Clamps only the dangerous end: log arguments never fall below the floor,
/// while the safe end (probability 1) stays exact.
#[inline]
fn floor_prob(p: f64) -> f64 {
    math::clamp(p, PROB_FLOOR, 1.0)
}

/// `-r · log(p)` — the loss of a positive label with probability `p`.
pub fn positive_term(p: f64, r: f64) -> f64 {
    -r * math::ln(floor_prob(p))
}

/// `-w · log(1 - p)` — the not-to-recommend loss of a negative label.
/// Exactly 0 at `p = 0` and nonnegative everywhere.
pub fn negative_term(p: f64, w: f64) -> f64 {
    -w * math::ln(floor_prob(1.0 - p))
}

/// `w · log(p)` — cross-entropy with label weight `-w`. Unbounded below as
/// `p → 0`; present only to demonstrate why it is not used.
pub fn negative_weight_ce_term(p: f64, w: f64) -> f64 {
    w * math::ln(floor_prob(p))
}

/// d/dp of [`negative_weight_ce_term`]: `w / p`, which blows up as `p → 0`.
pub fn negative_weight_ce_prob_gradient(p: f64, w: f64) -> f64 {
    w / floor_prob(p)
}

/// d(loss)/d(label logit) under a full softmax over `logits`.
///
/// For the not-to-recommend branch this reduces to `w · p(label)`, which is
/// finite for any logits and vanishes as the probability does.
pub fn label_logit_gradient(logits: &[f64], label: usize, sign: Sign, weight: f64) -> f64 {
    let p = crate::model::softmax_prob(logits, label);
    match sign {
        Sign::Positive => weight * (p - 1.0),
        Sign::Negative => weight * p,
    }
}

/// Loss totals split by branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub positive: f64,
    pub negative: f64,
    pub num_positive: usize,
    pub num_negative: usize,
}

/// The per-example softmax restricted to a candidate set.
struct CandidateSoftmax {
    /// Candidate item ids; the label is always first.
    items: Vec<ItemId>,
    /// Softmax probabilities aligned with `items`.
    probs: Vec<f64>,
}

fn candidate_softmax(
    state: &[f64],
    params: &ModelParams,
    label: ItemId,
    mode: SoftmaxMode,
    example_index: usize,
) -> CandidateSoftmax {
    let full = match mode {
        SoftmaxMode::Full => true,
        SoftmaxMode::Sampled { num_negatives, .. } => num_negatives >= params.num_items,
    };
    let (items, logits): (Vec<ItemId>, Vec<f64>) = if full {
        let mut items = Vec::with_capacity(params.num_items);
        let mut logits = Vec::with_capacity(params.num_items);
        items.push(label);
        logits.push(math::dot(state, params.embedding(label)));
        for y in 0..params.num_items as ItemId {
            if y != label {
                items.push(y);
                logits.push(math::dot(state, params.embedding(y)));
            }
        }
        (items, logits)
    } else {
        let (num_negatives, seed) = match mode {
            SoftmaxMode::Sampled {
                num_negatives,
                seed,
            } => (num_negatives, seed),
            SoftmaxMode::Full => unreachable!(),
        };
        let pool = params.num_items - 1;
        let n = num_negatives.min(pool);
        let mut rng = DetRng::new(derive_seed(seed, example_index as u64));
        let correction = math::ln(n as f64 / pool as f64);
        let mut items = Vec::with_capacity(n + 1);
        let mut logits = Vec::with_capacity(n + 1);
        items.push(label);
        logits.push(math::dot(state, params.embedding(label)));
        for idx in rng.sample_distinct(pool, n) {
            // map [0, A-1) onto corpus ids skipping the label
            let y = if (idx as ItemId) < label {
                idx as ItemId
            } else {
                idx as ItemId + 1
            };
            items.push(y);
            logits.push(math::dot(state, params.embedding(y)) - correction);
        }
        (items, logits)
    };
    let probs = math::softmax(&logits);
    CandidateSoftmax { items, probs }
}

/// dL/dlogit for every candidate, label first.
fn candidate_logit_gradients(sm: &CandidateSoftmax, sign: Sign, weight: f64) -> Vec<f64> {
    let p_label = sm.probs[0];
    match sign {
        Sign::Positive => sm
            .probs
            .iter()
            .enumerate()
            .map(|(i, &p)| weight * (p - if i == 0 { 1.0 } else { 0.0 }))
            .collect(),
        Sign::Negative => {
            // -w·log(1-p_y): dL/dlogit_y = w·p_y exactly (the (1-p_y) factors
            // cancel); cross terms carry the floored denominator.
            let denom = floor_prob(1.0 - p_label);
            sm.probs
                .iter()
                .enumerate()
                .map(|(i, &p)| {
                    if i == 0 {
                        weight * p_label
                    } else {
                        -weight * p_label * p / denom
                    }
                })
                .collect()
        }
    }
}

struct PreparedExample {
    trace: GruTrace,
    item_ids: Vec<ItemId>,
    state: Vec<f64>,
}

fn forward_example(ex: &LabeledExample, params: &ModelParams) -> Result<PreparedExample, CoreError> {
    if ex.weight <= 0.0 || !ex.weight.is_finite() {
        return Err(CoreError::InvalidArgument(
            "label weights must be positive and finite".into(),
        ));
    }
    if ex.label_item as usize >= params.num_items {
        return Err(CoreError::CorpusMembership {
            item_id: ex.label_item,
            corpus_size: params.num_items,
        });
    }
    let prepared = prepare_history(&ex.history, params);
    let item_ids: Vec<ItemId> = prepared.iter().map(|e| e.item_id).collect();
    let inputs = encode_inputs_flat(&prepared, params)?;
    let trace = gru_forward(params, inputs, prepared.len());
    let state = trace.final_state(params.embed_dim);
    Ok(PreparedExample {
        trace,
        item_ids,
        state,
    })
}

/// Scratch buffers reused across backward passes.
struct BackwardWorkspace {
    dh: Vec<f64>,
    dh_prev: Vec<f64>,
    da_cand: Vec<f64>,
    da_update: Vec<f64>,
    da_reset: Vec<f64>,
    d_rh: Vec<f64>,
    rh: Vec<f64>,
    d_x: Vec<f64>,
}

impl BackwardWorkspace {
    fn new(d: usize, m: usize) -> Self {
        BackwardWorkspace {
            dh: vec![0.0; d],
            dh_prev: vec![0.0; d],
            da_cand: vec![0.0; d],
            da_update: vec![0.0; d],
            da_reset: vec![0.0; d],
            d_rh: vec![0.0; d],
            rh: vec![0.0; d],
            d_x: vec![0.0; m],
        }
    }
}

fn per_sign_scales(batch: &[LabeledExample], normalize_per_sign: bool) -> (f64, f64) {
    if !normalize_per_sign {
        return (1.0, 1.0);
    }
    let pos = batch.iter().filter(|e| e.sign == Sign::Positive).count();
    let neg = batch.len() - pos;
    (
        if pos == 0 { 1.0 } else { 1.0 / pos as f64 },
        if neg == 0 { 1.0 } else { 1.0 / neg as f64 },
    )
}

/// Joint loss over a batch, plain sums over both branches.
pub fn batch_loss(
    batch: &[LabeledExample],
    params: &ModelParams,
    mode: SoftmaxMode,
) -> Result<f64, CoreError> {
    Ok(batch_loss_terms(batch, params, mode, false)?.total)
}

/// Joint loss split by branch. With `normalize_per_sign`, each branch sum is
/// divided by its own label count.
pub fn batch_loss_terms(
    batch: &[LabeledExample],
    params: &ModelParams,
    mode: SoftmaxMode,
    normalize_per_sign: bool,
) -> Result<LossBreakdown, CoreError> {
    if batch.is_empty() {
        return Err(CoreError::EmptyBatch);
    }
    let (pos_scale, neg_scale) = per_sign_scales(batch, normalize_per_sign);
    let mut positive = math::KahanSum::default();
    let mut negative = math::KahanSum::default();
    let mut num_positive = 0;
    let mut num_negative = 0;
    for (idx, ex) in batch.iter().enumerate() {
        let fwd = forward_example(ex, params)?;
        let sm = candidate_softmax(&fwd.state, params, ex.label_item, mode, idx);
        let p = sm.probs[0];
        match ex.sign {
            Sign::Positive => {
                positive.add(pos_scale * positive_term(p, ex.weight));
                num_positive += 1;
            }
            Sign::Negative => {
                negative.add(neg_scale * negative_term(p, ex.weight));
                num_negative += 1;
            }
        }
    }
    Ok(LossBreakdown {
        total: positive.value() + negative.value(),
        positive: positive.value(),
        negative: negative.value(),
        num_positive,
        num_negative,
    })
}

/// Loss and its exact analytic gradient with respect to every parameter
/// array, by backpropagation through time over each example's history.
pub fn batch_gradients(
    batch: &[LabeledExample],
    params: &ModelParams,
    mode: SoftmaxMode,
    normalize_per_sign: bool,
) -> Result<(LossBreakdown, Gradients), CoreError> {
    if batch.is_empty() {
        return Err(CoreError::EmptyBatch);
    }
    let (pos_scale, neg_scale) = per_sign_scales(batch, normalize_per_sign);
    let mut grads = Gradients::zeros_like(params);
    let mut positive = math::KahanSum::default();
    let mut negative = math::KahanSum::default();
    let mut num_positive = 0;
    let mut num_negative = 0;

    let d = params.embed_dim;
    let mut ws = BackwardWorkspace::new(d, params.input_dim());
    let mut d_state = vec![0.0; d];
    for (idx, ex) in batch.iter().enumerate() {
        let fwd = forward_example(ex, params)?;
        let sm = candidate_softmax(&fwd.state, params, ex.label_item, mode, idx);
        let p = sm.probs[0];
        let scale = match ex.sign {
            Sign::Positive => {
                positive.add(pos_scale * positive_term(p, ex.weight));
                num_positive += 1;
                pos_scale
            }
            Sign::Negative => {
                negative.add(neg_scale * negative_term(p, ex.weight));
                num_negative += 1;
                neg_scale
            }
        };

        let dlogits = candidate_logit_gradients(&sm, ex.sign, ex.weight);

        // logit_y = state · v_y: route into the output-side embeddings and
        // accumulate the state gradient.
        d_state.fill(0.0);
        for (&y, &g) in sm.items.iter().zip(&dlogits) {
            let g = g * scale;
            if g == 0.0 {
                continue;
            }
            let row = &mut grads.embeddings[y as usize * d..(y as usize + 1) * d];
            math::axpy(g, &fwd.state, row);
            math::axpy(g, params.embedding(y), &mut d_state);
        }

        gru_backward(params, &fwd.trace, &fwd.item_ids, &d_state, &mut grads, &mut ws);
    }

    grads.check_finite()?;
    Ok((
        LossBreakdown {
            total: positive.value() + negative.value(),
            positive: positive.value(),
            negative: negative.value(),
            num_positive,
            num_negative,
        },
        grads,
    ))
}

/// Backpropagates d(loss)/d(final state) through the recorded forward trace,
/// accumulating into `grads` (cell weights and input-side embedding rows).
fn gru_backward(
    params: &ModelParams,
    trace: &GruTrace,
    item_ids: &[ItemId],
    d_state: &[f64],
    grads: &mut Gradients,
    ws: &mut BackwardWorkspace,
) {
    let d = params.embed_dim;
    let m = params.input_dim();
    let steps = trace.steps;
    if steps == 0 {
        return;
    }
    let zero = vec![0.0; d];
    ws.dh.copy_from_slice(d_state);

    for t in (0..steps).rev() {
        let h_prev = if t == 0 { &zero[..] } else { trace.state(t - 1, d) };
        let z = &trace.updates[t * d..(t + 1) * d];
        let r = &trace.resets[t * d..(t + 1) * d];
        let c = &trace.cands[t * d..(t + 1) * d];
        let x = trace.input(t, m);

        for i in 0..d {
            let dz = ws.dh[i] * (c[i] - h_prev[i]);
            let dc = ws.dh[i] * z[i];
            ws.dh_prev[i] = ws.dh[i] * (1.0 - z[i]);
            ws.da_cand[i] = dc * (1.0 - c[i] * c[i]);
            ws.da_update[i] = dz * z[i] * (1.0 - z[i]);
        }

        // candidate path: c = tanh(Wc x + Uc (r ⊙ h_prev) + bc)
        for i in 0..d {
            ws.rh[i] = r[i] * h_prev[i];
        }
        math::outer_add(&ws.da_cand, x, &mut grads.cell.w_cand);
        math::outer_add(&ws.da_cand, &ws.rh, &mut grads.cell.u_cand);
        math::axpy(1.0, &ws.da_cand, &mut grads.cell.b_cand);

        ws.d_rh.fill(0.0);
        math::matvec_transpose_add(&params.cell.u_cand, d, d, &ws.da_cand, &mut ws.d_rh);
        for i in 0..d {
            let dr = ws.d_rh[i] * h_prev[i];
            ws.dh_prev[i] += ws.d_rh[i] * r[i];
            ws.da_reset[i] = dr * r[i] * (1.0 - r[i]);
        }

        // reset path: r = sigmoid(Wr x + Ur h_prev + br)
        math::outer_add(&ws.da_reset, x, &mut grads.cell.w_reset);
        math::outer_add(&ws.da_reset, h_prev, &mut grads.cell.u_reset);
        math::axpy(1.0, &ws.da_reset, &mut grads.cell.b_reset);
        math::matvec_transpose_add(&params.cell.u_reset, d, d, &ws.da_reset, &mut ws.dh_prev);

        // update path: z = sigmoid(Wz x + Uz h_prev + bz)
        math::outer_add(&ws.da_update, x, &mut grads.cell.w_update);
        math::outer_add(&ws.da_update, h_prev, &mut grads.cell.u_update);
        math::axpy(1.0, &ws.da_update, &mut grads.cell.b_update);
        math::matvec_transpose_add(&params.cell.u_update, d, d, &ws.da_update, &mut ws.dh_prev);

        // input gradient: the embedding slice flows back into the item's row
        ws.d_x.fill(0.0);
        math::matvec_transpose_add(&params.cell.w_cand, d, m, &ws.da_cand, &mut ws.d_x);
        math::matvec_transpose_add(&params.cell.w_reset, d, m, &ws.da_reset, &mut ws.d_x);
        math::matvec_transpose_add(&params.cell.w_update, d, m, &ws.da_update, &mut ws.d_x);
        let row_start = item_ids[t] as usize * d;
        math::axpy(1.0, &ws.d_x[..d], &mut grads.embeddings[row_start..row_start + d]);

        core::mem::swap(&mut ws.dh, &mut ws.dh_prev);
    }
}

/// Compares analytic gradients against central finite differences on a
/// random coordinate subset spanning every parameter block. Returns the
/// maximum relative error `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn finite_diff_check(
    batch: &[LabeledExample],
    params: &ModelParams,
    mode: SoftmaxMode,
    epsilon: f64,
    min_coords: usize,
    seed: u64,
) -> Result<f64, CoreError> {
    let (_, grads) = batch_gradients(batch, params, mode, false)?;
    finite_diff_check_against(batch, params, &grads, mode, epsilon, min_coords, seed)
}

/// Same check against caller-supplied gradients; lets tests verify that a
/// corrupted gradient is caught.
pub fn finite_diff_check_against(
    batch: &[LabeledExample],
    params: &ModelParams,
    grads: &Gradients,
    mode: SoftmaxMode,
    epsilon: f64,
    min_coords: usize,
    seed: u64,
) -> Result<f64, CoreError> {
    if !(1e-7..=1e-3).contains(&epsilon) {
        return Err(CoreError::InvalidArgument(
            "epsilon must lie in [1e-7, 1e-3]".into(),
        ));
    }
    let total: usize = params.blocks().iter().map(|(_, b)| b.len()).sum();
    let mut rng = DetRng::from_seed_stream(seed, 0xfd);
    let mut work = params.clone();
    let mut max_rel = 0.0_f64;

    let block_lens: Vec<usize> = params.blocks().iter().map(|(_, b)| b.len()).collect();
    for (block_idx, &len) in block_lens.iter().enumerate() {
        // proportional share of the budget, at least one coordinate per block
        let share = (min_coords * len).div_ceil(total).max(1).min(len);
        let picks = rng.sample_distinct(len, share);
        for coord in picks {
            let analytic = grads.blocks()[block_idx].1[coord];
            let original = work.blocks()[block_idx].1[coord];

            work.blocks_mut()[block_idx].1[coord] = original + epsilon;
            let plus = batch_loss(batch, &work, mode)?;
            work.blocks_mut()[block_idx].1[coord] = original - epsilon;
            let minus = batch_loss(batch, &work, mode)?;
            work.blocks_mut()[block_idx].1[coord] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let denom = math::abs(analytic).max(math::abs(numeric)).max(1e-8);
            let rel = math::abs(analytic - numeric) / denom;
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    Ok(max_rel)
}
