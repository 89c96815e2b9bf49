//! Self-verification: gradient finite-difference suite plus softmax and
//! loss-branch property checks. `negrec verify` runs everything here and
//! exits nonzero if any check fails; the acceptance tests reuse the same
//! entry points.

use negrec_core::catalog::ItemId;
use negrec_core::math;
use negrec_core::model::{softmax_prob, FeatureConfig, ModelParams};
use negrec_core::objective::{
    batch_gradients, batch_loss, batch_loss_terms, finite_diff_check, label_logit_gradient,
    negative_term, negative_weight_ce_prob_gradient, negative_weight_ce_term, positive_term,
    LabeledExample, Sign, SoftmaxMode,
};
use negrec_core::rng::{derive_seed, DetRng};
use negrec_core::simenv::Event;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult {
            name,
            passed,
            detail,
        }
    }
}

/// Epsilon for every finite-difference run in the suite. Large enough that
/// f64 cancellation noise in the loss stays well under the 1e-4 tolerance,
/// small enough that truncation error is negligible.
pub const FD_EPSILON: f64 = 1e-3;
pub const FD_TOLERANCE: f64 = 1e-4;
pub const FD_MIN_COORDS: usize = 220;

fn random_event(rng: &mut DetRng, num_items: usize, step: u32) -> Event {
    Event {
        item_id: rng.below(num_items) as ItemId,
        dwell: rng.next_f64(),
        skipped: false,
        disliked: rng.bernoulli(0.25),
        liked: rng.bernoulli(0.2),
        step,
    }
}

/// One random gradient-check instance: a small dislike-aware model and a
/// two-example batch holding one label of each sign.
///
/// The batch is kept small and lightly weighted on purpose: the binding
/// error in the check is f64 cancellation noise `δL / (2ε · guard)` on
/// coordinates whose true gradient sits at the 1e-8 denominator guard, and
/// that noise scales with the magnitude of the loss being differenced.
pub fn gradient_instance(seed: u64) -> (ModelParams, Vec<LabeledExample>) {
    let num_items = 20;
    let features = FeatureConfig {
        use_dislike_feature: true,
        use_dwell_feature: true,
        exclude_disliked_from_input: false,
    };
    let params = ModelParams::init(num_items, 8, 50, features, derive_seed(seed, 1));
    let mut rng = DetRng::from_seed_stream(seed, 2);
    let batch = (0..2)
        .map(|i| {
            let hist_len = rng.below(6);
            let history = (0..hist_len)
                .map(|s| random_event(&mut rng, num_items, s as u32))
                .collect();
            LabeledExample {
                history,
                label_item: rng.below(num_items) as ItemId,
                sign: if i % 2 == 0 {
                    Sign::Positive
                } else {
                    Sign::Negative
                },
                weight: rng.uniform(0.3, 0.8),
            }
        })
        .collect();
    (params, batch)
}

/// Central finite differences against analytic gradients on 20 random
/// instances, every parameter block covered.
pub fn gradient_check(seed: u64) -> CheckResult {
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let (params, batch) = gradient_instance(derive_seed(seed, 100 + i));
        match finite_diff_check(
            &batch,
            &params,
            SoftmaxMode::Full,
            FD_EPSILON,
            FD_MIN_COORDS,
            derive_seed(seed, 200 + i),
        ) {
            Ok(err) => worst = worst.max(err),
            Err(e) => {
                return CheckResult::new("gradient_finite_difference", false, e.to_string())
            }
        }
    }
    CheckResult::new(
        "gradient_finite_difference",
        worst < FD_TOLERANCE,
        format!("max relative error {worst:.3e} over 20 instances (tolerance {FD_TOLERANCE:.0e})"),
    )
}

pub fn loss_exactness_check() -> CheckResult {
    let ln2 = core::f64::consts::LN_2;
    let pos = (positive_term(0.5, 1.0) - ln2).abs();
    let neg = (negative_term(0.5, 1.0) - ln2).abs();
    let at_one = positive_term(1.0, 1.0).abs();
    let passed = pos < 1e-12 && neg < 1e-12 && at_one == 0.0;
    CheckResult::new(
        "loss_branch_exactness",
        passed,
        format!("|pos-ln2| = {pos:.2e}, |neg-ln2| = {neg:.2e}"),
    )
}

/// The joint loss must equal the sum of independently evaluated branch terms.
pub fn decomposition_check(seed: u64) -> CheckResult {
    let mut worst = 0.0f64;
    for i in 0..5u64 {
        let (params, batch) = gradient_instance(derive_seed(seed, 300 + i));
        let loss = match batch_loss_terms(&batch, &params, SoftmaxMode::Full, false) {
            Ok(l) => l,
            Err(e) => return CheckResult::new("loss_decomposition", false, e.to_string()),
        };
        let mut pos = 0.0;
        let mut neg = 0.0;
        for ex in &batch {
            let state = negrec_core::model::encode_state(&ex.history, &params).unwrap();
            let logits = negrec_core::model::score(&state, &params);
            let p = softmax_prob(&logits, ex.label_item as usize);
            match ex.sign {
                Sign::Positive => pos += positive_term(p, ex.weight),
                Sign::Negative => neg += negative_term(p, ex.weight),
            }
        }
        worst = worst
            .max((loss.positive - pos).abs())
            .max((loss.negative - neg).abs())
            .max((loss.total - (pos + neg)).abs());
    }
    CheckResult::new(
        "loss_decomposition",
        worst < 1e-12,
        format!("max decomposition gap {worst:.2e}"),
    )
}

pub fn softmax_property_check(seed: u64) -> CheckResult {
    let mut rng = DetRng::from_seed_stream(seed, 400);
    let mut sum_gap = 0.0f64;
    let mut shift_gap = 0.0f64;
    for _ in 0..50 {
        let n = 2 + rng.below(30);
        let logits: Vec<f64> = (0..n).map(|_| rng.uniform(-8.0, 8.0)).collect();
        let total: f64 = (0..n).map(|i| softmax_prob(&logits, i)).sum();
        sum_gap = sum_gap.max((total - 1.0).abs());

        let shift = rng.uniform(-1000.0, 1000.0);
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        for i in 0..n {
            shift_gap = shift_gap.max((softmax_prob(&logits, i) - softmax_prob(&shifted, i)).abs());
        }
    }
    CheckResult::new(
        "softmax_properties",
        sum_gap < 1e-9 && shift_gap < 1e-12,
        format!("sum-to-one gap {sum_gap:.2e}, shift-invariance gap {shift_gap:.2e}"),
    )
}

/// One row of the boundedness sweep over the label probability.
#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub p: f64,
    pub not_to_recommend_loss: f64,
    /// d(loss)/d(label logit) of the not-to-recommend branch.
    pub not_to_recommend_logit_grad: f64,
    pub negative_weight_ce_loss: f64,
    /// |d(loss)/dp| of the negative-weight cross-entropy.
    pub negative_weight_ce_prob_grad: f64,
}

/// Sweeps the label logit of a two-item softmax so that p runs from 1e-12 to
/// 0.5 (log-spaced), evaluating both negative-label losses and gradients.
pub fn boundedness_sweep(points: usize) -> Vec<SweepRow> {
    assert!(points >= 2);
    let lo = 1e-12f64.ln();
    let hi = 0.5f64.ln();
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            let target = math::exp(lo + t * (hi - lo));
            // logits (a, 0) give p = sigmoid(a); invert to hit the target p
            let a = math::ln(target / (1.0 - target));
            let logits = [a, 0.0];
            let p = softmax_prob(&logits, 0);
            SweepRow {
                p,
                not_to_recommend_loss: negative_term(p, 1.0),
                not_to_recommend_logit_grad: label_logit_gradient(&logits, 0, Sign::Negative, 1.0),
                negative_weight_ce_loss: negative_weight_ce_term(p, 1.0),
                negative_weight_ce_prob_grad: negative_weight_ce_prob_gradient(p, 1.0),
            }
        })
        .collect()
}

/// The blow-up demonstration: the not-to-recommend branch stays bounded with
/// a vanishing gradient while negative-weight cross-entropy diverges.
pub fn boundedness_check() -> CheckResult {
    let rows = boundedness_sweep(121);
    let ln2 = core::f64::consts::LN_2;
    let mut ok = true;
    let mut detail = String::new();

    for row in &rows {
        if !(0.0..=ln2 + 1e-12).contains(&row.not_to_recommend_loss) {
            ok = false;
            detail = format!("loss {} escapes [0, ln 2] at p = {}", row.not_to_recommend_loss, row.p);
            break;
        }
    }
    // gradient magnitude decreases monotonically toward 0 as p descends
    for pair in rows.windows(2) {
        if pair[0].not_to_recommend_logit_grad >= pair[1].not_to_recommend_logit_grad {
            ok = false;
            detail = format!(
                "gradient not monotone: {} then {}",
                pair[0].not_to_recommend_logit_grad, pair[1].not_to_recommend_logit_grad
            );
            break;
        }
    }
    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    if first.not_to_recommend_logit_grad > 1e-11 {
        ok = false;
        detail = format!("tail gradient {} not vanishing", first.not_to_recommend_logit_grad);
    }
    if (last.not_to_recommend_logit_grad - 0.5).abs() > 1e-9 {
        ok = false;
        detail = format!("gradient at p = 0.5 is {}", last.not_to_recommend_logit_grad);
    }
    if first.negative_weight_ce_loss >= -27.0 || first.negative_weight_ce_prob_grad <= 1e11 {
        ok = false;
        detail = format!(
            "negative-weight CE fails to diverge: loss {}, |dL/dp| {}",
            first.negative_weight_ce_loss, first.negative_weight_ce_prob_grad
        );
    }
    if ok {
        detail = format!(
            "loss bounded in [0, ln 2]; CE at p=1e-12: loss {:.2}, |dL/dp| {:.2e}",
            first.negative_weight_ce_loss, first.negative_weight_ce_prob_grad
        );
    }
    CheckResult::new("not_to_recommend_boundedness", ok, detail)
}

/// Exhaustive sampling must reproduce the full softmax exactly.
pub fn sampled_consistency_check(seed: u64) -> CheckResult {
    let num_items = 10;
    let features = FeatureConfig {
        use_dislike_feature: true,
        use_dwell_feature: true,
        exclude_disliked_from_input: false,
    };
    let params = ModelParams::init(num_items, 6, 50, features, derive_seed(seed, 500));
    let mut rng = DetRng::from_seed_stream(seed, 501);
    let batch: Vec<LabeledExample> = (0..6)
        .map(|i| {
            let history = (0..rng.below(5))
                .map(|s| random_event(&mut rng, num_items, s as u32))
                .collect();
            LabeledExample {
                history,
                label_item: rng.below(num_items) as ItemId,
                sign: if i % 2 == 0 {
                    Sign::Positive
                } else {
                    Sign::Negative
                },
                weight: rng.uniform(0.3, 1.0),
            }
        })
        .collect();

    let mode = SoftmaxMode::Sampled {
        num_negatives: num_items - 1,
        seed: derive_seed(seed, 502),
    };
    let full_loss = batch_loss(&batch, &params, SoftmaxMode::Full).unwrap();
    let sampled_loss = batch_loss(&batch, &params, mode).unwrap();
    let mut worst = (full_loss - sampled_loss).abs();

    let (_, g_full) = batch_gradients(&batch, &params, SoftmaxMode::Full, false).unwrap();
    let (_, g_sampled) = batch_gradients(&batch, &params, mode, false).unwrap();
    for ((_, a), (_, b)) in g_full.blocks().into_iter().zip(g_sampled.blocks()) {
        for (x, y) in a.iter().zip(b) {
            worst = worst.max((x - y).abs());
        }
    }
    CheckResult::new(
        "sampled_softmax_consistency",
        worst < 1e-9,
        format!("max |full - sampled(A-1)| = {worst:.2e} over loss and all gradients"),
    )
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        gradient_check(seed),
        loss_exactness_check(),
        decomposition_check(seed),
        softmax_property_check(seed),
        boundedness_check(),
        sampled_consistency_check(seed),
    ]
}
