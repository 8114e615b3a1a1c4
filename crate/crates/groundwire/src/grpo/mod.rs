//! Desk-scale group-relative policy optimization.
//!
//! A softmax bandit over per-prompt answer templates stands in for the
//! generator: good enough to drive the full reward engine end to end and
//! small enough that every gradient is checkable by hand. Rollouts are
//! scored by the reward engine, advantages are normalized within each
//! rollout group, and the update ascends a clipped importance-ratio
//! surrogate. The objective takes only the sampling policy's own recorded
//! probabilities; there is no reference-policy input anywhere, so no
//! divergence penalty can exist structurally.

pub mod env;
pub mod train;

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reward::RewardBreakdown;

pub const DEFAULT_GROUP_SIZE: usize = 8;
pub const DEFAULT_CLIP_RATIO: f64 = 0.2;
pub const ADVANTAGE_EPS: f64 = 1e-8;

/// Group-relative advantages: each reward minus the group mean, divided
/// by the population standard deviation (floored at `eps`). A group with
/// identical rewards carries no signal and maps to all zeros.
pub fn group_advantages(rewards: &[f64], eps: f64) -> Result<Vec<f64>> {
    let n = rewards.len();
    if n < 2 {
        return Err(Error::GroupTooSmall(n));
    }
    if rewards.windows(2).all(|w| w[0] == w[1]) {
        return Ok(vec![0.0; n]);
    }
    let mean = rewards.iter().sum::<f64>() / n as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
    let denom = var.sqrt().max(eps);
    Ok(rewards.iter().map(|r| (r - mean) / denom).collect())
}

fn softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| ((z - max) / temperature).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Tabular softmax policy: one logit vector per prompt class, one entry
/// per answer template of that class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub logits: Vec<Vec<f64>>,
    pub temperature: f64,
}

impl ToyPolicy {
    /// Zero logits: uniform over each class's templates.
    pub fn uniform(class_sizes: &[usize], temperature: f64) -> Self {
        Self {
            logits: class_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            temperature,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.logits.len()
    }

    pub fn probs(&self, class: usize) -> Vec<f64> {
        softmax(&self.logits[class], self.temperature)
    }

    /// Samples a template index; returns it with its probability.
    pub fn sample(&self, class: usize, rng: &mut impl Rng) -> (usize, f64) {
        let probs = self.probs(class);
        let draw: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in probs.iter().enumerate() {
            acc += p;
            if draw < acc {
                return (i, *p);
            }
        }
        let last = probs.len() - 1;
        (last, probs[last])
    }
}

/// One prompt's worth of rollouts, with everything the update needs:
/// the sampled template indices and their probabilities under the
/// collecting policy, so importance ratios never have to be rebuilt
/// from strings.
#[derive(Debug, Clone)]
pub struct RolloutGroup {
    pub prompt_id: usize,
    pub responses: Vec<String>,
    pub actions: Vec<usize>,
    pub old_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub breakdowns: Vec<RewardBreakdown>,
    pub advantages: Vec<f64>,
}

/// Samples `group_size` responses per prompt and scores them. The reward
/// function returns the response text with its breakdown; any error
/// aborts the whole batch.
pub fn collect_rollouts<F>(
    policy: &ToyPolicy,
    prompts: &[usize],
    group_size: usize,
    eps: f64,
    rng: &mut impl Rng,
    mut reward_fn: F,
) -> Result<Vec<RolloutGroup>>
where
    F: FnMut(usize, usize) -> Result<(String, RewardBreakdown)>,
{
    let mut groups = Vec::with_capacity(prompts.len());
    for &prompt_id in prompts {
        let mut responses = Vec::with_capacity(group_size);
        let mut actions = Vec::with_capacity(group_size);
        let mut old_probs = Vec::with_capacity(group_size);
        let mut rewards = Vec::with_capacity(group_size);
        let mut breakdowns = Vec::with_capacity(group_size);
        for _ in 0..group_size {
            let (action, prob) = policy.sample(prompt_id, rng);
            let (response, breakdown) = reward_fn(prompt_id, action)?;
            responses.push(response);
            actions.push(action);
            old_probs.push(prob);
            rewards.push(breakdown.total);
            breakdowns.push(breakdown);
        }
        let advantages = group_advantages(&rewards, eps)?;
        groups.push(RolloutGroup {
            prompt_id,
            responses,
            actions,
            old_probs,
            rewards,
            breakdowns,
            advantages,
        });
    }
    Ok(groups)
}

/// Per-sample clipped surrogate: min(ρ·a, clip(ρ, 1±ε)·a).
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip);
    (ratio * advantage).min(clipped * advantage)
}

/// Mean surrogate over every sample in `groups` under the current policy.
pub fn surrogate_objective(policy: &ToyPolicy, groups: &[RolloutGroup], clip: f64) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for g in groups {
        let probs = policy.probs(g.prompt_id);
        for i in 0..g.actions.len() {
            let ratio = probs[g.actions[i]] / g.old_probs[i];
            sum += clipped_objective(ratio, g.advantages[i], clip);
            count += 1;
        }
    }
    if count == 0 { 0.0 } else { sum / count as f64 }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Mean clipped surrogate before the step.
    pub objective: f64,
    /// Fraction of samples whose gradient the clip zeroed.
    pub clipped_fraction: f64,
    pub grad_max_abs: f64,
}

/// Analytic gradient of the mean surrogate with respect to each class's
/// logits. For a sample with action t, advantage a and ratio ρ the
/// contribution to logit j is a·ρ·(δ_tj − p_j)/τ, except when the min
/// picks the flat side of the clip (ρ past the boundary in the direction
/// the advantage pushes), where it is exactly zero.
pub fn surrogate_gradient(
    policy: &ToyPolicy,
    groups: &[RolloutGroup],
    clip: f64,
) -> (BTreeMap<usize, Vec<f64>>, UpdateStats) {
    let mut grads: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut objective_sum = 0.0;
    let mut clipped = 0usize;
    let mut total = 0usize;
    for g in groups {
        let probs = policy.probs(g.prompt_id);
        let grad = grads
            .entry(g.prompt_id)
            .or_insert_with(|| vec![0.0; probs.len()]);
        for i in 0..g.actions.len() {
            let t = g.actions[i];
            let a = g.advantages[i];
            let ratio = probs[t] / g.old_probs[i];
            objective_sum += clipped_objective(ratio, a, clip);
            total += 1;
            let gated_out =
                (ratio > 1.0 + clip && a > 0.0) || (ratio < 1.0 - clip && a < 0.0);
            if gated_out {
                clipped += 1;
                continue;
            }
            for (j, p) in probs.iter().enumerate() {
                let indicator = if j == t { 1.0 } else { 0.0 };
                grad[j] += a * ratio * (indicator - p) / policy.temperature;
            }
        }
    }
    let mut grad_max_abs = 0.0f64;
    if total > 0 {
        for grad in grads.values_mut() {
            for gj in grad.iter_mut() {
                *gj /= total as f64;
                grad_max_abs = grad_max_abs.max(gj.abs());
            }
        }
    }
    let stats = UpdateStats {
        objective: if total == 0 { 0.0 } else { objective_sum / total as f64 },
        clipped_fraction: if total == 0 { 0.0 } else { clipped as f64 / total as f64 },
        grad_max_abs,
    };
    (grads, stats)
}

/// One gradient-ascent step on the clipped surrogate. `step` only labels
/// the error if the gradient degenerates.
pub fn update_policy(
    policy: &mut ToyPolicy,
    groups: &[RolloutGroup],
    clip: f64,
    learning_rate: f64,
    step: usize,
) -> Result<UpdateStats> {
    let (grads, stats) = surrogate_gradient(policy, groups, clip);
    for grad in grads.values() {
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient { step });
        }
    }
    for (class, grad) in grads {
        for (z, g) in policy.logits[class].iter_mut().zip(grad) {
            *z += learning_rate * g;
        }
    }
    Ok(stats)
}
