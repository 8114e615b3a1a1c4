//! The outer training loop: collect, normalize, update, log.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grpo::env::ToyEnvironment;
use crate::grpo::{collect_rollouts, update_policy, RolloutGroup, ToyPolicy};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_prompts: usize,
    pub group_size: usize,
    pub clip_ratio: f64,
    pub learning_rate: f64,
    pub temperature: f64,
    /// Responses are truncated to this many characters before judging.
    pub max_answer_chars: usize,
    pub seed: u64,
    pub advantage_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 120,
            batch_prompts: 16,
            group_size: super::DEFAULT_GROUP_SIZE,
            clip_ratio: super::DEFAULT_CLIP_RATIO,
            learning_rate: 0.4,
            temperature: 1.0,
            max_answer_chars: 2048,
            seed: 42,
            advantage_eps: super::ADVANTAGE_EPS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0
            || self.batch_prompts == 0
            || self.group_size < 2
            || self.max_answer_chars == 0
        {
            return Err(Error::Config("steps, batch and group sizes must be positive (group >= 2)".into()));
        }
        // NaN comparisons are false, so test the rejecting direction.
        let positive = |x: f64| x > 0.0;
        if !positive(self.clip_ratio) || !positive(self.temperature) || self.learning_rate < 0.0 {
            return Err(Error::Config("clip ratio and temperature must be positive".into()));
        }
        Ok(())
    }
}

/// One row of the reward curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    pub mean_reward: f64,
    pub r_f: f64,
    pub r_s: f64,
    pub r_a: f64,
    pub r_h: f64,
}

fn step_stats(step: usize, groups: &[RolloutGroup]) -> StepStats {
    let mut n = 0usize;
    let (mut total, mut f, mut s, mut a, mut h) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for g in groups {
        for b in &g.breakdowns {
            total += b.total;
            f += b.r_f;
            s += b.r_s;
            a += b.r_a;
            h += b.r_h;
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    StepStats { step, mean_reward: total / n, r_f: f / n, r_s: s / n, r_a: a / n, r_h: h / n }
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub steps: Vec<StepStats>,
    pub policy: ToyPolicy,
    /// Final probability mass on each prompt's best-reward template.
    pub best_mass: Vec<f64>,
}

/// Runs the full collect/normalize/update loop. Prompts are visited in a
/// fixed rotation so every class sees the same traffic; all randomness
/// flows from the seed.
pub fn train_toy(env: &ToyEnvironment, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let counts = env.template_counts();
    let mut policy = ToyPolicy::uniform(&counts, config.temperature);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut steps = Vec::with_capacity(config.steps);
    for step in 0..config.steps {
        let prompt_ids: Vec<usize> = (0..config.batch_prompts)
            .map(|b| (step * config.batch_prompts + b) % counts.len())
            .collect();
        let groups = collect_rollouts(
            &policy,
            &prompt_ids,
            config.group_size,
            config.advantage_eps,
            &mut rng,
            |p, t| env.score(p, t, config.max_answer_chars),
        )?;
        steps.push(step_stats(step, &groups));
        update_policy(&mut policy, &groups, config.clip_ratio, config.learning_rate, step)?;
    }
    let best = env.best_templates(config.max_answer_chars)?;
    let best_mass = best
        .iter()
        .enumerate()
        .map(|(p, &t)| policy.probs(p)[t])
        .collect();
    Ok(TrainReport { steps, policy, best_mass })
}

/// Writes the reward curve as `step,mean_reward,r_f,r_s,r_a,r_h`.
pub fn write_reward_csv(path: impl AsRef<Path>, steps: &[StepStats]) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "step,mean_reward,r_f,r_s,r_a,r_h")?;
    for s in steps {
        writeln!(
            file,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6}",
            s.step, s.mean_reward, s.r_f, s.r_s, s.r_a, s.r_h
        )?;
    }
    Ok(())
}
