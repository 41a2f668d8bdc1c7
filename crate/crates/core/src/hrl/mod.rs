//! Two-level goal-conditioned policy stack.
//!
//! The high level picks subgoal indices; the low level picks primitive
//! actions conditioned on the observation with the subgoal appended as a
//! one-hot block. Both levels learn action values by temporal difference.

mod buffer;
mod segment;
mod train;

pub use buffer::ReplayBuffer;
pub use segment::{
    collect_segment, collect_segment_with_goal, her_relabel, AchievedLog, Segment, SegmentRunner,
};
pub use train::{td_loss_grads, QLearner, ValueNet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor;

/// Linear schedule from `start` to `end` over `anneal_steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub start: f64,
    pub end: f64,
    pub anneal_steps: usize,
}

impl Schedule {
    pub fn constant(v: f64) -> Self {
        Self { start: v, end: v, anneal_steps: 1 }
    }

    pub fn value(&self, step: usize) -> f64 {
        if self.anneal_steps == 0 || step >= self.anneal_steps {
            return self.end;
        }
        let frac = step as f64 / self.anneal_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

/// Knobs for the hierarchical stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrlConfig {
    /// Maximum low-level steps per subgoal before a forced refresh.
    pub c: usize,
    /// Intrinsic-reward decay factor.
    pub beta_low: f64,
    pub gamma: f64,
    /// Low-level exploration.
    pub epsilon: Schedule,
    /// High-level sampling temperature.
    pub temperature: Schedule,
    /// Intrinsic-reward clock horizon. Segment clocks run 1..=t_m, so this
    /// defaults to `c`.
    pub t_m: usize,
}

impl HrlConfig {
    pub fn for_env(c: usize) -> Self {
        Self {
            c,
            beta_low: 0.5,
            gamma: 0.99,
            epsilon: Schedule { start: 1.0, end: 0.05, anneal_steps: 50_000 },
            temperature: Schedule { start: 1.0, end: 0.1, anneal_steps: 50_000 },
            t_m: c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c < 1 {
            return Err(Error::ConfigValidation("c must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::ConfigValidation("gamma must lie in [0,1)".into()));
        }
        if !(0.0..=1.0).contains(&self.beta_low) {
            return Err(Error::ConfigValidation("beta_low must lie in [0,1]".into()));
        }
        if self.t_m < 1 {
            return Err(Error::ConfigValidation("t_m must be >= 1".into()));
        }
        Ok(())
    }
}

/// One low-level transition: observation, primitive action, intrinsic
/// reward, conditioning subgoal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LowTransition {
    pub obs: Tensor,
    pub action: usize,
    pub intrinsic_reward: f64,
    pub goal: usize,
    pub next_obs: Tensor,
    pub done: bool,
}

/// One high-level (macro) transition spanning a subgoal segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HighTransition {
    pub obs: Tensor,
    pub goal: usize,
    /// Sum of extrinsic rewards over the segment.
    pub summed_reward: f64,
    pub next_obs: Tensor,
    pub segment_len: usize,
    pub done: bool,
}

/// Time-decayed intrinsic reward: `1 - beta * t / t_m` on achievement, else 0.
pub fn intrinsic_reward(achieved: bool, t: usize, t_m: usize, beta: f64) -> Result<f64> {
    if t > t_m {
        return Err(Error::Domain(format!("intrinsic clock t={t} exceeds t_m={t_m}")));
    }
    Ok(if achieved { 1.0 - beta * t as f64 / t_m as f64 } else { 0.0 })
}

/// Observation with the subgoal appended as a one-hot block.
pub fn goal_conditioned_input(obs: &[f64], goal: usize, subgoal_count: usize) -> Vec<f64> {
    let mut input = Vec::with_capacity(obs.len() + subgoal_count);
    input.extend_from_slice(obs);
    for g in 0..subgoal_count {
        input.push(if g == goal { 1.0 } else { 0.0 });
    }
    input
}

/// Argmax with ties broken by the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy)]
pub enum SelectMode {
    Sample { temperature: f64 },
    Greedy,
}

/// Pick a subgoal from the high-level values: softmax sampling with
/// temperature, or greedy argmax.
pub fn select_subgoal(
    high: &ValueNet,
    obs: &Tensor,
    mode: SelectMode,
    rng: &mut RngStream,
) -> Result<usize> {
    let q = high.q_values(&obs.values)?;
    match mode {
        SelectMode::Greedy => Ok(argmax(&q)),
        SelectMode::Sample { temperature } => {
            if temperature < 1e-9 {
                return Ok(argmax(&q));
            }
            let scaled: Vec<f64> = q.iter().map(|v| v / temperature).collect();
            let probs = crate::nn::softmax(&scaled)?;
            Ok(rng.categorical(&probs))
        }
    }
}

/// Epsilon-greedy primitive action for `goal`.
pub fn low_action(
    low: &ValueNet,
    obs: &Tensor,
    goal: usize,
    subgoal_count: usize,
    epsilon: f64,
    rng: &mut RngStream,
) -> Result<usize> {
    let n_actions = low.spec.output_dim();
    if epsilon > 0.0 && rng.chance(epsilon) {
        return Ok(rng.below(n_actions));
    }
    let input = goal_conditioned_input(&obs.values, goal, subgoal_count);
    let q = low.q_values(&input)?;
    Ok(argmax(&q))
}
