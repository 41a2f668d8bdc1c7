//! The multi-agent sequential environment contract.
//!
//! Agents act one at a time in a fixed cyclic order. Each step reports the
//! acting agent's next observation, its local reward, the episode done flag,
//! and the set of subgoal predicates that fired on this transition.

pub mod conformance;
pub mod doorkey;
pub mod trashgrid;

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::fnv1a64;
use crate::tensor::Tensor;

/// Static facts about an environment instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvInfo {
    pub n_agents: usize,
    pub action_count: usize,
    pub obs_dim: usize,
    pub state_shape: Vec<usize>,
    pub subgoal_count: usize,
    /// T: the last pre-action step counter value at which an action is
    /// still accepted. An episode therefore spans at most T+1 steps.
    pub max_steps: usize,
}

/// Outcome of one agent step.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// Next observation for the agent that acted.
    pub obs: Tensor,
    /// Local reward for the acting agent.
    pub reward: f64,
    pub done: bool,
    /// Subgoal indices whose achievement predicate fired on this step.
    pub achieved_subgoals: BTreeSet<usize>,
}

/// Fixed cyclic turn order over agent ids 0..n.
#[derive(Debug, Clone)]
pub struct AgentCursor {
    order: Vec<usize>,
    index: usize,
}

impl AgentCursor {
    pub fn new(n_agents: usize) -> Self {
        Self { order: (0..n_agents).collect(), index: 0 }
    }

    pub fn current(&self) -> usize {
        self.order[self.index]
    }

    pub fn advance(&mut self) {
        self.index = (self.index + 1) % self.order.len();
    }

    pub fn rewind(&mut self) {
        self.index = 0;
    }

    /// True when the next step starts a fresh cycle.
    pub fn at_cycle_start(&self) -> bool {
        self.index == 0
    }
}

/// Turn-based multi-agent environment.
pub trait Env {
    fn name(&self) -> &'static str;
    fn info(&self) -> EnvInfo;
    /// Canonical JSON of the construction config, used for replay hashes.
    fn config_json(&self) -> serde_json::Value;
    /// Deterministic for a given seed. Returns per-agent observations and
    /// the global state.
    fn reset(&mut self, seed: u64) -> (Vec<Tensor>, Tensor);
    /// `agent_id` must match the cursor. Advances the cursor.
    fn step(&mut self, agent_id: usize, action: usize) -> Result<StepResult>;
    fn observe(&self, agent_id: usize) -> Tensor;
    fn global_state(&self) -> Tensor;
    fn current_agent(&self) -> usize;
    fn is_done(&self) -> bool;
    fn render_ascii(&self) -> String;
}

/// Hash of an environment's canonical config JSON.
pub fn config_hash(env: &dyn Env) -> u64 {
    fnv1a64(env.config_json().to_string().as_bytes())
}

/// One line of a trajectory replay file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayRecord {
    pub seed: u64,
    pub agent_id: usize,
    pub action: usize,
}

/// A recorded action stream. A change of seed between consecutive records
/// (and the first record) marks an episode reset.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub env_name: String,
    pub config_hash: u64,
    pub records: Vec<ReplayRecord>,
}

impl Replay {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = format!(
            "# gmah-replay-1 env={} config={:016x}\n",
            self.env_name, self.config_hash
        );
        for r in &self.records {
            out.push_str(&format!("{},{},{}\n", r.seed, r.agent_id, r.action));
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Replay> {
        let text = std::fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Schema("empty replay file".into()))?;
        let rest = header
            .strip_prefix("# gmah-replay-1 env=")
            .ok_or_else(|| Error::Schema("bad replay header".into()))?;
        let (env_name, cfg) = rest
            .split_once(" config=")
            .ok_or_else(|| Error::Schema("replay header missing config hash".into()))?;
        let config_hash = u64::from_str_radix(cfg.trim(), 16)
            .map_err(|e| Error::Schema(format!("bad config hash: {e}")))?;
        let mut records = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let mut next = |what: &str| {
                parts
                    .next()
                    .ok_or_else(|| Error::Schema(format!("replay line {}: missing {what}", ln + 2)))
            };
            let seed = next("seed")?.trim().parse::<u64>().map_err(|e| {
                Error::Schema(format!("replay line {}: seed: {e}", ln + 2))
            })?;
            let agent_id = next("agent_id")?.trim().parse::<usize>().map_err(|e| {
                Error::Schema(format!("replay line {}: agent: {e}", ln + 2))
            })?;
            let action = next("action")?.trim().parse::<usize>().map_err(|e| {
                Error::Schema(format!("replay line {}: action: {e}", ln + 2))
            })?;
            records.push(ReplayRecord { seed, agent_id, action });
        }
        Ok(Replay { env_name: env_name.to_string(), config_hash, records })
    }
}

/// Everything observable about a replayed trajectory, hashed for comparison.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryDigest {
    pub steps: usize,
    pub hash: u64,
}

/// Re-run a replay against `env`, digesting every observation, reward and
/// done flag bit-exactly.
pub fn run_replay(env: &mut dyn Env, replay: &Replay) -> Result<TrajectoryDigest> {
    if replay.env_name != env.name() {
        return Err(Error::Schema(format!(
            "replay is for env {}, got {}",
            replay.env_name,
            env.name()
        )));
    }
    if replay.config_hash != config_hash(env) {
        return Err(Error::Schema("replay config hash does not match env".into()));
    }
    let mut bytes: Vec<u8> = Vec::new();
    let mut current_seed: Option<u64> = None;
    let mut steps = 0;
    for r in &replay.records {
        if current_seed != Some(r.seed) {
            let (obs, state) = env.reset(r.seed);
            for o in &obs {
                for v in &o.values {
                    bytes.extend_from_slice(&v.to_bits().to_le_bytes());
                }
            }
            for v in &state.values {
                bytes.extend_from_slice(&v.to_bits().to_le_bytes());
            }
            current_seed = Some(r.seed);
        }
        let res = env.step(r.agent_id, r.action)?;
        steps += 1;
        for v in &res.obs.values {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        bytes.extend_from_slice(&res.reward.to_bits().to_le_bytes());
        bytes.push(res.done as u8);
        for &g in &res.achieved_subgoals {
            bytes.push(g as u8);
        }
    }
    Ok(TrajectoryDigest { steps, hash: fnv1a64(&bytes) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cursor_cycles_in_order() {
        let mut c = AgentCursor::new(3);
        let seen: Vec<usize> = (0..7)
            .map(|_| {
                let a = c.current();
                c.advance();
                a
            })
            .collect();
        assert_eq!(seen, vec![0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn replay_file_round_trip() {
        let replay = Replay {
            env_name: "doorkey".into(),
            config_hash: 0xdead_beef_0123,
            records: vec![
                ReplayRecord { seed: 5, agent_id: 0, action: 2 },
                ReplayRecord { seed: 5, agent_id: 0, action: 0 },
                ReplayRecord { seed: 9, agent_id: 0, action: 1 },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.replay");
        replay.save(&path).unwrap();
        assert_eq!(Replay::load(&path).unwrap(), replay);
    }
}
