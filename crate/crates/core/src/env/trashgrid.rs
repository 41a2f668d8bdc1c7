//! 10x10 three-agent trash collection with small/large items, load limits,
//! splitting, and a 2x4 recycling station in the bottom-right corner.
//!
//! Agents act in a fixed cyclic order. Blocked moves cost a collision
//! penalty, every step costs a small time penalty, and dropping carried
//! units inside the station pays a time-discounted reward per unit.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::env::{AgentCursor, Env, EnvInfo, StepResult};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor;

pub const GRID: usize = 10;
pub const ACTIONS: usize = 6;
pub const SUBGOALS: usize = 4;
pub const MAX_LOAD: usize = 3;
pub const STEP_PENALTY: f64 = -0.01;
pub const COLLISION_PENALTY: f64 = -0.1;

pub const SUBGOAL_FIND_TRASH: usize = 0;
pub const SUBGOAL_PICKUP_SMALL: usize = 1;
pub const SUBGOAL_PICKUP_BIG: usize = 2;
pub const SUBGOAL_PUT_TRASH: usize = 3;

pub const ACT_FORWARD: usize = 0;
pub const ACT_LEFT: usize = 1;
pub const ACT_RIGHT: usize = 2;
pub const ACT_PICKUP: usize = 3;
pub const ACT_PUTDOWN: usize = 4;
pub const ACT_SPLIT: usize = 5;

// Station: 2 rows x 4 columns in the bottom-right corner.
pub const STATION_X0: usize = 6;
pub const STATION_Y0: usize = 8;

pub fn in_station(x: usize, y: usize) -> bool {
    x >= STATION_X0 && y >= STATION_Y0
}

/// The 8 station cells in row-major order.
pub fn station_cells() -> Vec<(usize, usize)> {
    (STATION_Y0..GRID)
        .flat_map(|y| (STATION_X0..GRID).map(move |x| (x, y)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrashKind {
    Small,
    Big,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrashSlot {
    pub x: usize,
    pub y: usize,
    pub kind: TrashKind,
    pub present: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: usize,
    pub y: usize,
    /// 0 up, 1 right, 2 down, 3 left.
    pub dir: usize,
    pub load: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrashGridConfig {
    pub n_agents: usize,
    pub small_items: usize,
    pub big_items: usize,
    pub t_max: usize,
}

impl Default for TrashGridConfig {
    fn default() -> Self {
        Self { n_agents: 3, small_items: 5, big_items: 5, t_max: 128 }
    }
}

#[derive(Debug, Clone)]
pub struct TrashGrid {
    cfg: TrashGridConfig,
    agents: Vec<AgentState>,
    slots: Vec<TrashSlot>,
    t: usize,
    done: bool,
    recycled: usize,
    cursor: AgentCursor,
}

fn dir_vec(dir: usize) -> (i64, i64) {
    match dir {
        0 => (0, -1),
        1 => (1, 0),
        2 => (0, 1),
        _ => (-1, 0),
    }
}

impl TrashGrid {
    pub fn new(cfg: &TrashGridConfig) -> Self {
        assert!(cfg.n_agents >= 1 && cfg.n_agents <= GRID);
        let mut env = Self {
            cfg: cfg.clone(),
            agents: Vec::new(),
            slots: Vec::new(),
            t: 0,
            done: true,
            recycled: 0,
            cursor: AgentCursor::new(cfg.n_agents),
        };
        env.reset(0);
        env
    }

    pub fn agent(&self, id: usize) -> &AgentState {
        &self.agents[id]
    }

    pub fn slots(&self) -> &[TrashSlot] {
        &self.slots
    }

    pub fn recycled(&self) -> usize {
        self.recycled
    }

    pub fn step_counter(&self) -> usize {
        self.t
    }

    /// Remaining trash mass counting a big item as one future small unit.
    pub fn outstanding_mass(&self) -> usize {
        let on_grid: usize = self.slots.iter().filter(|s| s.present).count();
        let carried: usize = self.agents.iter().map(|a| a.load).sum();
        on_grid + carried
    }

    fn faced(&self, id: usize) -> Option<(usize, usize)> {
        let a = &self.agents[id];
        let (dx, dy) = dir_vec(a.dir);
        let (fx, fy) = (a.x as i64 + dx, a.y as i64 + dy);
        (fx >= 0 && fy >= 0 && (fx as usize) < GRID && (fy as usize) < GRID)
            .then_some((fx as usize, fy as usize))
    }

    fn slot_at(&self, x: usize, y: usize) -> Option<usize> {
        self.slots.iter().position(|s| s.present && s.x == x && s.y == y)
    }

    fn agent_at(&self, x: usize, y: usize) -> Option<usize> {
        self.agents.iter().position(|a| a.x == x && a.y == y)
    }

    /// True when the acting agent faces a cell holding present trash.
    fn faces_trash(&self, id: usize) -> bool {
        self.faced(id).map(|(x, y)| self.slot_at(x, y).is_some()).unwrap_or(false)
    }

    fn all_clear(&self) -> bool {
        self.slots.iter().all(|s| !s.present) && self.agents.iter().all(|a| a.load == 0)
    }

    pub fn dump(&self) -> (String, serde_json::Value) {
        let ascii = self.render_ascii();
        let sidecar = serde_json::json!({
            "agents": self.agents.iter().map(|a| serde_json::json!({
                "x": a.x, "y": a.y, "dir": a.dir, "load": a.load,
            })).collect::<Vec<_>>(),
            "slots": self.slots.iter().map(|s| serde_json::json!({
                "x": s.x, "y": s.y,
                "kind": match s.kind { TrashKind::Small => "small", TrashKind::Big => "big" },
                "present": s.present,
            })).collect::<Vec<_>>(),
            "t": self.t,
            "t_max": self.cfg.t_max,
            "done": self.done,
            "recycled": self.recycled,
        });
        (ascii, sidecar)
    }

    pub fn from_dump(cfg: &TrashGridConfig, sidecar: &serde_json::Value) -> Result<Self> {
        let field = |v: &serde_json::Value, what: &str| {
            v.as_u64().map(|x| x as usize).ok_or_else(|| Error::Schema(format!("sidecar: {what}")))
        };
        let agents = sidecar["agents"]
            .as_array()
            .ok_or_else(|| Error::Schema("sidecar: agents".into()))?
            .iter()
            .map(|a| {
                Ok(AgentState {
                    x: field(&a["x"], "agent.x")?,
                    y: field(&a["y"], "agent.y")?,
                    dir: field(&a["dir"], "agent.dir")?,
                    load: field(&a["load"], "agent.load")?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let slots = sidecar["slots"]
            .as_array()
            .ok_or_else(|| Error::Schema("sidecar: slots".into()))?
            .iter()
            .map(|s| {
                Ok(TrashSlot {
                    x: field(&s["x"], "slot.x")?,
                    y: field(&s["y"], "slot.y")?,
                    kind: match s["kind"].as_str() {
                        Some("small") => TrashKind::Small,
                        Some("big") => TrashKind::Big,
                        _ => return Err(Error::Schema("slot.kind".into())),
                    },
                    present: s["present"].as_bool().unwrap_or(false),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cfg: cfg.clone(),
            agents,
            slots,
            t: field(&sidecar["t"], "t")?,
            done: sidecar["done"].as_bool().unwrap_or(false),
            recycled: field(&sidecar["recycled"], "recycled")?,
            cursor: AgentCursor::new(cfg.n_agents),
        })
    }
}

/// Rule-based subgoal predicates for one agent transition.
pub fn tg_subgoal_achieved(agent_id: usize, goal: usize, prev: &TrashGrid, next: &TrashGrid) -> bool {
    match goal {
        SUBGOAL_FIND_TRASH => !prev.faces_trash(agent_id) && next.faces_trash(agent_id),
        SUBGOAL_PICKUP_SMALL => next.agents[agent_id].load > prev.agents[agent_id].load,
        SUBGOAL_PICKUP_BIG => prev
            .slots
            .iter()
            .zip(&next.slots)
            .any(|(p, n)| p.present && n.present && p.kind == TrashKind::Big && n.kind == TrashKind::Small),
        SUBGOAL_PUT_TRASH => next.recycled > prev.recycled,
        _ => false,
    }
}

impl Env for TrashGrid {
    fn name(&self) -> &'static str {
        "trashgrid"
    }

    fn info(&self) -> EnvInfo {
        let k = self.cfg.small_items + self.cfg.big_items;
        EnvInfo {
            n_agents: self.cfg.n_agents,
            action_count: ACTIONS,
            obs_dim: self.cfg.n_agents * 4 + k * 3 + 8 * 2,
            state_shape: vec![GRID, GRID],
            subgoal_count: SUBGOALS,
            max_steps: self.cfg.t_max,
        }
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::json!({
            "env": "trashgrid",
            "n_agents": self.cfg.n_agents,
            "small_items": self.cfg.small_items,
            "big_items": self.cfg.big_items,
            "t_max": self.cfg.t_max,
        })
    }

    fn reset(&mut self, seed: u64) -> (Vec<Tensor>, Tensor) {
        let mut rng = RngStream::named(seed, "trashgrid-reset");
        // Agents on the top row, facing down, distinct columns.
        let mut cols: Vec<usize> = Vec::new();
        while cols.len() < self.cfg.n_agents {
            let c = rng.below(GRID);
            if !cols.contains(&c) {
                cols.push(c);
            }
        }
        self.agents = cols
            .iter()
            .map(|&c| AgentState { x: c, y: 0, dir: 2, load: 0 })
            .collect();

        // Trash on distinct empty cells outside the station and off the
        // agents' row-0 cells.
        let mut free: Vec<(usize, usize)> = (0..GRID)
            .flat_map(|y| (0..GRID).map(move |x| (x, y)))
            .filter(|&(x, y)| !in_station(x, y) && self.agent_at(x, y).is_none())
            .collect();
        self.slots = Vec::with_capacity(self.cfg.small_items + self.cfg.big_items);
        for i in 0..self.cfg.small_items + self.cfg.big_items {
            let pick = rng.below(free.len());
            let (x, y) = free.swap_remove(pick);
            let kind = if i < self.cfg.small_items { TrashKind::Small } else { TrashKind::Big };
            self.slots.push(TrashSlot { x, y, kind, present: true });
        }

        self.t = 0;
        self.done = false;
        self.recycled = 0;
        self.cursor = AgentCursor::new(self.cfg.n_agents);
        let obs = (0..self.cfg.n_agents).map(|i| self.observe(i)).collect();
        (obs, self.global_state())
    }

    fn step(&mut self, agent_id: usize, action: usize) -> Result<StepResult> {
        if self.done {
            return Err(Error::Lifecycle("step after episode end".into()));
        }
        if agent_id != self.cursor.current() {
            return Err(Error::Ordering(format!(
                "agent {agent_id} acted on agent {}'s turn",
                self.cursor.current()
            )));
        }
        if action >= ACTIONS {
            return Err(Error::Domain(format!("action {action} out of range 0..{ACTIONS}")));
        }

        let prev = self.clone();
        let mut reward = STEP_PENALTY;
        match action {
            ACT_FORWARD => {
                let target = self.faced(agent_id);
                let blocked = match target {
                    None => true, // grid edge
                    Some((x, y)) => self.agent_at(x, y).is_some() || self.slot_at(x, y).is_some(),
                };
                if blocked {
                    reward += COLLISION_PENALTY;
                } else if let Some((x, y)) = target {
                    self.agents[agent_id].x = x;
                    self.agents[agent_id].y = y;
                }
            }
            ACT_LEFT => self.agents[agent_id].dir = (self.agents[agent_id].dir + 3) % 4,
            ACT_RIGHT => self.agents[agent_id].dir = (self.agents[agent_id].dir + 1) % 4,
            ACT_PICKUP => {
                if let Some((x, y)) = self.faced(agent_id) {
                    if let Some(slot) = self.slot_at(x, y) {
                        if self.slots[slot].kind == TrashKind::Small
                            && self.agents[agent_id].load < MAX_LOAD
                        {
                            self.slots[slot].present = false;
                            self.agents[agent_id].load += 1;
                        }
                    }
                }
            }
            ACT_PUTDOWN => {
                let a = &self.agents[agent_id];
                if in_station(a.x, a.y) && a.load > 0 {
                    let units = a.load;
                    let beta = 0.5;
                    reward += units as f64 * (1.0 - beta * self.t as f64 / self.cfg.t_max as f64);
                    self.recycled += units;
                    self.agents[agent_id].load = 0;
                }
            }
            _ => {
                // Split: a faced big item becomes one small item in place.
                if let Some((x, y)) = self.faced(agent_id) {
                    if let Some(slot) = self.slot_at(x, y) {
                        if self.slots[slot].kind == TrashKind::Big {
                            self.slots[slot].kind = TrashKind::Small;
                        }
                    }
                }
            }
        }

        if self.all_clear() {
            self.done = true;
        }
        if !self.done {
            self.t += 1;
            if self.t > self.cfg.t_max {
                self.done = true;
            }
        }

        let mut achieved = BTreeSet::new();
        for g in 0..SUBGOALS {
            if tg_subgoal_achieved(agent_id, g, &prev, self) {
                achieved.insert(g);
            }
        }
        self.cursor.advance();
        Ok(StepResult {
            obs: self.observe(agent_id),
            reward,
            done: self.done,
            achieved_subgoals: achieved,
        })
    }

    fn observe(&self, agent_id: usize) -> Tensor {
        let span = (GRID - 1) as f64;
        let me = &self.agents[agent_id];
        let mut v = Vec::with_capacity(self.info().obs_dim);
        v.push(me.x as f64 / span);
        v.push(me.y as f64 / span);
        v.push(me.load as f64 / MAX_LOAD as f64);
        v.push(me.dir as f64 / 3.0);
        for (i, a) in self.agents.iter().enumerate() {
            if i == agent_id {
                continue;
            }
            v.push((a.x as f64 - me.x as f64 + span) / (2.0 * span));
            v.push((a.y as f64 - me.y as f64 + span) / (2.0 * span));
            v.push(a.load as f64 / MAX_LOAD as f64);
            v.push(a.dir as f64 / 3.0);
        }
        // Fixed slot order keeps the layout stable as items are consumed;
        // a removed slot zeroes out, type 0 is the "gone" sentinel.
        for s in &self.slots {
            if s.present {
                v.push(s.x as f64 / span);
                v.push(s.y as f64 / span);
                v.push(match s.kind {
                    TrashKind::Small => 1.0 / 2.0,
                    TrashKind::Big => 2.0 / 2.0,
                });
            } else {
                v.extend_from_slice(&[0.0, 0.0, 0.0]);
            }
        }
        for (x, y) in station_cells() {
            v.push(x as f64 / span);
            v.push(y as f64 / span);
        }
        Tensor { shape: vec![v.len()], values: v }
    }

    fn global_state(&self) -> Tensor {
        // Codes: empty 0, agent 1, small 2, big 3, station 4. Agents mask
        // whatever they stand on.
        let mut codes = vec![0.0f64; GRID * GRID];
        for (x, y) in station_cells() {
            codes[y * GRID + x] = 4.0;
        }
        for s in &self.slots {
            if s.present {
                codes[s.y * GRID + s.x] = match s.kind {
                    TrashKind::Small => 2.0,
                    TrashKind::Big => 3.0,
                };
            }
        }
        for a in &self.agents {
            codes[a.y * GRID + a.x] = 1.0;
        }
        Tensor { shape: vec![GRID, GRID], values: codes.iter().map(|c| c / 4.0).collect() }
    }

    fn current_agent(&self) -> usize {
        self.cursor.current()
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn render_ascii(&self) -> String {
        let mut glyphs = vec!['.'; GRID * GRID];
        for (x, y) in station_cells() {
            glyphs[y * GRID + x] = '_';
        }
        for s in &self.slots {
            if s.present {
                glyphs[s.y * GRID + s.x] = match s.kind {
                    TrashKind::Small => 's',
                    TrashKind::Big => 'B',
                };
            }
        }
        for (i, a) in self.agents.iter().enumerate() {
            glyphs[a.y * GRID + a.x] = char::from_digit(i as u32, 10).unwrap();
        }
        let mut out = String::with_capacity(GRID * (GRID + 1));
        for y in 0..GRID {
            for x in 0..GRID {
                out.push(glyphs[y * GRID + x]);
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fresh() -> TrashGrid {
        TrashGrid::new(&TrashGridConfig::default())
    }

    /// Clear the board and place entities by hand.
    fn crafted(agents: Vec<AgentState>, slots: Vec<TrashSlot>) -> TrashGrid {
        let mut env = TrashGrid::new(&TrashGridConfig {
            n_agents: agents.len(),
            small_items: slots.iter().filter(|s| s.kind == TrashKind::Small).count(),
            big_items: slots.iter().filter(|s| s.kind == TrashKind::Big).count(),
            t_max: 128,
        });
        env.agents = agents;
        env.slots = slots;
        env.t = 0;
        env.done = false;
        env.recycled = 0;
        env.cursor = AgentCursor::new(env.cfg.n_agents);
        env
    }

    #[test]
    fn reset_places_five_small_five_big_off_station() {
        let mut env = fresh();
        for seed in 0..1000u64 {
            env.reset(seed);
            let small = env.slots().iter().filter(|s| s.present && s.kind == TrashKind::Small).count();
            let big = env.slots().iter().filter(|s| s.present && s.kind == TrashKind::Big).count();
            assert_eq!((small, big), (5, 5), "seed {seed}");
            assert!(env.slots().iter().all(|s| !in_station(s.x, s.y)), "seed {seed}");
            // Distinct cells, no overlap with agents.
            let mut cells: Vec<(usize, usize)> = env.slots().iter().map(|s| (s.x, s.y)).collect();
            cells.sort_unstable();
            cells.dedup();
            assert_eq!(cells.len(), 10, "seed {seed}");
            for a in 0..3 {
                assert!(env.slot_at(env.agent(a).x, env.agent(a).y).is_none());
            }
        }
    }

    #[test]
    fn agents_start_top_row_facing_down() {
        let mut env = fresh();
        for seed in 0..100u64 {
            env.reset(seed);
            for i in 0..3 {
                assert_eq!(env.agent(i).y, 0);
                assert_eq!(env.agent(i).dir, 2);
                assert_eq!(env.agent(i).load, 0);
            }
        }
    }

    #[test]
    fn same_seed_same_layout() {
        let mut a = fresh();
        let mut b = fresh();
        assert_eq!(a.reset(77).0, b.reset(77).0);
        assert_eq!(a.render_ascii(), b.render_ascii());
    }

    #[test]
    fn obs_dim_is_58_and_normalized() {
        let mut env = fresh();
        env.reset(5);
        for i in 0..3 {
            let obs = env.observe(i);
            assert_eq!(obs.len(), 58);
            assert!(obs.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn drop_three_units_at_start_pays_about_three() {
        let mut env = crafted(
            vec![AgentState { x: 7, y: 8, dir: 2, load: 3 }],
            vec![TrashSlot { x: 0, y: 0, kind: TrashKind::Small, present: true }],
        );
        let res = env.step(0, ACT_PUTDOWN).unwrap();
        assert!((res.reward - (3.0 + STEP_PENALTY)).abs() < 1e-12);
        assert_eq!(env.agent(0).load, 0);
        assert_eq!(env.recycled(), 3);
        assert!(res.achieved_subgoals.contains(&SUBGOAL_PUT_TRASH));
    }

    #[test]
    fn putdown_outside_station_is_noop() {
        let mut env = crafted(
            vec![AgentState { x: 2, y: 2, dir: 2, load: 2 }],
            vec![TrashSlot { x: 0, y: 0, kind: TrashKind::Small, present: true }],
        );
        let res = env.step(0, ACT_PUTDOWN).unwrap();
        assert_eq!(res.reward, STEP_PENALTY);
        assert_eq!(env.agent(0).load, 2);
    }

    #[test]
    fn pickup_at_full_load_only_costs_step() {
        let mut env = crafted(
            vec![AgentState { x: 2, y: 2, dir: 1, load: 3 }],
            vec![TrashSlot { x: 3, y: 2, kind: TrashKind::Small, present: true }],
        );
        let res = env.step(0, ACT_PICKUP).unwrap();
        assert_eq!(res.reward, STEP_PENALTY);
        assert_eq!(env.agent(0).load, 3);
        assert!(env.slots()[0].present);
        assert!(res.achieved_subgoals.is_empty());
    }

    #[test]
    fn split_turns_big_into_small_in_place() {
        let mut env = crafted(
            vec![AgentState { x: 2, y: 2, dir: 1, load: 0 }],
            vec![TrashSlot { x: 3, y: 2, kind: TrashKind::Big, present: true }],
        );
        let res = env.step(0, ACT_SPLIT).unwrap();
        assert_eq!(env.slots()[0].kind, TrashKind::Small);
        assert_eq!((env.slots()[0].x, env.slots()[0].y), (3, 2));
        assert!(res.achieved_subgoals.contains(&SUBGOAL_PICKUP_BIG));
        // Splitting a small item does nothing.
        let res = env.step(0, ACT_SPLIT).unwrap();
        assert_eq!(env.slots()[0].kind, TrashKind::Small);
        assert!(res.achieved_subgoals.is_empty());
    }

    #[test]
    fn collisions_penalized_without_movement() {
        // Wall, other agent, and trash each block.
        let mut env = crafted(
            vec![
                AgentState { x: 0, y: 0, dir: 3, load: 0 },
                AgentState { x: 1, y: 0, dir: 3, load: 0 },
            ],
            vec![TrashSlot { x: 2, y: 0, kind: TrashKind::Small, present: true }],
        );
        let res = env.step(0, ACT_FORWARD).unwrap(); // into the left edge
        assert!((res.reward - (STEP_PENALTY + COLLISION_PENALTY)).abs() < 1e-12);
        assert_eq!((env.agent(0).x, env.agent(0).y), (0, 0));
        let res = env.step(1, ACT_FORWARD).unwrap(); // into agent 0
        assert!((res.reward - (STEP_PENALTY + COLLISION_PENALTY)).abs() < 1e-12);
        let mut env2 = crafted(
            vec![AgentState { x: 1, y: 0, dir: 1, load: 0 }],
            vec![TrashSlot { x: 2, y: 0, kind: TrashKind::Small, present: true }],
        );
        let res = env2.step(0, ACT_FORWARD).unwrap(); // into trash
        assert!((res.reward - (STEP_PENALTY + COLLISION_PENALTY)).abs() < 1e-12);
    }

    #[test]
    fn find_trash_fires_once_on_turning_toward_trash() {
        let mut env = crafted(
            vec![AgentState { x: 2, y: 2, dir: 0, load: 0 }],
            vec![TrashSlot { x: 3, y: 2, kind: TrashKind::Small, present: true }],
        );
        // Facing up: no trash ahead. Turn right: now facing the trash.
        let res = env.step(0, ACT_RIGHT).unwrap();
        assert!(res.achieved_subgoals.contains(&SUBGOAL_FIND_TRASH));
        // Staying turned toward it does not re-fire.
        let res = env.step(0, ACT_PICKUP).unwrap();
        assert!(!res.achieved_subgoals.contains(&SUBGOAL_FIND_TRASH));
        assert!(res.achieved_subgoals.contains(&SUBGOAL_PICKUP_SMALL));
    }

    #[test]
    fn idle_turn_achieves_nothing() {
        let mut env = fresh();
        env.reset(9);
        // Rotating in place on the top row faces empty cells.
        let res = env.step(0, ACT_LEFT).unwrap();
        let faced_trash = res.achieved_subgoals.contains(&SUBGOAL_FIND_TRASH);
        // Except possibly FindTrash if trash happens to be adjacent; other
        // predicates must be quiet.
        assert!(res
            .achieved_subgoals
            .iter()
            .all(|&g| g == SUBGOAL_FIND_TRASH && faced_trash));
    }

    #[test]
    fn mass_conserved_every_step() {
        let mut env = fresh();
        let mut rng = RngStream::named(4, "tg-mass");
        for ep in 0..5u64 {
            env.reset(ep);
            let initial = env.outstanding_mass() + env.recycled();
            while !env.is_done() {
                let agent = env.current_agent();
                env.step(agent, rng.below(ACTIONS)).unwrap();
                assert_eq!(env.outstanding_mass() + env.recycled(), initial);
            }
        }
    }

    #[test]
    fn reward_bounds_hold_under_random_play() {
        let mut env = fresh();
        let mut rng = RngStream::named(8, "tg-bounds");
        for ep in 0..5u64 {
            env.reset(ep);
            while !env.is_done() {
                let agent = env.current_agent();
                let res = env.step(agent, rng.below(ACTIONS)).unwrap();
                assert!(res.reward >= -0.11 - 1e-12 && res.reward <= 3.0 + 1e-12);
            }
        }
    }

    #[test]
    fn global_state_counts_at_reset() {
        let mut env = fresh();
        env.reset(13);
        let s = env.global_state();
        let count = |code: f64| s.values.iter().filter(|&&v| (v - code / 4.0).abs() < 1e-12).count();
        assert_eq!(count(1.0), 3, "agents");
        assert_eq!(count(2.0) + count(3.0), 10, "trash");
        assert_eq!(count(4.0), 8, "station");
    }

    #[test]
    fn global_state_stable_under_rotation() {
        let mut env = fresh();
        env.reset(21);
        let before = env.global_state();
        env.step(0, ACT_LEFT).unwrap();
        env.step(1, ACT_RIGHT).unwrap();
        assert_eq!(before, env.global_state());
    }

    #[test]
    fn episode_ends_when_everything_recycled() {
        let mut env = crafted(
            vec![AgentState { x: 7, y: 8, dir: 2, load: 1 }],
            vec![TrashSlot { x: 0, y: 0, kind: TrashKind::Small, present: false }],
        );
        let res = env.step(0, ACT_PUTDOWN).unwrap();
        assert!(res.done);
        assert!(env.is_done());
    }

    #[test]
    fn pickup_zeroes_exactly_its_slots() {
        let mut env = crafted(
            vec![AgentState { x: 2, y: 2, dir: 1, load: 0 }],
            vec![
                TrashSlot { x: 3, y: 2, kind: TrashKind::Small, present: true },
                TrashSlot { x: 5, y: 5, kind: TrashKind::Big, present: true },
            ],
        );
        let before = env.observe(0);
        env.step(0, ACT_PICKUP).unwrap();
        let after = env.observe(0);
        // Slot 0 occupies obs indices 4..7 (single agent: no other-agent block).
        assert_eq!(&after.values[4..7], &[0.0, 0.0, 0.0]);
        assert_ne!(&before.values[4..7], &[0.0, 0.0, 0.0]);
        // Slot 1 unchanged; load component changed.
        assert_eq!(&before.values[7..10], &after.values[7..10]);
        assert!(after.values[2] > before.values[2]);
    }

    #[test]
    fn out_of_turn_rejected() {
        let mut env = fresh();
        env.reset(2);
        assert!(matches!(env.step(1, ACT_LEFT), Err(Error::Ordering(_))));
    }

    #[test]
    fn dump_round_trip() {
        let mut env = fresh();
        env.reset(31);
        env.step(0, ACT_FORWARD).unwrap();
        env.step(1, ACT_LEFT).unwrap();
        let (ascii, sidecar) = env.dump();
        let parsed = TrashGrid::from_dump(&env.cfg, &sidecar).unwrap();
        let (ascii2, sidecar2) = parsed.dump();
        assert_eq!(ascii, ascii2);
        assert_eq!(sidecar, sidecar2);
    }
}
