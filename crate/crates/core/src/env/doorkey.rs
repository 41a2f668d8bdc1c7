//! Two-room 8x8 door/key environment with a partial 7x7 forward view.
//!
//! The agent starts in the left room together with a key. A locked door in
//! the dividing wall leads to the right room. Toggling the target box ends
//! the episode with a time-discounted reward; everything else pays zero.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::env::{AgentCursor, Env, EnvInfo, StepResult};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::tensor::Tensor;

pub const GRID: usize = 8;
pub const VIEW: usize = 7;
pub const OBS_DIM: usize = VIEW * VIEW * 3;
pub const ACTIONS: usize = 7;
pub const SUBGOALS: usize = 3;

pub const SUBGOAL_PICKUP_KEY: usize = 0;
pub const SUBGOAL_OPEN_DOOR: usize = 1;
pub const SUBGOAL_TOGGLE_BOX: usize = 2;

pub const ACT_FORWARD: usize = 0;
pub const ACT_LEFT: usize = 1;
pub const ACT_RIGHT: usize = 2;
pub const ACT_PICKUP: usize = 3;
pub const ACT_DROP: usize = 4;
pub const ACT_TOGGLE: usize = 5;
pub const ACT_DONE: usize = 6;

// Observation type channel ids; `INVISIBLE` is the largest, used to normalize.
const TYPE_EMPTY: f64 = 0.0;
const TYPE_WALL: f64 = 1.0;
const TYPE_DOOR: f64 = 2.0;
const TYPE_KEY: f64 = 3.0;
const TYPE_BOX: f64 = 4.0;
const TYPE_AGENT: f64 = 5.0;
const TYPE_INVISIBLE: f64 = 6.0;
const TYPE_MAX: f64 = 6.0;
const STATE_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Empty,
    Wall,
    DoorLocked,
    DoorOpen,
    Key,
    Box,
}

/// Facing direction: 0 up, 1 right, 2 down, 3 left.
fn dir_vec(dir: usize) -> (i64, i64) {
    match dir {
        0 => (0, -1),
        1 => (1, 0),
        2 => (0, 1),
        _ => (-1, 0),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DoorKeyConfig {
    pub t_max: usize,
}

impl Default for DoorKeyConfig {
    fn default() -> Self {
        Self { t_max: 64 }
    }
}

#[derive(Debug, Clone)]
pub struct DoorKey {
    grid: Vec<Cell>,
    agent: (usize, usize),
    dir: usize,
    carrying_key: bool,
    t: usize,
    t_max: usize,
    done: bool,
    box_toggled: bool,
    door_pos: (usize, usize),
    cursor: AgentCursor,
}

impl DoorKey {
    pub fn new(cfg: &DoorKeyConfig) -> Self {
        let mut env = Self {
            grid: vec![Cell::Empty; GRID * GRID],
            agent: (1, 1),
            dir: 0,
            carrying_key: false,
            t: 0,
            t_max: cfg.t_max,
            done: true,
            box_toggled: false,
            door_pos: (0, 0),
            cursor: AgentCursor::new(1),
        };
        env.reset(0);
        env
    }

    fn cell(&self, x: usize, y: usize) -> Cell {
        self.grid[y * GRID + x]
    }

    fn set_cell(&mut self, x: usize, y: usize, c: Cell) {
        self.grid[y * GRID + x] = c;
    }

    fn in_bounds(x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < GRID && (y as usize) < GRID
    }

    /// Cell directly ahead of the agent, if inside the grid.
    fn faced(&self) -> Option<(usize, usize)> {
        let (dx, dy) = dir_vec(self.dir);
        let (fx, fy) = (self.agent.0 as i64 + dx, self.agent.1 as i64 + dy);
        Self::in_bounds(fx, fy).then_some((fx as usize, fy as usize))
    }

    pub fn carrying_key(&self) -> bool {
        self.carrying_key
    }

    pub fn box_toggled(&self) -> bool {
        self.box_toggled
    }

    pub fn door_open(&self) -> bool {
        self.cell(self.door_pos.0, self.door_pos.1) == Cell::DoorOpen
    }

    pub fn agent_pos(&self) -> (usize, usize) {
        self.agent
    }

    pub fn step_counter(&self) -> usize {
        self.t
    }

    /// True when the agent and the box are on the same side of the wall.
    pub fn box_in_agent_room(&self) -> bool {
        let wall_x = self.door_pos.0;
        let box_pos = (0..GRID * GRID)
            .find(|&i| self.grid[i] == Cell::Box)
            .map(|i| (i % GRID, i / GRID));
        match box_pos {
            Some((bx, _)) => (bx < wall_x) == (self.agent.0 < wall_x),
            None => false,
        }
    }

    fn type_state_of(&self, cell: Cell) -> (f64, f64) {
        match cell {
            Cell::Empty => (TYPE_EMPTY, 0.0),
            Cell::Wall => (TYPE_WALL, 0.0),
            Cell::DoorLocked => (TYPE_DOOR, 1.0),
            Cell::DoorOpen => (TYPE_DOOR, 2.0),
            Cell::Key => (TYPE_KEY, 0.0),
            Cell::Box => (TYPE_BOX, 0.0),
        }
    }

    /// The 7x7 window ahead of the agent, agent at the bottom-center.
    /// Returns (type, state) per view cell before normalization.
    fn view_channels(&self) -> Vec<(f64, f64)> {
        // View cell -> world cell: depth grows toward the top of the view.
        let (fx, fy) = dir_vec(self.dir);
        let (rx, ry) = dir_vec((self.dir + 1) % 4);
        let world = |vx: usize, vy: usize| -> Option<(usize, usize)> {
            let depth = (VIEW - 1 - vy) as i64;
            let lateral = vx as i64 - (VIEW as i64 / 2);
            let wx = self.agent.0 as i64 + fx * depth + rx * lateral;
            let wy = self.agent.1 as i64 + fy * depth + ry * lateral;
            Self::in_bounds(wx, wy).then_some((wx as usize, wy as usize))
        };

        // Flood-fill visibility from the agent cell; walls and locked doors
        // are visible but opaque.
        let transparent = |vx: usize, vy: usize| -> bool {
            match world(vx, vy) {
                Some((wx, wy)) => !matches!(self.cell(wx, wy), Cell::Wall | Cell::DoorLocked),
                None => false,
            }
        };
        let mut visible = vec![false; VIEW * VIEW];
        let start = (VIEW / 2, VIEW - 1);
        visible[start.1 * VIEW + start.0] = true;
        let mut queue = vec![start];
        while let Some((vx, vy)) = queue.pop() {
            if !transparent(vx, vy) {
                continue;
            }
            let neighbors = [
                (vx as i64 - 1, vy as i64),
                (vx as i64 + 1, vy as i64),
                (vx as i64, vy as i64 - 1),
                (vx as i64, vy as i64 + 1),
            ];
            for (nx, ny) in neighbors {
                if nx < 0 || ny < 0 || nx as usize >= VIEW || ny as usize >= VIEW {
                    continue;
                }
                let idx = ny as usize * VIEW + nx as usize;
                if !visible[idx] {
                    visible[idx] = true;
                    queue.push((nx as usize, ny as usize));
                }
            }
        }

        let mut channels = Vec::with_capacity(VIEW * VIEW);
        for vy in 0..VIEW {
            for vx in 0..VIEW {
                if !visible[vy * VIEW + vx] {
                    channels.push((TYPE_INVISIBLE, 0.0));
                    continue;
                }
                match world(vx, vy) {
                    None => channels.push((TYPE_INVISIBLE, 0.0)),
                    Some((wx, wy)) => {
                        if (wx, wy) == self.agent {
                            channels.push((TYPE_AGENT, 0.0));
                        } else {
                            channels.push(self.type_state_of(self.cell(wx, wy)));
                        }
                    }
                }
            }
        }
        channels
    }

    /// Raw (unnormalized) type id at a view index; test hook.
    pub fn view_type_at(&self, vx: usize, vy: usize) -> f64 {
        self.view_channels()[vy * VIEW + vx].0
    }

    /// ASCII layout plus a JSON sidecar carrying agent pose and flags.
    pub fn dump(&self) -> (String, serde_json::Value) {
        let ascii = self.render_grid(true);
        let under = match self.cell(self.agent.0, self.agent.1) {
            Cell::DoorOpen => "door_open",
            _ => "empty",
        };
        let sidecar = serde_json::json!({
            "agent": [self.agent.0, self.agent.1],
            "dir": self.dir,
            "carrying_key": self.carrying_key,
            "t": self.t,
            "t_max": self.t_max,
            "done": self.done,
            "box_toggled": self.box_toggled,
            "door": [self.door_pos.0, self.door_pos.1],
            "under_agent": under,
        });
        (ascii, sidecar)
    }

    pub fn from_dump(ascii: &str, sidecar: &serde_json::Value) -> Result<Self> {
        let lines: Vec<&str> = ascii.lines().collect();
        if lines.len() != GRID {
            return Err(Error::Schema(format!("layout wants {GRID} lines, got {}", lines.len())));
        }
        let mut grid = vec![Cell::Empty; GRID * GRID];
        let mut agent_glyph: Option<((usize, usize), usize)> = None;
        for (y, line) in lines.iter().enumerate() {
            let glyphs: Vec<char> = line.chars().collect();
            if glyphs.len() != GRID {
                return Err(Error::Schema(format!("layout line {y} wants {GRID} glyphs")));
            }
            for (x, g) in glyphs.iter().enumerate() {
                grid[y * GRID + x] = match g {
                    '#' => Cell::Wall,
                    '.' => Cell::Empty,
                    'D' => Cell::DoorLocked,
                    'd' => Cell::DoorOpen,
                    'k' => Cell::Key,
                    'b' => Cell::Box,
                    '^' | '>' | 'v' | '<' => {
                        let dir = match g {
                            '^' => 0,
                            '>' => 1,
                            'v' => 2,
                            _ => 3,
                        };
                        agent_glyph = Some(((x, y), dir));
                        Cell::Empty
                    }
                    other => return Err(Error::Schema(format!("unknown glyph {other:?}"))),
                };
            }
        }
        let ((ax, ay), dir) =
            agent_glyph.ok_or_else(|| Error::Schema("layout has no agent glyph".into()))?;
        if sidecar["under_agent"].as_str() == Some("door_open") {
            grid[ay * GRID + ax] = Cell::DoorOpen;
        }
        let door = &sidecar["door"];
        let get = |v: &serde_json::Value, what: &str| {
            v.as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| Error::Schema(format!("sidecar missing {what}")))
        };
        Ok(Self {
            grid,
            agent: (ax, ay),
            dir,
            carrying_key: sidecar["carrying_key"].as_bool().unwrap_or(false),
            t: get(&sidecar["t"], "t")?,
            t_max: get(&sidecar["t_max"], "t_max")?,
            done: sidecar["done"].as_bool().unwrap_or(false),
            box_toggled: sidecar["box_toggled"].as_bool().unwrap_or(false),
            door_pos: (get(&door[0], "door.x")?, get(&door[1], "door.y")?),
            cursor: AgentCursor::new(1),
        })
    }

    fn render_grid(&self, with_agent: bool) -> String {
        let mut out = String::with_capacity(GRID * (GRID + 1));
        for y in 0..GRID {
            for x in 0..GRID {
                if with_agent && (x, y) == self.agent {
                    out.push(match self.dir {
                        0 => '^',
                        1 => '>',
                        2 => 'v',
                        _ => '<',
                    });
                    continue;
                }
                out.push(match self.cell(x, y) {
                    Cell::Empty => '.',
                    Cell::Wall => '#',
                    Cell::DoorLocked => 'D',
                    Cell::DoorOpen => 'd',
                    Cell::Key => 'k',
                    Cell::Box => 'b',
                });
            }
            out.push('\n');
        }
        out
    }
}

/// Rule-based subgoal predicates over a state transition.
pub fn dk_subgoal_achieved(goal: usize, prev: &DoorKey, next: &DoorKey) -> bool {
    match goal {
        SUBGOAL_PICKUP_KEY => !prev.carrying_key && next.carrying_key,
        SUBGOAL_OPEN_DOOR => !prev.door_open() && next.door_open(),
        SUBGOAL_TOGGLE_BOX => !prev.box_toggled && next.box_toggled,
        _ => false,
    }
}

impl Env for DoorKey {
    fn name(&self) -> &'static str {
        "doorkey"
    }

    fn info(&self) -> EnvInfo {
        EnvInfo {
            n_agents: 1,
            action_count: ACTIONS,
            obs_dim: OBS_DIM,
            state_shape: vec![GRID, GRID],
            subgoal_count: SUBGOALS,
            max_steps: self.t_max,
        }
    }

    fn config_json(&self) -> serde_json::Value {
        serde_json::json!({ "env": "doorkey", "t_max": self.t_max })
    }

    fn reset(&mut self, seed: u64) -> (Vec<Tensor>, Tensor) {
        let mut rng = RngStream::named(seed, "doorkey-reset");
        self.grid = vec![Cell::Empty; GRID * GRID];
        for i in 0..GRID {
            self.set_cell(i, 0, Cell::Wall);
            self.set_cell(i, GRID - 1, Cell::Wall);
            self.set_cell(0, i, Cell::Wall);
            self.set_cell(GRID - 1, i, Cell::Wall);
        }
        // Dividing wall in columns 2..=5 keeps both rooms nonempty.
        let wall_x = 2 + rng.below(4);
        for y in 1..GRID - 1 {
            self.set_cell(wall_x, y, Cell::Wall);
        }
        let door_y = 1 + rng.below(GRID - 2);
        self.set_cell(wall_x, door_y, Cell::DoorLocked);
        self.door_pos = (wall_x, door_y);

        let left_cells: Vec<(usize, usize)> = (1..wall_x)
            .flat_map(|x| (1..GRID - 1).map(move |y| (x, y)))
            .collect();
        let right_cells: Vec<(usize, usize)> = (wall_x + 1..GRID - 1)
            .flat_map(|x| (1..GRID - 1).map(move |y| (x, y)))
            .collect();

        self.agent = left_cells[rng.below(left_cells.len())];
        self.dir = rng.below(4);

        let mut key_pos = left_cells[rng.below(left_cells.len())];
        while key_pos == self.agent {
            key_pos = left_cells[rng.below(left_cells.len())];
        }
        self.set_cell(key_pos.0, key_pos.1, Cell::Key);

        // Box lands in the agent's room with probability 0.2.
        let same_room = rng.chance(0.2);
        let pool = if same_room { &left_cells } else { &right_cells };
        let mut box_pos = pool[rng.below(pool.len())];
        while box_pos == self.agent || self.cell(box_pos.0, box_pos.1) != Cell::Empty {
            box_pos = pool[rng.below(pool.len())];
        }
        self.set_cell(box_pos.0, box_pos.1, Cell::Box);

        self.carrying_key = false;
        self.t = 0;
        self.done = false;
        self.box_toggled = false;
        self.cursor.rewind();
        (vec![self.observe(0)], self.global_state())
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
        let mut reward = 0.0;
        match action {
            ACT_FORWARD => {
                if let Some((fx, fy)) = self.faced() {
                    if matches!(self.cell(fx, fy), Cell::Empty | Cell::DoorOpen) {
                        self.agent = (fx, fy);
                    }
                }
            }
            ACT_LEFT => self.dir = (self.dir + 3) % 4,
            ACT_RIGHT => self.dir = (self.dir + 1) % 4,
            ACT_PICKUP => {
                if let Some((fx, fy)) = self.faced() {
                    if self.cell(fx, fy) == Cell::Key && !self.carrying_key {
                        self.set_cell(fx, fy, Cell::Empty);
                        self.carrying_key = true;
                    }
                }
            }
            ACT_DROP => {
                if let Some((fx, fy)) = self.faced() {
                    if self.carrying_key && self.cell(fx, fy) == Cell::Empty && (fx, fy) != self.agent {
                        self.set_cell(fx, fy, Cell::Key);
                        self.carrying_key = false;
                    }
                }
            }
            ACT_TOGGLE => {
                if let Some((fx, fy)) = self.faced() {
                    match self.cell(fx, fy) {
                        Cell::DoorLocked if self.carrying_key => {
                            self.set_cell(fx, fy, Cell::DoorOpen);
                        }
                        Cell::Box => {
                            self.box_toggled = true;
                            let beta = 0.5;
                            reward = (1.0 - beta * self.t as f64 / self.t_max as f64) * 1.0;
                            self.done = true;
                        }
                        _ => {}
                    }
                }
            }
            _ => {} // Done: present in the action space, affects nothing.
        }

        if !self.done {
            self.t += 1;
            if self.t > self.t_max {
                self.done = true;
            }
        }

        let mut achieved = BTreeSet::new();
        for g in 0..SUBGOALS {
            if dk_subgoal_achieved(g, &prev, self) {
                achieved.insert(g);
            }
        }
        self.cursor.advance();
        Ok(StepResult { obs: self.observe(0), reward, done: self.done, achieved_subgoals: achieved })
    }

    fn observe(&self, _agent_id: usize) -> Tensor {
        let channels = self.view_channels();
        let mut values = Vec::with_capacity(OBS_DIM);
        for (ty, st) in channels {
            values.push(ty / TYPE_MAX);
            values.push(st / STATE_MAX);
            values.push(0.0);
        }
        Tensor { shape: vec![OBS_DIM], values }
    }

    fn global_state(&self) -> Tensor {
        // Codes: empty 0, wall 1, locked 2, open 3, key 4, box 5, agent 6.
        let mut values = Vec::with_capacity(GRID * GRID);
        for y in 0..GRID {
            for x in 0..GRID {
                let code = if (x, y) == self.agent {
                    6.0
                } else {
                    match self.cell(x, y) {
                        Cell::Empty => 0.0,
                        Cell::Wall => 1.0,
                        Cell::DoorLocked => 2.0,
                        Cell::DoorOpen => 3.0,
                        Cell::Key => 4.0,
                        Cell::Box => 5.0,
                    }
                };
                values.push(code / 6.0);
            }
        }
        Tensor { shape: vec![GRID, GRID], values }
    }

    fn current_agent(&self) -> usize {
        self.cursor.current()
    }

    fn is_done(&self) -> bool {
        self.done
    }

    fn render_ascii(&self) -> String {
        self.render_grid(true)
    }
}
