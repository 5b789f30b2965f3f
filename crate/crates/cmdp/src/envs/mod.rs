//! Gridworld benchmarks compiled to exact CMDPs.
//!
//! Two families share the movement core: `marsrover` (reach the goal while
//! limiting time spent on risky cells) and `box` (a pushable box whose
//! resting in a corner is the constrained cost). Both use four actions
//! `[Up, Down, Right, Left]` with a slip model: the intended direction with
//! probability `1 - slip`, each perpendicular direction with `slip / 2`.
//! Moves into walls or off the grid leave the position unchanged; in the box
//! variant, moving onto the box pushes it one cell in the same direction if
//! that cell is free, and otherwise the move fails like a wall.
//!
//! Stepping from the goal cell costs nothing on the objective and resets the
//! whole configuration (agent and, for the box variant, the box) to the
//! start; every other step costs 1. The constrained cost is 1 exactly on
//! risky cells (marsrover) or while the box sits in a corner — a cell with
//! at least two blocked neighbors (box).
//!
//! [`compile`] enumerates the reachable configurations breadth-first and
//! writes the exact kernel; [`env_step`] samples one transition with its own
//! movement code so the two routes can be checked against each other
//! statistically.

use crate::lp::{policy_from_occupancy, solve_cmdp_lp, OccupancyMeasure, PlanOutcome};
use crate::model::{Cmdp, ModelError, StationaryPolicy};
use ndarray::Array3;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

/// `(row, column)`, row 0 at the top.
pub type Cell = (usize, usize);

pub const N_ACTIONS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Up,
    Down,
    Right,
    Left,
}

pub const ACTIONS: [Action; N_ACTIONS] = [Action::Up, Action::Down, Action::Right, Action::Left];

impl Action {
    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Right => 2,
            Action::Left => 3,
        }
    }

    pub fn from_index(index: usize) -> Self {
        ACTIONS[index]
    }

    /// The two perpendicular directions, in a fixed order.
    fn perpendicular(self) -> [Action; 2] {
        match self {
            Action::Up | Action::Down => [Action::Right, Action::Left],
            Action::Right | Action::Left => [Action::Up, Action::Down],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridVariant {
    Marsrover,
    Box,
}

/// Declarative description of one gridworld.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub variant: GridVariant,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub walls: Vec<Cell>,
    pub start: Cell,
    pub goal: Cell,
    /// Marsrover only: cells carrying constrained cost 1.
    #[serde(default)]
    pub risky: Vec<Cell>,
    /// Box only: the box's initial cell.
    #[serde(default)]
    pub box_start: Option<Cell>,
    pub slip: f64,
    pub threshold: f64,
}

#[derive(Debug, Error)]
pub enum GridError {
    #[error("{what} {cell:?} is outside the {height}x{width} grid")]
    OutOfBounds {
        what: &'static str,
        cell: Cell,
        height: usize,
        width: usize,
    },
    #[error("{what} {cell:?} collides with a wall")]
    OnWall { what: &'static str, cell: Cell },
    #[error("start and goal must differ")]
    StartIsGoal,
    #[error("box start must differ from start and goal")]
    BoxStartCollides,
    #[error("slip must satisfy 0 <= slip < 1, got {0}")]
    BadSlip(f64),
    #[error("threshold must lie in [0, 1], got {0}")]
    BadThreshold(f64),
    #[error("marsrover layouts take risky cells, not a box")]
    UnexpectedBox,
    #[error("box layouts need box_start and take no risky cells")]
    MissingBox,
    #[error("goal is unreachable from start")]
    GoalUnreachable,
    #[error("compiled model is invalid: {0}")]
    Model(#[from] ModelError),
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), GridError> {
        let bounds = |what: &'static str, cell: Cell| {
            if cell.0 >= self.height || cell.1 >= self.width {
                Err(GridError::OutOfBounds {
                    what,
                    cell,
                    height: self.height,
                    width: self.width,
                })
            } else {
                Ok(())
            }
        };
        for &w in &self.walls {
            bounds("wall", w)?;
        }
        bounds("start", self.start)?;
        bounds("goal", self.goal)?;
        let is_wall = |c: Cell| self.walls.contains(&c);
        if is_wall(self.start) {
            return Err(GridError::OnWall {
                what: "start",
                cell: self.start,
            });
        }
        if is_wall(self.goal) {
            return Err(GridError::OnWall {
                what: "goal",
                cell: self.goal,
            });
        }
        if self.start == self.goal {
            return Err(GridError::StartIsGoal);
        }
        match self.variant {
            GridVariant::Marsrover => {
                if self.box_start.is_some() {
                    return Err(GridError::UnexpectedBox);
                }
                for &r in &self.risky {
                    bounds("risky cell", r)?;
                    if is_wall(r) {
                        return Err(GridError::OnWall {
                            what: "risky cell",
                            cell: r,
                        });
                    }
                }
            }
            GridVariant::Box => {
                if !self.risky.is_empty() {
                    return Err(GridError::MissingBox);
                }
                let Some(b) = self.box_start else {
                    return Err(GridError::MissingBox);
                };
                bounds("box start", b)?;
                if is_wall(b) {
                    return Err(GridError::OnWall {
                        what: "box start",
                        cell: b,
                    });
                }
                if b == self.start || b == self.goal {
                    return Err(GridError::BoxStartCollides);
                }
            }
        }
        if !(0.0..1.0).contains(&self.slip) {
            return Err(GridError::BadSlip(self.slip));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(GridError::BadThreshold(self.threshold));
        }
        // Coarse reachability: the goal must be reachable ignoring the box.
        let mut seen = vec![false; self.height * self.width];
        let mut queue = VecDeque::new();
        seen[self.start.0 * self.width + self.start.1] = true;
        queue.push_back(self.start);
        while let Some(c) = queue.pop_front() {
            if c == self.goal {
                return Ok(());
            }
            for action in ACTIONS {
                if let Some(n) = self.shift(c, action) {
                    if !self.is_wall(n) && !seen[n.0 * self.width + n.1] {
                        seen[n.0 * self.width + n.1] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        Err(GridError::GoalUnreachable)
    }

    fn is_wall(&self, cell: Cell) -> bool {
        self.walls.contains(&cell)
    }

    /// One cell in `action`'s direction, or `None` off the grid.
    fn shift(&self, cell: Cell, action: Action) -> Option<Cell> {
        let (r, c) = cell;
        let next = match action {
            Action::Up => (r.checked_sub(1)?, c),
            Action::Down => (r + 1, c),
            Action::Right => (r, c + 1),
            Action::Left => (r, c.checked_sub(1)?),
        };
        if next.0 >= self.height || next.1 >= self.width {
            None
        } else {
            Some(next)
        }
    }

    /// A cell with at least two blocked (wall or out-of-grid) neighbors.
    pub fn is_corner(&self, cell: Cell) -> bool {
        let mut blocked = 0;
        for action in ACTIONS {
            match self.shift(cell, action) {
                None => blocked += 1,
                Some(n) if self.is_wall(n) => blocked += 1,
                Some(_) => {}
            }
        }
        blocked >= 2
    }

    fn initial_env_state(&self) -> EnvState {
        EnvState {
            agent: self.start,
            box_pos: self.box_start,
        }
    }
}

/// One environment configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EnvState {
    pub agent: Cell,
    pub box_pos: Option<Cell>,
}

/// Deterministic movement resolution for one realized direction (compile
/// route).
fn resolve(spec: &GridSpec, state: EnvState, dir: Action) -> EnvState {
    let Some(target) = spec.shift(state.agent, dir) else {
        return state;
    };
    if spec.is_wall(target) {
        return state;
    }
    match state.box_pos {
        Some(b) if target == b => {
            let pushed = spec.shift(b, dir);
            match pushed {
                Some(p) if !spec.is_wall(p) => EnvState {
                    agent: target,
                    box_pos: Some(p),
                },
                _ => state,
            }
        }
        _ => EnvState {
            agent: target,
            box_pos: state.box_pos,
        },
    }
}

/// Exact outcome distribution of `(state, action)` under the slip model.
fn outcome_distribution(spec: &GridSpec, state: EnvState, action: Action) -> Vec<(EnvState, f64)> {
    if state.agent == spec.goal {
        return vec![(spec.initial_env_state(), 1.0)];
    }
    let mut out: Vec<(EnvState, f64)> = Vec::with_capacity(3);
    let mut push = |s: EnvState, p: f64| {
        if p == 0.0 {
            return;
        }
        for entry in out.iter_mut() {
            if entry.0 == s {
                entry.1 += p;
                return;
            }
        }
        out.push((s, p));
    };
    push(resolve(spec, state, action), 1.0 - spec.slip);
    let [p1, p2] = action.perpendicular();
    push(resolve(spec, state, p1), spec.slip / 2.0);
    push(resolve(spec, state, p2), spec.slip / 2.0);
    out
}

fn state_costs(spec: &GridSpec, state: EnvState) -> [f64; 2] {
    let c0 = if state.agent == spec.goal { 0.0 } else { 1.0 };
    let c1 = match spec.variant {
        GridVariant::Marsrover => {
            if spec.risky.contains(&state.agent) {
                1.0
            } else {
                0.0
            }
        }
        GridVariant::Box => {
            let b = state.box_pos.expect("box variant carries a box");
            if spec.is_corner(b) {
                1.0
            } else {
                0.0
            }
        }
    };
    [c0, c1]
}

/// Samples one environment transition and returns the step's cost vector
/// `[objective, constrained]`.
///
/// This is the simulator: movement is decided here directly from the grid
/// geometry, independently of the kernel enumeration in [`compile`], and a
/// single uniform draw realizes the slip.
pub fn env_step<R: Rng + ?Sized>(
    spec: &GridSpec,
    state: EnvState,
    action: Action,
    rng: &mut R,
) -> (EnvState, [f64; 2]) {
    let costs = state_costs(spec, state);
    if state.agent == spec.goal {
        return (
            EnvState {
                agent: spec.start,
                box_pos: spec.box_start,
            },
            costs,
        );
    }
    let u: f64 = rng.gen();
    let dir = if u < 1.0 - spec.slip {
        action
    } else if u < 1.0 - spec.slip / 2.0 {
        action.perpendicular()[0]
    } else {
        action.perpendicular()[1]
    };

    // Direct movement logic, kept separate from the compiled route.
    let (r, c) = state.agent;
    let candidate = match dir {
        Action::Up => {
            if r == 0 {
                None
            } else {
                Some((r - 1, c))
            }
        }
        Action::Down => {
            if r + 1 >= spec.height {
                None
            } else {
                Some((r + 1, c))
            }
        }
        Action::Right => {
            if c + 1 >= spec.width {
                None
            } else {
                Some((r, c + 1))
            }
        }
        Action::Left => {
            if c == 0 {
                None
            } else {
                Some((r, c - 1))
            }
        }
    };
    let next = match candidate {
        None => state,
        Some(cell) if spec.walls.contains(&cell) => state,
        Some(cell) => match state.box_pos {
            Some(b) if cell == b => {
                let (br, bc) = b;
                let pushed = match dir {
                    Action::Up => {
                        if br == 0 {
                            None
                        } else {
                            Some((br - 1, bc))
                        }
                    }
                    Action::Down => {
                        if br + 1 >= spec.height {
                            None
                        } else {
                            Some((br + 1, bc))
                        }
                    }
                    Action::Right => {
                        if bc + 1 >= spec.width {
                            None
                        } else {
                            Some((br, bc + 1))
                        }
                    }
                    Action::Left => {
                        if bc == 0 {
                            None
                        } else {
                            Some((br, bc - 1))
                        }
                    }
                };
                match pushed {
                    Some(p) if !spec.walls.contains(&p) => EnvState {
                        agent: cell,
                        box_pos: Some(p),
                    },
                    _ => state,
                }
            }
            _ => EnvState {
                agent: cell,
                box_pos: state.box_pos,
            },
        },
    };
    (next, costs)
}

/// A gridworld compiled to an exact CMDP over its reachable configurations.
#[derive(Debug, Clone)]
pub struct CompiledGrid {
    spec: GridSpec,
    model: Cmdp,
    states: Vec<EnvState>,
    index: HashMap<EnvState, usize>,
}

/// Enumerates the configurations reachable from the start and writes the
/// exact kernel and cost tables. State 0 is the initial configuration.
pub fn compile(spec: &GridSpec) -> Result<CompiledGrid, GridError> {
    spec.validate()?;
    let initial = spec.initial_env_state();
    let mut states = vec![initial];
    let mut index = HashMap::new();
    index.insert(initial, 0usize);
    let mut frontier = 0usize;
    while frontier < states.len() {
        let state = states[frontier];
        frontier += 1;
        for action in ACTIONS {
            for (next, _) in outcome_distribution(spec, state, action) {
                if !index.contains_key(&next) {
                    index.insert(next, states.len());
                    states.push(next);
                }
            }
        }
    }

    let s_n = states.len();
    let mut transitions = Array3::zeros((s_n, N_ACTIONS, s_n));
    let mut costs = Array3::zeros((2, s_n, N_ACTIONS));
    for (s, &state) in states.iter().enumerate() {
        let [c0, c1] = state_costs(spec, state);
        for action in ACTIONS {
            let a = action.index();
            costs[[0, s, a]] = c0;
            costs[[1, s, a]] = c1;
            for (next, p) in outcome_distribution(spec, state, action) {
                transitions[[s, a, index[&next]]] += p;
            }
        }
    }
    let model = Cmdp::new(transitions, costs, vec![spec.threshold], 0)?;
    Ok(CompiledGrid {
        spec: spec.clone(),
        model,
        states,
        index,
    })
}

impl CompiledGrid {
    pub fn model(&self) -> &Cmdp {
        &self.model
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[EnvState] {
        &self.states
    }

    pub fn state(&self, index: usize) -> EnvState {
        self.states[index]
    }

    pub fn state_index(&self, state: &EnvState) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// One simulator step in flat-index space. Goes through [`env_step`],
    /// not the compiled kernel.
    pub fn sample_step<R: Rng + ?Sized>(
        &self,
        state: usize,
        action: usize,
        rng: &mut R,
    ) -> (usize, [f64; 2]) {
        let (next, costs) = env_step(&self.spec, self.states[state], Action::from_index(action), rng);
        let next_index = self.index[&next];
        (next_index, costs)
    }
}

/// The constrained optimum of a compiled layout.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub objective: f64,
    pub policy: StationaryPolicy,
    pub occupancy: OccupancyMeasure,
}

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("layout admits no feasible policy (phase-1 mass {phase1_objective})")]
    Infeasible { phase1_objective: f64 },
    #[error("planner failed numerically: {detail}")]
    Numerical { detail: String },
}

/// Solves the occupancy LP on the compiled model.
pub fn oracle_solution(grid: &CompiledGrid) -> Result<OracleSolution, OracleError> {
    match solve_cmdp_lp(grid.model()) {
        PlanOutcome::Optimal {
            occupancy,
            objective,
        } => Ok(OracleSolution {
            objective,
            policy: policy_from_occupancy(&occupancy),
            occupancy,
        }),
        PlanOutcome::Infeasible { phase1_objective } => {
            Err(OracleError::Infeasible { phase1_objective })
        }
        PlanOutcome::NumericalFailure { detail } => Err(OracleError::Numerical { detail }),
    }
}

/// 4x4 rover: a risky straight shot up the right edge versus a detour.
pub fn marsrover_4x4() -> GridSpec {
    GridSpec {
        variant: GridVariant::Marsrover,
        width: 4,
        height: 4,
        walls: vec![(1, 1), (2, 1)],
        start: (3, 3),
        goal: (0, 3),
        risky: vec![(1, 3), (2, 3)],
        box_start: None,
        slip: 0.1,
        threshold: 0.2,
    }
}

/// 8x8 rover: same trade-off, longer horizon, tighter threshold.
pub fn marsrover_8x8() -> GridSpec {
    GridSpec {
        variant: GridVariant::Marsrover,
        width: 8,
        height: 8,
        walls: vec![(2, 2), (3, 2), (4, 2)],
        start: (7, 7),
        goal: (0, 7),
        risky: vec![(3, 7), (4, 7)],
        box_start: None,
        slip: 0.1,
        threshold: 0.1,
    }
}

/// 6x6 box room: walls around the border, a pushable box, corner cost.
pub fn box_6x6() -> GridSpec {
    let mut walls = Vec::new();
    for c in 0..6 {
        walls.push((0, c));
        walls.push((5, c));
    }
    for r in 1..5 {
        walls.push((r, 0));
        walls.push((r, 5));
    }
    GridSpec {
        variant: GridVariant::Box,
        width: 6,
        height: 6,
        walls,
        start: (1, 1),
        goal: (4, 3),
        risky: vec![],
        box_start: Some((2, 2)),
        slip: 0.1,
        threshold: 0.6,
    }
}

pub fn builtin_names() -> &'static [&'static str] {
    &["marsrover4x4", "marsrover8x8", "box6x6"]
}

pub fn builtin(name: &str) -> Option<GridSpec> {
    match name {
        "marsrover4x4" => Some(marsrover_4x4()),
        "marsrover8x8" => Some(marsrover_8x8()),
        "box6x6" => Some(box_6x6()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{estimate_hitting_time, evaluate_policy};
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn builtin_layouts_validate_and_compile() {
        for name in builtin_names() {
            let spec = builtin(name).unwrap();
            spec.validate().unwrap();
            let grid = compile(&spec).unwrap();
            assert!(crate::model::validate(grid.model()).is_empty(), "{name}");
            assert_eq!(grid.model().initial_state(), 0);
            assert_eq!(grid.state(0), spec.initial_env_state());
        }
    }

    #[test]
    fn marsrover_4x4_has_fourteen_states() {
        let grid = compile(&marsrover_4x4()).unwrap();
        assert_eq!(grid.n_states(), 14); // 16 cells minus 2 walls
        assert_eq!(grid.model().n_actions(), 4);
    }

    #[test]
    fn marsrover_8x8_has_sixty_one_states() {
        let grid = compile(&marsrover_8x8()).unwrap();
        assert_eq!(grid.n_states(), 61); // 64 cells minus 3 walls
    }

    #[test]
    fn slip_splits_mass_between_intended_and_perpendicular() {
        let grid = compile(&marsrover_8x8()).unwrap();
        // (6,5) has all four neighbors free.
        let s = grid
            .state_index(&EnvState { agent: (6, 5), box_pos: None })
            .unwrap();
        let up = Action::Up.index();
        let at = |cell: Cell| {
            grid.state_index(&EnvState { agent: cell, box_pos: None })
                .unwrap()
        };
        let m = grid.model();
        assert_abs_diff_eq!(m.transition(s, up, at((5, 5))), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(m.transition(s, up, at((6, 6))), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(m.transition(s, up, at((6, 4))), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn blocked_moves_stay_put() {
        let grid = compile(&marsrover_4x4()).unwrap();
        let m = grid.model();
        let at = |cell: Cell| {
            grid.state_index(&EnvState { agent: cell, box_pos: None })
                .unwrap()
        };
        // (3,0), Left: intended leaves the grid (stay), perpendicular Down
        // also leaves (stay), perpendicular Up reaches (2,0).
        let s = at((3, 0));
        assert_abs_diff_eq!(m.transition(s, Action::Left.index(), s), 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(
            m.transition(s, Action::Left.index(), at((2, 0))),
            0.05,
            epsilon = 1e-12
        );
        // (1,0), Right: intended hits the wall (1,1); perpendiculars reach
        // (0,0) and (2,0).
        let s = at((1, 0));
        assert_abs_diff_eq!(m.transition(s, Action::Right.index(), s), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(
            m.transition(s, Action::Right.index(), at((0, 0))),
            0.05,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            m.transition(s, Action::Right.index(), at((2, 0))),
            0.05,
            epsilon = 1e-12
        );
    }

    #[test]
    fn goal_rows_cost_nothing_and_reset() {
        let grid = compile(&marsrover_4x4()).unwrap();
        let m = grid.model();
        let goal = grid
            .state_index(&EnvState { agent: (0, 3), box_pos: None })
            .unwrap();
        for a in 0..4 {
            assert_eq!(m.cost(0, goal, a), 0.0);
            assert_abs_diff_eq!(m.transition(goal, a, 0), 1.0, epsilon = 1e-12);
        }
        // Non-goal rows cost 1; risky rows carry the constrained cost.
        let risky = grid
            .state_index(&EnvState { agent: (1, 3), box_pos: None })
            .unwrap();
        for a in 0..4 {
            assert_eq!(m.cost(0, risky, a), 1.0);
            assert_eq!(m.cost(1, risky, a), 1.0);
        }
        let free = grid
            .state_index(&EnvState { agent: (3, 2), box_pos: None })
            .unwrap();
        for a in 0..4 {
            assert_eq!(m.cost(1, free, a), 0.0);
        }
    }

    #[test]
    fn box_push_moves_the_box_and_blocked_push_fails() {
        let grid = compile(&box_6x6()).unwrap();
        let m = grid.model();
        // Reach {agent (1,2), box (2,2)} by moving Right once from the start;
        // pushing Down moves both.
        let pushing = grid
            .state_index(&EnvState { agent: (1, 2), box_pos: Some((2, 2)) })
            .expect("one Right move from the start reaches this configuration");
        let after_push = grid
            .state_index(&EnvState { agent: (2, 2), box_pos: Some((3, 2)) })
            .unwrap();
        let down = Action::Down.index();
        assert_abs_diff_eq!(m.transition(pushing, down, after_push), 0.9, epsilon = 1e-12);

        // A push against the wall fails like a wall: start the layout with
        // the box already against the bottom border.
        let mut spec = box_6x6();
        spec.start = (3, 3);
        spec.box_start = Some((4, 3));
        spec.goal = (1, 1);
        let grid = compile(&spec).unwrap();
        let m = grid.model();
        let s0 = 0; // initial configuration
        let down = Action::Down.index();
        // Intended push is blocked (box would enter the border wall): stay.
        assert_abs_diff_eq!(m.transition(s0, down, s0), 0.9, epsilon = 1e-12);
        let right = grid
            .state_index(&EnvState { agent: (3, 4), box_pos: Some((4, 3)) })
            .unwrap();
        let left = grid
            .state_index(&EnvState { agent: (3, 2), box_pos: Some((4, 3)) })
            .unwrap();
        assert_abs_diff_eq!(m.transition(s0, down, right), 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(m.transition(s0, down, left), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn box_corner_carries_the_constrained_cost() {
        let mut spec = box_6x6();
        spec.box_start = Some((1, 1)); // interior corner (two border walls)
        spec.start = (3, 3);
        spec.goal = (4, 3);
        let grid = compile(&spec).unwrap();
        let m = grid.model();
        for a in 0..4 {
            assert_eq!(m.cost(1, 0, a), 1.0);
        }
        // Box in mid-field: no constrained cost.
        let grid = compile(&box_6x6()).unwrap();
        for a in 0..4 {
            assert_eq!(grid.model().cost(1, 0, a), 0.0);
        }
        // Corner predicate itself.
        let spec = box_6x6();
        assert!(spec.is_corner((1, 1)));
        assert!(spec.is_corner((4, 4)));
        assert!(!spec.is_corner((2, 2)));
        assert!(!spec.is_corner((1, 2)));
    }

    #[test]
    fn goal_reset_restores_the_box() {
        let grid = compile(&box_6x6()).unwrap();
        let m = grid.model();
        // Find any reachable state with the agent on the goal; its rows must
        // reset agent and box to the initial configuration.
        let goal_state = (0..grid.n_states())
            .find(|&s| grid.state(s).agent == grid.spec().goal)
            .expect("goal configurations are reachable");
        for a in 0..4 {
            assert_abs_diff_eq!(m.transition(goal_state, a, 0), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn compiled_layouts_are_communicating_under_uniform() {
        for name in ["marsrover4x4", "marsrover8x8", "box6x6"] {
            let grid = compile(&builtin(name).unwrap()).unwrap();
            let uniform = StationaryPolicy::uniform(grid.n_states(), N_ACTIONS);
            let h = estimate_hitting_time(grid.model(), &uniform)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(h.is_finite() && h > 0.0, "{name}: hitting time {h}");
        }
    }

    /// Deterministic route policies bracket the constrained optimum.
    #[test]
    fn oracle_lies_strictly_between_the_pure_routes() {
        let grid = compile(&marsrover_4x4()).unwrap();
        let m = grid.model();
        let n = grid.n_states();
        // Fast: climb the right edge. Safe: use column 2, then step right.
        let mut fast = Vec::with_capacity(n);
        let mut safe = Vec::with_capacity(n);
        for s in 0..n {
            let (r, c) = grid.state(s).agent;
            fast.push(if c < 3 { Action::Right } else { Action::Up }.index());
            safe.push(
                if r == 0 {
                    Action::Right
                } else if c < 2 {
                    Action::Right
                } else if c > 2 {
                    Action::Left
                } else {
                    Action::Up
                }
                .index(),
            );
        }
        let fast = StationaryPolicy::deterministic(&fast, 4);
        let safe = StationaryPolicy::deterministic(&safe, 4);
        let fast_eval = evaluate_policy(m, &fast).unwrap();
        let safe_eval = evaluate_policy(m, &safe).unwrap();
        assert!(fast_eval.loss[1] > 0.2, "the fast route must violate");
        assert!(safe_eval.loss[1] < 0.2, "the safe route must be feasible");
        let oracle = oracle_solution(&grid).unwrap();
        assert!(oracle.objective > fast_eval.loss[0] + 1e-3);
        assert!(oracle.objective < safe_eval.loss[0] - 1e-3);
        // Round trip: the extracted policy achieves the LP value.
        let check = evaluate_policy(m, &oracle.policy).unwrap();
        assert_abs_diff_eq!(check.loss[0], oracle.objective, epsilon = 1e-6);
        assert!(check.loss[1] <= 0.2 + 1e-6);
    }

    #[test]
    fn simulator_agrees_with_the_kernel_on_a_spot_check() {
        let grid = compile(&marsrover_4x4()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(321);
        let s = grid
            .state_index(&EnvState { agent: (3, 2), box_pos: None })
            .unwrap();
        let a = Action::Up.index();
        let n = 20_000usize;
        let mut freq = vec![0usize; grid.n_states()];
        for _ in 0..n {
            let (next, costs) = grid.sample_step(s, a, &mut rng);
            assert_eq!(costs, [1.0, 0.0]);
            freq[next] += 1;
        }
        for s2 in 0..grid.n_states() {
            let p = grid.model().transition(s, a, s2);
            let observed = freq[s2] as f64 / n as f64;
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            assert!(
                (observed - p).abs() <= 4.0 * sigma + 1e-9,
                "state {s2}: observed {observed}, expected {p}"
            );
        }
    }

    #[test]
    fn spec_validation_rejects_bad_layouts() {
        let mut spec = marsrover_4x4();
        spec.walls.push((3, 3));
        assert!(matches!(
            spec.validate(),
            Err(GridError::OnWall { what: "start", .. })
        ));
        let mut spec = marsrover_4x4();
        spec.slip = 1.0;
        assert!(matches!(spec.validate(), Err(GridError::BadSlip(_))));
        let mut spec = marsrover_4x4();
        spec.box_start = Some((2, 2));
        assert!(matches!(spec.validate(), Err(GridError::UnexpectedBox)));
        let mut spec = box_6x6();
        spec.box_start = None;
        assert!(matches!(spec.validate(), Err(GridError::MissingBox)));
        let mut spec = marsrover_4x4();
        spec.goal = (5, 0);
        assert!(matches!(spec.validate(), Err(GridError::OutOfBounds { .. })));
        // Sealing the goal off makes it unreachable.
        let mut spec = marsrover_4x4();
        spec.walls = vec![(0, 2), (1, 2), (1, 3)];
        spec.risky = vec![];
        assert!(matches!(spec.validate(), Err(GridError::GoalUnreachable)));
    }

    #[test]
    fn grid_spec_serializes_round_trip() {
        for name in builtin_names() {
            let spec = builtin(name).unwrap();
            let text = serde_json::to_string_pretty(&spec).unwrap();
            let back: GridSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(spec, back);
        }
    }
}
