use serde::{Deserialize, Serialize};

use super::{Team, TwoTeamGame};
use crate::error::{Error, Result};

/// Per-agent moves. Moving off the grid is a no-op.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMove {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Stay = 4,
}

impl GridMove {
    pub const COUNT: usize = 5;

    fn delta(index: usize) -> (i64, i64) {
        match index {
            0 => (-1, 0),
            1 => (1, 0),
            2 => (0, -1),
            3 => (0, 1),
            _ => (0, 0),
        }
    }
}

/// Configuration of the 2v2 keep-away grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub side: usize,
    #[serde(default = "GridConfig::default_horizon")]
    pub horizon: usize,
    #[serde(default = "GridConfig::default_gamma")]
    pub gamma: f64,
    /// (row, col); defaults to the center cell.
    #[serde(default)]
    pub target: Option<(usize, usize)>,
    /// Start cells for Pro0, Pro1, Ant0, Ant1; defaults to the four corners
    /// with Pro on the left column.
    #[serde(default)]
    pub starts: Option<[(usize, usize); 4]>,
    /// Chebyshev radius beyond which opponents are masked from observations.
    #[serde(default)]
    pub observation_radius: Option<usize>,
}

impl GridConfig {
    fn default_horizon() -> usize {
        20
    }
    fn default_gamma() -> f64 {
        0.9
    }

    pub fn new(side: usize) -> Self {
        Self {
            side,
            horizon: Self::default_horizon(),
            gamma: Self::default_gamma(),
            target: None,
            starts: None,
            observation_radius: None,
        }
    }
}

/// Two Pro and two Ant agents race for a fixed target cell.
///
/// Moves are simultaneous. Collisions: an agent that stays (or was bounced)
/// keeps its cell; otherwise the lowest global index (Pro0, Pro1, Ant0, Ant1)
/// claims a contested cell and the losers stay; two agents trying to swap
/// cells both bounce. Reward after the move is +1 per Pro agent and −1 per Ant
/// agent on the target, clipped to [−1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GridKeepaway {
    side: usize,
    cells: usize,
    horizon: usize,
    gamma: f64,
    target: usize,
    start: usize,
    radius: Option<usize>,
    counts: [usize; 2],
}

pub fn grid_keepaway_game(config: &GridConfig) -> Result<GridKeepaway> {
    let side = config.side;
    if !(3..=7).contains(&side) {
        return Err(Error::Config(format!("grid side {side} outside [3,7]")));
    }
    if config.horizon == 0 || config.horizon > 50 {
        return Err(Error::Config(format!("grid horizon {} outside [1,50]", config.horizon)));
    }
    if !(0.0..1.0).contains(&config.gamma) {
        return Err(Error::Config(format!("gamma {} outside [0,1)", config.gamma)));
    }
    let in_grid = |&(r, c): &(usize, usize)| r < side && c < side;
    let target = config.target.unwrap_or((side / 2, side / 2));
    if !in_grid(&target) {
        return Err(Error::Config(format!("target {target:?} outside the grid")));
    }
    let starts = config
        .starts
        .unwrap_or([(0, 0), (side - 1, 0), (0, side - 1), (side - 1, side - 1)]);
    if !starts.iter().all(in_grid) {
        return Err(Error::Config("start cell outside the grid".into()));
    }
    let cells: Vec<usize> = starts.iter().map(|&(r, c)| r * side + c).collect();
    for i in 0..4 {
        if cells[i + 1..].contains(&cells[i]) {
            return Err(Error::Config("start cells must be distinct".into()));
        }
    }
    let game = GridKeepaway {
        side,
        cells: side * side,
        horizon: config.horizon,
        gamma: config.gamma,
        target: target.0 * side + target.1,
        start: 0,
        radius: config.observation_radius,
        counts: [GridMove::COUNT, GridMove::COUNT],
    };
    let start = game.encode(&[cells[0], cells[1], cells[2], cells[3]]);
    Ok(GridKeepaway { start, ..game })
}

impl GridKeepaway {
    pub fn side(&self) -> usize {
        self.side
    }

    /// Cell index (row * side + col) of the target.
    pub fn target_cell(&self) -> usize {
        self.target
    }

    /// Packs the four agent cells (Pro0, Pro1, Ant0, Ant1) into a state index.
    pub fn encode(&self, positions: &[usize; 4]) -> usize {
        positions.iter().rev().fold(0, |acc, &p| acc * self.cells + p)
    }

    pub fn decode(&self, mut state: usize) -> [usize; 4] {
        let mut positions = [0; 4];
        for p in positions.iter_mut() {
            *p = state % self.cells;
            state /= self.cells;
        }
        positions
    }

    fn row_col(&self, cell: usize) -> (i64, i64) {
        ((cell / self.side) as i64, (cell % self.side) as i64)
    }

    fn moved(&self, cell: usize, action: usize) -> usize {
        let (r, c) = self.row_col(cell);
        let (dr, dc) = GridMove::delta(action);
        let (nr, nc) = (r + dr, c + dc);
        let side = self.side as i64;
        if nr < 0 || nc < 0 || nr >= side || nc >= side {
            cell
        } else {
            (nr * side + nc) as usize
        }
    }

    /// Applies one simultaneous move with collision resolution.
    pub fn resolve(&self, positions: [usize; 4], actions: [usize; 4]) -> [usize; 4] {
        let mut proposed = [0; 4];
        for k in 0..4 {
            proposed[k] = self.moved(positions[k], actions[k]);
        }
        // Swap-through: both bounce.
        for i in 0..4 {
            for j in i + 1..4 {
                if proposed[i] == positions[j]
                    && proposed[j] == positions[i]
                    && proposed[i] != positions[i]
                {
                    proposed[i] = positions[i];
                    proposed[j] = positions[j];
                }
            }
        }
        loop {
            let mut changed = false;
            for cell_owner in 0..4 {
                let cell = proposed[cell_owner];
                let claimants: Vec<usize> = (0..4).filter(|&k| proposed[k] == cell).collect();
                if claimants.len() < 2 {
                    continue;
                }
                let keeper = claimants
                    .iter()
                    .copied()
                    .find(|&k| positions[k] == cell)
                    .unwrap_or(claimants[0]);
                for k in claimants {
                    if k != keeper {
                        proposed[k] = positions[k];
                        changed = true;
                    }
                }
            }
            if !changed {
                return proposed;
            }
        }
    }

    fn occupancy_reward(&self, positions: &[usize; 4]) -> f64 {
        let mut r: f64 = 0.0;
        for (k, &p) in positions.iter().enumerate() {
            if p == self.target {
                r += if k < 2 { 1.0 } else { -1.0 };
            }
        }
        r.clamp(-1.0, 1.0)
    }

    fn next_positions(&self, state: usize, pro: &[usize], ant: &[usize]) -> [usize; 4] {
        self.resolve(self.decode(state), [pro[0], pro[1], ant[0], ant[1]])
    }

    fn normalized(&self, v: i64) -> f64 {
        v as f64 / (self.side - 1) as f64
    }

    fn toward_target(&self, cell: usize) -> usize {
        let (r, c) = self.row_col(cell);
        let (tr, tc) = self.row_col(self.target);
        let (dr, dc) = (tr - r, tc - c);
        if dr == 0 && dc == 0 {
            GridMove::Stay as usize
        } else if dc.abs() >= dr.abs() {
            if dc > 0 {
                GridMove::Right as usize
            } else {
                GridMove::Left as usize
            }
        } else if dr > 0 {
            GridMove::Down as usize
        } else {
            GridMove::Up as usize
        }
    }
}

impl TwoTeamGame for GridKeepaway {
    fn pro_action_counts(&self) -> &[usize] {
        &self.counts
    }
    fn ant_action_counts(&self) -> &[usize] {
        &self.counts
    }
    fn gamma(&self) -> f64 {
        self.gamma
    }
    fn horizon(&self) -> usize {
        self.horizon
    }
    fn reward_bound(&self) -> f64 {
        1.0
    }
    fn n_states(&self) -> usize {
        self.cells.pow(4)
    }
    fn initial_distribution(&self) -> Vec<(usize, f64)> {
        vec![(self.start, 1.0)]
    }
    fn transition(&self, state: usize, pro: &[usize], ant: &[usize]) -> Vec<(usize, f64)> {
        vec![(self.encode(&self.next_positions(state, pro, ant)), 1.0)]
    }
    fn reward(&self, state: usize, pro: &[usize], ant: &[usize]) -> f64 {
        self.occupancy_reward(&self.next_positions(state, pro, ant))
    }
    fn is_deterministic(&self) -> bool {
        true
    }
    fn observation_dim(&self, _team: Team) -> usize {
        12
    }
    /// Own position, teammate position, both opponents' positions, target
    /// offset, then one visibility flag per opponent. Coordinates are scaled
    /// by 1/(side − 1); masked opponents read as zeros with flag 0.
    fn observe(&self, state: usize, team: Team, agent: usize) -> Vec<f64> {
        let positions = self.decode(state);
        let (mine, opp) = match team {
            Team::Pro => ([positions[0], positions[1]], [positions[2], positions[3]]),
            Team::Ant => ([positions[2], positions[3]], [positions[0], positions[1]]),
        };
        let own = mine[agent];
        let mate = mine[1 - agent];
        let (or, oc) = self.row_col(own);
        let mut obs = Vec::with_capacity(12);
        for cell in [own, mate] {
            let (r, c) = self.row_col(cell);
            obs.push(self.normalized(r));
            obs.push(self.normalized(c));
        }
        let mut flags = [1.0, 1.0];
        for (k, cell) in opp.into_iter().enumerate() {
            let (r, c) = self.row_col(cell);
            let visible = self
                .radius
                .map_or(true, |rad| (r - or).abs().max((c - oc).abs()) <= rad as i64);
            if visible {
                obs.push(self.normalized(r));
                obs.push(self.normalized(c));
            } else {
                obs.extend([0.0, 0.0]);
                flags[k] = 0.0;
            }
        }
        let (tr, tc) = self.row_col(self.target);
        obs.push(self.normalized(tr - or));
        obs.push(self.normalized(tc - oc));
        obs.extend(flags);
        obs
    }
    fn state_dim(&self) -> usize {
        10
    }
    fn state_features(&self, state: usize) -> Vec<f64> {
        let positions = self.decode(state);
        let mut f = Vec::with_capacity(10);
        for cell in positions.into_iter().chain([self.target]) {
            let (r, c) = self.row_col(cell);
            f.push(self.normalized(r));
            f.push(self.normalized(c));
        }
        f
    }
    /// Every agent walks toward the target along the axis with the larger
    /// gap, horizontal first on ties, and stays once there.
    fn scripted_action(&self, state: usize, team: Team) -> Vec<usize> {
        let positions = self.decode(state);
        let mine = match team {
            Team::Pro => [positions[0], positions[1]],
            Team::Ant => [positions[2], positions[3]],
        };
        mine.iter().map(|&cell| self.toward_target(cell)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{reset, step, JointAction};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn game(side: usize) -> GridKeepaway {
        grid_keepaway_game(&GridConfig::new(side)).unwrap()
    }

    const UP: usize = 0;
    const DOWN: usize = 1;
    const LEFT: usize = 2;
    const RIGHT: usize = 3;
    const STAY: usize = 4;

    #[test]
    fn config_bounds_are_enforced() {
        assert!(grid_keepaway_game(&GridConfig::new(2)).is_err());
        assert!(grid_keepaway_game(&GridConfig::new(8)).is_err());
        let mut c = GridConfig::new(5);
        c.horizon = 51;
        assert!(grid_keepaway_game(&c).is_err());
        c.horizon = 50;
        assert!(grid_keepaway_game(&c).is_ok());
    }

    #[test]
    fn pro_on_target_scores_plus_one() {
        let g = game(3);
        // Pro0 at (0,1) moves down onto the center target (1,1).
        let s = g.encode(&[1, 6, 2, 8]);
        assert_eq!(g.reward(s, &[DOWN, STAY], &[STAY, STAY]), 1.0);
    }

    #[test]
    fn nobody_on_target_scores_zero() {
        let g = game(3);
        let s = g.encode(&[0, 6, 2, 8]);
        assert_eq!(g.reward(s, &[STAY, STAY], &[STAY, STAY]), 0.0);
    }

    #[test]
    fn ant_on_target_scores_minus_one() {
        let g = game(3);
        let s = g.encode(&[0, 6, 5, 8]);
        assert_eq!(g.reward(s, &[STAY, STAY], &[LEFT, STAY]), -1.0);
    }

    #[test]
    fn contested_cell_goes_to_lower_index() {
        let g = game(3);
        // Pro0 at (0,1) moving down and Ant0 at (1,0) moving right both want (1,1).
        let out = g.resolve([1, 6, 3, 8], [DOWN, STAY, RIGHT, STAY]);
        assert_eq!(out, [4, 6, 3, 8]);
        // Pro1 (index 1) beats Ant1 (index 3).
        let out = g.resolve([0, 5, 2, 7], [STAY, LEFT, STAY, UP]);
        assert_eq!(out, [0, 4, 2, 7]);
    }

    #[test]
    fn stayer_keeps_its_cell() {
        let g = game(3);
        // Ant0 sits on (1,1); Pro0 tries to move in and bounces.
        let out = g.resolve([1, 6, 4, 8], [DOWN, STAY, STAY, STAY]);
        assert_eq!(out, [1, 6, 4, 8]);
    }

    #[test]
    fn swaps_bounce_both() {
        let g = game(3);
        let out = g.resolve([0, 6, 1, 8], [RIGHT, STAY, LEFT, STAY]);
        assert_eq!(out, [0, 6, 1, 8]);
    }

    #[test]
    fn bounce_chains_resolve() {
        let g = game(3);
        // Pro0 (0,0)->(0,1) wins over Ant0 (0,2)->(0,1); Ant0 stays, so Ant1
        // moving into (0,2) from (1,2) must bounce too.
        let out = g.resolve([0, 6, 2, 5], [RIGHT, STAY, LEFT, UP]);
        assert_eq!(out, [1, 6, 2, 5]);
    }

    #[test]
    fn off_grid_moves_are_noops() {
        let g = game(3);
        assert_eq!(g.resolve([0, 6, 2, 8], [UP, LEFT, RIGHT, DOWN]), [0, 6, 2, 8]);
    }

    #[test]
    fn scripted_bot_walks_to_target() {
        let g = game(5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut s = reset(&g, 1, &mut rng);
        for _ in 0..10 {
            let a = JointAction::new(
                g.scripted_action(s.state, Team::Pro),
                vec![STAY, STAY],
            );
            s = step(&g, &s, &a, &mut rng).unwrap().next_state;
        }
        let p = g.decode(s.state);
        assert!(p[0] == g.target_cell() || p[1] == g.target_cell());
    }

    #[test]
    fn radius_masks_far_opponents() {
        let mut c = GridConfig::new(5);
        c.observation_radius = Some(1);
        let g = grid_keepaway_game(&c).unwrap();
        let obs = g.observe(g.initial_distribution()[0].0, Team::Pro, 0);
        assert_eq!(obs.len(), 12);
        assert_eq!(&obs[10..], &[0.0, 0.0]);
        let full = game(5);
        let obs = full.observe(full.initial_distribution()[0].0, Team::Pro, 0);
        assert_eq!(&obs[10..], &[1.0, 1.0]);
    }

    proptest! {
        #[test]
        fn positions_stay_distinct_and_inside(
            side in 3usize..=7,
            cells in proptest::collection::vec(0usize..49, 4),
            actions in proptest::collection::vec(0usize..5, 4),
        ) {
            let g = game(side);
            let n = side * side;
            let mut pos = [cells[0] % n, cells[1] % n, cells[2] % n, cells[3] % n];
            // Make the start configuration distinct.
            for i in 1..4 {
                while pos[..i].contains(&pos[i]) {
                    pos[i] = (pos[i] + 1) % n;
                }
            }
            let out = g.resolve(pos, [actions[0], actions[1], actions[2], actions[3]]);
            for i in 0..4 {
                prop_assert!(out[i] < n);
                for j in i + 1..4 {
                    prop_assert_ne!(out[i], out[j]);
                }
            }
            let r = g.reward(g.encode(&pos), &actions[..2], &actions[2..]);
            prop_assert!((-1.0..=1.0).contains(&r));
        }
    }
}
