//! Grid-world navigation dynamics.
//!
//! Cells are addressed by `(row, col)` with row 0 at the top. Moves that would
//! leave the grid or enter an obstacle leave the robot where it is.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Navigation actions. The declaration order is the canonical tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(idx: usize) -> Option<Action> {
        Self::ALL.get(idx).copied()
    }

    /// Perpendicular action obtained by turning counter-clockwise.
    pub fn left_of(self) -> Action {
        match self {
            Action::Up => Action::Left,
            Action::Left => Action::Down,
            Action::Down => Action::Right,
            Action::Right => Action::Up,
        }
    }

    /// Perpendicular action obtained by turning clockwise.
    pub fn right_of(self) -> Action {
        match self {
            Action::Up => Action::Right,
            Action::Right => Action::Down,
            Action::Down => Action::Left,
            Action::Left => Action::Up,
        }
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }
}

/// Environment layout: bounds, obstacles, the two goal cells and the
/// perpendicular-slip probability used during demonstrations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub obstacles: BTreeSet<Cell>,
    pub preferred_goal: Cell,
    pub non_preferred_goal: Cell,
    #[serde(default = "default_noise")]
    pub noise_prob: f64,
}

fn default_noise() -> f64 {
    0.2
}

impl Default for GridSpec {
    /// The 8×8 study layout.
    fn default() -> Self {
        Self {
            width: 8,
            height: 8,
            obstacles: BTreeSet::new(),
            preferred_goal: Cell::new(3, 6),
            non_preferred_goal: Cell::new(4, 1),
            noise_prob: 0.2,
        }
    }
}

impl GridSpec {
    pub fn new(
        width: usize,
        height: usize,
        preferred_goal: Cell,
        non_preferred_goal: Cell,
    ) -> Result<Self> {
        let spec = Self {
            width,
            height,
            obstacles: BTreeSet::new(),
            preferred_goal,
            non_preferred_goal,
            noise_prob: 0.2,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_obstacles(mut self, obstacles: impl IntoIterator<Item = Cell>) -> Result<Self> {
        self.obstacles.extend(obstacles);
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise(mut self, noise_prob: f64) -> Result<Self> {
        self.noise_prob = noise_prob;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidGrid(
                "grid dimensions must be positive".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_prob) {
            return Err(Error::InvalidGrid(format!(
                "noise_prob {} outside [0, 1]",
                self.noise_prob
            )));
        }
        for &cell in &self.obstacles {
            if !self.in_bounds(cell) {
                return Err(Error::InvalidGrid(format!("obstacle {cell} out of bounds")));
            }
        }
        for goal in self.goals() {
            if !self.in_bounds(goal) {
                return Err(Error::InvalidGrid(format!("goal {goal} out of bounds")));
            }
            if self.obstacles.contains(&goal) {
                return Err(Error::InvalidGrid(format!("goal {goal} is an obstacle")));
            }
        }
        if self.preferred_goal == self.non_preferred_goal {
            return Err(Error::InvalidGrid("goals must be distinct".into()));
        }
        Ok(())
    }

    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn is_free(&self, cell: Cell) -> bool {
        self.in_bounds(cell) && !self.obstacles.contains(&cell)
    }

    pub fn goals(&self) -> [Cell; 2] {
        [self.preferred_goal, self.non_preferred_goal]
    }

    pub fn is_goal(&self, cell: Cell) -> bool {
        cell == self.preferred_goal || cell == self.non_preferred_goal
    }

    fn check_free(&self, cell: Cell) -> Result<()> {
        if self.is_free(cell) {
            Ok(())
        } else {
            Err(Error::InvalidCell(cell))
        }
    }

    /// Noise-free transition with bump-and-stay at walls and obstacles.
    pub fn apply_action(&self, s: Cell, a: Action) -> Result<Cell> {
        self.check_free(s)?;
        Ok(self.neighbor(s, a))
    }

    /// Like [`apply_action`](Self::apply_action) for a cell already known to be free.
    pub(crate) fn neighbor(&self, s: Cell, a: Action) -> Cell {
        let (dr, dc) = a.delta();
        let row = s.row as isize + dr;
        let col = s.col as isize + dc;
        if row < 0 || col < 0 {
            return s;
        }
        let next = Cell::new(row as usize, col as usize);
        if self.is_free(next) {
            next
        } else {
            s
        }
    }

    /// Executes `a` but slips to either perpendicular direction with
    /// probability `noise_prob / 2` each.
    pub fn step_noisy<R: Rng + ?Sized>(&self, s: Cell, a: Action, rng: &mut R) -> Result<Cell> {
        self.check_free(s)?;
        let executed = self.perturb(a, rng.random::<f64>());
        Ok(self.neighbor(s, executed))
    }

    /// Maps a uniform draw `u ∈ [0, 1)` onto the executed action.
    pub fn perturb(&self, a: Action, u: f64) -> Action {
        let half = self.noise_prob / 2.0;
        if u < half {
            a.left_of()
        } else if u < self.noise_prob {
            a.right_of()
        } else {
            a
        }
    }

    /// All in-bounds, non-obstacle cells in row-major order.
    pub fn enumerate_free_states(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|row| (0..self.width).map(move |col| Cell::new(row, col)))
            .filter(|&c| !self.obstacles.contains(&c))
            .collect()
    }

    /// Free cells other than the two goals, row-major.
    pub fn non_goal_states(&self) -> Vec<Cell> {
        self.enumerate_free_states()
            .into_iter()
            .filter(|&c| !self.is_goal(c))
            .collect()
    }

    pub fn state_index(&self) -> StateIndex {
        StateIndex::new(self)
    }
}

/// Dense numbering of the free states, shared by the learning and planning code.
#[derive(Debug, Clone)]
pub struct StateIndex {
    width: usize,
    cells: Vec<Cell>,
    lookup: Vec<Option<usize>>,
}

impl StateIndex {
    pub fn new(spec: &GridSpec) -> Self {
        let cells = spec.enumerate_free_states();
        let mut lookup = vec![None; spec.width * spec.height];
        for (i, c) in cells.iter().enumerate() {
            lookup[c.row * spec.width + c.col] = Some(i);
        }
        Self {
            width: spec.width,
            cells,
            lookup,
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, idx: usize) -> Cell {
        self.cells[idx]
    }

    pub fn index(&self, cell: Cell) -> Option<usize> {
        if cell.col >= self.width {
            return None;
        }
        self.lookup
            .get(cell.row * self.width + cell.col)
            .copied()
            .flatten()
    }

    pub fn require(&self, cell: Cell) -> Result<usize> {
        self.index(cell).ok_or(Error::InvalidCell(cell))
    }
}

/// Noise-free successor table over state indices. Cells in `absorbing`
/// self-loop under every action.
#[derive(Debug, Clone)]
pub struct TransitionTable {
    next: Vec<[usize; 4]>,
}

impl TransitionTable {
    pub fn new(spec: &GridSpec, index: &StateIndex, absorbing: &BTreeSet<Cell>) -> Self {
        let next = index
            .cells()
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                if absorbing.contains(&c) {
                    [i; 4]
                } else {
                    Action::ALL.map(|a| {
                        index
                            .index(spec.neighbor(c, a))
                            .expect("neighbor of a free cell is free")
                    })
                }
            })
            .collect();
        Self { next }
    }

    pub fn next(&self, s: usize, a: Action) -> usize {
        self.next[s][a.index()]
    }

    pub fn successors(&self, s: usize) -> &[usize; 4] {
        &self.next[s]
    }

    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn three_by_three() -> GridSpec {
        GridSpec::new(3, 3, Cell::new(0, 0), Cell::new(2, 2)).unwrap()
    }

    #[test]
    fn interior_move() {
        let g = three_by_three();
        assert_eq!(
            g.apply_action(Cell::new(1, 1), Action::Up).unwrap(),
            Cell::new(0, 1)
        );
    }

    #[test]
    fn boundary_bump_stays() {
        let g = three_by_three();
        assert_eq!(
            g.apply_action(Cell::new(0, 1), Action::Up).unwrap(),
            Cell::new(0, 1)
        );
        assert_eq!(
            g.apply_action(Cell::new(2, 1), Action::Down).unwrap(),
            Cell::new(2, 1)
        );
        assert_eq!(
            g.apply_action(Cell::new(1, 0), Action::Left).unwrap(),
            Cell::new(1, 0)
        );
        assert_eq!(
            g.apply_action(Cell::new(1, 2), Action::Right).unwrap(),
            Cell::new(1, 2)
        );
    }

    #[test]
    fn obstacle_bump_stays() {
        let g = three_by_three().with_obstacles([Cell::new(1, 0)]).unwrap();
        assert_eq!(
            g.apply_action(Cell::new(1, 1), Action::Left).unwrap(),
            Cell::new(1, 1)
        );
    }

    #[test]
    fn invalid_start_rejected() {
        let g = three_by_three().with_obstacles([Cell::new(1, 0)]).unwrap();
        assert!(matches!(
            g.apply_action(Cell::new(1, 0), Action::Up),
            Err(Error::InvalidCell(_))
        ));
        assert!(g.apply_action(Cell::new(3, 0), Action::Up).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(g.step_noisy(Cell::new(0, 7), Action::Up, &mut rng).is_err());
    }

    #[test]
    fn zero_noise_matches_deterministic() {
        let g = three_by_three().with_noise(0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for s in g.enumerate_free_states() {
            for a in Action::ALL {
                for _ in 0..20 {
                    assert_eq!(
                        g.step_noisy(s, a, &mut rng).unwrap(),
                        g.apply_action(s, a).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn forced_perpendicular_left_branch() {
        let g = three_by_three();
        let executed = g.perturb(Action::Up, 0.05);
        assert_eq!(executed, Action::Left);
        assert_eq!(
            g.apply_action(Cell::new(1, 1), executed).unwrap(),
            Cell::new(1, 0)
        );
        assert_eq!(g.perturb(Action::Up, 0.15), Action::Right);
        assert_eq!(g.perturb(Action::Up, 0.5), Action::Up);
    }

    #[test]
    fn perpendicular_frequency_near_noise_prob() {
        let g = GridSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let s = Cell::new(4, 4);
        let n = 100_000;
        let perpendicular = (0..n)
            .filter(|_| {
                let next = g.step_noisy(s, Action::Up, &mut rng).unwrap();
                next.row == s.row
            })
            .count();
        let freq = perpendicular as f64 / n as f64;
        assert!((0.19..=0.21).contains(&freq), "frequency {freq}");
    }

    #[test]
    fn enumerate_full_grid() {
        let g = GridSpec::new(2, 2, Cell::new(0, 0), Cell::new(1, 1)).unwrap();
        assert_eq!(
            g.enumerate_free_states(),
            vec![
                Cell::new(0, 0),
                Cell::new(0, 1),
                Cell::new(1, 0),
                Cell::new(1, 1)
            ]
        );
    }

    #[test]
    fn enumerate_excludes_obstacles() {
        let g = GridSpec::new(2, 2, Cell::new(0, 0), Cell::new(1, 1))
            .unwrap()
            .with_obstacles([Cell::new(0, 1)])
            .unwrap();
        assert_eq!(
            g.enumerate_free_states(),
            vec![Cell::new(0, 0), Cell::new(1, 0), Cell::new(1, 1)]
        );
    }

    #[test]
    fn default_layout_has_64_states() {
        assert_eq!(GridSpec::default().enumerate_free_states().len(), 64);
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(0, 3, Cell::new(0, 0), Cell::new(0, 1)).is_err());
        assert!(GridSpec::new(3, 3, Cell::new(0, 0), Cell::new(0, 0)).is_err());
        assert!(GridSpec::new(3, 3, Cell::new(0, 0), Cell::new(3, 0)).is_err());
        assert!(three_by_three().with_obstacles([Cell::new(0, 0)]).is_err());
        assert!(three_by_three().with_noise(1.5).is_err());
    }

    #[test]
    fn perpendicular_turns_are_inverse() {
        for a in Action::ALL {
            assert_eq!(a.left_of().right_of(), a);
            assert_ne!(a.left_of(), a.right_of());
        }
    }

    #[test]
    fn state_index_round_trips() {
        let g = GridSpec::default()
            .with_obstacles([Cell::new(2, 2), Cell::new(5, 5)])
            .unwrap();
        let idx = g.state_index();
        assert_eq!(idx.len(), 62);
        for (i, &c) in idx.cells().iter().enumerate() {
            assert_eq!(idx.index(c), Some(i));
        }
        assert_eq!(idx.index(Cell::new(2, 2)), None);
        assert_eq!(idx.index(Cell::new(0, 9)), None);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn transitions_stay_in_free_set(
                seed in any::<u64>(),
                obstacles in proptest::collection::vec((0usize..5, 0usize..5), 0..6),
            ) {
                let base = GridSpec::new(5, 5, Cell::new(0, 0), Cell::new(4, 4)).unwrap();
                let obstacles: Vec<Cell> = obstacles
                    .into_iter()
                    .map(|(r, c)| Cell::new(r, c))
                    .filter(|c| !base.is_goal(*c))
                    .collect();
                let g = base.with_obstacles(obstacles).unwrap();
                let free = g.enumerate_free_states();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                for &s in &free {
                    for a in Action::ALL {
                        prop_assert!(free.contains(&g.apply_action(s, a).unwrap()));
                        prop_assert!(free.contains(&g.step_noisy(s, a, &mut rng).unwrap()));
                    }
                }
            }
        }
    }
}
