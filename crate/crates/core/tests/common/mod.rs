//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use lfd_feedback::gridworld::{Action, Cell, GridSpec};
use lfd_feedback::irl::Demonstration;
use lfd_feedback::protocol::budget_for;
use lfd_feedback::simteacher::{demonstrate, random_start};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 4×4 layout with the preferred goal top-right and the other bottom-left.
pub fn grid4() -> GridSpec {
    GridSpec::new(4, 4, Cell::new(0, 3), Cell::new(3, 0)).unwrap()
}

pub fn random_grid(width: usize, height: usize, rng: &mut impl Rng) -> GridSpec {
    loop {
        let a = Cell::new(rng.random_range(0..height), rng.random_range(0..width));
        let b = Cell::new(rng.random_range(0..height), rng.random_range(0..width));
        if a != b {
            return GridSpec::new(width, height, a, b).unwrap();
        }
    }
}

pub fn random_theta(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// `n` valid noisy demonstrations from random starts with zero budget slack.
pub fn noisy_demos(spec: &GridSpec, n: usize, rng: &mut impl Rng) -> Vec<Demonstration> {
    let mut demos = Vec::with_capacity(n);
    while demos.len() < n {
        let start = random_start(spec, rng);
        let d = demonstrate(spec, start, budget_for(spec, start, 0), rng).unwrap();
        if d.valid {
            demos.push(d);
        }
    }
    demos
}

/// Straight-line moves from `start` through `moves`, noise-free.
pub fn scripted(spec: &GridSpec, start: Cell, moves: &[Action]) -> Demonstration {
    let mut states = vec![start];
    for &a in moves {
        states.push(hand_move(spec, *states.last().unwrap(), a));
    }
    Demonstration::new(spec, states, moves.to_vec()).unwrap()
}

/// Bump-and-stay move written out independently of the engine.
pub fn hand_move(spec: &GridSpec, c: Cell, a: Action) -> Cell {
    let (r, k) = (c.row as i64, c.col as i64);
    let (r2, k2) = match a {
        Action::Up => (r - 1, k),
        Action::Down => (r + 1, k),
        Action::Left => (r, k - 1),
        Action::Right => (r, k + 1),
    };
    if r2 < 0 || k2 < 0 || r2 >= spec.height as i64 || k2 >= spec.width as i64 {
        return c;
    }
    let next = Cell::new(r2 as usize, k2 as usize);
    if spec.obstacles.contains(&next) {
        c
    } else {
        next
    }
}

/// Row-major free cells.
pub fn cells(spec: &GridSpec) -> Vec<Cell> {
    let mut out = Vec::new();
    for row in 0..spec.height {
        for col in 0..spec.width {
            let c = Cell::new(row, col);
            if !spec.obstacles.contains(&c) {
                out.push(c);
            }
        }
    }
    out
}

/// Plain Bellman iteration for a fixed number of sweeps with both goals
/// absorbing.
pub fn brute_force_values(spec: &GridSpec, theta: &[f64], gamma: f64, sweeps: usize) -> Vec<f64> {
    let cells = cells(spec);
    let pos = |c: Cell| cells.iter().position(|&x| x == c).unwrap();
    let succ: Vec<Vec<usize>> = cells
        .iter()
        .map(|&c| {
            if c == spec.preferred_goal || c == spec.non_preferred_goal {
                vec![pos(c)]
            } else {
                Action::ALL
                    .iter()
                    .map(|&a| pos(hand_move(spec, c, a)))
                    .collect()
            }
        })
        .collect();
    let mut v = vec![0.0; cells.len()];
    for _ in 0..sweeps {
        v = (0..cells.len())
            .map(|s| {
                theta[s]
                    + gamma
                        * succ[s]
                            .iter()
                            .map(|&j| v[j])
                            .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
    }
    v
}
