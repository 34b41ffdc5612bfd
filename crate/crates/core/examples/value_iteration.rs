//! Plans against a hand-written reward and draws the greedy policy.

use lfd_feedback::gridworld::{Action, Cell, GridSpec};
use lfd_feedback::irl::RewardParams;
use lfd_feedback::planner::{plan, PlannerConfig};

fn arrow(a: Action) -> char {
    match a {
        Action::Up => '^',
        Action::Down => 'v',
        Action::Left => '<',
        Action::Right => '>',
    }
}

fn main() -> lfd_feedback::Result<()> {
    let spec = GridSpec::default();
    let index = spec.state_index();
    let mut theta = vec![-0.1; index.len()];
    theta[index.require(spec.preferred_goal)?] = 1.0;
    theta[index.require(spec.non_preferred_goal)?] = 0.3;

    let policy = plan(&RewardParams::new(theta)?, &spec, &PlannerConfig::default())?;
    for row in 0..spec.height {
        let line: String = (0..spec.width)
            .map(|col| {
                let c = Cell::new(row, col);
                let s = index.require(c).unwrap();
                if c == spec.preferred_goal {
                    'P'
                } else if c == spec.non_preferred_goal {
                    'N'
                } else if policy.optimal_sets[s].len() > 1 {
                    '*'
                } else {
                    arrow(policy.greedy[s])
                }
            })
            .collect();
        println!("{line}");
    }
    println!("'*' marks cells where several actions tie");
    Ok(())
}
