//! Noisy tele-operation on the study layout: slip frequencies and action budgets.

use lfd_feedback::gridworld::{Action, Cell, GridSpec};
use lfd_feedback::protocol::budget_for;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lfd_feedback::Result<()> {
    let spec = GridSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let from = Cell::new(3, 3);

    println!("pressing Up 10000 times at {from}:");
    let mut landed = std::collections::BTreeMap::new();
    for _ in 0..10_000 {
        *landed
            .entry(spec.step_noisy(from, Action::Up, &mut rng)?)
            .or_insert(0) += 1;
    }
    for (cell, n) in landed {
        println!("  {cell}  {:.3}", n as f64 / 10_000.0);
    }

    println!(
        "Up from the top-left corner stays at {}",
        spec.apply_action(Cell::new(0, 0), Action::Up)?
    );

    println!("budgets from (3,2) for each offset:");
    for delta in -3..=3 {
        println!(
            "  delta {delta:+}: {} steps",
            budget_for(&spec, Cell::new(3, 2), delta)
        );
    }
    Ok(())
}
