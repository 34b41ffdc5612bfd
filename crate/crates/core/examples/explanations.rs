//! Categorises every start of a learnt policy and draws a ratio-preserving
//! sample of explanatory trajectories.

use lfd_feedback::explainer::{
    generate_population, performance, sample_explanations, terminal_set,
};
use lfd_feedback::gridworld::{Action, Cell, GridSpec};
use lfd_feedback::irl::Demonstration;
use lfd_feedback::protocol::{learn, StudySetup};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Noise-free demonstration along `moves`.
fn demo(spec: &GridSpec, start: Cell, moves: &[Action]) -> lfd_feedback::Result<Demonstration> {
    let mut states = vec![start];
    for &a in moves {
        states.push(spec.apply_action(*states.last().unwrap(), a)?);
    }
    Demonstration::new(spec, states, moves.to_vec())
}

fn main() -> lfd_feedback::Result<()> {
    let setup = StudySetup::default();
    let spec = &setup.grid;
    use Action::*;
    // a teacher who only ever starts from the top rows
    let demos = vec![
        demo(
            spec,
            Cell::new(0, 0),
            &[Down, Down, Down, Right, Right, Right, Right, Right, Right],
        )?,
        demo(spec, Cell::new(0, 4), &[Down, Down, Down, Right, Right])?,
        demo(spec, Cell::new(1, 7), &[Down, Down, Left])?,
        demo(spec, Cell::new(2, 2), &[Down, Right, Right, Right, Right])?,
        demo(spec, Cell::new(0, 6), &[Down, Down, Down])?,
    ];
    let learned = learn(&demos, &setup)?;
    let tu = terminal_set(&demos)?;
    let pop = generate_population(&learned.policy, spec, &tu);
    println!(
        "performance {:.3} over {} starts",
        performance(&pop)?,
        pop.len()
    );
    for row in 0..spec.height {
        let line: String = (0..spec.width)
            .map(|col| {
                if pop[row * spec.width + col].is_success() {
                    '.'
                } else {
                    'x'
                }
            })
            .collect();
        println!("  {line}");
    }

    let sample = sample_explanations(&pop, 5, &mut ChaCha8Rng::seed_from_u64(1))?;
    println!(
        "sample: {} successes, {} failures",
        sample.n_success, sample.n_failure
    );
    for t in &sample.trajectories {
        let path: Vec<String> = t.states.iter().map(|c| c.to_string()).collect();
        println!(
            "  {:?} {:?}: {}",
            t.category,
            t.failure_reason,
            path.join(" ")
        );
    }
    Ok(())
}
