//! Fits a reward to noisy demonstrations and prints it as a heat map.

use lfd_feedback::gridworld::GridSpec;
use lfd_feedback::irl::{fit_with, IrlConfig};
use lfd_feedback::protocol::budget_for;
use lfd_feedback::simteacher::{demonstrate, random_start};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> lfd_feedback::Result<()> {
    let spec = GridSpec::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut demos = Vec::new();
    while demos.len() < 10 {
        let start = random_start(&spec, &mut rng);
        let d = demonstrate(&spec, start, budget_for(&spec, start, 0), &mut rng)?;
        if d.valid {
            println!(
                "demo {:>2}: {} -> {} in {} moves",
                demos.len(),
                d.start(),
                d.end(),
                d.len()
            );
            demos.push(d);
        }
    }

    let mut trace = Vec::new();
    let out = fit_with(&demos, &spec, &IrlConfig::default(), |step| {
        trace.push(step.mean_log_likelihood)
    })?;
    println!(
        "{} iterations, mean log-likelihood {:.3} -> {:.3}, gradient residual {:.1e}",
        out.iterations,
        trace[0],
        trace[trace.len() - 1],
        out.residual
    );

    let index = spec.state_index();
    for row in 0..spec.height {
        let line: Vec<String> = (0..spec.width)
            .map(|col| {
                let s = index
                    .index(lfd_feedback::gridworld::Cell::new(row, col))
                    .unwrap();
                format!("{:>6.2}", out.reward.theta[s])
            })
            .collect();
        println!("{}", line.join(" "));
    }
    Ok(())
}
