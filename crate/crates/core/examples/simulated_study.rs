//! Runs both study arms with simulated teachers and compares them.
//!
//! cargo run --release -p lfd-feedback --example simulated_study -- [seeds]

use lfd_feedback::metrics::mann_whitney_u;
use lfd_feedback::protocol::{Condition, StudySetup};
use lfd_feedback::simteacher::{run_experiment, TeacherStrategy};

fn main() -> lfd_feedback::Result<()> {
    let seeds = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(30);
    let setup = StudySetup::default();
    let arms = [
        (
            "EF + feedback-responsive",
            Condition::Ef,
            TeacherStrategy::FeedbackResponsive,
        ),
        (
            "NF + random start",
            Condition::Nf,
            TeacherStrategy::RandomStart,
        ),
    ];
    let mut demos = Vec::new();
    for (name, condition, strategy) in arms {
        let reports = run_experiment(condition, strategy, &setup, seeds)?;
        let sets: Vec<usize> = reports.iter().map(|r| r.demo_sets).collect();
        let perfect = reports
            .iter()
            .filter(|r| r.final_performance == 1.0)
            .count();
        let capped = sets
            .iter()
            .filter(|&&s| s == setup.session.max_demo_sets)
            .count();
        let mean_eff = reports.iter().map(|r| r.teaching_efficiency).sum::<f64>() / seeds as f64;
        println!("{name}");
        println!("  sets per seed        {sets:?}");
        println!("  final performance 1  {perfect}/{seeds}");
        println!("  hit the set cap      {capped}/{seeds}");
        println!("  mean efficiency      {mean_eff:.4}");
        demos.push(
            reports
                .iter()
                .map(|r| r.num_demonstrations as f64)
                .collect::<Vec<_>>(),
        );
    }
    let test = mann_whitney_u(&demos[0], &demos[1])?;
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    println!(
        "demonstrations: mean {:.2} vs {:.2}, U = {}, p = {:.4}",
        mean(&demos[0]),
        mean(&demos[1]),
        test.u,
        test.p
    );
    Ok(())
}
