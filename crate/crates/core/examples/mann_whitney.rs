//! Exact and approximate Mann-Whitney U tests.

use lfd_feedback::metrics::{mann_whitney_exact, mann_whitney_normal, mann_whitney_u};

fn main() -> lfd_feedback::Result<()> {
    let t = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0])?;
    println!(
        "{{1,2,3}} vs {{4,5,6}}: U = {}, p = {} (exact: {})",
        t.u, t.p, t.exact
    );

    let a = [0.2, 0.4, 0.4, 0.5, 0.7, 0.8, 0.9, 1.0];
    let b = [0.5, 0.6, 0.8, 0.9, 1.0, 1.0, 1.2, 1.3];
    let exact = mann_whitney_exact(&a, &b)?;
    let normal = mann_whitney_normal(&a, &b)?;
    println!(
        "tied 8 vs 8: U = {}, exact p = {:.4}, normal p = {:.4}",
        exact.u, exact.p, normal.p
    );

    let big_a: Vec<f64> = (0..30).map(|i| (i % 7) as f64).collect();
    let big_b: Vec<f64> = (0..30).map(|i| (i % 7) as f64 + 1.0).collect();
    let t = mann_whitney_u(&big_a, &big_b)?;
    println!("30 vs 30: U = {}, p = {:.4} (exact: {})", t.u, t.p, t.exact);
    Ok(())
}
