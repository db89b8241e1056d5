//! Box-counting dimension of the middle-thirds Cantor set and of the Henon
//! attractor.
//!
//! Run with: cargo run --release --example fractal_dimension

use dynkit::chaos::symbolic::cantor_endpoint_sample;
use dynkit::chaos::{box_dimension, henon_attractor_experiment};

fn main() -> dynkit::Result<()> {
    let pts = cantor_endpoint_sample(10);
    let ladder: Vec<f64> = (2..=7).map(|k| 3.0_f64.powi(-k)).collect();
    let est = box_dimension(&pts, &ladder)?;
    println!("middle-thirds Cantor set ({} endpoints):", pts.len());
    for (eps, n) in est.eps_ladder.iter().zip(&est.counts) {
        println!("  eps = {eps:.3e}  N = {n}");
    }
    println!(
        "  D0 = {:.6} (log 2 / log 3 = {:.6}), r^2 = {:.6}\n",
        est.slope,
        2.0_f64.ln() / 3.0_f64.ln(),
        est.r2
    );

    let exp = henon_attractor_experiment(1.4, 0.3, 60_000, 1_000)?;
    let cloud: Vec<Vec<f64>> = exp.points.iter().map(|p| p.to_vec()).collect();
    let ladder: Vec<f64> = (3..=9).map(|k| 2.0_f64.powi(-k)).collect();
    let est = box_dimension(&cloud, &ladder)?;
    println!(
        "Henon attractor (lambda = 1.4, b = 0.3, {} points):",
        cloud.len()
    );
    println!("  D0 estimate = {:.4}, r^2 = {:.6}", est.slope, est.r2);
    println!("  (the attractor is locally a curve times a Cantor set; D0 ~ 1.26)");
    Ok(())
}
