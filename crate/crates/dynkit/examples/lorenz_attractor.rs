//! Simulate the Lorenz flow at the classic parameters, classify its volume
//! behaviour, and measure the Liapunov spectrum of the attractor.
//!
//! Run with: cargo run --release --example lorenz_attractor

use dynkit::chaos::{lyapunov_spectrum, SpectrumOptions};
use dynkit::dynamics::{flow_to, trajectory, FlowOptions, Horizon};
use dynkit::systems::{build_builtin, conservativity_report, ParamSet};

fn main() -> dynkit::Result<()> {
    let sys = build_builtin("lorenz", &ParamSet::new())?;
    println!(
        "system: {} (sigma = {}, b = {:.4}, r = {})",
        sys.name,
        sys.param("sigma")?,
        sys.param("b")?,
        sys.param("r")?
    );

    let samples: Vec<Vec<f64>> = vec![vec![0.0; 3], vec![1.0, 2.0, 3.0], vec![-5.0, 4.0, 20.0]];
    let rep = conservativity_report(&sys, &samples, 1e-12)?;
    println!(
        "volume class: {:?} (divergence = {:.6} everywhere)",
        rep.verdict, rep.witnesses[0]
    );

    // settle onto the attractor, then sample a stretch of orbit
    let opts = FlowOptions::default();
    let x = flow_to(&sys, &[1.0, 1.0, 1.0], 10.0, &opts)?;
    let traj = trajectory(&sys, &x, Horizon::Time(30.0), 0.02, &opts)?;
    let (mut lo, mut hi) = (vec![f64::INFINITY; 3], vec![f64::NEG_INFINITY; 3]);
    for s in &traj.states {
        for i in 0..3 {
            lo[i] = lo[i].min(s[i]);
            hi[i] = hi[i].max(s[i]);
        }
    }
    println!(
        "attractor bounding box: x in [{:.2}, {:.2}], y in [{:.2}, {:.2}], z in [{:.2}, {:.2}]",
        lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]
    );

    let spec = lyapunov_spectrum(&sys, &x, Horizon::Time(500.0), &SpectrumOptions::default())?;
    println!(
        "liapunov exponents: ({:+.4}, {:+.4}, {:+.4}), sum = {:.4}",
        spec.exponents[0], spec.exponents[1], spec.exponents[2], spec.sum
    );
    println!("sign pattern (+, 0, -) marks a strange attractor; the sum equals");
    println!(
        "the constant divergence -(sigma + 1 + b) = {:.4}",
        -41.0 / 3.0
    );
    Ok(())
}
