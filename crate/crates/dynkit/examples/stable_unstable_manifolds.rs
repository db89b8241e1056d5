//! Taylor graphs of invariant manifolds at a saddle: the quadratic system
//! whose unstable manifold is exactly y = x^2 / 3, plus a finite-difference
//! run on a non-polynomial field.
//!
//! Run with: cargo run --release --example stable_unstable_manifolds

use dynkit::manifolds::{
    local_manifold_taylor, local_manifold_taylor_exact, verify_invariance, ManifoldKind,
};
use dynkit::poly::Poly;
use dynkit::systems::{SystemDef, SystemKind};

fn main() -> dynkit::Result<()> {
    // y1' = y1, y2' = -y2 + y1^2
    let (y1, y2) = (Poly::var(2, 0), Poly::var(2, 1));
    let sys = SystemDef::from_polynomial(
        "saddle_quadratic",
        SystemKind::Flow,
        vec![y1.clone(), y2.neg().add(&y1.mul(&y1))],
    );
    let graph = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Unstable, 6)?;
    println!("unstable manifold graph (exact):");
    for (alpha, c) in &graph.graph.components[0].terms {
        println!("  y1^{}  ->  {}", alpha[0], c);
    }
    println!("(the single coefficient 1/3 solves the graph equation exactly)");

    let stable = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Stable, 6)?;
    println!(
        "stable manifold graph terms: {} (the y2-axis is exactly invariant)",
        stable.graph.components[0].terms.len()
    );

    // embedded curve points and the independent invariance check
    println!("\npoints on the unstable manifold:");
    for u in [-0.2, -0.1, 0.1, 0.2] {
        let x = graph.embed(&[u]);
        println!("  u = {u:+.2}  ->  ({:+.6}, {:+.6})", x[0], x[1]);
    }
    let resid = verify_invariance(&sys, &graph, 0.05, 100)?;
    println!("invariance residual at radius 0.05: {resid:.2e}\n");

    // non-polynomial field: the pendulum saddle via finite differences
    let pendulum = SystemDef::from_fn("pendulum", SystemKind::Flow, 2, |_, x, out| {
        out[0] = x[1];
        out[1] = -x[0].sin();
    });
    let saddle = [std::f64::consts::PI, 0.0];
    let graph = local_manifold_taylor(&pendulum, &saddle, ManifoldKind::Unstable, 4)?;
    println!("pendulum saddle at (pi, 0): unstable graph coefficients (float mode):");
    for (alpha, c) in &graph.graph.components[0].terms {
        println!("  u^{}  ->  {c:+.6}", alpha[0]);
    }
    Ok(())
}
