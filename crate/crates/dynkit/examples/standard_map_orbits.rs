//! The kicked rotator: area preservation, fixed points, and the first-order
//! conjugacy to a pure rotation away from resonance.
//!
//! Run with: cargo run --release --example standard_map_orbits

use dynkit::dynamics::{variational_flow, FlowOptions, Horizon};
use dynkit::equilibria::find_equilibria;
use dynkit::normalform::standard_map_conjugacy_o1;
use dynkit::systems::{build_builtin, conservativity_report, ParamSet};

fn main() -> dynkit::Result<()> {
    let mut ov = ParamSet::new();
    ov.insert("eps".into(), 0.5);
    let sys = build_builtin("standard_map", &ov)?;

    let samples: Vec<Vec<f64>> = (0..8)
        .map(|k| vec![0.7 * k as f64, 0.3 * k as f64 - 1.0])
        .collect();
    let rep = conservativity_report(&sys, &samples, 1e-12)?;
    println!(
        "standard map at eps = 0.5 is {:?} (det DF = 1)",
        rep.verdict
    );

    let var = variational_flow(
        &sys,
        &[1.0, 0.5],
        Horizon::Iterates(1000),
        &FlowOptions::default(),
    )?;
    println!(
        "after 1000 iterates: |log det U| = {:.2e}\n",
        var.logdet_u.abs()
    );

    let reports = find_equilibria(&sys, &[vec![0.1, 0.05], vec![3.0, 0.05]], 1e-12)?;
    for r in &reports {
        println!(
            "fixed point (q, p) = ({:.6}, {:.6})  {:?}",
            r.point[0], r.point[1], r.label
        );
    }
    println!("(the elliptic point sits at q = pi, the hyperbolic one at q = 0)\n");

    // order-eps conjugacy to the rotation phi -> phi + omega
    let c = standard_map_conjugacy_o1(1.3, 1e-8)?;
    println!(
        "omega = 1.3: f1(0.5) = {:+.6}, g1(0.5) = {:+.6}, functional-equation residual {:.1e}",
        c.f1(0.5),
        c.g1(0.5),
        c.residual_on_grid(256)
    );
    println!("the divisors sin(omega/2) blow up at omega = 0 mod 2 pi: small divisors");
    Ok(())
}
