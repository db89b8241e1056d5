//! Poincare return maps, periodic-orbit refinement and Floquet multipliers:
//! the van der Pol cycle and the Hill-equation stability chart.
//!
//! Run with: cargo run --release --example poincare_floquet

use dynkit::dynamics::FlowOptions;
use dynkit::periodic::{find_periodic_orbit, hill_monodromy, monodromy, poincare_map, SectionDef};
use dynkit::systems::{build_builtin, ParamSet};

fn main() -> dynkit::Result<()> {
    let opts = FlowOptions::with_tol(1e-11);
    let sys = build_builtin("van_der_pol", &ParamSet::new())?;
    let (x0, period) = find_periodic_orbit(&sys, &[2.0, 0.0], 6.5, &opts)?;
    println!(
        "van der Pol cycle through ({:+.6}, {:+.6}), period {:.6}",
        x0[0], x0[1], period
    );
    let mono = monodromy(&sys, &x0, period, &opts)?;
    println!("multipliers:");
    for m in &mono.multipliers {
        println!("  {:+.8} {:+.8}i  (|m| = {:.6})", m.re, m.im, m.norm());
    }
    println!(
        "trivial multiplier residual |m - 1| = {:.2e} (flow direction)",
        mono.trivial_residual
    );

    // the return map through the cycle point reproduces the orbit period
    let f = sys.evaluate(&x0)?;
    let sec = SectionDef::new(x0.clone(), f, 0.5 * period, 2.0 * period);
    let (_, tau) = poincare_map(&sys, &sec, &x0, &opts)?;
    println!("Poincare return time {tau:.6} (equals the period)\n");

    // Hill equation: trace of the closed-form monodromy decides stability
    println!("Hill chart at T = pi: |trace| < 2 marks bounded solutions");
    println!("Omega    trace      stable?");
    for k in 0..=10 {
        let w = 0.4 + 0.36 * k as f64;
        let m = hill_monodromy(std::f64::consts::PI, w);
        let tr = m.u_t[0][0] + m.u_t[1][1];
        println!(
            "{w:5.2}  {tr:+9.4}   {}",
            if tr.abs() < 2.0 { "yes" } else { "no" }
        );
    }
    Ok(())
}
