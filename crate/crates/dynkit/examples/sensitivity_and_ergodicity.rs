//! Sensitive dependence on initial conditions and the ergodic time average
//! of the tent map.
//!
//! Run with: cargo run --release --example sensitivity_and_ergodicity

use dynkit::chaos::{ergodic_average_tent, sensitivity_test};
use dynkit::dynamics::omega_limit_probe;
use dynkit::systems::{build_builtin, ParamSet};

fn main() -> dynkit::Result<()> {
    // butterfly effect on the Lorenz attractor: 1e-9 perturbations reach
    // macroscopic separation within t ~ 20
    let lorenz = build_builtin("lorenz", &ParamSet::new())?;
    let rep = sensitivity_test(&lorenz, &[1.0, 1.0, 20.0], 1e-9, 0.1, 25.0, 4, 0)?;
    println!(
        "lorenz, delta0 = 1e-9, target 0.1: sensitive = {}",
        rep.sensitive
    );
    for (i, t) in rep.divergence_times.iter().enumerate() {
        match t {
            Some(t) => println!("  probe {i}: diverged at t = {t:.2}"),
            None => println!("  probe {i}: stayed close"),
        }
    }

    // a contraction is not sensitive
    let stable = build_builtin("pitchfork_demo", &ParamSet::new())?;
    let rep = sensitivity_test(&stable, &[1.0, 0.0], 1e-6, 0.1, 30.0, 4, 0)?;
    println!(
        "pitchfork demo near (1, 0): sensitive = {}\n",
        rep.sensitive
    );

    // omega-limit probing labels the long-run behaviour
    let probe = omega_limit_probe(&stable, &[0.5, 1.0], 50.0, 10.0, &Default::default())?;
    println!(
        "omega-limit of (0.5, 1.0): {:?} near ({:+.4}, {:+.4})\n",
        probe.verdict, probe.witness[0], probe.witness[1]
    );

    // ergodic averages of the tent map against the uniform measure; exact
    // lattice iteration avoids the float binary-shift collapse
    let den: u128 = (1 << 61) - 3;
    let num = ((2.0_f64.sqrt() - 1.0) * den as f64) as u128 | 1;
    let mean_x = ergodic_average_tent(num, den, 1_000_000, &|x| x);
    let mean_x2 = ergodic_average_tent(num, den, 1_000_000, &|x| x * x);
    println!("tent map time averages over 1e6 iterates from x ~ sqrt(2) - 1:");
    println!(
        "  <x>   = {:.6} +- {:.6}  (uniform measure gives 1/2)",
        mean_x.mean, mean_x.stderr
    );
    println!(
        "  <x^2> = {:.6} +- {:.6}  (uniform measure gives 1/3)",
        mean_x2.mean, mean_x2.stderr
    );
    Ok(())
}
