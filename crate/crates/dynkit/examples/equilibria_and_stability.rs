//! Find and classify the Lorenz equilibria across the pitchfork at r = 1,
//! and certify stability with the Liapunov matrix equation.
//!
//! Run with: cargo run --release --example equilibria_and_stability

use dynkit::equilibria::{find_equilibria, liapunov_certificate};
use dynkit::systems::{build_builtin, ParamSet};

fn main() -> dynkit::Result<()> {
    for r in [0.5, 28.0] {
        let mut ov = ParamSet::new();
        ov.insert("r".into(), r);
        let sys = build_builtin("lorenz", &ov)?;
        let mut seeds = Vec::new();
        for x in [-10.0, 0.0, 10.0] {
            for z in [0.0, r - 1.0] {
                seeds.push(vec![x, x, z]);
            }
        }
        let reports = find_equilibria(&sys, &seeds, 1e-10)?;
        println!("r = {r}: {} equilibrium point(s)", reports.len());
        for rep in &reports {
            println!(
                "  x* = ({:+.6}, {:+.6}, {:+.6})  {:?}/{:?}  eigs {:?}",
                rep.point[0],
                rep.point[1],
                rep.point[2],
                rep.label,
                rep.stability,
                rep.eigenvalues
                    .iter()
                    .map(|e| (e.re * 1e4).round() / 1e4)
                    .collect::<Vec<_>>()
            );
        }
    }

    // a strict quadratic Liapunov function certifies the stable origin
    let mut ov = ParamSet::new();
    ov.insert("r".into(), 0.5);
    let sys = build_builtin("lorenz", &ov)?;
    let a = sys.jacobian_at(&[0.0, 0.0, 0.0])?;
    let cert = liapunov_certificate(&a)?;
    println!(
        "\nLiapunov certificate at the origin (r = 0.5): residual {:.2e}, min eig {:.4}",
        cert.residual, cert.min_eigenvalue
    );
    println!("V(x) = <x, Qx> decreases strictly along orbits near the origin.");
    Ok(())
}
