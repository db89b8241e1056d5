//! Center-manifold reduction in exact rational arithmetic: the planar
//! worked example y' = -y + c z^2, z' = yz - z^3, and the Lorenz pitchfork
//! at r = 1 through the parameter-extended system.
//!
//! Run with: cargo run --release --example center_manifold

use dynkit::manifolds::{
    center_graph_extended_exact, extend_with_parameter, local_manifold_taylor_exact,
    reduced_dynamics, verify_invariance, ManifoldKind,
};
use dynkit::poly::{rat, Coeff, Poly};
use dynkit::systems::{build_builtin, ParamSet, SystemDef, SystemKind};

fn main() -> dynkit::Result<()> {
    // planar example with rational parameter c = 1/2
    let c = rat(1, 2);
    let (y, z) = (Poly::var(2, 0), Poly::var(2, 1));
    let zz = z.mul(&z);
    let sys = SystemDef::from_polynomial(
        "planar_center",
        SystemKind::Flow,
        vec![y.neg().add(&zz.scale(&c)), y.mul(&z).sub(&zz.mul(&z))],
    );
    let graph = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Center, 4)?;
    println!("center graph h(z) with c = 1/2 (exact coefficients):");
    for (alpha, coeff) in &graph.graph.components[0].terms {
        println!("  z^{}  ->  {}", alpha[0], coeff);
    }
    let red = reduced_dynamics(&graph, 5);
    println!("reduced field u' (exact):");
    for (alpha, coeff) in &red.components[0].terms {
        println!("  u^{}  ->  {}", alpha[0], coeff);
    }
    let resid = verify_invariance(&sys, &graph, 1e-2, 200)?;
    println!("invariance residual at radius 1e-2: {resid:.3e} (O(z^5) truncation)\n");

    // Lorenz at r = 1: extended system (X, Y, Z, r), 2D center block
    let mut ov = ParamSet::new();
    ov.insert("r".into(), 1.0);
    let lorenz = build_builtin("lorenz", &ov)?;
    let ext = extend_with_parameter(&lorenz, "r")?;
    let graph = center_graph_extended_exact(&ext, &[0.0, 0.0, 0.0, 1.0], 3)?;
    let red = reduced_dynamics(&graph, 3);
    println!("Lorenz reduced field on the (u, lambda) center block at r = 1:");
    for (alpha, coeff) in &red.components[0].terms {
        println!(
            "  u^{} lambda^{}  ->  {}  (~ {:.6})",
            alpha[0],
            alpha[1],
            coeff,
            Coeff::to_f64(coeff)
        );
    }
    println!("only odd-in-u terms survive: the (X,Y) -> (-X,-Y) symmetry forces a");
    println!("pitchfork, and the negative cubic coefficient makes it supercritical.");
    Ok(())
}
