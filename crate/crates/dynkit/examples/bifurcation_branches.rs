//! Continuation of Lorenz equilibrium branches with bifurcation detection:
//! the pitchfork at r = 1, the subcritical Hopf at r = 470/19, and the
//! Newton-polygon classification machinery.
//!
//! Run with: cargo run --release --example bifurcation_branches

use dynkit::bifurcation::{
    classify_local_bif, continue_branch, detect_bifurcations, newton_polygon, CoeffTable,
};
use dynkit::normalform::{hopf_sign_estimate, HopfProbeOptions};
use dynkit::systems::{build_builtin, ParamSet, SystemDef};

fn lorenz(r: f64) -> dynkit::Result<SystemDef> {
    let mut ov = ParamSet::new();
    ov.insert("r".into(), r);
    build_builtin("lorenz", &ov)
}

fn main() -> dynkit::Result<()> {
    // origin branch across the pitchfork
    let branches = continue_branch(&lorenz, "r", &[0.0, 0.0, 0.0], 0.5, 2.0, 0.05)?;
    let events = detect_bifurcations(&lorenz, "r", &branches[0])?;
    for ev in &events {
        println!(
            "origin branch: {:?} at r = {:.6} (confidence {:.2})",
            ev.kind, ev.lambda_c, ev.confidence
        );
    }

    // C+ branch up to the Hopf point
    let b = 8.0 / 3.0_f64;
    let x0 = (b * 1.0).sqrt();
    let branches = continue_branch(&lorenz, "r", &[x0, x0, 1.0], 2.0, 26.0, 0.25)?;
    let events = detect_bifurcations(&lorenz, "r", &branches[0])?;
    for ev in &events {
        println!(
            "C+ branch: {:?} at r = {:.6}  (470/19 = {:.6})",
            ev.kind,
            ev.lambda_c,
            470.0 / 19.0
        );
        if let Some(omega) = ev.data.get("omega") {
            println!("  rotation frequency at onset: {omega}");
        }
    }

    // the Hopf is subcritical: no small attracting cycle exists above r3
    let r3 = 470.0 / 19.0;
    let c = (b * (r3 - 1.0)).sqrt();
    let probes: Vec<f64> = (1..=5).map(|k| r3 + 0.02 * k as f64).collect();
    let est = hopf_sign_estimate(
        &lorenz,
        r3,
        &[c, c, r3 - 1.0],
        &probes,
        &HopfProbeOptions::default(),
    )?;
    println!(
        "Hopf sign estimate: {:?} (amplitude jump: {})\n",
        est.verdict, est.amplitude_jump
    );

    // Newton polygon of the saddle-node table c01 lambda + c20 u^2
    let table = CoeffTable::from_pairs(&[(0, 1, 1.0), (2, 0, -1.0)]);
    let poly = newton_polygon(&table)?;
    println!(
        "saddle-node polygon: slope {:.2}, branch exponent mu = {:?}",
        poly.hull[0].slope, poly.candidate_exponents
    );
    let class = classify_local_bif(&table, false)?;
    println!(
        "classified {:?}: branches on the lambda > 0 side: {}, u+ stable: {:?}",
        class.kind, class.direct, class.plus_branch_stable
    );
    Ok(())
}
