//! Locate the period-doubling cascade of the logistic map and estimate the
//! Feigenbaum ratio and the accumulation point.
//!
//! Run with: cargo run --release --example feigenbaum_cascade

use dynkit::periodic::period_doubling_cascade;
use dynkit::systems::{build_builtin, ParamSet, SystemDef};

fn family(lambda: f64) -> dynkit::Result<SystemDef> {
    let mut ov = ParamSet::new();
    ov.insert("lambda".into(), lambda);
    build_builtin("logistic", &ov)
}

fn main() -> dynkit::Result<()> {
    let res = period_doubling_cascade(&family, (2.8, 3.6), 6)?;
    println!("n   lambda_n            delta_n");
    for (i, l) in res.lambdas.iter().enumerate() {
        let n = i + 1;
        match res.deltas.iter().find(|(dn, _)| *dn == n) {
            Some((_, d)) => println!("{n}   {l:.12}   {d:.6}"),
            None => println!("{n}   {l:.12}"),
        }
    }
    println!();
    println!("lambda_1 = 3 exactly (the fixed point loses stability),");
    println!("lambda_2 = 1 + sqrt(6) = {:.12}", 1.0 + 6.0_f64.sqrt());
    println!(
        "delta approaches the universal ratio 4.669...; accumulation estimate {:.6}",
        res.accumulation_estimate
    );
    Ok(())
}
