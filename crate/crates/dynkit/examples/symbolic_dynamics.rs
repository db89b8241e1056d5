//! Symbolic dynamics of the tent map and the horseshoe: itineraries, exact
//! periodic points, the ternary Cantor set, and nested horseshoe rectangles.
//!
//! Run with: cargo run --release --example symbolic_dynamics

use dynkit::chaos::symbolic::{
    cantor_membership, enumerate_periodic_tent, horseshoe_geometry, itinerary_to_point,
    tent_itinerary, HorseshoeWord, ReconstructedPoint,
};
use dynkit::poly::{rat, Coeff};

fn main() -> dynkit::Result<()> {
    // itineraries record which side of 1/2 each iterate visits
    for (num, den) in [(0i64, 1i64), (2, 3), (2, 5)] {
        let x = rat(num, den);
        let it = tent_itinerary(&x, 10);
        let symbols: String = it.iter().map(|s| if *s == 1 { '+' } else { '-' }).collect();
        println!("itinerary of {num}/{den}: {symbols}");
    }

    // the inverse reconstruction is exact for periodic words
    if let ReconstructedPoint::Exact(x) = itinerary_to_point(&[1, -1], true)? {
        println!("(+-)^inf reconstructs to {x} (the 2-cycle with 4/5)");
    }

    // all periodic points of period 3, verified exactly
    println!("\nperiod-3 points (g^3(x) = x in exact rationals):");
    for (word, x) in enumerate_periodic_tent(3)? {
        let symbols: String = word
            .iter()
            .map(|s| if *s == 1 { '+' } else { '-' })
            .collect();
        println!("  {symbols}  ->  {x} = {:.6}", Coeff::to_f64(&x));
    }

    // ternary Cantor membership with canonical digit rewriting
    println!();
    for (num, den) in [(1i64, 4i64), (1, 2), (1, 3)] {
        let rep = cantor_membership(&rat(num, den), 64);
        println!(
            "{num}/{den}: {:?} (digits {:?} then repeating {:?}{})",
            rep.verdict,
            rep.preperiod,
            rep.period,
            if rep.canonicalized {
                ", canonicalized"
            } else {
                ""
            }
        );
    }

    // horseshoe rectangles shrink as lambda^m x mu^{-(n+1)}
    println!("\nhorseshoe rectangles at lambda = 2/5, mu = 3:");
    let lambda = rat(2, 5);
    let mu = rat(3, 1);
    for word in [",+", "-,", "-,+", "+-,-+"] {
        let r = horseshoe_geometry(&HorseshoeWord::parse(word)?, &lambda, &mu)?;
        println!(
            "  word {word:6}  corner ({}, {})  size {} x {}",
            r.corner[0], r.corner[1], r.width, r.height
        );
    }
    Ok(())
}
