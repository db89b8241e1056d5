//! Resonance detection, homological-equation solving, and the first-order
//! conjugacy of the standard map with its small divisors.
//!
//! Run with: cargo run --release --example normal_forms

use dynkit::normalform::{
    adk_operator, normal_form, resonances, standard_map_conjugacy_o1, RESONANCE_TOL,
};
use dynkit::poly::{Poly, TaylorMap};
use nalgebra::DMatrix;
use num_complex::Complex64;

fn main() {
    // a = (2, 1): the relation 2 a_2 = a_1 is a resonance of order 2
    let eigs = [Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)];
    let rep = resonances(&eigs, 2, RESONANCE_TOL);
    println!("spectrum (2, 1), degree 2 resonances:");
    for h in &rep.hits {
        println!(
            "  component {} monomial {:?} residual {:.1e}",
            h.component, h.p, h.residual
        );
    }

    // the resonant quadratic term survives the normal-form step
    let (y1, y2) = (Poly::<f64>::var(2, 0), Poly::<f64>::var(2, 1));
    let field = TaylorMap::new(2, vec![y1.scale(&2.0).add(&y2.mul(&y2)), y2.clone()]);
    let nf = normal_form(&field, 3);
    println!(
        "normal form of (2y1 + y2^2, y2): coefficient of y2^2 stays {:.1}",
        nf.normal_form.components[0].coeff(&[0, 2])
    );

    // Hopf linear part: quadratic terms always removable, the cubic |z|^2 z
    // never is; the kernel of ad_3 A is 2-dimensional
    let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let op = adk_operator(&a, 3);
    let near_zero = op
        .matrix
        .complex_eigenvalues()
        .iter()
        .filter(|e| e.norm() < 1e-10)
        .count();
    println!("rotation linear part: dim ker ad_3 A = {near_zero} (the z^2 conj(z) plane)");

    // standard-map conjugacy at order eps: closed Fourier forms, exact
    // solutions of the functional equations away from omega = 0
    for omega in [std::f64::consts::PI, 1.3, 0.7] {
        let c = standard_map_conjugacy_o1(omega, 1e-8).unwrap();
        println!(
            "omega = {omega:.3}: residual of the order-eps equations on a 256 grid = {:.2e}",
            c.residual_on_grid(256)
        );
    }
    match standard_map_conjugacy_o1(1e-12, 1e-8) {
        Err(e) => println!("omega -> 0: {e}"),
        Ok(_) => unreachable!(),
    }
}
