//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line (visible with `--nocapture`; failures panic).
//!
//! Run with: cargo test --test acceptance -- --nocapture

use dynkit::bifurcation::{continue_branch, detect_bifurcations, BifKind};
use dynkit::chaos::symbolic::{
    cantor_endpoint_sample, enumerate_periodic_tent, horseshoe_geometry, itinerary_to_point,
    tent_itinerary, tent_step, tent_to_logistic, HorseshoeWord, ReconstructedPoint,
};
use dynkit::chaos::{
    box_dimension, ergodic_average_tent, henon_attractor_experiment, lyapunov_spectrum,
    SpectrumOptions,
};
use dynkit::dynamics::{flow_to, variational_between, FlowOptions, Horizon};
use dynkit::equilibria::refine_equilibrium;
use dynkit::manifolds::{
    center_graph_extended_exact, extend_with_parameter, local_manifold_taylor_exact,
    reduced_dynamics, verify_invariance, ManifoldKind,
};
use dynkit::normalform::{
    adk_operator, hopf_sign_estimate, normal_form_step, resonances, standard_map_conjugacy_o1,
    HopfVerdict, RESONANCE_TOL,
};
use dynkit::periodic::{find_periodic_orbit, hill_monodromy, monodromy, period_doubling_cascade};
use dynkit::poly::{monomials_of_degree, rat, Coeff, Poly, TaylorMap};
use dynkit::systems::{
    build_builtin, conservativity_report, Conservativity, ParamSet, SystemDef, SystemKind,
};
use nalgebra::DMatrix;

fn lorenz_at(r: f64) -> SystemDef {
    let mut ov = ParamSet::new();
    ov.insert("r".into(), r);
    build_builtin("lorenz", &ov).unwrap()
}

fn logistic_family(l: f64) -> dynkit::Result<SystemDef> {
    let mut ov = ParamSet::new();
    ov.insert("lambda".into(), l);
    build_builtin("logistic", &ov)
}

fn lorenz_family(r: f64) -> dynkit::Result<SystemDef> {
    Ok(lorenz_at(r))
}

#[test]
fn acceptance_01_feigenbaum_cascade() {
    let res = period_doubling_cascade(&logistic_family, (2.8, 3.6), 6).unwrap();
    assert!(
        (res.lambdas[0] - 3.0).abs() <= 1e-8,
        "lambda_1 = {}",
        res.lambdas[0]
    );
    let l2 = 1.0 + 6.0_f64.sqrt();
    assert!(
        (res.lambdas[1] - l2).abs() <= 1e-6,
        "lambda_2 = {} vs {l2}",
        res.lambdas[1]
    );
    let d5 = res.deltas.iter().find(|(n, _)| *n == 5).unwrap().1;
    assert!(
        (d5 - 4.669).abs() / 4.669 <= 0.05,
        "delta at n=5: {d5} vs 4.669"
    );
    assert!(
        (res.accumulation_estimate - 3.56).abs() <= 1e-2,
        "accumulation estimate {}",
        res.accumulation_estimate
    );
    println!("acceptance 01 feigenbaum cascade: PASS");
}

#[test]
fn acceptance_02_cantor_dimension() {
    let pts = cantor_endpoint_sample(10);
    let ladder: Vec<f64> = (2..=7).map(|k| 3.0_f64.powi(-k)).collect();
    let est = box_dimension(&pts, &ladder).unwrap();
    let d0 = 2.0_f64.ln() / 3.0_f64.ln();
    assert!(
        (est.slope - d0).abs() / d0 <= 0.02,
        "D0 = {} vs {d0}",
        est.slope
    );
    println!("acceptance 02 cantor dimension: PASS");
}

#[test]
fn acceptance_03_lorenz_bifurcation_sequence() {
    // pitchfork of the origin at r = 1
    let branches = continue_branch(&lorenz_family, "r", &[0.0, 0.0, 0.0], 0.5, 2.0, 0.05).unwrap();
    let events = detect_bifurcations(&lorenz_family, "r", &branches[0]).unwrap();
    let pf = events
        .iter()
        .find(|e| e.kind == BifKind::Pitchfork)
        .expect("pitchfork detected");
    assert!(
        (pf.lambda_c - 1.0).abs() <= 1e-4,
        "r_pitchfork = {}",
        pf.lambda_c
    );

    // C+ located against the closed form to 1e-8
    let b = 8.0 / 3.0_f64;
    for r in [2.0, 10.0, 20.0, 24.0] {
        let sys = lorenz_at(r);
        let c = (b * (r - 1.0)).sqrt();
        let x = refine_equilibrium(&sys, &[c * 1.01, c * 0.99, r - 1.2], 1e-12).unwrap();
        let err = (x[0] - c)
            .abs()
            .max((x[1] - c).abs())
            .max((x[2] - (r - 1.0)).abs());
        assert!(err <= 1e-8, "C+ at r = {r}: error {err}");
    }

    // Hopf at r3 = 470/19 within 0.1% relative, and subcritical
    let x0 = (b * 1.0_f64).sqrt();
    let branches = continue_branch(&lorenz_family, "r", &[x0, x0, 1.0], 2.0, 26.0, 0.25).unwrap();
    let events = detect_bifurcations(&lorenz_family, "r", &branches[0]).unwrap();
    let hopf = events
        .iter()
        .find(|e| e.kind == BifKind::Hopf)
        .expect("hopf detected");
    let r3 = 470.0 / 19.0;
    assert!(
        (hopf.lambda_c - r3).abs() / r3 <= 1e-3,
        "r_hopf = {} vs {r3}",
        hopf.lambda_c
    );
    let c3 = (b * (r3 - 1.0)).sqrt();
    let probes: Vec<f64> = (1..=5).map(|k| r3 + 0.02 * k as f64).collect();
    let est = hopf_sign_estimate(
        &lorenz_family,
        r3,
        &[c3, c3, r3 - 1.0],
        &probes,
        &Default::default(),
    )
    .unwrap();
    assert_eq!(est.verdict, HopfVerdict::Subcritical);

    // global stability for r <= 1: sample orbits reach norm < 1e-4 by t = 100.
    // The samples stay below r = 0.9: exactly at r = 1 the decay on the
    // center manifold is polynomial, so the exponential-time bound applies
    // to the strictly subcritical range.
    let opts = FlowOptions::default();
    for r in [0.1, 0.3, 0.5, 0.7, 0.85] {
        let sys = lorenz_at(r);
        for seed in [
            [1.0, 1.0, 1.0],
            [-5.0, 3.0, -2.0],
            [8.0, -8.0, 5.0],
            [0.1, -0.4, 9.0],
        ] {
            let x = flow_to(&sys, &seed, 100.0, &opts).unwrap();
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < 1e-4, "r = {r}, seed {seed:?}: |x(100)| = {norm}");
        }
    }
    println!("acceptance 03 lorenz bifurcation sequence: PASS");
}

#[test]
fn acceptance_04_liapunov_spectra() {
    // linear flow: exponents are the eigenvalue real parts
    let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, -1.0]);
    let sys = SystemDef::linear(SystemKind::Flow, a);
    let opts = SpectrumOptions {
        renorm_interval: 0.5,
        discard_fraction: 0.0,
        flow_opts: FlowOptions::with_tol(1e-12),
    };
    let res = lyapunov_spectrum(&sys, &[0.0, 0.0], Horizon::Time(30.0), &opts).unwrap();
    assert!((res.exponents[0] - 2.0).abs() <= 1e-5);
    assert!((res.exponents[1] + 1.0).abs() <= 1e-5);

    // tent map: ln 2
    let tent = build_builtin("tent", &ParamSet::new()).unwrap();
    let res = lyapunov_spectrum(
        &tent,
        &[2.0_f64.sqrt() - 1.0],
        Horizon::Iterates(10_000),
        &SpectrumOptions::default(),
    )
    .unwrap();
    assert!((res.exponents[0] - 2.0_f64.ln()).abs() <= 1e-3);

    // Lorenz at r = 28 over T = 2000: pattern (+, 0, -) and the sum rule
    let lorenz = lorenz_at(28.0);
    let res = lyapunov_spectrum(
        &lorenz,
        &[1.0, 1.0, 1.0],
        Horizon::Time(2000.0),
        &SpectrumOptions::default(),
    )
    .unwrap();
    assert!(res.exponents[0] > 0.5, "{:?}", res.exponents);
    assert!(res.exponents[1].abs() <= 0.02, "{:?}", res.exponents);
    assert!(res.exponents[2] < -10.0);
    let target = -41.0 / 3.0;
    assert!(
        (res.sum - target).abs() / target.abs() <= 0.02,
        "sum {} vs {target}",
        res.sum
    );

    // Henon: exponent sum = ln b and a positive leading exponent
    let exp = henon_attractor_experiment(1.4, 0.3, 400_000, 1_000).unwrap();
    let sum: f64 = exp.spectrum.exponents.iter().sum();
    let lnb = 0.3_f64.ln();
    assert!((sum - lnb).abs() / lnb.abs() <= 0.01, "sum {sum} vs {lnb}");
    assert!(
        exp.spectrum.exponents[0] > 0.25,
        "{:?}",
        exp.spectrum.exponents
    );
    println!("acceptance 04 liapunov spectra: PASS");
}

#[test]
fn acceptance_05_floquet() {
    let opts = FlowOptions::with_tol(1e-11);
    let vdp = build_builtin("van_der_pol", &ParamSet::new()).unwrap();
    let (x0, t_per) = find_periodic_orbit(&vdp, &[2.0, 0.0], 6.5, &opts).unwrap();
    let mono = monodromy(&vdp, &x0, t_per, &opts).unwrap();
    assert!(
        mono.trivial_residual <= 1e-4,
        "trivial multiplier residual {}",
        mono.trivial_residual
    );

    // Hill: closed form vs split numeric integration, entrywise <= 1e-8,
    // determinant within 1e-12, over a 10x10 grid
    let mut worst = 0.0_f64;
    for i in 1..=10 {
        for j in 1..=10 {
            let t = 0.35 * i as f64;
            let w = 0.4 * j as f64;
            let closed = hill_monodromy(t, w);
            let det = closed.u_t[0][0] * closed.u_t[1][1] - closed.u_t[0][1] * closed.u_t[1][0];
            assert!((det - 1.0).abs() <= 1e-12, "det {det} at ({t}, {w})");
            let mut ov = ParamSet::new();
            ov.insert("T".into(), t);
            ov.insert("Omega".into(), w);
            let hill = build_builtin("hill", &ov).unwrap();
            let h1 = variational_between(&hill, &[0.0, 0.0], 0.0, Horizon::Time(t / 2.0), &opts)
                .unwrap();
            let h2 =
                variational_between(&hill, &[0.0, 0.0], t / 2.0, Horizon::Time(t / 2.0), &opts)
                    .unwrap();
            let numeric = &h2.u * &h1.u;
            for r in 0..2 {
                for c in 0..2 {
                    worst = worst.max((numeric[(r, c)] - closed.u_t[r][c]).abs());
                }
            }
        }
    }
    assert!(worst <= 1e-8, "worst entry discrepancy {worst}");
    println!("acceptance 05 floquet: PASS");
}

#[test]
fn acceptance_06_manifold_taylor_exactness() {
    // unstable graph of (y1' = y1, y2' = -y2 + y1^2) is exactly y1^2 / 3
    let (y1, y2) = (Poly::var(2, 0), Poly::var(2, 1));
    let saddle = SystemDef::from_polynomial(
        "saddle_quadratic",
        SystemKind::Flow,
        vec![y1.clone(), y2.neg().add(&y1.mul(&y1))],
    );
    let g = local_manifold_taylor_exact(&saddle, &[0.0, 0.0], ManifoldKind::Unstable, 4).unwrap();
    assert_eq!(g.graph.components[0].coeff(&[2]), rat(1, 3));
    assert_eq!(g.graph.components[0].terms.len(), 1);

    // center example: h = (c, 0, -2c(c-1)) at degrees (2, 3, 4) and reduced
    // field ((c-1), -2c(c-1)) at degrees (3, 5), exactly, for four values
    for c in [rat(0, 1), rat(1, 2), rat(1, 1), rat(2, 1)] {
        let (y, z) = (Poly::var(2, 0), Poly::var(2, 1));
        let zz = z.mul(&z);
        let sys = SystemDef::from_polynomial(
            "center_example",
            SystemKind::Flow,
            vec![y.neg().add(&zz.scale(&c)), y.mul(&z).sub(&zz.mul(&z))],
        );
        let g = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Center, 4).unwrap();
        let h = &g.graph.components[0];
        assert_eq!(h.coeff(&[2]), c);
        assert_eq!(h.coeff(&[3]), rat(0, 1));
        assert_eq!(h.coeff(&[4]), rat(-2, 1).mul(&c).mul(&c.sub(&rat(1, 1))));
        let red = reduced_dynamics(&g, 5);
        assert_eq!(red.components[0].coeff(&[3]), c.sub(&rat(1, 1)));
        assert_eq!(
            red.components[0].coeff(&[5]),
            rat(-2, 1).mul(&c).mul(&c.sub(&rat(1, 1)))
        );

        // invariance residual slope: order-4 truncation leaves O(z^5).
        // At c = 0 and c = 1 the degree-4 graph is exact (the residual sits
        // at the rounding floor), so the slope test applies when the
        // truncation error is actually visible.
        let r1 = verify_invariance(&sys, &g, 1e-2, 100).unwrap();
        let r2 = verify_invariance(&sys, &g, 5e-3, 100).unwrap();
        assert!(r1 <= 1e-9, "residual {r1}");
        if r1 > 1e-13 {
            let slope = (r1 / r2).log2();
            assert!(slope >= 4.5, "slope {slope} for c = {c}");
        }
    }
    println!("acceptance 06 manifold taylor exactness: PASS");
}

#[test]
fn acceptance_07_normal_forms() {
    // resonance reports match the operator spectrum exactly for 20 random
    // dyadic spectra (exactly representable arithmetic) and k <= 4
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20 {
        let n = rng.gen_range(2..=3usize);
        let diag: Vec<f64> = (0..n)
            .map(|_| rng.gen_range(-24..24) as f64 / 8.0)
            .collect();
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag.clone()));
        let eigs: Vec<num_complex::Complex64> = diag
            .iter()
            .map(|d| num_complex::Complex64::new(*d, 0.0))
            .collect();
        for k in 2..=4usize {
            let hits = resonances(&eigs, k, RESONANCE_TOL).hits;
            // oracle: exact zeros of p . a - a_j over the same enumeration
            let mut oracle = 0usize;
            for p in monomials_of_degree(n, k as u32) {
                let dot: f64 = p.iter().zip(&diag).map(|(&pi, ai)| pi as f64 * ai).sum();
                for aj in &diag {
                    if dot - aj == 0.0 {
                        oracle += 1;
                    }
                }
            }
            assert_eq!(hits.len(), oracle, "spectrum {diag:?}, k = {k}");
            // and the operator has exactly that many zero eigenvalues
            let op = adk_operator(&a, k);
            let zero_eigs = op
                .matrix
                .complex_eigenvalues()
                .iter()
                .filter(|e| e.norm() < 1e-10)
                .count();
            assert_eq!(hits.len(), zero_eigs);
        }
    }

    // Hopf cubic structure: only the |z|^2 z plane survives the step
    let (x, y) = (Poly::<f64>::var(2, 0), Poly::<f64>::var(2, 1));
    let f0 = y
        .scale(&-1.0)
        .add(&x.mul(&x).mul(&x).scale(&0.4))
        .add(&x.mul(&y).mul(&y).scale(&-0.2));
    let f1 = x.clone().add(&y.mul(&y).mul(&y).scale(&0.7));
    let field = TaylorMap::new(2, vec![f0, f1]);
    let step = normal_form_step(&field, 3, 3);
    let r2 = x.mul(&x).add(&y.mul(&y));
    let basis = [[r2.mul(&x), r2.mul(&y)], [r2.mul(&y).neg(), r2.mul(&x)]];
    let flatten = |m: &[Poly<f64>; 2]| -> Vec<f64> {
        monomials_of_degree(2, 3)
            .iter()
            .flat_map(|a| [m[0].coeff(a), m[1].coeff(a)])
            .collect()
    };
    let res = flatten(&[
        step.resonant.components[0].clone(),
        step.resonant.components[1].clone(),
    ]);
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let mut residual = res.clone();
    for b in &basis {
        let v = flatten(b);
        let c = dot(&res, &v) / dot(&v, &v);
        for i in 0..residual.len() {
            residual[i] -= c * v[i];
        }
    }
    // subtract both projections from the original, not sequentially from res
    let mut clean = res.clone();
    for b in &basis {
        let v = flatten(b);
        let c = dot(&res, &v) / dot(&v, &v);
        for i in 0..clean.len() {
            clean[i] -= c * v[i];
        }
    }
    let off = clean.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    assert!(off <= 1e-10, "resonant part off the |z|^2 z plane by {off}");

    // standard-map conjugacy residuals and the small divisor at omega = 0
    for omega in [0.7, 1.3, std::f64::consts::PI - 0.3] {
        let c = standard_map_conjugacy_o1(omega, 1e-8).unwrap();
        assert!(c.residual_on_grid(256) <= 1e-12, "omega = {omega}");
    }
    assert!(standard_map_conjugacy_o1(0.0, 1e-8).is_err());
    println!("acceptance 07 normal forms: PASS");
}

#[test]
fn acceptance_08_symbolic_dynamics() {
    // 2^p periodic itineraries verified exactly for p <= 10
    for p in 1..=10usize {
        let pts = enumerate_periodic_tent(p).unwrap();
        assert_eq!(pts.len(), 1 << p);
        // verification g^p(x) = x is exact inside the enumerator; spot-check
        for (_, x) in pts.iter().step_by(1 << (p.saturating_sub(3))) {
            let mut y = x.clone();
            for _ in 0..p {
                y = tent_step(&y);
            }
            assert_eq!(&y, x);
        }
    }

    // round trip brackets within 2^-40
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    let two_pow_40 = rat(1, 1 << 40);
    for _ in 0..1000 {
        let q = rng.gen_range(3u32..100_000);
        let p = rng.gen_range(0..=q);
        let x = rat(p as i64, q as i64);
        let it = tent_itinerary(&x, 40);
        let ReconstructedPoint::Interval(lo, hi) = itinerary_to_point(&it, false).unwrap() else {
            panic!()
        };
        assert!(lo <= x && x <= hi);
        assert_eq!(hi.sub(&lo), two_pow_40);
    }

    // conjugacy identity h(g2(x)) = f4(h(x)) on 1000 grid points
    for i in 0..=1000 {
        let x = i as f64 / 1000.0;
        let g2 = if x <= 0.5 { 2.0 * x } else { 2.0 - 2.0 * x };
        let y = tent_to_logistic(x);
        assert!(
            (tent_to_logistic(g2) - 4.0 * y * (1.0 - y)).abs() <= 1e-12,
            "x = {x}"
        );
    }

    // horseshoe rectangle sizes lambda^m x mu^{-(n+1)}, exactly
    let lambda = rat(2, 5);
    let mu = rat(3, 1);
    for (word, m, n_plus_1) in [
        (",+", 0u32, 1u32),
        ("-,", 1, 0),
        ("-,+", 1, 1),
        ("+-,-+", 2, 2),
    ] {
        let r = horseshoe_geometry(&HorseshoeWord::parse(word).unwrap(), &lambda, &mu).unwrap();
        let want_w = lambda.clone().pow_i(m);
        let want_h = rat(1, 1).div(&mu.clone().pow_i(n_plus_1));
        assert_eq!(r.width, format!("{}/{}", want_w.numer(), want_w.denom()));
        assert_eq!(r.height, format!("{}/{}", want_h.numer(), want_h.denom()));
    }

    // ergodic averages within 3 standard errors of 1/2 and 1/3
    let den: u128 = (1 << 61) - 3;
    let num = ((2.0_f64.sqrt() - 1.0) * den as f64) as u128 | 1;
    let a1 = ergodic_average_tent(num, den, 1_000_000, &|x| x);
    assert!((a1.mean - 0.5).abs() <= 3.0 * a1.stderr, "{a1:?}");
    let a2 = ergodic_average_tent(num, den, 1_000_000, &|x| x * x);
    assert!((a2.mean - 1.0 / 3.0).abs() <= 3.0 * a2.stderr, "{a2:?}");
    println!("acceptance 08 symbolic dynamics: PASS");
}

trait RatPow {
    fn pow_i(self, e: u32) -> Self;
}
impl RatPow for num_rational::BigRational {
    fn pow_i(self, e: u32) -> Self {
        let mut out = rat(1, 1);
        for _ in 0..e {
            out = out.mul(&self);
        }
        out
    }
}

#[test]
fn acceptance_09_conservativity() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);

    // standard map: |det DF - 1| <= 1e-12 everywhere sampled
    let sm = build_builtin("standard_map", &ParamSet::new()).unwrap();
    let samples: Vec<Vec<f64>> = (0..200)
        .map(|_| {
            vec![
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(-3.0..3.0),
            ]
        })
        .collect();
    let rep = conservativity_report(&sm, &samples, 1e-12).unwrap();
    assert_eq!(rep.verdict, Conservativity::Conservative);
    for w in &rep.witnesses {
        assert!((w - 1.0).abs() <= 1e-12);
    }

    // Lorenz: divergence identically -(sigma + 1 + b) = -41/3
    let lorenz = lorenz_at(28.0);
    let samples: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..3).map(|_| rng.gen_range(-20.0..20.0)).collect())
        .collect();
    let rep = conservativity_report(&lorenz, &samples, 1e-12).unwrap();
    assert_eq!(rep.verdict, Conservativity::Dissipative);
    for w in &rep.witnesses {
        assert_eq!(*w, rep.witnesses[0], "divergence is constant");
        assert!((w + 41.0 / 3.0).abs() <= 1e-13, "w = {w}");
    }

    // Henon: dissipative for |b| < 1
    for b in [0.3, -0.5, 0.9] {
        let mut ov = ParamSet::new();
        ov.insert("b".into(), b);
        let henon = build_builtin("henon", &ov).unwrap();
        let samples: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let rep = conservativity_report(&henon, &samples, 1e-12).unwrap();
        assert_eq!(rep.verdict, Conservativity::Dissipative, "b = {b}");
    }
    println!("acceptance 09 conservativity: PASS");
}

#[test]
fn acceptance_10_cli_determinism() {
    // identical config + seed produce byte-identical artifacts
    let bin = env!("CARGO_BIN_EXE_dynkit");
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &std::path::Path| {
        let output = std::process::Command::new(bin)
            .args([
                "cascade",
                "--system",
                "logistic",
                "--max-n",
                "4",
                "--out",
                out.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        std::fs::read(out).unwrap()
    };
    let a = run(&dir.path().join("a.csv"));
    let b = run(&dir.path().join("b.csv"));
    assert_eq!(a, b, "cascade artifacts differ between runs");

    let run_diagram = |out: &std::path::Path| {
        let status = std::process::Command::new(bin)
            .args([
                "diagram",
                "--system",
                "logistic",
                "--range",
                "3.1:3.3",
                "--samples",
                "5",
                "--transient",
                "300",
                "--keep",
                "10",
                "--x0",
                "0.5",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let a = run_diagram(&dir.path().join("d1.csv"));
    let b = run_diagram(&dir.path().join("d2.csv"));
    assert_eq!(a, b, "diagram artifacts differ between runs");
    println!("acceptance 10 cli determinism: PASS");
}

// the extended-system reduction underlying criterion 3's classification
#[test]
fn acceptance_03b_lorenz_reduction_is_supercritical_pitchfork() {
    let lorenz = lorenz_at(1.0);
    let ext = extend_with_parameter(&lorenz, "r").unwrap();
    let g = center_graph_extended_exact(&ext, &[0.0, 0.0, 0.0, 1.0], 3).unwrap();
    let red = reduced_dynamics(&g, 3);
    let r = &red.components[0];
    assert!(r.coeff(&[2, 0]).is_zero() && r.coeff(&[0, 1]).is_zero());
    assert!(Coeff::to_f64(&r.coeff(&[1, 1])) > 0.0);
    assert!(Coeff::to_f64(&r.coeff(&[3, 0])) < 0.0);
    println!("acceptance 03b lorenz center-manifold reduction: PASS");
}
