//! Equilibria and fixed points: damped-Newton search, spectral
//! classification of the linearization, and Liapunov-matrix stability
//! certificates.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{DynError, Result};
use crate::systems::{SystemDef, SystemKind};

pub const DEFAULT_ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralLabel {
    Sink,
    Source,
    Saddle,
    Elliptic,
    Nonhyperbolic,
}

/// Refinement of the 2D real-flow taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanarLabel {
    Node,
    Saddle,
    Focus,
    Center,
    DegenerateNode,
    ImproperNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    AsymptoticallyStable,
    Unstable,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumReport {
    pub point: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub n_plus: usize,
    pub n_zero: usize,
    pub n_minus: usize,
    pub label: SpectralLabel,
    pub planar: Option<PlanarLabel>,
    pub stability: Stability,
    pub residual: f64,
}

/// Subspace dimensions and labels from an eigenvalue list. Flows partition
/// by the sign of the real part, maps by the modulus against 1, both within
/// `zero_tol`.
pub fn classify_linear(
    eigs: &[Complex64],
    kind: SystemKind,
    zero_tol: f64,
) -> (usize, usize, usize, SpectralLabel) {
    let mut n_plus = 0;
    let mut n_zero = 0;
    let mut n_minus = 0;
    for e in eigs {
        let v = match kind {
            SystemKind::Flow => e.re,
            SystemKind::Map => e.norm() - 1.0,
        };
        if v > zero_tol {
            n_plus += 1;
        } else if v < -zero_tol {
            n_minus += 1;
        } else {
            n_zero += 1;
        }
    }
    let label = if n_zero > 0 {
        if n_plus == 0 && n_minus == 0 {
            SpectralLabel::Elliptic
        } else {
            SpectralLabel::Nonhyperbolic
        }
    } else if n_plus == 0 {
        SpectralLabel::Sink
    } else if n_minus == 0 {
        SpectralLabel::Source
    } else {
        SpectralLabel::Saddle
    };
    (n_plus, n_zero, n_minus, label)
}

/// Planar refinement for 2D real flows (node/saddle/focus/center and the
/// degenerate cases decided by geometric multiplicity).
pub fn classify_planar(a: &DMatrix<f64>, zero_tol: f64) -> Option<PlanarLabel> {
    if a.nrows() != 2 || a.ncols() != 2 {
        return None;
    }
    let tr = a.trace();
    let det = a.determinant();
    let disc = tr * tr - 4.0 * det;
    let scale = a.amax().max(1.0);
    if disc > zero_tol * scale * scale {
        let label = if det < -zero_tol * scale * scale {
            PlanarLabel::Saddle
        } else {
            PlanarLabel::Node
        };
        return Some(label);
    }
    if disc < -zero_tol * scale * scale {
        let label = if tr.abs() <= zero_tol * scale {
            PlanarLabel::Center
        } else {
            PlanarLabel::Focus
        };
        return Some(label);
    }
    // repeated eigenvalue a = tr/2; geometric multiplicity from rank(A - aI)
    let lam = tr / 2.0;
    let shifted = a - DMatrix::identity(2, 2) * lam;
    let svd = shifted.svd(false, false);
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|s| **s > 1e-8 * smax.max(scale))
        .count();
    Some(if rank == 0 {
        PlanarLabel::DegenerateNode
    } else {
        PlanarLabel::ImproperNode
    })
}

/// Verdict per the spectral corollaries: unstable on any expanding direction,
/// asymptotically stable when everything contracts, inconclusive on a center
/// (points at the center-manifold machinery).
pub fn stability_verdict(n_plus: usize, n_zero: usize) -> (Stability, &'static str) {
    if n_plus > 0 {
        (
            Stability::Unstable,
            "at least one eigenvalue with positive real part (or modulus > 1)",
        )
    } else if n_zero > 0 {
        (
            Stability::Inconclusive,
            "center directions present; reduce to the center manifold",
        )
    } else {
        (
            Stability::AsymptoticallyStable,
            "all eigenvalues strictly contracting",
        )
    }
}

fn newton_residual(sys: &SystemDef, x: &[f64]) -> Result<DVector<f64>> {
    let f = sys.evaluate(x)?;
    Ok(match sys.kind {
        SystemKind::Flow => DVector::from_vec(f),
        SystemKind::Map => {
            DVector::from_iterator(sys.dim, f.iter().zip(x.iter()).map(|(a, b)| a - b))
        }
    })
}

fn newton_matrix(sys: &SystemDef, x: &[f64]) -> Result<DMatrix<f64>> {
    let j = sys.jacobian_at(x)?;
    Ok(match sys.kind {
        SystemKind::Flow => j,
        SystemKind::Map => j - DMatrix::identity(sys.dim, sys.dim),
    })
}

/// Damped Newton from one seed. The step is halved (up to 30 times) until the
/// residual decreases; undamped Newton diverges from poor seeds on Lorenz.
pub fn refine_equilibrium(sys: &SystemDef, seed: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = seed.to_vec();
    sys.reduce_state(&mut x);
    let mut retried = false;
    for _ in 0..100 {
        let r = newton_residual(sys, &x)?;
        let rn = r.norm();
        if rn <= tol {
            return Ok(x);
        }
        let m = newton_matrix(sys, &x)?;
        let step = match m.clone().lu().solve(&r) {
            Some(s) => s,
            None => {
                if retried {
                    return Err(DynError::SingularJacobian(format!(
                        "singular at {x:?} after perturbation retry"
                    )));
                }
                // one deterministic nudge, then give up
                retried = true;
                for v in x.iter_mut() {
                    *v += 1e-6;
                }
                continue;
            }
        };
        let mut damping = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let cand: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .map(|(xi, si)| xi - damping * si)
                .collect();
            let rc = newton_residual(sys, &cand)?;
            if rc.norm() < rn {
                x = cand;
                sys.reduce_state(&mut x);
                accepted = true;
                break;
            }
            damping *= 0.5;
        }
        if !accepted {
            return Err(DynError::NoConvergence(format!(
                "Newton stalled at residual {rn}"
            )));
        }
    }
    Err(DynError::NoConvergence(
        "Newton did not reach tolerance in 100 iterations".into(),
    ))
}

/// Classify the linearization at a refined equilibrium.
pub fn report_at(sys: &SystemDef, x: &[f64], zero_tol: f64) -> Result<EquilibriumReport> {
    let a = sys.jacobian_at(x)?;
    let eigs: Vec<Complex64> = a.complex_eigenvalues().iter().cloned().collect();
    let (n_plus, n_zero, n_minus, label) = classify_linear(&eigs, sys.kind, zero_tol);
    let planar = if sys.kind == SystemKind::Flow {
        classify_planar(&a, zero_tol)
    } else {
        None
    };
    let (stability, _) = stability_verdict(n_plus, n_zero);
    let residual = newton_residual(sys, x)?.norm();
    Ok(EquilibriumReport {
        point: x.to_vec(),
        eigenvalues: eigs,
        n_plus,
        n_zero,
        n_minus,
        label,
        planar,
        stability,
        residual,
    })
}

/// Newton from every seed; converged roots deduplicated at arc distance 1e-6
/// and classified. Seeds that fail are dropped.
pub fn find_equilibria(
    sys: &SystemDef,
    seeds: &[Vec<f64>],
    tol: f64,
) -> Result<Vec<EquilibriumReport>> {
    let mut roots: Vec<Vec<f64>> = Vec::new();
    for seed in seeds {
        let Ok(x) = refine_equilibrium(sys, seed, tol) else {
            continue;
        };
        if roots.iter().all(|r| sys.state_distance(r, &x) > 1e-6) {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    roots
        .iter()
        .map(|r| report_at(sys, r, DEFAULT_ZERO_TOL))
        .collect()
}

#[derive(Debug, Clone)]
pub struct LiapunovCertificate {
    pub q: DMatrix<f64>,
    pub residual: f64,
    pub min_eigenvalue: f64,
}

/// Solves A^T Q + Q A = -I over the symmetric matrices (dense linear solve)
/// and verifies positive definiteness. V(x) = <x - x*, Q (x - x*)> is then a
/// strict Liapunov function near the equilibrium.
pub fn liapunov_certificate(a: &DMatrix<f64>) -> Result<LiapunovCertificate> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    for e in a.complex_eigenvalues().iter() {
        if e.re >= -1e-10 {
            return Err(DynError::NotHurwitz { re: e.re });
        }
    }
    // unknowns: q_{ij}, i <= j
    let idx = |i: usize, j: usize| -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * n - i * (i + 1) / 2 + j
    };
    let m = n * (n + 1) / 2;
    let mut mat = DMatrix::<f64>::zeros(m, m);
    let mut rhs = DVector::<f64>::zeros(m);
    // equation (i, j): sum_k a_{ki} q_{kj} + q_{ik} a_{kj} = -delta_{ij}
    for i in 0..n {
        for j in i..n {
            let row = idx(i, j);
            for k in 0..n {
                mat[(row, idx(k, j))] += a[(k, i)];
                mat[(row, idx(i, k))] += a[(k, j)];
            }
            rhs[row] = if i == j { -1.0 } else { 0.0 };
        }
    }
    let sol = mat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| DynError::SingularJacobian("Liapunov equation solve failed".into()))?;
    let mut q = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            q[(i, j)] = sol[idx(i, j)];
            q[(j, i)] = sol[idx(i, j)];
        }
    }
    let residual = (a.transpose() * &q + &q * a + DMatrix::identity(n, n)).norm();
    let min_eigenvalue = q
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eigenvalue <= 0.0 {
        return Err(DynError::SingularJacobian(
            "certificate matrix is not positive definite".into(),
        ));
    }
    Ok(LiapunovCertificate {
        q,
        residual,
        min_eigenvalue,
    })
}

/// Report JSON per the documented schema.
pub fn report_to_json(rep: &EquilibriumReport) -> serde_json::Value {
    serde_json::json!({
        "point": rep.point,
        "eigenvalues": rep.eigenvalues.iter().map(|e| serde_json::json!({"re": e.re, "im": e.im})).collect::<Vec<_>>(),
        "dims": {"plus": rep.n_plus, "zero": rep.n_zero, "minus": rep.n_minus},
        "label": rep.label,
        "planar": rep.planar,
        "stability": rep.stability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build_builtin, ParamSet};
    use std::f64::consts::PI;

    fn lorenz(r: f64) -> SystemDef {
        let mut ov = ParamSet::new();
        ov.insert("r".into(), r);
        build_builtin("lorenz", &ov).unwrap()
    }

    #[test]
    fn lorenz_three_equilibria_at_r28() {
        let sys = lorenz(28.0);
        let mut seeds = Vec::new();
        for x in [-10.0, 0.0, 10.0] {
            for z in [0.0, 27.0] {
                seeds.push(vec![x, x, z]);
            }
        }
        let reps = find_equilibria(&sys, &seeds, 1e-10).unwrap();
        assert_eq!(reps.len(), 3);
        let c = (8.0 / 3.0 * 27.0_f64).sqrt();
        let expect = [vec![-c, -c, 27.0], vec![0.0, 0.0, 0.0], vec![c, c, 27.0]];
        for (rep, want) in reps.iter().zip(expect.iter()) {
            for (a, b) in rep.point.iter().zip(want.iter()) {
                assert!((a - b).abs() < 1e-8, "{:?} vs {:?}", rep.point, want);
            }
        }
        // origin is unstable at r = 28 (one expanding direction)
        let origin = &reps[1];
        assert_eq!(origin.n_plus, 1);
        assert_eq!(origin.stability, Stability::Unstable);
    }

    #[test]
    fn lorenz_origin_stable_below_one() {
        let sys = lorenz(0.5);
        let rep = report_at(&sys, &[0.0, 0.0, 0.0], DEFAULT_ZERO_TOL).unwrap();
        assert_eq!(rep.stability, Stability::AsymptoticallyStable);
    }

    #[test]
    fn lorenz_origin_crossing_brackets_r_equals_one() {
        let mut first_unstable = None;
        let grid: Vec<f64> = (0..=20).map(|k| 0.5 + 0.05 * k as f64).collect();
        for &r in &grid {
            let rep = report_at(&lorenz(r), &[0.0, 0.0, 0.0], DEFAULT_ZERO_TOL).unwrap();
            if rep.n_plus > 0 {
                first_unstable = Some(r);
                break;
            }
        }
        let r = first_unstable.expect("origin never destabilized");
        assert!(r > 1.0 && r <= 1.05 + 1e-12, "crossing at {r}");
    }

    #[test]
    fn standard_map_fixed_points() {
        let mut ov = ParamSet::new();
        ov.insert("eps".into(), 0.5);
        let sys = build_builtin("standard_map", &ov).unwrap();
        let seeds = vec![vec![0.1, 0.05], vec![3.0, 0.05], vec![6.0, -0.05]];
        let reps = find_equilibria(&sys, &seeds, 1e-10).unwrap();
        assert_eq!(reps.len(), 2);
        let qs: Vec<f64> = reps.iter().map(|r| r.point[0]).collect();
        assert!(qs.iter().any(|q| *q < 1e-6 || (q - 2.0 * PI).abs() < 1e-6));
        assert!(qs.iter().any(|q| (q - PI).abs() < 1e-6));
    }

    #[test]
    fn logistic_fixed_points() {
        let mut ov = ParamSet::new();
        ov.insert("lambda".into(), 3.5);
        let sys = build_builtin("logistic", &ov).unwrap();
        let reps = find_equilibria(&sys, &[vec![0.1], vec![0.6]], 1e-12).unwrap();
        assert_eq!(reps.len(), 2);
        assert!(reps[0].point[0].abs() < 1e-12);
        assert!((reps[1].point[0] - 5.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn every_root_satisfies_residual_bound() {
        let sys = lorenz(28.0);
        let reps = find_equilibria(&sys, &[vec![5.0, 5.0, 20.0]], 1e-10).unwrap();
        for rep in reps {
            assert!(rep.residual <= 10.0 * 1e-10);
        }
    }

    #[test]
    fn classification_examples() {
        let eigs = [Complex64::new(-1.0, 0.0), Complex64::new(-2.0, 0.0)];
        let (p, z, m, label) = classify_linear(&eigs, SystemKind::Flow, 1e-8);
        assert_eq!((p, z, m), (0, 0, 2));
        assert_eq!(label, SpectralLabel::Sink);
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        assert_eq!(classify_planar(&a, 1e-8), Some(PlanarLabel::Node));

        let eigs = [Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0)];
        let (_, z, _, label) = classify_linear(&eigs, SystemKind::Flow, 1e-8);
        assert_eq!(z, 2);
        assert_eq!(label, SpectralLabel::Elliptic);
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert_eq!(classify_planar(&a, 1e-8), Some(PlanarLabel::Center));

        let eigs = [Complex64::new(0.5, 0.0), Complex64::new(0.9, 0.0)];
        let (p, z, m, label) = classify_linear(&eigs, SystemKind::Map, 1e-8);
        assert_eq!((p, z, m), (0, 0, 2));
        assert_eq!(label, SpectralLabel::Sink);

        // degenerate vs improper node
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert_eq!(classify_planar(&a, 1e-8), Some(PlanarLabel::DegenerateNode));
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 1.0, 0.0, -1.0]);
        assert_eq!(classify_planar(&a, 1e-8), Some(PlanarLabel::ImproperNode));
    }

    #[test]
    fn classify_is_permutation_invariant() {
        let eigs = [
            Complex64::new(0.3, 0.0),
            Complex64::new(-1.0, 2.0),
            Complex64::new(1.5, 0.0),
        ];
        let base = classify_linear(&eigs, SystemKind::Flow, 1e-8);
        let perms: [[usize; 3]; 5] = [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for p in perms {
            let permuted: Vec<Complex64> = p.iter().map(|&i| eigs[i]).collect();
            assert_eq!(classify_linear(&permuted, SystemKind::Flow, 1e-8), base);
        }
    }

    #[test]
    fn liapunov_certificate_diagonal_cases() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        let cert = liapunov_certificate(&a).unwrap();
        assert!((cert.q[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((cert.q[(1, 1)] - 0.5).abs() < 1e-12);
        assert!(cert.residual < 1e-12);

        // componentwise oracle: 2 q_ii a_ii = -1
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let cert = liapunov_certificate(&a).unwrap();
        assert!((cert.q[(0, 0)] - 0.5).abs() < 1e-12);
        assert!((cert.q[(1, 1)] - 0.25).abs() < 1e-12);

        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            liapunov_certificate(&a),
            Err(DynError::NotHurwitz { .. })
        ));
    }

    #[test]
    fn certificate_algebraic_identity_on_random_vectors() {
        use rand::{Rng, SeedableRng};
        let a = DMatrix::from_row_slice(3, 3, &[-2.0, 1.0, 0.0, 0.0, -1.0, 0.5, 0.3, 0.0, -3.0]);
        let cert = liapunov_certificate(&a).unwrap();
        let lhs = a.transpose() * &cert.q + &cert.q * &a;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let y = DVector::from_iterator(3, (0..3).map(|_| rng.gen_range(-1.0..1.0)));
            let quad = (y.transpose() * &lhs * &y)[(0, 0)];
            assert!((quad + y.norm_squared()).abs() < 1e-8 * y.norm_squared().max(1e-12));
        }
    }

    #[test]
    fn inconclusive_center_case() {
        // linearization with eigenvalues (-1, 0)
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
        let eigs: Vec<Complex64> = a.complex_eigenvalues().iter().cloned().collect();
        let (p, z, _, _) = classify_linear(&eigs, SystemKind::Flow, 1e-8);
        let (verdict, _) = stability_verdict(p, z);
        assert_eq!(verdict, Stability::Inconclusive);
    }
}
