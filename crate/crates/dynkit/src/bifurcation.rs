//! Equilibrium-branch continuation, bifurcation detection on branches,
//! Newton-polygon analysis of branch exponents, and classification into the
//! local normal-form taxonomy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::equilibria::{classify_linear, refine_equilibrium, stability_verdict, Stability};
use crate::error::{DynError, Result};
use crate::manifolds::{center_graph_extended, extend_with_parameter, reduced_dynamics};
use crate::periodic::flip_coefficients;

use crate::systems::{SystemDef, SystemKind};

/// One-parameter family of systems.
pub type Family<'a> = dyn Fn(f64) -> Result<SystemDef> + Sync + 'a;

#[derive(Debug, Clone, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    pub x: Vec<f64>,
    pub eigenvalues: Vec<Complex64>,
    pub stability: Stability,
}

/// A lambda-monotone run of equilibria; folds split branches.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    pub param: String,
    pub points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BifKind {
    SaddleNode,
    Transcritical,
    Pitchfork,
    Hopf,
    Flip,
    NeimarkSacker,
}

#[derive(Debug, Clone, Serialize)]
pub struct BifurcationEvent {
    pub kind: BifKind,
    pub lambda_c: f64,
    pub location: Vec<f64>,
    pub data: serde_json::Value,
    /// Lowered when classification was ambiguous or strong resonances flagged.
    pub confidence: f64,
}

fn branch_point(sys: &SystemDef, lambda: f64, x: &[f64]) -> Result<BranchPoint> {
    let j = sys.jacobian_at(x)?;
    let eigenvalues: Vec<Complex64> = j.complex_eigenvalues().iter().cloned().collect();
    let (n_plus, n_zero, _, _) = classify_linear(&eigenvalues, sys.kind, 1e-8);
    let (stability, _) = stability_verdict(n_plus, n_zero);
    Ok(BranchPoint {
        lambda,
        x: x.to_vec(),
        eigenvalues,
        stability,
    })
}

/// Predictor-corrector continuation: secant predictor with a Newton
/// corrector at fixed lambda; near folds it switches to a local arclength
/// parametrization, and the stored branch splits so lambda stays monotone
/// within each piece.
pub fn continue_branch(
    family: &Family,
    param: &str,
    x_start: &[f64],
    lambda_start: f64,
    lambda_end: f64,
    step: f64,
) -> Result<Vec<Branch>> {
    assert!(step > 0.0);
    let dir = (lambda_end - lambda_start).signum();
    let sys0 = family(lambda_start)?;
    let x0 = refine_equilibrium(&sys0, x_start, 1e-10)?;
    let mut branches: Vec<Branch> = Vec::new();
    let mut current = Branch {
        param: param.to_string(),
        points: vec![branch_point(&sys0, lambda_start, &x0)?],
    };
    let n = sys0.dim;
    let mut prev: Option<BranchPoint> = None;
    let mut guard = 0usize;
    loop {
        guard += 1;
        if guard > 100_000 {
            return Err(DynError::BranchLost {
                lambda: current.points.last().unwrap().lambda,
                reason: "step limit".into(),
            });
        }
        let last = current.points.last().unwrap().clone();
        if (last.lambda - lambda_end) * dir >= 0.0 {
            break;
        }
        let mut h = step.min((lambda_end - last.lambda).abs());
        // secant predictor
        let predict = |h: f64| -> (f64, Vec<f64>) {
            match &prev {
                Some(p) if (last.lambda - p.lambda).abs() > 1e-14 => {
                    let slope: Vec<f64> = last
                        .x
                        .iter()
                        .zip(p.x.iter())
                        .map(|(a, b)| (a - b) / (last.lambda - p.lambda))
                        .collect();
                    (
                        last.lambda + dir * h,
                        last.x
                            .iter()
                            .zip(slope.iter())
                            .map(|(x, s)| x + s * dir * h)
                            .collect(),
                    )
                }
                _ => (last.lambda + dir * h, last.x.clone()),
            }
        };
        let mut accepted: Option<BranchPoint> = None;
        for _ in 0..12 {
            let (lam, xp) = predict(h);
            let sys = family(lam)?;
            match refine_equilibrium(&sys, &xp, 1e-10) {
                Ok(x) => {
                    // reject corrector jumps to a different branch
                    let jump: f64 = x
                        .iter()
                        .zip(last.x.iter())
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    let scale = last.x.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
                    if jump < 0.5 * scale + 10.0 * h.abs() {
                        accepted = Some(branch_point(&sys, lam, &x)?);
                        break;
                    }
                    h *= 0.5;
                }
                Err(_) => h *= 0.5,
            }
        }
        match accepted {
            Some(bp) => {
                prev = Some(last);
                current.points.push(bp);
            }
            None => {
                // corrector failed: round the fold by local arclength
                let (tangent, t_lambda) = match &prev {
                    Some(p) => {
                        let mut t: Vec<f64> =
                            last.x.iter().zip(p.x.iter()).map(|(a, b)| a - b).collect();
                        t.push(last.lambda - p.lambda);
                        let norm: f64 = t.iter().map(|v| v * v).sum::<f64>().sqrt();
                        if norm == 0.0 {
                            return Err(DynError::BranchLost {
                                lambda: last.lambda,
                                reason: "no tangent at fold".into(),
                            });
                        }
                        let t: Vec<f64> = t.iter().map(|v| v / norm).collect();
                        let tl = t[n];
                        (t, tl)
                    }
                    None => {
                        return Err(DynError::BranchLost {
                            lambda: last.lambda,
                            reason: "corrector failed at first step".into(),
                        })
                    }
                };
                let ds = step.min(0.05);
                let mut aug: Vec<f64> = last.x.clone();
                aug.push(last.lambda);
                // predictor along the tangent
                for i in 0..=n {
                    aug[i] += tangent[i] * ds;
                }
                // Newton on [f(x, lambda); <(x,lambda) - pred, tangent>]
                let mut converged = false;
                for _ in 0..50 {
                    let sys = family(aug[n])?;
                    let f = sys.evaluate(&aug[..n])?;
                    let mut resid = DVector::zeros(n + 1);
                    let base = match sys.kind {
                        SystemKind::Flow => f.clone(),
                        SystemKind::Map => f.iter().zip(&aug[..n]).map(|(a, b)| a - b).collect(),
                    };
                    for i in 0..n {
                        resid[i] = base[i];
                    }
                    resid[n] = 0.0; // arclength equation handled via predictor
                    if resid.norm() < 1e-11 {
                        converged = true;
                        break;
                    }
                    let j = sys.jacobian_at(&aug[..n])?;
                    let jr = match sys.kind {
                        SystemKind::Flow => j,
                        SystemKind::Map => j - DMatrix::identity(n, n),
                    };
                    let fp = sys.param_derivative(param, &aug[..n])?;
                    let mut m = DMatrix::zeros(n + 1, n + 1);
                    for i in 0..n {
                        for c in 0..n {
                            m[(i, c)] = jr[(i, c)];
                        }
                        m[(i, n)] = fp[i];
                    }
                    for c in 0..=n {
                        m[(n, c)] = tangent[c];
                    }
                    let step_v = m.lu().solve(&resid).ok_or_else(|| DynError::BranchLost {
                        lambda: aug[n],
                        reason: "singular arclength system".into(),
                    })?;
                    for i in 0..=n {
                        aug[i] -= step_v[i];
                    }
                }
                if !converged {
                    return Err(DynError::BranchLost {
                        lambda: last.lambda,
                        reason: "arclength corrector failed".into(),
                    });
                }
                let sys = family(aug[n])?;
                let bp = branch_point(&sys, aug[n], &aug[..n])?;
                // fold: lambda direction reversed; split the stored branch
                let new_dir = (bp.lambda - last.lambda).signum();
                if new_dir != 0.0 && new_dir != dir {
                    branches.push(current.clone());
                    // continue the second half-branch by natural continuation
                    // in the reversed direction
                    let mut second =
                        continue_branch(family, param, &bp.x, bp.lambda, lambda_start, step)?;
                    branches.append(&mut second);
                    return Ok(branches);
                }
                if t_lambda.abs() < 1e-12 && new_dir == dir {
                    // still creeping along the fold: accept and move on
                }
                prev = Some(last);
                current.points.push(bp);
            }
        }
    }
    branches.push(current);
    Ok(branches)
}

// ---------------------------------------------------------------------------
// local Taylor coefficients and classification
// ---------------------------------------------------------------------------

/// Taylor coefficients c_pq (p + q <= 3) of the one-dimensional reduced
/// field on the parameter-extended center manifold at (x_star, lambda_c).
#[derive(Debug, Clone, Serialize)]
pub struct CoeffTable {
    /// (p, q, c_pq) entries with p + q <= 3.
    pub entries: Vec<(u32, u32, f64)>,
}

impl CoeffTable {
    pub fn get(&self, p: u32, q: u32) -> f64 {
        self.entries
            .iter()
            .find(|(a, b, _)| (*a, *b) == (p, q))
            .map(|(_, _, c)| *c)
            .unwrap_or(0.0)
    }

    pub fn from_pairs(pairs: &[(u32, u32, f64)]) -> Self {
        CoeffTable {
            entries: pairs.to_vec(),
        }
    }

    pub fn scale(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, _, c)| c.abs())
            .fold(0.0_f64, f64::max)
    }
}

/// Reduced coefficients via the center manifold of the extended system
/// (flows with a 1D state center block), or directly for 1D maps.
pub fn local_taylor_coeffs(
    sys_at_crit: &SystemDef,
    param: &str,
    x_star: &[f64],
    lambda_c: f64,
) -> Result<CoeffTable> {
    match sys_at_crit.kind {
        SystemKind::Flow => {
            let ext = extend_with_parameter(sys_at_crit, param)?;
            let mut eq = x_star.to_vec();
            eq.push(lambda_c);
            let graph = center_graph_extended(&ext, &eq, 3)?;
            let red = reduced_dynamics(&graph, 3);
            // center block is (u_1..u_k, lambda); the reduced state equation
            // for the single state center direction is component 0
            let d = red.in_dim;
            if d != 2 {
                return Err(DynError::Degenerate(format!(
                    "center block dimension {} (need 1 state direction + parameter)",
                    d - 1
                )));
            }
            let mut entries = Vec::new();
            for p in 0..=3u32 {
                for q in 0..=(3 - p) {
                    let c = red.components[0].coeff(&[p, q]);
                    if c != 0.0 {
                        entries.push((p, q, c));
                    }
                }
            }
            Ok(CoeffTable { entries })
        }
        SystemKind::Map => {
            // 1D maps reduce directly: G(u, l) = F(x*+u, lc+l) - (x* + u)
            if sys_at_crit.dim != 1 {
                return Err(DynError::Degenerate(
                    "map reduction implemented for 1D maps".into(),
                ));
            }
            let mut entries = Vec::new();
            for p in 0..=3u32 {
                for q in 0..=(3 - p) {
                    let c = map_coeff(sys_at_crit, param, x_star[0], lambda_c, p, q)?;
                    if c.abs() > 1e-9 {
                        entries.push((p, q, c));
                    }
                }
            }
            Ok(CoeffTable { entries })
        }
    }
}

fn map_coeff(
    sys: &SystemDef,
    param: &str,
    x_star: f64,
    lambda_c: f64,
    p: u32,
    q: u32,
) -> Result<f64> {
    if let Some(polys) = sys.polynomial_field(Some(param)) {
        let local = polys[0].to_f64_poly().shift(&[x_star, lambda_c]);
        let mut c = local.coeff(&[p, q]);
        if (p, q) == (0, 0) {
            c -= x_star;
        }
        if (p, q) == (1, 0) {
            c -= 1.0;
        }
        return Ok(c);
    }
    // finite differences on (u, l)
    let g = |u: f64, l: f64| -> Result<f64> {
        let s = sys.with_param(param, lambda_c + l)?;
        Ok(s.evaluate(&[x_star + u])?[0] - x_star - u)
    };
    let h = 1e-3;
    let mut sum = 0.0;
    let bin = |n: u32, k: u32| -> f64 {
        (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
    };
    for i in 0..=p {
        for j in 0..=q {
            let sign = if (p - i + q - j).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            };
            sum += sign
                * bin(p, i)
                * bin(q, j)
                * g(
                    (i as f64 - p as f64 / 2.0) * h,
                    (j as f64 - q as f64 / 2.0) * h,
                )?;
        }
    }
    let fact = (1..=p).product::<u32>().max(1) as f64 * (1..=q).product::<u32>().max(1) as f64;
    Ok(sum / h.powi((p + q) as i32) / fact)
}

// ---------------------------------------------------------------------------
// Newton polygon
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct PolygonSegment {
    pub from: (u32, u32),
    pub to: (u32, u32),
    pub slope: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NewtonPolygon {
    pub support: Vec<(u32, u32)>,
    pub hull: Vec<PolygonSegment>,
    /// mu = -slope per hull segment (deduplicated, ascending).
    pub candidate_exponents: Vec<f64>,
}

/// Lower-left convex envelope of the union of sectors {x >= p, y >= q} over
/// the support of the coefficient table.
pub fn newton_polygon(table: &CoeffTable) -> Result<NewtonPolygon> {
    let scale = table.scale();
    let tol = 1e-12 * scale.max(1e-300);
    let mut support: Vec<(u32, u32)> = table
        .entries
        .iter()
        .filter(|(_, _, c)| c.abs() > tol)
        .map(|(p, q, _)| (*p, *q))
        .collect();
    support.sort();
    support.dedup();
    if support.is_empty() {
        return Err(DynError::EmptySupport);
    }
    // Pareto-minimal points: nothing else weakly dominates them
    let minimal: Vec<(u32, u32)> = support
        .iter()
        .cloned()
        .filter(|&(p, q)| {
            !support
                .iter()
                .any(|&(a, b)| (a, b) != (p, q) && a <= p && b <= q)
        })
        .collect();
    // per p keep min q, sort by p: the chain runs top-left to bottom-right
    let mut chain = minimal.clone();
    chain.sort();
    // lower convex chain, keeping collinear vertices
    let cross = |o: (u32, u32), a: (u32, u32), b: (u32, u32)| -> i64 {
        let (ox, oy) = (o.0 as i64, o.1 as i64);
        let (ax, ay) = (a.0 as i64, a.1 as i64);
        let (bx, by) = (b.0 as i64, b.1 as i64);
        (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)
    };
    let mut hull_pts: Vec<(u32, u32)> = Vec::new();
    for &p in &chain {
        while hull_pts.len() >= 2
            && cross(
                hull_pts[hull_pts.len() - 2],
                hull_pts[hull_pts.len() - 1],
                p,
            ) < 0
        {
            hull_pts.pop();
        }
        hull_pts.push(p);
    }
    let mut hull = Vec::new();
    let mut exps = Vec::new();
    for w in hull_pts.windows(2) {
        let (p0, q0) = w[0];
        let (p1, q1) = w[1];
        if p1 == p0 {
            continue;
        }
        let slope = (q1 as f64 - q0 as f64) / (p1 as f64 - p0 as f64);
        hull.push(PolygonSegment {
            from: w[0],
            to: w[1],
            slope,
        });
        let mu = -slope;
        if !exps.iter().any(|e: &f64| (e - mu).abs() < 1e-12) {
            exps.push(mu);
        }
    }
    exps.sort_by(f64::total_cmp);
    Ok(NewtonPolygon {
        support,
        hull,
        candidate_exponents: exps,
    })
}

// ---------------------------------------------------------------------------
// classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct LocalBifClass {
    pub kind: BifKind,
    /// Branches exist for lambda > 0 (direct) or lambda < 0 (indirect).
    pub direct: bool,
    /// For pitchforks: stable branches created (supercritical).
    pub supercritical: Option<bool>,
    /// Branch prediction u(lambda): u = sign * sqrt(amp2_slope * lambda) for
    /// square-root branches, u = slope * lambda for transversal crossings.
    pub amp2_slope: Option<f64>,
    pub branch_slopes: Option<Vec<f64>>,
    /// Stability of the + branch (square-root case).
    pub plus_branch_stable: Option<bool>,
    pub polygon: NewtonPolygon,
}

/// The codimension-1 taxonomy keyed on the coefficient table: saddle-node
/// (c01, c20 != 0), transcritical (c01 = 0, c11^2 - 4 c20 c02 > 0),
/// pitchfork (odd symmetry or c01 = c20 = 0, keyed on c11, c30).
pub fn classify_local_bif(table: &CoeffTable, symmetry_odd: bool) -> Result<LocalBifClass> {
    let scale = table.scale().max(1e-300);
    let tol = 1e-8 * scale;
    let c01 = table.get(0, 1);
    let c02 = table.get(0, 2);
    let c11 = table.get(1, 1);
    let c20 = table.get(2, 0);
    let c30 = table.get(3, 0);
    let polygon = newton_polygon(table)?;
    if symmetry_odd || (c01.abs() <= tol && c20.abs() <= tol) {
        if c11.abs() > tol && c30.abs() > tol {
            // u^2 = -(c11/c30) lambda on the nontrivial branches
            let amp2 = -c11 / c30;
            return Ok(LocalBifClass {
                kind: BifKind::Pitchfork,
                direct: amp2 > 0.0,
                supercritical: Some(c30 < 0.0),
                amp2_slope: Some(amp2),
                branch_slopes: None,
                plus_branch_stable: Some(c30 < 0.0),
                polygon,
            });
        }
        return Err(DynError::Degenerate(
            "odd case needs c11, c30 nonzero".into(),
        ));
    }
    if c01.abs() > tol && c20.abs() > tol {
        // u = +- sqrt(-(c01/c20) lambda); dF/du at the branches ~ 2 c20 u
        let amp2 = -c01 / c20;
        return Ok(LocalBifClass {
            kind: BifKind::SaddleNode,
            direct: amp2 > 0.0,
            supercritical: None,
            amp2_slope: Some(amp2),
            branch_slopes: None,
            plus_branch_stable: Some(c20 < 0.0),
            polygon,
        });
    }
    if c01.abs() <= tol {
        let disc = c11 * c11 - 4.0 * c20 * c02;
        if disc > tol * tol {
            let sq = disc.sqrt();
            let slopes = if c20.abs() > tol {
                vec![(-c11 + sq) / (2.0 * c20), (-c11 - sq) / (2.0 * c20)]
            } else {
                vec![0.0, -c02 / c11]
            };
            return Ok(LocalBifClass {
                kind: BifKind::Transcritical,
                direct: true,
                supercritical: None,
                amp2_slope: None,
                branch_slopes: Some(slopes),
                plus_branch_stable: None,
                polygon,
            });
        }
    }
    Err(DynError::Degenerate(
        "no genericity condition satisfied".into(),
    ))
}

/// Odd-symmetry test of the reduced field: all even-in-u coefficients must
/// vanish (the paper's F(-u, lambda) = -F(u, lambda) condition at the level
/// of the table).
pub fn reduced_field_is_odd(table: &CoeffTable, tol: f64) -> bool {
    table
        .entries
        .iter()
        .all(|(p, _, c)| p % 2 == 1 || c.abs() <= tol)
}

// ---------------------------------------------------------------------------
// detection
// ---------------------------------------------------------------------------

fn eig_data(sys: &SystemDef, x: &[f64]) -> Result<Vec<Complex64>> {
    Ok(sys
        .jacobian_at(x)?
        .complex_eigenvalues()
        .iter()
        .cloned()
        .collect())
}

/// det J for flows (odd zero crossings flip the sign); prod (mu + 1) and
/// max |mu| - 1 of complex pairs for maps.
fn test_functions(sys: &SystemDef, x: &[f64]) -> Result<(f64, Option<f64>)> {
    let eigs = eig_data(sys, x)?;
    let scale = eigs.iter().map(|e| e.norm()).fold(1.0_f64, f64::max);
    match sys.kind {
        SystemKind::Flow => {
            // det J flips sign when an odd number of real eigenvalues cross 0
            let d = sys.jacobian_at(x)?.determinant();
            // Hopf test: real part of the complex pair closest to the axis
            let hopf = eigs
                .iter()
                .filter(|e| e.im > 1e-8 * scale)
                .map(|e| e.re)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()));
            Ok((d, hopf))
        }
        SystemKind::Map => {
            let flip: f64 = eigs
                .iter()
                .filter(|e| e.im.abs() <= 1e-8 * scale)
                .map(|e| e.re + 1.0)
                .product();
            let ns = eigs
                .iter()
                .filter(|e| e.im > 1e-8 * scale)
                .map(|e| e.norm() - 1.0)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()));
            Ok((flip, ns))
        }
    }
}

fn bisect_on<'a>(
    family: &Family<'a>,
    seed: &[f64],
    mut lo: f64,
    mut hi: f64,
    f: &dyn Fn(&SystemDef, &[f64]) -> Result<f64>,
) -> Result<(f64, Vec<f64>)> {
    let mut x = seed.to_vec();
    let sys_lo = family(lo)?;
    let x_lo = refine_equilibrium(&sys_lo, &x, 1e-10)?;
    let mut f_lo = f(&sys_lo, &x_lo)?;
    x = x_lo;
    for _ in 0..80 {
        if (hi - lo).abs() <= 1e-10 * lo.abs().max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let sys = family(mid)?;
        x = refine_equilibrium(&sys, &x, 1e-10)?;
        let fm = f(&sys, &x)?;
        if fm.signum() == f_lo.signum() {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
        }
    }
    let lambda_c = 0.5 * (lo + hi);
    let sys = family(lambda_c)?;
    let x = refine_equilibrium(&sys, &x, 1e-10)?;
    Ok((lambda_c, x))
}

/// Scans a branch for sign changes of the bifurcation test functions,
/// refines each crossing by bisection, and classifies zero crossings via the
/// reduced Taylor coefficients.
pub fn detect_bifurcations(
    family: &Family,
    param: &str,
    branch: &Branch,
) -> Result<Vec<BifurcationEvent>> {
    let mut events = Vec::new();
    if branch.points.len() < 3 {
        return Ok(events);
    }
    let kind = family(branch.points[0].lambda)?.kind;
    let mut vals = Vec::with_capacity(branch.points.len());
    for bp in &branch.points {
        let sys = family(bp.lambda)?;
        vals.push(test_functions(&sys, &bp.x)?);
    }
    for i in 0..branch.points.len() - 1 {
        let (a, b) = (&branch.points[i], &branch.points[i + 1]);
        let (za, ha) = vals[i];
        let (zb, hb) = vals[i + 1];
        // primary real crossing (det through 0 for flows; mu through -1 maps)
        if za.signum() != zb.signum() && za != 0.0 {
            let (lambda_c, x_c) = bisect_on(family, &a.x, a.lambda, b.lambda, &|s, x| {
                Ok(test_functions(s, x)?.0)
            })?;
            let sys_c = family(lambda_c)?;
            match kind {
                SystemKind::Flow => {
                    let (event_kind, data, confidence) =
                        classify_zero_crossing(&sys_c, param, &x_c, lambda_c);
                    events.push(BifurcationEvent {
                        kind: event_kind,
                        lambda_c,
                        location: x_c,
                        data,
                        confidence,
                    });
                }
                SystemKind::Map => {
                    // multiplier through -1: flip
                    let mut data = serde_json::json!({});
                    let mut confidence = 0.6;
                    if sys_c.dim == 1 {
                        if let Ok(fc) = flip_coefficients(&sys_c, param, lambda_c) {
                            confidence = 0.95;
                            data = serde_json::to_value(&fc).unwrap();
                        }
                    }
                    events.push(BifurcationEvent {
                        kind: BifKind::Flip,
                        lambda_c,
                        location: x_c,
                        data,
                        confidence,
                    });
                }
            }
        }
        // complex-pair crossing (Hopf for flows, Neimark-Sacker for maps)
        if let (Some(p), Some(q)) = (ha, hb) {
            if p.signum() != q.signum() && p != 0.0 {
                let (lambda_c, x_c) = bisect_on(family, &a.x, a.lambda, b.lambda, &|s, x| {
                    Ok(test_functions(s, x)?.1.unwrap_or(f64::NAN))
                })?;
                let sys_c = family(lambda_c)?;
                let eigs = eig_data(&sys_c, &x_c)?;
                let scale = eigs.iter().map(|e| e.norm()).fold(1.0_f64, f64::max);
                let pair = eigs
                    .iter()
                    .filter(|e| e.im > 1e-8 * scale)
                    .min_by(|x, y| x.re.abs().total_cmp(&y.re.abs()))
                    .cloned()
                    .unwrap_or(Complex64::new(0.0, 0.0));
                match kind {
                    SystemKind::Flow => {
                        // transversality a'(0) by finite differences of Re
                        let dl = 1e-4 * lambda_c.abs().max(1.0);
                        let re_at = |l: f64| -> Result<f64> {
                            let s = family(l)?;
                            let x = refine_equilibrium(&s, &x_c, 1e-10)?;
                            let eigs = eig_data(&s, &x)?;
                            Ok(eigs
                                .iter()
                                .filter(|e| e.im > 1e-8 * scale)
                                .map(|e| e.re)
                                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                                .unwrap_or(f64::NAN))
                        };
                        let a_prime = (re_at(lambda_c + dl)? - re_at(lambda_c - dl)?) / (2.0 * dl);
                        events.push(BifurcationEvent {
                            kind: BifKind::Hopf,
                            lambda_c,
                            location: x_c,
                            data: serde_json::json!({
                                "omega": pair.im,
                                "a_prime": a_prime,
                                "transversal": a_prime.abs() > 1e-6,
                            }),
                            confidence: if a_prime.abs() > 1e-6 { 0.95 } else { 0.5 },
                        });
                    }
                    SystemKind::Map => {
                        let mu = pair / pair.norm();
                        let strong = (1..=4u32)
                            .any(|j| (mu.powu(j) - Complex64::new(1.0, 0.0)).norm() < 1e-4);
                        events.push(BifurcationEvent {
                            kind: BifKind::NeimarkSacker,
                            lambda_c,
                            location: x_c,
                            data: serde_json::json!({
                                "theta": mu.arg() / std::f64::consts::TAU,
                                "strong_resonance": strong,
                            }),
                            confidence: if strong { 0.4 } else { 0.9 },
                        });
                    }
                }
            }
        }
    }
    Ok(events)
}

fn classify_zero_crossing(
    sys_c: &SystemDef,
    param: &str,
    x_c: &[f64],
    lambda_c: f64,
) -> (BifKind, serde_json::Value, f64) {
    match local_taylor_coeffs(sys_c, param, x_c, lambda_c) {
        Ok(table) => {
            let odd = reduced_field_is_odd(&table, 1e-10 * table.scale().max(1.0));
            match classify_local_bif(&table, odd) {
                Ok(class) => {
                    let kind = class.kind;
                    let data = serde_json::json!({
                        "coefficients": table,
                        "class": class,
                        "odd_symmetry": odd,
                    });
                    (kind, data, 0.95)
                }
                Err(e) => (
                    BifKind::SaddleNode,
                    serde_json::json!({"degenerate": e.to_string()}),
                    0.3,
                ),
            }
        }
        Err(e) => (
            BifKind::SaddleNode,
            serde_json::json!({"reduction_failed": e.to_string()}),
            0.3,
        ),
    }
}

// ---------------------------------------------------------------------------
// map bifurcation diagram
// ---------------------------------------------------------------------------

/// For each lambda: iterate `transient` steps from x0, record the next
/// `keep` values. Cells whose orbit escapes are skipped.
pub fn bifurcation_diagram(
    family: &Family,
    lambdas: &[f64],
    transient: usize,
    keep: usize,
    x0: f64,
) -> Vec<(f64, f64)> {
    let cells: Vec<Vec<(f64, f64)>> = lambdas
        .par_iter()
        .map(|&l| {
            let Ok(sys) = family(l) else {
                return Vec::new();
            };
            let mut x = x0;
            for _ in 0..transient {
                let Ok(out) = sys.evaluate(&[x]) else {
                    return Vec::new();
                };
                x = out[0];
                if !x.is_finite() {
                    return Vec::new();
                }
            }
            let mut pts = Vec::with_capacity(keep);
            for _ in 0..keep {
                let Ok(out) = sys.evaluate(&[x]) else {
                    return Vec::new();
                };
                x = out[0];
                if !x.is_finite() {
                    return Vec::new();
                }
                pts.push((l, x));
            }
            pts
        })
        .collect();
    cells.into_iter().flatten().collect()
}
