//! Poincare sections and return maps, periodic-orbit refinement, monodromy
//! and Floquet analysis, the Hill-equation propagator, period-doubling
//! cascades with Feigenbaum estimation, and flip-bifurcation coefficients.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{flow_to, variational_flow, FlowOptions, Horizon};
use crate::error::{DynError, Result};
use crate::systems::{SystemDef, SystemKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingDirection {
    Positive,
    Negative,
    Both,
}

/// A transverse hyperplane section <x - anchor, normal> = 0.
#[derive(Debug, Clone)]
pub struct SectionDef {
    pub anchor: Vec<f64>,
    pub normal: Vec<f64>,
    pub direction: CrossingDirection,
    pub t_min_return: f64,
    pub t_max_return: f64,
}

impl SectionDef {
    pub fn new(anchor: Vec<f64>, normal: Vec<f64>, t_min: f64, t_max: f64) -> Self {
        let n: f64 = normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(n > 0.0 && t_min > 0.0 && t_min < t_max);
        SectionDef {
            anchor,
            normal: normal.iter().map(|v| v / n).collect(),
            direction: CrossingDirection::Positive,
            t_min_return: t_min,
            t_max_return: t_max,
        }
    }

    pub fn with_direction(mut self, d: CrossingDirection) -> Self {
        self.direction = d;
        self
    }

    fn g(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(self.anchor.iter())
            .zip(self.normal.iter())
            .map(|((xi, ai), ni)| (xi - ai) * ni)
            .sum()
    }
}

/// First return to the section: integrates until the section function
/// changes sign in the requested direction inside the return window, then
/// refines the crossing time by bisection plus Newton to 1e-10.
pub fn poincare_map(
    sys: &SystemDef,
    sec: &SectionDef,
    x: &[f64],
    opts: &FlowOptions,
) -> Result<(Vec<f64>, f64)> {
    assert_eq!(sys.kind, SystemKind::Flow);
    let g0 = sec.g(x);
    if g0.abs() > 1e-9 {
        return Err(DynError::Usage(format!(
            "start point is off the section: g = {g0}"
        )));
    }
    let n_obs = 4096usize;
    let chunk = sec.t_max_return / n_obs as f64;
    let mut t = 0.0;
    let mut cur = x.to_vec();
    let mut g_prev = 0.0; // treat the departure point as on-section
    let mut prev = cur.clone();
    let mut crossing: Option<(f64, Vec<f64>, f64)> = None; // (t at chunk start, state, g)
    while t < sec.t_max_return {
        let next = flow_to(sys, &cur, chunk, opts)?;
        let t_next = t + chunk;
        let g_next = sec.g(&next);
        if t_next >= sec.t_min_return {
            let crossed = match sec.direction {
                CrossingDirection::Positive => g_prev < 0.0 && g_next >= 0.0,
                CrossingDirection::Negative => g_prev > 0.0 && g_next <= 0.0,
                CrossingDirection::Both => g_prev * g_next <= 0.0 && g_prev != g_next,
            };
            if crossed && g_prev != 0.0 {
                crossing = Some((t, prev.clone(), g_prev));
                break;
            }
        }
        prev = next.clone();
        g_prev = g_next;
        cur = next;
        t = t_next;
    }
    let Some((t_lo, x_lo, _)) = crossing else {
        return Err(DynError::NoReturn {
            t_max: sec.t_max_return,
        });
    };
    // bisection down to a small bracket, then Newton on the crossing time
    let mut a = 0.0_f64;
    let mut b = chunk;
    let mut xa = x_lo.clone();
    for _ in 0..40 {
        let mid = 0.5 * (a + b);
        let xm = flow_to(sys, &xa, mid - a, opts)?;
        if sec.g(&xm).signum() == sec.g(&xa).signum() {
            xa = xm;
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-12 * sec.t_max_return.max(1.0) {
            break;
        }
    }
    let mut t_cross = t_lo + a;
    let mut xc = xa;
    for _ in 0..8 {
        let g = sec.g(&xc);
        if g.abs() <= 1e-10 {
            break;
        }
        let f = sys.evaluate(&xc)?;
        let speed: f64 = f.iter().zip(sec.normal.iter()).map(|(a, b)| a * b).sum();
        if speed.abs() < 1e-8 {
            return Err(DynError::TangentialCrossing { speed: speed.abs() });
        }
        let dt = -g / speed;
        xc = flow_to(sys, &xc, dt, opts)?;
        t_cross += dt;
    }
    let f = sys.evaluate(&xc)?;
    let speed: f64 = f.iter().zip(sec.normal.iter()).map(|(a, b)| a * b).sum();
    if speed.abs() < 1e-8 {
        return Err(DynError::TangentialCrossing { speed: speed.abs() });
    }
    Ok((xc, t_cross))
}

/// Newton refinement of a periodic orbit from (x_guess, T_guess), using the
/// phase condition <f(x_guess), x - x_guess> = 0.
pub fn find_periodic_orbit(
    sys: &SystemDef,
    x_guess: &[f64],
    t_guess: f64,
    opts: &FlowOptions,
) -> Result<(Vec<f64>, f64)> {
    assert_eq!(sys.kind, SystemKind::Flow);
    let n = sys.dim;
    let f_anchor = sys.evaluate(x_guess)?;
    let anchor_norm: f64 = f_anchor.iter().map(|v| v * v).sum::<f64>().sqrt();
    if anchor_norm < 1e-8 {
        return Err(DynError::CollapsedToEquilibrium {
            residual: anchor_norm,
        });
    }
    let mut x = x_guess.to_vec();
    let mut t_per = t_guess;
    for _ in 0..40 {
        let var = variational_flow(sys, &x, Horizon::Time(t_per), opts)?;
        let phi = var.x_final.clone();
        let mut resid = DVector::zeros(n + 1);
        for i in 0..n {
            resid[i] = phi[i] - x[i];
        }
        resid[n] = f_anchor
            .iter()
            .zip(x.iter().zip(x_guess.iter()))
            .map(|(fi, (xi, gi))| fi * (xi - gi))
            .sum();
        let rn = resid.norm();
        let f_here = sys.evaluate(&x)?;
        let f_norm: f64 = f_here.iter().map(|v| v * v).sum::<f64>().sqrt();
        if f_norm < 1e-8 {
            return Err(DynError::CollapsedToEquilibrium { residual: f_norm });
        }
        if rn <= 1e-9 {
            return Ok((x, t_per));
        }
        let f_end = sys.evaluate(&phi)?;
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = var.u[(i, j)] - if i == j { 1.0 } else { 0.0 };
            }
            jac[(i, n)] = f_end[i];
            jac[(n, i)] = f_anchor[i];
        }
        let step = jac
            .lu()
            .solve(&resid)
            .ok_or_else(|| DynError::SingularJacobian("periodic-orbit Newton".into()))?;
        for i in 0..n {
            x[i] -= step[i];
        }
        t_per -= step[n];
        if !(t_per.is_finite() && t_per > 0.0) {
            return Err(DynError::NoConvergence("period became invalid".into()));
        }
    }
    Err(DynError::NoConvergence(
        "periodic-orbit Newton did not converge".into(),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct MonodromyResult {
    pub u_t: Vec<Vec<f64>>,
    pub multipliers: Vec<Complex64>,
    pub exponents: Vec<Complex64>,
    /// min_i |multiplier_i - 1|; small along a genuine periodic orbit.
    pub trivial_residual: f64,
}

fn monodromy_from_matrix(u: &DMatrix<f64>, period: f64) -> MonodromyResult {
    let multipliers: Vec<Complex64> = u.complex_eigenvalues().iter().cloned().collect();
    let exponents: Vec<Complex64> = multipliers
        .iter()
        .map(|m| {
            // principal log; multipliers on the negative real axis get
            // imaginary part pi / T
            Complex64::new(m.norm().ln() / period, m.arg() / period)
        })
        .collect();
    let trivial_residual = multipliers
        .iter()
        .map(|m| (m - Complex64::new(1.0, 0.0)).norm())
        .fold(f64::INFINITY, f64::min);
    MonodromyResult {
        u_t: (0..u.nrows())
            .map(|r| (0..u.ncols()).map(|c| u[(r, c)]).collect())
            .collect(),
        multipliers,
        exponents,
        trivial_residual,
    }
}

/// Principal solution over one period along the orbit through x0.
pub fn monodromy(
    sys: &SystemDef,
    x0: &[f64],
    period: f64,
    opts: &FlowOptions,
) -> Result<MonodromyResult> {
    let var = variational_flow(sys, x0, Horizon::Time(period), opts)?;
    Ok(monodromy_from_matrix(&var.u, period))
}

/// Rotation-like propagator of x'' = -w^2 x over time t for constant w.
pub fn harmonic_propagator(w: f64, t: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            (w * t).cos(),
            (w * t).sin() / w,
            -w * (w * t).sin(),
            (w * t).cos(),
        ],
    )
}

/// Closed-form monodromy of the Hill system: the product of the two
/// half-period constant-frequency propagators. det M = 1 exactly.
pub fn hill_monodromy(period: f64, omega: f64) -> MonodromyResult {
    assert!(period > 0.0 && omega > 0.0);
    let m = harmonic_propagator(1.0, period / 2.0) * harmonic_propagator(omega, period / 2.0);
    monodromy_from_matrix(&m, period)
}

// ---------------------------------------------------------------------------
// period-doubling cascade
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct CascadeResult {
    /// lambda_n: parameter where the 2^{n-1}-cycle loses stability, n >= 1.
    pub lambdas: Vec<f64>,
    /// delta_n = (lambda_n - lambda_{n-1}) / (lambda_{n+1} - lambda_n),
    /// defined for 2 <= n <= len-1; stored as (n, delta).
    pub deltas: Vec<(usize, f64)>,
    /// Aitken extrapolation of the accumulation point.
    pub accumulation_estimate: f64,
}

/// One-parameter family of 1D maps.
pub type MapFamily<'a> = dyn Fn(f64) -> Result<SystemDef> + 'a;

fn map_eval(sys: &SystemDef, x: f64) -> Result<f64> {
    Ok(sys.evaluate(&[x])?[0])
}

fn map_deriv(sys: &SystemDef, x: f64) -> Result<f64> {
    Ok(sys.jacobian_at(&[x])?[(0, 0)])
}

/// Cycle multiplier via the chain rule: product of f' along the cycle.
fn cycle_multiplier(sys: &SystemDef, x0: f64, p: usize) -> Result<f64> {
    let mut m = 1.0;
    let mut x = x0;
    for _ in 0..p {
        m *= map_deriv(sys, x)?;
        x = map_eval(sys, x)?;
    }
    Ok(m)
}

/// Newton on F^p(x) - x = 0, derivative by the chain rule.
fn refine_cycle(sys: &SystemDef, x0: f64, p: usize) -> Result<f64> {
    let mut x = x0;
    for _ in 0..60 {
        let mut fx = x;
        let mut deriv = 1.0;
        for _ in 0..p {
            deriv *= map_deriv(sys, fx)?;
            fx = map_eval(sys, fx)?;
        }
        let g = fx - x;
        if g.abs() < 1e-13 {
            return Ok(x);
        }
        let dg = deriv - 1.0;
        if dg.abs() < 1e-12 {
            return Err(DynError::SingularJacobian("cycle Newton".into()));
        }
        x -= g / dg;
        if !x.is_finite() {
            return Err(DynError::NonFiniteState { t: 0.0 });
        }
    }
    Err(DynError::NoConvergence("cycle Newton".into()))
}

/// Acquire the attracting 2^{n-1}-cycle at lambda by transient iteration
/// from the critical point, then Newton-polish. Checks the least period.
fn acquire_cycle(family: &MapFamily, lambda: f64, p: usize, x0: f64) -> Result<f64> {
    let sys = family(lambda)?;
    let mut x = x0;
    let transient = 20_000 + 4_000 * p;
    for _ in 0..transient {
        x = map_eval(&sys, x)?;
        if !x.is_finite() {
            return Err(DynError::NonFiniteState { t: 0.0 });
        }
    }
    let x = refine_cycle(&sys, x, p)?;
    // reject collapse onto a lower-period orbit
    if p > 1 {
        let mut y = x;
        for _ in 0..p / 2 {
            y = map_eval(&sys, y)?;
        }
        if (y - x).abs() < 1e-10 {
            return Err(DynError::NoConvergence(format!(
                "cycle of period {p} collapsed to period {}",
                p / 2
            )));
        }
    }
    Ok(x)
}

/// Locates the parameter values where successive 2^{n-1}-cycles lose
/// stability (multiplier through -1), by bisection on the cycle multiplier
/// to 1e-10 in lambda, and estimates the Feigenbaum ratio and accumulation
/// point.
pub fn period_doubling_cascade(
    family: &MapFamily,
    lambda_range: (f64, f64),
    n_max: usize,
) -> Result<CascadeResult> {
    assert!(n_max >= 1);
    let mut lambdas: Vec<f64> = Vec::new();
    let mut window_guess = (lambda_range.1 - lambda_range.0) * 0.5;
    let mut lambda_lo = lambda_range.0;
    let mut cycle_seed = 0.5_f64;
    for level in 1..=n_max {
        let p = 1usize << (level - 1);
        // probe point safely inside the stable window of the 2^{p-1} cycle
        let mut probe = lambda_lo + 0.1 * window_guess;
        let mut x =
            acquire_cycle(family, probe, p, cycle_seed).map_err(|e| DynError::CascadeLost {
                level,
                reason: e.to_string(),
            })?;
        // march upward tracking the cycle until the multiplier crosses -1
        let step = window_guess * 0.2;
        let mut bracket: Option<(f64, f64, f64)> = None; // (lo, hi, x at lo)
        let mut guard = 0;
        loop {
            let sys = family(probe)?;
            x = refine_cycle(&sys, x, p).map_err(|e| DynError::CascadeLost {
                level,
                reason: e.to_string(),
            })?;
            let m = cycle_multiplier(&sys, x, p)?;
            if m < -1.0 {
                bracket = Some((probe - step, probe, x));
                break;
            }
            probe += step;
            guard += 1;
            if probe > lambda_range.1 || guard > 10_000 {
                break;
            }
        }
        let Some((mut lo, mut hi, mut x_track)) = bracket else {
            return Err(DynError::CascadeLost {
                level,
                reason: "multiplier never crossed -1 in range".into(),
            });
        };
        // bisection on multiplier + 1
        for _ in 0..100 {
            if hi - lo <= 1e-11 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let sys = family(mid)?;
            x_track = refine_cycle(&sys, x_track, p).map_err(|e| DynError::CascadeLost {
                level,
                reason: e.to_string(),
            })?;
            let m = cycle_multiplier(&sys, x_track, p)?;
            if m > -1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let lambda_n = 0.5 * (lo + hi);
        if let Some(prev) = lambdas.last() {
            window_guess = (lambda_n - prev) / 4.0;
        } else {
            window_guess = (lambda_range.1 - lambda_n).min(0.5);
        }
        cycle_seed = x_track;
        lambda_lo = lambda_n;
        lambdas.push(lambda_n);
    }
    let mut deltas = Vec::new();
    for n in 2..lambdas.len() {
        let d = (lambdas[n - 1] - lambdas[n - 2]) / (lambdas[n] - lambdas[n - 1]);
        deltas.push((n, d));
    }
    // Aitken extrapolation on the last three doubling values
    let m = lambdas.len();
    let accumulation_estimate = if m >= 3 {
        let (a, b, c) = (lambdas[m - 3], lambdas[m - 2], lambdas[m - 1]);
        let denom = (c - b) - (b - a);
        if denom.abs() > 0.0 {
            c - (c - b) * (c - b) / denom
        } else {
            c
        }
    } else {
        *lambdas.last().unwrap()
    };
    Ok(CascadeResult {
        lambdas,
        deltas,
        accumulation_estimate,
    })
}

// ---------------------------------------------------------------------------
// flip coefficients
// ---------------------------------------------------------------------------

/// Taylor data of a 1D map family at a flip point, written as
/// u_{k+1} = -u_k + G(u_k, l) with G = c01 l + c02 l^2 + c11 u l
/// + c20 u^2 + c30 u^3 + ...
#[derive(Debug, Clone, Serialize)]
pub struct FlipCoefficients {
    pub c01: f64,
    pub c02: f64,
    pub c11: f64,
    pub c20: f64,
    pub c30: f64,
    pub schwartzian: f64,
    /// c11 + c20 c01 != 0 (the fixed branch changes stability)
    pub transversal: bool,
    /// c30 + c20^2 != 0 (the period-2 branch is quadratic)
    pub nondegenerate: bool,
    /// Stable period-2 orbit iff c30 + c20^2 > 0; equivalently negative
    /// Schwartzian derivative.
    pub supercritical: bool,
    /// Predicted period-2 amplitude slope: u^2 = amp_slope * (lambda - lambda_c).
    pub amp_slope: f64,
}

/// Coefficients by exact polynomial data when the family provides it, else
/// Richardson-extrapolated central differences.
pub fn flip_coefficients(
    sys_at_crit: &SystemDef,
    param: &str,
    lambda_c: f64,
) -> Result<FlipCoefficients> {
    assert_eq!(sys_at_crit.kind, SystemKind::Map);
    assert_eq!(sys_at_crit.dim, 1);
    let x_star = crate::equilibria::refine_equilibrium(sys_at_crit, &[0.5], 1e-12)
        .or_else(|_| crate::equilibria::refine_equilibrium(sys_at_crit, &[0.0], 1e-12))?;
    let slope = map_deriv(sys_at_crit, x_star[0])?;
    if (slope + 1.0).abs() > 1e-6 {
        return Err(DynError::NotCritical { derivative: slope });
    }
    // local coordinates: G(u, l) = F(x* + u; lambda_c + l) - x* + u
    let coeff = |p: u32, q: u32| -> Result<f64> {
        if let Some(polys) = sys_at_crit.polynomial_field(Some(param)) {
            // shift the promoted polynomial to (x*, lambda_c)
            let f = polys[0].to_f64_poly();
            let local = f.shift(&[x_star[0], lambda_c]);
            let mut c = local.coeff(&[p, q]);
            if (p, q) == (0, 0) {
                c -= x_star[0];
            }
            if (p, q) == (1, 0) {
                c += 1.0;
            }
            Ok(c)
        } else {
            // central differences with one Richardson step
            let g = |u: f64, l: f64| -> Result<f64> {
                let sysl = sys_at_crit.with_param(param, lambda_c + l)?;
                Ok(map_eval(&sysl, x_star[0] + u)? - x_star[0] + u)
            };
            let d = |h: f64| -> Result<f64> {
                // mixed partial of order (p, q) by nested central differences
                let mut sum = 0.0;
                for i in 0..=p {
                    for j in 0..=q {
                        let sign = if (p - i + q - j).is_multiple_of(2) {
                            1.0
                        } else {
                            -1.0
                        };
                        let bin = |n: u32, k: u32| -> f64 {
                            (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
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
                let fact =
                    (1..=p).product::<u32>().max(1) as f64 * (1..=q).product::<u32>().max(1) as f64;
                Ok(sum / h.powi((p + q) as i32) / fact * 1.0)
            };
            let h = 1e-2;
            let d1 = d(h)?;
            let d2 = d(h / 2.0)?;
            Ok((4.0 * d2 - d1) / 3.0)
        }
    };
    let c01 = coeff(0, 1)?;
    let c02 = coeff(0, 2)?;
    let c11 = coeff(1, 1)?;
    let c20 = coeff(2, 0)?;
    let c30 = coeff(3, 0)?;
    let df2 = 2.0 * c20;
    let df3 = 6.0 * c30;
    let schwartzian = df3 / slope - 1.5 * (df2 / slope) * (df2 / slope);
    let transversal = (c11 + c20 * c01).abs() > 1e-10;
    let nondegenerate = (c30 + c20 * c20).abs() > 1e-10;
    let supercritical = c30 + c20 * c20 > 0.0;
    let amp_slope = if nondegenerate {
        -(c11 + c20 * c01) / (c30 + c20 * c20)
    } else {
        f64::NAN
    };
    Ok(FlipCoefficients {
        c01,
        c02,
        c11,
        c20,
        c30,
        schwartzian,
        transversal,
        nondegenerate,
        supercritical,
        amp_slope,
    })
}
