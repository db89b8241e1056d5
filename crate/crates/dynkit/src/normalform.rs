//! Resonance detection, homological equations on homogeneous polynomial
//! spaces, the first-order standard-map conjugacy with its small divisors,
//! and numerical Hopf-coefficient sign estimation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::dynamics::{flow_to, FlowOptions};
use crate::equilibria::refine_equilibrium;
use crate::error::{DynError, Result};
use crate::poly::{monomials_of_degree, MultiIndex, Poly, TaylorMap};
use crate::systems::SystemDef;

pub const RESONANCE_TOL: f64 = 1e-8;

/// One resonance hit: component j, multi-index p with |p| = k, and the
/// residual |p . a - a_j|.
#[derive(Debug, Clone, Serialize)]
pub struct ResonanceHit {
    pub component: usize,
    pub p: MultiIndex,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResonanceReport {
    pub k: usize,
    pub hits: Vec<ResonanceHit>,
}

/// Enumerates all |p| = k and components j, reporting integer relations
/// p . a = a_j within `tol` (relative to the eigenvalue scale).
pub fn resonances(eigs: &[Complex64], k: usize, tol: f64) -> ResonanceReport {
    assert!(k >= 2);
    let n = eigs.len();
    let scale = eigs.iter().map(|e| e.norm()).fold(1.0_f64, f64::max);
    let mut hits = Vec::new();
    for p in monomials_of_degree(n, k as u32) {
        let dot: Complex64 = p
            .iter()
            .zip(eigs.iter())
            .map(|(&pi, a)| a * pi as f64)
            .sum();
        for (j, aj) in eigs.iter().enumerate() {
            let residual = (dot - aj).norm();
            if residual <= tol * scale {
                hits.push(ResonanceHit {
                    component: j,
                    p: p.clone(),
                    residual,
                });
            }
        }
    }
    ResonanceReport { k, hits }
}

/// The linear map h |-> Dh(y) A y - A h(y) on the space H_k of homogeneous
/// degree-k polynomial maps, assembled on the monomial basis
/// {y^alpha e_j} indexed as alpha-major, component-minor.
#[derive(Debug, Clone)]
pub struct HomogeneousOperator {
    pub k: usize,
    pub monomials: Vec<MultiIndex>,
    pub matrix: DMatrix<f64>,
}

pub fn adk_operator(a: &DMatrix<f64>, k: usize) -> HomogeneousOperator {
    assert!(k >= 2);
    let n = a.nrows();
    let monos = monomials_of_degree(n, k as u32);
    let dim = n * monos.len();
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let idx = |mono: usize, j: usize| mono * n + j;
    for (mi, alpha) in monos.iter().enumerate() {
        for j in 0..n {
            let col = idx(mi, j);
            // derivative part: sum_i alpha_i y^{alpha - e_i} (A y)_i e_j
            for i in 0..n {
                if alpha[i] == 0 {
                    continue;
                }
                for l in 0..n {
                    if a[(i, l)] == 0.0 {
                        continue;
                    }
                    let mut beta = alpha.clone();
                    beta[i] -= 1;
                    beta[l] += 1;
                    let row_mono = monos.binary_search(&beta).expect("degree preserved");
                    m[(idx(row_mono, j), col)] += alpha[i] as f64 * a[(i, l)];
                }
            }
            // -A h part: -sum_r a_{rj} y^alpha e_r
            for r in 0..n {
                if a[(r, j)] != 0.0 {
                    m[(idx(mi, r), col)] -= a[(r, j)];
                }
            }
        }
    }
    HomogeneousOperator {
        k,
        monomials: monos,
        matrix: m,
    }
}

/// Outcome of removing the non-resonant degree-k terms from a vector field.
#[derive(Debug, Clone)]
pub struct NormalFormStep {
    pub k: usize,
    /// The degree-k terms that survive (in the complement of range ad_k A).
    pub resonant: TaylorMap<f64>,
    /// The degree-k change of variables y = z + h_k(z).
    pub h_k: TaylorMap<f64>,
    /// Field after the substitution, truncated at the working order.
    pub transformed: TaylorMap<f64>,
}

fn taylor_to_flat(map: &TaylorMap<f64>, monos: &[MultiIndex]) -> DVector<f64> {
    let n = map.out_dim;
    let mut v = DVector::zeros(n * monos.len());
    for (mi, alpha) in monos.iter().enumerate() {
        for j in 0..n {
            v[mi * n + j] = map.components[j].coeff(alpha);
        }
    }
    v
}

fn flat_to_taylor(v: &DVector<f64>, monos: &[MultiIndex], nvars: usize) -> TaylorMap<f64> {
    let mut comps = vec![Poly::zero(nvars); nvars];
    for (mi, alpha) in monos.iter().enumerate() {
        for (j, comp) in comps.iter_mut().enumerate() {
            let c = v[mi * nvars + j];
            if c != 0.0 {
                comp.terms.insert(alpha.clone(), c);
            }
        }
    }
    TaylorMap::new(nvars, comps)
}

/// Applies y = z + h(z) to the field, i.e. returns
/// (I + Dh)^{-1} f(z + h(z)) truncated at `order`.
pub fn substitute_near_identity(
    field: &TaylorMap<f64>,
    h: &TaylorMap<f64>,
    order: u32,
) -> TaylorMap<f64> {
    let n = field.out_dim;
    let args: Vec<Poly<f64>> = (0..n)
        .map(|i| Poly::var(n, i).add(&h.components[i]))
        .collect();
    let composed: Vec<Poly<f64>> = field
        .components
        .iter()
        .map(|p| p.compose(&args, order))
        .collect();
    // Neumann series for (I + Dh)^{-1}: entries of Dh have degree >= 1
    let dh: Vec<Vec<Poly<f64>>> = (0..n)
        .map(|i| (0..n).map(|j| h.components[i].partial(j)).collect())
        .collect();
    if h.components.iter().all(|p| p.is_zero()) {
        return TaylorMap::new(n, composed);
    }
    let mut result = composed.clone();
    // power = (-Dh)^m . composed, accumulated until it truncates away
    let mut power = composed;
    let min_gain = h
        .components
        .iter()
        .map(|p| p.degree())
        .max()
        .unwrap_or(2)
        .saturating_sub(1);
    let mut applied = 0u32;
    loop {
        applied += min_gain.max(1);
        if applied > order {
            break;
        }
        let mut next = vec![Poly::zero(n); n];
        for (i, nx) in next.iter_mut().enumerate() {
            for j in 0..n {
                if !dh[i][j].is_zero() && !power[j].is_zero() {
                    *nx = nx.sub(&dh[i][j].mul_trunc(&power[j], order));
                }
            }
        }
        if next.iter().all(|p| p.is_zero()) {
            break;
        }
        for i in 0..n {
            result[i] = result[i].add(&next[i]);
        }
        power = next;
    }
    TaylorMap::new(n, result)
}

/// One homological step at degree k: splits g_k into range(ad_k A) and the
/// kernel-aligned complement, solves for h_k with singular directions
/// zeroed, and pushes the substitution through the higher degrees.
pub fn normal_form_step(field: &TaylorMap<f64>, k: usize, order: usize) -> NormalFormStep {
    let n = field.out_dim;
    // linear part
    let mut a = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut e = vec![0u32; n];
        e[j] = 1;
        for i in 0..n {
            a[(i, j)] = field.components[i].coeff(&e);
        }
    }
    let op = adk_operator(&a, k);
    let monos = op.monomials.clone();
    let dim = op.matrix.nrows();
    let g_k = TaylorMap::new(
        n,
        field
            .components
            .iter()
            .map(|p| p.homogeneous_part(k as u32))
            .collect(),
    );
    let g_flat = taylor_to_flat(&g_k, &monos);

    let svd = op.matrix.clone().svd(true, true);
    let smax = svd.singular_values.max().max(1e-300);
    let kernel_cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= RESONANCE_TOL * smax)
        .collect();

    let (h_flat, resonant_flat) = if kernel_cols.is_empty() {
        let h = svd.solve(&g_flat, RESONANCE_TOL * smax).expect("svd solve");
        (h.clone(), &g_flat - &op.matrix * h)
    } else {
        // kernel basis from the right singular vectors; for semisimple A the
        // kernel complements the range, so [ad | K] spans everything
        let vt = svd.v_t.as_ref().unwrap();
        let s = kernel_cols.len();
        let mut aug = DMatrix::<f64>::zeros(dim, dim + s);
        aug.view_mut((0, 0), (dim, dim)).copy_from(&op.matrix);
        for (c, &kc) in kernel_cols.iter().enumerate() {
            for r in 0..dim {
                aug[(r, dim + c)] = vt[(kc, r)];
            }
        }
        let aug_svd = aug.svd(true, true);
        let sol = aug_svd
            .solve(&g_flat, RESONANCE_TOL * smax)
            .expect("augmented solve");
        let h = DVector::from_iterator(dim, (0..dim).map(|i| sol[i]));
        // project h off the kernel for a deterministic representative
        let mut h_clean = h.clone();
        for &kc in &kernel_cols {
            let kvec = DVector::from_iterator(dim, (0..dim).map(|r| vt[(kc, r)]));
            let proj = h_clean.dot(&kvec);
            h_clean -= kvec * proj;
        }
        let resonant = &g_flat - &op.matrix * &h_clean;
        (h_clean, resonant)
    };

    let h_k = flat_to_taylor(&h_flat, &monos, n);
    let resonant = flat_to_taylor(&resonant_flat, &monos, n);
    let transformed = substitute_near_identity(field, &h_k, order as u32);
    NormalFormStep {
        k,
        resonant,
        h_k,
        transformed,
    }
}

/// Full normal-form pass: normalizes degrees 2..=order in sequence.
#[derive(Debug, Clone)]
pub struct NormalFormResult {
    pub normal_form: TaylorMap<f64>,
    pub steps: Vec<NormalFormStep>,
}

pub fn normal_form(field: &TaylorMap<f64>, order: usize) -> NormalFormResult {
    let mut current = field.clone();
    let mut steps = Vec::new();
    for k in 2..=order {
        let step = normal_form_step(&current, k, order);
        current = step.transformed.clone();
        steps.push(step);
    }
    NormalFormResult {
        normal_form: current,
        steps,
    }
}

/// Homological coefficients for a map near a Neimark-Sacker point:
/// h_pq = c_pq / (mu^p conj(mu)^q - mu), with strong resonances mu^j = 1
/// (j <= 4) rejected and non-removable terms flagged.
#[derive(Debug, Clone, Serialize)]
pub struct NeimarkCoeffs {
    pub solvable: Vec<(u32, u32, [f64; 2])>,
    pub non_removable: Vec<(u32, u32)>,
}

pub fn neimark_homological_coeffs(
    mu: Complex64,
    c: &[(u32, u32, Complex64)],
    tol: f64,
) -> Result<NeimarkCoeffs> {
    for j in 1..=4u32 {
        if (mu.powu(j) - Complex64::new(1.0, 0.0)).norm() <= tol {
            return Err(DynError::StrongResonance { j });
        }
    }
    let mut solvable = Vec::new();
    let mut non_removable = Vec::new();
    for &(p, q, cpq) in c {
        let denom = mu.powu(p) * mu.conj().powu(q) - mu;
        if denom.norm() <= tol {
            non_removable.push((p, q));
        } else {
            let h = cpq / denom;
            solvable.push((p, q, [h.re, h.im]));
        }
    }
    Ok(NeimarkCoeffs {
        solvable,
        non_removable,
    })
}

/// First-order conjugacy data for the standard map: the change of variables
/// q = phi + eps f1, p = I + eps g1 straightens the dynamics at order eps.
#[derive(Debug, Clone)]
pub struct StandardMapConjugacy {
    pub omega: f64,
}

impl StandardMapConjugacy {
    /// f1(phi) = sin(phi) / (4 sin^2(omega/2))
    pub fn f1(&self, phi: f64) -> f64 {
        let s = (self.omega / 2.0).sin();
        phi.sin() / (4.0 * s * s)
    }

    /// g1(phi) = cos(phi - omega/2) / (2 sin(omega/2))
    pub fn g1(&self, phi: f64) -> f64 {
        (phi - self.omega / 2.0).cos() / (2.0 * (self.omega / 2.0).sin())
    }

    /// Max residual of the two order-eps functional equations on a phi grid:
    /// f1(phi+w) - f1(phi) - g1(phi+w) and g1(phi+w) - g1(phi) + sin(phi).
    pub fn residual_on_grid(&self, n: usize) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..n {
            let phi = i as f64 / n as f64 * std::f64::consts::TAU;
            let r1 = self.f1(phi + self.omega) - self.f1(phi) - self.g1(phi + self.omega);
            let r2 = self.g1(phi + self.omega) - self.g1(phi) + phi.sin();
            worst = worst.max(r1.abs()).max(r2.abs());
        }
        worst
    }
}

/// Validity requires e^{i omega} != 1; within `tol` of 0 (mod 2 pi) the
/// divisors 1 - e^{i omega} collapse.
pub fn standard_map_conjugacy_o1(omega: f64, tol: f64) -> Result<StandardMapConjugacy> {
    let m = omega.rem_euclid(std::f64::consts::TAU);
    let dist = m.min(std::f64::consts::TAU - m);
    if dist <= tol {
        return Err(DynError::SmallDivisor { omega, tol });
    }
    Ok(StandardMapConjugacy { omega })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HopfVerdict {
    Supercritical,
    Subcritical,
}

#[derive(Debug, Clone, Serialize)]
pub struct HopfEstimate {
    pub verdict: HopfVerdict,
    /// Fitted K in r = K sqrt(|lambda - lambda_c|), when a fit succeeded.
    pub k: f64,
    pub r2: f64,
    pub probes: Vec<(f64, f64)>,
    pub via_reverse_time: bool,
    /// True when the verdict came from the amplitude-jump criterion (no
    /// small cycle exists on the unstable side).
    pub amplitude_jump: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct HopfProbeOptions {
    /// Initial kick off the equilibrium, relative to 1 + |x*|.
    pub kick_rel: f64,
    /// Distance from the equilibrium that counts as departure, same scale.
    pub departure_rel: f64,
    /// Hard cap on the departure-phase integration time.
    pub max_transient: f64,
    /// Post-departure settling cap.
    pub max_settle: f64,
    pub sample_time: f64,
}

impl Default for HopfProbeOptions {
    fn default() -> Self {
        HopfProbeOptions {
            kick_rel: 1e-2,
            departure_rel: 0.1,
            max_transient: 20_000.0,
            max_settle: 2_000.0,
            sample_time: 50.0,
        }
    }
}

/// Amplitude of the limit set reached from a kick off the equilibrium. The
/// growth rate near onset is a'(0) (lambda - lambda_c), so the transient is
/// driven by an explicit departure phase rather than a fixed horizon.
fn cycle_amplitude(
    sys: &SystemDef,
    eq: &[f64],
    reverse: bool,
    opts: &HopfProbeOptions,
    lambda: f64,
) -> Result<f64> {
    // a tight per-chunk step budget turns pathologically stiff escapes
    // (reverse-time probing of a 3D flow) into a fast failure
    let iopts = FlowOptions {
        max_steps: 200_000,
        ..FlowOptions::with_tol(1e-9)
    };
    let scale = 1.0 + eq.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sign = if reverse { -1.0 } else { 1.0 };
    let dist = |x: &[f64]| -> f64 {
        x.iter()
            .zip(eq.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut x: Vec<f64> = eq.to_vec();
    x[0] += opts.kick_rel * scale;
    let chunk = 5.0;
    let mut t = 0.0;
    while dist(&x) < opts.departure_rel * scale {
        x = flow_to(sys, &x, sign * chunk, &iopts)?;
        t += chunk;
        if t > opts.max_transient {
            return Err(DynError::NoCycleFound { lambda });
        }
    }
    let settle = (2.0 * t).clamp(chunk, opts.max_settle);
    let mut settled = 0.0;
    while settled < settle {
        let step = chunk.min(settle - settled);
        x = flow_to(sys, &x, sign * step, &iopts)?;
        settled += step;
    }
    let mut amp: f64 = 0.0;
    let dt = opts.sample_time / 400.0;
    for _ in 0..400 {
        x = flow_to(sys, &x, sign * dt, &iopts)?;
        amp = amp.max(dist(&x));
    }
    Ok(amp)
}

fn sqrt_law_fit(probes: &[(f64, f64)], lambda_c: f64) -> (f64, f64) {
    let s: Vec<f64> = probes
        .iter()
        .map(|(l, _)| (l - lambda_c).abs().sqrt())
        .collect();
    let r: Vec<f64> = probes.iter().map(|(_, a)| *a).collect();
    let k = s.iter().zip(r.iter()).map(|(si, ri)| si * ri).sum::<f64>()
        / s.iter().map(|si| si * si).sum::<f64>().max(1e-300);
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let ss_tot: f64 = r.iter().map(|ri| (ri - mean) * (ri - mean)).sum();
    let ss_res: f64 = s
        .iter()
        .zip(r.iter())
        .map(|(si, ri)| (ri - k * si) * (ri - k * si))
        .sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        0.0
    };
    (k, r2)
}

/// Determines super/subcriticality of a detected Hopf point numerically:
/// forward probes on the unstable side hunt for small attracting cycles with
/// the sqrt amplitude law; failing that, reverse-time probes on the stable
/// side hunt for the repelling cycle; failing that, the absence of any small
/// cycle on the unstable side (amplitude jump) decides subcritical.
pub fn hopf_sign_estimate(
    family: &dyn Fn(f64) -> Result<SystemDef>,
    lambda_c: f64,
    eq_seed: &[f64],
    probe_lambdas: &[f64],
    opts: &HopfProbeOptions,
) -> Result<HopfEstimate> {
    assert!(!probe_lambdas.is_empty());
    // transversality direction: which side of lambda_c destabilizes the pair
    let side = {
        let spread = probe_lambdas
            .iter()
            .map(|l| (l - lambda_c).abs())
            .fold(0.0_f64, f64::max)
            .max(1e-6 * lambda_c.abs().max(1.0));
        let re_at = |l: f64| -> Result<f64> {
            let sys = family(l)?;
            let eq = refine_equilibrium(&sys, eq_seed, 1e-10)?;
            let eigs = sys.jacobian_at(&eq)?.complex_eigenvalues();
            let scale = eigs.iter().map(|e| e.norm()).fold(1.0_f64, f64::max);
            Ok(eigs
                .iter()
                .filter(|e| e.im > 1e-8 * scale)
                .map(|e| e.re)
                .min_by(|a, b| a.abs().total_cmp(&b.abs()))
                .unwrap_or(f64::NAN))
        };
        let dl = 0.5 * spread;
        if re_at(lambda_c + dl)? >= re_at(lambda_c - dl)? {
            1.0
        } else {
            -1.0
        }
    };
    let mut forward = Vec::new();
    let mut equilibrium_scale = 0.0_f64;
    for &l in probe_lambdas {
        let lam = lambda_c + side * (l - lambda_c).abs(); // unstable side
        let sys = family(lam)?;
        let eq = refine_equilibrium(&sys, eq_seed, 1e-10)?;
        equilibrium_scale = equilibrium_scale
            .max(eq.iter().map(|v| v.abs()).fold(0.0_f64, f64::max))
            .max(1.0);
        if let Ok(amp) = cycle_amplitude(&sys, &eq, false, opts, lam) {
            forward.push((lam, amp));
        }
    }
    if forward.len() == probe_lambdas.len() {
        let (k, r2) = sqrt_law_fit(&forward, lambda_c);
        // a genuine sqrt law passes through zero: the amplitude ratio across
        // the probe range must track sqrt(lambda ratio), which rules out a
        // distant attractor of roughly constant amplitude
        let (l_min, a_min) = forward
            .iter()
            .cloned()
            .min_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        let (l_max, a_max) = forward
            .iter()
            .cloned()
            .max_by(|x, y| x.0.total_cmp(&y.0))
            .unwrap();
        let expected_ratio = ((l_min - lambda_c).abs() / (l_max - lambda_c).abs()).sqrt();
        let shrinks = a_max > 0.0 && a_min / a_max <= 1.5 * expected_ratio;
        if r2 >= 0.9 && shrinks {
            return Ok(HopfEstimate {
                verdict: HopfVerdict::Supercritical,
                k,
                r2,
                probes: forward,
                via_reverse_time: false,
                amplitude_jump: false,
            });
        }
        // try the stable side in reverse time before settling
        let mut reverse = Vec::new();
        for &l in probe_lambdas {
            let lam = lambda_c - side * (l - lambda_c).abs();
            let Ok(sys) = family(lam) else { continue };
            let Ok(eq) = refine_equilibrium(&sys, eq_seed, 1e-10) else {
                continue;
            };
            if let Ok(amp) = cycle_amplitude(&sys, &eq, true, opts, lam) {
                reverse.push((lam, amp));
            }
        }
        if reverse.len() == probe_lambdas.len() {
            let (k, r2) = sqrt_law_fit(&reverse, lambda_c);
            if r2 >= 0.9 {
                return Ok(HopfEstimate {
                    verdict: HopfVerdict::Subcritical,
                    k,
                    r2,
                    probes: reverse,
                    via_reverse_time: true,
                    amplitude_jump: false,
                });
            }
        }
        // no sqrt-law cycle anywhere: decide by the amplitude jump. A
        // supercritical cycle must shrink to zero at lambda_c; a bounded-away
        // amplitude means the orbit left for a distant attractor.
        let min_amp = forward
            .iter()
            .map(|(_, a)| *a)
            .fold(f64::INFINITY, f64::min);
        if min_amp > 0.05 * equilibrium_scale {
            let (k, r2) = sqrt_law_fit(&forward, lambda_c);
            return Ok(HopfEstimate {
                verdict: HopfVerdict::Subcritical,
                k,
                r2,
                probes: forward,
                via_reverse_time: false,
                amplitude_jump: true,
            });
        }
        return Err(DynError::PoorFit { r2 });
    }
    Err(DynError::NoCycleFound {
        lambda: probe_lambdas[0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{build_builtin, ParamSet, SystemKind};

    #[test]
    fn resonance_two_one_spectrum() {
        // a = (2, 1): 2 a_2 = a_1 is the only order-2 resonance
        let eigs = [Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)];
        let rep = resonances(&eigs, 2, RESONANCE_TOL);
        assert_eq!(rep.hits.len(), 1);
        assert_eq!(rep.hits[0].component, 0);
        assert_eq!(rep.hits[0].p, vec![0, 2]);
    }

    #[test]
    fn hopf_spectrum_resonances() {
        let w0 = 1.7;
        let eigs = [Complex64::new(0.0, w0), Complex64::new(0.0, -w0)];
        assert!(resonances(&eigs, 2, RESONANCE_TOL).hits.is_empty());
        let rep = resonances(&eigs, 3, RESONANCE_TOL);
        let mut hits: Vec<(usize, MultiIndex)> = rep
            .hits
            .iter()
            .map(|h| (h.component, h.p.clone()))
            .collect();
        hits.sort();
        assert_eq!(hits, vec![(0, vec![2, 1]), (1, vec![1, 2])]);
    }

    #[test]
    fn adk_diagonal_entries() {
        // A = diag(2, 1), k = 2: operator is diagonal with entries p.a - a_j
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let op = adk_operator(&a, 2);
        assert_eq!(op.matrix.nrows(), 6);
        for r in 0..6 {
            for c in 0..6 {
                if r != c {
                    assert_eq!(op.matrix[(r, c)], 0.0);
                }
            }
        }
        // entry for p = (0,2), j = 0 must be 0 (the resonance)
        let mi = op.monomials.iter().position(|m| m == &vec![0, 2]).unwrap();
        assert_eq!(op.matrix[(mi * 2, mi * 2)], 0.0);
    }

    #[test]
    fn adk_zero_matrix_is_zero_operator() {
        let a = DMatrix::zeros(2, 2);
        let op = adk_operator(&a, 3);
        assert_eq!(op.matrix.amax(), 0.0);
    }

    #[test]
    fn adk_eigenvalues_match_resonance_formula() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            // dyadic spectra make p.a - a_j exactly representable
            let n = 3;
            let diag: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(-16..16) as f64 / 8.0)
                .collect();
            let a = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
            for k in [2usize, 3, 4] {
                let op = adk_operator(&a, k);
                let mut expected: Vec<f64> = Vec::new();
                for p in monomials_of_degree(n, k as u32) {
                    let dot: f64 = p.iter().zip(&diag).map(|(&pi, ai)| pi as f64 * ai).sum();
                    for aj in &diag {
                        expected.push(dot - aj);
                    }
                }
                let mut actual: Vec<f64> = op
                    .matrix
                    .complex_eigenvalues()
                    .iter()
                    .map(|e| e.re)
                    .collect();
                expected.sort_by(f64::total_cmp);
                actual.sort_by(f64::total_cmp);
                for (e, a) in expected.iter().zip(actual.iter()) {
                    assert!((e - a).abs() < 1e-10, "{e} vs {a}");
                }
            }
        }
    }

    #[test]
    fn resonance_hits_match_adk_kernel() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let eigs: Vec<Complex64> = a.complex_eigenvalues().iter().cloned().collect();
        for k in [2usize, 3] {
            let rep = resonances(&eigs, k, RESONANCE_TOL);
            let op = adk_operator(&a, k);
            let near_zero = op
                .matrix
                .complex_eigenvalues()
                .iter()
                .filter(|e| e.norm() < 1e-10)
                .count();
            assert_eq!(rep.hits.len(), near_zero, "k = {k}");
        }
    }

    #[test]
    fn resonant_quadratic_term_survives() {
        // y1' = 2 y1 + y2^2, y2' = y2: the y2^2 term is resonant
        let (y1, y2) = (Poly::<f64>::var(2, 0), Poly::<f64>::var(2, 1));
        let field = TaylorMap::new(2, vec![y1.scale(&2.0).add(&y2.mul(&y2)), y2.clone()]);
        let step = normal_form_step(&field, 2, 3);
        assert!((step.resonant.components[0].coeff(&[0, 2]) - 1.0).abs() < 1e-12);
        assert!(step.h_k.components[0].max_abs() < 1e-12);
        assert!(step.h_k.components[1].max_abs() < 1e-12);
    }

    #[test]
    fn hopf_cubic_resonant_structure() {
        // rotation linear part + generic cubic: after the step only the
        // |z|^2 z structure survives, i.e. the resonant part lies in
        // span{ (x^2+y^2)(x, y), (x^2+y^2)(-y, x) }
        let (x, y) = (Poly::<f64>::var(2, 0), Poly::<f64>::var(2, 1));
        let mut f0 = x.scale(&0.0).add(&y.scale(&-1.0));
        let mut f1 = x.clone();
        // arbitrary cubic terms
        f0 = f0
            .add(&x.mul(&x).mul(&x).scale(&0.3))
            .add(&x.mul(&y).mul(&y).scale(&-0.7))
            .add(&y.mul(&y).mul(&y).scale(&0.2));
        f1 = f1
            .add(&x.mul(&x).mul(&y).scale(&0.9))
            .add(&y.mul(&y).mul(&y).scale(&0.5));
        let field = TaylorMap::new(2, vec![f0, f1]);
        let step = normal_form_step(&field, 3, 3);
        // basis of the resonant plane
        let r2 = x.mul(&x).add(&y.mul(&y));
        let b1 = [r2.mul(&x), r2.mul(&y)];
        let b2 = [r2.mul(&y).neg(), r2.mul(&x)];
        // project the resonant part onto the plane and check zero residual
        let flatten = |m: &[Poly<f64>; 2]| -> Vec<f64> {
            let monos = monomials_of_degree(2, 3);
            monos
                .iter()
                .flat_map(|a| [m[0].coeff(a), m[1].coeff(a)])
                .collect()
        };
        let res = flatten(&[
            step.resonant.components[0].clone(),
            step.resonant.components[1].clone(),
        ]);
        let v1 = flatten(&b1);
        let v2 = flatten(&b2);
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let c1 = dot(&res, &v1) / dot(&v1, &v1);
        let c2 = dot(&res, &v2) / dot(&v2, &v2);
        let mut resid = 0.0_f64;
        for i in 0..res.len() {
            resid = resid.max((res[i] - c1 * v1[i] - c2 * v2[i]).abs());
        }
        assert!(resid < 1e-10, "off-plane residual {resid}");
    }

    #[test]
    fn zero_nonlinearity_is_fixed_point() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -2.0]);
        let sys = crate::systems::SystemDef::linear(SystemKind::Flow, a);
        let polys = sys.polynomial_field(None).unwrap();
        let field = TaylorMap::new(2, polys.iter().map(|p| p.to_f64_poly()).collect());
        let step = normal_form_step(&field, 2, 4);
        assert!(step.h_k.components.iter().all(|p| p.is_zero()));
        assert!(step.resonant.components.iter().all(|p| p.is_zero()));
    }

    #[test]
    fn normal_form_clears_nonresonant_terms() {
        // generic 2D field with hyperbolic non-resonant linear part
        let (x, y) = (Poly::<f64>::var(2, 0), Poly::<f64>::var(2, 1));
        let f0 = x
            .scale(&1.0)
            .add(&x.mul(&x).scale(&0.5))
            .add(&x.mul(&y).scale(&-0.3))
            .add(&y.mul(&y).mul(&y).scale(&0.2));
        let f1 = y
            .scale(&-1.61803398875) // irrational ratio avoids resonances
            .add(&y.mul(&y).scale(&0.4))
            .add(&x.mul(&x).mul(&y).scale(&-0.8));
        let field = TaylorMap::new(2, vec![f0, f1]);
        let res = normal_form(&field, 4);
        for k in 2..=4u32 {
            for comp in &res.normal_form.components {
                let h = comp.homogeneous_part(k);
                assert!(h.max_abs() < 1e-10, "degree {k} terms survived: {h:?}");
            }
        }
    }

    #[test]
    fn neimark_denominators_and_strong_resonance() {
        // theta0 = 0.33 is near (but not at) the cubic root: the (0,2)
        // denominator is small; oracle is direct evaluation
        let theta0 = 0.33;
        let mu = Complex64::from_polar(1.0, std::f64::consts::TAU * theta0);
        let c = vec![
            (2u32, 0u32, Complex64::new(1.0, 0.0)),
            (1, 1, Complex64::new(1.0, 0.0)),
            (0, 2, Complex64::new(1.0, 0.0)),
        ];
        let out = neimark_homological_coeffs(mu, &c, 1e-8).unwrap();
        assert_eq!(out.non_removable.len(), 0);
        let h02 = out
            .solvable
            .iter()
            .find(|(p, q, _)| (*p, *q) == (0, 2))
            .unwrap();
        let denom = (mu.conj().powu(2) - mu).norm();
        let oracle = 1.0 / denom;
        let got = (h02.2[0] * h02.2[0] + h02.2[1] * h02.2[1]).sqrt();
        assert!((got - oracle).abs() < 1e-12);
        assert!(
            got > 1.0,
            "near-resonant coefficient should be large: {got}"
        );

        // (2,1) is always resonant at |mu| = 1
        let c = vec![(2u32, 1u32, Complex64::new(1.0, 0.0))];
        let out = neimark_homological_coeffs(mu, &c, 1e-8).unwrap();
        assert_eq!(out.non_removable, vec![(2, 1)]);

        // mu = i is a strong resonance (j = 4)
        let err = neimark_homological_coeffs(Complex64::new(0.0, 1.0), &[], 1e-8).unwrap_err();
        assert!(matches!(err, DynError::StrongResonance { j: 4 }));
    }

    #[test]
    fn standard_map_conjugacy_closed_forms() {
        let c = standard_map_conjugacy_o1(std::f64::consts::PI, 1e-8).unwrap();
        for i in 0..16 {
            let phi = i as f64 * 0.3;
            assert!((c.f1(phi) - phi.sin() / 4.0).abs() < 1e-14);
            assert!((c.g1(phi) - (phi - std::f64::consts::PI / 2.0).cos() / 2.0).abs() < 1e-14);
        }
        // functional equations hold to machine precision
        for omega in [
            0.7,
            1.3,
            std::f64::consts::PI - 0.3,
            std::f64::consts::FRAC_PI_2,
        ] {
            let c = standard_map_conjugacy_o1(omega, 1e-8).unwrap();
            assert!(c.residual_on_grid(256) <= 1e-12, "omega = {omega}");
        }
        assert!(matches!(
            standard_map_conjugacy_o1(1e-12, 1e-8),
            Err(DynError::SmallDivisor { .. })
        ));
        assert!(matches!(
            standard_map_conjugacy_o1(0.0, 1e-8),
            Err(DynError::SmallDivisor { .. })
        ));
    }

    #[test]
    fn van_der_pol_hopf_is_supercritical() {
        let family = |l: f64| -> Result<SystemDef> {
            let mut ov = ParamSet::new();
            ov.insert("lambda".into(), l);
            build_builtin("van_der_pol", &ov)
        };
        let probes = [0.02, 0.04, 0.06, 0.08, 0.1];
        let est =
            hopf_sign_estimate(&family, 0.0, &[0.0, 0.0], &probes, &Default::default()).unwrap();
        assert_eq!(est.verdict, HopfVerdict::Supercritical);
        assert!(est.r2 >= 0.95, "R^2 = {}", est.r2);
        // near the bifurcation the amplitude law is r ~ 2 sqrt(lambda)
        assert!((est.k - 2.0).abs() < 0.25, "K = {}", est.k);
    }

    #[test]
    fn radial_normal_form_has_unit_constant() {
        // x' = l x - y - x(x^2+y^2), y' = x + l y - y(x^2+y^2): exact cycle
        // at radius sqrt(l)
        let family = |l: f64| -> Result<SystemDef> {
            Ok(SystemDef::from_fn(
                "radial_demo",
                SystemKind::Flow,
                2,
                move |_, x, out| {
                    let r2 = x[0] * x[0] + x[1] * x[1];
                    out[0] = l * x[0] - x[1] - x[0] * r2;
                    out[1] = x[0] + l * x[1] - x[1] * r2;
                },
            ))
        };
        let probes = [0.02, 0.04, 0.06, 0.08, 0.1];
        let est =
            hopf_sign_estimate(&family, 0.0, &[0.0, 0.0], &probes, &Default::default()).unwrap();
        assert_eq!(est.verdict, HopfVerdict::Supercritical);
        assert!((est.k - 1.0).abs() < 0.02, "K = {}", est.k);
    }
}
