//! Taylor computation of stable/unstable/center manifold graphs and the
//! reduced dynamics on them, including the parameter-extended system used
//! for bifurcation study.
//!
//! Coefficients are computed in exact rational arithmetic whenever the local
//! Taylor expansion of the field is rational (all builtin polynomial systems
//! qualify); otherwise in double precision with a 1e-10 singularity
//! threshold.

#![allow(clippy::needless_range_loop)] // indexed loops mirror the matrix algebra

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

use crate::error::{DynError, Result};
use crate::poly::{monomials_of_degree, solve_dense, Coeff, Poly, TaylorMap};
use crate::systems::{ParamSet, SystemDef, SystemKind};

pub const SPLIT_ZERO_TOL: f64 = 1e-8;
const SINGULARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldKind {
    Stable,
    Unstable,
    Center,
}

/// Real block decomposition of a matrix into stable/center/unstable
/// invariant subspaces. Columns of `transform` span the blocks in the order
/// [stable | center | unstable].
#[derive(Debug, Clone)]
pub struct SpectralSplit {
    pub transform: DMatrix<f64>,
    pub transform_inv: DMatrix<f64>,
    pub block_a: DMatrix<f64>,
    /// (n_minus, n_zero, n_plus)
    pub dims: (usize, usize, usize),
    pub off_block_residual: f64,
}

impl SpectralSplit {
    pub fn block_range(&self, kind: ManifoldKind) -> std::ops::Range<usize> {
        let (nm, nz, _np) = self.dims;
        match kind {
            ManifoldKind::Stable => 0..nm,
            ManifoldKind::Center => nm..nm + nz,
            ManifoldKind::Unstable => nm + nz..self.transform.nrows(),
        }
    }
}

fn group_of(re: f64, zero_tol: f64) -> i8 {
    if re > zero_tol {
        1
    } else if re < -zero_tol {
        -1
    } else {
        0
    }
}

/// Float spectral split via generalized eigenspaces: the invariant subspace
/// of each group is the kernel of the real polynomial built from its
/// eigenvalue factors, computed by SVD.
pub fn spectral_split(a: &DMatrix<f64>, zero_tol: f64) -> Result<SpectralSplit> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    let eigs: Vec<Complex64> = a.complex_eigenvalues().iter().cloned().collect();
    let scale = eigs.iter().map(|e| e.norm()).fold(1.0_f64, f64::max);
    for e in &eigs {
        let d = e.re.abs();
        if d > 0.5 * zero_tol * scale && d < 2.0 * zero_tol * scale {
            return Err(DynError::IllConditionedSplit {
                value: e.re,
                tol: zero_tol * scale,
            });
        }
    }
    let tol = zero_tol * scale;
    let mut basis: Vec<DMatrix<f64>> = Vec::new();
    let mut dims = [0usize; 3];
    for (slot, sign) in [(0usize, -1i8), (1, 0), (2, 1)] {
        // real factor polynomial for this group, with multiplicity
        let mut q = DMatrix::<f64>::identity(n, n);
        let mut count = 0usize;
        let mut used = vec![false; eigs.len()];
        for i in 0..eigs.len() {
            if used[i] || group_of(eigs[i].re, tol) != sign {
                continue;
            }
            used[i] = true;
            count += 1;
            if eigs[i].im.abs() > 1e-9 * scale {
                // pair with the conjugate
                if let Some(j) = (0..eigs.len())
                    .find(|&j| !used[j] && (eigs[j] - eigs[i].conj()).norm() < 1e-7 * scale)
                {
                    used[j] = true;
                    count += 1;
                }
                let re = eigs[i].re;
                let m2 = a * a - a * (2.0 * re) + DMatrix::identity(n, n) * eigs[i].norm_sqr();
                q = &q * &m2;
            } else {
                q = &q * (a - DMatrix::identity(n, n) * eigs[i].re);
            }
        }
        dims[slot] = count;
        if count == 0 {
            basis.push(DMatrix::zeros(n, 0));
            continue;
        }
        let svd = q.svd(false, true);
        let vt = svd.v_t.as_ref().expect("svd requested V^T");
        let smax = svd.singular_values.max().max(1e-300);
        let mut cols: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] <= 1e-9 * smax)
            .collect();
        // rows of vt with negligible singular values span the kernel
        if cols.len() < count {
            // rank borderline: take the smallest `count` singular directions
            let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
            order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
            cols = order.into_iter().take(count).collect();
        }
        cols.truncate(count);
        let mut b = DMatrix::zeros(n, count);
        for (k, &i) in cols.iter().enumerate() {
            for r in 0..n {
                b[(r, k)] = vt[(i, r)];
            }
        }
        basis.push(b);
    }
    let mut t = DMatrix::<f64>::zeros(n, n);
    let mut col = 0;
    for b in &basis {
        for c in 0..b.ncols() {
            for r in 0..n {
                t[(r, col)] = b[(r, c)];
            }
            col += 1;
        }
    }
    let t_inv = t
        .clone()
        .try_inverse()
        .ok_or(DynError::IllConditionedSplit {
            value: 0.0,
            tol: zero_tol,
        })?;
    let block_a = &t_inv * a * &t;
    let (nm, nz, _np) = (dims[0], dims[1], dims[2]);
    let mut off = 0.0_f64;
    let ranges = [0..nm, nm..nm + nz, nm + nz..n];
    for (bi, rb) in ranges.iter().enumerate() {
        for (bj, cb) in ranges.iter().enumerate() {
            if bi == bj {
                continue;
            }
            for r in rb.clone() {
                for c in cb.clone() {
                    off = off.max(block_a[(r, c)].abs());
                }
            }
        }
    }
    if off > 1e-8 * block_a.amax().max(1.0) {
        return Err(DynError::IllConditionedSplit {
            value: off,
            tol: 1e-8,
        });
    }
    Ok(SpectralSplit {
        transform: t,
        transform_inv: t_inv,
        block_a,
        dims: (dims[0], dims[1], dims[2]),
        off_block_residual: off,
    })
}

// ---------------------------------------------------------------------------
// exact rational linear algebra (small matrices only)
// ---------------------------------------------------------------------------

type RatMat = Vec<Vec<BigRational>>;

fn rm_identity(n: usize) -> RatMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Coeff::one() } else { Coeff::zero() })
                .collect()
        })
        .collect()
}

fn rm_mul(a: &RatMat, b: &RatMat) -> RatMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut s: BigRational = Coeff::zero();
                    for l in 0..k {
                        s = s.add(&a[i][l].mul(&b[l][j]));
                    }
                    s
                })
                .collect()
        })
        .collect()
}

fn rm_sub_scalar_diag(a: &RatMat, s: &BigRational) -> RatMat {
    let mut out = a.clone();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = row[i].sub(s);
    }
    out
}

/// Kernel basis via reduced row echelon form; exact.
fn rm_kernel(a: &RatMat) -> Vec<Vec<BigRational>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m = a.clone();
    let mut pivot_cols = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.div(&inv);
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let v = m[i][j].sub(&f.mul(&m[r][j]));
                    m[i][j] = v;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    let mut basis = Vec::new();
    for free in 0..cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v: Vec<BigRational> = vec![Coeff::zero(); cols];
        v[free] = Coeff::one();
        for (prow, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = m[prow][free].neg();
        }
        basis.push(v);
    }
    basis
}

fn rm_inverse(a: &RatMat) -> Option<RatMat> {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = rm_identity(n);
    for c in 0..n {
        let p = (c..n).find(|&i| !m[i][c].is_zero())?;
        m.swap(c, p);
        inv.swap(c, p);
        let d = m[c][c].clone();
        for j in 0..n {
            m[c][j] = m[c][j].div(&d);
            inv[c][j] = inv[c][j].div(&d);
        }
        for i in 0..n {
            if i != c && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..n {
                    let v = m[i][j].sub(&f.mul(&m[c][j]));
                    m[i][j] = v;
                    let v = inv[i][j].sub(&f.mul(&inv[c][j]));
                    inv[i][j] = v;
                }
            }
        }
    }
    Some(inv)
}

/// Characteristic polynomial coefficients (monic, ascending powers) by the
/// Faddeev-LeVerrier recurrence, exact.
fn char_poly(a: &RatMat) -> Vec<BigRational> {
    let n = a.len();
    let mut coeffs: Vec<BigRational> = vec![Coeff::zero(); n + 1];
    coeffs[n] = Coeff::one();
    let mut m = rm_identity(n);
    for k in 1..=n {
        m = rm_mul(a, &m);
        let mut tr: BigRational = Coeff::zero();
        for i in 0..n {
            tr = tr.add(&m[i][i]);
        }
        let c = tr.div(&BigRational::from_i64(k as i64)).neg();
        coeffs[n - k] = c.clone();
        for i in 0..n {
            m[i][i] = m[i][i].add(&c);
        }
    }
    coeffs
}

fn poly_eval(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    let mut acc: BigRational = Coeff::zero();
    for c in coeffs.iter().rev() {
        acc = acc.mul(x).add(c);
    }
    acc
}

fn poly_deflate(coeffs: &[BigRational], root: &BigRational) -> Vec<BigRational> {
    // synthetic division by (x - root)
    let n = coeffs.len() - 1;
    let mut out = vec![Coeff::zero(); n];
    let mut carry: BigRational = Coeff::zero();
    for k in (0..n).rev() {
        carry = coeffs[k + 1].add(&carry.mul(root));
        out[k] = carry.clone();
    }
    out
}

/// Continued-fraction rational approximations with growing denominators.
fn rational_candidates(x: f64) -> Vec<BigRational> {
    let mut out = Vec::new();
    for max_den in [1i64, 12, 1000, 1_000_000] {
        let (mut p0, mut q0, mut p1, mut q1) = (1i64, 0i64, x.round() as i64, 1i64);
        let mut frac = x - x.round();
        let mut guard = 0;
        while frac.abs() > 1e-12 && q1 <= max_den && guard < 40 {
            let r = 1.0 / frac;
            let a = r.round();
            frac = r - a;
            let (p2, q2) = (
                (a as i64).saturating_mul(p1).saturating_add(p0),
                (a as i64).saturating_mul(q1).saturating_add(q0),
            );
            p0 = p1;
            q0 = q1;
            p1 = p2;
            q1 = q2;
            guard += 1;
        }
        if q1 != 0 {
            let cand = BigRational::new(p1.into(), q1.into());
            if (Coeff::to_f64(&cand) - x).abs() <= 1e-7 * x.abs().max(1.0) && !out.contains(&cand) {
                out.push(cand);
            }
        }
    }
    out
}

/// Exact spectral data: distinct rational eigenvalues with multiplicities,
/// verified against the exact characteristic polynomial. Returns None when
/// the spectrum is not (detectably) rational.
fn exact_eigenvalues(a: &RatMat, float_hints: &[Complex64]) -> Option<Vec<(BigRational, usize)>> {
    let n = a.len();
    let mut chi = char_poly(a);
    let mut roots: Vec<(BigRational, usize)> = Vec::new();
    let mut entry_candidates: Vec<BigRational> = Vec::new();
    for row in a {
        for v in row {
            if !entry_candidates.contains(v) {
                entry_candidates.push(v.clone());
            }
            let nv = v.neg();
            if !entry_candidates.contains(&nv) {
                entry_candidates.push(nv);
            }
        }
    }
    let mut remaining = n;
    for hint in float_hints {
        if remaining == 0 {
            break;
        }
        if hint.im.abs() > 1e-9 {
            return None;
        }
        if roots
            .iter()
            .any(|(r, _)| (Coeff::to_f64(r) - hint.re).abs() < 1e-7)
        {
            // already matched (multiple eigenvalue); bump its multiplicity
            continue;
        }
        let mut cands = rational_candidates(hint.re);
        for e in &entry_candidates {
            if (Coeff::to_f64(e) - hint.re).abs() <= 1e-7 * hint.re.abs().max(1.0) {
                cands.push(e.clone());
            }
        }
        let mut found = None;
        for c in cands {
            if poly_eval(&chi, &c).is_zero() {
                found = Some(c);
                break;
            }
        }
        let root = found?;
        // deflate out the full multiplicity
        let mut mult = 0usize;
        loop {
            if chi.len() <= 1 || !poly_eval(&chi, &root).is_zero() {
                break;
            }
            chi = poly_deflate(&chi, &root);
            mult += 1;
        }
        if mult == 0 {
            return None;
        }
        remaining -= mult;
        roots.push((root, mult));
    }
    if remaining != 0 {
        return None;
    }
    Some(roots)
}

/// Exact analogue of [`SpectralSplit`]; off-diagonal blocks vanish exactly.
#[derive(Debug, Clone)]
pub struct RationalSplit {
    pub transform: RatMat,
    pub transform_inv: RatMat,
    pub block_a: RatMat,
    pub dims: (usize, usize, usize),
}

fn rational_split(a: &RatMat, float_hints: &[Complex64]) -> Option<RationalSplit> {
    let n = a.len();
    let roots = exact_eigenvalues(a, float_hints)?;
    let mut groups: [Vec<(BigRational, usize)>; 3] = [vec![], vec![], vec![]];
    for (r, m) in roots {
        let f = Coeff::to_f64(&r);
        let slot = if r.is_zero() {
            1
        } else if f < 0.0 {
            0
        } else {
            2
        };
        groups[slot].push((r, m));
    }
    let mut columns: Vec<Vec<BigRational>> = Vec::new();
    let mut dims = [0usize; 3];
    for (slot, group) in groups.iter().enumerate() {
        let mut expect = 0usize;
        if group.is_empty() {
            continue;
        }
        let mut q = rm_identity(n);
        for (root, mult) in group {
            expect += mult;
            let factor = rm_sub_scalar_diag(a, root);
            for _ in 0..*mult {
                q = rm_mul(&q, &factor);
            }
        }
        let kernel = rm_kernel(&q);
        if kernel.len() != expect {
            return None;
        }
        dims[slot] = expect;
        columns.extend(kernel);
    }
    // transform columns in block order [stable | center | unstable]
    let mut t = vec![vec![BigRational::from_i64(0); n]; n];
    for (c, col) in columns.iter().enumerate() {
        for r in 0..n {
            t[r][c] = col[r].clone();
        }
    }
    let t_inv = rm_inverse(&t)?;
    let block_a = rm_mul(&rm_mul(&t_inv, a), &t);
    // invariant subspaces conjugate to an exactly block-diagonal form
    let (nm, nz) = (dims[0], dims[1]);
    let ranges = [0..nm, nm..nm + nz, nm + nz..n];
    for (bi, rb) in ranges.iter().enumerate() {
        for (bj, cb) in ranges.iter().enumerate() {
            if bi == bj {
                continue;
            }
            for r in rb.clone() {
                for c in cb.clone() {
                    if !block_a[r][c].is_zero() {
                        return None;
                    }
                }
            }
        }
    }
    Some(RationalSplit {
        transform: t,
        transform_inv: t_inv,
        block_a,
        dims: (dims[0], dims[1], dims[2]),
    })
}

/// Re-normalizes the center-block basis of an extended system so the last
/// (parameter) coordinate is itself one of the chart variables: exactly one
/// center column keeps a unit entry in the last row, every other column a
/// zero. Returns false when the parameter direction is not in the center
/// block (it always is for a parameter extension).
fn distinguish_last_coordinate<C: Coeff>(t: &mut [Vec<C>], range: std::ops::Range<usize>) -> bool {
    let n = t.len();
    let last = n - 1;
    // pick the center column with the largest last-row entry
    let Some(pivot) = range
        .clone()
        .filter(|&c| !t[last][c].is_zero())
        .max_by(|&a, &b| t[last][a].abs_f64().total_cmp(&t[last][b].abs_f64()))
    else {
        return false;
    };
    let d = t[last][pivot].clone();
    for row in t.iter_mut() {
        row[pivot] = row[pivot].div(&d);
    }
    for c in range.clone() {
        if c == pivot || t[last][c].is_zero() {
            continue;
        }
        let f = t[last][c].clone();
        for row in t.iter_mut() {
            let v = row[c].sub(&f.mul(&row[pivot]));
            row[c] = v;
        }
    }
    // move the parameter column to the end of the center block
    let target = range.end - 1;
    if pivot != target {
        for row in t.iter_mut() {
            row.swap(pivot, target);
        }
    }
    true
}

// ---------------------------------------------------------------------------
// graph computation
// ---------------------------------------------------------------------------

/// Chart data for a manifold computation: base block `u` first, fiber block
/// `v` second, with the transformed field expressed in (u, v).
#[derive(Debug, Clone)]
pub struct Chart<C: Coeff> {
    /// x = eq + T w, with w = (u, v).
    pub t: Vec<Vec<C>>,
    pub t_inv: Vec<Vec<C>>,
    pub a_u: Vec<Vec<C>>,
    pub a_v: Vec<Vec<C>>,
    /// Transformed field components (all w variables), truncated.
    pub field_w: Vec<Poly<C>>,
    pub u_dim: usize,
    pub v_dim: usize,
}

/// Local manifold graph `v = h(u)` with its chart.
#[derive(Debug, Clone)]
pub struct ManifoldGraph<C: Coeff> {
    pub kind: ManifoldKind,
    pub eq: Vec<f64>,
    pub order: usize,
    pub graph: TaylorMap<C>,
    pub chart: Chart<C>,
}

impl<C: Coeff> ManifoldGraph<C> {
    /// Embedding u -> x = eq + T (u, h(u)) in original coordinates (f64).
    pub fn embed(&self, u: &[f64]) -> Vec<f64> {
        let h: Vec<f64> = self
            .graph
            .components
            .iter()
            .map(|p| p.eval_f64(u))
            .collect();
        let n = self.eq.len();
        let mut x = self.eq.clone();
        for r in 0..n {
            for (c, val) in u.iter().chain(h.iter()).enumerate() {
                x[r] += self.chart.t[r][c].to_f64() * val;
            }
        }
        x
    }
}

fn solve_graph<C: Coeff>(chart: &Chart<C>, order: usize) -> Result<TaylorMap<C>> {
    let d = chart.u_dim;
    let m = chart.v_dim;
    let max_deg = order as u32;
    let mut h = TaylorMap::<C>::zero(d, m);

    // args embedding u-space into w-space: (u_1..u_d, h_1(u)..h_m(u))
    for k in 2..=max_deg {
        let mut args: Vec<Poly<C>> = (0..d).map(|i| Poly::var(d, i)).collect();
        args.extend(h.components.iter().cloned());
        // nonlinear parts of the transformed field, composed with the graph
        let mut g_u = Vec::with_capacity(d);
        let mut g_v = Vec::with_capacity(m);
        for (i, f) in chart.field_w.iter().enumerate() {
            let nonlinear = f
                .clone()
                .sub(&f.homogeneous_part(0))
                .sub(&f.homogeneous_part(1));
            let comp = nonlinear.compose(&args, k);
            if i < d {
                g_u.push(comp);
            } else {
                g_v.push(comp);
            }
        }
        // rhs_k = [ g_v - Dh . g_u ]_k  with h = sum_{j<k} h_j
        let mut rhs_vec = g_v.clone();
        for (r, rv) in rhs_vec.iter_mut().enumerate() {
            for j in 0..d {
                let dh = h.components[r].partial(j);
                *rv = rv.sub(&dh.mul_trunc(&g_u[j], k));
            }
        }
        let monos = monomials_of_degree(d, k);
        let nmono = monos.len();
        let dim = m * nmono;
        // operator L(h_k) = Dh_k . (A_u u) - A_v h_k on the basis u^alpha e_i
        let mut op = vec![vec![C::zero(); dim]; dim];
        let col_index = |mi: usize, i: usize| mi * m + i;
        for (mi, alpha) in monos.iter().enumerate() {
            for i in 0..m {
                let col = col_index(mi, i);
                // derivative part: sum_j alpha_j u^{alpha-e_j} (A_u u)_j
                for j in 0..d {
                    if alpha[j] == 0 {
                        continue;
                    }
                    for l in 0..d {
                        if chart.a_u[j][l].is_zero() {
                            continue;
                        }
                        let mut beta = alpha.clone();
                        beta[j] -= 1;
                        beta[l] += 1;
                        let row_mono = monos.binary_search(&beta).expect("degree preserved");
                        let coeff = C::from_i64(alpha[j] as i64).mul(&chart.a_u[j][l]);
                        let row = col_index(row_mono, i);
                        op[row][col] = op[row][col].add(&coeff);
                    }
                }
                // -A_v h part
                for r in 0..m {
                    if chart.a_v[r][i].is_zero() {
                        continue;
                    }
                    let row = col_index(mi, r);
                    op[row][col] = op[row][col].sub(&chart.a_v[r][i]);
                }
            }
        }
        let mut rhs_flat = vec![C::zero(); dim];
        for (mi, alpha) in monos.iter().enumerate() {
            for i in 0..m {
                rhs_flat[col_index(mi, i)] = rhs_vec[i].homogeneous_part(k).coeff(alpha);
            }
        }
        let sol = solve_dense(&op, &rhs_flat, SINGULARITY_TOL)
            .map_err(|_| DynError::ResonanceObstruction { degree: k as usize })?;
        for (mi, alpha) in monos.iter().enumerate() {
            for i in 0..m {
                let c = sol[col_index(mi, i)].clone();
                if !c.is_zero() {
                    h.components[i].terms.insert(alpha.clone(), c);
                }
            }
        }
    }
    Ok(h)
}

fn permute_chart<C: Coeff>(
    t: &[Vec<C>],
    t_inv: &[Vec<C>],
    block_a: &[Vec<C>],
    field_shifted: &[Poly<C>],
    base_cols: &[usize],
    fiber_cols: &[usize],
    order: usize,
) -> Result<Chart<C>> {
    let n = t.len();
    let d = base_cols.len();
    let m = fiber_cols.len();
    assert_eq!(d + m, n);
    let perm: Vec<usize> = base_cols.iter().chain(fiber_cols.iter()).cloned().collect();
    let tp: Vec<Vec<C>> = (0..n)
        .map(|r| perm.iter().map(|&c| t[r][c].clone()).collect())
        .collect();
    let tp_inv: Vec<Vec<C>> = perm.iter().map(|&r| t_inv[r].clone()).collect();
    let a_perm: Vec<Vec<C>> = perm
        .iter()
        .map(|&r| perm.iter().map(|&c| block_a[r][c].clone()).collect())
        .collect();
    // cross blocks must vanish (invariant subspaces)
    for i in 0..d {
        for j in d..n {
            if a_perm[i][j].abs_f64() > 1e-8 || a_perm[j][i].abs_f64() > 1e-8 {
                return Err(DynError::IllConditionedSplit {
                    value: a_perm[i][j].abs_f64().max(a_perm[j][i].abs_f64()),
                    tol: 1e-8,
                });
            }
        }
    }
    let a_u: Vec<Vec<C>> = (0..d).map(|i| a_perm[i][..d].to_vec()).collect();
    let a_v: Vec<Vec<C>> = (d..n).map(|i| a_perm[i][d..].to_vec()).collect();
    // field in w coordinates: F_w(w) = T^{-1} f(eq + T w)
    let tp_rows: Vec<Vec<C>> = (0..n).map(|r| tp[r].clone()).collect();
    let substituted: Vec<Poly<C>> = field_shifted
        .iter()
        .map(|p| p.linear_substitute(&tp_rows, order as u32))
        .collect();
    let field_w: Vec<Poly<C>> = (0..n)
        .map(|r| {
            let mut acc = Poly::zero(n);
            for (c, poly) in substituted.iter().enumerate() {
                if !tp_inv[r][c].is_zero() {
                    acc = acc.add(&poly.scale(&tp_inv[r][c]));
                }
            }
            acc
        })
        .collect();
    Ok(Chart {
        t: tp,
        t_inv: tp_inv,
        a_u,
        a_v,
        field_w,
        u_dim: d,
        v_dim: m,
    })
}

fn dmatrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

/// The exact path: rational field expansion around the equilibrium plus a
/// rational spectral split.
fn exact_chart(
    sys: &SystemDef,
    eq: &[f64],
    kind: ManifoldKind,
    order: usize,
    distinguish_param: bool,
) -> Option<Result<Chart<BigRational>>> {
    let polys = sys.polynomial_field(None)?;
    let shift: Vec<BigRational> = eq.iter().map(|v| BigRational::from_f64_exact(*v)).collect();
    let shifted: Vec<Poly<BigRational>> = polys.iter().map(|p| p.shift(&shift)).collect();
    // exact linearization = Jacobian of the shifted field at 0
    let n = sys.dim;
    let a: RatMat = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut e = vec![0u32; n];
                    e[j] = 1;
                    shifted[i].coeff(&e)
                })
                .collect()
        })
        .collect();
    let hints: Vec<Complex64> = sys
        .jacobian_at(eq)
        .ok()?
        .complex_eigenvalues()
        .iter()
        .cloned()
        .collect();
    let mut split = rational_split(&a, &hints)?;
    let (nm, nz, np) = split.dims;
    let range = match kind {
        ManifoldKind::Stable => 0..nm,
        ManifoldKind::Center => nm..nm + nz,
        ManifoldKind::Unstable => nm + nz..n,
    };
    if range.is_empty() {
        return Some(Err(DynError::IllConditionedSplit {
            value: 0.0,
            tol: 0.0,
        }));
    }
    let mut t = split.transform.clone();
    if distinguish_param && kind == ManifoldKind::Center {
        let center = nm..nm + nz;
        if !distinguish_last_coordinate(&mut t, center) {
            return None;
        }
        let t_inv = rm_inverse(&t)?;
        split.block_a = rm_mul(&rm_mul(&t_inv, &a), &t);
        split.transform_inv = t_inv;
        split.transform = t.clone();
    }
    let base: Vec<usize> = range.clone().collect();
    let fiber: Vec<usize> = (0..n).filter(|i| !range.contains(i)).collect();
    let _ = np;
    Some(permute_chart(
        &split.transform,
        &split.transform_inv,
        &split.block_a,
        &shifted,
        &base,
        &fiber,
        order,
    ))
}

/// Multivariate Taylor coefficients of the field around `eq` by tensor-grid
/// polynomial interpolation. Documented fallback: accuracy degrades beyond
/// order 5, which is the enforced cap in this mode.
pub fn fd_taylor(sys: &SystemDef, eq: &[f64], order: usize) -> Result<Vec<Poly<f64>>> {
    if order > 5 {
        return Err(DynError::OrderTooHigh {
            got: order,
            min: 2,
            max: 5,
        });
    }
    let n = sys.dim;
    let deg = order + 1;
    let m = deg; // nodes per axis: 2m+1, interpolation degree 2m >= deg
    let nodes: Vec<f64> = (-(m as i64)..=m as i64).map(|k| k as f64).collect();
    let scale = eq.iter().map(|v| v.abs()).fold(1.0_f64, f64::max);
    let h = 0.03 * scale;
    let nn = nodes.len();
    // 1D Vandermonde inverse on the nodes
    let mut v = DMatrix::<f64>::zeros(nn, nn);
    for (i, t) in nodes.iter().enumerate() {
        for j in 0..nn {
            v[(i, j)] = (t * h).powi(j as i32);
        }
    }
    let vinv = v
        .try_inverse()
        .ok_or_else(|| DynError::SingularJacobian("vandermonde".into()))?;
    // evaluate on the tensor grid
    let mut strides = vec![1usize; n];
    for i in (0..n.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * nn;
    }
    let total = nn.pow(n as u32);
    let mut values: Vec<Vec<f64>> = vec![vec![0.0; total]; n];
    let mut x = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        for i in 0..n {
            let idx = rem / strides[i];
            rem %= strides[i];
            x[i] = eq[i] + nodes[idx] * h;
        }
        let f = sys.evaluate_raw(&x)?;
        for c in 0..n {
            values[c][flat] = f[c];
        }
    }
    // contract the inverse Vandermonde along each axis
    let mut polys = Vec::with_capacity(n);
    for comp_values in values.iter() {
        let mut data = comp_values.clone();
        for axis in 0..n {
            let mut next = vec![0.0; total];
            for flat in 0..total {
                let idx = (flat / strides[axis]) % nn;
                let base = flat - idx * strides[axis];
                let mut acc = 0.0;
                for k in 0..nn {
                    acc += vinv[(idx, k)] * data[base + k * strides[axis]];
                }
                next[flat] = acc;
            }
            data = next;
        }
        let mut p = Poly::<f64>::zero(n);
        for flat in 0..total {
            let mut rem = flat;
            let mut alpha = vec![0u32; n];
            let mut degree = 0u32;
            for i in 0..n {
                let idx = rem / strides[i];
                rem %= strides[i];
                alpha[i] = idx as u32;
                degree += idx as u32;
            }
            if degree as usize <= deg {
                let c = data[flat];
                if c.abs() > 1e-9 {
                    p.terms.insert(alpha, c);
                }
            }
        }
        polys.push(p);
    }
    Ok(polys)
}

fn float_chart(
    sys: &SystemDef,
    eq: &[f64],
    kind: ManifoldKind,
    order: usize,
) -> Result<Chart<f64>> {
    let polys: Vec<Poly<f64>> = match sys.polynomial_field(None) {
        Some(ps) => {
            let shift: Vec<BigRational> =
                eq.iter().map(|v| BigRational::from_f64_exact(*v)).collect();
            ps.iter().map(|p| p.shift(&shift).to_f64_poly()).collect()
        }
        None => fd_taylor(sys, eq, order)?
            .iter()
            .map(|p| {
                p.shift(&vec![0.0; sys.dim]) // already centered on eq
            })
            .collect(),
    };
    let a = sys.jacobian_at(eq)?;
    let split = spectral_split(&a, SPLIT_ZERO_TOL)?;
    let n = sys.dim;
    let range = split.block_range(kind);
    if range.is_empty() {
        return Err(DynError::IllConditionedSplit {
            value: 0.0,
            tol: 0.0,
        });
    }
    let base: Vec<usize> = range.clone().collect();
    let fiber: Vec<usize> = (0..n).filter(|i| !range.contains(i)).collect();
    permute_chart(
        &dmatrix_to_rows(&split.transform),
        &dmatrix_to_rows(&split.transform_inv),
        &dmatrix_to_rows(&split.block_a),
        &polys,
        &base,
        &fiber,
        order,
    )
}

fn validate_inputs(sys: &SystemDef, eq: &[f64], order: usize) -> Result<()> {
    if !(2..=10).contains(&order) {
        return Err(DynError::OrderTooHigh {
            got: order,
            min: 2,
            max: 10,
        });
    }
    let f = sys.evaluate(eq)?;
    let resid: f64 = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if resid > 1e-8 {
        return Err(DynError::NoConvergence(format!(
            "point is not an equilibrium: |f| = {resid}"
        )));
    }
    Ok(())
}

/// Exact-rational Taylor graph of the local stable/unstable/center manifold.
/// Requires a rational field expansion and a rational spectral split.
pub fn local_manifold_taylor_exact(
    sys: &SystemDef,
    eq: &[f64],
    kind: ManifoldKind,
    order: usize,
) -> Result<ManifoldGraph<BigRational>> {
    validate_inputs(sys, eq, order)?;
    let chart = exact_chart(sys, eq, kind, order, false).ok_or_else(|| {
        DynError::ExactUnavailable(format!(
            "system `{}` has no rational expansion/split at this point",
            sys.name
        ))
    })??;
    let graph = solve_graph(&chart, order)?;
    Ok(ManifoldGraph {
        kind,
        eq: eq.to_vec(),
        order,
        graph,
        chart,
    })
}

/// Taylor graph of the local manifold, exact arithmetic when available and
/// double precision otherwise.
pub fn local_manifold_taylor(
    sys: &SystemDef,
    eq: &[f64],
    kind: ManifoldKind,
    order: usize,
) -> Result<ManifoldGraph<f64>> {
    validate_inputs(sys, eq, order)?;
    if let Some(chart) = exact_chart(sys, eq, kind, order, false) {
        let chart = chart?;
        let graph = solve_graph(&chart, order)?;
        return Ok(ManifoldGraph {
            kind,
            eq: eq.to_vec(),
            order,
            graph: graph.to_f64(),
            chart: Chart {
                t: chart
                    .t
                    .iter()
                    .map(|r| r.iter().map(|c| c.to_f64()).collect())
                    .collect(),
                t_inv: chart
                    .t_inv
                    .iter()
                    .map(|r| r.iter().map(|c| c.to_f64()).collect())
                    .collect(),
                a_u: chart
                    .a_u
                    .iter()
                    .map(|r| r.iter().map(|c| c.to_f64()).collect())
                    .collect(),
                a_v: chart
                    .a_v
                    .iter()
                    .map(|r| r.iter().map(|c| c.to_f64()).collect())
                    .collect(),
                field_w: chart.field_w.iter().map(|p| p.to_f64_poly()).collect(),
                u_dim: chart.u_dim,
                v_dim: chart.v_dim,
            },
        });
    }
    let chart = float_chart(sys, eq, kind, order)?;
    let graph = solve_graph(&chart, order)?;
    Ok(ManifoldGraph {
        kind,
        eq: eq.to_vec(),
        order,
        graph,
        chart,
    })
}

/// Center-manifold graph of a parameter-extended system with the parameter
/// kept as the last chart variable, so reduced coefficients read off as
/// c_{pq} u^p lambda^q.
pub fn center_graph_extended_exact(
    sys_ext: &SystemDef,
    eq_ext: &[f64],
    order: usize,
) -> Result<ManifoldGraph<BigRational>> {
    validate_inputs(sys_ext, eq_ext, order)?;
    let chart =
        exact_chart(sys_ext, eq_ext, ManifoldKind::Center, order, true).ok_or_else(|| {
            DynError::ExactUnavailable(format!(
                "no rational expansion/split for extended system `{}`",
                sys_ext.name
            ))
        })??;
    let graph = solve_graph(&chart, order)?;
    Ok(ManifoldGraph {
        kind: ManifoldKind::Center,
        eq: eq_ext.to_vec(),
        order,
        graph,
        chart,
    })
}

/// Float fallback of [`center_graph_extended_exact`]: same distinguished
/// parameter coordinate, double-precision arithmetic.
pub fn center_graph_extended(
    sys_ext: &SystemDef,
    eq_ext: &[f64],
    order: usize,
) -> Result<ManifoldGraph<f64>> {
    if let Ok(g) = center_graph_extended_exact(sys_ext, eq_ext, order) {
        let chart = Chart {
            t: g.chart
                .t
                .iter()
                .map(|r| r.iter().map(|c| c.to_f64()).collect())
                .collect(),
            t_inv: g
                .chart
                .t_inv
                .iter()
                .map(|r| r.iter().map(|c| c.to_f64()).collect())
                .collect(),
            a_u: g
                .chart
                .a_u
                .iter()
                .map(|r| r.iter().map(|c| c.to_f64()).collect())
                .collect(),
            a_v: g
                .chart
                .a_v
                .iter()
                .map(|r| r.iter().map(|c| c.to_f64()).collect())
                .collect(),
            field_w: g.chart.field_w.iter().map(|p| p.to_f64_poly()).collect(),
            u_dim: g.chart.u_dim,
            v_dim: g.chart.v_dim,
        };
        return Ok(ManifoldGraph {
            kind: g.kind,
            eq: g.eq,
            order: g.order,
            graph: g.graph.to_f64(),
            chart,
        });
    }
    validate_inputs(sys_ext, eq_ext, order)?;
    let n = sys_ext.dim;
    let polys: Vec<Poly<f64>> = match sys_ext.polynomial_field(None) {
        Some(ps) => {
            let shift: Vec<BigRational> = eq_ext
                .iter()
                .map(|v| BigRational::from_f64_exact(*v))
                .collect();
            ps.iter().map(|p| p.shift(&shift).to_f64_poly()).collect()
        }
        None => fd_taylor(sys_ext, eq_ext, order)?,
    };
    let a = sys_ext.jacobian_at(eq_ext)?;
    let split = spectral_split(&a, SPLIT_ZERO_TOL)?;
    let (nm, nz, _np) = split.dims;
    if nz == 0 {
        return Err(DynError::IllConditionedSplit {
            value: 0.0,
            tol: 0.0,
        });
    }
    let mut t = dmatrix_to_rows(&split.transform);
    if !distinguish_last_coordinate(&mut t, nm..nm + nz) {
        return Err(DynError::IllConditionedSplit {
            value: 0.0,
            tol: 0.0,
        });
    }
    let t_mat = DMatrix::from_fn(n, n, |r, c| t[r][c]);
    let t_inv = t_mat
        .clone()
        .try_inverse()
        .ok_or(DynError::IllConditionedSplit {
            value: 0.0,
            tol: 0.0,
        })?;
    let block_a = &t_inv * &a * &t_mat;
    let base: Vec<usize> = (nm..nm + nz).collect();
    let fiber: Vec<usize> = (0..n).filter(|i| !base.contains(i)).collect();
    let chart = permute_chart(
        &t,
        &dmatrix_to_rows(&t_inv),
        &dmatrix_to_rows(&block_a),
        &polys,
        &base,
        &fiber,
        order,
    )?;
    let graph = solve_graph(&chart, order)?;
    Ok(ManifoldGraph {
        kind: ManifoldKind::Center,
        eq: eq_ext.to_vec(),
        order,
        graph,
        chart,
    })
}

/// Motion on the manifold: u' = A_u u + g_u(u, h(u)), truncated at `order`.
pub fn reduced_dynamics<C: Coeff>(graph: &ManifoldGraph<C>, order: usize) -> TaylorMap<C> {
    let d = graph.chart.u_dim;
    let mut args: Vec<Poly<C>> = (0..d).map(|i| Poly::var(d, i)).collect();
    args.extend(graph.graph.components.iter().cloned());
    let comps: Vec<Poly<C>> = (0..d)
        .map(|i| graph.chart.field_w[i].compose(&args, order as u32))
        .collect();
    TaylorMap::new(d, comps)
}

/// Appends `param' = 0` to a flow; the Jacobian gains the df/dparam column.
pub fn extend_with_parameter(sys: &SystemDef, param: &str) -> Result<SystemDef> {
    assert_eq!(
        sys.kind,
        SystemKind::Flow,
        "parameter extension needs a flow"
    );
    sys.param(param)?; // validate
    let base = sys.clone();
    let base_jac = sys.clone();
    let param_name = param.to_string();
    let param_name_jac = param_name.clone();
    let n = sys.dim;
    let poly_base = sys.clone();
    let poly_param = param.to_string();
    let params = sys.params.clone();
    let eval = Arc::new(move |_: &ParamSet, t: f64, x: &[f64], out: &mut [f64]| {
        let inner = base
            .with_param(&param_name, x[n])
            .expect("validated parameter");
        inner
            .eval_at_time(t, &x[..n], &mut out[..n])
            .expect("dimension checked");
        out[n] = 0.0;
    });
    let jac = Arc::new(
        move |_: &ParamSet, t: f64, x: &[f64], m: &mut DMatrix<f64>| {
            let inner = base_jac
                .with_param(&param_name_jac, x[n])
                .expect("validated parameter");
            let j = inner
                .jacobian_at_time(t, &x[..n])
                .expect("dimension checked");
            m.fill(0.0);
            for i in 0..n {
                for c in 0..n {
                    m[(i, c)] = j[(i, c)];
                }
            }
            let dp = inner
                .param_derivative(&param_name_jac, &x[..n])
                .expect("validated parameter");
            for i in 0..n {
                m[(i, n)] = dp[i];
            }
        },
    );
    let poly = Arc::new(move |_: &ParamSet, promote: Option<&str>| {
        if promote.is_some() {
            return None;
        }
        poly_base.polynomial_field(Some(&poly_param)).map(|mut ps| {
            ps.push(Poly::zero(ps[0].nvars)); // the parameter is frozen
            ps
        })
    });
    Ok(SystemDef::from_parts(
        format!("{}+{}", sys.name, param),
        SystemKind::Flow,
        n + 1,
        params,
        sys.periodic_coords.clone(),
        eval,
        Some(jac),
        None,
        Some(poly),
    ))
}

/// Graph-invariance residual (Lh)(z) sampled on the sphere of the given
/// radius, evaluated through the *system evaluator* (independent of the
/// Taylor solve). Returns the maximum residual norm.
pub fn verify_invariance<C: Coeff>(
    sys: &SystemDef,
    graph: &ManifoldGraph<C>,
    radius: f64,
    n_samples: usize,
) -> Result<f64> {
    let d = graph.chart.u_dim;
    let m = graph.chart.v_dim;
    let n = d + m;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0_f64;
    let t: Vec<Vec<f64>> = graph
        .chart
        .t
        .iter()
        .map(|r| r.iter().map(|c| c.to_f64()).collect())
        .collect();
    let t_inv: Vec<Vec<f64>> = graph
        .chart
        .t_inv
        .iter()
        .map(|r| r.iter().map(|c| c.to_f64()).collect())
        .collect();
    let h_f: Vec<Poly<f64>> = graph
        .graph
        .components
        .iter()
        .map(|p| p.to_f64_poly())
        .collect();
    let dh: Vec<Vec<Poly<f64>>> = h_f
        .iter()
        .map(|p| (0..d).map(|j| p.partial(j)).collect())
        .collect();
    for _ in 0..n_samples {
        let mut z: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for v in z.iter_mut() {
            *v *= radius / norm;
        }
        let hz: Vec<f64> = h_f.iter().map(|p| p.eval_f64(&z)).collect();
        // x = eq + T (z, h(z))
        let mut x = graph.eq.clone();
        for r in 0..n {
            for (c, val) in z.iter().chain(hz.iter()).enumerate() {
                x[r] += t[r][c] * val;
            }
        }
        let fx = sys.evaluate(&x)?;
        // w-velocity
        let mut fw = vec![0.0; n];
        for r in 0..n {
            for c in 0..n {
                fw[r] += t_inv[r][c] * fx[c];
            }
        }
        // residual = Dh(z) . u' - v'
        for i in 0..m {
            let mut r = -fw[d + i];
            for j in 0..d {
                r += dh[i][j].eval_f64(&z) * fw[j];
            }
            worst = worst.max(r.abs());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::rat;
    use crate::systems::build_builtin;

    /// y1' = y1, y2' = -y2 + y1^2: the unstable graph is exactly y2 = y1^2/3.
    fn saddle_with_quadratic() -> SystemDef {
        let (y1, y2) = (Poly::var(2, 0), Poly::var(2, 1));
        SystemDef::from_polynomial(
            "saddle_quadratic",
            SystemKind::Flow,
            vec![y1.clone(), y2.neg().add(&y1.mul(&y1))],
        )
    }

    /// y' = -y + c z^2, z' = yz - z^3 with rational parameter c.
    fn center_example(c: BigRational) -> SystemDef {
        let (y, z) = (Poly::var(2, 0), Poly::var(2, 1));
        let zz = z.mul(&z);
        SystemDef::from_polynomial(
            "center_example",
            SystemKind::Flow,
            vec![y.neg().add(&zz.scale(&c)), y.mul(&z).sub(&zz.mul(&z))],
        )
    }

    #[test]
    fn split_trivial_diagonal() {
        let a = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 0.0]);
        let s = spectral_split(&a, SPLIT_ZERO_TOL).unwrap();
        assert_eq!(s.dims, (1, 1, 0));
        assert!(s.off_block_residual <= 1e-10);
    }

    #[test]
    fn split_pure_rotation_is_center() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let s = spectral_split(&a, SPLIT_ZERO_TOL).unwrap();
        assert_eq!(s.dims, (0, 2, 0));
    }

    #[test]
    fn unstable_graph_is_one_third_exactly() {
        let sys = saddle_with_quadratic();
        let g = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Unstable, 4).unwrap();
        // block coordinates equal original ones here (diagonal linearization)
        let h = &g.graph.components[0];
        assert_eq!(h.coeff(&[2]), rat(1, 3));
        assert_eq!(h.terms.len(), 1, "all other coefficients vanish: {h:?}");
        // reduced dynamics on the unstable block: u' = u, no corrections
        let red = reduced_dynamics(&g, 4);
        assert_eq!(red.components[0].coeff(&[1]), rat(1, 1));
        assert_eq!(red.components[0].terms.len(), 1);
    }

    #[test]
    fn center_graph_matches_worked_example() {
        for c in [rat(0, 1), rat(1, 2), rat(1, 1), rat(2, 1)] {
            let sys = center_example(c.clone());
            let g =
                local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Center, 4).unwrap();
            let h = &g.graph.components[0];
            // h(z) = c z^2 + 0 z^3 - 2c(c-1) z^4
            assert_eq!(h.coeff(&[2]), c.clone(), "c = {c}");
            assert_eq!(h.coeff(&[3]), rat(0, 1));
            let expect4 = rat(-2, 1).mul(&c).mul(&c.sub(&rat(1, 1)));
            assert_eq!(h.coeff(&[4]), expect4);

            // reduced field: u' = (c-1) u^3 - 2c(c-1) u^5
            let red = reduced_dynamics(&g, 5);
            let r = &red.components[0];
            assert_eq!(r.coeff(&[3]), c.sub(&rat(1, 1)));
            assert_eq!(r.coeff(&[5]), rat(-2, 1).mul(&c).mul(&c.sub(&rat(1, 1))));
        }
    }

    #[test]
    fn center_reduced_field_vanishes_at_c_equals_one() {
        let sys = center_example(rat(1, 1));
        let g = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Center, 5).unwrap();
        let red = reduced_dynamics(&g, 5);
        assert!(
            red.components[0].is_zero(),
            "curve of equilibria: {:?}",
            red.components[0]
        );
    }

    #[test]
    fn linear_system_all_coefficients_zero() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let sys = SystemDef::linear(SystemKind::Flow, a);
        let g = local_manifold_taylor(&sys, &[0.0, 0.0], ManifoldKind::Unstable, 6).unwrap();
        assert!(g.graph.components[0].is_zero());
        let resid = verify_invariance(&sys, &g, 0.1, 50).unwrap();
        assert!(resid < 1e-14);
    }

    #[test]
    fn invariance_residual_scales_with_order() {
        let sys = center_example(rat(1, 2));
        let g = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Center, 4).unwrap();
        let r1 = verify_invariance(&sys, &g, 1e-2, 100).unwrap();
        let r2 = verify_invariance(&sys, &g, 5e-3, 100).unwrap();
        assert!(r1 <= 1e-9, "residual at 1e-2: {r1}");
        // truncation order 4 leaves an O(z^5) residual: halving the radius
        // shrinks it by at least 2^{order+0.5}
        let slope = (r1 / r2).log2();
        assert!(slope >= 4.5, "slope {slope}");
    }

    #[test]
    fn tangency_by_construction() {
        let sys = center_example(rat(2, 1));
        let g = local_manifold_taylor_exact(&sys, &[0.0, 0.0], ManifoldKind::Center, 4).unwrap();
        for p in &g.graph.components {
            assert!(p.coeff(&[0]).is_zero());
            assert!(p.coeff(&[1]).is_zero());
        }
    }

    #[test]
    fn lorenz_extended_split_has_two_center_directions() {
        let mut ov = ParamSet::new();
        ov.insert("r".into(), 1.0);
        let lorenz = build_builtin("lorenz", &ov).unwrap();
        let ext = extend_with_parameter(&lorenz, "r").unwrap();
        assert_eq!(ext.dim, 4);
        let eq = [0.0, 0.0, 0.0, 1.0];
        let f = ext.evaluate(&eq).unwrap();
        assert!(f.iter().all(|v| v.abs() < 1e-14));
        let a = ext.jacobian_at(&eq).unwrap();
        let eigs = a.complex_eigenvalues();
        let n_zero = eigs.iter().filter(|e| e.norm() < 1e-8).count();
        let n_minus = eigs.iter().filter(|e| e.re < -1e-8).count();
        assert_eq!((n_zero, n_minus), (2, 2));
        let split = spectral_split(&a, SPLIT_ZERO_TOL).unwrap();
        assert_eq!(split.dims, (2, 2, 0));
    }

    #[test]
    fn lorenz_center_manifold_reduced_field_is_odd_supercritical() {
        let mut ov = ParamSet::new();
        ov.insert("r".into(), 1.0);
        let lorenz = build_builtin("lorenz", &ov).unwrap();
        let ext = extend_with_parameter(&lorenz, "r").unwrap();
        let g = center_graph_extended_exact(&ext, &[0.0, 0.0, 0.0, 1.0], 3).unwrap();
        let red = reduced_dynamics(&g, 3);
        // variables: (u, lambda); the u-component carries the pitchfork data
        let r = &red.components[0];
        // even-in-u coefficients vanish exactly by the (X,Y) -> (-X,-Y) symmetry
        assert!(r.coeff(&[0, 1]).is_zero(), "c01 = {:?}", r.coeff(&[0, 1]));
        assert!(r.coeff(&[2, 0]).is_zero());
        assert!(r.coeff(&[0, 2]).is_zero());
        let c11 = Coeff::to_f64(&r.coeff(&[1, 1]));
        let c30 = Coeff::to_f64(&r.coeff(&[3, 0]));
        assert!(c11 > 0.0, "transversal coefficient c11 = {c11}");
        assert!(c30 < 0.0, "cubic coefficient c30 = {c30} (supercritical)");
    }

    #[test]
    fn fd_taylor_recovers_trig_expansion() {
        let sys = SystemDef::from_fn("sin_field", SystemKind::Flow, 1, |_, x, out| {
            out[0] = x[0].sin();
        });
        let polys = fd_taylor(&sys, &[0.0], 3).unwrap();
        assert!((polys[0].coeff(&[1]) - 1.0).abs() < 1e-8);
        assert!(polys[0].coeff(&[2]).abs() < 1e-8);
        assert!((polys[0].coeff(&[3]) + 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn order_out_of_range_is_rejected() {
        let sys = saddle_with_quadratic();
        assert!(matches!(
            local_manifold_taylor(&sys, &[0.0, 0.0], ManifoldKind::Unstable, 11),
            Err(DynError::OrderTooHigh { .. })
        ));
    }
}
