//! Dense-by-terms multivariate polynomials over an abstract coefficient field.
//!
//! The manifold and normal-form solvers work order by order on Taylor
//! expansions. All of that machinery is generic over [`Coeff`] so the same
//! code runs in exact rational arithmetic (`BigRational`) when the input
//! field is rational, and in `f64` otherwise.

#![allow(clippy::needless_range_loop)] // indexed loops mirror the matrix algebra

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// Coefficient field abstraction. Implemented for `f64` and `BigRational`.
pub trait Coeff: Clone + PartialEq + fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_f64_exact(v: f64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    /// Whether arithmetic is exact (no rounding). Controls pivot policy in
    /// the linear solver: exact fields treat only true zeros as singular.
    fn exact() -> bool;
    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }
}

impl Coeff for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_f64_exact(v: f64) -> Self {
        v
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn exact() -> bool {
        false
    }
}

impl Coeff for BigRational {
    fn zero() -> Self {
        num_traits::Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_f64_exact(v: f64) -> Self {
        // Every finite f64 is a dyadic rational; this conversion is exact.
        BigRational::from_f64(v).expect("non-finite value has no rational form")
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn div(&self, other: &Self) -> Self {
        self / other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn exact() -> bool {
        true
    }
    fn abs_f64(&self) -> f64 {
        ToPrimitive::to_f64(&self.abs()).unwrap_or(f64::NAN)
    }
}

/// Multi-index exponent vector.
pub type MultiIndex = Vec<u32>;

/// Total degree of a multi-index.
pub fn index_degree(alpha: &[u32]) -> u32 {
    alpha.iter().sum()
}

/// All multi-indices over `n` variables of total degree exactly `k`,
/// in lexicographic order (ties broken once and for all here).
pub fn monomials_of_degree(n: usize, k: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut current = vec![0u32; n];
    fn rec(out: &mut Vec<MultiIndex>, current: &mut MultiIndex, pos: usize, left: u32) {
        if pos + 1 == current.len() {
            current[pos] = left;
            out.push(current.clone());
            return;
        }
        for v in (0..=left).rev() {
            current[pos] = v;
            rec(out, current, pos + 1, left - v);
        }
    }
    if n == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(&mut out, &mut current, 0, k);
    out.sort();
    out
}

/// A sparse multivariate polynomial in `nvars` variables.
#[derive(Clone, PartialEq)]
pub struct Poly<C: Coeff> {
    pub nvars: usize,
    /// exponent vector -> coefficient; zero coefficients are never stored.
    pub terms: BTreeMap<MultiIndex, C>,
}

impl<C: Coeff> Poly<C> {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(vec![0; nvars], c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut alpha = vec![0; nvars];
        alpha[i] = 1;
        let mut p = Poly::zero(nvars);
        p.terms.insert(alpha, C::one());
        p
    }

    pub fn monomial(nvars: usize, alpha: MultiIndex, c: C) -> Self {
        assert_eq!(alpha.len(), nvars);
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(alpha, c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .keys()
            .map(|a| index_degree(a))
            .max()
            .unwrap_or(0)
    }

    pub fn coeff(&self, alpha: &[u32]) -> C {
        self.terms.get(alpha).cloned().unwrap_or_else(C::zero)
    }

    fn insert_add(&mut self, alpha: MultiIndex, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&alpha) {
            Some(existing) => {
                let s = existing.add(&c);
                if s.is_zero() {
                    self.terms.remove(&alpha);
                } else {
                    *existing = s;
                }
            }
            None => {
                self.terms.insert(alpha, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.insert_add(a.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (a, c) in &other.terms {
            out.insert_add(a.clone(), c.neg());
        }
        out
    }

    pub fn neg(&self) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (a, c) in &self.terms {
            out.terms.insert(a.clone(), c.neg());
        }
        out
    }

    pub fn scale(&self, s: &C) -> Self {
        let mut out = Poly::zero(self.nvars);
        if s.is_zero() {
            return out;
        }
        for (a, c) in &self.terms {
            let v = c.mul(s);
            if !v.is_zero() {
                out.terms.insert(a.clone(), v);
            }
        }
        out
    }

    /// Product truncated to total degree `max_deg` (u32::MAX for none).
    pub fn mul_trunc(&self, other: &Self, max_deg: u32) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Poly::zero(self.nvars);
        for (a, ca) in &self.terms {
            let da = index_degree(a);
            if da > max_deg {
                continue;
            }
            for (b, cb) in &other.terms {
                if da + index_degree(b) > max_deg {
                    continue;
                }
                let alpha: MultiIndex = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
                out.insert_add(alpha, ca.mul(cb));
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.mul_trunc(other, u32::MAX)
    }

    /// Drop all terms of total degree above `max_deg`.
    pub fn truncate(&self, max_deg: u32) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (a, c) in &self.terms {
            if index_degree(a) <= max_deg {
                out.terms.insert(a.clone(), c.clone());
            }
        }
        out
    }

    /// Homogeneous part of total degree `k`.
    pub fn homogeneous_part(&self, k: u32) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (a, c) in &self.terms {
            if index_degree(a) == k {
                out.terms.insert(a.clone(), c.clone());
            }
        }
        out
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (a, c) in &self.terms {
            if a[i] == 0 {
                continue;
            }
            let mut alpha = a.clone();
            alpha[i] -= 1;
            out.insert_add(alpha, c.mul(&C::from_i64(a[i] as i64)));
        }
        out
    }

    pub fn pow_trunc(&self, e: u32, max_deg: u32) -> Self {
        let mut out = Poly::constant(self.nvars, C::one());
        for _ in 0..e {
            out = out.mul_trunc(self, max_deg);
            if out.is_zero() {
                break;
            }
        }
        out
    }

    /// Substitute `args[i]` for variable `i`, truncating at `max_deg`.
    pub fn compose(&self, args: &[Poly<C>], max_deg: u32) -> Poly<C> {
        assert_eq!(args.len(), self.nvars);
        let out_vars = if args.is_empty() { 0 } else { args[0].nvars };
        let mut out = Poly::zero(out_vars);
        for (a, c) in &self.terms {
            let mut term = Poly::constant(out_vars, c.clone());
            for (i, &e) in a.iter().enumerate() {
                if e > 0 {
                    term = term.mul_trunc(&args[i].pow_trunc(e, max_deg), max_deg);
                    if term.is_zero() {
                        break;
                    }
                }
            }
            out = out.add(&term);
        }
        out
    }

    /// Recenter: p(x) -> p(x + a).
    pub fn shift(&self, a: &[C]) -> Poly<C> {
        assert_eq!(a.len(), self.nvars);
        let args: Vec<Poly<C>> = (0..self.nvars)
            .map(|i| Poly::var(self.nvars, i).add(&Poly::constant(self.nvars, a[i].clone())))
            .collect();
        self.compose(&args, u32::MAX)
    }

    /// Linear substitution x = M y (column-major application: x_i = sum_j M[i][j] y_j).
    pub fn linear_substitute(&self, m: &[Vec<C>], max_deg: u32) -> Poly<C> {
        assert_eq!(m.len(), self.nvars);
        let out_vars = if m.is_empty() { 0 } else { m[0].len() };
        let args: Vec<Poly<C>> = (0..self.nvars)
            .map(|i| {
                let mut p = Poly::zero(out_vars);
                for (j, coeff) in m[i].iter().enumerate() {
                    p.insert_add(
                        {
                            let mut alpha = vec![0; out_vars];
                            alpha[j] = 1;
                            alpha
                        },
                        coeff.clone(),
                    );
                }
                p
            })
            .collect();
        self.compose(&args, max_deg)
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nvars);
        let mut sum = 0.0;
        for (a, c) in &self.terms {
            let mut v = c.to_f64();
            for (i, &e) in a.iter().enumerate() {
                v *= x[i].powi(e as i32);
            }
            sum += v;
        }
        sum
    }

    pub fn eval(&self, x: &[C]) -> C {
        assert_eq!(x.len(), self.nvars);
        let mut sum = C::zero();
        for (a, c) in &self.terms {
            let mut v = c.clone();
            for (i, &e) in a.iter().enumerate() {
                for _ in 0..e {
                    v = v.mul(&x[i]);
                }
            }
            sum = sum.add(&v);
        }
        sum
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Poly<D> {
        let mut out = Poly::zero(self.nvars);
        for (a, c) in &self.terms {
            let v = f(c);
            if !v.is_zero() {
                out.terms.insert(a.clone(), v);
            }
        }
        out
    }

    pub fn to_f64_poly(&self) -> Poly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Largest coefficient magnitude (as f64), used for scale-aware tolerances.
    pub fn max_abs(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.abs_f64())
            .fold(0.0_f64, f64::max)
    }
}

impl<C: Coeff> fmt::Debug for Poly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(a, c)| {
                let vars: Vec<String> = a
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| {
                        if e == 1 {
                            format!("x{i}")
                        } else {
                            format!("x{i}^{e}")
                        }
                    })
                    .collect();
                if vars.is_empty() {
                    format!("{c:?}")
                } else {
                    format!("{c:?} {}", vars.join(" "))
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Dense linear solve with partial pivoting, generic over the coefficient
/// field. Exact fields declare a pivot singular only when it is a true zero;
/// `f64` uses `tol` relative to the largest entry.
pub fn solve_dense<C: Coeff>(
    a: &[Vec<C>],
    b: &[C],
    tol: f64,
) -> std::result::Result<Vec<C>, usize> {
    let n = a.len();
    assert!(a.iter().all(|row| row.len() == n));
    assert_eq!(b.len(), n);
    let mut m: Vec<Vec<C>> = a.to_vec();
    let mut rhs: Vec<C> = b.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|c| c.abs_f64())
        .fold(0.0_f64, f64::max)
        .max(1e-300);

    for col in 0..n {
        let (pivot_row, pivot_mag) = (col..n)
            .map(|r| (r, m[r][col].abs_f64()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        let singular = if C::exact() {
            m[pivot_row][col].is_zero()
        } else {
            pivot_mag < tol * scale
        };
        if singular {
            return Err(col);
        }
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        let pivot = m[col][col].clone();
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].div(&pivot);
            for c in col..n {
                let v = m[r][c].sub(&factor.mul(&m[col][c]));
                m[r][c] = v;
            }
            let v = rhs[r].sub(&factor.mul(&rhs[col]));
            rhs[r] = v;
        }
    }
    let mut x = vec![C::zero(); n];
    for col in (0..n).rev() {
        let mut acc = rhs[col].clone();
        for c in (col + 1)..n {
            acc = acc.sub(&m[col][c].mul(&x[c]));
        }
        x[col] = acc.div(&m[col][col]);
    }
    Ok(x)
}

/// Polynomial map between coordinate blocks, stored as a multi-index
/// coefficient table. Invariant: no zero coefficient vectors are stored.
#[derive(Clone, Debug)]
pub struct TaylorMap<C: Coeff> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub components: Vec<Poly<C>>,
}

impl<C: Coeff> TaylorMap<C> {
    pub fn new(in_dim: usize, components: Vec<Poly<C>>) -> Self {
        assert!(components.iter().all(|p| p.nvars == in_dim));
        TaylorMap {
            in_dim,
            out_dim: components.len(),
            components,
        }
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        TaylorMap::new(in_dim, (0..out_dim).map(|_| Poly::zero(in_dim)).collect())
    }

    pub fn degree(&self) -> u32 {
        self.components
            .iter()
            .map(|p| p.degree())
            .max()
            .unwrap_or(0)
    }

    /// Coefficient vector (out-space) for one multi-index.
    pub fn coeff_vector(&self, alpha: &[u32]) -> Vec<C> {
        self.components.iter().map(|p| p.coeff(alpha)).collect()
    }

    pub fn eval_f64(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|p| p.eval_f64(x)).collect()
    }

    pub fn to_f64(&self) -> TaylorMap<f64> {
        TaylorMap::new(
            self.in_dim,
            self.components.iter().map(|p| p.to_f64_poly()).collect(),
        )
    }

    /// Union of multi-indices appearing in any component, sorted.
    pub fn support(&self) -> Vec<MultiIndex> {
        let mut set: std::collections::BTreeSet<MultiIndex> = Default::default();
        for p in &self.components {
            for a in p.terms.keys() {
                set.insert(a.clone());
            }
        }
        set.into_iter().collect()
    }
}

/// Serialization of the coefficient table; exact rationals become "p/q"
/// strings, floats stay JSON numbers.
pub trait CoeffJson: Coeff {
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Option<Self>;
}

impl CoeffJson for f64 {
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self)
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        v.as_f64()
    }
}

impl CoeffJson for BigRational {
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(format!("{}/{}", self.numer(), self.denom()))
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        let s = v.as_str()?;
        let (p, q) = s.split_once('/')?;
        Some(BigRational::new(p.parse().ok()?, q.parse().ok()?))
    }
}

impl<C: CoeffJson> TaylorMap<C> {
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .support()
            .into_iter()
            .map(|alpha| {
                let coeffs: Vec<serde_json::Value> = self
                    .coeff_vector(&alpha)
                    .iter()
                    .map(|c| c.to_json())
                    .collect();
                serde_json::json!({ "alpha": alpha, "coeff": coeffs })
            })
            .collect();
        serde_json::json!({
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "terms": terms,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Option<Self> {
        let in_dim = v.get("in_dim")?.as_u64()? as usize;
        let out_dim = v.get("out_dim")?.as_u64()? as usize;
        let mut components = vec![Poly::zero(in_dim); out_dim];
        for term in v.get("terms")?.as_array()? {
            let alpha: MultiIndex = term
                .get("alpha")?
                .as_array()?
                .iter()
                .map(|x| x.as_u64().map(|v| v as u32))
                .collect::<Option<_>>()?;
            if alpha.len() != in_dim {
                return None;
            }
            let coeffs = term.get("coeff")?.as_array()?;
            if coeffs.len() != out_dim {
                return None;
            }
            for (i, cv) in coeffs.iter().enumerate() {
                let c = C::from_json(cv)?;
                if !c.is_zero() {
                    components[i].terms.insert(alpha.clone(), c);
                }
            }
        }
        Some(TaylorMap::new(in_dim, components))
    }
}

/// Shorthand for building exact rationals in tests and builtins.
pub fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_enumeration_counts() {
        // dim of homogeneous degree-k space over n vars is C(n+k-1, k)
        assert_eq!(monomials_of_degree(2, 2).len(), 3);
        assert_eq!(monomials_of_degree(3, 2).len(), 6);
        assert_eq!(monomials_of_degree(2, 3).len(), 4);
        assert_eq!(monomials_of_degree(1, 5).len(), 1);
    }

    #[test]
    fn product_and_shift_exact() {
        // (x + y)^2 = x^2 + 2xy + y^2
        let x = Poly::<BigRational>::var(2, 0);
        let y = Poly::<BigRational>::var(2, 1);
        let s = x.add(&y);
        let sq = s.mul(&s);
        assert_eq!(sq.coeff(&[2, 0]), rat(1, 1));
        assert_eq!(sq.coeff(&[1, 1]), rat(2, 1));
        assert_eq!(sq.coeff(&[0, 2]), rat(1, 1));

        // shift x^2 by a=1: (x+1)^2 = x^2 + 2x + 1
        let p = x.mul(&x).shift(&[rat(1, 1), rat(0, 1)]);
        assert_eq!(p.coeff(&[0, 0]), rat(1, 1));
        assert_eq!(p.coeff(&[1, 0]), rat(2, 1));
        assert_eq!(p.coeff(&[2, 0]), rat(1, 1));
    }

    #[test]
    fn compose_truncates() {
        // f(u) = u^2, u = x + x^2, truncated at degree 3: x^2 + 2x^3
        let f = Poly::<f64>::monomial(1, vec![2], 1.0);
        let u = Poly::<f64>::var(1, 0).add(&Poly::monomial(1, vec![2], 1.0));
        let g = f.compose(&[u], 3);
        assert_eq!(g.coeff(&[2]), 1.0);
        assert_eq!(g.coeff(&[3]), 2.0);
        assert_eq!(g.coeff(&[4]), 0.0);
    }

    #[test]
    fn derivative_and_eval() {
        // d/dx (x^2 y) = 2xy
        let p = Poly::<f64>::monomial(2, vec![2, 1], 1.0);
        let d = p.partial(0);
        assert_eq!(d.coeff(&[1, 1]), 2.0);
        assert!((p.eval_f64(&[2.0, 3.0]) - 12.0).abs() < 1e-15);
    }

    #[test]
    fn dense_solve_rational_exact() {
        // [[2, 1], [1, 3]] x = [5, 10] -> x = (1, 3)
        let a = vec![vec![rat(2, 1), rat(1, 1)], vec![rat(1, 1), rat(3, 1)]];
        let b = vec![rat(5, 1), rat(10, 1)];
        let x = solve_dense(&a, &b, 0.0).unwrap();
        assert_eq!(x, vec![rat(1, 1), rat(3, 1)]);
    }

    #[test]
    fn dense_solve_detects_singular() {
        let a = vec![vec![rat(1, 1), rat(2, 1)], vec![rat(2, 1), rat(4, 1)]];
        let b = vec![rat(1, 1), rat(2, 1)];
        assert!(solve_dense(&a, &b, 0.0).is_err());
    }

    #[test]
    fn taylor_map_json_round_trip_rational() {
        let mut h = Poly::<BigRational>::zero(1);
        h.terms.insert(vec![2], rat(1, 3));
        let tm = TaylorMap::new(1, vec![h]);
        let js = tm.to_json();
        assert_eq!(js["terms"][0]["coeff"][0], serde_json::json!("1/3"));
        let back = TaylorMap::<BigRational>::from_json(&js).unwrap();
        assert_eq!(back.components[0].coeff(&[2]), rat(1, 3));
    }
}
