//! System catalog: flows and maps with evaluators, Jacobians, divergences
//! and optional exact polynomial representations.

mod builtins;

pub use builtins::{builtin_names, builtin_param_specs};

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_rational::BigRational;

use crate::error::{DynError, Result};
use crate::poly::{Coeff, Poly};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    Flow,
    Map,
}

/// Named parameter with default and optional admissible range.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub range: Option<(f64, f64)>,
}

/// Ordered parameter table; ordering is part of the public contract so
/// sweeps and reports are deterministic.
pub type ParamSet = BTreeMap<String, f64>;

type EvalFn = Arc<dyn Fn(&ParamSet, f64, &[f64], &mut [f64]) + Send + Sync>;
type JacFn = Arc<dyn Fn(&ParamSet, f64, &[f64], &mut DMatrix<f64>) + Send + Sync>;
type DivFn = Arc<dyn Fn(&ParamSet, f64, &[f64]) -> f64 + Send + Sync>;
type PolyFn = Arc<dyn Fn(&ParamSet, Option<&str>) -> Option<Vec<Poly<BigRational>>> + Send + Sync>;

/// A flow `x' = f(t, x)` or map `x -> F(x)`. Immutable after construction:
/// parameter sweeps build fresh values, so evaluators stay pure and
/// thread-safe.
#[derive(Clone)]
pub struct SystemDef {
    pub name: String,
    pub kind: SystemKind,
    pub dim: usize,
    pub params: ParamSet,
    pub periodic_coords: Vec<(usize, f64)>,
    eval_fn: EvalFn,
    jac_fn: Option<JacFn>,
    div_fn: Option<DivFn>,
    poly_fn: Option<PolyFn>,
}

impl std::fmt::Debug for SystemDef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemDef")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .finish()
    }
}

impl SystemDef {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_parts(
        name: impl Into<String>,
        kind: SystemKind,
        dim: usize,
        params: ParamSet,
        periodic_coords: Vec<(usize, f64)>,
        eval_fn: EvalFn,
        jac_fn: Option<JacFn>,
        div_fn: Option<DivFn>,
        poly_fn: Option<PolyFn>,
    ) -> Self {
        SystemDef {
            name: name.into(),
            kind,
            dim,
            params,
            periodic_coords,
            eval_fn,
            jac_fn,
            div_fn,
            poly_fn,
        }
    }

    /// Custom flow or map from a plain closure (no analytic Jacobian).
    pub fn from_fn(
        name: impl Into<String>,
        kind: SystemKind,
        dim: usize,
        f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        SystemDef::from_parts(
            name,
            kind,
            dim,
            ParamSet::new(),
            Vec::new(),
            Arc::new(move |_, t, x, out| f(t, x, out)),
            None,
            None,
            None,
        )
    }

    /// Custom system given by exact polynomial components. The evaluator and
    /// the analytic Jacobian are derived from the polynomials, so the float
    /// and exact views cannot drift apart.
    pub fn from_polynomial(
        name: impl Into<String>,
        kind: SystemKind,
        components: Vec<Poly<BigRational>>,
    ) -> Self {
        let dim = components.len();
        assert!(components.iter().all(|p| p.nvars == dim));
        let float: Vec<Poly<f64>> = components.iter().map(|p| p.to_f64_poly()).collect();
        let jac: Vec<Vec<Poly<f64>>> = float
            .iter()
            .map(|p| (0..dim).map(|j| p.partial(j)).collect())
            .collect();
        let float_eval = float.clone();
        let exact = components;
        SystemDef::from_parts(
            name,
            kind,
            dim,
            ParamSet::new(),
            Vec::new(),
            Arc::new(move |_, _, x, out| {
                for (i, p) in float_eval.iter().enumerate() {
                    out[i] = p.eval_f64(x);
                }
            }),
            Some(Arc::new(move |_, _, x, m| {
                for i in 0..dim {
                    for j in 0..dim {
                        m[(i, j)] = jac[i][j].eval_f64(x);
                    }
                }
            })),
            None,
            Some(Arc::new(move |_, promote| {
                if promote.is_some() {
                    None
                } else {
                    Some(exact.clone())
                }
            })),
        )
    }

    /// Linear flow `x' = A x` (or map `x -> A x`).
    pub fn linear(kind: SystemKind, a: DMatrix<f64>) -> Self {
        let dim = a.nrows();
        assert_eq!(a.ncols(), dim);
        let exact: Vec<Poly<BigRational>> = (0..dim)
            .map(|i| {
                let mut p = Poly::zero(dim);
                for j in 0..dim {
                    let c = BigRational::from_f64_exact(a[(i, j)]);
                    p = p.add(&Poly::var(dim, j).scale(&c));
                }
                p
            })
            .collect();
        let mat = a.clone();
        let mat_j = a.clone();
        let trace = a.trace();
        SystemDef::from_parts(
            "linear",
            kind,
            dim,
            ParamSet::new(),
            Vec::new(),
            Arc::new(move |_, _, x, out| {
                for i in 0..mat.nrows() {
                    let mut s = 0.0;
                    for j in 0..mat.ncols() {
                        s += mat[(i, j)] * x[j];
                    }
                    out[i] = s;
                }
            }),
            Some(Arc::new(move |_, _, _, m| m.copy_from(&mat_j))),
            Some(Arc::new(move |_, _, _| trace)),
            Some(Arc::new(move |_, promote| {
                if promote.is_some() {
                    None
                } else {
                    Some(exact.clone())
                }
            })),
        )
    }

    /// Rebind one parameter, returning a fresh system (evaluators shared).
    pub fn with_param(&self, name: &str, value: f64) -> Result<SystemDef> {
        if !self.params.contains_key(name) {
            return Err(DynError::UnknownParam {
                system: self.name.clone(),
                param: name.to_string(),
            });
        }
        let mut out = self.clone();
        out.params.insert(name.to_string(), value);
        Ok(out)
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        self.params
            .get(name)
            .copied()
            .ok_or_else(|| DynError::UnknownParam {
                system: self.name.clone(),
                param: name.to_string(),
            })
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(DynError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Reduce periodic coordinates to [0, period).
    pub fn reduce_state(&self, x: &mut [f64]) {
        for &(i, period) in &self.periodic_coords {
            x[i] = x[i].rem_euclid(period);
        }
    }

    /// Distance that uses shortest-arc metric on periodic coordinates.
    pub fn state_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut sum = 0.0;
        'outer: for i in 0..self.dim {
            for &(j, period) in &self.periodic_coords {
                if i == j {
                    let d = (a[i] - b[i]).rem_euclid(period);
                    let arc = d.min(period - d);
                    sum += arc * arc;
                    continue 'outer;
                }
            }
            let d = a[i] - b[i];
            sum += d * d;
        }
        sum.sqrt()
    }

    pub fn eval_at_time(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        let mut state = x.to_vec();
        self.reduce_state(&mut state);
        (self.eval_fn)(&self.params, t, &state, out);
        Ok(())
    }

    /// `f(x)` for flows, `F(x)` for maps (autonomous view, t = 0).
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_at_time(0.0, x, &mut out)?;
        if self.kind == SystemKind::Map {
            self.reduce_state(&mut out);
        }
        Ok(out)
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jac_fn.is_some()
    }

    pub fn jacobian_at_time(&self, t: f64, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let mut state = x.to_vec();
        self.reduce_state(&mut state);
        let mut m = DMatrix::zeros(self.dim, self.dim);
        match &self.jac_fn {
            Some(j) => j(&self.params, t, &state, &mut m),
            None => self.fd_jacobian(t, &state, &mut m),
        }
        Ok(m)
    }

    /// Analytic Jacobian when declared, else central finite differences with
    /// step h = max(1e-6, 1e-6 |x_i|) per coordinate.
    pub fn jacobian_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.jacobian_at_time(0.0, x)
    }

    pub fn fd_jacobian(&self, t: f64, x: &[f64], m: &mut DMatrix<f64>) {
        let n = self.dim;
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for j in 0..n {
            let h = 1e-6_f64.max(1e-6 * x[j].abs());
            xp[j] = x[j] + h;
            xm[j] = x[j] - h;
            (self.eval_fn)(&self.params, t, &xp, &mut fp);
            (self.eval_fn)(&self.params, t, &xm, &mut fm);
            for i in 0..n {
                m[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
            }
            xp[j] = x[j];
            xm[j] = x[j];
        }
    }

    /// Divergence of the field (flows): analytic when declared, else trace
    /// of the Jacobian.
    pub fn divergence_at(&self, t: f64, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let mut state = x.to_vec();
        self.reduce_state(&mut state);
        match &self.div_fn {
            Some(d) => Ok(d(&self.params, t, &state)),
            None => Ok(self.jacobian_at_time(t, &state)?.trace()),
        }
    }

    /// Exact polynomial representation of the field, when available.
    /// `promote` lifts the named parameter to an extra trailing variable.
    pub fn polynomial_field(&self, promote: Option<&str>) -> Option<Vec<Poly<BigRational>>> {
        self.poly_fn.as_ref().and_then(|f| f(&self.params, promote))
    }

    /// Column `df/dp` of the named parameter, by central differences unless a
    /// polynomial representation provides it exactly.
    pub fn param_derivative(&self, name: &str, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.param(name)?;
        let h = 1e-6_f64.max(1e-6 * v.abs());
        let up = self.with_param(name, v + h)?;
        let dn = self.with_param(name, v - h)?;
        let fp = up.evaluate_raw(x)?;
        let fm = dn.evaluate_raw(x)?;
        Ok(fp
            .iter()
            .zip(fm.iter())
            .map(|(a, b)| (a - b) / (2.0 * h))
            .collect())
    }

    /// Evaluation without periodic reduction of the output (used by map
    /// composition internals and parameter differencing).
    pub fn evaluate_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_at_time(0.0, x, &mut out)?;
        Ok(out)
    }
}

/// Builds one of the named builtin systems, applying parameter overrides.
pub fn build_builtin(name: &str, overrides: &ParamSet) -> Result<SystemDef> {
    let mut sys = builtins::construct(name)?;
    for (k, v) in overrides {
        sys = sys.with_param(k, *v)?;
    }
    Ok(sys)
}

/// Verdict of the volume-evolution classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conservativity {
    Conservative,
    Dissipative,
    Neither,
}

/// Witnessed classification report: divergence values for flows,
/// |det DF| for maps, at every sample.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ConservativityReport {
    pub verdict: Conservativity,
    /// (sample index, witness value) pairs; divergence or |det DF|.
    pub witnesses: Vec<f64>,
    pub tol: f64,
}

/// Classifies by the sign of the divergence at all samples (flows) or by
/// |det DF| against 1 (maps). Conservative needs the witness pinned at the
/// neutral value everywhere; dissipative needs strict contraction everywhere.
pub fn conservativity_report(
    sys: &SystemDef,
    samples: &[Vec<f64>],
    tol: f64,
) -> Result<ConservativityReport> {
    assert!(!samples.is_empty(), "need at least one sample state");
    let mut witnesses = Vec::with_capacity(samples.len());
    match sys.kind {
        SystemKind::Flow => {
            for s in samples {
                witnesses.push(sys.divergence_at(0.0, s)?);
            }
            let conservative = witnesses.iter().all(|w| w.abs() <= tol);
            let dissipative = witnesses.iter().all(|w| *w < -tol);
            let verdict = if conservative {
                Conservativity::Conservative
            } else if dissipative {
                Conservativity::Dissipative
            } else {
                Conservativity::Neither
            };
            Ok(ConservativityReport {
                verdict,
                witnesses,
                tol,
            })
        }
        SystemKind::Map => {
            for s in samples {
                let det = sys.jacobian_at(s)?.determinant().abs();
                witnesses.push(det);
            }
            let conservative = witnesses.iter().all(|w| (w - 1.0).abs() <= tol);
            let dissipative = witnesses.iter().all(|w| *w < 1.0 - tol);
            let verdict = if conservative {
                Conservativity::Conservative
            } else if dissipative {
                Conservativity::Dissipative
            } else {
                Conservativity::Neither
            };
            Ok(ConservativityReport {
                verdict,
                witnesses,
                tol,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn lorenz_defaults_and_equilibrium() {
        let sys = build_builtin("lorenz", &ParamSet::new()).unwrap();
        assert_eq!(sys.kind, SystemKind::Flow);
        assert_eq!(sys.dim, 3);
        assert_eq!(sys.param("sigma").unwrap(), 10.0);
        assert_eq!(sys.param("b").unwrap(), 8.0 / 3.0);
        assert_eq!(sys.param("r").unwrap(), 28.0);
        let f = sys.evaluate(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(f, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn henon_defaults_and_determinant() {
        let sys = build_builtin("henon", &ParamSet::new()).unwrap();
        assert_eq!(sys.kind, SystemKind::Map);
        assert_eq!(sys.dim, 2);
        assert_eq!(sys.param("lambda").unwrap(), 1.4);
        assert_eq!(sys.param("b").unwrap(), 0.3);
        // oracle: det [[-2 lambda x, 1], [b, 0]] = -b, independent of x
        let mut r = rng();
        for _ in 0..20 {
            let x = [r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)];
            let det = sys.jacobian_at(&x).unwrap().determinant();
            assert!((det - (-0.3)).abs() < 1e-14, "det = {det}");
        }
    }

    #[test]
    fn henon_explicit_inverse_recovers_state() {
        let sys = build_builtin("henon", &ParamSet::new()).unwrap();
        let lambda = 1.4;
        let b = 0.3;
        let mut r = rng();
        for _ in 0..50 {
            let x = [r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
            let fx = sys.evaluate(&x).unwrap();
            let x_back = fx[1] / b;
            let y_back = fx[0] - 1.0 + lambda * (fx[1] / b) * (fx[1] / b);
            assert!((x_back - x[0]).abs() < 1e-12);
            assert!((y_back - x[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn standard_map_unit_determinant() {
        for eps in [0.1, 1.0, 10.0] {
            let mut ov = ParamSet::new();
            ov.insert("eps".into(), eps);
            let sys = build_builtin("standard_map", &ov).unwrap();
            let mut r = rng();
            for _ in 0..1000 {
                let x = [
                    r.gen_range(0.0..std::f64::consts::TAU),
                    r.gen_range(-3.0..3.0),
                ];
                let det = sys.jacobian_at(&x).unwrap().determinant();
                assert!((det - 1.0).abs() < 1e-12, "eps={eps} det={det}");
            }
        }
    }

    #[test]
    fn standard_map_zero_eps_is_free_rotation() {
        let mut ov = ParamSet::new();
        ov.insert("eps".into(), 0.0);
        let sys = build_builtin("standard_map", &ov).unwrap();
        let (q0, p0) = (1.0, 0.7);
        let mut state = vec![q0, p0];
        for n in 1..=25 {
            state = sys.evaluate(&state).unwrap();
            let expect_q = (q0 + n as f64 * p0).rem_euclid(std::f64::consts::TAU);
            assert!((state[0] - expect_q).abs() < 1e-10);
            assert!((state[1] - p0).abs() < 1e-15);
        }
    }

    #[test]
    fn standard_map_fixed_point_at_pi() {
        let mut ov = ParamSet::new();
        ov.insert("eps".into(), 0.5);
        let sys = build_builtin("standard_map", &ov).unwrap();
        let fx = sys.evaluate(&[std::f64::consts::PI, 0.0]).unwrap();
        assert!((fx[0] - std::f64::consts::PI).abs() < 1e-12);
        assert!(fx[1].abs() < 1e-15);
    }

    #[test]
    fn logistic_at_half() {
        let mut ov = ParamSet::new();
        ov.insert("lambda".into(), 4.0);
        let sys = build_builtin("logistic", &ov).unwrap();
        assert_eq!(sys.evaluate(&[0.5]).unwrap(), vec![1.0]);
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        // Kinked (tent) and time-switched (hill) builtins are sampled away
        // from their non-smooth sets.
        let mut r = rng();
        for name in builtin_names() {
            let sys = build_builtin(name, &ParamSet::new()).unwrap();
            if !sys.has_analytic_jacobian() {
                continue;
            }
            let mut worst = 0.0_f64;
            for _ in 0..100 {
                let mut x: Vec<f64> = (0..sys.dim).map(|_| r.gen_range(-2.0..2.0)).collect();
                sys.reduce_state(&mut x);
                if *name == "tent" || *name == "tent3" {
                    x[0] = r.gen_range(0.05..0.45);
                }
                let analytic = sys.jacobian_at(&x).unwrap();
                let mut fd = DMatrix::zeros(sys.dim, sys.dim);
                sys.fd_jacobian(0.0, &x, &mut fd);
                let scale = analytic.amax().max(1.0);
                let err = (&analytic - &fd).amax() / scale;
                worst = worst.max(err);
            }
            assert!(worst <= 1e-5, "{name}: max rel jacobian error {worst}");
        }
    }

    #[test]
    fn conservativity_classifications() {
        let lorenz = build_builtin("lorenz", &ParamSet::new()).unwrap();
        let samples: Vec<Vec<f64>> = vec![vec![0.0; 3], vec![1.0, 2.0, 3.0], vec![-4.0, 0.5, 9.0]];
        let rep = conservativity_report(&lorenz, &samples, 1e-12).unwrap();
        assert_eq!(rep.verdict, Conservativity::Dissipative);
        for w in &rep.witnesses {
            // hand divergence of the Lorenz field: -(sigma + 1 + b) = -41/3
            assert!((w - (-41.0 / 3.0)).abs() < 1e-12);
        }

        let sm = build_builtin("standard_map", &ParamSet::new()).unwrap();
        let samples: Vec<Vec<f64>> = vec![vec![0.3, 0.1], vec![2.0, -1.0], vec![4.0, 5.0]];
        let rep = conservativity_report(&sm, &samples, 1e-12).unwrap();
        assert_eq!(rep.verdict, Conservativity::Conservative);

        // |f'(x)| = |4 - 8x| is < 1 at 0.4 and > 1 at 0.9
        let mut ov = ParamSet::new();
        ov.insert("lambda".into(), 4.0);
        let logistic = build_builtin("logistic", &ov).unwrap();
        let rep = conservativity_report(&logistic, &[vec![0.4], vec![0.9]], 1e-12).unwrap();
        assert_eq!(rep.verdict, Conservativity::Neither);
    }

    #[test]
    fn unknown_system_and_param_errors() {
        assert!(matches!(
            build_builtin("nosuch", &ParamSet::new()),
            Err(DynError::UnknownSystem(_))
        ));
        let mut ov = ParamSet::new();
        ov.insert("zeta".into(), 1.0);
        assert!(matches!(
            build_builtin("lorenz", &ov),
            Err(DynError::UnknownParam { .. })
        ));
    }

    #[test]
    fn linear_system_jacobian_is_exact() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let sys = SystemDef::linear(SystemKind::Flow, a.clone());
        let j = sys.jacobian_at(&[0.3, -0.7]).unwrap();
        assert_eq!(j, a);
    }
}
