//! Liapunov spectra, fractal dimension, symbolic dynamics, sensitivity
//! tests and the classic attractor experiments.

pub mod dimension;
pub mod symbolic;

pub use dimension::{box_dimension, DimensionEstimate};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::dynamics::{flow_to, iterate_map, variational_flow, FlowOptions, Horizon};
use crate::error::{DynError, Result};
use crate::systems::{SystemDef, SystemKind};

/// Liapunov exponents with convergence history and sum check.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumResult {
    /// Sorted descending.
    pub exponents: Vec<f64>,
    /// Running estimates after each renormalization (one row per renorm).
    pub history: Vec<Vec<f64>>,
    pub sum: f64,
    pub total_time: f64,
    /// Set when the last-quarter drift of the estimates exceeds 5%.
    pub unconverged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumOptions {
    /// Time between QR renormalizations (flows) or iterates per QR (maps).
    pub renorm_interval: f64,
    /// Fraction of initial renormalizations discarded from the averages.
    pub discard_fraction: f64,
    pub flow_opts: FlowOptions,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            renorm_interval: 1.0,
            discard_fraction: 0.1,
            flow_opts: FlowOptions::default(),
        }
    }
}

/// Benettin-style QR spectrum: propagate an orthonormal tangent frame,
/// re-orthonormalize every `renorm_interval`, average the log of the
/// R-diagonals.
pub fn lyapunov_spectrum(
    sys: &SystemDef,
    x0: &[f64],
    horizon: Horizon,
    opts: &SpectrumOptions,
) -> Result<SpectrumResult> {
    let n = sys.dim;
    let n_renorms = match (sys.kind, horizon) {
        (SystemKind::Flow, Horizon::Time(t)) => (t / opts.renorm_interval).ceil() as usize,
        (SystemKind::Map, Horizon::Iterates(k)) => {
            let per = opts.renorm_interval.max(1.0) as usize;
            k / per
        }
        _ => panic!("horizon type does not match system kind"),
    };
    let discard = ((n_renorms as f64) * opts.discard_fraction).floor() as usize;
    let mut q = DMatrix::<f64>::identity(n, n);
    let mut x = x0.to_vec();
    let mut sums = vec![0.0; n];
    let mut time_in_avg = 0.0;
    let mut history: Vec<Vec<f64>> = Vec::with_capacity(n_renorms);
    for seg in 0..n_renorms {
        let (w, seg_time) = match sys.kind {
            SystemKind::Flow => {
                let var = variational_flow(
                    sys,
                    &x,
                    Horizon::Time(opts.renorm_interval),
                    &opts.flow_opts,
                )?;
                x = var.x_final;
                (var.u * &q, opts.renorm_interval)
            }
            SystemKind::Map => {
                let per = opts.renorm_interval.max(1.0) as usize;
                let var = variational_flow(sys, &x, Horizon::Iterates(per), &opts.flow_opts)?;
                x = var.x_final;
                (var.u * &q, per as f64)
            }
        };
        let qr = w.qr();
        let mut qn = qr.q();
        let r = qr.r();
        // fix signs so R has positive diagonal
        for c in 0..n {
            if r[(c, c)] < 0.0 {
                for row in 0..n {
                    qn[(row, c)] = -qn[(row, c)];
                }
            }
        }
        q = qn;
        if seg >= discard {
            for i in 0..n {
                sums[i] += r[(i, i)].abs().ln();
            }
            time_in_avg += seg_time;
            history.push(sums.iter().map(|s| s / time_in_avg).collect());
        }
    }
    if time_in_avg == 0.0 {
        return Err(DynError::NoConvergence("no renormalizations kept".into()));
    }
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / time_in_avg).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    let sum = sums.iter().sum::<f64>() / time_in_avg;
    // convergence heuristic: compare against the estimate three quarters in
    let unconverged = if history.len() >= 8 {
        let probe = &history[3 * history.len() / 4 - 1];
        let scale = exponents.iter().map(|e| e.abs()).fold(1.0_f64, f64::max);
        let mut sorted_probe = probe.clone();
        sorted_probe.sort_by(|a, b| b.total_cmp(a));
        exponents
            .iter()
            .zip(sorted_probe.iter())
            .any(|(a, b)| (a - b).abs() > 0.05 * scale)
    } else {
        false
    };
    Ok(SpectrumResult {
        exponents,
        history,
        sum,
        total_time: time_in_avg,
        unconverged,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub sensitive: bool,
    /// First divergence time per probe (None if never diverged).
    pub divergence_times: Vec<Option<f64>>,
}

/// Integrates probe points within delta0 of x until the distance to the
/// reference orbit exceeds eps_target or the horizon runs out.
pub fn sensitivity_test(
    sys: &SystemDef,
    x: &[f64],
    delta0: f64,
    eps_target: f64,
    t_max: f64,
    n_probes: usize,
    seed: u64,
) -> Result<SensitivityReport> {
    assert!(delta0 > 0.0);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let opts = FlowOptions::default();
    let mut times = Vec::with_capacity(n_probes);
    for _ in 0..n_probes {
        let mut y: Vec<f64> = x.to_vec();
        let dir: Vec<f64> = (0..sys.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (yi, di) in y.iter_mut().zip(dir.iter()) {
            *yi += delta0 * di / norm.max(1e-12);
        }
        let mut a = x.to_vec();
        let mut b = y;
        let mut t = 0.0;
        let mut hit = None;
        match sys.kind {
            SystemKind::Flow => {
                let dt = t_max / 400.0;
                while t < t_max {
                    a = flow_to(sys, &a, dt, &opts)?;
                    b = flow_to(sys, &b, dt, &opts)?;
                    t += dt;
                    if sys.state_distance(&a, &b) >= eps_target {
                        hit = Some(t);
                        break;
                    }
                }
            }
            SystemKind::Map => {
                let steps = t_max as usize;
                for k in 1..=steps {
                    a = iterate_map(sys, &a, 1)?;
                    b = iterate_map(sys, &b, 1)?;
                    if sys.state_distance(&a, &b) >= eps_target {
                        hit = Some(k as f64);
                        break;
                    }
                }
            }
        }
        times.push(hit);
    }
    Ok(SensitivityReport {
        sensitive: times.iter().any(|t| t.is_some()),
        divergence_times: times,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgodicAverage {
    pub mean: f64,
    /// Batch-means standard error (accounts for short-range correlation).
    pub stderr: f64,
    pub n: usize,
}

/// Time average (1/N) sum phi(g^k(x0)) for the tent map, iterated exactly on
/// a fixed-denominator integer lattice. Plain float iteration of the tent
/// map collapses onto the dyadic fixed point within ~60 steps (the map is an
/// exact binary shift), so the lattice iteration is the honest route to the
/// ergodic average.
pub fn ergodic_average_tent(
    num: u128,
    den: u128,
    n: usize,
    phi: &dyn Fn(f64) -> f64,
) -> ErgodicAverage {
    assert!(den % 2 == 1, "odd denominator keeps the lattice invariant");
    assert!(num <= den);
    let mut p = num;
    let batches = 200.min(n);
    let batch_size = n / batches;
    let mut batch_means = Vec::with_capacity(batches);
    let mut total = 0.0;
    for _ in 0..batches {
        let mut acc = 0.0;
        for _ in 0..batch_size {
            let x = p as f64 / den as f64;
            acc += phi(x);
            p = if 2 * p <= den { 2 * p } else { 2 * den - 2 * p };
        }
        batch_means.push(acc / batch_size as f64);
        total += acc;
    }
    let n_used = batches * batch_size;
    let mean = total / n_used as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (batches as f64 - 1.0);
    ErgodicAverage {
        mean,
        stderr: (var / batches as f64).sqrt(),
        n: n_used,
    }
}

/// Float-iteration time average for arbitrary 1D maps.
pub fn ergodic_average(
    sys: &SystemDef,
    x0: f64,
    n: usize,
    phi: &dyn Fn(f64) -> f64,
) -> Result<ErgodicAverage> {
    assert_eq!(sys.dim, 1);
    let mut x = x0;
    let batches = 200.min(n);
    let batch_size = n / batches;
    let mut batch_means = Vec::with_capacity(batches);
    let mut total = 0.0;
    for _ in 0..batches {
        let mut acc = 0.0;
        for _ in 0..batch_size {
            acc += phi(x);
            x = sys.evaluate(&[x])?[0];
        }
        batch_means.push(acc / batch_size as f64);
        total += acc;
    }
    let n_used = batches * batch_size;
    let mean = total / n_used as f64;
    let var = batch_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (batches as f64 - 1.0);
    Ok(ErgodicAverage {
        mean,
        stderr: (var / batches as f64).sqrt(),
        n: n_used,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HenonExperiment {
    pub points: Vec<[f64; 2]>,
    pub spectrum: SpectrumResult,
    pub bounding_box: [[f64; 2]; 2],
}

/// Long Henon orbit after a transient, its exponent pair, and the bounding
/// box. The exponent sum must equal ln|b| (constant Jacobian determinant).
pub fn henon_attractor_experiment(
    lambda: f64,
    b: f64,
    n: usize,
    transient: usize,
) -> Result<HenonExperiment> {
    let mut ov = crate::systems::ParamSet::new();
    ov.insert("lambda".into(), lambda);
    ov.insert("b".into(), b);
    let sys = crate::systems::build_builtin("henon", &ov)?;
    let mut x = vec![0.1, 0.1];
    for _ in 0..transient {
        x = sys.evaluate(&x)?;
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e6 {
            return Err(DynError::Escaped { bound: 1e6 });
        }
    }
    let mut points = Vec::with_capacity(n);
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    let spectrum_start = x.clone();
    for _ in 0..n {
        x = sys.evaluate(&x)?;
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e6 {
            return Err(DynError::Escaped { bound: 1e6 });
        }
        points.push([x[0], x[1]]);
        for i in 0..2 {
            lo[i] = lo[i].min(x[i]);
            hi[i] = hi[i].max(x[i]);
        }
    }
    let spectrum = lyapunov_spectrum(
        &sys,
        &spectrum_start,
        Horizon::Iterates(n),
        &SpectrumOptions::default(),
    )?;
    Ok(HenonExperiment {
        points,
        spectrum,
        bounding_box: [lo, hi],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitFateStats {
    pub n_seeds: usize,
    pub converged_to_c_plus: usize,
    pub converged_to_c_minus: usize,
    pub wandering: usize,
    pub mean_lobe_switches: f64,
}

/// Orbit-fate statistics for the Lorenz flow: the fraction of a seed grid
/// converging to C+/- versus still switching lobes at the horizon. A
/// qualitative probe of the homoclinic regime between r1 and r2.
pub fn lorenz_orbit_fates(r: f64, seeds: &[Vec<f64>], t_end: f64) -> Result<OrbitFateStats> {
    let mut ov = crate::systems::ParamSet::new();
    ov.insert("r".into(), r);
    let sys = crate::systems::build_builtin("lorenz", &ov)?;
    let b = sys.param("b")?;
    let c = (b * (r - 1.0)).max(0.0).sqrt();
    let c_plus = [c, c, r - 1.0];
    let c_minus = [-c, -c, r - 1.0];
    let opts = FlowOptions::default();
    let mut plus = 0;
    let mut minus = 0;
    let mut wandering = 0;
    let mut switches_total = 0usize;
    let dt = 0.05;
    let steps = (t_end / dt) as usize;
    for seed in seeds {
        let mut x = seed.clone();
        let mut last_sign = x[0].signum();
        let mut switches = 0usize;
        for _ in 0..steps {
            x = flow_to(&sys, &x, dt, &opts)?;
            let s = x[0].signum();
            if s != last_sign && s != 0.0 {
                switches += 1;
                last_sign = s;
            }
        }
        switches_total += switches;
        let dp: f64 = x
            .iter()
            .zip(c_plus.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let dm: f64 = x
            .iter()
            .zip(c_minus.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if dp < 0.5 {
            plus += 1;
        } else if dm < 0.5 {
            minus += 1;
        } else {
            wandering += 1;
        }
    }
    Ok(OrbitFateStats {
        n_seeds: seeds.len(),
        converged_to_c_plus: plus,
        converged_to_c_minus: minus,
        wandering,
        mean_lobe_switches: switches_total as f64 / seeds.len().max(1) as f64,
    })
}
