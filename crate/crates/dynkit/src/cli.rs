//! Command-line front end: named experiments, config ingestion, and
//! deterministic CSV/JSON artifact emission.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 numeric failure. Numeric
//! failures print a machine-readable JSON object on stderr.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{bifurcation_diagram, continue_branch, detect_bifurcations};
use crate::chaos::symbolic::{
    cantor_endpoint_sample, cantor_membership, enumerate_periodic_tent, horseshoe_geometry,
    itinerary_to_point, tent_itinerary, HorseshoeWord, ReconstructedPoint,
};
use crate::chaos::{box_dimension, henon_attractor_experiment, lyapunov_spectrum, SpectrumOptions};
use crate::dynamics::{trajectory, FlowOptions, Horizon, Method};
use crate::equilibria::{find_equilibria, report_to_json};
use crate::error::{DynError, Result};
use crate::manifolds::{
    center_graph_extended, extend_with_parameter, local_manifold_taylor, ManifoldKind,
};
use crate::normalform::{resonances, standard_map_conjugacy_o1};
use crate::periodic::{
    find_periodic_orbit, hill_monodromy, monodromy, period_doubling_cascade, poincare_map,
    SectionDef,
};
use crate::poly::Coeff;
use crate::systems::{build_builtin, builtin_names, builtin_param_specs, ParamSet, SystemKind};

pub const COMMANDS: &[&str] = &[
    "simulate",
    "equilibria",
    "lyapunov",
    "bifurcate",
    "diagram",
    "cascade",
    "poincare",
    "floquet",
    "hill-chart",
    "manifold",
    "normalform",
    "dimension",
    "symbolic",
    "attractor",
];

#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default = "default_format")]
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            path: None,
            format: default_format(),
        }
    }
}

fn default_format() -> String {
    "csv".into()
}

/// The canonical run description; flags merge over a loaded config file
/// (flags win) and the result round-trips losslessly through JSON.
#[derive(Debug, Clone, Serialize, Deserialize, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default)]
    pub system: SystemConfig,
    #[serde(default)]
    pub options: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
}

fn schema_err(pointer: &str, message: impl Into<String>) -> DynError {
    DynError::SchemaViolation {
        pointer: pointer.to_string(),
        message: message.into(),
    }
}

/// Option keys accepted per command; unknown keys are rejected with their
/// JSON pointer.
fn allowed_options(command: &str) -> &'static [&'static str] {
    match command {
        "simulate" => &[
            "x0",
            "t_end",
            "iters",
            "sample_every",
            "method",
            "dt",
            "tol",
        ],
        "equilibria" => &["seeds", "grid_lo", "grid_hi", "grid_n", "tol"],
        "lyapunov" => &["x0", "time", "iters", "renorm", "discard", "tol"],
        "bifurcate" => &["x0", "from", "to", "step", "param_name"],
        "diagram" => &["range", "samples", "transient", "keep", "x0", "param_name"],
        "cascade" => &["range", "max_n", "param_name"],
        "poincare" => &["x0", "anchor", "normal", "t_min", "t_max", "returns", "tol"],
        "floquet" => &["x_guess", "t_guess", "tol"],
        "hill-chart" => &["T", "omega_lo", "omega_hi", "samples"],
        "manifold" => &["eq", "which", "order", "extended", "param_name"],
        "normalform" => &["eigs_re", "eigs_im", "k_max", "omega"],
        "dimension" => &["input", "demo", "depth", "eps", "points"],
        "symbolic" => &["op", "x", "n", "word", "periodic", "p", "lambda", "mu"],
        "attractor" => &["time", "iters", "transient", "sample_every", "tol"],
        _ => &[],
    }
}

/// Schema check with JSON-pointer error paths; fills defaults.
pub fn validate_config(text: &str) -> Result<RunConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| schema_err("", format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| schema_err("", "config must be a JSON object"))?;
    for key in obj.keys() {
        if !["command", "system", "options", "output", "seed"].contains(&key.as_str()) {
            return Err(schema_err(&format!("/{key}"), "unknown key"));
        }
    }
    let command = obj
        .get("command")
        .and_then(|v| v.as_str())
        .ok_or_else(|| schema_err("/command", "missing or non-string"))?
        .to_string();
    if !COMMANDS.contains(&command.as_str()) {
        return Err(schema_err(
            "/command",
            format!("unknown command `{command}`"),
        ));
    }
    let mut system = SystemConfig::default();
    if let Some(sv) = obj.get("system") {
        let so = sv
            .as_object()
            .ok_or_else(|| schema_err("/system", "must be an object"))?;
        for key in so.keys() {
            if !["name", "params"].contains(&key.as_str()) {
                return Err(schema_err(&format!("/system/{key}"), "unknown key"));
            }
        }
        system.name = so
            .get("name")
            .and_then(|v| v.as_str())
            .ok_or_else(|| schema_err("/system/name", "missing or non-string"))?
            .to_string();
        // commands without a system leave the name empty
        if !system.name.is_empty() && !builtin_names().contains(&system.name.as_str()) {
            return Err(schema_err(
                "/system/name",
                format!("unknown system `{}`", system.name),
            ));
        }
        if let Some(pv) = so.get("params") {
            let po = pv
                .as_object()
                .ok_or_else(|| schema_err("/system/params", "must be an object"))?;
            let specs = if system.name.is_empty() {
                vec![]
            } else {
                builtin_param_specs(&system.name)?
            };
            for (k, v) in po {
                let ptr = format!("/system/params/{k}");
                let Some(spec) = specs.iter().find(|s| s.name == k) else {
                    return Err(schema_err(&ptr, "unknown parameter"));
                };
                let x = v
                    .as_f64()
                    .ok_or_else(|| schema_err(&ptr, "must be a number"))?;
                if let Some((lo, hi)) = spec.range {
                    if x < lo || x > hi {
                        return Err(schema_err(&ptr, format!("value {x} outside [{lo}, {hi}]")));
                    }
                }
                system.params.insert(k.clone(), x);
            }
        }
    }
    let mut options = BTreeMap::new();
    if let Some(ov) = obj.get("options") {
        let oo = ov
            .as_object()
            .ok_or_else(|| schema_err("/options", "must be an object"))?;
        let allowed = allowed_options(&command);
        for (k, v) in oo {
            let ptr = format!("/options/{k}");
            if !allowed.contains(&k.as_str()) {
                return Err(schema_err(&ptr, "unknown option for this command"));
            }
            if let Some(x) = v.as_f64() {
                if (k.contains("tol") || k == "dt") && x <= 0.0 {
                    return Err(schema_err(&ptr, format!("must be positive, got {x}")));
                }
            }
            options.insert(k.clone(), v.clone());
        }
    }
    let mut output = OutputConfig {
        path: None,
        format: default_format(),
    };
    if let Some(ov) = obj.get("output") {
        let oo = ov
            .as_object()
            .ok_or_else(|| schema_err("/output", "must be an object"))?;
        for key in oo.keys() {
            if !["path", "format"].contains(&key.as_str()) {
                return Err(schema_err(&format!("/output/{key}"), "unknown key"));
            }
        }
        if let Some(p) = oo.get("path").filter(|p| !p.is_null()) {
            output.path =
                Some(PathBuf::from(p.as_str().ok_or_else(|| {
                    schema_err("/output/path", "must be a string")
                })?));
        }
        if let Some(f) = oo.get("format") {
            let f = f
                .as_str()
                .ok_or_else(|| schema_err("/output/format", "must be a string"))?;
            if !["csv", "json"].contains(&f) {
                return Err(schema_err("/output/format", "must be `csv` or `json`"));
            }
            output.format = f.to_string();
        }
    }
    let seed = match obj.get("seed") {
        None => 0,
        Some(v) => v
            .as_u64()
            .ok_or_else(|| schema_err("/seed", "must be a non-negative integer"))?,
    };
    Ok(RunConfig {
        command,
        system,
        options,
        output,
        seed,
    })
}

// ---------------------------------------------------------------------------
// number formatting and artifact writing
// ---------------------------------------------------------------------------

/// 17 significant decimal digits: lossless round-trip of doubles.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_artifact(path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        None => {
            print!("{content}");
            Ok(())
        }
        Some(p) => {
            // atomic: temp file in the target directory, then rename
            let dir = p.parent().unwrap_or_else(|| Path::new("."));
            let tmp = dir.join(format!(
                ".{}.tmp-{}",
                p.file_name().and_then(|s| s.to_str()).unwrap_or("artifact"),
                std::process::id()
            ));
            {
                let mut f = std::fs::File::create(&tmp)?;
                f.write_all(content.as_bytes())?;
                f.sync_all()?;
            }
            std::fs::rename(&tmp, p)?;
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// option accessors
// ---------------------------------------------------------------------------

struct Opts<'a>(&'a BTreeMap<String, serde_json::Value>);

impl Opts<'_> {
    fn f64(&self, key: &str, default: f64) -> Result<f64> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
                .ok_or_else(|| schema_err(&format!("/options/{key}"), "must be a number")),
        }
    }
    fn usize(&self, key: &str, default: usize) -> Result<usize> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
                .map(|x| x as usize)
                .ok_or_else(|| schema_err(&format!("/options/{key}"), "must be an integer")),
        }
    }
    fn string(&self, key: &str, default: &str) -> Result<String> {
        match self.0.get(key) {
            None => Ok(default.to_string()),
            Some(v) => v
                .as_str()
                .map(|s| s.to_string())
                .ok_or_else(|| schema_err(&format!("/options/{key}"), "must be a string")),
        }
    }
    fn vec_f64(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.0.get(key) {
            None => Ok(None),
            Some(serde_json::Value::String(s)) => {
                Ok(Some(parse_vec(s).map_err(|e| {
                    schema_err(&format!("/options/{key}"), e.to_string())
                })?))
            }
            Some(serde_json::Value::Array(a)) => a
                .iter()
                .map(|v| {
                    v.as_f64().ok_or_else(|| {
                        schema_err(&format!("/options/{key}"), "array entries must be numbers")
                    })
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
            Some(_) => Err(schema_err(
                &format!("/options/{key}"),
                "must be a comma-separated string or array",
            )),
        }
    }
    fn bool(&self, key: &str, default: bool) -> Result<bool> {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_bool()
                .ok_or_else(|| schema_err(&format!("/options/{key}"), "must be a boolean")),
        }
    }
}

fn parse_vec(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| DynError::Usage(format!("bad number {t:?}: {e}")))
        })
        .collect()
}

fn parse_range(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| DynError::Usage(format!("range must be lo:hi, got {s:?}")))?;
    Ok((
        a.trim()
            .parse()
            .map_err(|e| DynError::Usage(format!("bad range start: {e}")))?,
        b.trim()
            .parse()
            .map_err(|e| DynError::Usage(format!("bad range end: {e}")))?,
    ))
}

fn parse_rational(s: &str) -> Result<BigRational> {
    if let Some((p, q)) = s.split_once('/') {
        let p: i64 = p
            .trim()
            .parse()
            .map_err(|e| DynError::Usage(format!("bad rational: {e}")))?;
        let q: i64 = q
            .trim()
            .parse()
            .map_err(|e| DynError::Usage(format!("bad rational: {e}")))?;
        Ok(BigRational::new(p.into(), q.into()))
    } else {
        let v: f64 = s
            .trim()
            .parse()
            .map_err(|e| DynError::Usage(format!("bad number: {e}")))?;
        Ok(BigRational::from_f64_exact(v))
    }
}

fn build_system(cfg: &RunConfig) -> Result<crate::systems::SystemDef> {
    if cfg.system.name.is_empty() {
        return Err(DynError::Usage("no system specified".into()));
    }
    let mut params = ParamSet::new();
    for (k, v) in &cfg.system.params {
        params.insert(k.clone(), *v);
    }
    build_builtin(&cfg.system.name, &params)
}

fn family_over<'a>(
    cfg: &'a RunConfig,
    param: &'a str,
) -> impl Fn(f64) -> Result<crate::systems::SystemDef> + Sync + 'a {
    move |lambda: f64| {
        let mut params = ParamSet::new();
        for (k, v) in &cfg.system.params {
            params.insert(k.clone(), *v);
        }
        params.insert(param.to_string(), lambda);
        build_builtin(&cfg.system.name, &params)
    }
}

fn flow_options(opts: &Opts) -> Result<FlowOptions> {
    let tol = opts.f64("tol", 1e-9)?;
    let method = opts.string("method", "rk45")?;
    let dt = opts.f64("dt", 1e-3)?;
    Ok(FlowOptions {
        method: match method.as_str() {
            "rk4" | "rk4_fixed" => Method::Rk4Fixed,
            "rk45" | "rk45_adaptive" => Method::Rk45Adaptive,
            other => {
                return Err(schema_err(
                    "/options/method",
                    format!("unknown method `{other}`"),
                ))
            }
        },
        dt,
        abs_tol: tol,
        rel_tol: tol,
        ..FlowOptions::default()
    })
}

// ---------------------------------------------------------------------------
// command implementations
// ---------------------------------------------------------------------------

fn run_simulate(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let sys = build_system(cfg)?;
    let x0 = opts
        .vec_f64("x0")?
        .ok_or_else(|| DynError::Usage("simulate requires x0".into()))?;
    let fo = flow_options(&opts)?;
    let (horizon, sample, t_label) = match sys.kind {
        SystemKind::Flow => (
            Horizon::Time(opts.f64("t_end", 50.0)?),
            opts.f64("sample_every", 0.01)?,
            "t",
        ),
        SystemKind::Map => (
            Horizon::Iterates(opts.usize("iters", 1000)?),
            opts.f64("sample_every", 1.0)?,
            "k",
        ),
    };
    let traj = trajectory(&sys, &x0, horizon, sample, &fo)?;
    let mut out = String::new();
    out.push_str(t_label);
    for i in 1..=sys.dim {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for (t, x) in traj.times.iter().zip(traj.states.iter()) {
        if sys.kind == SystemKind::Map {
            out.push_str(&format!("{}", *t as i64));
        } else {
            out.push_str(&fmt_f64(*t));
        }
        for v in x {
            out.push(',');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

fn run_equilibria(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let sys = build_system(cfg)?;
    let tol = opts.f64("tol", 1e-10)?;
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    if let Some(serde_json::Value::String(s)) = cfg.options.get("seeds") {
        for part in s.split(';') {
            seeds.push(parse_vec(part)?);
        }
    } else {
        let lo = opts.f64("grid_lo", -10.0)?;
        let hi = opts.f64("grid_hi", 10.0)?;
        let n = opts.usize("grid_n", 4)?;
        let mut grid = vec![vec![]];
        for _ in 0..sys.dim {
            let mut next = Vec::new();
            for g in &grid {
                for k in 0..n {
                    let mut v: Vec<f64> = g.clone();
                    v.push(lo + (hi - lo) * (k as f64 + 0.5) / n as f64);
                    next.push(v);
                }
            }
            grid = next;
        }
        seeds = grid;
    }
    let reports = find_equilibria(&sys, &seeds, tol)?;
    let json: Vec<serde_json::Value> = reports.iter().map(report_to_json).collect();
    Ok(format!(
        "{}\n",
        serde_json::to_string_pretty(&serde_json::json!({ "equilibria": json }))?
    ))
}

impl From<serde_json::Error> for DynError {
    fn from(e: serde_json::Error) -> Self {
        DynError::Usage(format!("json: {e}"))
    }
}

fn run_lyapunov(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let sys = build_system(cfg)?;
    let x0 = opts.vec_f64("x0")?.unwrap_or_else(|| vec![1.0; sys.dim]);
    let horizon = match sys.kind {
        SystemKind::Flow => Horizon::Time(opts.f64("time", 1000.0)?),
        SystemKind::Map => Horizon::Iterates(opts.usize("iters", 200_000)?),
    };
    let sopts = SpectrumOptions {
        renorm_interval: opts.f64("renorm", 1.0)?,
        discard_fraction: opts.f64("discard", 0.1)?,
        flow_opts: FlowOptions::with_tol(opts.f64("tol", 1e-9)?),
    };
    let res = lyapunov_spectrum(&sys, &x0, horizon, &sopts)?;
    let history_stride = (res.history.len() / 100).max(1);
    let history: Vec<&Vec<f64>> = res.history.iter().step_by(history_stride).collect();
    Ok(format!(
        "{}\n",
        serde_json::to_string_pretty(&serde_json::json!({
            "exponents": res.exponents,
            "sum": res.sum,
            "unconverged": res.unconverged,
            "history": history,
        }))?
    ))
}

fn run_bifurcate(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let param = opts.string("param_name", "r")?;
    let x0 = opts
        .vec_f64("x0")?
        .ok_or_else(|| DynError::Usage("bifurcate requires x0".into()))?;
    let from = opts.f64("from", 0.5)?;
    let to = opts.f64("to", 2.0)?;
    let step = opts.f64("step", 0.05)?;
    let family = family_over(cfg, &param);
    let branches = continue_branch(&family, &param, &x0, from, to, step)?;
    let mut events = Vec::new();
    for b in &branches {
        events.extend(detect_bifurcations(&family, &param, b)?);
    }
    Ok(format!(
        "{}\n",
        serde_json::to_string_pretty(&serde_json::json!({
            "branches": branches,
            "events": events,
        }))?
    ))
}

fn run_diagram(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let param = opts.string("param_name", "lambda")?;
    let range = opts.string("range", "2.5:4.0")?;
    let (lo, hi) = parse_range(&range)?;
    let samples = opts.usize("samples", 1500)?;
    let transient = opts.usize("transient", 1000)?;
    let keep = opts.usize("keep", 100)?;
    let x0 = opts.f64("x0", 0.5)?;
    let lambdas: Vec<f64> = (0..samples)
        .map(|k| lo + (hi - lo) * k as f64 / (samples.max(2) - 1) as f64)
        .collect();
    let family = family_over(cfg, &param);
    let pts = bifurcation_diagram(&family, &lambdas, transient, keep, x0);
    let mut out = String::from("lambda,x\n");
    for (l, x) in pts {
        out.push_str(&fmt_f64(l));
        out.push(',');
        out.push_str(&fmt_f64(x));
        out.push('\n');
    }
    Ok(out)
}

fn run_cascade(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let param = opts.string("param_name", "lambda")?;
    let range = opts.string("range", "2.8:3.6")?;
    let (lo, hi) = parse_range(&range)?;
    let n_max = opts.usize("max_n", 6)?;
    let family = family_over(cfg, &param);
    let res = period_doubling_cascade(&family, (lo, hi), n_max)?;
    let mut out = String::from("n,lambda_n,delta_n\n");
    for (i, l) in res.lambdas.iter().enumerate() {
        let n = i + 1;
        out.push_str(&format!("{n},{}", fmt_f64(*l)));
        match res.deltas.iter().find(|(dn, _)| *dn == n) {
            Some((_, d)) => out.push_str(&format!(",{}\n", fmt_f64(*d))),
            None => out.push_str(",\n"),
        }
    }
    out.push_str(&format!(
        "# accumulation_estimate,{}\n",
        fmt_f64(res.accumulation_estimate)
    ));
    Ok(out)
}

fn run_poincare(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let sys = build_system(cfg)?;
    let x0 = opts
        .vec_f64("x0")?
        .ok_or_else(|| DynError::Usage("poincare requires x0".into()))?;
    let anchor = opts.vec_f64("anchor")?.unwrap_or_else(|| x0.clone());
    let normal = opts
        .vec_f64("normal")?
        .ok_or_else(|| DynError::Usage("poincare requires normal".into()))?;
    let t_min = opts.f64("t_min", 1e-2)?;
    let t_max = opts.f64("t_max", 100.0)?;
    let returns = opts.usize("returns", 10)?;
    let fo = flow_options(&opts)?;
    let sec = SectionDef::new(anchor, normal, t_min, t_max);
    let mut out = String::new();
    for i in 1..=sys.dim {
        out.push_str(&format!("x{i},"));
    }
    out.push_str("tau\n");
    let mut x = x0;
    for _ in 0..returns {
        let (img, tau) = poincare_map(&sys, &sec, &x, &fo)?;
        for v in &img {
            out.push_str(&fmt_f64(*v));
            out.push(',');
        }
        out.push_str(&fmt_f64(tau));
        out.push('\n');
        x = img;
    }
    Ok(out)
}

fn run_floquet(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let sys = build_system(cfg)?;
    let x_guess = opts
        .vec_f64("x_guess")?
        .ok_or_else(|| DynError::Usage("floquet requires x_guess".into()))?;
    let t_guess = opts.f64("t_guess", 6.5)?;
    let fo = FlowOptions::with_tol(opts.f64("tol", 1e-11)?);
    let (x0, t_per) = find_periodic_orbit(&sys, &x_guess, t_guess, &fo)?;
    let mono = monodromy(&sys, &x0, t_per, &fo)?;
    Ok(format!(
        "{}\n",
        serde_json::to_string_pretty(&serde_json::json!({
            "orbit_point": x0,
            "period": t_per,
            "monodromy": mono,
        }))?
    ))
}

fn run_hill_chart(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let t = opts.f64("T", std::f64::consts::PI)?;
    let lo = opts.f64("omega_lo", 0.1)?;
    let hi = opts.f64("omega_hi", 4.0)?;
    let samples = opts.usize("samples", 200)?;
    let mut out = String::from("Omega,trace,exp_re_1,exp_im_1,exp_re_2,exp_im_2\n");
    for k in 0..samples {
        let w = lo + (hi - lo) * k as f64 / (samples.max(2) - 1) as f64;
        let m = hill_monodromy(t, w);
        let trace = m.u_t[0][0] + m.u_t[1][1];
        out.push_str(&fmt_f64(w));
        out.push(',');
        out.push_str(&fmt_f64(trace));
        for e in &m.exponents {
            out.push(',');
            out.push_str(&fmt_f64(e.re));
            out.push(',');
            out.push_str(&fmt_f64(e.im));
        }
        out.push('\n');
    }
    Ok(out)
}

fn run_manifold(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let sys = build_system(cfg)?;
    let eq = opts.vec_f64("eq")?.unwrap_or_else(|| vec![0.0; sys.dim]);
    let which = match opts.string("which", "center")?.as_str() {
        "stable" => ManifoldKind::Stable,
        "unstable" => ManifoldKind::Unstable,
        "center" => ManifoldKind::Center,
        other => {
            return Err(schema_err(
                "/options/which",
                format!("unknown manifold kind `{other}`"),
            ))
        }
    };
    let order = opts.usize("order", 3)?;
    let extended = opts.bool("extended", false)?;
    // exact rationals when the expansion is rational, floats otherwise
    fn graph_json<C: crate::poly::CoeffJson>(
        graph: &crate::manifolds::ManifoldGraph<C>,
        order: usize,
        exact: bool,
    ) -> serde_json::Value {
        let red = crate::manifolds::reduced_dynamics(graph, order);
        serde_json::json!({
            "graph": graph.graph.to_json(),
            "reduced": red.to_json(),
            "block_dims": {"base": graph.chart.u_dim, "fiber": graph.chart.v_dim},
            "exact": exact,
        })
    }
    let json = if extended {
        let param = opts.string("param_name", "lambda")?;
        let ext = extend_with_parameter(&sys, &param)?;
        let mut eq_ext = eq.clone();
        eq_ext.push(sys.param(&param)?);
        match crate::manifolds::center_graph_extended_exact(&ext, &eq_ext, order) {
            Ok(g) => graph_json(&g, order, true),
            Err(_) => graph_json(&center_graph_extended(&ext, &eq_ext, order)?, order, false),
        }
    } else {
        match crate::manifolds::local_manifold_taylor_exact(&sys, &eq, which, order) {
            Ok(g) => graph_json(&g, order, true),
            Err(_) => graph_json(
                &local_manifold_taylor(&sys, &eq, which, order)?,
                order,
                false,
            ),
        }
    };
    Ok(format!("{}\n", serde_json::to_string_pretty(&json)?))
}

fn run_normalform(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let mut out = serde_json::Map::new();
    if let Some(re) = opts.vec_f64("eigs_re")? {
        let im = opts
            .vec_f64("eigs_im")?
            .unwrap_or_else(|| vec![0.0; re.len()]);
        if im.len() != re.len() {
            return Err(schema_err(
                "/options/eigs_im",
                "length mismatch with eigs_re",
            ));
        }
        let eigs: Vec<num_complex::Complex64> = re
            .iter()
            .zip(im.iter())
            .map(|(a, b)| num_complex::Complex64::new(*a, *b))
            .collect();
        let k_max = opts.usize("k_max", 3)?;
        let reports: Vec<serde_json::Value> = (2..=k_max)
            .map(|k| {
                let rep = resonances(&eigs, k, crate::normalform::RESONANCE_TOL);
                serde_json::to_value(&rep).unwrap()
            })
            .collect();
        out.insert("resonances".into(), serde_json::Value::Array(reports));
    }
    if let Some(omega) = cfg.options.get("omega").and_then(|v| v.as_f64()) {
        let c = standard_map_conjugacy_o1(omega, 1e-8)?;
        out.insert(
            "standard_map_conjugacy".into(),
            serde_json::json!({
                "omega": omega,
                "residual_256": c.residual_on_grid(256),
            }),
        );
    }
    if out.is_empty() {
        return Err(DynError::Usage(
            "normalform needs eigs_re and/or omega".into(),
        ));
    }
    Ok(format!(
        "{}\n",
        serde_json::to_string_pretty(&serde_json::Value::Object(out))?
    ))
}

fn run_dimension(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let points: Vec<Vec<f64>> = match opts.string("demo", "")?.as_str() {
        "cantor" => cantor_endpoint_sample(opts.usize("depth", 10)?),
        "" => {
            let input = opts.string("input", "")?;
            if input.is_empty() {
                return Err(DynError::Usage("dimension needs input or demo".into()));
            }
            let text = std::fs::read_to_string(&input)?;
            text.lines()
                .filter(|l| !l.trim().is_empty() && !l.starts_with(|c: char| c.is_alphabetic()))
                .map(parse_vec)
                .collect::<Result<Vec<_>>>()?
        }
        other => {
            return Err(schema_err(
                "/options/demo",
                format!("unknown demo `{other}`"),
            ))
        }
    };
    let eps = match opts.vec_f64("eps")? {
        Some(v) => v,
        None => (2..=7).map(|k| 3.0_f64.powi(-k)).collect(),
    };
    let est = box_dimension(&points, &eps)?;
    Ok(format!(
        "{}\n",
        serde_json::to_string_pretty(&serde_json::to_value(&est)?)?
    ))
}

fn run_symbolic(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let op = opts.string("op", "itinerary")?;
    let json = match op.as_str() {
        "itinerary" => {
            let x = parse_rational(&opts.string("x", "2/5")?)?;
            let n = opts.usize("n", 20)?;
            let it = tent_itinerary(&x, n);
            serde_json::json!({"itinerary": it})
        }
        "point" => {
            let word = opts.string("word", "+-")?;
            let symbols: Vec<i8> = word
                .chars()
                .map(|c| match c {
                    '+' => Ok(1),
                    '-' => Ok(-1),
                    other => Err(DynError::InvalidWord(format!("bad symbol {other:?}"))),
                })
                .collect::<Result<_>>()?;
            let periodic = opts.bool("periodic", true)?;
            match itinerary_to_point(&symbols, periodic)? {
                ReconstructedPoint::Exact(x) => {
                    serde_json::json!({"point": format!("{}/{}", x.numer(), x.denom()), "value": Coeff::to_f64(&x)})
                }
                ReconstructedPoint::Interval(lo, hi) => serde_json::json!({
                    "interval": [format!("{}/{}", lo.numer(), lo.denom()),
                                 format!("{}/{}", hi.numer(), hi.denom())],
                    "value": [Coeff::to_f64(&lo), Coeff::to_f64(&hi)],
                }),
            }
        }
        "cantor" => {
            let x = parse_rational(&opts.string("x", "1/4")?)?;
            let rep = cantor_membership(&x, opts.usize("n", 128)?);
            serde_json::to_value(&rep)?
        }
        "periodic-points" => {
            let p = opts.usize("p", 3)?;
            let pts = enumerate_periodic_tent(p)?;
            let rows: Vec<serde_json::Value> = pts
                .iter()
                .map(|(w, x)| {
                    serde_json::json!({
                        "word": w,
                        "point": format!("{}/{}", x.numer(), x.denom()),
                        "value": Coeff::to_f64(x),
                    })
                })
                .collect();
            serde_json::json!({"period": p, "points": rows})
        }
        "horseshoe" => {
            let word = HorseshoeWord::parse(&opts.string("word", "+,-")?)?;
            let lambda = parse_rational(&opts.string("lambda", "2/5")?)?;
            let mu = parse_rational(&opts.string("mu", "3")?)?;
            serde_json::to_value(horseshoe_geometry(&word, &lambda, &mu)?)?
        }
        other => {
            return Err(schema_err(
                "/options/op",
                format!("unknown symbolic op `{other}`"),
            ))
        }
    };
    Ok(format!("{}\n", serde_json::to_string_pretty(&json)?))
}

fn run_attractor(cfg: &RunConfig) -> Result<String> {
    let opts = Opts(&cfg.options);
    let name = if cfg.system.name.is_empty() {
        "lorenz".to_string()
    } else {
        cfg.system.name.clone()
    };
    match name.as_str() {
        "lorenz" => {
            let mut params = ParamSet::new();
            for (k, v) in &cfg.system.params {
                params.insert(k.clone(), *v);
            }
            let sys = build_builtin("lorenz", &params)?;
            let t_end = opts.f64("time", 50.0)?;
            let transient = opts.f64("transient", 5.0)?;
            let sample = opts.f64("sample_every", 0.01)?;
            let fo = FlowOptions::with_tol(opts.f64("tol", 1e-9)?);
            let x = crate::dynamics::flow_to(&sys, &[1.0, 1.0, 1.0], transient, &fo)?;
            let traj = trajectory(&sys, &x, Horizon::Time(t_end), sample, &fo)?;
            let mut out = String::from("t,x1,x2,x3\n");
            for (t, s) in traj.times.iter().zip(traj.states.iter()) {
                out.push_str(&fmt_f64(*t));
                for v in s {
                    out.push(',');
                    out.push_str(&fmt_f64(*v));
                }
                out.push('\n');
            }
            Ok(out)
        }
        "henon" => {
            let lambda = cfg.system.params.get("lambda").copied().unwrap_or(1.4);
            let b = cfg.system.params.get("b").copied().unwrap_or(0.3);
            let n = opts.usize("iters", 20_000)?;
            let transient = opts.usize("transient", 1_000)?;
            let exp = henon_attractor_experiment(lambda, b, n, transient)?;
            let mut out = String::from("x1,x2\n");
            for p in &exp.points {
                out.push_str(&fmt_f64(p[0]));
                out.push(',');
                out.push_str(&fmt_f64(p[1]));
                out.push('\n');
            }
            out.push_str(&format!(
                "# exponents,{},{}\n# sum,{}\n",
                fmt_f64(exp.spectrum.exponents[0]),
                fmt_f64(exp.spectrum.exponents[1]),
                fmt_f64(exp.spectrum.exponents.iter().sum::<f64>()),
            ));
            Ok(out)
        }
        other => Err(DynError::Usage(format!(
            "attractor supports lorenz and henon, got `{other}`"
        ))),
    }
}

pub fn run(cfg: &RunConfig) -> Result<String> {
    let artifact = match cfg.command.as_str() {
        "simulate" => run_simulate(cfg)?,
        "equilibria" => run_equilibria(cfg)?,
        "lyapunov" => run_lyapunov(cfg)?,
        "bifurcate" => run_bifurcate(cfg)?,
        "diagram" => run_diagram(cfg)?,
        "cascade" => run_cascade(cfg)?,
        "poincare" => run_poincare(cfg)?,
        "floquet" => run_floquet(cfg)?,
        "hill-chart" => run_hill_chart(cfg)?,
        "manifold" => run_manifold(cfg)?,
        "normalform" => run_normalform(cfg)?,
        "dimension" => run_dimension(cfg)?,
        "symbolic" => run_symbolic(cfg)?,
        "attractor" => run_attractor(cfg)?,
        other => return Err(DynError::Usage(format!("unknown command `{other}`"))),
    };
    write_artifact(cfg.output.path.as_deref(), &artifact)?;
    Ok(artifact)
}

// ---------------------------------------------------------------------------
// argument parsing
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(name = "dynkit", about = "Dynamical-systems analysis toolkit", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON config file; explicit flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Builtin system name.
    #[arg(long)]
    system: Option<String>,
    /// Parameter override, repeatable: --param r=28
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Extra option, repeatable: --opt key=value
    #[arg(long = "opt", value_name = "KEY=VALUE")]
    opts: Vec<String>,
}

macro_rules! subcommands {
    ($(($variant:ident, $name:literal, [$(($field:ident, $flag:literal, $key:literal)),*])),* $(,)?) => {
        #[derive(Subcommand, Debug)]
        enum Command {
            $(
                #[command(name = $name)]
                $variant {
                    #[command(flatten)]
                    common: Common,
                    $(
                        #[arg(long = $flag)]
                        $field: Option<String>,
                    )*
                },
            )*
        }

        impl Command {
            fn into_parts(self) -> (String, Common, Vec<(String, String)>) {
                match self {
                    $(
                        Command::$variant { common, $($field),* } => {
                            let mut kv: Vec<(String, String)> = Vec::new();
                            $(
                                if let Some(v) = $field {
                                    kv.push(($key.to_string(), v));
                                }
                            )*
                            ($name.to_string(), common, kv)
                        }
                    )*
                }
            }
        }
    };
}

subcommands!(
    (
        Simulate,
        "simulate",
        [
            (x0, "x0", "x0"),
            (t_end, "t-end", "t_end"),
            (iters, "iters", "iters"),
            (sample_every, "sample-every", "sample_every"),
            (method, "method", "method"),
            (dt, "dt", "dt"),
            (tol, "tol", "tol")
        ]
    ),
    (
        Equilibria,
        "equilibria",
        [
            (seeds, "seeds", "seeds"),
            (grid_lo, "grid-lo", "grid_lo"),
            (grid_hi, "grid-hi", "grid_hi"),
            (grid_n, "grid-n", "grid_n"),
            (tol, "tol", "tol")
        ]
    ),
    (
        Lyapunov,
        "lyapunov",
        [
            (x0, "x0", "x0"),
            (time, "time", "time"),
            (iters, "iters", "iters"),
            (renorm, "renorm", "renorm"),
            (discard, "discard", "discard"),
            (tol, "tol", "tol")
        ]
    ),
    (
        Bifurcate,
        "bifurcate",
        [
            (x0, "x0", "x0"),
            (from, "from", "from"),
            (to, "to", "to"),
            (step, "step", "step"),
            (param_name, "param-name", "param_name")
        ]
    ),
    (
        Diagram,
        "diagram",
        [
            (range, "range", "range"),
            (samples, "samples", "samples"),
            (transient, "transient", "transient"),
            (keep, "keep", "keep"),
            (x0, "x0", "x0"),
            (param_name, "param-name", "param_name")
        ]
    ),
    (
        Cascade,
        "cascade",
        [
            (range, "range", "range"),
            (max_n, "max-n", "max_n"),
            (param_name, "param-name", "param_name")
        ]
    ),
    (
        Poincare,
        "poincare",
        [
            (x0, "x0", "x0"),
            (anchor, "anchor", "anchor"),
            (normal, "normal", "normal"),
            (t_min, "t-min", "t_min"),
            (t_max, "t-max", "t_max"),
            (returns, "returns", "returns"),
            (tol, "tol", "tol")
        ]
    ),
    (
        Floquet,
        "floquet",
        [
            (x_guess, "x-guess", "x_guess"),
            (t_guess, "t-guess", "t_guess"),
            (tol, "tol", "tol")
        ]
    ),
    (
        HillChart,
        "hill-chart",
        [
            (period, "period", "T"),
            (omega_lo, "omega-lo", "omega_lo"),
            (omega_hi, "omega-hi", "omega_hi"),
            (samples, "samples", "samples")
        ]
    ),
    (
        Manifold,
        "manifold",
        [
            (eq, "eq", "eq"),
            (which, "which", "which"),
            (order, "order", "order"),
            (extended, "extended", "extended"),
            (param_name, "param-name", "param_name")
        ]
    ),
    (
        Normalform,
        "normalform",
        [
            (eigs_re, "eigs", "eigs_re"),
            (eigs_im, "eigs-im", "eigs_im"),
            (k_max, "k-max", "k_max"),
            (omega, "omega", "omega")
        ]
    ),
    (
        Dimension,
        "dimension",
        [
            (input, "input", "input"),
            (demo, "demo", "demo"),
            (depth, "depth", "depth"),
            (eps, "eps", "eps")
        ]
    ),
    (
        Symbolic,
        "symbolic",
        [
            (op, "op", "op"),
            (x, "x", "x"),
            (n, "n", "n"),
            (word, "word", "word"),
            (periodic, "periodic", "periodic"),
            (p, "p", "p"),
            (lambda, "lambda", "lambda"),
            (mu, "mu", "mu")
        ]
    ),
    (
        Attractor,
        "attractor",
        [
            (time, "time", "time"),
            (iters, "iters", "iters"),
            (transient, "transient", "transient"),
            (sample_every, "sample-every", "sample_every"),
            (tol, "tol", "tol")
        ]
    ),
);

/// Typed coercion of flag strings into option JSON values (numbers stay
/// numbers so the config round-trips).
fn coerce(key: &str, raw: &str) -> serde_json::Value {
    const STRINGY: &[&str] = &[
        "method",
        "range",
        "param_name",
        "seeds",
        "which",
        "op",
        "x",
        "word",
        "lambda",
        "mu",
        "input",
        "demo",
        "x0",
        "anchor",
        "normal",
        "eq",
        "x_guess",
        "eigs_re",
        "eigs_im",
        "eps",
    ];
    if STRINGY.contains(&key) {
        return serde_json::Value::String(raw.to_string());
    }
    if key == "extended" || key == "periodic" {
        if let Ok(b) = raw.parse::<bool>() {
            return serde_json::Value::Bool(b);
        }
    }
    if let Ok(i) = raw.parse::<u64>() {
        return serde_json::json!(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return serde_json::json!(f);
    }
    serde_json::Value::String(raw.to_string())
}

fn assemble_config(name: String, common: Common, kv: Vec<(String, String)>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let loaded = validate_config(&text)?;
            if loaded.command != name {
                return Err(DynError::Usage(format!(
                    "config command `{}` does not match subcommand `{name}`",
                    loaded.command
                )));
            }
            loaded
        }
        None => RunConfig {
            command: name,
            ..Default::default()
        },
    };
    if let Some(s) = common.system {
        cfg.system.name = s;
        cfg.system.params.clear();
    }
    for p in &common.params {
        let (k, v) = p
            .split_once('=')
            .ok_or_else(|| DynError::Usage(format!("--param expects NAME=VALUE, got {p:?}")))?;
        let val: f64 = v
            .parse()
            .map_err(|e| DynError::Usage(format!("bad value in --param {p:?}: {e}")))?;
        cfg.system.params.insert(k.to_string(), val);
    }
    for (k, v) in kv {
        cfg.options.insert(k.clone(), coerce(&k, &v));
    }
    for o in &common.opts {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| DynError::Usage(format!("--opt expects KEY=VALUE, got {o:?}")))?;
        cfg.options.insert(k.to_string(), coerce(k, v));
    }
    if let Some(out) = common.out {
        cfg.output.path = Some(out);
    }
    if let Some(f) = common.format {
        cfg.output.format = f;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    // re-validate the merged configuration through the schema checker
    let text = serde_json::to_string(&cfg)?;
    validate_config(&text)
}

/// Entry point for the `dynkit` binary; returns the process exit code.
pub fn cli_main() -> i32 {
    if let Ok(threads) = std::env::var("DYNKIT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    let (name, common, kv) = cli.command.into_parts();
    let cfg = match assemble_config(name, common, kv) {
        Ok(c) => c,
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": "usage", "message": e.to_string()})
            );
            return 2;
        }
    };
    match run(&cfg) {
        Ok(_) => 0,
        Err(e @ (DynError::Usage(_) | DynError::SchemaViolation { .. })) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": "usage", "message": e.to_string()})
            );
            2
        }
        Err(e) => {
            eprintln!(
                "{}",
                serde_json::json!({"error": "numeric", "message": e.to_string()})
            );
            3
        }
    }
}
